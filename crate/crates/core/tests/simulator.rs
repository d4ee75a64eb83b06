mod common;

use common::SOC;
use wage_impute::model::{ModelSpec, PipelineConfig};
use wage_impute::rng::stream;
use wage_impute::simulator::{builtin_scenarios, impose_missingness, run_replications, SimulationConfig, TreeMode};
use wage_impute::synthgen::{generate_population, PopulationConfig};

#[test]
fn calibrated_rates_land_near_target() {
    let pop = generate_population(&PopulationConfig { n_establishments: 2000, ..Default::default() }, 41).unwrap();
    let n = pop.dataset.panels_for(SOC).count() as f64;
    for (name, scenario) in builtin_scenarios() {
        for seed in [1u64, 2, 3] {
            let mut rng = stream(seed, &[b"rate"]);
            let (missing, alpha0) =
                impose_missingness(&pop.dataset, SOC, &scenario.with_target(0.2), 1.25, &mut rng).unwrap();
            let rate = missing.iter().filter(|&&m| m).count() as f64 / n;
            assert!((rate - 0.2).abs() <= 0.02, "{name} seed {seed}: {rate}");
            assert!(alpha0.is_finite());
        }
    }
}

#[test]
fn zero_target_means_nobody_is_missing() {
    let pop = generate_population(&PopulationConfig { n_establishments: 200, ..Default::default() }, 42).unwrap();
    let scenario = builtin_scenarios()["NINR"].with_target(0.0);
    let (missing, _) = impose_missingness(&pop.dataset, SOC, &scenario, 1.25, &mut stream(1, &[])).unwrap();
    assert!(missing.iter().all(|m| !m));
}

#[test]
fn target_of_one_is_rejected() {
    let pop = generate_population(&PopulationConfig { n_establishments: 200, ..Default::default() }, 42).unwrap();
    let scenario = builtin_scenarios()["MAR1"].with_target(1.0);
    assert!(impose_missingness(&pop.dataset, SOC, &scenario, 1.25, &mut stream(1, &[])).is_err());
}

#[test]
fn replications_are_reproducible_and_tree_modes_both_run() {
    let pop = generate_population(&PopulationConfig { n_establishments: 500, ..Default::default() }, 43).unwrap();
    let mut cfg = SimulationConfig {
        scenario_name: "MAR2".into(),
        scenario: builtin_scenarios()["MAR2"].with_target(0.2),
        spec: ModelSpec::Full,
        replications: 4,
        master_seed: 8,
        pipeline: PipelineConfig { min_leaf: 40, bmsa_threshold: 20, robust_variance: false, ..Default::default() },
        tree_mode: TreeMode::RefitPerReplicate,
    };
    let a = run_replications(&pop.dataset, SOC, &cfg).unwrap();
    assert_eq!(a, run_replications(&pop.dataset, SOC, &cfg).unwrap());
    assert!(a.iter().all(|r| r.ok() && r.n_missing > 0));
    assert_eq!(a.iter().map(|r| r.replicate).collect::<Vec<_>>(), vec![0, 1, 2, 3]);

    cfg.tree_mode = TreeMode::FixedFromPopulation;
    let b = run_replications(&pop.dataset, SOC, &cfg).unwrap();
    assert!(b.iter().all(|r| r.ok()));
    // same missingness draws regardless of tree handling
    assert_eq!(a.iter().map(|r| r.n_missing).collect::<Vec<_>>(), b.iter().map(|r| r.n_missing).collect::<Vec<_>>());
}
