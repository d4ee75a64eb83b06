mod common;

use common::SOC;
use wage_impute::estimators::ecdf_by_avewage_tertile;
use wage_impute::model::{fit_occupation, ModelSpec, PipelineConfig};
use wage_impute::synthgen::{generate_population, PopulationConfig};

#[test]
fn higher_avewage_tertiles_have_dominated_ecdfs() {
    let pop = generate_population(&PopulationConfig { n_establishments: 1500, ..Default::default() }, 31).unwrap();
    let [low, mid, high] = ecdf_by_avewage_tertile(&pop.dataset, SOC).unwrap();
    for l in 0..11 {
        assert!(mid[l] <= low[l] + 1e-12, "interval {l}");
        assert!(high[l] <= mid[l] + 1e-12, "interval {l}");
    }
}

#[test]
fn no_avewage_effect_gives_an_insignificant_coefficient() {
    let mut cfg = PopulationConfig { n_establishments: 1500, gamma_avewage: 0.0, ..Default::default() };
    for b in &mut cfg.blocks {
        b.avewage_effect = 0.0;
    }
    let pop = generate_population(&cfg, 32).unwrap();
    let pipeline = PipelineConfig { min_leaf: 60, ..Default::default() };
    let m = fit_occupation(&pop.dataset, SOC, ModelSpec::Full, &pipeline, None).unwrap();
    let c = m.coefficients.iter().find(|c| c.name == "avewage").unwrap();
    let z = c.beta / c.robust_se.unwrap();
    assert!(z.abs() < 3.0, "z = {z}");
}

#[test]
fn params_are_emitted_with_the_data() {
    let cfg = PopulationConfig { n_establishments: 200, ..Default::default() };
    let pop = generate_population(&cfg, 33).unwrap();
    assert_eq!(pop.params.seed, 33);
    assert_eq!(pop.params.config, cfg);
    let json = serde_json::to_string(&pop.params).unwrap();
    assert!(json.contains("gamma_avewage"));
    assert_eq!(generate_population(&cfg, 33).unwrap().dataset, pop.dataset);
    assert_ne!(generate_population(&cfg, 34).unwrap().dataset, pop.dataset);
}
