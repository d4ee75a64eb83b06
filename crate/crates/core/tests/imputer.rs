mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dataset, drop_response, estab, SOC};
use wage_impute::domain::{Provenance, N_INTERVALS};
use wage_impute::imputer::{impute_dataset, largest_remainder, multinomial_draw, neighbor_impute_dataset};
use wage_impute::model::{fit_occupation, ModelSpec, OccupationModel, PipelineConfig};
use wage_impute::synthgen::{generate_population, PopulationConfig};

fn fitted(seed: u64, n: usize) -> (wage_impute::domain::Dataset, OccupationModel) {
    let pop = generate_population(&PopulationConfig { n_establishments: n, ..Default::default() }, seed).unwrap();
    let mut ds = pop.dataset;
    for i in (0..ds.establishments.len()).step_by(5) {
        drop_response(&mut ds, i);
    }
    let cfg = PipelineConfig { min_leaf: 40, bmsa_threshold: 20, robust_variance: false, ..Default::default() };
    let m = fit_occupation(&ds, SOC, ModelSpec::Full, &cfg, None).unwrap();
    (ds, m)
}

proptest! {
    #[test]
    fn draws_are_integer_counts_summing_to_total(
        raw in prop::array::uniform12(0.0f64..1.0),
        n in 0u32..500,
        seed in any::<u64>(),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 0.0);
        let probs = raw.map(|p| p / total);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(multinomial_draw(&probs, n, &mut rng).iter().sum::<u32>(), n);
        prop_assert_eq!(largest_remainder(&raw, n).iter().sum::<u32>(), n);
    }
}

#[test]
fn draws_average_to_model_probabilities() {
    let (ds, m) = fitted(21, 600);
    let idx = ds.establishments.iter().position(|e| !e.responded).unwrap();
    let e = &ds.establishments[idx];
    let p = ds.panels.iter().find(|p| p.estab_id == e.estab_id).unwrap();
    let probs = m.predict(e, p).unwrap();
    let mut avg = [0.0; N_INTERVALS];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 20;
    for _ in 0..1000 {
        let c = multinomial_draw(&probs, n, &mut rng);
        for l in 0..N_INTERVALS {
            avg[l] += f64::from(c[l]) / f64::from(n) / 1000.0;
        }
    }
    for l in 0..N_INTERVALS {
        assert!((avg[l] - probs[l]).abs() < 0.02, "cell {l}: {} vs {}", avg[l], probs[l]);
    }
}

#[test]
fn completed_datasets_keep_totals_and_mark_provenance() {
    let (ds, m) = fitted(22, 500);
    let models = BTreeMap::from([(SOC.to_string(), m)]);
    let a = impute_dataset(&ds, &models, 5).unwrap();
    let b = neighbor_impute_dataset(&ds, |_, naics| naics / 1000).unwrap();
    for (done, kind) in [(&a, Provenance::ModelImputed), (&b, Provenance::NeighborImputed)] {
        assert!(wage_impute::domain::validate_dataset(done).is_empty());
        for (orig, new) in ds.panels.iter().zip(&done.panels) {
            let counts = new.counts.unwrap();
            assert_eq!(counts.iter().sum::<u32>(), orig.total);
            if orig.is_absent() {
                assert_eq!(new.provenance, kind);
            } else {
                assert_eq!(new, orig);
            }
        }
    }
}

#[test]
fn adding_an_establishment_leaves_other_draws_alone() {
    let (ds, m) = fitted(23, 400);
    let models = BTreeMap::from([(SOC.to_string(), m)]);
    let before = impute_dataset(&ds, &models, 9).unwrap();
    let mut bigger = ds.clone();
    let mut extra = bigger.establishments[0].clone();
    extra.estab_id = "EXTRA".into();
    extra.responded = false;
    bigger.establishments.insert(0, extra);
    bigger.panels.insert(0, wage_impute::domain::OccupationPanel::absent("EXTRA", SOC, 4));
    let after = impute_dataset(&bigger, &models, 9).unwrap();
    assert_eq!(&after.panels[1..], &before.panels[..]);
}

#[test]
fn missing_model_is_reported() {
    let (ds, _) = fitted(24, 400);
    let err = impute_dataset(&ds, &BTreeMap::new(), 1).unwrap_err();
    assert!(matches!(err, wage_impute::Error::ModelUnavailable(_)));
}

#[test]
fn neighbor_average_cannot_reach_the_top_intervals() {
    // five-establishment example: the high-wage units 2 and 4 do not respond
    let rows = vec![
        (estab("1", 541_110, "M1", 15_981.0, 20.0), [0, 0, 0, 0, 0, 1, 3, 1, 2, 1, 0, 0]),
        (estab("2", 541_110, "M1", 23_364.0, 20.0), [0, 0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 4]),
        (estab("3", 541_110, "M1", 8_420.0, 20.0), [0, 0, 0, 0, 1, 2, 0, 0, 0, 1, 0, 0]),
        (estab("4", 541_110, "M1", 27_343.0, 20.0), [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 3, 2]),
        (estab("5", 541_110, "M1", 15_058.0, 20.0), [0, 0, 0, 0, 0, 0, 2, 0, 4, 2, 0, 0]),
    ];
    let mut ds = dataset(rows);
    drop_response(&mut ds, 1);
    drop_response(&mut ds, 3);
    let done = neighbor_impute_dataset(&ds, |_, naics| naics / 1000).unwrap();
    for i in [1, 3] {
        let c = done.panels[i].counts.unwrap();
        assert_eq!(c[10] + c[11], 0);
        assert_eq!(c.iter().sum::<u32>(), ds.panels[i].total);
    }
}
