mod common;

use proptest::prelude::*;

use common::{dataset, estab, SOC};
use wage_impute::domain::{validate_dataset, Dataset, OccupationPanel, Provenance, Rule, Subject};
use wage_impute::synthgen::{generate_population, PopulationConfig};

fn clean(n: usize) -> Dataset {
    dataset(
        (0..n)
            .map(|i| {
                let mut c = [0; 12];
                c[i % 12] = 1 + i as u32 % 3;
                (estab(&format!("E{i}"), 541_110, "M001", 9000.0, 10.0), c)
            })
            .collect(),
    )
}

#[derive(Debug, Clone)]
enum Corruption {
    ZeroEmpl(usize),
    NegativeWage(usize),
    BadWeight(usize),
    UnknownPanel,
    DuplicatePanel(usize),
    WrongTotal(usize),
    RespondentAbsent(usize),
    ImputedWithoutCounts(usize),
    GridOrder,
}

fn corruption(n: usize) -> impl Strategy<Value = Corruption> {
    prop_oneof![
        (0..n).prop_map(Corruption::ZeroEmpl),
        (0..n).prop_map(Corruption::NegativeWage),
        (0..n).prop_map(Corruption::BadWeight),
        Just(Corruption::UnknownPanel),
        (0..n).prop_map(Corruption::DuplicatePanel),
        (0..n).prop_map(Corruption::WrongTotal),
        (0..n).prop_map(Corruption::RespondentAbsent),
        (0..n).prop_map(Corruption::ImputedWithoutCounts),
        Just(Corruption::GridOrder),
    ]
}

fn apply(ds: &mut Dataset, c: &Corruption) -> Rule {
    match *c {
        Corruption::ZeroEmpl(i) => {
            ds.establishments[i].empl = 0.0;
            Rule::EmploymentNotPositive
        }
        Corruption::NegativeWage(i) => {
            ds.establishments[i].wage = -1.0;
            Rule::WageNegative
        }
        Corruption::BadWeight(i) => {
            ds.establishments[i].weight = f64::NAN;
            Rule::WeightNotPositive
        }
        Corruption::UnknownPanel => {
            ds.panels.push(OccupationPanel::observed("nope", SOC, [1; 12]));
            Rule::UnknownEstablishment
        }
        Corruption::DuplicatePanel(i) => {
            ds.panels.push(ds.panels[i].clone());
            Rule::DuplicatePanel
        }
        Corruption::WrongTotal(i) => {
            ds.panels[i].total += 1;
            Rule::CountsDoNotSumToTotal
        }
        Corruption::RespondentAbsent(i) => {
            ds.panels[i].counts = None;
            Rule::RespondentPanelAbsent
        }
        Corruption::ImputedWithoutCounts(i) => {
            ds.establishments[i].responded = false;
            ds.panels[i].counts = None;
            ds.panels[i].provenance = Provenance::ModelImputed;
            Rule::ImputedProvenanceWithoutCounts
        }
        Corruption::GridOrder => {
            let mut lower = ds.grid.lower;
            lower.swap(3, 4);
            ds.grid.lower = lower;
            Rule::GridNotIncreasing
        }
    }
}

proptest! {
    #[test]
    fn every_corruption_is_detected(c in corruption(8)) {
        let mut ds = clean(8);
        prop_assert!(validate_dataset(&ds).is_empty());
        let rule = apply(&mut ds, &c);
        let v = validate_dataset(&ds);
        prop_assert!(v.iter().any(|v| v.rule == rule), "{:?} gave {:?}", c, v);
        prop_assert_eq!(v, validate_dataset(&ds));
    }

    #[test]
    fn synthetic_populations_validate(seed in 0u64..500, n in 20usize..120) {
        let cfg = PopulationConfig { n_establishments: n, ..Default::default() };
        let pop = generate_population(&cfg, seed).unwrap();
        prop_assert!(validate_dataset(&pop.dataset).is_empty());
    }
}

#[test]
fn violation_names_its_record() {
    let mut ds = clean(3);
    ds.establishments[1].empl = 0.0;
    let v = validate_dataset(&ds);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].subject, Subject::Establishment("E1".into()));
    assert_eq!(v[0].to_string(), "establishment E1: empl must be positive and finite");
}
