#![allow(dead_code)]

use wage_impute::domain::{Counts, Dataset, EstablishmentRecord, OccupationPanel, WageGrid};

pub const SOC: &str = "11-3021";

pub fn estab(id: &str, naics: u32, msa: &str, avewage: f64, empl: f64) -> EstablishmentRecord {
    EstablishmentRecord {
        estab_id: id.into(),
        empl,
        wage: avewage * empl,
        naics,
        msa: msa.into(),
        msacatt6: false,
        multi: false,
        weight: 1.0,
        responded: true,
    }
}

/// Dataset with one observed panel per establishment.
pub fn dataset(rows: Vec<(EstablishmentRecord, Counts)>) -> Dataset {
    let panels = rows.iter().map(|(e, c)| OccupationPanel::observed(e.estab_id.clone(), SOC, *c)).collect();
    Dataset {
        grid: WageGrid::default(),
        establishments: rows.into_iter().map(|r| r.0).collect(),
        panels,
    }
}

/// Marks establishment `i` as a nonrespondent with an absent panel.
pub fn drop_response(ds: &mut Dataset, i: usize) {
    ds.establishments[i].responded = false;
    let id = ds.establishments[i].estab_id.clone();
    for p in ds.panels.iter_mut().filter(|p| p.estab_id == id) {
        *p = OccupationPanel::absent(id.clone(), p.soc.clone(), p.total);
    }
}
