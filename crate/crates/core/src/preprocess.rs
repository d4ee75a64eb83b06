//! Covariate construction for the hazard model.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, EstablishmentRecord, OccupationPanel};
use crate::error::{Error, Result};

pub const DEFAULT_WINSOR_PCTS: (f64, f64) = (0.01, 0.99);
pub const DEFAULT_BMSA_THRESHOLD: usize = 250;

/// Linear-interpolation quantile of sorted data with plotting position
/// `(k - 1) / (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cut values used to winsorize AVEWAGE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinsorCuts {
    pub lower_pct: f64,
    pub upper_pct: f64,
    pub lower: f64,
    pub upper: f64,
}

impl WinsorCuts {
    pub fn from_sample(values: &[f64], lower_pct: f64, upper_pct: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(0.0..=1.0).contains(&lower_pct)
            || !(0.0..=1.0).contains(&upper_pct)
            || lower_pct > upper_pct
        {
            return Err(Error::Config(format!(
                "winsorization percentiles ({lower_pct}, {upper_pct}) must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(WinsorCuts {
            lower_pct,
            upper_pct,
            lower: quantile_sorted(&sorted, lower_pct),
            upper: quantile_sorted(&sorted, upper_pct),
        })
    }

    pub fn apply(&self, value: f64) -> f64 {
        value.clamp(self.lower, self.upper)
    }
}

/// Replace values outside the `[lower_pct, upper_pct]` quantile range of
/// `values` by the nearest cut. Order and length are preserved.
pub fn winsorize_avewage(values: &[f64], lower_pct: f64, upper_pct: f64) -> Result<Vec<f64>> {
    let cuts = WinsorCuts::from_sample(values, lower_pct, upper_pct)?;
    Ok(values.iter().map(|&v| cuts.apply(v)).collect())
}

/// MSAs in which at least `threshold` distinct establishments have a panel
/// for `soc`.
pub fn identify_bmsa(ds: &Dataset, soc: &str, threshold: usize) -> BTreeSet<String> {
    let mut per_msa: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (e, _) in ds.panels_for(soc) {
        per_msa.entry(e.msa.as_str()).or_default().insert(e.estab_id.as_str());
    }
    per_msa
        .into_iter()
        .filter(|(_, ests)| ests.len() >= threshold)
        .map(|(msa, _)| msa.to_string())
        .collect()
}

/// Covariates in the fixed order
/// `(1, X1, X1², X2, X2², X3, X1·X3, X4, X5, X6)` with X1 = winsorized
/// AVEWAGE, X2 = log EMPL, X3 = SINGLE, X4 = MSACATT6, X5 = BMSA,
/// X6 = MULTI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateVector(pub [f64; 10]);

impl CovariateVector {
    pub const NAMES: [&'static str; 10] = [
        "const",
        "avewage",
        "avewage_sq",
        "log_empl",
        "log_empl_sq",
        "single",
        "avewage_x_single",
        "msacatt6",
        "bmsa",
        "multi",
    ];

    pub fn from_parts(
        avewage: f64,
        log_empl: f64,
        single: bool,
        msacatt6: bool,
        bmsa: bool,
        multi: bool,
    ) -> Self {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        let x3 = ind(single);
        CovariateVector([
            1.0,
            avewage,
            avewage * avewage,
            log_empl,
            log_empl * log_empl,
            x3,
            avewage * x3,
            ind(msacatt6),
            ind(bmsa),
            ind(multi),
        ])
    }

    /// Checks the structural relations between the derived elements.
    pub fn is_consistent(&self) -> bool {
        let x = &self.0;
        let binary = |v: f64| v == 0.0 || v == 1.0;
        x[0] == 1.0
            && x[2] == x[1] * x[1]
            && x[4] == x[3] * x[3]
            && x[6] == x[1] * x[5]
            && [x[5], x[7], x[8], x[9]].into_iter().all(binary)
    }
}

pub fn build_covariates(
    estab: &EstablishmentRecord,
    panel: &OccupationPanel,
    bmsa: &BTreeSet<String>,
    winsorized_avewage: f64,
) -> Result<CovariateVector> {
    if panel.total == 0 {
        return Err(Error::NoEmployees {
            estab_id: panel.estab_id.clone(),
            soc: panel.soc.clone(),
        });
    }
    Ok(CovariateVector::from_parts(
        winsorized_avewage,
        estab.empl.ln(),
        panel.total == 1,
        estab.msacatt6,
        bmsa.contains(&estab.msa),
        estab.multi,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{OccupationPanel, N_INTERVALS};

    fn estab(empl: f64) -> EstablishmentRecord {
        EstablishmentRecord {
            estab_id: "e".into(),
            empl,
            wage: 0.0,
            naics: 541110,
            msa: "m1".into(),
            msacatt6: false,
            multi: false,
            weight: 1.0,
            responded: true,
        }
    }

    #[test]
    fn constant_values_unchanged() {
        let v = vec![5.0; 17];
        assert_eq!(winsorize_avewage(&v, 0.01, 0.99).unwrap(), v);
    }

    #[test]
    fn one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = winsorize_avewage(&v, 0.01, 0.99).unwrap();
        // oracle: order statistics x_(1) + h*(x_(2) - x_(1)), h = 0.01 * 99
        assert!((w[0] - 1.99).abs() < 1e-12);
        assert!((w[99] - 99.01).abs() < 1e-12);
        assert_eq!(&w[1..99], &v[1..99]);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(winsorize_avewage(&[], 0.01, 0.99), Err(Error::EmptyInput)));
    }

    #[test]
    fn covariates_single_employee() {
        let mut c = [0; N_INTERVALS];
        c[0] = 1;
        let p = OccupationPanel::observed("e", "s", c);
        let x = build_covariates(&estab(std::f64::consts::E), &p, &BTreeSet::new(), 2.0).unwrap();
        let want = [1.0, 2.0, 4.0, 1.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0];
        for (a, b) in x.0.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(x.is_consistent());
    }

    #[test]
    fn covariates_multiple_employees() {
        let p = OccupationPanel::absent("e", "s", 5);
        let bmsa: BTreeSet<String> = ["m1".to_string()].into();
        let x = build_covariates(&estab(10.0), &p, &bmsa, 3.0).unwrap();
        assert_eq!(x.0[5], 0.0);
        assert_eq!(x.0[6], 0.0);
        assert_eq!(x.0[8], 1.0);
    }

    #[test]
    fn zero_total_is_error() {
        let p = OccupationPanel::absent("e", "s", 0);
        assert!(matches!(
            build_covariates(&estab(10.0), &p, &BTreeSet::new(), 3.0),
            Err(Error::NoEmployees { .. })
        ));
    }

    #[test]
    fn outlier_takes_upper_cut() {
        let mut v: Vec<f64> = (1..=200).map(|i| 1000.0 + f64::from(i)).collect();
        v.push(1.0e7);
        let cuts = WinsorCuts::from_sample(&v, 0.01, 0.99).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let h = 0.99 * 200.0;
        let q = sorted[198] + (h - 198.0) * (sorted[199] - sorted[198]);
        let p = OccupationPanel::absent("e", "s", 3);
        let x = build_covariates(&estab(4.0), &p, &BTreeSet::new(), cuts.apply(1.0e7)).unwrap();
        assert!((x.0[1] - q).abs() < 1e-9);
    }
}
