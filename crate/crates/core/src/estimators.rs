//! Mean and percentile wage estimates from interval counts.
//!
//! Each interval is represented by a single hourly value: the midpoint for
//! closed intervals and `a_12 × top_rule` for the open top interval.
//! Percentiles assume wages are uniform within an interval.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{Counts, Dataset, Provenance, WageGrid, N_INTERVALS};
use crate::error::{Error, Result};
use crate::tree::IndustryTree;

pub const DEFAULT_TOP_RULE: f64 = 1.25;
pub const HOURS_PER_YEAR: f64 = 2080.0;
pub const REPORT_PERCENTILES: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

/// Counts of one panel scaled by a survey weight.
#[derive(Debug, Clone, Copy)]
pub struct WeightedCounts<'a> {
    pub weight: f64,
    pub counts: &'a Counts,
}

pub fn interval_values(grid: &WageGrid, top_rule: f64) -> [f64; N_INTERVALS] {
    std::array::from_fn(|l| match grid.upper_bound(l) {
        Some(b) => (grid.lower_bound(l) + b) / 2.0,
        None => grid.lower_bound(l) * top_rule,
    })
}

/// Count-weighted mean hourly wage of one establishment-occupation panel.
pub fn establishment_occ_mean(counts: &Counts, grid: &WageGrid, top_rule: f64) -> Result<f64> {
    occupation_mean(&[WeightedCounts { weight: 1.0, counts }], grid, top_rule)
}

fn weighted_mass(panels: &[WeightedCounts<'_>]) -> [f64; N_INTERVALS] {
    let mut mass = [0.0; N_INTERVALS];
    for p in panels {
        for (m, &c) in mass.iter_mut().zip(p.counts) {
            *m += p.weight * f64::from(c);
        }
    }
    mass
}

/// `Σ_i w_i Σ_l e_il v_l / Σ_i w_i Σ_l e_il`.
pub fn occupation_mean(panels: &[WeightedCounts<'_>], grid: &WageGrid, top_rule: f64) -> Result<f64> {
    let mass = weighted_mass(panels);
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroEmployees);
    }
    let values = interval_values(grid, top_rule);
    Ok(mass.iter().zip(values).map(|(m, v)| m * v).sum::<f64>() / total)
}

/// Weighted percentile by inversion of the interval CDF.
pub fn occupation_percentile(
    panels: &[WeightedCounts<'_>],
    grid: &WageGrid,
    p: f64,
    top_rule: f64,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidFraction(p));
    }
    let mass = weighted_mass(panels);
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroEmployees);
    }
    let target = p * total;
    let mut below = 0.0;
    for (l, &m) in mass.iter().enumerate() {
        if m > 0.0 && below + m >= target {
            return Ok(match grid.upper_bound(l) {
                Some(b) => {
                    let a = grid.lower_bound(l);
                    let f = ((target - below) / m).clamp(0.0, 1.0);
                    a + f * (b - a)
                }
                None => grid.lower_bound(l) * top_rule,
            });
        }
        below += m;
    }
    // rounding left the target just above the accumulated mass
    let last = (0..N_INTERVALS).rev().find(|&l| mass[l] > 0.0).unwrap_or(N_INTERVALS - 1);
    Ok(match grid.upper_bound(last) {
        Some(b) => b,
        None => grid.lower_bound(last) * top_rule,
    })
}

/// Mean over responders with weights inflated by `1 / propensity`.
pub fn ipw_estimate(
    responders: &[(&str, WeightedCounts<'_>)],
    propensity: impl Fn(&str) -> f64,
    grid: &WageGrid,
    top_rule: f64,
) -> Result<f64> {
    let adjusted = responders
        .iter()
        .map(|(id, wc)| {
            let p = propensity(id);
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidPropensity { estab_id: id.to_string(), propensity: p });
            }
            Ok(WeightedCounts { weight: wc.weight / p, counts: wc.counts })
        })
        .collect::<Result<Vec<_>>>()?;
    occupation_mean(&adjusted, grid, top_rule)
}

/// Industry part of a domain filter.
#[derive(Debug, Clone)]
pub enum IndustryFilter {
    Classes { tree: IndustryTree, classes: BTreeSet<u32> },
    NaicsPrefixes(Vec<String>),
}

impl IndustryFilter {
    fn matches(&self, naics: u32) -> bool {
        match self {
            IndustryFilter::Classes { tree, classes } => classes.contains(&tree.assign_class(naics)),
            IndustryFilter::NaicsPrefixes(prefixes) => {
                let code = naics.to_string();
                prefixes.iter().any(|p| code.starts_with(p.as_str()))
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DomainFilter {
    pub label: String,
    pub industry: Option<IndustryFilter>,
    pub msas: Option<BTreeSet<String>>,
}

impl DomainFilter {
    pub fn overall() -> Self {
        DomainFilter { label: "overall".into(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub soc: String,
    pub domain: String,
    /// Number of establishments (panels) in the domain.
    pub n: usize,
    pub prop_observed: f64,
    /// Weighted employment, `Σ_i w_i total_i`.
    pub employment: f64,
    pub mean: f64,
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

impl DomainReport {
    /// Scale wage figures from hourly to annual.
    pub fn annualized(mut self) -> Self {
        for v in [&mut self.mean, &mut self.p10, &mut self.p25, &mut self.p50, &mut self.p75, &mut self.p90] {
            *v *= HOURS_PER_YEAR;
        }
        self
    }
}

/// Estimates over the completed panels of `soc` that pass `filter`.
pub fn domain_estimates(ds: &Dataset, soc: &str, filter: &DomainFilter, top_rule: f64) -> Result<DomainReport> {
    let mut selected = Vec::new();
    let mut observed = 0;
    for (e, p) in ds.panels_for(soc) {
        if filter.industry.as_ref().is_some_and(|f| !f.matches(e.naics)) {
            continue;
        }
        if filter.msas.as_ref().is_some_and(|m| !m.contains(&e.msa)) {
            continue;
        }
        let Some(counts) = &p.counts else {
            return Err(Error::InvalidData(format!(
                "panel {}/{} has absent counts; impute before estimating",
                p.estab_id, p.soc
            )));
        };
        if e.responded && p.provenance == Provenance::Observed {
            observed += 1;
        }
        selected.push(WeightedCounts { weight: e.weight, counts });
    }
    if selected.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let pct = |q| occupation_percentile(&selected, &ds.grid, q, top_rule);
    Ok(DomainReport {
        soc: soc.to_string(),
        domain: filter.label.clone(),
        n: selected.len(),
        prop_observed: observed as f64 / selected.len() as f64,
        employment: weighted_mass(&selected).iter().sum(),
        mean: occupation_mean(&selected, &ds.grid, top_rule)?,
        p10: pct(0.10)?,
        p25: pct(0.25)?,
        p50: pct(0.50)?,
        p75: pct(0.75)?,
        p90: pct(0.90)?,
    })
}

/// One AVEWAGE bin of the occupational-mean-versus-AVEWAGE comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bin: usize,
    pub avewage_lo: f64,
    pub avewage_hi: f64,
    pub avewage_mean: f64,
    pub observed_mean: Option<f64>,
    pub model_imputed_mean: Option<f64>,
    pub neighbor_imputed_mean: Option<f64>,
}

/// Average establishment occupational mean wage within equal-count AVEWAGE
/// bins, separately for observed panels and for panels imputed by each
/// method. `model` and `neighbor` are completions of the same dataset.
pub fn avewage_curve(
    model: &Dataset,
    neighbor: &Dataset,
    soc: &str,
    n_bins: usize,
    top_rule: f64,
) -> Result<Vec<CurvePoint>> {
    let mut points: Vec<(f64, Provenance, Option<f64>, Option<f64>)> = Vec::new();
    let neighbor_means: std::collections::HashMap<&str, f64> = neighbor
        .panels_for(soc)
        .filter(|(_, p)| p.provenance == Provenance::NeighborImputed)
        .filter_map(|(e, p)| {
            let c = p.counts.as_ref()?;
            establishment_occ_mean(c, &neighbor.grid, top_rule).ok().map(|m| (e.estab_id.as_str(), m))
        })
        .collect();
    for (e, p) in model.panels_for(soc) {
        let Some(c) = &p.counts else { continue };
        let Ok(m) = establishment_occ_mean(c, &model.grid, top_rule) else { continue };
        points.push((e.avewage(), p.provenance, Some(m), neighbor_means.get(e.estab_id.as_str()).copied()));
    }
    if points.is_empty() || n_bins == 0 {
        return Err(Error::EmptyDomain);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = points.len();
    let bins = n_bins.min(n);
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok((0..bins)
        .map(|b| {
            let chunk = &points[b * n / bins..(b + 1) * n / bins];
            let pick = |prov: Provenance| -> Vec<f64> {
                chunk.iter().filter(|p| p.1 == prov).filter_map(|p| p.2).collect()
            };
            let nb: Vec<f64> = chunk.iter().filter_map(|p| p.3).collect();
            CurvePoint {
                bin: b,
                avewage_lo: chunk[0].0,
                avewage_hi: chunk[chunk.len() - 1].0,
                avewage_mean: chunk.iter().map(|p| p.0).sum::<f64>() / chunk.len() as f64,
                observed_mean: mean(&pick(Provenance::Observed)),
                model_imputed_mean: mean(&pick(Provenance::ModelImputed)),
                neighbor_imputed_mean: mean(&nb),
            }
        })
        .collect())
}

/// Interval ECDFs of employees grouped by AVEWAGE tertile of their
/// establishment (lowest tertile first), over observed panels of `soc`.
pub fn ecdf_by_avewage_tertile(ds: &Dataset, soc: &str) -> Result<[[f64; N_INTERVALS]; 3]> {
    let mut rows: Vec<(f64, &Counts)> = ds
        .panels_for(soc)
        .filter(|(_, p)| p.provenance == Provenance::Observed)
        .filter_map(|(e, p)| p.counts.as_ref().map(|c| (e.avewage(), c)))
        .collect();
    if rows.len() < 3 {
        return Err(Error::EmptyDomain);
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = rows.len();
    let mut out = [[0.0; N_INTERVALS]; 3];
    for (t, ecdf) in out.iter_mut().enumerate() {
        let mut mass = [0.0; N_INTERVALS];
        for (_, c) in &rows[t * n / 3..(t + 1) * n / 3] {
            for (m, &x) in mass.iter_mut().zip(c.iter()) {
                *m += f64::from(x);
            }
        }
        let total: f64 = mass.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroEmployees);
        }
        let mut acc = 0.0;
        for l in 0..N_INTERVALS {
            acc += mass[l];
            ecdf[l] = acc / total;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> WageGrid {
        WageGrid::new(std::array::from_fn(|l| (l + 1) as f64)).unwrap()
    }

    fn one_hot(l: usize, n: u32) -> Counts {
        let mut c = [0; N_INTERVALS];
        c[l] = n;
        c
    }

    #[test]
    fn single_interval_mean_is_midpoint() {
        let g = WageGrid::default();
        let m = establishment_occ_mean(&one_hot(4, 7), &g, DEFAULT_TOP_RULE).unwrap();
        assert_eq!(m, (g.lower[4] + g.lower[5]) / 2.0);
    }

    #[test]
    fn bottom_and_top_mean() {
        let mut c = [0; N_INTERVALS];
        c[0] = 1;
        c[11] = 1;
        let m = establishment_occ_mean(&c, &unit_grid(), 1.25).unwrap();
        assert!((m - 8.25).abs() < 1e-12);
    }

    #[test]
    fn zero_counts_error() {
        assert!(matches!(
            establishment_occ_mean(&[0; N_INTERVALS], &unit_grid(), 1.25),
            Err(Error::ZeroEmployees)
        ));
    }

    #[test]
    fn percentile_uniform_within_interval() {
        let g = WageGrid::default();
        let c = one_hot(4, 3);
        let p = occupation_percentile(&[WeightedCounts { weight: 1.0, counts: &c }], &g, 0.5, 1.25).unwrap();
        assert!((p - (g.lower[4] + 0.5 * (g.lower[5] - g.lower[4]))).abs() < 1e-12);
    }

    #[test]
    fn percentile_hand_inversion() {
        let mut c = [0; N_INTERVALS];
        c[0] = 2;
        c[1] = 2;
        let wc = [WeightedCounts { weight: 1.0, counts: &c }];
        let g = unit_grid();
        assert!((occupation_percentile(&wc, &g, 0.25, 1.25).unwrap() - 1.5).abs() < 1e-12);
        assert!((occupation_percentile(&wc, &g, 0.75, 1.25).unwrap() - 2.5).abs() < 1e-12);
        assert!(matches!(occupation_percentile(&wc, &g, 1.2, 1.25), Err(Error::InvalidFraction(_))));
    }

    #[test]
    fn open_top_percentile() {
        let c = one_hot(11, 5);
        let wc = [WeightedCounts { weight: 1.0, counts: &c }];
        assert_eq!(occupation_percentile(&wc, &unit_grid(), 0.9, 1.25).unwrap(), 15.0);
    }

    #[test]
    fn weights_scale_out() {
        let a = one_hot(2, 3);
        let b = one_hot(8, 1);
        let g = WageGrid::default();
        let m1 = occupation_mean(
            &[WeightedCounts { weight: 1.0, counts: &a }, WeightedCounts { weight: 3.0, counts: &b }],
            &g,
            1.25,
        )
        .unwrap();
        let m2 = occupation_mean(
            &[WeightedCounts { weight: 2.0, counts: &a }, WeightedCounts { weight: 6.0, counts: &b }],
            &g,
            1.25,
        )
        .unwrap();
        assert!((m1 - m2).abs() < 1e-12);
        // expansion: 3 employees at v_3 with weight 1, 1 at v_9 with weight 3
        let v = interval_values(&g, 1.25);
        assert!((m1 - (3.0 * v[2] + 3.0 * v[8]) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ipw_invariances() {
        let a = one_hot(2, 3);
        let b = one_hot(8, 1);
        let g = WageGrid::default();
        let resp = [
            ("x", WeightedCounts { weight: 1.0, counts: &a }),
            ("y", WeightedCounts { weight: 2.0, counts: &b }),
        ];
        let plain = occupation_mean(&[resp[0].1, resp[1].1], &g, 1.25).unwrap();
        assert!((ipw_estimate(&resp, |_| 1.0, &g, 1.25).unwrap() - plain).abs() < 1e-12);
        assert!((ipw_estimate(&resp, |_| 0.5, &g, 1.25).unwrap() - plain).abs() < 1e-12);
        assert!(matches!(
            ipw_estimate(&resp, |_| 0.0, &g, 1.25),
            Err(Error::InvalidPropensity { .. })
        ));
    }
}
