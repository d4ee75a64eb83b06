//! Filling in absent occupation panels.
//!
//! [`impute_dataset`] draws each absent panel from the fitted hazard model;
//! [`neighbor_average_impute`] is the donor-averaging baseline it replaces.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::domain::{Counts, Dataset, Provenance, N_INTERVALS};
use crate::error::{Error, Result};
use crate::model::OccupationModel;
use crate::rng::panel_stream;

/// One multinomial draw of `n` employees over interval probabilities `probs`.
pub fn multinomial_draw<R: Rng + ?Sized>(probs: &[f64; N_INTERVALS], n: u32, rng: &mut R) -> Counts {
    let mut cdf = [0.0; N_INTERVALS];
    let mut acc = 0.0;
    for (c, p) in cdf.iter_mut().zip(probs) {
        acc += p;
        *c = acc;
    }
    let mut counts = [0; N_INTERVALS];
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        // first interval whose cumulative mass exceeds u, skipping empty cells
        let l = cdf.partition_point(|&c| c <= u).min(N_INTERVALS - 1);
        counts[l] += 1;
    }
    counts
}

/// Model-based draw for one panel.
pub fn impute_panel<R: Rng + ?Sized>(
    model: &crate::hazard::FittedHazardModel,
    design: &[f64],
    stratum: u32,
    n_employees: u32,
    rng: &mut R,
) -> Counts {
    multinomial_draw(&model.predict_interval_probs(design, stratum), n_employees, rng)
}

/// Replace every absent panel by a draw from its occupation's model. Each
/// panel uses its own stream keyed by `(master_seed, estab_id, soc)`.
pub fn impute_dataset(
    ds: &Dataset,
    models: &BTreeMap<String, OccupationModel>,
    master_seed: u64,
) -> Result<Dataset> {
    let index = ds.estab_index();
    let imputed: Vec<Option<Counts>> = ds
        .panels
        .par_iter()
        .map(|p| {
            if !p.is_absent() {
                return Ok(None);
            }
            let model = models.get(&p.soc).ok_or_else(|| Error::ModelUnavailable(p.soc.clone()))?;
            let e = index
                .get(p.estab_id.as_str())
                .map(|&i| &ds.establishments[i])
                .ok_or_else(|| Error::InvalidData(format!("panel references unknown estab {}", p.estab_id)))?;
            if p.total == 0 {
                return Ok(Some([0; N_INTERVALS]));
            }
            let probs = model.predict(e, p)?;
            let mut rng = panel_stream(master_seed, &p.estab_id, &p.soc);
            Ok(Some(multinomial_draw(&probs, p.total, &mut rng)))
        })
        .collect::<Result<_>>()?;

    let mut out = ds.clone();
    for (p, c) in out.panels.iter_mut().zip(imputed) {
        if let Some(c) = c {
            p.counts = Some(c);
            p.provenance = Provenance::ModelImputed;
        }
    }
    Ok(out)
}

/// Integer allocation of `n` proportional to `weights`, preserving the total.
/// Remainders are handed out largest first; ties go to the lower interval.
pub fn largest_remainder(weights: &[f64; N_INTERVALS], n: u32) -> Counts {
    let total: f64 = weights.iter().sum();
    let mut counts = [0u32; N_INTERVALS];
    if n == 0 || !(total > 0.0) {
        return counts;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * f64::from(n)).collect();
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as u32;
    }
    let assigned: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..N_INTERVALS).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &l in order.iter().cycle().take(n.saturating_sub(assigned) as usize) {
        counts[l] += 1;
    }
    counts
}

/// Donor-averaging imputation for one absent panel.
///
/// Donors are responding panels of the same occupation in the same industry
/// class and MSA; if there are none the neighborhood widens to the same class
/// anywhere, then to the occupation anywhere. Pooled donor proportions are
/// scaled to the panel total with largest-remainder rounding.
pub fn neighbor_average_impute(
    ds: &Dataset,
    estab_id: &str,
    soc: &str,
    classify: impl Fn(u32) -> u32,
) -> Result<Counts> {
    let index = ds.estab_index();
    let target = index
        .get(estab_id)
        .map(|&i| &ds.establishments[i])
        .ok_or_else(|| Error::InvalidData(format!("unknown establishment {estab_id}")))?;
    let panel = ds
        .panels
        .iter()
        .find(|p| p.estab_id == estab_id && p.soc == soc)
        .ok_or_else(|| Error::InvalidData(format!("no panel {estab_id}/{soc}")))?;
    let class = classify(target.naics);

    let donors: Vec<(u32, &str, &Counts)> = ds
        .panels_for(soc)
        .filter(|(e, p)| e.responded && p.provenance == Provenance::Observed && e.estab_id != estab_id)
        .filter_map(|(e, p)| p.counts.as_ref().map(|c| (classify(e.naics), e.msa.as_str(), c)))
        .collect();

    type Donor<'a> = (u32, &'a str, &'a Counts);
    let levels: [&dyn Fn(&Donor) -> bool; 3] = [
        &|d| d.0 == class && d.1 == target.msa,
        &|d| d.0 == class,
        &|_| true,
    ];
    for keep in levels {
        let mut pooled = [0.0; N_INTERVALS];
        for d in donors.iter().filter(|d| keep(d)) {
            for (acc, &c) in pooled.iter_mut().zip(d.2.iter()) {
                *acc += f64::from(c);
            }
        }
        if pooled.iter().sum::<f64>() > 0.0 {
            return Ok(largest_remainder(&pooled, panel.total));
        }
    }
    Err(Error::NoDonors(soc.to_string()))
}

/// Neighbor-average imputation of every absent panel. Donors are always the
/// originally observed panels.
pub fn neighbor_impute_dataset(ds: &Dataset, classify: impl Fn(&str, u32) -> u32 + Sync) -> Result<Dataset> {
    let imputed: Vec<Option<Counts>> = ds
        .panels
        .par_iter()
        .map(|p| {
            if !p.is_absent() {
                return Ok(None);
            }
            neighbor_average_impute(ds, &p.estab_id, &p.soc, |naics| classify(&p.soc, naics)).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut out = ds.clone();
    for (p, c) in out.panels.iter_mut().zip(imputed) {
        if let Some(c) = c {
            p.counts = Some(c);
            p.provenance = Provenance::NeighborImputed;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_employees_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(multinomial_draw(&[1.0 / 12.0; 12], 0, &mut rng), [0; 12]);
    }

    #[test]
    fn degenerate_probabilities() {
        let mut p = [0.0; 12];
        p[6] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut want = [0; 12];
        want[6] = 8;
        assert_eq!(multinomial_draw(&p, 8, &mut rng), want);
    }

    #[test]
    fn same_seed_same_draw() {
        let p = [1.0 / 12.0; 12];
        let a = multinomial_draw(&p, 50, &mut ChaCha8Rng::seed_from_u64(9));
        let b = multinomial_draw(&p, 50, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u32>(), 50);
    }

    #[test]
    fn largest_remainder_preserves_total() {
        let mut w = [0.0; 12];
        w[4] = 1.0;
        w[5] = 3.0;
        w[6] = 5.0;
        w[7] = 1.0;
        w[8] = 6.0;
        w[9] = 4.0;
        let c = largest_remainder(&w, 10);
        assert_eq!(c, [0, 0, 0, 0, 1, 2, 2, 0, 3, 2, 0, 0]);
    }
}
