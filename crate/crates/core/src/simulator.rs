//! Missingness simulation: impose logistic nonresponse on a complete
//! population, impute with a chosen model specification, and compare the
//! imputed mean and 75th percentile with the truth on the nonresponding units.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Counts, Dataset, OccupationPanel};
use crate::error::{Error, Result};
use crate::estimators::{establishment_occ_mean, occupation_mean, occupation_percentile, WeightedCounts};
use crate::imputer::impute_dataset;
use crate::model::{fit_occupation, ModelSpec, PipelineConfig};
use crate::preprocess::quantile_sorted;
use crate::rng::replicate_stream;
use crate::tree::{fit_industry_tree, IndustryTree};

/// `logit P(missing) = α0 + α1·log(EMPL) + α2·MSACATT6 + α3·AVEWAGE + α4·OCCWAGE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingnessScenario {
    pub alpha: [f64; 5],
    /// When set, α0 is recalibrated so the expected nonresponse rate hits it.
    #[serde(default)]
    pub target_rate: Option<f64>,
}

impl MissingnessScenario {
    pub fn new(alpha: [f64; 5]) -> Self {
        MissingnessScenario { alpha, target_rate: None }
    }

    pub fn with_target(mut self, rate: f64) -> Self {
        self.target_rate = Some(rate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("missingness coefficients must be finite".into()));
        }
        if let Some(t) = self.target_rate {
            if !(t < 1.0) {
                return Err(Error::Config(format!("target_rate {t} must be below 1")));
            }
        }
        Ok(())
    }
}

pub fn builtin_scenarios() -> BTreeMap<&'static str, MissingnessScenario> {
    BTreeMap::from([
        ("MAR1", MissingnessScenario::new([-2.89, 0.105, 2.42, 0.0, 0.0])),
        ("MAR2", MissingnessScenario::new([-3.39, 0.105, 2.42, 0.0000262, 0.0])),
        ("NINR", MissingnessScenario::new([-2.39, 0.0, 0.0, 0.0, 0.02])),
    ])
}

pub fn inverse_logit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Predictor terms other than the intercept, one per establishment that
/// employs `soc`, in `panels_for` order.
fn slopes(ds: &Dataset, soc: &str, sc: &MissingnessScenario, top_rule: f64) -> Result<Vec<(usize, f64)>> {
    let index = ds.estab_index();
    let [_, a1, a2, a3, a4] = sc.alpha;
    ds.panels_for(soc)
        .map(|(e, p)| {
            let counts = p
                .counts
                .as_ref()
                .ok_or_else(|| Error::InvalidData(format!("population panel {}/{soc} has no counts", e.estab_id)))?;
            let occwage = if a4 != 0.0 { establishment_occ_mean(counts, &ds.grid, top_rule)? } else { 0.0 };
            let s = a1 * e.empl.ln() + a2 * f64::from(u8::from(e.msacatt6)) + a3 * e.avewage() + a4 * occwage;
            Ok((index[e.estab_id.as_str()], s))
        })
        .collect()
}

/// Intercept giving mean inverse-logit equal to `target` within 1e-4.
pub fn calibrate_intercept(slopes: &[f64], target: f64) -> f64 {
    let rate = |a0: f64| slopes.iter().map(|s| inverse_logit(a0 + s)).sum::<f64>() / slopes.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if (r - target).abs() <= 1e-6 {
            return mid;
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Nonresponse flags (true = missing) aligned with `ds.establishments`.
/// Establishments without a panel for `soc` are never missing. Returns the
/// flags and the intercept actually used.
pub fn impose_missingness<R: Rng + ?Sized>(
    ds: &Dataset,
    soc: &str,
    scenario: &MissingnessScenario,
    top_rule: f64,
    rng: &mut R,
) -> Result<(Vec<bool>, f64)> {
    scenario.validate()?;
    let terms = slopes(ds, soc, scenario, top_rule)?;
    let mut missing = vec![false; ds.establishments.len()];
    let alpha0 = match scenario.target_rate {
        Some(t) if t <= 0.0 => return Ok((missing, f64::NEG_INFINITY)),
        Some(t) if !terms.is_empty() => {
            let s: Vec<f64> = terms.iter().map(|t| t.1).collect();
            calibrate_intercept(&s, t)
        }
        _ => scenario.alpha[0],
    };
    for (i, s) in terms {
        missing[i] = rng.random::<f64>() < inverse_logit(alpha0 + s);
    }
    Ok((missing, alpha0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeMode {
    /// Grow a fresh tree on each replicate's responders.
    RefitPerReplicate,
    /// Grow one tree on the complete population and reuse it.
    FixedFromPopulation,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub scenario_name: String,
    pub scenario: MissingnessScenario,
    pub spec: ModelSpec,
    pub replications: usize,
    pub master_seed: u64,
    pub pipeline: PipelineConfig,
    pub tree_mode: TreeMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub n_missing: usize,
    pub alpha0: f64,
    pub mean_bias: Option<f64>,
    pub p75_bias: Option<f64>,
    pub error: Option<String>,
}

impl ReplicateResult {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

fn weighted<'a>(pairs: &'a [(f64, Counts)]) -> Vec<WeightedCounts<'a>> {
    pairs.iter().map(|(w, c)| WeightedCounts { weight: *w, counts: c }).collect()
}

fn one_replicate(
    population: &Dataset,
    soc: &str,
    cfg: &SimulationConfig,
    fixed_tree: Option<&IndustryTree>,
    r: usize,
) -> ReplicateResult {
    let mut rng = replicate_stream(cfg.master_seed, r);
    let mut res = ReplicateResult { replicate: r, n_missing: 0, alpha0: f64::NAN, mean_bias: None, p75_bias: None, error: None };
    let run = |rng: &mut crate::rng::StreamRng, res: &mut ReplicateResult| -> Result<(f64, f64)> {
        let (missing, alpha0) = impose_missingness(population, soc, &cfg.scenario, cfg.pipeline.top_rule, rng)?;
        res.alpha0 = alpha0;
        let impute_seed = rng.next_u64();

        let mut ds = Dataset { grid: population.grid, establishments: population.establishments.clone(), panels: Vec::new() };
        for (e, m) in ds.establishments.iter_mut().zip(&missing) {
            e.responded = !m;
        }
        let index = population.estab_index();
        let mut truth = Vec::new();
        for p in population.panels.iter().filter(|p| p.soc == soc) {
            let i = index[p.estab_id.as_str()];
            if missing[i] {
                truth.push((population.establishments[i].weight, p.counts.expect("complete population")));
                ds.panels.push(OccupationPanel::absent(p.estab_id.clone(), soc, p.total));
            } else {
                ds.panels.push(p.clone());
            }
        }
        res.n_missing = truth.len();
        if truth.is_empty() {
            return Ok((0.0, 0.0));
        }

        let model = fit_occupation(&ds, soc, cfg.spec, &cfg.pipeline, fixed_tree)?;
        let completed = impute_dataset(&ds, &BTreeMap::from([(soc.to_string(), model)]), impute_seed)?;
        let cindex = completed.estab_index();
        let imputed: Vec<(f64, Counts)> = completed
            .panels
            .iter()
            .filter(|p| missing[index[p.estab_id.as_str()]])
            .map(|p| (completed.establishments[cindex[p.estab_id.as_str()]].weight, p.counts.expect("imputed")))
            .collect();

        let (t, m) = (weighted(&truth), weighted(&imputed));
        let (grid, top) = (&population.grid, cfg.pipeline.top_rule);
        // a missing set of zero-employee panels has no defined statistics
        if truth.iter().all(|(_, c)| c.iter().sum::<u32>() == 0) {
            return Ok((0.0, 0.0));
        }
        let mean_bias = occupation_mean(&m, grid, top)? - occupation_mean(&t, grid, top)?;
        let p75_bias = occupation_percentile(&m, grid, 0.75, top)? - occupation_percentile(&t, grid, 0.75, top)?;
        Ok((mean_bias, p75_bias))
    };
    match run(&mut rng, &mut res) {
        Ok((mb, pb)) => {
            res.mean_bias = Some(mb);
            res.p75_bias = Some(pb);
        }
        Err(e) => res.error = Some(e.to_string()),
    }
    res
}

/// All replicates of one scenario × specification cell, ordered by index.
pub fn run_replications(population: &Dataset, soc: &str, cfg: &SimulationConfig) -> Result<Vec<ReplicateResult>> {
    cfg.scenario.validate()?;
    if !population.panels_for(soc).any(|_| true) {
        return Err(Error::InvalidData(format!("population has no panels for {soc}")));
    }
    let tree = match cfg.tree_mode {
        TreeMode::RefitPerReplicate => None,
        TreeMode::FixedFromPopulation => {
            let pairs = population
                .panels_for(soc)
                .filter(|(_, p)| p.total > 0)
                .map(|(e, p)| {
                    let c = p.counts.as_ref().ok_or_else(|| Error::InvalidData("population is not complete".into()))?;
                    Ok((e.naics, establishment_occ_mean(c, &population.grid, cfg.pipeline.top_rule)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(fit_industry_tree(&pairs, cfg.pipeline.min_leaf, cfg.pipeline.rel_tol)?)
        }
    };
    Ok((0..cfg.replications)
        .into_par_iter()
        .map(|r| one_replicate(population, soc, cfg, tree.as_ref(), r))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub scenario: String,
    pub spec: String,
    pub statistic: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BiasSummary {
    /// Standard error of the mean bias.
    pub fn se(&self) -> f64 {
        self.sd / (self.n_ok as f64).sqrt()
    }
}

fn describe(scenario: &str, spec: &str, statistic: &str, values: &[f64], n_failed: usize) -> BiasSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    BiasSummary {
        scenario: scenario.into(),
        spec: spec.into(),
        statistic: statistic.into(),
        n_ok: n,
        n_failed,
        mean,
        sd,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

/// Mean and p75 summaries for one cell.
pub fn summarize_bias(scenario: &str, spec: ModelSpec, results: &[ReplicateResult]) -> Result<[BiasSummary; 2]> {
    let ok: Vec<&ReplicateResult> = results.iter().filter(|r| r.ok()).collect();
    if ok.is_empty() {
        return Err(Error::NoResults);
    }
    let failed = results.len() - ok.len();
    let means: Vec<f64> = ok.iter().filter_map(|r| r.mean_bias).collect();
    let p75s: Vec<f64> = ok.iter().filter_map(|r| r.p75_bias).collect();
    let spec = spec.to_string();
    Ok([describe(scenario, &spec, "mean", &means, failed), describe(scenario, &spec, "p75", &p75s, failed)])
}

pub fn write_replicates_csv<W: Write>(out: W, scenario: &str, spec: ModelSpec, results: &[ReplicateResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "spec", "replicate", "n_missing", "alpha0", "mean_bias", "p75_bias", "error"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in results {
        w.write_record([
            scenario.to_string(),
            spec.to_string(),
            r.replicate.to_string(),
            r.n_missing.to_string(),
            format!("{}", r.alpha0),
            opt(r.mean_bias),
            opt(r.p75_bias),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, summaries: &[BiasSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
