//! Stratified discrete proportional-hazards model over the twelve wage
//! intervals.
//!
//! The interval index is the event time. Within each stratum, employees tied
//! at an interval are handled with Efron's approximation to the partial
//! likelihood. Baseline hazards are Breslow-type estimates per stratum plus a
//! pooled estimate used for strata unseen at fit time.
//!
//! Rows carry a `multiplicity`: a row with multiplicity `m` contributes exactly
//! like `m` identical subjects, including in the Efron tie correction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::N_INTERVALS;
use crate::error::{Error, Result};

/// Number of intervals with an estimated hazard; the top interval absorbs.
pub const N_HAZARDS: usize = N_INTERVALS - 1;
pub const HAZARD_CLAMP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    /// 1-based interval containing the wage.
    pub event: u8,
    /// Regression design values (no constant column).
    pub x: Vec<f64>,
    pub stratum: u32,
    pub cluster: usize,
    pub multiplicity: u32,
}

/// Log partial likelihood with analytic first and second derivatives.
#[derive(Debug, Clone)]
pub struct LogLik {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn check_rows(rows: &[SubjectRow]) -> Result<usize> {
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let p = first.x.len();
    for r in rows {
        if !(1..=N_INTERVALS as u8).contains(&r.event) {
            return Err(Error::InvalidData(format!("event interval {} outside 1..=12", r.event)));
        }
        if r.x.len() != p {
            return Err(Error::InvalidData("rows have differing covariate lengths".into()));
        }
        if r.multiplicity == 0 {
            return Err(Error::InvalidData("row multiplicity must be at least 1".into()));
        }
    }
    Ok(p)
}

/// Rows of each stratum bucketed by event interval.
struct Strata<'a> {
    groups: Vec<[Vec<&'a SubjectRow>; N_INTERVALS]>,
}

impl<'a> Strata<'a> {
    fn new(rows: &'a [SubjectRow]) -> Self {
        let mut by_stratum: BTreeMap<u32, [Vec<&SubjectRow>; N_INTERVALS]> = BTreeMap::new();
        for r in rows {
            by_stratum.entry(r.stratum).or_default()[usize::from(r.event) - 1].push(r);
        }
        Strata { groups: by_stratum.into_values().collect() }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Efron contribution of one stratum. The linear predictor is shifted by
/// its stratum maximum before exponentiation and the shift added back.
fn stratum_loglik(groups: &[Vec<&SubjectRow>; N_INTERVALS], beta: &[f64], p: usize) -> Result<LogLik> {
    let eta_of = |r: &SubjectRow| dot(&r.x, beta);
    let shift = groups
        .iter()
        .flatten()
        .map(|r| eta_of(r))
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::NumericOverflow);
    }

    let mut value = 0.0;
    let mut grad = DVector::zeros(p);
    let mut hess = DMatrix::zeros(p, p);
    // running risk-set sums over intervals >= l
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(p);
    let mut s2 = DMatrix::zeros(p, p);

    for l in (0..N_INTERVALS).rev() {
        let deaths = &groups[l];
        if deaths.is_empty() {
            continue;
        }
        let mut t0 = 0.0;
        let mut t1 = DVector::zeros(p);
        let mut t2 = DMatrix::zeros(p, p);
        let mut d: u64 = 0;
        for r in deaths {
            let m = f64::from(r.multiplicity);
            let eta = eta_of(r);
            let w = m * (eta - shift).exp();
            let x = DVector::from_column_slice(&r.x);
            value += m * eta;
            grad.axpy(m, &x, 1.0);
            t0 += w;
            t1.axpy(w, &x, 1.0);
            t2.ger(w, &x, &x, 1.0);
            d += u64::from(r.multiplicity);
        }
        s0 += t0;
        s1 += &t1;
        s2 += &t2;

        // Σ_k over the d tied subjects with c_k = k/d and a_k = S - c_k T
        let df = d as f64;
        let (mut sum_log, mut inv, mut c_inv, mut inv2, mut c_inv2, mut cc_inv2) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..d {
            let c = k as f64 / df;
            let a = s0 - c * t0;
            let ia = 1.0 / a;
            sum_log += a.ln();
            inv += ia;
            c_inv += c * ia;
            inv2 += ia * ia;
            c_inv2 += c * ia * ia;
            cc_inv2 += c * c * ia * ia;
        }
        value -= sum_log + df * shift;
        grad.axpy(-inv, &s1, 1.0);
        grad.axpy(c_inv, &t1, 1.0);
        hess -= &s2 * inv;
        hess += &t2 * c_inv;
        hess.ger(inv2, &s1, &s1, 1.0);
        hess.ger(-c_inv2, &s1, &t1, 1.0);
        hess.ger(-c_inv2, &t1, &s1, 1.0);
        hess.ger(cc_inv2, &t1, &t1, 1.0);
    }
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericOverflow);
    }
    Ok(LogLik { value, gradient: grad, hessian: hess })
}

/// Stratified Efron log partial likelihood, gradient and Hessian at `beta`.
pub fn efron_partial_loglik(rows: &[SubjectRow], beta: &[f64]) -> Result<LogLik> {
    let p = check_rows(rows)?;
    if beta.len() != p {
        return Err(Error::InvalidData(format!("beta has {} entries, design has {p}", beta.len())));
    }
    let strata = Strata::new(rows);
    evaluate(&strata, beta, p)
}

fn evaluate(strata: &Strata<'_>, beta: &[f64], p: usize) -> Result<LogLik> {
    let parts: Vec<Result<LogLik>> = strata
        .groups
        .par_iter()
        .map(|g| stratum_loglik(g, beta, p))
        .collect();
    let mut total = LogLik {
        value: 0.0,
        gradient: DVector::zeros(p),
        hessian: DMatrix::zeros(p, p),
    };
    for part in parts {
        let part = part?;
        total.value += part.value;
        total.gradient += part.gradient;
        total.hessian += part.hessian;
    }
    Ok(total)
}

/// Breslow-type discrete baseline hazards `d_l / Σ_{risk} m·exp(η)` for
/// intervals 1..=11, with `η = beta·(x - center)`.
pub fn estimate_baseline(rows: &[&SubjectRow], beta: &[f64], center: &[f64]) -> [f64; N_HAZARDS] {
    let mut events = [0.0; N_INTERVALS];
    let mut risk_at = [0.0; N_INTERVALS];
    for r in rows {
        let eta: f64 = r.x.iter().zip(center).zip(beta).map(|((x, c), b)| (x - c) * b).sum();
        let m = f64::from(r.multiplicity);
        let l = usize::from(r.event) - 1;
        events[l] += m;
        risk_at[l] += m * eta.exp();
    }
    let mut out = [0.0; N_HAZARDS];
    let mut risk = 0.0;
    for l in (0..N_INTERVALS).rev() {
        risk += risk_at[l];
        if l < N_HAZARDS && events[l] > 0.0 {
            out[l] = events[l] / risk;
        }
    }
    out
}

/// Interval probabilities from baseline hazards and a linear predictor.
/// Hazards are clamped at `1 - ε`; the top interval absorbs the remainder.
pub fn interval_probs(baseline: &[f64; N_HAZARDS], eta: f64) -> [f64; N_INTERVALS] {
    let rr = eta.exp();
    let mut probs = [0.0; N_INTERVALS];
    let mut surv = 1.0;
    for l in 0..N_HAZARDS {
        let h = (baseline[l] * rr).min(1.0 - HAZARD_CLAMP_EPS);
        probs[l] = surv * h;
        surv *= 1.0 - h;
    }
    probs[N_HAZARDS] = surv;
    probs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iter: 50, tol: 1e-8, max_halvings: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Log partial likelihood at each accepted iterate, starting at beta = 0.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the gradient in the standardized parameterization.
    pub gradient_max_norm: f64,
    pub n_rows: usize,
    pub n_subjects: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedHazardModel {
    pub beta: Vec<f64>,
    /// Covariate means; baselines are hazards at `x = center`.
    pub center: Vec<f64>,
    pub baselines: BTreeMap<u32, [f64; N_HAZARDS]>,
    pub pooled_baseline: [f64; N_HAZARDS],
    /// Model-based covariance of `beta` (inverse observed information).
    pub covariance: Vec<Vec<f64>>,
    pub report: FitReport,
}

impl FittedHazardModel {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.beta)
            .map(|((x, c), b)| (x - c) * b)
            .sum()
    }

    pub fn baseline_for(&self, stratum: u32) -> &[f64; N_HAZARDS] {
        self.baselines.get(&stratum).unwrap_or(&self.pooled_baseline)
    }

    /// Interval probabilities for design values `x` in `stratum`; unknown
    /// strata use the pooled baseline.
    pub fn predict_interval_probs(&self, x: &[f64], stratum: u32) -> [f64; N_INTERVALS] {
        interval_probs(self.baseline_for(stratum), self.linear_predictor(x))
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.beta.len()).map(|j| self.covariance[j][j].sqrt()).collect()
    }

    /// Model with the given coefficients and baselines estimated from `rows`.
    pub fn with_beta(rows: &[SubjectRow], beta: Vec<f64>) -> Result<Self> {
        let p = check_rows(rows)?;
        let center = vec![0.0; p];
        let (baselines, pooled_baseline) = baselines_for(rows, &beta, &center);
        Ok(FittedHazardModel {
            covariance: vec![vec![f64::NAN; p]; p],
            report: FitReport {
                loglik_trace: Vec::new(),
                iterations: 0,
                converged: true,
                gradient_max_norm: 0.0,
                n_rows: rows.len(),
                n_subjects: rows.iter().map(|r| u64::from(r.multiplicity)).sum(),
            },
            beta,
            center,
            baselines,
            pooled_baseline,
        })
    }
}

fn baselines_for(
    rows: &[SubjectRow],
    beta: &[f64],
    center: &[f64],
) -> (BTreeMap<u32, [f64; N_HAZARDS]>, [f64; N_HAZARDS]) {
    let mut by_stratum: BTreeMap<u32, Vec<&SubjectRow>> = BTreeMap::new();
    for r in rows {
        by_stratum.entry(r.stratum).or_default().push(r);
    }
    let baselines = by_stratum
        .iter()
        .map(|(&s, rs)| (s, estimate_baseline(rs, beta, center)))
        .collect();
    let all: Vec<&SubjectRow> = rows.iter().collect();
    (baselines, estimate_baseline(&all, beta, center))
}

/// Multiplicity-weighted mean and standard deviation of every design column.
fn column_moments(rows: &[SubjectRow], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n: f64 = rows.iter().map(|r| f64::from(r.multiplicity)).sum();
    let mut mean = vec![0.0; p];
    for r in rows {
        let m = f64::from(r.multiplicity);
        for (acc, x) in mean.iter_mut().zip(&r.x) {
            *acc += m * x;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; p];
    for r in rows {
        let m = f64::from(r.multiplicity);
        for j in 0..p {
            var[j] += m * (r.x[j] - mean[j]).powi(2);
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Standardized coefficients beyond this magnitude are treated as escaping to
/// infinity (separation).
const ESCAPE_BOUND: f64 = 50.0;

/// Maximize the Efron partial likelihood by Newton-Raphson with step halving,
/// starting from `beta = 0`. Covariates are standardized internally; the
/// returned coefficients and covariance are on the original scale.
pub fn fit(rows: &[SubjectRow], opts: &FitOptions) -> Result<FittedHazardModel> {
    let p = check_rows(rows)?;
    let (center, scale) = column_moments(rows, p);
    if let Some(j) = (0..p).position(|j| !(scale[j] > 1e-12 * (1.0 + center[j].abs()))) {
        return Err(Error::SingularDesign(format!("design column {j} is constant")));
    }
    let std_rows: Vec<SubjectRow> = rows
        .iter()
        .map(|r| SubjectRow {
            x: r.x.iter().zip(&center).zip(&scale).map(|((x, c), s)| (x - c) / s).collect(),
            ..r.clone()
        })
        .collect();
    let strata = Strata::new(&std_rows);

    let mut beta = DVector::zeros(p);
    let mut cur = evaluate(&strata, beta.as_slice(), p)?;
    let mut trace = vec![cur.value];
    let mut iterations = 0;
    let grad_ok = |ll: &LogLik| max_abs(&ll.gradient) <= 1e-8 * (1.0 + ll.value.abs());

    let mut stalled = 0;
    let mut converged = grad_ok(&cur);
    while !converged {
        if iterations >= opts.max_iter {
            return Err(Error::Nonconvergence {
                iterations,
                loglik: cur.value,
                gradient_norm: max_abs(&cur.gradient),
                reason: "iteration limit reached".into(),
            });
        }
        let info = -&cur.hessian;
        let chol = info.clone().cholesky().ok_or_else(|| {
            Error::SingularDesign("observed information is not positive definite".into())
        })?;
        let full_step = chol.solve(&cur.gradient);
        // predicted loglik gain of a full Newton step; tiny means beta is a
        // negligible fraction of a standard error from the optimum
        if cur.gradient.dot(&full_step) / 2.0 <= opts.tol {
            converged = true;
            break;
        }

        let mut step = full_step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &beta + &step;
            match evaluate(&strata, trial.as_slice(), p) {
                Ok(ll) if ll.value >= cur.value => {
                    accepted = Some((trial, ll));
                    break;
                }
                Ok(_) | Err(Error::NumericOverflow) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        let Some((next_beta, next)) = accepted else {
            // no ascent along the Newton direction: at the optimum up to rounding
            if grad_ok(&cur) {
                break;
            }
            return Err(Error::Nonconvergence {
                iterations,
                loglik: cur.value,
                gradient_norm: max_abs(&cur.gradient),
                reason: "step halving exhausted without ascent".into(),
            });
        };
        let rel_change = (next.value - cur.value).abs() / (1.0 + cur.value.abs());
        beta = next_beta;
        cur = next;
        trace.push(cur.value);
        converged = grad_ok(&cur);
        if max_abs(&beta) > ESCAPE_BOUND {
            return Err(Error::Nonconvergence {
                iterations,
                loglik: cur.value,
                gradient_norm: max_abs(&cur.gradient),
                reason: "coefficients diverging (possible separation)".into(),
            });
        }
        // a stalled loglik without a small gradient means an ill-posed problem
        stalled = if rel_change < opts.tol { stalled + 1 } else { 0 };
        if stalled >= 3 && !converged {
            return Err(Error::Nonconvergence {
                iterations,
                loglik: cur.value,
                gradient_norm: max_abs(&cur.gradient),
                reason: "log-likelihood stalled before the gradient criterion was met".into(),
            });
        }
    }

    let info = -&cur.hessian;
    let inv = info
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("observed information is not positive definite".into()))?
        .inverse();
    let beta_orig: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let covariance = (0..p)
        .map(|i| (0..p).map(|j| inv[(i, j)] / (scale[i] * scale[j])).collect())
        .collect();
    let (baselines, pooled_baseline) = baselines_for(rows, &beta_orig, &center);

    Ok(FittedHazardModel {
        beta: beta_orig,
        center,
        baselines,
        pooled_baseline,
        covariance,
        report: FitReport {
            loglik_trace: trace,
            iterations,
            converged,
            gradient_max_norm: max_abs(&cur.gradient),
            n_rows: rows.len(),
            n_subjects: rows.iter().map(|r| u64::from(r.multiplicity)).sum(),
        },
    })
}

/// Per-row score residuals (each row's share of the gradient), evaluated at
/// `beta` on the given covariates. Rows sum to the gradient.
pub fn score_residuals(rows: &[SubjectRow], beta: &[f64]) -> Result<Vec<DVector<f64>>> {
    let p = check_rows(rows)?;
    let mut out = vec![DVector::zeros(p); rows.len()];
    let mut by_stratum: BTreeMap<u32, [Vec<usize>; N_INTERVALS]> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_stratum.entry(r.stratum).or_default()[usize::from(r.event) - 1].push(i);
    }
    for groups in by_stratum.values() {
        let idx: Vec<usize> = groups.iter().flatten().copied().collect();
        let eta: Vec<f64> = idx.iter().map(|&i| dot(&rows[i].x, beta)).collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::NumericOverflow);
        }
        let w_of = |i: usize| (dot(&rows[i].x, beta) - shift).exp();

        let mut s0 = 0.0;
        let mut s1 = DVector::zeros(p);
        // risk-set rows accumulated so far (event >= l)
        let mut at_risk: Vec<usize> = Vec::new();
        for l in (0..N_INTERVALS).rev() {
            let deaths = &groups[l];
            at_risk.extend(deaths.iter().copied());
            if deaths.is_empty() {
                continue;
            }
            let mut t0 = 0.0;
            let mut t1 = DVector::zeros(p);
            let mut d: u64 = 0;
            for &i in deaths {
                let w = f64::from(rows[i].multiplicity) * w_of(i);
                t0 += w;
                t1.axpy(w, &DVector::from_column_slice(&rows[i].x), 1.0);
                d += u64::from(rows[i].multiplicity);
            }
            s0 += t0;
            s1 += &t1;
            let df = d as f64;
            // per-subject hazard increments: Σ_k 1/a_k, Σ_k (1-c_k)/a_k and the
            // matching weighted means Σ_k xbar_k/a_k, Σ_k (1-c_k) xbar_k/a_k
            let mut haz = 0.0;
            let mut haz_tied = 0.0;
            let mut xbar_haz = DVector::zeros(p);
            let mut xbar_haz_tied = DVector::zeros(p);
            let mut xbar_sum = DVector::zeros(p);
            for k in 0..d {
                let c = k as f64 / df;
                let a = s0 - c * t0;
                let xbar = (&s1 - &t1 * c) / a;
                haz += 1.0 / a;
                haz_tied += (1.0 - c) / a;
                xbar_haz.axpy(1.0 / a, &xbar, 1.0);
                xbar_haz_tied.axpy((1.0 - c) / a, &xbar, 1.0);
                xbar_sum += &xbar;
            }
            let xbar_mean = xbar_sum / df;
            let is_death_time = |i: usize| usize::from(rows[i].event) - 1 == l;
            for &i in &at_risk {
                let r = &rows[i];
                let m = f64::from(r.multiplicity);
                let x = DVector::from_column_slice(&r.x);
                let w = w_of(i);
                let res = if is_death_time(i) {
                    (&x - &xbar_mean) - (&x * haz_tied - &xbar_haz_tied) * w
                } else {
                    -(&x * haz - &xbar_haz) * w
                };
                out[i].axpy(m, &res, 1.0);
            }
        }
    }
    Ok(out)
}

/// Cluster-robust sandwich covariance `I⁻¹ (Σ_c U_c U_cᵀ) I⁻¹`, where `U_c`
/// sums the score residuals of the rows in cluster `c`.
pub fn robust_cluster_variance(model: &FittedHazardModel, rows: &[SubjectRow]) -> Result<DMatrix<f64>> {
    let p = check_rows(rows)?;
    let centered: Vec<SubjectRow> = rows
        .iter()
        .map(|r| SubjectRow {
            x: r.x.iter().zip(&model.center).map(|(x, c)| x - c).collect(),
            ..r.clone()
        })
        .collect();
    let ll = efron_partial_loglik(&centered, &model.beta)?;
    let bread = (-ll.hessian)
        .try_inverse()
        .ok_or_else(|| Error::SingularDesign("observed information is not invertible".into()))?;
    let resid = score_residuals(&centered, &model.beta)?;
    let mut per_cluster: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for (r, u) in rows.iter().zip(resid) {
        *per_cluster.entry(r.cluster).or_insert_with(|| DVector::zeros(p)) += u;
    }
    let mut meat = DMatrix::zeros(p, p);
    for u in per_cluster.values() {
        meat.ger(1.0, u, u, 1.0);
    }
    Ok(&bread * meat * &bread)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(event: u8, x: &[f64], stratum: u32, m: u32) -> SubjectRow {
        SubjectRow { event, x: x.to_vec(), stratum, cluster: 0, multiplicity: m }
    }

    #[test]
    fn three_tied_identical_subjects() {
        let rows: Vec<_> = (0..3).map(|_| row(1, &[0.5], 0, 1)).collect();
        let ll = efron_partial_loglik(&rows, &[0.0]).unwrap();
        let want = -(3f64.ln() + 2f64.ln());
        assert!((ll.value - want).abs() < 1e-12);
        assert!((ll.value + 1.791759).abs() < 1e-6);
    }

    #[test]
    fn single_subject() {
        let ll = efron_partial_loglik(&[row(4, &[2.0], 0, 1)], &[0.3]).unwrap();
        assert!(ll.value.abs() < 1e-15);
        assert!(ll.gradient[0].abs() < 1e-15);
    }

    #[test]
    fn two_subjects_gradient_matches_central_difference() {
        let rows = vec![row(2, &[1.0], 0, 1), row(5, &[-1.0], 0, 1)];
        let ll = efron_partial_loglik(&rows, &[0.0]).unwrap();
        let h = 1e-5;
        let up = efron_partial_loglik(&rows, &[h]).unwrap().value;
        let dn = efron_partial_loglik(&rows, &[-h]).unwrap().value;
        let fd = (up - dn) / (2.0 * h);
        // analytic: x_1 - (x_1 + x_2)/2 = 1 at beta = 0
        assert!((ll.gradient[0] - 1.0).abs() < 1e-12);
        assert!((ll.gradient[0] - fd).abs() / ll.gradient[0].abs() < 1e-6);
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(matches!(efron_partial_loglik(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn non_finite_predictor_is_overflow() {
        let rows = vec![row(1, &[1.0], 0, 1), row(2, &[2.0], 0, 1)];
        assert!(matches!(efron_partial_loglik(&rows, &[f64::INFINITY]), Err(Error::NumericOverflow)));
    }

    #[test]
    fn baseline_at_zero_beta_is_event_over_risk() {
        let rows = [row(1, &[0.0], 0, 1), row(2, &[0.0], 0, 1)];
        let refs: Vec<_> = rows.iter().collect();
        let b = estimate_baseline(&refs, &[0.0], &[0.0]);
        assert_eq!(b[0], 0.5);
        assert_eq!(b[1], 1.0);
        assert!(b[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_stratum_predicts_one_twelfth() {
        let rows: Vec<_> = (1..=12).map(|l| row(l, &[f64::from(l)], 0, 3)).collect();
        let m = FittedHazardModel::with_beta(&rows, vec![0.0]).unwrap();
        let p = m.predict_interval_probs(&[7.0], 0);
        for v in p {
            assert!((v - 1.0 / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clamped_hazard_still_normalizes() {
        let mut base = [0.3; N_HAZARDS];
        base[2] = 0.9;
        let p = interval_probs(&base, 2.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p[0] - (1.0 - HAZARD_CLAMP_EPS)).abs() < 1e-12);
    }

    #[test]
    fn unknown_stratum_uses_pooled() {
        let rows = vec![row(1, &[0.0], 0, 1), row(3, &[1.0], 1, 2)];
        let m = FittedHazardModel::with_beta(&rows, vec![0.0]).unwrap();
        assert_eq!(m.baseline_for(99), &m.pooled_baseline);
    }

    #[test]
    fn constant_column_is_singular() {
        let rows: Vec<_> = (0..20).map(|i| row(1 + (i % 12) as u8, &[f64::from(i), 3.0], 0, 1)).collect();
        assert!(matches!(fit(&rows, &FitOptions::default()), Err(Error::SingularDesign(_))));
    }
}
