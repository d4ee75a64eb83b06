//! Synthetic establishment populations with known generating parameters.
//!
//! Establishments get a latent pay level that raises both their frame
//! AVEWAGE and the wages of every occupation they employ, so higher-AVEWAGE
//! establishments stochastically pay more. Employee hourly wages are
//! log-normal around an occupation mean shifted by the standardized AVEWAGE,
//! an industry-block effect, an MSA-size effect and an establishment effect,
//! then binned into the wage grid.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, EstablishmentRecord, OccupationPanel, WageGrid, N_INTERVALS};
use crate::error::{Error, Result};
use crate::hazard::{interval_probs, SubjectRow, N_HAZARDS};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndustryBlock {
    pub name: String,
    /// First 6-digit NAICS code of the block.
    pub base_code: u32,
    /// Number of distinct codes drawn, spaced `code_step` apart.
    pub n_codes: u32,
    pub code_step: u32,
    pub share: f64,
    /// Additive effect on employee log wage.
    pub wage_effect: f64,
    /// Additive effect on establishment log AVEWAGE.
    pub avewage_effect: f64,
}

impl Default for IndustryBlock {
    fn default() -> Self {
        IndustryBlock {
            name: String::new(),
            base_code: 541110,
            n_codes: 5,
            code_step: 100,
            share: 1.0,
            wage_effect: 0.0,
            avewage_effect: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccupationSpec {
    pub soc: String,
    /// Hourly wage at the median establishment, before block/MSA effects.
    pub median_hourly: f64,
    /// Fraction of establishments employing the occupation.
    pub prevalence: f64,
    /// Mean of the Poisson part of the panel total (total = 1 + Poisson).
    pub mean_extra_employees: f64,
}

impl Default for OccupationSpec {
    fn default() -> Self {
        OccupationSpec {
            soc: "11-3021".into(),
            median_hourly: 20.0,
            prevalence: 1.0,
            mean_extra_employees: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationConfig {
    pub n_establishments: usize,
    pub grid: WageGrid,
    pub occupations: Vec<OccupationSpec>,
    pub blocks: Vec<IndustryBlock>,
    pub n_msas: usize,
    /// Zipf exponent of MSA sizes.
    pub msa_zipf: f64,
    /// Number of largest MSAs flagged MSACATT6.
    pub n_large_msas: usize,
    pub msa_wage_effect: f64,
    pub multi_rate: f64,
    pub log_empl_mean: f64,
    pub log_empl_sd: f64,
    /// Median quarterly wage per employee.
    pub avewage_median: f64,
    /// SD of the latent establishment pay level (log scale).
    pub pay_level_sd: f64,
    /// SD of AVEWAGE noise unrelated to occupational pay (log scale).
    pub avewage_noise_sd: f64,
    /// Effect of standardized AVEWAGE on employee log wage.
    pub gamma_avewage: f64,
    /// SD of the establishment-by-occupation effect (log scale).
    pub estab_sd: f64,
    /// SD of employee-level noise (log scale).
    pub employee_sd: f64,
    pub mean_weight: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            n_establishments: 4600,
            grid: WageGrid::default(),
            occupations: vec![OccupationSpec::default()],
            blocks: vec![
                IndustryBlock {
                    name: "finance".into(),
                    base_code: 522110,
                    n_codes: 8,
                    code_step: 250,
                    share: 0.35,
                    wage_effect: 0.10,
                    avewage_effect: 0.10,
                },
                IndustryBlock {
                    name: "professional services".into(),
                    base_code: 541110,
                    n_codes: 8,
                    code_step: 100,
                    share: 0.45,
                    wage_effect: 0.0,
                    avewage_effect: 0.0,
                },
                IndustryBlock {
                    name: "public administration".into(),
                    base_code: 999100,
                    n_codes: 3,
                    code_step: 100,
                    share: 0.20,
                    wage_effect: -0.20,
                    avewage_effect: -0.15,
                },
            ],
            n_msas: 40,
            msa_zipf: 1.0,
            n_large_msas: 3,
            msa_wage_effect: 0.0,
            multi_rate: 0.3,
            log_empl_mean: 3.0,
            log_empl_sd: 1.0,
            avewage_median: 20_000.0,
            pay_level_sd: 0.45,
            avewage_noise_sd: 0.15,
            gamma_avewage: 0.10,
            estab_sd: 0.05,
            employee_sd: 0.8,
            mean_weight: 5.0,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_establishments == 0 {
            return bad("n_establishments must be at least 1");
        }
        if self.occupations.is_empty() || self.blocks.is_empty() || self.n_msas == 0 {
            return bad("need at least one occupation, industry block and MSA");
        }
        if self.blocks.iter().any(|b| b.n_codes == 0 || !(b.share > 0.0)) {
            return bad("industry blocks need n_codes >= 1 and positive share");
        }
        if self.blocks.iter().any(|b| b.base_code + (b.n_codes - 1) * b.code_step > 999_999) {
            return bad("industry block codes must stay 6-digit");
        }
        if self
            .occupations
            .iter()
            .any(|o| !(o.median_hourly > 0.0) || !(0.0..=1.0).contains(&o.prevalence) || o.mean_extra_employees < 0.0)
        {
            return bad("occupation specs need positive median_hourly, prevalence in [0,1], nonnegative mean_extra_employees");
        }
        for (name, v) in [
            ("log_empl_sd", self.log_empl_sd),
            ("pay_level_sd", self.pay_level_sd),
            ("avewage_noise_sd", self.avewage_noise_sd),
            ("estab_sd", self.estab_sd),
            ("employee_sd", self.employee_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite nonnegative number")));
            }
        }
        if !(self.avewage_median > 0.0 && self.mean_weight > 0.0) {
            return bad("avewage_median and mean_weight must be positive");
        }
        if !(0.0..=1.0).contains(&self.multi_rate) {
            return bad("multi_rate must be in [0, 1]");
        }
        Ok(())
    }
}

/// MSA-level parameters realized for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsaParams {
    pub msa: String,
    pub share: f64,
    pub msacatt6: bool,
}

/// Generating parameters emitted alongside a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    pub seed: u64,
    pub config: PopulationConfig,
    pub msas: Vec<MsaParams>,
    /// Mean and SD of log AVEWAGE used to standardize the wage effect.
    pub log_avewage_mean: f64,
    pub log_avewage_sd: f64,
}

#[derive(Debug, Clone)]
pub struct Population {
    pub dataset: Dataset,
    pub params: PopulationParams,
}

fn pick<R: Rng + ?Sized>(shares: &[f64], rng: &mut R) -> usize {
    let total: f64 = shares.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, s) in shares.iter().enumerate() {
        if u < *s {
            return i;
        }
        u -= s;
    }
    shares.len() - 1
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated sd")
}

/// A complete (fully responding) population.
pub fn generate_population(cfg: &PopulationConfig, seed: u64) -> Result<Population> {
    cfg.validate()?;
    let mut rng = stream(seed, &[b"population"]);

    let msas: Vec<MsaParams> = {
        let raw: Vec<f64> = (1..=cfg.n_msas).map(|r| (r as f64).powf(-cfg.msa_zipf)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter()
            .enumerate()
            .map(|(r, w)| MsaParams {
                msa: format!("M{:03}", r + 1),
                share: w / total,
                msacatt6: r < cfg.n_large_msas,
            })
            .collect()
    };
    let msa_shares: Vec<f64> = msas.iter().map(|m| m.share).collect();
    let block_shares: Vec<f64> = cfg.blocks.iter().map(|b| b.share).collect();

    let log_empl = Normal::new(cfg.log_empl_mean, cfg.log_empl_sd).map_err(|e| Error::Config(e.to_string()))?;
    let pay_level = normal(cfg.pay_level_sd);
    let avewage_noise = normal(cfg.avewage_noise_sd);

    struct Latent {
        block: usize,
        log_avewage: f64,
    }
    let mut establishments = Vec::with_capacity(cfg.n_establishments);
    let mut latent = Vec::with_capacity(cfg.n_establishments);
    for i in 0..cfg.n_establishments {
        let block = pick(&block_shares, &mut rng);
        let b = &cfg.blocks[block];
        let naics = b.base_code + rng.random_range(0..b.n_codes) * b.code_step;
        let msa = &msas[pick(&msa_shares, &mut rng)];
        let empl = log_empl.sample(&mut rng).exp().round().max(1.0);
        let pay = pay_level.sample(&mut rng);
        let log_avewage = cfg.avewage_median.ln() + b.avewage_effect + pay + avewage_noise.sample(&mut rng);
        let weight = (cfg.mean_weight * (cfg.log_empl_mean.exp() / empl).sqrt()).clamp(1.0, 20.0 * cfg.mean_weight);
        establishments.push(EstablishmentRecord {
            estab_id: format!("E{:06}", i + 1),
            empl,
            wage: (log_avewage.exp() * empl).round(),
            naics,
            msa: msa.msa.clone(),
            msacatt6: msa.msacatt6,
            multi: rng.random::<f64>() < cfg.multi_rate,
            weight: (weight * 100.0).round() / 100.0,
            responded: true,
        });
        latent.push(Latent { block, log_avewage });
    }

    let n = latent.len() as f64;
    let mean_la = latent.iter().map(|l| l.log_avewage).sum::<f64>() / n;
    let sd_la = (latent.iter().map(|l| (l.log_avewage - mean_la).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);

    let estab_noise = normal(cfg.estab_sd);
    let emp_noise = normal(cfg.employee_sd);
    let mut panels = Vec::new();
    for (e, lat) in establishments.iter().zip(&latent) {
        for occ in &cfg.occupations {
            if rng.random::<f64>() >= occ.prevalence {
                continue;
            }
            let extra = if occ.mean_extra_employees > 0.0 {
                Poisson::new(occ.mean_extra_employees)
                    .map_err(|err| Error::Config(err.to_string()))?
                    .sample(&mut rng) as u32
            } else {
                0
            };
            let total = 1 + extra;
            let z = (lat.log_avewage - mean_la) / sd_la;
            let center = occ.median_hourly.ln()
                + cfg.gamma_avewage * z
                + cfg.blocks[lat.block].wage_effect
                + if e.msacatt6 { cfg.msa_wage_effect } else { 0.0 }
                + estab_noise.sample(&mut rng);
            let mut counts = [0u32; N_INTERVALS];
            for _ in 0..total {
                let hourly = (center + emp_noise.sample(&mut rng)).exp();
                counts[cfg.grid.interval_of(hourly)] += 1;
            }
            panels.push(OccupationPanel::observed(e.estab_id.clone(), occ.soc.clone(), counts));
        }
    }

    Ok(Population {
        dataset: Dataset { grid: cfg.grid, establishments, panels },
        params: PopulationParams {
            seed,
            config: cfg.clone(),
            msas,
            log_avewage_mean: mean_la,
            log_avewage_sd: sd_la,
        },
    })
}

/// Subjects drawn from the discrete-hazard law
/// `h(l) = min(λ0(l)·exp(β·x), 1 - ε)` with absorption at interval 12.
/// `sample` returns one subject's design values and stratum; baselines are
/// looked up by stratum.
pub fn generate_from_hazard_model<R, F>(
    beta: &[f64],
    baselines: &BTreeMap<u32, [f64; N_HAZARDS]>,
    mut sample: F,
    n: usize,
    rng: &mut R,
) -> Result<Vec<SubjectRow>>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> (Vec<f64>, u32),
{
    if baselines.values().flatten().any(|h| !(*h >= 0.0 && h.is_finite())) {
        return Err(Error::InvalidData("baseline hazards must be finite and nonnegative".into()));
    }
    (0..n)
        .map(|i| {
            let (x, stratum) = sample(rng);
            let base = baselines
                .get(&stratum)
                .ok_or_else(|| Error::InvalidData(format!("no baseline for stratum {stratum}")))?;
            let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let probs = interval_probs(base, eta);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut event = N_INTERVALS;
            for (l, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    event = l + 1;
                    break;
                }
            }
            Ok(SubjectRow { event: event as u8, x, stratum, cluster: i, multiplicity: 1 })
        })
        .collect()
}
