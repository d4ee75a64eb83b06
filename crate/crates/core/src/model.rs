//! Per-occupation fitting pipeline: winsorize AVEWAGE, find large MSAs, grow
//! the industry tree, build collapsed subject rows and fit the hazard model.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, EstablishmentRecord, OccupationPanel, N_INTERVALS};
use crate::error::{Error, Result};
use crate::estimators::{establishment_occ_mean, DEFAULT_TOP_RULE};
use crate::hazard::{self, FitOptions, FittedHazardModel, SubjectRow};
use crate::preprocess::{
    build_covariates, identify_bmsa, CovariateVector, WinsorCuts, DEFAULT_BMSA_THRESHOLD,
    DEFAULT_WINSOR_PCTS,
};
use crate::tree::{fit_industry_tree, IndustryTree, DEFAULT_MIN_LEAF, DEFAULT_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelSpec {
    #[serde(rename = "FULL")]
    Full,
    #[serde(rename = "NO-AVEWAGE")]
    NoAvewage,
}

impl ModelSpec {
    /// Indices into [`CovariateVector`] used as regression columns.
    pub fn columns(&self) -> &'static [usize] {
        match self {
            ModelSpec::Full => &[1, 2, 3, 4, 5, 6, 7, 8, 9],
            ModelSpec::NoAvewage => &[3, 4, 5, 7, 8, 9],
        }
    }

    pub fn column_names(&self) -> Vec<&'static str> {
        self.columns().iter().map(|&j| CovariateVector::NAMES[j]).collect()
    }

    pub fn design(&self, x: &CovariateVector) -> Vec<f64> {
        self.columns().iter().map(|&j| x.0[j]).collect()
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSpec::Full => "FULL",
            ModelSpec::NoAvewage => "NO-AVEWAGE",
        })
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FULL" => Ok(ModelSpec::Full),
            "NO-AVEWAGE" | "NO_AVEWAGE" | "NOAVEWAGE" => Ok(ModelSpec::NoAvewage),
            _ => Err(Error::Config(format!("unknown model spec {s:?} (expected FULL or NO-AVEWAGE)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub min_leaf: usize,
    pub rel_tol: f64,
    pub bmsa_threshold: usize,
    pub winsor_pcts: (f64, f64),
    pub top_rule: f64,
    pub fit: FitOptions,
    pub robust_variance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_leaf: DEFAULT_MIN_LEAF,
            rel_tol: DEFAULT_REL_TOL,
            bmsa_threshold: DEFAULT_BMSA_THRESHOLD,
            winsor_pcts: DEFAULT_WINSOR_PCTS,
            top_rule: DEFAULT_TOP_RULE,
            fit: FitOptions::default(),
            robust_variance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub beta: f64,
    pub se: f64,
    pub robust_se: Option<f64>,
}

/// Everything needed to impute panels of one occupation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationModel {
    pub soc: String,
    pub spec: ModelSpec,
    pub config: PipelineConfig,
    pub coefficients: Vec<Coefficient>,
    pub winsor_cuts: WinsorCuts,
    pub bmsa: BTreeSet<String>,
    pub tree: IndustryTree,
    /// Whether the tree was grown on this fit's sample or supplied.
    pub tree_refit: bool,
    pub hazard: FittedHazardModel,
    pub notes: Vec<String>,
}

impl OccupationModel {
    pub fn covariates(&self, e: &EstablishmentRecord, p: &OccupationPanel) -> Result<CovariateVector> {
        build_covariates(e, p, &self.bmsa, self.winsor_cuts.apply(e.avewage()))
    }

    pub fn predict(&self, e: &EstablishmentRecord, p: &OccupationPanel) -> Result<[f64; N_INTERVALS]> {
        let x = self.covariates(e, p)?;
        Ok(self
            .hazard
            .predict_interval_probs(&self.spec.design(&x), self.tree.assign_class(e.naics)))
    }
}

/// Responding panels of `soc` with at least one employee.
fn fit_sample<'a>(ds: &'a Dataset, soc: &'a str) -> Vec<(usize, &'a EstablishmentRecord, &'a OccupationPanel)> {
    let index: HashMap<&str, usize> = ds.estab_index();
    ds.panels
        .iter()
        .filter(|p| p.soc == soc && p.total > 0)
        .filter_map(|p| {
            let &i = index.get(p.estab_id.as_str())?;
            let e = &ds.establishments[i];
            (e.responded && p.counts.is_some()).then_some((i, e, p))
        })
        .collect()
}

pub fn fit_occupation(
    ds: &Dataset,
    soc: &str,
    spec: ModelSpec,
    cfg: &PipelineConfig,
    fixed_tree: Option<&IndustryTree>,
) -> Result<OccupationModel> {
    let sample = fit_sample(ds, soc);
    if sample.is_empty() {
        return Err(Error::InvalidData(format!("no responding panels for occupation {soc}")));
    }
    let avewages: Vec<f64> = sample.iter().map(|(_, e, _)| e.avewage()).collect();
    let cuts = WinsorCuts::from_sample(&avewages, cfg.winsor_pcts.0, cfg.winsor_pcts.1)?;
    let bmsa = identify_bmsa(ds, soc, cfg.bmsa_threshold);

    let tree = match fixed_tree {
        Some(t) => t.clone(),
        None => {
            let pairs = sample
                .iter()
                .map(|(_, e, p)| {
                    let counts = p.counts.as_ref().expect("fit sample has counts");
                    Ok((e.naics, establishment_occ_mean(counts, &ds.grid, cfg.top_rule)?))
                })
                .collect::<Result<Vec<_>>>()?;
            fit_industry_tree(&pairs, cfg.min_leaf, cfg.rel_tol)?
        }
    };

    let mut rows = Vec::new();
    for &(i, e, p) in &sample {
        let x = build_covariates(e, p, &bmsa, cuts.apply(e.avewage()))?;
        let design = spec.design(&x);
        let stratum = tree.assign_class(e.naics);
        let counts = p.counts.as_ref().expect("fit sample has counts");
        for (l, &m) in counts.iter().enumerate() {
            if m > 0 {
                rows.push(SubjectRow {
                    event: (l + 1) as u8,
                    x: design.clone(),
                    stratum,
                    cluster: i,
                    multiplicity: m,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidData(format!("occupation {soc} has no employees in the fit sample")));
    }

    let names = spec.column_names();
    let hazard = hazard::fit(&rows, &cfg.fit).map_err(|err| match err {
        Error::SingularDesign(msg) => Error::SingularDesign(name_columns(&msg, &names)),
        other => other,
    })?;
    let robust = if cfg.robust_variance {
        let v = hazard::robust_cluster_variance(&hazard, &rows)?;
        Some((0..names.len()).map(|j| v[(j, j)].sqrt()).collect::<Vec<_>>())
    } else {
        None
    };
    let se = hazard.standard_errors();
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, n)| Coefficient {
            name: n.to_string(),
            beta: hazard.beta[j],
            se: se[j],
            robust_se: robust.as_ref().map(|r| r[j]),
        })
        .collect();

    let notes = vec![
        format!(
            "winsorization cuts from {} fit-sample establishments at ({}, {})",
            sample.len(),
            cfg.winsor_pcts.0,
            cfg.winsor_pcts.1
        ),
        format!(
            "industry tree: min_leaf {}, stop when SSE reduction <= {} x node SSE, {}",
            cfg.min_leaf,
            cfg.rel_tol,
            if fixed_tree.is_some() { "supplied" } else { "grown on fit sample" }
        ),
        "constant term absorbed into stratum baselines; baselines are hazards at the covariate mean".into(),
    ];

    Ok(OccupationModel {
        soc: soc.to_string(),
        spec,
        config: *cfg,
        coefficients,
        winsor_cuts: cuts,
        bmsa,
        tree,
        tree_refit: fixed_tree.is_none(),
        hazard,
        notes,
    })
}

fn name_columns(msg: &str, names: &[&str]) -> String {
    let mut out = msg.to_string();
    for (j, n) in names.iter().enumerate().rev() {
        out = out.replace(&format!("column {j}"), &format!("column {n}"));
    }
    out
}

/// Fitted models keyed by occupation, as stored in a model file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub models: std::collections::BTreeMap<String, OccupationModel>,
}

impl ModelBundle {
    /// Fit every listed occupation; the first failure aborts.
    pub fn fit(ds: &Dataset, socs: &[String], spec: ModelSpec, cfg: &PipelineConfig) -> Result<Self> {
        let models = socs
            .iter()
            .map(|soc| {
                fit_occupation(ds, soc, spec, cfg, None).map(|m| (soc.clone(), m)).map_err(|e| match e {
                    Error::SingularDesign(msg) => Error::SingularDesign(format!("{soc}: {msg}")),
                    other => other,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ModelBundle { models })
    }

    /// Later bundles override earlier ones for the same occupation.
    pub fn merge(bundles: impl IntoIterator<Item = ModelBundle>) -> Self {
        let mut out = ModelBundle::default();
        for b in bundles {
            out.models.extend(b.models);
        }
        out
    }
}
