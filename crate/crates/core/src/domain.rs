//! Core data types shared by every stage of the pipeline.
//!
//! A [`Dataset`] holds one national [`WageGrid`], the establishment frame and
//! the per-occupation wage-interval panels. Nonrespondent panels carry their
//! employee total but no counts until an imputer fills them in.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of ordered wage intervals collected per occupation.
pub const N_INTERVALS: usize = 12;

/// Per-interval employee counts for one establishment-occupation cell.
pub type Counts = [u32; N_INTERVALS];

/// Twelve contiguous hourly-wage intervals `[a_l, a_{l+1})`; the last one is
/// open above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WageGrid {
    pub lower: [f64; N_INTERVALS],
}

impl WageGrid {
    pub fn new(lower: [f64; N_INTERVALS]) -> Result<Self> {
        let grid = WageGrid { lower };
        match grid.violations().first() {
            None => Ok(grid),
            Some(rule) => Err(Error::InvalidData(format!("wage grid: {rule}"))),
        }
    }

    /// Lower bound of interval `l` (0-based).
    pub fn lower_bound(&self, l: usize) -> f64 {
        self.lower[l]
    }

    /// Upper bound of interval `l` (0-based); `None` for the open top interval.
    pub fn upper_bound(&self, l: usize) -> Option<f64> {
        (l + 1 < N_INTERVALS).then(|| self.lower[l + 1])
    }

    /// Index of the interval containing an hourly wage. Wages below `a_1`
    /// fall in the first interval.
    pub fn interval_of(&self, hourly: f64) -> usize {
        self.lower[1..].partition_point(|&a| a <= hourly)
    }

    fn violations(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        if self.lower.iter().any(|a| !a.is_finite()) {
            out.push(Rule::GridNotFinite);
        } else {
            if self.lower[0] <= 0.0 {
                out.push(Rule::GridFirstBoundNotPositive);
            }
            if self.lower.windows(2).any(|w| w[1] <= w[0]) {
                out.push(Rule::GridNotIncreasing);
            }
        }
        out
    }
}

impl Default for WageGrid {
    /// Interval bounds patterned on the published survey ranges; not an
    /// official production grid.
    fn default() -> Self {
        WageGrid {
            lower: [
                6.35, 7.50, 9.50, 12.00, 15.25, 19.25, 24.50, 31.00, 39.25, 49.75, 63.25, 80.00,
            ],
        }
    }
}

/// Frame record for one establishment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstablishmentRecord {
    pub estab_id: String,
    /// Average monthly employment over the quarter.
    pub empl: f64,
    /// Total wages paid in the quarter, dollars.
    pub wage: f64,
    pub naics: u32,
    pub msa: String,
    pub msacatt6: bool,
    pub multi: bool,
    pub weight: f64,
    pub responded: bool,
}

impl EstablishmentRecord {
    /// Quarterly wage per employee.
    pub fn avewage(&self) -> f64 {
        self.wage / self.empl
    }
}

/// Where a panel's counts came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    ModelImputed,
    NeighborImputed,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Observed => "observed",
            Provenance::ModelImputed => "model_imputed",
            Provenance::NeighborImputed => "neighbor_imputed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "observed" => Some(Provenance::Observed),
            "model_imputed" => Some(Provenance::ModelImputed),
            "neighbor_imputed" => Some(Provenance::NeighborImputed),
            _ => None,
        }
    }
}

/// Wage-interval counts for one occupation at one establishment.
///
/// `counts == None` marks a nonrespondent cell whose distribution is unknown;
/// an all-zero vector is valid observed data and is kept distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationPanel {
    pub estab_id: String,
    pub soc: String,
    pub total: u32,
    pub counts: Option<Counts>,
    pub provenance: Provenance,
}

impl OccupationPanel {
    pub fn observed(estab_id: impl Into<String>, soc: impl Into<String>, counts: Counts) -> Self {
        OccupationPanel {
            estab_id: estab_id.into(),
            soc: soc.into(),
            total: counts.iter().sum(),
            counts: Some(counts),
            provenance: Provenance::Observed,
        }
    }

    pub fn absent(estab_id: impl Into<String>, soc: impl Into<String>, total: u32) -> Self {
        OccupationPanel {
            estab_id: estab_id.into(),
            soc: soc.into(),
            total,
            counts: None,
            provenance: Provenance::Observed,
        }
    }

    pub fn is_absent(&self) -> bool {
        self.counts.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub grid: WageGrid,
    pub establishments: Vec<EstablishmentRecord>,
    pub panels: Vec<OccupationPanel>,
}

impl Dataset {
    /// Map from establishment id to its index in `establishments`.
    pub fn estab_index(&self) -> HashMap<&str, usize> {
        self.establishments
            .iter()
            .enumerate()
            .map(|(i, e)| (e.estab_id.as_str(), i))
            .collect()
    }

    /// Distinct occupation codes, sorted.
    pub fn socs(&self) -> BTreeSet<&str> {
        self.panels.iter().map(|p| p.soc.as_str()).collect()
    }

    /// Panels for `soc` paired with their establishment, in panel order.
    /// Panels whose establishment is unknown are skipped.
    pub fn panels_for<'a>(
        &'a self,
        soc: &'a str,
    ) -> impl Iterator<Item = (&'a EstablishmentRecord, &'a OccupationPanel)> + 'a {
        let index = self.estab_index();
        self.panels
            .iter()
            .filter(move |p| p.soc == soc)
            .filter_map(move |p| index.get(p.estab_id.as_str()).map(|&i| (&self.establishments[i], p)))
    }

    /// The responding subset of establishments.
    pub fn respondents(&self) -> impl Iterator<Item = &EstablishmentRecord> {
        self.establishments.iter().filter(|e| e.responded)
    }
}

/// A broken invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    GridNotFinite,
    GridFirstBoundNotPositive,
    GridNotIncreasing,
    DuplicateEstablishment,
    EmploymentNotPositive,
    WageNegative,
    WeightNotPositive,
    UnknownEstablishment,
    DuplicatePanel,
    CountsDoNotSumToTotal,
    RespondentPanelAbsent,
    NonrespondentPanelObserved,
    ImputedProvenanceWithoutCounts,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::GridNotFinite => "grid bounds must be finite",
            Rule::GridFirstBoundNotPositive => "a_1 must be positive",
            Rule::GridNotIncreasing => "lower bounds must be strictly increasing",
            Rule::DuplicateEstablishment => "estab_id must be unique",
            Rule::EmploymentNotPositive => "empl must be positive and finite",
            Rule::WageNegative => "wage must be nonnegative and finite",
            Rule::WeightNotPositive => "weight must be positive and finite",
            Rule::UnknownEstablishment => "panel references an unknown estab_id",
            Rule::DuplicatePanel => "at most one panel per (estab_id, soc)",
            Rule::CountsDoNotSumToTotal => "counts must sum to total",
            Rule::RespondentPanelAbsent => "responding establishment has absent counts",
            Rule::NonrespondentPanelObserved => {
                "nonresponding establishment has counts marked observed"
            }
            Rule::ImputedProvenanceWithoutCounts => "imputed provenance requires counts",
        };
        f.write_str(s)
    }
}

/// The record a violation refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Subject {
    Grid,
    Establishment(String),
    Panel { estab_id: String, soc: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub subject: Subject,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subject {
            Subject::Grid => write!(f, "grid: {}", self.rule),
            Subject::Establishment(id) => write!(f, "establishment {id}: {}", self.rule),
            Subject::Panel { estab_id, soc } => {
                write!(f, "panel {estab_id}/{soc}: {}", self.rule)
            }
        }
    }
}

/// Every broken invariant in `ds`, in record order. Empty iff the dataset is
/// well formed.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    let mut out: Vec<Violation> = ds
        .grid
        .violations()
        .into_iter()
        .map(|rule| Violation { subject: Subject::Grid, rule })
        .collect();

    let mut responded: HashMap<&str, bool> = HashMap::new();
    for e in &ds.establishments {
        let mut flag = |rule| {
            out.push(Violation {
                subject: Subject::Establishment(e.estab_id.clone()),
                rule,
            })
        };
        if responded.insert(e.estab_id.as_str(), e.responded).is_some() {
            flag(Rule::DuplicateEstablishment);
        }
        if !(e.empl.is_finite() && e.empl > 0.0) {
            flag(Rule::EmploymentNotPositive);
        }
        if !(e.wage.is_finite() && e.wage >= 0.0) {
            flag(Rule::WageNegative);
        }
        if !(e.weight.is_finite() && e.weight > 0.0) {
            flag(Rule::WeightNotPositive);
        }
    }

    let mut seen: BTreeMap<(&str, &str), ()> = BTreeMap::new();
    for p in &ds.panels {
        let mut flag = |rule| {
            out.push(Violation {
                subject: Subject::Panel {
                    estab_id: p.estab_id.clone(),
                    soc: p.soc.clone(),
                },
                rule,
            })
        };
        if seen.insert((p.estab_id.as_str(), p.soc.as_str()), ()).is_some() {
            flag(Rule::DuplicatePanel);
        }
        if let Some(c) = &p.counts {
            if c.iter().map(|&x| u64::from(x)).sum::<u64>() != u64::from(p.total) {
                flag(Rule::CountsDoNotSumToTotal);
            }
        } else if p.provenance != Provenance::Observed {
            flag(Rule::ImputedProvenanceWithoutCounts);
        }
        match responded.get(p.estab_id.as_str()) {
            None => flag(Rule::UnknownEstablishment),
            Some(true) if p.counts.is_none() => flag(Rule::RespondentPanelAbsent),
            Some(false) if p.counts.is_some() && p.provenance == Provenance::Observed => {
                flag(Rule::NonrespondentPanelObserved)
            }
            _ => {}
        }
    }
    out
}
