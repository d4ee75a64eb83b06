use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wage_impute::domain::{validate_dataset, Dataset};
use wage_impute::estimators::{
    avewage_curve, domain_estimates, ecdf_by_avewage_tertile, DomainFilter, DomainReport, IndustryFilter,
    DEFAULT_TOP_RULE,
};
use wage_impute::imputer::{impute_dataset, neighbor_impute_dataset};
use wage_impute::io::{read_dataset, write_atomic, write_dataset, write_json};
use wage_impute::model::{ModelBundle, ModelSpec, PipelineConfig};
use wage_impute::preprocess::{DEFAULT_BMSA_THRESHOLD, DEFAULT_WINSOR_PCTS};
use wage_impute::simulator::{
    builtin_scenarios, run_replications, summarize_bias, write_replicates_csv, write_summary_csv,
    MissingnessScenario, SimulationConfig, TreeMode,
};
use wage_impute::synthgen::{generate_population, PopulationConfig};
use wage_impute::tree::{DEFAULT_MIN_LEAF, DEFAULT_REL_TOL};
use wage_impute::{Error, Result};

#[derive(Parser)]
#[command(name = "wage-impute", version, about = "Model-based imputation of establishment wage-interval data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a complete synthetic population.
    Synth(SynthArgs),
    /// Fit hazard models for one or more occupations.
    Fit(FitArgs),
    /// Fill in absent panels.
    Impute(ImputeArgs),
    /// Mean and percentile estimates for a completed dataset.
    Estimate(EstimateArgs),
    /// Missingness simulation comparing model specifications.
    Simulate(SimulateArgs),
    /// Occupational mean versus AVEWAGE curves and AVEWAGE-tertile ECDFs.
    Curve(CurveArgs),
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, default_value_t = DEFAULT_MIN_LEAF)]
    min_leaf: usize,
    #[arg(long, default_value_t = DEFAULT_BMSA_THRESHOLD)]
    bmsa_threshold: usize,
    /// Lower and upper winsorization quantiles, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [DEFAULT_WINSOR_PCTS.0, DEFAULT_WINSOR_PCTS.1])]
    winsor_pcts: Vec<f64>,
    /// Multiplier on the open top interval's lower bound.
    #[arg(long, default_value_t = DEFAULT_TOP_RULE)]
    top_rule: f64,
}

impl PipelineArgs {
    fn config(&self, robust_variance: bool) -> Result<PipelineConfig> {
        let (lo, hi) = (self.winsor_pcts[0], self.winsor_pcts[1]);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Config(format!("--winsor-pcts {lo},{hi} must satisfy 0 <= lo <= hi <= 1")));
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("--min-leaf must be at least 1".into()));
        }
        if !(self.top_rule >= 1.0 && self.top_rule.is_finite()) {
            return Err(Error::Config("--top-rule must be a finite multiplier >= 1".into()));
        }
        Ok(PipelineConfig {
            min_leaf: self.min_leaf,
            rel_tol: DEFAULT_REL_TOL,
            bmsa_threshold: self.bmsa_threshold,
            winsor_pcts: (lo, hi),
            top_rule: self.top_rule,
            robust_variance,
            ..PipelineConfig::default()
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    /// JSON population config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    n_establishments: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Occupation to fit; repeat for several. Defaults to every occupation.
    #[arg(long)]
    soc: Vec<String>,
    #[arg(long, default_value = "FULL")]
    model_spec: ModelSpec,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Skip the cluster-robust variance.
    #[arg(long)]
    no_robust: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Model,
    Neighbor,
}

#[derive(Args)]
struct ImputeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model file from `fit`; repeat to combine occupations.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "model")]
    method: Method,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    soc: String,
    /// Restrict to NAICS codes starting with any of these prefixes.
    #[arg(long, value_delimiter = ',')]
    naics: Vec<String>,
    /// Restrict to industry classes of the occupation's tree (needs --model).
    #[arg(long, value_delimiter = ',')]
    class: Vec<u32>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Restrict to these MSAs.
    #[arg(long, value_delimiter = ',')]
    msa: Vec<String>,
    /// Domain label for the filtered row.
    #[arg(long, default_value = "domain")]
    label: String,
    /// Report annual instead of hourly wages.
    #[arg(long)]
    annual: bool,
    #[arg(long, default_value_t = DEFAULT_TOP_RULE)]
    top_rule: f64,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecChoice {
    #[value(name = "FULL")]
    Full,
    #[value(name = "NO-AVEWAGE")]
    NoAvewage,
    #[value(name = "both")]
    Both,
}

#[derive(Args)]
struct SimulateArgs {
    /// Complete population directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    soc: String,
    /// MAR1, MAR2, NINR, all, or a JSON file with `alpha` and `target_rate`.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, value_enum, default_value = "both")]
    model_spec: SpecChoice,
    #[arg(long, default_value_t = 250)]
    replications: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Recalibrate intercepts to this expected nonresponse rate.
    #[arg(long)]
    target_rate: Option<f64>,
    /// Grow the industry tree once on the complete population.
    #[arg(long)]
    fixed_tree: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    soc: String,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOP_RULE)]
    top_rule: f64,
    /// Output directory for curve.csv and ecdf.csv.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SingularDesign(_) | Error::Nonconvergence { .. } | Error::NumericOverflow => 3,
        Error::ModelUnavailable(_) | Error::NoDonors(_) => 4,
        Error::EmptyDomain | Error::ZeroEmployees => 5,
        Error::NoResults => 6,
        _ => 2,
    }
}

fn load_valid(dir: &Path) -> Result<Dataset> {
    let ds = read_dataset(dir)?;
    let violations = validate_dataset(&ds);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidData(format!("{} violation(s), first: {v}", violations.len())));
    }
    Ok(ds)
}

fn load_models(paths: &[PathBuf]) -> Result<ModelBundle> {
    let bundles = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            Ok(serde_json::from_str::<ModelBundle>(&text)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelBundle::merge(bundles))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg: PopulationConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => PopulationConfig::default(),
    };
    if let Some(n) = a.n_establishments {
        cfg.n_establishments = n;
    }
    let pop = generate_population(&cfg, a.seed)?;
    write_dataset(&a.out, &pop.dataset)?;
    write_json(&a.out.join("params.json"), &pop.params)
}

fn fit(a: FitArgs) -> Result<()> {
    let ds = load_valid(&a.data)?;
    let cfg = a.pipeline.config(!a.no_robust)?;
    let socs: Vec<String> = if a.soc.is_empty() { ds.socs().into_iter().map(String::from).collect() } else { a.soc };
    let bundle = ModelBundle::fit(&ds, &socs, a.model_spec, &cfg)?;
    write_json(&a.out, &bundle)?;
    for (soc, m) in &bundle.models {
        eprintln!(
            "{soc}: {} classes, {} iterations, converged {}",
            m.tree.n_leaves(),
            m.hazard.report.iterations,
            m.hazard.report.converged
        );
    }
    Ok(())
}

fn impute(a: ImputeArgs) -> Result<()> {
    let ds = load_valid(&a.data)?;
    let bundle = load_models(&a.models)?;
    let completed = match a.method {
        Method::Model => impute_dataset(&ds, &bundle.models, a.seed)?,
        Method::Neighbor => neighbor_impute_dataset(&ds, |soc, naics| match bundle.models.get(soc) {
            Some(m) => m.tree.assign_class(naics),
            // three-digit NAICS subsector when no tree is available
            None => naics / 1000,
        })?,
    };
    write_dataset(&a.out, &completed)
}

fn report_csv(rows: &[DomainReport]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let ds = load_valid(&a.data)?;
    let industry = match (a.class.is_empty(), a.naics.is_empty()) {
        (false, false) => return Err(Error::Config("use either --class or --naics, not both".into())),
        (false, true) => {
            let path = a.model.as_ref().ok_or_else(|| Error::Config("--class needs --model".into()))?;
            let bundle = load_models(std::slice::from_ref(path))?;
            let m = bundle.models.get(&a.soc).ok_or_else(|| Error::ModelUnavailable(a.soc.clone()))?;
            Some(IndustryFilter::Classes { tree: m.tree.clone(), classes: a.class.iter().copied().collect() })
        }
        (true, false) => Some(IndustryFilter::NaicsPrefixes(a.naics.clone())),
        (true, true) => None,
    };
    let msas = (!a.msa.is_empty()).then(|| a.msa.iter().cloned().collect::<BTreeSet<_>>());
    let mut rows = vec![domain_estimates(&ds, &a.soc, &DomainFilter::overall(), a.top_rule)?];
    if industry.is_some() || msas.is_some() {
        let filter = DomainFilter { label: a.label.clone(), industry, msas };
        rows.push(domain_estimates(&ds, &a.soc, &filter, a.top_rule)?);
    }
    if a.annual {
        rows = rows.into_iter().map(DomainReport::annualized).collect();
    }
    write_atomic(&a.out, &report_csv(&rows)?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let population = load_valid(&a.data)?;
    let builtin = builtin_scenarios();
    let mut scenarios: Vec<(String, MissingnessScenario)> = match a.scenario.as_str() {
        "all" => builtin.iter().map(|(n, s)| (n.to_string(), *s)).collect(),
        name if builtin.contains_key(name) => vec![(name.to_string(), builtin[name])],
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("unknown scenario {path:?} and cannot read it as a file: {e}")))?;
            let sc: MissingnessScenario =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
            let name = Path::new(path).file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned());
            vec![(name, sc)]
        }
    };
    if let Some(t) = a.target_rate {
        for (_, s) in &mut scenarios {
            s.target_rate = Some(t);
        }
    }
    let specs: &[ModelSpec] = match a.model_spec {
        SpecChoice::Full => &[ModelSpec::Full],
        SpecChoice::NoAvewage => &[ModelSpec::NoAvewage],
        SpecChoice::Both => &[ModelSpec::Full, ModelSpec::NoAvewage],
    };
    let pipeline = a.pipeline.config(false)?;
    let tree_mode = if a.fixed_tree { TreeMode::FixedFromPopulation } else { TreeMode::RefitPerReplicate };

    let mut replicates = Vec::new();
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (name, scenario) in &scenarios {
        for &spec in specs {
            let cfg = SimulationConfig {
                scenario_name: name.clone(),
                scenario: *scenario,
                spec,
                replications: a.replications,
                master_seed: a.seed,
                pipeline,
                tree_mode,
            };
            let results = run_replications(&population, &a.soc, &cfg)?;
            write_replicates_csv(&mut replicates, name, spec, &results)?;
            let failed = results.iter().filter(|r| !r.ok()).count();
            failures.push(serde_json::json!({ "scenario": name, "spec": spec, "failed": failed }));
            summaries.extend(summarize_bias(name, spec, &results)?);
        }
    }
    fs::create_dir_all(&a.out)?;
    write_atomic(&a.out.join("replicates.csv"), &dedupe_headers(&replicates))?;
    let mut summary = Vec::new();
    write_summary_csv(&mut summary, &summaries)?;
    write_atomic(&a.out.join("summary.csv"), &summary)?;
    write_json(
        &a.out.join("run.json"),
        &serde_json::json!({
            "soc": a.soc,
            "replications": a.replications,
            "seed": a.seed,
            "tree_mode": tree_mode,
            "scenarios": scenarios.iter().map(|(n, s)| serde_json::json!({ "name": n, "scenario": s })).collect::<Vec<_>>(),
            "failures": failures,
            "pipeline": pipeline,
        }),
    )
}

/// Concatenated per-cell CSVs repeat the header; keep the first.
fn dedupe_headers(bytes: &[u8]) -> Vec<u8> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return Vec::new() };
    let mut out = String::from(header);
    out.push('\n');
    for l in lines.filter(|l| *l != header) {
        out.push_str(l);
        out.push('\n');
    }
    out.into_bytes()
}

fn curve(a: CurveArgs) -> Result<()> {
    let ds = load_valid(&a.data)?;
    let bundle = load_models(std::slice::from_ref(&a.model))?;
    let tree = &bundle.models.get(&a.soc).ok_or_else(|| Error::ModelUnavailable(a.soc.clone()))?.tree;
    let model_ds = impute_dataset(&ds, &bundle.models, a.seed)?;
    let neighbor_ds = neighbor_impute_dataset(&ds, |soc, naics| {
        if soc == a.soc {
            tree.assign_class(naics)
        } else {
            naics / 1000
        }
    })?;
    let points = avewage_curve(&model_ds, &neighbor_ds, &a.soc, a.bins, a.top_rule)?;
    fs::create_dir_all(&a.out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &points {
        w.serialize(p)?;
    }
    write_atomic(&a.out.join("curve.csv"), &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;

    let ecdf = ecdf_by_avewage_tertile(&ds, &a.soc)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tertile", "interval", "ecdf"])?;
    for (t, row) in ecdf.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            w.write_record([(t + 1).to_string(), (l + 1).to_string(), v.to_string()])?;
        }
    }
    write_atomic(&a.out.join("ecdf.csv"), &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("IMPUTE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("IMPUTE_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<()> {
        init_threads()?;
        match cli.command {
            Command::Synth(a) => synth(a),
            Command::Fit(a) => fit(a),
            Command::Impute(a) => impute(a),
            Command::Estimate(a) => estimate(a),
            Command::Simulate(a) => simulate(a),
            Command::Curve(a) => curve(a),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
