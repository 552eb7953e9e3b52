//! Solve, round `R` times, evaluate, and report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{certify_constants, certify_instance, InstanceAuditConfig};
use crate::energy::{total_energy, EnergyMode};
use crate::error::{Error, Result};
use crate::graph::{generate, parse_graph, GeneratorSpec, Graph, GraphFormat};
use crate::oracle::{exact_opt, expectation, simulate, DEFAULT_SIM_LIMIT};
use crate::par::{map_indexed, mean_stderr};
use crate::rounding::{build_circuit, compute_gammas, derive_seed, sample_assignment, EdgeParameters, DEFAULT_ALPHA0};
use crate::sdp::{solve_graph, SolverConfig, SolverResiduals};

pub const REPORT_SCHEMA: &str = "qmc-report/1";
pub const SEED_DERIVATION: &str = "splitmix64(master + (k + 1) * 0x9e3779b97f4a7c15)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    File(PathBuf),
    Generator { spec: GeneratorSpec, seed: u64 },
    /// Already in memory; `label` names it in reports.
    Inline { label: String, graph: GraphData },
}

/// Plain edge data for [`InputSource::Inline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphData {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl From<&Graph> for GraphData {
    fn from(g: &Graph) -> Self {
        Self { n: g.n(), edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect() }
    }
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSource::File(p) => write!(f, "{}", p.display()),
            InputSource::Generator { spec, seed } => write!(f, "{spec}@{seed}"),
            InputSource::Inline { label, .. } => f.write_str(label),
        }
    }
}

/// Format from the extension: `.json` is JSON, anything else an edge list.
pub fn format_for_path(path: &Path) -> GraphFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => GraphFormat::Json,
        _ => GraphFormat::EdgeList,
    }
}

pub fn load_graph(source: &InputSource) -> Result<Graph> {
    match source {
        InputSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_graph(&text, format_for_path(path))
        }
        InputSource::Generator { spec, seed } => generate(spec, *seed),
        InputSource::Inline { graph, .. } => Graph::new(graph.n, graph.edges.iter().copied()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: InputSource,
    pub rounds: usize,
    /// Required in deterministic mode; drawn from the OS otherwise.
    pub seed: Option<u64>,
    pub alpha0: f64,
    pub solver: SolverConfig,
    pub sim_limit: usize,
    pub certify: bool,
    /// Omit wall-clock timings so identical configs give identical bytes.
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(source: InputSource) -> Self {
        Self {
            source,
            rounds: 1000,
            seed: None,
            alpha0: DEFAULT_ALPHA0,
            solver: SolverConfig::default(),
            sim_limit: DEFAULT_SIM_LIMIT,
            certify: false,
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be at least 1".into()));
        }
        if self.deterministic && self.seed.is_none() {
            return Err(Error::InvalidArgument("deterministic mode needs an explicit seed".into()));
        }
        if !(self.alpha0 >= 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha0 must be finite and nonnegative, got {}", self.alpha0)));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySource {
    /// `<psi|H|psi>` from the statevector.
    Statevector,
    /// Closed form on cut edges, zero on uncut edges: a lower bound.
    ExactWhereCutLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub source: String,
    pub n: usize,
    pub edges: usize,
    pub total_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSummary {
    pub objective: f64,
    pub residuals: SolverResiduals,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSample {
    pub index: usize,
    pub seed: u64,
    pub a: u8,
    pub z: String,
    pub theta: BTreeMap<String, f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub mean_over_sdp: f64,
    pub best_over_sdp: f64,
    pub mean_over_opt: Option<f64>,
    pub best_over_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub ratio_constant: f64,
    pub alpha_gw: f64,
    pub monogamy_worst_slack: Option<f64>,
    pub all_passed: bool,
    pub failed: Vec<String>,
}

/// Milliseconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_ms: f64,
    pub solve_ms: f64,
    pub round_ms: f64,
    pub exact_ms: f64,
    pub certify_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub graph: GraphSummary,
    pub alpha0: f64,
    pub rounds: usize,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub energy_source: EnergySource,
    pub selection: String,
    pub sdp: SdpSummary,
    pub opt: Option<f64>,
    pub mean_energy: f64,
    pub stderr: f64,
    pub best: BestSample,
    pub ratios: Ratios,
    pub certificate: Option<CertificateSummary>,
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Emitted in place of a report when a stage fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub schema: String,
    pub stage: String,
    pub error: String,
    pub residuals: Option<SolverResiduals>,
}

impl FailureReport {
    pub fn from_error(stage: &str, err: &Error) -> Self {
        let residuals = match err {
            Error::NotConverged { residuals } => Some(*residuals),
            _ => None,
        };
        Self { schema: REPORT_SCHEMA.into(), stage: stage.into(), error: err.to_string(), residuals }
    }
}

/// A pipeline error tagged with the stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl StageError {
    pub fn report(&self) -> FailureReport {
        FailureReport::from_error(self.stage, &self.error)
    }
}

fn at(stage: &'static str) -> impl Fn(Error) -> StageError {
    move |error| StageError { stage, error }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, StageError> {
    cfg.validate().map_err(at("config"))?;
    let master_seed = cfg.seed.unwrap_or_else(rand::random);
    let t_total = Instant::now();

    let t = Instant::now();
    let g = load_graph(&cfg.source).map_err(at("input"))?;
    let load_ms = elapsed_ms(t);

    let t = Instant::now();
    let (model, vs) = solve_graph(&g, &cfg.solver).map_err(at("sdp"))?;
    let gammas = compute_gammas(&vs, &g, 10.0 * cfg.solver.eps_extract).map_err(at("sdp"))?;
    let params = EdgeParameters::from_gammas(gammas, cfg.alpha0);
    let sdp_objective = crate::sdp::objective_value(&model, &vs);
    let solve_ms = elapsed_ms(t);

    let t = Instant::now();
    let statevector = g.n() <= cfg.sim_limit;
    let energies: Vec<Result<f64>> = map_indexed(cfg.rounds, |k| {
        let assign = sample_assignment(&vs, derive_seed(master_seed, k as u64));
        if statevector {
            let psi = simulate(&build_circuit(&assign, &params, &g)?, cfg.sim_limit)?;
            Ok(expectation(&psi, &g))
        } else {
            let report = total_energy(&params, &assign, &g, EnergyMode::ExactWhereCut)?;
            Ok(report.exact_total.unwrap_or(report.bound_total))
        }
    });
    let energies = energies.into_iter().collect::<Result<Vec<_>>>().map_err(at("round"))?;
    // First index wins ties, so the choice does not depend on scheduling.
    let best_index = energies
        .iter()
        .enumerate()
        .fold(0, |best, (k, &e)| if e > energies[best] { k } else { best });
    let best_seed = derive_seed(master_seed, best_index as u64);
    let best_assign = sample_assignment(&vs, best_seed);
    let outcome = crate::rounding::RoundingOutcome::new(&best_assign, &params, &g);
    let (mean_energy, stderr) = mean_stderr(&energies);
    let round_ms = elapsed_ms(t);

    let t = Instant::now();
    let opt = if statevector { Some(exact_opt(&g, cfg.sim_limit).map_err(at("exact"))?.lambda_max) } else { None };
    let exact_ms = elapsed_ms(t);

    let t = Instant::now();
    let certificate = if cfg.certify {
        let mut cert = certify_constants(cfg.alpha0, false);
        let audit = InstanceAuditConfig {
            eps_extract: cfg.solver.eps_extract,
            seed: master_seed,
            sim_limit: cfg.sim_limit,
            ..InstanceAuditConfig::default()
        };
        certify_instance(&mut cert, &vs, &g, &params, &audit).map_err(at("certify"))?;
        Some(CertificateSummary {
            ratio_constant: cert.ratio_constant,
            alpha_gw: cert.alpha_gw,
            monogamy_worst_slack: cert.monogamy_worst_slack,
            all_passed: cert.all_passed(),
            failed: cert.failed().map(|a| a.name.clone()).collect(),
        })
    } else {
        None
    };
    let certify_ms = elapsed_ms(t);

    let best_energy = energies[best_index];
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::NAN };
    let ratios = Ratios {
        mean_over_sdp: ratio(mean_energy, sdp_objective),
        best_over_sdp: ratio(best_energy, sdp_objective),
        mean_over_opt: opt.map(|o| ratio(mean_energy, o)),
        best_over_opt: opt.map(|o| ratio(best_energy, o)),
    };
    let (energy_source, selection) = if statevector {
        (EnergySource::Statevector, "max statevector energy, first index on ties")
    } else {
        (EnergySource::ExactWhereCutLowerBound, "max certified lower bound, first index on ties")
    };
    let timings = (!cfg.deterministic).then(|| Timings {
        load_ms,
        solve_ms,
        round_ms,
        exact_ms,
        certify_ms,
        total_ms: elapsed_ms(t_total),
    });

    Ok(RunReport {
        schema: REPORT_SCHEMA.into(),
        graph: GraphSummary {
            source: cfg.source.to_string(),
            n: g.n(),
            edges: g.edge_count(),
            total_weight: g.total_weight(),
        },
        alpha0: cfg.alpha0,
        rounds: cfg.rounds,
        master_seed,
        seed_derivation: SEED_DERIVATION.into(),
        energy_source,
        selection: selection.into(),
        sdp: SdpSummary {
            objective: sdp_objective,
            residuals: vs.residuals,
            reconstruction_error: vs.reconstruction_error,
        },
        opt,
        mean_energy,
        stderr,
        best: BestSample {
            index: best_index,
            seed: best_seed,
            a: outcome.a,
            z: outcome.z,
            theta: outcome.theta,
            energy: best_energy,
        },
        ratios,
        certificate,
        timings,
    })
}

/// One suite entry: `spec@seed`, seed defaulting to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchInstance {
    pub spec: GeneratorSpec,
    pub seed: u64,
}

impl FromStr for BenchInstance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (spec, seed) = match s.trim().rsplit_once('@') {
            Some((spec, seed)) => (
                spec,
                seed.trim()
                    .parse()
                    .map_err(|_| Error::InvalidGenerator(format!("bad seed {seed:?} in {s:?}")))?,
            ),
            None => (s.trim(), 0),
        };
        Ok(Self { spec: spec.parse()?, seed })
    }
}

impl fmt::Display for BenchInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.spec, self.seed)
    }
}

/// Parses a suite file: one instance per line, `#` comments.
pub fn parse_suite(text: &str) -> Result<Vec<BenchInstance>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: Option<usize>,
    pub edges: Option<usize>,
    pub opt_sdp: Option<f64>,
    pub opt: Option<f64>,
    pub mean_energy: Option<f64>,
    pub stderr: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub best_ratio: Option<f64>,
    pub mean_ratio_opt: Option<f64>,
    pub best_ratio_opt: Option<f64>,
    pub solve_ms: Option<f64>,
    pub round_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub error: Option<String>,
}

impl BenchRow {
    fn failed(instance: String, err: &StageError) -> Self {
        Self {
            instance,
            n: None,
            edges: None,
            opt_sdp: None,
            opt: None,
            mean_energy: None,
            stderr: None,
            mean_ratio: None,
            best_ratio: None,
            mean_ratio_opt: None,
            best_ratio_opt: None,
            solve_ms: None,
            round_ms: None,
            total_ms: None,
            error: Some(format!("{}: {}", err.stage, err.error)),
        }
    }

    fn from_report(instance: String, r: &RunReport) -> Self {
        Self {
            instance,
            n: Some(r.graph.n),
            edges: Some(r.graph.edges),
            opt_sdp: Some(r.sdp.objective),
            opt: r.opt,
            mean_energy: Some(r.mean_energy),
            stderr: Some(r.stderr),
            mean_ratio: Some(r.ratios.mean_over_sdp),
            best_ratio: Some(r.ratios.best_over_sdp),
            mean_ratio_opt: r.ratios.mean_over_opt,
            best_ratio_opt: r.ratios.best_over_opt,
            solve_ms: r.timings.map(|t| t.solve_ms),
            round_ms: r.timings.map(|t| t.round_ms),
            total_ms: r.timings.map(|t| t.total_ms),
            error: None,
        }
    }
}

/// Runs each instance with `template`'s settings; failures become rows.
pub fn bench(suite: &[BenchInstance], template: &RunConfig) -> Vec<BenchRow> {
    suite
        .iter()
        .map(|inst| {
            let cfg = RunConfig {
                source: InputSource::Generator { spec: inst.spec.clone(), seed: inst.seed },
                ..template.clone()
            };
            match run_pipeline(&cfg) {
                Ok(report) => BenchRow::from_report(inst.to_string(), &report),
                Err(err) => BenchRow::failed(inst.to_string(), &err),
            }
        })
        .collect()
}

pub const BENCH_COLUMNS: [&str; 15] = [
    "instance",
    "n",
    "edges",
    "opt_sdp",
    "opt",
    "mean_energy",
    "stderr",
    "mean_ratio",
    "best_ratio",
    "mean_ratio_opt",
    "best_ratio_opt",
    "solve_ms",
    "round_ms",
    "total_ms",
    "error",
];

pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Written by hand so an empty table still has its header.
    w.write_record(BENCH_COLUMNS)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
    let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.instance.clone(),
            int(r.n),
            int(r.edges),
            num(r.opt_sdp),
            num(r.opt),
            num(r.mean_energy),
            num(r.stderr),
            num(r.mean_ratio),
            num(r.best_ratio),
            num(r.mean_ratio_opt),
            num(r.best_ratio_opt),
            num(r.solve_ms),
            num(r.round_ms),
            num(r.total_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn config(kind: GraphKind, size: usize, rounds: usize) -> RunConfig {
        let mut cfg = RunConfig::new(InputSource::Generator { spec: GeneratorSpec::new(kind, size), seed: 0 });
        cfg.rounds = rounds;
        cfg.seed = Some(7);
        cfg.deterministic = true;
        cfg
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(GraphKind::Complete, 2, 0);
        assert!(matches!(run_pipeline(&cfg), Err(StageError { stage: "config", .. })));
        cfg.rounds = 1;
        cfg.seed = None;
        assert!(run_pipeline(&cfg).is_err());
    }

    #[test]
    fn single_edge_report() {
        let report = run_pipeline(&config(GraphKind::Complete, 2, 50)).unwrap();
        assert_eq!(report.schema, REPORT_SCHEMA);
        assert_eq!(report.energy_source, EnergySource::Statevector);
        assert!((report.sdp.objective - 1.0).abs() < 1e-5);
        assert_eq!(report.opt, Some(1.0));
        assert!(report.timings.is_none());
        // K2 is always cut; every sample has the same energy
        assert!(report.stderr < 1e-12);
        assert!(report.best.energy >= report.mean_energy - 1e-12);
    }

    #[test]
    fn suite_parsing() {
        let suite = parse_suite("complete:3\n# comment\npath:3@5 # trailing\n").unwrap();
        assert_eq!(suite.len(), 2);
        assert_eq!(suite[1].seed, 5);
        assert!(parse_suite("complete:3@x").is_err());
    }

    #[test]
    fn empty_bench_is_header_only() {
        let csv = bench_csv(&[]).unwrap();
        assert_eq!(csv, BENCH_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn failed_instance_becomes_row() {
        let suite: Vec<BenchInstance> = vec!["cycle:2@0".parse().unwrap(), "complete:2@0".parse().unwrap()];
        let rows = bench(&suite, &config(GraphKind::Complete, 2, 10));
        assert!(rows[0].error.as_deref().unwrap().starts_with("input"));
        assert!(rows[1].error.is_none());
    }
}
