use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qmc_core::certify::{certify_constants, certify_instance, InstanceAuditConfig};
use qmc_core::energy::{total_energy, EnergyMode};
use qmc_core::oracle::{exact_opt, expectation, simulate, DEFAULT_SIM_LIMIT};
use qmc_core::pipeline::{
    bench, bench_csv, load_graph, parse_suite, run_pipeline, BenchInstance, InputSource, RunConfig, StageError,
};
use qmc_core::rounding::{
    build_circuit, compute_gammas, sample_assignment, EdgeParameters, RoundingOutcome, DEFAULT_ALPHA0,
};
use qmc_core::sdp::{build_model, extract_vectors, objective_value, solve, SolverConfig, SolverResiduals, VectorSolution};
use qmc_core::{Error, Graph};

const EXIT_SOLVER: u8 = 2;
const EXIT_AUDIT: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "qmc", version, about = "Quantum Max Cut: SDP relaxation, rounding and certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the relaxation and print objective, residuals and edge gammas.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the constraint model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Solve, then draw one rounding sample.
    Round {
        #[command(flatten)]
        common: Common,
    },
    /// Per-edge energies of a rounding outcome (read from --outcome or drawn with --seed).
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        outcome: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::ExactWhereCut)]
        mode: Mode,
    },
    /// Largest eigenvalue of the Hamiltonian by exact diagonalization.
    Exact {
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce the approximation constants; with a graph, also audit its solution.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Sweep alpha0 over [0, 0.2].
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 100_000)]
        cut_samples: usize,
        #[arg(long, default_value_t = 2_000)]
        ratio_samples: usize,
    },
    /// Run the pipeline over a suite and print one row per instance.
    Bench {
        #[command(flatten)]
        common: Common,
        /// File with one `kind:params[@seed]` per line.
        #[arg(long)]
        suite: Option<PathBuf>,
    },
    /// Solve, round R times, evaluate and report.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Attach instance audits to the report.
        #[arg(long)]
        certify: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Graph file: edge list, or JSON when the extension is .json.
    #[arg(long, conflicts_with = "generate")]
    input: Option<PathBuf>,
    /// Generator spec `kind:size[,p][,w=lo..hi][@seed]`; repeatable for bench.
    #[arg(long)]
    generate: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    alpha0: f64,
    #[arg(long)]
    tol_feas: Option<f64>,
    #[arg(long)]
    tol_psd: Option<f64>,
    /// ADMM iteration cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SIM_LIMIT)]
    sim_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Omit timings; requires --seed.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bound,
    ExactWhereCut,
}

/// Message plus exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
    /// Written to the output in place of a result.
    body: Option<String>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into(), body: None }
    }
}

fn code_for(err: &Error) -> u8 {
    match err {
        Error::NotConverged { .. }
        | Error::NotPsd { .. }
        | Error::CorruptSolution(_)
        | Error::UnsupportedConstraint(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self { code: code_for(&err), message: err.to_string(), body: None }
    }
}

impl From<StageError> for Failure {
    fn from(err: StageError) -> Self {
        let code = match err.stage {
            "input" | "config" => EXIT_INPUT,
            _ => code_for(&err.error),
        };
        let body = serde_json::to_string_pretty(&err.report()).ok();
        Self { code, message: err.to_string(), body }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        Self::input(err.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

impl Common {
    fn source(&self) -> CliResult<InputSource> {
        match (&self.input, self.generate.as_slice()) {
            (Some(path), []) => Ok(InputSource::File(path.clone())),
            (None, [one]) => {
                let inst: BenchInstance = one.parse()?;
                Ok(InputSource::Generator { spec: inst.spec, seed: inst.seed })
            }
            (None, []) => Err(Failure::input("one of --input or --generate is required")),
            _ => Err(Failure::input("give a single graph via --input or --generate")),
        }
    }

    fn graph(&self) -> CliResult<Graph> {
        Ok(load_graph(&self.source()?)?)
    }

    fn solver(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.tol_feas {
            cfg.eps_feas = t;
        }
        if let Some(t) = self.tol_psd {
            cfg.eps_psd = t;
        }
        if let Some(k) = self.max_iterations {
            cfg.max_iterations = k;
        }
        cfg
    }

    fn seed(&self) -> CliResult<u64> {
        if self.deterministic && self.seed.is_none() {
            return Err(Failure::input("--deterministic requires --seed"));
        }
        Ok(self.seed.unwrap_or_else(rand_seed))
    }

    fn json_only(&self) -> CliResult<()> {
        match self.format {
            Some(Format::Csv) => Err(Failure::input("this subcommand only writes JSON")),
            _ => Ok(()),
        }
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        write_output(self.out.as_deref(), text)
    }
}

fn rand_seed() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn solve_vectors(g: &Graph, cfg: &SolverConfig) -> CliResult<(qmc_core::sdp::SdpModel, VectorSolution)> {
    let model = build_model(g)?;
    let sol = solve(&model, cfg)?;
    let vs = extract_vectors(&sol, cfg)?;
    Ok((model, vs))
}

fn edge_parameters(vs: &VectorSolution, g: &Graph, cfg: &SolverConfig, alpha0: f64) -> CliResult<EdgeParameters> {
    let gammas = compute_gammas(vs, g, 10.0 * cfg.eps_extract)?;
    Ok(EdgeParameters::from_gammas(gammas, alpha0))
}

#[derive(Serialize)]
struct SolveOutput {
    n: usize,
    edges: usize,
    objective: f64,
    residuals: SolverResiduals,
    reconstruction_error: f64,
    gamma: std::collections::BTreeMap<String, f64>,
}

fn cmd_solve(common: &Common, model_out: Option<&Path>) -> CliResult<()> {
    common.json_only()?;
    let g = common.graph()?;
    let cfg = common.solver();
    let (model, vs) = solve_vectors(&g, &cfg)?;
    let params = edge_parameters(&vs, &g, &cfg, common.alpha0)?;
    if let Some(path) = model_out {
        write_output(Some(path), &to_json(&model.dump())?)?;
    }
    let out = SolveOutput {
        n: g.n(),
        edges: g.edge_count(),
        objective: objective_value(&model, &vs),
        residuals: vs.residuals,
        reconstruction_error: vs.reconstruction_error,
        gamma: g.edges().iter().zip(&params.gammas).map(|(e, &v)| (format!("{}-{}", e.i, e.j), v)).collect(),
    };
    common.emit(&to_json(&out)?)
}

fn draw(common: &Common, g: &Graph) -> CliResult<RoundingOutcome> {
    let seed = common.seed()?;
    let cfg = common.solver();
    let (_, vs) = solve_vectors(g, &cfg)?;
    let params = edge_parameters(&vs, g, &cfg, common.alpha0)?;
    Ok(RoundingOutcome::new(&sample_assignment(&vs, seed), &params, g))
}

fn cmd_round(common: &Common) -> CliResult<()> {
    common.json_only()?;
    let g = common.graph()?;
    common.emit(&to_json(&draw(common, &g)?)?)
}

#[derive(Serialize)]
struct EnergyOutput {
    outcome: RoundingOutcome,
    #[serde(flatten)]
    report: qmc_core::energy::EdgeEnergyReport,
    /// `<psi|H|psi>` when the graph fits the simulator.
    statevector_energy: Option<f64>,
}

fn cmd_energy(common: &Common, outcome: Option<&Path>, mode: Mode) -> CliResult<()> {
    let g = common.graph()?;
    let outcome = match outcome {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RoundingOutcome>(&text)?
        }
        None => draw(common, &g)?,
    };
    let (assign, params) = outcome.restore(&g)?;
    let mode = match mode {
        Mode::Bound => EnergyMode::Bound,
        Mode::ExactWhereCut => EnergyMode::ExactWhereCut,
    };
    let report = total_energy(&params, &assign, &g, mode)?;
    if common.format == Some(Format::Csv) {
        let mut w = String::from("i,j,weight,cut,exact_value,lower_bound\n");
        for e in &report.edges {
            let exact = e.exact_value.map(|v| format!("{v:.12}")).unwrap_or_default();
            w.push_str(&format!("{},{},{},{},{},{:.12}\n", e.i, e.j, e.weight, e.cut, exact, e.lower_bound));
        }
        return common.emit(&w);
    }
    let statevector_energy = if g.n() <= common.sim_limit {
        Some(expectation(&simulate(&build_circuit(&assign, &params, &g)?, common.sim_limit)?, &g))
    } else {
        None
    };
    common.emit(&to_json(&EnergyOutput { outcome, report, statevector_energy })?)
}

fn cmd_exact(common: &Common) -> CliResult<()> {
    common.json_only()?;
    let g = common.graph()?;
    common.emit(&to_json(&exact_opt(&g, common.sim_limit)?)?)
}

fn cmd_certify(common: &Common, sweep: bool, cut_samples: usize, ratio_samples: usize) -> CliResult<()> {
    common.json_only()?;
    let mut cert = certify_constants(common.alpha0, sweep);
    if common.input.is_some() || !common.generate.is_empty() {
        let g = common.graph()?;
        let cfg = common.solver();
        let (_, vs) = solve_vectors(&g, &cfg)?;
        let params = edge_parameters(&vs, &g, &cfg, common.alpha0)?;
        let audit = InstanceAuditConfig {
            eps_extract: cfg.eps_extract,
            cut_samples,
            ratio_samples,
            seed: common.seed()?,
            sim_limit: common.sim_limit,
        };
        certify_instance(&mut cert, &vs, &g, &params, &audit)?;
    }
    let body = to_json(&cert)?;
    common.emit(&body)?;
    let failed: Vec<&str> = cert.failed().map(|a| a.name.as_str()).collect();
    if failed.is_empty() {
        eprintln!("alpha_GW = {:.7}, ratio = {:.7}: all audits passed", cert.alpha_gw, cert.ratio_constant);
        Ok(())
    } else {
        Err(Failure { code: EXIT_AUDIT, message: format!("audit failed: {}", failed.join(", ")), body: None })
    }
}

fn run_config(common: &Common, source: InputSource) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::new(source);
    cfg.rounds = common.rounds;
    cfg.seed = Some(common.seed()?);
    cfg.alpha0 = common.alpha0;
    cfg.solver = common.solver();
    cfg.sim_limit = common.sim_limit;
    cfg.deterministic = common.deterministic;
    Ok(cfg)
}

fn cmd_bench(common: &Common, suite: Option<&Path>) -> CliResult<()> {
    if common.input.is_some() {
        return Err(Failure::input("bench takes --suite or --generate, not --input"));
    }
    let mut instances = Vec::new();
    if let Some(path) = suite {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        instances.extend(parse_suite(&text)?);
    }
    for spec in &common.generate {
        instances.push(spec.parse::<BenchInstance>()?);
    }
    let placeholder = InputSource::Inline { label: String::new(), graph: qmc_core::pipeline::GraphData { n: 1, edges: vec![] } };
    let rows = bench(&instances, &run_config(common, placeholder)?);
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => bench_csv(&rows)?,
        Format::Json => to_json(&rows)?,
    };
    common.emit(&text)
}

fn cmd_pipeline(common: &Common, certify: bool) -> CliResult<()> {
    common.json_only()?;
    let mut cfg = run_config(common, common.source()?)?;
    cfg.certify = certify;
    let report = run_pipeline(&cfg)?;
    common.emit(&report.to_json())?;
    match &report.certificate {
        Some(c) if !c.all_passed => Err(Failure {
            code: EXIT_AUDIT,
            message: format!("audit failed: {}", c.failed.join(", ")),
            body: None,
        }),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve { common, model_out } => cmd_solve(common, model_out.as_deref()),
        Command::Round { common } => cmd_round(common),
        Command::Energy { common, outcome, mode } => cmd_energy(common, outcome.as_deref(), *mode),
        Command::Exact { common } => cmd_exact(common),
        Command::Certify { common, sweep, cut_samples, ratio_samples } => {
            cmd_certify(common, *sweep, *cut_samples, *ratio_samples)
        }
        Command::Bench { common, suite } => cmd_bench(common, suite.as_deref()),
        Command::Pipeline { common, certify } => cmd_pipeline(common, *certify),
    }
}

fn out_path(cli: &Cli) -> Option<&Path> {
    let common = match &cli.command {
        Command::Solve { common, .. }
        | Command::Round { common }
        | Command::Energy { common, .. }
        | Command::Exact { common }
        | Command::Certify { common, .. }
        | Command::Bench { common, .. }
        | Command::Pipeline { common, .. } => common,
    };
    common.out.as_deref()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if let Some(body) = &failure.body {
                let _ = write_output(out_path(&cli), body);
            }
            eprintln!("qmc: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
