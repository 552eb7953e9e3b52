//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for each
//! and exits nonzero if any failed.

use std::f64::consts::FRAC_PI_4;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmc_core::certify::{
    alpha_gw, cut_probability_audit, monogamy_audit, pair_identity_audit, ratio_constant, sweep_alpha0,
};
use qmc_core::energy::{cut_edge_correlations, edge_energy_exact};
use qmc_core::oracle::{exact_opt, moment_matrix_from_state, StateVector};
use qmc_core::pipeline::{bench, bench_csv, run_pipeline, BenchInstance, InputSource, RunConfig, RunReport};
use qmc_core::rounding::{compute_gammas, Assignment, EdgeParameters, DEFAULT_ALPHA0};
use qmc_core::sdp::{build_model, objective_value, solve_graph, GramIndex, SdpModel, SolverConfig, VectorSolution};
use qmc_core::{generate, GeneratorSpec, Graph, Pauli};

const SUITE: [&str; 8] = [
    "complete:2@0",
    "path:3@0",
    "complete:3@0",
    "star:3@0",
    "cycle:5@0",
    "erdos_renyi:8,0.4@1",
    "erdos_renyi:8,0.4@2",
    "erdos_renyi:8,0.4@3",
];
const MASTER_SEED: u64 = 20_241_018;

struct Solved {
    name: String,
    graph: Graph,
    model: SdpModel,
    vs: VectorSolution,
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn solve_suite(cfg: &SolverConfig) -> Vec<Solved> {
    SUITE
        .iter()
        .map(|name| {
            let inst: BenchInstance = name.parse().unwrap();
            let graph = generate(&inst.spec, inst.seed).unwrap();
            let (model, vs) = solve_graph(&graph, cfg).unwrap();
            Solved { name: name.to_string(), graph, model, vs }
        })
        .collect()
}

fn constants() -> Outcome {
    let gw = alpha_gw();
    let ratio = ratio_constant(DEFAULT_ALPHA0);
    let sweep = sweep_alpha0(0.0, 0.2, 1e-3);
    let gw_ok = (gw.value - 0.8785).abs() <= 1e-4;
    let ratio_ok = (ratio.value - 0.562).abs() <= 5e-4;
    let sweep_ok = (sweep.best_alpha0 - 0.041).abs() <= 5e-3;
    outcome(
        gw_ok && ratio_ok && sweep_ok,
        format!(
            "alpha_GW = {:.7} [{}], ratio(0.041) = {:.7} vs 0.562 +/- 5e-4 [{}], sweep argmax = {:.3} [{}]",
            gw.value,
            verdict(gw_ok),
            ratio.value,
            verdict(ratio_ok),
            sweep.best_alpha0,
            verdict(sweep_ok)
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out of tolerance"
    }
}

fn relaxation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED);
    let mut worst_constraint: f64 = 0.0;
    let mut worst_objective: f64 = 0.0;
    for k in 0..200 {
        let n = 2 + k % 4;
        let edges: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, rng.random_range(0.1..2.0)))
            .collect();
        let g = Graph::new(n, edges).unwrap();
        let model = build_model(&g).unwrap();
        let psi = StateVector::random(n, &mut rng);
        let m = moment_matrix_from_state(&psi, &GramIndex::new(n).unwrap()).unwrap();
        worst_constraint = worst_constraint.max(model.max_residual(&m));
        let energy = qmc_core::oracle::expectation(&psi, &g);
        worst_objective = worst_objective.max((model.objective(&m) - energy).abs());
    }
    outcome(
        worst_constraint <= 1e-10 && worst_objective <= 1e-10,
        format!("200 states: max constraint residual {worst_constraint:.2e}, max objective gap {worst_objective:.2e}"),
    )
}

fn pair_identities(solved: &[Solved], cfg: &SolverConfig) -> Outcome {
    let tol = 10.0 * cfg.eps_extract;
    let worst = solved
        .iter()
        .map(|s| (s.name.as_str(), pair_identity_audit(&s.vs).max()))
        .fold(("", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    outcome(worst.1 <= tol, format!("max residual {:.2e} ({}) vs {tol:.0e}", worst.1, worst.0))
}

fn monogamy(solved: &[Solved], cfg: &SolverConfig) -> Outcome {
    let tol = 10.0 * cfg.eps_extract;
    let worst = solved
        .iter()
        .flat_map(|s| monogamy_audit(&s.vs, &s.graph))
        .map(|v| v.slack)
        .fold(f64::INFINITY, f64::min);
    let k2 = solved.iter().find(|s| s.name == "complete:2@0").unwrap();
    let k2_slack = monogamy_audit(&k2.vs, &k2.graph)[0].slack;
    let star = solved.iter().find(|s| s.name == "star:3@0").unwrap();
    let star_obj = objective_value(&star.model, &star.vs);
    let ok = worst >= -tol && k2_slack.abs() <= 1e-4 && star_obj <= 2.0 + 1e-5;
    outcome(ok, format!("min slack {worst:.2e}, K2 slack {k2_slack:.2e}, K_1,3 objective {star_obj:.8}"))
}

fn random_thetas(g: &Graph, rng: &mut ChaCha8Rng) -> EdgeParameters {
    EdgeParameters::from_thetas(g.edges().iter().map(|_| rng.random_range(0.0..=FRAC_PI_4)).collect())
}

fn random_case(k: usize, rng: &mut ChaCha8Rng) -> Graph {
    match k % 5 {
        // diamond: two triangles sharing the 0-3 edge, so every cut edge
        // with a common neighbor pair exercises the even-subset term
        0 => Graph::new(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap(),
        _ => {
            let n = rng.random_range(2..=10);
            let p = rng.random_range(0.3..0.9);
            generate(&GeneratorSpec::erdos_renyi(n, p), rng.random()).unwrap()
        }
    }
}

fn energy_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(MASTER_SEED ^ 5);
    let mut worst_energy: f64 = 0.0;
    let mut worst_component: f64 = 0.0;
    let mut cut_edges = 0usize;
    let mut diamond_cut_edges = 0usize;
    for k in 0..500 {
        let g = random_case(k, &mut rng);
        let params = random_thetas(&g, &mut rng);
        let axis = Pauli::ALL[rng.random_range(0..3)];
        let bits: Vec<bool> = (0..g.n()).map(|_| rng.random()).collect();
        let assign = Assignment::new(axis, bits, k as u64);
        let circuit = qmc_core::rounding::build_circuit(&assign, &params, &g).unwrap();
        let psi = qmc_core::oracle::simulate(&circuit, 10).unwrap();
        for e in g.edges().iter().filter(|e| assign.is_cut(e.i, e.j)) {
            cut_edges += 1;
            if k % 5 == 0 {
                diamond_cut_edges += 1;
            }
            let closed = edge_energy_exact(&params, &assign, &g, (e.i, e.j)).unwrap();
            worst_energy = worst_energy.max((closed - qmc_core::oracle::edge_energy4(&psi, e.i, e.j)).abs());
            let [xx, yy, zz] = cut_edge_correlations(&params, &assign, &g, (e.i, e.j)).unwrap();
            let [sx, sy, sz] = psi.pair_correlations(e.i, e.j);
            worst_component = worst_component.max((xx - sx).abs()).max((yy - sy).abs()).max((zz - sz).abs());
        }
    }
    outcome(
        worst_energy <= 1e-9 && worst_component <= 1e-9 && diamond_cut_edges > 0,
        format!(
            "{cut_edges} cut edges ({diamond_cut_edges} on diamonds): energy gap {worst_energy:.2e}, component gap {worst_component:.2e}"
        ),
    )
}

fn cut_probability(solved: &[Solved]) -> Outcome {
    let mut failures = Vec::new();
    let mut margin = f64::INFINITY;
    let mut edges = 0;
    for s in solved {
        for r in cut_probability_audit(&s.vs, &s.graph, 100_000, MASTER_SEED) {
            edges += 1;
            margin = margin.min((r.empirical - (r.bound - 5.0 * r.sigma)) / r.sigma);
            if !r.passed {
                failures.push(format!("{} {}-{}", s.name, r.i, r.j));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{edges} edges, 1e5 samples each, smallest margin {margin:.1} sigma; failures: {failures:?}"),
    )
}

fn run_config(name: &str) -> RunConfig {
    let inst: BenchInstance = name.parse().unwrap();
    let mut cfg = RunConfig::new(InputSource::Generator { spec: inst.spec, seed: inst.seed });
    cfg.rounds = 2000;
    cfg.seed = Some(MASTER_SEED);
    cfg.deterministic = true;
    cfg
}

fn end_to_end_reports() -> Vec<RunReport> {
    SUITE.iter().map(|name| run_pipeline(&run_config(name)).unwrap()).collect()
}

fn end_to_end(reports: &[RunReport]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in reports {
        let opt = r.opt.expect("suite fits the simulator");
        let margin = 5.0 * r.stderr;
        let vs_sdp = r.mean_energy >= 0.562 * r.sdp.objective - margin;
        let vs_opt = r.mean_energy >= 0.562 * opt - margin;
        ok &= vs_sdp && vs_opt && r.opt.is_some();
        lines.push(format!("{} {:.4}/{:.4}", r.graph.source, r.mean_energy, r.sdp.objective));
    }
    let anchors = [("complete:2@0", 1.0, 0.0), ("path:3@0", 1.5, 1e-9), ("complete:3@0", 1.5, 1e-9)];
    for (name, expect, tol) in anchors {
        let g = generate(&name.parse::<BenchInstance>().unwrap().spec, 0).unwrap();
        let opt = exact_opt(&g, 10).unwrap().lambda_max;
        // K2 is a 2x2 sector problem; allow rounding in the last bit
        let tol = if tol == 0.0 { 4.0 * f64::EPSILON } else { tol };
        ok &= (opt - expect).abs() <= tol;
        lines.push(format!("OPT({name}) = {opt:.12}"));
    }
    outcome(ok, format!("mean/OPT_SDP: {}", lines.join(", ")))
}

fn determinism(first: &[RunReport]) -> Outcome {
    let again = end_to_end_reports();
    let same_reports = first.iter().zip(&again).all(|(a, b)| a.to_json() == b.to_json());
    let suite: Vec<BenchInstance> = SUITE.iter().map(|s| s.parse().unwrap()).collect();
    let mut template = run_config(SUITE[0]);
    template.rounds = 200;
    let csv_a = bench_csv(&bench(&suite, &template)).unwrap();
    let csv_b = bench_csv(&bench(&suite, &template)).unwrap();
    outcome(
        same_reports && csv_a == csv_b,
        format!("{} reports byte-identical: {same_reports}; bench CSV identical: {}", again.len(), csv_a == csv_b),
    )
}

fn main() -> ExitCode {
    let cfg = SolverConfig::default();
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {id} [{name}]: {} ({secs:.1}s) {}",
            if out.passed { "PASS" } else { "FAIL" },
            out.detail
        );
        results.push((id, name, out, secs));
    };

    timed(1, "constants", &mut constants);
    timed(2, "relaxation oracle", &mut relaxation_oracle);
    let t = Instant::now();
    let solved = solve_suite(&cfg);
    println!("solved {} suite instances in {:.1}s", solved.len(), t.elapsed().as_secs_f64());
    for s in &solved {
        // gammas must be computable on every solution before anything else
        compute_gammas(&s.vs, &s.graph, 10.0 * cfg.eps_extract).unwrap();
    }
    timed(3, "pair identities", &mut || pair_identities(&solved, &cfg));
    timed(4, "monogamy", &mut || monogamy(&solved, &cfg));
    timed(5, "energy identity", &mut energy_identity);
    timed(6, "cut probability", &mut || cut_probability(&solved));
    let mut reports = Vec::new();
    timed(7, "end-to-end", &mut || {
        reports = end_to_end_reports();
        end_to_end(&reports)
    });
    timed(8, "determinism", &mut || determinism(&reports));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
