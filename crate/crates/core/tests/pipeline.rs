use qmc_core::certify::{certify_constants, per_edge_ratio_audit, ratio_constant, TARGET_RATIO};
use qmc_core::pipeline::{
    bench, bench_csv, load_graph, run_pipeline, BenchInstance, InputSource, RunConfig, RunReport, BENCH_COLUMNS,
};
use qmc_core::rounding::{compute_gammas, EdgeParameters, DEFAULT_ALPHA0};
use qmc_core::sdp::{solve_graph, SolverConfig};
use qmc_core::{generate, Graph};

fn config(instance: &str, rounds: usize) -> RunConfig {
    let inst: BenchInstance = instance.parse().unwrap();
    let mut cfg = RunConfig::new(InputSource::Generator { spec: inst.spec, seed: inst.seed });
    cfg.rounds = rounds;
    cfg.seed = Some(99);
    cfg.deterministic = true;
    cfg
}

fn check_invariants(r: &RunReport) {
    assert!(r.best.energy >= r.mean_energy - 1e-12);
    if let Some(opt) = r.opt {
        assert!(r.ratios.best_over_opt.unwrap() <= 1.0 + 1e-6);
        assert!(r.mean_energy <= opt + 1e-9);
    }
}

#[test]
fn single_edge_energy_is_closed_form() {
    // K2 is cut by every draw (antipodal singles) and gamma = 1, so every
    // sample is cos t |01> - sin t |10> with t = theta(1) and
    // <4H> = 2 + 2 sin(2t) = 2 + 2 sqrt(1 - exp(-2 alpha0)).
    let r = run_pipeline(&config("complete:2", 2000)).unwrap();
    check_invariants(&r);
    let expected = (2.0 + 2.0 * (1.0 - (-2.0 * DEFAULT_ALPHA0).exp()).sqrt()) / 4.0;
    assert!((r.mean_energy - expected).abs() < 1e-8, "{} vs {expected}", r.mean_energy);
    assert!((r.best.energy - expected).abs() < 1e-8);
    assert!(r.ratios.mean_over_sdp >= TARGET_RATIO);
}

#[test]
fn triangle_meets_the_guarantee() {
    let r = run_pipeline(&config("complete:3", 2000)).unwrap();
    check_invariants(&r);
    assert!((r.opt.unwrap() - 1.5).abs() < 1e-9);
    assert!(r.mean_energy >= TARGET_RATIO * r.sdp.objective - 5.0 * r.stderr);
}

#[test]
fn random_graph_meets_the_guarantee() {
    let r = run_pipeline(&config("erdos_renyi:8,0.4@3", 2000)).unwrap();
    check_invariants(&r);
    assert!(r.mean_energy >= TARGET_RATIO * r.sdp.objective - 5.0 * r.stderr);
    assert_eq!(r.best.z.len(), 8);
    assert!(r.timings.is_none());
}

#[test]
fn large_graph_falls_back_to_closed_form() {
    let mut cfg = config("complete:6", 200);
    cfg.sim_limit = 4;
    let r = run_pipeline(&cfg).unwrap();
    assert_eq!(r.opt, None);
    assert_eq!(serde_json::to_value(r.energy_source).unwrap(), "exact_where_cut_lower_bound");
    assert!(r.ratios.mean_over_opt.is_none());
}

#[test]
fn best_sample_replays_from_its_seed() {
    let r = run_pipeline(&config("cycle:5", 300)).unwrap();
    let g = generate(&"cycle:5".parse().unwrap(), 0).unwrap();
    let (_, vs) = solve_graph(&g, &SolverConfig::default()).unwrap();
    let replay = qmc_core::rounding::sample_assignment(&vs, r.best.seed);
    assert_eq!(replay.bit_string(), r.best.z);
    assert_eq!(r.best.seed, qmc_core::rounding::derive_seed(99, r.best.index as u64));
}

#[test]
fn bench_rows_meet_the_guarantee() {
    let suite: Vec<BenchInstance> = ["complete:2", "complete:3", "path:3"].iter().map(|s| s.parse().unwrap()).collect();
    let template = config("complete:2", 1000);
    let rows = bench(&suite, &template);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let sigma = row.stderr.unwrap() / row.opt_sdp.unwrap();
        assert!(row.mean_ratio.unwrap() >= TARGET_RATIO - 5.0 * sigma, "{row:?}");
    }
    let csv = bench_csv(&rows).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().next().unwrap(), BENCH_COLUMNS.join(","));
    assert_eq!(csv, bench_csv(&bench(&suite, &template)).unwrap());
}

#[test]
fn reports_are_byte_identical() {
    let cfg = config("erdos_renyi:8,0.4@1", 500);
    assert_eq!(run_pipeline(&cfg).unwrap().to_json(), run_pipeline(&cfg).unwrap().to_json());
}

#[test]
fn solver_failure_is_tagged() {
    let mut cfg = config("complete:3", 10);
    cfg.solver.max_iterations = 2;
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.stage, "sdp");
    let report = err.report();
    assert_eq!(report.schema, "qmc-report/1");
    assert_eq!(report.residuals.unwrap().iterations, 2);
}

#[test]
fn files_load_in_both_formats() {
    let dir = std::env::temp_dir().join(format!("qmc-core-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
    let list = dir.join("g.txt");
    let json = dir.join("g.json");
    std::fs::write(&list, g.to_edge_list()).unwrap();
    std::fs::write(&json, g.to_json()).unwrap();
    for path in [list, json] {
        let loaded = load_graph(&InputSource::File(path)).unwrap();
        assert_eq!(loaded.edges(), g.edges());
    }
    assert!(load_graph(&InputSource::File(dir.join("missing.txt"))).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn edge_ratios(g: &Graph, samples: usize) -> qmc_core::certify::RatioAudit {
    let (_, vs) = solve_graph(g, &SolverConfig::default()).unwrap();
    let params = EdgeParameters::from_gammas(compute_gammas(&vs, g, 1e-5).unwrap(), DEFAULT_ALPHA0);
    per_edge_ratio_audit(&vs, g, &params, samples, 4, 12).unwrap()
}

#[test]
fn per_edge_ratios() {
    let star = Graph::new(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
    let audit = edge_ratios(&star, 2000);
    assert_eq!(audit.edges.len(), 3);
    assert!(audit.edges.iter().all(|e| e.passed), "{audit:?}");

    let random = generate(&"erdos_renyi:8,0.4".parse().unwrap(), 2).unwrap();
    let audit = edge_ratios(&random, 2000);
    assert!(audit.statevector);
    assert!(audit.edges.iter().all(|e| e.passed), "{audit:?}");

    // A lone edge has no neighbors to lose energy to, yet the ratio is
    // capped by the angle map: theta(1) is far from pi/4.
    let k2 = Graph::new(2, [(0, 1, 1.0)]).unwrap();
    let audit = edge_ratios(&k2, 200);
    let expected = (2.0 + 2.0 * (1.0 - (-2.0 * DEFAULT_ALPHA0).exp()).sqrt()) / 4.0;
    assert!((audit.edges[0].ratio - expected).abs() < 1e-6, "{audit:?}");
}

#[test]
fn constants_under_overrides() {
    assert!((ratio_constant(0.0).value - 0.4393).abs() < 1e-4);
    let cert = certify_constants(DEFAULT_ALPHA0, true);
    assert!(cert.all_passed());
    let sweep = cert.sweep.unwrap();
    assert!((sweep.best_alpha0 - 0.041).abs() <= 5e-3);
    assert_eq!(sweep.points.len(), 201);
}
