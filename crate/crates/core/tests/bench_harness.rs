use mba::bench::{aggregate, csv_string, run_benchmark, Method, RunConfig, CSV_COLUMNS};
use mba::exact::solve_exact;
use mba::generate_random;

fn config(method: Method) -> RunConfig {
    toml_like(method, vec![3, 4, 5])
}

fn toml_like(method: Method, seeds: Vec<u64>) -> RunConfig {
    RunConfig {
        method,
        n: 6,
        m: 4,
        d: 1.8,
        seeds,
        time_limit_seconds: 10.0,
        max_weight: 100,
        output: None,
        parallel: false,
    }
}

#[test]
fn exact_rows_match_direct_solves() {
    let records = run_benchmark(&config(Method::Exact)).unwrap();
    assert_eq!(records.len(), 3);
    for r in &records {
        let inst = generate_random(6, 4, 1.8, r.seed, 100);
        let direct = solve_exact(&inst, None, None);
        assert_eq!(r.objective, direct.report.objective);
        assert!(r.optimal());
        let (g, v) = (r.greedy_objective.unwrap() as f64, r.objective.unwrap() as f64);
        assert!((r.improvement_pct.unwrap() - 100.0 * (g / v - 1.0)).abs() < 1e-9);
    }
}

#[test]
fn heuristics_sit_between_exact_and_greedy() {
    let exact = run_benchmark(&config(Method::Exact)).unwrap();
    for method in [Method::Gp(1), Method::Gp(3), Method::Cg(2)] {
        let rows = run_benchmark(&config(method)).unwrap();
        for (h, e) in rows.iter().zip(&exact) {
            let v = h.objective.unwrap();
            assert!(e.objective.unwrap() <= v && v <= h.greedy_objective.unwrap(), "{method} seed {}", h.seed);
        }
    }
}

#[test]
fn parallel_run_gives_same_objectives() {
    let mut cfg = config(Method::Gp(2));
    let serial = run_benchmark(&cfg).unwrap();
    cfg.parallel = true;
    let parallel = run_benchmark(&cfg).unwrap();
    let key = |rs: &[mba::bench::RunRecord]| rs.iter().map(|r| (r.seed, r.objective)).collect::<Vec<_>>();
    assert_eq!(key(&serial), key(&parallel));
}

#[test]
fn csv_has_header_rows_and_mean() {
    let records = run_benchmark(&config(Method::Greedy)).unwrap();
    let text = csv_string(&records);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# mba-bench-v1"));
    assert_eq!(lines[1], CSV_COLUMNS.join(","));
    assert_eq!(lines.len(), 2 + records.len() + 1);
    let mean = aggregate(&records);
    assert_eq!(mean.rows, 3);
    let expected = records.iter().map(|r| r.objective.unwrap() as f64).sum::<f64>() / 3.0;
    assert!((mean.objective.unwrap() - expected).abs() < 1e-9);
    assert!(lines[5].contains(",mean,"));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run_benchmark(&toml_like(Method::Greedy, vec![])).is_err());
    let mut cfg = config(Method::Greedy);
    cfg.d = -1.0;
    assert!(run_benchmark(&cfg).is_err());
    cfg.d = 1.0;
    cfg.time_limit_seconds = 0.0;
    assert!(run_benchmark(&cfg).is_err());
}
