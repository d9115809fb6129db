//! End-to-end runner behavior: exit codes, output files, schema.

use std::fs;
use std::path::PathBuf;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stackopt-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn braess_scan_summary_has_published_values() {
    let dir = temp_dir("braess");
    let cfg = write_config(&dir, "braess.cfg", "scenario = braess_scan\nseeds = 0\n");
    let out = dir.join("out");
    let code = stackopt_cli::run(
        &cfg,
        &stackopt_cli::RunOptions {
            jobs: 1,
            out_dir: Some(out.clone()),
            non_certified_ok: false,
        },
    );
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    let cell = &summary["cells"][0];
    assert!((cell["SC(0,0)"].as_f64().unwrap() - 0.8).abs() < 1e-9);
    assert!((cell["SC(1,2)"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert!((cell["SC(0.01,0.02)"].as_f64().unwrap() - 0.805).abs() < 1e-9);
    assert_eq!(cell["nonconvex_witness"], true);

    let trace = fs::read_to_string(out.join("trace_braess_scan_0.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,seed,iteration,leader_action_norm,distance_to_target,objective_value,cumulative_queries,wall_clock_ms"
    );
    assert_eq!(trace.lines().count(), 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_configs_exit_2_without_outputs() {
    let dir = temp_dir("badcfg");
    let out = dir.join("out");
    for body in [
        "scenario = unknown_thing\nseeds = 1\n",
        "seeds = 1\n",                                // missing scenario
        "scenario = pricing\nseeds = 1\nmystery = 2\n", // unknown key
        "scenario = pricing\nseeds = 1\n[algorithm]\nalpha = nope\n",
    ] {
        let cfg = write_config(&dir, "bad.cfg", body);
        let code = stackopt_cli::run(
            &cfg,
            &stackopt_cli::RunOptions {
                jobs: 1,
                out_dir: Some(out.clone()),
                non_certified_ok: true,
            },
        );
        assert_eq!(code, 2, "config should be rejected: {body}");
        assert!(!out.exists(), "no outputs on config errors");
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn routing_cells_run_and_parallel_jobs_match_serial() {
    let dir = temp_dir("routing");
    let body = "scenario = routing_target_flow\nseeds = 1 2 3\n\n[graph]\nbuiltin = two_link\n\n[algorithm]\ndelta = 1e-2\noverride_t = 3000\noverride_eta = 0.5\ntarget = 0.5 0.5\n";
    let cfg = write_config(&dir, "routing.cfg", body);
    let strip = |text: &str| -> String {
        text.lines()
            .map(|l| l.rsplit_once(',').map(|(h, _)| h.to_string()).unwrap_or_default())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut outputs = Vec::new();
    for (tag, jobs) in [("serial", 1usize), ("parallel", 3usize)] {
        let out = dir.join(tag);
        let code = stackopt_cli::run(
            &cfg,
            &stackopt_cli::RunOptions {
                jobs,
                out_dir: Some(out.clone()),
                non_certified_ok: false,
            },
        );
        assert_eq!(code, 0);
        let mut cell_texts = Vec::new();
        for seed in [1, 2, 3] {
            cell_texts.push(strip(
                &fs::read_to_string(out.join(format!("trace_routing_target_flow_{seed}.csv")))
                    .unwrap(),
            ));
        }
        outputs.push(cell_texts);
    }
    assert_eq!(outputs[0], outputs[1], "parallelism changed the traces");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn inline_graphs_parse_and_run() {
    let dir = temp_dir("inline");
    let body = "scenario = routing_target_flow\nseeds = 1\n\n[graph]\nedge = S T affine 1.0 0.0\nedge = S T affine 0.5 0.5\ncommodity = S T 1.0\n\n[algorithm]\ndelta = 2e-2\noverride_t = 3000\noverride_eta = 0.5\ntarget = 0.5 0.5\n";
    let cfg = write_config(&dir, "inline.cfg", body);
    let out = dir.join("out");
    let code = stackopt_cli::run(
        &cfg,
        &stackopt_cli::RunOptions {
            jobs: 1,
            out_dir: Some(out.clone()),
            non_certified_ok: false,
        },
    );
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["cells"][0]["distance"].as_f64().unwrap() <= 2e-2);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_reports_and_rejects_negative_actions() {
    let dir = temp_dir("verify");
    let body = "scenario = pricing\nseeds = 1\n\n[instance]\nvaluation = ces\nweights = 1.0\nrho = 0.5\nbeta = 1.0\ncost = linear\ncost_coeffs = 1.0\n\n[algorithm]\nalpha = 0.02\n";
    let cfg = write_config(&dir, "pricing.cfg", body);
    assert_eq!(stackopt_cli::verify(&cfg, &[2.0]), 0);
    assert_eq!(stackopt_cli::verify(&cfg, &[-1.0]), 2);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn non_certified_results_gate_the_exit_code() {
    let dir = temp_dir("gate");
    // floored epsilon makes the run non-certified by construction
    let body = "scenario = pricing\nseeds = 1\n\n[instance]\nvaluation = ces\nweights = 1.0\nrho = 0.5\nbeta = 1.0\ncost = linear\ncost_coeffs = 1.0\n\n[algorithm]\nalpha = 0.02\nepsilon_floor = 5e-3\noverride_t = 30000\nzoo_budget = 400\n";
    let cfg = write_config(&dir, "pricing.cfg", body);
    let strict = stackopt_cli::run(
        &cfg,
        &stackopt_cli::RunOptions {
            jobs: 1,
            out_dir: Some(dir.join("strict")),
            non_certified_ok: false,
        },
    );
    assert_eq!(strict, 1);
    let relaxed = stackopt_cli::run(
        &cfg,
        &stackopt_cli::RunOptions {
            jobs: 1,
            out_dir: Some(dir.join("relaxed")),
            non_certified_ok: true,
        },
    );
    assert_eq!(relaxed, 0);
    fs::remove_dir_all(&dir).ok();
}
