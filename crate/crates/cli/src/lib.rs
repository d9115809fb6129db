//! Experiment runner: builds scenarios from config files, runs
//! (scenario x seed) cells in a worker pool, and emits machine-readable
//! trace CSVs plus a summary JSON.

pub mod config;
pub mod scenario;
pub mod trace;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use config::RawConfig;
use scenario::{run_cell, CellOutcome, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_FAILURE: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;

pub struct RunOptions {
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
    pub non_certified_ok: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            out_dir: None,
            non_certified_ok: false,
        }
    }
}

pub fn load_spec(config_path: &Path) -> Result<ScenarioSpec, String> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let raw = RawConfig::parse(&text).map_err(|e| e.to_string())?;
    ScenarioSpec::from_raw(&raw).map_err(|e| e.to_string())
}

fn resolve_out_dir(spec: &ScenarioSpec, opts: &RunOptions) -> PathBuf {
    if let Some(dir) = &opts.out_dir {
        return dir.clone();
    }
    if let Some(dir) = &spec.out_dir {
        return PathBuf::from(dir);
    }
    if let Ok(dir) = std::env::var("STACKOPT_OUT") {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("out")
}

/// Executes all cells, writes one trace per cell and a single summary.
/// Returns the process exit code.
pub fn run(config_path: &Path, opts: &RunOptions) -> i32 {
    let spec = match load_spec(config_path) {
        Ok(spec) => spec,
        Err(message) => {
            eprintln!("{message}");
            return EXIT_BAD_CONFIG;
        }
    };
    let out_dir = resolve_out_dir(&spec, opts);
    let seeds = spec.seeds.clone();
    let outcomes: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; seeds.len()]);
    let next = AtomicUsize::new(0);
    let workers = opts.jobs.max(1).min(seeds.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= seeds.len() {
                    break;
                }
                let outcome = run_cell(&spec, seeds[idx]);
                outcomes.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let outcomes: Vec<CellOutcome> = outcomes
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|c| c.expect("every cell ran"))
        .collect();

    let mut failed = false;
    for outcome in &outcomes {
        if let Err(e) = trace::write_trace(&out_dir, outcome, spec.scenario.name()) {
            eprintln!("failed to write trace for seed {}: {e}", outcome.seed);
            failed = true;
        }
        if let Some(e) = &outcome.error {
            eprintln!("seed {} failed: {e}", outcome.seed);
            failed = true;
        }
    }
    let summary = trace::summary_json(spec.scenario.name(), &outcomes);
    let summary_path = out_dir.join("summary.json");
    if let Err(e) = trace::atomic_write(
        &summary_path,
        &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
    ) {
        eprintln!("failed to write summary: {e}");
        failed = true;
    }
    println!("wrote {}", summary_path.display());

    if failed {
        return EXIT_RUN_FAILURE;
    }
    if !opts.non_certified_ok && !outcomes.iter().all(|c| c.certified) {
        eprintln!(
            "some cells ran with desk-scale caps and are not certified; pass --non-certified-ok to accept"
        );
        return EXIT_RUN_FAILURE;
    }
    EXIT_OK
}

/// Replays the oracle at the given action and prints a JSON report.
pub fn verify(config_path: &Path, action: &[f64]) -> i32 {
    let spec = match load_spec(config_path) {
        Ok(spec) => spec,
        Err(message) => {
            eprintln!("{message}");
            return EXIT_BAD_CONFIG;
        }
    };
    match scenario::verify_action(&spec, action) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            EXIT_OK
        }
        Err(stackopt::Error::InvalidParameter(m)) | Err(stackopt::Error::Config(m)) => {
            eprintln!("invalid action: {m}");
            EXIT_BAD_CONFIG
        }
        Err(e) => {
            eprintln!("verification failed: {e}");
            EXIT_RUN_FAILURE
        }
    }
}
