//! Mode dispatch and artifact persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use log::info;
use lowthrust_mga::evolve::{grid_search, nelder_mead, optimize_sequence, write_grid_csv, GridOptions, Individual};
use lowthrust_mga::export::{write_solution_json, write_thrust_csv, SolutionRecord};
use lowthrust_mga::ltto::{vector_bounds, Layout};
use lowthrust_mga::rtba::{run_rtba_with, write_ranking_csv, RtbaConfig, RtbaContext, SequenceEvaluator};
use lowthrust_mga::{LttoProblem, PlanetSet, Sequence, TrajectorySolution};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigFile, Mode, RunConfig};
use crate::error::CliError;
use crate::output::{write_atomic, Journal};

pub const RANKING_FILE: &str = "ranking.csv";
pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const METADATA_FILE: &str = "run_metadata.json";
pub const SOLUTION_FILE: &str = "solution.json";
pub const GRID_FILE: &str = "grid.csv";

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "RTBA_WORKERS";

/// Flag, then environment, then `cpu_count` from the config file, then the
/// machine's available parallelism.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>, config: Option<usize>) -> Result<usize, CliError> {
    let env = match env {
        Some(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got '{s}'")))?,
        ),
        None => None,
    };
    let n = flag.or(env).or(config).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError::Config("worker count must be at least 1".into()));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub mode: Mode,
    pub seed: u64,
    pub workers: usize,
    pub peak_workers: usize,
    pub wall_time_s: f64,
    /// Evaluated fraction of the full sequence tree (search mode only).
    pub q_total: Option<f64>,
    pub artifacts: Vec<String>,
    pub config: ConfigFile,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub metadata: RunMetadata,
    pub output_dir: PathBuf,
}

pub fn load_system(config: &RunConfig) -> Result<PlanetSet, CliError> {
    match &config.elements_file {
        Some(p) => PlanetSet::from_csv_path(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(PlanetSet::builtin()),
    }
}

/// Executes `config` on a pool of `workers` threads and writes every
/// artifact into `config.output_dir`.
pub fn run(config: &RunConfig, workers: usize) -> Result<RunOutcome, CliError> {
    let system = load_system(config)?;
    for body in [config.rtba.departure_body, config.rtba.arrival_body] {
        if !system.contains(body) {
            return Err(CliError::Config(format!("body {body} is not in the loaded planet set")));
        }
    }
    if let Some(seq) = &config.sequence {
        if let Some(b) = seq.bodies().iter().find(|b| !system.contains(**b)) {
            return Err(CliError::Config(format!("`sequence`: body {b} is not in the loaded planet set")));
        }
    }
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Runtime(e.to_string()))?;

    let started = Instant::now();
    let (mut artifacts, q_total, peak_workers) = pool.install(|| -> Result<_, CliError> {
        let peak = rayon::current_num_threads();
        let (a, q) = match config.mode {
            Mode::Ltto => (run_ltto(&system, config, &dir)?, None),
            Mode::Grid => (run_grid(&system, config, &dir)?, None),
            Mode::Rtba => {
                let (a, q) = run_search(&system, config, &dir)?;
                (a, Some(q))
            }
        };
        Ok((a, q, peak))
    })?;
    let wall_time_s = started.elapsed().as_secs_f64();

    artifacts.push(METADATA_FILE.to_string());
    let metadata = RunMetadata {
        mode: config.mode,
        seed: config.seed,
        workers,
        peak_workers,
        wall_time_s,
        q_total,
        artifacts,
        config: config.to_file(),
    };
    write_atomic(&dir, METADATA_FILE, |w| {
        serde_json::to_writer_pretty(&mut *w, &metadata).map_err(|e| CliError::Runtime(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    info!("{} finished in {wall_time_s:.1} s on {peak_workers} workers", config.mode);
    Ok(RunOutcome { metadata, output_dir: dir })
}

fn thrust_file(seq: &Sequence, leg: usize) -> String {
    format!("thrust_{seq}_leg{}.csv", leg + 1)
}

/// One CSV per leg; none for an infeasible solution.
fn write_thrust_files(dir: &Path, seq: &Sequence, sol: &TrajectorySolution) -> Result<Vec<String>, CliError> {
    if !sol.feasible {
        return Ok(Vec::new());
    }
    let mut names = Vec::new();
    for (k, leg) in sol.legs.iter().enumerate() {
        let name = thrust_file(seq, k);
        write_atomic(dir, &name, |w| Ok(write_thrust_csv(leg, w)?))?;
        names.push(name);
    }
    Ok(names)
}

fn write_solution(dir: &Path, seq: &Sequence, sol: &TrajectorySolution) -> Result<Vec<String>, CliError> {
    let record = SolutionRecord::new(seq, sol);
    write_atomic(dir, SOLUTION_FILE, |w| Ok(write_solution_json(&record, w)?))?;
    let mut names = vec![SOLUTION_FILE.to_string()];
    names.extend(write_thrust_files(dir, seq, sol)?);
    Ok(names)
}

fn required_sequence(config: &RunConfig) -> Result<&Sequence, CliError> {
    config.sequence.as_ref().ok_or_else(|| CliError::Config(format!("`sequence`: required in {} mode", config.mode)))
}

/// Island model over the departure window, then Nelder-Mead on the best
/// island's point within that island's bounds.
fn run_ltto(system: &PlanetSet, config: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let seq = required_sequence(config)?;
    let r = &config.rtba;
    let run =
        optimize_sequence(system, seq, r.departure_window, r.p, &r.ltto, &r.sga, r.topology_probability, config.seed)?;
    let (island, best) = run
        .island_best
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness))
        .ok_or_else(|| CliError::Runtime("no islands".into()))?;
    let (lo, hi) = vector_bounds(seq, run.window_starts[island], &r.ltto);
    let problem = LttoProblem::new(system, seq.clone(), run.window_starts[island], r.ltto.clone())?;
    let frozen = Layout::new(seq, r.ltto.free_count).integer_mask();
    let refined = nelder_mead(&|g: &[f64]| problem.objective(g), &best.genes, &lo, &hi, &frozen, &config.nm);
    info!("{seq}: island best {:.1} m/s, refined {:.1} m/s", best.fitness, refined.f);
    let sol = problem.evaluate_genes(&refined.x)?;
    write_solution(dir, seq, &sol)
}

fn run_grid(system: &PlanetSet, config: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let seq = required_sequence(config)?;
    let r = &config.rtba;
    let opts = GridOptions {
        islands_per_window: r.p,
        topology_probability: r.topology_probability,
        nm: config.nm.clone(),
        window_days: r.ltto.window_days,
        ..GridOptions::new(r.departure_window)
    };
    let rows = grid_search(system, seq, &r.ltto, &opts, &r.sga, config.seed)?;
    write_atomic(dir, GRID_FILE, |w| Ok(write_grid_csv(&rows, w)?))?;
    let mut names = vec![GRID_FILE.to_string()];
    if let Some(best) = rows.iter().min_by(|a, b| a.refined_dv.total_cmp(&b.refined_dv)) {
        let problem = LttoProblem::new(system, seq.clone(), best.window_start, r.ltto.clone())?;
        let sol = problem.evaluate_genes(&best.genes)?;
        names.extend(write_solution(dir, seq, &sol)?);
    }
    Ok(names)
}

/// Island-model evaluator that keeps each sequence's best individual so the
/// optimal group's trajectories can be exported afterwards.
struct RecordingEvaluator<'a> {
    system: &'a PlanetSet,
    config: &'a RtbaConfig,
    best: Mutex<BTreeMap<Sequence, Individual>>,
}

impl SequenceEvaluator for RecordingEvaluator<'_> {
    fn evaluate(&self, sequence: &Sequence) -> lowthrust_mga::Result<Vec<f64>> {
        let c = self.config;
        let run = optimize_sequence(
            self.system,
            sequence,
            c.departure_window,
            c.p,
            &c.ltto,
            &c.sga,
            c.topology_probability,
            c.seed,
        )?;
        self.best.lock().expect("evaluator lock").insert(sequence.clone(), run.best().clone());
        Ok(run.island_dvs())
    }
}

fn run_search(system: &PlanetSet, config: &RunConfig, dir: &Path) -> Result<(Vec<String>, f64), CliError> {
    let evaluator = RecordingEvaluator { system, config: &config.rtba, best: Mutex::new(BTreeMap::new()) };
    let ctx = RtbaContext::new(system, &config.rtba, &evaluator)?;

    let mut journal = Journal::create(dir, JOURNAL_FILE)?;
    let outcome = run_rtba_with(&ctx, &mut |rec| {
        journal.append(rec).map_err(|e| lowthrust_mga::Error::Io(format!("journal: {e}")))
    });
    // The journal is kept whether or not the search succeeded.
    journal.finish()?;
    let result = outcome?;

    let ranking = &result.ranking;
    write_atomic(dir, RANKING_FILE, |w| Ok(write_ranking_csv(ranking, w)?))?;
    let mut names = vec![RANKING_FILE.to_string(), JOURNAL_FILE.to_string()];

    let best = evaluator.best.into_inner().expect("evaluator lock");
    for r in ranking.iter().filter(|r| r.in_optimal_group) {
        let seq = &r.record.sequence;
        let Some(ind) = best.get(seq) else { continue };
        let problem = LttoProblem::new(system, seq.clone(), config.rtba.departure_window.0, config.rtba.ltto.clone())?;
        let sol = problem.evaluate_genes(&ind.genes)?;
        names.extend(write_thrust_files(dir, seq, &sol)?);
    }
    Ok((names, result.q_total))
}
