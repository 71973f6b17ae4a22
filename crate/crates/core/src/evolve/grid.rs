use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nelder_mead, Archipelago, Island, NmOptions, SgaConfig, DEFAULT_TOPOLOGY_PROBABILITY};
use crate::ephemeris::PlanetSet;
use crate::error::{Error, Result};
use crate::ltto::{vector_bounds, Layout, LttoProblem, LttoSettings, Sequence};
use crate::rng::stream;

pub const GRID_HEADER: &str = "window_start_mjd,best_dv_ms,refined_dv_ms,departure_date_mjd";

/// Best result in one departure interval, before and after refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub window_start: f64,
    pub best_dv: f64,
    pub refined_dv: f64,
    pub departure_date: f64,
    pub genes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub window: (f64, f64),
    pub window_days: f64,
    pub islands_per_window: usize,
    pub topology_probability: f64,
    pub nm: NmOptions,
}

impl GridOptions {
    pub fn new(window: (f64, f64)) -> Self {
        Self {
            window,
            window_days: crate::ltto::WINDOW_DAYS,
            islands_per_window: 1,
            topology_probability: DEFAULT_TOPOLOGY_PROBABILITY,
            nm: NmOptions::default(),
        }
    }

    /// Interval start dates; the span must be a whole number of intervals.
    pub fn interval_starts(&self) -> Result<Vec<f64>> {
        let (a, b) = self.window;
        let count = (b - a) / self.window_days;
        let whole = count.round();
        if !(count > 0.0) || (count - whole).abs() > 1e-9 || whole < 1.0 {
            return Err(Error::InvalidWindow(format!(
                "[{a}, {b}] is not a positive multiple of {} days",
                self.window_days
            )));
        }
        if self.islands_per_window == 0 {
            return Err(Error::InvalidConfig("islands_per_window must be at least 1".into()));
        }
        Ok((0..whole as usize).map(|k| a + k as f64 * self.window_days).collect())
    }
}

/// Grid search over an arbitrary objective. `bounds_for` maps an interval
/// start to gene bounds; `frozen` marks genes Nelder-Mead must not move.
#[allow(clippy::too_many_arguments)]
pub fn grid_search_with<F, B>(
    sequence: &Sequence,
    opts: &GridOptions,
    bounds_for: B,
    frozen: &[bool],
    objective: &F,
    config: &SgaConfig,
    seed: u64,
) -> Result<Vec<GridRow>>
where
    F: Fn(&[f64]) -> f64 + Sync,
    B: Fn(f64) -> (Vec<f64>, Vec<f64>) + Sync,
{
    config.validate()?;
    let starts = opts.interval_starts()?;
    let label = sequence.to_string();
    let rows = starts
        .par_iter()
        .enumerate()
        .map(|(k, &w)| {
            let (lo, hi) = bounds_for(w);
            let islands = (0..opts.islands_per_window)
                .map(|i| {
                    let rng = stream(seed, &format!("grid/{label}/{k}"), i as u64);
                    let mut isl = Island::new(i, sequence.clone(), w, lo.clone(), hi.clone(), rng);
                    isl.target_body = None;
                    isl
                })
                .collect();
            let mut arch = Archipelago::new(
                islands,
                opts.topology_probability,
                stream(seed, &format!("grid-migration/{label}"), k as u64),
            );
            arch.evolve(objective, config);
            let best = arch.best().expect("evolved archipelago").clone();
            let refined = nelder_mead(objective, &best.genes, &lo, &hi, frozen, &opts.nm);
            let (refined_dv, genes) =
                if refined.f <= best.fitness { (refined.f, refined.x) } else { (best.fitness, best.genes.clone()) };
            GridRow { window_start: w, best_dv: best.fitness, refined_dv, departure_date: genes[0], genes }
        })
        .collect();
    Ok(rows)
}

/// Grid search of the departure date for one sequence.
pub fn grid_search(
    system: &PlanetSet,
    sequence: &Sequence,
    settings: &LttoSettings,
    opts: &GridOptions,
    config: &SgaConfig,
    seed: u64,
) -> Result<Vec<GridRow>> {
    let problem = LttoProblem::new(system, sequence.clone(), opts.window.0, settings.clone())?;
    let frozen = Layout::new(sequence, settings.free_count).integer_mask();
    let mut opts = opts.clone();
    opts.window_days = settings.window_days;
    grid_search_with(
        sequence,
        &opts,
        |w| vector_bounds(sequence, w, settings),
        &frozen,
        &|g: &[f64]| problem.objective(g),
        config,
        seed,
    )
}

pub fn write_grid_csv<W: Write>(rows: &[GridRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(GRID_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.window_start.to_string(),
            r.best_dv.to_string(),
            r.refined_dv.to_string(),
            r.departure_date.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
