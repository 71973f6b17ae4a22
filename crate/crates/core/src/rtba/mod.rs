//! Recursive target-body search over flyby sequences.
//!
//! Each recursion draws a Monte-Carlo sample of the unevaluated sub-tree
//! below the current pseudo-sequence (PS), scores every drawn sequence with
//! the island model, aggregates the scores per target body (the flyby right
//! after the PS) and appends the best target body to the PS.

mod ranking;
mod tree;

use std::collections::BTreeSet;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ranking::{
    extract_optimal_group, rank_records, write_journal, write_ranking_csv, RankedRecord, RANKING_HEADER,
};
pub use tree::{candidate_bodies, complexity, round_robin, sample_sequences, suffixes_starting_with, Sample, SubTree};

use crate::ephemeris::{Planet, PlanetSet};
use crate::error::{Error, Result};
use crate::evolve::{optimize_sequence, SgaConfig, DEFAULT_TOPOLOGY_PROBABILITY};
use crate::ltto::{LttoSettings, Sequence};
use crate::rng::stream;
use crate::shaping::INFEASIBLE_DV;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtbaConfig {
    pub departure_body: Planet,
    pub arrival_body: Planet,
    pub max_gas: usize,
    /// Fraction of the remaining sub-tree evaluated per recursion.
    pub q: f64,
    /// Islands per sequence.
    pub p: usize,
    pub cpu_count: usize,
    pub max_recursions: usize,
    /// Min/mean blend at the target-body level.
    pub xi: f64,
    /// Min/mean blend at the sequence level.
    pub chi: f64,
    pub departure_window: (f64, f64),
    pub seed: u64,
    pub topology_probability: f64,
    pub sga: SgaConfig,
    pub ltto: LttoSettings,
}

impl Default for RtbaConfig {
    fn default() -> Self {
        Self {
            departure_body: Planet::Earth,
            arrival_body: Planet::Jupiter,
            max_gas: 3,
            q: 0.5,
            p: 14,
            cpu_count: 42,
            max_recursions: 2,
            xi: 0.7,
            chi: 0.7,
            departure_window: (61400.0, 63400.0),
            seed: 0,
            topology_probability: DEFAULT_TOPOLOGY_PROBABILITY,
            sga: SgaConfig::default(),
            ltto: LttoSettings::default(),
        }
    }
}

impl RtbaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad(format!("q must lie in (0, 1], got {}", self.q));
        }
        for (name, v) in [("xi", self.xi), ("chi", self.chi), ("topology_probability", self.topology_probability)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.p < 1 {
            return bad("p must be at least 1".into());
        }
        if self.cpu_count < 1 {
            return bad("cpu_count must be at least 1".into());
        }
        let (a, b) = self.departure_window;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return bad(format!("departure window [{a}, {b}] is empty"));
        }
        if !self.cpu_count.is_multiple_of(self.p) {
            warn!(
                "cpu_count {} is not a multiple of p {}; {} sequences run at once",
                self.cpu_count,
                self.p,
                self.batch_size()
            );
        }
        self.sga.validate()
    }

    /// Sequences evaluated concurrently.
    pub fn batch_size(&self) -> usize {
        (self.cpu_count / self.p.max(1)).max(1)
    }
}

/// Scores of one evaluated sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub sequence: Sequence,
    pub island_dvs: Vec<f64>,
    pub f_s: f64,
    pub min_dv: f64,
    pub mean_dv: f64,
    pub recursion_found: usize,
    pub feasible: bool,
}

impl SequenceRecord {
    pub fn new(sequence: Sequence, island_dvs: Vec<f64>, chi: f64, recursion_found: usize) -> Self {
        let (min_dv, mean_dv) = min_mean(&island_dvs);
        let feasible = min_dv < INFEASIBLE_DV;
        let f_s = blend(&island_dvs, chi);
        Self { sequence, island_dvs, f_s, min_dv, mean_dv, recursion_found, feasible }
    }
}

fn min_mean(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (INFEASIBLE_DV, INFEASIBLE_DV);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (min, mean)
}

/// `w · min + (1 - w) · mean`, clamped into `[min, mean]` against rounding.
pub fn blend(values: &[f64], w: f64) -> f64 {
    let (min, mean) = min_mean(values);
    (w * min + (1.0 - w) * mean).clamp(min, mean.max(min))
}

/// Sequence fitness from the island ΔVs.
pub fn sequence_fitness(island_dvs: &[f64], chi: f64) -> f64 {
    blend(island_dvs, chi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbCandidate {
    pub body: Planet,
    pub member_records: Vec<SequenceRecord>,
    pub f_tb: f64,
}

/// Fills in `f_tb` for each candidate; candidates without members are
/// dropped with a warning.
pub fn tb_fitness(candidates: Vec<TbCandidate>, xi: f64) -> Vec<TbCandidate> {
    candidates
        .into_iter()
        .filter_map(|mut c| {
            if c.member_records.is_empty() {
                warn!("target body {} has no evaluated sequences", c.body);
                return None;
            }
            let fs: Vec<f64> = c.member_records.iter().map(|r| r.f_s).collect();
            c.f_tb = blend(&fs, xi);
            Some(c)
        })
        .collect()
}

/// Scores one sequence as a list of per-island ΔVs.
pub trait SequenceEvaluator: Sync {
    fn evaluate(&self, sequence: &Sequence) -> Result<Vec<f64>>;
}

/// The island-model evaluator used in real runs.
#[derive(Debug, Clone)]
pub struct LttoEvaluator<'a> {
    pub system: &'a PlanetSet,
    pub config: &'a RtbaConfig,
}

impl SequenceEvaluator for LttoEvaluator<'_> {
    fn evaluate(&self, sequence: &Sequence) -> Result<Vec<f64>> {
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
        Ok(run.island_dvs())
    }
}

/// Runs the island model on one sequence and wraps the result.
pub fn evaluate_sequence(
    system: &PlanetSet,
    sequence: &Sequence,
    cfg: &RtbaConfig,
    recursion: usize,
) -> Result<SequenceRecord> {
    let dvs = LttoEvaluator { system, config: cfg }.evaluate(sequence)?;
    Ok(SequenceRecord::new(sequence.clone(), dvs, cfg.chi, recursion))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSummary {
    pub index: usize,
    pub complexity: u64,
    pub budget: usize,
    pub evaluated: usize,
    pub exhausted: bool,
    pub chosen: Option<Planet>,
    pub candidates: Vec<(Planet, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    /// Fixed flybys after the departure body.
    pub pseudo_sequence: Vec<Planet>,
    pub evaluated_set: BTreeSet<Sequence>,
    pub recursion_index: usize,
    /// Records in evaluation order.
    pub records: Vec<SequenceRecord>,
    pub history: Vec<RecursionSummary>,
    pub finished: bool,
}

impl SearchState {
    pub fn new() -> Self {
        Self {
            pseudo_sequence: Vec::new(),
            evaluated_set: BTreeSet::new(),
            recursion_index: 0,
            records: Vec::new(),
            history: Vec::new(),
            finished: false,
        }
    }
}

impl Default for SearchState {
    fn default() -> Self {
        Self::new()
    }
}

/// Everything the outer loop needs besides the state.
pub struct RtbaContext<'a> {
    pub system: &'a PlanetSet,
    pub config: &'a RtbaConfig,
    pub evaluator: &'a dyn SequenceEvaluator,
    pub candidates: Vec<Planet>,
}

impl<'a> RtbaContext<'a> {
    pub fn new(system: &'a PlanetSet, config: &'a RtbaConfig, evaluator: &'a dyn SequenceEvaluator) -> Result<Self> {
        config.validate()?;
        system.get(config.departure_body)?;
        let candidates = candidate_bodies(system, config.arrival_body)?;
        Ok(Self { system, config, evaluator, candidates })
    }

    pub fn sub_tree(&self, state: &SearchState) -> SubTree {
        SubTree {
            departure: self.config.departure_body,
            prefix: state.pseudo_sequence.clone(),
            arrival: self.config.arrival_body,
            candidates: self.candidates.clone(),
            depth: self.config.max_gas.saturating_sub(state.pseudo_sequence.len()),
        }
    }

    pub fn full_complexity(&self) -> Result<u64> {
        complexity(self.candidates.len() as u64, self.config.max_gas as u32)
    }

    fn semi_major_axis(&self, p: Planet) -> f64 {
        self.system.get(p).map_or(f64::INFINITY, |b| b.elements.a)
    }

    /// Target-body candidates for the current PS over all records so far.
    pub fn tb_candidates(&self, state: &SearchState) -> Vec<TbCandidate> {
        let k = state.pseudo_sequence.len();
        self.candidates
            .iter()
            .map(|&body| TbCandidate {
                body,
                member_records: state
                    .records
                    .iter()
                    .filter(|r| {
                        let f = r.sequence.flybys();
                        f.len() > k && f[..k] == state.pseudo_sequence[..] && f[k] == body
                    })
                    .cloned()
                    .collect(),
                f_tb: f64::NAN,
            })
            .collect()
    }
}

/// One recursion: sample, evaluate in batches, score target bodies and
/// extend the PS. `on_record` sees each new record in evaluation order.
pub fn run_recursion(
    ctx: &RtbaContext<'_>,
    mut state: SearchState,
    on_record: &mut dyn FnMut(&SequenceRecord) -> Result<()>,
) -> Result<SearchState> {
    let cfg = ctx.config;
    let tree = ctx.sub_tree(&state);
    let c = tree.complexity()?;
    let budget = (cfg.q * c as f64).ceil() as usize;
    let mut rng = stream(cfg.seed, "rtba/sample", state.recursion_index as u64);
    let sample = sample_sequences(&tree, &state.evaluated_set, budget, &mut rng);

    for batch in sample.sequences.chunks(cfg.batch_size()) {
        let dvs: Vec<Result<Vec<f64>>> = batch.par_iter().map(|s| ctx.evaluator.evaluate(s)).collect();
        for (seq, dv) in batch.iter().zip(dvs) {
            let record = SequenceRecord::new(seq.clone(), dv?, cfg.chi, state.recursion_index);
            on_record(&record)?;
            state.evaluated_set.insert(seq.clone());
            state.records.push(record);
        }
    }

    let scored = tb_fitness(ctx.tb_candidates(&state), cfg.xi);
    let chosen = scored
        .iter()
        .min_by(|a, b| {
            a.f_tb.total_cmp(&b.f_tb).then(ctx.semi_major_axis(a.body).total_cmp(&ctx.semi_major_axis(b.body)))
        })
        .map(|c| c.body);

    state.history.push(RecursionSummary {
        index: state.recursion_index,
        complexity: c,
        budget,
        evaluated: sample.sequences.len(),
        exhausted: sample.exhausted,
        chosen,
        candidates: scored.iter().map(|c| (c.body, c.f_tb)).collect(),
    });
    match chosen {
        Some(tb) if tree.depth > 0 => state.pseudo_sequence.push(tb),
        _ => state.finished = true,
    }
    if sample.exhausted {
        state.finished = true;
    }
    state.recursion_index += 1;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtbaResult {
    pub ranking: Vec<RankedRecord>,
    pub state: SearchState,
    /// Evaluated fraction of the full tree.
    pub q_total: f64,
}

impl RtbaResult {
    pub fn optimal_group(&self) -> impl Iterator<Item = &RankedRecord> {
        self.ranking.iter().filter(|r| r.in_optimal_group)
    }
}

/// `|evaluated| / C(m, max_gas)`.
pub fn evaluated_fraction(ctx: &RtbaContext<'_>, state: &SearchState) -> Result<f64> {
    Ok(state.evaluated_set.len() as f64 / ctx.full_complexity()? as f64)
}

/// Full search with a caller-supplied evaluator.
pub fn run_rtba_with(
    ctx: &RtbaContext<'_>,
    on_record: &mut dyn FnMut(&SequenceRecord) -> Result<()>,
) -> Result<RtbaResult> {
    let mut state = SearchState::new();
    while !state.finished && state.recursion_index < ctx.config.max_recursions.max(1) {
        state = run_recursion(ctx, state, on_record)?;
    }
    let ranking = rank_records(ctx.system, &state.records);
    let q_total = evaluated_fraction(ctx, &state)?;
    Ok(RtbaResult { ranking, state, q_total })
}

/// Full search with the island-model evaluator.
pub fn run_rtba(system: &PlanetSet, cfg: &RtbaConfig) -> Result<RtbaResult> {
    let evaluator = LttoEvaluator { system, config: cfg };
    let ctx = RtbaContext::new(system, cfg, &evaluator)?;
    run_rtba_with(&ctx, &mut |_| Ok(()))
}
