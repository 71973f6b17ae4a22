//! Population-based global search and local refinement.
//!
//! [`sga_evolve`] runs a simple genetic algorithm on one [`Island`].
//! [`Archipelago`] evolves several islands in lock-step and exchanges their
//! best individuals along same-target-body edges. [`nelder_mead`] polishes a
//! single point, and [`grid_search`] combines both over a tiled departure
//! window.

mod archipelago;
mod grid;
mod nelder_mead;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use archipelago::{optimize_sequence, tile_windows, Archipelago, SequenceRun, DEFAULT_TOPOLOGY_PROBABILITY};
pub use grid::{grid_search, grid_search_with, write_grid_csv, GridOptions, GridRow, GRID_HEADER};
pub use nelder_mead::{nelder_mead, NmOptions, NmResult};

use crate::ephemeris::Planet;
use crate::error::{Error, Result};
use crate::ltto::Sequence;
use crate::rng::Rng;
use crate::shaping::INFEASIBLE_DV;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` means `1 / dimension`.
    pub mutation_rate: Option<f64>,
    /// Gaussian mutation width as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for SgaConfig {
    fn default() -> Self {
        Self {
            population_size: 1200,
            generations: 300,
            crossover_rate: 0.9,
            mutation_rate: None,
            mutation_sigma: 0.1,
            tournament_size: 2,
            elitism_count: 2,
            seed: 0,
        }
    }
}

impl SgaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return bad(format!("population_size must be even and at least 4, got {}", self.population_size));
        }
        if self.generations < 1 {
            return bad("generations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover_rate must lie in [0, 1], got {}", self.crossover_rate));
        }
        if let Some(m) = self.mutation_rate {
            if !(0.0..=1.0).contains(&m) {
                return bad(format!("mutation_rate must lie in [0, 1], got {m}"));
            }
        }
        if !(self.mutation_sigma > 0.0) || !self.mutation_sigma.is_finite() {
            return bad(format!("mutation_sigma must be positive, got {}", self.mutation_sigma));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population_size {
            return bad(format!("tournament_size must lie in [1, population_size], got {}", self.tournament_size));
        }
        if self.elitism_count >= self.population_size {
            return bad(format!("elitism_count must be below population_size, got {}", self.elitism_count));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub fitness: f64,
}

/// Objective wrapper: non-finite values become the infeasibility sentinel.
pub(crate) fn score<F: Fn(&[f64]) -> f64>(objective: &F, genes: &[f64]) -> f64 {
    let f = objective(genes);
    if f.is_finite() {
        f
    } else {
        INFEASIBLE_DV
    }
}

pub(crate) fn clip(genes: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((g, &lo), &hi) in genes.iter_mut().zip(lower).zip(upper) {
        *g = g.clamp(lo, hi);
    }
}

/// One sub-population with its own bounds and random stream.
#[derive(Debug, Clone)]
pub struct Island {
    pub id: usize,
    pub sequence: Sequence,
    /// Migration only connects islands that share this key.
    pub target_body: Option<Planet>,
    pub window_start: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub population: Vec<Individual>,
    /// Best individual ever seen on this island.
    pub best: Option<Individual>,
    /// Best-ever fitness after initialization and after each generation.
    pub history: Vec<f64>,
    pub rng: Rng,
}

impl Island {
    pub fn new(id: usize, sequence: Sequence, window_start: f64, lower: Vec<f64>, upper: Vec<f64>, rng: Rng) -> Self {
        let target_body = sequence.flybys().first().copied();
        Self {
            id,
            sequence,
            target_body,
            window_start,
            lower,
            upper,
            population: Vec::new(),
            best: None,
            history: Vec::new(),
            rng,
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn best_fitness(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.fitness)
    }

    /// Index of the worst member, last one on ties.
    pub fn worst_index(&self) -> Option<usize> {
        self.population
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.fitness.total_cmp(&b.1.fitness).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    fn offer(&mut self, ind: &Individual) {
        if ind.fitness < self.best_fitness() {
            self.best = Some(ind.clone());
        }
    }

    fn random_genes(&mut self) -> Vec<f64> {
        let (lo, hi) = (&self.lower, &self.upper);
        let rng = &mut self.rng;
        lo.iter().zip(hi).map(|(&l, &h)| if h > l { rng.random_range(l..h) } else { l }).collect()
    }

    /// Draws a uniform random population unless one already exists.
    pub fn initialize<F: Fn(&[f64]) -> f64>(&mut self, objective: &F, config: &SgaConfig) {
        if !self.population.is_empty() {
            return;
        }
        for _ in 0..config.population_size {
            let genes = self.random_genes();
            let fitness = score(objective, &genes);
            let ind = Individual { genes, fitness };
            self.offer(&ind);
            self.population.push(ind);
        }
        self.history.push(self.best_fitness());
    }

    fn tournament(&mut self, k: usize) -> usize {
        let n = self.population.len();
        let mut winner = self.rng.random_range(0..n);
        for _ in 1..k {
            let c = self.rng.random_range(0..n);
            if self.population[c].fitness < self.population[winner].fitness {
                winner = c;
            }
        }
        winner
    }

    fn mutate(&mut self, genes: &mut [f64], rate: f64, sigma: f64) {
        for (i, g) in genes.iter_mut().enumerate() {
            if self.rng.random::<f64>() < rate {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *g += z * sigma * (self.upper[i] - self.lower[i]);
            }
        }
        clip(genes, &self.lower, &self.upper);
    }

    /// One generation: elitism, then tournament selection, uniform crossover
    /// and Gaussian mutation until the population is refilled.
    pub fn step<F: Fn(&[f64]) -> f64>(&mut self, objective: &F, config: &SgaConfig) {
        let n = config.population_size;
        let dim = self.dimension();
        let rate = config.mutation_rate.unwrap_or(1.0 / dim.max(1) as f64);

        let mut order: Vec<usize> = (0..self.population.len()).collect();
        order.sort_by(|&a, &b| self.population[a].fitness.total_cmp(&self.population[b].fitness).then(a.cmp(&b)));
        let mut next: Vec<Individual> =
            order.iter().take(config.elitism_count).map(|&i| self.population[i].clone()).collect();

        while next.len() < n {
            let pa = self.tournament(config.tournament_size);
            let pb = self.tournament(config.tournament_size);
            let mut a = self.population[pa].genes.clone();
            let mut b = self.population[pb].genes.clone();
            if self.rng.random::<f64>() < config.crossover_rate {
                for i in 0..dim {
                    if self.rng.random::<bool>() {
                        std::mem::swap(&mut a[i], &mut b[i]);
                    }
                }
            }
            self.mutate(&mut a, rate, config.mutation_sigma);
            self.mutate(&mut b, rate, config.mutation_sigma);
            for genes in [a, b] {
                if next.len() < n {
                    let fitness = score(objective, &genes);
                    let ind = Individual { genes, fitness };
                    self.offer(&ind);
                    next.push(ind);
                }
            }
        }
        self.population = next;
        self.history.push(self.best_fitness());
    }
}

/// Runs `config.generations` generations on `island`, initializing it first
/// when its population is empty.
pub fn sga_evolve<F: Fn(&[f64]) -> f64>(mut island: Island, objective: &F, config: &SgaConfig) -> Island {
    island.initialize(objective, config);
    for _ in 0..config.generations {
        island.step(objective, config);
    }
    island
}
