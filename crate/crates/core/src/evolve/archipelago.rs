use rand::Rng as _;
use rayon::prelude::*;

use super::{clip, score, Individual, Island, SgaConfig};
use crate::ephemeris::PlanetSet;
use crate::error::{Error, Result};
use crate::ltto::{vector_bounds, LttoProblem, LttoSettings, Sequence};
use crate::rng::{stream, Rng};

pub const DEFAULT_TOPOLOGY_PROBABILITY: f64 = 0.01;

/// Islands evolved in lock-step with migration at generation boundaries.
#[derive(Debug, Clone)]
pub struct Archipelago {
    pub islands: Vec<Island>,
    /// Chance that one directed edge fires in one generation.
    pub topology_probability: f64,
    /// Number of migrants delivered so far.
    pub migrations: usize,
    rng: Rng,
}

impl Archipelago {
    pub fn new(islands: Vec<Island>, topology_probability: f64, rng: Rng) -> Self {
        Self { islands, topology_probability, migrations: 0, rng }
    }

    /// Directed edges between distinct islands with the same target body.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.islands.len();
        (0..n)
            .flat_map(|s| (0..n).map(move |d| (s, d)))
            .filter(|&(s, d)| s != d && self.islands[s].target_body == self.islands[d].target_body)
            .collect()
    }

    /// One synchronous exchange. Every edge draws once; firing edges copy
    /// the source's pre-exchange best over the destination's current worst.
    /// Migrants are clipped to the destination's bounds and re-scored if the
    /// clip moved them.
    pub fn migrate<F: Fn(&[f64]) -> f64>(&mut self, objective: &F) -> usize {
        let snapshot: Vec<Option<Individual>> = self.islands.iter().map(|i| i.best.clone()).collect();
        let mut delivered = 0;
        for (src, dst) in self.edges() {
            let fire = self.rng.random::<f64>() < self.topology_probability;
            let Some(migrant) = snapshot[src].as_ref().filter(|_| fire) else { continue };
            let island = &mut self.islands[dst];
            let Some(worst) = island.worst_index() else { continue };
            let mut genes = migrant.genes.clone();
            clip(&mut genes, &island.lower, &island.upper);
            let fitness = if genes == migrant.genes { migrant.fitness } else { score(objective, &genes) };
            let ind = Individual { genes, fitness };
            island.offer(&ind);
            island.population[worst] = ind;
            delivered += 1;
        }
        self.migrations += delivered;
        delivered
    }

    /// Initializes every island, then alternates a parallel generation step
    /// with a migration barrier.
    pub fn evolve<F: Fn(&[f64]) -> f64 + Sync>(&mut self, objective: &F, config: &SgaConfig) {
        self.islands.par_iter_mut().for_each(|i| i.initialize(objective, config));
        for _ in 0..config.generations {
            self.islands.par_iter_mut().for_each(|i| i.step(objective, config));
            self.migrate(objective);
        }
    }

    pub fn best(&self) -> Option<&Individual> {
        self.islands.iter().filter_map(|i| i.best.as_ref()).min_by(|a, b| a.fitness.total_cmp(&b.fitness))
    }
}

/// Departure-window start for each of `p` islands.
///
/// The span is cut into `floor(span / window_days)` tiles (at least one).
/// With no more islands than tiles the islands spread evenly over the tiles;
/// otherwise they cycle through them.
pub fn tile_windows(window: (f64, f64), p: usize, window_days: f64) -> Result<Vec<f64>> {
    let span = window.1 - window.0;
    if !(span > 0.0) || !(window_days > 0.0) {
        return Err(Error::InvalidWindow(format!("[{}, {}] with {window_days}-day tiles", window.0, window.1)));
    }
    if p == 0 {
        return Err(Error::InvalidConfig("at least one island is required".into()));
    }
    let tiles = ((span / window_days).floor() as usize).max(1);
    Ok((0..p)
        .map(|i| {
            let t = if p <= tiles { i * tiles / p } else { i % tiles };
            window.0 + t as f64 * window_days
        })
        .collect())
}

/// Outcome of optimizing one sequence with `p` islands.
#[derive(Debug, Clone)]
pub struct SequenceRun {
    pub sequence: Sequence,
    pub window_starts: Vec<f64>,
    /// Best individual of each island.
    pub island_best: Vec<Individual>,
    pub migrations: usize,
}

impl SequenceRun {
    pub fn island_dvs(&self) -> Vec<f64> {
        self.island_best.iter().map(|i| i.fitness).collect()
    }

    pub fn best(&self) -> &Individual {
        self.island_best.iter().min_by(|a, b| a.fitness.total_cmp(&b.fitness)).expect("at least one island")
    }
}

/// Runs the island model on one sequence. Island seeds depend only on
/// `(seed, sequence, island index)`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_sequence(
    system: &PlanetSet,
    sequence: &Sequence,
    window: (f64, f64),
    p: usize,
    settings: &LttoSettings,
    config: &SgaConfig,
    topology_probability: f64,
    seed: u64,
) -> Result<SequenceRun> {
    config.validate()?;
    let starts = tile_windows(window, p, settings.window_days)?;
    let problem = LttoProblem::new(system, sequence.clone(), window.0, settings.clone())?;
    let label = sequence.to_string();
    let islands = starts
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (lo, hi) = vector_bounds(sequence, w, settings);
            Island::new(i, sequence.clone(), w, lo, hi, stream(seed, &format!("island/{label}"), i as u64))
        })
        .collect();
    let mut arch = Archipelago::new(islands, topology_probability, stream(seed, &format!("migration/{label}"), 0));
    let objective = |g: &[f64]| problem.objective(g);
    arch.evolve(&objective, config);
    Ok(SequenceRun {
        sequence: sequence.clone(),
        window_starts: starts,
        island_best: arch.islands.iter().map(|i| i.best.clone().expect("initialized island")).collect(),
        migrations: arch.migrations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::Planet;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn make(ids: &[(usize, &str)], prob: f64) -> Archipelago {
        let cfg = SgaConfig { population_size: 6, generations: 1, ..SgaConfig::default() };
        let islands = ids
            .iter()
            .map(|&(i, s)| {
                let mut isl =
                    Island::new(i, s.parse().unwrap(), 0.0, vec![-1.0; 3], vec![1.0; 3], stream(5, "t", i as u64));
                isl.initialize(&sphere, &cfg);
                isl
            })
            .collect();
        Archipelago::new(islands, prob, stream(5, "m", 0))
    }

    #[test]
    fn zero_probability_is_identity() {
        let mut a = make(&[(0, "EMJ"), (1, "EMJ"), (2, "EMJ")], 0.0);
        let before: Vec<_> = a.islands.iter().map(|i| i.population.clone()).collect();
        assert_eq!(a.migrate(&sphere), 0);
        let after: Vec<_> = a.islands.iter().map(|i| i.population.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn forced_edge_swaps_bests() {
        let mut a = make(&[(0, "EMJ"), (1, "EMJ")], 1.0);
        let b0 = a.islands[0].best.clone().unwrap();
        let b1 = a.islands[1].best.clone().unwrap();
        assert_eq!(a.migrate(&sphere), 2);
        assert!(a.islands[0].population.contains(&b1));
        assert!(a.islands[1].population.contains(&b0));
    }

    #[test]
    fn different_targets_never_exchange() {
        let mut a = make(&[(0, "EMJ"), (1, "EVJ"), (2, "EJ")], 1.0);
        assert!(a.edges().is_empty());
        let before: Vec<_> = a.islands.iter().map(|i| i.population.clone()).collect();
        for _ in 0..1000 {
            assert_eq!(a.migrate(&sphere), 0);
        }
        let after: Vec<_> = a.islands.iter().map(|i| i.population.clone()).collect();
        assert_eq!(before, after);
        assert_eq!(a.islands[0].target_body, Some(Planet::Mars));
    }

    #[test]
    fn migrants_are_clipped_and_rescored() {
        let mut a = make(&[(0, "EMJ"), (1, "EMJ")], 1.0);
        a.islands[1].lower = vec![0.5; 3];
        a.islands[1].upper = vec![1.0; 3];
        for ind in &mut a.islands[1].population {
            ind.genes = vec![0.75; 3];
            ind.fitness = sphere(&ind.genes);
        }
        a.islands[0].best = Some(Individual { genes: vec![0.0; 3], fitness: 0.0 });
        a.migrate(&sphere);
        let m = a.islands[1].population.iter().find(|i| i.genes == vec![0.5; 3]).unwrap();
        assert_eq!(m.fitness, 0.75);
    }

    #[test]
    fn window_tiling() {
        let w = tile_windows((61400.0, 61640.0), 4, 60.0).unwrap();
        assert_eq!(w, vec![61400.0, 61460.0, 61520.0, 61580.0]);
        let w = tile_windows((61400.0, 61520.0), 5, 60.0).unwrap();
        assert_eq!(w, vec![61400.0, 61460.0, 61400.0, 61460.0, 61400.0]);
        let w = tile_windows((61400.0, 61640.0), 2, 60.0).unwrap();
        assert_eq!(w, vec![61400.0, 61520.0]);
        assert_eq!(tile_windows((0.0, 10.0), 3, 60.0).unwrap(), vec![0.0; 3]);
        assert!(tile_windows((10.0, 10.0), 3, 60.0).is_err());
    }

    #[test]
    fn parallel_evolution_is_deterministic() {
        let cfg = SgaConfig { population_size: 10, generations: 20, ..SgaConfig::default() };
        let run = || {
            let mut a = make(&[(0, "EMJ"), (1, "EMJ"), (2, "EMJ")], 0.3);
            a.evolve(&sphere, &cfg);
            a.islands.iter().map(|i| i.population.clone()).collect::<Vec<_>>()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
        assert_eq!(one, four);
    }
}
