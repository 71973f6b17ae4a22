//! Counting, enumerating and sampling the sequence tree.

use std::collections::BTreeSet;

use rand::seq::index;

use crate::ephemeris::{Planet, PlanetSet};
use crate::error::{Error, Result};
use crate::ltto::Sequence;
use crate::rng::Rng;

/// `Σ_{i=0}^{n} m^i`: sequences with at most `n` flybys drawn from `m`
/// candidates.
pub fn complexity(m: u64, n: u32) -> Result<u64> {
    let overflow = || Error::ComplexityOverflow { m, n };
    let mut total: u64 = 0;
    let mut term: u64 = 1;
    for i in 0..=n {
        total = total.checked_add(term).ok_or_else(overflow)?;
        if i < n {
            term = term.checked_mul(m).ok_or_else(overflow)?;
        }
    }
    Ok(total)
}

/// Flyby candidates: every body whose semi-major axis does not exceed the
/// arrival body's, the arrival body included, sorted by semi-major axis.
pub fn candidate_bodies(system: &PlanetSet, arrival: Planet) -> Result<Vec<Planet>> {
    let a_max = system.get(arrival)?.elements.a;
    Ok(system.bodies().iter().filter(|b| b.elements.a <= a_max).map(|b| b.id).collect())
}

/// Every flyby suffix of length `1..=depth` that starts with `first`, in
/// depth-first lexicographic order of `candidates`.
pub fn suffixes_starting_with(first: Planet, candidates: &[Planet], depth: usize) -> Vec<Vec<Planet>> {
    let mut out = Vec::new();
    if depth == 0 {
        return out;
    }
    let mut stack = vec![vec![first]];
    while let Some(s) = stack.pop() {
        if s.len() < depth {
            for &c in candidates.iter().rev() {
                let mut next = s.clone();
                next.push(c);
                stack.push(next);
            }
        }
        out.push(s);
    }
    out
}

/// The part of the tree below a fixed prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTree {
    pub departure: Planet,
    pub prefix: Vec<Planet>,
    pub arrival: Planet,
    pub candidates: Vec<Planet>,
    /// Flybys still free after the prefix.
    pub depth: usize,
}

impl SubTree {
    pub fn complexity(&self) -> Result<u64> {
        complexity(self.candidates.len() as u64, self.depth as u32)
    }

    pub fn sequence(&self, suffix: &[Planet]) -> Sequence {
        let mut flybys = self.prefix.clone();
        flybys.extend_from_slice(suffix);
        Sequence::from_parts(self.departure, &flybys, self.arrival)
    }

    /// Members grouped by the first free flyby, in candidate order.
    pub fn groups(&self) -> Vec<(Planet, Vec<Sequence>)> {
        self.candidates
            .iter()
            .map(|&tb| {
                let seqs =
                    suffixes_starting_with(tb, &self.candidates, self.depth).iter().map(|s| self.sequence(s)).collect();
                (tb, seqs)
            })
            .collect()
    }

    /// The member with no further flybys.
    pub fn terminal(&self) -> Sequence {
        self.sequence(&[])
    }

    pub fn all(&self) -> Vec<Sequence> {
        let mut out = vec![self.terminal()];
        out.extend(self.groups().into_iter().flat_map(|(_, g)| g));
        out
    }
}

/// Spreads `count` over groups one at a time in order, skipping groups that
/// are full. Returns the per-group allocation.
pub fn round_robin(count: usize, capacities: &[usize]) -> Vec<usize> {
    let mut alloc = vec![0; capacities.len()];
    let mut left = count;
    while left > 0 {
        let mut progressed = false;
        for (a, &cap) in alloc.iter_mut().zip(capacities) {
            if left == 0 {
                break;
            }
            if *a < cap {
                *a += 1;
                left -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// Result of one Monte-Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sequences: Vec<Sequence>,
    /// Fewer sequences than requested were left.
    pub exhausted: bool,
}

/// Draws up to `count` unevaluated members of `tree`, spread round-robin
/// over the first-flyby groups. The flyby-free member is only drawn once
/// every group is used up.
pub fn sample_sequences(tree: &SubTree, evaluated: &BTreeSet<Sequence>, count: usize, rng: &mut Rng) -> Sample {
    let groups: Vec<Vec<Sequence>> =
        tree.groups().into_iter().map(|(_, g)| g.into_iter().filter(|s| !evaluated.contains(s)).collect()).collect();
    let caps: Vec<usize> = groups.iter().map(Vec::len).collect();
    let alloc = round_robin(count, &caps);

    let mut sequences = Vec::with_capacity(count);
    for (pool, &k) in groups.iter().zip(&alloc) {
        let mut picks = index::sample(rng, pool.len(), k).into_vec();
        picks.sort_unstable();
        sequences.extend(picks.into_iter().map(|i| pool[i].clone()));
    }
    let terminal = tree.terminal();
    if sequences.len() < count && !evaluated.contains(&terminal) {
        sequences.push(terminal);
    }
    Sample { exhausted: sequences.len() < count, sequences }
}
