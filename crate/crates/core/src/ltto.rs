//! The inner loop: one fixed body sequence, one flat decision vector, one ΔV.
//!
//! Gene layout for `L` legs, `G = L - 1` flybys and `c` free coefficients per
//! leg:
//!
//! ```text
//! [t_dep, tof_1..tof_L, rev_1..rev_L, coeffs_1..coeffs_L, (v, h_p, β, θ, φ)_1..G]
//! ```
//!
//! Each coefficient block is `[radial.., normal.., axial..]`. Departure and
//! arrival excess velocities and their angles are fixed at zero and have no
//! genes. Revolution genes are continuous in `[0, 3)` and floored on decode.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ephemeris::{Planet, PlanetSet, DAY};
use crate::error::{Error, Result};
use crate::flyby::{self, FlybyParams};
use crate::shaping::{self, free_per_axis, FreeCoeffs, ShapedLeg, INFEASIBLE_DV};

pub const TOF_MIN_DAYS: f64 = 100.0;
pub const TOF_MAX_DAYS: f64 = 4500.0;
pub const WINDOW_DAYS: f64 = 60.0;
pub const COEFF_BOUND: f64 = 3e4;
pub const MAX_REVS: u32 = 2;
const REV_GENE_MAX: f64 = 3.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sequence {
    bodies: Vec<Planet>,
}

impl Sequence {
    pub fn new(bodies: Vec<Planet>) -> Result<Self> {
        if bodies.len() < 2 {
            return Err(Error::InvalidSequence(format!(
                "need a departure and an arrival body, got {} bodies",
                bodies.len()
            )));
        }
        Ok(Self { bodies })
    }

    /// `departure + flybys + arrival`.
    pub fn from_parts(departure: Planet, flybys: &[Planet], arrival: Planet) -> Self {
        let mut bodies = Vec::with_capacity(flybys.len() + 2);
        bodies.push(departure);
        bodies.extend_from_slice(flybys);
        bodies.push(arrival);
        Self { bodies }
    }

    pub fn bodies(&self) -> &[Planet] {
        &self.bodies
    }

    pub fn departure(&self) -> Planet {
        self.bodies[0]
    }

    pub fn arrival(&self) -> Planet {
        *self.bodies.last().unwrap()
    }

    pub fn flybys(&self) -> &[Planet] {
        &self.bodies[1..self.bodies.len() - 1]
    }

    pub fn legs(&self) -> usize {
        self.bodies.len() - 1
    }

    pub fn gas(&self) -> usize {
        self.bodies.len() - 2
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bodies.iter().try_for_each(|b| write!(f, "{}", b.letter()))
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bodies = s
            .trim()
            .chars()
            .map(|c| {
                Planet::from_letter(c)
                    .ok_or_else(|| Error::InvalidSequence(format!("unknown body letter '{c}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bodies)
    }
}

impl TryFrom<String> for Sequence {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Sequence> for String {
    fn from(s: Sequence) -> String {
        s.to_string()
    }
}

/// Tunable parts of the inner-loop problem definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LttoSettings {
    pub free_count: usize,
    pub tof_min_days: f64,
    pub tof_max_days: f64,
    pub window_days: f64,
    pub coeff_bound: f64,
    /// Optional cap on `|f|`; violating trajectories are infeasible.
    pub max_thrust_accel: Option<f64>,
}

impl Default for LttoSettings {
    fn default() -> Self {
        Self {
            free_count: 1,
            tof_min_days: TOF_MIN_DAYS,
            tof_max_days: TOF_MAX_DAYS,
            window_days: WINDOW_DAYS,
            coeff_bound: COEFF_BOUND,
            max_thrust_accel: None,
        }
    }
}

/// Index map of the flat gene vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub legs: usize,
    pub gas: usize,
    pub coeffs_per_leg: usize,
}

impl Layout {
    pub fn new(seq: &Sequence, free_count: usize) -> Self {
        Self { legs: seq.legs(), gas: seq.gas(), coeffs_per_leg: 3 * free_per_axis(free_count) }
    }

    pub fn len(&self) -> usize {
        1 + 2 * self.legs + self.legs * self.coeffs_per_leg + 5 * self.gas
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tof(&self, leg: usize) -> usize {
        1 + leg
    }

    pub fn rev(&self, leg: usize) -> usize {
        1 + self.legs + leg
    }

    pub fn coeffs(&self, leg: usize) -> std::ops::Range<usize> {
        let start = 1 + 2 * self.legs + leg * self.coeffs_per_leg;
        start..start + self.coeffs_per_leg
    }

    pub fn flyby(&self, ga: usize) -> std::ops::Range<usize> {
        let start = 1 + 2 * self.legs + self.legs * self.coeffs_per_leg + 5 * ga;
        start..start + 5
    }

    /// Genes that encode integers (revolution counts).
    pub fn integer_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for k in 0..self.legs {
            mask[self.rev(k)] = true;
        }
        mask
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    /// MJD.
    pub departure_date: f64,
    /// Days, one per leg.
    pub tofs: Vec<f64>,
    pub n_revs: Vec<u32>,
    /// Flat `[radial.., normal.., axial..]` block per leg.
    pub free_coeffs: Vec<Vec<f64>>,
    pub flybys: Vec<FlybyParams>,
}

impl DecisionVector {
    pub fn decode(layout: &Layout, genes: &[f64]) -> Result<Self> {
        if genes.len() != layout.len() {
            return Err(Error::DimensionMismatch { expected: layout.len(), got: genes.len() });
        }
        Ok(Self {
            departure_date: genes[0],
            tofs: (0..layout.legs).map(|k| genes[layout.tof(k)]).collect(),
            n_revs: (0..layout.legs).map(|k| (genes[layout.rev(k)].max(0.0).floor() as u32).min(MAX_REVS)).collect(),
            free_coeffs: (0..layout.legs).map(|k| genes[layout.coeffs(k)].to_vec()).collect(),
            flybys: (0..layout.gas).map(|g| FlybyParams::from_genes(&genes[layout.flyby(g)])).collect(),
        })
    }

    pub fn to_genes(&self) -> Vec<f64> {
        let mut g = vec![self.departure_date];
        g.extend(&self.tofs);
        g.extend(self.n_revs.iter().map(|&n| f64::from(n)));
        for c in &self.free_coeffs {
            g.extend(c);
        }
        for f in &self.flybys {
            g.extend(f.to_genes());
        }
        g
    }
}

/// Lower and upper gene bounds for a sequence whose departure window opens at
/// `window_start` (MJD).
pub fn vector_bounds(seq: &Sequence, window_start: f64, settings: &LttoSettings) -> (Vec<f64>, Vec<f64>) {
    let layout = Layout::new(seq, settings.free_count);
    let mut lo = vec![0.0; layout.len()];
    let mut hi = vec![0.0; layout.len()];
    lo[0] = window_start;
    hi[0] = window_start + settings.window_days;
    for k in 0..layout.legs {
        lo[layout.tof(k)] = settings.tof_min_days;
        hi[layout.tof(k)] = settings.tof_max_days;
        lo[layout.rev(k)] = 0.0;
        hi[layout.rev(k)] = REV_GENE_MAX;
        for i in layout.coeffs(k) {
            lo[i] = -settings.coeff_bound;
            hi[i] = settings.coeff_bound;
        }
    }
    let (flo, fhi) = (FlybyParams::lower_bounds(), FlybyParams::upper_bounds());
    for g in 0..layout.gas {
        let r = layout.flyby(g);
        lo[r.clone()].copy_from_slice(&flo);
        hi[r].copy_from_slice(&fhi);
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySolution {
    pub legs: Vec<ShapedLeg>,
    pub total_delta_v: f64,
    pub decision: DecisionVector,
    pub feasible: bool,
    /// Why the trajectory is infeasible, when it is.
    pub failure: Option<Error>,
}

impl TrajectorySolution {
    pub fn leg_delta_v(&self) -> Vec<f64> {
        self.legs.iter().map(|l| l.delta_v).collect()
    }
}

/// Problem definition for one sequence and one departure window.
#[derive(Debug, Clone)]
pub struct LttoProblem<'a> {
    pub system: &'a PlanetSet,
    pub sequence: Sequence,
    pub window_start: f64,
    pub settings: LttoSettings,
    layout: Layout,
}

impl<'a> LttoProblem<'a> {
    pub fn new(system: &'a PlanetSet, sequence: Sequence, window_start: f64, settings: LttoSettings) -> Result<Self> {
        for b in sequence.bodies() {
            system.get(*b)?;
        }
        if settings.free_count > shaping::MAX_FREE_COUNT {
            return Err(Error::UnsupportedFreeCount(settings.free_count));
        }
        let layout = Layout::new(&sequence, settings.free_count);
        Ok(Self { system, sequence, window_start, settings, layout })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        vector_bounds(&self.sequence, self.window_start, &self.settings)
    }

    pub fn evaluate_genes(&self, genes: &[f64]) -> Result<TrajectorySolution> {
        let x = DecisionVector::decode(&self.layout, genes)?;
        Ok(evaluate(self.system, &self.sequence, &x, &self.settings))
    }

    /// Total ΔV, or the infeasibility sentinel.
    pub fn objective(&self, genes: &[f64]) -> f64 {
        match self.evaluate_genes(genes) {
            Ok(sol) if sol.feasible => sol.total_delta_v,
            _ => INFEASIBLE_DV,
        }
    }
}

/// Shapes every leg of `seq` under decision `x` and sums ΔV.
pub fn evaluate(system: &PlanetSet, seq: &Sequence, x: &DecisionVector, settings: &LttoSettings) -> TrajectorySolution {
    match try_evaluate(system, seq, x, settings) {
        Ok(legs) => {
            let total = legs.iter().map(|l| l.delta_v).sum();
            TrajectorySolution { legs, total_delta_v: total, decision: x.clone(), feasible: true, failure: None }
        }
        Err(e) => TrajectorySolution {
            legs: Vec::new(),
            total_delta_v: INFEASIBLE_DV,
            decision: x.clone(),
            feasible: false,
            failure: Some(e),
        },
    }
}

fn try_evaluate(
    system: &PlanetSet,
    seq: &Sequence,
    x: &DecisionVector,
    settings: &LttoSettings,
) -> Result<Vec<ShapedLeg>> {
    let layout = Layout::new(seq, settings.free_count);
    if x.tofs.len() != layout.legs
        || x.n_revs.len() != layout.legs
        || x.free_coeffs.len() != layout.legs
        || x.flybys.len() != layout.gas
    {
        return Err(Error::DimensionMismatch { expected: layout.len(), got: x.to_genes().len() });
    }
    let bodies = seq.bodies();
    let mut epoch = x.departure_date;
    let mut dep = system.state_at(bodies[0], epoch)?;
    let mut legs = Vec::with_capacity(layout.legs);

    for k in 0..layout.legs {
        let arr_epoch = epoch + x.tofs[k];
        let target = system.get(bodies[k + 1])?;
        let planet = target.state_at(arr_epoch)?;
        let mut arr = planet;
        let mut next_dep = planet;
        if k < layout.gas {
            let params = &x.flybys[k];
            if params.v_inf > 0.0 {
                let v_in = flyby::v_inf_in(params, &planet)?;
                let delta = flyby::deflection_angle(params.v_inf, params.h_p, target)?;
                arr.velocity = planet.velocity + v_in;
                next_dep.velocity = flyby::v_out_heliocentric(&v_in, &planet, delta, params.beta)?;
            }
        }
        let free = FreeCoeffs::from_flat(&x.free_coeffs[k])?;
        let leg = shaping::solve_coefficients(&dep, &arr, x.tofs[k] * DAY, x.n_revs[k], &free, target.sun_mu)?;
        if let Some(cap) = settings.max_thrust_accel {
            if leg.max_thrust_accel > cap {
                return Err(Error::NoSolution("thrust acceleration above cap"));
            }
        }
        legs.push(leg);
        epoch = arr_epoch;
        dep = next_dep;
    }
    Ok(legs)
}
