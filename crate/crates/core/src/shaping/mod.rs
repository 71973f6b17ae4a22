//! Hodographic shaping of a single low-thrust leg.
//!
//! Each cylindrical velocity component is a linear combination of analytic
//! functions of normalized time. Three base coefficients per axis are fixed by
//! the boundary conditions; any additional coefficients are free design
//! variables. Position follows from the antiderivatives, inertial acceleration
//! from the derivatives, and the thrust acceleration is what remains after
//! removing solar gravity. ΔV is its magnitude integrated over the leg.
//!
//! Boundary conditions per axis:
//! - radial: `vr(0)`, `vr(T)` and `∫ vr dt = r(T) - r(0)`
//! - axial: `vz(0)`, `vz(T)` and `∫ vz dt = z(T) - z(0)`
//! - normal: `vθ(0)`, `vθ(T)` and `∫ vθ / r dt = Δθ + 2πN`
//!
//! The normal-axis angle condition depends on `r(t)` from the radial solution
//! but remains linear in the normal coefficients, so all three axes reduce to
//! 3×3 linear solves.

mod functions;

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{Matrix3, Vector3};

pub use functions::{additional_functions, base_functions, free_per_axis, Axis, ShapeFn, Trig, MAX_FREE_COUNT};

use crate::ephemeris::{HelioState, AU};
use crate::error::{Error, Result};
use crate::frames::{cart_to_cyl, cyl_to_cart, CylState};
use crate::quadrature::gl64;

/// ΔV assigned to trajectories that cannot be evaluated.
pub const INFEASIBLE_DV: f64 = 1e9;
/// Closest permitted approach to the Sun.
pub const MIN_RADIUS: f64 = 0.05 * AU;
const MAX_CONDITION: f64 = 1e12;

/// Free coefficients of one leg, `2 · count` per axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FreeCoeffs {
    pub radial: Vec<f64>,
    pub normal: Vec<f64>,
    pub axial: Vec<f64>,
}

impl FreeCoeffs {
    pub fn zeros(count: usize) -> Self {
        let n = free_per_axis(count);
        Self { radial: vec![0.0; n], normal: vec![0.0; n], axial: vec![0.0; n] }
    }

    /// Splits `[radial.., normal.., axial..]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(3) {
            return Err(Error::UnsupportedFreeCount(flat.len()));
        }
        let n = flat.len() / 3;
        let coeffs =
            Self { radial: flat[..n].to_vec(), normal: flat[n..2 * n].to_vec(), axial: flat[2 * n..].to_vec() };
        coeffs.count()?;
        Ok(coeffs)
    }

    pub fn count(&self) -> Result<usize> {
        let n = self.radial.len();
        if self.normal.len() != n || self.axial.len() != n || !n.is_multiple_of(2) || n / 2 > MAX_FREE_COUNT {
            return Err(Error::UnsupportedFreeCount(n));
        }
        Ok(n / 2)
    }

    fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Radial => &self.radial,
            Axis::Normal => &self.normal,
            Axis::Axial => &self.axial,
        }
    }
}

/// A shape function tabulated at the Gauss-Legendre nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    pub integral: Vec<f64>,
}

type TableKey = (u32, u8, u64);

/// Tables are shared process-wide; only a handful of distinct functions
/// (one set per revolution count) are ever requested.
fn node_table(f: &ShapeFn) -> Arc<NodeTable> {
    static CACHE: OnceLock<RwLock<HashMap<TableKey, Arc<NodeTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (f.power, f.trig as u8, f.freq.to_bits());
    if let Some(t) = cache.read().expect("table cache").get(&key) {
        return t.clone();
    }
    let nodes = &gl64().nodes;
    let table = Arc::new(NodeTable {
        value: nodes.iter().map(|&s| f.value(s)).collect(),
        derivative: nodes.iter().map(|&s| f.derivative(s)).collect(),
        integral: nodes.iter().map(|&s| f.integral(s)).collect(),
    });
    cache.write().expect("table cache").entry(key).or_insert(table).clone()
}

/// One velocity component as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityShape {
    pub axis: Axis,
    pub n_rev: u32,
    pub base: [ShapeFn; 3],
    pub extra: Vec<ShapeFn>,
    pub base_coeffs: [f64; 3],
    pub free_coeffs: Vec<f64>,
    pub tof: f64,
    /// Base tables followed by the extra ones.
    tables: Vec<Arc<NodeTable>>,
}

impl VelocityShape {
    fn new(axis: Axis, n_rev: u32, free: &[f64], tof: f64) -> Result<Self> {
        let count = free.len() / 2;
        let base = base_functions(axis, n_rev);
        let extra = additional_functions(axis, n_rev, count)?;
        let tables = base.iter().chain(&extra).map(node_table).collect();
        Ok(Self { axis, n_rev, base, extra, base_coeffs: [0.0; 3], free_coeffs: free.to_vec(), tof, tables })
    }

    fn coeffs(&self) -> impl Iterator<Item = &f64> {
        self.base_coeffs.iter().chain(&self.free_coeffs)
    }

    fn combine_node(&self, pick: impl Fn(&NodeTable) -> f64) -> f64 {
        self.tables.iter().zip(self.coeffs()).map(|(t, c)| c * pick(t)).sum()
    }

    fn free_node(&self, pick: impl Fn(&NodeTable) -> f64) -> f64 {
        self.tables[3..].iter().zip(&self.free_coeffs).map(|(t, c)| c * pick(t)).sum()
    }

    /// [`Self::velocity`] at quadrature node `k`.
    pub fn velocity_node(&self, k: usize) -> f64 {
        self.combine_node(|t| t.value[k])
    }

    pub fn acceleration_node(&self, k: usize) -> f64 {
        self.combine_node(|t| t.derivative[k]) / self.tof
    }

    pub fn displacement_node(&self, k: usize) -> f64 {
        self.combine_node(|t| t.integral[k]) * self.tof
    }

    fn free_part(&self, s: f64, eval: impl Fn(&ShapeFn, f64) -> f64) -> f64 {
        self.extra.iter().zip(&self.free_coeffs).map(|(f, c)| c * eval(f, s)).sum()
    }

    fn combine(&self, s: f64, eval: impl Fn(&ShapeFn, f64) -> f64) -> f64 {
        let base: f64 = self.base.iter().zip(&self.base_coeffs).map(|(f, c)| c * eval(f, s)).sum();
        base + self.free_part(s, eval)
    }

    /// Velocity at normalized time `s`.
    pub fn velocity(&self, s: f64) -> f64 {
        self.combine(s, ShapeFn::value)
    }

    /// Time derivative of the velocity at normalized time `s`.
    pub fn acceleration(&self, s: f64) -> f64 {
        self.combine(s, ShapeFn::derivative) / self.tof
    }

    /// `∫₀^{sT} v dt`.
    pub fn displacement(&self, s: f64) -> f64 {
        self.combine(s, ShapeFn::integral) * self.tof
    }

    /// Solves the three base coefficients from `A c = b` after removing the
    /// free-function contribution from `b`.
    fn solve_base(&mut self, rows: Matrix3<f64>, rhs: Vector3<f64>) -> Result<()> {
        let sv = rows.singular_values();
        let condition = sv.max() / sv.min();
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::ShapingSingular { axis: self.axis.name(), condition });
        }
        let c = rows.lu().solve(&rhs).ok_or(Error::ShapingSingular { axis: self.axis.name(), condition })?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NoSolution("non-finite base coefficients"));
        }
        self.base_coeffs = [c[0], c[1], c[2]];
        Ok(())
    }

    /// Velocity at both ends plus the normalized displacement `∫₀¹ v ds`.
    fn solve_linear(&mut self, v0: f64, v1: f64, mean_velocity: f64) -> Result<()> {
        let mut rows = Matrix3::zeros();
        for (k, f) in self.base.iter().enumerate() {
            rows[(0, k)] = f.value(0.0);
            rows[(1, k)] = f.value(1.0);
            rows[(2, k)] = f.integral(1.0);
        }
        let rhs = Vector3::new(
            v0 - self.free_part(0.0, ShapeFn::value),
            v1 - self.free_part(1.0, ShapeFn::value),
            mean_velocity - self.free_part(1.0, ShapeFn::integral),
        );
        self.solve_base(rows, rhs)
    }
}

/// A shaped transfer between two heliocentric states.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedLeg {
    pub departure: HelioState,
    pub arrival: HelioState,
    pub tof: f64,
    pub n_rev: u32,
    pub shapes: [VelocityShape; 3],
    pub delta_v: f64,
    pub max_thrust_accel: f64,
    pub sun_mu: f64,
    start: CylState,
    /// Total swept polar angle including full revolutions.
    pub swept_angle: f64,
}

/// Kinematics of a leg at one instant, cylindrical components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegPoint {
    pub r: f64,
    pub z: f64,
    pub vr: f64,
    pub vtheta: f64,
    pub vz: f64,
    pub ar: f64,
    pub atheta: f64,
    pub az: f64,
}

/// Total polar angle from departure to arrival, prograde, plus N revolutions.
pub fn swept_angle(dep: &CylState, arr: &CylState, n_rev: u32) -> f64 {
    (arr.theta - dep.theta).rem_euclid(TAU) + TAU * f64::from(n_rev)
}

/// Builds the leg by solving all base coefficients, then scores its ΔV.
pub fn solve_coefficients(
    dep: &HelioState,
    arr: &HelioState,
    tof: f64,
    n_rev: u32,
    free: &FreeCoeffs,
    sun_mu: f64,
) -> Result<ShapedLeg> {
    if !(tof > 0.0) || !tof.is_finite() {
        return Err(Error::NoSolution("time of flight must be positive"));
    }
    let finite = |s: &HelioState| s.position.iter().chain(s.velocity.iter()).all(|v| v.is_finite());
    if !finite(dep) || !finite(arr) {
        return Err(Error::NoSolution("non-finite boundary state"));
    }
    free.count()?;
    let c0 = cart_to_cyl(dep);
    let c1 = cart_to_cyl(arr);
    if c0.r < MIN_RADIUS || c1.r < MIN_RADIUS {
        return Err(Error::NearSingularity { radius_au: c0.r.min(c1.r) / AU });
    }

    let mut radial = VelocityShape::new(Axis::Radial, n_rev, free.axis(Axis::Radial), tof)?;
    radial.solve_linear(c0.vr, c1.vr, (c1.r - c0.r) / tof)?;
    let mut axial = VelocityShape::new(Axis::Axial, n_rev, free.axis(Axis::Axial), tof)?;
    axial.solve_linear(c0.vz, c1.vz, (c1.z - c0.z) / tof)?;

    let mut normal = VelocityShape::new(Axis::Normal, n_rev, free.axis(Axis::Normal), tof)?;
    let angle = swept_angle(&c0, &c1, n_rev);
    let rule = gl64();
    // Rows 0-1: boundary tangential velocity. Row 2: ∫₀¹ f_k(s) / r(s) ds,
    // scaled by r(0) so all rows are dimensionless.
    let mut rows = Matrix3::zeros();
    let mut free_angle = 0.0;
    for (k, f) in normal.base.iter().enumerate() {
        rows[(0, k)] = f.value(0.0);
        rows[(1, k)] = f.value(1.0);
    }
    for (j, &w) in rule.weights.iter().enumerate() {
        let r = c0.r + radial.displacement_node(j);
        if !(r >= MIN_RADIUS) {
            return Err(Error::NearSingularity { radius_au: r / AU });
        }
        let scale = w * c0.r / r;
        for k in 0..3 {
            rows[(2, k)] += scale * normal.tables[k].value[j];
        }
        free_angle += scale * normal.free_node(|t| t.value[j]);
    }
    let rhs = Vector3::new(
        c0.vtheta - normal.free_part(0.0, ShapeFn::value),
        c1.vtheta - normal.free_part(1.0, ShapeFn::value),
        angle * c0.r / tof - free_angle,
    );
    normal.solve_base(rows, rhs)?;

    let mut leg = ShapedLeg {
        departure: *dep,
        arrival: *arr,
        tof,
        n_rev,
        shapes: [radial, normal, axial],
        delta_v: f64::NAN,
        max_thrust_accel: f64::NAN,
        sun_mu,
        start: c0,
        swept_angle: angle,
    };
    let (dv, fmax) = compute_delta_v(&leg)?;
    leg.delta_v = dv;
    leg.max_thrust_accel = fmax;
    Ok(leg)
}

impl ShapedLeg {
    pub fn radial(&self) -> &VelocityShape {
        &self.shapes[0]
    }

    pub fn normal(&self) -> &VelocityShape {
        &self.shapes[1]
    }

    pub fn axial(&self) -> &VelocityShape {
        &self.shapes[2]
    }

    pub fn departure_cyl(&self) -> &CylState {
        &self.start
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tof).contains(&t) {
            return Err(Error::TimeOutOfRange { t, tof: self.tof });
        }
        Ok(t / self.tof)
    }

    /// Everything except the polar angle, at normalized time `s`.
    pub fn point(&self, s: f64) -> LegPoint {
        let (rad, nor, axi) = (self.radial(), self.normal(), self.axial());
        LegPoint {
            r: self.start.r + rad.displacement(s),
            z: self.start.z + axi.displacement(s),
            vr: rad.velocity(s),
            vtheta: nor.velocity(s),
            vz: axi.velocity(s),
            ar: rad.acceleration(s),
            atheta: nor.acceleration(s),
            az: axi.acceleration(s),
        }
    }

    /// [`Self::point`] at quadrature node `k`.
    pub fn point_node(&self, k: usize) -> LegPoint {
        let (rad, nor, axi) = (self.radial(), self.normal(), self.axial());
        LegPoint {
            r: self.start.r + rad.displacement_node(k),
            z: self.start.z + axi.displacement_node(k),
            vr: rad.velocity_node(k),
            vtheta: nor.velocity_node(k),
            vz: axi.velocity_node(k),
            ar: rad.acceleration_node(k),
            atheta: nor.acceleration_node(k),
            az: axi.acceleration_node(k),
        }
    }

    /// Polar angle travelled from departure up to normalized time `s`.
    pub fn polar_angle(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let r0 = self.start.r;
        let rad = self.radial();
        let nor = self.normal();
        let integral = gl64().integrate(|u| {
            let x = s * u;
            nor.velocity(x) / (r0 + rad.displacement(x))
        });
        integral * s * self.tof
    }

    /// Cylindrical state at time `t` seconds after departure.
    pub fn evaluate_state(&self, t: f64) -> Result<CylState> {
        let s = self.check_time(t)?;
        let p = self.point(s);
        Ok(CylState {
            r: p.r,
            theta: self.start.theta + self.polar_angle(s),
            z: p.z,
            vr: p.vr,
            vtheta: p.vtheta,
            vz: p.vz,
        })
    }

    pub fn evaluate_cartesian(&self, t: f64) -> Result<HelioState> {
        let c = self.evaluate_state(t)?;
        cyl_to_cart(&c, self.departure.epoch + t / crate::ephemeris::DAY)
    }

    /// Thrust acceleration `(f_r, f_θ, f_z)` at time `t`.
    pub fn thrust_acceleration(&self, t: f64) -> Result<Vector3<f64>> {
        let s = self.check_time(t)?;
        thrust_at(&self.point(s), self.sun_mu)
    }
}

fn thrust_at(p: &LegPoint, sun_mu: f64) -> Result<Vector3<f64>> {
    if !(p.r >= MIN_RADIUS) {
        return Err(Error::NearSingularity { radius_au: p.r / AU });
    }
    let big_r = p.r.hypot(p.z);
    let g = sun_mu / (big_r * big_r * big_r);
    Ok(Vector3::new(p.ar - p.vtheta * p.vtheta / p.r + g * p.r, p.atheta + p.vr * p.vtheta / p.r, p.az + g * p.z))
}

/// `∫₀^T |f| dt` with the 64-node Gauss-Legendre rule, and the largest
/// `|f|` seen at the nodes.
pub fn compute_delta_v(leg: &ShapedLeg) -> Result<(f64, f64)> {
    let rule = gl64();
    let mut dv = 0.0;
    let mut fmax: f64 = 0.0;
    for (k, &w) in rule.weights.iter().enumerate() {
        let f = thrust_at(&leg.point_node(k), leg.sun_mu)?.norm();
        dv += w * f;
        fmax = fmax.max(f);
    }
    let dv = dv * leg.tof;
    if !dv.is_finite() {
        return Err(Error::NoSolution("non-finite ΔV"));
    }
    Ok((dv, fmax))
}

/// One row of a thrust-profile export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub z: f64,
    pub f: Vector3<f64>,
}

/// Thrust profile sampled at the ΔV quadrature nodes.
pub fn thrust_profile(leg: &ShapedLeg) -> Result<Vec<ThrustSample>> {
    gl64()
        .nodes
        .iter()
        .map(|&s| {
            let p = leg.point(s);
            Ok(ThrustSample {
                t: s * leg.tof,
                r: p.r,
                theta: leg.start.theta + leg.polar_angle(s),
                z: p.z,
                f: thrust_at(&p, leg.sun_mu)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::{Body, Elements, Planet, DAY, SUN_MU};
    use approx::assert_relative_eq;

    fn circular_body() -> Body {
        Body {
            id: Planet::Earth,
            mu: 3.986e14,
            radius: 6.378e6,
            elements: Elements { a: AU, e: 0.0, i: 0.0, raan: 0.0, argp: 0.0, m0: 1.1, t0_mjd: 60000.0 },
            sun_mu: SUN_MU,
        }
    }

    fn coast_leg(count: usize) -> ShapedLeg {
        let b = circular_body();
        let dep = b.state_at(60000.0).unwrap();
        let arr = b.state_at(60000.0 + b.period() / DAY).unwrap();
        solve_coefficients(&dep, &arr, b.period(), 1, &FreeCoeffs::zeros(count), SUN_MU).unwrap()
    }

    #[test]
    fn keplerian_coast_has_no_thrust() {
        let leg = coast_leg(1);
        assert!(leg.delta_v < 1.0, "dv = {}", leg.delta_v);
        assert!(leg.max_thrust_accel < 1e-7);
        let v = (SUN_MU / AU).sqrt();
        assert!(leg.radial().base_coeffs.iter().all(|c| c.abs() < 1e-6));
        assert_relative_eq!(leg.normal().velocity(0.37), v, max_relative = 1e-9);
    }

    #[test]
    fn homogeneous_radial_system() {
        let p = Vector3::new(AU, 0.0, 0.0);
        let dep = HelioState::new(p, Vector3::new(0.0, 3e4, 0.0), 0.0);
        let arr = HelioState::new(Vector3::new(0.0, AU, 0.0), Vector3::new(-3e4, 0.0, 0.0), 100.0);
        let leg = solve_coefficients(&dep, &arr, 100.0 * DAY, 0, &FreeCoeffs::zeros(0), SUN_MU).unwrap();
        assert_eq!(leg.radial().base_coeffs, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn boundaries_reproduced() {
        let b = crate::ephemeris::builtin_body(Planet::Earth);
        let m = crate::ephemeris::builtin_body(Planet::Mars);
        let dep = b.state_at(61000.0).unwrap();
        let arr = m.state_at(61300.0).unwrap();
        let free = FreeCoeffs { radial: vec![120.0, -300.0], normal: vec![50.0, 10.0], axial: vec![-20.0, 5.0] };
        let leg = solve_coefficients(&dep, &arr, 300.0 * DAY, 0, &free, SUN_MU).unwrap();
        let s0 = leg.evaluate_cartesian(0.0).unwrap();
        assert_relative_eq!(s0.position, dep.position, max_relative = 1e-9);
        assert_relative_eq!(s0.velocity, dep.velocity, max_relative = 1e-9);
        let s1 = leg.evaluate_cartesian(leg.tof).unwrap();
        assert!((s1.position - arr.position).norm() < 1e-6 * arr.position.norm());
        assert!((s1.velocity - arr.velocity).norm() < 1e-6 * arr.velocity.norm());
        assert!(leg.delta_v > 0.0);
    }

    #[test]
    fn out_of_range_time() {
        let leg = coast_leg(0);
        assert!(matches!(leg.evaluate_state(-1.0), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(leg.thrust_acceleration(leg.tof * 1.01), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn sunward_plunge_is_infeasible() {
        let b = circular_body();
        let dep = b.state_at(60000.0).unwrap();
        let arr = b.state_at(64000.0).unwrap();
        // over 4000 days these terms pull r(s) through zero mid-leg
        let free = FreeCoeffs { radial: vec![3e4, 3e4], normal: vec![0.0; 2], axial: vec![0.0; 2] };
        let err = solve_coefficients(&dep, &arr, 4000.0 * DAY, 0, &free, SUN_MU).unwrap_err();
        assert!(matches!(err, Error::NearSingularity { .. }), "{err:?}");
    }

    #[test]
    fn zero_gravity_leaves_kinematics() {
        let mut leg = coast_leg(1);
        leg.sun_mu = 0.0;
        let t = 0.3 * leg.tof;
        let f = leg.thrust_acceleration(t).unwrap();
        let p = leg.point(0.3);
        assert_relative_eq!(f[0], p.ar - p.vtheta * p.vtheta / p.r, max_relative = 1e-12);
        assert_relative_eq!(f[1], p.atheta + p.vr * p.vtheta / p.r, max_relative = 1e-12, epsilon = 1e-18);
    }
}
