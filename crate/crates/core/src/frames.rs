//! Cylindrical coordinates and the two flyby frames.
//!
//! The TNW frame follows the planet: `u` along its heliocentric velocity, `v`
//! along its orbital angular momentum and `w` along `h × V`. Note that this
//! literal ordering makes (u, v, w) a left-handed triad; the sign of `w` only
//! flips the meaning of a positive out-of-plane angle.

use nalgebra::Vector3;

use crate::ephemeris::HelioState;
use crate::error::{Error, Result};

const DEGENERATE: f64 = 1e-12;

/// Cylindrical state about the ecliptic z-axis. `theta` is not wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylState {
    pub r: f64,
    pub theta: f64,
    pub z: f64,
    pub vr: f64,
    pub vtheta: f64,
    pub vz: f64,
}

impl CylState {
    pub fn speed_squared(&self) -> f64 {
        self.vr * self.vr + self.vtheta * self.vtheta + self.vz * self.vz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnwFrame {
    pub u_hat: Vector3<f64>,
    pub v_hat: Vector3<f64>,
    pub w_hat: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub i_hat: Vector3<f64>,
    pub j_hat: Vector3<f64>,
    pub k_hat: Vector3<f64>,
}

pub fn cart_to_cyl(state: &HelioState) -> CylState {
    let p = &state.position;
    let v = &state.velocity;
    let r = p.x.hypot(p.y);
    let theta = p.y.atan2(p.x);
    let (vr, vtheta) = if r > 0.0 { ((p.x * v.x + p.y * v.y) / r, (p.x * v.y - p.y * v.x) / r) } else { (v.x, v.y) };
    CylState { r, theta, z: p.z, vr, vtheta, vz: v.z }
}

pub fn cyl_to_cart(c: &CylState, epoch: f64) -> Result<HelioState> {
    if !(c.r > 0.0) {
        return Err(Error::SingularRadius);
    }
    let (s, co) = c.theta.sin_cos();
    let position = Vector3::new(c.r * co, c.r * s, c.z);
    let velocity = Vector3::new(c.vr * co - c.vtheta * s, c.vr * s + c.vtheta * co, c.vz);
    Ok(HelioState::new(position, velocity, epoch))
}

pub fn tnw_from_planet_state(state: &HelioState) -> Result<TnwFrame> {
    let vel = state.velocity;
    let h = state.position.cross(&vel);
    let vn = vel.norm();
    let hn = h.norm();
    if vn == 0.0 || hn <= DEGENERATE * vn * state.position.norm() {
        return Err(Error::DegenerateFrame("rectilinear planet state"));
    }
    let u_hat = vel / vn;
    let v_hat = h / hn;
    let w_hat = v_hat.cross(&u_hat);
    Ok(TnwFrame { u_hat, v_hat, w_hat })
}

/// Frame in which the flyby deflection is expressed: `i` along the incoming
/// excess velocity, `j` along `i × V_planet`, `k = i × j`.
pub fn local_frame(v_inf_in: &Vector3<f64>, planet_velocity: &Vector3<f64>) -> Result<LocalFrame> {
    let n = v_inf_in.norm();
    if n == 0.0 {
        return Err(Error::DegenerateFrame("zero incoming excess velocity"));
    }
    let i_hat = v_inf_in / n;
    let j = i_hat.cross(planet_velocity);
    let jn = j.norm();
    if jn <= DEGENERATE * planet_velocity.norm() {
        return Err(Error::DegenerateFrame("excess velocity parallel to planet velocity"));
    }
    let j_hat = j / jn;
    let k_hat = i_hat.cross(&j_hat);
    Ok(LocalFrame { i_hat, j_hat, k_hat })
}
