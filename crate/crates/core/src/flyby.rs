//! Unpowered patched-conics gravity assist.
//!
//! The flyby is an instantaneous rotation of the hyperbolic excess velocity by
//! the deflection angle δ, in a plane selected by β about the incoming
//! direction. Its magnitude is unchanged.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ephemeris::{Body, HelioState};
use crate::error::{Error, Result};
use crate::frames::{local_frame, tnw_from_planet_state};

pub const V_INF_MAX: f64 = 5000.0;
pub const HP_MIN: f64 = 2e5;
pub const HP_MAX: f64 = 5e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlybyParams {
    /// Incoming hyperbolic excess speed, m/s.
    pub v_inf: f64,
    /// In-plane angle of the incoming excess velocity in the TNW frame.
    pub theta_g: f64,
    /// Out-of-plane angle of the incoming excess velocity in the TNW frame.
    pub phi_g: f64,
    /// Periapsis altitude above the surface, m.
    pub h_p: f64,
    /// Orientation of the flyby plane about the incoming direction.
    pub beta: f64,
}

impl FlybyParams {
    pub fn lower_bounds() -> [f64; 5] {
        [0.0, HP_MIN, 0.0, 0.0, -FRAC_PI_2]
    }

    /// Upper bounds in gene order `(v, h_p, β, θ, φ)`.
    pub fn upper_bounds() -> [f64; 5] {
        [V_INF_MAX, HP_MAX, TAU, TAU, FRAC_PI_2]
    }

    /// Gene order is `(v, h_p, β, θ, φ)`.
    pub fn from_genes(g: &[f64]) -> Self {
        Self { v_inf: g[0], h_p: g[1], beta: g[2], theta_g: g[3], phi_g: g[4] }
    }

    pub fn to_genes(&self) -> [f64; 5] {
        [self.v_inf, self.h_p, self.beta, self.theta_g, self.phi_g]
    }
}

/// Incoming excess velocity expressed in the planet's TNW frame.
pub fn v_inf_in(params: &FlybyParams, planet_state: &HelioState) -> Result<Vector3<f64>> {
    let f = tnw_from_planet_state(planet_state)?;
    let (sp, cp) = params.phi_g.sin_cos();
    let (st, ct) = params.theta_g.sin_cos();
    let dir = f.u_hat * (cp * ct) + f.v_hat * (cp * st) + f.w_hat * sp;
    Ok(dir * params.v_inf)
}

/// `δ = 2 asin(1 / (1 + r_p v∞² / μ))` with `r_p = R + h_p`.
pub fn deflection_angle(v_inf: f64, h_p: f64, body: &Body) -> Result<f64> {
    if !(v_inf > 0.0) {
        return Err(Error::UndefinedDeflection);
    }
    let rp = body.radius + h_p;
    Ok(2.0 * (1.0 / (1.0 + rp * v_inf * v_inf / body.mu)).asin())
}

/// Heliocentric velocity after the flyby.
pub fn v_out_heliocentric(
    v_in_vec: &Vector3<f64>,
    planet_state: &HelioState,
    delta: f64,
    beta: f64,
) -> Result<Vector3<f64>> {
    Ok(planet_state.velocity + v_inf_out(v_in_vec, planet_state, delta, beta)?)
}

/// Outgoing excess velocity, same magnitude as the incoming one.
pub fn v_inf_out(v_in_vec: &Vector3<f64>, planet_state: &HelioState, delta: f64, beta: f64) -> Result<Vector3<f64>> {
    let l = local_frame(v_in_vec, &planet_state.velocity)?;
    let (sd, cd) = delta.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let dir = l.i_hat * cd + l.j_hat * (cb * sd) + l.k_hat * (sb * sd);
    Ok(dir * v_in_vec.norm())
}
