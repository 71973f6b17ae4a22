//! Velocity shape functions of normalized time `s = t / tof ∈ [0, 1]`.
//!
//! Every function used by the shaping kernel has the form `s^k · g(ω s)` with
//! `g ∈ {1, cos, sin}`, which gives closed-form derivatives and
//! antiderivatives.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Radial,
    Normal,
    Axial,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Radial, Axis::Normal, Axis::Axial];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Radial => "radial",
            Axis::Normal => "normal",
            Axis::Axial => "axial",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trig {
    One,
    Cos,
    Sin,
}

/// `s^power · trig(freq · s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeFn {
    pub power: u32,
    pub trig: Trig,
    pub freq: f64,
}

impl ShapeFn {
    pub const fn power(power: u32) -> Self {
        Self { power, trig: Trig::One, freq: 0.0 }
    }

    pub const fn cos(power: u32, freq: f64) -> Self {
        Self { power, trig: Trig::Cos, freq }
    }

    pub const fn sin(power: u32, freq: f64) -> Self {
        Self { power, trig: Trig::Sin, freq }
    }

    pub fn value(&self, s: f64) -> f64 {
        let p = s.powi(self.power as i32);
        match self.trig {
            Trig::One => p,
            Trig::Cos => p * (self.freq * s).cos(),
            Trig::Sin => p * (self.freq * s).sin(),
        }
    }

    /// d/ds.
    pub fn derivative(&self, s: f64) -> f64 {
        let k = self.power as i32;
        let (p, dp) = if k == 0 { (1.0, 0.0) } else { (s.powi(k), f64::from(k) * s.powi(k - 1)) };
        let w = self.freq;
        match self.trig {
            Trig::One => dp,
            Trig::Cos => {
                let (sn, cs) = (w * s).sin_cos();
                dp * cs - w * p * sn
            }
            Trig::Sin => {
                let (sn, cs) = (w * s).sin_cos();
                dp * sn + w * p * cs
            }
        }
    }

    /// ∫₀ˢ f(u) du.
    pub fn integral(&self, s: f64) -> f64 {
        let k = self.power;
        match self.trig {
            Trig::One => s.powi(k as i32 + 1) / f64::from(k + 1),
            Trig::Cos | Trig::Sin if self.freq == 0.0 => match self.trig {
                Trig::Cos => s.powi(k as i32 + 1) / f64::from(k + 1),
                _ => 0.0,
            },
            Trig::Cos | Trig::Sin => {
                let (ic, is) = if (self.freq * s).abs() <= 2.0 {
                    trig_moments_series(k, self.freq, s)
                } else {
                    trig_moments_recursive(k, self.freq, s)
                };
                if self.trig == Trig::Cos {
                    ic
                } else {
                    is
                }
            }
        }
    }
}

/// (∫₀ˢ uᵏ cos ωu du, ∫₀ˢ uᵏ sin ωu du) by integration by parts.
fn trig_moments_recursive(k: u32, w: f64, s: f64) -> (f64, f64) {
    let (sn, cs) = (w * s).sin_cos();
    let mut ic = sn / w;
    let mut is = (1.0 - cs) / w;
    let mut sk = 1.0;
    for j in 1..=k {
        sk *= s;
        let jf = f64::from(j);
        let next_c = sk * sn / w - jf / w * is;
        let next_s = -sk * cs / w + jf / w * ic;
        ic = next_c;
        is = next_s;
    }
    (ic, is)
}

/// Taylor expansion of the same moments, accurate when ω·s is small.
fn trig_moments_series(k: u32, w: f64, s: f64) -> (f64, f64) {
    let x = w * s;
    let kf = f64::from(k);
    let base = s.powi(k as i32 + 1);
    // cos: Σ (-1)^j x^{2j} / ((2j)! (k+2j+1)); sin: Σ (-1)^j x^{2j+1} / ((2j+1)! (k+2j+2))
    let mut ic = 0.0;
    let mut is = 0.0;
    let mut term = 1.0; // x^m / m!
    for m in 0..40u32 {
        let mf = f64::from(m);
        let contrib = term / (kf + mf + 1.0);
        match m % 4 {
            0 => ic += contrib,
            1 => is += contrib,
            2 => ic -= contrib,
            _ => is -= contrib,
        }
        term *= x / (mf + 1.0);
        if term.abs() < 1e-18 && m > 2 {
            break;
        }
    }
    (base * ic, base * is)
}

fn axial_frequency(n_rev: u32) -> f64 {
    TAU * (f64::from(n_rev) + 0.5)
}

/// The three boundary-condition functions of an axis.
///
/// Radial and normal: `1, s, s²`. Axial: `cos(ωs), s³cos(ωs), s³sin(ωs)` with
/// `ω = 2π(N + 1/2)`.
pub fn base_functions(axis: Axis, n_rev: u32) -> [ShapeFn; 3] {
    match axis {
        Axis::Radial | Axis::Normal => [ShapeFn::power(0), ShapeFn::power(1), ShapeFn::power(2)],
        Axis::Axial => {
            let w = axial_frequency(n_rev);
            [ShapeFn::cos(0, w), ShapeFn::cos(3, w), ShapeFn::sin(3, w)]
        }
    }
}

/// Maximum supported free-parameter count.
pub const MAX_FREE_COUNT: usize = 2;

/// Number of free coefficients one axis gains for a free-parameter count.
pub fn free_per_axis(count: usize) -> usize {
    2 * count
}

/// Extra functions whose coefficients are optimization variables.
///
/// Count 1 gives `s·sin(πs/2), s·cos(πs/2)` on the radial and normal axes and
/// `s⁴cos(ωs), s⁴sin(ωs)` on the axial axis. Count 2 appends the next power of
/// each pair.
pub fn additional_functions(axis: Axis, n_rev: u32, count: usize) -> Result<Vec<ShapeFn>> {
    if count > MAX_FREE_COUNT {
        return Err(Error::UnsupportedFreeCount(count));
    }
    let mut out = Vec::with_capacity(free_per_axis(count));
    for set in 0..count as u32 {
        match axis {
            Axis::Radial | Axis::Normal => {
                out.push(ShapeFn::sin(1 + set, FRAC_PI_2));
                out.push(ShapeFn::cos(1 + set, FRAC_PI_2));
            }
            Axis::Axial => {
                let w = axial_frequency(n_rev);
                out.push(ShapeFn::cos(4 + set, w));
                out.push(ShapeFn::sin(4 + set, w));
            }
        }
    }
    Ok(out)
}
