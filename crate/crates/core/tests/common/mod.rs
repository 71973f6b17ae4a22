//! Independent numerical references used by the integration tests.
#![allow(dead_code)]

use nalgebra::Vector3;

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    // Fixed panels first so an oscillating integrand cannot vanish on every
    // sample of the first Simpson step.
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fb) = (f(lo), f(hi));
            let (m, fm, whole) = simpson(f, lo, fa, hi, fb);
            recurse(f, lo, fa, hi, fb, m, fm, whole, tol / panels as f64, 50)
        })
        .sum()
}

/// Five-point central difference.
pub fn derivative_5pt<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn stumpff_c(z: f64) -> f64 {
    if z > 1e-6 {
        (1.0 - z.sqrt().cos()) / z
    } else if z < -1e-6 {
        ((-z).sqrt().cosh() - 1.0) / -z
    } else {
        0.5 - z / 24.0 + z * z / 720.0
    }
}

fn stumpff_s(z: f64) -> f64 {
    if z > 1e-6 {
        let q = z.sqrt();
        (q - q.sin()) / (q * q * q)
    } else if z < -1e-6 {
        let q = (-z).sqrt();
        (q.sinh() - q) / (q * q * q)
    } else {
        1.0 / 6.0 - z / 120.0 + z * z / 5040.0
    }
}

/// Two-body propagation by the universal-variable formulation.
pub fn propagate_universal(r0: &Vector3<f64>, v0: &Vector3<f64>, mu: f64, dt: f64) -> (Vector3<f64>, Vector3<f64>) {
    let r0n = r0.norm();
    let vr0 = r0.dot(v0) / r0n;
    let alpha = 2.0 / r0n - v0.norm_squared() / mu;
    let sm = mu.sqrt();
    let mut chi = sm * alpha.abs() * dt;
    for _ in 0..200 {
        let z = alpha * chi * chi;
        let (c, s) = (stumpff_c(z), stumpff_s(z));
        let f = r0n * vr0 / sm * chi * chi * c + (1.0 - alpha * r0n) * chi.powi(3) * s + r0n * chi - sm * dt;
        let df = r0n * vr0 / sm * chi * (1.0 - z * s) + (1.0 - alpha * r0n) * chi * chi * c + r0n;
        let step = f / df;
        chi -= step;
        if step.abs() < 1e-13 * chi.abs().max(1.0) {
            break;
        }
    }
    let z = alpha * chi * chi;
    let (c, s) = (stumpff_c(z), stumpff_s(z));
    let f = 1.0 - chi * chi / r0n * c;
    let g = dt - chi.powi(3) * s / sm;
    let r = r0 * f + v0 * g;
    let rn = r.norm();
    let fdot = sm / (rn * r0n) * (z * chi * s - chi);
    let gdot = 1.0 - chi * chi / rn * c;
    (r, r0 * fdot + v0 * gdot)
}
