use super::{clip, score};

#[derive(Debug, Clone, PartialEq)]
pub struct NmOptions {
    /// Stop once `max f - min f` over the simplex drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial edge length as a fraction of each gene's range.
    pub step_fraction: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2000, step_fraction: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Bounded Nelder-Mead. Trial points are projected onto the box and genes
/// flagged in `frozen` never move. The returned point is the best one
/// evaluated, so it is never worse than `x0`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: &F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    frozen: &[bool],
    opts: &NmOptions,
) -> NmResult {
    let free: Vec<usize> = (0..x0.len()).filter(|&i| !frozen.get(i).copied().unwrap_or(false)).collect();
    let n = free.len();
    let mut start = x0.to_vec();
    clip(&mut start, lower, upper);
    let f0 = score(objective, &start);
    if n == 0 {
        return NmResult { x: start, f: f0, iterations: 0, converged: true };
    }

    // Simplex points are full gene vectors; only the free genes vary.
    let eval = |p: &mut Vec<f64>| {
        clip(p, lower, upper);
        score(objective, p)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f0)];
    for &k in &free {
        let mut p = start.clone();
        let step = opts.step_fraction * (upper[k] - lower[k]);
        let step = if step > 0.0 { step } else { opts.step_fraction * p[k].abs().max(1.0) };
        p[k] = if p[k] + step <= upper[k] { p[k] + step } else { p[k] - step };
        let f = eval(&mut p);
        simplex.push((p, f));
    }

    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        // a + t (b - a), with frozen genes copied from a
        let mut out = a.to_vec();
        for &k in &free {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        out
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = simplex[0].0.clone();
        for &k in &free {
            centroid[k] = simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / n as f64;
        }
        let worst = simplex[n].clone();

        let mut xr = combine(&centroid, &worst.0, -1.0);
        let fr = eval(&mut xr);
        if fr < simplex[0].1 {
            let mut xe = combine(&centroid, &worst.0, -2.0);
            let fe = eval(&mut xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (mut xc, fc_ref) = if fr < worst.1 {
            (combine(&centroid, &xr, 0.5), fr)
        } else {
            (combine(&centroid, &worst.0, 0.5), worst.1)
        };
        let fc = eval(&mut xc);
        if fc < fc_ref {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut p = combine(&best, &v.0, 0.5);
            let f = eval(&mut p);
            *v = (p, f);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    if f <= f0 {
        NmResult { x, f, iterations, converged }
    } else {
        NmResult { x: start, f: f0, iterations, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + (x[2] - 0.25).powi(2);
        let r = nelder_mead(
            &f,
            &[3.0, 2.0, -2.0],
            &[-5.0; 3],
            &[5.0; 3],
            &[],
            &NmOptions { tol: 1e-16, ..NmOptions::default() },
        );
        for (got, want) in r.x.iter().zip([1.0, -0.5, 0.25]) {
            assert!((got - want).abs() < 1e-6, "{:?}", r.x);
        }
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let r = nelder_mead(
            &rosenbrock,
            &[-1.2, 1.0],
            &[-5.0; 2],
            &[5.0; 2],
            &[],
            &NmOptions { tol: 1e-14, ..NmOptions::default() },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let r = nelder_mead(&rosenbrock, &[1.0, 1.0], &[-5.0; 2], &[5.0; 2], &[], &NmOptions::default());
        assert_eq!(r.x, vec![1.0, 1.0]);
        assert_eq!(r.f, 0.0);
    }

    #[test]
    fn frozen_and_bounded() {
        let f = |x: &[f64]| x.iter().map(|v| (v + 3.0).powi(2)).sum::<f64>();
        let r = nelder_mead(&f, &[0.5, 2.0], &[-1.0, 0.0], &[1.0, 3.0], &[false, true], &NmOptions::default());
        assert_eq!(r.x[1], 2.0);
        assert!((r.x[0] + 1.0).abs() < 1e-6);
        assert!(r.f <= f(&[0.5, 2.0]));
    }
}
