//! Derivative-free minimization under box constraints.
//!
//! Two deterministic methods:
//!
//! * [`trust_region`] — a model-based trust-region search. Each iteration
//!   interpolates a quadratic surrogate through 2m+1 axial points (value,
//!   gradient and per-coordinate curvature from a three-point stencil,
//!   exact on separable quadratics), minimizes it over the trust box, and
//!   adapts the radius from the agreement ratio.
//! * [`nelder_mead`] — a classic simplex search, kept as a fallback behind
//!   a configuration switch.
//!
//! Both only ever evaluate inside the bounds, track the best point seen,
//! and report evaluation counts instead of failing when the budget runs
//! out.

/// Options shared by both methods.
#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_evals: usize,
    /// Initial trust radius / simplex scale.
    pub initial_step: f64,
    /// Radius below which the search is declared converged.
    pub min_step: f64,
    /// Upper bound on the trust radius. On multimodal landscapes this
    /// keeps the search inside the starting basin.
    pub max_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_evals: 2000,
            initial_step: 0.5,
            min_step: 1e-9,
            max_step: f64::INFINITY,
        }
    }
}

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// Final trust radius (trust region) or simplex diameter (Nelder-Mead).
    pub final_step: f64,
    pub converged: bool,
}

struct Tracker<'a, F: FnMut(&[f64]) -> f64> {
    f: F,
    evals: usize,
    max_evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
    lo: &'a [f64],
    hi: &'a [f64],
}

impl<'a, F: FnMut(&[f64]) -> f64> Tracker<'a, F> {
    fn new(mut f: F, x0: &[f64], lo: &'a [f64], hi: &'a [f64], max_evals: usize) -> Self {
        let x0: Vec<f64> = x0
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&x, (&l, &h))| x.clamp(l, h))
            .collect();
        let f0 = f(&x0);
        Tracker {
            f,
            evals: 1,
            max_evals,
            best_x: x0,
            best_f: f0,
            lo,
            hi,
        }
    }

    fn budget_left(&self) -> bool {
        self.evals < self.max_evals
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        self.evals += 1;
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        v
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((x, &l), &h) in x.iter_mut().zip(self.lo).zip(self.hi) {
            *x = x.clamp(l, h);
        }
    }
}

/// Trust-region minimization of `f` over the box [lo, hi] starting at `x0`.
pub fn trust_region<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &OptimOptions,
) -> OptimOutcome {
    let m = x0.len();
    assert!(m > 0 && lo.len() == m && hi.len() == m);
    let mut t = Tracker::new(f, x0, lo, hi, opts.max_evals.max(2));
    let mut center = t.best_x.clone();
    let mut f_center = t.best_f;
    let mut radius = opts.initial_step;
    let mut iterations = 0usize;
    let mut converged = false;

    'outer: while t.budget_left() {
        iterations += 1;
        // Three-point stencil per coordinate; steps shrink at the bounds.
        let mut grad = vec![0.0; m];
        let mut curv = vec![0.0; m];
        for i in 0..m {
            let room_up = (hi[i] - center[i]).max(0.0);
            let room_dn = (center[i] - lo[i]).max(0.0);
            let p = radius.min(room_up).max(1e-12);
            let q = radius.min(room_dn).max(1e-12);
            let mut xp = center.clone();
            xp[i] = (center[i] + p).min(hi[i]);
            let mut xq = center.clone();
            xq[i] = (center[i] - q).max(lo[i]);
            if !t.budget_left() {
                break 'outer;
            }
            let fp = t.eval(&xp);
            if !t.budget_left() {
                break 'outer;
            }
            let fq = t.eval(&xq);
            let (p, q) = (xp[i] - center[i], center[i] - xq[i]);
            if p > 0.0 && q > 0.0 {
                let denom = p * q * (p + q);
                grad[i] = (q * q * fp - p * p * fq + (p * p - q * q) * f_center) / denom;
                curv[i] = 2.0 * (q * fp + p * fq - (p + q) * f_center) / denom;
            }
        }
        // Minimize the separable quadratic over the trust box ∩ bounds.
        let mut step = vec![0.0; m];
        for i in 0..m {
            let lo_s = (lo[i] - center[i]).max(-radius);
            let hi_s = (hi[i] - center[i]).min(radius);
            step[i] = if curv[i] > 0.0 {
                (-grad[i] / curv[i]).clamp(lo_s, hi_s)
            } else if grad[i] > 0.0 {
                lo_s
            } else if grad[i] < 0.0 {
                hi_s
            } else {
                0.0
            };
        }
        let predicted: f64 = (0..m)
            .map(|i| -(grad[i] * step[i] + 0.5 * curv[i] * step[i] * step[i]))
            .sum();
        let mut trial = center.clone();
        for i in 0..m {
            trial[i] += step[i];
        }
        t.clamp(&mut trial);
        if !t.budget_left() {
            break;
        }
        let f_trial = t.eval(&trial);
        let actual = f_center - f_trial;
        let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();

        if actual > 0.0 {
            center = trial;
            f_center = f_trial;
        } else if t.best_f < f_center {
            // A stencil point may beat the model step.
            center = t.best_x.clone();
            f_center = t.best_f;
        }

        let ratio = if predicted > 0.0 { actual / predicted } else { -1.0 };
        if ratio > 0.7 && step_norm > 0.8 * radius {
            radius = (radius * 1.6).min(opts.max_step);
        } else if ratio < 0.25 {
            radius *= 0.5;
        }
        if radius < opts.min_step {
            converged = true;
            break;
        }
    }

    OptimOutcome {
        x: t.best_x,
        f: t.best_f,
        evaluations: t.evals,
        iterations,
        final_step: radius,
        converged,
    }
}

/// Deterministic Nelder-Mead simplex minimization over the box [lo, hi].
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &OptimOptions,
) -> OptimOutcome {
    let m = x0.len();
    assert!(m > 0 && lo.len() == m && hi.len() == m);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut t = Tracker::new(f, x0, lo, hi, opts.max_evals.max(m + 2));
    let base = t.best_x.clone();

    // Axis-aligned initial simplex clipped to the bounds.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + 1);
    simplex.push((base.clone(), t.best_f));
    for i in 0..m {
        let mut v = base.clone();
        let h = if v[i] + opts.initial_step <= hi[i] {
            opts.initial_step
        } else {
            -opts.initial_step
        };
        v[i] = (v[i] + h).clamp(lo[i], hi[i]);
        if !t.budget_left() {
            break;
        }
        let fv = t.eval(&v);
        simplex.push((v, fv));
    }
    let mut iterations = 0usize;
    let mut converged = false;

    while t.budget_left() && simplex.len() == m + 1 {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        if diameter < opts.min_step {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..m)
            .map(|i| simplex[..m].iter().map(|(v, _)| v[i]).sum::<f64>() / m as f64)
            .collect();
        let worst = simplex[m].clone();
        let make = |coef: f64, tr: &Tracker<F>| -> Vec<f64> {
            let mut v: Vec<f64> = (0..m)
                .map(|i| centroid[i] + coef * (centroid[i] - worst.0[i]))
                .collect();
            tr.clamp(&mut v);
            v
        };
        let xr = make(alpha, &t);
        let fr = t.eval(&xr);
        if fr < simplex[0].1 {
            if t.budget_left() {
                let xe = make(gamma, &t);
                let fe = t.eval(&xe);
                simplex[m] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else {
                simplex[m] = (xr, fr);
            }
        } else if fr < simplex[m - 1].1 {
            simplex[m] = (xr, fr);
        } else if t.budget_left() {
            let xc = make(-rho, &t);
            let fc = t.eval(&xc);
            if fc < simplex[m].1 {
                simplex[m] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                for j in 1..=m {
                    if !t.budget_left() {
                        break;
                    }
                    let v: Vec<f64> = (0..m)
                        .map(|i| simplex[0].0[i] + sigma * (simplex[j].0[i] - simplex[0].0[i]))
                        .collect();
                    let fv = t.eval(&v);
                    simplex[j] = (v, fv);
                }
            }
        }
    }

    let final_step = simplex
        .iter()
        .skip(1)
        .map(|(v, _)| {
            v.iter()
                .zip(&simplex[0].0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max);
    OptimOutcome {
        x: t.best_x,
        f: t.best_f,
        evaluations: t.evals,
        iterations,
        final_step,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(_m: usize) -> impl FnMut(&[f64]) -> f64 {
        move |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let d = v - (i + 1) as f64;
                    d * d
                })
                .sum()
        }
    }

    #[test]
    fn trust_region_solves_separable_quadratic_within_budget() {
        for m in 1..=6 {
            let x0 = vec![0.5; m];
            let lo = vec![-10.0; m];
            let hi = vec![20.0; m];
            let opts = OptimOptions { max_evals: 200, initial_step: 1.0, min_step: 1e-10, max_step: f64::INFINITY };
            let out = trust_region(quadratic(m), &x0, &lo, &hi, &opts);
            assert!(out.evaluations <= 200, "m={m}: {} evals", out.evaluations);
            for (i, &v) in out.x.iter().enumerate() {
                assert!(
                    (v - (i + 1) as f64).abs() < 1e-6,
                    "m={m}, coord {i}: {v} after {} evals",
                    out.evaluations
                );
            }
        }
    }

    #[test]
    fn nelder_mead_solves_quadratic() {
        let m = 3;
        let opts = OptimOptions { max_evals: 2000, initial_step: 1.0, min_step: 1e-10, max_step: f64::INFINITY };
        let out = nelder_mead(quadratic(m), &[0.0; 3], &[-10.0; 3], &[10.0; 3], &opts);
        for (i, &v) in out.x.iter().enumerate() {
            assert!((v - (i + 1) as f64).abs() < 1e-5, "coord {i}: {v}");
        }
    }

    #[test]
    fn bounds_are_respected() {
        let count = std::cell::Cell::new(0usize);
        let f = |x: &[f64]| {
            count.set(count.get() + 1);
            assert!(x.iter().all(|&v| (-1.0..=1.0).contains(&v)), "outside bounds: {x:?}");
            (x[0] - 5.0).powi(2) + x[1] * x[1]
        };
        let opts = OptimOptions::default();
        let out = trust_region(f, &[0.0, 0.5], &[-1.0, -1.0], &[1.0, 1.0], &opts);
        // Constrained minimum sits at the boundary x0 = 1.
        assert!((out.x[0] - 1.0).abs() < 1e-6);
        assert!(out.x[1].abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let opts = OptimOptions { max_evals: 10, initial_step: 0.5, min_step: 1e-12, max_step: f64::INFINITY };
        let out = trust_region(quadratic(4), &[0.0; 4], &[-10.0; 4], &[10.0; 4], &opts);
        assert!(!out.converged);
        assert!(out.evaluations <= 11);
    }

    #[test]
    fn best_so_far_is_monotone() {
        // The reported minimum never exceeds the starting value, and
        // rerunning from the reported point cannot make it worse.
        let opts = OptimOptions { max_evals: 60, initial_step: 0.7, min_step: 1e-10, max_step: f64::INFINITY };
        let start = [4.0, -3.0];
        let f = |x: &[f64]| (x[0].sin() + x[0] * x[0] * 0.1) + (x[1].cos() + 0.2 * x[1] * x[1]);
        let first = trust_region(f, &start, &[-10.0, -10.0], &[10.0, 10.0], &opts);
        assert!(first.f <= f(&start));
        let second = trust_region(f, &first.x, &[-10.0, -10.0], &[10.0, 10.0], &opts);
        assert!(second.f <= first.f + 1e-15);
    }
}
