//! Nelder–Mead descent with dimension-adaptive coefficients.

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_evals: 5000,
            diameter_tol: 1e-9,
            initial_step: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value seen after each evaluation.
    pub trace: Vec<f64>,
}

struct Budget<'a, F> {
    f: &'a mut F,
    max: usize,
    used: usize,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.used >= self.max {
            return None;
        }
        self.used += 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
        Some(v)
    }
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `f` from `x0`. Non-finite values count as `+inf`. The result
/// is the best point evaluated, never more than `max_evals` evaluations.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &SimplexOptions,
) -> SimplexOutcome {
    let n = x0.len();
    let mut budget = Budget {
        f: &mut f,
        max: opts.max_evals.max(1),
        used: 0,
        best_x: x0.to_vec(),
        best: f64::INFINITY,
        trace: Vec::new(),
    };
    let converged = if n == 0 {
        budget.eval(x0);
        true
    } else {
        run(&mut budget, x0, opts)
    };
    SimplexOutcome {
        x: budget.best_x,
        value: budget.best,
        evaluations: budget.used,
        converged,
        trace: budget.trace,
    }
}

fn run<F: FnMut(&[f64]) -> f64>(
    budget: &mut Budget<'_, F>,
    x0: &[f64],
    opts: &SimplexOptions,
) -> bool {
    let n = x0.len();
    let nf = n as f64;
    let (reflect, expand, contract, shrink) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let Some(v0) = budget.eval(x0) else {
        return false;
    };
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let Some(v) = budget.eval(&x) else {
            return false;
        };
        simplex.push((x, v));
    }

    loop {
        // Stable sort keeps earlier vertices first on ties.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| distance(x, &simplex[0].0))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            return true;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let (worst, f_worst) = simplex[n].clone();
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;

        let xr = lerp(&centroid, &worst, -reflect);
        let Some(fr) = budget.eval(&xr) else {
            return false;
        };

        if fr < f_best {
            let xe = lerp(&centroid, &xr, expand);
            let Some(fe) = budget.eval(&xe) else {
                return false;
            };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = lerp(&centroid, &xr, contract);
            let Some(fc) = budget.eval(&xc) else {
                return false;
            };
            (xc, fc, fc <= fr)
        } else {
            let xc = lerp(&centroid, &worst, contract);
            let Some(fc) = budget.eval(&xc) else {
                return false;
            };
            (xc, fc, fc < f_worst)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }

        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&anchor, &vertex.0, shrink);
            let Some(v) = budget.eval(&x) else {
                return false;
            };
            *vertex = (x, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let out = minimize(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6);
        assert!((out.x[1] + 2.0).abs() < 1e-6);
        assert!(out.value < 1e-12);
    }

    #[test]
    fn rosenbrock_two_dims() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = minimize(rosen, &[-1.2, 1.0], &SimplexOptions::default());
        assert!(out.value < 1e-10, "{}", out.value);
    }

    #[test]
    fn respects_budget_and_trace_is_monotone() {
        let opts = SimplexOptions {
            max_evals: 37,
            ..Default::default()
        };
        let out = minimize(|x| x.iter().map(|v| v.abs()).sum(), &[3.0; 6], &opts);
        assert_eq!(out.evaluations, 37);
        assert_eq!(out.trace.len(), 37);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.value);
    }

    #[test]
    fn one_dimension_and_nan() {
        let out = minimize(
            |x| {
                if x[0] < -5.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.25).powi(2)
                }
            },
            &[2.0],
            &SimplexOptions::default(),
        );
        assert!((out.x[0] - 0.25).abs() < 1e-8);
        let empty = minimize(|_| 4.0, &[], &SimplexOptions::default());
        assert_eq!(empty.value, 4.0);
        assert_eq!(empty.evaluations, 1);
    }
}
