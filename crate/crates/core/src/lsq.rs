//! Bounded Levenberg–Marquardt least squares with forward-difference
//! Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsqOptions {
    pub max_iter: usize,
    /// Converged when the relative decrease of the cost drops below this.
    pub ftol: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Parameters smaller than this in magnitude use it as the step scale.
    pub fd_floor: f64,
    pub initial_damping: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self { max_iter: 200, ftol: 1e-10, fd_step: 1e-6, fd_floor: 1e-3, initial_damping: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsqReport {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Σ r².
    pub cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// Standard errors from s²(JᵀJ)⁻¹ (pseudo-inverse when rank deficient).
    pub std_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub rank_deficient: bool,
    /// Per parameter: optimum sits on a bound.
    pub at_bound: Vec<bool>,
}

/// Box constraints; `None` on either side means unbounded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bounds {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower: Some(lower), upper: Some(upper) }
    }

    fn lo(&self, i: usize) -> f64 {
        self.lower.as_ref().map_or(f64::NEG_INFINITY, |l| l[i])
    }

    fn hi(&self, i: usize) -> f64 {
        self.upper.as_ref().map_or(f64::INFINITY, |u| u[i])
    }

    fn project(&self, x: &mut [f64]) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.clamp(self.lo(i), self.hi(i));
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for side in [&self.lower, &self.upper].into_iter().flatten() {
            if side.len() != n {
                return Err(Error::Config(format!("bounds have {} entries, expected {n}", side.len())));
            }
        }
        for i in 0..n {
            if !(self.lo(i) <= self.hi(i)) {
                return Err(Error::Config(format!("bound {i}: lower {} exceeds upper {}", self.lo(i), self.hi(i))));
            }
        }
        Ok(())
    }
}

fn sumsq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Below this the cost counts as an exact fit.
const ZERO_COST: f64 = 1e-28;
const MAX_DAMPING: f64 = 1e16;

/// Minimizes Σ r(x)² subject to `bounds`.
pub fn least_squares<F>(f: F, x0: &[f64], bounds: &Bounds, opts: &LsqOptions) -> Result<LsqReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = x0.len();
    bounds.validate(n)?;
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut r = f(&x)?;
    let m = r.len();
    if m == 0 {
        return Err(Error::Fit("no residuals to fit".into()));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite residuals at the initial point".into()));
    }
    let mut cost = sumsq(&r);
    let mut history = vec![cost];
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut damping = opts.initial_damping;
    let mut converged = n == 0 || cost <= ZERO_COST;

    let jacobian = |x: &[f64], r: &[f64], evals: &mut usize| -> Result<DMatrix<f64>> {
        let cols: Vec<Result<Vec<f64>>> = crate::par_map(&(0..n).collect::<Vec<_>>(), |&j| {
            let mut xp = x.to_vec();
            let mut h = opts.fd_step * x[j].abs().max(opts.fd_floor);
            if xp[j] + h > bounds.hi(j) {
                h = -h;
            }
            xp[j] += h;
            let rp = f(&xp)?;
            Ok(rp.iter().zip(r).map(|(a, b)| (a - b) / h).collect())
        });
        *evals += n;
        let mut jm = DMatrix::zeros(m, n);
        for (j, c) in cols.into_iter().enumerate() {
            let c = c?;
            if c.len() != m {
                return Err(Error::Fit("residual vector changed length".into()));
            }
            jm.set_column(j, &DVector::from_vec(c));
        }
        Ok(jm)
    };

    let mut jac = if n > 0 { jacobian(&x, &r, &mut evaluations)? } else { DMatrix::zeros(m, 0) };
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let dmax = jtj.diagonal().max().max(1e-300);
        let mut accepted = false;
        while damping < MAX_DAMPING {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12 * dmax);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                damping *= 4.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            bounds.project(&mut xn);
            let moved = xn.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved == 0.0 {
                damping *= 4.0;
                continue;
            }
            evaluations += 1;
            let trial = f(&xn).ok().filter(|rn| rn.len() == m && rn.iter().all(|v| v.is_finite()));
            match trial {
                Some(rn) if sumsq(&rn) < cost => {
                    let new_cost = sumsq(&rn);
                    let rel = (cost - new_cost) / cost;
                    x = xn;
                    r = rn;
                    cost = new_cost;
                    history.push(cost);
                    damping = (damping / 3.0).max(1e-12);
                    accepted = true;
                    if rel < opts.ftol || cost <= ZERO_COST {
                        converged = true;
                    }
                    break;
                }
                _ => damping *= 4.0,
            }
        }
        if !accepted {
            // No descent direction left at any damping: a stationary point.
            converged = true;
            break;
        }
        if !converged {
            jac = jacobian(&x, &r, &mut evaluations)?;
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "not converged after {iterations} iterations (cost {cost:.6e}, last relative change {:.3e})",
            history.windows(2).last().map_or(f64::NAN, |w| (w[0] - w[1]) / w[0])
        )));
    }

    if n > 0 {
        jac = jacobian(&x, &r, &mut evaluations)?;
    }
    let (std_errors, covariance, rank_deficient) = covariance(&jac, cost, m, n);
    let at_bound = (0..n)
        .map(|i| {
            let span = (bounds.hi(i) - bounds.lo(i)).abs();
            let tol = if span.is_finite() { 1e-9 * span } else { 0.0 };
            (x[i] - bounds.lo(i)).abs() <= tol || (bounds.hi(i) - x[i]).abs() <= tol
        })
        .collect();
    Ok(LsqReport {
        x,
        residuals: r,
        cost,
        iterations,
        evaluations,
        cost_history: history,
        std_errors,
        covariance,
        rank_deficient,
        at_bound,
    })
}

/// Relative singular-value threshold for rank deficiency.
const RANK_TOL: f64 = 1e-10;

fn covariance(jac: &DMatrix<f64>, cost: f64, m: usize, n: usize) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
    if n == 0 {
        return (vec![], vec![], false);
    }
    let s2 = if m > n { cost / (m - n) as f64 } else { cost.max(0.0) };
    // Column scaling keeps the SVD threshold meaningful across units.
    let scale: Vec<f64> = (0..n).map(|j| jac.column(j).norm().max(1e-300)).collect();
    let js = DMatrix::from_fn(m, n, |i, j| jac[(i, j)] / scale[j]);
    let svd = js.svd(false, true);
    let smax = svd.singular_values.max();
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= RANK_TOL * smax) || m < n;
    let vt = svd.v_t.as_ref().expect("requested");
    let mut cov_s = DMatrix::zeros(n, n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_TOL * smax {
            let v = vt.row(k).transpose();
            cov_s += &v * v.transpose() / (s * s);
        }
    }
    let cov = DMatrix::from_fn(n, n, |i, j| s2 * cov_s[(i, j)] / (scale[i] * scale[j]));
    let std = (0..n)
        .map(|i| if rank_deficient && cov[(i, i)] == 0.0 { f64::INFINITY } else { cov[(i, i)].max(0.0).sqrt() })
        .collect();
    let rows = (0..n).map(|i| (0..n).map(|j| cov[(i, j)]).collect()).collect();
    (std, rows, rank_deficient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_as_least_squares() {
        let f = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let r = least_squares(f, &[-1.2, 1.0], &Bounds::default(), &LsqOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.cost_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn linear_fit_errors_match_closed_form() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let noise = [0.01, -0.02, 0.015, 0.0, -0.01, 0.02, -0.015, 0.005, 0.0, -0.005, 0.01, -0.02, 0.015, 0.0, -0.01, 0.02, -0.015, 0.005, 0.0, -0.005];
        let y: Vec<f64> = t.iter().zip(noise).map(|(t, e)| 2.0 + 3.0 * t + e).collect();
        let f = |p: &[f64]| Ok(t.iter().zip(&y).map(|(t, y)| p[0] + p[1] * t - y).collect());
        let r = least_squares(f, &[0.0, 0.0], &Bounds::default(), &LsqOptions::default()).unwrap();
        let n = t.len() as f64;
        let tm = t.iter().sum::<f64>() / n;
        let sxx: f64 = t.iter().map(|t| (t - tm).powi(2)).sum();
        let s2 = r.cost / (n - 2.0);
        assert!((r.std_errors[1] - (s2 / sxx).sqrt()).abs() < 1e-6 * (s2 / sxx).sqrt());
        assert!(!r.rank_deficient);
    }

    #[test]
    fn bounds_are_respected_and_flagged() {
        let f = |x: &[f64]| Ok(vec![x[0] - 5.0, x[1] - 1.0]);
        let b = Bounds::new(vec![0.0, 0.0], vec![2.0, 3.0]);
        let r = least_squares(f, &[1.0, 1.5], &b, &LsqOptions::default()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-12);
        assert!((r.x[1] - 1.0).abs() < 1e-8);
        assert_eq!(r.at_bound, vec![true, false]);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        // Only the sum of the parameters is identifiable.
        let f = |x: &[f64]| Ok(vec![x[0] + x[1] - 1.0, 2.0 * (x[0] + x[1]) - 2.0, x[0] + x[1] - 1.01]);
        let r = least_squares(f, &[0.2, 0.3], &Bounds::default(), &LsqOptions::default()).unwrap();
        assert!(r.rank_deficient);
    }

    #[test]
    fn failing_residuals_at_start_are_an_error() {
        let f = |_: &[f64]| Ok(vec![f64::NAN]);
        assert!(matches!(least_squares(f, &[1.0], &Bounds::default(), &LsqOptions::default()), Err(Error::Fit(_))));
        let g = |_: &[f64]| Ok(vec![]);
        assert!(least_squares(g, &[1.0], &Bounds::default(), &LsqOptions::default()).is_err());
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let f = |x: &[f64]| Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let opts = LsqOptions { max_iter: 2, ..LsqOptions::default() };
        assert!(matches!(least_squares(f, &[-1.2, 1.0], &Bounds::default(), &opts), Err(Error::Fit(_))));
    }
}
