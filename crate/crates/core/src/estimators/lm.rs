//! Damped (Levenberg–Marquardt) weighted least squares.
//!
//! The step solves `(J^T J + lambda D) delta = J^T r` with `D = diag(J^T J)`
//! and residuals and Jacobian rows divided by the per-point uncertainty.
//! `lambda` starts at `1e-3`, is multiplied by 3 on a rejected step and
//! divided by 3 on an accepted one. A step is accepted only if it lowers the
//! weighted residual norm, so the norm is non-increasing over accepted
//! iterations.

use nalgebra::{DMatrix, DVector};

use super::EstimatorError;

/// One data point `(x, y)` with standard uncertainty `sigma` on `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl Observation {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }

    pub fn unweighted(x: f64, y: f64) -> Self {
        Self { x, y, sigma: 1.0 }
    }
}

/// A scalar model `y = f(x; p)`.
pub trait Model: Sync {
    fn parameter_names(&self) -> Vec<String>;

    fn eval(&self, x: f64, params: &[f64]) -> f64;

    /// `df/dp` at `x`. Defaults to central finite differences.
    fn gradient(&self, x: f64, params: &[f64], out: &mut [f64]) {
        finite_difference_gradient(|p| self.eval(x, p), params, out);
    }

    fn n_params(&self) -> usize {
        self.parameter_names().len()
    }
}

/// Central differences with step `eps^{1/3} * |p|` (`eps^{1/3}` at `p = 0`).
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], out: &mut [f64]) {
    let mut p = params.to_vec();
    for j in 0..params.len() {
        let h = f64::EPSILON.cbrt() * if params[j] == 0.0 { 1.0 } else { params[j].abs() };
        p[j] = params[j] + h;
        let up = f(&p);
        p[j] = params[j] - h;
        let down = f(&p);
        p[j] = params[j];
        out[j] = (up - down) / (2.0 * h);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative step and scaled-gradient tolerance.
    pub tolerance: f64,
    /// Scale the covariance by the reduced chi-square (use when `sigma` is
    /// only a relative weight).
    pub scale_covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-10, scale_covariance: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// `sqrt(sum_i ((y_i - f_i)/sigma_i)^2)`
    pub residual_norm: f64,
    /// Residual norm after each accepted step, starting from the initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub n_iterations: usize,
    pub degrees_of_freedom: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.params[i])
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn stderrs(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }

    pub fn chi2_reduced(&self) -> f64 {
        if self.degrees_of_freedom == 0 {
            f64::NAN
        } else {
            self.residual_norm.powi(2) / self.degrees_of_freedom as f64
        }
    }
}

struct Linearization {
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
}

fn linearize<M: Model + ?Sized>(model: &M, data: &[Observation], p: &[f64]) -> Linearization {
    let n = p.len();
    let mut jacobian = DMatrix::zeros(data.len(), n);
    let mut row = vec![0.0; n];
    let residuals = DVector::from_iterator(
        data.len(),
        data.iter().enumerate().map(|(i, d)| {
            model.gradient(d.x, p, &mut row);
            for j in 0..n {
                jacobian[(i, j)] = row[j] / d.sigma;
            }
            (d.y - model.eval(d.x, p)) / d.sigma
        }),
    );
    Linearization { residuals, jacobian }
}

fn residual_norm<M: Model + ?Sized>(model: &M, data: &[Observation], p: &[f64]) -> f64 {
    data.iter().map(|d| ((d.y - model.eval(d.x, p)) / d.sigma).powi(2)).sum::<f64>().sqrt()
}

/// Minimizes the weighted residual norm of `model` against `data`.
///
/// Non-convergence returns [`EstimatorError::NotConverged`] carrying the
/// best parameters found.
pub fn nlls_fit<M: Model + ?Sized>(
    model: &M,
    data: &[Observation],
    initial: &[f64],
    options: FitOptions,
) -> Result<FitResult, EstimatorError> {
    let n = model.n_params();
    if initial.len() != n {
        return Err(EstimatorError::ParameterCount { expected: n, got: initial.len() });
    }
    if data.len() < n {
        return Err(EstimatorError::TooFewPoints { needed: n, got: data.len() });
    }
    if data.iter().any(|d| !d.x.is_finite() || !d.y.is_finite() || !(d.sigma > 0.0 && d.sigma.is_finite()))
        || initial.iter().any(|p| !p.is_finite())
    {
        return Err(EstimatorError::InvalidData);
    }
    let tol = options.tolerance;
    let mut p = initial.to_vec();
    let mut lin = linearize(model, data, &p);
    let mut norm = lin.residuals.norm();
    let mut history = vec![norm];
    let mut jtj = lin.jacobian.tr_mul(&lin.jacobian);
    let mut lambda = 1e-3;
    let lambda_ceiling = 1e32;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let gradient = lin.jacobian.tr_mul(&lin.residuals);
        if norm == 0.0 || scaled_gradient(&gradient, &jtj, norm) <= tol {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda <= lambda_ceiling {
            let mut damped = jtj.clone();
            let max_diag = (0..n).map(|j| jtj[(j, j)]).fold(0.0, f64::max);
            for j in 0..n {
                damped[(j, j)] += lambda * jtj[(j, j)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&gradient),
                None => {
                    lambda *= 3.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_norm = residual_norm(model, data, &trial);
            if trial_norm.is_finite() && trial_norm < norm {
                let small = step.iter().zip(&p).all(|(d, v)| d.abs() <= tol * (v.abs() + tol));
                p = trial;
                lin = linearize(model, data, &p);
                norm = lin.residuals.norm();
                history.push(norm);
                jtj = lin.jacobian.tr_mul(&lin.jacobian);
                lambda /= 3.0;
                accepted = true;
                if small {
                    converged = true;
                }
                break;
            }
            lambda *= 3.0;
        }
        if !accepted {
            // no downhill step exists at machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }

    let dof = data.len() - n;
    let mut covariance = jtj.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN));
    if options.scale_covariance && dof > 0 {
        covariance *= norm * norm / dof as f64;
    }
    covariance = (&covariance + covariance.transpose()) * 0.5;
    let result = FitResult {
        names: model.parameter_names(),
        params: p,
        covariance,
        residual_norm: norm,
        residual_history: history,
        converged,
        n_iterations: iterations,
        degrees_of_freedom: dof,
    };
    if converged {
        Ok(result)
    } else {
        Err(EstimatorError::NotConverged(Box::new(result)))
    }
}

/// Largest cosine between the residual vector and a Jacobian column.
fn scaled_gradient(gradient: &DVector<f64>, jtj: &DMatrix<f64>, norm: f64) -> f64 {
    gradient
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let column = jtj[(j, j)].sqrt();
            if column == 0.0 { 0.0 } else { g.abs() / (column * norm) }
        })
        .fold(0.0, f64::max)
}
