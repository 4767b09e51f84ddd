//! Maximum likelihood fitting of Poisson and grouped binomial regressions
//! under their canonical links (log and logit), by iteratively reweighted
//! least squares. With canonical links IRLS is Newton's method on the
//! log-likelihood, so the same loop serves both families.
//!
//! Each weighted least-squares step is solved through a QR factorisation of
//! the row-scaled design, never through the normal equations; the final R
//! factor also yields the estimated covariance (X' V X)^-1 = R^-1 R^-'.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{DesignMatrix, ParameterLabel};
use crate::error::{Error, Result};

/// The response distribution. Binomial observations are grouped: class `i`
/// records `trials[i]` attempts, and the response vector passed to `fit`
/// holds the success counts.
#[derive(Debug, Clone)]
pub enum Family {
    Poisson,
    Binomial { trials: DVector<f64> },
}

/// Tuning knobs for the IRLS loop. The defaults are deliberately strict:
/// the equivalence checks downstream compare two independently obtained
/// fits at 1e-8, which needs both solved well past that.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Hard cap on IRLS iterations.
    pub max_iterations: usize,
    /// Converged only when the largest score coordinate is below this.
    pub score_tolerance: f64,
    /// ... and the relative deviance change is below this.
    pub deviance_tolerance: f64,
    /// Abort with `MleMayNotExist` when any estimate magnitude passes this;
    /// on the logit or log scale such values are far beyond anything a
    /// contingency table with finite counts can support.
    pub divergence_bound: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 100,
            score_tolerance: 1e-10,
            deviance_tolerance: 1e-12,
            divergence_bound: 30.0,
        }
    }
}

/// A converged maximum likelihood fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub labels: Vec<ParameterLabel>,
    pub estimates: DVector<f64>,
    /// Estimated covariance of the estimates: inverse Fisher information at
    /// the maximum. Symmetric positive definite.
    pub covariance: DMatrix<f64>,
    /// Fitted means (Poisson) or fitted probabilities (binomial), per row.
    pub fitted: DVector<f64>,
    pub linear_predictor: DVector<f64>,
    pub deviance: f64,
    pub iterations: usize,
    /// Largest absolute score coordinate at the reported estimates.
    pub max_score_residual: f64,
}

impl FitResult {
    /// Square roots of the covariance diagonal.
    pub fn standard_errors(&self) -> DVector<f64> {
        self.covariance.map_diagonal(|v| v.sqrt())
    }

    /// Two-sided Wald intervals with coverage `1 - alpha`.
    pub fn wald_intervals(&self, alpha: f64) -> Result<Vec<(f64, f64)>> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha { alpha });
        }
        let z = Normal::new(0.0, 1.0)
            .expect("standard normal")
            .inverse_cdf(1.0 - alpha / 2.0);
        Ok(self
            .estimates
            .iter()
            .zip(self.standard_errors().iter())
            .map(|(&est, &se)| (est - z * se, est + z * se))
            .collect())
    }
}

/// Fits a Poisson regression with log link to the given counts.
pub fn fit_poisson(
    design: &DesignMatrix,
    counts: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    for &n in counts {
        if !n.is_finite() || n < 0.0 {
            return Err(Error::InvalidResponse {
                detail: format!("Poisson count {n} is negative or non-finite"),
            });
        }
    }
    fit(design, counts, &Family::Poisson, options)
}

/// Fits a grouped binomial regression with logit link. Classes with zero
/// trials carry zero weight and do not influence the fit.
pub fn fit_binomial(
    design: &DesignMatrix,
    trials: &[f64],
    successes: &[f64],
    options: &FitOptions,
) -> Result<FitResult> {
    if trials.len() != successes.len() {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "{} trial entries vs {} success entries",
                trials.len(),
                successes.len()
            ),
        });
    }
    for (&t, &s) in trials.iter().zip(successes) {
        if !t.is_finite() || t < 0.0 || !s.is_finite() || s < 0.0 || s > t {
            return Err(Error::InvalidResponse {
                detail: format!("class with trials {t} and successes {s}"),
            });
        }
    }
    let family = Family::Binomial {
        trials: DVector::from_column_slice(trials),
    };
    fit(design, successes, &family, options)
}

/// Fits either family to a labelled design by IRLS.
pub fn fit(
    design: &DesignMatrix,
    response: &[f64],
    family: &Family,
    options: &FitOptions,
) -> Result<FitResult> {
    let x = design.matrix();
    let n = x.nrows();
    let p = x.ncols();
    if response.len() != n {
        return Err(Error::DimensionMismatch {
            detail: format!("design has {n} rows, response has {}", response.len()),
        });
    }
    if let Family::Binomial { trials } = family {
        if trials.len() != n {
            return Err(Error::DimensionMismatch {
                detail: format!("design has {n} rows, trials has {}", trials.len()),
            });
        }
    }
    let y = DVector::from_column_slice(response);

    // Initialise on the mean scale from the data, then iterate on the
    // parameter scale. The half-count shifts keep the initial link values
    // finite for empty cells and classes.
    let mut eta: DVector<f64> = match family {
        Family::Poisson => y.map(|v| (v + 0.5).ln()),
        Family::Binomial { trials } => DVector::from_fn(n, |i, _| {
            let p0 = (y[i] + 0.5) / (trials[i] + 1.0);
            (p0 / (1.0 - p0)).ln()
        }),
    };
    let mut old_deviance = monitored_deviance(&y, &eta, family);
    let mut estimates = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    let mut max_score = f64::INFINITY;

    for iter in 1..=options.max_iterations {
        iterations = iter;
        // Weighted working response: w z = w eta + (y - mean); rows with
        // zero weight contribute nothing to the least-squares problem.
        let mut sqrt_w = DVector::zeros(n);
        let mut z = DVector::zeros(n);
        for i in 0..n {
            let (w, residual) = match family {
                Family::Poisson => {
                    let mu = eta[i].exp();
                    (mu, y[i] - mu)
                }
                Family::Binomial { trials } => {
                    let pr = logistic(eta[i]);
                    (trials[i] * pr * (1.0 - pr), y[i] - trials[i] * pr)
                }
            };
            if w > 0.0 {
                sqrt_w[i] = w.sqrt();
                z[i] = eta[i] + residual / w;
            }
        }
        let mut a = x.clone();
        for i in 0..n {
            a.row_mut(i).scale_mut(sqrt_w[i]);
        }
        let b = z.component_mul(&sqrt_w);
        let qr = a.qr();
        let r = qr.r();
        check_triangular_regular(&r)?;
        let qtb = qr.q().transpose() * b;
        estimates = r
            .solve_upper_triangular(&qtb)
            .ok_or(Error::SingularSystem)?;
        if let Some(j) = (0..p).find(|&j| estimates[j].abs() > options.divergence_bound) {
            let _ = j;
            return Err(Error::MleMayNotExist {
                bound: options.divergence_bound,
                iteration: iter,
            });
        }

        eta = x * &estimates;
        let deviance = monitored_deviance(&y, &eta, family);
        max_score = score_at_eta(x, &y, &eta, family)
            .iter()
            .fold(0.0f64, |acc, s| acc.max(s.abs()));
        let relative_change = (deviance - old_deviance).abs() / (deviance.abs() + 1.0);
        if max_score < options.score_tolerance && relative_change < options.deviance_tolerance {
            converged = true;
            break;
        }
        old_deviance = deviance;
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            score_residual: max_score,
        });
    }

    // Covariance from the information at the maximum, via one more QR of
    // the reweighted design.
    let fitted: DVector<f64> = match family {
        Family::Poisson => eta.map(f64::exp),
        Family::Binomial { .. } => eta.map(logistic),
    };
    let mut a = x.clone();
    for i in 0..n {
        let w = match family {
            Family::Poisson => fitted[i],
            Family::Binomial { trials } => trials[i] * fitted[i] * (1.0 - fitted[i]),
        };
        a.row_mut(i).scale_mut(w.max(0.0).sqrt());
    }
    let r = a.qr().r();
    check_triangular_regular(&r)?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::SingularSystem)?;
    let mut covariance = &r_inv * r_inv.transpose();
    // symmetrise away factorisation round-off
    covariance = (&covariance + covariance.transpose()) * 0.5;

    let deviance = match family {
        Family::Poisson => deviance_poisson(response, fitted.as_slice())?,
        Family::Binomial { trials } => {
            deviance_binomial(trials.as_slice(), response, fitted.as_slice())?
        }
    };
    Ok(FitResult {
        labels: design.columns().to_vec(),
        estimates,
        covariance,
        fitted,
        linear_predictor: eta,
        deviance,
        iterations,
        max_score_residual: max_score,
    })
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn check_triangular_regular(r: &DMatrix<f64>) -> Result<()> {
    let k = r.nrows().min(r.ncols());
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if (0..k).any(|i| !r[(i, i)].is_finite() || r[(i, i)].abs() <= 1e-12 * max_diag.max(1e-300)) {
        return Err(Error::SingularSystem);
    }
    Ok(())
}

/// Log-likelihood kernel at arbitrary parameters, dropping terms that do
/// not involve the parameters. For the binomial family the `log(1 + e^eta)`
/// term is evaluated in a form that cannot overflow.
pub fn log_likelihood(
    x: &DMatrix<f64>,
    response: &[f64],
    family: &Family,
    theta: &DVector<f64>,
) -> f64 {
    let eta = x * theta;
    match family {
        Family::Poisson => (0..x.nrows())
            .map(|i| response[i] * eta[i] - eta[i].exp())
            .sum(),
        Family::Binomial { trials } => (0..x.nrows())
            .map(|i| {
                let log1p_exp = if eta[i] > 0.0 {
                    eta[i] + (-eta[i]).exp().ln_1p()
                } else {
                    eta[i].exp().ln_1p()
                };
                response[i] * eta[i] - trials[i] * log1p_exp
            })
            .sum(),
    }
}

/// Score (gradient of the log-likelihood) at arbitrary parameters: under
/// the canonical links this is X'(y - mean).
pub fn score(
    x: &DMatrix<f64>,
    response: &[f64],
    family: &Family,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let eta = x * theta;
    score_at_eta(x, &DVector::from_column_slice(response), &eta, family)
}

fn score_at_eta(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: &DVector<f64>,
    family: &Family,
) -> DVector<f64> {
    let residual = DVector::from_fn(x.nrows(), |i, _| match family {
        Family::Poisson => y[i] - eta[i].exp(),
        Family::Binomial { trials } => y[i] - trials[i] * logistic(eta[i]),
    });
    x.transpose() * residual
}

/// Deviance used to monitor IRLS progress. Unlike the reported deviances
/// below it is valid away from the maximum, so no margin preconditions.
fn monitored_deviance(y: &DVector<f64>, eta: &DVector<f64>, family: &Family) -> f64 {
    match family {
        Family::Poisson => 2.0
            * (0..y.len())
                .map(|i| {
                    let mu = eta[i].exp();
                    xlogx_over(y[i], mu) - (y[i] - mu)
                })
                .sum::<f64>(),
        Family::Binomial { trials } => 2.0
            * (0..y.len())
                .map(|i| {
                    if trials[i] == 0.0 {
                        return 0.0;
                    }
                    let pr = logistic(eta[i]);
                    xlogx_over(y[i], trials[i] * pr)
                        + xlogx_over(trials[i] - y[i], trials[i] * (1.0 - pr))
                })
                .sum::<f64>(),
    }
}

/// `x log(x / d)` with the `0 log 0 = 0` convention.
fn xlogx_over(x: f64, d: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / d).ln()
    }
}

/// Poisson deviance `2 sum n log(n / mu)`. This short form assumes the
/// fitted values reproduce the total, which holds at the maximum for any
/// model with an intercept; the assumption is checked, not trusted.
pub fn deviance_poisson(counts: &[f64], fitted: &[f64]) -> Result<f64> {
    if counts.len() != fitted.len() {
        return Err(Error::DimensionMismatch {
            detail: format!("{} counts vs {} fitted values", counts.len(), fitted.len()),
        });
    }
    for &mu in fitted {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidFitted {
                detail: format!("Poisson mean {mu} must be positive and finite"),
            });
        }
    }
    let total: f64 = counts.iter().sum();
    let fitted_total: f64 = fitted.iter().sum();
    if (total - fitted_total).abs() > 1e-8 * total.max(1.0) {
        return Err(Error::DeviancePrecondition {
            detail: format!(
                "fitted total {fitted_total} differs from observed total {total}"
            ),
        });
    }
    Ok(2.0
        * counts
            .iter()
            .zip(fitted)
            .map(|(&n, &mu)| xlogx_over(n, mu))
            .sum::<f64>())
}

/// Grouped binomial deviance
/// `2 sum [s log(y/p) + (t - s) log((1-y)/(1-p))]` with `y = s/t`;
/// zero-trial classes contribute nothing.
pub fn deviance_binomial(trials: &[f64], successes: &[f64], fitted: &[f64]) -> Result<f64> {
    if trials.len() != successes.len() || trials.len() != fitted.len() {
        return Err(Error::DimensionMismatch {
            detail: format!(
                "{} trials vs {} successes vs {} fitted values",
                trials.len(),
                successes.len(),
                fitted.len()
            ),
        });
    }
    let mut total = 0.0;
    for i in 0..trials.len() {
        let (t, s, p) = (trials[i], successes[i], fitted[i]);
        if t == 0.0 {
            continue;
        }
        let interior_needed = (s > 0.0, s < t);
        if !p.is_finite()
            || (interior_needed.0 && p <= 0.0)
            || (interior_needed.1 && p >= 1.0)
            || !(0.0..=1.0).contains(&p)
        {
            return Err(Error::InvalidFitted {
                detail: format!("probability {p} incompatible with s={s}, t={t}"),
            });
        }
        total += xlogx_over(s, t * p) + xlogx_over(t - s, t * (1.0 - p));
    }
    Ok(2.0 * total)
}
