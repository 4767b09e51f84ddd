//! The two-sided fit and the numerical verification of their agreement.
//!
//! A `CorrespondencePair` fits the same contingency table twice: once as a
//! Poisson log-linear model over all cells, once as a binomial logistic
//! regression on the grouped data for a chosen binary outcome. When the
//! log-linear model contains the full interaction among the non-outcome
//! factors, theory says the two routes agree exactly: the outcome-bearing
//! log-linear estimates equal the logistic estimates, the corresponding
//! covariance blocks coincide, fitted class margins are preserved, and
//! (without merging) the two deviances are equal. `verify` recomputes each
//! of those statements from the two independent fits and reports the
//! observed discrepancies.

use serde::Serialize;

use crate::design::{rearrange, DesignMatrix, IncidenceMatrix, RearrangedDesign};
use crate::error::{Error, Result};
use crate::formula::{FactorName, ModelFormula};
use crate::glm::{self, FitOptions, FitResult};
use crate::table::{index_from_levels, ContingencyTable, Factor, GroupedBinomialData};

/// Default absolute tolerance for the agreement checks: two orders of
/// magnitude above the solver's score tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Result of one named agreement check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// Largest absolute discrepancy observed (for the one-sided merged
    /// deviance check, the amount by which the ordering is violated).
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: &str, discrepancy: f64, tolerance: f64, detail: String) -> Self {
        CheckRecord {
            name: name.into(),
            discrepancy,
            tolerance,
            passed: discrepancy <= tolerance,
            detail,
        }
    }
}

/// All checks for one pair, in a fixed order.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl VerificationReport {
    fn new(checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        VerificationReport { checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A log-linear fit and the directly fitted logistic regression it implies,
/// built and solved independently of each other.
#[derive(Debug, Clone)]
pub struct CorrespondencePair {
    table: ContingencyTable,
    outcome: Factor,
    merged_factors: Vec<FactorName>,
    log_linear_formula: ModelFormula,
    logistic_formula: ModelFormula,
    grouped_unmerged: GroupedBinomialData,
    grouped: GroupedBinomialData,
    log_linear_design: DesignMatrix,
    logistic_design: DesignMatrix,
    incidence: IncidenceMatrix,
    rearranged: RearrangedDesign,
    poisson_fit: FitResult,
    logistic_fit: FitResult,
    /// Present only when merging: the same logistic formula fitted on the
    /// unmerged grouping, for the deviance comparison.
    unmerged_logistic_fit: Option<FitResult>,
}

impl CorrespondencePair {
    /// Builds designs, checks eligibility structurally, and runs both fits.
    /// `merge` lists factors to sum out of the grouped data; only factors
    /// the implied logistic model does not use can be merged.
    pub fn build(
        table: &ContingencyTable,
        formula: &ModelFormula,
        outcome: &FactorName,
        merge: &[FactorName],
        options: &FitOptions,
    ) -> Result<Self> {
        let eligibility = formula.correspondence_eligibility(outcome);
        if !eligibility.eligible {
            return Err(Error::NotEligible {
                detail: eligibility.detail,
            });
        }
        let logistic_formula = formula.derive_logistic(outcome)?;
        let grouped_unmerged = table.group_by_outcome(outcome)?;
        for name in merge {
            if logistic_formula.factors().contains(name) {
                return Err(Error::NotEligible {
                    detail: format!(
                        "cannot merge factor `{name}`: the implied logistic model uses it"
                    ),
                });
            }
        }
        let grouped = if merge.is_empty() {
            grouped_unmerged.clone()
        } else {
            grouped_unmerged.merge(merge)?
        };

        let log_linear_design = DesignMatrix::log_linear(formula, table)?;
        let logistic_design_unmerged =
            DesignMatrix::logistic(&logistic_formula, &grouped_unmerged)?;
        let logistic_design = if merge.is_empty() {
            logistic_design_unmerged.clone()
        } else {
            DesignMatrix::logistic(&logistic_formula, &grouped)?
        };
        let outcome_factor = table
            .factor(outcome)
            .expect("outcome validated by grouping")
            .clone();
        let incidence =
            IncidenceMatrix::derive(&log_linear_design, &logistic_design_unmerged, &outcome_factor)?;
        let rearranged = rearrange(&log_linear_design, outcome, &incidence)?;
        rearranged.verify(&logistic_design_unmerged)?;

        let poisson_fit = glm::fit_poisson(&log_linear_design, table.counts(), options)?;
        let logistic_fit =
            glm::fit_binomial(&logistic_design, grouped.trials(), grouped.successes(), options)?;
        let unmerged_logistic_fit = if merge.is_empty() {
            None
        } else {
            Some(glm::fit_binomial(
                &logistic_design_unmerged,
                grouped_unmerged.trials(),
                grouped_unmerged.successes(),
                options,
            )?)
        };

        Ok(CorrespondencePair {
            table: table.clone(),
            outcome: outcome_factor,
            merged_factors: merge.to_vec(),
            log_linear_formula: formula.clone(),
            logistic_formula,
            grouped_unmerged,
            grouped,
            log_linear_design,
            logistic_design,
            incidence,
            rearranged,
            poisson_fit,
            logistic_fit,
            unmerged_logistic_fit,
        })
    }

    pub fn table(&self) -> &ContingencyTable {
        &self.table
    }

    pub fn outcome(&self) -> &Factor {
        &self.outcome
    }

    pub fn merged_factors(&self) -> &[FactorName] {
        &self.merged_factors
    }

    pub fn log_linear_formula(&self) -> &ModelFormula {
        &self.log_linear_formula
    }

    pub fn logistic_formula(&self) -> &ModelFormula {
        &self.logistic_formula
    }

    pub fn grouped(&self) -> &GroupedBinomialData {
        &self.grouped
    }

    pub fn grouped_unmerged(&self) -> &GroupedBinomialData {
        &self.grouped_unmerged
    }

    pub fn log_linear_design(&self) -> &DesignMatrix {
        &self.log_linear_design
    }

    pub fn logistic_design(&self) -> &DesignMatrix {
        &self.logistic_design
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    pub fn rearranged(&self) -> &RearrangedDesign {
        &self.rearranged
    }

    pub fn poisson_fit(&self) -> &FitResult {
        &self.poisson_fit
    }

    pub fn logistic_fit(&self) -> &FitResult {
        &self.logistic_fit
    }

    pub fn unmerged_logistic_fit(&self) -> Option<&FitResult> {
        self.unmerged_logistic_fit.as_ref()
    }

    /// Logistic estimates implied by the log-linear fit: `T lambda-hat`.
    pub fn implied_estimates(&self) -> nalgebra::DVector<f64> {
        self.incidence.map_estimates(&self.poisson_fit.estimates)
    }

    /// Logistic covariance implied by the log-linear fit: `T Sigma T'`.
    pub fn implied_covariance(&self) -> nalgebra::DMatrix<f64> {
        self.incidence.map_covariance(&self.poisson_fit.covariance)
    }

    /// Fitted Poisson means summed per class of the given grouping factors,
    /// split by outcome level: `(level-0 sums, level-1 sums)`.
    fn fitted_class_sums(&self, grouping: &[Factor]) -> (Vec<f64>, Vec<f64>) {
        let table_factors = self.table.factors();
        let outcome_pos = table_factors
            .iter()
            .position(|f| f.name() == self.outcome.name())
            .expect("outcome is a table factor");
        let positions: Vec<usize> = grouping
            .iter()
            .map(|g| {
                table_factors
                    .iter()
                    .position(|f| f.name() == g.name())
                    .expect("grouping factor comes from the table")
            })
            .collect();
        let sizes: Vec<usize> = grouping.iter().map(Factor::n_levels).collect();
        let n_classes: usize = sizes.iter().product::<usize>().max(1);
        let mut level0 = vec![0.0; n_classes];
        let mut level1 = vec![0.0; n_classes];
        for idx in 0..self.table.n_cells() {
            let levels = self.table.levels_of(idx);
            let class_levels: Vec<usize> = positions.iter().map(|&p| levels[p]).collect();
            let class = index_from_levels(&class_levels, &sizes);
            if levels[outcome_pos] == 1 {
                level1[class] += self.poisson_fit.fitted[idx];
            } else {
                level0[class] += self.poisson_fit.fitted[idx];
            }
        }
        (level0, level1)
    }

    /// Runs every applicable agreement check at the given tolerance.
    pub fn verify(&self, tolerance: f64) -> VerificationReport {
        let mut checks = Vec::with_capacity(5);

        // Margin preservation, checked at the finest grouping: each class
        // total must be reproduced by the fitted Poisson means.
        let (mu0, mu1) = self.fitted_class_sums(self.grouped_unmerged.factors());
        let lemma1 = self
            .grouped_unmerged
            .trials()
            .iter()
            .enumerate()
            .map(|(i, &t)| (t - (mu0[i] + mu1[i])).abs())
            .fold(0.0f64, f64::max);
        checks.push(CheckRecord::new(
            "lemma1",
            lemma1,
            tolerance,
            format!(
                "class totals reproduced by fitted means over {} classes",
                self.grouped_unmerged.n_classes()
            ),
        ));

        let implied = self.implied_estimates();
        let direct = &self.logistic_fit.estimates;
        let theorem1 = (implied - direct)
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));
        checks.push(CheckRecord::new(
            "theorem1_mle",
            theorem1,
            tolerance,
            format!("{} coefficients compared", direct.len()),
        ));

        let implied_cov = self.implied_covariance();
        let direct_cov = &self.logistic_fit.covariance;
        let theorem2 = (implied_cov - direct_cov)
            .iter()
            .fold(0.0f64, |acc, d| acc.max(d.abs()));
        let se_diff = self
            .implied_covariance()
            .diagonal()
            .iter()
            .zip(direct_cov.diagonal().iter())
            .map(|(a, b)| (a.sqrt() - b.sqrt()).abs())
            .fold(0.0f64, f64::max);
        checks.push(CheckRecord::new(
            "theorem2_se",
            theorem2,
            tolerance,
            format!("full covariance compared entrywise; max SE difference {se_diff:.3e}"),
        ));

        if let Some(unmerged_fit) = &self.unmerged_logistic_fit {
            // With merging the deviances measure fit against different
            // saturated models, so equality is not expected; the merged
            // grouping can only fit better or equally.
            let d_merged = self.logistic_fit.deviance;
            let d_unmerged = unmerged_fit.deviance;
            let violation = (d_merged - d_unmerged).max(0.0);
            checks.push(CheckRecord::new(
                "merged_deviance_differs",
                violation,
                tolerance,
                format!("deviance {d_merged:.6} on merged classes vs {d_unmerged:.6} unmerged"),
            ));
        } else {
            let theorem3 = (self.poisson_fit.deviance - self.logistic_fit.deviance).abs();
            checks.push(CheckRecord::new(
                "theorem3_deviance",
                theorem3,
                tolerance,
                format!(
                    "log-linear deviance {:.6} vs logistic deviance {:.6}",
                    self.poisson_fit.deviance, self.logistic_fit.deviance
                ),
            ));
        }

        // Fitted probabilities against the ratio of fitted means, on the
        // grouping that was actually fitted.
        let (mu0, mu1) = self.fitted_class_sums(self.grouped.factors());
        let prob = (0..self.grouped.n_classes())
            .map(|i| (self.logistic_fit.fitted[i] - mu1[i] / (mu0[i] + mu1[i])).abs())
            .fold(0.0f64, f64::max);
        checks.push(CheckRecord::new(
            "fitted_probability_identity",
            prob,
            tolerance,
            format!(
                "class probabilities vs fitted-mean ratios over {} classes",
                self.grouped.n_classes()
            ),
        ));

        VerificationReport::new(checks)
    }
}
