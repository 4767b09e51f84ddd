//! The acceptance gate: nine numbered criteria covering the bundled
//! reproduction, large randomized equivalence sweeps, an independent
//! brute-force cross-check of the optimizer, numerical hygiene, and the
//! hard-coded reference matrices.
//!
//! Each criterion prints exactly one `PASS`/`FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`) and fails its test on
//! `FAIL`. The randomized criteria share one deterministic batch of 200
//! generated tables.

mod common;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use llcorr::correspondence::CorrespondencePair;
use llcorr::dataset;
use llcorr::design::{rearrange, DesignMatrix, IncidenceMatrix};
use llcorr::formula::{FactorName, ModelFormula};
use llcorr::glm::{self, Family, FitOptions, FitResult};
use llcorr::simulate::{random_binary_table, scenarios, ScenarioConfig};

use common::{
    count_mismatches_transposed, expected_incidence_4x10, expected_log_linear_12x10,
    expected_rearranged_12x10, name, xyz_table, EXPECTED_LOGISTIC_32X4_T,
    EXPECTED_LOGISTIC_8X4_T,
};

const SCENARIO_SEED: u64 = 0x0acc_e552;
const N_SCENARIOS: usize = 200;
const AGREEMENT_TOL: f64 = 1e-8;

fn report(number: u8, title: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("criterion {number} [{status}] {title}: {detail}");
    assert!(passed, "criterion {number} ({title}) failed: {detail}");
}

fn options() -> FitOptions {
    FitOptions::default()
}

fn bundled_unmerged() -> &'static CorrespondencePair {
    static PAIR: OnceLock<CorrespondencePair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let table = dataset::load_table().expect("bundled table loads");
        CorrespondencePair::build(
            &table,
            &dataset::model_formula(),
            &dataset::outcome(),
            &[],
            &options(),
        )
        .expect("bundled pair builds")
    })
}

fn bundled_merged() -> &'static CorrespondencePair {
    static PAIR: OnceLock<CorrespondencePair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let table = dataset::load_table().expect("bundled table loads");
        CorrespondencePair::build(
            &table,
            &dataset::model_formula(),
            &dataset::outcome(),
            &dataset::obsolete_factors(),
            &options(),
        )
        .expect("bundled merged pair builds")
    })
}

/// One generated table with its unmerged pair and, whenever obsolete
/// factors exist, a second pair built with a nonempty merge.
struct BatchEntry {
    unmerged: CorrespondencePair,
    merged: Option<CorrespondencePair>,
}

fn batch() -> &'static [BatchEntry] {
    static BATCH: OnceLock<Vec<BatchEntry>> = OnceLock::new();
    BATCH.get_or_init(|| {
        let opts = options();
        scenarios(SCENARIO_SEED, N_SCENARIOS, &ScenarioConfig::default())
            .into_iter()
            .enumerate()
            .map(|(i, scenario)| {
                let unmerged = CorrespondencePair::build(
                    &scenario.table,
                    &scenario.formula,
                    &scenario.outcome,
                    &[],
                    &opts,
                )
                .unwrap_or_else(|e| panic!("scenario {i} failed to build unmerged: {e}"));
                // Every scenario with obsolete factors must also be checked
                // under a nonempty merge; fall back to merging all obsolete
                // factors when the drawn random subset is empty.
                let merge: Vec<FactorName> = if !scenario.merge.is_empty() {
                    scenario.merge.clone()
                } else {
                    scenario.obsolete.clone()
                };
                let merged = if merge.is_empty() {
                    None
                } else {
                    Some(
                        CorrespondencePair::build(
                            &scenario.table,
                            &scenario.formula,
                            &scenario.outcome,
                            &merge,
                            &opts,
                        )
                        .unwrap_or_else(|e| panic!("scenario {i} failed to build merged: {e}")),
                    )
                };
                BatchEntry { unmerged, merged }
            })
            .collect()
    })
}

fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

#[test]
fn criterion_1_bundled_unmerged_reproduction() {
    let pair = bundled_unmerged();
    let implied = pair.implied_estimates();
    let implied_se = pair.implied_covariance().map_diagonal(|v| v.sqrt());
    let direct = &pair.logistic_fit().estimates;
    let direct_se = pair.logistic_fit().standard_errors();

    let mut est_err = 0.0f64;
    let mut se_err = 0.0f64;
    for j in 0..4 {
        est_err = est_err.max((implied[j] - dataset::REFERENCE_ESTIMATES[j]).abs());
        se_err = se_err.max((implied_se[j] - dataset::REFERENCE_STANDARD_ERRORS[j]).abs());
    }
    let dev_err = (pair.poisson_fit().deviance - dataset::REFERENCE_DEVIANCE_32_CLASS).abs();
    let route_est = max_abs_diff(&implied, direct);
    let route_se = max_abs_diff(&implied_se, &direct_se);
    let route_dev = (pair.poisson_fit().deviance - pair.logistic_fit().deviance).abs();

    let passed = est_err <= dataset::ESTIMATE_TOLERANCE
        && se_err <= dataset::STANDARD_ERROR_TOLERANCE
        && dev_err <= dataset::DEVIANCE_TOLERANCE
        && route_est <= AGREEMENT_TOL
        && route_se <= AGREEMENT_TOL
        && route_dev <= AGREEMENT_TOL;
    report(
        1,
        "bundled estimates, standard errors and deviance, both routes",
        passed,
        &format!(
            "vs reference: est {est_err:.2e}, se {se_err:.2e}, deviance {dev_err:.2e}; \
             implied vs direct: est {route_est:.2e}, se {route_se:.2e}, deviance {route_dev:.2e}"
        ),
    );
}

#[test]
fn criterion_2_bundled_merged_reproduction() {
    let pair = bundled_merged();
    let fit = pair.logistic_fit();
    let se = fit.standard_errors();

    let trials_exact = pair.grouped().trials() == dataset::MERGED_CLASS_TRIALS;
    let successes_exact = pair.grouped().successes() == dataset::MERGED_CLASS_SUCCESSES;
    let mut est_err = 0.0f64;
    let mut se_err = 0.0f64;
    for j in 0..4 {
        est_err = est_err.max((fit.estimates[j] - dataset::REFERENCE_ESTIMATES[j]).abs());
        se_err = se_err.max((se[j] - dataset::REFERENCE_STANDARD_ERRORS[j]).abs());
    }
    let dev_err = (fit.deviance - dataset::REFERENCE_DEVIANCE_8_CLASS).abs();
    let route_est = max_abs_diff(&pair.implied_estimates(), &fit.estimates);
    let route_se = max_abs_diff(
        &pair.implied_covariance().map_diagonal(|v| v.sqrt()),
        &se,
    );

    let passed = trials_exact
        && successes_exact
        && est_err <= dataset::ESTIMATE_TOLERANCE
        && se_err <= dataset::STANDARD_ERROR_TOLERANCE
        && dev_err <= dataset::DEVIANCE_TOLERANCE
        && route_est <= AGREEMENT_TOL
        && route_se <= AGREEMENT_TOL;
    report(
        2,
        "bundled eight-class reproduction after merging",
        passed,
        &format!(
            "classes exact: {}, est {est_err:.2e}, se {se_err:.2e}, deviance {dev_err:.2e} \
             (value {:.4}); implied vs direct: est {route_est:.2e}, se {route_se:.2e}",
            trials_exact && successes_exact,
            fit.deviance
        ),
    );
}

#[test]
fn criterion_3_estimate_equality_on_random_tables() {
    let mut worst = 0.0f64;
    for entry in batch() {
        let gap = max_abs_diff(
            &entry.unmerged.implied_estimates(),
            &entry.unmerged.logistic_fit().estimates,
        );
        worst = worst.max(gap);
    }
    report(
        3,
        "implied vs direct estimates on 200 random tables",
        worst <= AGREEMENT_TOL,
        &format!("max coefficient gap {worst:.2e}"),
    );
}

#[test]
fn criterion_4_covariance_equality_with_and_without_merging() {
    let mut worst_plain = 0.0f64;
    let mut worst_merged = 0.0f64;
    let mut n_merged = 0usize;
    for entry in batch() {
        let gap = (entry.unmerged.implied_covariance()
            - &entry.unmerged.logistic_fit().covariance)
            .amax();
        worst_plain = worst_plain.max(gap);
        if let Some(merged) = &entry.merged {
            n_merged += 1;
            let gap = (merged.implied_covariance() - &merged.logistic_fit().covariance).amax();
            worst_merged = worst_merged.max(gap);
        }
    }
    let passed = worst_plain <= AGREEMENT_TOL && worst_merged <= AGREEMENT_TOL && n_merged > 0;
    report(
        4,
        "implied vs direct covariance, plain and merged",
        passed,
        &format!(
            "max entry gap {worst_plain:.2e} plain, {worst_merged:.2e} merged \
             ({n_merged} tables with a nonempty merge)"
        ),
    );
}

#[test]
fn criterion_5_deviance_equality_and_merged_ordering() {
    let mut worst_gap = 0.0f64;
    let mut worst_violation = 0.0f64;
    let mut n_merged = 0usize;
    let mut min_drop = f64::INFINITY;
    let mut max_drop = 0.0f64;
    for entry in batch() {
        let gap = (entry.unmerged.poisson_fit().deviance
            - entry.unmerged.logistic_fit().deviance)
            .abs();
        worst_gap = worst_gap.max(gap);
        if let Some(merged) = &entry.merged {
            n_merged += 1;
            let unmerged_dev = merged
                .unmerged_logistic_fit()
                .expect("merged pair keeps the unmerged fit")
                .deviance;
            let merged_dev = merged.logistic_fit().deviance;
            worst_violation = worst_violation.max(merged_dev - unmerged_dev);
            let drop = unmerged_dev - merged_dev;
            min_drop = min_drop.min(drop);
            max_drop = max_drop.max(drop);
        }
    }
    let passed = worst_gap <= AGREEMENT_TOL && worst_violation <= AGREEMENT_TOL && n_merged > 0;
    report(
        5,
        "deviance equality without merging, ordering with merging",
        passed,
        &format!(
            "max |poisson - logistic| {worst_gap:.2e}; merged deviance stays below unmerged \
             on all {n_merged} merged tables (drop range [{min_drop:.3}, {max_drop:.3}])"
        ),
    );
}

#[test]
fn criterion_6_margin_preservation() {
    let mut worst = 0.0f64;
    for entry in batch() {
        for pair in std::iter::once(&entry.unmerged).chain(entry.merged.as_ref()) {
            let check = pair
                .verify(AGREEMENT_TOL)
                .check("lemma1")
                .expect("margin check always runs")
                .clone();
            worst = worst.max(check.discrepancy);
        }
    }
    let bundled = bundled_unmerged();
    let bundled_margin = bundled
        .verify(AGREEMENT_TOL)
        .check("lemma1")
        .expect("margin check always runs")
        .discrepancy;
    worst = worst.max(bundled_margin);
    let class_totals_exact = bundled.grouped().trials() == dataset::CLASS_TRIALS;

    report(
        6,
        "fitted class totals reproduce observed totals",
        worst <= AGREEMENT_TOL && class_totals_exact,
        &format!(
            "max class-total drift {worst:.2e}; bundled 32-class totals match exactly: \
             {class_totals_exact}"
        ),
    );
}

/// Derivative-free coordinate ascent with a shrinking step, written as an
/// independent check on IRLS: it shares no code with the fitting routine
/// beyond the design matrix itself.
fn coordinate_maximize<F: Fn(&[f64]) -> f64>(objective: F, dim: usize) -> Vec<f64> {
    let mut theta = vec![0.0; dim];
    let mut best = objective(&theta);
    let mut step = 1.0;
    while step > 1e-9 {
        let mut improved = false;
        for j in 0..dim {
            loop {
                let mut accepted = false;
                for direction in [step, -step] {
                    let previous = theta[j];
                    theta[j] = previous + direction;
                    let value = objective(&theta);
                    if value > best {
                        best = value;
                        accepted = true;
                        improved = true;
                        break;
                    }
                    theta[j] = previous;
                }
                if !accepted {
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    theta
}

#[test]
fn criterion_7_irls_matches_brute_force_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb12f_012c);
    let factor_names = [name("X"), name("Y"), name("Z")];
    let formula = ModelFormula::parse("XY+XZ+YZ", &factor_names).unwrap();
    let outcome = name("Y");
    let mut worst_poisson = 0.0f64;
    let mut worst_binomial = 0.0f64;

    for round in 0..10 {
        let table = random_binary_table(&mut rng, "XYZ", 50);

        let ll = DesignMatrix::log_linear(&formula, &table).unwrap();
        let fit = glm::fit_poisson(&ll, table.counts(), &options())
            .unwrap_or_else(|e| panic!("round {round}: Poisson fit failed: {e}"));
        let x = ll.matrix().clone();
        let counts: Vec<f64> = table.counts().to_vec();
        let brute = coordinate_maximize(
            |theta| {
                (0..x.nrows())
                    .map(|i| {
                        let eta: f64 =
                            (0..x.ncols()).map(|j| x[(i, j)] * theta[j]).sum();
                        counts[i] * eta - eta.exp()
                    })
                    .sum()
            },
            x.ncols(),
        );
        for (j, b) in brute.iter().enumerate() {
            worst_poisson = worst_poisson.max((fit.estimates[j] - b).abs());
        }

        let grouped = table.group_by_outcome(&outcome).unwrap();
        let lt_formula = formula.derive_logistic(&outcome).unwrap();
        let lt = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
        let fit = glm::fit_binomial(&lt, grouped.trials(), grouped.successes(), &options())
            .unwrap_or_else(|e| panic!("round {round}: binomial fit failed: {e}"));
        let x = lt.matrix().clone();
        let trials: Vec<f64> = grouped.trials().to_vec();
        let successes: Vec<f64> = grouped.successes().to_vec();
        let brute = coordinate_maximize(
            |theta| {
                (0..x.nrows())
                    .map(|i| {
                        let eta: f64 =
                            (0..x.ncols()).map(|j| x[(i, j)] * theta[j]).sum();
                        successes[i] * eta - trials[i] * (1.0 + eta.exp()).ln()
                    })
                    .sum()
            },
            x.ncols(),
        );
        for (j, b) in brute.iter().enumerate() {
            worst_binomial = worst_binomial.max((fit.estimates[j] - b).abs());
        }
    }

    let passed = worst_poisson <= 1e-4 && worst_binomial <= 1e-4;
    report(
        7,
        "IRLS vs derivative-free maximization on 10 random three-way tables",
        passed,
        &format!(
            "max coordinate gap {worst_poisson:.2e} Poisson, {worst_binomial:.2e} binomial"
        ),
    );
}

/// The three hygiene measurements for one converged fit: worst relative
/// disagreement between the analytic score and central differences at
/// `n_points` random parameter points, worst entry of
/// `information x covariance - identity`, and the relative drift of the
/// fitted total from the observed total.
fn hygiene(
    rng: &mut ChaCha8Rng,
    x: &DMatrix<f64>,
    response: &[f64],
    family: &Family,
    fit: &FitResult,
    n_points: usize,
) -> (f64, f64, f64) {
    let p = x.ncols();
    let mut worst_score = 0.0f64;
    for _ in 0..n_points {
        let theta =
            DVector::from_fn(p, |j, _| fit.estimates[j] + rng.gen_range(-0.3..0.3));
        let analytic = glm::score(x, response, family, &theta);
        for j in 0..p {
            let h = 1e-5 * theta[j].abs().max(1.0);
            let mut plus = theta.clone();
            plus[j] += h;
            let mut minus = theta.clone();
            minus[j] -= h;
            let numeric = (glm::log_likelihood(x, response, family, &plus)
                - glm::log_likelihood(x, response, family, &minus))
                / (2.0 * h);
            let rel = (analytic[j] - numeric).abs() / analytic[j].abs().max(1.0);
            worst_score = worst_score.max(rel);
        }
    }

    let weights = DVector::from_fn(x.nrows(), |i, _| match family {
        Family::Poisson => fit.fitted[i],
        Family::Binomial { trials } => trials[i] * fit.fitted[i] * (1.0 - fit.fitted[i]),
    });
    let mut weighted = x.clone();
    for i in 0..x.nrows() {
        weighted.row_mut(i).scale_mut(weights[i]);
    }
    let information = x.transpose() * weighted;
    let identity_gap =
        (information * &fit.covariance - DMatrix::identity(p, p)).amax();

    let (observed_total, fitted_total, scale) = match family {
        Family::Poisson => {
            let observed: f64 = response.iter().sum();
            (observed, fit.fitted.sum(), observed)
        }
        Family::Binomial { trials } => {
            let observed: f64 = response.iter().sum();
            let fitted = (0..x.nrows()).map(|i| trials[i] * fit.fitted[i]).sum();
            (observed, fitted, trials.sum())
        }
    };
    let margin_drift = (observed_total - fitted_total).abs() / scale.max(1.0);

    (worst_score, identity_gap, margin_drift)
}

#[test]
fn criterion_8_numerical_hygiene() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c02e);
    let mut fits: Vec<(DMatrix<f64>, Vec<f64>, Family, FitResult)> = Vec::new();

    for pair in [bundled_unmerged(), bundled_merged()] {
        fits.push((
            pair.log_linear_design().matrix().clone(),
            pair.table().counts().to_vec(),
            Family::Poisson,
            pair.poisson_fit().clone(),
        ));
        fits.push((
            pair.logistic_design().matrix().clone(),
            pair.grouped().successes().to_vec(),
            Family::Binomial {
                trials: DVector::from_column_slice(pair.grouped().trials()),
            },
            pair.logistic_fit().clone(),
        ));
    }
    for entry in batch().iter().take(3) {
        let pair = &entry.unmerged;
        fits.push((
            pair.log_linear_design().matrix().clone(),
            pair.table().counts().to_vec(),
            Family::Poisson,
            pair.poisson_fit().clone(),
        ));
        fits.push((
            pair.logistic_design().matrix().clone(),
            pair.grouped().successes().to_vec(),
            Family::Binomial {
                trials: DVector::from_column_slice(pair.grouped().trials()),
            },
            pair.logistic_fit().clone(),
        ));
    }

    let mut worst_score = 0.0f64;
    let mut worst_identity = 0.0f64;
    let mut worst_margin = 0.0f64;
    for (x, response, family, fit) in &fits {
        let (s, i, m) = hygiene(&mut rng, x, response, family, fit, 5);
        worst_score = worst_score.max(s);
        worst_identity = worst_identity.max(i);
        worst_margin = worst_margin.max(m);
    }

    let passed =
        worst_score <= 1e-5 && worst_identity <= AGREEMENT_TOL && worst_margin <= AGREEMENT_TOL;
    report(
        8,
        "score vs finite differences, information identity, fitted totals",
        passed,
        &format!(
            "{} fits: score {worst_score:.2e}, information x covariance {worst_identity:.2e}, \
             total drift {worst_margin:.2e}",
            fits.len()
        ),
    );
}

#[test]
fn criterion_9_reference_matrices() {
    let table = xyz_table();
    let formula =
        ModelFormula::parse("XY+XZ+YZ", &[name("X"), name("Y"), name("Z")]).unwrap();
    let outcome = name("Y");
    let lt_formula = formula.derive_logistic(&outcome).unwrap();
    let grouped = table.group_by_outcome(&outcome).unwrap();
    let ll = DesignMatrix::log_linear(&formula, &table).unwrap();
    let lt = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    let incidence =
        IncidenceMatrix::derive(&ll, &lt, table.factor(&outcome).unwrap()).unwrap();
    let rearranged = rearrange(&ll, &outcome, &incidence).unwrap();
    rearranged.verify(&lt).unwrap();

    let mut mismatches = 0usize;
    let mut entries = 0usize;
    for (actual, expected) in [
        (ll.matrix().clone(), expected_log_linear_12x10()),
        (incidence.materialize(), expected_incidence_4x10()),
        (rearranged.design().matrix().clone(), expected_rearranged_12x10()),
    ] {
        entries += expected.len();
        mismatches += actual
            .iter()
            .zip(expected.iter())
            .filter(|(a, e)| a != e)
            .count();
    }

    let bundled_table = dataset::load_table().unwrap();
    let bundled_formula = dataset::model_formula();
    let bundled_outcome = dataset::outcome();
    let bundled_lt = bundled_formula.derive_logistic(&bundled_outcome).unwrap();
    let full = bundled_table.group_by_outcome(&bundled_outcome).unwrap();
    let design32 = DesignMatrix::logistic(&bundled_lt, &full).unwrap();
    entries += 32 * 4;
    mismatches += count_mismatches_transposed(design32.matrix(), &EXPECTED_LOGISTIC_32X4_T);
    let merged = full.merge(&dataset::obsolete_factors()).unwrap();
    let design8 = DesignMatrix::logistic(&bundled_lt, &merged).unwrap();
    entries += 8 * 4;
    mismatches += count_mismatches_transposed(design8.matrix(), &EXPECTED_LOGISTIC_8X4_T);

    report(
        9,
        "five reference matrices reproduced entry for entry",
        mismatches == 0,
        &format!("{entries} entries compared, {mismatches} mismatches"),
    );
}
