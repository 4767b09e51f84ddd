//! The bundled example dataset and its reference analysis values.
//!
//! The data are the classic Edwards & Havránek (1985) cross-classification
//! of 1841 men by six binary coronary risk factors: A smoking, B strenuous
//! mental work, C strenuous physical work, D systolic blood pressure,
//! E ratio of alpha and beta lipoproteins, F family anamnesis of coronary
//! heart disease. Level 1 means the risk factor is present.
//!
//! The reference model is the standard graphical-model analysis of this
//! table: the log-linear model `AC+AD+AE+BCDEF` with A as the outcome,
//! whose implied logistic regression of A on C, D and E has well-known
//! coefficient values. Those values, and the grouped trial/success vectors
//! they were computed from, are frozen here as constants so the test suite
//! and the command-line `reproduce` command can verify them. The CSV is
//! protected by a checksum: the mapping from file rows to cells is part of
//! the analysis, so silent edits must be impossible.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formula::{FactorName, ModelFormula};
use crate::table::{ContingencyTable, Factor};

const CSV_DATA: &str = include_str!("../data/edwards_havranek.csv");

/// SHA-256 of the bundled CSV, fixed when the file was frozen.
pub const CSV_SHA256: &str = "2fe58550003181ae875fefaed9398c47bba1be174219c446cb880e92e785ea8f";

/// The six risk factors, in table order.
pub const FACTOR_NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// The log-linear reference model.
pub const MODEL: &str = "AC+AD+AE+BCDEF";

/// The outcome the reference analysis predicts.
pub const OUTCOME: &str = "A";

/// Factors the implied logistic model does not use; merging them collapses
/// the 32 covariate classes to 8.
pub const OBSOLETE_FACTORS: [&str; 2] = ["B", "F"];

/// Names of the outcome-bearing coefficients, in fit order.
pub const COEFFICIENT_NAMES: [&str; 4] = ["A", "AC", "AD", "AE"];

/// Reference maximum likelihood estimates for (A, AC, AD, AE), 8 decimals.
pub const REFERENCE_ESTIMATES: [f64; 4] = [-0.41399925, 0.55009951, -0.36836287, 0.48934383];

/// Reference standard errors for the same coefficients, 5 decimals.
pub const REFERENCE_STANDARD_ERRORS: [f64; 4] = [0.08922, 0.09579, 0.09667, 0.09731];

/// Reference deviance of the fit against the 32-class grouping (equal for
/// the log-linear and logistic routes), 2 decimals.
pub const REFERENCE_DEVIANCE_32_CLASS: f64 = 33.51;

/// Reference deviance of the same fit against the 8-class merged grouping.
pub const REFERENCE_DEVIANCE_8_CLASS: f64 = 3.47;

/// Absolute tolerances matching the precision the reference values carry.
pub const ESTIMATE_TOLERANCE: f64 = 1e-6;
pub const STANDARD_ERROR_TOLERANCE: f64 = 5e-6;
pub const DEVIANCE_TOLERANCE: f64 = 5e-3;

/// Trials per covariate class of the 32-class grouping (B fastest, then C,
/// D, E, F), i.e. the number of men in each class.
pub const CLASS_TRIALS: [f64; 32] = [
    84.0, 179.0, 274.0, 35.0, 47.0, 113.0, 176.0, 16.0, 55.0, 136.0, 130.0, 20.0, 49.0, 130.0,
    114.0, 23.0, 12.0, 30.0, 26.0, 5.0, 7.0, 19.0, 31.0, 7.0, 10.0, 28.0, 25.0, 5.0, 4.0, 24.0,
    19.0, 8.0,
];

/// Smokers (A = 1) per covariate class of the 32-class grouping.
pub const CLASS_SUCCESSES: [f64; 32] = [
    40.0, 67.0, 145.0, 23.0, 12.0, 33.0, 67.0, 9.0, 32.0, 66.0, 80.0, 13.0, 25.0, 57.0, 63.0,
    16.0, 7.0, 9.0, 17.0, 4.0, 3.0, 8.0, 17.0, 2.0, 3.0, 14.0, 16.0, 3.0, 0.0, 11.0, 14.0, 4.0,
];

/// Trials per class after merging B and F (C fastest, then D, E).
pub const MERGED_CLASS_TRIALS: [f64; 8] =
    [305.0, 340.0, 186.0, 230.0, 229.0, 180.0, 207.0, 164.0];

/// Smokers per merged class.
pub const MERGED_CLASS_SUCCESSES: [f64; 8] = [123.0, 189.0, 56.0, 95.0, 115.0, 112.0, 93.0, 97.0];

/// The six binary factor definitions, in table order.
pub fn factors() -> Vec<Factor> {
    FACTOR_NAMES
        .iter()
        .map(|n| Factor::binary(FactorName::new(*n).expect("static names are valid")))
        .collect()
}

pub fn factor_names() -> Vec<FactorName> {
    FACTOR_NAMES
        .iter()
        .map(|n| FactorName::new(*n).expect("static names are valid"))
        .collect()
}

/// The reference log-linear model, hierarchically closed.
pub fn model_formula() -> ModelFormula {
    ModelFormula::parse(MODEL, &factor_names()).expect("static formula is valid")
}

pub fn outcome() -> FactorName {
    FactorName::new(OUTCOME).expect("static name is valid")
}

pub fn obsolete_factors() -> Vec<FactorName> {
    OBSOLETE_FACTORS
        .iter()
        .map(|n| FactorName::new(*n).expect("static names are valid"))
        .collect()
}

/// Loads the bundled table after verifying its checksum.
pub fn load_table() -> Result<ContingencyTable> {
    load_table_from(CSV_DATA)
}

/// Checksum-checked load from arbitrary CSV text with the bundled schema.
/// Exists so tampering can be exercised; any deviation from the frozen
/// bytes is rejected before parsing.
pub fn load_table_from(data: &str) -> Result<ContingencyTable> {
    let digest = Sha256::digest(data.as_bytes());
    let actual = format!("{digest:x}");
    if actual != CSV_SHA256 {
        return Err(Error::ChecksumMismatch {
            expected: CSV_SHA256.into(),
            actual,
        });
    }
    ContingencyTable::from_csv_str(data, factors())
}
