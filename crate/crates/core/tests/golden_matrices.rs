//! Entry-for-entry reproduction of the reference design matrices: the
//! 12 x 10 log-linear design of the three-factor worked example, its
//! incidence matrix and rearranged block form, and the two logistic designs
//! (32 and 8 classes) of the bundled six-factor analysis.
//!
//! The expected matrices live in `common` so the acceptance target can
//! re-check them.

mod common;

use llcorr::dataset;
use llcorr::design::{rearrange, DesignMatrix, IncidenceMatrix};
use llcorr::formula::ModelFormula;

use common::{
    count_mismatches_transposed, expected_incidence_4x10, expected_log_linear_12x10,
    expected_rearranged_12x10, name, xyz_table, EXPECTED_LOGISTIC_32X4_T,
    EXPECTED_LOGISTIC_8X4_T,
};

#[test]
fn log_linear_design_12x10() {
    let table = xyz_table();
    let formula =
        ModelFormula::parse("XY+XZ+YZ", &[name("X"), name("Y"), name("Z")]).unwrap();
    let design = DesignMatrix::log_linear(&formula, &table).unwrap();
    assert_eq!(design.matrix(), &expected_log_linear_12x10());
}

#[test]
fn incidence_matrix_4x10() {
    let table = xyz_table();
    let outcome = name("Y");
    let ll_formula =
        ModelFormula::parse("XY+XZ+YZ", &[name("X"), name("Y"), name("Z")]).unwrap();
    let lt_formula = ll_formula.derive_logistic(&outcome).unwrap();
    let grouped = table.group_by_outcome(&outcome).unwrap();
    let ll = DesignMatrix::log_linear(&ll_formula, &table).unwrap();
    let lt = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    let t = IncidenceMatrix::derive(&ll, &lt, table.factor(&outcome).unwrap()).unwrap();
    assert_eq!(t.materialize(), expected_incidence_4x10());
}

#[test]
fn rearranged_design_12x10() {
    let table = xyz_table();
    let outcome = name("Y");
    let ll_formula =
        ModelFormula::parse("XY+XZ+YZ", &[name("X"), name("Y"), name("Z")]).unwrap();
    let lt_formula = ll_formula.derive_logistic(&outcome).unwrap();
    let grouped = table.group_by_outcome(&outcome).unwrap();
    let ll = DesignMatrix::log_linear(&ll_formula, &table).unwrap();
    let lt = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    let t = IncidenceMatrix::derive(&ll, &lt, table.factor(&outcome).unwrap()).unwrap();
    let re = rearrange(&ll, &outcome, &t).unwrap();
    re.verify(&lt).unwrap();
    assert_eq!(re.design().matrix(), &expected_rearranged_12x10());
}

#[test]
fn bundled_logistic_design_32x4() {
    let table = dataset::load_table().unwrap();
    let formula = dataset::model_formula();
    let outcome = dataset::outcome();
    let lt_formula = formula.derive_logistic(&outcome).unwrap();
    let grouped = table.group_by_outcome(&outcome).unwrap();
    let design = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    assert_eq!(
        count_mismatches_transposed(design.matrix(), &EXPECTED_LOGISTIC_32X4_T),
        0
    );
    let labels: Vec<String> = design.columns().iter().map(|c| c.to_string()).collect();
    assert_eq!(labels, ["Intercept", "C", "D", "E"]);
}

#[test]
fn bundled_merged_logistic_design_8x4() {
    let table = dataset::load_table().unwrap();
    let formula = dataset::model_formula();
    let outcome = dataset::outcome();
    let lt_formula = formula.derive_logistic(&outcome).unwrap();
    let grouped = table
        .group_by_outcome(&outcome)
        .unwrap()
        .merge(&dataset::obsolete_factors())
        .unwrap();
    let design = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    assert_eq!(
        count_mismatches_transposed(design.matrix(), &EXPECTED_LOGISTIC_8X4_T),
        0
    );
}

#[test]
fn bundled_rearranged_upper_block_matches_32_class_design() {
    let table = dataset::load_table().unwrap();
    let formula = dataset::model_formula();
    let outcome = dataset::outcome();
    let lt_formula = formula.derive_logistic(&outcome).unwrap();
    let grouped = table.group_by_outcome(&outcome).unwrap();
    let ll = DesignMatrix::log_linear(&formula, &table).unwrap();
    let lt = DesignMatrix::logistic(&lt_formula, &grouped).unwrap();
    let t = IncidenceMatrix::derive(&ll, &lt, table.factor(&outcome).unwrap()).unwrap();
    let re = rearrange(&ll, &outcome, &t).unwrap();
    re.verify(&lt).unwrap();
    assert_eq!(re.n_upper(), 32);
    assert_eq!(re.n_beta(), 4);
    assert_eq!(re.upper_left(), *lt.matrix());
}
