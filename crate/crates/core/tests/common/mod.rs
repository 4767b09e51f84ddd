//! Reference data shared between integration test targets: the worked
//! three-factor example and the hard-coded design matrices every build of
//! this crate must reproduce entry for entry.

#![allow(dead_code)] // each test target uses a subset

use nalgebra::DMatrix;

use llcorr::formula::FactorName;
use llcorr::table::{ContingencyTable, Factor, IndexOrder};

pub fn name(s: &str) -> FactorName {
    FactorName::new(s).unwrap()
}

/// 3 x 2 x 2 table over X (3 levels), Y, Z; counts are irrelevant to the
/// design matrices.
pub fn xyz_table() -> ContingencyTable {
    let factors = vec![
        Factor::new(name("X"), vec!["0".into(), "1".into(), "2".into()]).unwrap(),
        Factor::binary(name("Y")),
        Factor::binary(name("Z")),
    ];
    ContingencyTable::from_counts(factors, &[1.0; 12], IndexOrder::FirstFactorFastest).unwrap()
}

/// Log-linear design of the three-factor example; columns
/// 1, X1, X2, Y, Z, XY11, XY21, XZ11, XZ21, YZ; rows X fastest, Z slowest.
pub fn expected_log_linear_12x10() -> DMatrix<f64> {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(12, 10, &[
        1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0,
        1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0,
        1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0,
    ]);
    m
}

/// Incidence matrix of the three-factor example with outcome Y: selects
/// Y, XY11, XY21, YZ out of the ten log-linear parameters.
pub fn expected_incidence_4x10() -> DMatrix<f64> {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 10, &[
        0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    ]);
    m
}

/// The rearranged log-linear design: columns Y, XY11, XY21, YZ, 1, X1, X2,
/// Z, XZ11, XZ21; the six Y=1 cells first, then the six Y=0 cells.
pub fn expected_rearranged_12x10() -> DMatrix<f64> {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(12, 10, &[
        1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0,
        1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0,
    ]);
    m
}

/// The 32-class logistic design of the bundled analysis, written
/// transposed: one inner array per design column (Intercept, C, D, E).
#[rustfmt::skip]
pub const EXPECTED_LOGISTIC_32X4_T: [[f64; 32]; 4] = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
     1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0,
     0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0,
     0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
     0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
];

/// The 8-class merged logistic design, transposed the same way.
#[rustfmt::skip]
pub const EXPECTED_LOGISTIC_8X4_T: [[f64; 8]; 4] = [
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
];

/// Entrywise equality against a transposed reference; returns the number
/// of mismatching entries.
pub fn count_mismatches_transposed<const R: usize, const C: usize>(
    actual: &DMatrix<f64>,
    expected_t: &[[f64; R]; C],
) -> usize {
    assert_eq!(actual.nrows(), R);
    assert_eq!(actual.ncols(), C);
    let mut mismatches = 0;
    for (j, col) in expected_t.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if actual[(i, j)] != v {
                mismatches += 1;
            }
        }
    }
    mismatches
}
