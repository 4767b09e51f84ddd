//! Corner-point design matrices for log-linear and logistic models, the
//! incidence matrix tying the two parameterisations together, and the
//! permuted block form on which the equivalence arguments rest.
//!
//! Columns are enumerated deterministically: the intercept first, then one
//! block per term in (interaction order, lexicographic) term order; within a
//! term, one column per combination of non-reference levels with the last
//! factor's level varying fastest. Rows follow the owning data structure:
//! cells or grouped classes with the first factor varying fastest. All
//! entries are 0 or 1: a cell contributes to a column exactly when it sits
//! at every level the column's label names.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::formula::{FactorName, ModelFormula};
use crate::table::{ContingencyTable, Factor, GroupedBinomialData};

/// Relative tolerance for rank decisions on 0/1 design matrices.
const RANK_EPS: f64 = 1e-8;

/// Numerical rank from a column-pivoted QR: the number of R-diagonal
/// entries above `RANK_EPS` times the largest one.
fn pivoted_rank(m: &DMatrix<f64>) -> usize {
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    (0..k).filter(|&i| r[(i, i)].abs() > RANK_EPS * max_diag).count()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct LabelPart {
    name: FactorName,
    level: usize,
    n_levels: usize,
}

/// Identity of one model parameter: the empty set of parts for the
/// intercept, otherwise one (factor, non-reference level) pair per factor of
/// the term, sorted by factor name. Two parameters from different model
/// formulations are "the same" exactly when their labels are equal; the
/// incidence matrix is derived from that relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParameterLabel {
    parts: Vec<LabelPart>,
}

impl ParameterLabel {
    pub fn intercept() -> Self {
        ParameterLabel { parts: Vec::new() }
    }

    pub fn is_intercept(&self) -> bool {
        self.parts.is_empty()
    }

    /// Number of factors in the underlying term (0 for the intercept).
    pub fn order(&self) -> usize {
        self.parts.len()
    }

    fn push_part(&self, factor: &Factor, level: usize) -> Self {
        debug_assert!(level >= 1 && level < factor.n_levels());
        let mut parts = self.parts.clone();
        parts.push(LabelPart {
            name: factor.name().clone(),
            level,
            n_levels: factor.n_levels(),
        });
        parts.sort();
        debug_assert!(parts.windows(2).all(|w| w[0].name != w[1].name));
        ParameterLabel { parts }
    }

    /// The log-linear label obtained by adjoining the outcome at level 1;
    /// applied to the intercept this yields the outcome's main effect.
    pub fn with_outcome(&self, outcome: &Factor) -> Self {
        self.push_part(outcome, 1)
    }

    /// Indicator evaluated at a row: 1 if the row sits at every level this
    /// label names, 0 otherwise. Factors absent from the label are free.
    fn matches(&self, row_factors: &[Factor], row_levels: &[usize]) -> bool {
        self.parts.iter().all(|part| {
            row_factors
                .iter()
                .position(|f| f.name() == &part.name)
                .map(|i| row_levels[i] == part.level)
                .unwrap_or(false)
        })
    }
}

impl fmt::Display for ParameterLabel {
    /// `Intercept` for the empty label. When every factor name is a single
    /// character the names are juxtaposed, followed by the level indices
    /// unless all factors are binary (then the indices are redundant and
    /// dropped): `AC`, `X2`, `XY21`. Longer names fall back to
    /// `name[level]` parts joined with `:`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("Intercept");
        }
        let single_char = self.parts.iter().all(|p| p.name.as_str().chars().count() == 1);
        let all_binary = self.parts.iter().all(|p| p.n_levels == 2);
        if single_char {
            for p in &self.parts {
                f.write_str(p.name.as_str())?;
            }
            if !all_binary {
                for p in &self.parts {
                    write!(f, "{}", p.level)?;
                }
            }
            Ok(())
        } else {
            let rendered: Vec<String> = self
                .parts
                .iter()
                .map(|p| format!("{}[{}]", p.name, p.level))
                .collect();
            f.write_str(&rendered.join(":"))
        }
    }
}

/// All combinations of non-reference levels for the given level counts,
/// last position varying fastest.
fn corner_combos(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &s in sizes {
        let mut next = Vec::with_capacity(out.len() * (s - 1));
        for prefix in &out {
            for level in 1..s {
                let mut combo = prefix.clone();
                combo.push(level);
                next.push(combo);
            }
        }
        out = next;
    }
    out
}

fn enumerate_columns(formula: &ModelFormula, factors: &[Factor]) -> Result<Vec<ParameterLabel>> {
    let mut labels = vec![ParameterLabel::intercept()];
    for term in formula.terms() {
        // term factors in declared universe order
        let term_factors: Vec<&Factor> = factors
            .iter()
            .filter(|f| term.contains(f.name()))
            .collect();
        if term_factors.len() != term.order() {
            let missing = term
                .factors()
                .find(|n| !factors.iter().any(|f| f.name() == *n))
                .expect("some factor must be missing");
            return Err(Error::UnknownFactor {
                label: missing.as_str().into(),
            });
        }
        let sizes: Vec<usize> = term_factors.iter().map(|f| f.n_levels()).collect();
        for combo in corner_combos(&sizes) {
            let mut label = ParameterLabel::intercept();
            for (f, level) in term_factors.iter().zip(&combo) {
                label = label.push_part(f, *level);
            }
            labels.push(label);
        }
    }
    Ok(labels)
}

/// A 0/1 model matrix together with the identity of its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    columns: Vec<ParameterLabel>,
    row_factors: Vec<Factor>,
    row_levels: Vec<Vec<usize>>,
}

impl DesignMatrix {
    fn build(
        formula: &ModelFormula,
        row_factors: Vec<Factor>,
        row_levels: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let columns = enumerate_columns(formula, &row_factors)?;
        let matrix = DMatrix::from_fn(row_levels.len(), columns.len(), |r, c| {
            if columns[c].matches(&row_factors, &row_levels[r]) {
                1.0
            } else {
                0.0
            }
        });
        let design = DesignMatrix {
            matrix,
            columns,
            row_factors,
            row_levels,
        };
        design.check_full_rank()?;
        Ok(design)
    }

    /// The log-linear design: one row per cell of the table (first factor
    /// fastest), one column per parameter of the model.
    pub fn log_linear(formula: &ModelFormula, table: &ContingencyTable) -> Result<Self> {
        let row_levels: Vec<Vec<usize>> =
            (0..table.n_cells()).map(|i| table.levels_of(i)).collect();
        Self::build(formula, table.factors().to_vec(), row_levels)
    }

    /// The logistic design: one row per class of the grouped data (first
    /// retained factor fastest), one column per parameter. Classifying
    /// factors absent from the formula still label rows; they just
    /// contribute no columns.
    pub fn logistic(formula: &ModelFormula, grouped: &GroupedBinomialData) -> Result<Self> {
        let sizes: Vec<usize> = grouped.factors().iter().map(Factor::n_levels).collect();
        let n_rows: usize = sizes.iter().product::<usize>().max(1);
        let row_levels: Vec<Vec<usize>> = (0..n_rows).map(|i| grouped.levels_of(i)).collect();
        Self::build(formula, grouped.factors().to_vec(), row_levels)
    }

    fn check_full_rank(&self) -> Result<()> {
        let rank = pivoted_rank(&self.matrix);
        if rank < self.matrix.ncols() {
            return Err(Error::RankDeficient {
                rank,
                columns: self.matrix.ncols(),
            });
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn columns(&self) -> &[ParameterLabel] {
        &self.columns
    }

    pub fn row_factors(&self) -> &[Factor] {
        &self.row_factors
    }

    pub fn row_levels(&self) -> &[Vec<usize>] {
        &self.row_levels
    }

    /// A copy with rows and columns re-indexed: new row `i` is old row
    /// `row_perm[i]`, likewise for columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        debug_assert_eq!(row_perm.len(), self.n_rows());
        debug_assert_eq!(col_perm.len(), self.n_cols());
        let matrix = DMatrix::from_fn(self.n_rows(), self.n_cols(), |r, c| {
            self.matrix[(row_perm[r], col_perm[c])]
        });
        DesignMatrix {
            matrix,
            columns: col_perm.iter().map(|&c| self.columns[c].clone()).collect(),
            row_factors: self.row_factors.clone(),
            row_levels: row_perm.iter().map(|&r| self.row_levels[r].clone()).collect(),
        }
    }

    /// Plain text dump, one row per line, entries space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n_rows() {
            let row: Vec<String> = (0..self.n_cols())
                .map(|c| format!("{}", self.matrix[(r, c)] as i64))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    #[cfg(test)]
    fn from_raw(matrix: DMatrix<f64>, columns: Vec<ParameterLabel>) -> Result<Self> {
        let design = DesignMatrix {
            row_levels: vec![Vec::new(); matrix.nrows()],
            row_factors: Vec::new(),
            matrix,
            columns,
        };
        design.check_full_rank()?;
        Ok(design)
    }
}

/// The 0/1 matrix `T` with one row per logistic parameter selecting the
/// log-linear parameter it equals: `beta = T lambda`. Each row has exactly
/// one unit entry, so it is stored as the list of selected column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    selected: Vec<usize>,
    n_lambda: usize,
}

impl IncidenceMatrix {
    /// Matches each logistic column label, with the outcome at level 1
    /// adjoined, against the log-linear column labels. The logistic
    /// intercept maps to the outcome's main effect.
    pub fn derive(
        log_linear: &DesignMatrix,
        logistic: &DesignMatrix,
        outcome: &Factor,
    ) -> Result<Self> {
        let index: HashMap<&ParameterLabel, usize> = log_linear
            .columns()
            .iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let mut selected = Vec::with_capacity(logistic.n_cols());
        for label in logistic.columns() {
            let target = label.with_outcome(outcome);
            let i = index.get(&target).ok_or_else(|| Error::LabelMismatch {
                label: target.to_string(),
            })?;
            selected.push(*i);
        }
        Ok(IncidenceMatrix {
            selected,
            n_lambda: log_linear.n_cols(),
        })
    }

    /// For each logistic parameter, the index of the log-linear parameter it
    /// selects.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn n_beta(&self) -> usize {
        self.selected.len()
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    /// The dense `n_beta x n_lambda` form of `T`.
    pub fn materialize(&self) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(self.selected.len(), self.n_lambda);
        for (row, &col) in self.selected.iter().enumerate() {
            t[(row, col)] = 1.0;
        }
        t
    }

    /// `beta = T lambda`: picks the outcome-bearing coordinates.
    pub fn map_estimates(&self, lambda: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.selected.len(),
            self.selected.iter().map(|&i| lambda[i]),
        )
    }

    /// `T Sigma T'`: the submatrix of the log-linear covariance on the
    /// selected coordinates.
    pub fn map_covariance(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.selected.len(), self.selected.len(), |r, c| {
            cov[(self.selected[r], self.selected[c])]
        })
    }
}

/// The log-linear design after the outcome-driven permutation: rows with the
/// outcome at level 1 first (original relative order kept), the columns `T`
/// selects first (in logistic parameter order), the rest in original order.
/// For an eligible model the result has the block shape
/// `[[X_lt, B], [0, B]]` with `B` square and invertible.
#[derive(Debug, Clone)]
pub struct RearrangedDesign {
    design: DesignMatrix,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    n_beta: usize,
    n_upper: usize,
}

pub fn rearrange(
    log_linear: &DesignMatrix,
    outcome: &FactorName,
    incidence: &IncidenceMatrix,
) -> Result<RearrangedDesign> {
    let pos = log_linear
        .row_factors()
        .iter()
        .position(|f| f.name() == outcome)
        .ok_or_else(|| Error::UnknownFactor {
            label: outcome.as_str().into(),
        })?;
    let (level1, level0): (Vec<usize>, Vec<usize>) =
        (0..log_linear.n_rows()).partition(|&r| log_linear.row_levels()[r][pos] == 1);
    let row_perm: Vec<usize> = level1.iter().chain(level0.iter()).copied().collect();
    let n_upper = level1.len();

    let mut col_perm: Vec<usize> = incidence.selected().to_vec();
    for c in 0..log_linear.n_cols() {
        if !incidence.selected().contains(&c) {
            col_perm.push(c);
        }
    }
    Ok(RearrangedDesign {
        design: log_linear.permuted(&row_perm, &col_perm),
        row_perm,
        col_perm,
        n_beta: incidence.n_beta(),
        n_upper,
    })
}

impl RearrangedDesign {
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// New row index -> original row index.
    pub fn row_perm(&self) -> &[usize] {
        &self.row_perm
    }

    /// New column index -> original column index.
    pub fn col_perm(&self) -> &[usize] {
        &self.col_perm
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    /// Rows in the upper (outcome level 1) block.
    pub fn n_upper(&self) -> usize {
        self.n_upper
    }

    fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<f64> {
        self.design
            .matrix()
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    pub fn upper_left(&self) -> DMatrix<f64> {
        self.block(0..self.n_upper, 0..self.n_beta)
    }

    pub fn upper_right(&self) -> DMatrix<f64> {
        self.block(0..self.n_upper, self.n_beta..self.design.n_cols())
    }

    pub fn lower_left(&self) -> DMatrix<f64> {
        self.block(self.n_upper..self.design.n_rows(), 0..self.n_beta)
    }

    pub fn lower_right(&self) -> DMatrix<f64> {
        self.block(self.n_upper..self.design.n_rows(), self.n_beta..self.design.n_cols())
    }

    /// Confirms the block structure the equivalence arguments assume: the
    /// lower-left block vanishes, the two right blocks coincide and form a
    /// square invertible matrix, and the upper-left block is exactly the
    /// logistic design. Any failure means the model is not eligible.
    pub fn verify(&self, logistic: &DesignMatrix) -> Result<()> {
        let n_rows = self.design.n_rows();
        let n_cols = self.design.n_cols();
        if 2 * self.n_upper != n_rows {
            return Err(Error::NotEligible {
                detail: format!(
                    "outcome splits rows {} / {}, expected an even split",
                    self.n_upper,
                    n_rows - self.n_upper
                ),
            });
        }
        if self.lower_left().iter().any(|&v| v != 0.0) {
            return Err(Error::NotEligible {
                detail: "lower-left block is not zero".into(),
            });
        }
        if n_cols - self.n_beta != self.n_upper {
            return Err(Error::NotEligible {
                detail: format!(
                    "right block is {} x {}, expected square",
                    self.n_upper,
                    n_cols - self.n_beta
                ),
            });
        }
        let upper_right = self.upper_right();
        if upper_right != self.lower_right() {
            return Err(Error::NotEligible {
                detail: "upper-right and lower-right blocks differ".into(),
            });
        }
        if pivoted_rank(&upper_right) < upper_right.ncols() {
            return Err(Error::NotEligible {
                detail: "right block is singular".into(),
            });
        }
        if self.n_upper != logistic.n_rows()
            || self.n_beta != logistic.n_cols()
            || self.upper_left() != *logistic.matrix()
        {
            return Err(Error::NotEligible {
                detail: "upper-left block does not equal the logistic design".into(),
            });
        }
        Ok(())
    }
}
