//! Contingency tables of counts cross-classified by categorical factors,
//! and their reduction to grouped binomial data for a chosen binary outcome.
//!
//! Cells are stored densely with the first factor varying fastest; every
//! constructor normalises to that layout, whatever order the input used.
//! Counts are non-negative integers (kept as `f64` for arithmetic) and a
//! table must contain at least one observation in total. Individual cells,
//! margins and grouped classes may still be zero.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::formula::FactorName;

/// A categorical factor with labelled levels. Level 0 is the reference
/// level; parameterisations downstream attach no parameter to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    name: FactorName,
    levels: Vec<String>,
}

impl Factor {
    pub fn new(name: FactorName, levels: Vec<String>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidFactorSpec {
                name: name.as_str().into(),
                detail: format!("needs at least 2 levels, got {}", levels.len()),
            });
        }
        let mut seen = BTreeSet::new();
        for level in &levels {
            if level.is_empty() {
                return Err(Error::InvalidFactorSpec {
                    name: name.as_str().into(),
                    detail: "level labels must be non-empty".into(),
                });
            }
            if !seen.insert(level.clone()) {
                return Err(Error::InvalidFactorSpec {
                    name: name.as_str().into(),
                    detail: format!("duplicate level label `{level}`"),
                });
            }
        }
        Ok(Factor { name, levels })
    }

    /// A two-level factor with levels `0` (reference) and `1`.
    pub fn binary(name: FactorName) -> Self {
        Factor {
            name,
            levels: vec!["0".into(), "1".into()],
        }
    }

    pub fn name(&self) -> &FactorName {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// Which factor's level index varies fastest as the linear cell index
/// increases. Internal storage always uses `FirstFactorFastest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrder {
    FirstFactorFastest,
    LastFactorFastest,
}

/// Linear index of a level combination, first factor fastest.
pub(crate) fn index_from_levels(levels: &[usize], sizes: &[usize]) -> usize {
    debug_assert_eq!(levels.len(), sizes.len());
    let mut idx = 0;
    let mut stride = 1;
    for (l, s) in levels.iter().zip(sizes) {
        debug_assert!(l < s);
        idx += l * stride;
        stride *= s;
    }
    idx
}

/// Level combination at a linear index, first factor fastest.
pub(crate) fn levels_from_index(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut levels = Vec::with_capacity(sizes.len());
    for s in sizes {
        levels.push(idx % s);
        idx /= s;
    }
    levels
}

fn describe_cell(factors: &[Factor], levels: &[usize]) -> String {
    let mut out = String::new();
    for (i, (f, l)) in factors.iter().zip(levels).enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}={}", f.name(), f.levels()[*l]);
    }
    out
}

fn validate_count(value: f64, position: usize) -> Result<f64> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::NegativeCount {
            value: value as i64,
            position,
        });
    }
    if value.fract() != 0.0 {
        return Err(Error::FractionalCount {
            value: format!("{value}"),
        });
    }
    Ok(value)
}

/// A complete cross-classified table of counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    factors: Vec<Factor>,
    /// Dense cell counts, first factor fastest.
    counts: Vec<f64>,
}

impl ContingencyTable {
    /// Builds a table from a dense count vector laid out in the given order.
    pub fn from_counts(factors: Vec<Factor>, counts: &[f64], order: IndexOrder) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidFactorSpec {
                name: "<table>".into(),
                detail: "a table needs at least one classifying factor".into(),
            });
        }
        let sizes: Vec<usize> = factors.iter().map(Factor::n_levels).collect();
        let n_cells: usize = sizes.iter().product();
        if counts.len() != n_cells {
            return Err(Error::LengthMismatch {
                expected: n_cells,
                actual: counts.len(),
            });
        }
        let mut stored = vec![0.0; n_cells];
        for (pos, &value) in counts.iter().enumerate() {
            let value = validate_count(value, pos)?;
            let internal = match order {
                IndexOrder::FirstFactorFastest => pos,
                IndexOrder::LastFactorFastest => {
                    // `pos` decodes last-factor-fastest: reverse the radix.
                    let rev_sizes: Vec<usize> = sizes.iter().rev().copied().collect();
                    let mut levels = levels_from_index(pos, &rev_sizes);
                    levels.reverse();
                    index_from_levels(&levels, &sizes)
                }
            };
            stored[internal] = value;
        }
        let table = ContingencyTable {
            factors,
            counts: stored,
        };
        if table.total() == 0.0 {
            return Err(Error::EmptyTable);
        }
        Ok(table)
    }

    /// Reads a table from CSV text. The header must name every declared
    /// factor exactly once plus a final `count` column; rows may come in any
    /// order but must cover every cell exactly once.
    pub fn from_csv_str(data: &str, factors: Vec<Factor>) -> Result<Self> {
        let reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(data.as_bytes());
        Self::from_csv_reader(reader, factors)
    }

    pub fn from_csv_path(path: &Path, factors: Vec<Factor>) -> Result<Self> {
        let reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::CsvSchema {
                detail: format!("cannot open {}: {e}", path.display()),
            })?;
        Self::from_csv_reader(reader, factors)
    }

    /// Reads a CSV whose factors are not declared in advance: every column
    /// except `count` becomes a factor with the levels observed in it.
    /// Levels sort numerically when every value parses as an integer and
    /// lexicographically otherwise; the first level is the reference.
    pub fn from_csv_str_inferred(data: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(data.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::CsvSchema {
                detail: format!("unreadable header: {e}"),
            })?
            .clone();
        if header.iter().filter(|h| *h == "count").count() != 1 {
            return Err(Error::CsvSchema {
                detail: "expected exactly one `count` column".into(),
            });
        }
        let mut names: Vec<FactorName> = Vec::new();
        let mut columns: Vec<usize> = Vec::new();
        for (i, h) in header.iter().enumerate() {
            if h == "count" {
                continue;
            }
            let name = FactorName::new(h).map_err(|e| Error::CsvSchema {
                detail: format!("column `{h}`: {e}"),
            })?;
            if names.contains(&name) {
                return Err(Error::CsvSchema {
                    detail: format!("column `{h}` appears more than once"),
                });
            }
            names.push(name);
            columns.push(i);
        }
        if names.is_empty() {
            return Err(Error::CsvSchema {
                detail: "no factor columns besides `count`".into(),
            });
        }
        let mut observed: Vec<BTreeSet<String>> = vec![BTreeSet::new(); names.len()];
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::CsvSchema {
                detail: format!("row {}: {e}", row_idx + 1),
            })?;
            for (set, col) in observed.iter_mut().zip(&columns) {
                set.insert(record.get(*col).unwrap_or("").to_string());
            }
        }
        let factors = names
            .into_iter()
            .zip(observed)
            .map(|(name, set)| {
                let mut levels: Vec<String> = set.into_iter().collect();
                if let Some(keys) = levels
                    .iter()
                    .map(|l| l.parse::<i64>().ok())
                    .collect::<Option<Vec<i64>>>()
                {
                    let mut keyed: Vec<(i64, String)> = keys.into_iter().zip(levels).collect();
                    keyed.sort_by_key(|&(k, _)| k);
                    levels = keyed.into_iter().map(|(_, l)| l).collect();
                }
                Factor::new(name, levels)
            })
            .collect::<Result<Vec<Factor>>>()?;
        Self::from_csv_str(data, factors)
    }

    pub fn from_csv_path_inferred(path: &Path) -> Result<Self> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::CsvSchema {
            detail: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_csv_str_inferred(&data)
    }

    fn from_csv_reader<R: std::io::Read>(
        mut reader: csv::Reader<R>,
        factors: Vec<Factor>,
    ) -> Result<Self> {
        let header = reader
            .headers()
            .map_err(|e| Error::CsvSchema {
                detail: format!("unreadable header: {e}"),
            })?
            .clone();
        let mut factor_cols = Vec::with_capacity(factors.len());
        for f in &factors {
            let hits: Vec<usize> = header
                .iter()
                .enumerate()
                .filter(|(_, h)| *h == f.name().as_str())
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => factor_cols.push(*i),
                [] => {
                    return Err(Error::CsvSchema {
                        detail: format!("missing column for factor `{}`", f.name()),
                    })
                }
                _ => {
                    return Err(Error::CsvSchema {
                        detail: format!("column `{}` appears more than once", f.name()),
                    })
                }
            }
        }
        let count_col = header
            .iter()
            .position(|h| h == "count")
            .ok_or_else(|| Error::CsvSchema {
                detail: "missing `count` column".into(),
            })?;
        if header.len() != factors.len() + 1 {
            return Err(Error::CsvSchema {
                detail: format!(
                    "expected {} columns ({} factors + count), found {}",
                    factors.len() + 1,
                    factors.len(),
                    header.len()
                ),
            });
        }

        let sizes: Vec<usize> = factors.iter().map(Factor::n_levels).collect();
        let n_cells: usize = sizes.iter().product();
        let mut counts = vec![0.0; n_cells];
        let mut seen = vec![false; n_cells];
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::CsvSchema {
                detail: format!("row {}: {e}", row_idx + 1),
            })?;
            let mut levels = Vec::with_capacity(factors.len());
            for (f, col) in factors.iter().zip(&factor_cols) {
                let label = record.get(*col).unwrap_or("");
                let level = f.level_index(label).ok_or_else(|| Error::UnknownLevel {
                    factor: f.name().as_str().into(),
                    level: label.into(),
                })?;
                levels.push(level);
            }
            let raw = record.get(count_col).unwrap_or("");
            let value: f64 = raw.parse().map_err(|_| Error::CsvSchema {
                detail: format!("row {}: unparseable count `{raw}`", row_idx + 1),
            })?;
            let value = validate_count(value, row_idx)?;
            let idx = index_from_levels(&levels, &sizes);
            if seen[idx] {
                return Err(Error::DuplicateCell {
                    cell: describe_cell(&factors, &levels),
                });
            }
            seen[idx] = true;
            counts[idx] = value;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            let levels = levels_from_index(missing, &sizes);
            return Err(Error::MissingCell {
                cell: describe_cell(&factors, &levels),
            });
        }
        let table = ContingencyTable { factors, counts };
        if table.total() == 0.0 {
            return Err(Error::EmptyTable);
        }
        Ok(table)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, name: &FactorName) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name() == name)
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Cell counts, first factor fastest.
    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Cell counts exported in the requested order.
    pub fn counts_in(&self, order: IndexOrder) -> Vec<f64> {
        match order {
            IndexOrder::FirstFactorFastest => self.counts.clone(),
            IndexOrder::LastFactorFastest => {
                let sizes = self.sizes();
                let rev_sizes: Vec<usize> = sizes.iter().rev().copied().collect();
                (0..self.counts.len())
                    .map(|pos| {
                        let mut levels = levels_from_index(pos, &rev_sizes);
                        levels.reverse();
                        self.counts[index_from_levels(&levels, &sizes)]
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::n_levels).collect()
    }

    /// Total number of observations.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Level combination of the cell at `index`, first factor fastest.
    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        levels_from_index(index, &self.sizes())
    }

    /// Count in the cell with the given level combination.
    pub fn count_at(&self, levels: &[usize]) -> f64 {
        self.counts[index_from_levels(levels, &self.sizes())]
    }

    /// Margin totals over the cross-classification of `subset`, in table
    /// factor order with the first retained factor fastest. The empty subset
    /// yields the single grand total.
    pub fn margin(&self, subset: &[FactorName]) -> Result<Vec<f64>> {
        for name in subset {
            if self.factor(name).is_none() {
                return Err(Error::UnknownFactor {
                    label: name.as_str().into(),
                });
            }
        }
        let keep: Vec<usize> = (0..self.factors.len())
            .filter(|i| subset.contains(self.factors[*i].name()))
            .collect();
        let sizes = self.sizes();
        let kept_sizes: Vec<usize> = keep.iter().map(|&i| sizes[i]).collect();
        let mut out = vec![0.0; kept_sizes.iter().product::<usize>().max(1)];
        for (idx, &n) in self.counts.iter().enumerate() {
            let levels = levels_from_index(idx, &sizes);
            let kept_levels: Vec<usize> = keep.iter().map(|&i| levels[i]).collect();
            out[index_from_levels(&kept_levels, &kept_sizes)] += n;
        }
        Ok(out)
    }

    /// Collapses the table onto a binary outcome: one class per level
    /// combination of the remaining factors (first remaining factor
    /// fastest), with trials the class total and successes the count at the
    /// outcome's level 1. Classes with zero trials are retained.
    pub fn group_by_outcome(&self, outcome: &FactorName) -> Result<GroupedBinomialData> {
        let pos = self
            .factors
            .iter()
            .position(|f| f.name() == outcome)
            .ok_or_else(|| Error::UnknownFactor {
                label: outcome.as_str().into(),
            })?;
        let outcome_factor = &self.factors[pos];
        if outcome_factor.n_levels() != 2 {
            return Err(Error::OutcomeNotBinary {
                outcome: outcome.as_str().into(),
                levels: outcome_factor.n_levels(),
            });
        }
        let retained: Vec<Factor> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, f)| f.clone())
            .collect();
        let sizes = self.sizes();
        let retained_sizes: Vec<usize> = retained.iter().map(Factor::n_levels).collect();
        let n_classes: usize = retained_sizes.iter().product::<usize>().max(1);
        let mut trials = vec![0.0; n_classes];
        let mut successes = vec![0.0; n_classes];
        for (idx, &n) in self.counts.iter().enumerate() {
            let levels = levels_from_index(idx, &sizes);
            let class_levels: Vec<usize> = levels
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != pos)
                .map(|(_, l)| *l)
                .collect();
            let class = index_from_levels(&class_levels, &retained_sizes);
            trials[class] += n;
            if levels[pos] == 1 {
                successes[class] += n;
            }
        }
        Ok(GroupedBinomialData {
            factors: retained,
            outcome: outcome.clone(),
            trials,
            successes,
        })
    }
}

/// Grouped binomial observations: for each cross-classified class of the
/// retained factors, a number of trials and a number of successes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedBinomialData {
    factors: Vec<Factor>,
    outcome: FactorName,
    trials: Vec<f64>,
    successes: Vec<f64>,
}

impl GroupedBinomialData {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// The binary outcome whose level-1 counts are the successes.
    pub fn outcome(&self) -> &FactorName {
        &self.outcome
    }

    pub fn n_classes(&self) -> usize {
        self.trials.len()
    }

    pub fn trials(&self) -> &[f64] {
        &self.trials
    }

    pub fn successes(&self) -> &[f64] {
        &self.successes
    }

    /// Observed success proportions; classes with zero trials report 0.
    pub fn proportions(&self) -> Vec<f64> {
        self.trials
            .iter()
            .zip(&self.successes)
            .map(|(&t, &s)| if t > 0.0 { s / t } else { 0.0 })
            .collect()
    }

    pub(crate) fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::n_levels).collect()
    }

    /// Level combination of the class at `index`, first factor fastest.
    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        levels_from_index(index, &self.sizes())
    }

    /// Sums trials and successes over the dropped factors, leaving classes
    /// cross-classified by the remaining ones. Dropping factors whose
    /// parameters were absent from the model anyway leaves the fit
    /// unchanged; only the grouping (and hence the deviance) moves.
    pub fn merge(&self, drop: &[FactorName]) -> Result<GroupedBinomialData> {
        for name in drop {
            if !self.factors.iter().any(|f| f.name() == name) {
                return Err(Error::UnknownFactor {
                    label: name.as_str().into(),
                });
            }
        }
        let keep: Vec<usize> = (0..self.factors.len())
            .filter(|i| !drop.contains(self.factors[*i].name()))
            .collect();
        let sizes = self.sizes();
        let kept_sizes: Vec<usize> = keep.iter().map(|&i| sizes[i]).collect();
        let kept_factors: Vec<Factor> = keep.iter().map(|&i| self.factors[i].clone()).collect();
        let n_classes: usize = kept_sizes.iter().product::<usize>().max(1);
        let mut trials = vec![0.0; n_classes];
        let mut successes = vec![0.0; n_classes];
        for (idx, (&t, &s)) in self.trials.iter().zip(&self.successes).enumerate() {
            let levels = levels_from_index(idx, &sizes);
            let kept_levels: Vec<usize> = keep.iter().map(|&i| levels[i]).collect();
            let class = index_from_levels(&kept_levels, &kept_sizes);
            trials[class] += t;
            successes[class] += s;
        }
        Ok(GroupedBinomialData {
            factors: kept_factors,
            outcome: self.outcome.clone(),
            trials,
            successes,
        })
    }
}
