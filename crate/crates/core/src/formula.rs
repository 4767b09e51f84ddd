//! Model formulas for hierarchical interaction models on categorical factors.
//!
//! A formula like `AC+AD+AE+BCDEF` lists generating interaction terms; the
//! model it denotes is the hierarchical closure of those terms (every
//! non-empty subset of each term's factor set is also in the model) plus an
//! implicit, non-removable intercept. Single letters juxtaposed inside a
//! group denote one interaction term; multi-character factor names must be
//! joined with `*` or `:` instead. `1` denotes the intercept-only model.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Name of a categorical factor. Comparison is case-sensitive exact match.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactorName(String);

impl FactorName {
    /// Characters with grammar or file-format meaning are not allowed in names.
    const RESERVED: &'static [char] = &['+', '*', ':', ',', '"'];

    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidFactorName {
                name,
                detail: "name must be non-empty".into(),
            });
        }
        if name.chars().any(|c| c.is_whitespace() || Self::RESERVED.contains(&c)) {
            return Err(Error::InvalidFactorName {
                name,
                detail: "name must not contain whitespace or any of + * : , \"".into(),
            });
        }
        Ok(FactorName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FactorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One interaction term: a non-empty set of distinct factors. Terms are
/// unordered (`AC` and `CA` are the same term); the intercept is represented
/// separately, never as an empty term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    factors: BTreeSet<FactorName>,
}

impl Term {
    pub fn new(factors: impl IntoIterator<Item = FactorName>) -> Result<Self> {
        let factors: BTreeSet<FactorName> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err(Error::FormulaSyntax {
                detail: "a term must name at least one factor".into(),
            });
        }
        Ok(Term { factors })
    }

    /// Order of interaction: 1 for a main effect, 2 for a first-order
    /// interaction, and so on.
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> impl Iterator<Item = &FactorName> {
        self.factors.iter()
    }

    pub fn contains(&self, factor: &FactorName) -> bool {
        self.factors.contains(factor)
    }

    pub fn is_subset_of(&self, other: &Term) -> bool {
        self.factors.is_subset(&other.factors)
    }

    /// The term with `factor` removed, or `None` if nothing remains.
    pub fn without(&self, factor: &FactorName) -> Option<Term> {
        let rest: BTreeSet<FactorName> =
            self.factors.iter().filter(|f| *f != factor).cloned().collect();
        if rest.is_empty() {
            None
        } else {
            Some(Term { factors: rest })
        }
    }

    /// The term extended with `factor`.
    pub fn with(&self, factor: FactorName) -> Term {
        let mut factors = self.factors.clone();
        factors.insert(factor);
        Term { factors }
    }

    /// All non-empty subsets of this term's factor set.
    fn nonempty_subsets(&self) -> Vec<Term> {
        let list: Vec<&FactorName> = self.factors.iter().collect();
        let n = list.len();
        let mut out = Vec::with_capacity((1usize << n) - 1);
        for mask in 1u64..(1u64 << n) {
            let factors: BTreeSet<FactorName> = (0..n)
                .filter(|k| mask & (1 << k) != 0)
                .map(|k| list[k].clone())
                .collect();
            out.push(Term { factors });
        }
        out
    }
}

// Terms sort by interaction order first, then lexicographically on the factor
// names; this fixes the column order of every design matrix built downstream.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.factors.iter().cmp(other.factors.iter()))
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Smallest superset of `terms` closed under taking non-empty subsets of each
/// term's factor set. Idempotent; the empty set is a fixed point.
pub fn hierarchical_closure(terms: &BTreeSet<Term>) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    for term in terms {
        for sub in term.nonempty_subsets() {
            out.insert(sub);
        }
    }
    out
}

/// True iff every non-empty subset of every term is itself present.
pub fn is_hierarchically_closed(terms: &BTreeSet<Term>) -> bool {
    terms
        .iter()
        .all(|t| t.nonempty_subsets().iter().all(|s| terms.contains(s)))
}

/// Outcome of the correspondence eligibility test: a log-linear model
/// supports the exact logistic correspondence only when it contains the full
/// interaction term over all factors other than the outcome.
#[derive(Debug, Clone)]
pub struct Eligibility {
    pub eligible: bool,
    pub detail: String,
}

/// A hierarchically closed interaction model over an ordered factor universe.
/// The intercept is implicit and cannot be removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFormula {
    factors: Vec<FactorName>,
    terms: BTreeSet<Term>,
}

impl ModelFormula {
    /// Builds a formula from generating terms, taking the hierarchical
    /// closure. Every factor referenced by a term must be declared in
    /// `factors`; `factors` must be duplicate-free.
    pub fn new(
        factors: Vec<FactorName>,
        generators: impl IntoIterator<Item = Term>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &factors {
            if !seen.insert(f.clone()) {
                return Err(Error::InvalidFactorName {
                    name: f.as_str().into(),
                    detail: "factor declared twice in the universe".into(),
                });
            }
        }
        let generators: BTreeSet<Term> = generators.into_iter().collect();
        for term in &generators {
            for f in term.factors() {
                if !seen.contains(f) {
                    return Err(Error::UnknownFactor {
                        label: f.as_str().into(),
                    });
                }
            }
        }
        Ok(ModelFormula {
            factors,
            terms: hierarchical_closure(&generators),
        })
    }

    /// Parses the compact `+`-separated notation against a declared factor
    /// universe. Whitespace is ignored. Within a group, `*` or `:` separate
    /// factor labels; bare juxtaposition is only valid when every label is a
    /// single character. A group that exactly matches one declared factor
    /// name always resolves to that factor. `1` denotes the intercept.
    pub fn parse(spec: &str, factors: &[FactorName]) -> Result<Self> {
        let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::EmptyFormula);
        }
        let mut generators: BTreeSet<Term> = BTreeSet::new();
        for group in compact.split('+') {
            if group.is_empty() {
                return Err(Error::FormulaSyntax {
                    detail: format!("empty term in `{spec}`"),
                });
            }
            if group == "1" {
                continue; // intercept is implicit
            }
            let labels: Vec<String> = if group.contains(['*', ':']) {
                group
                    .split(['*', ':'])
                    .map(str::to_owned)
                    .collect()
            } else if factors.iter().any(|f| f.as_str() == group) {
                vec![group.to_owned()]
            } else {
                group.chars().map(String::from).collect()
            };
            let mut resolved: Vec<FactorName> = Vec::with_capacity(labels.len());
            for label in &labels {
                let factor = factors
                    .iter()
                    .find(|f| f.as_str() == label)
                    .ok_or_else(|| Error::UnknownFactor {
                        label: label.clone(),
                    })?;
                if resolved.contains(factor) {
                    return Err(Error::DuplicateFactor {
                        factor: label.clone(),
                        group: group.to_owned(),
                    });
                }
                resolved.push(factor.clone());
            }
            generators.insert(Term::new(resolved)?);
        }
        ModelFormula::new(factors.to_vec(), generators)
    }

    /// The declared factor universe, in order.
    pub fn factors(&self) -> &[FactorName] {
        &self.factors
    }

    /// All terms of the (closed) model, sorted by interaction order then
    /// lexicographically. The intercept is not listed.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn contains_term(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }

    /// Maximal terms: the minimal generating set under hierarchy.
    pub fn maximal_terms(&self) -> Vec<&Term> {
        self.terms
            .iter()
            .filter(|t| !self.terms.iter().any(|u| *t != u && t.is_subset_of(u)))
            .collect()
    }

    /// Factors that appear in at least one term.
    pub fn used_factors(&self) -> Vec<&FactorName> {
        self.factors
            .iter()
            .filter(|f| self.terms.iter().any(|t| t.contains(f)))
            .collect()
    }

    /// The logistic regression formula implied by treating `outcome` as the
    /// binary response: each term containing the outcome, with the outcome
    /// removed, becomes a logistic term (the outcome's main effect becomes
    /// the intercept). Factors that never interact with the outcome are
    /// absent from the result's universe.
    pub fn derive_logistic(&self, outcome: &FactorName) -> Result<ModelFormula> {
        if !self.factors.contains(outcome) {
            return Err(Error::UnknownFactor {
                label: outcome.as_str().into(),
            });
        }
        let main = Term::new([outcome.clone()])?;
        if !self.terms.contains(&main) {
            return Err(Error::NoOutcomeMainEffect {
                outcome: outcome.as_str().into(),
            });
        }
        let stripped: BTreeSet<Term> = self
            .terms
            .iter()
            .filter(|t| t.contains(outcome))
            .filter_map(|t| t.without(outcome))
            .collect();
        let retained: Vec<FactorName> = self
            .factors
            .iter()
            .filter(|f| stripped.iter().any(|t| t.contains(f)))
            .cloned()
            .collect();
        // Hierarchical closure of the stripped set is the stripped set
        // itself whenever `self` is closed, so this cannot widen the model.
        ModelFormula::new(retained, stripped)
    }

    /// Tests whether this log-linear model contains the full interaction
    /// term over every factor except `outcome`. The exact correspondence
    /// results are only asserted for eligible models.
    pub fn correspondence_eligibility(&self, outcome: &FactorName) -> Eligibility {
        let others: Vec<FactorName> = self
            .factors
            .iter()
            .filter(|f| *f != outcome)
            .cloned()
            .collect();
        if others.is_empty() {
            return Eligibility {
                eligible: true,
                detail: "no factors besides the outcome; condition holds vacuously".into(),
            };
        }
        let full = Term::new(others).expect("non-empty by construction");
        if self.terms.contains(&full) {
            Eligibility {
                eligible: true,
                detail: format!(
                    "full interaction term {} over the non-outcome factors is present",
                    display_term(&full)
                ),
            }
        } else {
            Eligibility {
                eligible: false,
                detail: format!(
                    "missing the full interaction term {} over the non-outcome factors",
                    display_term(&full)
                ),
            }
        }
    }
}

fn display_term(term: &Term) -> String {
    let names: Vec<&str> = term.factors().map(FactorName::as_str).collect();
    if names.iter().all(|n| n.chars().count() == 1) {
        names.concat()
    } else {
        names.join("*")
    }
}

impl fmt::Display for ModelFormula {
    /// Prints the minimal generating set (maximal terms only), compact style:
    /// single-character factor names are juxtaposed, longer names joined
    /// with `*`. The intercept-only model prints as `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let maximal = self.maximal_terms();
        if maximal.is_empty() {
            return f.write_str("1");
        }
        let rendered: Vec<String> = maximal.iter().map(|t| display_term(t)).collect();
        f.write_str(&rendered.join("+"))
    }
}
