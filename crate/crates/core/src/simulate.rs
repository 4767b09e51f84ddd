//! Seeded random generation of eligible model/table scenarios.
//!
//! The property suites need many structurally valid inputs: complete
//! tables with strictly positive counts and log-linear models that contain
//! the full interaction among the non-outcome factors. This module
//! generates them deterministically from a seed (ChaCha8, so the stream is
//! identical across platforms) and records which factors ended up obsolete
//! so tests can exercise merging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{FactorName, ModelFormula, Term};
use crate::table::{ContingencyTable, Factor, IndexOrder};

/// Bounds for scenario generation. Counts are drawn uniformly from
/// `1..=max_count`; strictly positive cells keep existence of the MLE
/// uncontroversial, so convergence failures in the suites mean bugs.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub min_factors: usize,
    pub max_factors: usize,
    pub min_levels: usize,
    pub max_levels: usize,
    pub max_count: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            min_factors: 3,
            max_factors: 5,
            min_levels: 2,
            max_levels: 3,
            max_count: 50,
        }
    }
}

/// One generated input for the correspondence machinery.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub table: ContingencyTable,
    pub formula: ModelFormula,
    pub outcome: FactorName,
    /// Non-outcome factors the implied logistic model does not use.
    pub obsolete: Vec<FactorName>,
    /// A random subset of `obsolete`, possibly empty.
    pub merge: Vec<FactorName>,
}

const LETTERS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Draws one scenario. The model always contains the full interaction term
/// over the non-outcome factors (the eligibility condition) plus one or two
/// random outcome-bearing interaction terms.
pub fn random_scenario<R: Rng>(rng: &mut R, config: &ScenarioConfig) -> Scenario {
    let n_factors = rng.gen_range(config.min_factors..=config.max_factors);
    let outcome_idx = rng.gen_range(0..n_factors);
    let factors: Vec<Factor> = (0..n_factors)
        .map(|i| {
            let name = FactorName::new(LETTERS[i]).expect("static names are valid");
            let n_levels = if i == outcome_idx {
                2
            } else {
                rng.gen_range(config.min_levels..=config.max_levels)
            };
            let labels = (0..n_levels).map(|l| l.to_string()).collect();
            Factor::new(name, labels).expect("generated labels are distinct")
        })
        .collect();
    let universe: Vec<FactorName> = factors.iter().map(|f| f.name().clone()).collect();
    let outcome = universe[outcome_idx].clone();
    let others: Vec<FactorName> = universe
        .iter()
        .filter(|n| **n != outcome)
        .cloned()
        .collect();

    let mut generators =
        vec![Term::new(others.iter().cloned()).expect("at least two factors total")];
    for _ in 0..rng.gen_range(1..=2) {
        let mut members = vec![outcome.clone()];
        for other in &others {
            if rng.gen_bool(0.5) {
                members.push(other.clone());
            }
        }
        generators.push(Term::new(members).expect("contains the outcome"));
    }
    let formula =
        ModelFormula::new(universe, generators).expect("generators use declared factors");

    let n_cells: usize = factors.iter().map(Factor::n_levels).product();
    let counts: Vec<f64> = (0..n_cells)
        .map(|_| f64::from(rng.gen_range(1..=config.max_count)))
        .collect();
    let table = ContingencyTable::from_counts(factors, &counts, IndexOrder::FirstFactorFastest)
        .expect("positive counts over declared factors");

    let logistic = formula
        .derive_logistic(&outcome)
        .expect("outcome main effect is generated");
    let obsolete: Vec<FactorName> = others
        .iter()
        .filter(|n| !logistic.factors().contains(n))
        .cloned()
        .collect();
    let merge: Vec<FactorName> = obsolete
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .cloned()
        .collect();

    Scenario {
        table,
        formula,
        outcome,
        obsolete,
        merge,
    }
}

/// A deterministic batch of scenarios.
pub fn scenarios(seed: u64, count: usize, config: &ScenarioConfig) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_scenario(&mut rng, config)).collect()
}

/// A complete table over the given single-letter binary factors with
/// counts uniform in `1..=max_count`.
pub fn random_binary_table<R: Rng>(
    rng: &mut R,
    letters: &str,
    max_count: u32,
) -> ContingencyTable {
    let factors: Vec<Factor> = letters
        .chars()
        .map(|c| Factor::binary(FactorName::new(c.to_string()).expect("letter name")))
        .collect();
    let n_cells = 1usize << factors.len();
    let counts: Vec<f64> = (0..n_cells)
        .map(|_| f64::from(rng.gen_range(1..=max_count)))
        .collect();
    ContingencyTable::from_counts(factors, &counts, IndexOrder::FirstFactorFastest)
        .expect("positive counts")
}
