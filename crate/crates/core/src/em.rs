//! EM parameter learning over a fixed theory: one diagram per target ground
//! query, then alternating expectation and maximization until the
//! log likelihood settles.

use rayon::prelude::*;
use thiserror::Error;

use crate::bdd::{Counts, ParamTable};
use crate::infer::{QueryDiagram, WorldModel};
use crate::logic::{MegaExample, PredSet, Theory};
use crate::semantics::SemanticsMode;

/// Floor applied inside logarithms so unprovable positives (and certain
/// negatives) keep scores finite.
pub const PROB_FLOOR: f64 = 1e-10;

pub const UNBOUNDED_ITERATIONS: u64 = u64::MAX;

pub type CountAccumulator = Counts;

#[derive(Clone, PartialEq, Debug, serde::Serialize)]
pub struct EmSettings {
    /// Maximum clause resolutions per derivation branch.
    pub depth_bound: usize,
    /// Maximum number of maximization steps; `UNBOUNDED_ITERATIONS` runs to
    /// convergence.
    pub max_iter: u64,
    /// Stop when the log-likelihood gain drops below this.
    pub epsilon: f64,
    /// ... or below this fraction of the current log likelihood.
    pub delta: f64,
    pub mode: SemanticsMode,
    /// Predicates whose body literals resolve against world facts only.
    #[serde(skip)]
    pub closed_world: PredSet,
}

impl Default for EmSettings {
    fn default() -> Self {
        EmSettings {
            depth_bound: 64,
            max_iter: UNBOUNDED_ITERATIONS,
            epsilon: 1e-4,
            delta: 1e-5,
            mode: SemanticsMode::Standard,
            closed_world: PredSet::new(),
        }
    }
}

impl EmSettings {
    pub fn validate(&self) -> Result<(), EmError> {
        if !(self.epsilon > 0.0) {
            return Err(EmError::InvalidSettings("epsilon must be positive".into()));
        }
        if !(self.delta > 0.0) {
            return Err(EmError::InvalidSettings("delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum EmError {
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("theory has negative body literals, which the learner does not support")]
    NonDefinite,
}

/// One expectation pass: log likelihood of the recorded state.
#[derive(Clone, Debug)]
pub struct EmIteration {
    pub ll: f64,
    pub params: ParamTable,
}

#[derive(Debug)]
pub struct EmOutcome {
    pub ll: f64,
    pub theory: Theory,
    pub iterations: Vec<EmIteration>,
}

/// A query diagram tagged with its polarity.
pub struct TaggedDiagram {
    pub diagram: QueryDiagram,
    pub positive: bool,
}

/// Run the expectation pass over all query diagrams: returns the log
/// likelihood and the accumulated expected counts. Negative examples reuse
/// the atom's own diagram through the complement identity
/// `P(bit=x, not Q) = P(bit=x) - P(bit=x, Q)`, normalized by `1 - P(Q)`.
pub fn expectation_step(diagrams: &[TaggedDiagram], params: &ParamTable) -> (f64, Counts) {
    let per_query: Vec<(f64, Option<Counts>)> = diagrams
        .par_iter()
        .map(|tagged| query_contribution(tagged, params))
        .collect();
    let mut ll = 0.0;
    let mut acc = Counts::zeros_like(params);
    for (qll, counts) in per_query {
        ll += qll;
        if let Some(c) = counts {
            acc.merge(&c);
        }
    }
    (ll, acc)
}

fn query_contribution(tagged: &TaggedDiagram, params: &ParamTable) -> (f64, Option<Counts>) {
    let manager = &tagged.diagram.manager;
    let (prob, mut counts) = manager.expectations(tagged.diagram.root, params);
    if tagged.positive {
        if prob < PROB_FLOOR {
            return (PROB_FLOOR.ln(), None);
        }
        for row in counts.e0.iter_mut().chain(counts.e1.iter_mut()) {
            for v in row.iter_mut() {
                *v /= prob;
            }
        }
        (prob.ln(), Some(counts))
    } else {
        let miss = 1.0 - prob;
        if miss < PROB_FLOOR {
            return (PROB_FLOOR.ln(), None);
        }
        let mut neg = Counts::zeros_like(params);
        for clause in manager.declared_clauses() {
            let groundings = manager.grounding_count(clause) as f64;
            for k in 1..=params.bit_count(clause) {
                let pi = params.pi(clause, k);
                let (e0, e1) = counts.get(clause, k);
                neg.add(
                    clause,
                    k,
                    (groundings * (1.0 - pi) - e0) / miss,
                    (groundings * pi - e1) / miss,
                );
            }
        }
        (miss.ln(), Some(neg))
    }
}

/// Maximization: `pi = E[c1] / (E[c0] + E[c1])` wherever the counts carry
/// mass; untouched parameters keep their previous value.
pub fn maximization_step(acc: &Counts, previous: &ParamTable) -> ParamTable {
    let mut params = previous.clone();
    for clause in 0..params.num_clauses() {
        for k in 1..=params.bit_count(clause) {
            let (e0, e1) = acc.get(clause, k);
            let total = e0 + e1;
            if total > 0.0 {
                params.set_pi(clause, k, (e1 / total).clamp(0.0, 1.0));
            }
        }
    }
    params
}

/// Fit the theory's parameters on the target facts of the mega-examples.
///
/// Returns the last log likelihood, the theory with updated annotations and
/// the per-iteration trace. The loop stops when the gain drops below
/// `epsilon`, below `-LL * delta`, or after `max_iter` maximizations; with
/// `max_iter = 0` the input theory comes back unchanged along with its
/// initial log likelihood.
pub fn emblem(
    theory: &Theory,
    data: &[MegaExample],
    targets: &PredSet,
    settings: &EmSettings,
) -> Result<EmOutcome, EmError> {
    settings.validate()?;
    if !theory.is_definite() {
        return Err(EmError::NonDefinite);
    }

    let mut diagrams: Vec<TaggedDiagram> = Vec::new();
    for world in data {
        let model = WorldModel::new(theory, world, settings.mode);
        let mut queries: Vec<(crate::logic::Atom, bool)> = Vec::new();
        for pred in targets {
            queries.extend(model.world.facts_of(pred).cloned().map(|a| (a, true)));
            queries.extend(
                world
                    .negatives
                    .iter()
                    .filter(|a| &a.pred() == pred)
                    .cloned()
                    .map(|a| (a, false)),
            );
        }
        let built: Vec<TaggedDiagram> = queries
            .par_iter()
            .map(|(atom, positive)| TaggedDiagram {
                diagram: model.query_diagram(
                    atom,
                    settings.depth_bound,
                    &settings.closed_world,
                    true,
                ),
                positive: *positive,
            })
            .collect();
        diagrams.extend(built);
    }

    let mut params = ParamTable::from_theory(theory);
    let mut ll = f64::NEG_INFINITY;
    let mut iterations = Vec::new();
    let mut maximized = false;
    let mut n: u64 = 0;
    loop {
        let ll_prev = ll;
        let (ll_new, counts) = expectation_step(&diagrams, &params);
        ll = ll_new;
        log::debug!("iter {} LL={}", iterations.len() + 1, ll);
        iterations.push(EmIteration { ll, params: params.clone() });
        n += 1;
        if n > settings.max_iter {
            break;
        }
        params = maximization_step(&counts, &params);
        maximized = true;
        if ll - ll_prev < settings.epsilon || ll - ll_prev < -ll * settings.delta {
            break;
        }
    }

    let theory = if maximized {
        params.to_annotations(theory)
    } else {
        theory.clone()
    };
    Ok(EmOutcome { ll, theory, iterations })
}

/// Log likelihood of the data under the theory as given, no fitting.
pub fn log_likelihood(
    theory: &Theory,
    data: &[MegaExample],
    targets: &PredSet,
    settings: &EmSettings,
) -> Result<f64, EmError> {
    let frozen = EmSettings { max_iter: 0, ..settings.clone() };
    Ok(emblem(theory, data, targets, &frozen)?.ll)
}
