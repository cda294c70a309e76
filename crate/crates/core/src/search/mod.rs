//! Structure learning: beam search in the space of clauses grown from
//! bottom clauses, then a greedy search in the space of theories, both
//! scored by the log likelihood that EM assigns to the data.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::em::{emblem, EmError, EmSettings};
use crate::logic::{Clause, Literal, MegaExample, ModeDeclaration, PredSet, Theory};

pub mod refine;
pub mod saturate;

pub use refine::clause_refinements;
pub use saturate::{initial_beams, saturation, BottomClause};

#[derive(Clone, Debug, Serialize)]
pub struct SearchParams {
    /// Mega-examples sampled per head declaration.
    pub n_int: usize,
    /// Saturation passes per bottom clause.
    pub n_s: usize,
    /// Seed atoms sampled per mega-example draw.
    pub n_a: usize,
    /// Beam-search iterations per predicate.
    pub n_i: usize,
    /// Variable budget per clause (strict upper bound).
    pub n_v: usize,
    /// Beam width.
    pub n_b: usize,
    /// Capacity of the target-clause list.
    pub n_tc: usize,
    /// Capacity of the background-clause list.
    pub n_bc: usize,
    pub em: EmSettings,
    #[serde(skip)]
    pub targets: PredSet,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            n_int: 1,
            n_s: 1,
            n_a: 1,
            n_i: 10,
            n_v: 4,
            n_b: 10,
            n_tc: 50,
            n_bc: 0,
            em: EmSettings::default(),
            targets: PredSet::new(),
            seed: 0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        for (name, v) in [
            ("NInt", self.n_int),
            ("NS", self.n_s),
            ("NA", self.n_a),
            ("NV", self.n_v),
            ("NB", self.n_b),
            ("NTC", self.n_tc),
        ] {
            if v < 1 {
                return Err(SearchError::InvalidParams(format!("{name} must be at least 1")));
            }
        }
        self.em.validate()?;
        Ok(())
    }
}

#[derive(Error, Debug)]
pub enum SearchError {
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("bias has no head declaration")]
    NoHeadDeclaration,
    #[error(transparent)]
    Em(#[from] EmError),
}

/// A clause in flight: its current annotations, the body literals still
/// admissible, and its log-likelihood score.
#[derive(Clone, Debug)]
pub struct BeamEntry {
    pub clause: Clause,
    pub remaining: Vec<Literal>,
    pub score: f64,
}

/// Insert by descending score, stable on ties (earlier entries win), then
/// truncate to the capacity.
pub fn insert_sorted(list: &mut Vec<BeamEntry>, entry: BeamEntry, cap: usize) {
    let at = list
        .iter()
        .position(|e| e.score < entry.score)
        .unwrap_or(list.len());
    list.insert(at, entry);
    list.truncate(cap);
}

#[derive(Clone, Debug, Serialize)]
pub struct BeamIterationReport {
    pub predicate: String,
    pub iteration: usize,
    pub beam_size: usize,
    pub candidates_scored: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptedClauseReport {
    pub clause: String,
    pub ll: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub beam_iterations: Vec<BeamIterationReport>,
    pub target_candidates: usize,
    pub background_candidates: usize,
    pub accepted: Vec<AcceptedClauseReport>,
    pub final_ll: f64,
    pub clauses_pruned: usize,
    pub wall_clock_secs: f64,
}

pub struct SlipcoverOutcome {
    pub theory: Theory,
    pub report: RunReport,
}

/// Beam search over the clause space. Every refinement is rescored by a
/// single-clause EM fit against the facts of its own head predicates; the
/// fitted clause goes back into the beam and, when range restricted, into
/// the target or background candidate list.
pub fn clause_search(
    params: &SearchParams,
    data: &[MegaExample],
    bias: &[ModeDeclaration],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<BeamEntry>, Vec<BeamEntry>, Vec<BeamIterationReport>), SearchError> {
    let mut tc: Vec<BeamEntry> = Vec::new();
    let mut bc: Vec<BeamEntry> = Vec::new();
    let mut reports = Vec::new();
    if params.n_i == 0 {
        return Ok((tc, bc, reports));
    }

    let beams = initial_beams(params, data, bias, rng);
    for (pred, mut beam) in beams {
        for iteration in 1..=params.n_i {
            let mut new_beam: Vec<BeamEntry> = Vec::new();
            let mut scored_total = 0usize;
            while let Some(entry) = (!beam.is_empty()).then(|| beam.remove(0)) {
                let refinements =
                    clause_refinements(&entry.clause, &entry.remaining, params.n_v);
                let scored: Result<Vec<(Clause, Vec<Literal>, f64)>, EmError> = refinements
                    .par_iter()
                    .map(|(clause, rest)| {
                        let single = Theory::from_clauses(vec![clause.clone()]);
                        let own_preds: PredSet =
                            clause.head.iter().map(|(a, _)| a.pred()).collect();
                        let fit = emblem(&single, data, &own_preds, &params.em)?;
                        Ok((fit.theory.clauses[0].clone(), rest.clone(), fit.ll))
                    })
                    .collect();
                for (clause, rest, ll) in scored? {
                    scored_total += 1;
                    let refit = BeamEntry { clause, remaining: rest, score: ll };
                    if refit.clause.is_range_restricted() {
                        let is_target = refit
                            .clause
                            .head
                            .iter()
                            .any(|(a, _)| params.targets.contains(&a.pred()));
                        if is_target {
                            insert_sorted(&mut tc, refit.clone(), params.n_tc);
                        } else {
                            insert_sorted(&mut bc, refit.clone(), params.n_bc);
                        }
                    }
                    insert_sorted(&mut new_beam, refit, params.n_b);
                }
            }
            reports.push(BeamIterationReport {
                predicate: pred.to_string(),
                iteration,
                beam_size: new_beam.len(),
                candidates_scored: scored_total,
            });
            beam = new_beam;
            if beam.is_empty() {
                break;
            }
        }
    }
    Ok((tc, bc, reports))
}

/// Greedy theory construction: walk the target candidates in score order,
/// keep a clause whenever refitting the extended theory strictly improves
/// the log likelihood, then merge the background candidates, refit once
/// more, and drop clauses whose head annotations all reached zero.
pub fn theory_search(
    tc: &[BeamEntry],
    bc: &[BeamEntry],
    params: &SearchParams,
    data: &[MegaExample],
) -> Result<(Theory, Vec<AcceptedClauseReport>, f64, usize), SearchError> {
    let mut theory = Theory::default();
    let mut theory_ll = f64::NEG_INFINITY;
    let mut accepted = Vec::new();
    for entry in tc {
        let mut clauses = theory.clauses.clone();
        clauses.push(entry.clause.clone());
        let candidate = Theory::from_clauses(clauses);
        let fit = emblem(&candidate, data, &params.targets, &params.em)?;
        if fit.ll > theory_ll {
            theory = fit.theory;
            theory_ll = fit.ll;
            accepted.push(AcceptedClauseReport { clause: entry.clause.to_string(), ll: fit.ll });
        }
    }

    let mut clauses = theory.clauses;
    clauses.extend(bc.iter().map(|e| e.clause.clone()));
    let merged = Theory::from_clauses(clauses);
    let fit = emblem(&merged, data, &params.targets, &params.em)?;
    let total = fit.theory.clauses.len();
    let kept: Vec<Clause> = fit
        .theory
        .clauses
        .into_iter()
        .filter(|c| c.head.iter().any(|(_, p)| *p != 0.0))
        .collect();
    let pruned = total - kept.len();
    Ok((Theory::from_clauses(kept), accepted, fit.ll, pruned))
}

/// Full structure learning: clause search followed by theory search.
/// Deterministic for a fixed seed.
pub fn slipcover(
    params: &SearchParams,
    data: &[MegaExample],
    bias: &[ModeDeclaration],
) -> Result<SlipcoverOutcome, SearchError> {
    params.validate()?;
    if !bias
        .iter()
        .any(|d| matches!(d, ModeDeclaration::Head { .. } | ModeDeclaration::MultiHead { .. }))
    {
        return Err(SearchError::NoHeadDeclaration);
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (tc, bc, beam_iterations) = clause_search(params, data, bias, &mut rng)?;
    let (target_candidates, background_candidates) = (tc.len(), bc.len());
    let (theory, accepted, final_ll, clauses_pruned) = theory_search(&tc, &bc, params, data)?;
    Ok(SlipcoverOutcome {
        theory,
        report: RunReport {
            beam_iterations,
            target_candidates,
            background_candidates,
            accepted,
            final_ll,
            clauses_pruned,
            wall_clock_secs: start.elapsed().as_secs_f64(),
        },
    })
}
