//! Refinement operator: extend a clause body with one admissible literal,
//! or drop one head disjunct from a multi-head clause.

use std::collections::BTreeSet;

use crate::logic::{Clause, Literal};

/// All refinements of `(clause, remaining)` with fewer than `max_vars`
/// variables.
///
/// A body refinement appends one literal from `remaining` that keeps the
/// clause connected (it shares a variable with the head or an earlier
/// literal; variable-free literals are vacuously connected) and consumes
/// that literal from the admissible set. A clause with three or more head
/// alternatives (the implicit null counts) additionally yields one
/// refinement per deletable explicit head atom; the surviving heads are
/// rescaled to keep the explicit mass, so the null keeps its share.
pub fn clause_refinements(
    clause: &Clause,
    remaining: &[Literal],
    max_vars: usize,
) -> Vec<(Clause, Vec<Literal>)> {
    let mut refs = Vec::new();
    let clause_vars = clause.variables();

    for (i, lit) in remaining.iter().enumerate() {
        let lit_vars = lit.atom.variables();
        let connected = lit_vars.is_empty() || !clause_vars.is_disjoint(&lit_vars);
        if !connected {
            continue;
        }
        let total_vars: BTreeSet<_> = clause_vars.union(&lit_vars).collect();
        if total_vars.len() >= max_vars {
            continue;
        }
        let mut refined = clause.clone();
        refined.body.push(lit.clone());
        let mut rest = remaining.to_vec();
        rest.remove(i);
        refs.push((refined, rest));
    }

    if clause.alternatives() >= 3 {
        let explicit_sum = clause.annotation_sum();
        for drop in 0..clause.head.len() {
            let mut head = clause.head.clone();
            head.remove(drop);
            let surviving: f64 = head.iter().map(|(_, p)| p).sum();
            if surviving > 0.0 {
                let scale = explicit_sum / surviving;
                for (_, p) in head.iter_mut() {
                    *p *= scale;
                }
            } else if !head.is_empty() {
                let share = explicit_sum / head.len() as f64;
                for (_, p) in head.iter_mut() {
                    *p = share;
                }
            }
            let refined = Clause { id: clause.id, head, body: clause.body.clone() };
            refs.push((refined, remaining.to_vec()));
        }
    }
    refs
}
