//! Herbrand universe and clause-grounding enumeration shared by the BDD
//! variable layout and the enumeration oracle.

use std::collections::BTreeSet;

use crate::logic::{Atom, Clause, MegaExample, Term, Theory};
use crate::semantics::SemanticsMode;
use crate::symbol::Symbol;

/// Canonical grounding substitution: pairs sorted by variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct GroundingKey(pub Vec<(Symbol, Term)>);

impl GroundingKey {
    pub fn empty() -> Self {
        GroundingKey(Vec::new())
    }

    pub fn to_subst(&self) -> crate::logic::Substitution {
        self.0.iter().cloned().collect()
    }
}

/// All constants appearing in the theory, the mega-example and (optionally)
/// the query, in sorted order.
pub fn herbrand_universe(
    theory: &Theory,
    world: &MegaExample,
    query: Option<&Atom>,
) -> Vec<Symbol> {
    let mut consts: BTreeSet<Symbol> = theory.constants();
    consts.extend(world.constants());
    if let Some(q) = query {
        q.collect_consts(&mut consts);
    }
    consts.into_iter().collect()
}

/// Enumerate the groundings of one clause over a constant universe. The
/// grounding unit is every clause variable under the standard semantics and
/// the head variables only under the approximate one. A clause without
/// relevant variables has exactly one (empty) grounding; a clause with
/// variables over an empty universe has none.
pub fn clause_groundings(
    clause: &Clause,
    universe: &[Symbol],
    mode: SemanticsMode,
) -> Vec<GroundingKey> {
    let vars: Vec<Symbol> = match mode {
        SemanticsMode::Standard => clause.variables().into_iter().collect(),
        SemanticsMode::Approximate => clause.head_variables().into_iter().collect(),
    };
    if vars.is_empty() {
        return vec![GroundingKey::empty()];
    }
    if universe.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; vars.len()];
    loop {
        out.push(GroundingKey(
            vars.iter()
                .zip(idx.iter())
                .map(|(v, &i)| (v.clone(), Term::Const(universe[i].clone())))
                .collect(),
        ));
        let mut carry = idx.len();
        while carry > 0 {
            idx[carry - 1] += 1;
            if idx[carry - 1] < universe.len() {
                break;
            }
            idx[carry - 1] = 0;
            carry -= 1;
        }
        if carry == 0 {
            break;
        }
    }
    out
}
