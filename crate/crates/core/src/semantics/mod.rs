//! Explanation finding by depth-bounded SLD derivation, under the standard
//! or the approximate (head-grounding-only) semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::logic::{Atom, MegaExample, Pred, PredSet, Substitution, Term, Theory};
use crate::symbol::Symbol;

pub mod enumerate;
pub mod ground;

pub use enumerate::{EnumerationError, Enumerator, Instance, DEFAULT_SELECTION_CAP};
pub use ground::{clause_groundings, herbrand_universe, GroundingKey};

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
pub enum SemanticsMode {
    /// One random variable per full clause grounding.
    Standard,
    /// One random variable per grounding of the head variables only;
    /// body-only variables are existential.
    Approximate,
}

/// A single choice: clause, grounding substitution (canonical, sorted by
/// variable name) and the 1-based index of the selected head alternative.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct AtomicChoice {
    pub clause: usize,
    pub grounding: GroundingKey,
    pub head: usize,
}

/// A consistent set of atomic choices.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct CompositeChoice(pub BTreeSet<AtomicChoice>);

impl CompositeChoice {
    pub fn is_consistent(&self) -> bool {
        let mut seen: BTreeMap<(usize, &GroundingKey), usize> = BTreeMap::new();
        for c in &self.0 {
            match seen.insert((c.clause, &c.grounding), c.head) {
                Some(prev) if prev != c.head => return false,
                _ => {}
            }
        }
        true
    }
}

pub type ExplanationSet = BTreeSet<CompositeChoice>;

/// Find a covering set of explanations for a ground query by SLD derivation.
///
/// The leftmost literal is selected and clauses are tried in theory order.
/// Body literals of predicates in `closed_world` resolve against the
/// mega-example facts only; everything else resolves against facts and
/// clause heads. Derivations using more than `depth_bound` clause
/// resolutions are cut.
pub fn find_explanations(
    theory: &Theory,
    world: &MegaExample,
    query: &Atom,
    depth_bound: usize,
    mode: SemanticsMode,
    closed_world: &PredSet,
) -> ExplanationSet {
    find_explanations_excluding(theory, world, query, depth_bound, mode, closed_world, None)
}

/// Same as [`find_explanations`] but with one fact hidden from the fact
/// database. Learning and evaluation hide the query's own fact so an
/// observed label can never prove itself.
pub fn find_explanations_excluding(
    theory: &Theory,
    world: &MegaExample,
    query: &Atom,
    depth_bound: usize,
    mode: SemanticsMode,
    closed_world: &PredSet,
    exclude_fact: Option<&Atom>,
) -> ExplanationSet {
    let mut facts: HashMap<Pred, Vec<&Atom>> = HashMap::new();
    for fact in &world.facts {
        if exclude_fact == Some(fact) {
            continue;
        }
        facts.entry(fact.pred()).or_default().push(fact);
    }
    let universe = ground::herbrand_universe(theory, world, Some(query));
    let mut sld = Sld {
        theory,
        facts,
        closed_world,
        depth_bound,
        mode,
        universe,
        fresh: 0,
        results: ExplanationSet::new(),
    };
    sld.solve(&[query.clone()], Substitution::empty(), &[], 0);
    sld.results
}

struct PendingChoice {
    clause: usize,
    head: usize,
    /// original clause variable -> fresh renamed variable
    var_map: Vec<(Symbol, Symbol)>,
}

struct Sld<'a> {
    theory: &'a Theory,
    facts: HashMap<Pred, Vec<&'a Atom>>,
    closed_world: &'a PredSet,
    depth_bound: usize,
    mode: SemanticsMode,
    universe: Vec<Symbol>,
    fresh: u64,
    results: ExplanationSet,
}

impl<'a> Sld<'a> {
    fn solve(
        &mut self,
        goals: &[Atom],
        subst: Substitution,
        pending: &[&PendingChoice],
        depth: usize,
    ) {
        let goal = match goals.first() {
            Some(g) => subst.apply_atom(g),
            None => {
                self.finalize(&subst, pending);
                return;
            }
        };
        let rest = &goals[1..];
        let pred = goal.pred();

        if let Some(candidates) = self.facts.get(&pred) {
            for fact in candidates.clone() {
                if let Some(s2) = crate::logic::unify(&goal, fact, &subst) {
                    self.solve(rest, s2, pending, depth);
                }
            }
        }

        if self.closed_world.contains(&pred) || depth >= self.depth_bound {
            return;
        }
        for clause in &self.theory.clauses {
            for (k, (head_atom, _)) in clause.head.iter().enumerate() {
                if head_atom.predicate != pred.name || head_atom.args.len() != pred.arity {
                    continue;
                }
                // bodies with negative literals are outside the engine's
                // scope; such clauses never contribute explanations
                if clause.body.iter().any(|l| !l.positive) {
                    continue;
                }
                let (renamed, var_map) = self.rename_apart(clause);
                if let Some(s2) = crate::logic::unify(&goal, &renamed.head[k].0, &subst) {
                    let choice;
                    let mut pending2: Vec<&PendingChoice> = pending.to_vec();
                    if clause.alternatives() > 1 {
                        choice = PendingChoice { clause: clause.id, head: k + 1, var_map };
                        pending2.push(&choice);
                    }
                    let mut new_goals: Vec<Atom> =
                        renamed.body.iter().map(|l| l.atom.clone()).collect();
                    new_goals.extend_from_slice(rest);
                    self.solve(&new_goals, s2, &pending2, depth + 1);
                }
            }
        }
    }

    fn rename_apart(&mut self, clause: &crate::logic::Clause) -> (crate::logic::Clause, Vec<(Symbol, Symbol)>) {
        let vars = clause.variables();
        let mut map = BTreeMap::new();
        let mut var_map = Vec::with_capacity(vars.len());
        for v in vars {
            self.fresh += 1;
            let fresh = Symbol::new(format!("_{}", self.fresh));
            map.insert(v.clone(), fresh.clone());
            var_map.push((v, fresh));
        }
        (clause.rename_vars(&map), var_map)
    }

    fn finalize(&mut self, subst: &Substitution, pending: &[&PendingChoice]) {
        // grounding key per choice: all clause variables under the standard
        // semantics, head variables only under the approximate one
        let mut choices: Vec<(usize, usize, Vec<(Symbol, Term)>)> = Vec::new();
        let mut unbound: BTreeSet<Symbol> = BTreeSet::new();
        for p in pending {
            let clause = &self.theory.clauses[p.clause];
            let keep: BTreeSet<Symbol> = match self.mode {
                SemanticsMode::Standard => clause.variables(),
                SemanticsMode::Approximate => clause.head_variables(),
            };
            let mut grounding = Vec::new();
            for (orig, fresh) in &p.var_map {
                if !keep.contains(orig) {
                    continue;
                }
                let t = subst.walk(&Term::Var(fresh.clone()));
                t.collect_vars(&mut unbound);
                grounding.push((orig.clone(), t));
            }
            choices.push((p.clause, p.head, grounding));
        }

        if unbound.is_empty() {
            self.push_explanation(&choices, &Substitution::empty());
            return;
        }
        // a derivation can succeed with variables left free; the explanation
        // then stands for every grounding of those variables
        if self.universe.is_empty() {
            return;
        }
        let vars: Vec<Symbol> = unbound.into_iter().collect();
        let mut idx = vec![0usize; vars.len()];
        loop {
            let assignment: Substitution = vars
                .iter()
                .zip(idx.iter())
                .map(|(v, &i)| (v.clone(), Term::Const(self.universe[i].clone())))
                .collect();
            self.push_explanation(&choices, &assignment);
            let mut carry = idx.len();
            while carry > 0 {
                idx[carry - 1] += 1;
                if idx[carry - 1] < self.universe.len() {
                    break;
                }
                idx[carry - 1] = 0;
                carry -= 1;
            }
            if carry == 0 {
                break;
            }
        }
    }

    fn push_explanation(
        &mut self,
        choices: &[(usize, usize, Vec<(Symbol, Term)>)],
        fill: &Substitution,
    ) {
        let mut set = BTreeSet::new();
        for (clause, head, grounding) in choices {
            let grounding = GroundingKey(
                grounding
                    .iter()
                    .map(|(v, t)| (v.clone(), fill.walk(t)))
                    .collect(),
            );
            set.insert(AtomicChoice { clause: *clause, grounding, head: *head });
        }
        let explanation = CompositeChoice(set);
        if explanation.is_consistent() {
            self.results.insert(explanation);
        }
    }
}
