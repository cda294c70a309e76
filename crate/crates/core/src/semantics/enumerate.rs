//! Exhaustive enumeration over selections: the independent oracle for query
//! probabilities and expected bit counts. Everything here works by listing
//! whole instances and computing least models, never touching the decision
//! diagram path it is used to check.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::bdd::params::binary_params;
use crate::logic::{unify, Atom, MegaExample, Pred, Substitution, Theory};
use crate::semantics::ground::{clause_groundings, herbrand_universe, GroundingKey};
use crate::semantics::SemanticsMode;

pub const DEFAULT_SELECTION_CAP: u64 = 1 << 20;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("selection space of {0} programs exceeds the cap of {1}")]
    CapExceeded(u128, u64),
    #[error("query has probability zero, expectations are undefined")]
    ZeroProbabilityQuery,
    #[error("theory has negative body literals, enumeration needs a definite program")]
    NonDefinite,
}

/// One normal-program instance. Heads are ground; under the approximate
/// semantics body atoms may keep their body-only variables, read
/// existentially.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instance {
    pub rules: Vec<(Atom, Vec<Atom>)>,
}

struct GroundClause {
    clause: usize,
    grounding: GroundingKey,
    /// probability of each explicit head plus, last, the null alternative
    /// when one exists
    alt_probs: Vec<f64>,
    explicit: usize,
}

pub struct Enumerator<'a> {
    theory: &'a Theory,
    world: &'a MegaExample,
    mode: SemanticsMode,
    cap: u64,
}

impl<'a> Enumerator<'a> {
    pub fn new(theory: &'a Theory, world: &'a MegaExample, mode: SemanticsMode) -> Self {
        Enumerator { theory, world, mode, cap: DEFAULT_SELECTION_CAP }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    fn ground_clauses(&self, query: Option<&Atom>) -> Result<Vec<GroundClause>, EnumerationError> {
        if !self.theory.is_definite() {
            return Err(EnumerationError::NonDefinite);
        }
        let universe = herbrand_universe(self.theory, self.world, query);
        let mut out = Vec::new();
        let mut space: u128 = 1;
        for clause in &self.theory.clauses {
            let mut alt_probs: Vec<f64> = clause.head.iter().map(|(_, p)| *p).collect();
            if clause.has_null_head() {
                alt_probs.push(1.0 - clause.annotation_sum());
            }
            for grounding in clause_groundings(clause, &universe, self.mode) {
                space = space.saturating_mul(alt_probs.len() as u128);
                if space > self.cap as u128 {
                    return Err(EnumerationError::CapExceeded(space, self.cap));
                }
                out.push(GroundClause {
                    clause: clause.id,
                    grounding,
                    alt_probs: alt_probs.clone(),
                    explicit: clause.head.len(),
                });
            }
        }
        Ok(out)
    }

    fn instance_for(&self, ground: &[GroundClause], selection: &[usize]) -> Instance {
        let mut rules = Vec::new();
        for (g, &k) in ground.iter().zip(selection.iter()) {
            if k > g.explicit {
                continue; // null alternative, no rule
            }
            let clause = &self.theory.clauses[g.clause];
            let subst = g.grounding.to_subst();
            let head = subst.apply_atom(&clause.head[k - 1].0);
            let body = clause
                .body
                .iter()
                .map(|l| subst.apply_atom(&l.atom))
                .collect();
            rules.push((head, body));
        }
        Instance { rules }
    }

    fn for_each_selection(
        &self,
        ground: &[GroundClause],
        mut f: impl FnMut(&[usize], f64),
    ) {
        let mut sel = vec![1usize; ground.len()];
        loop {
            let prob: f64 = ground
                .iter()
                .zip(sel.iter())
                .map(|(g, &k)| g.alt_probs[k - 1])
                .product();
            f(&sel, prob);
            let mut carry = sel.len();
            while carry > 0 {
                sel[carry - 1] += 1;
                if sel[carry - 1] <= ground[carry - 1].alt_probs.len() {
                    break;
                }
                sel[carry - 1] = 1;
                carry -= 1;
            }
            if carry == 0 {
                break;
            }
        }
    }

    /// Materialize every instance with its probability. Probabilities sum
    /// to one.
    pub fn instances(&self) -> Result<Vec<(Instance, f64)>, EnumerationError> {
        let ground = self.ground_clauses(None)?;
        let mut out = Vec::new();
        self.for_each_selection(&ground, |sel, p| {
            out.push((self.instance_for(&ground, sel), p));
        });
        Ok(out)
    }

    /// Query probability by direct summation over entailing instances.
    pub fn probability(&self, query: &Atom) -> Result<f64, EnumerationError> {
        let ground = self.ground_clauses(Some(query))?;
        let mut total = 0.0;
        self.for_each_selection(&ground, |sel, p| {
            if p > 0.0 && self.entails(&self.instance_for(&ground, sel), query) {
                total += p;
            }
        });
        Ok(total)
    }

    /// Expected binary-variable counts conditioned on the query: for every
    /// clause `i` and bit `k`, the pair `(E[c_ik0|Q], E[c_ik1|Q])` summed
    /// over all groundings. Returns the query probability alongside.
    pub fn expectations(
        &self,
        query: &Atom,
    ) -> Result<(f64, BTreeMap<(usize, usize), (f64, f64)>), EnumerationError> {
        let ground = self.ground_clauses(Some(query))?;
        let pis: Vec<Vec<f64>> = self
            .theory
            .clauses
            .iter()
            .map(|c| {
                let annotations: Vec<f64> = c.head.iter().map(|(_, p)| *p).collect();
                binary_params(&annotations).0
            })
            .collect();
        let mut counts: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for g in &ground {
            for bit in 1..g.alt_probs.len() {
                counts.entry((g.clause, bit)).or_insert((0.0, 0.0));
            }
        }
        let mut prob_q = 0.0;
        self.for_each_selection(&ground, |sel, p| {
            if p <= 0.0 || !self.entails(&self.instance_for(&ground, sel), query) {
                return;
            }
            prob_q += p;
            for (g, &k) in ground.iter().zip(sel.iter()) {
                let n = g.alt_probs.len();
                for bit in 1..n {
                    // given the selected alternative, bits before it are 0,
                    // the selected bit is 1 and later bits stay free
                    let p1 = if k == n && n > g.explicit {
                        0.0
                    } else if bit < k {
                        0.0
                    } else if bit == k {
                        1.0
                    } else {
                        pis[g.clause][bit - 1]
                    };
                    let e = counts.get_mut(&(g.clause, bit)).unwrap();
                    e.0 += p * (1.0 - p1);
                    e.1 += p * p1;
                }
            }
        });
        if prob_q <= 0.0 {
            return Err(EnumerationError::ZeroProbabilityQuery);
        }
        for e in counts.values_mut() {
            e.0 /= prob_q;
            e.1 /= prob_q;
        }
        Ok((prob_q, counts))
    }

    /// CSV rows `query,probability`, one per query, for golden files.
    pub fn probability_csv(&self, queries: &[Atom]) -> Result<String, EnumerationError> {
        let mut out = String::from("query,probability\n");
        for q in queries {
            out.push_str(&format!("{},{:.12}\n", q, self.probability(q)?));
        }
        Ok(out)
    }

    fn entails(&self, instance: &Instance, query: &Atom) -> bool {
        self.least_model(instance).contains(query)
    }

    /// Least Herbrand model of the instance joined with the world facts,
    /// by naive forward chaining. Free body variables are existential.
    fn least_model(&self, instance: &Instance) -> BTreeSet<Atom> {
        let mut model: BTreeSet<Atom> = self.world.facts.iter().cloned().collect();
        loop {
            let mut changed = false;
            for (head, body) in &instance.rules {
                if model.contains(head) {
                    continue;
                }
                if body_holds(body, &model) {
                    model.insert(head.clone());
                    changed = true;
                }
            }
            if !changed {
                return model;
            }
        }
    }
}

fn body_holds(body: &[Atom], model: &BTreeSet<Atom>) -> bool {
    // index once per call; bodies and models here are tiny
    let mut by_pred: HashMap<Pred, Vec<&Atom>> = HashMap::new();
    for a in model {
        by_pred.entry(a.pred()).or_default().push(a);
    }
    fn solve(
        body: &[Atom],
        by_pred: &HashMap<Pred, Vec<&Atom>>,
        subst: &Substitution,
    ) -> bool {
        let goal = match body.first() {
            Some(g) => subst.apply_atom(g),
            None => return true,
        };
        let rest = &body[1..];
        if goal.is_ground() {
            return by_pred
                .get(&goal.pred())
                .is_some_and(|fs| fs.iter().any(|f| **f == goal))
                && solve(rest, by_pred, subst);
        }
        if let Some(candidates) = by_pred.get(&goal.pred()) {
            for fact in candidates {
                if let Some(s2) = unify(&goal, fact, subst) {
                    if solve(rest, by_pred, &s2) {
                        return true;
                    }
                }
            }
        }
        false
    }
    solve(body, &by_pred, &Substitution::empty())
}

/// Convenience wrappers matching the module's operation surface.
pub fn enumerate_instances(
    theory: &Theory,
    world: &MegaExample,
    mode: SemanticsMode,
) -> Result<Vec<(Instance, f64)>, EnumerationError> {
    Enumerator::new(theory, world, mode).instances()
}

pub fn brute_force_prob(
    theory: &Theory,
    world: &MegaExample,
    query: &Atom,
    mode: SemanticsMode,
) -> Result<f64, EnumerationError> {
    Enumerator::new(theory, world, mode).probability(query)
}

pub fn brute_force_expectations(
    theory: &Theory,
    world: &MegaExample,
    query: &Atom,
    mode: SemanticsMode,
) -> Result<(f64, BTreeMap<(usize, usize), (f64, f64)>), EnumerationError> {
    Enumerator::new(theory, world, mode).expectations(query)
}
