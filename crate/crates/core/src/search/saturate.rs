//! Bottom-clause construction: saturate a seed head with body literals
//! drawn from the data under the mode declarations, then generalize
//! constants to variables.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::logic::bias::{ModeArg, ModeDeclaration, ModeSchema, Recall};
use crate::logic::{unify, Atom, Clause, Literal, MegaExample, Pred, PredSet, Substitution, Term};
use crate::search::{BeamEntry, SearchParams};
use crate::symbol::Symbol;

/// Most specific clause for a seed: the generalized head, the saturated
/// body, and the body literals admissible during refinement (the same list).
#[derive(Clone, Debug)]
pub struct BottomClause {
    pub head: Vec<(Atom, f64)>,
    pub body: Vec<Literal>,
    pub allowed: Vec<Literal>,
}

impl BottomClause {
    pub fn full_clause(&self) -> Clause {
        Clause::new(self.head.clone(), self.body.clone())
    }
}

/// Typed set of input terms, insertion-ordered for reproducible goals.
#[derive(Default)]
struct InTerms {
    by_type: Vec<(Symbol, Vec<Term>)>,
}

impl InTerms {
    fn add(&mut self, ty: &Symbol, term: Term) {
        match self.by_type.iter_mut().find(|(t, _)| t == ty) {
            Some((_, terms)) => {
                if !terms.contains(&term) {
                    terms.push(term);
                }
            }
            None => self.by_type.push((ty.clone(), vec![term])),
        }
    }

    fn of_type(&self, ty: &Symbol) -> &[Term] {
        self.by_type
            .iter()
            .find(|(t, _)| t == ty)
            .map(|(_, terms)| terms.as_slice())
            .unwrap_or(&[])
    }

    fn snapshot(&self) -> Vec<(Symbol, Vec<Term>)> {
        self.by_type.clone()
    }
}

/// Saturate one or more ground seed heads (one schema each) against the
/// world. Per pass and per body declaration, every substitution of input
/// slots by known terms is tried and up to `recall` answers enter the body;
/// output slots feed the input-term set for later declarations. The result
/// is generalized by replacing equal constants of input/output slots with
/// equal variables; `#` and `-#` constants stay.
pub fn saturation(
    heads: &[(Atom, ModeSchema)],
    _recall: Recall,
    saturation_passes: usize,
    world: &MegaExample,
    bias: &[ModeDeclaration],
    allowed_body: Option<&PredSet>,
) -> BottomClause {
    let mut in_terms = InTerms::default();
    for (atom, schema) in heads {
        for (term, arg) in atom.args.iter().zip(schema.args.iter()) {
            if let ModeArg::Input(ty) = arg {
                in_terms.add(ty, term.clone());
            }
        }
    }

    let mut body: Vec<(Atom, Vec<bool>)> = Vec::new();
    let mut seen: BTreeSet<Atom> = BTreeSet::new();
    for _ in 0..saturation_passes {
        for decl in bias {
            let (recall, schema) = match decl {
                ModeDeclaration::Body { recall, schema } => (recall, schema),
                _ => continue,
            };
            if let Some(allowed) = allowed_body {
                if !allowed.contains(&schema.pred()) {
                    continue;
                }
            }
            let snapshot = in_terms.snapshot();
            let input_slots: Vec<(usize, &Symbol)> = schema
                .args
                .iter()
                .enumerate()
                .filter_map(|(i, a)| match a {
                    ModeArg::Input(ty) => Some((i, ty)),
                    _ => None,
                })
                .collect();
            let candidates: Vec<&[Term]> = input_slots
                .iter()
                .map(|(_, ty)| {
                    snapshot
                        .iter()
                        .find(|(t, _)| t == *ty)
                        .map(|(_, terms)| terms.as_slice())
                        .unwrap_or(&[])
                })
                .collect();
            if candidates.iter().any(|c| c.is_empty()) && !input_slots.is_empty() {
                continue;
            }
            let mut idx = vec![0usize; input_slots.len()];
            loop {
                let goal = goal_pattern(schema, &input_slots, &candidates, &idx);
                let limit = recall.limit();
                let mut taken = 0usize;
                for fact in world.facts_of(&schema.pred()) {
                    if taken >= limit {
                        break;
                    }
                    if unify(&goal, fact, &Substitution::empty()).is_none() {
                        continue;
                    }
                    taken += 1;
                    for (pos, arg) in schema.args.iter().enumerate() {
                        match arg {
                            ModeArg::Output(ty) | ModeArg::OutputConst(ty) => {
                                in_terms.add(ty, fact.args[pos].clone());
                            }
                            _ => {}
                        }
                    }
                    if seen.insert(fact.clone()) {
                        let kinds = schema.args.iter().map(ModeArg::variabilized).collect();
                        body.push((fact.clone(), kinds));
                    }
                }
                if !advance(&mut idx, &candidates) {
                    break;
                }
            }
        }
    }

    variabilize(heads, &body)
}

fn goal_pattern(
    schema: &ModeSchema,
    input_slots: &[(usize, &Symbol)],
    candidates: &[&[Term]],
    idx: &[usize],
) -> Atom {
    let mut args = Vec::with_capacity(schema.args.len());
    for (pos, arg) in schema.args.iter().enumerate() {
        let term = match arg {
            ModeArg::Input(_) => {
                let slot = input_slots.iter().position(|(p, _)| *p == pos).unwrap();
                candidates[slot][idx[slot]].clone()
            }
            ModeArg::Fixed(t) => t.clone(),
            _ => Term::Var(Symbol::new(format!("_S{pos}"))),
        };
        args.push(term);
    }
    Atom { predicate: schema.predicate.clone(), args }
}

fn advance(idx: &mut [usize], candidates: &[&[Term]]) -> bool {
    let mut carry = idx.len();
    while carry > 0 {
        idx[carry - 1] += 1;
        if idx[carry - 1] < candidates[carry - 1].len() {
            return true;
        }
        idx[carry - 1] = 0;
        carry -= 1;
    }
    false
}

fn variabilize(heads: &[(Atom, ModeSchema)], body: &[(Atom, Vec<bool>)]) -> BottomClause {
    let mut assignment: Vec<(Term, Symbol)> = Vec::new();
    let mut var_for = |term: &Term, assignment: &mut Vec<(Term, Symbol)>| -> Term {
        if let Some((_, v)) = assignment.iter().find(|(t, _)| t == term) {
            return Term::Var(v.clone());
        }
        let name = var_name(assignment.len());
        assignment.push((term.clone(), name.clone()));
        Term::Var(name)
    };

    let annotation = if heads.len() == 1 {
        0.5
    } else {
        1.0 / (heads.len() as f64 + 1.0)
    };
    let mut head_atoms = Vec::new();
    for (atom, schema) in heads {
        let args = atom
            .args
            .iter()
            .zip(schema.args.iter())
            .map(|(t, a)| {
                if a.variabilized() {
                    var_for(t, &mut assignment)
                } else {
                    t.clone()
                }
            })
            .collect();
        head_atoms.push((Atom { predicate: atom.predicate.clone(), args }, annotation));
    }

    let mut lits = Vec::new();
    for (atom, kinds) in body {
        let args = atom
            .args
            .iter()
            .zip(kinds.iter())
            .map(|(t, &variabilize)| {
                if variabilize {
                    var_for(t, &mut assignment)
                } else {
                    t.clone()
                }
            })
            .collect();
        lits.push(Literal::pos(Atom { predicate: atom.predicate.clone(), args }));
    }
    BottomClause { head: head_atoms, body: lits.clone(), allowed: lits }
}

fn var_name(i: usize) -> Symbol {
    let letter = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        Symbol::new(letter.to_string())
    } else {
        Symbol::new(format!("{}{}", letter, i / 26))
    }
}

/// Build the initial beams: per head declaration, `NInt` mega-example draws
/// times `NA` seed-atom draws (with replacement), each saturated into a
/// bottom clause. The beam entry is the generalized head with an empty body,
/// scored at negative infinity, carrying the bottom clause's body as the
/// admissible literals.
pub fn initial_beams(
    params: &SearchParams,
    data: &[MegaExample],
    bias: &[ModeDeclaration],
    rng: &mut ChaCha8Rng,
) -> Vec<(Pred, Vec<BeamEntry>)> {
    let mut keys: Vec<Pred> = Vec::new();
    for decl in bias {
        let key = match decl {
            ModeDeclaration::Head { schema, .. } => schema.pred(),
            ModeDeclaration::MultiHead { schemas, .. } => schemas[0].pred(),
            ModeDeclaration::Body { .. } => continue,
        };
        if !keys.contains(&key) {
            keys.push(key);
        }
    }

    let mut beams = Vec::new();
    for key in keys {
        let mut beam: Vec<BeamEntry> = Vec::new();
        for decl in bias {
            match decl {
                ModeDeclaration::Head { recall, schema } if schema.pred() == key => {
                    for _ in 0..params.n_int {
                        let world = &data[rng.gen_range(0..data.len())];
                        let candidates = head_answers(schema, world);
                        for _ in 0..params.n_a {
                            if candidates.is_empty() {
                                log::warn!(
                                    "no seed atoms for {} in {}",
                                    schema.predicate,
                                    world.name
                                );
                                continue;
                            }
                            let seed = candidates[rng.gen_range(0..candidates.len())].clone();
                            let bc = saturation(
                                &[(seed, schema.clone())],
                                *recall,
                                params.n_s,
                                world,
                                bias,
                                None,
                            );
                            push_entry(&mut beam, bc);
                        }
                    }
                }
                ModeDeclaration::MultiHead { recall, schemas, shared, body_preds }
                    if schemas[0].pred() == key =>
                {
                    let allowed: PredSet = body_preds.iter().cloned().collect();
                    for _ in 0..params.n_int {
                        let world = &data[rng.gen_range(0..data.len())];
                        let answers = conjunctive_answers(shared, world);
                        for _ in 0..params.n_a {
                            if answers.is_empty() {
                                log::warn!(
                                    "no seed tuples for multihead {} in {}",
                                    schemas[0].predicate,
                                    world.name
                                );
                                continue;
                            }
                            let subst = &answers[rng.gen_range(0..answers.len())];
                            let heads: Vec<(Atom, ModeSchema)> = shared
                                .iter()
                                .zip(schemas.iter())
                                .map(|(a, s)| (subst.apply_atom(a), s.clone()))
                                .collect();
                            let bc = saturation(
                                &heads,
                                *recall,
                                params.n_s,
                                world,
                                bias,
                                Some(&allowed),
                            );
                            push_entry(&mut beam, bc);
                        }
                    }
                }
                _ => {}
            }
        }
        beams.push((key, beam));
    }
    beams
}

fn push_entry(beam: &mut Vec<BeamEntry>, bc: BottomClause) {
    let clause = Clause::new(bc.head.clone(), Vec::new());
    beam.insert(
        0,
        BeamEntry { clause, remaining: bc.allowed, score: f64::NEG_INFINITY },
    );
}

/// Ground facts of the schema's predicate compatible with its fixed terms.
fn head_answers(schema: &ModeSchema, world: &MegaExample) -> Vec<Atom> {
    world
        .facts_of(&schema.pred())
        .filter(|fact| {
            fact.args
                .iter()
                .zip(schema.args.iter())
                .all(|(t, a)| match a {
                    ModeArg::Fixed(fixed) => t == fixed,
                    _ => true,
                })
        })
        .cloned()
        .collect()
}

/// All solutions of a conjunctive goal against the world facts, restricted
/// to the goal's variables, in canonical order.
fn conjunctive_answers(atoms: &[Atom], world: &MegaExample) -> Vec<Substitution> {
    let mut vars = BTreeSet::new();
    for a in atoms {
        vars.extend(a.variables());
    }
    let mut solutions: BTreeSet<Vec<(Symbol, Term)>> = BTreeSet::new();
    fn dfs(
        atoms: &[Atom],
        world: &MegaExample,
        subst: &Substitution,
        vars: &BTreeSet<Symbol>,
        out: &mut BTreeSet<Vec<(Symbol, Term)>>,
    ) {
        let goal = match atoms.first() {
            Some(a) => subst.apply_atom(a),
            None => {
                out.insert(
                    vars.iter()
                        .map(|v| (v.clone(), subst.walk(&Term::Var(v.clone()))))
                        .collect(),
                );
                return;
            }
        };
        for fact in world.facts_of(&goal.pred()) {
            if let Some(s2) = unify(&goal, fact, subst) {
                dfs(&atoms[1..], world, &s2, vars, out);
            }
        }
    }
    dfs(atoms, world, &Substitution::empty(), &vars, &mut solutions);
    solutions
        .into_iter()
        .map(|pairs| pairs.into_iter().collect())
        .collect()
}
