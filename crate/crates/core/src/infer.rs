//! Glue between explanation finding and the decision-diagram engine: lays
//! out the Boolean variables of a theory's grounding against one world and
//! turns a query's explanations into a diagram over that layout.

use std::collections::BTreeMap;

use crate::bdd::{BddManager, BinaryVar, NodeRef, ParamTable};
use crate::logic::{Atom, MegaExample, PredSet, Theory};
use crate::semantics::ground::{clause_groundings, herbrand_universe, GroundingKey};
use crate::semantics::{find_explanations_excluding, SemanticsMode};
use crate::symbol::Symbol;

/// Per-(theory, world) variable layout: every clause grounding over the
/// world's constant universe gets a stable index, so diagrams for different
/// queries of the same world agree on what the levels mean and expected
/// counts cover the whole grounding, touched by the query or not.
pub struct WorldModel<'a> {
    pub theory: &'a Theory,
    pub world: &'a MegaExample,
    pub mode: SemanticsMode,
    pub params_template: ParamTable,
    groundings: Vec<Vec<GroundingKey>>,
    index: Vec<BTreeMap<GroundingKey, usize>>,
}

impl<'a> WorldModel<'a> {
    pub fn new(theory: &'a Theory, world: &'a MegaExample, mode: SemanticsMode) -> Self {
        Self::with_extra_atoms(theory, world, mode, &[])
    }

    /// Extend the constant universe with the constants of extra atoms
    /// (queries that mention constants absent from the world).
    pub fn with_extra_atoms(
        theory: &'a Theory,
        world: &'a MegaExample,
        mode: SemanticsMode,
        extra: &[&Atom],
    ) -> Self {
        let mut universe: std::collections::BTreeSet<Symbol> =
            herbrand_universe(theory, world, None).into_iter().collect();
        for atom in extra {
            atom.collect_consts(&mut universe);
        }
        let universe: Vec<Symbol> = universe.into_iter().collect();
        let mut groundings = Vec::with_capacity(theory.clauses.len());
        let mut index = Vec::with_capacity(theory.clauses.len());
        for clause in &theory.clauses {
            let g = clause_groundings(clause, &universe, mode);
            let idx = g
                .iter()
                .enumerate()
                .map(|(j, key)| (key.clone(), j))
                .collect();
            groundings.push(g);
            index.push(idx);
        }
        WorldModel {
            theory,
            world,
            mode,
            params_template: ParamTable::from_theory(theory),
            groundings,
            index,
        }
    }

    /// Build the query's diagram. All bits of the full grounding are
    /// declared as levels, so the expected-count pass also credits the
    /// variables the explanations never touch. With `exclude_self` the
    /// query's own fact is hidden from the derivation.
    pub fn query_diagram(
        &self,
        query: &Atom,
        depth_bound: usize,
        closed_world: &PredSet,
        exclude_self: bool,
    ) -> QueryDiagram {
        let explanations = find_explanations_excluding(
            self.theory,
            self.world,
            query,
            depth_bound,
            self.mode,
            closed_world,
            exclude_self.then_some(query),
        );

        // groundings produced by the derivation but outside the enumerated
        // universe (foreign query constants, compound terms) get fresh
        // indices appended after the enumerated ones
        let mut extra: Vec<BTreeMap<GroundingKey, usize>> =
            vec![BTreeMap::new(); self.theory.clauses.len()];
        let mut numeric: Vec<Vec<(usize, usize, usize)>> = Vec::new();
        for explanation in &explanations {
            let mut choices = Vec::new();
            for choice in &explanation.0 {
                let i = choice.clause;
                let j = match self.index[i].get(&choice.grounding) {
                    Some(&j) => j,
                    None => {
                        let next = self.groundings[i].len() + extra[i].len();
                        *extra[i].entry(choice.grounding.clone()).or_insert(next)
                    }
                };
                choices.push((i, j, choice.head));
            }
            numeric.push(choices);
        }

        let mut vars = Vec::new();
        for (i, g) in self.groundings.iter().enumerate() {
            let bits = self.params_template.bit_count(i);
            for j in 0..g.len() + extra[i].len() {
                for bit in 1..=bits {
                    vars.push(BinaryVar { clause: i, grounding: j, bit });
                }
            }
        }
        let mut manager = BddManager::new();
        manager.declare_vars(vars);
        let root = manager
            .build_query_bdd(&numeric, &self.params_template)
            .expect("all encoding bits were declared");
        QueryDiagram { manager, root }
    }
}

/// One query's reduced diagram together with the manager that owns it.
pub struct QueryDiagram {
    pub manager: BddManager,
    pub root: NodeRef,
}

impl QueryDiagram {
    pub fn probability(&self, params: &ParamTable) -> f64 {
        self.manager.backward(self.root, params).0
    }
}

/// Exact query probability through the explanation/diagram path.
pub fn query_probability(
    theory: &Theory,
    world: &MegaExample,
    query: &Atom,
    depth_bound: usize,
    mode: SemanticsMode,
    closed_world: &PredSet,
) -> f64 {
    let model = WorldModel::with_extra_atoms(theory, world, mode, &[query]);
    let diagram = model.query_diagram(query, depth_bound, closed_world, false);
    diagram.probability(&model.params_template)
}
