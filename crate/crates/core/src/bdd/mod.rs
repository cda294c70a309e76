//! Reduced ordered binary decision diagrams over the bit-encoded choice
//! variables, with hash-consing, Boolean combination, and the forward /
//! backward / expected-count passes.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

pub mod params;

pub use params::{binary_params, invert_binary_params, Counts, ParamTable};

/// One Boolean variable of the encoding: bit `bit` (1-based) of grounding
/// `grounding` of clause `clause`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BinaryVar {
    pub clause: usize,
    pub grounding: usize,
    pub bit: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("node belongs to a different manager")]
    ForeignNode,
    #[error("variable {0:?} was not declared on this manager")]
    UndeclaredVariable(String),
}

/// Reference to a node inside one manager. Slot 0 and 1 are the terminals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeRef {
    mgr: u32,
    slot: u32,
}

const ZERO_SLOT: u32 = 0;
const ONE_SLOT: u32 = 1;

impl NodeRef {
    pub fn is_zero(&self) -> bool {
        self.slot == ZERO_SLOT
    }

    pub fn is_one(&self) -> bool {
        self.slot == ONE_SLOT
    }

    pub fn is_terminal(&self) -> bool {
        self.slot <= ONE_SLOT
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    level: u32,
    hi: u32,
    lo: u32,
}

static MANAGER_IDS: AtomicU32 = AtomicU32::new(1);

/// Single-owner node arena. Nodes are hash-consed, so structural equality
/// is reference equality within one manager.
pub struct BddManager {
    id: u32,
    levels: Vec<BinaryVar>,
    level_of: HashMap<BinaryVar, u32>,
    grounding_counts: BTreeMap<usize, usize>,
    nodes: Vec<Node>,
    unique: HashMap<(u32, u32, u32), u32>,
    apply_memo: HashMap<(u8, u32, u32), u32>,
}

impl BddManager {
    pub fn new() -> Self {
        BddManager {
            id: MANAGER_IDS.fetch_add(1, Ordering::Relaxed),
            levels: Vec::new(),
            level_of: HashMap::new(),
            grounding_counts: BTreeMap::new(),
            nodes: Vec::new(),
            unique: HashMap::new(),
            apply_memo: HashMap::new(),
        }
    }

    /// Fix the variable order: bits sorted by (clause, grounding, bit), so a
    /// grounding's bits sit on adjacent levels. Must happen before any node
    /// is created.
    pub fn declare_vars(&mut self, mut vars: Vec<BinaryVar>) {
        assert!(self.nodes.is_empty(), "variables must be declared before nodes exist");
        vars.sort();
        vars.dedup();
        self.level_of = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i as u32 + 1))
            .collect();
        let mut groundings: BTreeMap<usize, std::collections::BTreeSet<usize>> = BTreeMap::new();
        for v in &vars {
            groundings.entry(v.clause).or_default().insert(v.grounding);
        }
        self.grounding_counts = groundings.into_iter().map(|(c, g)| (c, g.len())).collect();
        self.levels = vars;
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_var(&self, level: usize) -> BinaryVar {
        self.levels[level - 1]
    }

    /// Declared groundings of a clause on this manager.
    pub fn grounding_count(&self, clause: usize) -> usize {
        self.grounding_counts.get(&clause).copied().unwrap_or(0)
    }

    pub fn declared_clauses(&self) -> impl Iterator<Item = usize> + '_ {
        self.grounding_counts.keys().copied()
    }

    pub fn zero(&self) -> NodeRef {
        NodeRef { mgr: self.id, slot: ZERO_SLOT }
    }

    pub fn one(&self) -> NodeRef {
        NodeRef { mgr: self.id, slot: ONE_SLOT }
    }

    fn level(&self, slot: u32) -> u32 {
        if slot <= ONE_SLOT {
            u32::MAX
        } else {
            self.nodes[(slot - 2) as usize].level
        }
    }

    fn mk(&mut self, level: u32, hi: u32, lo: u32) -> u32 {
        if hi == lo {
            return hi;
        }
        if let Some(&slot) = self.unique.get(&(level, hi, lo)) {
            return slot;
        }
        let slot = self.nodes.len() as u32 + 2;
        self.nodes.push(Node { level, hi, lo });
        self.unique.insert((level, hi, lo), slot);
        slot
    }

    fn check(&self, n: NodeRef) -> Result<u32, BddError> {
        if n.mgr != self.id {
            return Err(BddError::ForeignNode);
        }
        Ok(n.slot)
    }

    /// Node testing a single declared variable.
    pub fn var_node(&mut self, var: BinaryVar) -> Result<NodeRef, BddError> {
        let level = *self
            .level_of
            .get(&var)
            .ok_or_else(|| BddError::UndeclaredVariable(format!("{var:?}")))?;
        let slot = self.mk(level, ONE_SLOT, ZERO_SLOT);
        Ok(NodeRef { mgr: self.id, slot })
    }

    pub fn nvar_node(&mut self, var: BinaryVar) -> Result<NodeRef, BddError> {
        let level = *self
            .level_of
            .get(&var)
            .ok_or_else(|| BddError::UndeclaredVariable(format!("{var:?}")))?;
        let slot = self.mk(level, ZERO_SLOT, ONE_SLOT);
        Ok(NodeRef { mgr: self.id, slot })
    }

    /// Boolean combination of two diagrams from this manager.
    pub fn combine(&mut self, op: BoolOp, a: NodeRef, b: NodeRef) -> Result<NodeRef, BddError> {
        let a = self.check(a)?;
        let b = self.check(b)?;
        let slot = self.apply(op, a, b);
        Ok(NodeRef { mgr: self.id, slot })
    }

    pub fn and(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, BddError> {
        self.combine(BoolOp::And, a, b)
    }

    pub fn or(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, BddError> {
        self.combine(BoolOp::Or, a, b)
    }

    fn apply(&mut self, op: BoolOp, a: u32, b: u32) -> u32 {
        match op {
            BoolOp::And => {
                if a == ZERO_SLOT || b == ZERO_SLOT {
                    return ZERO_SLOT;
                }
                if a == ONE_SLOT {
                    return b;
                }
                if b == ONE_SLOT || a == b {
                    return a;
                }
            }
            BoolOp::Or => {
                if a == ONE_SLOT || b == ONE_SLOT {
                    return ONE_SLOT;
                }
                if a == ZERO_SLOT {
                    return b;
                }
                if b == ZERO_SLOT || a == b {
                    return a;
                }
            }
        }
        let key = (op as u8, a.min(b), a.max(b));
        if let Some(&r) = self.apply_memo.get(&key) {
            return r;
        }
        let (la, lb) = (self.level(a), self.level(b));
        let level = la.min(lb);
        let (a_hi, a_lo) = if la == level {
            let n = self.nodes[(a - 2) as usize];
            (n.hi, n.lo)
        } else {
            (a, a)
        };
        let (b_hi, b_lo) = if lb == level {
            let n = self.nodes[(b - 2) as usize];
            (n.hi, n.lo)
        } else {
            (b, b)
        };
        let hi = self.apply(op, a_hi, b_hi);
        let lo = self.apply(op, a_lo, b_lo);
        let r = self.mk(level, hi, lo);
        self.apply_memo.insert(key, r);
        r
    }

    /// Build the diagram of a covering set of explanations: a disjunction,
    /// over explanations, of the bit-equation conjunctions encoding each
    /// atomic choice. Choice triples are (clause, grounding, head index);
    /// selecting head `k` fixes bits 1..k-1 to 0 and bit `k` to 1, selecting
    /// the last alternative fixes every bit to 0.
    pub fn build_query_bdd(
        &mut self,
        explanations: &[Vec<(usize, usize, usize)>],
        params: &ParamTable,
    ) -> Result<NodeRef, BddError> {
        let mut root = ZERO_SLOT;
        for explanation in explanations {
            let mut cube_bits: Vec<(u32, bool)> = Vec::new();
            for &(clause, grounding, head) in explanation {
                let n = params.alternatives(clause);
                if n == 1 {
                    continue; // deterministic clause, nothing to encode
                }
                let fixed_zero_upto = if head == n { n - 1 } else { head - 1 };
                for bit in 1..=fixed_zero_upto {
                    let var = BinaryVar { clause, grounding, bit };
                    let level = *self
                        .level_of
                        .get(&var)
                        .ok_or_else(|| BddError::UndeclaredVariable(format!("{var:?}")))?;
                    cube_bits.push((level, false));
                }
                if head < n {
                    let var = BinaryVar { clause, grounding, bit: head };
                    let level = *self
                        .level_of
                        .get(&var)
                        .ok_or_else(|| BddError::UndeclaredVariable(format!("{var:?}")))?;
                    cube_bits.push((level, true));
                }
            }
            cube_bits.sort();
            cube_bits.dedup();
            let mut cube = ONE_SLOT;
            for &(level, positive) in cube_bits.iter().rev() {
                cube = if positive {
                    self.mk(level, cube, ZERO_SLOT)
                } else {
                    self.mk(level, ZERO_SLOT, cube)
                };
            }
            root = self.apply(BoolOp::Or, root, cube);
        }
        Ok(NodeRef { mgr: self.id, slot: root })
    }

    pub fn var_of(&self, n: NodeRef) -> Option<BinaryVar> {
        if n.mgr != self.id || n.is_terminal() {
            return None;
        }
        Some(self.levels[(self.nodes[(n.slot - 2) as usize].level - 1) as usize])
    }

    /// (1-child, 0-child) of an internal node.
    pub fn children(&self, n: NodeRef) -> Option<(NodeRef, NodeRef)> {
        if n.mgr != self.id || n.is_terminal() {
            return None;
        }
        let node = self.nodes[(n.slot - 2) as usize];
        Some((
            NodeRef { mgr: self.id, slot: node.hi },
            NodeRef { mgr: self.id, slot: node.lo },
        ))
    }

    /// Internal nodes reachable from the root, sorted by (level, slot).
    pub fn reachable(&self, root: NodeRef) -> Vec<NodeRef> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![root.slot];
        while let Some(slot) = stack.pop() {
            if slot <= ONE_SLOT || !seen.insert(slot) {
                continue;
            }
            let n = self.nodes[(slot - 2) as usize];
            stack.push(n.hi);
            stack.push(n.lo);
        }
        let mut out: Vec<u32> = seen.into_iter().collect();
        out.sort_by_key(|&s| (self.level(s), s));
        out.into_iter()
            .map(|slot| NodeRef { mgr: self.id, slot })
            .collect()
    }

    fn pi_of_level(&self, level: u32, params: &ParamTable) -> f64 {
        let v = self.levels[(level - 1) as usize];
        params.pi(v.clause, v.bit)
    }

    /// Backward probabilities: mass of the paths from each node to the 1
    /// terminal. The value at the root is the query probability.
    pub fn backward(&self, root: NodeRef, params: &ParamTable) -> (f64, HashMap<NodeRef, f64>) {
        assert_eq!(root.mgr, self.id, "foreign node");
        let mut memo: HashMap<u32, f64> = HashMap::new();
        memo.insert(ZERO_SLOT, 0.0);
        memo.insert(ONE_SLOT, 1.0);
        let b_root = self.backward_rec(root.slot, params, &mut memo);
        let map = memo
            .into_iter()
            .map(|(slot, v)| (NodeRef { mgr: self.id, slot }, v))
            .collect();
        (b_root, map)
    }

    fn backward_rec(&self, slot: u32, params: &ParamTable, memo: &mut HashMap<u32, f64>) -> f64 {
        if let Some(&v) = memo.get(&slot) {
            return v;
        }
        let node = self.nodes[(slot - 2) as usize];
        let pi = self.pi_of_level(node.level, params);
        let hi = self.backward_rec(node.hi, params, memo);
        let lo = self.backward_rec(node.lo, params, memo);
        let v = pi * hi + (1.0 - pi) * lo;
        memo.insert(slot, v);
        v
    }

    /// Forward probabilities: mass of the paths from the root down to each
    /// internal node of the diagram.
    pub fn forward(&self, root: NodeRef, params: &ParamTable) -> HashMap<NodeRef, f64> {
        assert_eq!(root.mgr, self.id, "foreign node");
        let order = self.reachable(root);
        let mut f: HashMap<u32, f64> = HashMap::new();
        if !root.is_terminal() {
            f.insert(root.slot, 1.0);
        }
        for n in &order {
            let mass = match f.get(&n.slot) {
                Some(&m) => m,
                None => continue,
            };
            let node = self.nodes[(n.slot - 2) as usize];
            let pi = self.pi_of_level(node.level, params);
            if node.hi > ONE_SLOT {
                *f.entry(node.hi).or_insert(0.0) += mass * pi;
            }
            if node.lo > ONE_SLOT {
                *f.entry(node.lo).or_insert(0.0) += mass * (1.0 - pi);
            }
        }
        f.into_iter()
            .map(|(slot, v)| (NodeRef { mgr: self.id, slot }, v))
            .collect()
    }

    /// Query probability plus the per-(clause, bit) path masses through the
    /// 0- and 1-edges, with skipped levels credited through the per-level
    /// correction table: an edge jumping from level `l` to level `l_c`
    /// deposits its mass at `l+1` and withdraws it at `l_c`, so the running
    /// prefix sum at a level is exactly the 1-path mass that skips it.
    pub fn expectations(&self, root: NodeRef, params: &ParamTable) -> (f64, Counts) {
        assert_eq!(root.mgr, self.id, "foreign node");
        let num_levels = self.levels.len();
        let terminal_level = num_levels as u32 + 1;
        let level_or_terminal = |slot: u32| -> u32 {
            if slot <= ONE_SLOT {
                terminal_level
            } else {
                self.level(slot)
            }
        };

        let (prob, b) = self.backward(root, params);
        let mut counts = Counts::zeros_like(params);
        if root.is_zero() {
            return (0.0, counts);
        }
        let f = self.forward(root, params);
        let slot_b = |slot: u32| b[&NodeRef { mgr: self.id, slot }];

        let mut sigma = vec![0.0f64; num_levels + 2];
        let mut deposit = |sigma: &mut Vec<f64>, from_level: u32, to_level: u32, mass: f64| {
            if mass != 0.0 && to_level > from_level + 1 {
                sigma[(from_level + 1) as usize] += mass;
                sigma[to_level as usize] -= mass;
            }
        };

        for n in self.reachable(root) {
            let node = self.nodes[(n.slot - 2) as usize];
            let var = self.levels[(node.level - 1) as usize];
            let pi = params.pi(var.clause, var.bit);
            let fwd = f[&n];
            let e1 = fwd * pi * slot_b(node.hi);
            let e0 = fwd * (1.0 - pi) * slot_b(node.lo);
            counts.add(var.clause, var.bit, e0, e1);
            deposit(&mut sigma, node.level, level_or_terminal(node.hi), e1);
            deposit(&mut sigma, node.level, level_or_terminal(node.lo), e0);
        }
        // paths start above the root: levels before it are skipped by all
        // of the query's mass
        deposit(&mut sigma, 0, level_or_terminal(root.slot), prob);

        let mut t = 0.0f64;
        for level in 1..=num_levels {
            t += sigma[level];
            let var = self.levels[level - 1];
            let pi = params.pi(var.clause, var.bit);
            counts.add(var.clause, var.bit, t * (1.0 - pi), t * pi);
        }
        (prob, counts)
    }

    /// Scan the whole arena checking the reduction invariants: no redundant
    /// node, no duplicated (level, children) triple, children strictly below
    /// their parent.
    pub fn validate_reduced(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for node in &self.nodes {
            if node.hi == node.lo {
                return false;
            }
            if !seen.insert((node.level, node.hi, node.lo)) {
                return false;
            }
            if self.level(node.hi) <= node.level || self.level(node.lo) <= node.level {
                return false;
            }
        }
        true
    }

    /// Graphviz text for one diagram: solid 1-edges, dashed 0-edges.
    pub fn to_dot(&self, root: NodeRef) -> String {
        let mut out = String::from("digraph bdd {\n");
        let order = self.reachable(root);
        let name: BTreeMap<u32, String> = order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.slot, format!("n{}", i + 1)))
            .collect();
        let label = |slot: u32| -> String {
            match slot {
                ZERO_SLOT => "zero".to_string(),
                ONE_SLOT => "one".to_string(),
                s => name[&s].clone(),
            }
        };
        out.push_str("  zero [shape=box,label=\"0\"];\n");
        out.push_str("  one [shape=box,label=\"1\"];\n");
        for n in &order {
            let v = self.var_of(*n).unwrap();
            out.push_str(&format!(
                "  {} [label=\"X_{}_{}_{}\"];\n",
                label(n.slot),
                v.clause,
                v.grounding,
                v.bit
            ));
        }
        for n in &order {
            let node = self.nodes[(n.slot - 2) as usize];
            out.push_str(&format!("  {} -> {};\n", label(n.slot), label(node.hi)));
            out.push_str(&format!(
                "  {} -> {} [style=dashed];\n",
                label(n.slot),
                label(node.lo)
            ));
        }
        out.push_str("}\n");
        out
    }
}

impl Default for BddManager {
    fn default() -> Self {
        BddManager::new()
    }
}
