//! Terms, atoms, clauses and theories, plus the substitution machinery and
//! the text formats everything else is built on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::symbol::Symbol;

pub mod bias;
pub mod parse;
pub mod unify;

pub use bias::{ModeArg, ModeDeclaration, ModeSchema, Recall};
pub use parse::{parse_bias, parse_examples, parse_theory, serialize_theory, ParseError};
pub use unify::unify;

/// Slack used when validating that head annotations sum to at most one.
pub const ANNOTATION_SUM_EPS: f64 = 1e-12;

/// Below this remainder the implicit null head is considered absent.
pub const NULL_HEAD_EPS: f64 = 1e-9;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Symbol),
    Const(Symbol),
    Compound(Symbol, Vec<Term>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Var(_) => {}
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::Compound(_, args) => args.iter().for_each(|t| t.collect_consts(out)),
        }
    }

    fn rename_vars(&self, map: &BTreeMap<Symbol, Symbol>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::Const(_) => self.clone(),
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|t| t.rename_vars(map)).collect(),
            ),
        }
    }
}

/// Predicate indicator: name plus arity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Pred {
    pub name: Symbol,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: impl Into<Symbol>, arity: usize) -> Self {
        Pred { name: name.into(), arity }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

pub type PredSet = BTreeSet<Pred>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<Symbol>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn pred(&self) -> Pred {
        Pred { name: self.predicate.clone(), arity: self.args.len() }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.args.iter().for_each(|t| t.collect_vars(&mut out));
        out
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<Symbol>) {
        self.args.iter().for_each(|t| t.collect_consts(out));
    }

    fn rename_vars(&self, map: &BTreeMap<Symbol, Symbol>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.rename_vars(map)).collect(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }
}

/// One annotated disjunctive clause: a list of annotated head atoms plus a
/// body. When the annotations sum to less than one the head implicitly
/// carries a null alternative with the remaining mass.
#[derive(Clone, PartialEq, Debug)]
pub struct Clause {
    pub id: usize,
    pub head: Vec<(Atom, f64)>,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn new(head: Vec<(Atom, f64)>, body: Vec<Literal>) -> Self {
        Clause { id: 0, head, body }
    }

    pub fn annotation_sum(&self) -> f64 {
        self.head.iter().map(|(_, p)| p).sum()
    }

    pub fn has_null_head(&self) -> bool {
        self.annotation_sum() < 1.0 - NULL_HEAD_EPS
    }

    /// Number of alternatives a grounding of this clause chooses among:
    /// explicit head atoms plus the implicit null when mass is left over.
    pub fn alternatives(&self) -> usize {
        self.head.len() + usize::from(self.has_null_head())
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (atom, _) in &self.head {
            out.extend(atom.variables());
        }
        for lit in &self.body {
            out.extend(lit.atom.variables());
        }
        out
    }

    pub fn head_variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (atom, _) in &self.head {
            out.extend(atom.variables());
        }
        out
    }

    /// True iff every variable occurring in the head also occurs in some
    /// positive body literal.
    pub fn is_range_restricted(&self) -> bool {
        let mut body_vars = BTreeSet::new();
        for lit in self.body.iter().filter(|l| l.positive) {
            body_vars.extend(lit.atom.variables());
        }
        self.head_variables().is_subset(&body_vars)
    }

    pub fn rename_vars(&self, map: &BTreeMap<Symbol, Symbol>) -> Clause {
        Clause {
            id: self.id,
            head: self
                .head
                .iter()
                .map(|(a, p)| (a.rename_vars(map), *p))
                .collect(),
            body: self
                .body
                .iter()
                .map(|l| Literal { atom: l.atom.rename_vars(map), positive: l.positive })
                .collect(),
        }
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<Symbol>) {
        for (atom, _) in &self.head {
            atom.collect_consts(out);
        }
        for lit in &self.body {
            lit.atom.collect_consts(out);
        }
    }
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct Theory {
    pub clauses: Vec<Clause>,
}

impl Theory {
    pub fn from_clauses(mut clauses: Vec<Clause>) -> Self {
        for (i, c) in clauses.iter_mut().enumerate() {
            c.id = i;
        }
        Theory { clauses }
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            c.collect_consts(&mut out);
        }
        out
    }

    /// True iff no clause body carries a negative literal.
    pub fn is_definite(&self) -> bool {
        self.clauses
            .iter()
            .all(|c| c.body.iter().all(|l| l.positive))
    }
}

/// One interpretation: a named block of ground facts plus the explicitly
/// negative ground atoms it declares.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MegaExample {
    pub name: Symbol,
    pub facts: BTreeSet<Atom>,
    pub negatives: BTreeSet<Atom>,
}

impl MegaExample {
    pub fn new(name: impl Into<Symbol>) -> Self {
        MegaExample { name: name.into(), facts: BTreeSet::new(), negatives: BTreeSet::new() }
    }

    pub fn constants(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for a in self.facts.iter().chain(self.negatives.iter()) {
            a.collect_consts(&mut out);
        }
        out
    }

    pub fn facts_of(&self, pred: &Pred) -> impl Iterator<Item = &Atom> {
        let pred = pred.clone();
        self.facts
            .iter()
            .filter(move |a| a.predicate == pred.name && a.args.len() == pred.arity)
    }
}

/// A binding map from variables to terms. Bindings are acyclic (the occurs
/// check in unification guarantees it), so applying a substitution twice is
/// the same as applying it once.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn empty() -> Self {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn get(&self, var: &Symbol) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn bind(&mut self, var: Symbol, term: Term) {
        self.bindings.insert(var, term);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.bindings.iter()
    }

    /// Dereference the top-level variable chain of `t` without descending
    /// into compound arguments.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = &cur {
            match self.bindings.get(v) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    /// Fully dereference `t`, descending into compound arguments.
    pub fn walk(&self, t: &Term) -> Term {
        match self.resolve(t) {
            Term::Compound(f, args) => {
                Term::Compound(f, args.iter().map(|a| self.walk(a)).collect())
            }
            other => other,
        }
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom {
            predicate: atom.predicate.clone(),
            args: atom.args.iter().map(|t| self.walk(t)).collect(),
        }
    }

    pub fn apply_literal(&self, lit: &Literal) -> Literal {
        Literal { atom: self.apply_atom(&lit.atom), positive: lit.positive }
    }

    pub fn apply_clause(&self, clause: &Clause) -> Clause {
        Clause {
            id: clause.id,
            head: clause
                .head
                .iter()
                .map(|(a, p)| (self.apply_atom(a), *p))
                .collect(),
            body: clause.body.iter().map(|l| self.apply_literal(l)).collect(),
        }
    }
}

impl FromIterator<(Symbol, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Symbol, Term)>>(iter: I) -> Self {
        Substitution { bindings: iter.into_iter().collect() }
    }
}

fn ident_needs_quotes(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        None => return true,
        Some(c) if c.is_ascii_lowercase() => {}
        Some(c) if c.is_ascii_digit() || c == '-' => {
            // numeric literals print bare
            return s.parse::<f64>().is_err();
        }
        Some(_) => return true,
    }
    !chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => {
                if ident_needs_quotes(c.as_str()) {
                    write!(f, "'{c}'")
                } else {
                    write!(f, "{c}")
                }
            }
            Term::Compound(functor, args) => {
                if ident_needs_quotes(functor.as_str()) {
                    write!(f, "'{functor}'(")?;
                } else {
                    write!(f, "{functor}(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if ident_needs_quotes(self.predicate.as_str()) {
            write!(f, "'{}'", self.predicate)?;
        } else {
            write!(f, "{}", self.predicate)?;
        }
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "\\+ ")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Print an annotation with six significant digits, the precision used for
/// learned theory files.
pub fn format_annotation(p: f64) -> String {
    if p == 0.0 {
        return "0.0".to_string();
    }
    let exp = p.abs().log10().floor() as i32;
    if !(-4..=5).contains(&exp) {
        format!("{p:.5e}")
    } else {
        let decimals = (5 - exp).max(0) as usize;
        format!("{p:.decimals$}")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let single_deterministic = self.head.len() == 1 && self.head[0].1 == 1.0;
        for (i, (atom, prob)) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, " ; ")?;
            }
            if single_deterministic {
                write!(f, "{atom}")?;
            } else {
                write!(f, "{atom}:{}", format_annotation(*prob))?;
            }
        }
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, lit) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{lit}")?;
            }
        }
        write!(f, ".")
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for clause in &self.clauses {
            writeln!(f, "{clause}")?;
        }
        Ok(())
    }
}
