//! Language-bias declarations: head and body schema templates with
//! placemarker arguments.

use crate::logic::{Atom, Pred, Term};
use crate::symbol::Symbol;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Recall {
    Star,
    Finite(usize),
}

impl Recall {
    pub fn limit(&self) -> usize {
        match self {
            Recall::Star => usize::MAX,
            Recall::Finite(n) => *n,
        }
    }
}

/// One argument slot of a schema. `+type` is an input variable, `-type` an
/// output variable, `#type` a ground constant slot, `-#type` a constant slot
/// that also feeds the growing input-term set, and anything else a fixed
/// ground term that must match as-is.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ModeArg {
    Input(Symbol),
    Output(Symbol),
    GroundConst(Symbol),
    OutputConst(Symbol),
    Fixed(Term),
}

impl ModeArg {
    /// Whether the answer term in this slot is turned into a variable when
    /// the saturated clause is generalized.
    pub fn variabilized(&self) -> bool {
        matches!(self, ModeArg::Input(_) | ModeArg::Output(_))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModeSchema {
    pub predicate: Symbol,
    pub args: Vec<ModeArg>,
}

impl ModeSchema {
    pub fn pred(&self) -> Pred {
        Pred { name: self.predicate.clone(), arity: self.args.len() }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum ModeDeclaration {
    Head {
        recall: Recall,
        schema: ModeSchema,
    },
    /// Declares clauses with several head disjuncts. `shared` spells out
    /// which variables the head atoms have in common and `body_preds` lists
    /// the predicates admitted in the body.
    MultiHead {
        recall: Recall,
        schemas: Vec<ModeSchema>,
        shared: Vec<Atom>,
        body_preds: Vec<Pred>,
    },
    Body {
        recall: Recall,
        schema: ModeSchema,
    },
}
