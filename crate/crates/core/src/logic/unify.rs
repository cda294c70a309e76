//! Most-general-unifier computation with occurs check.

use crate::logic::{Atom, Substitution, Term};
use crate::symbol::Symbol;

/// Unify two atoms under an existing substitution, returning the extended
/// most general unifier or `None` on failure.
pub fn unify(a: &Atom, b: &Atom, subst: &Substitution) -> Option<Substitution> {
    if a.predicate != b.predicate || a.args.len() != b.args.len() {
        return None;
    }
    let mut s = subst.clone();
    for (x, y) in a.args.iter().zip(b.args.iter()) {
        if !unify_terms(&mut s, x, y) {
            return None;
        }
    }
    Some(s)
}

fn unify_terms(s: &mut Substitution, a: &Term, b: &Term) -> bool {
    let a = s.resolve(a);
    let b = s.resolve(b);
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if occurs(x, t, s) {
                return false;
            }
            s.bind(x.clone(), t.clone());
            true
        }
        (Term::Const(c), Term::Const(d)) => c == d,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(x, y)| unify_terms(s, x, y))
        }
        _ => false,
    }
}

fn occurs(var: &Symbol, term: &Term, s: &Substitution) -> bool {
    match s.resolve(term) {
        Term::Var(v) => v == *var,
        Term::Const(_) => false,
        Term::Compound(_, args) => args.iter().any(|t| occurs(var, t, s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: &str) -> Term {
        Term::Var(Symbol::new(n))
    }

    fn cst(n: &str) -> Term {
        Term::Const(Symbol::new(n))
    }

    #[test]
    fn forced_bindings() {
        // unify(p(X,a), p(b,Y)) = {X/b, Y/a}
        let a = Atom::new("p", vec![var("X"), cst("a")]);
        let b = Atom::new("p", vec![cst("b"), var("Y")]);
        let s = unify(&a, &b, &Substitution::empty()).unwrap();
        assert_eq!(s.walk(&var("X")), cst("b"));
        assert_eq!(s.walk(&var("Y")), cst("a"));
    }

    #[test]
    fn functor_mismatch_fails() {
        let a = Atom::new("p", vec![cst("a")]);
        let b = Atom::new("q", vec![cst("a")]);
        assert!(unify(&a, &b, &Substitution::empty()).is_none());
    }

    #[test]
    fn occurs_check_fails() {
        // unify(p(X), p(f(X))) must fail
        let a = Atom::new("p", vec![var("X")]);
        let b = Atom::new(
            "p",
            vec![Term::Compound(Symbol::new("f"), vec![var("X")])],
        );
        assert!(unify(&a, &b, &Substitution::empty()).is_none());
    }

    #[test]
    fn unifier_makes_atoms_equal() {
        let a = Atom::new("p", vec![var("X"), Term::Compound(Symbol::new("f"), vec![var("Y")])]);
        let b = Atom::new("p", vec![cst("c"), Term::Compound(Symbol::new("f"), vec![cst("d")])]);
        let s = unify(&a, &b, &Substitution::empty()).unwrap();
        assert_eq!(s.apply_atom(&a), s.apply_atom(&b));
    }

    #[test]
    fn apply_twice_is_apply_once() {
        let a = Atom::new("p", vec![var("X"), var("Y")]);
        let b = Atom::new("p", vec![var("Y"), cst("a")]);
        let s = unify(&a, &b, &Substitution::empty()).unwrap();
        let once = s.apply_atom(&a);
        let twice = s.apply_atom(&once);
        assert_eq!(once, twice);
    }
}
