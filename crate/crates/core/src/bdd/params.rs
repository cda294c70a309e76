//! Conversion between head annotations and the chained Boolean parameters
//! of the binary encoding, plus the per-theory parameter table.

use crate::logic::{Clause, Theory, NULL_HEAD_EPS};

/// Convert a clause's head annotations into the parameters of its Boolean
/// bit variables: `pi_1 = ann_1`, `pi_k = ann_k / prod_{j<k}(1 - pi_j)`.
///
/// A clause with `n` alternatives (explicit heads plus the implicit null
/// when mass is left over) yields `n - 1` parameters. When an earlier
/// parameter reaches 1 the remainder is zero and every later parameter is
/// saturated at 0; the second return value flags that this happened.
pub fn binary_params(annotations: &[f64]) -> (Vec<f64>, bool) {
    let sum: f64 = annotations.iter().sum();
    let has_null = sum < 1.0 - NULL_HEAD_EPS;
    let n = annotations.len() + usize::from(has_null);
    let mut pis = Vec::with_capacity(n.saturating_sub(1));
    let mut remainder = 1.0f64;
    let mut saturated = false;
    for &ann in annotations.iter().take(n.saturating_sub(1)) {
        if remainder <= 0.0 {
            pis.push(0.0);
            saturated = true;
            continue;
        }
        let pi = (ann / remainder).clamp(0.0, 1.0);
        remainder *= 1.0 - pi;
        pis.push(pi);
    }
    (pis, saturated)
}

/// Invert [`binary_params`]: recover the explicit head annotations from the
/// bit parameters. `explicit` is the number of explicit head atoms, either
/// `pis.len()` (a null alternative exists) or `pis.len() + 1` (no null, the
/// last head takes the remaining mass).
pub fn invert_binary_params(pis: &[f64], explicit: usize) -> Vec<f64> {
    debug_assert!(explicit == pis.len() || explicit == pis.len() + 1);
    let mut out = Vec::with_capacity(explicit);
    let mut remainder = 1.0f64;
    for &pi in pis {
        out.push(pi * remainder);
        remainder *= 1.0 - pi;
    }
    if explicit == pis.len() + 1 {
        out.push(remainder);
    }
    out
}

/// Bit parameters for every clause of a theory, the mutable state of EM.
/// Entry `[i][k-1]` is the probability that bit `k` of a grounding of
/// clause `i` is 1.
#[derive(Clone, PartialEq, Debug)]
pub struct ParamTable {
    bits: Vec<Vec<f64>>,
    explicit: Vec<usize>,
}

impl ParamTable {
    pub fn from_theory(theory: &Theory) -> ParamTable {
        let mut bits = Vec::with_capacity(theory.clauses.len());
        let mut explicit = Vec::with_capacity(theory.clauses.len());
        for clause in &theory.clauses {
            let annotations: Vec<f64> = clause.head.iter().map(|(_, p)| *p).collect();
            let (pis, saturated) = binary_params(&annotations);
            if saturated {
                log::warn!("clause {} has saturated bit parameters", clause.id);
            }
            bits.push(pis);
            explicit.push(clause.head.len());
        }
        ParamTable { bits, explicit }
    }

    pub fn num_clauses(&self) -> usize {
        self.bits.len()
    }

    /// Number of bit variables per grounding of the clause.
    pub fn bit_count(&self, clause: usize) -> usize {
        self.bits[clause].len()
    }

    /// Number of head alternatives of the clause, null included.
    pub fn alternatives(&self, clause: usize) -> usize {
        self.bits[clause].len() + 1
    }

    /// `P(bit k = 1)` for clause `clause`; `k` is 1-based.
    pub fn pi(&self, clause: usize, k: usize) -> f64 {
        self.bits[clause][k - 1]
    }

    pub fn set_pi(&mut self, clause: usize, k: usize, value: f64) {
        self.bits[clause][k - 1] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, pis)| {
            pis.iter().enumerate().map(move |(k, &pi)| (i, k + 1, pi))
        })
    }

    /// Write the parameters back as head annotations on a copy of the
    /// theory whose structure produced this table.
    pub fn to_annotations(&self, theory: &Theory) -> Theory {
        let mut updated = theory.clone();
        for (clause, pis) in updated.clauses.iter_mut().zip(self.bits.iter()) {
            let anns = invert_binary_params(pis, clause.head.len());
            for ((_, p), ann) in clause.head.iter_mut().zip(anns) {
                *p = ann;
            }
        }
        updated
    }

    pub fn max_abs_diff(&self, other: &ParamTable) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.bits.iter().zip(other.bits.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }
}

/// Expected-count table with the same shape as a [`ParamTable`]: for every
/// clause and bit, the accumulated mass of the bit being 0 and 1. Also used
/// as the cross-query count accumulator, merging is plain addition.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Counts {
    pub e0: Vec<Vec<f64>>,
    pub e1: Vec<Vec<f64>>,
}

impl Counts {
    pub fn zeros_like(params: &ParamTable) -> Counts {
        Counts {
            e0: params.bits.iter().map(|b| vec![0.0; b.len()]).collect(),
            e1: params.bits.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add(&mut self, clause: usize, k: usize, e0: f64, e1: f64) {
        self.e0[clause][k - 1] += e0;
        self.e1[clause][k - 1] += e1;
    }

    pub fn get(&self, clause: usize, k: usize) -> (f64, f64) {
        (self.e0[clause][k - 1], self.e1[clause][k - 1])
    }

    pub fn merge(&mut self, other: &Counts) {
        for (a, b) in self.e0.iter_mut().zip(other.e0.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
        for (a, b) in self.e1.iter_mut().zip(other.e1.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }
}

pub(crate) fn clause_annotations(clause: &Clause) -> Vec<f64> {
    clause.head.iter().map(|(_, p)| *p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_heads_with_null() {
        // masses down the bit chain must reproduce the annotations:
        // 0.6, 0.4*0.75 = 0.3, 0.4*0.25 = 0.1
        let (pis, saturated) = binary_params(&[0.6, 0.3]);
        assert!(!saturated);
        assert_eq!(pis.len(), 2);
        assert_relative_eq!(pis[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(pis[1], 0.75, max_relative = 1e-12);
        assert_relative_eq!(pis[0], 0.6);
        assert_relative_eq!((1.0 - pis[0]) * pis[1], 0.3, max_relative = 1e-12);
        assert_relative_eq!((1.0 - pis[0]) * (1.0 - pis[1]), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn single_head_with_null() {
        let (pis, _) = binary_params(&[0.7]);
        assert_eq!(pis, vec![0.7]);
    }

    #[test]
    fn deterministic_clause_has_no_bits() {
        let (pis, saturated) = binary_params(&[1.0]);
        assert!(pis.is_empty());
        assert!(!saturated);
    }

    #[test]
    fn saturated_remainder_flags() {
        let (pis, saturated) = binary_params(&[1.0, 0.0]);
        assert_eq!(pis, vec![1.0, 0.0]);
        assert!(saturated);
    }

    #[test]
    fn inversion_round_trips() {
        let pis = vec![0.6, 0.75];
        let anns = invert_binary_params(&pis, 2);
        assert_relative_eq!(anns[0], 0.6, max_relative = 1e-12);
        assert_relative_eq!(anns[1], 0.3, max_relative = 1e-12);
    }

    #[test]
    fn inversion_without_null_takes_remainder() {
        let (pis, _) = binary_params(&[0.5, 0.5]);
        assert_eq!(pis.len(), 1);
        let anns = invert_binary_params(&pis, 2);
        assert_relative_eq!(anns[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(anns[1], 0.5, max_relative = 1e-12);
    }
}
