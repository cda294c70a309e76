//! Scoring of test examples and the ranking metrics: ROC and
//! precision-recall curves, their areas, the skew-normalized PR area, and a
//! cross-validation driver.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::em::EmSettings;
use crate::infer::WorldModel;
use crate::logic::{Atom, MegaExample, ModeDeclaration, PredSet, Term, Theory};
use crate::search::{slipcover, SearchError, SearchParams};

#[derive(Clone, PartialEq, Debug)]
pub struct ScoredExample {
    pub query: Atom,
    pub positive: bool,
    pub score: f64,
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("need at least one positive and one negative example")]
    DegenerateClasses,
    #[error("need at least one positive example")]
    NoPositives,
    #[error("skew {0} outside (0,1)")]
    BadSkew(f64),
}

/// Score every target ground atom of one world with the theory. Positives
/// are the world's facts; negatives are all other ground instantiations of
/// the target predicates over the world's constants, plus the explicit
/// negatives. The query's own fact is hidden from its derivation.
pub fn score_examples(
    theory: &Theory,
    world: &MegaExample,
    targets: &PredSet,
    settings: &EmSettings,
) -> Vec<ScoredExample> {
    let model = WorldModel::new(theory, world, settings.mode);
    let constants: Vec<Term> = world
        .constants()
        .into_iter()
        .map(Term::Const)
        .collect();
    let mut out = Vec::new();
    for pred in targets {
        let positives: BTreeSet<Atom> = world.facts_of(pred).cloned().collect();
        let mut candidates: BTreeSet<Atom> = positives.clone();
        candidates.extend(instantiations(pred, &constants));
        candidates.extend(
            world
                .negatives
                .iter()
                .filter(|a| &a.pred() == pred)
                .cloned(),
        );
        for atom in candidates {
            let diagram =
                model.query_diagram(&atom, settings.depth_bound, &settings.closed_world, true);
            out.push(ScoredExample {
                positive: positives.contains(&atom),
                score: diagram.probability(&model.params_template),
                query: atom,
            });
        }
    }
    out
}

fn instantiations(pred: &crate::logic::Pred, constants: &[Term]) -> Vec<Atom> {
    if pred.arity == 0 {
        return vec![Atom::new(pred.name.clone(), vec![])];
    }
    if constants.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; pred.arity];
    loop {
        out.push(Atom::new(
            pred.name.clone(),
            idx.iter().map(|&i| constants[i].clone()).collect(),
        ));
        let mut carry = idx.len();
        while carry > 0 {
            idx[carry - 1] += 1;
            if idx[carry - 1] < constants.len() {
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

/// Operating points of a descending-score sweep with tied scores collapsed
/// into one threshold group: cumulative (true positives, false positives).
fn operating_points(examples: &[ScoredExample]) -> Vec<(f64, f64)> {
    let mut scored: Vec<(f64, bool)> = examples.iter().map(|e| (e.score, e.positive)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0f64, 0.0f64);
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((tp, fp));
    }
    points
}

/// ROC area and curve by trapezoidal sweep; tied scores are one group, so
/// the area equals the pair-counting statistic with half credit for ties.
pub fn aucroc(examples: &[ScoredExample]) -> Result<(f64, Vec<CurvePoint>), MetricsError> {
    let p = examples.iter().filter(|e| e.positive).count() as f64;
    let n = examples.len() as f64 - p;
    if p == 0.0 || n == 0.0 {
        return Err(MetricsError::DegenerateClasses);
    }
    let points: Vec<CurvePoint> = operating_points(examples)
        .into_iter()
        .map(|(tp, fp)| CurvePoint { x: fp / n, y: tp / p })
        .collect();
    let mut area = 0.0;
    for w in points.windows(2) {
        area += (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0;
    }
    Ok((area, points))
}

/// Precision-recall area with the non-linear interpolation between
/// operating points: between two points the false positives grow linearly
/// in the true positives, and the area under the resulting precision curve
/// has a closed form per segment.
pub fn aucpr(examples: &[ScoredExample]) -> Result<(f64, Vec<CurvePoint>), MetricsError> {
    let p = examples.iter().filter(|e| e.positive).count() as f64;
    if p == 0.0 {
        return Err(MetricsError::NoPositives);
    }
    let points = operating_points(examples);
    let mut area = 0.0;
    let mut curve: Vec<CurvePoint> = Vec::new();
    for w in points.windows(2) {
        let (tp_a, fp_a) = w[0];
        let (tp_b, fp_b) = w[1];
        let a = tp_b - tp_a;
        if a == 0.0 {
            continue;
        }
        let d = fp_b - fp_a;
        let u = tp_a + fp_a;
        let v = a + d;
        // area of (1/P) * integral over t in [0,1] of (tp_a + a t) / (u + v t) * a dt
        let segment = if u == 0.0 {
            // from the origin: constant precision a / v
            (a / p) * (a / v)
        } else if v == 0.0 {
            (a / p) * (tp_a + a / 2.0) / u
        } else {
            (a / p) * (a / v + (tp_a - a * u / v) * ((u + v) / u).ln() / v)
        };
        area += segment;

        if curve.is_empty() {
            let first_precision = if u == 0.0 { a / v } else { tp_a / u };
            curve.push(CurvePoint { x: 0.0, y: first_precision });
        }
        let steps = a as usize;
        for t in 1..=steps {
            let tp = tp_a + t as f64;
            let fp = fp_a + d * t as f64 / a;
            curve.push(CurvePoint { x: tp / p, y: tp / (tp + fp) });
        }
    }
    Ok((area, curve))
}

/// Normalize a PR area by the minimum achievable area at the given skew
/// (share of positives): `min = 1 + (1-s) ln(1-s) / s`.
pub fn aucnpr(aucpr: f64, skew: f64) -> Result<f64, MetricsError> {
    if !(skew > 0.0 && skew < 1.0) {
        return Err(MetricsError::BadSkew(skew));
    }
    let min = min_aucpr(skew);
    Ok((aucpr - min) / (1.0 - min))
}

pub fn min_aucpr(skew: f64) -> f64 {
    1.0 + (1.0 - skew) * (1.0 - skew).ln() / skew
}

/// Curve points as CSV, header naming the curve type.
pub fn curve_csv(kind: &str, points: &[CurvePoint]) -> String {
    let mut out = format!("{kind}_x,{kind}_y\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.x, p.y));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub skipped: bool,
    pub positives: usize,
    pub negatives: usize,
    pub skew: Option<f64>,
    pub aucroc: Option<f64>,
    pub aucpr: Option<f64>,
    pub aucnpr: Option<f64>,
    pub theory: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricAggregate {
    pub mean_aucroc: f64,
    pub mean_aucpr: f64,
    pub mean_aucnpr: f64,
    pub stddev_aucroc: f64,
    pub stddev_aucpr: f64,
    pub stddev_aucnpr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PooledReport {
    pub skew: f64,
    pub aucroc: Option<f64>,
    pub aucpr: Option<f64>,
    pub aucnpr: Option<f64>,
    pub roc_curve: Vec<CurvePoint>,
    pub pr_curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub aggregate: Option<MetricAggregate>,
    pub pooled: Option<PooledReport>,
}

/// Train on all folds but one, test on the held-out fold, for every fold;
/// report per-fold areas, their mean and standard deviation, and the areas
/// of the curves pooled over every fold's test examples.
pub fn cross_validate(
    folds: &[Vec<MegaExample>],
    params: &SearchParams,
    bias: &[ModeDeclaration],
) -> Result<CvReport, SearchError> {
    if folds.len() < 2 {
        return Err(SearchError::InvalidParams("need at least 2 folds".into()));
    }
    let mut fold_reports = Vec::new();
    let mut pooled_examples: Vec<ScoredExample> = Vec::new();
    for (i, test_fold) in folds.iter().enumerate() {
        let train: Vec<MegaExample> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().cloned())
            .collect();
        let fold_params = SearchParams { seed: params.seed.wrapping_add(i as u64), ..params.clone() };
        let outcome = slipcover(&fold_params, &train, bias)?;
        let mut scored = Vec::new();
        for world in test_fold {
            scored.extend(score_examples(&outcome.theory, world, &params.targets, &params.em));
        }
        let positives = scored.iter().filter(|e| e.positive).count();
        let negatives = scored.len() - positives;
        pooled_examples.extend(scored.iter().cloned());
        if positives == 0 || negatives == 0 {
            log::warn!("fold {i} has a degenerate class split, skipping its metrics");
            fold_reports.push(FoldReport {
                fold: i,
                skipped: true,
                positives,
                negatives,
                skew: None,
                aucroc: None,
                aucpr: None,
                aucnpr: None,
                theory: outcome.theory.to_string(),
            });
            continue;
        }
        let skew = positives as f64 / scored.len() as f64;
        let (roc, _) = aucroc(&scored).expect("classes checked above");
        let (pr, _) = aucpr(&scored).expect("positives checked above");
        fold_reports.push(FoldReport {
            fold: i,
            skipped: false,
            positives,
            negatives,
            skew: Some(skew),
            aucroc: Some(roc),
            aucpr: Some(pr),
            aucnpr: Some(aucnpr(pr, skew).expect("skew in (0,1)")),
            theory: outcome.theory.to_string(),
        });
    }

    let rows: Vec<&FoldReport> = fold_reports.iter().filter(|r| !r.skipped).collect();
    let aggregate = if rows.is_empty() {
        None
    } else {
        let stats = |pick: fn(&FoldReport) -> f64| {
            let values: Vec<f64> = rows.iter().map(|r| pick(r)).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = if values.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
            } else {
                0.0
            };
            (mean, var.sqrt())
        };
        let (mean_aucroc, stddev_aucroc) = stats(|r| r.aucroc.unwrap());
        let (mean_aucpr, stddev_aucpr) = stats(|r| r.aucpr.unwrap());
        let (mean_aucnpr, stddev_aucnpr) = stats(|r| r.aucnpr.unwrap());
        Some(MetricAggregate {
            mean_aucroc,
            mean_aucpr,
            mean_aucnpr,
            stddev_aucroc,
            stddev_aucpr,
            stddev_aucnpr,
        })
    };

    let pos = pooled_examples.iter().filter(|e| e.positive).count();
    let neg = pooled_examples.len() - pos;
    let pooled = if pos > 0 && neg > 0 {
        let skew = pos as f64 / pooled_examples.len() as f64;
        let (roc, roc_curve) = aucroc(&pooled_examples).expect("classes checked");
        let (pr, pr_curve) = aucpr(&pooled_examples).expect("positives checked");
        Some(PooledReport {
            skew,
            aucroc: Some(roc),
            aucpr: Some(pr),
            aucnpr: Some(aucnpr(pr, skew).expect("skew in (0,1)")),
            roc_curve,
            pr_curve,
        })
    } else {
        None
    };

    Ok(CvReport { folds: fold_reports, aggregate, pooled })
}
