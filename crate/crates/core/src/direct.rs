//! DIRECT (dividing rectangles) maximization on the unit box, and the greedy
//! batch builder that runs it once per candidate realization.
//!
//! Rectangles are hyper-rectangles whose sides are `3^-k`; each keeps the
//! objective value at its center. Every iteration picks the potentially
//! optimal rectangles (those on the upper-right convex hull of
//! `(size, value)` that could beat the incumbent by `ε|f*|`) and trisects
//! them along their longest sides.

use rayon::prelude::*;

use crate::acquisition::{BatchModel, BatchScorer};
use crate::error::{Error, Result};

/// Relative slack in the potentially-optimal test.
pub const EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    pub center: Vec<f64>,
    /// Trisection count per dimension; the side along `i` is `3^-levels[i]`.
    pub levels: Vec<u32>,
    pub value: f64,
}

impl Rectangle {
    pub fn side_lengths(&self) -> Vec<f64> {
        self.levels.iter().map(|&k| 3f64.powi(-(k as i32))).collect()
    }

    /// Half the diagonal.
    pub fn size(&self) -> f64 {
        0.5 * self.side_lengths().iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Result of one DIRECT run.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximize `objective` over `[0,1]^d` with at most `max_evals` evaluations.
///
/// A larger budget only ever extends the sequence of evaluated points: an
/// iteration is run only if all of its evaluations fit.
pub fn direct_maximize<F>(objective: F, d: usize, max_evals: usize) -> Result<DirectResult>
where
    F: FnMut(&[f64]) -> f64,
{
    direct_maximize_with(objective, d, max_evals, |_| {})
}

/// [`direct_maximize`] with a hook called on every evaluated point.
pub fn direct_maximize_with<F, H>(mut objective: F, d: usize, max_evals: usize, mut on_eval: H) -> Result<DirectResult>
where
    F: FnMut(&[f64]) -> f64,
    H: FnMut(&[f64]),
{
    if d == 0 {
        return Err(Error::InvalidParameter("DIRECT needs d ≥ 1".into()));
    }
    if max_evals == 0 {
        return Err(Error::InvalidParameter("DIRECT needs max_evals ≥ 1".into()));
    }
    let mut eval = |x: &[f64]| -> Result<f64> {
        on_eval(x);
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective { x: x.to_vec(), value: v })
        }
    };

    let center = vec![0.5; d];
    let first = eval(&center)?;
    let mut rects = vec![Rectangle { center, levels: vec![0; d], value: first }];
    let mut best = 0usize;
    let mut evals = 1usize;

    loop {
        let chosen = potentially_optimal(&rects, rects[best].value);
        let cost: usize = chosen.iter().map(|&i| 2 * longest_dims(&rects[i]).len()).sum();
        if chosen.is_empty() || evals + cost > max_evals {
            break;
        }
        for i in chosen {
            let parent = rects[i].clone();
            let dims = longest_dims(&parent);
            let delta = 3f64.powi(-(parent.levels[dims[0]] as i32 + 1));
            // evaluate both neighbours along every longest side
            let mut probes = Vec::with_capacity(dims.len());
            for &k in &dims {
                let mut lo = parent.center.clone();
                lo[k] -= delta;
                let mut hi = parent.center.clone();
                hi[k] += delta;
                let (vl, vh) = (eval(&lo)?, eval(&hi)?);
                evals += 2;
                probes.push((k, lo, vl, hi, vh));
            }
            // split the best dimensions first so they end up in the largest pieces
            probes.sort_by(|a, b| a.2.max(a.4).total_cmp(&b.2.max(b.4)).reverse().then(a.0.cmp(&b.0)));
            let mut levels = parent.levels.clone();
            for (k, lo, vl, hi, vh) in probes {
                levels[k] += 1;
                rects.push(Rectangle { center: lo, levels: levels.clone(), value: vl });
                rects.push(Rectangle { center: hi, levels: levels.clone(), value: vh });
            }
            rects[i].levels = levels;
        }
        for (j, r) in rects.iter().enumerate() {
            if r.value > rects[best].value {
                best = j;
            }
        }
    }
    Ok(DirectResult { x: rects[best].center.clone(), value: rects[best].value, evaluations: evals })
}

fn longest_dims(r: &Rectangle) -> Vec<usize> {
    let min = *r.levels.iter().min().expect("d ≥ 1");
    (0..r.levels.len()).filter(|&i| r.levels[i] == min).collect()
}

/// Indices of potentially optimal rectangles, in ascending index order.
fn potentially_optimal(rects: &[Rectangle], fmax: f64) -> Vec<usize> {
    // best rectangle (lowest index on ties) for each distinct size
    let mut groups: Vec<(f64, usize)> = Vec::new();
    let mut sizes: Vec<(Vec<u32>, f64, usize)> = rects.iter().enumerate().map(|(i, r)| (level_key(r), r.size(), i)).collect();
    sizes.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut i = 0;
    while i < sizes.len() {
        let key = &sizes[i].0;
        let mut pick = sizes[i].2;
        let mut j = i + 1;
        while j < sizes.len() && &sizes[j].0 == key {
            if rects[sizes[j].2].value > rects[pick].value {
                pick = sizes[j].2;
            }
            j += 1;
        }
        groups.push((sizes[i].1, pick));
        i = j;
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // upper hull of (size, value) from the best rectangle towards larger sizes
    let pts: Vec<(f64, f64, usize)> = groups.iter().map(|&(s, i)| (s, rects[i].value, i)).collect();
    let start = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut hull: Vec<(f64, f64, usize)> = Vec::new();
    for &p in &pts[start..] {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b if it lies on or below the chord a–p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    // ε test: the hull point must be able to improve on fmax by ε|fmax|
    let mut chosen = Vec::new();
    for (k, &(s, v, idx)) in hull.iter().enumerate() {
        let keep = match hull.get(k + 1) {
            None => true,
            Some(&(s2, v2, _)) => {
                // the steepest admissible rate of change is minus the slope to the right
                let slope = (v2 - v) / (s2 - s);
                v - slope * s >= fmax + EPSILON * fmax.abs()
            }
        };
        if keep || k + 1 == hull.len() {
            chosen.push(idx);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Sizes depend only on the sorted levels, so these compare exactly.
fn level_key(r: &Rectangle) -> Vec<u32> {
    let mut l = r.levels.clone();
    l.sort_unstable();
    l
}

/// A batch of `(x, arm)` pairs with its acquisition score.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchProposal<A> {
    pub elements: Vec<(Vec<f64>, A)>,
    pub score: f64,
    /// Partial score after each greedy addition.
    pub partial_scores: Vec<f64>,
    pub evaluations: usize,
}

/// Greedily build a batch of `b` elements. `arms(j, chosen)` lists the
/// candidate arms for slot `j` given the elements already chosen; each is
/// swept with one DIRECT run of
/// `max_evals_per_dim · d` evaluations, and the best `(x, arm)` is kept.
pub fn propose_batch<M, F>(model: &M, arms: F, b: usize, max_evals_per_dim: usize) -> Result<BatchProposal<M::Arm>>
where
    M: BatchModel,
    F: Fn(usize, &[(Vec<f64>, M::Arm)]) -> Vec<M::Arm>,
{
    if b == 0 {
        return Err(Error::InvalidParameter("batch size must be ≥ 1".into()));
    }
    let d = model.dim();
    let budget = max_evals_per_dim * d;
    let mut elements: Vec<(Vec<f64>, M::Arm)> = Vec::with_capacity(b);
    let mut partial_scores = Vec::with_capacity(b);
    let mut evaluations = 0;
    for slot in 0..b {
        let scorer = BatchScorer::new(model, &elements);
        let candidates = arms(slot, &elements);
        if candidates.is_empty() {
            return Err(Error::InvalidParameter(format!("no candidate arms for slot {slot}")));
        }
        let runs: Vec<Result<(DirectResult, M::Arm)>> = candidates
            .par_iter()
            .map(|&arm| {
                let mut failure = None;
                let res = direct_maximize(
                    |x| match scorer.score_with(x, arm) {
                        Ok(v) => v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    },
                    d,
                    budget,
                );
                match (res, failure) {
                    (Ok(r), _) => Ok((r, arm)),
                    (Err(_), Some(e)) => Err(e),
                    (Err(e), None) => Err(e),
                }
            })
            .collect();
        let mut best: Option<(DirectResult, M::Arm)> = None;
        for run in runs {
            let (r, arm) = run?;
            evaluations += r.evaluations;
            if best.as_ref().is_none_or(|(b, _)| r.value > b.value) {
                best = Some((r, arm));
            }
        }
        let (r, arm) = best.expect("at least one candidate");
        partial_scores.push(r.value);
        elements.push((r.x, arm));
    }
    let score = *partial_scores.last().expect("b ≥ 1");
    Ok(BatchProposal { elements, score, partial_scores, evaluations })
}
