//! Exhaustive small-weight oracles over a detector error model.

use std::collections::HashMap;

use thiserror::Error;

use super::dem::DetectorErrorModel;
use super::DecodeResult;

/// Largest number of fault subsets the oracles are allowed to visit.
pub const ORACLE_BUDGET: f64 = 1e7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle would visit {needed:.3e} fault sets, budget is {budget:.0e}")]
    TooLarge { needed: f64, budget: f64 },
}

fn binomial_sum(m: usize, w: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for k in 0..=w.min(m) {
        total += c;
        c = c * (m - k) as f64 / (k + 1) as f64;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlResult {
    pub result: DecodeResult,
    /// No fault set of weight <= w_max explains the events.
    pub best_effort: bool,
}

/// Most likely fault set of at most `w_max` mechanisms reproducing `events`.
///
/// The last mechanism of each candidate set is found by signature lookup, so
/// the cost is that of enumerating sets of size `w_max - 1`.
pub fn decode_bounded_ml(dem: &DetectorErrorModel, events: &[bool], w_max: usize) -> Result<MlResult, OracleError> {
    let m = dem.mechanisms.len();
    let needed = binomial_sum(m, w_max.saturating_sub(1));
    if needed > ORACLE_BUDGET {
        return Err(OracleError::TooLarge { needed, budget: ORACLE_BUDGET });
    }
    let target: Vec<u32> = (0..events.len()).filter(|&k| events[k]).map(|k| k as u32).collect();
    if target.is_empty() {
        return Ok(MlResult { result: DecodeResult { predicted_flip: false, weight: 0.0 }, best_effort: false });
    }
    let llr: Vec<f64> = dem
        .mechanisms
        .iter()
        .map(|mech| ((1.0 - mech.probability) / mech.probability).ln())
        .collect();
    let mut by_sig: HashMap<&[u32], Vec<usize>> = HashMap::new();
    for (i, mech) in dem.mechanisms.iter().enumerate() {
        by_sig.entry(&mech.detectors).or_default().push(i);
    }

    let mut best: Option<(f64, bool)> = None;
    fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i] < b[j]) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j] < a[i] {
                out.push(b[j]);
                j += 1;
            } else {
                i += 1;
                j += 1;
            }
        }
        out
    }
    struct Ctx<'a> {
        dem: &'a DetectorErrorModel,
        llr: &'a [f64],
        by_sig: &'a HashMap<&'a [u32], Vec<usize>>,
    }
    fn search(
        ctx: &Ctx<'_>,
        start: usize,
        depth_left: usize,
        residual: &[u32],
        cost: f64,
        obs: bool,
        best: &mut Option<(f64, bool)>,
    ) {
        // close the set with one looked-up mechanism
        if let Some(list) = ctx.by_sig.get(residual) {
            for &i in list {
                if i >= start {
                    let c = cost + ctx.llr[i];
                    if best.map_or(true, |b| c < b.0) {
                        *best = Some((c, obs ^ ctx.dem.mechanisms[i].observable));
                    }
                }
            }
        }
        if depth_left <= 1 {
            return;
        }
        for i in start..ctx.dem.mechanisms.len() {
            let mech = &ctx.dem.mechanisms[i];
            let next = sym_diff(residual, &mech.detectors);
            search(ctx, i + 1, depth_left - 1, &next, cost + ctx.llr[i], obs ^ mech.observable, best);
        }
    }
    let ctx = Ctx { dem, llr: &llr, by_sig: &by_sig };
    if w_max > 0 {
        search(&ctx, 0, w_max, &target, 0.0, false, &mut best);
    }
    Ok(match best {
        Some((weight, flip)) => MlResult { result: DecodeResult { predicted_flip: flip, weight }, best_effort: false },
        None => MlResult { result: DecodeResult { predicted_flip: false, weight: f64::INFINITY }, best_effort: true },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub probability: Vec<f64>,
    /// Upper bound on the probability mass left out by truncation, per
    /// detector.
    pub truncation: Vec<f64>,
}

impl Marginals {
    pub fn max_truncation(&self) -> f64 {
        self.truncation.iter().copied().fold(0.0, f64::max)
    }
}

/// Firing probability of each detector, summing the odd-parity fault sets of
/// at most `w_max` mechanisms among those touching the detector.
pub fn oracle_detector_marginals(dem: &DetectorErrorModel, w_max: usize) -> Result<Marginals, OracleError> {
    let mut touching: Vec<Vec<f64>> = vec![Vec::new(); dem.detector_count];
    for mech in &dem.mechanisms {
        for &d in &mech.detectors {
            touching[d as usize].push(mech.probability);
        }
    }
    let needed: f64 = touching.iter().map(|t| binomial_sum(t.len(), w_max)).sum();
    if needed > ORACLE_BUDGET {
        return Err(OracleError::TooLarge { needed, budget: ORACLE_BUDGET });
    }
    let mut probability = Vec::with_capacity(dem.detector_count);
    let mut truncation = Vec::with_capacity(dem.detector_count);
    for ps in &touching {
        let none: f64 = ps.iter().map(|p| 1.0 - p).product();
        let ratio: Vec<f64> = ps.iter().map(|p| p / (1.0 - p)).collect();
        // visit every subset of size <= w_max once
        let mut odd = 0.0;
        let mut covered = 0.0;
        fn walk(ratio: &[f64], start: usize, size: usize, w_max: usize, weight: f64, odd: &mut f64, covered: &mut f64) {
            *covered += weight;
            if size % 2 == 1 {
                *odd += weight;
            }
            if size == w_max {
                return;
            }
            for i in start..ratio.len() {
                walk(ratio, i + 1, size + 1, w_max, weight * ratio[i], odd, covered);
            }
        }
        walk(&ratio, 0, 0, w_max, none, &mut odd, &mut covered);
        probability.push(odd);
        truncation.push((1.0 - covered).max(0.0));
    }
    Ok(Marginals { probability, truncation })
}

/// Exact marginals `(1 - prod(1 - 2p)) / 2`, for cross-checking.
pub fn exact_detector_marginals(dem: &DetectorErrorModel) -> Vec<f64> {
    let mut prod = vec![1.0; dem.detector_count];
    for mech in &dem.mechanisms {
        for &d in &mech.detectors {
            prod[d as usize] *= 1.0 - 2.0 * mech.probability;
        }
    }
    prod.into_iter().map(|x| (1.0 - x) / 2.0).collect()
}
