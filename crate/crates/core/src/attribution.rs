//! Shapley-value decomposition of campaign impact across actors.
//!
//! Exact mode enumerates all coalitions (feasible up to 12 actors); the Monte
//! Carlo estimator samples uniform permutations and reports a standard error
//! per actor. Coalition values are memoized by bitmask either way, and
//! `attribute_campaign` evaluates coalitions by silencing non-members (rate
//! zeroed) in an otherwise identical deterministic run, so contributions
//! reflect actor structure rather than simulation noise.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{run_campaign, CampaignError, CampaignPlan};
use crate::graph::Graph;
use crate::objective::Objective;
use crate::opinion::{OpinionState, ShiftFunction};
use crate::rng::{self, tag};

/// Exact enumeration is 2^n coalition evaluations; beyond this use the
/// sampling estimator.
pub const MAX_EXACT_ACTORS: usize = 12;
const MAX_MASK_ACTORS: usize = 64;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("actor set is empty")]
    EmptyActorSet,
    #[error("{n} actors exceed the exact-mode cap of {max}", max = MAX_EXACT_ACTORS)]
    TooManyActorsExact { n: usize },
    #[error("{n} actors exceed the sampling cap of {max}", max = MAX_MASK_ACTORS)]
    TooManyActors { n: usize },
    #[error("samples must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Campaign(#[from] CampaignError),
}

/// Exact Shapley values of `n` actors under the coalition evaluator.
///
/// c_i = sum over S not containing i of |S|! (n-|S|-1)! / n! * [e(S+i) - e(S)],
/// computed by full enumeration with each coalition evaluated exactly once.
pub fn shapley_exact<F>(n: usize, mut value: F) -> Result<Vec<f64>, AttributionError>
where
    F: FnMut(&[usize]) -> f64,
{
    if n == 0 {
        return Err(AttributionError::EmptyActorSet);
    }
    if n > MAX_EXACT_ACTORS {
        return Err(AttributionError::TooManyActorsExact { n });
    }
    let size = 1usize << n;
    let mut values = vec![0.0; size];
    let mut members = Vec::with_capacity(n);
    for (mask, slot) in values.iter_mut().enumerate() {
        members.clear();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                members.push(i);
            }
        }
        *slot = value(&members);
    }

    let mut fact = vec![1.0_f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight = |s: usize| fact[s] * fact[n - s - 1] / fact[n];

    let mut shapley = vec![0.0; n];
    for mask in 0..size {
        let s = (mask as u64).count_ones() as usize;
        for (i, contribution) in shapley.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *contribution += weight(s) * (values[mask | 1 << i] - values[mask]);
            }
        }
    }
    Ok(shapley)
}

/// Monte Carlo Shapley: average marginal contribution over sampled uniform
/// permutations. Returns per-actor (estimate, standard error). Coalition
/// values are cached across samples.
pub fn shapley_mc<F>(
    n: usize,
    mut value: F,
    samples: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), AttributionError>
where
    F: FnMut(&[usize]) -> f64,
{
    if n == 0 {
        return Err(AttributionError::EmptyActorSet);
    }
    if n > MAX_MASK_ACTORS {
        return Err(AttributionError::TooManyActors { n });
    }
    if samples == 0 {
        return Err(AttributionError::NoSamples);
    }
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut members = Vec::with_capacity(n);
    let mut eval_mask = move |mask: u64, value: &mut F, members: &mut Vec<usize>| -> f64 {
        if let Some(&v) = cache.get(&mask) {
            return v;
        }
        members.clear();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                members.push(i);
            }
        }
        let v = value(members);
        cache.insert(mask, v);
        v
    };

    let mut rng = rng::stream(seed, &[tag::SHAPLEY]);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        perm.shuffle(&mut rng);
        let mut mask = 0u64;
        let mut prev = eval_mask(mask, &mut value, &mut members);
        for &actor in &perm {
            mask |= 1 << actor;
            let cur = eval_mask(mask, &mut value, &mut members);
            let marginal = cur - prev;
            sum[actor] += marginal;
            sum_sq[actor] += marginal * marginal;
            prev = cur;
        }
    }
    let m = samples as f64;
    let mut est = vec![0.0; n];
    let mut err = vec![0.0; n];
    for i in 0..n {
        est[i] = sum[i] / m;
        if samples > 1 {
            let var = (sum_sq[i] - sum[i] * sum[i] / m) / (m - 1.0);
            err[i] = (var.max(0.0) / m).sqrt();
        }
    }
    Ok((est, err))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionMode {
    Exact,
    Mc,
}

/// Per-actor contributions to a campaign outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionReport {
    pub actors: Vec<usize>,
    pub shapley: Vec<f64>,
    pub stderr: Vec<f64>,
    /// e(all actors) - e(no actors); exact-mode contributions sum to this.
    pub lift: f64,
}

/// Shapley attribution of each campaign agent's contribution to the final
/// objective value. A coalition runs the same campaign with every non-member
/// agent's rate set to zero; e(empty) is the uncontrolled run, so values sum
/// to the campaign's lift rather than to the raw objective.
#[allow(clippy::too_many_arguments)]
pub fn attribute_campaign(
    g: &Graph,
    theta0: &OpinionState,
    plan: &CampaignPlan,
    shift: &ShiftFunction,
    objective: Objective,
    t_end: f64,
    h: f64,
    mode: AttributionMode,
    samples: usize,
    seed: u64,
) -> Result<AttributionReport, AttributionError> {
    plan.validate(g.node_count()).map_err(AttributionError::Campaign)?;
    let n = plan.agents.len();
    if n == 0 {
        return Err(AttributionError::EmptyActorSet);
    }
    let mut failure: Option<CampaignError> = None;
    let mut coalition_value = |members: &[usize]| -> f64 {
        let mut sub = plan.clone();
        let keep: std::collections::HashSet<usize> = members.iter().copied().collect();
        for (idx, agent) in sub.agents.iter_mut().enumerate() {
            if !keep.contains(&idx) {
                agent.rate = 0.0;
            }
        }
        match run_campaign(g, theta0, &sub, shift, objective, t_end, h) {
            Ok((_, value)) => value,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        }
    };

    let (shapley, stderr) = match mode {
        AttributionMode::Exact => {
            let values = shapley_exact(n, &mut coalition_value)?;
            let zeros = vec![0.0; n];
            (values, zeros)
        }
        AttributionMode::Mc => shapley_mc(n, &mut coalition_value, samples, seed)?,
    };
    if let Some(e) = failure {
        return Err(AttributionError::Campaign(e));
    }
    // contributions telescope to e(N) - e(empty) in both modes
    let lift = shapley.iter().sum();
    Ok(AttributionReport { actors: (0..n).collect(), shapley, stderr, lift })
}
