//! Platform-side countermeasures: shadow-ban edge-visibility control over the
//! opinion dynamics (receding-horizon, one linear step solve per control
//! interval) and Hawkes excitement damping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{hawkes_branching_ratio, simulate_hawkes_rng, DiffusionError};
use crate::graph::Graph;
use crate::objective::{Artifact, Objective, ObjectiveError};
use crate::opinion::{
    integrate_loop, OpinionError, OpinionState, OpinionTrajectory, ShiftFunction, StubbornSet,
    CONTROL_INTERVAL,
};
use crate::rng::{self, tag};
use crate::util::mean_stderr;

#[derive(Debug, Error)]
pub enum ModerationError {
    #[error("suppression budget must be nonnegative, got {0}")]
    NegativeBudget(f64),
    #[error("damping factor {0} outside [0, 1]")]
    DampOutOfRange(f64),
    #[error("replications must be at least 1")]
    NoReplications,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Opinion(#[from] OpinionError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

/// Per-edge visibility scaling d in [0, 1], aligned with `Graph::edges()`.
/// Total suppression sum(1 - d) never exceeds the budget it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPolicy {
    pub d: Vec<f64>,
}

impl VisibilityPolicy {
    pub fn full_visibility(edge_count: usize) -> Self {
        VisibilityPolicy { d: vec![1.0; edge_count] }
    }

    pub fn suppression_used(&self) -> f64 {
        self.d.iter().map(|&x| 1.0 - x).sum()
    }

    /// CSV `src,dst,d` rows in edge order.
    pub fn to_csv(&self, g: &Graph) -> String {
        let mut out = String::from("src,dst,d\n");
        for (e, &d) in g.edges().iter().zip(&self.d) {
            out.push_str(&format!("{},{},{}\n", e.src, e.dst, d));
        }
        out
    }
}

/// Per-edge contribution of edge (i, j) to the objective's instantaneous rate
/// of change: s_ij = (de/d theta_j) * lambda_ij * g(theta_i - theta_j).
fn edge_contributions(
    g: &Graph,
    theta: &OpinionState,
    shift: &ShiftFunction,
    weights: &[f64],
) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| {
            weights[e.dst] * e.rate * shift.eval(theta.values()[e.src] - theta.values()[e.dst])
        })
        .collect()
}

/// One-step optimal visibility policy: de/dt is linear in each d_ij, so the
/// best feasible point suppresses the most negative contributions first,
/// fractionally on the marginal edge, and never touches edges with s_ij >= 0.
pub fn shadowban_step(
    g: &Graph,
    theta: &OpinionState,
    shift: &ShiftFunction,
    objective: Objective,
    budget: f64,
) -> Result<VisibilityPolicy, ModerationError> {
    if budget < 0.0 {
        return Err(ModerationError::NegativeBudget(budget));
    }
    let weights = objective.gradient_weights(theta)?;
    let s = edge_contributions(g, theta, shift, &weights);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap().then(a.cmp(&b)));
    let mut d = vec![1.0; s.len()];
    let mut remaining = budget;
    for &e in &order {
        if s[e] >= 0.0 || remaining <= 0.0 {
            break;
        }
        let cut = remaining.min(1.0);
        d[e] = 1.0 - cut;
        remaining -= cut;
    }
    Ok(VisibilityPolicy { d })
}

/// A moderated closed-loop run: trajectory, final objective value, and the
/// policy applied over each control interval.
#[derive(Debug, Clone)]
pub struct ModeratedRun {
    pub trajectory: OpinionTrajectory,
    pub objective_value: f64,
    /// (interval start time, policy) per control interval.
    pub policies: Vec<(f64, VisibilityPolicy)>,
}

/// Integrate the opinion dynamics with the shadow-ban policy re-solved each
/// control interval; the dynamics use d_ij * lambda_ij. A zero budget leaves
/// every edge fully visible and reproduces the unmoderated run bit for bit.
pub fn run_moderated(
    g: &Graph,
    theta0: &OpinionState,
    shift: &ShiftFunction,
    objective: Objective,
    budget: f64,
    t_end: f64,
    h: f64,
) -> Result<ModeratedRun, ModerationError> {
    if budget < 0.0 {
        return Err(ModerationError::NegativeBudget(budget));
    }
    objective.gradient_weights(theta0)?;
    let mut agents = Vec::new();
    let mut edge_scale = vec![1.0; g.edge_count()];
    let mut policies: Vec<(f64, VisibilityPolicy)> = Vec::new();
    let shift_copy = *shift;
    let mut controller_err: Option<ModerationError> = None;
    let trajectory = integrate_loop(
        g,
        theta0,
        shift,
        &StubbornSet::empty(),
        &mut agents,
        &mut edge_scale,
        t_end,
        h,
        CONTROL_INTERVAL,
        |_step, t, state, _agents, scale| {
            if controller_err.is_some() {
                return;
            }
            match shadowban_step(g, state, &shift_copy, objective, budget) {
                Ok(policy) => {
                    scale.copy_from_slice(&policy.d);
                    policies.push((t, policy));
                }
                Err(e) => controller_err = Some(e),
            }
        },
    )?;
    if let Some(e) = controller_err {
        return Err(e);
    }
    let objective_value = objective.evaluate(&Artifact::Trajectory(&trajectory))?;
    Ok(ModeratedRun { trajectory, objective_value, policies })
}

/// Paired Monte Carlo comparison of Hawkes event volume under the original
/// excitement alpha and under damp * alpha, with common random numbers
/// (replication r of both arms uses the same stream).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingReport {
    pub baseline_mean: f64,
    pub baseline_stderr: f64,
    pub damped_mean: f64,
    pub damped_stderr: f64,
    pub replications: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn hawkes_damping(
    g: &Graph,
    mu: f64,
    alpha: f64,
    beta_decay: f64,
    damp: f64,
    t_end: f64,
    replications: usize,
    seed: u64,
) -> Result<DampingReport, ModerationError> {
    if !(0.0..=1.0).contains(&damp) {
        return Err(ModerationError::DampOutOfRange(damp));
    }
    if replications == 0 {
        return Err(ModerationError::NoReplications);
    }
    // reject the baseline if unstable; the damped arm is then stable too
    if alpha > 0.0 {
        let ratio = hawkes_branching_ratio(g, alpha, beta_decay);
        if ratio >= 1.0 {
            return Err(ModerationError::Diffusion(DiffusionError::UnstableParameters { ratio }));
        }
    }
    let mut baseline = Vec::with_capacity(replications);
    let mut damped = Vec::with_capacity(replications);
    for r in 0..replications {
        let mut rng = rng::stream(seed, &[tag::DAMPING, r as u64]);
        let log = simulate_hawkes_rng(g, mu, alpha, beta_decay, t_end, &mut rng)?;
        baseline.push(log.events.len() as f64);
        let mut rng = rng::stream(seed, &[tag::DAMPING, r as u64]);
        let log = simulate_hawkes_rng(g, mu, damp * alpha, beta_decay, t_end, &mut rng)?;
        damped.push(log.events.len() as f64);
    }
    let (baseline_mean, baseline_stderr) = mean_stderr(&baseline);
    let (damped_mean, damped_stderr) = mean_stderr(&damped);
    Ok(DampingReport { baseline_mean, baseline_stderr, damped_mean, damped_stderr, replications })
}
