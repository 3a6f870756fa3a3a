//! Continuous opinion dynamics on the interaction graph.
//!
//! Node j's opinion follows
//! `d theta_j/dt = sum_i lambda_ij g(theta_i - theta_j) + sum_a lambda_a d_aj g(c_a(t) - theta_j)`
//! with a pluggable shift function g (linear or bounded confidence), stubborn
//! nodes whose derivative is masked to zero, and optional campaign agents.
//! Integration is classic RK4 with hard clamping of the state to [0, 1] after
//! each step; agent content and edge visibility are held constant within a
//! control interval and may be revised by a controller between intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{AgentPolicy, CampaignPlan};
use crate::graph::Graph;

/// Integration defaults shared by every caller that does not override them.
pub const DEFAULT_STEP: f64 = 0.01;
pub const SAMPLE_EVERY: usize = 10;
pub const CONTROL_INTERVAL: usize = 10;

#[derive(Debug, Error)]
pub enum OpinionError {
    #[error("opinion value {value} at node {node} outside [0, 1]")]
    ValueOutOfRange { node: usize, value: f64 },
    #[error("opinion vector has {got} entries, graph has {expected} nodes")]
    LengthMismatch { got: usize, expected: usize },
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("persuasion strength omega must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("confidence threshold epsilon must lie in (0, 1], got {0}")]
    EpsilonOutOfRange(f64),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("horizon must be nonnegative, got {0}")]
    NegativeHorizon(f64),
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("this operation needs a linear shift function")]
    RequiresLinearShift,
    #[error("free nodes {nodes:?} cannot be reached from any stubborn node")]
    UnanchoredNodes { nodes: Vec<usize> },
    #[error("plan contains nudging agents; use run_campaign, which supplies the objective")]
    PlanNeedsObjective,
    #[error(transparent)]
    Campaign(#[from] crate::campaign::CampaignError),
}

/// Opinions, one per node, each in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionState {
    values: Vec<f64>,
}

impl OpinionState {
    pub fn new(values: Vec<f64>) -> Result<Self, OpinionError> {
        for (node, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(OpinionError::ValueOutOfRange { node, value: v });
            }
        }
        Ok(OpinionState { values })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self, OpinionError> {
        Self::new(vec![value; n])
    }

    /// Uniform random opinions in [low, high), drawn from the (seed, THETA0)
    /// stream so every consumer of the same seed sees the same vector.
    pub fn random(n: usize, low: f64, high: f64, seed: u64) -> Result<Self, OpinionError> {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, &[crate::rng::tag::THETA0]);
        Self::new((0..n).map(|_| low + rng.gen::<f64>() * (high - low)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Opinion shift response g(x) to an observed opinion gap x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShiftFunction {
    /// g(x) = omega * x
    Linear { omega: f64 },
    /// g(x) = omega * x when |x| <= epsilon (inclusive), else 0
    Bounded { omega: f64, epsilon: f64 },
}

impl ShiftFunction {
    pub fn validate(&self) -> Result<(), OpinionError> {
        let omega = self.omega();
        if omega <= 0.0 {
            return Err(OpinionError::NonPositiveOmega(omega));
        }
        if let ShiftFunction::Bounded { epsilon, .. } = *self {
            if !(epsilon > 0.0 && epsilon <= 1.0) {
                return Err(OpinionError::EpsilonOutOfRange(epsilon));
            }
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        match *self {
            ShiftFunction::Linear { omega } => omega,
            ShiftFunction::Bounded { omega, .. } => omega,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ShiftFunction::Linear { omega } => omega * x,
            ShiftFunction::Bounded { omega, epsilon } => {
                if x.abs() <= epsilon {
                    omega * x
                } else {
                    0.0
                }
            }
        }
    }
}

/// Nodes with pinned opinions. They never update but still pull neighbors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StubbornSet {
    entries: Vec<(usize, f64)>,
}

impl StubbornSet {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self, OpinionError> {
        entries.sort_unstable_by_key(|&(n, _)| n);
        entries.dedup_by_key(|&mut (n, _)| n);
        for &(node, v) in &entries {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(OpinionError::ValueOutOfRange { node, value: v });
            }
        }
        Ok(StubbornSet { entries })
    }

    pub fn empty() -> Self {
        StubbornSet { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, n: usize) -> Result<(), OpinionError> {
        for &(node, _) in &self.entries {
            if node >= n {
                return Err(OpinionError::NodeOutOfRange { node, n });
            }
        }
        Ok(())
    }
}

/// Sampled opinion path: times strictly increasing from 0 to the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpinionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<OpinionState>,
}

impl OpinionTrajectory {
    pub fn final_state(&self) -> &OpinionState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// CSV with header `t,node_0,...,node_{n-1}`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 0..n {
            out.push_str(&format!(",node_{i}"));
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&t.to_string());
            for v in s.values() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Population mean and (population) variance of an opinion state.
pub fn opinion_statistics(state: &OpinionState) -> (f64, f64) {
    let n = state.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = state.values().iter().sum::<f64>() / n as f64;
    let var = state.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// A campaign agent resolved to a concrete forcing term for the integrator.
#[derive(Debug, Clone)]
pub(crate) struct AgentDrive {
    pub rate: f64,
    pub target_mask: Vec<bool>,
    pub content: f64,
    pub nudging: bool,
}

impl AgentDrive {
    pub(crate) fn from_plan(
        plan: &CampaignPlan,
        theta0: &OpinionState,
        n: usize,
    ) -> Vec<AgentDrive> {
        plan.agents
            .iter()
            .map(|agent| {
                let mut mask = vec![false; n];
                for &t in &agent.targets {
                    mask[t] = true;
                }
                let (content, nudging) = match agent.policy {
                    AgentPolicy::Constant(v) => (v, false),
                    AgentPolicy::Nudging => {
                        // starting content: clamp of the mean target opinion;
                        // the controller refines it before the first step
                        let (lo, hi) = plan.content_bounds;
                        let vals: Vec<f64> =
                            agent.targets.iter().map(|&t| theta0.values()[t]).collect();
                        let mean = if vals.is_empty() {
                            0.5
                        } else {
                            vals.iter().sum::<f64>() / vals.len() as f64
                        };
                        (mean.clamp(lo, hi), true)
                    }
                };
                AgentDrive { rate: agent.rate, target_mask: mask, content, nudging }
            })
            .collect()
    }
}

/// Step-loop RK4 integrator shared by the plain, campaign, and moderation
/// entry points. The controller runs before steps 0, c, 2c, ... and may
/// rewrite agent contents and the per-edge visibility scaling; both are held
/// constant within an interval, so identical controllers give bit-identical
/// trajectories.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_loop<C>(
    g: &Graph,
    theta0: &OpinionState,
    shift: &ShiftFunction,
    stubborn: &StubbornSet,
    agents: &mut Vec<AgentDrive>,
    edge_scale: &mut Vec<f64>,
    t_end: f64,
    h: f64,
    control_interval: usize,
    mut controller: C,
) -> Result<OpinionTrajectory, OpinionError>
where
    C: FnMut(usize, f64, &OpinionState, &mut Vec<AgentDrive>, &mut Vec<f64>),
{
    let n = g.node_count();
    shift.validate()?;
    stubborn.check(n)?;
    if theta0.len() != n {
        return Err(OpinionError::LengthMismatch { got: theta0.len(), expected: n });
    }
    if h <= 0.0 {
        return Err(OpinionError::NonPositiveStep(h));
    }
    if t_end < 0.0 {
        return Err(OpinionError::NegativeHorizon(t_end));
    }

    let mut theta = theta0.values().to_vec();
    let mut frozen = vec![false; n];
    for &(node, value) in stubborn.entries() {
        theta[node] = value;
        frozen[node] = true;
    }

    let steps = (t_end / h).ceil() as usize;
    let deriv = |theta: &[f64], agents: &[AgentDrive], edge_scale: &[f64], out: &mut [f64]| {
        for x in out.iter_mut() {
            *x = 0.0;
        }
        for (idx, e) in g.edges().iter().enumerate() {
            let w = edge_scale[idx] * e.rate;
            if w != 0.0 {
                out[e.dst] += w * shift.eval(theta[e.src] - theta[e.dst]);
            }
        }
        for a in agents {
            if a.rate == 0.0 {
                continue;
            }
            for (j, &targeted) in a.target_mask.iter().enumerate() {
                if targeted {
                    out[j] += a.rate * shift.eval(a.content - theta[j]);
                }
            }
        }
        for (j, &f) in frozen.iter().enumerate() {
            if f {
                out[j] = 0.0;
            }
        }
    };

    let state_of = |theta: &[f64]| OpinionState { values: theta.to_vec() };
    let mut trajectory = OpinionTrajectory { times: vec![0.0], states: vec![state_of(&theta)] };

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let mut t = 0.0;
    for step in 0..steps {
        if control_interval > 0 && step % control_interval == 0 {
            let snapshot = state_of(&theta);
            controller(step, t, &snapshot, agents, edge_scale);
        }
        let hs = h.min(t_end - t);
        deriv(&theta, agents, edge_scale, &mut k1);
        for j in 0..n {
            tmp[j] = theta[j] + 0.5 * hs * k1[j];
        }
        deriv(&tmp, agents, edge_scale, &mut k2);
        for j in 0..n {
            tmp[j] = theta[j] + 0.5 * hs * k2[j];
        }
        deriv(&tmp, agents, edge_scale, &mut k3);
        for j in 0..n {
            tmp[j] = theta[j] + hs * k3[j];
        }
        deriv(&tmp, agents, edge_scale, &mut k4);
        for j in 0..n {
            theta[j] += hs / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            theta[j] = theta[j].clamp(0.0, 1.0);
            if !theta[j].is_finite() {
                return Err(OpinionError::NonFiniteState { step });
            }
        }
        t += hs;
        if (step + 1) % SAMPLE_EVERY == 0 || step + 1 == steps {
            trajectory.times.push(t);
            trajectory.states.push(state_of(&theta));
        }
    }
    Ok(trajectory)
}

/// Integrate the opinion ODE over [0, t_end] with step h.
///
/// Constant-content agents from the plan are applied directly. Plans with
/// nudging agents are rejected here because closed-loop content selection
/// needs an objective; see `campaign::run_campaign`.
pub fn integrate(
    g: &Graph,
    theta0: &OpinionState,
    shift: &ShiftFunction,
    stubborn: &StubbornSet,
    agents: Option<&CampaignPlan>,
    t_end: f64,
    h: f64,
) -> Result<OpinionTrajectory, OpinionError> {
    let mut drives = match agents {
        Some(plan) => {
            plan.validate(g.node_count())?;
            if plan.agents.iter().any(|a| matches!(a.policy, AgentPolicy::Nudging)) {
                return Err(OpinionError::PlanNeedsObjective);
            }
            AgentDrive::from_plan(plan, theta0, g.node_count())
        }
        None => Vec::new(),
    };
    let mut edge_scale = vec![1.0; g.edge_count()];
    integrate_loop(
        g,
        theta0,
        shift,
        stubborn,
        &mut drives,
        &mut edge_scale,
        t_end,
        h,
        0,
        |_, _, _, _, _| {},
    )
}

/// Steady state of the linear dynamics with (stubborn value, agent forcing)
/// anchors substituted.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: OpinionState,
    /// True when no stubborn anchor exists and the value reported is the
    /// conserved weighted mean of the consensus subspace.
    pub degenerate: bool,
}

/// Anchor term attached to a node: an external source of opinion `content`
/// at rate `rate` (what a campaign agent contributes in Eq-style dynamics).
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeAnchor {
    pub node: usize,
    pub rate: f64,
    pub content: f64,
}

/// Solve the linear fixpoint with stubborn nodes and external anchors.
///
/// Nodes in closed components without any anchor settle at their component's
/// conserved mean; those fills are computed first and then enter the anchored
/// system as constants (the closed components converge on their own, so the
/// coupled limit is the solve against their limits). Returns the state and
/// the list of unanchored nodes.
pub(crate) fn linear_fixpoint(
    g: &Graph,
    theta0: &OpinionState,
    stubborn: &StubbornSet,
    anchors: &[NodeAnchor],
) -> Result<(OpinionState, Vec<usize>), OpinionError> {
    let n = g.node_count();
    if theta0.len() != n {
        return Err(OpinionError::LengthMismatch { got: theta0.len(), expected: n });
    }
    stubborn.check(n)?;
    let mut pinned: Vec<Option<f64>> = vec![None; n];
    for &(node, value) in stubborn.entries() {
        pinned[node] = Some(value);
    }
    let mut anchor_rate = vec![0.0; n];
    let mut anchor_flow = vec![0.0; n];
    for a in anchors {
        if a.node >= n {
            return Err(OpinionError::NodeOutOfRange { node: a.node, n });
        }
        anchor_rate[a.node] += a.rate;
        anchor_flow[a.node] += a.rate * a.content;
    }

    // anchored = reachable from a stubborn or externally forced node along
    // the direction of influence (edge i -> j lets i pull j)
    let mut anchored = vec![false; n];
    let mut queue: std::collections::VecDeque<usize> =
        (0..n).filter(|&v| pinned[v].is_some() || anchor_rate[v] > 0.0).collect();
    for &v in &queue {
        anchored[v] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &(v, rate, _) in g.out_neighbors(u) {
            if rate > 0.0 && !anchored[v] {
                anchored[v] = true;
                queue.push_back(v);
            }
        }
    }

    let mut result = theta0.values().to_vec();
    for (v, p) in pinned.iter().enumerate() {
        if let Some(val) = p {
            result[v] = *val;
        }
    }

    // unanchored nodes first: fill each closed component with its conserved
    // weighted mean so the anchored solve can treat them as constants
    let unanchored: Vec<usize> = (0..n).filter(|&v| !anchored[v]).collect();
    for comp in unanchored_components(g, &unanchored) {
        let value = conserved_mean(g, theta0, &comp);
        for &v in &comp {
            result[v] = value.clamp(0.0, 1.0);
        }
    }

    // solve for the anchored free nodes
    let free: Vec<usize> = (0..n).filter(|&v| anchored[v] && pinned[v].is_none()).collect();
    if !free.is_empty() {
        let index: std::collections::HashMap<usize, usize> =
            free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let m = free.len();
        let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut b = nalgebra::DVector::<f64>::zeros(m);
        for (row, &j) in free.iter().enumerate() {
            let mut diag = anchor_rate[j];
            b[row] += anchor_flow[j];
            for &(i, rate, _) in g.in_neighbors(j) {
                if rate == 0.0 {
                    continue;
                }
                diag += rate;
                match index.get(&i) {
                    Some(&col) => a[(row, col)] -= rate,
                    // stubborn value or the consensus fill of an unanchored
                    // in-neighbor, both already in `result`
                    None => b[row] += rate * result[i],
                }
            }
            a[(row, row)] += diag;
        }
        let solved = a.lu().solve(&b).ok_or(OpinionError::NonFiniteState { step: 0 })?;
        for (row, &j) in free.iter().enumerate() {
            result[j] = solved[row].clamp(0.0, 1.0);
        }
    }

    Ok((OpinionState { values: result }, unanchored))
}

/// Weakly connected components restricted to the given node set.
fn unanchored_components(g: &Graph, nodes: &[usize]) -> Vec<Vec<usize>> {
    let in_set: std::collections::HashSet<usize> = nodes.iter().copied().collect();
    let mut seen: std::collections::HashSet<usize> = std::collections::HashSet::new();
    let mut comps = Vec::new();
    for &start in nodes {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        seen.insert(start);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in g.sym_neighbors(u) {
                if in_set.contains(&v) && seen.insert(v) {
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Conserved weighted mean of the linear dynamics restricted to `comp`: the
/// left null vector w of the in-rate Laplacian gives d(w . theta)/dt = 0, so
/// any consensus settles at (w . theta0) / sum(w).
fn conserved_mean(g: &Graph, theta0: &OpinionState, comp: &[usize]) -> f64 {
    let m = comp.len();
    if m == 1 {
        return theta0.values()[comp[0]];
    }
    let index: std::collections::HashMap<usize, usize> =
        comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // L'[j][i] coefficients of d theta_j/dt = sum_i rate_ij (theta_i - theta_j);
    // w solves w^T L' = 0, i.e. (L'^T) w = 0
    let mut lt = nalgebra::DMatrix::<f64>::zeros(m, m);
    for &j in comp {
        let row = index[&j];
        for &(i, rate, _) in g.in_neighbors(j) {
            if let Some(&col) = index.get(&i) {
                // L' has -rate at (row j, col i) and +sum on the diagonal;
                // transpose: entry (i, j)
                lt[(col, row)] -= rate;
                lt[(row, row)] += rate;
            }
        }
    }
    let svd = lt.svd(true, true);
    let v_t = svd.v_t.expect("svd computed with vectors");
    let last = v_t.nrows() - 1;
    let mut w: Vec<f64> = (0..m).map(|c| v_t[(last, c)]).collect();
    let sum: f64 = w.iter().sum();
    if sum < 0.0 {
        for x in w.iter_mut() {
            *x = -*x;
        }
    }
    let total: f64 = w.iter().sum();
    if total.abs() < 1e-12 {
        // fall back to the plain mean when the null space is ambiguous
        return comp.iter().map(|&v| theta0.values()[v]).sum::<f64>() / m as f64;
    }
    comp.iter().zip(&w).map(|(&v, &wi)| wi * theta0.values()[v]).sum::<f64>() / total
}

/// Analytic steady state of the linear dynamics.
///
/// With stubborn anchors present, every free node must be reachable from one
/// of them along the direction of influence; otherwise the trapped nodes are
/// reported as an error. With no stubborn nodes at all the dynamics only
/// conserve a weighted mean, which is returned with `degenerate = true`.
pub fn steady_state_linear(
    g: &Graph,
    theta0: &OpinionState,
    stubborn: &StubbornSet,
    shift: &ShiftFunction,
) -> Result<SteadyState, OpinionError> {
    shift.validate()?;
    if !matches!(shift, ShiftFunction::Linear { .. }) {
        return Err(OpinionError::RequiresLinearShift);
    }
    let (state, unanchored) = linear_fixpoint(g, theta0, stubborn, &[])?;
    if stubborn.is_empty() {
        return Ok(SteadyState { state, degenerate: true });
    }
    if !unanchored.is_empty() {
        return Err(OpinionError::UnanchoredNodes { nodes: unanchored });
    }
    Ok(SteadyState { state, degenerate: false })
}
