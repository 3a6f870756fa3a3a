//! Influence-campaign optimizers: viral seed selection (lazy greedy with the
//! submodular (1 - 1/e) guarantee, degree-discount heuristic) and sustained
//! opinion campaigns (constant-extreme targeting for linear dynamics, adaptive
//! nudging for bounded confidence), plus the closed-loop campaign runner.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::diffusion::{expected_spread, CascadeModel, DiffusionError};
use crate::graph::Graph;
use crate::objective::{Artifact, Objective, ObjectiveError, ObjectiveKind};
use crate::opinion::{
    integrate_loop, AgentDrive, NodeAnchor, OpinionError, OpinionState, OpinionTrajectory,
    ShiftFunction, StubbornSet, CONTROL_INTERVAL,
};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("budget {budget} exceeds capacity {capacity} (nodes x agents)")]
    BudgetExceedsCapacity { budget: usize, capacity: usize },
    #[error("plan uses {used} assignments, over its budget {budget}")]
    OverBudget { used: usize, budget: usize },
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("agent {agent} targets node {node} twice")]
    DuplicateTarget { agent: usize, node: usize },
    #[error("agent {agent} has negative rate {rate}")]
    NegativeRate { agent: usize, rate: f64 },
    #[error("content bounds ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1")]
    InvalidContentBounds { lo: f64, hi: f64 },
    #[error("agent {agent} pins content {value} outside bounds ({lo}, {hi})")]
    ContentOutOfBounds { agent: usize, value: f64, lo: f64, hi: f64 },
    #[error("nudging agent {0} has no targets")]
    EmptyTargets(usize),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("this optimizer needs a final-mean objective")]
    RequiresMeanObjective,
    #[error("nudging needs a bounded-confidence shift function")]
    RequiresBoundedShift,
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("integration failed: {0}")]
    Integration(String),
}

impl From<OpinionError> for CampaignError {
    fn from(e: OpinionError) -> Self {
        CampaignError::Integration(e.to_string())
    }
}

/// Content policy of one campaign agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentPolicy {
    /// Post a fixed opinion value.
    Constant(f64),
    /// Re-choose content each control interval to maximize the weighted
    /// per-step shift across the agent's targets.
    Nudging,
}

impl Serialize for AgentPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AgentPolicy::Nudging => s.serialize_str("nudging"),
            AgentPolicy::Constant(v) => {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("constant", v)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for AgentPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Constant { constant: f64 },
        }
        match Repr::deserialize(d)? {
            Repr::Tag(t) if t == "nudging" => Ok(AgentPolicy::Nudging),
            Repr::Tag(t) => Err(D::Error::custom(format!("unknown policy `{t}`"))),
            Repr::Constant { constant } => Ok(AgentPolicy::Constant(constant)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub rate: f64,
    pub policy: AgentPolicy,
    pub targets: Vec<usize>,
}

fn default_bounds() -> (f64, f64) {
    (0.0, 1.0)
}

fn is_default_bounds(b: &(f64, f64)) -> bool {
    *b == (0.0, 1.0)
}

/// A set of agents under a total assignment budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignPlan {
    pub agents: Vec<Agent>,
    pub budget: usize,
    /// Allowed content range for every agent; omitted from JSON at the
    /// default of [0, 1].
    #[serde(default = "default_bounds", skip_serializing_if = "is_default_bounds")]
    pub content_bounds: (f64, f64),
}

impl CampaignPlan {
    pub fn new(agents: Vec<Agent>, budget: usize) -> Self {
        CampaignPlan { agents, budget, content_bounds: default_bounds() }
    }

    pub fn validate(&self, n: usize) -> Result<(), CampaignError> {
        let (lo, hi) = self.content_bounds;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(CampaignError::InvalidContentBounds { lo, hi });
        }
        let mut used = 0usize;
        for (idx, agent) in self.agents.iter().enumerate() {
            if agent.rate < 0.0 {
                return Err(CampaignError::NegativeRate { agent: idx, rate: agent.rate });
            }
            if let AgentPolicy::Constant(v) = agent.policy {
                if !(lo..=hi).contains(&v) {
                    return Err(CampaignError::ContentOutOfBounds { agent: idx, value: v, lo, hi });
                }
            }
            let mut seen = std::collections::HashSet::new();
            for &t in &agent.targets {
                if t >= n {
                    return Err(CampaignError::NodeOutOfRange { node: t, n });
                }
                if !seen.insert(t) {
                    return Err(CampaignError::DuplicateTarget { agent: idx, node: t });
                }
            }
            used += agent.targets.len();
        }
        if used > self.budget {
            return Err(CampaignError::OverBudget { used, budget: self.budget });
        }
        Ok(())
    }
}

/// Ordered seed picks with the marginal spread estimate recorded per pick.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSelection {
    pub seeds: Vec<usize>,
    pub marginal_gains: Vec<f64>,
}

struct HeapEntry {
    gain: f64,
    node: usize,
    round: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.gain == other.gain && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on gain; equal gains put the lower node id on top
        self.gain
            .partial_cmp(&other.gain)
            .expect("spread estimates are finite")
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy (CELF) greedy seed selection maximizing Monte Carlo expected spread.
///
/// Every coalition is evaluated against the same replication streams (common
/// random numbers), which makes the estimate an exactly submodular set
/// function; stale heap entries are then true upper bounds and the lazy pops
/// are safe. Ties go to the lowest node id.
pub fn greedy_seed_selection(
    g: &Graph,
    model: &CascadeModel,
    budget: usize,
    replications: usize,
    seed: u64,
) -> Result<SeedSelection, CampaignError> {
    if budget == 0 {
        return Err(CampaignError::ZeroBudget);
    }
    let n = g.node_count();
    let k = budget.min(n);
    let eval = |seeds: &[usize]| -> Result<f64, CampaignError> {
        if seeds.is_empty() {
            return Ok(0.0);
        }
        Ok(expected_spread(g, model, seeds, replications, seed)?.0)
    };

    let mut heap = BinaryHeap::with_capacity(n);
    for v in 0..n {
        heap.push(HeapEntry { gain: eval(&[v])?, node: v, round: 0 });
    }
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    let mut gains: Vec<f64> = Vec::with_capacity(k);
    let mut base = 0.0;
    let mut round = 0usize;
    while seeds.len() < k {
        let mut top = heap.pop().expect("heap holds every unselected node");
        if top.round < round {
            let mut with = seeds.clone();
            with.push(top.node);
            top.gain = eval(&with)? - base;
            top.round = round;
            heap.push(top);
            continue;
        }
        seeds.push(top.node);
        gains.push(top.gain);
        round += 1;
        base = eval(&seeds)?;
    }
    Ok(SeedSelection { seeds, marginal_gains: gains })
}

/// Degree-discount heuristic for uniform-probability IC seeding: repeatedly
/// pick the node maximizing dd_v = d_v - 2 t_v - (d_v - t_v) t_v p, where t_v
/// counts already selected neighbors. Ties go to the lowest id.
pub fn degree_discount(g: &Graph, budget: usize, p: f64) -> Result<SeedSelection, CampaignError> {
    if budget == 0 {
        return Err(CampaignError::ZeroBudget);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(CampaignError::ProbabilityOutOfRange(p));
    }
    let n = g.node_count();
    let k = budget.min(n);
    let deg: Vec<f64> = (0..n).map(|v| g.sym_degree(v) as f64).collect();
    let mut t = vec![0.0_f64; n];
    let mut selected = vec![false; n];
    let mut seeds = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    for _ in 0..k {
        let dd: Vec<f64> = (0..n)
            .map(|v| {
                if selected[v] {
                    f64::NEG_INFINITY
                } else {
                    deg[v] - 2.0 * t[v] - (deg[v] - t[v]) * t[v] * p
                }
            })
            .collect();
        let v = crate::util::argmax_tie_lowest(&dd).expect("graph has nodes");
        seeds.push(v);
        gains.push(dd[v]);
        selected[v] = true;
        for &u in g.sym_neighbors(v) {
            t[u] += 1.0;
        }
    }
    Ok(SeedSelection { seeds, marginal_gains: gains })
}

/// Build the anchor list a plan of constant agents induces on the linear
/// fixpoint: each (agent, target) pair is an external source.
fn plan_anchors(assignments: &[Vec<usize>], rate: f64, content: f64) -> Vec<NodeAnchor> {
    let mut anchors = Vec::new();
    for targets in assignments {
        for &node in targets {
            anchors.push(NodeAnchor { node, rate, content });
        }
    }
    anchors
}

/// Optimal constant-content campaign for linear dynamics: content pins to the
/// top (maximize) or bottom (minimize) of the allowed range and targets are
/// chosen greedily by the marginal change of the steady-state mean,
/// re-evaluated after each assignment. Returns the plan and its steady-state
/// objective value.
pub fn optimize_targets_linear(
    g: &Graph,
    theta0: &OpinionState,
    agent_count: usize,
    agent_rate: f64,
    budget: usize,
    objective: Objective,
    bounds: (f64, f64),
) -> Result<(CampaignPlan, f64), CampaignError> {
    if objective.kind != ObjectiveKind::FinalMean {
        return Err(CampaignError::RequiresMeanObjective);
    }
    let (lo, hi) = bounds;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(CampaignError::InvalidContentBounds { lo, hi });
    }
    let n = g.node_count();
    let capacity = n * agent_count;
    if budget > capacity {
        return Err(CampaignError::BudgetExceedsCapacity { budget, capacity });
    }
    let content = match objective.sense {
        crate::objective::Sense::Maximize => hi,
        crate::objective::Sense::Minimize => lo,
    };

    let eval = |assignments: &[Vec<usize>]| -> Result<f64, CampaignError> {
        let anchors = plan_anchors(assignments, agent_rate, content);
        let (state, _) =
            crate::opinion::linear_fixpoint(g, theta0, &StubbornSet::empty(), &anchors)?;
        Ok(crate::opinion::opinion_statistics(&state).0)
    };

    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); agent_count];
    let mut current = eval(&assignments)?;
    for _ in 0..budget {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..agent_count {
            for i in 0..n {
                if assignments[a].contains(&i) {
                    continue;
                }
                assignments[a].push(i);
                let value = eval(&assignments)?;
                assignments[a].pop();
                let signed = objective.signed(value);
                if best.is_none_or(|(bv, _, _)| signed > bv) {
                    best = Some((signed, a, i));
                }
            }
        }
        match best {
            Some((signed, a, i)) if signed > objective.signed(current) + 1e-15 => {
                assignments[a].push(i);
                current = eval(&assignments)?;
            }
            _ => break,
        }
    }
    for targets in assignments.iter_mut() {
        targets.sort_unstable();
    }
    let agents = assignments
        .into_iter()
        .map(|targets| Agent { rate: agent_rate, policy: AgentPolicy::Constant(content), targets })
        .collect();
    let plan = CampaignPlan { agents, budget, content_bounds: bounds };
    Ok((plan, current))
}

/// Content value for one nudging agent at one control step: the maximizer of
/// sum_{i in targets} w_i * g(c - theta_i) over the candidate set
/// {theta_i - eps, theta_i, theta_i + eps} (clipped to the content bounds).
/// Ties resolve toward the value nearest the previous content.
pub fn nudging_policy(
    theta: &OpinionState,
    targets: &[usize],
    shift: &ShiftFunction,
    weights: &[f64],
    bounds: (f64, f64),
    previous: f64,
) -> Result<f64, CampaignError> {
    let epsilon = match *shift {
        ShiftFunction::Bounded { epsilon, .. } => epsilon,
        ShiftFunction::Linear { .. } => return Err(CampaignError::RequiresBoundedShift),
    };
    if targets.is_empty() {
        return Err(CampaignError::EmptyTargets(0));
    }
    let n = theta.len();
    if weights.len() != n {
        return Err(CampaignError::Integration(format!(
            "weight vector has {} entries, state has {n}",
            weights.len()
        )));
    }
    for &t in targets {
        if t >= n {
            return Err(CampaignError::NodeOutOfRange { node: t, n });
        }
    }
    let (lo, hi) = bounds;
    let clamp = |c: f64| c.clamp(lo, hi);
    // pull the interval edges a hair inward so that c - theta_i survives
    // floating-point roundoff inside the (inclusive) confidence window
    let edge = epsilon * (1.0 - 1e-9);
    let mut candidates: Vec<f64> = Vec::with_capacity(3 * targets.len() + 1);
    for &t in targets {
        let th = theta.values()[t];
        candidates.push(clamp(th - edge));
        candidates.push(clamp(th));
        candidates.push(clamp(th + edge));
    }
    candidates.push(clamp(previous));

    let score = |c: f64| -> f64 {
        targets.iter().map(|&i| weights[i] * shift.eval(c - theta.values()[i])).sum()
    };
    let mut best = candidates[0];
    let mut best_score = score(best);
    for &c in &candidates[1..] {
        let s = score(c);
        let better = s > best_score + 1e-12;
        let tied = (s - best_score).abs() <= 1e-12;
        let nearer = (c - previous).abs() < (best - previous).abs() - 1e-15
            || ((c - previous).abs() - (best - previous).abs()).abs() <= 1e-15 && c < best;
        if better || (tied && nearer) {
            best = c;
            best_score = s;
        }
    }
    Ok(best)
}

/// Closed-loop campaign run: integrates the opinion dynamics under the plan,
/// re-choosing nudging content every control interval (10 steps) from the
/// objective's current gradient weights. Returns the trajectory and the
/// objective value e(theta_T).
pub fn run_campaign(
    g: &Graph,
    theta0: &OpinionState,
    plan: &CampaignPlan,
    shift: &ShiftFunction,
    objective: Objective,
    t_end: f64,
    h: f64,
) -> Result<(OpinionTrajectory, f64), CampaignError> {
    run_campaign_with_stubborn(g, theta0, &StubbornSet::empty(), plan, shift, objective, t_end, h)
}

/// `run_campaign` against a population that includes stubborn nodes.
#[allow(clippy::too_many_arguments)]
pub fn run_campaign_with_stubborn(
    g: &Graph,
    theta0: &OpinionState,
    stubborn: &StubbornSet,
    plan: &CampaignPlan,
    shift: &ShiftFunction,
    objective: Objective,
    t_end: f64,
    h: f64,
) -> Result<(OpinionTrajectory, f64), CampaignError> {
    let n = g.node_count();
    plan.validate(n)?;
    let has_nudging = plan.agents.iter().any(|a| matches!(a.policy, AgentPolicy::Nudging));
    if has_nudging {
        // fail fast on configurations the controller would reject mid-run
        if !matches!(shift, ShiftFunction::Bounded { .. }) {
            return Err(CampaignError::RequiresBoundedShift);
        }
        for (idx, a) in plan.agents.iter().enumerate() {
            if matches!(a.policy, AgentPolicy::Nudging) && a.targets.is_empty() {
                return Err(CampaignError::EmptyTargets(idx));
            }
        }
        objective.gradient_weights(theta0)?;
    }

    let mut drives = AgentDrive::from_plan(plan, theta0, n);
    let mut edge_scale = vec![1.0; g.edge_count()];
    let bounds = plan.content_bounds;
    let targets_per_agent: Vec<Vec<usize>> =
        plan.agents.iter().map(|a| a.targets.clone()).collect();
    let shift_copy = *shift;
    let mut controller_err: Option<CampaignError> = None;
    let trajectory = integrate_loop(
        g,
        theta0,
        shift,
        stubborn,
        &mut drives,
        &mut edge_scale,
        t_end,
        h,
        if has_nudging { CONTROL_INTERVAL } else { 0 },
        |_step, _t, state, drives, _scale| {
            if controller_err.is_some() {
                return;
            }
            let weights = match objective.gradient_weights(state) {
                Ok(w) => w,
                Err(e) => {
                    controller_err = Some(e.into());
                    return;
                }
            };
            for (idx, drive) in drives.iter_mut().enumerate() {
                if !drive.nudging {
                    continue;
                }
                match nudging_policy(
                    state,
                    &targets_per_agent[idx],
                    &shift_copy,
                    &weights,
                    bounds,
                    drive.content,
                ) {
                    Ok(c) => drive.content = c,
                    Err(e) => {
                        controller_err = Some(e);
                        return;
                    }
                }
            }
        },
    )?;
    if let Some(e) = controller_err {
        return Err(e);
    }
    let value = objective.evaluate(&Artifact::Trajectory(&trajectory))?;
    Ok((trajectory, value))
}

/// Greedy target assignment for nudging plans on bounded-confidence dynamics.
/// Candidate assignments are scored by short closed-loop rollouts (100 steps
/// of h), mirroring the linear optimizer's structure where no closed form
/// exists. Returns the plan and its rollout objective value.
#[allow(clippy::too_many_arguments)]
pub fn optimize_targets_nudging(
    g: &Graph,
    theta0: &OpinionState,
    shift: &ShiftFunction,
    agent_count: usize,
    agent_rate: f64,
    budget: usize,
    objective: Objective,
    h: f64,
) -> Result<(CampaignPlan, f64), CampaignError> {
    if !matches!(shift, ShiftFunction::Bounded { .. }) {
        return Err(CampaignError::RequiresBoundedShift);
    }
    let n = g.node_count();
    let capacity = n * agent_count;
    if budget > capacity {
        return Err(CampaignError::BudgetExceedsCapacity { budget, capacity });
    }
    let horizon = 100.0 * h;

    let eval = |assignments: &[Vec<usize>]| -> Result<f64, CampaignError> {
        let agents: Vec<Agent> = assignments
            .iter()
            .filter(|t| !t.is_empty())
            .map(|targets| Agent {
                rate: agent_rate,
                policy: AgentPolicy::Nudging,
                targets: targets.clone(),
            })
            .collect();
        if agents.is_empty() {
            let tr = crate::opinion::integrate(
                g,
                theta0,
                shift,
                &StubbornSet::empty(),
                None,
                horizon,
                h,
            )?;
            return Ok(objective.evaluate(&Artifact::Trajectory(&tr))?);
        }
        let plan = CampaignPlan::new(agents, budget);
        let (_, value) = run_campaign(g, theta0, &plan, shift, objective, horizon, h)?;
        Ok(value)
    };

    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); agent_count];
    let mut current = eval(&assignments)?;
    for _ in 0..budget {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..agent_count {
            for i in 0..n {
                if assignments[a].contains(&i) {
                    continue;
                }
                assignments[a].push(i);
                let value = eval(&assignments)?;
                assignments[a].pop();
                let signed = objective.signed(value);
                if best.is_none_or(|(bv, _, _)| signed > bv) {
                    best = Some((signed, a, i));
                }
            }
        }
        match best {
            Some((signed, a, i)) if signed > objective.signed(current) + 1e-15 => {
                assignments[a].push(i);
                current = eval(&assignments)?;
            }
            _ => break,
        }
    }
    for targets in assignments.iter_mut() {
        targets.sort_unstable();
    }
    let agents = assignments
        .into_iter()
        .map(|targets| Agent { rate: agent_rate, policy: AgentPolicy::Nudging, targets })
        .collect();
    Ok((CampaignPlan::new(agents, budget), current))
}
