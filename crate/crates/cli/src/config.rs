//! Run configuration: a single JSON document with per-stage sections.
//! Command-line flags override config fields, which override defaults. The
//! config hash covers the effective configuration with the output directory
//! masked out, so runs into different directories still compare equal.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sociodyn::campaign::CampaignPlan;
use sociodyn::graph::{self, Graph};
use sociodyn::objective::Objective;
use sociodyn::opinion::{OpinionState, ShiftFunction, StubbornSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Path { path: PathBuf },
    Planted { planted: PlantedCfg },
    Tree { tree: TreeCfg },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedCfg {
    pub k: usize,
    pub size: usize,
    pub p_in: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeCfg {
    pub degree: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta0Cfg {
    Constant { constant: f64 },
    Values { values: Vec<f64> },
    Random { random: RandomRange },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRange {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubbornEntry {
    pub node: usize,
    pub value: f64,
}

/// Opinion-dynamics settings shared by every opinion-based stage.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsCfg {
    pub shift: Option<ShiftFunction>,
    pub theta0: Option<Theta0Cfg>,
    pub stubborn: Option<Vec<StubbornEntry>>,
    pub t_end: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralityCfg {
    pub measures: Option<Vec<String>>,
    pub direction: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub damping: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub infected: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunitiesCfg {
    pub method: Option<String>,
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCfg {
    pub model: Option<String>,
    pub seeds: Option<Vec<usize>>,
    pub p: Option<f64>,
    pub threshold_mode: Option<String>,
    pub thresholds: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub beta_decay: Option<f64>,
    pub s0: Option<f64>,
    pub i0: Option<f64>,
    pub r0: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub replications: Option<usize>,
    pub window: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpinionsCfg {
    pub steady_state: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSeedsCfg {
    pub method: Option<String>,
    pub model: Option<String>,
    pub budget: Option<usize>,
    pub p: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeCampaignCfg {
    pub mode: Option<String>,
    pub agents: Option<usize>,
    pub budget: Option<usize>,
    pub agent_rate: Option<f64>,
    pub objective: Option<String>,
    pub content_lo: Option<f64>,
    pub content_hi: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunCampaignCfg {
    pub plan_path: Option<PathBuf>,
    pub plan: Option<CampaignPlan>,
    pub objective: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowbanCfg {
    pub budget: Option<f64>,
    pub objective: Option<String>,
    pub dump: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HawkesDampCfg {
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub beta_decay: Option<f64>,
    pub damp: Option<f64>,
    pub t_end: Option<f64>,
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeCfg {
    pub plan_path: Option<PathBuf>,
    pub plan: Option<CampaignPlan>,
    pub objective: Option<String>,
    pub mode: Option<String>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<InputSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub stages: Option<Vec<String>>,
    pub dynamics: Option<DynamicsCfg>,
    pub centrality: Option<CentralityCfg>,
    pub communities: Option<CommunitiesCfg>,
    pub simulate: Option<SimulateCfg>,
    pub opinions: Option<OpinionsCfg>,
    pub optimize_seeds: Option<OptimizeSeedsCfg>,
    pub optimize_campaign: Option<OptimizeCampaignCfg>,
    pub run_campaign: Option<RunCampaignCfg>,
    pub shadowban: Option<ShadowbanCfg>,
    pub hawkes_damp: Option<HawkesDampCfg>,
    pub attribute: Option<AttributeCfg>,
}

pub const ALL_STAGES: &[&str] = &[
    "centrality",
    "communities",
    "simulate",
    "opinions",
    "optimize-seeds",
    "optimize-campaign",
    "run-campaign",
    "shadowban",
    "hawkes-damp",
    "attribute",
];

/// Stages a bare `pipeline` runs when the config lists none: the
/// monitor -> identify -> assess -> counter sweep.
pub const DEFAULT_PIPELINE: &[&str] = &[
    "centrality",
    "communities",
    "simulate",
    "opinions",
    "optimize-seeds",
    "optimize-campaign",
    "run-campaign",
    "shadowban",
    "attribute",
];

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn format(&self) -> OutputFormat {
        self.format.unwrap_or(OutputFormat::Json)
    }

    pub fn stages(&self) -> Vec<String> {
        match &self.stages {
            Some(s) => s.clone(),
            None => DEFAULT_PIPELINE.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// SHA-256 of the effective config with the output directory masked out.
    pub fn hash(&self) -> String {
        let mut masked = self.clone();
        masked.out = None;
        let text = serde_json::to_string(&masked).expect("config serializes");
        crate::out::sha256_hex(text.as_bytes())
    }

    pub fn load_graph(&self, seed: u64) -> Result<LoadedGraph> {
        match self.input.as_ref() {
            None => bail!("no input graph configured (set `input` or pass --graph)"),
            Some(InputSpec::Path { path }) => {
                let file = std::fs::File::open(path)
                    .with_context(|| format!("cannot open graph {}", path.display()))?;
                let g = graph::load_edge_list(std::io::BufReader::new(file))
                    .with_context(|| format!("cannot parse graph {}", path.display()))?;
                Ok(LoadedGraph { graph: g, truth: None })
            }
            Some(InputSpec::Planted { planted }) => {
                let (g, truth) = graph::generate_planted_partition(
                    planted.k,
                    planted.size,
                    planted.p_in,
                    planted.p_out,
                    seed,
                )?;
                Ok(LoadedGraph { graph: g, truth: Some(truth) })
            }
            Some(InputSpec::Tree { tree }) => {
                let g = graph::generate_regular_tree(tree.degree, tree.depth)?;
                Ok(LoadedGraph { graph: g, truth: None })
            }
        }
    }

    pub fn dynamics(&self) -> DynamicsCfg {
        self.dynamics.clone().unwrap_or_default()
    }
}

pub struct LoadedGraph {
    pub graph: Graph,
    pub truth: Option<sociodyn::community::Partition>,
}

impl DynamicsCfg {
    pub fn shift(&self) -> ShiftFunction {
        self.shift.unwrap_or(ShiftFunction::Linear { omega: 1.0 })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(10.0)
    }

    pub fn h(&self) -> f64 {
        self.h.unwrap_or(sociodyn::opinion::DEFAULT_STEP)
    }

    pub fn stubborn(&self) -> Result<StubbornSet> {
        let entries = self
            .stubborn
            .as_ref()
            .map(|v| v.iter().map(|e| (e.node, e.value)).collect())
            .unwrap_or_default();
        Ok(StubbornSet::new(entries)?)
    }

    /// Materialize the initial opinions; the random variants draw from the
    /// (seed, THETA0) stream so every stage in a run sees the same vector.
    pub fn theta0(&self, n: usize, seed: u64) -> Result<OpinionState> {
        let state = match &self.theta0 {
            None => OpinionState::random(n, 0.0, 1.0, seed)?,
            Some(Theta0Cfg::Constant { constant }) => OpinionState::uniform(n, *constant)?,
            Some(Theta0Cfg::Values { values }) => {
                if values.len() != n {
                    bail!("theta0 has {} values, graph has {n} nodes", values.len());
                }
                OpinionState::new(values.clone())?
            }
            Some(Theta0Cfg::Random { random }) => {
                if random.low > random.high {
                    bail!("theta0 random range [{}, {}] is empty", random.low, random.high);
                }
                OpinionState::random(n, random.low, random.high, seed)?
            }
        };
        Ok(state)
    }
}

pub fn parse_objective(name: Option<&str>, default: &str) -> Result<Objective> {
    Objective::parse(name.unwrap_or(default)).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Precondition report produced by `validate` and checked before any stage
/// runs. A run with violations exits with status 2 before touching outputs.
pub fn validate(cfg: &RunConfig, stages: &[String]) -> Vec<String> {
    let mut violations = Vec::new();
    for stage in stages {
        if !ALL_STAGES.contains(&stage.as_str()) {
            violations.push(format!("unknown stage `{stage}`"));
        }
    }

    let loaded = match cfg.load_graph(cfg.seed()) {
        Err(e) => {
            violations.push(format!("input: {e:#}"));
            return violations;
        }
        Ok(l) => l,
    };
    let g = &loaded.graph;
    let n = g.node_count();
    let has = |name: &str| stages.iter().any(|s| s == name);

    if has("centrality") {
        let c = cfg.centrality.clone().unwrap_or_default();
        if let Some(d) = c.damping {
            if !(d > 0.0 && d < 1.0) {
                violations.push(format!("centrality: damping {d} outside (0, 1)"));
            }
        }
        if let Some(a) = c.alpha {
            let rho = g.spectral_radius();
            if rho > 0.0 && a >= 1.0 / rho {
                violations.push(format!(
                    "centrality: bonacich alpha {a} not below 1/spectral-radius {}",
                    1.0 / rho
                ));
            }
        }
        if let Some(direction) = &c.direction {
            if !["in", "out", "total"].contains(&direction.as_str()) {
                violations.push(format!("centrality: unknown direction `{direction}`"));
            }
        }
        if let Some(measures) = &c.measures {
            for m in measures {
                if ![
                    "degree",
                    "h-index",
                    "closeness",
                    "betweenness",
                    "bonacich",
                    "eigenvector",
                    "pagerank",
                    "rumor",
                ]
                .contains(&m.as_str())
                {
                    violations.push(format!("centrality: unknown measure `{m}`"));
                }
            }
        }
        if let Some(infected) = &c.infected {
            if infected.iter().any(|&v| v >= n) {
                violations
                    .push("centrality: infected set references nodes outside the graph".into());
            }
        }
    }

    if has("communities") {
        let c = cfg.communities.clone().unwrap_or_default();
        if g.sym_edge_count() == 0 {
            violations.push("communities: graph has no edges, modularity undefined".into());
        }
        if let Some(k) = c.k {
            if k < 1 || k > n {
                violations.push(format!("communities: k={k} outside [1, {n}]"));
            }
        }
        if let (Some(a), Some(b)) = (c.k_min, c.k_max) {
            if a < 1 || a > b || b > n {
                violations.push(format!("communities: k range [{a}, {b}] invalid for {n} nodes"));
            }
        }
        if let Some(m) = &c.method {
            if !["spectral", "greedy"].contains(&m.as_str()) {
                violations.push(format!("communities: unknown method `{m}`"));
            }
        }
    }

    if has("simulate") {
        let s = cfg.simulate.clone().unwrap_or_default();
        let model = s.model.clone().unwrap_or_else(|| "ic".into());
        if !["ic", "lt", "sir", "sir-ode", "hawkes"].contains(&model.as_str()) {
            violations.push(format!("simulate: unknown model `{model}`"));
        }
        let seeds = s.seeds.clone().unwrap_or_else(|| vec![0]);
        if model != "sir-ode" {
            if seeds.is_empty() {
                violations.push("simulate: seed set is empty".into());
            }
            if seeds.iter().any(|&v| v >= n) {
                violations.push("simulate: seed set references nodes outside the graph".into());
            }
        }
        if let Some(p) = s.p {
            if !(0.0..=1.0).contains(&p) {
                violations.push(format!("simulate: probability {p} outside [0, 1]"));
            }
        }
        for (name, v) in [("beta", s.beta), ("gamma", s.gamma), ("mu", s.mu), ("alpha", s.alpha)] {
            if let Some(v) = v {
                if v < 0.0 {
                    violations.push(format!("simulate: {name} = {v} is negative"));
                }
            }
        }
        if model == "lt" {
            for i in 0..n {
                let sum: f64 = g.in_neighbors(i).iter().map(|&(_, w, _)| w).sum();
                if sum > 1.0 + 1e-9 {
                    violations
                        .push(format!("simulate: node {i} incoming weights sum to {sum} > 1"));
                    break;
                }
            }
            if let Some(t) = &s.thresholds {
                if t.len() != n {
                    violations.push(format!("simulate: {} thresholds for {n} nodes", t.len()));
                }
            }
        }
        if model == "hawkes" {
            let alpha = s.alpha.unwrap_or(0.2);
            let beta_decay = s.beta_decay.unwrap_or(2.0);
            if alpha > 0.0 {
                let ratio = alpha * (g.spectral_radius() + 1.0) / beta_decay;
                if ratio >= 1.0 {
                    violations.push(format!(
                        "simulate: hawkes branching ratio {ratio:.4} >= 1 (unstable)"
                    ));
                }
            }
        }
    }

    let needs_dynamics =
        ["opinions", "optimize-campaign", "run-campaign", "shadowban", "attribute"]
            .iter()
            .any(|s| has(s));
    if needs_dynamics {
        let d = cfg.dynamics();
        if let Err(e) = d.shift().validate() {
            violations.push(format!("dynamics: {e}"));
        }
        if d.h() <= 0.0 {
            violations.push(format!("dynamics: step size {} not positive", d.h()));
        }
        if d.t_end() < 0.0 {
            violations.push(format!("dynamics: horizon {} negative", d.t_end()));
        }
        match d.stubborn() {
            Err(e) => violations.push(format!("dynamics: {e}")),
            Ok(st) => {
                if st.entries().iter().any(|&(node, _)| node >= n) {
                    violations
                        .push("dynamics: stubborn set references nodes outside the graph".into());
                }
            }
        }
        if let Err(e) = d.theta0(n, cfg.seed()) {
            violations.push(format!("dynamics: {e:#}"));
        }
        if has("opinions")
            && cfg.opinions.clone().unwrap_or_default().steady_state.unwrap_or(false)
            && !matches!(d.shift(), ShiftFunction::Linear { .. })
        {
            violations.push("opinions: steady_state needs a linear shift function".into());
        }
    }

    if has("optimize-seeds") {
        let c = cfg.optimize_seeds.clone().unwrap_or_default();
        if c.budget == Some(0) {
            violations.push("optimize-seeds: budget must be at least 1".into());
        }
        if let Some(p) = c.p {
            if !(0.0..=1.0).contains(&p) {
                violations.push(format!("optimize-seeds: probability {p} outside [0, 1]"));
            }
        }
        if c.replications == Some(0) {
            violations.push("optimize-seeds: replications must be at least 1".into());
        }
        if let Some(m) = &c.method {
            if !["greedy", "degree-discount"].contains(&m.as_str()) {
                violations.push(format!("optimize-seeds: unknown method `{m}`"));
            }
        }
        if let Some(m) = &c.model {
            if !["ic", "lt-random"].contains(&m.as_str()) {
                violations.push(format!("optimize-seeds: unknown model `{m}`"));
            }
        }
    }

    if has("optimize-campaign") {
        let c = cfg.optimize_campaign.clone().unwrap_or_default();
        let agents = c.agents.unwrap_or(1);
        let budget = c.budget.unwrap_or(1);
        if budget > n * agents {
            violations.push(format!(
                "optimize-campaign: budget {budget} exceeds capacity {} (nodes x agents)",
                n * agents
            ));
        }
        if let Err(e) = parse_objective(c.objective.as_deref(), "final-mean") {
            violations.push(format!("optimize-campaign: {e:#}"));
        }
        let (lo, hi) = (c.content_lo.unwrap_or(0.0), c.content_hi.unwrap_or(1.0));
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            violations.push(format!("optimize-campaign: content bounds ({lo}, {hi}) invalid"));
        }
        if let Some(m) = &c.mode {
            if !["linear", "nudging"].contains(&m.as_str()) {
                violations.push(format!("optimize-campaign: unknown mode `{m}`"));
            }
        }
    }

    if has("run-campaign") {
        let c = cfg.run_campaign.clone().unwrap_or_default();
        if let Err(e) = parse_objective(c.objective.as_deref(), "final-mean") {
            violations.push(format!("run-campaign: {e:#}"));
        }
        if let Some(plan) = resolve_plan_static(&c.plan, &c.plan_path) {
            match plan {
                Err(e) => violations.push(format!("run-campaign: {e:#}")),
                Ok(p) => {
                    if let Err(e) = p.validate(n) {
                        violations.push(format!("run-campaign: {e}"));
                    }
                }
            }
        }
    }

    if has("shadowban") {
        let c = cfg.shadowban.clone().unwrap_or_default();
        if let Some(b) = c.budget {
            if b < 0.0 {
                violations.push(format!("shadowban: budget {b} negative"));
            }
        }
        match parse_objective(c.objective.as_deref(), "final-variance-min") {
            Err(e) => violations.push(format!("shadowban: {e:#}")),
            Ok(obj) => {
                if obj.gradient_weights(&OpinionState::uniform(1, 0.5).unwrap()).is_err() {
                    violations.push(format!(
                        "shadowban: objective `{}` has no state gradient",
                        obj.name()
                    ));
                }
            }
        }
        if let Some(d) = &c.dump {
            if !["last", "all"].contains(&d.as_str()) {
                violations.push(format!("shadowban: unknown dump mode `{d}`"));
            }
        }
    }

    if has("hawkes-damp") {
        let c = cfg.hawkes_damp.clone().unwrap_or_default();
        let damp = c.damp.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&damp) {
            violations.push(format!("hawkes-damp: damp {damp} outside [0, 1]"));
        }
        let alpha = c.alpha.unwrap_or(0.2);
        let beta_decay = c.beta_decay.unwrap_or(2.0);
        for (name, v) in [("mu", c.mu.unwrap_or(1.0)), ("alpha", alpha), ("beta_decay", beta_decay)]
        {
            if v < 0.0 {
                violations.push(format!("hawkes-damp: {name} = {v} is negative"));
            }
        }
        if alpha > 0.0 {
            let ratio = alpha * (g.spectral_radius() + 1.0) / beta_decay;
            if ratio >= 1.0 {
                violations.push(format!("hawkes-damp: branching ratio {ratio:.4} >= 1 (unstable)"));
            }
        }
        if c.replications == Some(0) {
            violations.push("hawkes-damp: replications must be at least 1".into());
        }
    }

    if has("attribute") {
        let c = cfg.attribute.clone().unwrap_or_default();
        if let Err(e) = parse_objective(c.objective.as_deref(), "final-mean") {
            violations.push(format!("attribute: {e:#}"));
        }
        if let Some(m) = &c.mode {
            if !["exact", "mc"].contains(&m.as_str()) {
                violations.push(format!("attribute: unknown mode `{m}`"));
            }
        }
        if c.samples == Some(0) {
            violations.push("attribute: samples must be at least 1".into());
        }
        if let Some(plan) = resolve_plan_static(&c.plan, &c.plan_path) {
            match plan {
                Err(e) => violations.push(format!("attribute: {e:#}")),
                Ok(p) => {
                    if let Err(e) = p.validate(n) {
                        violations.push(format!("attribute: {e}"));
                    }
                    if p.agents.len() > sociodyn::attribution::MAX_EXACT_ACTORS
                        && c.mode.as_deref().unwrap_or("exact") == "exact"
                    {
                        violations.push(format!(
                            "attribute: {} agents exceed exact-mode cap {}",
                            p.agents.len(),
                            sociodyn::attribution::MAX_EXACT_ACTORS
                        ));
                    }
                }
            }
        }
    }

    violations
}

/// Plan available without running earlier stages: inline first, then a file.
/// Returns None when the plan is expected from the current run's
/// optimize-campaign stage.
pub fn resolve_plan_static(
    inline: &Option<CampaignPlan>,
    path: &Option<PathBuf>,
) -> Option<Result<CampaignPlan>> {
    if let Some(p) = inline {
        return Some(Ok(p.clone()));
    }
    if let Some(path) = path {
        let read = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read plan {}", path.display()))
            .and_then(|text| {
                serde_json::from_str::<CampaignPlan>(&text)
                    .with_context(|| format!("cannot parse plan {}", path.display()))
            });
        return Some(read);
    }
    None
}
