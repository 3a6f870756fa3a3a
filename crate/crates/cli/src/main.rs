//! sociodyn command-line interface: config-driven single stages or the full
//! monitor -> identify -> assess -> counter pipeline, with reproducible
//! hashed outputs.
//!
//! Exit codes: 0 success, 2 validation failure, 3 stage failure at runtime.

mod config;
mod out;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{InputSpec, OutputFormat, RunConfig};
use out::OutDir;
use stages::RunContext;

#[derive(Parser)]
#[command(name = "sociodyn", version, about = "Network influence simulation and optimization")]
struct Cli {
    /// RNG seed for every randomized stage
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also emit CSV versions of score artifacts
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// JSON config file; flags override config fields
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Input graph edge-list path (overrides the config input)
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CentralityArgs {
    /// Comma-separated measures (degree,h-index,closeness,betweenness,bonacich,eigenvector,pagerank,rumor)
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<String>>,
    /// Infected node set for rumor centrality
    #[arg(long, value_delimiter = ',')]
    infected: Option<Vec<usize>>,
}

#[derive(Args, Default)]
struct CommunitiesArgs {
    /// Fixed community count (skips the modularity sweep)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// spectral | greedy
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args, Default)]
struct SimulateArgs {
    /// ic | lt | sir | sir-ode | hawkes
    #[arg(long)]
    model: Option<String>,
    /// Seed nodes for cascades
    #[arg(long = "cascade-seeds", value_delimiter = ',')]
    cascade_seeds: Option<Vec<usize>>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta_decay: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args, Default)]
struct OpinionsArgs {
    /// linear | bounded
    #[arg(long)]
    shift: Option<String>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Also solve and report the analytic linear steady state
    #[arg(long)]
    steady_state: bool,
}

#[derive(Args, Default)]
struct OptimizeSeedsArgs {
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    /// greedy | degree-discount
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args, Default)]
struct OptimizeCampaignArgs {
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    agent_rate: Option<f64>,
    #[arg(long)]
    objective: Option<String>,
    /// linear | nudging
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Default)]
struct RunCampaignArgs {
    /// Plan JSON file (defaults to the plan produced by optimize-campaign)
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args, Default)]
struct ShadowbanArgs {
    /// Total suppression budget sum(1 - d_ij)
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    objective: Option<String>,
    /// last | all
    #[arg(long)]
    dump: Option<String>,
}

#[derive(Args, Default)]
struct HawkesDampArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta_decay: Option<f64>,
    #[arg(long)]
    damp: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args, Default)]
struct AttributeArgs {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    /// exact | mc
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-node influence scores
    Centrality(CentralityArgs),
    /// Partition detection and modularity scoring
    Communities(CommunitiesArgs),
    /// Diffusion cascades (LT, IC, SIR, Hawkes)
    Simulate(SimulateArgs),
    /// Opinion-dynamics integration
    Opinions(OpinionsArgs),
    /// Viral seed selection
    OptimizeSeeds(OptimizeSeedsArgs),
    /// Campaign target/content optimization
    OptimizeCampaign(OptimizeCampaignArgs),
    /// Closed-loop campaign execution
    RunCampaign(RunCampaignArgs),
    /// Edge-visibility moderation
    Shadowban(ShadowbanArgs),
    /// Hawkes excitement damping comparison
    HawkesDamp(HawkesDampArgs),
    /// Shapley attribution of campaign impact
    Attribute(AttributeArgs),
    /// Run the configured stage list end to end
    Pipeline,
    /// Report every violated precondition without executing stages
    Validate,
}

impl Command {
    fn stage_name(&self) -> Option<&'static str> {
        Some(match self {
            Command::Centrality(_) => "centrality",
            Command::Communities(_) => "communities",
            Command::Simulate(_) => "simulate",
            Command::Opinions(_) => "opinions",
            Command::OptimizeSeeds(_) => "optimize-seeds",
            Command::OptimizeCampaign(_) => "optimize-campaign",
            Command::RunCampaign(_) => "run-campaign",
            Command::Shadowban(_) => "shadowban",
            Command::HawkesDamp(_) => "hawkes-damp",
            Command::Attribute(_) => "attribute",
            Command::Pipeline | Command::Validate => return None,
        })
    }
}

/// Merge command-line overrides into the file config (flags win).
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = cli.format {
        cfg.format = Some(format);
    }
    if let Some(path) = &cli.graph {
        cfg.input = Some(InputSpec::Path { path: path.clone() });
    }

    match &cli.command {
        Command::Centrality(a) => {
            let c = cfg.centrality.get_or_insert_with(Default::default);
            if a.measures.is_some() {
                c.measures = a.measures.clone();
            }
            if a.infected.is_some() {
                c.infected = a.infected.clone();
            }
        }
        Command::Communities(a) => {
            let c = cfg.communities.get_or_insert_with(Default::default);
            if a.k.is_some() {
                c.k = a.k;
            }
            if a.k_min.is_some() {
                c.k_min = a.k_min;
            }
            if a.k_max.is_some() {
                c.k_max = a.k_max;
            }
            if a.method.is_some() {
                c.method = a.method.clone();
            }
        }
        Command::Simulate(a) => {
            let c = cfg.simulate.get_or_insert_with(Default::default);
            if a.model.is_some() {
                c.model = a.model.clone();
            }
            if a.cascade_seeds.is_some() {
                c.seeds = a.cascade_seeds.clone();
            }
            for (field, value) in [
                (&mut c.p, a.p),
                (&mut c.beta, a.beta),
                (&mut c.gamma, a.gamma),
                (&mut c.mu, a.mu),
                (&mut c.alpha, a.alpha),
                (&mut c.beta_decay, a.beta_decay),
                (&mut c.t_end, a.t_end),
                (&mut c.dt, a.dt),
            ] {
                if value.is_some() {
                    *field = value;
                }
            }
            if a.steps.is_some() {
                c.steps = a.steps;
            }
            if a.replications.is_some() {
                c.replications = a.replications;
            }
        }
        Command::Opinions(a) => {
            let d = cfg.dynamics.get_or_insert_with(Default::default);
            if a.shift.is_some() || a.omega.is_some() || a.epsilon.is_some() {
                let omega = a.omega.unwrap_or_else(|| d.shift().omega());
                let kind = a.shift.clone().unwrap_or_else(|| match d.shift() {
                    sociodyn::opinion::ShiftFunction::Linear { .. } => "linear".into(),
                    sociodyn::opinion::ShiftFunction::Bounded { .. } => "bounded".into(),
                });
                d.shift = Some(match kind.as_str() {
                    "linear" => sociodyn::opinion::ShiftFunction::Linear { omega },
                    "bounded" => sociodyn::opinion::ShiftFunction::Bounded {
                        omega,
                        epsilon: a.epsilon.unwrap_or(0.2),
                    },
                    other => anyhow::bail!("unknown shift `{other}`"),
                });
            }
            if a.t_end.is_some() {
                d.t_end = a.t_end;
            }
            if a.h.is_some() {
                d.h = a.h;
            }
            if a.steady_state {
                cfg.opinions.get_or_insert_with(Default::default).steady_state = Some(true);
            }
        }
        Command::OptimizeSeeds(a) => {
            let c = cfg.optimize_seeds.get_or_insert_with(Default::default);
            if a.budget.is_some() {
                c.budget = a.budget;
            }
            if a.p.is_some() {
                c.p = a.p;
            }
            if a.replications.is_some() {
                c.replications = a.replications;
            }
            if a.method.is_some() {
                c.method = a.method.clone();
            }
        }
        Command::OptimizeCampaign(a) => {
            let c = cfg.optimize_campaign.get_or_insert_with(Default::default);
            if a.agents.is_some() {
                c.agents = a.agents;
            }
            if a.budget.is_some() {
                c.budget = a.budget;
            }
            if a.agent_rate.is_some() {
                c.agent_rate = a.agent_rate;
            }
            if a.objective.is_some() {
                c.objective = a.objective.clone();
            }
            if a.mode.is_some() {
                c.mode = a.mode.clone();
            }
        }
        Command::RunCampaign(a) => {
            let c = cfg.run_campaign.get_or_insert_with(Default::default);
            if a.plan.is_some() {
                c.plan_path = a.plan.clone();
            }
            if a.objective.is_some() {
                c.objective = a.objective.clone();
            }
        }
        Command::Shadowban(a) => {
            let c = cfg.shadowban.get_or_insert_with(Default::default);
            if a.budget.is_some() {
                c.budget = a.budget;
            }
            if a.objective.is_some() {
                c.objective = a.objective.clone();
            }
            if a.dump.is_some() {
                c.dump = a.dump.clone();
            }
        }
        Command::HawkesDamp(a) => {
            let c = cfg.hawkes_damp.get_or_insert_with(Default::default);
            for (field, value) in [
                (&mut c.mu, a.mu),
                (&mut c.alpha, a.alpha),
                (&mut c.beta_decay, a.beta_decay),
                (&mut c.damp, a.damp),
                (&mut c.t_end, a.t_end),
            ] {
                if value.is_some() {
                    *field = value;
                }
            }
            if a.replications.is_some() {
                c.replications = a.replications;
            }
        }
        Command::Attribute(a) => {
            let c = cfg.attribute.get_or_insert_with(Default::default);
            if a.plan.is_some() {
                c.plan_path = a.plan.clone();
            }
            if a.objective.is_some() {
                c.objective = a.objective.clone();
            }
            if a.mode.is_some() {
                c.mode = a.mode.clone();
            }
            if a.samples.is_some() {
                c.samples = a.samples;
            }
        }
        Command::Pipeline | Command::Validate => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = match effective_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("configuration invalid:\n  - {e:#}");
            return Ok(2);
        }
    };
    let stages: Vec<String> = match cli.command.stage_name() {
        Some(name) => vec![name.to_string()],
        None => cfg.stages(),
    };

    let violations = config::validate(&cfg, &stages);
    if matches!(cli.command, Command::Validate) {
        let report = serde_json::json!({ "violations": violations });
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(0);
    }
    if !violations.is_empty() {
        eprintln!("configuration invalid:");
        for v in &violations {
            eprintln!("  - {v}");
        }
        return Ok(2);
    }

    let seed = cfg.seed();
    let hash = cfg.hash();
    let loaded = cfg.load_graph(seed)?;
    let mut out = OutDir::create(cfg.out_dir())?;
    let mut ctx = RunContext {
        cfg,
        hash: hash.clone(),
        seed,
        graph: loaded.graph,
        truth: loaded.truth,
        plan_from_run: None,
    };

    stages::write_graph_artifacts(&ctx, &mut out)?;
    for stage in &stages {
        if let Err(e) = stages::run_stage(&mut ctx, stage, &mut out) {
            eprintln!("stage {stage} failed: {e:#}");
            out.finish(&hash, seed, Some(stage))?;
            return Ok(3);
        }
        eprintln!("stage {stage}: done");
    }
    out.finish(&hash, seed, None)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
