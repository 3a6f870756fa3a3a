//! Stage execution: each stage reads the effective config, runs the
//! corresponding core operations, and writes its artifacts into the run's
//! output directory.

use anyhow::{anyhow, bail, Result};
use serde_json::json;

use sociodyn::attribution::{attribute_campaign, AttributionMode};
use sociodyn::campaign::{
    degree_discount, greedy_seed_selection, optimize_targets_linear, optimize_targets_nudging,
    run_campaign, CampaignPlan,
};
use sociodyn::centrality;
use sociodyn::community;
use sociodyn::diffusion::{
    expected_spread, hawkes_total_events, simulate_hawkes, simulate_ic, simulate_lt,
    simulate_sir_network, simulate_sir_ode, Cascade, CascadeModel, IcProb, ThresholdMode,
};
use sociodyn::graph::Graph;
use sociodyn::moderation::{hawkes_damping, run_moderated};
use sociodyn::objective::{Artifact, Objective};
use sociodyn::opinion::{integrate, opinion_statistics, steady_state_linear, OpinionTrajectory};

use crate::config::{parse_objective, resolve_plan_static, OutputFormat, RunConfig};
use crate::out::OutDir;

pub struct RunContext {
    pub cfg: RunConfig,
    pub hash: String,
    pub seed: u64,
    pub graph: Graph,
    pub truth: Option<community::Partition>,
    /// Plan produced by an earlier optimize-campaign stage in this run.
    pub plan_from_run: Option<CampaignPlan>,
}

impl RunContext {
    fn write_json(&self, out: &mut OutDir, name: &str, payload: serde_json::Value) -> Result<()> {
        out.write_json(name, &self.hash, self.seed, payload)
    }

    fn write_csv(&self, out: &mut OutDir, name: &str, body: &str) -> Result<()> {
        out.write_csv(name, &self.hash, self.seed, body)
    }
}

/// Write the loaded graph itself (monitor-phase artifacts).
pub fn write_graph_artifacts(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    ctx.write_csv(out, "graph.csv", &ctx.graph.to_edge_list())?;
    let labels: Vec<String> = ctx.graph.labels();
    ctx.write_json(out, "labels.json", json!({ "labels": labels }))?;
    if let Some(truth) = &ctx.truth {
        ctx.write_json(
            out,
            "truth_partition.json",
            json!({ "k": truth.k(), "labels": truth.labels() }),
        )?;
    }
    Ok(())
}

pub fn run_stage(ctx: &mut RunContext, stage: &str, out: &mut OutDir) -> Result<()> {
    match stage {
        "centrality" => stage_centrality(ctx, out),
        "communities" => stage_communities(ctx, out),
        "simulate" => stage_simulate(ctx, out),
        "opinions" => stage_opinions(ctx, out),
        "optimize-seeds" => stage_optimize_seeds(ctx, out),
        "optimize-campaign" => stage_optimize_campaign(ctx, out),
        "run-campaign" => stage_run_campaign(ctx, out),
        "shadowban" => stage_shadowban(ctx, out),
        "hawkes-damp" => stage_hawkes_damp(ctx, out),
        "attribute" => stage_attribute(ctx, out),
        other => bail!("unknown stage `{other}`"),
    }
}

fn scores_csv(scores: &centrality::CentralityScores) -> String {
    let mut body = String::from("node,score\n");
    for (i, v) in scores.values.iter().enumerate() {
        body.push_str(&format!("{i},{v}\n"));
    }
    body
}

fn stage_centrality(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.centrality.clone().unwrap_or_default();
    let g = &ctx.graph;
    let mut measures = c.measures.clone().unwrap_or_else(|| {
        vec![
            "degree".into(),
            "h-index".into(),
            "closeness".into(),
            "betweenness".into(),
            "bonacich".into(),
            "eigenvector".into(),
            "pagerank".into(),
        ]
    });
    if c.infected.is_some() && !measures.iter().any(|m| m == "rumor") {
        measures.push("rumor".into());
    }
    let tol = c.tol.unwrap_or(centrality::DEFAULT_TOL);
    let max_iter = c.max_iter.unwrap_or(centrality::DEFAULT_MAX_ITER);
    let direction = match c.direction.as_deref().unwrap_or("total") {
        "in" => centrality::Direction::In,
        "out" => centrality::Direction::Out,
        "total" => centrality::Direction::Total,
        other => bail!("unknown degree direction `{other}`"),
    };
    // default attenuation: half the invertibility limit for this graph
    let alpha = c.alpha.unwrap_or_else(|| {
        let rho = g.spectral_radius();
        if rho > 0.0 {
            0.5 / rho
        } else {
            0.5
        }
    });
    let beta = c.beta.unwrap_or(1.0);
    let damping = c.damping.unwrap_or(0.85);

    let mut results = Vec::new();
    for m in &measures {
        let scores = match m.as_str() {
            "degree" => centrality::degree(g, direction),
            "h-index" => centrality::h_index(g),
            "closeness" => centrality::closeness(g),
            "betweenness" => centrality::betweenness(g),
            "bonacich" => centrality::bonacich(g, alpha, beta)?,
            "eigenvector" => centrality::eigenvector_centrality(g, tol, max_iter)?,
            "pagerank" => centrality::pagerank(g, damping, tol, max_iter)?,
            "rumor" => {
                let infected = c
                    .infected
                    .clone()
                    .ok_or_else(|| anyhow!("rumor centrality needs an `infected` list"))?;
                centrality::rumor_centrality(g, &infected)?
            }
            other => bail!("unknown measure `{other}`"),
        };
        results.push(scores);
    }
    let payload: Vec<serde_json::Value> = results.iter().map(|s| s.to_json()).collect();
    ctx.write_json(out, "centrality.json", json!({ "measures": payload }))?;
    if ctx.cfg.format() == OutputFormat::Csv {
        for s in &results {
            let name = format!("centrality_{}.csv", s.measure.name());
            ctx.write_csv(out, &name, &scores_csv(s))?;
        }
    }
    Ok(())
}

fn stage_communities(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.communities.clone().unwrap_or_default();
    let g = &ctx.graph;
    let n = g.node_count();
    let method = c.method.clone().unwrap_or_else(|| "spectral".into());
    let (k, partition) = match (method.as_str(), c.k) {
        ("greedy", _) => {
            let p = community::greedy_modularity(g)?;
            (p.k(), p)
        }
        ("spectral", Some(k)) => {
            let p = community::spectral_clustering(g, k, ctx.seed)?;
            (k, p)
        }
        ("spectral", None) => {
            let k_min = c.k_min.unwrap_or(1);
            let k_max = c.k_max.unwrap_or_else(|| n.min(8));
            community::select_k(g, k_min, k_max, ctx.seed)?
        }
        (other, _) => bail!("unknown method `{other}`"),
    };
    let q = community::modularity(g, &partition)?;
    let mut payload = json!({ "k": k, "modularity": q, "labels": partition.labels() });
    if let Some(truth) = &ctx.truth {
        let nmi = community::normalized_mutual_information(&partition, truth);
        payload["nmi_vs_truth"] = json!(nmi);
    }
    ctx.write_json(out, "communities.json", payload)?;
    if ctx.cfg.format() == OutputFormat::Csv {
        let mut body = String::from("node,community\n");
        for (i, l) in partition.labels().iter().enumerate() {
            body.push_str(&format!("{i},{l}\n"));
        }
        ctx.write_csv(out, "communities.csv", &body)?;
    }
    Ok(())
}

fn cascade_payload(cascade: &Cascade) -> serde_json::Value {
    let counts = cascade.compartment_counts();
    json!({
        "adopters": cascade.adopters(),
        "rounds": cascade.rounds(),
        "activation_time": cascade.activation_time,
        "compartment_counts": counts,
    })
}

fn stage_simulate(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let s = ctx.cfg.simulate.clone().unwrap_or_default();
    let g = &ctx.graph;
    let model = s.model.clone().unwrap_or_else(|| "ic".into());
    let seeds = s.seeds.clone().unwrap_or_else(|| vec![0]);
    match model.as_str() {
        "ic" => {
            let p = IcProb::Uniform(s.p.unwrap_or(0.5));
            let cascade = simulate_ic(g, &p, &seeds, ctx.seed)?;
            ctx.write_json(out, "cascade.json", cascade_payload(&cascade))?;
            if let Some(reps) = s.replications {
                let (mean, stderr) =
                    expected_spread(g, &CascadeModel::Ic(p), &seeds, reps, ctx.seed)?;
                ctx.write_json(
                    out,
                    "spread.json",
                    json!({ "mean": mean, "stderr": stderr, "replications": reps }),
                )?;
            }
        }
        "lt" => {
            let mode = match s.threshold_mode.as_deref().unwrap_or("random") {
                "random" => ThresholdMode::Random,
                "fixed" => ThresholdMode::Fixed(
                    s.thresholds.clone().ok_or_else(|| anyhow!("fixed mode needs `thresholds`"))?,
                ),
                other => bail!("unknown threshold mode `{other}`"),
            };
            let cascade = simulate_lt(g, &mode, &seeds, ctx.seed)?;
            ctx.write_json(out, "cascade.json", cascade_payload(&cascade))?;
            if let Some(reps) = s.replications {
                let (mean, stderr) = expected_spread(
                    g,
                    &CascadeModel::Lt(ThresholdMode::Random),
                    &seeds,
                    reps,
                    ctx.seed,
                )?;
                ctx.write_json(
                    out,
                    "spread.json",
                    json!({ "mean": mean, "stderr": stderr, "replications": reps }),
                )?;
            }
        }
        "sir" => {
            let beta = s.beta.unwrap_or(0.5);
            let gamma = s.gamma.unwrap_or(0.2);
            let steps = s.steps.unwrap_or(50);
            let cascade = simulate_sir_network(g, beta, gamma, &seeds, steps, ctx.seed)?;
            ctx.write_json(out, "cascade.json", cascade_payload(&cascade))?;
        }
        "sir-ode" => {
            let beta = s.beta.unwrap_or(0.5);
            let gamma = s.gamma.unwrap_or(0.2);
            let n = g.node_count() as f64;
            let i0 = s.i0.unwrap_or(1.0);
            let s0 = s.s0.unwrap_or(n - i0);
            let r0 = s.r0.unwrap_or(0.0);
            let t_end = s.t_end.unwrap_or(25.0);
            let dt = s.dt.unwrap_or(0.01);
            let tr = simulate_sir_ode(beta, gamma, s0, i0, r0, t_end, dt)?;
            let mut body = String::from("t,s,i,r\n");
            for idx in 0..tr.times.len() {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    tr.times[idx], tr.s[idx], tr.i[idx], tr.r[idx]
                ));
            }
            ctx.write_csv(out, "sir_ode.csv", &body)?;
        }
        "hawkes" => {
            let mu = s.mu.unwrap_or(1.0);
            let alpha = s.alpha.unwrap_or(0.2);
            let beta_decay = s.beta_decay.unwrap_or(2.0);
            let t_end = s.t_end.unwrap_or(10.0);
            let log = simulate_hawkes(g, mu, alpha, beta_decay, t_end, ctx.seed)?;
            ctx.write_csv(out, "events.csv", &log.to_csv())?;
            let stats = hawkes_total_events(&log, s.window.unwrap_or(1.0));
            ctx.write_json(
                out,
                "events_summary.json",
                json!({
                    "count": stats.count,
                    "peak_rate": stats.peak_rate,
                    "peak_window_start": stats.peak_window_start,
                }),
            )?;
        }
        other => bail!("unknown model `{other}`"),
    }
    Ok(())
}

fn quantiles_csv(tr: &OpinionTrajectory) -> String {
    let mut body = String::from("t,q05,q25,q50,q75,q95\n");
    for (t, state) in tr.times.iter().zip(&tr.states) {
        let mut v: Vec<f64> = state.values().to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let idx = ((v.len() - 1) as f64 * p).round() as usize;
            v[idx]
        };
        body.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            q(0.05),
            q(0.25),
            q(0.50),
            q(0.75),
            q(0.95)
        ));
    }
    body
}

fn trajectory_summary(tr: &OpinionTrajectory) -> serde_json::Value {
    let (mean, var) = opinion_statistics(tr.final_state());
    let converged = if tr.states.len() >= 2 {
        let a = &tr.states[tr.states.len() - 2];
        let b = tr.final_state();
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0_f64, f64::max) < 1e-6
    } else {
        true
    };
    json!({ "final_mean": mean, "final_variance": var, "converged": converged })
}

fn stage_opinions(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let d = ctx.cfg.dynamics();
    let o = ctx.cfg.opinions.clone().unwrap_or_default();
    let g = &ctx.graph;
    let theta0 = d.theta0(g.node_count(), ctx.seed)?;
    let shift = d.shift();
    let stubborn = d.stubborn()?;
    let tr = integrate(g, &theta0, &shift, &stubborn, None, d.t_end(), d.h())?;
    ctx.write_csv(out, "trajectory.csv", &tr.to_csv())?;
    ctx.write_csv(out, "trajectory_quantiles.csv", &quantiles_csv(&tr))?;
    let mut summary = trajectory_summary(&tr);
    if o.steady_state.unwrap_or(false) {
        let ss = steady_state_linear(g, &theta0, &stubborn, &shift)?;
        summary["steady_state"] = json!({
            "degenerate": ss.degenerate,
            "values": ss.state.values(),
        });
    }
    ctx.write_json(out, "opinions_summary.json", summary)?;
    Ok(())
}

fn stage_optimize_seeds(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.optimize_seeds.clone().unwrap_or_default();
    let g = &ctx.graph;
    let budget = c.budget.unwrap_or(1);
    let p = c.p.unwrap_or(0.5);
    let method = c.method.clone().unwrap_or_else(|| "greedy".into());
    let selection = match method.as_str() {
        "greedy" => {
            let model = match c.model.as_deref().unwrap_or("ic") {
                "ic" => CascadeModel::Ic(IcProb::Uniform(p)),
                "lt-random" => CascadeModel::Lt(ThresholdMode::Random),
                other => bail!("unknown model `{other}`"),
            };
            let reps = c.replications.unwrap_or(1000);
            greedy_seed_selection(g, &model, budget, reps, ctx.seed)?
        }
        "degree-discount" => degree_discount(g, budget, p)?,
        other => bail!("unknown method `{other}`"),
    };
    ctx.write_json(
        out,
        "seeds.json",
        json!({
            "method": method,
            "budget": budget,
            "seeds": selection.seeds,
            "marginal_gains": selection.marginal_gains,
        }),
    )?;
    Ok(())
}

fn stage_optimize_campaign(ctx: &mut RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.optimize_campaign.clone().unwrap_or_default();
    let d = ctx.cfg.dynamics();
    let g = &ctx.graph;
    let theta0 = d.theta0(g.node_count(), ctx.seed)?;
    let objective = parse_objective(c.objective.as_deref(), "final-mean")?;
    let agents = c.agents.unwrap_or(1);
    let budget = c.budget.unwrap_or(1);
    let rate = c.agent_rate.unwrap_or(1.0);
    let bounds = (c.content_lo.unwrap_or(0.0), c.content_hi.unwrap_or(1.0));
    let mode = c.mode.clone().unwrap_or_else(|| "linear".into());
    let (plan, value) = match mode.as_str() {
        "linear" => optimize_targets_linear(g, &theta0, agents, rate, budget, objective, bounds)?,
        "nudging" => optimize_targets_nudging(
            g,
            &theta0,
            &d.shift(),
            agents,
            rate,
            budget,
            objective,
            d.h(),
        )?,
        other => bail!("unknown mode `{other}`"),
    };
    let plan_json = serde_json::to_value(&plan)?;
    ctx.write_json(out, "plan.json", plan_json)?;
    ctx.write_json(
        out,
        "campaign_opt.json",
        json!({ "mode": mode, "objective": objective.name(), "value": value }),
    )?;
    ctx.plan_from_run = Some(plan);
    Ok(())
}

fn resolve_plan(
    ctx: &RunContext,
    inline: &Option<CampaignPlan>,
    path: &Option<std::path::PathBuf>,
) -> Result<CampaignPlan> {
    if let Some(found) = resolve_plan_static(inline, path) {
        return found;
    }
    ctx.plan_from_run
        .clone()
        .ok_or_else(|| anyhow!("no plan: set `plan`/`plan_path` or run optimize-campaign first"))
}

fn stage_run_campaign(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.run_campaign.clone().unwrap_or_default();
    let d = ctx.cfg.dynamics();
    let g = &ctx.graph;
    let theta0 = d.theta0(g.node_count(), ctx.seed)?;
    let objective = parse_objective(c.objective.as_deref(), "final-mean")?;
    let plan = resolve_plan(ctx, &c.plan, &c.plan_path)?;
    let (tr, value) = run_campaign(g, &theta0, &plan, &d.shift(), objective, d.t_end(), d.h())?;
    ctx.write_csv(out, "campaign_trajectory.csv", &tr.to_csv())?;
    ctx.write_csv(out, "campaign_trajectory_quantiles.csv", &quantiles_csv(&tr))?;
    let mut summary = trajectory_summary(&tr);
    summary["objective"] = json!(objective.name());
    summary["objective_value"] = json!(value);
    ctx.write_json(out, "campaign_result.json", summary)?;
    Ok(())
}

fn stage_shadowban(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.shadowban.clone().unwrap_or_default();
    let d = ctx.cfg.dynamics();
    let g = &ctx.graph;
    let theta0 = d.theta0(g.node_count(), ctx.seed)?;
    let objective = parse_objective(c.objective.as_deref(), "final-variance-min")?;
    let budget = c.budget.unwrap_or(1.0);
    let run = run_moderated(g, &theta0, &d.shift(), objective, budget, d.t_end(), d.h())?;
    ctx.write_csv(out, "moderated_trajectory.csv", &run.trajectory.to_csv())?;
    if let Some((_, last)) = run.policies.last() {
        ctx.write_csv(out, "policy.csv", &last.to_csv(g))?;
    }
    if c.dump.as_deref() == Some("all") {
        for (idx, (t, policy)) in run.policies.iter().enumerate() {
            let name = format!("policy_step_{idx:04}.csv");
            let body = format!("# t={t}\n{}", policy.to_csv(g));
            ctx.write_csv(out, &name, &body)?;
        }
    }
    let mut summary = trajectory_summary(&run.trajectory);
    summary["objective"] = json!(objective.name());
    summary["objective_value"] = json!(run.objective_value);
    summary["budget"] = json!(budget);
    ctx.write_json(out, "shadowban_result.json", summary)?;
    Ok(())
}

fn stage_hawkes_damp(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.hawkes_damp.clone().unwrap_or_default();
    let report = hawkes_damping(
        &ctx.graph,
        c.mu.unwrap_or(1.0),
        c.alpha.unwrap_or(0.2),
        c.beta_decay.unwrap_or(2.0),
        c.damp.unwrap_or(0.5),
        c.t_end.unwrap_or(10.0),
        c.replications.unwrap_or(200),
        ctx.seed,
    )?;
    ctx.write_json(
        out,
        "hawkes_damp.json",
        json!({
            "baseline_mean": report.baseline_mean,
            "baseline_stderr": report.baseline_stderr,
            "damped_mean": report.damped_mean,
            "damped_stderr": report.damped_stderr,
            "replications": report.replications,
        }),
    )?;
    Ok(())
}

fn stage_attribute(ctx: &RunContext, out: &mut OutDir) -> Result<()> {
    let c = ctx.cfg.attribute.clone().unwrap_or_default();
    let d = ctx.cfg.dynamics();
    let g = &ctx.graph;
    let theta0 = d.theta0(g.node_count(), ctx.seed)?;
    let objective = parse_objective(c.objective.as_deref(), "final-mean")?;
    let plan = resolve_plan(ctx, &c.plan, &c.plan_path)?;
    let mode = match c.mode.as_deref().unwrap_or("exact") {
        "exact" => AttributionMode::Exact,
        "mc" => AttributionMode::Mc,
        other => bail!("unknown attribution mode `{other}`"),
    };
    let report = attribute_campaign(
        g,
        &theta0,
        &plan,
        &d.shift(),
        objective,
        d.t_end(),
        d.h(),
        mode,
        c.samples.unwrap_or(200),
        ctx.seed,
    )?;
    ctx.write_json(
        out,
        "attribution.json",
        json!({
            "actors": report.actors,
            "shapley": report.shapley,
            "stderr": report.stderr,
            "lift": report.lift,
        }),
    )?;
    Ok(())
}

/// Evaluate an objective against whichever artifact kind it consumes; used by
/// tests and kept here so the mapping lives in one place.
#[allow(dead_code)]
pub fn evaluate_on_trajectory(objective: Objective, tr: &OpinionTrajectory) -> Result<f64> {
    Ok(objective.evaluate(&Artifact::Trajectory(tr))?)
}
