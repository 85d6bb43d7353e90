//! `osp`: run greedy engines, verify OSP implementation trees and
//! reproduce the separation results from the command line.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 bad input (parse, file or
//! unknown id), 3 engine or analysis error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use osp_core::analysis::{approximation_ratio_with, repro_theorem, ReproOptions, ScanOptions, DEFAULT_SCAN_CAP};
use osp_core::greedy::{make_paper_priority_table, run_greedy, EngineKind, PriorityTable, StepAction};
use osp_core::instances::{make_paper_instance, parse_id_spec, Params, SetSystemInstance, TypeProfile};
use osp_core::ospgraph::{attach_payments, brute_force_osp_oracle, compute_all_payments, verify_osp, DEFAULT_PROFILE_CAP};
use osp_core::rational::{format_both, format_exact, parse_decimal};
use osp_core::tree::{build_tree_from_table_with_cap, make_paper_tree, ImplementationTree, DEFAULT_NODE_CAP};
use osp_core::Rational;

#[derive(Parser)]
#[command(name = "osp", version, about = "Two-way greedy mechanisms and OSP verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one engine on one profile and print the trace.
    Run(RunArgs),
    /// Measure the worst approximation ratio over every profile.
    Ratio(RatioArgs),
    /// Check cycle monotonicity of every agent's OSP graph.
    VerifyOsp(VerifyArgs),
    /// Reproduce one result: thm8..thm14, matroid-optimal or ca-sqrt-m.
    Repro(ReproArgs),
}

#[derive(Args)]
struct Source {
    /// Built-in instance id (`dc-gap:k=6`) or JSON file.
    #[arg(long)]
    instance: String,
    /// Built-in table id (`thm8`, `alg4:k=6`) or JSON file.
    #[arg(long)]
    table: Option<String>,
    /// Parameter shared by built-in instances and tables, `key=value`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Also write the printed output here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "two-way")]
    engine: String,
    /// Comma-separated type values, one per agent.
    #[arg(long)]
    profile: String,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "two-way")]
    engine: String,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SCAN_CAP)]
    profile_cap: u128,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Built-in tree id or JSON file; without it the tree is built from
    /// `--table` and `--engine`.
    #[arg(long)]
    tree: Option<String>,
    #[arg(long, default_value = "two-way")]
    engine: String,
    /// Print the violating two-cycle or negative cycle.
    #[arg(long)]
    explain: bool,
    /// Compute shortest-path payments and re-check them against the
    /// deviation oracle.
    #[arg(long)]
    payments: bool,
    #[arg(long, default_value_t = DEFAULT_PROFILE_CAP)]
    profile_cap: u128,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

#[derive(Args)]
struct ReproArgs {
    id: String,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SCAN_CAP)]
    profile_cap: u128,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the human-readable report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the machine-readable records here as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Engine(anyhow::Error),
}

type CmdResult = Result<bool, Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn engine<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Engine(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ratio(a) => cmd_ratio(a),
        Command::VerifyOsp(a) => cmd_verify(a),
        Command::Repro(a) => cmd_repro(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

/// Parses a decimal or `a/b` value.
fn parse_value(text: &str) -> osp_core::Result<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let d = parse_decimal(d)?;
            if d == Rational::from_integer(0.into()) {
                return Err(osp_core::Error::Parse(format!("zero denominator in `{text}`")));
            }
            Ok(parse_decimal(n)? / d)
        }
        None => parse_decimal(text),
    }
}

fn parse_params(items: &[String]) -> anyhow::Result<Params> {
    let mut params = Params::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got `{item}`"))?;
        params.insert(k.trim().to_string(), parse_value(v.trim())?);
    }
    Ok(params)
}

/// Reads `spec` as a file when one exists at that path or it ends in
/// `.json`; otherwise returns `None` so the caller treats it as an id.
fn read_if_file(spec: &str) -> anyhow::Result<Option<String>> {
    let path = Path::new(spec);
    if path.exists() || spec.ends_with(".json") {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read `{spec}`"))?;
        return Ok(Some(text));
    }
    Ok(None)
}

fn merged(spec: &str, shared: &Params) -> anyhow::Result<(String, Params)> {
    let (id, mut own) = parse_id_spec(spec)?;
    for (k, v) in shared {
        own.entry(k.clone()).or_insert_with(|| v.clone());
    }
    Ok((id, own))
}

fn load_instance(spec: &str, shared: &Params) -> anyhow::Result<SetSystemInstance> {
    if let Some(text) = read_if_file(spec)? {
        return SetSystemInstance::from_json(&text).with_context(|| format!("in `{spec}`"));
    }
    let (id, params) = merged(spec, shared)?;
    Ok(make_paper_instance(&id, &params)?)
}

fn load_table(spec: &str, shared: &Params) -> anyhow::Result<PriorityTable> {
    if let Some(text) = read_if_file(spec)? {
        return PriorityTable::from_json(&text).with_context(|| format!("in `{spec}`"));
    }
    let (id, params) = merged(spec, shared)?;
    Ok(make_paper_priority_table(&id, &params)?)
}

fn load_tree(spec: &str, instance: &SetSystemInstance) -> anyhow::Result<ImplementationTree> {
    if let Some(text) = read_if_file(spec)? {
        return ImplementationTree::from_json(instance, &text).with_context(|| format!("in `{spec}`"));
    }
    Ok(make_paper_tree(spec, instance)?)
}

fn require_table(source: &Source) -> anyhow::Result<&str> {
    source
        .table
        .as_deref()
        .ok_or_else(|| anyhow!("--table is required"))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, text)
            .with_context(|| format!("cannot write `{}`", path.display()))
            .map_err(input)?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> CmdResult {
    let params = parse_params(&a.source.params).map_err(input)?;
    let inst = load_instance(&a.source.instance, &params).map_err(input)?;
    let table = load_table(require_table(&a.source).map_err(input)?, &params).map_err(input)?;
    let kind = EngineKind::parse(&a.engine).map_err(input)?;
    let types = a
        .profile
        .split(',')
        .map(|t| parse_value(t.trim()))
        .collect::<osp_core::Result<Vec<_>>>()
        .map_err(input)?;
    let profile = TypeProfile::new(types);
    inst.profile_indices(&profile).map_err(input)?;
    let trace = run_greedy(kind, &inst, &table, &profile).map_err(engine)?;
    let mut text = format!("engine {} on profile {}\n", kind.name(), profile.render());
    for (i, s) in trace.steps.iter().enumerate() {
        let rank = s
            .rank_used
            .as_ref()
            .map(format_exact)
            .unwrap_or_else(|| "floor".into());
        let action = match s.action {
            StepAction::Committed => "committed",
            StepAction::MarkedInfeasible => "infeasible",
        };
        text.push_str(&format!(
            "step {}: agent {} {} type {} rank {} {}\n",
            i + 1,
            s.chosen_agent,
            s.direction,
            format_exact(&s.type_value),
            rank,
            action
        ));
    }
    let sol = &trace.final_solution;
    let value = inst.objective_value(&profile, sol);
    text.push_str(&format!("solution {sol}\nvalue {}\n", format_both(&value)));
    emit(&text, a.source.out.as_deref())?;
    Ok(true)
}

fn cmd_ratio(a: RatioArgs) -> CmdResult {
    let params = parse_params(&a.source.params).map_err(input)?;
    let inst = load_instance(&a.source.instance, &params).map_err(input)?;
    let table = load_table(require_table(&a.source).map_err(input)?, &params).map_err(input)?;
    let kind = EngineKind::parse(&a.engine).map_err(input)?;
    let options = ScanOptions {
        profile_cap: a.profile_cap,
        jobs: a.jobs,
    };
    let r = approximation_ratio_with(&inst, kind, &table, options).map_err(engine)?;
    let text = format!(
        "engine {}\nworst ratio {}\nwitness {} -> {}\nalg {}\nopt {}\nprofiles {}\n",
        kind.name(),
        r.worst_ratio.render(),
        r.witness_profile.render(),
        r.witness_solution,
        format_both(&r.alg_value),
        format_both(&r.opt_value),
        r.profiles_scanned
    );
    emit(&text, a.source.out.as_deref())?;
    Ok(true)
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let params = parse_params(&a.source.params).map_err(input)?;
    let inst = load_instance(&a.source.instance, &params).map_err(input)?;
    let tree = match &a.tree {
        Some(spec) => load_tree(spec, &inst).map_err(input)?,
        None => {
            let table = load_table(
                require_table(&a.source)
                    .context("give --tree or --table")
                    .map_err(input)?,
                &params,
            )
            .map_err(input)?;
            let kind = EngineKind::parse(&a.engine).map_err(input)?;
            build_tree_from_table_with_cap(&inst, &table, kind, a.node_cap).map_err(engine)?
        }
    };
    let verdict = verify_osp(&inst, &tree, a.profile_cap).map_err(engine)?;
    let mut text = verdict.render(a.explain);
    let mut pass = verdict.passed();
    if a.payments && pass {
        let payments = compute_all_payments(&inst, &tree, a.profile_cap).map_err(engine)?;
        let paid = attach_payments(&inst, &tree, a.profile_cap).map_err(engine)?;
        text.push_str("payments (transfer to each agent, per leaf):\n");
        text.push_str(&paid.dump());
        let oracle = brute_force_osp_oracle(&inst, &tree, &payments).map_err(engine)?;
        match &oracle.violation {
            None => text.push_str("oracle: pass\n"),
            Some(v) => {
                pass = false;
                text.push_str(&format!(
                    "oracle: FAIL agent {} at node {}: truthful {} utility {}, deviation {} utility {}\n",
                    v.agent,
                    v.node,
                    v.truthful.render(),
                    format_exact(&v.truthful_utility),
                    v.deviation.render(),
                    format_exact(&v.deviation_utility)
                ));
            }
        }
    } else if a.payments {
        text.push_str("payments: none exist, the graph has a negative cycle\n");
    }
    emit(&text, a.source.out.as_deref())?;
    Ok(pass)
}

fn cmd_repro(a: ReproArgs) -> CmdResult {
    let mut params = parse_params(&a.params).map_err(input)?;
    if let Some(k) = a.k {
        params.insert("k".into(), Rational::from_integer(k.into()));
    }
    let options = ReproOptions {
        params,
        jobs: a.jobs,
        profile_cap: a.profile_cap,
        epsilon: a.epsilon,
        seed: a.seed,
    };
    let report = repro_theorem(&a.id, &options).map_err(|e| match e {
        osp_core::Error::UnknownTheorem(_)
        | osp_core::Error::InvalidParams(_)
        | osp_core::Error::InvalidDomain(_)
        | osp_core::Error::Parse(_) => input(e),
        other => engine(other),
    })?;
    emit(&report.text, a.out.as_deref())?;
    if let Some(path) = &a.records {
        fs::write(path, report.records_jsonl())
            .with_context(|| format!("cannot write `{}`", path.display()))
            .map_err(input)?;
    }
    Ok(report.passed)
}
