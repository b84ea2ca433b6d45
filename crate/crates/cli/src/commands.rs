use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use netclear::clearing::{clear, clear_priority_proportional, ClearError, RegimeState};
use netclear::compress::{greedy_compress, save_all_but_one};
use netclear::gadgets::{max2sat_market, partition_market, GadgetMarket, GadgetParams, TwoSatFormula};
use netclear::io::{compression_json, format_rational, market_to_string, names_json, parse_market, payments_json};
use netclear::market::check_clearing;
use netclear::milp_compress::{optimal_compress, CompressOptions, MilpError, OptimalCompression, Restrict, Scale};
use netclear::simlab::{gen_erdos_renyi, run_experiment_with, snowball_sample, EdgeList, ExperimentConfig, GenConfig};
use netclear::{ClearingModel, ClearingVector, FinancialMarket};

use crate::output::{emit, emit_json, read_text, write_atomic};
use crate::{Command, CompressCommand, GadgetKindArg, GenCommand, Model, RestrictArg};

pub enum Outcome {
    Done,
    No,
    Budget,
}

impl Outcome {
    pub fn code(&self) -> u8 {
        match self {
            Outcome::Done => 0,
            Outcome::No => 3,
            Outcome::Budget => 4,
        }
    }
}

pub enum Failure {
    Invalid(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => f.write_str(m),
            Failure::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

fn invalid(msg: impl fmt::Display) -> Failure {
    Failure::Invalid(msg.to_string())
}

fn internal(msg: impl fmt::Display) -> Failure {
    Failure::Internal(msg.to_string())
}

fn write_failed(path: Option<&Path>, e: std::io::Error) -> Failure {
    match path {
        Some(p) => internal(format!("cannot write {}: {e}", p.display())),
        None => internal(format!("cannot write output: {e}")),
    }
}

impl From<ClearError> for Failure {
    fn from(e: ClearError) -> Self {
        match e {
            ClearError::NegativeEndowment { .. } => invalid(e),
            other => internal(other),
        }
    }
}

impl From<Model> for ClearingModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Proportional => ClearingModel::Proportional,
            Model::Priority => ClearingModel::Priority,
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    read_text(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))
}

/// Reads and validates a market file.
fn load_market(path: &Path) -> Result<FinancialMarket, Failure> {
    let market = parse_market(&read_input(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let problems = market.validate();
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|v| v.to_string()).collect();
        return Err(invalid(format!("{}: invalid market: {}", path.display(), list.join("; "))));
    }
    Ok(market)
}

fn json_out(path: Option<&Path>, value: &Value) -> Result<(), Failure> {
    emit_json(path, value).map_err(|e| write_failed(path, e))
}

/// Payments plus the default report, after checking the clearing conditions exactly.
fn clearing_json(market: &FinancialMarket, p: &ClearingVector, model: ClearingModel) -> Result<Value, Failure> {
    let report = check_clearing(market, p, model).map_err(|e| internal(format!("clearing check failed: {e}")))?;
    Ok(json!({
        "payments": payments_json(market, &p.payments),
        "defaulting": names_json(market, &report.defaulting),
        "solvent": names_json(market, &report.solvent),
    }))
}

fn trace_json(market: &FinancialMarket, trace: &[RegimeState]) -> Value {
    let rounds: Vec<Value> = trace
        .iter()
        .map(|r| {
            let defaulted: Vec<usize> = (0..market.n()).filter(|&i| r.defaulted[i]).collect();
            let gamma: serde_json::Map<String, Value> =
                market.names.iter().zip(&r.gamma).map(|(name, g)| (name.clone(), json!(g))).collect();
            json!({"round": r.round, "defaulted": names_json(market, &defaulted), "critical_group": gamma})
        })
        .collect();
    Value::Array(rounds)
}

pub fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Check { market, out } => check(&market, out.as_deref()),
        Command::Clear { model, market, out, trace } => {
            clear_cmd(model.into(), &market, out.as_deref(), trace.as_deref())
        }
        Command::Compress(c) => compress(c),
        Command::Gen(g) => generate(g),
        Command::Simulate { config, out } => simulate(&config, &out),
    }
}

fn check(path: &Path, out: Option<&Path>) -> Result<Outcome, Failure> {
    let market = parse_market(&read_input(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let problems: Vec<String> = market.validate().iter().map(|v| v.to_string()).collect();
    let report = json!({
        "valid": problems.is_empty(),
        "banks": market.n(),
        "arcs": market.arcs().len(),
        "nonnegative_endowments": market.has_nonnegative_endowments(),
        "single_groups": market.has_single_groups(),
        "violations": problems,
    });
    json_out(out, &report)?;
    if problems.is_empty() {
        Ok(Outcome::Done)
    } else {
        Err(invalid(format!("{}: invalid market: {}", path.display(), problems.join("; "))))
    }
}

fn clear_cmd(model: ClearingModel, path: &Path, out: Option<&Path>, trace: Option<&Path>) -> Result<Outcome, Failure> {
    let market = load_market(path)?;
    let mut doc = match trace {
        None => clearing_json(&market, &clear(&market, model)?, model)?,
        Some(trace_path) => {
            // The proportional model is the priority algorithm on single groups.
            let run_on = match model {
                ClearingModel::Proportional => market.with_single_groups(),
                ClearingModel::Priority => market.clone(),
            };
            let (p, rounds) = clear_priority_proportional(&run_on)?;
            json_out(Some(trace_path), &trace_json(&market, &rounds))?;
            clearing_json(&market, &p, model)?
        }
    };
    doc["model"] = json!(model.to_string());
    json_out(out, &doc)?;
    Ok(Outcome::Done)
}

fn compress(command: CompressCommand) -> Result<Outcome, Failure> {
    match command {
        CompressCommand::Greedy { model, market, out } => {
            let model = ClearingModel::from(model);
            let m = load_market(&market)?;
            let (c, residual) = greedy_compress(&m).map_err(invalid)?;
            let p = clear(&residual, model)?;
            let mut doc = clearing_json(&residual, &p, model)?;
            doc["compression"] = compression_json(&m, &c);
            doc["volume"] = json!(format_rational(&c.volume()));
            json_out(out.as_deref(), &doc)?;
            Ok(Outcome::Done)
        }
        CompressCommand::Optimal { market, scale, restrict, node_limit, step_limit, time_limit, out } => {
            let scale = match scale.as_str() {
                "auto" => Scale::Auto,
                s => match s.parse::<u64>() {
                    Ok(f) if f > 0 => Scale::Factor(f),
                    _ => return Err(invalid(format!("--scale must be `auto` or a positive integer, got `{s}`"))),
                },
            };
            let time_limit = match time_limit {
                Some(t) if !(t.is_finite() && t >= 0.0) => return Err(invalid("--time-limit must be a nonnegative number")),
                t => t.map(Duration::from_secs_f64),
            };
            let restrict = match restrict {
                RestrictArg::None => Restrict::None,
                RestrictArg::Bilateral => Restrict::Bilateral,
            };
            let m = load_market(&market)?;
            let options = CompressOptions { restrict, node_limit, step_limit, time_limit, cutoff: None };
            let start = Instant::now();
            let result = optimal_compress(&m, scale, &options);
            let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
            let (best, status, nodes) = match result {
                Ok(r) => {
                    let nodes = r.nodes;
                    (Some(r), "optimal", nodes)
                }
                Err(MilpError::BudgetExceeded { nodes, incumbent, .. }) => (incumbent.map(|b| *b), "budget-exceeded", nodes),
                Err(e @ (MilpError::NegativeEndowment { .. } | MilpError::NonIntegral(_) | MilpError::ScaleTooLarge)) => {
                    return Err(invalid(e))
                }
                Err(e) => return Err(internal(e)),
            };
            let mut doc = json!({"status": status, "nodes": nodes, "wall_time_ms": wall_ms});
            if let Some(best) = &best {
                optimal_json(&m, best, &mut doc)?;
            }
            json_out(out.as_deref(), &doc)?;
            Ok(if status == "optimal" { Outcome::Done } else { Outcome::Budget })
        }
        CompressCommand::SaveAllButOne { model, market, out } => {
            let model = ClearingModel::from(model);
            let m = load_market(&market)?;
            match save_all_but_one(&m, model)? {
                Some(w) => {
                    let after = m.apply_compression(&w.compression).map_err(internal)?;
                    let mut doc = clearing_json(&after, &w.clearing, model)?;
                    doc["verdict"] = json!("found");
                    doc["bank"] = w.bank.map_or(Value::Null, |b| json!(m.names[b]));
                    doc["compression"] = compression_json(&m, &w.compression);
                    json_out(out.as_deref(), &doc)?;
                    Ok(Outcome::Done)
                }
                None => {
                    json_out(out.as_deref(), &json!({"verdict": "none"}))?;
                    Ok(Outcome::No)
                }
            }
        }
    }
}

fn optimal_json(market: &FinancialMarket, best: &OptimalCompression, doc: &mut Value) -> Result<(), Failure> {
    let after = market.apply_compression(&best.compression).map_err(internal)?;
    let clearing = clearing_json(&after, &best.clearing, ClearingModel::Priority)?;
    doc["objective"] = json!(best.objective);
    doc["compression"] = compression_json(market, &best.compression);
    for key in ["payments", "defaulting", "solvent"] {
        doc[key] = clearing[key].clone();
    }
    Ok(())
}

fn generate(command: GenCommand) -> Result<Outcome, Failure> {
    match command {
        GenCommand::Er { n, seed, p, decimals, config, out } => {
            let mut cfg = match &config {
                Some(path) => serde_json::from_str::<GenConfig>(&read_input(path)?)
                    .map_err(|e| invalid(format!("{}: {e}", path.display())))?,
                None => GenConfig::synthetic(n.ok_or_else(|| invalid("--n is required without --config"))?, seed),
            };
            if let Some(n) = n {
                cfg.n = n;
            }
            if config.is_none() || seed != 0 {
                cfg.seed = seed;
            }
            if let Some(p) = p {
                cfg.p = p;
            }
            if let Some(d) = decimals {
                cfg.decimals = d;
            }
            let market = gen_erdos_renyi(&cfg).map_err(invalid)?;
            emit(out.as_deref(), &market_to_string(&market)).map_err(|e| write_failed(out.as_deref(), e))?;
            Ok(Outcome::Done)
        }
        GenCommand::Snowball { edges, n, seed, out } => {
            let file = fs::File::open(&edges).map_err(|e| invalid(format!("cannot read {}: {e}", edges.display())))?;
            let list = EdgeList::from_csv(file).map_err(|e| invalid(format!("{}: {e}", edges.display())))?;
            let market = snowball_sample(&list, n, seed).map_err(invalid)?;
            emit(out.as_deref(), &market_to_string(&market)).map_err(|e| write_failed(out.as_deref(), e))?;
            Ok(Outcome::Done)
        }
        GenCommand::Gadget { kind, params, out } => {
            let text = read_input(&params)?;
            let parsed: GadgetParams =
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", params.display())))?;
            let gadget = match (kind, parsed) {
                (GadgetKindArg::Partition, GadgetParams::Partition { values }) => partition_market(&values),
                (GadgetKindArg::Max2sat | GadgetKindArg::Max2satCycle, GadgetParams::Max2sat { variables, clauses, k }) => {
                    let formula = TwoSatFormula::from_signed(variables, &clauses).map_err(invalid)?;
                    max2sat_market(&formula, k, matches!(kind, GadgetKindArg::Max2satCycle))
                }
                _ => return Err(invalid("--params does not match --kind")),
            }
            .map_err(invalid)?;
            emit(out.as_deref(), &market_to_string(&gadget.market)).map_err(|e| write_failed(out.as_deref(), e))?;
            if out.is_some() {
                println!("{}", gadget_meta_json(&gadget));
            }
            Ok(Outcome::Done)
        }
    }
}

fn gadget_meta_json(g: &GadgetMarket) -> Value {
    json!({
        "kind": g.meta.kind,
        "banks": g.market.n(),
        "arcs": g.market.arcs().len(),
        "threshold": g.meta.threshold,
        "distinguished": g.meta.distinguished.map(|b| g.market.names[b].clone()),
        "parameter": format_rational(&g.meta.parameter),
    })
}

fn simulate(config: &Path, out: &Path) -> Result<Outcome, Failure> {
    let cfg: ExperimentConfig =
        serde_json::from_str(&read_input(config)?).map_err(|e| invalid(format!("{}: {e}", config.display())))?;
    fs::create_dir_all(out).map_err(|e| internal(format!("cannot create {}: {e}", out.display())))?;
    let report = run_experiment_with(&cfg, |row| {
        eprintln!(
            "n={} instance={} baseline={} greedy={} milp={} ({:?})",
            row.size, row.index, row.defaults_baseline, row.defaults_greedy, row.defaults_milp, row.milp_status
        );
    })
    .map_err(|e| match e {
        netclear::simlab::SimError::Config(_) => invalid(e),
        other => internal(other),
    })?;
    let summary = report.summary_csv().map_err(internal)?;
    let summary_path = out.join("summary.csv");
    write_atomic(&summary_path, summary.as_bytes()).map_err(|e| write_failed(Some(&summary_path), e))?;
    let rows_path = out.join("instances.jsonl");
    write_atomic(&rows_path, report.rows_json_lines().as_bytes()).map_err(|e| write_failed(Some(&rows_path), e))?;
    Ok(Outcome::Done)
}
