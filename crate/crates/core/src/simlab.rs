//! Random market generators and the baseline / greedy / MILP experiment runner.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clearing::{clear, ClearError};
use crate::compress::greedy_compress;
use crate::market::{zero_matrix, ClearingModel, FinancialMarket, Matrix};
use crate::milp_compress::{optimal_compress, CompressOptions, MilpError, Scale};
use crate::rational::Rational;

/// Default decimal places of generated liabilities and endowments; default costs always use it.
pub const GRID_DECIMALS: u32 = 2;

fn default_decimals() -> u32 {
    GRID_DECIMALS
}

/// Seconds per MILP when an experiment config does not say otherwise.
pub const DEFAULT_MILP_SECONDS: f64 = 60.0;
/// Largest market size an experiment accepts unless `max_size` is raised.
pub const DEFAULT_MAX_SIZE: usize = 30;

fn default_time_limit() -> Option<f64> {
    Some(DEFAULT_MILP_SECONDS)
}

fn default_max_size() -> usize {
    DEFAULT_MAX_SIZE
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("edge list has only {available} banks, {wanted} requested")]
    Exhausted { available: usize, wanted: usize },
    #[error("edge list: {0}")]
    EdgeList(String),
    #[error(transparent)]
    Clear(#[from] ClearError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiabilityDist {
    Uniform { lo: f64, hi: f64 },
    /// Log-normal with the given mean and log-scale standard deviation.
    LogNormal { mean: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndowmentRule {
    /// `e_i ~ U[0, frac·L_i]`.
    UniformFraction { frac: f64 },
    /// `e_i = frac·L_i·X` with `X` log-normal of log-scale deviation `sigma` and log-mean 0.
    LogNormalNoise { sigma: f64, frac: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub p: f64,
    pub liabilities: LiabilityDist,
    pub endowments: EndowmentRule,
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub seed: u64,
    /// Liabilities and endowments are rounded to this many decimal places.
    #[serde(default = "default_decimals")]
    pub decimals: u32,
}

impl GenConfig {
    /// Synthetic setting of the simulations: `G(n, 0.2)`, liabilities in `[100, 1000]`,
    /// endowments in `[0, 0.8 L_i]`, `α ∈ [0.4, 0.8]`, `β ∈ [0.6, 0.9]`.
    pub fn synthetic(n: usize, seed: u64) -> Self {
        GenConfig {
            n,
            p: 0.2,
            liabilities: LiabilityDist::Uniform { lo: 100.0, hi: 1000.0 },
            endowments: EndowmentRule::UniformFraction { frac: 0.8 },
            alpha: (0.4, 0.8),
            beta: (0.6, 0.9),
            seed,
            decimals: GRID_DECIMALS,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::Config(msg.to_string()));
        if self.decimals > 6 {
            return bad("at most 6 decimal places are supported");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("edge probability outside [0, 1]");
        }
        match self.liabilities {
            LiabilityDist::Uniform { lo, hi } if !(lo > 0.0 && lo <= hi && hi.is_finite()) => {
                return bad("uniform liabilities need 0 < lo <= hi")
            }
            LiabilityDist::LogNormal { mean, sigma } if !(mean > 0.0 && sigma >= 0.0 && mean.is_finite()) => {
                return bad("log-normal liabilities need mean > 0 and sigma >= 0")
            }
            _ => {}
        }
        let frac = match self.endowments {
            EndowmentRule::UniformFraction { frac } => frac,
            EndowmentRule::LogNormalNoise { sigma, frac } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return bad("endowment noise sigma must be nonnegative");
                }
                frac
            }
        };
        if !(frac >= 0.0 && frac.is_finite()) {
            return bad("endowment fraction must be nonnegative");
        }
        for (name, (lo, hi)) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(SimError::Config(format!("{name} range must satisfy 0 <= lo <= hi <= 1")));
            }
        }
        Ok(())
    }
}

/// Generator for instance `index` of size `n`: one ChaCha8 stream per `(n, index)`.
pub fn instance_rng(seed: u64, n: usize, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | index as u64);
    rng
}

/// Largest multiple of `10^-decimals` not above `v`.
fn floor_to_grid(v: f64, decimals: u32) -> Rational {
    let scale = 10f64.powi(decimals as i32);
    Rational::new((v * scale).floor() as i64, 10i64.pow(decimals))
}

fn grid_step(decimals: u32) -> Rational {
    Rational::new(1, 10i64.pow(decimals))
}

fn draw_range<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> Rational {
    if lo == hi {
        return Rational::from_f64_rounded(lo, GRID_DECIMALS);
    }
    let v = Rational::from_f64_rounded(rng.random_range(lo..=hi), GRID_DECIMALS);
    // Rounding may step just outside the range.
    v.max(Rational::from_f64_rounded(lo, GRID_DECIMALS).max(Rational::zero()))
        .min(Rational::from_f64_rounded(hi, GRID_DECIMALS).min(Rational::one()))
}

fn draw_liability<R: Rng>(rng: &mut R, dist: &LiabilityDist, decimals: u32) -> Rational {
    match *dist {
        LiabilityDist::Uniform { lo, hi } => {
            let v = if lo == hi { lo } else { rng.random_range(lo..=hi) };
            Rational::from_f64_rounded(v, decimals)
                .max(Rational::from_f64_rounded(lo, decimals))
                .min(Rational::from_f64_rounded(hi, decimals))
                .max(grid_step(decimals))
        }
        LiabilityDist::LogNormal { mean, sigma } => {
            let mu = mean.ln() - sigma * sigma / 2.0;
            let d = LogNormal::new(mu, sigma).expect("validated parameters");
            Rational::from_f64_rounded(d.sample(rng), decimals).max(grid_step(decimals))
        }
    }
}

fn draw_endowments<R: Rng>(rng: &mut R, rule: &EndowmentRule, liabilities: &Matrix, decimals: u32) -> Vec<Rational> {
    liabilities
        .iter()
        .map(|row| {
            let total: Rational = row.iter().sum();
            let top = total.to_f64();
            match *rule {
                EndowmentRule::UniformFraction { frac } => {
                    if top == 0.0 || frac == 0.0 {
                        Rational::zero()
                    } else {
                        floor_to_grid(rng.random_range(0.0..=frac * top), decimals)
                    }
                }
                EndowmentRule::LogNormalNoise { sigma, frac } => {
                    let noise = LogNormal::new(0.0, sigma).expect("validated parameters").sample(rng);
                    floor_to_grid(frac * top * noise, decimals)
                }
            }
        })
        .collect()
}

fn finish_market(names: Vec<String>, l: Matrix, e: Vec<Rational>, alpha: Rational, beta: Rational) -> FinancialMarket {
    let n = names.len();
    FinancialMarket::from_parts(names, l, e, vec![alpha; n], vec![beta; n])
}

/// Erdős–Rényi market seeded from `config.seed`.
pub fn gen_erdos_renyi(config: &GenConfig) -> Result<FinancialMarket, SimError> {
    gen_erdos_renyi_with(config, &mut ChaCha8Rng::seed_from_u64(config.seed))
}

pub fn gen_erdos_renyi_with<R: Rng>(config: &GenConfig, rng: &mut R) -> Result<FinancialMarket, SimError> {
    config.validate()?;
    let n = config.n;
    let alpha = draw_range(rng, config.alpha);
    let beta = draw_range(rng, config.beta);
    let mut l = zero_matrix(n);
    for (i, row) in l.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && rng.random_bool(config.p) {
                *cell = draw_liability(rng, &config.liabilities, config.decimals);
            }
        }
    }
    let e = draw_endowments(rng, &config.endowments, &l, config.decimals);
    Ok(finish_market((1..=n).map(|i| i.to_string()).collect(), l, e, alpha, beta))
}

/// Directed liabilities between named parties.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    pub edges: Vec<(String, String, Rational)>,
}

#[derive(Deserialize)]
struct EdgeRecord {
    from: String,
    to: String,
    amount: String,
}

impl EdgeList {
    /// Reads CSV with header `from,to,amount`; amounts are decimals or fractions.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, SimError> {
        let mut edges = Vec::new();
        for (line, rec) in csv::Reader::from_reader(reader).deserialize::<EdgeRecord>().enumerate() {
            let rec = rec?;
            let amount: Rational = rec
                .amount
                .trim()
                .parse()
                .map_err(|_| SimError::EdgeList(format!("row {}: bad amount `{}`", line + 1, rec.amount)))?;
            if amount.is_negative() {
                return Err(SimError::EdgeList(format!("row {}: negative amount", line + 1)));
            }
            edges.push((rec.from, rec.to, amount));
        }
        Ok(EdgeList { edges })
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["from", "to", "amount"])?;
        for (from, to, amount) in &self.edges {
            let text = amount.to_decimal_string().unwrap_or_else(|| amount.to_string());
            w.write_record([from.as_str(), to.as_str(), text.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_market(market: &FinancialMarket) -> Self {
        let edges = market
            .arcs()
            .into_iter()
            .map(|(i, j)| (market.names[i].clone(), market.names[j].clone(), market.liabilities[i][j].clone()))
            .collect();
        EdgeList { edges }
    }

    /// Party names in order of first appearance, and summed positive liabilities between them.
    fn graph(&self) -> (Vec<String>, BTreeMap<(usize, usize), Rational>) {
        let mut names = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut id = |s: &String, names: &mut Vec<String>| {
            *index.entry(s.clone()).or_insert_with(|| {
                names.push(s.clone());
                names.len() - 1
            })
        };
        let mut arcs: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (from, to, amount) in &self.edges {
            let (i, j) = (id(from, &mut names), id(to, &mut names));
            if i != j && amount.is_positive() {
                *arcs.entry((i, j)).or_default() += amount;
            }
        }
        (names, arcs)
    }
}

/// Snowball sample of `target_n` parties, with endowments in `[0, 0.8 L_i]` and default
/// costs drawn as in the synthetic setting.
pub fn snowball_sample(edges: &EdgeList, target_n: usize, seed: u64) -> Result<FinancialMarket, SimError> {
    let (names, arcs) = edges.graph();
    if target_n == 0 {
        return Err(SimError::Config("target size must be at least 1".into()));
    }
    if names.len() < target_n {
        return Err(SimError::Exhausted { available: names.len(), wanted: target_n });
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for &(i, j) in arcs.keys() {
        out[i].push(j);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut current: Option<usize> = None;
    while picked.len() < target_n {
        let fresh: Vec<usize> = current.map(|c| out[c].iter().copied().filter(|v| !seen.contains(v)).collect()).unwrap_or_default();
        let next = match fresh.choose(&mut rng) {
            Some(&v) => v,
            None => {
                // Stuck: restart at a uniformly chosen unsampled party.
                let rest: Vec<usize> = (0..names.len()).filter(|v| !seen.contains(v)).collect();
                *rest.choose(&mut rng).expect("fewer parties sampled than exist")
            }
        };
        seen.insert(next);
        picked.push(next);
        current = Some(next);
    }
    let n = picked.len();
    let mut l = zero_matrix(n);
    for (a, &i) in picked.iter().enumerate() {
        for (b, &j) in picked.iter().enumerate() {
            if let Some(v) = arcs.get(&(i, j)) {
                l[a][b] = v.clone();
            }
        }
    }
    let defaults = GenConfig::synthetic(n, seed);
    let alpha = draw_range(&mut rng, defaults.alpha);
    let beta = draw_range(&mut rng, defaults.beta);
    let e = draw_endowments(&mut rng, &defaults.endowments, &l, GRID_DECIMALS);
    Ok(finish_market(picked.iter().map(|&i| names[i].clone()).collect(), l, e, alpha, beta))
}

/// Small random market for property checks: integer liabilities, endowments and default
/// costs on a coarse grid, and up to `max_groups` priority groups per bank.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMarketSpec {
    pub max_n: usize,
    pub max_liability: i64,
    pub density: f64,
    pub max_groups: usize,
    /// Endowments are drawn from `min_endowment..=max_liability`.
    pub min_endowment: i64,
    /// Default costs are multiples of `1/cost_grid`; 0 means no default costs.
    pub cost_grid: i64,
}

pub fn random_market<R: Rng>(rng: &mut R, spec: &SmallMarketSpec) -> FinancialMarket {
    let n = rng.random_range(2..=spec.max_n.max(2));
    let mut l = zero_matrix(n);
    for (i, row) in l.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && rng.random_bool(spec.density) {
                *cell = Rational::from_integer(rng.random_range(1..=spec.max_liability));
            }
        }
    }
    let e = (0..n).map(|_| Rational::from_integer(rng.random_range(spec.min_endowment..=spec.max_liability))).collect();
    let mut cost = || {
        if spec.cost_grid == 0 {
            Rational::one()
        } else {
            Rational::new(rng.random_range(0..=spec.cost_grid), spec.cost_grid)
        }
    };
    let alpha = (0..n).map(|_| cost()).collect();
    let beta = (0..n).map(|_| cost()).collect();
    let mut m = FinancialMarket::from_parts((1..=n).map(|i| i.to_string()).collect(), l, e, alpha, beta);
    for i in 0..n {
        let creditors: Vec<usize> = (0..n).filter(|&j| m.liabilities[i][j].is_positive()).collect();
        if creditors.is_empty() {
            continue;
        }
        let k = rng.random_range(1..=spec.max_groups.max(1).min(creditors.len()));
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        // Every group gets one creditor, the rest land anywhere.
        let mut order = creditors;
        for idx in (1..order.len()).rev() {
            order.swap(idx, rng.random_range(0..=idx));
        }
        for (pos, j) in order.into_iter().enumerate() {
            let g = if pos < k { pos } else { rng.random_range(0..k) };
            groups[g].push(j);
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        m.priorities[i] = groups;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilpStatus {
    Optimal,
    /// Budget ran out; the best solution found is reported.
    BudgetExceeded,
}

/// Defaults under each method for one market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub size: usize,
    pub index: u32,
    pub seed: u64,
    pub n: usize,
    pub defaults_baseline: usize,
    pub defaults_greedy: usize,
    pub defaults_milp: usize,
    pub milp_status: MilpStatus,
    pub milp_nodes: u64,
    pub baseline_ms: f64,
    pub greedy_ms: f64,
    pub milp_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub size: usize,
    pub method: String,
    pub mean_defaults: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<InstanceRow>,
    pub summary: Vec<SizeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    pub instances_per_size: u32,
    /// `n` and `seed` are overridden per instance.
    pub template: GenConfig,
    #[serde(default)]
    pub milp_node_limit: Option<u64>,
    #[serde(default)]
    pub milp_step_limit: Option<u64>,
    /// Seconds of wall time per MILP; `null` removes the limit.
    #[serde(default = "default_time_limit")]
    pub milp_time_limit: Option<f64>,
    #[serde(default = "default_max_size")]
    pub max_size: usize,
}

impl ExperimentConfig {
    pub fn milp_budget(&self) -> CompressOptions {
        CompressOptions {
            node_limit: self.milp_node_limit,
            step_limit: self.milp_step_limit,
            time_limit: self.milp_time_limit.map(Duration::from_secs_f64),
            ..CompressOptions::default()
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1000.0)
}

/// Baseline, greedy and MILP defaults of one market under proportional clearing.
pub fn evaluate(market: &FinancialMarket, budget: &CompressOptions) -> Result<InstanceRow, SimError> {
    let market = market.with_single_groups();
    let model = ClearingModel::Proportional;
    let (base, baseline_ms) = timed(|| clear(&market, model));
    let base = base?;
    let (greedy, greedy_ms) = timed(|| -> Result<usize, SimError> {
        let (_, residual) = greedy_compress(&market).map_err(|e| SimError::Config(e.to_string()))?;
        let p = clear(&residual, model)?;
        Ok(residual.defaulting(&p.payments).count())
    });
    let (milp, milp_ms) = timed(|| optimal_compress(&market, Scale::Auto, budget));
    let (defaults_milp, milp_status, milp_nodes) = match milp {
        Ok(r) => (r.report.count(), MilpStatus::Optimal, r.nodes),
        Err(MilpError::BudgetExceeded { nodes, incumbent: Some(best), .. }) => {
            (best.report.count(), MilpStatus::BudgetExceeded, nodes)
        }
        Err(e) => return Err(e.into()),
    };
    Ok(InstanceRow {
        size: market.n(),
        index: 0,
        seed: 0,
        n: market.n(),
        defaults_baseline: market.defaulting(&base.payments).count(),
        defaults_greedy: greedy?,
        defaults_milp,
        milp_status,
        milp_nodes,
        baseline_ms,
        greedy_ms,
        milp_ms,
    })
}

/// Mean and normal-approximation 95% interval `mean ± 1.96·sd/√k`.
pub fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let half = 1.96 * var.sqrt() / k.sqrt();
    (mean, mean - half, mean + half)
}

pub fn summarize(rows: &[InstanceRow]) -> Vec<SizeSummary> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.dedup();
    let mut out = Vec::new();
    for size in sizes {
        let group: Vec<&InstanceRow> = rows.iter().filter(|r| r.size == size).collect();
        let methods: [(&str, fn(&InstanceRow) -> usize); 3] = [
            ("baseline", |r| r.defaults_baseline),
            ("greedy", |r| r.defaults_greedy),
            ("milp", |r| r.defaults_milp),
        ];
        for (method, get) in methods {
            let values: Vec<f64> = group.iter().map(|r| get(r) as f64).collect();
            let (mean, lo, hi) = mean_ci(&values);
            out.push(SizeSummary { size, method: method.to_string(), mean_defaults: mean, ci_lo: lo, ci_hi: hi });
        }
    }
    out
}

/// Runs every size with `instances_per_size` Erdős–Rényi instances.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, SimError> {
    run_experiment_with(config, |_| {})
}

/// As [`run_experiment`], calling `progress` after each instance.
pub fn run_experiment_with(config: &ExperimentConfig, mut progress: impl FnMut(&InstanceRow)) -> Result<ExperimentReport, SimError> {
    config.template.validate()?;
    if let Some(&big) = config.sizes.iter().find(|&&n| n > config.max_size) {
        return Err(SimError::Config(format!("size {big} exceeds max_size {}", config.max_size)));
    }
    if matches!(config.milp_time_limit, Some(t) if !(t.is_finite() && t >= 0.0)) {
        return Err(SimError::Config("milp_time_limit must be a nonnegative number of seconds".into()));
    }
    let budget = config.milp_budget();
    let mut rows = Vec::new();
    for &size in &config.sizes {
        for index in 0..config.instances_per_size {
            let gen = GenConfig { n: size, ..config.template.clone() };
            let market = gen_erdos_renyi_with(&gen, &mut instance_rng(config.template.seed, size, index))?;
            let mut row = evaluate(&market, &budget)?;
            row.size = size;
            row.index = index;
            row.seed = config.template.seed;
            progress(&row);
            rows.push(row);
        }
    }
    let summary = summarize(&rows);
    Ok(ExperimentReport { rows, summary })
}

impl ExperimentReport {
    /// Summary as CSV with header `size,method,mean_defaults,ci_lo,ci_hi`.
    pub fn summary_csv(&self) -> Result<String, SimError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.summary {
            w.serialize(s)?;
        }
        let bytes = w.into_inner().map_err(|e| SimError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// One JSON object per instance.
    pub fn rows_json_lines(&self) -> String {
        self.rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize") + "\n").collect()
    }

    /// Rows without wall-clock timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> ExperimentReport {
        let rows = self
            .rows
            .iter()
            .map(|r| InstanceRow { baseline_ms: 0.0, greedy_ms: 0.0, milp_ms: 0.0, ..r.clone() })
            .collect();
        ExperimentReport { rows, summary: self.summary.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn erdos_renyi_examples() {
        let m = gen_erdos_renyi(&GenConfig::synthetic(10, 7)).unwrap();
        assert!(m.validate().is_empty());
        let lo = Rational::from_integer(100);
        let hi = Rational::from_integer(1000);
        for (i, j) in m.arcs() {
            assert!(m.liabilities[i][j] >= lo && m.liabilities[i][j] <= hi);
        }
        for i in 0..10 {
            let cap = m.total_liability(i) * Rational::new(4, 5);
            assert!(!m.endowments[i].is_negative() && m.endowments[i] <= cap);
        }

        let empty = gen_erdos_renyi(&GenConfig { p: 0.0, ..GenConfig::synthetic(6, 1) }).unwrap();
        assert!(empty.arcs().is_empty());
        let p = clear(&empty, ClearingModel::Proportional).unwrap();
        assert_eq!(empty.defaulting(&p.payments).count(), 0);

        let full = gen_erdos_renyi(&GenConfig { p: 1.0, ..GenConfig::synthetic(3, 1) }).unwrap();
        assert_eq!(full.arcs().len(), 6);
    }

    #[test]
    fn arc_count_near_binomial_mean() {
        let total: usize = (0..200).map(|s| gen_erdos_renyi(&GenConfig::synthetic(10, s)).unwrap().arcs().len()).sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 18.0).abs() < 1.5, "mean arc count {mean}");
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig { liabilities: LiabilityDist::LogNormal { mean: 200.0, sigma: 1.0 }, ..GenConfig::synthetic(12, 3) };
        assert_eq!(gen_erdos_renyi(&cfg).unwrap(), gen_erdos_renyi(&cfg).unwrap());
        let a = gen_erdos_renyi_with(&cfg, &mut instance_rng(3, 12, 0)).unwrap();
        let b = gen_erdos_renyi_with(&cfg, &mut instance_rng(3, 12, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(GenConfig { p: 1.5, ..GenConfig::synthetic(3, 0) }.validate().is_err());
        assert!(GenConfig { alpha: (0.9, 0.1), ..GenConfig::synthetic(3, 0) }.validate().is_err());
        let uni = LiabilityDist::Uniform { lo: 5.0, hi: 1.0 };
        assert!(GenConfig { liabilities: uni, ..GenConfig::synthetic(3, 0) }.validate().is_err());
    }

    #[test]
    fn snowball_examples() {
        let ring = EdgeList::from_market(&fixtures::ring3());
        let m = snowball_sample(&ring, 3, 5).unwrap();
        let mut names = m.names.clone();
        names.sort();
        assert_eq!(names, vec!["1", "2", "3"]);
        assert_eq!(m.arcs().len(), 3);

        let one = snowball_sample(&ring, 1, 5).unwrap();
        assert_eq!(one.n(), 1);
        assert!(one.arcs().is_empty());

        assert!(matches!(snowball_sample(&ring, 4, 0), Err(SimError::Exhausted { available: 3, wanted: 4 })));

        let star = EdgeList {
            edges: (1..=3).map(|k| ("c".to_string(), format!("l{k}"), Rational::one())).collect(),
        };
        for seed in 0..40 {
            let m = snowball_sample(&star, 2, seed).unwrap();
            assert_eq!(m.n(), 2);
            assert_ne!(m.names[0], m.names[1]);
            if m.names[0] == "c" {
                assert_eq!(m.arcs(), vec![(0, 1)]);
            }
        }
    }

    #[test]
    fn edge_list_csv_round_trip() {
        let list = EdgeList::from_market(&fixtures::twocycle());
        let mut buf = Vec::new();
        list.to_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("from,to,amount\n"));
        assert_eq!(EdgeList::from_csv(&buf[..]).unwrap(), list);
        assert!(EdgeList::from_csv("from,to,amount\na,b,x\n".as_bytes()).is_err());
    }

    #[test]
    fn fixture_rows() {
        let row = evaluate(&fixtures::twocycle(), &CompressOptions::default()).unwrap();
        assert_eq!((row.defaults_baseline, row.defaults_greedy, row.defaults_milp), (3, 1, 1));
        let row = evaluate(&fixtures::ring3(), &CompressOptions::default()).unwrap();
        assert_eq!((row.defaults_baseline, row.defaults_greedy, row.defaults_milp), (0, 0, 0));
    }

    #[test]
    fn empty_experiment() {
        let cfg = ExperimentConfig {
            sizes: vec![],
            instances_per_size: 3,
            template: GenConfig::synthetic(0, 1),
            milp_node_limit: None,
            milp_step_limit: None,
            milp_time_limit: None,
            max_size: DEFAULT_MAX_SIZE,
        };
        assert_eq!(run_experiment(&cfg).unwrap(), ExperimentReport::default());
    }

    #[test]
    fn hand_written_config_parses() {
        let text = r#"{"n": 5, "p": 0.3, "liabilities": {"log-normal": {"mean": 500, "sigma": 0.5}},
            "endowments": {"uniform-fraction": {"frac": 0.8}}, "alpha": [0.4, 0.8], "beta": [0.6, 0.9], "seed": 2}"#;
        let cfg: GenConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.liabilities, LiabilityDist::LogNormal { mean: 500.0, sigma: 0.5 });
        assert_eq!(cfg.decimals, GRID_DECIMALS);
        let back: GenConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn experiment_defaults_and_size_cap() {
        let template = serde_json::to_value(GenConfig::synthetic(0, 1)).unwrap();
        let json = serde_json::json!({"sizes": [31], "instances_per_size": 1, "template": template});
        let cfg: ExperimentConfig = serde_json::from_value(json).unwrap();
        assert_eq!(cfg.milp_time_limit, Some(DEFAULT_MILP_SECONDS));
        assert_eq!(cfg.max_size, DEFAULT_MAX_SIZE);
        assert!(matches!(run_experiment(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn ci_shrinks_with_more_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<f64> = (0..400).map(|_| rng.random_range(0..10) as f64).collect();
        let (_, lo_small, hi_small) = mean_ci(&draws[..10]);
        let (_, lo_big, hi_big) = mean_ci(&draws);
        assert!(hi_big - lo_big < hi_small - lo_small);
        assert_eq!(mean_ci(&[2.0, 2.0]), (2.0, 2.0, 2.0));
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let cfg = ExperimentConfig {
            sizes: vec![4, 5],
            instances_per_size: 2,
            template: GenConfig::synthetic(0, 11),
            milp_node_limit: Some(2_000),
            milp_step_limit: None,
            milp_time_limit: None,
            max_size: DEFAULT_MAX_SIZE,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.summary.len(), 6);
        for r in &a.rows {
            assert!(r.defaults_milp <= r.defaults_greedy);
        }
        let csv = a.summary_csv().unwrap();
        assert!(csv.starts_with("size,method,mean_defaults,ci_lo,ci_hi\n"));
        assert_eq!(a.rows_json_lines().lines().count(), 4);
    }
}
