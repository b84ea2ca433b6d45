//! Best-bound branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::rational::Rational;

use super::simplex::{LpStats, Simplex};
use super::{LpError, LpOutcome, MilpProblem, Sense, Solution};

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: u64,
    /// Cumulative simplex steps over the whole search.
    pub step_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Only solutions strictly better than this objective are of interest.
    pub cutoff: Option<Rational>,
    /// A known feasible point used as the starting incumbent.
    pub incumbent: Option<Vec<Rational>>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { node_limit: 200_000, step_limit: None, time_limit: None, cutoff: None, incumbent: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpReport {
    pub outcome: LpOutcome,
    pub nodes: u64,
    pub stats: LpStats,
}

struct Node {
    bound: Rational,
    seq: u64,
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: smallest bound first, newest first among equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.cmp(&self.bound).then(self.seq.cmp(&other.seq))
    }
}

pub fn solve_milp(problem: &MilpProblem) -> Result<MilpReport, LpError> {
    solve_milp_with(problem, &MilpOptions::default())
}

pub fn solve_milp_with(problem: &MilpProblem, options: &MilpOptions) -> Result<MilpReport, LpError> {
    problem.check()?;
    let base = &problem.base;
    let minimize = base.sense == Sense::Minimize;
    let to_min = |v: Rational| if minimize { v } else { -v };
    let integral_objective = base
        .objective
        .iter()
        .all(|(j, c)| c.is_integer() && problem.binaries.contains(j));

    let mut incumbent: Option<(Rational, Vec<Rational>)> = None;
    if let Some(seed) = &options.incumbent {
        let integral = problem.binaries.iter().all(|&j| seed.get(j).is_some_and(|v| v.is_zero() || v.is_one()));
        if integral && base.is_feasible(seed) {
            incumbent = Some((to_min(base.objective_value(seed)), seed.clone()));
        }
    }
    let cutoff = options.cutoff.clone().map(to_min);
    let threshold = |inc: &Option<(Rational, Vec<Rational>)>| -> Option<Rational> {
        match (inc.as_ref().map(|i| i.0.clone()), cutoff.clone()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    };
    let prunable = |bound: &Rational, thr: &Option<Rational>| match thr {
        None => false,
        Some(t) if integral_objective => &bound.ceil() >= t,
        Some(t) => bound >= t,
    };

    let started = Instant::now();
    let mut lp = Simplex::new(base);
    lp.set_step_limit(options.step_limit);
    let mut current: Vec<Option<bool>> = vec![None; problem.binaries.len()];
    let original: Vec<_> = problem.binaries.iter().map(|&j| lp.bounds(j).0.clone().zip(lp.bounds(j).1.clone())).collect();

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node { bound: Rational::zero(), seq, fixings: Vec::new() });
    let mut nodes = 0u64;
    let mut root = true;

    let exhausted = |nodes: u64, heap: &BinaryHeap<Node>, inc: &Option<(Rational, Vec<Rational>)>, extra: Option<&Rational>| {
        let mut bound: Option<Rational> = heap.iter().map(|n| n.bound.clone()).min();
        if let Some(e) = extra {
            bound = Some(bound.map_or(e.clone(), |b| b.min(e.clone())));
        }
        let unmin = |v: Rational| if minimize { v } else { -v };
        LpError::BudgetExceeded {
            nodes,
            incumbent: inc.as_ref().map(|(v, x)| Solution { values: x.clone(), objective: unmin(v.clone()) }),
            bound: bound.map(unmin),
        }
    };

    while let Some(node) = heap.pop() {
        if !root && prunable(&node.bound, &threshold(&incumbent)) {
            continue;
        }
        if nodes >= options.node_limit || options.time_limit.is_some_and(|t| started.elapsed() >= t) {
            let b = node.bound.clone();
            return Err(exhausted(nodes, &heap, &incumbent, Some(&b)));
        }
        nodes += 1;

        let mut wanted: Vec<Option<bool>> = vec![None; problem.binaries.len()];
        for &(k, v) in &node.fixings {
            wanted[k] = Some(v);
        }
        for k in 0..wanted.len() {
            if wanted[k] != current[k] {
                let j = problem.binaries[k];
                match wanted[k] {
                    Some(v) => {
                        let val = if v { Rational::one() } else { Rational::zero() };
                        lp.set_bounds(j, Some(val.clone()), Some(val));
                    }
                    None => {
                        let (l, u) = original[k].clone().expect("binaries are bounded");
                        lp.set_bounds(j, Some(l), Some(u));
                    }
                }
                current[k] = wanted[k];
            }
        }

        let outcome = match lp.solve() {
            Ok(o) => o,
            Err(LpError::PivotLimit(_)) => {
                let b = node.bound.clone();
                return Err(exhausted(nodes, &heap, &incumbent, Some(&b)));
            }
            Err(e) => return Err(e),
        };
        let sol = match outcome {
            LpOutcome::Infeasible => {
                root = false;
                continue;
            }
            LpOutcome::Unbounded => {
                return Ok(MilpReport { outcome: LpOutcome::Unbounded, nodes, stats: lp.stats() });
            }
            LpOutcome::Optimal(s) => s,
        };
        root = false;
        let value = to_min(sol.objective.clone());
        if prunable(&value, &threshold(&incumbent)) {
            continue;
        }

        // Fractional binary with the lowest class, then most fractional, then lowest id.
        let half = Rational::new(1, 2);
        let mut pick: Option<(u32, Rational, usize, usize)> = None;
        for (k, &j) in problem.binaries.iter().enumerate() {
            let v = &sol.values[j];
            if v.is_zero() || v.is_one() {
                continue;
            }
            let key = (problem.branch_class[k], (v - &half).abs(), j, k);
            let better = match &pick {
                None => true,
                Some(p) => (key.0, &key.1, key.2) < (p.0, &p.1, p.2),
            };
            if better {
                pick = Some(key);
            }
        }
        match pick {
            None => {
                if incumbent.as_ref().is_none_or(|(best, _)| &value < best) {
                    incumbent = Some((value, sol.values));
                }
            }
            Some((_, _, j, k)) => {
                let up_first = sol.values[j] >= half;
                for side in [!up_first, up_first] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((k, side));
                    seq += 1;
                    heap.push(Node { bound: value.clone(), seq, fixings });
                }
            }
        }
    }

    let outcome = match incumbent {
        Some((_, values)) => {
            let objective = base.objective_value(&values);
            LpOutcome::Optimal(Solution { values, objective })
        }
        None => LpOutcome::Infeasible,
    };
    Ok(MilpReport { outcome, nodes, stats: lp.stats() })
}
