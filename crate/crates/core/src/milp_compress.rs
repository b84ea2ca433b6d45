//! Exact MILP for the compression that minimises the number of defaulting banks under
//! priority-proportional clearing.

use std::time::Duration;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::clearing::{clear_priority_proportional, ClearError};
use crate::compress::greedy_compress;
use crate::lp::{solve_milp_with, LpError, LpOutcome, LpProblem, MilpOptions, MilpProblem, Relation, Sense};
use crate::market::{zero_matrix, ClearingVector, Compression, DefaultReport, FinancialMarket};
use crate::rational::{lcm_of_denominators, Rational};

/// Largest scale factor accepted by [`Scale::Auto`].
pub const MAX_AUTO_SCALE: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Least common multiple of every liability and endowment denominator.
    Auto,
    Factor(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Restrict {
    #[default]
    None,
    /// `C_ij = C_ji` for every pair of banks.
    Bilateral,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MilpError {
    #[error("bank {bank} has a negative endowment")]
    NegativeEndowment { bank: usize },
    #[error("scale {0} does not make every liability and endowment integral")]
    NonIntegral(u64),
    #[error("denominators need a scale above {MAX_AUTO_SCALE}")]
    ScaleTooLarge,
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExceeded { nodes: u64, bound: Option<Rational>, incumbent: Option<Box<OptimalCompression>> },
    #[error(transparent)]
    Lp(LpError),
    #[error(transparent)]
    Clear(#[from] ClearError),
}

/// Variable registry of the MILP. Data are multiplied by `scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpEncoding {
    pub scale: u64,
    pub arcs: Vec<(usize, usize)>,
    /// Bit variables `z_{a,ℓ}` per arc, least significant first. Empty for arcs on no cycle.
    pub bits: Vec<Vec<usize>>,
    /// `y_{a,ℓ} = λ z_{a,ℓ}`, parallel to `bits`.
    pub products: Vec<Vec<usize>>,
    pub payments: Vec<usize>,
    pub defaults: Vec<usize>,
    /// `λ_i^r` per bank and priority group.
    pub rates: Vec<Vec<usize>>,
    /// `μ_i^r`; empty for banks with fewer than two groups.
    pub critical: Vec<Vec<usize>>,
    pub default_income: Vec<usize>,
    /// Upper bound on each bank's scaled assets.
    pub asset_bound: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalCompression {
    pub compression: Compression,
    /// Maximal clearing of the compressed market.
    pub clearing: ClearingVector,
    pub report: DefaultReport,
    /// MILP objective of the extracted solution.
    pub objective: usize,
    pub nodes: u64,
    /// Raw MILP solution in scaled units.
    pub values: Vec<Rational>,
}

#[derive(Debug, Clone, Default)]
pub struct CompressOptions {
    pub restrict: Restrict,
    pub node_limit: Option<u64>,
    pub step_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Only solutions with fewer defaults than this are of interest.
    pub cutoff: Option<usize>,
}

pub fn resolve_scale(market: &FinancialMarket, scale: Scale) -> Result<u64, MilpError> {
    match scale {
        Scale::Auto => {
            let values = market.liabilities.iter().flatten().chain(&market.endowments);
            lcm_of_denominators(values, &BigInt::from(MAX_AUTO_SCALE))
                .and_then(|s| s.to_u64())
                .ok_or(MilpError::ScaleTooLarge)
        }
        Scale::Factor(s) => {
            let f = Rational::from_integer(s as i64);
            let integral = market.liabilities.iter().flatten().chain(&market.endowments).all(|v| (v * &f).is_integer());
            if s == 0 || !integral {
                Err(MilpError::NonIntegral(s))
            } else {
                Ok(s)
            }
        }
    }
}

/// Tarjan's strongly connected components; returns the component id of every bank.
fn components(market: &FinancialMarket) -> Vec<usize> {
    let n = market.n();
    let l = &market.liabilities;
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < n {
                let w = *next;
                *next += 1;
                if !l[v][w].is_positive() {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if w == v {
                        break;
                    }
                }
                ncomp += 1;
            }
        }
    }
    comp
}

/// Builds the MILP over data multiplied by the resolved scale.
pub fn build_milp(market: &FinancialMarket, scale: Scale, restrict: Restrict) -> Result<(MilpProblem, MilpEncoding), MilpError> {
    if let Some(bank) = (0..market.n()).find(|&i| market.endowments[i].is_negative()) {
        return Err(MilpError::NegativeEndowment { bank });
    }
    let s = resolve_scale(market, scale)?;
    let sf = Rational::from_integer(s as i64);
    let n = market.n();
    let lval = |i: usize, j: usize| &market.liabilities[i][j] * &sf;
    let e: Vec<Rational> = market.endowments.iter().map(|v| v * &sf).collect();
    let arcs = market.arcs();
    let arc_of = |i: usize, j: usize| arcs.binary_search(&(i, j)).ok();
    let comp = components(market);
    let zero = || Some(Rational::zero());
    let one = || Some(Rational::one());

    let mut lp = LpProblem::new(Sense::Minimize);
    let mut binaries = Vec::new();
    let mut classes = Vec::new();

    // Compression preserves net positions, so a bank with negative net worth defaults whatever C is.
    let defaults: Vec<usize> = (0..n)
        .map(|i| {
            let hopeless = &market.endowments[i] + &market.total_claims(i) < market.total_liability(i);
            lp.add_var(format!("q_{}", i + 1), if hopeless { one() } else { zero() }, one())
        })
        .collect();
    for &v in &defaults {
        binaries.push(v);
        classes.push(0);
    }
    let mut rates = Vec::with_capacity(n);
    let mut critical = Vec::with_capacity(n);
    for i in 0..n {
        let k = market.group_count(i);
        rates.push((0..k).map(|r| lp.add_var(format!("lambda_{}_{}", i + 1, r + 1), zero(), one())).collect::<Vec<_>>());
        let mus: Vec<usize> =
            if k >= 2 { (0..k).map(|r| lp.add_var(format!("mu_{}_{}", i + 1, r + 1), zero(), one())).collect() } else { vec![] };
        for &v in &mus {
            binaries.push(v);
            classes.push(1);
        }
        critical.push(mus);
    }
    let mut bits = Vec::with_capacity(arcs.len());
    for &(i, j) in &arcs {
        let width = if comp[i] == comp[j] { lval(i, j).to_bigint().expect("scaled liabilities are integral").bits() } else { 0 };
        let zs: Vec<usize> = (0..width).map(|b| lp.add_var(format!("z_{}_{}_{}", i + 1, j + 1, b), zero(), one())).collect();
        // High bits first: fixing them narrows C_a the most.
        for (b, &v) in zs.iter().enumerate() {
            binaries.push(v);
            classes.push(2 + (width - b as u64) as u32);
        }
        bits.push(zs);
    }
    let products: Vec<Vec<usize>> = arcs
        .iter()
        .zip(&bits)
        .map(|(&(i, j), zs)| (0..zs.len()).map(|b| lp.add_var(format!("y_{}_{}_{}", i + 1, j + 1, b), zero(), one())).collect())
        .collect();
    let payments: Vec<usize> = arcs.iter().map(|&(i, j)| lp.add_var(format!("p_{}_{}", i + 1, j + 1), zero(), None)).collect();
    let default_income: Vec<usize> = (0..n).map(|i| lp.add_var(format!("x_{}", i + 1), zero(), None)).collect();
    let asset_bound: Vec<Rational> = (0..n)
        .map(|i| e[i].clone().max(Rational::zero()) + (0..n).map(|j| lval(j, i)).sum::<Rational>())
        .collect();

    let compressed = |a: usize, sign: Rational| -> Vec<(usize, Rational)> {
        bits[a].iter().enumerate().map(|(b, &z)| (z, &sign * &Rational::pow2(b as u32))).collect()
    };

    // Bit expansion never exceeds the liability.
    for (a, &(i, j)) in arcs.iter().enumerate() {
        if !bits[a].is_empty() {
            lp.add_constraint(format!("cap_{}_{}", i + 1, j + 1), compressed(a, Rational::one()), Relation::Le, lval(i, j));
        }
    }
    for i in 0..n {
        let mut coeffs = Vec::new();
        for (a, &(u, v)) in arcs.iter().enumerate() {
            if v == i {
                coeffs.extend(compressed(a, Rational::one()));
            }
            if u == i {
                coeffs.extend(compressed(a, -Rational::one()));
            }
        }
        if !coeffs.is_empty() {
            lp.add_constraint(format!("circulation_{}", i + 1), coeffs, Relation::Eq, Rational::zero());
        }
    }
    if restrict == Restrict::Bilateral {
        for (a, &(i, j)) in arcs.iter().enumerate() {
            match arc_of(j, i) {
                Some(b) if i < j => {
                    let mut coeffs = compressed(a, Rational::one());
                    coeffs.extend(compressed(b, -Rational::one()));
                    if !coeffs.is_empty() {
                        lp.add_constraint(format!("bilateral_{}_{}", i + 1, j + 1), coeffs, Relation::Eq, Rational::zero());
                    }
                }
                Some(_) => {}
                None if !bits[a].is_empty() => {
                    lp.add_constraint(format!("bilateral_{}_{}", i + 1, j + 1), compressed(a, Rational::one()), Relation::Eq, Rational::zero());
                }
                None => {}
            }
        }
    }

    for i in 0..n {
        for (r, group) in market.priorities[i].iter().enumerate() {
            let lam = rates[i][r];
            for &j in group {
                let a = arc_of(i, j).expect("priority groups list creditors");
                // p_a = λ L_a - Σ 2^ℓ y_{a,ℓ}
                let mut coeffs = vec![(payments[a], Rational::one()), (lam, -lval(i, j))];
                coeffs.extend(products[a].iter().enumerate().map(|(b, &y)| (y, Rational::pow2(b as u32))));
                lp.add_constraint(format!("paydef_{}_{}", i + 1, j + 1), coeffs, Relation::Eq, Rational::zero());
                for (b, (&y, &z)) in products[a].iter().zip(&bits[a]).enumerate() {
                    let tag = format!("{}_{}_{}", i + 1, j + 1, b);
                    lp.add_constraint(format!("mc1_{tag}"), vec![(y, Rational::one()), (z, -Rational::one())], Relation::Le, Rational::zero());
                    lp.add_constraint(format!("mc2_{tag}"), vec![(y, Rational::one()), (lam, -Rational::one())], Relation::Le, Rational::zero());
                    lp.add_constraint(
                        format!("mc3_{tag}"),
                        vec![(y, Rational::one()), (lam, -Rational::one()), (z, -Rational::one())],
                        Relation::Ge,
                        -Rational::one(),
                    );
                }
            }
        }
        let mus = &critical[i];
        if !mus.is_empty() {
            let k = mus.len();
            lp.add_constraint(format!("group_{}", i + 1), mus.iter().map(|&m| (m, Rational::one())).collect(), Relation::Eq, Rational::one());
            for r in 0..k {
                let lam = rates[i][r];
                let mut lo = vec![(lam, Rational::one())];
                lo.extend(mus[r + 1..].iter().map(|&m| (m, -Rational::one())));
                lp.add_constraint(format!("shape_lo_{}_{}", i + 1, r + 1), lo, Relation::Ge, Rational::zero());
                let mut hi = vec![(lam, Rational::one())];
                hi.extend(mus[r..].iter().map(|&m| (m, -Rational::one())));
                lp.add_constraint(format!("shape_hi_{}_{}", i + 1, r + 1), hi, Relation::Le, Rational::zero());
            }
        }

        let out: Vec<usize> = (0..arcs.len()).filter(|&a| arcs[a].0 == i).collect();
        let inc: Vec<usize> = (0..arcs.len()).filter(|&a| arcs[a].1 == i).collect();
        let total = market.total_liability(i) * &sf;

        // Σ_out (L_a - C_a) ≤ L_i q_i + Σ_out p_a
        let mut coeffs: Vec<(usize, Rational)> = out.iter().flat_map(|&a| compressed(a, Rational::one())).collect();
        coeffs.push((defaults[i], total.clone()));
        coeffs.extend(out.iter().map(|&a| (payments[a], Rational::one())));
        lp.add_constraint(format!("fullpay_{}", i + 1), coeffs, Relation::Ge, total.clone());

        // (1 - (1-α)q) e + Σ_in p - (1-β) x - Σ_out p, bounded below by 0 and above by (1-q) R.
        let one_r = Rational::one();
        let mut budget: Vec<(usize, Rational)> = vec![(defaults[i], -(&(&one_r - &market.alpha[i]) * &e[i]))];
        budget.extend(inc.iter().map(|&a| (payments[a], Rational::one())));
        budget.push((default_income[i], -(&one_r - &market.beta[i])));
        budget.extend(out.iter().map(|&a| (payments[a], -Rational::one())));
        lp.add_constraint(format!("budget_lb_{}", i + 1), budget.clone(), Relation::Ge, -e[i].clone());
        let mut ub = budget;
        ub.push((defaults[i], asset_bound[i].clone()));
        lp.add_constraint(format!("budget_ub_{}", i + 1), ub, Relation::Le, &asset_bound[i] - &e[i]);

        // x = q Σ_in p
        let x = default_income[i];
        lp.add_constraint(format!("defincome1_{}", i + 1), vec![(x, one_r.clone()), (defaults[i], -asset_bound[i].clone())], Relation::Le, Rational::zero());
        let mut c2 = vec![(x, one_r.clone())];
        c2.extend(inc.iter().map(|&a| (payments[a], -Rational::one())));
        lp.add_constraint(format!("defincome2_{}", i + 1), c2.clone(), Relation::Le, Rational::zero());
        let mut c3 = c2;
        c3.push((defaults[i], -asset_bound[i].clone()));
        lp.add_constraint(format!("defincome3_{}", i + 1), c3, Relation::Ge, -asset_bound[i].clone());
    }
    lp.set_objective(defaults.iter().map(|&q| (q, Rational::one())).collect());

    let mut milp = MilpProblem::new(lp, binaries);
    milp.branch_class = classes;
    let encoding = MilpEncoding {
        scale: s,
        arcs,
        bits,
        products,
        payments,
        defaults,
        rates,
        critical,
        default_income,
        asset_bound,
    };
    Ok((milp, encoding))
}

impl MilpEncoding {
    /// Descaled compression read from the bit variables.
    pub fn compression(&self, n: usize, values: &[Rational]) -> Compression {
        let s = Rational::from_integer(self.scale as i64);
        let mut c = zero_matrix(n);
        for (a, &(i, j)) in self.arcs.iter().enumerate() {
            let v: Rational = self.bits[a].iter().enumerate().map(|(b, &z)| &values[z] * &Rational::pow2(b as u32)).sum();
            c[i][j] = v / &s;
        }
        Compression { amounts: c }
    }

    /// Full MILP point for a compression on the scaled grid and its clearing, or `None` if
    /// the compression is off the grid or uses an arc without bits.
    pub fn point(&self, market: &FinancialMarket, c: &Compression, p: &ClearingVector, num_vars: usize) -> Option<Vec<Rational>> {
        let s = Rational::from_integer(self.scale as i64);
        let mut v = vec![Rational::zero(); num_vars];
        for (a, &(i, j)) in self.arcs.iter().enumerate() {
            let scaled = (&c.amounts[i][j] * &s).to_bigint()?;
            if scaled.bits() > self.bits[a].len() as u64 {
                return None;
            }
            for (b, &z) in self.bits[a].iter().enumerate() {
                if scaled.bit(b as u64) {
                    v[z] = Rational::one();
                }
            }
            v[self.payments[a]] = &p.payments[i][j] * &s;
        }
        let after = market.apply_unchecked(&c.amounts);
        let report = after.defaulting(&p.payments);
        for i in 0..market.n() {
            let defaulted = report.defaulting.contains(&i);
            let groups = &market.priorities[i];
            // Critical group: first group not paid in full; the last group for solvent banks.
            let mut crit = groups.len().saturating_sub(1);
            let mut rates = vec![Rational::one(); groups.len()];
            if defaulted {
                crit = groups
                    .iter()
                    .position(|g| g.iter().map(|&j| &p.payments[i][j]).sum::<Rational>() < g.iter().map(|&j| &after.liabilities[i][j]).sum())
                    .unwrap_or(crit);
                for (r, g) in groups.iter().enumerate() {
                    let owed: Rational = g.iter().map(|&j| &after.liabilities[i][j]).sum();
                    let paid: Rational = g.iter().map(|&j| &p.payments[i][j]).sum();
                    rates[r] = match r.cmp(&crit) {
                        std::cmp::Ordering::Less => Rational::one(),
                        std::cmp::Ordering::Equal if owed.is_positive() => paid / owed,
                        _ => Rational::zero(),
                    };
                }
                v[self.defaults[i]] = Rational::one();
                v[self.default_income[i]] = market.income_nondef(&p.payments, i) * &s - &self.scaled_endowment(market, i);
            }
            for (r, &lam) in self.rates[i].iter().enumerate() {
                v[lam] = rates[r].clone();
            }
            if !self.critical[i].is_empty() {
                v[self.critical[i][crit]] = Rational::one();
            }
        }
        for (a, &(i, _)) in self.arcs.iter().enumerate() {
            let r = market.priorities[i].iter().position(|g| g.contains(&self.arcs[a].1)).expect("creditor is grouped");
            let lam = v[self.rates[i][r]].clone();
            for (&y, &z) in self.products[a].iter().zip(&self.bits[a]) {
                v[y] = &lam * &v[z];
            }
        }
        Some(v)
    }

    fn scaled_endowment(&self, market: &FinancialMarket, i: usize) -> Rational {
        &market.endowments[i] * &Rational::from_integer(self.scale as i64)
    }
}

fn extract(
    market: &FinancialMarket,
    enc: &MilpEncoding,
    values: Vec<Rational>,
    objective: &Rational,
    nodes: u64,
) -> Result<OptimalCompression, MilpError> {
    let compression = enc.compression(market.n(), &values);
    let after = market.apply_unchecked(&compression.amounts);
    let (clearing, _) = clear_priority_proportional(&after)?;
    let report = after.defaulting(&clearing.payments);
    let objective = objective.to_i64().expect("objective counts banks") as usize;
    Ok(OptimalCompression { compression, clearing, report, objective, nodes, values })
}

/// Solves the MILP, seeding the search with the uncompressed and the greedy market.
pub fn optimal_compress(market: &FinancialMarket, scale: Scale, options: &CompressOptions) -> Result<OptimalCompression, MilpError> {
    let (milp, enc) = build_milp(market, scale, options.restrict)?;
    let n = market.n();
    let num_vars = milp.base.num_vars();
    let mut seeds = vec![Compression::zeros(n)];
    if let Ok((c, _)) = greedy_compress(market) {
        seeds.push(c);
    }
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for c in seeds {
        let after = market.apply_unchecked(&c.amounts);
        let (p, _) = clear_priority_proportional(&after)?;
        if let Some(point) = enc.point(market, &c, &p, num_vars) {
            if milp.base.is_feasible(&point) {
                let obj = milp.base.objective_value(&point);
                if best.as_ref().is_none_or(|(b, _)| &obj < b) {
                    best = Some((obj, point));
                }
            }
        }
    }
    let opts = MilpOptions {
        node_limit: options.node_limit.unwrap_or(MilpOptions::default().node_limit),
        step_limit: options.step_limit,
        time_limit: options.time_limit,
        cutoff: options.cutoff.map(|c| Rational::from_integer(c as i64)),
        incumbent: best.map(|b| b.1),
    };
    match solve_milp_with(&milp, &opts) {
        Ok(report) => match report.outcome {
            LpOutcome::Optimal(sol) => extract(market, &enc, sol.values, &sol.objective, report.nodes),
            _ => Err(MilpError::Lp(LpError::Malformed("compression MILP has no solution below the cutoff".into()))),
        },
        Err(LpError::BudgetExceeded { nodes, incumbent, bound }) => {
            let incumbent = match incumbent {
                Some(sol) => Some(Box::new(extract(market, &enc, sol.values, &sol.objective, nodes)?)),
                None => None,
            };
            Err(MilpError::BudgetExceeded { nodes, bound, incumbent })
        }
        Err(e) => Err(MilpError::Lp(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::market::check_clearing;
    use crate::ClearingModel;

    fn solve(m: &FinancialMarket) -> OptimalCompression {
        optimal_compress(m, Scale::Auto, &CompressOptions::default()).unwrap()
    }

    #[test]
    fn ring_encoding() {
        let ring = fixtures::ring3();
        let (milp, enc) = build_milp(&ring, Scale::Factor(1), Restrict::None).unwrap();
        let widths: Vec<usize> = enc.bits.iter().map(Vec::len).collect();
        let expected: Vec<usize> =
            enc.arcs.iter().map(|&(i, j)| ring.liabilities[i][j].to_bigint().unwrap().bits() as usize).collect();
        assert_eq!(widths, expected);
        let circ = milp.base.constraints.iter().filter(|c| c.name.starts_with("circulation")).count();
        assert_eq!(circ, 3);
        assert_eq!(solve(&ring).objective, 0);
    }

    #[test]
    fn fixture_optima() {
        let tc = fixtures::twocycle();
        let r = solve(&tc);
        assert_eq!(r.objective, 1);
        assert_eq!(r.report.defaulting, vec![0]);
        let after = tc.apply_compression(&r.compression).unwrap();
        assert!(check_clearing(&after, &r.clearing, ClearingModel::Priority).is_ok());

        let chain = fixtures::chain();
        let r = solve(&chain);
        assert_eq!(r.objective, 1);
        assert!(r.compression.is_zero());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut m = fixtures::ring3();
        m.endowments[0] = Rational::from_integer(-1);
        assert!(matches!(build_milp(&m, Scale::Auto, Restrict::None), Err(MilpError::NegativeEndowment { bank: 0 })));
        let mut m = fixtures::ring3();
        m.liabilities[0][1] = Rational::new(1, 3);
        assert_eq!(build_milp(&m, Scale::Factor(2), Restrict::None).err(), Some(MilpError::NonIntegral(2)));
        assert_eq!(resolve_scale(&m, Scale::Auto).unwrap(), 3);
    }

    #[test]
    fn bilateral_restriction() {
        let tc = fixtures::twocycle();
        let r = optimal_compress(&tc, Scale::Auto, &CompressOptions { restrict: Restrict::Bilateral, ..Default::default() }).unwrap();
        assert!(r.compression.is_bilateral());
        assert_eq!(r.objective, 3);
    }

    #[test]
    fn seed_point_is_feasible() {
        let tc = fixtures::twocycle();
        let (milp, enc) = build_milp(&tc, Scale::Auto, Restrict::None).unwrap();
        let (c, _) = greedy_compress(&tc).unwrap();
        let (p, _) = clear_priority_proportional(&tc.apply_unchecked(&c.amounts)).unwrap();
        let point = enc.point(&tc, &c, &p, milp.base.num_vars()).unwrap();
        assert!(milp.base.is_feasible(&point));
        assert_eq!(milp.base.objective_value(&point), Rational::one());
    }

    #[test]
    fn components_split_chains() {
        let comp = components(&fixtures::twocycle());
        assert_eq!(comp[0], comp[1]);
        assert_eq!(comp[1], comp[2]);
        assert_ne!(comp[0], comp[3]);
    }
}
