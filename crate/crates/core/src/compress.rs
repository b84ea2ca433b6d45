//! Greedy cycle cancelling and the flow-based decider for saving all banks but one.

use thiserror::Error;

use crate::clearing::{clear, ClearError};
use crate::lp::{solve_lp, LpError, LpOutcome, LpProblem, Relation, Sense};
use crate::market::{zero_matrix, ClearingModel, ClearingVector, Compression, FinancialMarket, Matrix};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompressError {
    #[error("bank {bank} has a negative endowment")]
    NegativeEndowment { bank: usize },
}

/// First cycle found by depth-first search over banks in index order, restricted to `allowed`.
///
/// Returns the cycle as a list of banks `v0 → v1 → … → v0`.
pub fn find_cycle(l: &Matrix, allowed: &[bool]) -> Option<Vec<usize>> {
    let n = l.len();
    // 0 unvisited, 1 on stack, 2 done.
    let mut color = vec![0u8; n];
    for start in 0..n {
        if !allowed[start] || color[start] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let mut advanced = false;
            while *next < n {
                let w = *next;
                *next += 1;
                if !allowed[w] || !l[v][w].is_positive() {
                    continue;
                }
                match color[w] {
                    0 => {
                        color[w] = 1;
                        stack.push((w, 0));
                        advanced = true;
                        break;
                    }
                    1 => {
                        let pos = stack.iter().position(|&(u, _)| u == w).expect("gray node is on the stack");
                        return Some(stack[pos..].iter().map(|&(u, _)| u).collect());
                    }
                    _ => {}
                }
            }
            if !advanced {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Cancels cycles among `allowed` banks by their bottleneck value until none is left.
fn cancel_cycles(market: &FinancialMarket, allowed: &[bool]) -> (FinancialMarket, Compression) {
    let n = market.n();
    let mut residual = market.liabilities.clone();
    let mut c = zero_matrix(n);
    while let Some(cycle) = find_cycle(&residual, allowed) {
        let arcs: Vec<(usize, usize)> = (0..cycle.len()).map(|k| (cycle[k], cycle[(k + 1) % cycle.len()])).collect();
        let eps = arcs.iter().map(|&(i, j)| residual[i][j].clone()).min().expect("cycles have arcs");
        for (i, j) in arcs {
            residual[i][j] -= &eps;
            c[i][j] += &eps;
        }
    }
    (market.apply_unchecked(&c), Compression { amounts: c })
}

/// Repeatedly cancels a cycle by its smallest liability until the liability graph is acyclic.
pub fn greedy_compress(market: &FinancialMarket) -> Result<(Compression, FinancialMarket), CompressError> {
    if let Some(bank) = (0..market.n()).find(|&i| market.endowments[i].is_negative()) {
        return Err(CompressError::NegativeEndowment { bank });
    }
    let (residual, c) = cancel_cycles(market, &vec![true; market.n()]);
    Ok((c, residual))
}

/// Cancels every cycle that avoids bank `b`.
pub fn reduce_to_acyclic(market: &FinancialMarket, b: usize) -> (FinancialMarket, Compression) {
    let mut allowed = vec![true; market.n()];
    allowed[b] = false;
    cancel_cycles(market, &allowed)
}

/// Whether the positive liabilities form an acyclic digraph.
pub fn is_acyclic(l: &Matrix) -> bool {
    find_cycle(l, &vec![true; l.len()]).is_none()
}

/// Liability network with bank `source` split into a source (its outgoing arcs) and a sink
/// (its incoming arcs). Every other bank conserves flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    pub n: usize,
    pub source: usize,
    pub arcs: Vec<(usize, usize)>,
    pub capacity: Vec<Rational>,
    pub lower: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowTarget {
    /// Any feasible flow.
    Any,
    /// Largest total flow leaving the source.
    Max,
    /// Total flow leaving the source equals this value.
    Size(Rational),
}

impl FlowNetwork {
    pub fn from_market(market: &FinancialMarket, source: usize) -> Self {
        let arcs = market.arcs();
        let capacity = arcs.iter().map(|&(i, j)| market.liabilities[i][j].clone()).collect();
        let lower = vec![Rational::zero(); arcs.len()];
        FlowNetwork { n: market.n(), source, arcs, capacity, lower }
    }

    pub fn arc_index(&self, from: usize, to: usize) -> Option<usize> {
        self.arcs.iter().position(|&a| a == (from, to))
    }

    /// Arcs leaving the source, as `(arc index, head)`.
    pub fn source_arcs(&self) -> Vec<(usize, usize)> {
        self.arcs.iter().enumerate().filter(|(_, a)| a.0 == self.source).map(|(k, a)| (k, a.1)).collect()
    }

    /// Flow LP with one variable per arc (variable `k` is arc `k`).
    pub fn to_lp(&self, target: &FlowTarget) -> LpProblem {
        let sense = if *target == FlowTarget::Max { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LpProblem::new(sense);
        for (k, &(i, j)) in self.arcs.iter().enumerate() {
            lp.add_var(format!("f_{}_{}", i + 1, j + 1), Some(self.lower[k].clone()), Some(self.capacity[k].clone()));
        }
        for v in 0..self.n {
            if v == self.source {
                continue;
            }
            let mut coeffs = Vec::new();
            for (k, &(i, j)) in self.arcs.iter().enumerate() {
                if j == v {
                    coeffs.push((k, Rational::one()));
                } else if i == v {
                    coeffs.push((k, -Rational::one()));
                }
            }
            if !coeffs.is_empty() {
                lp.add_constraint(format!("conserve_{}", v + 1), coeffs, Relation::Eq, Rational::zero());
            }
        }
        let size: Vec<(usize, Rational)> = self.source_arcs().into_iter().map(|(k, _)| (k, Rational::one())).collect();
        match target {
            FlowTarget::Any => {}
            FlowTarget::Max => lp.set_objective(size),
            FlowTarget::Size(s) => {
                lp.add_constraint("size", size, Relation::Eq, s.clone());
            }
        }
        lp
    }

    pub fn to_compression(&self, flow: &[Rational]) -> Compression {
        let mut c = zero_matrix(self.n);
        for (k, &(i, j)) in self.arcs.iter().enumerate() {
            c[i][j] = flow[k].clone();
        }
        Compression { amounts: c }
    }
}

/// A flow meeting `target` with per-arc lower bounds, or `None` if there is none.
pub fn flow_lp(
    network: &FlowNetwork,
    target: &FlowTarget,
    lower_bounds: Option<&[Rational]>,
) -> Result<Option<Vec<Rational>>, LpError> {
    let mut net = network.clone();
    if let Some(lb) = lower_bounds {
        if lb.iter().zip(&net.capacity).any(|(l, c)| l > c) {
            return Ok(None);
        }
        net.lower = lb.to_vec();
    }
    let lp = net.to_lp(target);
    Ok(solve_lp(&lp)?.into_optimal().map(|s| s.values))
}

/// A compression under which at most one bank defaults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// The bank allowed to default; `None` when the market already clears with no default.
    pub bank: Option<usize>,
    pub compression: Compression,
    pub clearing: ClearingVector,
    pub defaulting: Vec<usize>,
}

/// Decides whether some compression leaves at most one bank in default.
///
/// Every witness is re-cleared exactly before it is returned.
pub fn save_all_but_one(market: &FinancialMarket, model: ClearingModel) -> Result<Option<Witness>, ClearError> {
    let market = match model {
        ClearingModel::Proportional => market.with_single_groups(),
        ClearingModel::Priority => market.clone(),
    };
    let n = market.n();
    let p = clear(&market, model)?;
    let report = market.defaulting(&p.payments);
    if report.count() == 0 {
        return Ok(Some(Witness { bank: None, compression: Compression::zeros(n), clearing: p, defaulting: vec![] }));
    }
    // The flow LP runs on the full market: cancelling cycles among the other banks first can
    // use up arcs that the only good flow through `b` needs.
    for b in 0..n {
        let Some(q) = residual_demand(&market, b) else { continue };
        for gamma in (0..=market.group_count(b)).rev() {
            let Some(total) = suitable_flow(&market, b, gamma, &q)? else { continue };
            let Ok(after) = market.apply_compression(&total) else { continue };
            let p = clear(&after, model)?;
            let defaulting = after.defaulting(&p.payments).defaulting;
            if defaulting.iter().all(|&d| d == b) {
                return Ok(Some(Witness { bank: Some(b), compression: total, clearing: p, defaulting }));
            }
        }
    }
    Ok(None)
}

/// `q_i = max(0, L_i - e_i - Σ_{j≠b} L_ji)`: what bank `i` must receive from `b` to stay solvent.
///
/// `None` when some `q_i` exceeds `L_bi`, so `b` cannot be the only default.
pub fn residual_demand(market: &FinancialMarket, b: usize) -> Option<Vec<Rational>> {
    let n = market.n();
    let mut q = vec![Rational::zero(); n];
    for i in (0..n).filter(|&i| i != b) {
        let inflow: Rational = (0..n).filter(|&j| j != b).map(|j| &market.liabilities[j][i]).sum();
        let need = market.total_liability(i) - &market.endowments[i] - inflow;
        q[i] = need.max(Rational::zero());
        if q[i] > market.liabilities[b][i] {
            return None;
        }
    }
    Some(q)
}

/// A flow through `b` under which every other bank is solvent when `b` fully pays its
/// first `gamma` priority groups and pays group `gamma + 1` pro rata.
fn suitable_flow(
    market: &FinancialMarket,
    b: usize,
    gamma: usize,
    q: &[Rational],
) -> Result<Option<Compression>, ClearError> {
    let groups = &market.priorities[b];
    let plus: Vec<usize> = groups[..gamma].iter().flatten().copied().collect();
    let prop: Vec<usize> = groups.get(gamma).cloned().unwrap_or_default();
    let zero: Vec<usize> = groups.iter().skip(gamma + 1).flatten().copied().collect();
    let l = &market.liabilities;
    let beta = &market.beta[b];
    let incoming: Rational = (0..market.n()).filter(|&i| i != b).map(|i| &l[i][b]).sum();
    let a_b: Rational = &market.alpha[b] * &market.endowments[b] + beta * &incoming
        - plus.iter().map(|&i| &l[b][i]).sum::<Rational>();
    let l_prop: Rational = prop.iter().map(|&i| &l[b][i]).sum();
    let q_prop: Rational = prop.iter().map(|&i| &q[i]).sum();
    let q_zero: Rational = zero.iter().map(|&i| &q[i]).sum();

    let mut net = FlowNetwork::from_market(market, b);
    let arc = |net: &FlowNetwork, i: usize| net.arc_index(b, i).expect("creditor arcs exist");
    for &i in &zero {
        let k = arc(&net, i);
        net.lower[k] = q[i].clone();
        net.capacity[k] = q[i].clone();
    }
    let var = |i: usize| arc(&net, i);
    let one = Rational::one();

    // b can fully pay N⁺: A_b - β|f| + |f⁺| ≥ 0.
    let plus_ok = |lp: &mut LpProblem| {
        let mut coeffs: Vec<(usize, Rational)> = plus.iter().map(|&i| (var(i), &one - beta)).collect();
        coeffs.extend(prop.iter().chain(&zero).map(|&i| (var(i), -beta)));
        lp.add_constraint("plus_paid", coeffs, Relation::Ge, -&a_b);
    };
    let solve = |lp: &LpProblem, net: &FlowNetwork| -> Result<Option<Compression>, ClearError> {
        Ok(match solve_lp(lp)? {
            LpOutcome::Optimal(s) => Some(net.to_compression(&s.values[..net.arcs.len()])),
            _ => None,
        })
    };

    if prop.is_empty() {
        let mut lp = net.to_lp(&FlowTarget::Any);
        plus_ok(&mut lp);
        return solve(&lp, &net);
    }

    if beta.is_one() {
        // L_bi (A_b - q⁰ - |f∝|) - q_i (L∝ - |f∝|) - f_bi (A_b - L∝ - q⁰) ≥ 0.
        let d0 = &a_b - &l_prop - &q_zero;
        let mut lp = net.to_lp(&FlowTarget::Any);
        plus_ok(&mut lp);
        for &i in &prop {
            let mut coeffs: Vec<(usize, Rational)> = prop.iter().map(|&j| (var(j), &q[i] - &l[b][i])).collect();
            coeffs.push((var(i), -d0.clone()));
            let rhs = &q[i] * &l_prop - &l[b][i] * &(&a_b - &q_zero);
            lp.add_constraint(format!("prop_ok_{}", i + 1), coeffs, Relation::Ge, rhs);
        }
        return solve(&lp, &net);
    }

    // β_b < 1: the flow can be taken maximal or of one closed-form size.
    let free: Vec<usize> = plus.iter().chain(&prop).copied().collect();
    let mut lp = net.to_lp(&FlowTarget::Any);
    lp.sense = Sense::Maximize;
    lp.set_objective(free.iter().map(|&i| (var(i), one.clone())).collect());
    let Some(max_sol) = solve_lp(&lp)?.into_optimal() else { return Ok(None) };
    let k_max = max_sol.objective.clone();
    let one_minus = &one - beta;
    let threshold = (&l_prop - &a_b + &q_zero) / &one_minus;
    if &k_max + &q_zero >= threshold {
        return Ok(Some(net.to_compression(&max_sol.values[..net.arcs.len()])));
    }
    let k_star = (&q_prop + &(beta * &q_zero) - &a_b) / &one_minus;
    let mut sizes = vec![k_max.clone()];
    if !k_star.is_negative() && k_star < k_max {
        sizes.push(k_star);
    }
    for k in sizes {
        // With K = |f⁺| + |f∝| fixed, L_bi X - q_i Y - f_bi D ≥ 0 is linear:
        // X = A_b - β(K + q⁰) + |f⁺|, Y = L∝ - |f∝|, D = A_b - L∝ - βq⁰ + (1-β)K.
        let x0 = &a_b - &(beta * &(&k + &q_zero));
        let d = &a_b - &l_prop - &(beta * &q_zero) + &(&one_minus * &k);
        let mut lp = net.to_lp(&FlowTarget::Any);
        plus_ok(&mut lp);
        lp.add_constraint("size", free.iter().map(|&i| (var(i), one.clone())).collect(), Relation::Eq, k.clone());
        for &i in &prop {
            let mut coeffs: Vec<(usize, Rational)> = plus.iter().map(|&j| (var(j), l[b][i].clone())).collect();
            coeffs.extend(prop.iter().map(|&j| (var(j), if j == i { &q[i] - &d } else { q[i].clone() })));
            let rhs = &q[i] * &l_prop - &l[b][i] * &x0;
            lp.add_constraint(format!("prop_ok_{}", i + 1), coeffs, Relation::Ge, rhs);
        }
        if let Some(c) = solve(&lp, &net)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::market::check_clearing;

    fn q(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    #[test]
    fn greedy_examples() {
        let ring = fixtures::ring3();
        let (c, res) = greedy_compress(&ring).unwrap();
        assert_eq!(c.amounts, ring.liabilities);
        assert!(res.arcs().is_empty());

        let tc = fixtures::twocycle();
        let (c, res) = greedy_compress(&tc).unwrap();
        assert_eq!(c.amounts[0][1], q(2));
        assert_eq!(res.arcs(), vec![(0, 3)]);
        let p = clear(&res, ClearingModel::Proportional).unwrap();
        assert_eq!(res.defaulting(&p.payments).defaulting, vec![0]);

        let chains = fixtures::twochains();
        let (c, res) = greedy_compress(&chains).unwrap();
        assert!(c.is_zero());
        assert_eq!(res, chains);
    }

    #[test]
    fn greedy_rejects_negative_endowment() {
        let mut m = fixtures::ring3();
        m.endowments[2] = q(-1);
        assert_eq!(greedy_compress(&m), Err(CompressError::NegativeEndowment { bank: 2 }));
    }

    #[test]
    fn reduction_examples() {
        let ring = fixtures::ring3();
        let (r, c) = reduce_to_acyclic(&ring, 0);
        assert!(c.is_zero());
        assert_eq!(r, ring);

        let (r, c) = reduce_to_acyclic(&fixtures::twocycle(), 3);
        assert_eq!(c.volume(), q(6));
        assert_eq!(r.arcs(), vec![(0, 3)]);

        // Two disjoint 2-cycles; b inside the first keeps it.
        let mut l = zero_matrix(4);
        l[0][1] = q(1);
        l[1][0] = q(1);
        l[2][3] = q(1);
        l[3][2] = q(1);
        let m = FinancialMarket::without_default_costs(l, vec![q(0); 4]);
        let (r, _) = reduce_to_acyclic(&m, 0);
        assert_eq!(r.arcs(), vec![(0, 1), (1, 0)]);
    }

    fn net(n: usize, arcs: &[(usize, usize, i64)]) -> FlowNetwork {
        FlowNetwork {
            n,
            source: 0,
            arcs: arcs.iter().map(|&(i, j, _)| (i, j)).collect(),
            capacity: arcs.iter().map(|&(_, _, c)| q(c)).collect(),
            lower: vec![q(0); arcs.len()],
        }
    }

    #[test]
    fn flow_examples() {
        let single = net(2, &[(0, 1, 5), (1, 0, 5)]);
        let f = flow_lp(&single, &FlowTarget::Size(q(5)), None).unwrap().unwrap();
        assert_eq!(f, vec![q(5), q(5)]);
        assert_eq!(flow_lp(&single, &FlowTarget::Size(q(5)), Some(&[q(6), q(0)])).unwrap(), None);

        // Diamond: source 0 = b, sink side also 0; inner nodes 1, 2.
        let arcs = [(0, 1, 3), (0, 2, 2), (1, 2, 1), (1, 0, 2), (2, 0, 4)];
        let diamond = net(3, &arcs);
        let f = flow_lp(&diamond, &FlowTarget::Max, None).unwrap().unwrap();
        let value: Rational = diamond.source_arcs().iter().map(|&(k, _)| f[k].clone()).sum();
        // Minimum cut: the source side holds b⁺ and a subset of inner nodes, never b⁻.
        let mut best = i64::MAX;
        for mask in 0..4u32 {
            let side = |v: usize| mask >> (v - 1) & 1 == 1;
            let cut: i64 = arcs
                .iter()
                .filter(|&&(i, j, _)| (i == 0 || side(i)) && !(j != 0 && side(j)))
                .map(|&(_, _, c)| c)
                .sum();
            best = best.min(cut);
        }
        assert_eq!(value, q(best));
        assert_eq!(value, q(5));
    }

    #[test]
    fn save_examples() {
        let tc = fixtures::twocycle();
        let w = save_all_but_one(&tc, ClearingModel::Proportional).unwrap().unwrap();
        assert_eq!(w.bank, Some(0));
        assert_eq!(w.defaulting, vec![0]);
        let after = tc.apply_compression(&w.compression).unwrap();
        assert!(check_clearing(&after, &w.clearing, ClearingModel::Proportional).is_ok());

        assert_eq!(save_all_but_one(&fixtures::twochains(), ClearingModel::Proportional).unwrap(), None);
        assert_eq!(save_all_but_one(&fixtures::twochains(), ClearingModel::Priority).unwrap(), None);

        let w = save_all_but_one(&fixtures::ring3(), ClearingModel::Proportional).unwrap().unwrap();
        assert_eq!(w.bank, None);
        assert!(w.compression.is_zero());
    }

    #[test]
    fn flow_may_need_arcs_of_cycles_avoiding_the_defaulter() {
        // Bank 3 has negative net worth. The only rescue routes 2 along 3 → 2 → 1 → 3, which needs
        // the arc 2 → 1 that cancelling the cycle 1 → 2 → 1 would remove.
        let mut l = zero_matrix(4);
        l[0][1] = q(3);
        l[0][2] = q(2);
        l[1][0] = q(2);
        l[1][3] = q(3);
        l[2][1] = q(3);
        let half = Rational::new(1, 2);
        let m = FinancialMarket::from_parts(
            (1..=4).map(|i| i.to_string()).collect(),
            l,
            vec![q(3), q(0), q(0), q(3)],
            vec![q(0), q(0), q(0), q(1)],
            vec![half, q(1), q(0), q(0)],
        );
        let (reduced, _) = reduce_to_acyclic(&m, 2);
        assert!(reduced.liabilities[1][0].is_zero());
        let w = save_all_but_one(&m, ClearingModel::Proportional).unwrap().unwrap();
        assert_eq!(w.bank, Some(2));
        assert_eq!(w.defaulting, vec![2]);
        assert!(!w.compression.amounts[1][0].is_zero());
        // Starting from the reduced market no witness exists.
        assert_eq!(save_all_but_one(&reduced, ClearingModel::Proportional).unwrap().map(|w| w.defaulting.len()), None);
    }

    #[test]
    fn residual_demand_rejects_unpayable_bank() {
        // Bank 1 owes 5 but is owed only 1, by bank 0.
        let mut l = zero_matrix(3);
        l[0][1] = q(1);
        l[1][2] = q(5);
        let m = FinancialMarket::without_default_costs(l, vec![q(1), q(0), q(0)]);
        assert_eq!(residual_demand(&m, 0), None);
        assert_eq!(residual_demand(&m, 1).unwrap(), vec![q(0), q(0), q(0)]);
    }
}
