//! Maximal clearing vectors via chained linear programs, plus a float fixed-point oracle.

use thiserror::Error;

use crate::lp::{solve_lp, LpError, LpOutcome, LpProblem, Relation, Sense, Solution};
use crate::market::{zero_matrix, ClearingModel, ClearingVector, FinancialMarket, Matrix};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClearError {
    #[error("bank {bank} has a negative endowment; use the priority-proportional algorithm")]
    NegativeEndowment { bank: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal solver inconsistency: {0}")]
    Internal(String),
}

/// Assumptions of one round: which banks default and each bank's critical group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegimeState {
    pub round: usize,
    /// `true` once a bank runs on its default costs `(α_i, β_i)` instead of `(1, 1)`.
    pub defaulted: Vec<bool>,
    /// Critical group index, 1-based; `0` means the bank pays nobody.
    pub gamma: Vec<usize>,
}

impl RegimeState {
    pub fn initial(market: &FinancialMarket) -> Self {
        RegimeState {
            round: 0,
            defaulted: vec![false; market.n()],
            gamma: (0..market.n()).map(|i| market.group_count(i)).collect(),
        }
    }

    /// Usable endowment and incoming-payment factor of bank `i` under this regime.
    ///
    /// A bank not yet known to default gets the larger of `e_i` and `α_i e_i`: with a
    /// negative endowment, defaulting can leave it more to pay with, and the optimistic
    /// regime must stay an upper bound on every clearing.
    pub fn effective(&self, market: &FinancialMarket, i: usize) -> (Rational, Rational) {
        let e = &market.endowments[i];
        if self.defaulted[i] {
            (&market.alpha[i] * e, market.beta[i].clone())
        } else {
            (e.clone().max(&market.alpha[i] * e), Rational::one())
        }
    }
}

/// A payment vector with its subsidies and per-group payment rates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsidizedPayment {
    pub payments: Matrix,
    pub subsidies: Vec<Rational>,
    /// `rates[i][ℓ]` is the paid fraction of group `ℓ` (zero-based) of bank `i`.
    pub rates: Vec<Vec<Rational>>,
}

/// One of the fixed-regime linear programs, with the variable layout needed to read it back.
#[derive(Debug, Clone)]
pub struct ClearingLp {
    pub problem: LpProblem,
    /// Rate variable of the critical group, when that group exists.
    lambda: Vec<Option<usize>>,
    z: Vec<usize>,
    budget: Vec<usize>,
    gamma: Vec<usize>,
}

impl ClearingLp {
    pub fn subsidy_var(&self, i: usize) -> usize {
        self.z[i]
    }

    pub fn rate_var(&self, i: usize) -> Option<usize> {
        self.lambda[i]
    }

    pub fn read(&self, market: &FinancialMarket, values: &[Rational]) -> SubsidizedPayment {
        let n = market.n();
        let mut payments = zero_matrix(n);
        let mut rates = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = Vec::with_capacity(market.group_count(i));
            for (g, group) in market.priorities[i].iter().enumerate() {
                let rate = self.group_rate(i, g + 1, values);
                for &j in group {
                    payments[i][j] = &rate * &market.liabilities[i][j];
                }
                r.push(rate);
            }
            rates.push(r);
        }
        let subsidies = self.z.iter().map(|&v| values[v].clone()).collect();
        SubsidizedPayment { payments, subsidies, rates }
    }

    fn group_rate(&self, i: usize, group: usize, values: &[Rational]) -> Rational {
        use std::cmp::Ordering::*;
        match group.cmp(&self.gamma[i]) {
            Less => Rational::one(),
            Greater => Rational::zero(),
            Equal => self.lambda[i].map_or(Rational::zero(), |v| values[v].clone()),
        }
    }

    /// Total payments as a linear expression: variable terms and a constant.
    fn total_payment(&self, market: &FinancialMarket) -> (Vec<(usize, Rational)>, Rational) {
        let mut terms = Vec::new();
        let mut constant = Rational::zero();
        for i in 0..market.n() {
            for g in 1..=market.group_count(i) {
                let l = market.group_liability(i, g - 1);
                if g < self.gamma[i] {
                    constant += l;
                } else if g == self.gamma[i] {
                    if let Some(v) = self.lambda[i] {
                        terms.push((v, l));
                    }
                }
            }
        }
        (terms, constant)
    }
}

/// The constraint system shared by all three fixed-regime programs.
fn base_system(market: &FinancialMarket, regime: &RegimeState, sense: Sense) -> ClearingLp {
    let n = market.n();
    let mut problem = LpProblem::new(sense);
    let mut lambda = vec![None; n];
    for i in 0..n {
        let g = regime.gamma[i];
        if g >= 1 && g <= market.group_count(i) {
            lambda[i] =
                Some(problem.add_var(format!("lambda_{}_{}", i + 1, g), Some(Rational::zero()), Some(Rational::one())));
        }
    }
    let z: Vec<usize> = (0..n).map(|i| problem.add_nonneg(format!("z_{}", i + 1))).collect();
    let mut budget = Vec::with_capacity(n);
    for i in 0..n {
        let (usable, bt) = regime.effective(market, i);
        // Σ_j p_ij - z_i - β̃_i Σ_j p_ji <= usable endowment, with p written through the group rates.
        let mut coeffs: Vec<(usize, Rational)> = Vec::new();
        let mut rhs = usable;
        let gi = regime.gamma[i];
        for g in 1..=market.group_count(i) {
            let l = market.group_liability(i, g - 1);
            if g < gi {
                rhs -= l;
            } else if g == gi {
                coeffs.push((lambda[i].unwrap(), l));
            }
        }
        coeffs.push((z[i], -Rational::one()));
        if !bt.is_zero() {
            for j in 0..n {
                let lji = &market.liabilities[j][i];
                if !lji.is_positive() {
                    continue;
                }
                let Some(g) = market.priorities[j].iter().position(|grp| grp.contains(&i)) else { continue };
                let g = g + 1;
                let gj = regime.gamma[j];
                if g < gj {
                    rhs += &bt * lji;
                } else if g == gj {
                    coeffs.push((lambda[j].unwrap(), -(&bt * lji)));
                }
            }
        }
        budget.push(problem.add_constraint(format!("budget_{}", i + 1), coeffs, Relation::Le, rhs));
    }
    ClearingLp { problem, lambda, z, budget, gamma: regime.gamma.clone() }
}

/// Minimum total subsidy under a fixed regime.
pub fn build_min_subsidy(market: &FinancialMarket, regime: &RegimeState) -> ClearingLp {
    let mut lp = base_system(market, regime, Sense::Minimize);
    let obj = lp.z.iter().map(|&v| (v, Rational::one())).collect();
    lp.problem.set_objective(obj);
    lp
}

/// Minimum total payment among solutions with total subsidy `zstar_total`.
pub fn build_min_payment(market: &FinancialMarket, regime: &RegimeState, zstar_total: &Rational) -> ClearingLp {
    let mut lp = base_system(market, regime, Sense::Minimize);
    let sum = lp.z.iter().map(|&v| (v, Rational::one())).collect();
    lp.problem.add_constraint("total_subsidy", sum, Relation::Eq, zstar_total.clone());
    let (terms, _) = lp.total_payment(market);
    lp.problem.set_objective(terms);
    lp
}

/// Maximum total payment with subsidies pinned to `zstar`.
pub fn build_max_payment(market: &FinancialMarket, regime: &RegimeState, zstar: &[Rational]) -> ClearingLp {
    let mut lp = base_system(market, regime, Sense::Maximize);
    for i in 0..market.n() {
        let zv = lp.z[i];
        lp.problem.variables[zv].lower = Some(zstar[i].clone());
        lp.problem.variables[zv].upper = Some(zstar[i].clone());
        if zstar[i].is_positive() {
            if let Some(v) = lp.lambda[i] {
                lp.problem.variables[v].upper = Some(Rational::zero());
            }
            lp.problem.constraints[lp.budget[i]].relation = Relation::Eq;
        }
    }
    let (terms, _) = lp.total_payment(market);
    lp.problem.set_objective(terms);
    lp
}

fn optimum(problem: &LpProblem, what: &str) -> Result<Solution, ClearError> {
    match solve_lp(problem)? {
        LpOutcome::Optimal(s) => Ok(s),
        other => Err(ClearError::Internal(format!("{what} returned {other:?}"))),
    }
}

/// The limit point of the fixed-regime iteration, found by the three chained programs.
pub fn solve_regime(market: &FinancialMarket, regime: &RegimeState) -> Result<SubsidizedPayment, ClearError> {
    let min_sub = build_min_subsidy(market, regime);
    let zstar_total = optimum(&min_sub.problem, "minimum subsidy")?.objective;
    let min_pay = build_min_payment(market, regime, &zstar_total);
    let sol = optimum(&min_pay.problem, "minimum payment")?;
    let zstar: Vec<Rational> = min_pay.z.iter().map(|&v| sol.values[v].clone()).collect();
    let max_pay = build_max_payment(market, regime, &zstar);
    let sol = optimum(&max_pay.problem, "maximum payment")?;
    Ok(max_pay.read(market, &sol.values))
}

/// Coordinate-wise maximal priority-proportional clearing vector, with the regime of every round.
pub fn clear_priority_proportional(
    market: &FinancialMarket,
) -> Result<(ClearingVector, Vec<RegimeState>), ClearError> {
    let n = market.n();
    let mut regime = RegimeState::initial(market);
    let mut trace = Vec::new();
    loop {
        let sp = solve_regime(market, &regime)?;
        trace.push(regime.clone());
        let mut next = regime.clone();
        next.round += 1;
        let mut changed = false;
        for i in 0..n {
            let owed = market.total_liability(i);
            if owed.is_zero() {
                continue;
            }
            if !regime.defaulted[i] && market.income_nondef(&sp.payments, i) < owed {
                next.defaulted[i] = true;
                changed = true;
            }
            if sp.subsidies[i].is_positive() && regime.gamma[i] > 0 {
                next.gamma[i] -= 1;
                changed = true;
            }
        }
        if !changed {
            return Ok((ClearingVector { payments: sp.payments }, trace));
        }
        regime = next;
    }
}

/// Coordinate-wise maximal proportional clearing vector for nonnegative endowments.
///
/// Priority groups are ignored: every bank pays all creditors pro rata.
pub fn clear_proportional(market: &FinancialMarket) -> Result<ClearingVector, ClearError> {
    let n = market.n();
    if let Some(bank) = (0..n).find(|&i| market.endowments[i].is_negative()) {
        return Err(ClearError::NegativeEndowment { bank });
    }
    let mut defaulted = vec![false; n];
    loop {
        let mut problem = LpProblem::new(Sense::Maximize);
        let lambda: Vec<usize> = (0..n)
            .map(|i| problem.add_var(format!("lambda_{}", i + 1), Some(Rational::zero()), Some(Rational::one())))
            .collect();
        for i in 0..n {
            let (at, bt) = if defaulted[i] {
                (market.alpha[i].clone(), market.beta[i].clone())
            } else {
                (Rational::one(), Rational::one())
            };
            let mut coeffs = vec![(lambda[i], market.total_liability(i))];
            if !bt.is_zero() {
                for j in 0..n {
                    let lji = &market.liabilities[j][i];
                    if lji.is_positive() {
                        coeffs.push((lambda[j], -(&bt * lji)));
                    }
                }
            }
            problem.add_constraint(format!("budget_{}", i + 1), coeffs, Relation::Le, &at * &market.endowments[i]);
        }
        problem.set_objective((0..n).map(|i| (lambda[i], market.total_liability(i))).collect());
        let sol = optimum(&problem, "maximum proportional payment")?;
        let mut payments = zero_matrix(n);
        for i in 0..n {
            for j in 0..n {
                if market.liabilities[i][j].is_positive() {
                    payments[i][j] = &sol.values[lambda[i]] * &market.liabilities[i][j];
                }
            }
        }
        let mut changed = false;
        for i in 0..n {
            let owed = market.total_liability(i);
            if !owed.is_zero() && !defaulted[i] && market.income_nondef(&payments, i) < owed {
                defaulted[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Ok(ClearingVector { payments });
        }
    }
}

/// Maximal clearing vector under `model`.
///
/// The proportional model uses the single-program loop when endowments are nonnegative and
/// the general algorithm on single-group priorities otherwise.
pub fn clear(market: &FinancialMarket, model: ClearingModel) -> Result<ClearingVector, ClearError> {
    match model {
        ClearingModel::Priority => Ok(clear_priority_proportional(market)?.0),
        ClearingModel::Proportional if market.has_nonnegative_endowments() => clear_proportional(market),
        ClearingModel::Proportional => Ok(clear_priority_proportional(&market.with_single_groups())?.0),
    }
}

/// Float approximation of a clearing vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxClearing {
    pub payments: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

fn writedown_f64(market: &FinancialMarket, liab: &[Vec<f64>], i: usize, income: f64, model: ClearingModel) -> Vec<f64> {
    let n = market.n();
    let row = &liab[i];
    let mut out = vec![0.0; n];
    match model {
        ClearingModel::Proportional => {
            let total: f64 = row.iter().sum();
            if total <= 0.0 || income <= 0.0 {
                return out;
            }
            let rate = (income / total).min(1.0);
            for j in 0..n {
                out[j] = row[j] * rate;
            }
        }
        ClearingModel::Priority => {
            let mut left = income.max(0.0);
            for group in &market.priorities[i] {
                let total: f64 = group.iter().map(|&j| row[j]).sum();
                let rate = if total > 0.0 { (left / total).min(1.0) } else { 0.0 };
                for &j in group {
                    out[j] = row[j] * rate;
                }
                left = (left - total).max(0.0);
            }
        }
    }
    out
}

/// Jacobi iteration of the clearing map from `p = L`.
///
/// The map is monotone, so the iterates decrease towards the greatest fixed point.
pub fn fixed_point_oracle(market: &FinancialMarket, model: ClearingModel, max_iters: usize, tolerance: f64) -> ApproxClearing {
    let n = market.n();
    let liab: Vec<Vec<f64>> = market.liabilities.iter().map(|r| r.iter().map(Rational::to_f64).collect()).collect();
    let e: Vec<f64> = market.endowments.iter().map(Rational::to_f64).collect();
    let alpha: Vec<f64> = market.alpha.iter().map(Rational::to_f64).collect();
    let beta: Vec<f64> = market.beta.iter().map(Rational::to_f64).collect();
    let owed: Vec<f64> = liab.iter().map(|r| r.iter().sum()).collect();
    let mut p = liab.clone();
    for it in 0..max_iters {
        let mut next = vec![vec![0.0; n]; n];
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let incoming: f64 = (0..n).map(|j| p[j][i]).sum();
            let nondef = e[i] + incoming;
            next[i] = if owed[i] <= 0.0 || nondef >= owed[i] {
                liab[i].clone()
            } else {
                writedown_f64(market, &liab, i, alpha[i] * e[i] + beta[i] * incoming, model)
            };
            for j in 0..n {
                delta = delta.max((next[i][j] - p[i][j]).abs());
            }
        }
        p = next;
        if delta < tolerance {
            return ApproxClearing { payments: p, iterations: it, converged: true };
        }
    }
    ApproxClearing { payments: p, iterations: max_iters, converged: false }
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
    fn min_subsidy_on_prio_needs_nothing() {
        let m = fixtures::prio();
        let mut r = RegimeState::initial(&m);
        r.gamma[0] = 2;
        let lp = build_min_subsidy(&m, &r);
        assert_eq!(solve_lp(&lp.problem).unwrap().optimal().unwrap().objective, q(0));
    }

    #[test]
    fn lone_negative_bank_needs_subsidy() {
        let m = FinancialMarket::without_default_costs(vec![vec![q(0)]], vec![q(-1)]);
        let r = RegimeState::initial(&m);
        assert_eq!(r.gamma, vec![0]);
        let lp = build_min_subsidy(&m, &r);
        assert_eq!(solve_lp(&lp.problem).unwrap().optimal().unwrap().objective, q(1));
        let sp = solve_regime(&m, &r).unwrap();
        assert_eq!(sp.subsidies, vec![q(1)]);
        assert_eq!(sp.payments, vec![vec![q(0)]]);
    }

    #[test]
    fn ring_limits() {
        let m = fixtures::ring3();
        let r = RegimeState::initial(&m);
        let lp = build_min_subsidy(&m, &r);
        assert_eq!(solve_lp(&lp.problem).unwrap().optimal().unwrap().objective, q(0));
        let lp = build_min_payment(&m, &r, &q(0));
        assert_eq!(solve_lp(&lp.problem).unwrap().optimal().unwrap().objective, q(0));
        let sp = solve_regime(&m, &r).unwrap();
        assert_eq!(sp.payments, m.liabilities);
    }

    #[test]
    fn max_payment_respects_priority_cap() {
        let m = fixtures::prio();
        let mut r = RegimeState::initial(&m);
        r.defaulted[0] = true;
        r.gamma[0] = 1;
        let lp = build_max_payment(&m, &r, &[q(0), q(0), q(0)]);
        let sol = solve_lp(&lp.problem).unwrap().into_optimal().unwrap();
        let sp = lp.read(&m, &sol.values);
        assert_eq!(sp.payments[0][1], q(1));
        assert_eq!(sp.payments[0][2], q(0));
    }

    #[test]
    fn fixture_clearings() {
        let (p, trace) = clear_priority_proportional(&fixtures::prio()).unwrap();
        assert_eq!(p.payments[0][1], q(1));
        assert_eq!(p.payments[0][2], q(0));
        let rep = check_clearing(&fixtures::prio(), &p, ClearingModel::Priority).unwrap();
        assert_eq!(rep.defaulting, vec![0]);
        assert!(trace.len() >= 2);

        let asym = fixtures::asym();
        let (p, _) = clear_priority_proportional(&asym).unwrap();
        assert_eq!(p.payments, zero_matrix(2));
        assert_eq!(asym.defaulting(&p.payments).defaulting, vec![0, 1]);

        let ring = fixtures::ring3();
        assert_eq!(clear_priority_proportional(&ring).unwrap().0.payments, ring.liabilities);
        assert_eq!(clear_proportional(&ring).unwrap().payments, ring.liabilities);

        assert_eq!(clear_proportional(&fixtures::chain()).unwrap().payments[0][1], q(1));

        let tc = fixtures::twocycle();
        let p = clear_proportional(&tc).unwrap();
        assert_eq!(p.payments, zero_matrix(4));
        assert_eq!(tc.defaulting(&p.payments).defaulting, vec![0, 1, 2]);
    }

    #[test]
    fn negative_endowment_bank_may_pay_more_after_defaulting() {
        // e_1 = -2 with α_1 = 0: defaulting wipes the debt-like endowment, so bank 1 pays β_1 · 1.
        let mut m = FinancialMarket::without_default_costs(
            vec![vec![q(0), q(1)], vec![q(1), q(0)]],
            vec![q(-2), q(1)],
        );
        m.alpha = vec![q(0), q(0)];
        m.beta = vec![Rational::new(1, 4), q(0)];
        let (p, _) = clear_priority_proportional(&m).unwrap();
        assert_eq!(p.payments[0][1], Rational::new(1, 4));
        assert_eq!(p.payments[1][0], q(1));
        assert!(check_clearing(&m, &p, ClearingModel::Priority).is_ok());
    }

    #[test]
    fn negative_endowment_is_rejected_by_the_simple_loop() {
        let m = FinancialMarket::without_default_costs(vec![vec![q(0)]], vec![q(-1)]);
        assert_eq!(clear_proportional(&m), Err(ClearError::NegativeEndowment { bank: 0 }));
        assert_eq!(clear(&m, ClearingModel::Proportional).unwrap().payments, vec![vec![q(0)]]);
    }

    #[test]
    fn oracle_examples() {
        let ring = fixtures::ring3();
        let o = fixed_point_oracle(&ring, ClearingModel::Priority, 100, 1e-9);
        assert_eq!(o.iterations, 0);
        assert!(o.converged);
        let o = fixed_point_oracle(&fixtures::asym(), ClearingModel::Proportional, 1000, 1e-9);
        assert!(o.payments.iter().flatten().all(|v| v.abs() < 1e-9));
        let o = fixed_point_oracle(&fixtures::chain(), ClearingModel::Proportional, 1, 0.0);
        assert_eq!(o.payments[0][1], 1.0);
    }
}
