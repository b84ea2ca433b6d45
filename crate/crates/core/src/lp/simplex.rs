//! Bounded-variable primal simplex on an exact sparse tableau.
//!
//! Every row carries a slack `s` with `Σ a x + s = b`, so the slack basis is always
//! available. Phase 1 minimises the total bound violation of the current basis, which
//! makes any basis a valid starting point: bounds can be changed between solves and
//! the previous basis is reused.
//!
//! Tableau rows are stored as integer vectors over one positive denominator per row,
//! so a pivot costs integer multiply-subtracts and one gcd sweep per touched row.
//! Phase 1 pricing ranks columns by a floating-point estimate and confirms the chosen
//! column exactly; optimality and infeasibility are always decided exactly.

use std::cmp::Ordering;

use crate::rational::Rational;

use super::int::Int;
use super::{LpError, LpOutcome, LpProblem, Relation, Sense, Solution};

/// After this many consecutive degenerate pivots the entering rule switches to Bland's.
const DEGENERATE_STREAK: u32 = 16;

/// Estimated phase 1 reduced costs smaller than this are not trusted as candidates.
const ESTIMATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LpStats {
    pub pivots: u64,
    pub bound_flips: u64,
}

impl LpStats {
    pub fn steps(&self) -> u64 {
        self.pivots + self.bound_flips
    }
}

enum Step {
    Flip,
    Pivot { row: usize, leave_at: Status },
}

/// `x_{basis[i]} + Σ (entries_j / den) x_j = const`, over nonbasic `j`, sorted by `j`.
#[derive(Debug, Clone)]
struct Row {
    den: Int,
    entries: Vec<(usize, Int)>,
}

impl Row {
    fn get(&self, col: usize) -> Option<&Int> {
        self.entries.binary_search_by_key(&col, |e| e.0).ok().map(|k| &self.entries[k].1)
    }

    fn coef(&self, col: usize) -> Option<Rational> {
        self.get(col).map(|t| t.ratio(&self.den))
    }

    /// Divides out the common factor of the denominator and all entries.
    fn reduce(&mut self) {
        if self.den.is_one() {
            return;
        }
        let mut g = self.den.clone();
        for (_, v) in &self.entries {
            g = g.gcd(v);
            if g.is_one() {
                return;
            }
        }
        self.den = self.den.div_exact(&g);
        for (_, v) in &mut self.entries {
            *v = v.div_exact(&g);
        }
    }
}

/// A reusable simplex state for one problem.
#[derive(Debug, Clone)]
pub struct Simplex {
    n_struct: usize,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    cost: Vec<Rational>,
    objective: Vec<(usize, Rational)>,
    rows: Vec<Row>,
    basis: Vec<usize>,
    status: Vec<Status>,
    x: Vec<Rational>,
    d: Vec<Rational>,
    d_valid: bool,
    stats: LpStats,
    step_limit: Option<u64>,
}

fn below(x: &Rational, l: &Option<Rational>) -> bool {
    l.as_ref().is_some_and(|l| x < l)
}

fn above(x: &Rational, u: &Option<Rational>) -> bool {
    u.as_ref().is_some_and(|u| x > u)
}

/// Row `i` after eliminating column `q` with the new pivot row `p`, where `t = T_iq`.
fn eliminate(a: &Row, t: &Int, p: &Row, q: usize) -> Row {
    let mut out = Vec::with_capacity(a.entries.len() + p.entries.len());
    let zero = Int::Small(0);
    let (ea, ep) = (&a.entries, &p.entries);
    let (mut i, mut k) = (0, 0);
    while i < ea.len() || k < ep.len() {
        let ca = ea.get(i).map_or(usize::MAX, |e| e.0);
        let cp = ep.get(k).map_or(usize::MAX, |e| e.0);
        match ca.cmp(&cp) {
            Ordering::Less => {
                if ca != q {
                    out.push((ca, ea[i].1.mul(&p.den)));
                }
                i += 1;
            }
            Ordering::Greater => {
                out.push((cp, Int::mul_sub(&zero, &zero, t, &ep[k].1)));
                k += 1;
            }
            Ordering::Equal => {
                let v = Int::mul_sub(&ea[i].1, &p.den, t, &ep[k].1);
                if !v.is_zero() {
                    out.push((ca, v));
                }
                i += 1;
                k += 1;
            }
        }
    }
    let mut row = Row { den: a.den.mul(&p.den), entries: out };
    row.reduce();
    row
}

impl Simplex {
    /// Builds the slack-basis tableau. The problem must already pass [`LpProblem::check`].
    pub fn new(problem: &LpProblem) -> Self {
        let n = problem.variables.len();
        let m = problem.constraints.len();
        let total = n + m;
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        for v in &problem.variables {
            lower.push(v.lower.clone());
            upper.push(v.upper.clone());
        }
        for c in &problem.constraints {
            let (l, u) = match c.relation {
                Relation::Le => (Some(Rational::zero()), None),
                Relation::Ge => (None, Some(Rational::zero())),
                Relation::Eq => (Some(Rational::zero()), Some(Rational::zero())),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut cost = vec![Rational::zero(); total];
        for (j, c) in &problem.objective {
            match problem.sense {
                Sense::Minimize => cost[*j] += c,
                Sense::Maximize => cost[*j] -= c,
            }
        }
        let mut status = Vec::with_capacity(total);
        let mut x = Vec::with_capacity(total);
        for j in 0..n {
            let (s, v) = match (&lower[j], &upper[j]) {
                (Some(l), _) => (Status::Lower, l.clone()),
                (None, Some(u)) => (Status::Upper, u.clone()),
                (None, None) => (Status::Free, Rational::zero()),
            };
            status.push(s);
            x.push(v);
        }
        let mut rows = Vec::with_capacity(m);
        for c in &problem.constraints {
            let mut row: Vec<(usize, Rational)> = c.coeffs.clone();
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(row.len());
            for (j, a) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            merged.retain(|e| !e.1.is_zero());
            let lhs: Rational = merged.iter().map(|(j, a)| a * &x[*j]).sum();
            x.push(&c.rhs - &lhs);
            status.push(Status::Basic);
            let split: Vec<(usize, Int, Int)> = merged
                .iter()
                .map(|(j, a)| {
                    let (num, den) = Int::split(a);
                    (*j, num, den)
                })
                .collect();
            let mut den = Int::ONE;
            for (_, _, d) in &split {
                den = den.div_exact(&den.gcd(d)).mul(d);
            }
            let entries = split.into_iter().map(|(j, num, d)| (j, num.mul(&den.div_exact(&d)))).collect();
            rows.push(Row { den, entries });
        }
        Simplex {
            n_struct: n,
            lower,
            upper,
            cost,
            objective: problem.objective.clone(),
            rows,
            basis: (n..total).collect(),
            status,
            x,
            d: Vec::new(),
            d_valid: false,
            stats: LpStats::default(),
            step_limit: None,
        }
    }

    pub fn stats(&self) -> LpStats {
        self.stats
    }

    /// Caps the cumulative number of pivots and bound flips over all solves.
    pub fn set_step_limit(&mut self, limit: Option<u64>) {
        self.step_limit = limit;
    }

    /// Changes the bounds of structural variable `j`; the current basis is kept.
    pub fn set_bounds(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) {
        assert!(j < self.n_struct, "only structural variables have adjustable bounds");
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.status[j] == Status::Basic {
            return;
        }
        let (s, v) = match (self.status[j], &self.lower[j], &self.upper[j]) {
            (Status::Upper, _, Some(u)) => (Status::Upper, u.clone()),
            (_, Some(l), _) => (Status::Lower, l.clone()),
            (_, None, Some(u)) => (Status::Upper, u.clone()),
            (_, None, None) => (Status::Free, Rational::zero()),
        };
        self.status[j] = s;
        let delta = &v - &self.x[j];
        if !delta.is_zero() {
            self.shift_nonbasic(j, &delta);
        }
    }

    pub fn bounds(&self, j: usize) -> (&Option<Rational>, &Option<Rational>) {
        (&self.lower[j], &self.upper[j])
    }

    fn shift_nonbasic(&mut self, j: usize, delta: &Rational) {
        self.x[j] += delta;
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(t) = row.coef(j) {
                let b = self.basis[i];
                self.x[b] = self.x[b].sub_mul(&t, delta);
            }
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l == u)
    }

    fn compute_reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &self.cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            let f = cb * &Int::ONE.ratio(&row.den);
            for (j, t) in &row.entries {
                d[*j] = d[*j].sub_mul(&f, &t.ratio(&Int::ONE));
            }
        }
        for &b in &self.basis {
            d[b] = Rational::zero();
        }
        self.d = d;
        self.d_valid = true;
    }

    /// The phase 1 violation pattern of the basic variables, or `None` if feasible.
    fn violations(&self) -> Option<Vec<i8>> {
        let mut sign = vec![0i8; self.rows.len()];
        let mut any = false;
        for (i, &b) in self.basis.iter().enumerate() {
            if below(&self.x[b], &self.lower[b]) {
                sign[i] = -1;
                any = true;
            } else if above(&self.x[b], &self.upper[b]) {
                sign[i] = 1;
                any = true;
            }
        }
        any.then_some(sign)
    }

    /// Exact phase 1 reduced cost of column `j`.
    fn phase1_cost(&self, sign: &[i8], j: usize) -> Rational {
        let mut d = Rational::zero();
        for (i, row) in self.rows.iter().enumerate() {
            if sign[i] == 0 {
                continue;
            }
            if let Some(t) = row.coef(j) {
                if sign[i] < 0 {
                    d += t;
                } else {
                    d -= t;
                }
            }
        }
        d
    }

    /// Direction in which nonbasic `j` improves an objective with reduced cost `dj`.
    fn direction(&self, j: usize, dj: &Rational) -> Option<i32> {
        let dir = match self.status[j] {
            Status::Basic => return None,
            Status::Lower if dj.is_negative() => 1,
            Status::Upper if dj.is_positive() => -1,
            Status::Free if !dj.is_zero() => -dj.signum(),
            _ => return None,
        };
        (!self.is_fixed(j)).then_some(dir)
    }

    /// Phase 1 entering column. Dantzig candidates come from estimated reduced costs
    /// and are confirmed exactly; if none survives, columns are scanned exactly in
    /// index order, which is also Bland's rule.
    fn phase1_entering(&self, sign: &[i8], bland: bool) -> Option<(usize, i32)> {
        if !bland {
            let mut est = vec![0f64; self.x.len()];
            for (i, row) in self.rows.iter().enumerate() {
                if sign[i] == 0 {
                    continue;
                }
                let scale = -(sign[i] as f64) / row.den.to_f64();
                for (j, t) in &row.entries {
                    est[*j] += scale * t.to_f64();
                }
            }
            let mut cands: Vec<(usize, f64)> = Vec::new();
            for (j, &e) in est.iter().enumerate() {
                let improving = match self.status[j] {
                    Status::Basic => false,
                    Status::Lower => e < -ESTIMATE_EPS,
                    Status::Upper => e > ESTIMATE_EPS,
                    Status::Free => e.abs() > ESTIMATE_EPS,
                };
                if improving && !self.is_fixed(j) {
                    cands.push((j, e.abs()));
                }
            }
            cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (j, _) in cands {
                if let Some(dir) = self.direction(j, &self.phase1_cost(sign, j)) {
                    return Some((j, dir));
                }
            }
        }
        (0..self.x.len())
            .filter(|&j| self.status[j] != Status::Basic)
            .find_map(|j| self.direction(j, &self.phase1_cost(sign, j)).map(|dir| (j, dir)))
    }

    /// Phase 2 entering column from the maintained reduced costs.
    fn choose_entering(&self, bland: bool) -> Option<(usize, i32)> {
        let mut best: Option<(usize, i32)> = None;
        let mut best_mag = Rational::zero();
        for j in 0..self.x.len() {
            let Some(dir) = self.direction(j, &self.d[j]) else { continue };
            if bland {
                return Some((j, dir));
            }
            let mag = self.d[j].abs();
            if best.is_none() || mag > best_mag {
                best = Some((j, dir));
                best_mag = mag;
            }
        }
        best
    }

    /// Ratio test. `sign` is the phase 1 violation pattern (`None` in phase 2). Ties go
    /// to the smallest basic index under Bland's rule and to the sparsest row otherwise,
    /// which limits fill-in.
    fn ratio_test(&self, q: usize, dir: i32, sign: Option<&[i8]>, bland: bool) -> Option<(Rational, Step)> {
        let mut best: Option<(Rational, Step, (usize, usize))> = None;
        if let (Some(l), Some(u)) = (&self.lower[q], &self.upper[q]) {
            best = Some((u - l, Step::Flip, (usize::MAX, usize::MAX)));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let Some(t) = row.get(q) else { continue };
            let b = self.basis[i];
            let s = sign.map_or(0, |s| s[i]);
            // The basic variable moves down when t and dir share a sign.
            let falls = t.is_negative() != (dir > 0);
            let bound = match (s, falls) {
                (-1, false) => self.lower[b].as_ref().map(|l| (l, Status::Lower)),
                (1, true) => self.upper[b].as_ref().map(|u| (u, Status::Upper)),
                (0, true) => self.lower[b].as_ref().map(|l| (l, Status::Lower)),
                (0, false) => self.upper[b].as_ref().map(|u| (u, Status::Upper)),
                _ => None,
            };
            let Some((bound, leave_at)) = bound else { continue };
            let rate = t.ratio(&row.den).abs();
            let theta = (bound - &self.x[b]).abs() / &rate;
            let key = if bland { (b, 0) } else { (row.entries.len(), b) };
            let better = match &best {
                None => true,
                Some((bt, _, bk)) => match theta.cmp(bt) {
                    Ordering::Less => true,
                    Ordering::Equal => bk.0 != usize::MAX && key < *bk,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((theta, Step::Pivot { row: i, leave_at }, key));
            }
        }
        best.map(|(t, s, _)| (t, s))
    }

    fn apply(&mut self, q: usize, dir: i32, theta: &Rational, step: Step) {
        if !theta.is_zero() {
            let delta = if dir > 0 { theta.clone() } else { -theta };
            self.shift_nonbasic(q, &delta);
        }
        match step {
            Step::Flip => {
                self.stats.bound_flips += 1;
                self.status[q] = if dir > 0 { Status::Upper } else { Status::Lower };
            }
            Step::Pivot { row, leave_at } => {
                self.stats.pivots += 1;
                let leaving = self.basis[row];
                // Snap exactly onto the bound it leaves at.
                self.x[leaving] = match leave_at {
                    Status::Lower => self.lower[leaving].clone().unwrap(),
                    _ => self.upper[leaving].clone().unwrap(),
                };
                self.pivot(row, q);
                self.status[leaving] = leave_at;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let leaving = self.basis[r];
        let old = std::mem::replace(&mut self.rows[r], Row { den: Int::ONE, entries: Vec::new() });
        let piv = old.get(q).expect("pivot element present").clone();
        let negate = piv.is_negative();
        let fix = |v: Int| if negate { v.neg() } else { v };
        let mut entries: Vec<(usize, Int)> = Vec::with_capacity(old.entries.len());
        let mut placed = false;
        for (j, v) in old.entries {
            if j == q {
                continue;
            }
            if !placed && j > leaving {
                entries.push((leaving, fix(old.den.clone())));
                placed = true;
            }
            entries.push((j, fix(v)));
        }
        if !placed {
            entries.push((leaving, fix(old.den.clone())));
        }
        let mut new_row = Row { den: fix(piv), entries };
        new_row.reduce();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(t) = self.rows[i].get(q).cloned() else { continue };
            self.rows[i] = eliminate(&self.rows[i], &t, &new_row, q);
        }
        if self.d_valid {
            let dq = std::mem::take(&mut self.d[q]);
            if !dq.is_zero() {
                let f = &dq * &Int::ONE.ratio(&new_row.den);
                for (j, v) in &new_row.entries {
                    self.d[*j] = self.d[*j].sub_mul(&f, &v.ratio(&Int::ONE));
                }
            }
        }
        self.rows[r] = new_row;
        self.basis[r] = q;
        self.status[q] = Status::Basic;
    }

    fn check_budget(&self) -> Result<(), LpError> {
        match self.step_limit {
            Some(limit) if self.stats.steps() >= limit => Err(LpError::PivotLimit(limit)),
            _ => Ok(()),
        }
    }

    /// Runs phase 1 and phase 2 from the current basis.
    pub fn solve(&mut self) -> Result<LpOutcome, LpError> {
        let mut streak = 0u32;
        loop {
            self.check_budget()?;
            let bland = streak >= DEGENERATE_STREAK;
            if let Some(sign) = self.violations() {
                self.d_valid = false;
                let Some((q, dir)) = self.phase1_entering(&sign, bland) else {
                    return Ok(LpOutcome::Infeasible);
                };
                let (theta, step) = self
                    .ratio_test(q, dir, Some(&sign), bland)
                    .expect("phase 1 step is bounded while violations remain");
                streak = if theta.is_zero() { streak + 1 } else { 0 };
                self.apply(q, dir, &theta, step);
                continue;
            }
            if !self.d_valid {
                self.compute_reduced_costs();
            }
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(LpOutcome::Optimal(self.solution()));
            };
            let Some((theta, step)) = self.ratio_test(q, dir, None, bland) else {
                return Ok(LpOutcome::Unbounded);
            };
            streak = if theta.is_zero() { streak + 1 } else { 0 };
            self.apply(q, dir, &theta, step);
        }
    }

    fn solution(&self) -> Solution {
        let values: Vec<Rational> = self.x[..self.n_struct].to_vec();
        let objective = self.objective.iter().map(|(j, c)| c * &values[*j]).sum();
        Solution { values, objective }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn warm_restart_after_bound_change() {
        // max x + y, x + 2y <= 4, x, y in [0, 3]
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var("x", Some(q(0)), Some(q(3)));
        let y = p.add_var("y", Some(q(0)), Some(q(3)));
        p.add_constraint("c", vec![(x, q(1)), (y, q(2))], Relation::Le, q(4));
        p.set_objective(vec![(x, q(1)), (y, q(1))]);
        let mut s = Simplex::new(&p);
        let first = s.solve().unwrap().into_optimal().unwrap();
        assert_eq!(first.objective, Rational::new(7, 2));
        s.set_bounds(x, Some(q(0)), Some(q(1)));
        let second = s.solve().unwrap().into_optimal().unwrap();
        assert_eq!(second.objective, Rational::new(5, 2));
        s.set_bounds(y, Some(q(3)), Some(q(3)));
        assert_eq!(s.solve().unwrap(), LpOutcome::Infeasible);
        s.set_bounds(y, Some(q(0)), Some(q(3)));
        s.set_bounds(x, Some(q(0)), Some(q(3)));
        assert_eq!(s.solve().unwrap().into_optimal().unwrap().objective, Rational::new(7, 2));
    }

    #[test]
    fn step_limit_is_enforced() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_nonneg("x");
        p.add_constraint("c", vec![(x, q(1))], Relation::Le, q(1));
        p.set_objective(vec![(x, q(1))]);
        let mut s = Simplex::new(&p);
        s.set_step_limit(Some(0));
        assert_eq!(s.solve(), Err(LpError::PivotLimit(0)));
    }

    #[test]
    fn duplicate_coefficients_are_summed() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_nonneg("x");
        p.add_constraint("c", vec![(x, q(1)), (x, q(1))], Relation::Le, q(4));
        p.set_objective(vec![(x, q(1))]);
        assert_eq!(Simplex::new(&p).solve().unwrap().into_optimal().unwrap().values[x], q(2));
    }

    #[test]
    fn free_variable_with_equality() {
        let mut p = LpProblem::new(Sense::Minimize);
        let x = p.add_var("x", None, None);
        let y = p.add_nonneg("y");
        p.add_constraint("e", vec![(x, q(1)), (y, q(-1))], Relation::Eq, q(-2));
        p.set_objective(vec![(y, q(1))]);
        let s = Simplex::new(&p).solve().unwrap().into_optimal().unwrap();
        assert_eq!(s.objective, q(0));
        assert_eq!(s.values[x], q(-2));
    }
}
