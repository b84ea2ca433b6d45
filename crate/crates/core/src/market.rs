//! Liability networks, compressions and the exact clearing checker.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::rational::Rational;

/// Row-major square matrix of exact amounts.
pub type Matrix = Vec<Vec<Rational>>;

pub fn zero_matrix(n: usize) -> Matrix {
    vec![vec![Rational::zero(); n]; n]
}

/// Which clearing rule a computation follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClearingModel {
    /// Defaulting banks pay all creditors pro rata.
    Proportional,
    /// Defaulting banks pay creditor groups in order, pro rata within the critical group.
    Priority,
}

impl fmt::Display for ClearingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClearingModel::Proportional => "proportional",
            ClearingModel::Priority => "priority",
        })
    }
}

impl std::str::FromStr for ClearingModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proportional" => Ok(ClearingModel::Proportional),
            "priority" => Ok(ClearingModel::Priority),
            other => Err(format!("unknown clearing model `{other}`")),
        }
    }
}

/// A financial market: banks, liabilities, endowments, default costs and creditor priorities.
///
/// `liabilities[i][j]` is what bank `i` owes bank `j`. `priorities[i]` lists the creditor
/// groups of bank `i`, highest priority first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinancialMarket {
    pub names: Vec<String>,
    pub liabilities: Matrix,
    pub endowments: Vec<Rational>,
    pub alpha: Vec<Rational>,
    pub beta: Vec<Rational>,
    pub priorities: Vec<Vec<Vec<usize>>>,
}

/// One broken market invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DimensionMismatch { field: &'static str, expected: usize, found: usize },
    DiagonalNonzero { bank: usize },
    NegativeLiability { from: usize, to: usize },
    AlphaOutOfRange { bank: usize },
    BetaOutOfRange { bank: usize },
    PriorityPartition { bank: usize, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch { field, expected, found } => {
                write!(f, "{field}: expected length {expected}, found {found}")
            }
            Violation::DiagonalNonzero { bank } => {
                write!(f, "diag-nonzero at ({}, {})", bank + 1, bank + 1)
            }
            Violation::NegativeLiability { from, to } => {
                write!(f, "negative liability at ({}, {})", from + 1, to + 1)
            }
            Violation::AlphaOutOfRange { bank } => write!(f, "alpha outside [0,1] at bank {}", bank + 1),
            Violation::BetaOutOfRange { bank } => write!(f, "beta outside [0,1] at bank {}", bank + 1),
            Violation::PriorityPartition { bank, detail } => {
                write!(f, "priority-partition violation at bank {}: {detail}", bank + 1)
            }
        }
    }
}

impl FinancialMarket {
    /// Market with one priority group per bank holding all its creditors.
    pub fn from_parts(
        names: Vec<String>,
        liabilities: Matrix,
        endowments: Vec<Rational>,
        alpha: Vec<Rational>,
        beta: Vec<Rational>,
    ) -> Self {
        let priorities = single_group_priorities(&liabilities);
        FinancialMarket { names, liabilities, endowments, alpha, beta, priorities }
    }

    /// Market with banks named `1..=n`, no default costs and single-group priorities.
    pub fn without_default_costs(liabilities: Matrix, endowments: Vec<Rational>) -> Self {
        let n = liabilities.len();
        Self::from_parts(
            (1..=n).map(|i| i.to_string()).collect(),
            liabilities,
            endowments,
            vec![Rational::one(); n],
            vec![Rational::one(); n],
        )
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// `L_i`, the total amount bank `i` owes.
    pub fn total_liability(&self, i: usize) -> Rational {
        self.liabilities[i].iter().sum()
    }

    /// Total amount owed to bank `i`.
    pub fn total_claims(&self, i: usize) -> Rational {
        self.liabilities.iter().map(|row| &row[i]).sum()
    }

    /// Number of priority groups `k_i`.
    pub fn group_count(&self, i: usize) -> usize {
        self.priorities[i].len()
    }

    /// `L_i^ℓ` for the zero-based group index `g`.
    pub fn group_liability(&self, i: usize, g: usize) -> Rational {
        self.priorities[i][g].iter().map(|&j| &self.liabilities[i][j]).sum()
    }

    /// Ordered pairs `(i, j)` with `L_ij > 0`, row-major.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.liabilities[i][j].is_positive() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same market with every bank's creditors collapsed into one group.
    pub fn with_single_groups(&self) -> Self {
        let mut m = self.clone();
        m.priorities = single_group_priorities(&m.liabilities);
        m
    }

    pub fn has_single_groups(&self) -> bool {
        self.priorities.iter().all(|g| g.len() <= 1)
    }

    pub fn has_nonnegative_endowments(&self) -> bool {
        self.endowments.iter().all(|e| !e.is_negative())
    }

    /// Every violated market invariant, bank by bank in row-major order.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n();
        let mut out = Vec::new();
        let dims: [(&'static str, usize); 5] = [
            ("liabilities", self.liabilities.len()),
            ("endowments", self.endowments.len()),
            ("alpha", self.alpha.len()),
            ("beta", self.beta.len()),
            ("priorities", self.priorities.len()),
        ];
        for (field, found) in dims {
            if found != n {
                out.push(Violation::DimensionMismatch { field, expected: n, found });
            }
        }
        for row in self.liabilities.iter() {
            if row.len() != n {
                out.push(Violation::DimensionMismatch { field: "liabilities row", expected: n, found: row.len() });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let unit = Rational::one();
        for i in 0..n {
            for j in 0..n {
                let l = &self.liabilities[i][j];
                if i == j && !l.is_zero() {
                    out.push(Violation::DiagonalNonzero { bank: i });
                } else if l.is_negative() {
                    out.push(Violation::NegativeLiability { from: i, to: j });
                }
            }
            if self.alpha[i].is_negative() || self.alpha[i] > unit {
                out.push(Violation::AlphaOutOfRange { bank: i });
            }
            if self.beta[i].is_negative() || self.beta[i] > unit {
                out.push(Violation::BetaOutOfRange { bank: i });
            }
            if let Some(detail) = self.priority_problem(i) {
                out.push(Violation::PriorityPartition { bank: i, detail });
            }
        }
        out
    }

    fn priority_problem(&self, i: usize) -> Option<String> {
        let n = self.n();
        let mut seen = BTreeSet::new();
        for (g, group) in self.priorities[i].iter().enumerate() {
            if group.is_empty() {
                return Some(format!("group {} is empty", g + 1));
            }
            for &j in group {
                if j >= n {
                    return Some(format!("unknown creditor index {j}"));
                }
                if !seen.insert(j) {
                    return Some(format!("creditor {} listed twice", j + 1));
                }
                if !self.liabilities[i][j].is_positive() {
                    return Some(format!("creditor {} has no positive liability", j + 1));
                }
            }
        }
        for j in 0..n {
            if j != i && self.liabilities[i][j].is_positive() && !seen.contains(&j) {
                return Some(format!("creditor {} missing", j + 1));
            }
        }
        None
    }

    /// `E_i^nondef(p) = e_i + Σ_j p_ji`.
    pub fn income_nondef(&self, p: &Matrix, i: usize) -> Rational {
        &self.endowments[i] + incoming(p, i)
    }

    /// `E_i^def(p) = α_i e_i + β_i Σ_j p_ji`.
    pub fn income_def(&self, p: &Matrix, i: usize) -> Rational {
        &self.alpha[i] * &self.endowments[i] + &self.beta[i] * incoming(p, i)
    }

    /// Banks that default under `p`: those whose non-default income falls short of `L_i`.
    pub fn defaulting(&self, p: &Matrix) -> DefaultReport {
        let mut report = DefaultReport::default();
        for i in 0..self.n() {
            let owed = self.total_liability(i);
            if !owed.is_zero() && self.income_nondef(p, i) < owed {
                report.defaulting.push(i);
            } else {
                report.solvent.push(i);
            }
        }
        report
    }

    /// Validates `c` against this market and returns `M - C` with re-derived priorities.
    pub fn apply_compression(&self, c: &Compression) -> Result<FinancialMarket, CompressionError> {
        let problems = c.problems(self);
        if !problems.is_empty() {
            return Err(CompressionError::Invalid(problems));
        }
        Ok(self.apply_unchecked(&c.amounts))
    }

    /// `M - C` without validating `C`; priorities drop zeroed creditors and empty groups.
    pub fn apply_unchecked(&self, c: &Matrix) -> FinancialMarket {
        let n = self.n();
        let mut m = self.clone();
        for i in 0..n {
            for j in 0..n {
                if !c[i][j].is_zero() {
                    m.liabilities[i][j] = &self.liabilities[i][j] - &c[i][j];
                }
            }
        }
        for i in 0..n {
            let row = &m.liabilities[i];
            m.priorities[i] = self.priorities[i]
                .iter()
                .map(|g| g.iter().copied().filter(|&j| row[j].is_positive()).collect::<Vec<_>>())
                .filter(|g| !g.is_empty())
                .collect();
        }
        m
    }
}

fn incoming(p: &Matrix, i: usize) -> Rational {
    p.iter().map(|row| &row[i]).sum()
}

/// One group per bank holding all creditors in ascending order (empty when it owes nothing).
pub fn single_group_priorities(liabilities: &Matrix) -> Vec<Vec<Vec<usize>>> {
    liabilities
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let group: Vec<usize> =
                (0..row.len()).filter(|&j| j != i && row[j].is_positive()).collect();
            if group.is_empty() {
                Vec::new()
            } else {
                vec![group]
            }
        })
        .collect()
}

/// Pairwise payments `p_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClearingVector {
    pub payments: Matrix,
}

impl ClearingVector {
    pub fn zeros(n: usize) -> Self {
        ClearingVector { payments: zero_matrix(n) }
    }

    pub fn n(&self) -> usize {
        self.payments.len()
    }
}

/// Defaulting and solvent banks, each in ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefaultReport {
    pub defaulting: Vec<usize>,
    pub solvent: Vec<usize>,
}

impl DefaultReport {
    pub fn count(&self) -> usize {
        self.defaulting.len()
    }
}

/// Pairwise liability reductions `C_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compression {
    pub amounts: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompressionProblem {
    Dimension,
    OutOfBounds { from: usize, to: usize },
    FlowImbalance { bank: usize },
}

impl fmt::Display for CompressionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressionProblem::Dimension => f.write_str("dimension mismatch"),
            CompressionProblem::OutOfBounds { from, to } => {
                write!(f, "reduction outside [0, L] at ({}, {})", from + 1, to + 1)
            }
            CompressionProblem::FlowImbalance { bank } => {
                write!(f, "flow condition fails at bank {}", bank + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompressionError {
    #[error("invalid compression: {}", join(.0))]
    Invalid(Vec<CompressionProblem>),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Compression {
    pub fn zeros(n: usize) -> Self {
        Compression { amounts: zero_matrix(n) }
    }

    pub fn n(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amounts.iter().flatten().all(Rational::is_zero)
    }

    /// Entry-wise sum of two compressions.
    pub fn plus(&self, other: &Compression) -> Compression {
        let amounts = self
            .amounts
            .iter()
            .zip(&other.amounts)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Compression { amounts }
    }

    /// Total amount removed from the market.
    pub fn volume(&self) -> Rational {
        self.amounts.iter().flatten().sum()
    }

    fn problems(&self, market: &FinancialMarket) -> Vec<CompressionProblem> {
        let n = market.n();
        if self.n() != n || self.amounts.iter().any(|r| r.len() != n) {
            return vec![CompressionProblem::Dimension];
        }
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let c = &self.amounts[i][j];
                if c.is_negative() || c > &market.liabilities[i][j] {
                    out.push(CompressionProblem::OutOfBounds { from: i, to: j });
                }
            }
        }
        for i in 0..n {
            let out_flow: Rational = self.amounts[i].iter().sum();
            let in_flow: Rational = self.amounts.iter().map(|r| &r[i]).sum();
            if out_flow != in_flow {
                out.push(CompressionProblem::FlowImbalance { bank: i });
            }
        }
        out
    }

    /// Bounds `0 ≤ C ≤ L` and the flow condition at every bank.
    pub fn is_compression(&self, market: &FinancialMarket) -> bool {
        self.problems(market).is_empty()
    }

    /// `C_ij = C_ji` for every pair.
    pub fn is_bilateral(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (i + 1..n).all(|j| self.amounts[i][j] == self.amounts[j][i]))
    }

    /// A valid compression in which every bank reduces at most one outgoing liability.
    pub fn is_cycle_compression(&self, market: &FinancialMarket) -> bool {
        self.is_compression(market)
            && self.amounts.iter().all(|row| row.iter().filter(|c| c.is_positive()).count() <= 1)
    }
}

/// Why a payment matrix fails the clearing conditions at one bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClearingViolation {
    OutOfBounds { from: usize, to: usize },
    /// The bank can pay in full but some payment differs from the liability.
    NotFullPayment { bank: usize, creditor: usize },
    /// The bank defaults but some payment differs from the writedown rule.
    WrongWritedown { bank: usize, creditor: usize, expected: Rational },
}

impl fmt::Display for ClearingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClearingViolation::OutOfBounds { from, to } => {
                write!(f, "payment outside [0, L] at ({}, {})", from + 1, to + 1)
            }
            ClearingViolation::NotFullPayment { bank, creditor } => write!(
                f,
                "bank {} is solvent but does not pay creditor {} in full",
                bank + 1,
                creditor + 1
            ),
            ClearingViolation::WrongWritedown { bank, creditor, expected } => write!(
                f,
                "bank {} defaults and must pay creditor {} exactly {expected}",
                bank + 1,
                creditor + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClearingError {
    #[error("payment matrix has the wrong dimension")]
    DimensionMismatch,
    #[error("not a clearing vector: {}", join(.0))]
    Violations(Vec<ClearingViolation>),
}

/// Payments a defaulting bank with usable income `income` owes each creditor.
///
/// Proportional: `min(L_ij, max(0, L_ij / L_i · income))`. Priority: groups in order, full
/// while the cumulative threshold is covered, pro rata in the critical group, zero after.
pub fn writedown_payments(
    market: &FinancialMarket,
    i: usize,
    income: &Rational,
    model: ClearingModel,
) -> Vec<Rational> {
    let n = market.n();
    let row = &market.liabilities[i];
    let mut out = vec![Rational::zero(); n];
    match model {
        ClearingModel::Proportional => {
            let total = market.total_liability(i);
            if total.is_zero() || !income.is_positive() {
                return out;
            }
            if income >= &total {
                out.clone_from(row);
                return out;
            }
            let rate = income / &total;
            for j in 0..n {
                if row[j].is_positive() {
                    out[j] = &row[j] * &rate;
                }
            }
        }
        ClearingModel::Priority => {
            let mut paid_before = Rational::zero();
            for group in &market.priorities[i] {
                let group_total: Rational = group.iter().map(|&j| &row[j]).sum();
                let through = &paid_before + &group_total;
                if income >= &through {
                    for &j in group {
                        out[j] = row[j].clone();
                    }
                } else if income >= &paid_before {
                    let rate = (income - &paid_before) / &group_total;
                    for &j in group {
                        out[j] = &row[j] * &rate;
                    }
                }
                paid_before = through;
            }
        }
    }
    out
}

/// Exact check of the clearing conditions; returns the default report when `p` clears.
pub fn check_clearing(
    market: &FinancialMarket,
    p: &ClearingVector,
    model: ClearingModel,
) -> Result<DefaultReport, ClearingError> {
    let n = market.n();
    if p.n() != n || p.payments.iter().any(|r| r.len() != n) {
        return Err(ClearingError::DimensionMismatch);
    }
    let pay = &p.payments;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if pay[i][j].is_negative() || pay[i][j] > market.liabilities[i][j] {
                violations.push(ClearingViolation::OutOfBounds { from: i, to: j });
            }
        }
    }
    if !violations.is_empty() {
        return Err(ClearingError::Violations(violations));
    }
    let report = market.defaulting(pay);
    for i in 0..n {
        if report.defaulting.binary_search(&i).is_err() {
            for j in 0..n {
                if pay[i][j] != market.liabilities[i][j] {
                    violations.push(ClearingViolation::NotFullPayment { bank: i, creditor: j });
                }
            }
        } else {
            let expected = writedown_payments(market, i, &market.income_def(pay, i), model);
            for (j, want) in expected.into_iter().enumerate() {
                if pay[i][j] != want {
                    violations.push(ClearingViolation::WrongWritedown { bank: i, creditor: j, expected: want });
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(report)
    } else {
        Err(ClearingError::Violations(violations))
    }
}
