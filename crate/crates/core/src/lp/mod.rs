//! Exact linear and mixed-binary programming over rationals.

mod int;
mod milp;
mod simplex;

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::rational::Rational;

pub use milp::{solve_milp, solve_milp_with, MilpOptions, MilpReport};
pub use simplex::{LpStats, Simplex};

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// A linear program with bounded variables. `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<Rational>,
    pub objective: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&Solution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_optimal(self) -> Option<Solution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("pivot limit of {0} reached")]
    PivotLimit(u64),
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExceeded {
        nodes: u64,
        incumbent: Option<Solution>,
        bound: Option<Rational>,
    },
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem { sense, variables: Vec::new(), constraints: Vec::new(), objective: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> usize {
        self.variables.push(Variable { name: name.into(), lower, upper });
        self.variables.len() - 1
    }

    /// Variable bounded by `[0, +∞)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, Some(Rational::zero()), None)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = coeffs;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Reference and bound checks.
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        for (k, v) in self.variables.iter().enumerate() {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(LpError::Malformed(format!("variable {k} ({}) has lower > upper", v.name)));
                }
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(LpError::Malformed(format!("constraint {k} ({}) references unknown variable {j}", c.name)));
            }
        }
        if let Some((j, _)) = self.objective.iter().find(|(j, _)| *j >= n) {
            return Err(LpError::Malformed(format!("objective references unknown variable {j}")));
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &values[*j]).sum()
    }

    /// Exact feasibility of `values` against every bound and constraint.
    pub fn is_feasible(&self, values: &[Rational]) -> bool {
        if values.len() != self.variables.len() {
            return false;
        }
        for (v, x) in self.variables.iter().zip(values) {
            if v.lower.as_ref().is_some_and(|l| x < l) || v.upper.as_ref().is_some_and(|u| x > u) {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            let lhs: Rational = c.coeffs.iter().map(|(j, a)| a * &values[*j]).sum();
            match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
    }

    /// Plain-text dump in an LP-file-like layout with exact fractions.
    pub fn to_lp_text(&self) -> String {
        self.to_lp_text_with_binaries(&[])
    }

    pub(crate) fn to_lp_text_with_binaries(&self, binaries: &[usize]) -> String {
        let mut s = String::new();
        let name = |j: usize| {
            let v = &self.variables[j].name;
            if v.is_empty() {
                format!("x{j}")
            } else {
                v.clone()
            }
        };
        let linear = |coeffs: &[(usize, Rational)]| {
            if coeffs.is_empty() {
                return "0".to_string();
            }
            let mut out = String::new();
            for (k, (j, c)) in coeffs.iter().enumerate() {
                let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
                if k == 0 {
                    if sign == "-" {
                        out.push_str("- ");
                    }
                } else {
                    let _ = write!(out, " {sign} ");
                }
                let _ = write!(out, "{mag} {}", name(*j));
            }
            out
        };
        let _ = writeln!(s, "{}", if self.sense == Sense::Minimize { "minimize" } else { "maximize" });
        let _ = writeln!(s, " obj: {}", linear(&self.objective));
        let _ = writeln!(s, "subject to");
        for (k, c) in self.constraints.iter().enumerate() {
            let label = if c.name.is_empty() { format!("c{k}") } else { c.name.clone() };
            let _ = writeln!(s, " {label}: {} {} {}", linear(&c.coeffs), c.relation, c.rhs);
        }
        let _ = writeln!(s, "bounds");
        for (j, v) in self.variables.iter().enumerate() {
            let lo = v.lower.as_ref().map_or("-inf".to_string(), |l| l.to_string());
            let hi = v.upper.as_ref().map_or("+inf".to_string(), |u| u.to_string());
            let _ = writeln!(s, " {lo} <= {} <= {hi}", name(j));
        }
        if !binaries.is_empty() {
            let _ = writeln!(s, "binary");
            for &j in binaries {
                let _ = writeln!(s, " {}", name(j));
            }
        }
        s.push_str("end\n");
        s
    }
}

/// Solves an LP exactly.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    problem.check()?;
    let mut s = Simplex::new(problem);
    s.solve()
}

/// A mixed-binary program: `binaries` must carry bounds `[0, 1]`.
///
/// `branch_class[k]` orders branching: binaries of a lower class are branched first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpProblem {
    pub base: LpProblem,
    pub binaries: Vec<usize>,
    pub branch_class: Vec<u32>,
}

impl MilpProblem {
    pub fn new(base: LpProblem, binaries: Vec<usize>) -> Self {
        let branch_class = vec![0; binaries.len()];
        MilpProblem { base, binaries, branch_class }
    }

    pub fn check(&self) -> Result<(), LpError> {
        self.base.check()?;
        if self.branch_class.len() != self.binaries.len() {
            return Err(LpError::Malformed("branch classes do not match binaries".into()));
        }
        for &j in &self.binaries {
            let v = self
                .base
                .variables
                .get(j)
                .ok_or_else(|| LpError::Malformed(format!("binary {j} is not a variable")))?;
            let lo_ok = v.lower.as_ref().is_some_and(|l| !l.is_negative());
            let hi_ok = v.upper.as_ref().is_some_and(|u| u <= &Rational::one());
            if !lo_ok || !hi_ok {
                return Err(LpError::Malformed(format!("binary {j} ({}) must be bounded by [0, 1]", v.name)));
            }
        }
        Ok(())
    }

    pub fn to_lp_text(&self) -> String {
        self.base.to_lp_text_with_binaries(&self.binaries)
    }
}

/// Re-checks a claimed LP optimum: bounds, constraints and objective value.
pub fn certify(problem: &LpProblem, outcome: &LpOutcome) -> bool {
    match outcome {
        LpOutcome::Optimal(s) => problem.is_feasible(&s.values) && problem.objective_value(&s.values) == s.objective,
        _ => false,
    }
}

/// [`certify`] plus integrality of every binary.
pub fn certify_milp(problem: &MilpProblem, outcome: &LpOutcome) -> bool {
    certify(&problem.base, outcome)
        && match outcome {
            LpOutcome::Optimal(s) => problem.binaries.iter().all(|&j| s.values[j].is_zero() || s.values[j].is_one()),
            _ => false,
        }
}
