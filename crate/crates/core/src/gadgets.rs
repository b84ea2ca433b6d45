//! Generators for the hardness-reduction markets: Max-2-SAT to optimal compression and
//! Partition to keeping one fixed bank solvent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{zero_matrix, Compression, FinancialMarket, Matrix};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("formula out of scope: {0}")]
    FormulaOutOfScope(String),
    #[error("values sum to an odd number, so no equal split exists")]
    OddSum,
    #[error("partition values must be positive and nonempty")]
    BadValues,
}

/// A literal `X_var` (`positive`) or its negation; variables are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    /// From a signed 1-based DIMACS-style literal.
    pub fn from_signed(v: i64) -> Option<Literal> {
        (v != 0).then(|| Literal { var: v.unsigned_abs() as usize - 1, positive: v > 0 })
    }
}

/// A 2-CNF formula in which every literal occurs once or twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSatFormula {
    n: usize,
    clauses: Vec<[Literal; 2]>,
}

impl TwoSatFormula {
    pub fn new(n: usize, clauses: Vec<[Literal; 2]>) -> Result<Self, GadgetError> {
        let bad = |m: String| Err(GadgetError::FormulaOutOfScope(m));
        if n == 0 || clauses.is_empty() {
            return bad("at least one variable and one clause are required".into());
        }
        for (j, c) in clauses.iter().enumerate() {
            if c.iter().any(|l| l.var >= n) {
                return bad(format!("clause {} uses an unknown variable", j + 1));
            }
            if c[0] == c[1] {
                return bad(format!("clause {} repeats a literal", j + 1));
            }
        }
        let f = TwoSatFormula { n, clauses };
        for var in 0..n {
            for positive in [true, false] {
                let k = f.occurrences(Literal { var, positive });
                if !(1..=2).contains(&k) {
                    let sign = if positive { "" } else { "-" };
                    return bad(format!("literal {sign}{} occurs {k} times, expected 1 or 2", var + 1));
                }
            }
        }
        Ok(f)
    }

    /// From signed 1-based literals, e.g. `[[1, 2], [-1, -2]]`.
    pub fn from_signed(n: usize, clauses: &[[i64; 2]]) -> Result<Self, GadgetError> {
        let mut out = Vec::with_capacity(clauses.len());
        for c in clauses {
            match (Literal::from_signed(c[0]), Literal::from_signed(c[1])) {
                (Some(a), Some(b)) => out.push([a, b]),
                _ => return Err(GadgetError::FormulaOutOfScope("literal 0 is not allowed".into())),
            }
        }
        Self::new(n, out)
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[[Literal; 2]] {
        &self.clauses
    }

    pub fn occurrences(&self, lit: Literal) -> usize {
        self.clauses.iter().flatten().filter(|&&l| l == lit).count()
    }

    /// Number of clauses satisfied by `assignment[var]`.
    pub fn satisfied(&self, assignment: &[bool]) -> usize {
        self.clauses.iter().filter(|c| c.iter().any(|l| assignment[l.var] == l.positive)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GadgetKind {
    Max2sat,
    Max2satCycle,
    Partition,
}

/// What a generated market encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetMeta {
    pub kind: GadgetKind,
    /// Max-2-SAT: banks that must stay solvent, `nQ + K + m + n`. Partition: the most
    /// banks allowed to default, `|N| - 3`.
    pub threshold: usize,
    /// The bank that must stay solvent in the partition gadget (`b'`).
    pub distinguished: Option<usize>,
    /// `Q` for Max-2-SAT, `R` for partition.
    pub parameter: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetMarket {
    pub market: FinancialMarket,
    pub meta: GadgetMeta,
}

struct Builder {
    names: Vec<String>,
    endowments: Vec<Rational>,
    arcs: Vec<(usize, usize, Rational)>,
}

impl Builder {
    fn new() -> Self {
        Builder { names: Vec::new(), endowments: Vec::new(), arcs: Vec::new() }
    }

    fn bank(&mut self, name: String, endowment: Rational) -> usize {
        self.names.push(name);
        self.endowments.push(endowment);
        self.names.len() - 1
    }

    fn owe(&mut self, from: usize, to: usize, amount: Rational) {
        self.arcs.push((from, to, amount));
    }

    fn finish(self) -> FinancialMarket {
        let n = self.names.len();
        let mut l: Matrix = zero_matrix(n);
        for (i, j, v) in self.arcs {
            l[i][j] = v;
        }
        FinancialMarket::from_parts(self.names, l, self.endowments, vec![Rational::one(); n], vec![Rational::one(); n])
    }
}

/// Market in which a compression keeps `nQ + K + m + n` banks solvent iff an assignment
/// satisfies `K` clauses of `formula`. With `cycle`, the `T_i^0` and `F_i^0` banks pay
/// bank `i + 1` instead of `i`, so every useful compression is a single cycle.
pub fn max2sat_market(formula: &TwoSatFormula, k: usize, cycle: bool) -> Result<GadgetMarket, GadgetError> {
    let (n, m) = (formula.n, formula.clauses.len());
    if k > m {
        return Err(GadgetError::FormulaOutOfScope(format!("K = {k} exceeds the {m} clauses")));
    }
    let q = 2 * m + 6 * n + 1;
    let int = Rational::from_integer;
    let mut b = Builder::new();
    let mut var_bank = Vec::with_capacity(n);
    let mut chains = Vec::with_capacity(n);
    for i in 1..=n {
        let v = b.bank(format!("x{i}"), int(3));
        let v2 = b.bank(format!("x{i}'"), Rational::zero());
        let t: Vec<usize> = (0..=q).map(|l| b.bank(format!("T{i}_{l}"), Rational::zero())).collect();
        let f: Vec<usize> = (0..=q).map(|l| b.bank(format!("F{i}_{l}"), Rational::zero())).collect();
        var_bank.push((v, v2));
        chains.push((t, f));
    }
    let clause_bank: Vec<(usize, usize)> = (1..=m)
        .map(|j| (b.bank(format!("c{j}"), Rational::zero()), b.bank(format!("c{j}'"), Rational::zero())))
        .collect();
    for i in 0..n {
        let (v, v2) = var_bank[i];
        let back = if cycle { var_bank[(i + 1) % n].0 } else { v };
        b.owe(v, v2, int(7));
        for chain in [&chains[i].0, &chains[i].1] {
            b.owe(v, chain[0], int(16));
            b.owe(chain[0], back, int(16));
            b.owe(chain[0], chain[1], Rational::pow2(100));
            for l in 1..q {
                b.owe(chain[l], chain[l + 1], int(2));
            }
        }
    }
    for (j, clause) in formula.clauses.iter().enumerate() {
        for lit in clause {
            let (t, f) = &chains[lit.var];
            let end = if lit.positive { t[q] } else { f[q] };
            let amount = if formula.occurrences(*lit) == 1 { 2 } else { 1 };
            b.owe(end, clause_bank[j].0, int(amount));
        }
        b.owe(clause_bank[j].0, clause_bank[j].1, int(1));
    }
    let kind = if cycle { GadgetKind::Max2satCycle } else { GadgetKind::Max2sat };
    Ok(GadgetMarket {
        market: b.finish(),
        meta: GadgetMeta { kind, threshold: n * q + k + m + n, distinguished: None, parameter: int(q as i64) },
    })
}

/// Market in which bank `b'` can be kept solvent by a compression iff `values` splits
/// into two halves of equal sum. Bank order: `x̂_i, x_i, y_i, x*_i` for each value, then
/// `b_S, b_-S, b', b*`.
pub fn partition_market(values: &[u64]) -> Result<GadgetMarket, GadgetError> {
    if values.is_empty() || values.contains(&0) {
        return Err(GadgetError::BadValues);
    }
    let total: u64 = values.iter().sum();
    if total % 2 == 1 {
        return Err(GadgetError::OddSum);
    }
    let n = values.len();
    let big = |v: u64| Rational::from_bigints(v.into(), 1.into());
    let squares: u64 = values.iter().map(|a| a * a).sum();
    let r = big(4 * n as u64 * squares + 1);
    let star_arc = &(&(&r * &r) * &big(4 * n as u64)) + &Rational::one();
    let eps = Rational::new(1, 2 * n as i64);
    let mut b = Builder::new();
    let mut gadget = Vec::with_capacity(n);
    for (i, &a) in values.iter().enumerate() {
        let i = i + 1;
        let hat = b.bank(format!("xhat{i}"), Rational::zero());
        let x = b.bank(format!("x{i}"), big(a));
        let y = b.bank(format!("y{i}"), big(a));
        let star = b.bank(format!("xstar{i}"), Rational::zero());
        gadget.push((hat, x, y, star));
    }
    let bs = b.bank("bS".into(), Rational::zero());
    let bns = b.bank("bnotS".into(), Rational::zero());
    let bp = b.bank("b'".into(), Rational::zero());
    let bstar = b.bank("b*".into(), Rational::zero());
    for (&(hat, x, y, star), &a) in gadget.iter().zip(values) {
        b.owe(x, star, r.clone());
        b.owe(y, star, r.clone());
        b.owe(star, hat, r.clone());
        b.owe(hat, y, r.clone());
        b.owe(hat, x, r.clone());
        b.owe(star, bstar, star_arc.clone());
        b.owe(x, bs, &big(a) + &eps);
        b.owe(y, bns, &big(a) + &eps);
    }
    let half = Rational::new(total as i64, 2);
    b.owe(bs, bp, half.clone());
    b.owe(bns, bp, half);
    b.owe(bp, bstar, big(total));
    let market = b.finish();
    let threshold = market.n() - 3;
    Ok(GadgetMarket {
        market,
        meta: GadgetMeta { kind: GadgetKind::Partition, threshold, distinguished: Some(bp), parameter: r },
    })
}

/// The compression built from an equal split: for `i` in the split (`in_split[i]`) the
/// triangle `x*_i → x̂_i → x_i → x*_i` is cancelled at value `R`, otherwise the one
/// through `y_i`.
pub fn split_compression(gadget: &GadgetMarket, in_split: &[bool]) -> Compression {
    let n = gadget.market.n();
    let r = &gadget.meta.parameter;
    let mut c = Compression { amounts: zero_matrix(n) };
    for (i, &side) in in_split.iter().enumerate() {
        let (hat, x, y, star) = (4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3);
        let mid = if side { x } else { y };
        c.amounts[star][hat] = r.clone();
        c.amounts[hat][mid] = r.clone();
        c.amounts[mid][star] = r.clone();
    }
    c
}

/// Parameters of `gen gadget`: a formula with its `K`, or partition values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GadgetParams {
    Max2sat { variables: usize, clauses: Vec<[i64; 2]>, k: usize },
    Partition { values: Vec<u64> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearing::clear_proportional;

    fn example() -> TwoSatFormula {
        TwoSatFormula::from_signed(2, &[[1, 2], [-1, -2]]).unwrap()
    }

    #[test]
    fn max2sat_counts() {
        let g = max2sat_market(&example(), 2, false).unwrap();
        assert_eq!(g.market.n(), 80);
        assert_eq!(g.meta.threshold, 40);
        assert_eq!(g.meta.parameter, Rational::from_integer(17));
        // Per variable: 1 + 2·(2 + 1 + 16) arcs, per clause: 2 + 1.
        assert_eq!(g.market.arcs().len(), 2 * 39 + 2 * 3);
        assert!(g.market.validate().is_empty());
        let t10 = g.market.index_of("T1_0").unwrap();
        let t11 = g.market.index_of("T1_1").unwrap();
        assert_eq!(g.market.liabilities[t10][t11], Rational::pow2(100));
        // Each literal occurs once, so its chain end owes 2.
        let end = g.market.index_of("T1_17").unwrap();
        let c1 = g.market.index_of("c1").unwrap();
        assert_eq!(g.market.liabilities[end][c1], Rational::from_integer(2));
    }

    #[test]
    fn max2sat_cycle_rewires_to_next_variable() {
        let g = max2sat_market(&example(), 2, true).unwrap();
        let general = max2sat_market(&example(), 2, false).unwrap();
        assert_eq!(g.market.n(), general.market.n());
        assert_eq!(g.market.arcs().len(), general.market.arcs().len());
        let (x1, x2) = (g.market.index_of("x1").unwrap(), g.market.index_of("x2").unwrap());
        for (t, next) in [("T1_0", x2), ("F1_0", x2), ("T2_0", x1), ("F2_0", x1)] {
            let t = g.market.index_of(t).unwrap();
            assert_eq!(g.market.liabilities[t][next], Rational::from_integer(16));
        }
        assert_eq!(g.meta.kind, GadgetKind::Max2satCycle);
    }

    #[test]
    fn formula_scope() {
        assert!(TwoSatFormula::from_signed(1, &[]).is_err());
        assert!(TwoSatFormula::from_signed(0, &[[1, 1]]).is_err());
        // x1 never negated.
        assert!(TwoSatFormula::from_signed(2, &[[1, 2], [1, -2]]).is_err());
        assert!(TwoSatFormula::from_signed(1, &[[1, 1], [-1, -1]]).is_err());
        assert!(max2sat_market(&example(), 3, false).is_err());
        assert_eq!(example().satisfied(&[true, false]), 2);
        assert_eq!(example().satisfied(&[true, true]), 1);
    }

    #[test]
    fn doubled_literal_owes_one() {
        let f = TwoSatFormula::from_signed(2, &[[1, 2], [1, -2], [-1, 2], [-1, -2]]).unwrap();
        let g = max2sat_market(&f, 3, false).unwrap();
        let end = g.market.index_of("T1_21").unwrap();
        let c1 = g.market.index_of("c1").unwrap();
        assert_eq!(g.meta.parameter, Rational::from_integer(21));
        assert_eq!(g.market.liabilities[end][c1], Rational::one());
    }

    #[test]
    fn partition_examples() {
        let g = partition_market(&[1, 1]).unwrap();
        assert_eq!(g.market.n(), 12);
        assert_eq!(g.meta.parameter, Rational::from_integer(17));
        assert_eq!(g.meta.threshold, 9);
        let star = g.market.index_of("xstar1").unwrap();
        let bstar = g.market.index_of("b*").unwrap();
        assert_eq!(g.market.liabilities[star][bstar], Rational::from_integer(2313));
        let x = g.market.index_of("x2").unwrap();
        let bs = g.market.index_of("bS").unwrap();
        assert_eq!(g.market.liabilities[x][bs], Rational::new(5, 4));
        assert_eq!(g.meta.distinguished, g.market.index_of("b'"));
        assert!(g.market.validate().is_empty());
        assert_eq!(partition_market(&[1, 1, 2]).unwrap().meta.parameter, Rational::from_integer(73));
        assert_eq!(partition_market(&[1, 2]), Err(GadgetError::OddSum));
        assert_eq!(partition_market(&[]), Err(GadgetError::BadValues));
    }

    #[test]
    fn split_compression_saves_the_four_sinks() {
        let g = partition_market(&[1, 1, 2]).unwrap();
        let c = split_compression(&g, &[true, true, false]);
        assert!(c.is_compression(&g.market));
        let reduced = g.market.apply_compression(&c).unwrap();
        let p = clear_proportional(&reduced).unwrap();
        let report = reduced.defaulting(&p.payments);
        for name in ["bS", "bnotS", "b'", "b*"] {
            assert!(!report.defaulting.contains(&reduced.index_of(name).unwrap()), "{name} defaults");
        }
        assert!(report.count() <= g.meta.threshold);
    }
}
