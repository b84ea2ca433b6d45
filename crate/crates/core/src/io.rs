//! JSON market files and result documents.
//!
//! Amounts are written as decimal strings when the value has a terminating expansion and as
//! `num/den` otherwise. The reader accepts either form, as a JSON string or a JSON number.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::market::{zero_matrix, Compression, FinancialMarket, Matrix};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Schema(String),
}

fn schema(msg: impl Into<String>) -> FormatError {
    FormatError::Schema(msg.into())
}

/// Canonical text form of an amount.
pub fn format_rational(v: &Rational) -> String {
    v.to_decimal_string().unwrap_or_else(|| v.to_string())
}

/// Parses an amount given as a JSON string or number.
pub fn parse_amount(v: &Value, what: &str) -> Result<Rational, FormatError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(schema(format!("{what}: expected a number or numeric string"))),
    };
    parse_amount_str(&text).ok_or_else(|| schema(format!("{what}: cannot parse `{text}` exactly")))
}

/// Parses a decimal, fraction, or scientific-notation amount exactly.
pub fn parse_amount_str(text: &str) -> Option<Rational> {
    if let Ok(v) = text.parse::<Rational>() {
        return Some(v);
    }
    let lower = text.to_ascii_lowercase();
    let (mantissa, exp) = lower.split_once('e')?;
    let m: Rational = mantissa.parse().ok()?;
    let e: i32 = exp.parse().ok()?;
    if e.unsigned_abs() > 4096 {
        return None;
    }
    let ten = Rational::from_integer(10);
    let mut scale = Rational::one();
    for _ in 0..e.unsigned_abs() {
        scale *= &ten;
    }
    Some(if e >= 0 { m * scale } else { m / scale })
}

fn amount_list(doc: &Map<String, Value>, key: &str, n: usize, default: Rational) -> Result<Vec<Rational>, FormatError> {
    match doc.get(key) {
        None => Ok(vec![default; n]),
        Some(Value::Array(items)) => {
            if items.len() != n {
                return Err(schema(format!("`{key}` has {} entries for {n} banks", items.len())));
            }
            items
                .iter()
                .enumerate()
                .map(|(i, v)| parse_amount(v, &format!("{key}[{i}]")))
                .collect()
        }
        Some(_) => Err(schema(format!("`{key}` must be an array"))),
    }
}

fn bank_ref(v: &Value, index: &BTreeMap<String, usize>, what: &str) -> Result<usize, FormatError> {
    let name = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(schema(format!("{what}: expected a bank name"))),
    };
    index.get(&name).copied().ok_or_else(|| schema(format!("{what}: unknown bank `{name}`")))
}

/// Reads a market document. Structural problems are errors; invariant checks are left to
/// [`FinancialMarket::validate`].
pub fn parse_market(text: &str) -> Result<FinancialMarket, FormatError> {
    let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    market_from_value(&value)
}

pub fn market_from_value(value: &Value) -> Result<FinancialMarket, FormatError> {
    let doc = value.as_object().ok_or_else(|| schema("market must be a JSON object"))?;
    let banks = doc
        .get("banks")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("`banks` must be an array of names"))?;
    let mut names = Vec::with_capacity(banks.len());
    let mut index = BTreeMap::new();
    for (i, b) in banks.iter().enumerate() {
        let name = match b {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(schema(format!("banks[{i}] must be a string"))),
        };
        if index.insert(name.clone(), i).is_some() {
            return Err(schema(format!("duplicate bank `{name}`")));
        }
        names.push(name);
    }
    let n = names.len();
    let endowments = amount_list(doc, "endowments", n, Rational::zero())?;
    let alpha = amount_list(doc, "alpha", n, Rational::one())?;
    let beta = amount_list(doc, "beta", n, Rational::one())?;

    let mut liabilities = zero_matrix(n);
    let mut seen = vec![vec![false; n]; n];
    if let Some(list) = doc.get("liabilities") {
        let list = list.as_array().ok_or_else(|| schema("`liabilities` must be an array"))?;
        for (k, item) in list.iter().enumerate() {
            let what = format!("liabilities[{k}]");
            let obj = item.as_object().ok_or_else(|| schema(format!("{what} must be an object")))?;
            let from = bank_ref(obj.get("from").unwrap_or(&Value::Null), &index, &format!("{what}.from"))?;
            let to = bank_ref(obj.get("to").unwrap_or(&Value::Null), &index, &format!("{what}.to"))?;
            let amount = parse_amount(obj.get("amount").unwrap_or(&Value::Null), &format!("{what}.amount"))?;
            if seen[from][to] {
                return Err(schema(format!("{what}: duplicate entry for ({}, {})", names[from], names[to])));
            }
            seen[from][to] = true;
            liabilities[from][to] = amount;
        }
    }

    let mut market = FinancialMarket::from_parts(names, liabilities, endowments, alpha, beta);
    if let Some(prio) = doc.get("priorities") {
        let prio = prio.as_object().ok_or_else(|| schema("`priorities` must be an object"))?;
        for (bank, groups) in prio {
            let i = *index.get(bank).ok_or_else(|| schema(format!("priorities: unknown bank `{bank}`")))?;
            let groups = groups
                .as_array()
                .ok_or_else(|| schema(format!("priorities[{bank}] must be an array of groups")))?;
            let mut parsed = Vec::with_capacity(groups.len());
            for (g, group) in groups.iter().enumerate() {
                let members = group
                    .as_array()
                    .ok_or_else(|| schema(format!("priorities[{bank}][{g}] must be an array")))?;
                parsed.push(
                    members
                        .iter()
                        .map(|m| bank_ref(m, &index, &format!("priorities[{bank}][{g}]")))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            market.priorities[i] = parsed;
        }
    }
    Ok(market)
}

fn amounts_json(values: &[Rational]) -> Value {
    Value::Array(values.iter().map(|v| Value::String(format_rational(v))).collect())
}

/// Edge list of the entries of `m` selected by `keep`, row-major.
pub fn edges_json(names: &[String], m: &Matrix, keep: impl Fn(usize, usize) -> bool) -> Value {
    let n = names.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if keep(i, j) {
                out.push(json!({
                    "from": names[i],
                    "to": names[j],
                    "amount": format_rational(&m[i][j]),
                }));
            }
        }
    }
    Value::Array(out)
}

pub fn market_to_value(m: &FinancialMarket) -> Value {
    let mut prio = Map::new();
    for (i, groups) in m.priorities.iter().enumerate() {
        let groups: Vec<Value> = groups
            .iter()
            .map(|g| Value::Array(g.iter().map(|&j| Value::String(m.names[j].clone())).collect()))
            .collect();
        prio.insert(m.names[i].clone(), Value::Array(groups));
    }
    json!({
        "banks": m.names,
        "endowments": amounts_json(&m.endowments),
        "alpha": amounts_json(&m.alpha),
        "beta": amounts_json(&m.beta),
        "liabilities": edges_json(&m.names, &m.liabilities, |i, j| m.liabilities[i][j].is_positive()),
        "priorities": Value::Object(prio),
    })
}

pub fn market_to_string(m: &FinancialMarket) -> String {
    let mut s = serde_json::to_string_pretty(&market_to_value(m)).expect("market serializes");
    s.push('\n');
    s
}

/// Payments on every arc of `market`, including zero payments.
pub fn payments_json(market: &FinancialMarket, p: &Matrix) -> Value {
    edges_json(&market.names, p, |i, j| market.liabilities[i][j].is_positive() || !p[i][j].is_zero())
}

/// Nonzero reductions of a compression.
pub fn compression_json(market: &FinancialMarket, c: &Compression) -> Value {
    edges_json(&market.names, &c.amounts, |i, j| !c.amounts[i][j].is_zero())
}

pub fn names_json(market: &FinancialMarket, ids: &[usize]) -> Value {
    Value::Array(ids.iter().map(|&i| Value::String(market.names[i].clone())).collect())
}

/// Reads an edge list document under `key` back into a matrix over `market`'s banks.
pub fn matrix_from_edges(market: &FinancialMarket, doc: &Value, key: &str) -> Result<Matrix, FormatError> {
    let index: BTreeMap<String, usize> =
        market.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let list = doc
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| schema(format!("`{key}` must be an array")))?;
    let mut m = zero_matrix(market.n());
    for (k, item) in list.iter().enumerate() {
        let what = format!("{key}[{k}]");
        let from = bank_ref(item.get("from").unwrap_or(&Value::Null), &index, &what)?;
        let to = bank_ref(item.get("to").unwrap_or(&Value::Null), &index, &what)?;
        m[from][to] = parse_amount(item.get("amount").unwrap_or(&Value::Null), &what)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn amounts_accept_strings_numbers_and_fractions() {
        assert_eq!(parse_amount(&json!("0.1"), "x").unwrap(), Rational::new(1, 10));
        assert_eq!(parse_amount(&json!("2/6"), "x").unwrap(), Rational::new(1, 3));
        let num: Value = serde_json::from_str("0.3").unwrap();
        assert_eq!(parse_amount(&num, "x").unwrap(), Rational::new(3, 10));
        let sci: Value = serde_json::from_str("1.5e2").unwrap();
        assert_eq!(parse_amount(&sci, "x").unwrap(), Rational::from_integer(150));
        assert!(parse_amount(&json!(true), "x").is_err());
    }

    #[test]
    fn formatting_prefers_decimals() {
        assert_eq!(format_rational(&Rational::new(1, 2)), "0.5");
        assert_eq!(format_rational(&Rational::new(1, 3)), "1/3");
    }

    #[test]
    fn missing_priorities_default_to_one_group() {
        let m = parse_market(
            r#"{"banks":["a","b","c"],"endowments":[1,0,0],"alpha":[1,1,1],"beta":[1,1,1],
                "liabilities":[{"from":"a","to":"b","amount":"1"},{"from":"a","to":"c","amount":"2"}]}"#,
        )
        .unwrap();
        assert_eq!(m.priorities[0], vec![vec![1, 2]]);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn unknown_bank_is_rejected() {
        let err = parse_market(r#"{"banks":["a"],"liabilities":[{"from":"a","to":"z","amount":1}]}"#);
        assert!(matches!(err, Err(FormatError::Schema(_))));
    }

    #[test]
    fn fixtures_round_trip() {
        for (_, m) in fixtures::all() {
            assert_eq!(parse_market(&market_to_string(&m)).unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn random_markets_round_trip(
            n in 1usize..5,
            data in proptest::collection::vec((0i64..50, 1i64..7), 25),
            e in proptest::collection::vec(-20i64..20, 5),
        ) {
            let mut l = zero_matrix(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let (a, b) = data[i * 5 + j];
                        l[i][j] = Rational::new(a, b);
                    }
                }
            }
            let endow = (0..n).map(|i| Rational::new(e[i], 3)).collect();
            let m = FinancialMarket::without_default_costs(l, endow);
            prop_assert_eq!(parse_market(&market_to_string(&m)).unwrap(), m);
        }
    }
}
