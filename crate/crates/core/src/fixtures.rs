//! Small reference markets shipped with the crate.

use crate::io::parse_market;
use crate::market::FinancialMarket;

pub const CHAIN_JSON: &str = include_str!("../fixtures/chain.json");
pub const RING3_JSON: &str = include_str!("../fixtures/ring3.json");
pub const ASYM_JSON: &str = include_str!("../fixtures/asym.json");
pub const PRIO_JSON: &str = include_str!("../fixtures/prio.json");
pub const TWOCYCLE_JSON: &str = include_str!("../fixtures/twocycle.json");
pub const TWOCHAINS_JSON: &str = include_str!("../fixtures/twochains.json");

fn load(text: &str) -> FinancialMarket {
    parse_market(text).expect("shipped fixture parses")
}

/// Two banks, `L_12 = 2`, `e = (1, 0)`.
pub fn chain() -> FinancialMarket {
    load(CHAIN_JSON)
}

/// Three-cycle of unit liabilities, zero endowments.
pub fn ring3() -> FinancialMarket {
    load(RING3_JSON)
}

/// `L_12 = 1`, `L_21 = 1/2`, zero endowments, `β = 1/2`.
pub fn asym() -> FinancialMarket {
    load(ASYM_JSON)
}

/// Bank 1 owes 1 to each of banks 2 and 3 with bank 2 in the first priority group.
pub fn prio() -> FinancialMarket {
    load(PRIO_JSON)
}

/// Ring `1 → 2 → 3 → 1` of liability 2 plus `L_14 = 1`.
pub fn twocycle() -> FinancialMarket {
    load(TWOCYCLE_JSON)
}

/// Disjoint chains `1 → 2` and `3 → 4` with zero endowments.
pub fn twochains() -> FinancialMarket {
    load(TWOCHAINS_JSON)
}

/// Every fixture keyed by its file stem.
pub fn all() -> Vec<(&'static str, FinancialMarket)> {
    vec![
        ("chain", chain()),
        ("ring3", ring3()),
        ("asym", asym()),
        ("prio", prio()),
        ("twocycle", twocycle()),
        ("twochains", twochains()),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_valid() {
        for (name, m) in super::all() {
            assert!(m.validate().is_empty(), "{name}: {:?}", m.validate());
        }
    }
}
