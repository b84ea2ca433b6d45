//! Seeded inputs shared by the benchmarks.

use netclear::simlab::{gen_erdos_renyi, random_market, GenConfig, SmallMarketSpec};
use netclear::FinancialMarket;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi market with the synthetic experiment's distributions.
pub fn er_market(n: usize, seed: u64) -> FinancialMarket {
    gen_erdos_renyi(&GenConfig::synthetic(n, seed)).expect("synthetic config is valid")
}

/// Small integer market with two priority groups and default costs on a quarter grid.
pub fn small_market(seed: u64) -> FinancialMarket {
    let spec = SmallMarketSpec { max_n: 7, max_liability: 8, density: 0.35, max_groups: 2, min_endowment: 0, cost_grid: 4 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Skip draws below four banks so every input has some structure.
    loop {
        let m = random_market(&mut rng, &spec);
        if m.n() >= 4 {
            return m;
        }
    }
}
