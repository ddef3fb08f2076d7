//! Fixtures shared by the benchmarks.

use auctionkit::{
    AllocationRule, BidGrid, CanonicalExample, CanonicalName, Environment, Mechanism, PaymentFormat, Priority,
    StepFunction, TieBreak,
};

/// First-price auction on `n` agents.
pub fn first_price(n: usize) -> Mechanism {
    Mechanism::first_price(n).expect("n > 0")
}

/// Greedy `b / sqrt(|S|)` auction where each of `n` agents wants a bundle
/// of `items` items, cycling through bundle sizes.
pub fn greedy_auction(n: usize, items: usize) -> Mechanism {
    let demands = (0..n).map(|i| (0..items).filter(|j| (i + j) % (1 + i % items) == 0).collect()).collect();
    let env = Environment::single_minded(items, demands).expect("valid demands");
    let rule = AllocationRule::greedy(env, Priority::SqrtBundle, TieBreak::identity(n)).expect("deterministic");
    Mechanism::plain(rule, PaymentFormat::WinnerPaysBid)
}

/// Deterministic bid profile spread over `[0, 1)`.
pub fn spread_bids(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect()
}

/// A step rule with `k` equal steps on `[0, 1)`.
pub fn staircase(k: usize) -> StepFunction {
    StepFunction::new((0..k).map(|j| (j as f64 / k as f64, (j + 1) as f64 / k as f64)).collect()).expect("nondecreasing")
}

pub fn cor_example(cells: usize) -> CanonicalExample {
    auctionkit::canonical_example(CanonicalName::CorWelfare, cells).expect("builds")
}

pub fn cent_grid() -> BidGrid {
    BidGrid::new(1.0, 101).expect("valid grid")
}
