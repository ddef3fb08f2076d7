//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::f64::consts::E;
use std::process::ExitCode;
use std::time::Instant;

use auctionkit::eff::{
    ce_at_profile, revenue_bound_report, tradeoff_margins, uniform_grid, z_grid, ComposedScenario, RevenueOptions,
};
use auctionkit::eq::{regret_with, TieReading};
use auctionkit::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const Z_POINTS: usize = 4096;

fn target() -> f64 {
    (E - 1.0) / E
}

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn record(&mut self, id: &str, title: &str, outcome: Result<(bool, String)>, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("{} {id:<3} {title}: {detail} [{secs:.1}s]", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn random_step(rng: &mut ChaCha8Rng, full: bool) -> StepFunction {
    let k = rng.random_range(1..6);
    let mut bs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let mut ls: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    bs.sort_by(|a, b| a.total_cmp(b));
    ls.sort_by(|a, b| a.total_cmp(b));
    if full {
        *ls.last_mut().unwrap() = 1.0;
    }
    StepFunction::new(bs.into_iter().zip(ls).collect()).unwrap()
}

/// Exact first-price best response to a right-continuous step rule among
/// bids of at least `floor`.
fn exact_br(f: &StepFunction, v: f64, floor: f64) -> f64 {
    let mut best = (floor, (v - floor) * f.eval(floor));
    for &(b, x) in f.points() {
        if b >= floor && (v - b) * x > best.1 {
            best = (b, (v - b) * x);
        }
    }
    best.0
}

fn ca_example() -> Result<Environment> {
    Environment::single_minded(3, vec![vec![0], vec![1], vec![2], vec![0, 1, 2]])
}

fn criterion_1() -> Result<(bool, String)> {
    let r = ce_deterministic(&Mechanism::first_price(3)?, &uniform_grid(1.0, 11), CeOptions::default())?;
    Ok(((r.mu_hat - 1.0).abs() <= 1e-12, format!("mu_hat = {} over {} profiles", r.mu_hat, r.profiles)))
}

fn criterion_2() -> Result<(bool, String)> {
    let hbw = Mechanism::plain(
        AllocationRule::highest_bids_win(ca_example()?, TieBreak::identity(4))?,
        PaymentFormat::WinnerPaysBid,
    );
    let witness = ce_deterministic(&hbw, &[0.0, 1.0], CeOptions::default())?.mu_hat;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=8);
        let demands: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mask = rng.random_range(1u8..8);
                (0..3).filter(|j| mask >> j & 1 == 1).collect()
            })
            .collect();
        let env = Environment::single_minded(3, demands)?;
        let mech = Mechanism::plain(AllocationRule::greedy(env, Priority::SqrtBundle, TieBreak::identity(n))?, PaymentFormat::WinnerPaysBid);
        let bids: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        worst = worst.min(ce_at_profile(&mech, &bids, CeOptions::default())?.0);
    }
    let floor = 1.0 / 3f64.sqrt();
    Ok((
        (witness - 1.0 / 3.0).abs() <= 1e-12 && worst >= floor - 1e-9,
        format!("highest-bids-win witness {witness:.12}; greedy min ratio {worst:.6} >= {floor:.6} over 10^4 instances"),
    ))
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |m| (0..n).filter(|i| m >> i & 1 == 1).collect())
}

fn criterion_3() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut mismatches = 0;
    let instances = 5_000;
    for _ in 0..instances {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let edges: Vec<Vec<usize>> = (0..n).map(|_| (0..m).filter(|_| rng.random_bool(0.4)).collect()).collect();
        let env = Environment::transversal(m, edges)?;
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let rule = AllocationRule::highest_bids_win(env.clone(), TieBreak::identity(n))?;
        let x = rule.allocate(&w)?;
        let greedy: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        let brute = subsets(n)
            .filter(|s| env.is_independent(s))
            .map(|s| s.iter().map(|&i| w[i]).sum::<f64>())
            .fold(0.0, f64::max);
        if (greedy - brute).abs() > 1e-9 {
            mismatches += 1;
        }
    }
    let pos = Mechanism::plain(
        AllocationRule::rank_by_bid(Environment::position(3, vec![1.0, 0.5])?, TieBreak::identity(3))?,
        PaymentFormat::WinnerPaysBid,
    );
    let mu = ce_deterministic(&pos, &uniform_grid(1.0, 11), CeOptions::default())?.mu_hat;
    Ok((
        mismatches == 0 && (mu - 1.0).abs() <= 1e-9,
        format!("{mismatches} greedy mismatches over {instances} seeded transversal instances; rank-by-bid mu_hat = {mu}"),
    ))
}

fn criterion_4() -> Result<(bool, String)> {
    let zs = z_grid(Z_POINTS);
    let tight = BiddingOutcome::single(1.0, 0.0, InterimRule::indifference(), PaymentFormat::WinnerPaysBid)?;
    let eta = individual_efficiency(&tight, &zs)?.eta;
    let mut det_worst: f64 = 0.0;
    for k in 0..10 {
        let tau = k as f64 / 10.0;
        let o = BiddingOutcome::single(1.0, tau, InterimRule::Step(StepFunction::step(tau, 1.0)), PaymentFormat::WinnerPaysBid)?;
        det_worst = det_worst.max((individual_efficiency(&o, &zs)?.eta - 1.0).abs());
    }
    let ap = BiddingOutcome::single(1.0, 0.0, InterimRule::linear(), PaymentFormat::AllPay)?;
    let weak = weak_individual_efficiency(&ap, CostKind::Bid)?.eta;
    Ok((
        (eta - target()).abs() <= 1e-6 && det_worst <= 1e-12 && (weak - 0.5).abs() <= 1e-12,
        format!("tight eta = {eta:.9}; deterministic |eta - 1| <= {det_worst:e}; all-pay weak eta = {weak}"),
    ))
}

fn criterion_5() -> Result<(bool, String)> {
    let cor = canonical_example(CanonicalName::CorWelfare, 10_000)?;
    let mu = ce_deterministic(&cor.mechanism, &uniform_grid(1.0, 11), CeOptions::default())?.mu_hat;
    let tight = BiddingOutcome::single(1.0, 0.0, InterimRule::indifference(), PaymentFormat::WinnerPaysBid)?;
    let eta = individual_efficiency(&tight, &z_grid(Z_POINTS))?.eta;
    let ratio = cor.exact.welfare / cor.exact.optimal_welfare;
    let slack = ratio - mu * eta;
    let sampled = cor.joint.expected_welfare(&cor.mechanism)?;
    Ok((
        (cor.exact.welfare - target()).abs() <= 1e-6 && slack.abs() <= 1e-6,
        format!("welfare = {:.9} (10^4 atoms: {sampled:.6}); mu*eta = {:.9}; slack {slack:e}", cor.exact.welfare, mu * eta),
    ))
}

fn criterion_6() -> Result<(bool, String)> {
    let rev = canonical_example(CanonicalName::RevHalf, 256)?;
    let revenue = rev.joint.expected_revenue(&rev.mechanism)?;
    let myerson = myerson_optimal_revenue(rev.environment(), &rev.marginals, 256, 1 << 20)?;
    let bound = revenue_bound_report(&rev.mechanism, &rev.joint, &rev.marginals, 1.0, RevenueOptions::default())?;
    let ratio = revenue / myerson;
    Ok((
        (revenue - 1.0).abs() <= 1e-12 && (myerson - 1.99).abs() <= 1e-9 && bound.pass && ratio >= bound.rhs / myerson,
        format!("revenue = {revenue}; optimal revenue = {myerson:.12}; ratio {ratio:.5} >= {:.5}", bound.rhs / myerson),
    ))
}

fn criterion_7() -> Result<(bool, String)> {
    let pa = canonical_example(CanonicalName::PartialAlloc, 10_000)?;
    let welfare = pa.joint.expected_welfare(&pa.mechanism)?;
    let options = CeOptions { budget: 200, seed: SEED, ..CeOptions::default() };
    let ce = ce_deterministic(&pa.mechanism, &uniform_grid(1.0, 21), options)?;
    Ok((
        (welfare - target()).abs() <= 1e-3 && (ce.mu_hat - 1.0).abs() <= 1e-9,
        format!("welfare = {welfare:.6} at 10^4 atoms; mixture mu_hat = {} over {} sampled profiles", ce.mu_hat, ce.profiles),
    ))
}

fn criterion_8a() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 81);
    let zs = z_grid(512);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let f = random_step(&mut rng, false);
        let v = rng.random_range(0.01..2.0);
        let o = BiddingOutcome::single(v, exact_br(&f, v, 0.0), InterimRule::Step(f), PaymentFormat::WinnerPaysBid)?;
        worst = worst.min(tradeoff_margins(&o, None, 0.0, &zs)?.welfare.lhs);
    }
    Ok((worst >= -1e-9, format!("min margin {worst:e} over 1000 outcomes")))
}

fn criterion_8b() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 82);
    let grid = uniform_grid(1.0, 6);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let n = rng.random_range(2..=3);
        let k = rng.random_range(1..n);
        let rule = AllocationRule::highest_bids_win(Environment::k_unit(n, k)?, TieBreak::identity(n))?;
        let reserves: Vec<f64> = (0..n).map(|_| grid[rng.random_range(0..grid.len())]).collect();
        let plain = Mechanism::plain(rule.clone(), PaymentFormat::WinnerPaysBid);
        let with = Mechanism::new(rule, PaymentFormat::WinnerPaysBid, reserves)?;
        let a = ce_deterministic(&plain, &grid, CeOptions::default())?.mu_hat;
        let b = ce_deterministic(&with, &grid, CeOptions::default())?.mu_hat;
        worst = worst.min(b - a);
    }
    Ok((worst >= -1e-9, format!("min (with - without) = {worst:e} over 200 triples")))
}

fn criterion_8c() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 83);
    let grid = uniform_grid(1.0, 5);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = w.iter().sum();
        let parts = (1..=3)
            .map(|k| Ok((w[k - 1] / total, AllocationRule::highest_bids_win(Environment::k_unit(3, k)?, TieBreak::identity(3))?)))
            .collect::<Result<Vec<_>>>()?;
        let mut floor = f64::INFINITY;
        for (_, r) in &parts {
            let m = Mechanism::plain(r.clone(), PaymentFormat::WinnerPaysBid);
            floor = floor.min(ce_deterministic(&m, &grid, CeOptions::default())?.mu_hat);
        }
        let mix = Mechanism::plain(convex_combine(parts)?, PaymentFormat::WinnerPaysBid);
        worst = worst.min(ce_deterministic(&mix, &grid, CeOptions::default())?.mu_hat - floor);
    }
    Ok((worst >= -1e-9, format!("min (mixture - worst component) = {worst:e} over 200 mixtures")))
}

fn criterion_8d() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 84);
    let conv = SurplusConvention::default();
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let rule = InterimRule::Step(random_step(&mut rng, true));
        let bid = threshold_surplus(&rule, 1.0, 0.0, conv);
        let ppu = threshold_surplus(&cost_frontier(&rule, PaymentFormat::AllPay, CostKind::PricePerUnit), 1.0, 0.0, conv);
        worst = worst.min(2.0 * bid - ppu);
    }
    Ok((worst >= -1e-9, format!("min 2 T_bid(1) - T_ppu(1) = {worst:e} over 1000 rules")))
}

fn criterion_8e() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 85);
    let n = 3;
    let fpa = Mechanism::first_price(n)?;
    let comp = compose_simultaneous(vec![fpa.clone(), fpa])?;
    let action = |rng: &mut ChaCha8Rng, v: f64| {
        if rng.random_bool(0.2) {
            Action::Withdraw
        } else {
            Action::Bid(rng.random_range(0.0..=v))
        }
    };
    // ten rows per agent; their product is 10^3 independent scenarios
    let per_agent: Vec<Vec<(f64, Vec<Action>)>> = (0..n)
        .map(|_| {
            (0..10)
                .map(|_| {
                    let v = rng.random_range(0.0..1.0);
                    (v, vec![action(&mut rng, v), action(&mut rng, v)])
                })
                .collect()
        })
        .collect();
    let mut rows = vec![ComposedScenario { weight: 1.0, values: vec![], actions: vec![] }];
    for opts in &per_agent {
        rows = rows
            .into_iter()
            .flat_map(|s| {
                opts.iter().map(move |(v, a)| {
                    let mut t = s.clone();
                    t.weight /= 10.0;
                    t.values.push(*v);
                    t.actions.push(a.clone());
                    t
                })
            })
            .collect();
    }
    let r = composition_weak_ce(&comp, &rows, &z_grid(256))?;
    Ok((
        r.ratio >= 1.0 - 1e-9 && r.dominance_gap <= 1e-9,
        format!("weak mu = {:.6} over {} scenarios; dominance gap {:e}", r.ratio, rows.len(), r.dominance_gap),
    ))
}

fn criterion_8f() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 86);
    let zs = z_grid(512);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let lo = rng.random_range(0.0..1.0);
        let d = ValueDistribution::uniform(lo, lo + rng.random_range(0.2..2.0))?;
        let r = d.monopoly_reserve()?;
        let (a, b) = d.support();
        let v = rng.random_range(a..b);
        // a rule that never serves below the reserve
        let raw = random_step(&mut rng, false);
        let points: Vec<(f64, f64)> = raw.points().iter().map(|&(t, x)| (r + t * (b - r), x)).collect();
        let f = StepFunction::new(points)?;
        let bid = if v >= r { exact_br(&f, v, r) } else { 0.0 };
        let o = BiddingOutcome::single(v, bid, InterimRule::Step(f), PaymentFormat::WinnerPaysBid)?.with_reserve(r);
        let m = tradeoff_margins(&o, Some(d.virtual_value(v)?), r, &zs)?;
        worst = worst.min(m.revenue.expect("virtual value given").lhs);
    }
    Ok((worst >= -1e-9, format!("min virtual-value margin {worst:e} over 200 outcomes")))
}

fn criterion_9() -> Result<(bool, String)> {
    let u = ValueDistribution::uniform(0.0, 1.0)?;
    let grid = BidGrid::new(1.0, 101)?;
    let fpa = Mechanism::first_price(2)?;
    let wpb = symmetric_bne(&u, 2, PaymentFormat::WinnerPaysBid, 100)?;
    let bid_err = wpb.table.iter().map(|&(_, v, b)| (b - v / 2.0).abs()).fold(0.0, f64::max);
    let eps = regret_with(&fpa, &wpb.joint(1 << 16)?, &grid, TieReading::Limit)?.max_eps();
    let ap = symmetric_bne(&u, 2, PaymentFormat::AllPay, 100)?;
    // simulated on the equilibrium tables, independent of the closed forms
    let run_wpb = wpb.joint(1 << 16)?.expected_revenue(&fpa)?;
    let run_ap = ap.joint(1 << 16)?.expected_revenue(&fpa.with_format(PaymentFormat::AllPay))?;
    let gap = (wpb.revenue - ap.revenue).abs().max((run_wpb - run_ap).abs()).max((run_wpb - 1.0 / 3.0).abs());
    let values = [1.0, 0.5];
    let dynamics = br_dynamics(&fpa, &values, &grid, 10_000)?;
    let welfare = fpa.run(&dynamics.bids)?.welfare(&values);
    let opt = Environment::single_item(2)?.optimal_welfare(&values)?;
    let dyn_eps = dynamics.regret.max_eps();
    Ok((
        bid_err <= 1e-6 && eps <= 2.0 * grid.spacing() && gap <= 1e-3 && dynamics.converged && dyn_eps <= 0.011 && welfare == opt,
        format!(
            "bne regret {eps:e} (limit ties, |b - v/2| <= {bid_err:e}); simulated revenues {run_wpb:.6} / {run_ap:.6}, gap {gap:e}; dynamics at {:?} eps {dyn_eps} welfare {welfare}/{opt}",
            dynamics.bids
        ),
    ))
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: Vec::new() };
    type Check = fn() -> Result<(bool, String)>;
    let checks: [(&str, &str, Check); 14] = [
        ("1", "first-price competitive efficiency", criterion_1),
        ("2", "single-minded combinatorial auctions", criterion_2),
        ("3", "transversal greedy and position auctions", criterion_3),
        ("4", "individual efficiency examples", criterion_4),
        ("5", "correlated welfare example", criterion_5),
        ("6", "revenue example", criterion_6),
        ("7", "partial-allocation example", criterion_7),
        ("8a", "welfare tradeoff fuzz", criterion_8a),
        ("8b", "reserve closure fuzz", criterion_8b),
        ("8c", "convex combination fuzz", criterion_8c),
        ("8d", "all-pay threshold fuzz", criterion_8d),
        ("8e", "simultaneous composition", criterion_8e),
        ("8f", "virtual-value tradeoff fuzz", criterion_8f),
        ("9", "equilibrium oracles", criterion_9),
    ];
    for (id, title, check) in checks {
        let started = Instant::now();
        suite.record(id, title, check(), started);
    }
    if suite.failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {}", suite.failed.join(", "));
        ExitCode::FAILURE
    }
}
