use auctionkit::dist::Scenario;
use auctionkit::{
    cost_frontier, threshold_surplus, CostKind, InterimRule, JointScenario, PaymentFormat, StepFunction,
    SurplusConvention, ValueDistribution,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CONV: SurplusConvention = SurplusConvention::FromReserveLevel;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

/// Random nondecreasing step function; reaches level 1 when `full`.
fn step_rule(full: bool) -> impl Strategy<Value = StepFunction> {
    proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..6).prop_map(move |raw| {
        let mut bs: Vec<f64> = raw.iter().map(|p| p.0).collect();
        let mut ls: Vec<f64> = raw.iter().map(|p| p.1).collect();
        bs.sort_by(|a, b| a.total_cmp(b));
        ls.sort_by(|a, b| a.total_cmp(b));
        if full {
            *ls.last_mut().unwrap() = 1.0;
        }
        StepFunction::new(bs.into_iter().zip(ls).collect()).unwrap()
    })
}

/// `int_t^hi g(v) f(v) dv` by composite Simpson.
fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for k in 1..n {
        s += g(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn payment_identity(d: &ValueDistribution, t: f64) -> (f64, f64) {
    let (_, hi) = d.support();
    let cont = simpson(|v| d.virtual_value(v).map_or(0.0, |phi| phi * d.pdf(v).unwrap_or(0.0)), t, hi - 1e-12, 20_000);
    // a top atom earns its own value
    let atoms: f64 = d.atoms().iter().filter(|a| a.0 >= t).map(|a| a.0 * a.1).sum();
    (cont + atoms, t * (1.0 - d.cdf(t) + d.atoms().iter().filter(|a| a.0 == t).map(|a| a.1).sum::<f64>()))
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn posted_price_identity(lo in 0.0f64..2.0, w in 0.1f64..3.0, q in 0.0f64..1.0, h in 2.0f64..50.0, eps in 0.0f64..0.5) {
        let u = ValueDistribution::uniform(lo, lo + w).unwrap();
        let t = lo + q * w;
        let (lhs, rhs) = payment_identity(&u, t);
        prop_assert!((lhs - rhs).abs() < 1e-6, "uniform {lhs} vs {rhs}");
        let er = ValueDistribution::equal_revenue_perturbed(h, eps).unwrap();
        let t = 1.0 + q * (h - 1.0) * 0.99;
        let (lhs, rhs) = payment_identity(&er, t);
        prop_assert!((lhs - rhs).abs() < 1e-6, "equal revenue {lhs} vs {rhs}");
    }

    #[test]
    fn quantile_inverts_cdf(q in 0.001f64..0.999, h in 2.0f64..100.0) {
        let cases = [
            (ValueDistribution::uniform(0.5, 2.0).unwrap(), 0.5, 2.0),
            (ValueDistribution::equal_revenue(h).unwrap(), 1.0, h),
            (ValueDistribution::ExampleCor, 1e-9, 1.0 - (-1.0f64).exp()),
        ];
        for (d, lo, hi) in cases {
            let v = lo + q * (hi - lo);
            prop_assert!((d.quantile(d.cdf(v)) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn galois_pair(f in step_rule(false)) {
        for xk in 1..=20 {
            let x = xk as f64 / 20.0;
            for bk in 0..=40 {
                let b = bk as f64 / 40.0;
                prop_assert_eq!(f.inverse(x) <= b, f.eval(b) >= x, "x={} b={}", x, b);
            }
        }
    }

    #[test]
    fn surplus_shape(f in step_rule(false), r in 0.0f64..1.0) {
        let rule = InterimRule::Step(f.clone());
        let top = f.sup_level();
        prop_assert_eq!(threshold_surplus(&rule, 0.0, 0.0, CONV), 0.0);
        let zs: Vec<f64> = (0..=50).map(|k| top * k as f64 / 50.0).collect();
        let t: Vec<f64> = zs.iter().map(|&z| threshold_surplus(&rule, z, 0.0, CONV)).collect();
        for k in 1..zs.len() - 1 {
            // midpoint convexity on an even grid
            prop_assert!(t[k] <= 0.5 * (t[k - 1] + t[k + 1]) + 1e-12);
        }
        for (&z, &tz) in zs.iter().zip(&t) {
            prop_assert!(tz <= z * f.inverse(z) + 1e-12);
            prop_assert!(threshold_surplus(&rule, z, r, CONV) <= tz + 1e-12);
            prop_assert!(threshold_surplus(&rule, z, r, SurplusConvention::ZeroBelowReserve) <= tz + 1e-12);
        }
    }

    #[test]
    fn chebyshev_all_pay(f in step_rule(true)) {
        let rule = InterimRule::Step(f);
        let bid = threshold_surplus(&rule, 1.0, 0.0, CONV);
        let ppu = threshold_surplus(&cost_frontier(&rule, PaymentFormat::AllPay, CostKind::PricePerUnit), 1.0, 0.0, CONV);
        prop_assert!(2.0 * bid >= ppu - 1e-9, "2*{bid} < {ppu}");
    }

    #[test]
    fn averaging_is_subadditive(parts in proptest::collection::vec((0.05f64..1.0, step_rule(false), 0.0f64..=1.0), 1..4)) {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let avg = StepFunction::weighted_sum(parts.iter().map(|(w, f, _)| (w / total, f)));
        let mut z = 0.0;
        let mut rhs = 0.0;
        for (w, f, frac) in &parts {
            let zj = frac * f.sup_level();
            z += w / total * zj;
            rhs += w / total * threshold_surplus(&InterimRule::Step(f.clone()), zj, 0.0, CONV);
        }
        let lhs = threshold_surplus(&InterimRule::Step(avg), z.min(1.0), 0.0, CONV);
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }
}

/// Kolmogorov-Smirnov statistic against the CDF at the sample points,
/// checking both one-sided gaps so atoms are handled.
fn ks(d: &ValueDistribution, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..draws).map(|_| d.sample(&mut rng)).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = draws as f64;
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while k < xs.len() {
        let v = xs[k];
        let mut j = k;
        while j < xs.len() && xs[j] == v {
            j += 1;
        }
        let below = k as f64 / n;
        let upto = j as f64 / n;
        let f = d.cdf(v);
        let left = f - d.atoms().iter().filter(|a| a.0 == v).map(|a| a.1).sum::<f64>();
        worst = worst.max((upto - f).abs()).max((below - left).abs());
        k = j;
    }
    worst
}

#[test]
fn samplers_pass_ks() {
    let band = 1.628 / (100_000f64).sqrt();
    let kinds = [
        ValueDistribution::uniform(0.0, 1.0).unwrap(),
        ValueDistribution::equal_revenue(100.0).unwrap(),
        ValueDistribution::equal_revenue_perturbed(20.0, 0.3).unwrap(),
        ValueDistribution::ExampleCor,
        ValueDistribution::degenerate(0.4).unwrap(),
        ValueDistribution::discrete(vec![(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)]).unwrap(),
    ];
    for (seed, d) in kinds.iter().enumerate() {
        let s = ks(d, 100_000, seed as u64);
        assert!(s <= band, "{d:?}: KS {s} above {band}");
    }
}

#[test]
fn joint_flags() {
    let product = JointScenario::product(
        &[vec![(0.5, 0.2, 0.1), (0.5, 0.8, 0.4)], vec![(0.3, 0.1, 0.0), (0.7, 0.9, 0.5)]],
        100,
    )
    .unwrap();
    assert!(product.independent_values());
    assert!(product.no_bidder_communication());
    let e = 1f64.exp();
    let cor = JointScenario::new(vec![
        Scenario { weight: 1.0 / e, values: vec![0.0, 0.0, 1.0], bids: vec![0.0, 0.0, 0.0] },
        Scenario { weight: 1.0 - 1.0 / e, values: vec![0.5, 0.5, 1.0], bids: vec![0.5, 0.5, 0.0] },
    ])
    .unwrap();
    assert!(!cor.independent_values());
}
