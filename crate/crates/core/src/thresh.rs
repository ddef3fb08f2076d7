//! Interim allocation rules, threshold bids, threshold surplus with
//! discounted reserves, and cost frontiers.

use std::f64::consts::E;

use crate::dist::JointScenario;
use crate::error::{input, Result};
use crate::mech::{AllocationRule, Mechanism, PaymentFormat};
use crate::step::StepFunction;

/// Levels used when an analytic rule has to be approximated by a step
/// function.
pub const ANALYTIC_STEPS: usize = 4096;

/// An interim allocation rule: allocation probability as a function of the
/// agent's own bid.
#[derive(Debug, Clone, PartialEq)]
pub enum InterimRule {
    Step(StepFunction),
    /// `1/(e(1 - b/scale))` on `[0, scale(1 - 1/e)]`, then 1.
    Indifference { scale: f64 },
    /// `min(b/scale, 1)`.
    Linear { scale: f64 },
}

impl From<StepFunction> for InterimRule {
    fn from(f: StepFunction) -> Self {
        Self::Step(f)
    }
}

impl InterimRule {
    pub fn indifference() -> Self {
        Self::Indifference { scale: 1.0 }
    }

    pub fn linear() -> Self {
        Self::Linear { scale: 1.0 }
    }

    /// The same rule with bids multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        match self {
            Self::Step(f) => Self::Step(
                StepFunction::new(f.points().iter().map(|&(b, l)| (b * k, l)).collect())
                    .expect("scaling keeps the shape"),
            ),
            Self::Indifference { scale } => Self::Indifference { scale: scale * k },
            Self::Linear { scale } => Self::Linear { scale: scale * k },
        }
    }

    pub fn eval(&self, b: f64) -> f64 {
        match self {
            Self::Step(f) => f.eval(b),
            Self::Indifference { scale } => {
                if b < 0.0 {
                    0.0
                } else if b >= scale * (1.0 - 1.0 / E) {
                    1.0
                } else {
                    1.0 / (E * (1.0 - b / scale))
                }
            }
            Self::Linear { scale } => (b / scale).clamp(0.0, 1.0),
        }
    }

    pub fn sup_level(&self) -> f64 {
        match self {
            Self::Step(f) => f.sup_level(),
            _ => 1.0,
        }
    }

    /// Generalized inverse `inf { b : eval(b) >= x }`.
    pub fn inverse(&self, x: f64) -> f64 {
        match self {
            Self::Step(f) => f.inverse(x),
            _ if x > 1.0 => f64::INFINITY,
            Self::Indifference { scale } => {
                if x <= 1.0 / E {
                    0.0
                } else {
                    scale * (1.0 - 1.0 / (E * x))
                }
            }
            Self::Linear { scale } => scale * x.max(0.0),
        }
    }

    /// `int_a^z inverse(x) dx`, `+inf` past the supremum level.
    pub fn inverse_integral(&self, a: f64, z: f64) -> f64 {
        let a = a.max(0.0);
        if z <= a {
            return 0.0;
        }
        match self {
            Self::Step(f) => f.inverse_integral(a, z),
            _ if z > 1.0 => f64::INFINITY,
            Self::Indifference { scale } => {
                let a = a.max(1.0 / E);
                if z <= a {
                    return 0.0;
                }
                scale * ((z - a) - (z.ln() - a.ln()) / E)
            }
            Self::Linear { scale } => scale * (z * z - a * a) / 2.0,
        }
    }

    /// `int_0^z inverse(x) 1[inverse(x) >= floor] dx`.
    pub fn inverse_integral_above(&self, floor: f64, z: f64) -> f64 {
        if floor <= 0.0 {
            return self.inverse_integral(0.0, z);
        }
        match self {
            Self::Step(f) => f.inverse_integral_above(floor, z),
            // the inverse is continuous and increasing above its zero
            // stretch, so the kept region starts where it reaches `floor`
            _ => {
                let start = match self {
                    Self::Indifference { scale } if floor < *scale => 1.0 / (E * (1.0 - floor / scale)),
                    Self::Linear { scale } => floor / scale,
                    _ => f64::INFINITY,
                };
                if start > 1.0 && z <= 1.0 {
                    0.0
                } else {
                    self.inverse_integral(start.min(1.0), z)
                }
            }
        }
    }

    /// Bids where the rule jumps, or a fine grid for analytic rules.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Step(f) => f.points().iter().map(|p| p.0).collect(),
            _ => self.to_step(ANALYTIC_STEPS).points().iter().map(|p| p.0).collect(),
        }
    }

    /// Step approximation from below with `levels` equally spaced bids.
    pub fn to_step(&self, levels: usize) -> StepFunction {
        match self {
            Self::Step(f) => f.clone(),
            Self::Indifference { scale } | Self::Linear { scale } => {
                let top = match self {
                    Self::Indifference { .. } => scale * (1.0 - 1.0 / E),
                    _ => *scale,
                };
                let points = (0..=levels)
                    .map(|k| {
                        let b = top * k as f64 / levels as f64;
                        (b, if k == levels { 1.0 } else { self.eval(b) })
                    })
                    .collect();
                StepFunction::new(points).expect("monotone samples")
            }
        }
    }

    /// Probability-weighted average of rules. Averages of step functions are
    /// exact; analytic rules in a nontrivial average are approximated with
    /// [`ANALYTIC_STEPS`] levels.
    pub fn average(parts: &[(f64, InterimRule)]) -> InterimRule {
        if let [(_, only)] = parts {
            return only.clone();
        }
        if let Some((_, first)) = parts.first() {
            if parts.iter().all(|(_, r)| r == first) {
                return first.clone();
            }
        }
        let steps: Vec<(f64, StepFunction)> = parts.iter().map(|(w, r)| (*w, r.to_step(ANALYTIC_STEPS))).collect();
        InterimRule::Step(StepFunction::weighted_sum(steps.iter().map(|(w, f)| (*w, f))))
    }
}

/// How a reserve discounts the threshold surplus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurplusConvention {
    /// Integrate the inverse from the level reached by bidding the reserve.
    #[default]
    FromReserveLevel,
    /// Integrate from 0, dropping the part where the inverse is below the
    /// reserve.
    ZeroBelowReserve,
}

impl SurplusConvention {
    pub fn label(self) -> &'static str {
        match self {
            Self::FromReserveLevel => "from-reserve-level",
            Self::ZeroBelowReserve => "zero-below-reserve",
        }
    }
}

/// Threshold surplus `T(z | r)` of an interim rule; `+inf` when `z` exceeds
/// what any bid can reach.
pub fn threshold_surplus(rule: &InterimRule, z: f64, reserve: f64, convention: SurplusConvention) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    match convention {
        SurplusConvention::FromReserveLevel => {
            let start = if reserve > 0.0 { rule.eval(reserve) } else { 0.0 };
            rule.inverse_integral(start, z)
        }
        SurplusConvention::ZeroBelowReserve => rule.inverse_integral_above(reserve, z),
    }
}

/// Generalized inverse of an interim rule at allocation level `x`.
pub fn inverse_threshold(rule: &InterimRule, x: f64) -> f64 {
    rule.inverse(x)
}

/// Threshold bid of agent `i` under a bare allocation rule.
pub fn threshold_bid(rule: &AllocationRule, i: usize, bids: &[f64]) -> f64 {
    rule.threshold_bid(i, bids)
}

/// A threshold-surplus curve `z -> T(z | r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusCurve {
    pub rule: InterimRule,
    pub reserve: f64,
    pub convention: SurplusConvention,
}

impl SurplusCurve {
    pub fn new(rule: InterimRule, reserve: f64) -> Self {
        Self { rule, reserve, convention: SurplusConvention::default() }
    }

    pub fn eval(&self, z: f64) -> f64 {
        threshold_surplus(&self.rule, z, self.reserve, self.convention)
    }

    /// Sampled `(z, T(z))` rows.
    pub fn table(&self, zs: &[f64]) -> Vec<(f64, f64)> {
        zs.iter().map(|&z| (z, self.eval(z))).collect()
    }
}

/// Agent `i`'s interim allocation rule at value `v`: its own-bid allocation
/// averaged over the scenarios where it has that value.
pub fn interim_rule(mech: &Mechanism, joint: &JointScenario, i: usize, v: f64) -> Result<StepFunction> {
    interim_curve(mech, joint, i, v, true)
}

pub(crate) fn interim_curve(
    mech: &Mechanism,
    joint: &JointScenario,
    i: usize,
    v: f64,
    own_reserve: bool,
) -> Result<StepFunction> {
    check_agent(mech, joint, i)?;
    let none = vec![false; mech.n()];
    let curves: Vec<(f64, StepFunction)> = joint
        .conditional(i, v)?
        .into_iter()
        .map(|(w, s)| (w, mech.allocation_curve_masked(i, &s.bids, &none, own_reserve)))
        .collect();
    Ok(StepFunction::weighted_sum(curves.iter().map(|(w, c)| (*w, c))))
}

fn check_agent(mech: &Mechanism, joint: &JointScenario, i: usize) -> Result<()> {
    if joint.n() != mech.n() {
        return input(format!("joint table has {} agents, mechanism {}", joint.n(), mech.n()));
    }
    if i >= mech.n() {
        return input(format!("agent {} out of range", i + 1));
    }
    Ok(())
}

/// Price per unit of a bid: interim payment over interim allocation,
/// evaluated on the literal outcomes (ties as the mechanism resolves them).
/// `+inf` when the bid is never served.
pub fn ppu_cost(mech: &Mechanism, joint: &JointScenario, i: usize, v: f64, bid: f64) -> Result<f64> {
    check_agent(mech, joint, i)?;
    let (mut x, mut p) = (0.0, 0.0);
    for (w, s) in joint.conditional(i, v)? {
        let mut bids = s.bids.clone();
        bids[i] = bid;
        let o = mech.run(&bids)?;
        x += w * o.allocation[i];
        p += w * o.payments[i];
    }
    Ok(if x > 0.0 { p / x } else { f64::INFINITY })
}

/// Upper-left staircase of `(cost, allocation)` points: the most allocation
/// reachable at each cost. Points with infinite cost or zero allocation are
/// dropped.
pub fn pareto_frontier(points: &[(f64, f64)]) -> StepFunction {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(c, x)| c.is_finite() && *x > 0.0)
        .map(|(c, x)| (c.max(0.0), x.min(1.0)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (c, x) in pts {
        if out.last().is_none_or(|l| x > l.1) {
            out.push((c, x));
        }
    }
    StepFunction::new(out).expect("staircase is monotone")
}

/// Which cost an agent is charged per unit of allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// The bid itself.
    Bid,
    /// Interim payment divided by interim allocation.
    PricePerUnit,
}

/// Frontier of allocation against cost for an interim rule under a payment
/// format. Under winner-pays-bid both costs equal the bid.
pub fn cost_frontier(rule: &InterimRule, format: PaymentFormat, kind: CostKind) -> InterimRule {
    if format == PaymentFormat::WinnerPaysBid || kind == CostKind::Bid {
        return rule.clone();
    }
    match rule {
        // every positive bid costs `scale` per unit
        InterimRule::Linear { scale } => InterimRule::Step(StepFunction::step(*scale, 1.0)),
        _ => {
            let step = rule.to_step(ANALYTIC_STEPS);
            let pts: Vec<(f64, f64)> = step.points().iter().map(|&(b, l)| (b / l, l)).collect();
            InterimRule::Step(pareto_frontier(&pts))
        }
    }
}

/// One draw of a bidding outcome: the agent's bid and the interim rule it
/// faces.
#[derive(Debug, Clone, PartialEq)]
pub struct BidScenario {
    pub weight: f64,
    pub bid: f64,
    pub rule: InterimRule,
}

/// A single agent's value with a distribution over (bid, interim rule)
/// pairs. Allocations are read from the right-continuous rules, i.e. as the
/// limit of bidding just above.
#[derive(Debug, Clone, PartialEq)]
pub struct BiddingOutcome {
    value: f64,
    scenarios: Vec<BidScenario>,
    format: PaymentFormat,
    reserve: f64,
}

impl BiddingOutcome {
    pub fn new(value: f64, scenarios: Vec<BidScenario>, format: PaymentFormat) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return input(format!("value {value} must be finite and >= 0"));
        }
        if scenarios.is_empty() {
            return input("bidding outcome needs at least one scenario");
        }
        if scenarios.iter().any(|s| !(s.weight > 0.0 && s.bid.is_finite() && s.bid >= 0.0)) {
            return input("scenario weights must be positive and bids finite and >= 0");
        }
        let total: f64 = scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return input(format!("scenario weights sum to {total}, expected 1"));
        }
        let scenarios = scenarios.into_iter().map(|s| BidScenario { weight: s.weight / total, ..s }).collect();
        Ok(Self { value, scenarios, format, reserve: 0.0 })
    }

    /// One bid against one rule.
    pub fn single(value: f64, bid: f64, rule: InterimRule, format: PaymentFormat) -> Result<Self> {
        Self::new(value, vec![BidScenario { weight: 1.0, bid, rule }], format)
    }

    /// Agent `i` at value `v` in a joint table: one scenario per row, each
    /// with the own-bid curve against that row's opponents.
    pub fn from_joint(mech: &Mechanism, joint: &JointScenario, i: usize, v: f64) -> Result<Self> {
        check_agent(mech, joint, i)?;
        let none = vec![false; mech.n()];
        let scenarios = joint
            .conditional(i, v)?
            .into_iter()
            .map(|(w, s)| BidScenario {
                weight: w,
                bid: s.bids[i],
                rule: InterimRule::Step(mech.allocation_curve_masked(i, &s.bids, &none, true)),
            })
            .collect();
        let mut out = Self::new(v, scenarios, mech.format())?;
        out.reserve = mech.reserves()[i];
        Ok(out)
    }

    /// The reserve used when discounting threshold surplus.
    pub fn with_reserve(mut self, reserve: f64) -> Self {
        self.reserve = reserve;
        self
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn format(&self) -> PaymentFormat {
        self.format
    }

    pub fn scenarios(&self) -> &[BidScenario] {
        &self.scenarios
    }

    /// Same outcome with value and bids multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            value: self.value * k,
            scenarios: self
                .scenarios
                .iter()
                .map(|s| BidScenario { weight: s.weight, bid: s.bid * k, rule: s.rule.scaled(k) })
                .collect(),
            format: self.format,
            reserve: self.reserve * k,
        }
    }

    /// Expected allocation.
    pub fn allocation(&self) -> f64 {
        self.scenarios.iter().map(|s| s.weight * s.rule.eval(s.bid)).sum()
    }

    pub fn payment(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| match self.format {
                PaymentFormat::WinnerPaysBid => s.weight * s.bid * s.rule.eval(s.bid),
                PaymentFormat::AllPay => s.weight * s.bid,
            })
            .sum()
    }

    pub fn utility(&self) -> f64 {
        self.value * self.allocation() - self.payment()
    }

    /// Utility of bidding `d` in every scenario.
    pub fn deviation_utility(&self, d: f64) -> f64 {
        self.scenarios
            .iter()
            .map(|s| {
                let x = s.rule.eval(d);
                s.weight
                    * match self.format {
                        PaymentFormat::WinnerPaysBid => (self.value - d) * x,
                        PaymentFormat::AllPay => self.value * x - d,
                    }
            })
            .sum()
    }

    /// The averaged interim rule.
    pub fn expected_rule(&self) -> InterimRule {
        let parts: Vec<(f64, InterimRule)> = self.scenarios.iter().map(|s| (s.weight, s.rule.clone())).collect();
        InterimRule::average(&parts)
    }

    pub fn surplus_curve(&self, convention: SurplusConvention) -> SurplusCurve {
        SurplusCurve { rule: self.expected_rule(), reserve: self.reserve, convention }
    }

    /// Candidate deviations: every breakpoint of every scenario's rule.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.scenarios.iter().flat_map(|s| s.rule.breakpoints()).collect();
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }
}
