//! Competitive efficiency of mechanisms, individual efficiency of bidding
//! outcomes, and the welfare and revenue bound checks built on them.
//!
//! Competitive efficiency is reported as a ratio in `(0, 1]`-style units:
//! revenue divided by the largest feasible threshold surplus.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{myerson_optimal_revenue, JointScenario, ValueDistribution};
use crate::env::{Allocation, Environment};
use crate::error::{input, Error, Result};
use crate::mech::{Action, ComposedMechanism, Mechanism, PaymentFormat, RuleKind};
use crate::step::StepFunction;
use crate::thresh::{
    cost_frontier, interim_curve, pareto_frontier, threshold_surplus, BidScenario, BiddingOutcome, CostKind,
    InterimRule, SurplusConvention,
};

/// Slack allowed when a bound is checked.
pub const BOUND_TOL: f64 = 1e-9;

/// Number of target levels in the default individual-efficiency grid.
pub const Z_GRID_POINTS: usize = 4096;

/// `(e - 1)/e`.
pub fn best_response_factor() -> f64 {
    (E - 1.0) / E
}

/// Geometric grid of `points` levels on `[1e-6, 1]`, ending exactly at 1.
pub fn z_grid(points: usize) -> Vec<f64> {
    let points = points.max(2);
    let lo: f64 = 1e-6;
    let mut out: Vec<f64> = (0..points)
        .map(|k| lo * (1.0 / lo).powf(k as f64 / (points - 1) as f64))
        .collect();
    *out.last_mut().expect("nonempty") = 1.0;
    out
}

/// `points` evenly spaced bids on `[0, max]`.
pub fn uniform_grid(max: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|k| max * k as f64 / (points - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Every profile on the grid was checked.
    Exhaustive,
    /// Random grid profiles; the result is only an upper bound on the
    /// worst ratio.
    Sampled { samples: usize, seed: u64 },
    /// A fixed joint table of values and bids.
    Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurplusMethod {
    /// Exact maximization over the feasible set.
    Exact,
    /// Per-component maxima of a mixture, averaged. This overstates the
    /// surplus, so the ratio is a lower bound.
    ComponentBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub bids: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub y: Allocation,
    pub revenue: f64,
    pub surplus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CEReport {
    pub mu_hat: f64,
    pub mode: SearchMode,
    pub surplus_method: SurplusMethod,
    pub convention: SurplusConvention,
    pub profiles: usize,
    pub revenue: f64,
    pub surplus: f64,
    pub witness: Option<Witness>,
}

impl CEReport {
    /// True when the search was exhaustive with exact surplus maximization.
    pub fn certified(&self) -> bool {
        self.mode == SearchMode::Exhaustive && self.surplus_method == SurplusMethod::Exact
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeOptions {
    pub convention: SurplusConvention,
    /// Largest number of profiles enumerated exhaustively; beyond it this
    /// many profiles are sampled.
    pub budget: usize,
    pub seed: u64,
    /// Threshold cost; price per unit only differs for all-pay with
    /// randomized rules.
    pub cost: CostKind,
}

impl Default for CeOptions {
    fn default() -> Self {
        Self { convention: SurplusConvention::default(), budget: 1_000_000, seed: 0, cost: CostKind::Bid }
    }
}

/// `revenue / surplus`, with `0/0 = 1`.
fn ratio(revenue: f64, surplus: f64) -> f64 {
    if surplus <= 0.0 {
        if revenue <= 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        revenue / surplus
    }
}

/// How the feasible set is searched when maximizing surplus.
enum Space {
    Weights(Environment),
    Vertices(Vec<Allocation>),
    TooLarge,
}

impl Space {
    fn new(env: &Environment) -> Result<Self> {
        if env.is_deterministic() {
            return Ok(Self::Weights(env.clone()));
        }
        if let Some(alpha) = env.position_profile() {
            let pos = Environment::position(env.n(), alpha)?;
            return Ok(Self::Vertices(pos.vertices()?));
        }
        match env.vertices() {
            Ok(v) => Ok(Self::Vertices(v)),
            Err(Error::Budget(_)) => Ok(Self::TooLarge),
            Err(e) => Err(e),
        }
    }

    /// Maximizes `sum_i t(i, y_i)`; `t` must be finite.
    fn maximize(&self, n: usize, t: &dyn Fn(usize, f64) -> f64) -> Result<Option<(Allocation, f64)>> {
        match self {
            Self::Weights(env) => {
                let w: Vec<f64> = (0..n).map(|i| t(i, 1.0)).collect();
                let (y, _) = env.max_weight_feasible(&w)?;
                let total = (0..n).map(|i| if y[i] > 0.0 { w[i] } else { 0.0 }).sum();
                Ok(Some((y, total)))
            }
            Self::Vertices(vs) => {
                let mut best: Option<(Allocation, f64)> = None;
                for y in vs {
                    let total: f64 = (0..n).map(|i| if y[i] > 0.0 { t(i, y[i]) } else { 0.0 }).sum();
                    if best.as_ref().is_none_or(|b| total > b.1) {
                        best = Some((y.clone(), total));
                    }
                }
                Ok(Some(best.unwrap_or((vec![0.0; n], 0.0))))
            }
            Self::TooLarge => Ok(None),
        }
    }
}

/// Threshold surplus of a curve at level `y`, capped at the reachable level
/// (lower levels stay feasible by downward closure).
fn capped_surplus(rule: &InterimRule, y: f64, reserve: f64, convention: SurplusConvention) -> f64 {
    let y = y.min(rule.sup_level());
    if y <= 0.0 {
        return 0.0;
    }
    threshold_surplus(rule, y, reserve, convention)
}

struct Evaluator {
    mech: Mechanism,
    space: Space,
    components: Vec<(f64, Evaluator)>,
    convention: SurplusConvention,
    cost: CostKind,
}

impl Evaluator {
    fn new(mech: &Mechanism, convention: SurplusConvention, cost: CostKind) -> Result<Self> {
        let space = Space::new(mech.rule().env())?;
        let components = match (&space, mech.rule().kind()) {
            (Space::TooLarge, RuleKind::Mixture(parts)) => parts
                .iter()
                .map(|(w, r)| {
                    let comp = Mechanism::new(r.clone(), mech.format(), mech.reserves().to_vec())?;
                    Ok((*w, Evaluator::new(&comp, convention, cost)?))
                })
                .collect::<Result<Vec<_>>>()?,
            (Space::TooLarge, _) => {
                return Err(Error::Budget("feasible set too large to enumerate".into()));
            }
            _ => vec![],
        };
        Ok(Self { mech: mech.clone(), space, components, convention, cost })
    }

    fn method(&self) -> SurplusMethod {
        if self.components.is_empty() {
            SurplusMethod::Exact
        } else {
            SurplusMethod::ComponentBound
        }
    }

    /// Threshold-cost curves from the raw own-bid curves (own reserve not
    /// applied) for every agent.
    fn curves(&self, bids: &[f64]) -> Vec<InterimRule> {
        let none = vec![false; self.mech.n()];
        (0..self.mech.n())
            .map(|i| {
                let raw = InterimRule::Step(self.mech.allocation_curve_masked(i, bids, &none, false));
                cost_frontier(&raw, self.mech.format(), self.cost)
            })
            .collect()
    }

    fn surplus(&self, bids: &[f64]) -> Result<(Allocation, f64, Vec<f64>)> {
        let n = self.mech.n();
        let curves = self.curves(bids);
        let thresholds: Vec<f64> = (0..n)
            .map(|i| curves[i].inverse(self.mech.rule().max_level(i) - 1e-12))
            .collect();
        let r = self.mech.reserves();
        let t = |i: usize, y: f64| capped_surplus(&curves[i], y, r[i], self.convention);
        if let Some((y, total)) = self.space.maximize(n, &t)? {
            return Ok((y, total, thresholds));
        }
        let mut total = 0.0;
        let mut y = vec![0.0; n];
        for (w, sub) in &self.components {
            let (yj, sj, _) = sub.surplus(bids)?;
            total += w * sj;
            for (a, b) in y.iter_mut().zip(yj) {
                *a += w * b;
            }
        }
        Ok((y, total, thresholds))
    }
}

/// Revenue over maximum threshold surplus at one bid profile.
pub fn ce_at_profile(mech: &Mechanism, bids: &[f64], options: CeOptions) -> Result<(f64, Witness)> {
    let eval = Evaluator::new(mech, options.convention, options.cost)?;
    let revenue = mech.run(bids)?.revenue();
    let (y, surplus, thresholds) = eval.surplus(bids)?;
    Ok((ratio(revenue, surplus), Witness { bids: bids.to_vec(), thresholds, y, revenue, surplus }))
}

/// Worst ratio of revenue to maximum threshold surplus over bid profiles on
/// `grid`: exhaustive when `grid.len()^n` fits the budget, sampled
/// otherwise.
pub fn ce_deterministic(mech: &Mechanism, grid: &[f64], options: CeOptions) -> Result<CEReport> {
    if grid.is_empty() || grid.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return input("bid grid must be nonempty with finite nonnegative points");
    }
    let n = mech.n();
    let eval = Evaluator::new(mech, options.convention, options.cost)?;
    let total = (grid.len() as f64).powi(n as i32);
    let exhaustive = total <= options.budget as f64;
    let mut best: Option<(f64, Witness)> = None;
    let mut visit = |bids: Vec<f64>| -> Result<()> {
        let revenue = mech.run(&bids)?.revenue();
        let (y, surplus, thresholds) = eval.surplus(&bids)?;
        let r = ratio(revenue, surplus);
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, Witness { bids, thresholds, y, revenue, surplus }));
        }
        Ok(())
    };
    let profiles;
    if exhaustive {
        let mut idx = vec![0usize; n];
        profiles = total as usize;
        'outer: loop {
            visit(idx.iter().map(|&k| grid[k]).collect())?;
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < grid.len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        profiles = options.budget;
        for _ in 0..options.budget {
            visit((0..n).map(|_| grid[rng.random_range(0..grid.len())]).collect())?;
        }
    }
    let (mu_hat, witness) = best.expect("at least one profile");
    Ok(CEReport {
        mu_hat,
        mode: if exhaustive {
            SearchMode::Exhaustive
        } else {
            SearchMode::Sampled { samples: options.budget, seed: options.seed }
        },
        surplus_method: eval.method(),
        convention: options.convention,
        profiles,
        revenue: witness.revenue,
        surplus: witness.surplus,
        witness: Some(witness),
    })
}

/// Ratio of expected revenue to the expected threshold surplus of the best
/// allocation, with interim thresholds computed from a joint table.
///
/// The surplus is maximized scenario by scenario with each agent's interim
/// surplus at its scenario value, which never understates the best
/// interim-feasible surplus.
pub fn ce_randomized(mech: &Mechanism, joint: &JointScenario, convention: SurplusConvention) -> Result<CEReport> {
    ce_randomized_with_cost(mech, joint, convention, CostKind::Bid)
}

/// [`ce_randomized`] with thresholds measured in the given cost.
pub fn ce_randomized_with_cost(
    mech: &Mechanism,
    joint: &JointScenario,
    convention: SurplusConvention,
    cost: CostKind,
) -> Result<CEReport> {
    if joint.n() != mech.n() {
        return input(format!("joint table has {} agents, mechanism {}", joint.n(), mech.n()));
    }
    let revenue = joint.expected_revenue(mech)?;
    let space = Space::new(mech.rule().env())?;
    let (surplus, method) = match space {
        Space::TooLarge => {
            let RuleKind::Mixture(parts) = mech.rule().kind() else {
                return Err(Error::Budget("feasible set too large to enumerate".into()));
            };
            let mut total = 0.0;
            for (w, r) in parts {
                let comp = Mechanism::new(r.clone(), mech.format(), mech.reserves().to_vec())?;
                total += w * expected_surplus(&comp, joint, &Space::new(r.env())?, convention, cost)?;
            }
            (total, SurplusMethod::ComponentBound)
        }
        _ => (expected_surplus(mech, joint, &space, convention, cost)?, SurplusMethod::Exact),
    };
    Ok(CEReport {
        mu_hat: ratio(revenue, surplus),
        mode: SearchMode::Scenario,
        surplus_method: method,
        convention,
        profiles: joint.scenarios().len(),
        revenue,
        surplus,
        witness: None,
    })
}

/// Interim threshold-cost rules per agent and support value.
fn interim_rules(
    mech: &Mechanism,
    joint: &JointScenario,
    cost: CostKind,
) -> Result<Vec<Vec<(f64, InterimRule)>>> {
    (0..mech.n())
        .map(|i| {
            joint
                .value_support(i)
                .into_iter()
                .map(|v| {
                    let raw = InterimRule::Step(interim_curve(mech, joint, i, v, false)?);
                    Ok((v, cost_frontier(&raw, mech.format(), cost)))
                })
                .collect()
        })
        .collect()
}

fn expected_surplus(
    mech: &Mechanism,
    joint: &JointScenario,
    space: &Space,
    convention: SurplusConvention,
    cost: CostKind,
) -> Result<f64> {
    let n = mech.n();
    let rules = interim_rules(mech, joint, cost)?;
    let r = mech.reserves();
    let lookup = |i: usize, v: f64| -> &InterimRule {
        &rules[i].iter().find(|(u, _)| *u == v).expect("support value").1
    };
    let mut total = 0.0;
    for s in joint.scenarios() {
        let t = |i: usize, y: f64| capped_surplus(lookup(i, s.values[i]), y, r[i], convention);
        let (_, best) = space.maximize(n, &t)?.expect("enumerable space");
        total += s.weight * best;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IeMode {
    /// Every target level on the grid.
    Full,
    /// Target level 1 only, thresholds in the given cost.
    Weak(CostKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IEReport {
    pub eta: f64,
    pub z_star: f64,
    pub utility: f64,
    /// `(z, (u + T(z)) / (v z))` rows.
    pub curve: Vec<(f64, f64)>,
    pub mode: IeMode,
}

/// Largest `eta` with `u + T(z) >= eta v z` at every grid level.
pub fn individual_efficiency(outcome: &BiddingOutcome, z_grid: &[f64]) -> Result<IEReport> {
    individual_efficiency_with(outcome, z_grid, SurplusConvention::default())
}

pub fn individual_efficiency_with(
    outcome: &BiddingOutcome,
    z_grid: &[f64],
    convention: SurplusConvention,
) -> Result<IEReport> {
    if z_grid.iter().any(|z| !(*z > 0.0 && *z <= 1.0)) {
        return input("target levels must lie in (0, 1]");
    }
    let u = outcome.utility();
    let v = outcome.value();
    if v <= 0.0 {
        return Ok(IEReport { eta: 1.0, z_star: 1.0, utility: u, curve: vec![], mode: IeMode::Full });
    }
    let curve = outcome.surplus_curve(convention);
    let mut rows = Vec::with_capacity(z_grid.len());
    let (mut eta, mut z_star) = (f64::INFINITY, 1.0);
    for &z in z_grid {
        let r = (u + curve.eval(z)) / (v * z);
        rows.push((z, r));
        if r < eta {
            eta = r;
            z_star = z;
        }
    }
    Ok(IEReport { eta, z_star, utility: u, curve: rows, mode: IeMode::Full })
}

/// `(u + T(1)) / v` with `T` taken over the cost frontier of the averaged
/// rule. An unreachable full allocation reports 1.
pub fn weak_individual_efficiency(outcome: &BiddingOutcome, cost: CostKind) -> Result<IEReport> {
    let u = outcome.utility();
    let v = outcome.value();
    let mode = IeMode::Weak(cost);
    if v <= 0.0 {
        return Ok(IEReport { eta: 1.0, z_star: 1.0, utility: u, curve: vec![], mode });
    }
    let frontier = cost_frontier(&outcome.expected_rule(), outcome.format(), cost);
    let t = threshold_surplus(&frontier, 1.0, outcome.reserve(), SurplusConvention::default());
    let eta = if t.is_finite() { (u + t) / v } else { 1.0 };
    Ok(IEReport { eta, z_star: 1.0, utility: u, curve: vec![(1.0, eta)], mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Welfare,
    Revenue,
    IndividualEfficiency,
    SingleBuyerWelfare,
    WelfareTradeoff,
    RevenueTradeoff,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub objective: Objective,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn new(objective: Objective, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        Self { objective, lhs, rhs, slack, pass: slack >= -BOUND_TOL || (lhs.is_infinite() && lhs > 0.0) }
    }
}

/// Deviation bids worth checking: the grid, every breakpoint, and one grid
/// step on either side of each breakpoint.
pub fn deviation_candidates(outcome: &BiddingOutcome, grid: &[f64]) -> Vec<f64> {
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut out: Vec<f64> = grid.to_vec();
    for c in outcome.breakpoints() {
        out.push(c);
        if step.is_finite() {
            out.push(c + step);
            if c >= step {
                out.push(c - step);
            }
        }
    }
    out.retain(|b| b.is_finite() && *b >= 0.0);
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// Best fixed deviation bid and its utility, lowest bid among ties.
pub fn best_fixed_bid(outcome: &BiddingOutcome, grid: &[f64]) -> (f64, f64) {
    let mut best = (0.0, f64::NEG_INFINITY);
    for d in deviation_candidates(outcome, grid) {
        let u = outcome.deviation_utility(d);
        if u > best.1 + 1e-12 {
            best = (d, u);
        }
    }
    best
}

/// For a `(1 - eps)`-best-response outcome, checks that its individual
/// efficiency is at least `(1 - eps)` times that of the outcome that plays
/// the best fixed bid everywhere.
pub fn eps_degradation_check(outcome: &BiddingOutcome, eps: f64, grid: &[f64]) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&eps) {
        return input(format!("eps must lie in [0, 1], got {eps}"));
    }
    let (d, best) = best_fixed_bid(outcome, grid);
    let u = outcome.utility();
    if u < (1.0 - eps) * best - 1e-12 {
        return Err(Error::Precondition(format!(
            "not a (1-{eps})-best response: deviating to {d} earns {best} against {u}"
        )));
    }
    let fixed = BiddingOutcome::new(
        outcome.value(),
        outcome
            .scenarios()
            .iter()
            .map(|s| BidScenario { weight: s.weight, bid: d, rule: s.rule.clone() })
            .collect(),
        outcome.format(),
    )?
    .with_reserve(outcome.reserve());
    let zs = z_grid(Z_GRID_POINTS);
    let eta = individual_efficiency(outcome, &zs)?.eta;
    let eta_fixed = individual_efficiency(&fixed, &zs)?.eta;
    Ok(BoundReport::new(Objective::IndividualEfficiency, eta, (1.0 - eps) * eta_fixed))
}

/// Expected welfare against `mu * eta` times the optimal welfare.
pub fn welfare_bound_report(mech: &Mechanism, joint: &JointScenario, mu: f64, eta: f64) -> Result<BoundReport> {
    let lhs = joint.expected_welfare(mech)?;
    let opt = joint.expected_optimal_welfare(mech.rule().env())?;
    Ok(BoundReport::new(Objective::Welfare, lhs, mu * eta * opt))
}

/// Quadrature settings for the optimal-revenue benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueOptions {
    pub cells: usize,
    pub budget: usize,
}

impl Default for RevenueOptions {
    fn default() -> Self {
        Self { cells: 256, budget: 2_000_000 }
    }
}

/// Expected revenue against `mu (e-1)/(2e)` times the optimal revenue.
pub fn revenue_bound_report(
    mech: &Mechanism,
    joint: &JointScenario,
    dists: &[ValueDistribution],
    mu: f64,
    options: RevenueOptions,
) -> Result<BoundReport> {
    if !joint.independent_values() {
        return Err(Error::Precondition("values are not independent".into()));
    }
    if !joint.no_bidder_communication() {
        return Err(Error::Precondition("bids depend on other agents' values".into()));
    }
    if !joint.respects_reserves(mech.reserves()) {
        return Err(Error::Precondition("bids do not respect the reserves".into()));
    }
    let lhs = joint.expected_revenue(mech)?;
    let opt = myerson_optimal_revenue(mech.rule().env(), dists, options.cells, options.budget)?;
    Ok(BoundReport::new(Objective::Revenue, lhs, mu * best_response_factor() / 2.0 * opt))
}

/// Tradeoff margins of one bidding outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    /// `min_z u + T(z) - (e-1)/e v z`.
    pub welfare: BoundReport,
    /// `min_z phi x + T(z | r*) - (e-1)/e phi z`, when a virtual value is given.
    pub revenue: Option<BoundReport>,
    /// `max_z v z / (u + T(z))`, at most `e/(e-1)` under best response.
    pub welfare_resolution: f64,
}

/// Welfare and virtual-welfare tradeoff margins over `z_grid`.
///
/// For the virtual variant, `virtual_value` is `phi(v)` and `reserve` the
/// monopoly reserve; the outcome must respect the reserve.
pub fn tradeoff_margins(
    outcome: &BiddingOutcome,
    virtual_value: Option<f64>,
    reserve: f64,
    z_grid: &[f64],
) -> Result<TradeoffReport> {
    let c = best_response_factor();
    let v = outcome.value();
    let u = outcome.utility();
    let plain = crate::thresh::SurplusCurve::new(outcome.expected_rule(), 0.0);
    let mut margin = f64::INFINITY;
    let mut resolution: f64 = 0.0;
    for &z in z_grid {
        let t = plain.eval(z);
        margin = margin.min(u + t - c * v * z);
        if v * z > 0.0 {
            resolution = resolution.max(v * z / (u + t));
        }
    }
    let welfare = BoundReport::new(Objective::WelfareTradeoff, margin, 0.0);
    let revenue = match virtual_value {
        None => None,
        Some(phi) => {
            let bids_clear = outcome.scenarios().iter().all(|s| s.bid >= reserve);
            let bids_below = outcome.scenarios().iter().all(|s| s.bid < reserve);
            if (v >= reserve && !bids_clear) || (v < reserve && !bids_below) {
                return Err(Error::Precondition(format!("outcome does not respect reserve {reserve}")));
            }
            let x = outcome.allocation();
            let discounted = crate::thresh::SurplusCurve::new(outcome.expected_rule(), reserve);
            let mut m = f64::INFINITY;
            for &z in z_grid {
                m = m.min(phi * x + discounted.eval(z) - c * phi * z);
            }
            Some(BoundReport::new(Objective::RevenueTradeoff, m, 0.0))
        }
    };
    Ok(TradeoffReport { welfare, revenue, welfare_resolution: resolution })
}

/// `E[V ; V > t]` when a rule is read as the CDF of an outside option.
fn upper_tail_mean(rule: &InterimRule, t: f64) -> Result<f64> {
    match rule {
        InterimRule::Step(f) => {
            if f.sup_level() < 1.0 - 1e-12 {
                return input("outside-option law needs a rule that reaches 1");
            }
            let mut prev = 0.0;
            let mut total = 0.0;
            for &(b, l) in f.points() {
                if b > t {
                    total += b * (l - prev);
                }
                prev = l;
            }
            Ok(total)
        }
        InterimRule::Indifference { scale } => {
            let cor = ValueDistribution::ExampleCor;
            Ok(scale * cor.partial_moment(1, (t / scale).max(0.0), 1.0))
        }
        InterimRule::Linear { scale } => {
            let t = t.clamp(0.0, *scale);
            Ok((scale * scale - t * t) / (2.0 * scale))
        }
    }
}

/// Welfare of the single-buyer instance where the seller's outside option
/// is drawn from each scenario's rule, against the optimal welfare; passes
/// when the ratio is at least the outcome's individual efficiency.
pub fn single_buyer_welfare(outcome: &BiddingOutcome) -> Result<BoundReport> {
    let v = outcome.value();
    let (mut welfare, mut opt) = (0.0, 0.0);
    for s in outcome.scenarios() {
        welfare += s.weight * (v * s.rule.eval(s.bid) + upper_tail_mean(&s.rule, s.bid)?);
        opt += s.weight * (v * s.rule.eval(v) + upper_tail_mean(&s.rule, v)?);
    }
    let eta = individual_efficiency(outcome, &z_grid(Z_GRID_POINTS))?.eta.min(1.0);
    Ok(BoundReport::new(Objective::SingleBuyerWelfare, ratio(welfare, opt), eta))
}

/// One row of a joint table for a composed mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedScenario {
    pub weight: f64,
    pub values: Vec<f64>,
    /// `actions[i][j]` is agent `i`'s action in component `j`.
    pub actions: Vec<Vec<Action>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    /// Revenue over the largest composed threshold surplus.
    pub ratio: f64,
    pub revenue: f64,
    pub surplus: f64,
    /// Largest excess of a composed threshold surplus over a component's
    /// on the check grid; at most 0 when composition only lowers thresholds.
    pub dominance_gap: f64,
}

/// Price-per-unit frontier of agent `i` at value `v` when it may use the
/// components in `allowed`.
fn composed_frontier(
    comp: &ComposedMechanism,
    rows: &[(f64, &ComposedScenario)],
    i: usize,
    allowed: &[usize],
) -> Result<StepFunction> {
    let m = comp.components().len();
    // per component, per row: own-bid curve against that row's opponents
    let mut curves: Vec<Vec<StepFunction>> = vec![Vec::new(); m];
    let mut candidates: Vec<Vec<Option<f64>>> = vec![vec![None]; m];
    for &j in allowed {
        let mech = &comp.components()[j];
        let mut bids_seen = vec![0.0];
        for (_, s) in rows {
            let withdrawn: Vec<bool> = s.actions.iter().map(|a| a[j] == Action::Withdraw).collect();
            let bids: Vec<f64> = s
                .actions
                .iter()
                .map(|a| match a[j] {
                    Action::Bid(b) => b,
                    Action::Withdraw => 0.0,
                })
                .collect();
            let curve = mech.allocation_curve_masked(i, &bids, &withdrawn, true);
            bids_seen.extend(curve.points().iter().map(|p| p.0));
            curves[j].push(curve);
        }
        bids_seen.sort_by(|a, b| a.total_cmp(b));
        bids_seen.dedup();
        candidates[j].extend(bids_seen.into_iter().map(Some));
    }
    let count = allowed.iter().map(|&j| candidates[j].len()).product::<usize>();
    if count > 1_000_000 {
        return Err(Error::Budget(format!("{count} composed actions")));
    }
    let mut points = Vec::with_capacity(count);
    let mut idx = vec![0usize; allowed.len()];
    loop {
        let (mut x, mut p) = (0.0, 0.0);
        for (r, (w, _)) in rows.iter().enumerate() {
            let mut level: f64 = 0.0;
            for (k, &j) in allowed.iter().enumerate() {
                if let Some(b) = candidates[j][idx[k]] {
                    let l = curves[j][r].eval(b);
                    level = level.max(l);
                    p += w * match comp.components()[j].format() {
                        PaymentFormat::WinnerPaysBid => b * l,
                        PaymentFormat::AllPay => b,
                    };
                }
            }
            x += w * level;
        }
        if x > 0.0 {
            points.push((p / x, x));
        }
        let mut k = 0;
        loop {
            if k == allowed.len() {
                return Ok(pareto_frontier(&points));
            }
            idx[k] += 1;
            if idx[k] < candidates[allowed[k]].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Weak competitive efficiency of a composed mechanism on a joint table,
/// with price-per-unit thresholds, plus the check that composed thresholds
/// never exceed any component's.
pub fn composition_weak_ce(
    comp: &ComposedMechanism,
    rows: &[ComposedScenario],
    z_grid: &[f64],
) -> Result<CompositionReport> {
    let n = comp.n();
    let m = comp.components().len();
    let total: f64 = rows.iter().map(|s| s.weight).sum();
    if rows.is_empty() || (total - 1.0).abs() > 1e-9 {
        return input("composed table weights must sum to 1");
    }
    let reserves = comp.components()[0].reserves().to_vec();
    if comp.components().iter().any(|c| c.reserves() != reserves.as_slice()) {
        return input("composed components must share reserves");
    }
    let mut envs = Vec::with_capacity(m);
    for c in comp.components() {
        if !c.rule().is_deterministic() {
            return input("weak competitive efficiency needs deterministic components");
        }
        envs.push(c.rule().env().vertices()?);
    }
    // composed feasible sets: unions of one independent set per component
    let mut sets: Vec<Vec<bool>> = vec![vec![false; n]];
    for vs in &envs {
        let mut next = Vec::new();
        for s in &sets {
            for y in vs {
                let u: Vec<bool> = (0..n).map(|i| s[i] || y[i] > 0.5).collect();
                if !next.contains(&u) {
                    next.push(u);
                }
            }
        }
        sets = next;
    }
    let mut revenue = 0.0;
    for s in rows {
        revenue += s.weight * comp.run(&s.actions)?.revenue();
    }
    let convention = SurplusConvention::FromReserveLevel;
    let mut surplus_of: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut gap = f64::NEG_INFINITY;
    let all: Vec<usize> = (0..m).collect();
    for i in 0..n {
        let mut values: Vec<f64> = rows.iter().map(|s| s.values[i]).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        for v in values {
            let mass: f64 = rows.iter().filter(|s| s.values[i] == v).map(|s| s.weight).sum();
            let cond: Vec<(f64, &ComposedScenario)> =
                rows.iter().filter(|s| s.values[i] == v).map(|s| (s.weight / mass, s)).collect();
            let composed = InterimRule::Step(composed_frontier(comp, &cond, i, &all)?);
            for j in 0..m {
                let single = InterimRule::Step(composed_frontier(comp, &cond, i, &[j])?);
                for &z in z_grid {
                    let a = threshold_surplus(&composed, z, reserves[i], convention);
                    let b = threshold_surplus(&single, z, reserves[i], convention);
                    if a.is_finite() && b.is_finite() {
                        gap = gap.max(a - b);
                    } else if a.is_infinite() && b.is_finite() {
                        gap = f64::INFINITY;
                    }
                }
            }
            surplus_of[i].push((v, capped_surplus(&composed, 1.0, reserves[i], convention)));
        }
    }
    let mut surplus = 0.0;
    for s in rows {
        let t: Vec<f64> = (0..n)
            .map(|i| surplus_of[i].iter().find(|(v, _)| *v == s.values[i]).expect("support").1)
            .collect();
        let best = sets
            .iter()
            .map(|set| (0..n).filter(|&i| set[i]).map(|i| t[i]).sum::<f64>())
            .fold(0.0, f64::max);
        surplus += s.weight * best;
    }
    Ok(CompositionReport { ratio: ratio(revenue, surplus), revenue, surplus, dominance_gap: if gap.is_finite() || gap > 0.0 { gap } else { 0.0 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::{AllocationRule, Priority, TieBreak};

    fn ca_example() -> Environment {
        Environment::single_minded(3, vec![vec![0], vec![1], vec![2], vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn first_price_is_competitively_efficient() {
        let fpa = Mechanism::first_price(3).unwrap();
        let r = ce_deterministic(&fpa, &uniform_grid(1.0, 11), CeOptions::default()).unwrap();
        assert_eq!(r.mu_hat, 1.0);
        assert!(r.certified());
        assert_eq!(r.profiles, 1331);
    }

    #[test]
    fn combinatorial_witness() {
        let ca = Mechanism::plain(
            AllocationRule::highest_bids_win(ca_example(), TieBreak::identity(4)).unwrap(),
            PaymentFormat::WinnerPaysBid,
        );
        let r = ce_deterministic(&ca, &[0.0, 1.0], CeOptions::default()).unwrap();
        assert!((r.mu_hat - 1.0 / 3.0).abs() < 1e-12);
        let w = r.witness.unwrap();
        assert_eq!(w.bids, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(w.y, vec![1.0, 1.0, 1.0, 0.0]);
        let greedy = Mechanism::plain(
            AllocationRule::greedy(ca_example(), Priority::SqrtBundle, TieBreak::identity(4)).unwrap(),
            PaymentFormat::WinnerPaysBid,
        );
        let r = ce_deterministic(&greedy, &uniform_grid(1.0, 6), CeOptions::default()).unwrap();
        assert!(r.mu_hat >= 1.0 / 3f64.sqrt() - 1e-9, "{}", r.mu_hat);
    }

    #[test]
    fn degenerate_tables_match_profiles() {
        let fpa = Mechanism::first_price(3).unwrap().with_reserves(vec![0.2, 0.0, 0.4]).unwrap();
        let grid = uniform_grid(1.0, 6);
        for b0 in &grid {
            for b2 in &grid {
                let bids = vec![*b0, 0.3, *b2];
                let joint = JointScenario::degenerate(vec![1.0, 1.0, 1.0], bids.clone()).unwrap();
                let rand = ce_randomized(&fpa, &joint, SurplusConvention::default()).unwrap();
                let eval = Evaluator::new(&fpa, SurplusConvention::default(), CostKind::Bid).unwrap();
                let (_, s, _) = eval.surplus(&bids).unwrap();
                let rev = fpa.run(&bids).unwrap().revenue();
                assert!((rand.mu_hat - ratio(rev, s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tight_individual_efficiency() {
        let o = BiddingOutcome::single(1.0, 0.0, InterimRule::indifference(), PaymentFormat::WinnerPaysBid).unwrap();
        let r = individual_efficiency(&o, &z_grid(Z_GRID_POINTS)).unwrap();
        assert!((r.eta - best_response_factor()).abs() < 1e-12);
        assert_eq!(r.z_star, 1.0);
        let s = individual_efficiency(&o.scaled(10.0), &z_grid(Z_GRID_POINTS)).unwrap();
        assert!((s.eta - r.eta).abs() < 1e-12);
        let t = tradeoff_margins(&o, None, 0.0, &z_grid(Z_GRID_POINTS)).unwrap();
        assert!(t.welfare.slack.abs() < 1e-12);
        let sb = single_buyer_welfare(&o).unwrap();
        assert!((sb.lhs - best_response_factor()).abs() < 1e-12);
        assert!(sb.pass);
    }

    #[test]
    fn deterministic_and_all_pay_outcomes() {
        let rule = InterimRule::Step(StepFunction::step(0.3, 1.0));
        let o = BiddingOutcome::single(1.0, 0.3, rule, PaymentFormat::WinnerPaysBid).unwrap();
        let r = individual_efficiency(&o, &z_grid(Z_GRID_POINTS)).unwrap();
        assert!((r.eta - 1.0).abs() < 1e-12);
        let ap = BiddingOutcome::single(1.0, 0.0, InterimRule::linear(), PaymentFormat::AllPay).unwrap();
        let w = weak_individual_efficiency(&ap, CostKind::Bid).unwrap();
        assert!((w.eta - 0.5).abs() < 1e-12);
        let free = BiddingOutcome::single(1.0, 0.0, InterimRule::Step(StepFunction::step(0.0, 1.0)), PaymentFormat::AllPay).unwrap();
        assert_eq!(weak_individual_efficiency(&free, CostKind::PricePerUnit).unwrap().eta, 1.0);
        let wpb = BiddingOutcome::single(1.0, 0.0, InterimRule::indifference(), PaymentFormat::WinnerPaysBid).unwrap();
        let w = weak_individual_efficiency(&wpb, CostKind::PricePerUnit).unwrap();
        assert!((w.eta - best_response_factor()).abs() < 1e-12);
    }

    #[test]
    fn degradation() {
        let grid = uniform_grid(1.0, 101);
        let o = BiddingOutcome::single(1.0, 0.0, InterimRule::indifference(), PaymentFormat::WinnerPaysBid).unwrap();
        let r = eps_degradation_check(&o, 0.0, &grid).unwrap();
        assert!(r.pass);
        // a bid above the indifference range loses some utility
        let worse = BiddingOutcome::single(1.0, 0.7, InterimRule::indifference(), PaymentFormat::WinnerPaysBid).unwrap();
        let r = eps_degradation_check(&worse, 0.2, &grid).unwrap();
        assert!(r.pass && r.lhs >= 0.8 * best_response_factor() - 1e-9);
        assert!(matches!(eps_degradation_check(&worse, 0.1, &grid), Err(Error::Precondition(_))));
    }

    #[test]
    fn composed_first_price() {
        let fpa = Mechanism::first_price(2).unwrap();
        let comp = crate::mech::compose_simultaneous(vec![fpa.clone(), fpa]).unwrap();
        let rows = vec![
            ComposedScenario {
                weight: 0.5,
                values: vec![1.0, 0.5],
                actions: vec![vec![Action::Bid(0.4), Action::Withdraw], vec![Action::Bid(0.2), Action::Bid(0.3)]],
            },
            ComposedScenario {
                weight: 0.5,
                values: vec![1.0, 0.8],
                actions: vec![vec![Action::Bid(0.4), Action::Withdraw], vec![Action::Withdraw, Action::Bid(0.6)]],
            },
        ];
        let r = composition_weak_ce(&comp, &rows, &z_grid(64)).unwrap();
        assert!(r.ratio >= 1.0 - 1e-9, "{r:?}");
        assert!(r.dominance_gap <= 1e-12);
    }
}
