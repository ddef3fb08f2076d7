//! Equilibrium construction and checking: best responses on bid grids,
//! grid regret, best-response dynamics, symmetric Bayes-Nash equilibria of
//! single-item auctions, and three built-in lower-bound instances.
//!
//! Deviations are searched over the bid grid, every breakpoint of the
//! interim rule, and each breakpoint plus one grid step. Whether a bid on a
//! tie wins is set by [`TieReading`].

use std::collections::HashSet;
use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use crate::dist::{JointScenario, Scenario, ValueDistribution};
use crate::env::Environment;
use crate::error::{input, Error, Result};
use crate::mech::{convex_combine, AllocationRule, Mechanism, PaymentFormat, TieBreak};
use crate::step::StepFunction;
use crate::thresh::InterimRule;

/// Evenly spaced bids `0, max/(k-1), ..., max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidGrid {
    max_bid: f64,
    points: usize,
}

impl BidGrid {
    pub fn new(max_bid: f64, points: usize) -> Result<Self> {
        if !(max_bid.is_finite() && max_bid > 0.0) {
            return input(format!("grid maximum {max_bid} must be positive"));
        }
        if points < 2 {
            return input("bid grid needs at least 2 points");
        }
        Ok(Self { max_bid, points })
    }

    /// Grid on `[0, max_bid]` with the given spacing (rounded to fit).
    pub fn with_spacing(max_bid: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return input(format!("grid spacing {spacing} must be positive"));
        }
        Self::new(max_bid, (max_bid / spacing).round() as usize + 1)
    }

    pub fn max_bid(&self) -> f64 {
        self.max_bid
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.max_bid / (self.points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.max_bid
        } else {
            self.max_bid * k as f64 / (self.points - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.point(k)).collect()
    }

    /// Nearest grid point when `b` is within rounding of one.
    fn snap(&self, b: f64) -> f64 {
        let k = (b / self.spacing()).round();
        if k >= 0.0 && (k as usize) < self.points {
            let p = self.point(k as usize);
            if (p - b).abs() <= 1e-9 * self.max_bid {
                return p;
            }
        }
        b
    }
}

/// Per-agent bidding strategies on a discrete value support.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    tables: Vec<Vec<(f64, f64)>>,
}

impl StrategyProfile {
    /// `tables[i]` lists agent `i`'s `(value, bid)` pairs.
    pub fn new(mut tables: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        for t in &mut tables {
            if t.iter().any(|(v, b)| !(v.is_finite() && *v >= 0.0 && b.is_finite() && *b >= 0.0)) {
                return input("strategy values and bids must be finite and nonnegative");
            }
            t.sort_by(|a, b| a.0.total_cmp(&b.0));
            if t.windows(2).any(|w| w[0].0 == w[1].0) {
                return input("strategy table lists a value twice");
            }
        }
        Ok(Self { tables })
    }

    /// One value and one bid per agent.
    pub fn complete_information(values: &[f64], bids: &[f64]) -> Result<Self> {
        if values.len() != bids.len() {
            return input("need one bid per value");
        }
        Self::new(values.iter().zip(bids).map(|(&v, &b)| vec![(v, b)]).collect())
    }

    pub fn n(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, i: usize) -> &[(f64, f64)] {
        &self.tables[i]
    }

    pub fn bid(&self, i: usize, v: f64) -> Option<f64> {
        self.tables.get(i)?.iter().find(|(u, _)| *u == v).map(|p| p.1)
    }

    /// Bids clear each reserve exactly when values do.
    pub fn respects_reserves(&self, reserves: &[f64]) -> bool {
        self.tables
            .iter()
            .zip(reserves)
            .all(|(t, &r)| t.iter().all(|&(v, b)| (v >= r) == (b >= r)))
    }

    /// Independent values: `masses[i]` lists `(mass, value)` for agent `i`.
    pub fn joint(&self, masses: &[Vec<(f64, f64)>], budget: usize) -> Result<JointScenario> {
        if masses.len() != self.n() {
            return input("need one value law per agent");
        }
        let tables = masses
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.iter()
                    .map(|&(p, v)| match self.bid(i, v) {
                        Some(b) => Ok((p, v, b)),
                        None => input(format!("agent {} has no bid at value {v}", i + 1)),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        JointScenario::product(&tables, budget)
    }

    /// `(agent, value, bid)` rows, agents 1-based.
    pub fn rows(&self) -> Vec<(usize, f64, f64)> {
        self.tables
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.iter().map(move |&(v, b)| (i + 1, v, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretEntry {
    pub agent: usize,
    pub value: f64,
    pub utility: f64,
    pub best_utility: f64,
    pub best_bid: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretReport {
    pub entries: Vec<RegretEntry>,
}

impl RegretReport {
    pub fn max_eps(&self) -> f64 {
        self.entries.iter().map(|e| e.eps).fold(0.0, f64::max)
    }
}

/// `max(0, 1 - u/u*)`, 0 when `u* <= 0`.
pub fn multiplicative_eps(utility: f64, best: f64) -> f64 {
    if best <= 0.0 {
        0.0
    } else {
        (1.0 - utility / best).clamp(0.0, 1.0)
    }
}

/// How an agent's own utility is read at a bid where ties matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieReading {
    /// Ties resolved by the mechanism's tie-break.
    #[default]
    Literal,
    /// Right-continuous interim rules: a bid counts as bidding just above
    /// it. Suited to discretized atomless values, where ties between equal
    /// support points stand in for null events.
    Limit,
}

/// Agent `i`'s interim view at value `v`: per-row own-bid curves, their
/// average, and the mass lost at breakpoints where ties go against it.
struct InterimView<'a> {
    mech: &'a Mechanism,
    i: usize,
    v: f64,
    rows: Vec<(f64, f64, StepFunction)>,
    curve: StepFunction,
    tie_loss: Vec<(f64, f64)>,
    reading: TieReading,
}

impl<'a> InterimView<'a> {
    fn new(mech: &'a Mechanism, joint: &JointScenario, i: usize, v: f64, reading: TieReading) -> Result<Self> {
        if joint.n() != mech.n() || i >= mech.n() {
            return input("agent or table size does not match the mechanism");
        }
        let mut rows = Vec::new();
        let mut tie_loss: Vec<(f64, f64)> = Vec::new();
        for (w, s) in joint.conditional(i, v)? {
            let c = mech.allocation_curve(i, &s.bids);
            if reading == TieReading::Literal {
                let mut bids = s.bids.clone();
                for &(b, level) in c.points() {
                    bids[i] = b;
                    let got = mech.run(&bids)?.allocation[i];
                    if level - got > 1e-15 {
                        tie_loss.push((b, w * (level - got)));
                    }
                }
            }
            rows.push((w, s.bids[i], c));
        }
        tie_loss.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (b, d) in tie_loss {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += d,
                _ => merged.push((b, d)),
            }
        }
        let curve = StepFunction::weighted_sum(rows.iter().map(|(w, _, c)| (*w, c)));
        Ok(Self { mech, i, v, rows, curve, tie_loss: merged, reading })
    }

    fn allocation(&self, d: f64) -> f64 {
        let loss = self
            .tie_loss
            .binary_search_by(|p| p.0.total_cmp(&d))
            .map_or(0.0, |k| self.tie_loss[k].1);
        (self.curve.eval(d) - loss).max(0.0)
    }

    fn payment(&self, d: f64, x: f64) -> f64 {
        match self.mech.format() {
            PaymentFormat::WinnerPaysBid => d * x,
            PaymentFormat::AllPay if d >= self.mech.reserves()[self.i] => d,
            PaymentFormat::AllPay => 0.0,
        }
    }

    fn utility(&self, d: f64) -> f64 {
        let x = self.allocation(d);
        self.v * x - self.payment(d, x)
    }

    fn limit_utility(&self, d: f64) -> f64 {
        let x = self.curve.eval(d);
        self.v * x - self.payment(d, x)
    }

    /// Utility of the bids actually played.
    fn equilibrium_utility(&self, joint: &JointScenario) -> Result<f64> {
        let mut u = 0.0;
        match self.reading {
            TieReading::Literal => {
                for (w, s) in joint.conditional(self.i, self.v)? {
                    let o = self.mech.run(&s.bids)?;
                    u += w * (self.v * o.allocation[self.i] - o.payments[self.i]);
                }
            }
            TieReading::Limit => {
                for (w, b, c) in &self.rows {
                    let x = c.eval(*b);
                    u += w * (self.v * x - self.payment(*b, x));
                }
            }
        }
        Ok(u)
    }

    fn candidates(&self, grid: &BidGrid) -> Vec<f64> {
        let h = grid.spacing();
        let mut out = grid.points();
        for &(b, _) in self.curve.points() {
            out.push(b);
            out.push(b + h);
        }
        sorted_candidates(out, grid)
    }

    fn best(&self, grid: &BidGrid) -> (f64, f64) {
        argmax(self.candidates(grid), |d| self.utility(d))
    }
}

fn sorted_candidates(mut out: Vec<f64>, grid: &BidGrid) -> Vec<f64> {
    out.retain(|b| b.is_finite() && *b >= 0.0);
    for b in &mut out {
        *b = grid.snap(*b);
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// Highest utility over ascending candidates, keeping the lowest bid unless
/// a later one is better by more than rounding.
fn argmax(candidates: Vec<f64>, u: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for d in candidates {
        let ud = u(d);
        if best.is_none_or(|(_, ub)| ud > ub + 1e-12 * ub.abs()) {
            best = Some((d, ud));
        }
    }
    best.unwrap_or((0.0, 0.0))
}

/// Agent `i`'s best grid response at value `v` against the joint table's
/// other bids: `(bid, utility)`, lowest bid among ties.
///
/// Utilities are limits from above. When the best bid sits on a tie the
/// agent would lose, the returned bid is the next grid point above it.
pub fn best_response(mech: &Mechanism, joint: &JointScenario, i: usize, v: f64, grid: &BidGrid) -> Result<(f64, f64)> {
    let view = InterimView::new(mech, joint, i, v, TieReading::Literal)?;
    let (b, u) = argmax(view.candidates(grid), |d| view.limit_utility(d));
    if view.allocation(b) < view.curve.eval(b) - 1e-15 {
        if let Some(next) = grid.points().into_iter().find(|&p| p > b) {
            return Ok((next, u));
        }
    }
    Ok((b, u))
}

/// Best response against an interim rule read right-continuously.
pub fn best_response_to_rule(rule: &InterimRule, format: PaymentFormat, v: f64, grid: &BidGrid) -> (f64, f64) {
    let mut c = grid.points();
    c.extend(rule.breakpoints());
    argmax(sorted_candidates(c, grid), |d| {
        let x = rule.eval(d);
        match format {
            PaymentFormat::WinnerPaysBid => (v - d) * x,
            PaymentFormat::AllPay => v * x - d,
        }
    })
}

/// Grid regret of the bids in a joint table, per agent and value, with
/// ties read literally.
pub fn regret(mech: &Mechanism, joint: &JointScenario, grid: &BidGrid) -> Result<RegretReport> {
    regret_with(mech, joint, grid, TieReading::Literal)
}

pub fn regret_with(mech: &Mechanism, joint: &JointScenario, grid: &BidGrid, reading: TieReading) -> Result<RegretReport> {
    let mut entries = Vec::new();
    for i in 0..mech.n() {
        for v in joint.value_support(i) {
            let view = InterimView::new(mech, joint, i, v, reading)?;
            let u = view.equilibrium_utility(joint)?;
            let (best_bid, best) = view.best(grid);
            let best_utility = best.max(u);
            entries.push(RegretEntry {
                agent: i,
                value: v,
                utility: u,
                best_utility,
                best_bid,
                eps: multiplicative_eps(u, best_utility),
            });
        }
    }
    Ok(RegretReport { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsResult {
    pub bids: Vec<f64>,
    pub profile: StrategyProfile,
    pub regret: RegretReport,
    pub converged: bool,
    pub updates: usize,
}

/// Round-robin best responses from all-zero bids.
pub fn br_dynamics(mech: &Mechanism, values: &[f64], grid: &BidGrid, max_iters: usize) -> Result<DynamicsResult> {
    br_dynamics_from(mech, values, &vec![0.0; values.len()], grid, max_iters)
}

/// Round-robin best responses from `start` until the grid regret is within
/// `1.1` grid steps (relative to the grid maximum), a profile repeats, or
/// `max_iters` single-agent updates have run. Without convergence the
/// lowest-regret profile seen is returned.
pub fn br_dynamics_from(
    mech: &Mechanism,
    values: &[f64],
    start: &[f64],
    grid: &BidGrid,
    max_iters: usize,
) -> Result<DynamicsResult> {
    let n = mech.n();
    if values.len() != n || start.len() != n {
        return input("need one value and one starting bid per agent");
    }
    let target = 1.1 * grid.spacing() / grid.max_bid();
    let mut bids: Vec<f64> = start.to_vec();
    let regret_of = |bids: &[f64]| -> Result<RegretReport> {
        regret(mech, &JointScenario::degenerate(values.to_vec(), bids.to_vec())?, grid)
    };
    let mut report = regret_of(&bids)?;
    let mut best = (report.max_eps(), bids.clone(), report.clone());
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    seen.insert(bids.iter().map(|b| b.to_bits()).collect());
    let mut updates = 0;
    let mut converged = report.max_eps() <= target;
    while !converged && updates < max_iters {
        let i = updates % n;
        let joint = JointScenario::degenerate(values.to_vec(), bids.clone())?;
        bids[i] = best_response(mech, &joint, i, values[i], grid)?.0;
        updates += 1;
        report = regret_of(&bids)?;
        if report.max_eps() < best.0 {
            best = (report.max_eps(), bids.clone(), report.clone());
        }
        converged = report.max_eps() <= target;
        // a repeat only counts as a cycle once every agent has moved since
        if !converged && updates % n == 0 && !seen.insert(bids.iter().map(|b| b.to_bits()).collect()) {
            break;
        }
    }
    let (bids, regret) = if converged { (bids, report) } else { (best.1, best.2) };
    Ok(DynamicsResult {
        profile: StrategyProfile::complete_information(values, &bids)?,
        bids,
        regret,
        converged,
        updates,
    })
}

/// Cumulative trapezoid table of `F(t)^(n-1)` on the support.
#[derive(Debug, Clone, PartialEq)]
struct PowerIntegral {
    dist: ValueDistribution,
    power: i32,
    lo: f64,
    step: f64,
    cum: Vec<f64>,
}

impl PowerIntegral {
    fn new(dist: &ValueDistribution, n: usize, cells: usize) -> Self {
        let (lo, hi) = dist.support();
        let power = n as i32 - 1;
        let step = (hi - lo) / cells as f64;
        let g = |t: f64| dist.cdf(t).powi(power);
        let mut cum = vec![0.0; cells + 1];
        let mut prev = g(lo);
        for k in 1..=cells {
            let cur = g(lo + step * k as f64);
            cum[k] = cum[k - 1] + 0.5 * step * (prev + cur);
            prev = cur;
        }
        Self { dist: dist.clone(), power, lo, step, cum }
    }

    fn power_cdf(&self, v: f64) -> f64 {
        self.dist.cdf(v).powi(self.power)
    }

    /// `int_lo^v F^(n-1)`.
    fn integral(&self, v: f64) -> f64 {
        let k = (((v - self.lo) / self.step).floor().max(0.0) as usize).min(self.cum.len() - 1);
        let t = self.lo + self.step * k as f64;
        self.cum[k] + 0.5 * (v - t).max(0.0) * (self.power_cdf(t) + self.power_cdf(v))
    }

    fn bid(&self, v: f64, format: PaymentFormat) -> f64 {
        let g = self.power_cdf(v);
        let b = match format {
            PaymentFormat::WinnerPaysBid if g > 0.0 => v - self.integral(v) / g,
            PaymentFormat::WinnerPaysBid => self.lo.min(v),
            PaymentFormat::AllPay => v * g - self.integral(v),
        };
        b.max(0.0)
    }

    fn revenue(&self, n: usize, format: PaymentFormat, points: usize) -> f64 {
        let mut total = 0.0;
        for k in 0..points {
            let v = self.dist.quantile((k as f64 + 0.5) / points as f64);
            let b = self.bid(v, format);
            total += match format {
                PaymentFormat::WinnerPaysBid => b * self.power_cdf(v),
                PaymentFormat::AllPay => b,
            };
        }
        n as f64 * total / points as f64
    }
}

/// Number of quadrature cells used for symmetric equilibria.
pub const BNE_QUADRATURE: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBne {
    pub n: usize,
    pub format: PaymentFormat,
    /// `(mass, value, bid)` on quantile midpoints.
    pub table: Vec<(f64, f64, f64)>,
    /// Expected revenue of the continuous equilibrium.
    pub revenue: f64,
    /// Point-mass values: no competition, everyone bids 0.
    pub degenerate: bool,
    quad: Option<PowerIntegral>,
}

impl SymmetricBne {
    /// Equilibrium bid at value `v`.
    pub fn bid(&self, v: f64) -> f64 {
        self.quad.as_ref().map_or(0.0, |q| q.bid(v, self.format))
    }

    pub fn profile(&self) -> StrategyProfile {
        let t: Vec<(f64, f64)> = self.table.iter().map(|&(_, v, b)| (v, b)).collect();
        StrategyProfile::new(vec![t; self.n]).expect("valid table")
    }

    /// The discretized equilibrium as an independent joint table.
    pub fn joint(&self, budget: usize) -> Result<JointScenario> {
        JointScenario::product(&vec![self.table.clone(); self.n], budget)
    }
}

/// Symmetric equilibrium of the `n`-agent single-item auction with iid
/// values, tabulated on `value_points` quantile midpoints.
pub fn symmetric_bne(
    dist: &ValueDistribution,
    n: usize,
    format: PaymentFormat,
    value_points: usize,
) -> Result<SymmetricBne> {
    if n == 0 || value_points == 0 {
        return input("need at least one agent and one value point");
    }
    if let ValueDistribution::Degenerate(v) = dist {
        return Ok(SymmetricBne {
            n,
            format,
            table: vec![(1.0, *v, 0.0)],
            revenue: 0.0,
            degenerate: true,
            quad: None,
        });
    }
    if !dist.is_atomless() {
        return input("symmetric equilibrium needs an atomless value distribution");
    }
    let quad = PowerIntegral::new(dist, n, BNE_QUADRATURE);
    let revenue = quad.revenue(n, format, BNE_QUADRATURE);
    let coarse = PowerIntegral::new(dist, n, BNE_QUADRATURE / 2).revenue(n, format, BNE_QUADRATURE / 2);
    if !revenue.is_finite() || (revenue - coarse).abs() > 1e-4 * revenue.abs().max(1.0) {
        return Err(Error::Numeric(format!("equilibrium revenue did not settle: {coarse} vs {revenue}")));
    }
    let mass = 1.0 / value_points as f64;
    let table = (0..value_points)
        .map(|k| {
            let v = dist.quantile((k as f64 + 0.5) * mass);
            (mass, v, quad.bid(v, format))
        })
        .collect();
    Ok(SymmetricBne { n, format, table, revenue, degenerate: false, quad: Some(quad) })
}

/// `E[g(V)]` for `g` polynomial of degree at most 2 on each open piece
/// `(lo, hi)` with coefficients `[c0, c1, c2]`, and given by `at_atom` on
/// atoms. Exact up to rounding.
pub fn piecewise_expectation(
    dist: &ValueDistribution,
    at_atom: impl Fn(f64) -> f64,
    pieces: &[(f64, f64, [f64; 3])],
) -> f64 {
    let atoms: f64 = dist.atoms().into_iter().map(|(a, p)| p * at_atom(a)).sum();
    let cont: f64 = pieces
        .iter()
        .map(|&(lo, hi, c)| (0..3).map(|k| c[k] * dist.partial_moment(k as u32, lo, hi)).sum::<f64>())
        .sum();
    atoms + cont
}

/// Atoms kept exactly; each continuous stretch split into `cells` cells of
/// equal mass, each represented by its upper endpoint. The discrete CDF
/// then agrees with the true one at every support point.
pub fn upper_quantile_atoms(dist: &ValueDistribution, cells: usize) -> Result<Vec<(f64, f64)>> {
    if cells == 0 {
        return input("need at least one cell");
    }
    let atoms = dist.atoms();
    let atom_mass: f64 = atoms.iter().map(|a| a.1).sum();
    let cont = 1.0 - atom_mass;
    let mut out = atoms.clone();
    if cont > 1e-15 {
        let (lo, hi) = dist.support();
        // continuous part of the CDF at v
        let cont_cdf = |v: f64| dist.cdf(v) - atoms.iter().filter(|a| a.0 <= v).map(|a| a.1).sum::<f64>();
        for k in 1..=cells {
            let target = cont * k as f64 / cells as f64;
            let v = if k == cells {
                // last cell ends where the continuous part does
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if cont_cdf(m) >= cont - 1e-15 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                b
            } else {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if cont_cdf(m) >= target {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                b
            };
            out.push((v, cont / cells as f64));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (v, p) in out {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonicalName {
    /// Correlated values `(t, t, 1)` in a first-price auction.
    CorWelfare,
    /// Point-mass and equal-revenue bidders, both bidding the reserve.
    RevHalf,
    /// Random partial allocations with caps `(t, t, 1)`.
    PartialAlloc,
}

impl CanonicalName {
    pub const ALL: [CanonicalName; 3] = [Self::CorWelfare, Self::RevHalf, Self::PartialAlloc];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CorWelfare => "cor-welfare",
            Self::RevHalf => "rev-half",
            Self::PartialAlloc => "partial-alloc",
        }
    }
}

impl fmt::Display for CanonicalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CanonicalName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown example {s:?}; expected cor-welfare, rev-half or partial-alloc")))
    }
}

/// Exact expected quantities of a canonical instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMetrics {
    pub welfare: f64,
    pub revenue: f64,
    pub optimal_welfare: f64,
    pub optimal_revenue: Option<f64>,
    /// The headline ratio: welfare or revenue over its optimum.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalExample {
    pub name: CanonicalName,
    pub mechanism: Mechanism,
    /// Equilibrium play on a discretized support.
    pub joint: JointScenario,
    /// Value marginals, for the revenue benchmark.
    pub marginals: Vec<ValueDistribution>,
    pub exact: ExactMetrics,
}

impl CanonicalExample {
    pub fn environment(&self) -> &Environment {
        self.mechanism.rule().env()
    }
}

/// Upper support point of the correlated example's parameter.
fn cor_top() -> f64 {
    1.0 - 1.0 / E
}

/// Equal-revenue cap used by the revenue example.
pub const REV_HALF_CAP: f64 = 100.0;

/// Builds a canonical instance with `cells` cells for each continuous part.
pub fn canonical_example(name: CanonicalName, cells: usize) -> Result<CanonicalExample> {
    match name {
        CanonicalName::CorWelfare => cor_welfare(cells),
        CanonicalName::RevHalf => rev_half(cells),
        CanonicalName::PartialAlloc => partial_alloc(cells),
    }
}

/// Welfare and revenue of both `(t, t, 1)` examples. At `t = 0` the third
/// agent wins and pays nothing; otherwise the first agent's surplus and
/// payment are both `t` (value `t` served fully, or value 1 served at `t`).
fn theta_metrics() -> ExactMetrics {
    let cor = ValueDistribution::ExampleCor;
    let linear = [(0.0, cor_top(), [0.0, 1.0, 0.0])];
    let welfare = piecewise_expectation(&cor, |t| if t == 0.0 { 1.0 } else { t }, &linear);
    let revenue = piecewise_expectation(&cor, |t| t, &linear);
    ExactMetrics { welfare, revenue, optimal_welfare: 1.0, optimal_revenue: None, ratio: welfare }
}

fn cor_welfare(cells: usize) -> Result<CanonicalExample> {
    let tb = TieBreak::favoring(3, 2);
    let mechanism = Mechanism::plain(
        AllocationRule::highest_bids_win(Environment::single_item(3)?, tb)?,
        PaymentFormat::WinnerPaysBid,
    );
    let rows = upper_quantile_atoms(&ValueDistribution::ExampleCor, cells)?
        .into_iter()
        .map(|(t, p)| Scenario { weight: p, values: vec![t, t, 1.0], bids: vec![t, t, 0.0] })
        .collect();
    let exact = theta_metrics();
    Ok(CanonicalExample {
        name: CanonicalName::CorWelfare,
        mechanism,
        joint: JointScenario::new(rows)?,
        marginals: vec![],
        exact,
    })
}

fn rev_half(cells: usize) -> Result<CanonicalExample> {
    let h = REV_HALF_CAP;
    let tb = TieBreak::favoring(2, 1);
    let mechanism = Mechanism::new(
        AllocationRule::highest_bids_win(Environment::single_item(2)?, tb)?,
        PaymentFormat::WinnerPaysBid,
        vec![1.0, 1.0],
    )?;
    let er = ValueDistribution::equal_revenue(h)?;
    let high: Vec<(f64, f64, f64)> = er.discretize(cells)?.atoms().into_iter().map(|(v, p)| (p, v, 1.0)).collect();
    let joint = JointScenario::product(&[vec![(1.0, 1.0, 1.0)], high], usize::MAX)?;
    Ok(CanonicalExample {
        name: CanonicalName::RevHalf,
        mechanism,
        joint,
        marginals: vec![ValueDistribution::degenerate(1.0)?, er],
        exact: ExactMetrics {
            // the second agent always wins and pays 1
            welfare: 1.0 + h.ln(),
            revenue: 1.0,
            optimal_welfare: 1.0 + h.ln(),
            optimal_revenue: Some(2.0 - 1.0 / h),
            ratio: 1.0 / (2.0 - 1.0 / h),
        },
    })
}

fn partial_alloc(cells: usize) -> Result<CanonicalExample> {
    let tb = TieBreak::favoring(3, 2);
    let atoms = upper_quantile_atoms(&ValueDistribution::ExampleCor, cells)?;
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let parts = atoms
        .into_iter()
        .map(|(t, p)| {
            let env = Environment::partial_allocation(vec![t, t, 1.0])?;
            Ok((p / total, AllocationRule::partial_allocation_hbw(env, tb.clone())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mechanism = Mechanism::plain(convex_combine(parts)?, PaymentFormat::WinnerPaysBid);
    let joint = JointScenario::degenerate(vec![1.0; 3], vec![1.0, 1.0, 0.0])?;
    Ok(CanonicalExample {
        name: CanonicalName::PartialAlloc,
        mechanism,
        joint,
        marginals: vec![],
        exact: theta_metrics(),
    })
}
