//! Allocation rules, payment formats, reserves, convex combinations and
//! simultaneous composition.
//!
//! Every rule ranks eligible agents by a score (the bid, a priority, or
//! bid times cap). When some eligible agent has a positive score, zero-score
//! agents are not served; when every score is zero the agents still compete
//! and the [`TieBreak`] order decides. Agents bidding below their reserve are
//! not eligible.

use crate::env::{best_disjoint_set, mask, Allocation, EnvKind, Environment};
use crate::error::{input, Result};
use crate::step::StepFunction;

/// A strict priority order over agents; earlier agents win ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreak {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl TieBreak {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut rank = vec![usize::MAX; n];
        for (pos, &i) in order.iter().enumerate() {
            if i >= n || rank[i] != usize::MAX {
                return input(format!("tie-break order {order:?} is not a permutation"));
            }
            rank[i] = pos;
        }
        Ok(Self { order, rank })
    }

    /// Lower index wins ties.
    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect(), rank: (0..n).collect() }
    }

    /// Agent `first` wins every tie; the rest keep index order.
    pub fn favoring(n: usize, first: usize) -> Self {
        let mut order = vec![first];
        order.extend((0..n).filter(|&i| i != first));
        Self::new(order).expect("valid permutation")
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rank(&self, i: usize) -> usize {
        self.rank[i]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Named priority families for greedy rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Priority {
    /// Priority equals the bid.
    Identity,
    /// Bid divided by the square root of the agent's bundle size.
    SqrtBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    HighestBidsWin,
    Greedy(Priority),
    RankByBid,
    PartialAllocationHbw,
    Mixture(Vec<(f64, AllocationRule)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationRule {
    env: Environment,
    kind: RuleKind,
    tiebreak: TieBreak,
}

impl AllocationRule {
    /// Highest bids win: exact max-bid-weight winner determination. On
    /// position and partial-allocation environments this is rank-by-bid and
    /// the partial-allocation rule respectively.
    pub fn highest_bids_win(env: Environment, tiebreak: TieBreak) -> Result<Self> {
        check_tiebreak(&env, &tiebreak)?;
        let kind = match env.kind() {
            EnvKind::Position(_) => RuleKind::RankByBid,
            EnvKind::PartialAllocation(_) => RuleKind::PartialAllocationHbw,
            EnvKind::Mixture(_) => {
                return input("build rules over mixtures with convex_combine");
            }
            _ => RuleKind::HighestBidsWin,
        };
        Ok(Self { env, kind, tiebreak })
    }

    pub fn greedy(env: Environment, priority: Priority, tiebreak: TieBreak) -> Result<Self> {
        check_tiebreak(&env, &tiebreak)?;
        if !env.is_deterministic() {
            return input("greedy rules need a deterministic environment");
        }
        Ok(Self { env, kind: RuleKind::Greedy(priority), tiebreak })
    }

    pub fn rank_by_bid(env: Environment, tiebreak: TieBreak) -> Result<Self> {
        check_tiebreak(&env, &tiebreak)?;
        if !matches!(env.kind(), EnvKind::Position(_)) {
            return input("rank-by-bid needs a position environment");
        }
        Ok(Self { env, kind: RuleKind::RankByBid, tiebreak })
    }

    pub fn partial_allocation_hbw(env: Environment, tiebreak: TieBreak) -> Result<Self> {
        check_tiebreak(&env, &tiebreak)?;
        if !matches!(env.kind(), EnvKind::PartialAllocation(_)) {
            return input("the partial-allocation rule needs a partial-allocation environment");
        }
        Ok(Self { env, kind: RuleKind::PartialAllocationHbw, tiebreak })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    pub fn tiebreak(&self) -> &TieBreak {
        &self.tiebreak
    }

    pub fn n(&self) -> usize {
        self.env.n()
    }

    /// True when every outcome is a 0/1 allocation.
    pub fn is_deterministic(&self) -> bool {
        self.env.is_deterministic()
    }

    /// Largest allocation agent `i` can ever receive.
    pub fn max_level(&self, i: usize) -> f64 {
        match (&self.kind, self.env.kind()) {
            (RuleKind::Mixture(parts), _) => parts.iter().map(|(w, r)| w * r.max_level(i)).sum(),
            (_, EnvKind::PartialAllocation(caps)) => caps[i],
            (_, EnvKind::Position(alpha)) => alpha.first().copied().unwrap_or(0.0),
            (_, EnvKind::TransversalMatroid { .. }) if !self.env.is_independent(&[i]) => 0.0,
            _ => 1.0,
        }
    }

    /// Agent `i`'s allocation against its own bid, others fixed.
    pub fn allocation_curve(&self, i: usize, bids: &[f64]) -> StepFunction {
        self.own_bid_curve(i, bids, &vec![true; self.n()])
    }

    /// Infimum bid at which agent `i` reaches its full level; `+inf` if never.
    pub fn threshold_bid(&self, i: usize, bids: &[f64]) -> f64 {
        let full = self.max_level(i);
        if full <= 0.0 {
            return f64::INFINITY;
        }
        self.allocation_curve(i, bids).inverse(full - 1e-12)
    }

    /// Allocation with every agent eligible.
    pub fn allocate(&self, bids: &[f64]) -> Result<Allocation> {
        check_bids(bids, self.n())?;
        Ok(self.allocate_with(bids, &vec![true; self.n()]))
    }

    fn score(&self, i: usize, bid: f64) -> f64 {
        match (&self.kind, self.env.kind()) {
            (RuleKind::Greedy(Priority::SqrtBundle), _) => {
                bid / (self.env.bundle_size(i) as f64).sqrt()
            }
            (RuleKind::PartialAllocationHbw, EnvKind::PartialAllocation(caps)) => bid * caps[i],
            _ => bid,
        }
    }

    /// Eligible agents that compete, sorted by score then tie-break rank.
    fn ranking(&self, scores: &[f64], eligible: &[bool]) -> Vec<usize> {
        let any_positive = (0..scores.len()).any(|i| eligible[i] && scores[i] > 0.0);
        let mut active: Vec<usize> = (0..scores.len())
            .filter(|&i| eligible[i] && (!any_positive || scores[i] > 0.0))
            .collect();
        active.sort_by(|&a, &b| {
            scores[b].total_cmp(&scores[a]).then(self.tiebreak.rank(a).cmp(&self.tiebreak.rank(b)))
        });
        active
    }

    pub(crate) fn allocate_with(&self, bids: &[f64], eligible: &[bool]) -> Allocation {
        let n = self.n();
        let mut x = vec![0.0; n];
        if let RuleKind::Mixture(parts) = &self.kind {
            for (w, rule) in parts {
                let sub = rule.allocate_with(bids, eligible);
                for (a, b) in x.iter_mut().zip(sub) {
                    *a += w * b;
                }
            }
            return x;
        }
        let scores: Vec<f64> = (0..n).map(|i| self.score(i, bids[i])).collect();
        let ranked = self.ranking(&scores, eligible);
        match (&self.kind, self.env.kind()) {
            (RuleKind::HighestBidsWin, EnvKind::SingleMindedCA { demands, .. }) => {
                let masks: Vec<u64> = demands.iter().map(|d| mask(d)).collect();
                let mut order = ranked.clone();
                order.sort_by_key(|&i| self.tiebreak.rank(i));
                let set = best_disjoint_set(&masks, &scores, &order, true)
                    .expect("ranking respects the enumeration limit checked at construction");
                for i in set {
                    x[i] = 1.0;
                }
            }
            (RuleKind::RankByBid, EnvKind::Position(alpha)) => {
                for (slot, &i) in ranked.iter().enumerate().take(alpha.len()) {
                    x[i] = alpha[slot];
                }
            }
            (RuleKind::PartialAllocationHbw, EnvKind::PartialAllocation(caps)) => {
                if let Some(&i) = ranked.first() {
                    x[i] = caps[i];
                }
            }
            _ => {
                let mut chosen = Vec::new();
                for i in ranked {
                    chosen.push(i);
                    if !self.env.is_independent(&chosen) {
                        chosen.pop();
                    }
                }
                for i in chosen {
                    x[i] = 1.0;
                }
            }
        }
        x
    }

    /// Agent `i`'s allocation as a function of its own bid, others fixed.
    ///
    /// The curve is right-continuous: at a breakpoint it reports the level
    /// reached by any bid strictly above it, whatever the tie-break says.
    pub(crate) fn own_bid_curve(&self, i: usize, bids: &[f64], eligible: &[bool]) -> StepFunction {
        let n = self.n();
        if let RuleKind::Mixture(parts) = &self.kind {
            let curves: Vec<(f64, StepFunction)> = parts
                .iter()
                .map(|(w, r)| (*w, r.own_bid_curve(i, bids, eligible)))
                .collect();
            return StepFunction::weighted_sum(curves.iter().map(|(w, c)| (*w, c)));
        }
        let others: Vec<usize> = (0..n)
            .filter(|&j| j != i && eligible[j] && self.score(j, bids[j]) > 0.0)
            .collect();
        match (&self.kind, self.env.kind()) {
            (RuleKind::HighestBidsWin, EnvKind::SingleMindedCA { demands, .. }) => {
                let masks: Vec<u64> = demands.iter().map(|d| mask(d)).collect();
                let compatible: Vec<usize> =
                    others.iter().copied().filter(|&j| masks[j] & masks[i] == 0).collect();
                let weight = |set: &[usize]| -> f64 {
                    best_disjoint_set(&masks, bids, set, false)
                        .expect("enumeration limit")
                        .iter()
                        .map(|&j| bids[j])
                        .sum()
                };
                StepFunction::step((weight(&others) - weight(&compatible)).max(0.0), 1.0)
            }
            (RuleKind::RankByBid, EnvKind::Position(alpha)) => {
                let level = |k: usize| alpha.get(k).copied().unwrap_or(0.0);
                let mut values: Vec<f64> = others.iter().map(|&j| bids[j]).collect();
                values.sort_by(|a, b| a.total_cmp(b));
                let mut points = vec![(0.0, level(values.len()))];
                for (k, &v) in values.iter().enumerate() {
                    // bids just above v pass every rival at or below v
                    let above = values.len() - values[k..].partition_point(|&u| u <= v) - k;
                    points.push((v, level(above)));
                }
                StepFunction::new(points).expect("levels rise with the bid")
            }
            (RuleKind::PartialAllocationHbw, EnvKind::PartialAllocation(caps)) => {
                if caps[i] <= 0.0 {
                    return StepFunction::zero();
                }
                let top = others.iter().map(|&j| bids[j] * caps[j]).fold(0.0, f64::max);
                StepFunction::step(top / caps[i], caps[i])
            }
            _ => {
                if !self.env.is_independent(&[i]) {
                    return StepFunction::zero();
                }
                // replay the greedy scan without i; i wins iff it still fits
                // when its score comes up
                let mut ranked = others;
                ranked.sort_by(|&a, &b| {
                    self.score(b, bids[b])
                        .total_cmp(&self.score(a, bids[a]))
                        .then(self.tiebreak.rank(a).cmp(&self.tiebreak.rank(b)))
                });
                let mut chosen: Vec<usize> = Vec::new();
                let mut blocking = 0.0;
                for j in ranked {
                    chosen.push(j);
                    if !self.env.is_independent(&chosen) {
                        chosen.pop();
                        continue;
                    }
                    chosen.push(i);
                    let fits = self.env.is_independent(&chosen);
                    chosen.pop();
                    if !fits {
                        blocking = self.score(j, bids[j]);
                        break;
                    }
                }
                let scale = self.score(i, 1.0);
                StepFunction::step(blocking / scale, 1.0)
            }
        }
    }
}

fn check_tiebreak(env: &Environment, tb: &TieBreak) -> Result<()> {
    if tb.len() != env.n() {
        return input(format!("tie-break covers {} agents, environment has {}", tb.len(), env.n()));
    }
    if let EnvKind::SingleMindedCA { .. } = env.kind() {
        if env.n() > crate::env::CA_MAX_AGENTS {
            return Err(crate::Error::Budget(format!(
                "{} bidders exceed the winner-determination limit of {}",
                env.n(),
                crate::env::CA_MAX_AGENTS
            )));
        }
    }
    Ok(())
}

fn check_bids(bids: &[f64], n: usize) -> Result<()> {
    if bids.len() != n {
        return input(format!("{} bids for {n} agents", bids.len()));
    }
    if let Some(b) = bids.iter().find(|b| !b.is_finite() || **b < 0.0) {
        return input(format!("bids must be finite and nonnegative, got {b}"));
    }
    Ok(())
}

/// The greedy-selected allocation of a greedy rule.
pub fn greedy_allocate(rule: &AllocationRule, bids: &[f64]) -> Result<Allocation> {
    if !matches!(rule.kind(), RuleKind::Greedy(_)) {
        return input("greedy_allocate needs a greedy rule");
    }
    rule.allocate(bids)
}

/// Pointwise average of rules over the same agents. Weights must sum to 1
/// within 1e-9; they are renormalized exactly.
pub fn convex_combine(rules: Vec<(f64, AllocationRule)>) -> Result<AllocationRule> {
    let Some(first) = rules.first() else {
        return input("convex combination needs at least one rule");
    };
    if rules.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
        return input("convex combination weights must be nonnegative");
    }
    let total: f64 = rules.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return input(format!("convex combination weights sum to {total}, expected 1"));
    }
    let tiebreak = first.1.tiebreak.clone();
    let rules: Vec<(f64, AllocationRule)> = rules.into_iter().map(|(w, r)| (w / total, r)).collect();
    let env = Environment::mixture(rules.iter().map(|(w, r)| (*w, r.env.clone())).collect())?;
    Ok(AllocationRule { env, kind: RuleKind::Mixture(rules), tiebreak })
}

/// Rank-by-bid with weights `alpha` written as a mixture of k-unit
/// highest-bids-win rules with weights `alpha_k - alpha_{k+1}`.
pub fn position_as_unit_mixture(n: usize, alpha: &[f64], tiebreak: TieBreak) -> Result<AllocationRule> {
    Environment::position(n, alpha.to_vec())?;
    if alpha.first().is_none_or(|a| (a - 1.0).abs() > 1e-12) {
        return input("unit-mixture form needs a top position weight of 1");
    }
    let mut parts = Vec::new();
    for k in 0..alpha.len() {
        let w = alpha[k] - alpha.get(k + 1).copied().unwrap_or(0.0);
        if w > 0.0 {
            let rule = AllocationRule::highest_bids_win(Environment::k_unit(n, k + 1)?, tiebreak.clone())?;
            parts.push((w, rule));
        }
    }
    convex_combine(parts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaymentFormat {
    /// Each agent pays bid times allocation.
    WinnerPaysBid,
    /// Each agent pays its bid.
    AllPay,
}

/// Allocation and payments for one bid profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub allocation: Allocation,
    pub payments: Vec<f64>,
}

impl Outcome {
    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }

    pub fn welfare(&self, values: &[f64]) -> f64 {
        self.allocation.iter().zip(values).map(|(x, v)| x * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    rule: AllocationRule,
    format: PaymentFormat,
    reserves: Vec<f64>,
}

impl Mechanism {
    pub fn new(rule: AllocationRule, format: PaymentFormat, reserves: Vec<f64>) -> Result<Self> {
        if reserves.len() != rule.n() {
            return input(format!("{} reserves for {} agents", reserves.len(), rule.n()));
        }
        if reserves.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return input("reserves must be finite and nonnegative");
        }
        Ok(Self { rule, format, reserves })
    }

    /// No reserves.
    pub fn plain(rule: AllocationRule, format: PaymentFormat) -> Self {
        let n = rule.n();
        Self { rule, format, reserves: vec![0.0; n] }
    }

    /// First-price single-item auction with index-order ties.
    pub fn first_price(n: usize) -> Result<Self> {
        let rule = AllocationRule::highest_bids_win(Environment::single_item(n)?, TieBreak::identity(n))?;
        Ok(Self::plain(rule, PaymentFormat::WinnerPaysBid))
    }

    pub fn rule(&self) -> &AllocationRule {
        &self.rule
    }

    pub fn format(&self) -> PaymentFormat {
        self.format
    }

    pub fn reserves(&self) -> &[f64] {
        &self.reserves
    }

    pub fn n(&self) -> usize {
        self.rule.n()
    }

    pub fn with_reserves(&self, reserves: Vec<f64>) -> Result<Self> {
        Self::new(self.rule.clone(), self.format, reserves)
    }

    pub fn with_format(&self, format: PaymentFormat) -> Self {
        Self { format, ..self.clone() }
    }

    pub fn run(&self, bids: &[f64]) -> Result<Outcome> {
        check_bids(bids, self.n())?;
        Ok(self.run_masked(bids, &vec![false; self.n()]))
    }

    /// Runs with some agents withdrawn: they get nothing and pay nothing.
    pub(crate) fn run_masked(&self, bids: &[f64], withdrawn: &[bool]) -> Outcome {
        let n = self.n();
        let eligible: Vec<bool> = (0..n).map(|i| !withdrawn[i] && bids[i] >= self.reserves[i]).collect();
        let effective: Vec<f64> = (0..n).map(|i| if eligible[i] { bids[i] } else { 0.0 }).collect();
        let allocation = self.rule.allocate_with(&effective, &eligible);
        let payments = (0..n)
            .map(|i| match self.format {
                PaymentFormat::WinnerPaysBid => effective[i] * allocation[i],
                PaymentFormat::AllPay => effective[i],
            })
            .collect();
        Outcome { allocation, payments }
    }

    /// Agent `i`'s allocation against its own bid with the others' bids
    /// fixed, reserves applied. Right-continuous at breakpoints.
    pub fn allocation_curve(&self, i: usize, bids: &[f64]) -> StepFunction {
        self.allocation_curve_masked(i, bids, &vec![false; self.n()], true)
    }

    /// Like [`Mechanism::allocation_curve`], but optionally ignoring agent
    /// `i`'s own reserve; withdrawn agents are removed from the competition.
    pub(crate) fn allocation_curve_masked(
        &self,
        i: usize,
        bids: &[f64],
        withdrawn: &[bool],
        own_reserve: bool,
    ) -> StepFunction {
        let n = self.n();
        let eligible: Vec<bool> = (0..n)
            .map(|j| j == i || (!withdrawn[j] && bids[j] >= self.reserves[j]))
            .collect();
        let effective: Vec<f64> = (0..n).map(|j| if eligible[j] { bids[j] } else { 0.0 }).collect();
        let curve = self.rule.own_bid_curve(i, &effective, &eligible);
        if own_reserve {
            curve.floored(self.reserves[i])
        } else {
            curve
        }
    }

    /// Infimum bid at which agent `i` reaches its full allocation level;
    /// `+inf` when it never does.
    pub fn threshold_bid(&self, i: usize, bids: &[f64]) -> f64 {
        let curve = self.allocation_curve(i, bids);
        let full = self.rule.max_level(i);
        if full <= 0.0 {
            return f64::INFINITY;
        }
        curve.inverse(full - 1e-12)
    }
}

/// Free-function form of [`Mechanism::run`].
pub fn run(mech: &Mechanism, bids: &[f64]) -> Result<Outcome> {
    mech.run(bids)
}

/// One agent's action in one component of a composed mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Bid(f64),
    Withdraw,
}

/// Mechanisms run side by side: each agent is served at its highest level
/// across components and pays every component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedMechanism {
    components: Vec<Mechanism>,
}

impl ComposedMechanism {
    pub fn components(&self) -> &[Mechanism] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.components[0].n()
    }

    /// `actions[i][j]` is agent `i`'s action in component `j`.
    pub fn run(&self, actions: &[Vec<Action>]) -> Result<Outcome> {
        let outcomes = self.component_outcomes(actions)?;
        let n = self.n();
        let mut allocation = vec![0.0f64; n];
        let mut payments = vec![0.0; n];
        for o in &outcomes {
            for i in 0..n {
                allocation[i] = allocation[i].max(o.allocation[i]);
                payments[i] += o.payments[i];
            }
        }
        Ok(Outcome { allocation, payments })
    }

    pub fn component_outcomes(&self, actions: &[Vec<Action>]) -> Result<Vec<Outcome>> {
        let n = self.n();
        let m = self.components.len();
        if actions.len() != n || actions.iter().any(|a| a.len() != m) {
            return input(format!("composed actions must be {n} agents by {m} components"));
        }
        (0..m)
            .map(|j| {
                let withdrawn: Vec<bool> = (0..n).map(|i| actions[i][j] == Action::Withdraw).collect();
                let bids: Vec<f64> = (0..n)
                    .map(|i| match actions[i][j] {
                        Action::Bid(b) => b,
                        Action::Withdraw => 0.0,
                    })
                    .collect();
                check_bids(&bids, n)?;
                Ok(self.components[j].run_masked(&bids, &withdrawn))
            })
            .collect()
    }
}

pub fn compose_simultaneous(mechs: Vec<Mechanism>) -> Result<ComposedMechanism> {
    let Some(first) = mechs.first() else {
        return input("composition needs at least one mechanism");
    };
    let n = first.n();
    if mechs.iter().any(|m| m.n() != n) {
        return input("composed mechanisms disagree on the number of agents");
    }
    Ok(ComposedMechanism { components: mechs })
}
