//! Feasibility environments and exact winner determination.
//!
//! An [`Environment`] describes which allocation vectors are feasible. The
//! deterministic kinds (single item, k units, transversal matroids and
//! single-minded combinatorial auctions) only admit 0/1 allocations; position,
//! partial-allocation and mixture environments admit fractional levels.
//!
//! Agents and items are 0-indexed throughout the library.

use crate::error::{input, Error, Result};

/// Per-agent allocation levels in `[0, 1]`.
pub type Allocation = Vec<f64>;

/// Slack used by feasibility tests on floating-point allocations.
pub const FEAS_TOL: f64 = 1e-9;

/// Largest single-minded instance solved by exact enumeration.
pub const CA_MAX_AGENTS: usize = 24;

/// Largest vertex enumeration attempted for mixture feasibility.
const VERTEX_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    SingleItem,
    KUnit(usize),
    /// Agent `i` can be matched to any item in `edges[i]`.
    TransversalMatroid { items: usize, edges: Vec<Vec<usize>> },
    /// Agent `i` wants exactly the bundle `demands[i]`.
    SingleMindedCA { items: usize, demands: Vec<Vec<usize>> },
    /// Position weights, nonincreasing; positions past the list have weight 0.
    Position(Vec<f64>),
    /// Agent `i` can be served up to `caps[i]`, one agent at a time.
    PartialAllocation(Vec<f64>),
    Mixture(Vec<(f64, Environment)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    n: usize,
    kind: EnvKind,
}

impl Environment {
    pub fn single_item(n: usize) -> Result<Self> {
        if n == 0 {
            return input("environment needs at least one agent");
        }
        Ok(Self { n, kind: EnvKind::SingleItem })
    }

    pub fn k_unit(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return input(format!("k-unit environment needs 1 <= k <= n, got k={k}, n={n}"));
        }
        Ok(Self { n, kind: EnvKind::KUnit(k) })
    }

    pub fn transversal(items: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        if edges.is_empty() {
            return input("environment needs at least one agent");
        }
        let mut edges = edges;
        for (i, e) in edges.iter_mut().enumerate() {
            if let Some(&bad) = e.iter().find(|&&j| j >= items) {
                return input(format!("agent {i} lists item {bad} but there are {items} items"));
            }
            e.sort_unstable();
            e.dedup();
        }
        Ok(Self { n: edges.len(), kind: EnvKind::TransversalMatroid { items, edges } })
    }

    pub fn single_minded(items: usize, demands: Vec<Vec<usize>>) -> Result<Self> {
        if demands.is_empty() {
            return input("environment needs at least one agent");
        }
        if items == 0 || items > 64 {
            return input(format!("single-minded auctions support 1..=64 items, got {items}"));
        }
        let mut demands = demands;
        for (i, d) in demands.iter_mut().enumerate() {
            if d.is_empty() {
                return input(format!("agent {i} has an empty demand set"));
            }
            if let Some(&bad) = d.iter().find(|&&j| j >= items) {
                return input(format!("agent {i} demands item {bad} but there are {items} items"));
            }
            d.sort_unstable();
            d.dedup();
        }
        Ok(Self { n: demands.len(), kind: EnvKind::SingleMindedCA { items, demands } })
    }

    pub fn position(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return input("environment needs at least one agent");
        }
        if weights.len() > n {
            return input(format!("{} position weights for {n} agents", weights.len()));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return input("position weights must lie in [0, 1]");
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return input("position weights must be nonincreasing");
        }
        Ok(Self { n, kind: EnvKind::Position(weights) })
    }

    pub fn partial_allocation(caps: Vec<f64>) -> Result<Self> {
        if caps.is_empty() {
            return input("environment needs at least one agent");
        }
        if caps.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return input("allocation caps must lie in [0, 1]");
        }
        Ok(Self { n: caps.len(), kind: EnvKind::PartialAllocation(caps) })
    }

    pub fn mixture(components: Vec<(f64, Environment)>) -> Result<Self> {
        let Some(first) = components.first() else {
            return input("mixture needs at least one component");
        };
        let n = first.1.n;
        if components.iter().any(|(_, e)| e.n != n) {
            return input("mixture components disagree on the number of agents");
        }
        if components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return input("mixture weights must be nonnegative");
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return input(format!("mixture weights sum to {total}, expected 1"));
        }
        Ok(Self { n, kind: EnvKind::Mixture(components) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &EnvKind {
        &self.kind
    }

    /// True for kinds whose feasible allocations are 0/1 vectors.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self.kind,
            EnvKind::SingleItem
                | EnvKind::KUnit(_)
                | EnvKind::TransversalMatroid { .. }
                | EnvKind::SingleMindedCA { .. }
        )
    }

    /// Bundle size of agent `i`; 1 outside single-minded auctions.
    pub fn bundle_size(&self, i: usize) -> usize {
        match &self.kind {
            EnvKind::SingleMindedCA { demands, .. } => demands[i].len(),
            _ => 1,
        }
    }

    /// Equivalent position weights (length `n`) when the feasible set is the
    /// hull of a position environment: single item, k units, positions, and
    /// mixtures of those.
    pub fn position_profile(&self) -> Option<Vec<f64>> {
        let mut alpha = vec![0.0; self.n];
        match &self.kind {
            EnvKind::SingleItem => alpha[0] = 1.0,
            EnvKind::KUnit(k) => alpha[..*k].iter_mut().for_each(|a| *a = 1.0),
            EnvKind::Position(w) => alpha[..w.len()].copy_from_slice(w),
            EnvKind::Mixture(parts) => {
                for (lambda, env) in parts {
                    let sub = env.position_profile()?;
                    for (a, s) in alpha.iter_mut().zip(sub) {
                        *a += lambda * s;
                    }
                }
                // weights summing to 1 can round just above it
                alpha.iter_mut().for_each(|a| *a = a.min(1.0));
            }
            _ => return None,
        }
        Some(alpha)
    }

    /// Whether the agents in `set` can all be served together. Only meaningful
    /// for deterministic kinds; other kinds answer `false`.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        match &self.kind {
            EnvKind::SingleItem => set.len() <= 1,
            EnvKind::KUnit(k) => set.len() <= *k,
            EnvKind::TransversalMatroid { items, edges } => has_matching(*items, edges, set),
            EnvKind::SingleMindedCA { demands, .. } => {
                let mut used = 0u64;
                for &i in set {
                    let m = mask(&demands[i]);
                    if used & m != 0 {
                        return false;
                    }
                    used |= m;
                }
                true
            }
            _ => false,
        }
    }

    pub fn is_feasible(&self, y: &[f64]) -> Result<bool> {
        if y.len() != self.n {
            return input(format!("allocation has {} entries for {} agents", y.len(), self.n));
        }
        if y.iter().any(|v| !v.is_finite() || *v < -FEAS_TOL || *v > 1.0 + FEAS_TOL) {
            return Ok(false);
        }
        if self.is_deterministic() {
            if y.iter().any(|v| v.abs() > FEAS_TOL && (v - 1.0).abs() > FEAS_TOL) {
                return Ok(false);
            }
            let set: Vec<usize> = (0..self.n).filter(|&i| y[i] > 0.5).collect();
            return Ok(self.is_independent(&set));
        }
        if let Some(alpha) = self.position_profile() {
            return Ok(majorized(y, &alpha));
        }
        match &self.kind {
            EnvKind::PartialAllocation(caps) => {
                let mut load = 0.0;
                for (v, c) in y.iter().zip(caps) {
                    if *v > c + FEAS_TOL {
                        return Ok(false);
                    }
                    if *c > 0.0 {
                        load += v.max(0.0) / c;
                    }
                }
                Ok(load <= 1.0 + FEAS_TOL)
            }
            EnvKind::Mixture(parts) => {
                let mut lists = Vec::with_capacity(parts.len());
                let mut count = 1usize;
                for (_, env) in parts {
                    let v = env.vertices()?;
                    count = count.saturating_mul(v.len());
                    lists.push(v);
                }
                if count > VERTEX_BUDGET {
                    return Err(Error::Budget(format!(
                        "mixture feasibility needs {count} vertex combinations"
                    )));
                }
                let weights: Vec<f64> = parts.iter().map(|(w, _)| *w).collect();
                let mut acc = vec![0.0; self.n];
                Ok(dominated_by_combination(y, &weights, &lists, 0, &mut acc))
            }
            _ => unreachable!("position-type kinds handled above"),
        }
    }

    /// Maximal vertices of the feasible set: every feasible allocation is
    /// dominated by a convex combination of these.
    pub fn vertices(&self) -> Result<Vec<Allocation>> {
        let n = self.n;
        if self.is_deterministic() {
            if n > 20 {
                return Err(Error::Budget(format!("vertex enumeration over {n} agents")));
            }
            let mut out = Vec::new();
            for bits in 0u32..(1u32 << n) {
                let set: Vec<usize> = (0..n).filter(|i| bits >> i & 1 == 1).collect();
                if self.is_independent(&set) {
                    out.push((0..n).map(|i| f64::from(bits >> i & 1)).collect());
                }
            }
            return Ok(out);
        }
        match &self.kind {
            EnvKind::PartialAllocation(caps) => Ok((0..n)
                .map(|i| {
                    let mut y = vec![0.0; n];
                    y[i] = caps[i];
                    y
                })
                .collect()),
            EnvKind::Position(w) => {
                let slots = w.iter().take_while(|a| **a > 0.0).count();
                let mut out = Vec::new();
                let mut y = vec![0.0; n];
                assign_positions(w, slots, 0, &mut vec![false; n], &mut y, &mut out)?;
                Ok(out)
            }
            EnvKind::Mixture(parts) => {
                let mut acc: Vec<Allocation> = vec![vec![0.0; n]];
                for (lambda, env) in parts {
                    let v = env.vertices()?;
                    if acc.len().saturating_mul(v.len()) > VERTEX_BUDGET {
                        return Err(Error::Budget("mixture vertex enumeration".into()));
                    }
                    acc = acc
                        .iter()
                        .flat_map(|a| {
                            v.iter().map(move |b| {
                                a.iter().zip(b).map(|(x, y)| x + lambda * y).collect()
                            })
                        })
                        .collect();
                }
                Ok(acc)
            }
            _ => unreachable!(),
        }
    }

    /// A feasible allocation maximizing `sum w_i y_i`, with its value.
    ///
    /// Only agents with positive weight are served. Among optimal 0/1 sets the
    /// lexicographically smallest index set wins; greedy kinds scan agents by
    /// decreasing weight with lower indices first.
    pub fn max_weight_feasible(&self, w: &[f64]) -> Result<(Allocation, f64)> {
        if w.len() != self.n {
            return input(format!("{} weights for {} agents", w.len(), self.n));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return input(format!("weights must be finite and nonnegative, got {bad}"));
        }
        let n = self.n;
        let mut y = vec![0.0; n];
        match &self.kind {
            EnvKind::SingleItem | EnvKind::PartialAllocation(_) => {
                let cap = |i: usize| match &self.kind {
                    EnvKind::PartialAllocation(c) => c[i],
                    _ => 1.0,
                };
                let mut best: Option<usize> = None;
                for i in 0..n {
                    let s = w[i] * cap(i);
                    if s > 0.0 && best.is_none_or(|b| s > w[b] * cap(b)) {
                        best = Some(i);
                    }
                }
                if let Some(b) = best {
                    y[b] = cap(b);
                }
            }
            EnvKind::KUnit(_) | EnvKind::TransversalMatroid { .. } => {
                let mut chosen = Vec::new();
                for i in weight_order(w) {
                    if w[i] <= 0.0 {
                        break;
                    }
                    chosen.push(i);
                    if !self.is_independent(&chosen) {
                        chosen.pop();
                    }
                }
                for i in chosen {
                    y[i] = 1.0;
                }
            }
            EnvKind::SingleMindedCA { demands, .. } => {
                let masks: Vec<u64> = demands.iter().map(|d| mask(d)).collect();
                let order: Vec<usize> = (0..n).collect();
                for i in best_disjoint_set(&masks, w, &order, false)? {
                    y[i] = 1.0;
                }
            }
            EnvKind::Position(alpha) => {
                for (slot, i) in weight_order(w).into_iter().enumerate() {
                    if slot >= alpha.len() || w[i] <= 0.0 || alpha[slot] <= 0.0 {
                        break;
                    }
                    y[i] = alpha[slot];
                }
            }
            EnvKind::Mixture(parts) => {
                for (lambda, env) in parts {
                    let (sub, _) = env.max_weight_feasible(w)?;
                    for (a, b) in y.iter_mut().zip(sub) {
                        *a += lambda * b;
                    }
                }
            }
        }
        let total = y.iter().zip(w).map(|(a, b)| a * b).sum();
        Ok((y, total))
    }

    /// Welfare of the best feasible allocation for value profile `v`.
    pub fn optimal_welfare(&self, v: &[f64]) -> Result<f64> {
        Ok(self.max_weight_feasible(v)?.1)
    }
}

/// Agents sorted by decreasing weight, lower index first among equals.
fn weight_order(w: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    order
}

pub(crate) fn mask(items: &[usize]) -> u64 {
    items.iter().fold(0u64, |m, &j| m | 1u64 << j)
}

/// Exact maximum-weight set of pairwise disjoint bundles.
///
/// Agents are scanned in `order`; among sets of equal weight the one whose
/// indicator vector (read in `order`) is lexicographically largest wins. With
/// `include_zero` false, zero-weight agents are never selected.
pub(crate) fn best_disjoint_set(
    masks: &[u64],
    w: &[f64],
    order: &[usize],
    include_zero: bool,
) -> Result<Vec<usize>> {
    let cand: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| include_zero || w[i] > 0.0)
        .collect();
    if cand.len() > CA_MAX_AGENTS {
        return Err(Error::Budget(format!(
            "winner determination over {} bidders exceeds the limit of {CA_MAX_AGENTS}",
            cand.len()
        )));
    }
    // suffix[k] bounds the weight still available from cand[k..]
    let mut suffix = vec![0.0; cand.len() + 1];
    for k in (0..cand.len()).rev() {
        suffix[k] = suffix[k + 1] + w[cand[k]];
    }
    struct Search<'a> {
        masks: &'a [u64],
        w: &'a [f64],
        cand: &'a [usize],
        suffix: &'a [f64],
        best: f64,
        best_set: Vec<usize>,
        cur: Vec<usize>,
    }
    fn dfs(s: &mut Search, k: usize, used: u64, total: f64) {
        if k == s.cand.len() {
            if total > s.best + 1e-12 * (1.0 + s.best.abs()) || s.best < 0.0 {
                s.best = total;
                s.best_set = s.cur.clone();
            }
            return;
        }
        if s.best >= 0.0 && total + s.suffix[k] <= s.best + 1e-12 * (1.0 + s.best.abs()) {
            return;
        }
        let i = s.cand[k];
        if used & s.masks[i] == 0 {
            s.cur.push(i);
            dfs(s, k + 1, used | s.masks[i], total + s.w[i]);
            s.cur.pop();
        }
        dfs(s, k + 1, used, total);
    }
    let mut s = Search {
        masks,
        w,
        cand: &cand,
        suffix: &suffix,
        best: -1.0,
        best_set: Vec::new(),
        cur: Vec::new(),
    };
    dfs(&mut s, 0, 0, 0.0);
    let mut set = s.best_set;
    set.sort_unstable();
    Ok(set)
}

/// Bipartite matching test: can every agent in `set` get a distinct item?
fn has_matching(items: usize, edges: &[Vec<usize>], set: &[usize]) -> bool {
    fn augment(a: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &edges[a] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|b| augment(b, edges, seen, owner)) {
                owner[j] = Some(a);
                return true;
            }
        }
        false
    }
    if set.len() > items {
        return false;
    }
    let mut owner = vec![None; items];
    set.iter().all(|&a| augment(a, edges, &mut vec![false; items], &mut owner))
}

/// Majorization test: sorted prefix sums of `y` never exceed those of `alpha`.
fn majorized(y: &[f64], alpha: &[f64]) -> bool {
    let mut sorted: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let (mut sy, mut sa) = (0.0, 0.0);
    for (k, v) in sorted.iter().enumerate() {
        sy += v;
        sa += alpha.get(k).copied().unwrap_or(0.0);
        if sy > sa + FEAS_TOL {
            return false;
        }
    }
    true
}

fn assign_positions(
    alpha: &[f64],
    slots: usize,
    slot: usize,
    taken: &mut Vec<bool>,
    y: &mut Allocation,
    out: &mut Vec<Allocation>,
) -> Result<()> {
    let free = taken.iter().filter(|t| !**t).count();
    if slot == slots || free == 0 {
        out.push(y.clone());
        return Ok(());
    }
    if out.len() > VERTEX_BUDGET {
        return Err(Error::Budget("position vertex enumeration".into()));
    }
    for i in 0..taken.len() {
        if !taken[i] {
            taken[i] = true;
            y[i] = alpha[slot];
            assign_positions(alpha, slots, slot + 1, taken, y, out)?;
            y[i] = 0.0;
            taken[i] = false;
        }
    }
    Ok(())
}

fn dominated_by_combination(
    y: &[f64],
    weights: &[f64],
    lists: &[Vec<Allocation>],
    j: usize,
    acc: &mut Vec<f64>,
) -> bool {
    if j == lists.len() {
        return y.iter().zip(acc.iter()).all(|(a, b)| *a <= b + FEAS_TOL);
    }
    // remaining components can add at most their weight to any coordinate
    let rest: f64 = weights[j..].iter().sum();
    if y.iter().zip(acc.iter()).any(|(a, b)| *a > b + rest + FEAS_TOL) {
        return false;
    }
    for v in &lists[j] {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += weights[j] * b;
        }
        let ok = dominated_by_combination(y, weights, lists, j + 1, acc);
        for (a, b) in acc.iter_mut().zip(v) {
            *a -= weights[j] * b;
        }
        if ok {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ca3() -> Environment {
        Environment::single_minded(3, vec![vec![0], vec![1], vec![2], vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn feasibility_examples() {
        let single = Environment::single_item(3).unwrap();
        assert!(single.is_feasible(&[1.0, 0.0, 0.0]).unwrap());
        assert!(!single.is_feasible(&[1.0, 1.0, 0.0]).unwrap());
        assert!(ca3().is_feasible(&[1.0, 1.0, 1.0, 0.0]).unwrap());
        assert!(!ca3().is_feasible(&[1.0, 0.0, 0.0, 1.0]).unwrap());
        assert!(single.is_feasible(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn max_weight_examples() {
        let single = Environment::single_item(3).unwrap();
        let (y, t) = single.max_weight_feasible(&[0.5, 0.8, 0.3]).unwrap();
        assert_eq!(y, vec![0.0, 1.0, 0.0]);
        assert_eq!(t, 0.8);

        let (y, t) = ca3().max_weight_feasible(&[1.0; 4]).unwrap();
        assert_eq!(y, vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(t, 3.0);

        let pos = Environment::position(3, vec![1.0, 0.5]).unwrap();
        assert_eq!(pos.max_weight_feasible(&[2.0, 1.0, 3.0]).unwrap().1, 4.0);

        assert!(single.max_weight_feasible(&[1.0, -1.0, 0.0]).is_err());
        assert!(single.max_weight_feasible(&[1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn optimal_welfare_examples() {
        assert_eq!(Environment::single_item(3).unwrap().optimal_welfare(&[1.0; 3]).unwrap(), 1.0);
        let partial = Environment::partial_allocation(vec![0.4, 0.4, 1.0]).unwrap();
        assert_eq!(partial.optimal_welfare(&[1.0; 3]).unwrap(), 1.0);
        let k2 = Environment::k_unit(3, 2).unwrap();
        assert_eq!(k2.optimal_welfare(&[3.0, 1.0, 2.0]).unwrap(), 5.0);
    }

    #[test]
    fn ties_pick_smallest_index_set() {
        let single = Environment::single_item(3).unwrap();
        assert_eq!(single.max_weight_feasible(&[1.0, 1.0, 0.0]).unwrap().0, vec![1.0, 0.0, 0.0]);
        assert_eq!(single.max_weight_feasible(&[0.0; 3]).unwrap().0, vec![0.0; 3]);
        // {0,2} and {1} both weigh 2
        let ca = Environment::single_minded(2, vec![vec![0], vec![0, 1], vec![1]]).unwrap();
        assert_eq!(ca.max_weight_feasible(&[1.0, 2.0, 1.0]).unwrap().0, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn position_majorization() {
        let pos = Environment::position(3, vec![1.0, 0.5]).unwrap();
        assert!(pos.is_feasible(&[0.75, 0.75, 0.0]).unwrap());
        assert!(pos.is_feasible(&[0.5, 0.5, 0.5]).unwrap());
        assert!(!pos.is_feasible(&[0.6, 0.5, 0.5]).unwrap());
        assert!(!pos.is_feasible(&[0.0, 0.0, 1.1]).unwrap());
    }

    #[test]
    fn mixture_of_units_is_a_position_environment() {
        let mix = Environment::mixture(vec![
            (0.5, Environment::k_unit(3, 1).unwrap()),
            (0.5, Environment::k_unit(3, 2).unwrap()),
        ])
        .unwrap();
        assert_eq!(mix.position_profile().unwrap(), vec![1.0, 0.5, 0.0]);
        assert!(mix.is_feasible(&[1.0, 0.0, 0.5]).unwrap());
        assert!(!mix.is_feasible(&[1.0, 0.5, 0.5]).unwrap());
    }

    #[test]
    fn mixture_vertex_fallback() {
        let mixed_n = Environment::mixture(vec![
            (0.5, Environment::partial_allocation(vec![0.4, 0.4, 1.0]).unwrap()),
            (0.5, ca3()),
        ]);
        assert!(mixed_n.is_err());
        let mix = Environment::mixture(vec![
            (0.5, Environment::partial_allocation(vec![0.4, 0.4, 1.0]).unwrap()),
            (0.5, Environment::transversal(1, vec![vec![0], vec![0], vec![0]]).unwrap()),
        ])
        .unwrap();
        assert!(mix.is_feasible(&[0.2, 0.5, 0.0]).unwrap());
        assert!(mix.is_feasible(&[0.0, 0.0, 1.0]).unwrap());
        assert!(!mix.is_feasible(&[0.3, 0.5, 0.0]).unwrap());
    }

    #[test]
    fn transversal_matching() {
        let env = Environment::transversal(2, vec![vec![0], vec![0], vec![0, 1]]).unwrap();
        assert!(env.is_independent(&[0, 2]));
        assert!(!env.is_independent(&[0, 1]));
        let (y, t) = env.max_weight_feasible(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
        assert_eq!(t, 4.0);
    }

    #[test]
    fn ca_budget_error() {
        let demands = (0..30).map(|i| vec![i % 3]).collect();
        let env = Environment::single_minded(3, demands).unwrap();
        assert!(matches!(env.max_weight_feasible(&[1.0; 30]), Err(Error::Budget(_))));
    }

    #[test]
    fn construction_errors() {
        assert!(Environment::k_unit(3, 4).is_err());
        assert!(Environment::position(3, vec![0.5, 1.0]).is_err());
        assert!(Environment::single_minded(3, vec![vec![]]).is_err());
        assert!(Environment::single_minded(3, vec![vec![3]]).is_err());
        assert!(Environment::mixture(vec![(0.7, Environment::single_item(2).unwrap())]).is_err());
    }
}
