//! Value distributions, virtual values, monopoly reserves, the optimal
//! revenue benchmark, and discrete joint tables of values and bids.

use std::f64::consts::E;

use rand::Rng;

use crate::env::Environment;
use crate::error::{input, Error, Result};
use crate::mech::Mechanism;

/// Grid size used by the numeric regularity check.
pub const REGULARITY_GRID: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ValueDistribution {
    Uniform { lo: f64, hi: f64 },
    /// `F(v) = 1 - v^-(1+eps)` on `[1, h)` with the remaining mass at `h`.
    /// With `eps = 0` the revenue curve is flat above 1.
    EqualRevenue { h: f64, eps: f64 },
    /// Atom `1/e` at 0, then `F(v) = 1/(e(1-v))` up to `1 - 1/e`.
    ExampleCor,
    Degenerate(f64),
    /// Atoms sorted by value, merged, masses summing to 1.
    Discrete(Vec<(f64, f64)>),
}

impl ValueDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return input(format!("uniform({lo},{hi}) needs 0 <= lo < hi"));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn equal_revenue(h: f64) -> Result<Self> {
        Self::equal_revenue_perturbed(h, 0.0)
    }

    pub fn equal_revenue_perturbed(h: f64, eps: f64) -> Result<Self> {
        if !(h.is_finite() && h > 1.0) {
            return input(format!("equal-revenue cap must exceed 1, got {h}"));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return input(format!("equal-revenue perturbation must be >= 0, got {eps}"));
        }
        Ok(Self::EqualRevenue { h, eps })
    }

    pub fn degenerate(v: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 0.0) {
            return input(format!("point mass needs a finite value >= 0, got {v}"));
        }
        Ok(Self::Degenerate(v))
    }

    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return input("discrete distribution needs at least one atom");
        }
        for &(v, p) in &atoms {
            if !(v.is_finite() && v >= 0.0) {
                return input(format!("atom value {v} must be finite and >= 0"));
            }
            if !(p.is_finite() && p > 0.0) {
                return input(format!("atom mass {p} must be positive"));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return input(format!("atom masses sum to {total}, expected 1"));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Ok(Self::Discrete(merged))
    }

    /// Smallest and largest support points.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { lo, hi } => (*lo, *hi),
            Self::EqualRevenue { h, .. } => (1.0, *h),
            Self::ExampleCor => (0.0, 1.0 - 1.0 / E),
            Self::Degenerate(v) => (*v, *v),
            Self::Discrete(a) => (a[0].0, a[a.len() - 1].0),
        }
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Uniform { .. } => vec![],
            Self::EqualRevenue { h, eps } => vec![(*h, h.powf(-(1.0 + eps)))],
            Self::ExampleCor => vec![(0.0, 1.0 / E)],
            Self::Degenerate(v) => vec![(*v, 1.0)],
            Self::Discrete(a) => a.clone(),
        }
    }

    pub fn is_atomless(&self) -> bool {
        matches!(self, Self::Uniform { .. })
    }

    /// Quantile ranges `(q_lo, q_hi)` carried by the atomless part.
    fn continuous_ranges(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Uniform { .. } => vec![(0.0, 1.0)],
            Self::EqualRevenue { h, eps } => vec![(0.0, 1.0 - h.powf(-(1.0 + eps)))],
            Self::ExampleCor => vec![(1.0 / E, 1.0)],
            _ => vec![],
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::EqualRevenue { h, eps } => {
                if v < 1.0 {
                    0.0
                } else if v >= *h {
                    1.0
                } else {
                    1.0 - v.powf(-(1.0 + eps))
                }
            }
            Self::ExampleCor => {
                if v < 0.0 {
                    0.0
                } else if v >= 1.0 - 1.0 / E {
                    1.0
                } else {
                    1.0 / (E * (1.0 - v))
                }
            }
            Self::Degenerate(a) => f64::from(u8::from(v >= *a)),
            Self::Discrete(atoms) => atoms.iter().take_while(|a| a.0 <= v).map(|a| a.1).sum::<f64>().min(1.0),
        }
    }

    /// Density of the atomless part; `None` at atoms and off the support.
    pub fn pdf(&self, v: f64) -> Option<f64> {
        match self {
            Self::Uniform { lo, hi } => (*lo <= v && v <= *hi).then(|| 1.0 / (hi - lo)),
            Self::EqualRevenue { h, eps } => (1.0 <= v && v < *h).then(|| (1.0 + eps) * v.powf(-(2.0 + eps))),
            Self::ExampleCor => (0.0 < v && v <= 1.0 - 1.0 / E).then(|| 1.0 / (E * (1.0 - v).powi(2))),
            _ => None,
        }
    }

    /// `inf { v : F(v) >= q }` for `q` in `(0, 1]`; the lower support end at 0.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Self::Uniform { lo, hi } => lo + q * (hi - lo),
            Self::EqualRevenue { h, eps } => {
                let top = 1.0 - h.powf(-(1.0 + eps));
                if q > top {
                    *h
                } else {
                    (1.0 - q).powf(-1.0 / (1.0 + eps)).min(*h)
                }
            }
            Self::ExampleCor => {
                if q <= 1.0 / E {
                    0.0
                } else {
                    1.0 - 1.0 / (E * q)
                }
            }
            Self::Degenerate(v) => *v,
            Self::Discrete(atoms) => {
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if acc >= q - 1e-15 {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }

    /// `E[V^k ; a < V < b]` over the atomless part, for `k` in `0..=2`.
    pub fn partial_moment(&self, k: u32, a: f64, b: f64) -> f64 {
        assert!(k <= 2, "moments up to order 2");
        let (lo, hi) = match self {
            Self::Uniform { lo, hi } => (*lo, *hi),
            Self::EqualRevenue { h, .. } => (1.0, *h),
            Self::ExampleCor => (0.0, 1.0 - 1.0 / E),
            _ => return 0.0,
        };
        let a = a.max(lo);
        let b = b.min(hi);
        if b <= a {
            return 0.0;
        }
        let kf = f64::from(k);
        match self {
            Self::Uniform { lo, hi } => (b.powf(kf + 1.0) - a.powf(kf + 1.0)) / ((kf + 1.0) * (hi - lo)),
            Self::EqualRevenue { eps, .. } => {
                let p = kf - 1.0 - eps;
                if p.abs() < 1e-15 {
                    (1.0 + eps) * (b.ln() - a.ln())
                } else {
                    (1.0 + eps) * (b.powf(p) - a.powf(p)) / p
                }
            }
            Self::ExampleCor => {
                let g = |v: f64| {
                    let u = 1.0 - v;
                    match k {
                        0 => 1.0 / u,
                        1 => 1.0 / u + u.ln(),
                        _ => 1.0 / u + 2.0 * u.ln() - u,
                    }
                };
                (g(b) - g(a)) / E
            }
            _ => unreachable!(),
        }
    }

    pub fn mean(&self) -> f64 {
        let (lo, hi) = self.support();
        self.atoms().iter().map(|(v, p)| v * p).sum::<f64>() + self.partial_moment(1, lo, hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(1.0 - u)
    }

    /// Myerson virtual value `v - (1 - F(v)) / f(v)`.
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        if let Some((_, p)) = self.atoms().iter().find(|a| a.0 == v) {
            return Err(Error::UndefinedVirtualValue {
                at: v,
                reason: format!("atom of mass {p}"),
            });
        }
        let Some(f) = self.pdf(v).filter(|f| *f > 0.0) else {
            return Err(Error::UndefinedVirtualValue { at: v, reason: "zero density".into() });
        };
        Ok(match self {
            Self::Uniform { hi, .. } => 2.0 * v - hi,
            Self::EqualRevenue { eps, .. } => eps * v / (1.0 + eps),
            Self::ExampleCor => 1.0 - E * (1.0 - v).powi(2),
            _ => v - (1.0 - self.cdf(v)) / f,
        })
    }

    /// Checks that the virtual value is nondecreasing across the atomless
    /// part on a fine grid.
    pub fn check_regular(&self) -> Result<()> {
        for (qa, qb) in self.continuous_ranges() {
            let lo = self.quantile(qa).max(self.support().0);
            let hi = self.quantile(qb).min(self.support().1);
            let mut prev: Option<(f64, f64)> = None;
            for k in 0..=REGULARITY_GRID {
                let v = lo + (hi - lo) * k as f64 / REGULARITY_GRID as f64;
                let Ok(phi) = self.virtual_value(v) else { continue };
                if let Some((pv, pphi)) = prev {
                    if phi < pphi - 1e-9 {
                        return Err(Error::NotRegular { lo: pv, hi: v, phi_lo: pphi, phi_hi: phi });
                    }
                }
                prev = Some((v, phi));
            }
        }
        Ok(())
    }

    /// Infimum value with nonnegative virtual value. Point masses and
    /// discrete laws use the best posted price instead.
    pub fn monopoly_reserve(&self) -> Result<f64> {
        match self {
            Self::Degenerate(v) => return Ok(*v),
            Self::Discrete(atoms) => {
                let mut best = (f64::NEG_INFINITY, 0.0);
                let mut above = 1.0;
                for &(v, p) in atoms {
                    let rev = v * above;
                    if rev > best.0 + 1e-15 {
                        best = (rev, v);
                    }
                    above -= p;
                }
                return Ok(best.1);
            }
            Self::EqualRevenue { eps, .. } if *eps == 0.0 => {
                return Err(Error::AmbiguousReserve(
                    "every price in [1, h) earns the same revenue; use a positive perturbation".into(),
                ));
            }
            _ => {}
        }
        self.check_regular()?;
        let (mut lo, mut hi) = match self {
            Self::ExampleCor => (0.0, 1.0 - 1.0 / E),
            _ => self.support(),
        };
        let phi = |v: f64| self.virtual_value(v).unwrap_or(f64::NAN);
        let start = if matches!(self, Self::ExampleCor) { 1e-300 } else { lo };
        if phi(start) >= 0.0 {
            return Ok(lo);
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Quantile-spaced discretization: atoms are kept; each atomless range
    /// is split into `grid_size` equal-mass cells placed at their quantile
    /// midpoints.
    pub fn discretize(&self, grid_size: usize) -> Result<ValueDistribution> {
        if grid_size < 2 {
            return input("discretization needs at least 2 cells");
        }
        let mut atoms = self.atoms();
        for (qa, qb) in self.continuous_ranges() {
            let width = (qb - qa) / grid_size as f64;
            for k in 0..grid_size {
                atoms.push((self.quantile(qa + (k as f64 + 0.5) * width), width));
            }
        }
        ValueDistribution::discrete(atoms)
    }

    /// Revenue from a take-it-or-leave-it price selling with probability `s`.
    fn revenue_curve(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        s * self.quantile(1.0 - s)
    }

    /// Cells in sell-probability space with their mass and average virtual
    /// value. Atoms form their own cells carrying their value.
    fn virtual_cells(&self, cells: usize) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.atoms().iter().map(|&(v, p)| (p, v)).collect();
        for (qa, qb) in self.continuous_ranges() {
            let (sa, sb) = (1.0 - qb, 1.0 - qa);
            let width = (sb - sa) / cells as f64;
            for k in 0..cells {
                let lo = sa + k as f64 * width;
                let hi = if k + 1 == cells { sb } else { lo + width };
                let r_lo = self.revenue_curve(lo.max(1e-300));
                let r_hi = self.revenue_curve(hi);
                out.push((hi - lo, (r_hi - r_lo) / (hi - lo)));
            }
        }
        out
    }
}

/// Expected revenue of the optimal mechanism for independent regular
/// values: the expected maximum virtual surplus, by product quadrature over
/// `cells` quantile cells per atomless range.
pub fn myerson_optimal_revenue(
    env: &Environment,
    dists: &[ValueDistribution],
    cells: usize,
    budget: usize,
) -> Result<f64> {
    if dists.len() != env.n() {
        return input(format!("{} distributions for {} agents", dists.len(), env.n()));
    }
    if cells == 0 {
        return input("quadrature needs at least one cell");
    }
    for d in dists {
        if !matches!(d, ValueDistribution::Degenerate(_) | ValueDistribution::Discrete(_)) {
            d.check_regular()?;
        }
    }
    let tables: Vec<Vec<(f64, f64)>> = dists
        .iter()
        .map(|d| match d {
            // posted-price logic: a point mass or discrete law is
            // represented by its revenue curve over atoms
            ValueDistribution::Degenerate(_) | ValueDistribution::Discrete(_) => discrete_virtual_cells(d),
            _ => d.virtual_cells(cells),
        })
        .collect();
    let size = tables.iter().try_fold(1usize, |acc, t| acc.checked_mul(t.len()));
    match size {
        Some(s) if s <= budget => {}
        _ => {
            return Err(Error::Budget(format!(
                "optimal-revenue quadrature needs more than {budget} cells"
            )))
        }
    }
    let n = dists.len();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut mass = 1.0;
        let mut w = vec![0.0; n];
        for i in 0..n {
            let (p, phi) = tables[i][idx[i]];
            mass *= p;
            w[i] = phi.max(0.0);
        }
        if mass > 0.0 {
            total += mass * env.max_weight_feasible(&w)?.1;
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < tables[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Virtual values of a discrete law: the slope of its revenue curve across
/// each atom's sell-probability range.
fn discrete_virtual_cells(d: &ValueDistribution) -> Vec<(f64, f64)> {
    let atoms = d.atoms();
    let mut out = Vec::with_capacity(atoms.len());
    let mut s = 0.0;
    let mut prev_rev = 0.0;
    for &(v, p) in atoms.iter().rev() {
        s += p;
        let rev = v * s;
        out.push((p, (rev - prev_rev) / p));
        prev_rev = rev;
    }
    out
}

/// One row of a joint table: a value profile, an action profile, and its
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub weight: f64,
    pub values: Vec<f64>,
    pub bids: Vec<f64>,
}

/// A discrete joint distribution over values and bids.
#[derive(Debug, Clone, PartialEq)]
pub struct JointScenario {
    n: usize,
    scenarios: Vec<Scenario>,
}

impl JointScenario {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        let Some(first) = scenarios.first() else {
            return input("joint table needs at least one scenario");
        };
        let n = first.values.len();
        for s in &scenarios {
            if s.values.len() != n || s.bids.len() != n {
                return input("every scenario needs one value and one bid per agent");
            }
            if !(s.weight.is_finite() && s.weight > 0.0) {
                return input(format!("scenario weight {} must be positive", s.weight));
            }
            if s.values.iter().chain(&s.bids).any(|x| !x.is_finite() || *x < 0.0) {
                return input("values and bids must be finite and nonnegative");
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return input(format!("scenario weights sum to {total}, expected 1"));
        }
        let scenarios = scenarios
            .into_iter()
            .map(|s| Scenario { weight: s.weight / total, ..s })
            .collect();
        Ok(Self { n, scenarios })
    }

    /// A single scenario with probability 1.
    pub fn degenerate(values: Vec<f64>, bids: Vec<f64>) -> Result<Self> {
        Self::new(vec![Scenario { weight: 1.0, values, bids }])
    }

    /// Independent agents: `tables[i]` lists `(mass, value, bid)` rows.
    pub fn product(tables: &[Vec<(f64, f64, f64)>], budget: usize) -> Result<Self> {
        let size = tables.iter().try_fold(1usize, |acc, t| acc.checked_mul(t.len()));
        match size {
            Some(0) => return input("every agent needs at least one row"),
            Some(s) if s <= budget => {}
            _ => return Err(Error::Budget(format!("product table exceeds {budget} scenarios"))),
        }
        let mut rows = vec![Scenario { weight: 1.0, values: vec![], bids: vec![] }];
        for t in tables {
            rows = rows
                .into_iter()
                .flat_map(|s| {
                    t.iter().map(move |&(p, v, b)| {
                        let mut next = s.clone();
                        next.weight *= p;
                        next.values.push(v);
                        next.bids.push(b);
                        next
                    })
                })
                .collect();
        }
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    /// Distinct values of agent `i`, ascending.
    pub fn value_support(&self, i: usize) -> Vec<f64> {
        let mut vals: Vec<f64> = self.scenarios.iter().map(|s| s.values[i]).collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.dedup();
        vals
    }

    /// Probability that agent `i` has value `v`.
    pub fn value_mass(&self, i: usize, v: f64) -> f64 {
        self.scenarios.iter().filter(|s| s.values[i] == v).map(|s| s.weight).sum()
    }

    /// Scenarios where agent `i` has value `v`, with conditional weights.
    pub fn conditional(&self, i: usize, v: f64) -> Result<Vec<(f64, &Scenario)>> {
        let mass = self.value_mass(i, v);
        if mass <= 0.0 {
            return input(format!("value {v} is not in agent {}'s support", i + 1));
        }
        Ok(self
            .scenarios
            .iter()
            .filter(|s| s.values[i] == v)
            .map(|s| (s.weight / mass, s))
            .collect())
    }

    /// Whether the value profile is distributed as the product of its
    /// marginals.
    pub fn independent_values(&self) -> bool {
        let mut joint: Vec<(Vec<f64>, f64)> = Vec::new();
        for s in &self.scenarios {
            match joint.iter_mut().find(|(v, _)| *v == s.values) {
                Some(e) => e.1 += s.weight,
                None => joint.push((s.values.clone(), s.weight)),
            }
        }
        let supports: Vec<Vec<f64>> = (0..self.n).map(|i| self.value_support(i)).collect();
        let count = supports.iter().map(Vec::len).product::<usize>();
        if count != joint.len() {
            return false;
        }
        joint.iter().all(|(v, p)| {
            let prod: f64 = v.iter().enumerate().map(|(i, &x)| self.value_mass(i, x)).product();
            (prod - p).abs() <= 1e-12
        })
    }

    /// Whether each agent's bid is independent of the others' values given
    /// its own value.
    pub fn no_bidder_communication(&self) -> bool {
        (0..self.n).all(|i| {
            self.value_support(i).into_iter().all(|v| {
                let rows: Vec<&Scenario> = self.scenarios.iter().filter(|s| s.values[i] == v).collect();
                let mass: f64 = rows.iter().map(|s| s.weight).sum();
                let mut groups: Vec<(Vec<f64>, f64)> = Vec::new();
                for s in &rows {
                    let others: Vec<f64> =
                        s.values.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
                    match groups.iter_mut().find(|(o, _)| *o == others) {
                        Some(g) => g.1 += s.weight,
                        None => groups.push((others, s.weight)),
                    }
                }
                let mut bids: Vec<f64> = rows.iter().map(|s| s.bids[i]).collect();
                bids.sort_by(|a, b| a.total_cmp(b));
                bids.dedup();
                groups.iter().all(|(others, gmass)| {
                    bids.iter().all(|&b| {
                        let joint: f64 = rows
                            .iter()
                            .filter(|s| s.bids[i] == b && other_values(s, i) == *others)
                            .map(|s| s.weight)
                            .sum();
                        let bmass: f64 = rows.iter().filter(|s| s.bids[i] == b).map(|s| s.weight).sum();
                        (joint * mass - bmass * gmass).abs() <= 1e-12
                    })
                })
            })
        })
    }

    /// Whether bids clear each reserve exactly when values do.
    pub fn respects_reserves(&self, reserves: &[f64]) -> bool {
        self.scenarios.iter().all(|s| {
            (0..self.n).all(|i| (s.values[i] >= reserves[i]) == (s.bids[i] >= reserves[i]))
        })
    }

    pub fn expected_welfare(&self, mech: &Mechanism) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.scenarios {
            total += s.weight * mech.run(&s.bids)?.welfare(&s.values);
        }
        Ok(total)
    }

    pub fn expected_revenue(&self, mech: &Mechanism) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.scenarios {
            total += s.weight * mech.run(&s.bids)?.revenue();
        }
        Ok(total)
    }

    pub fn expected_optimal_welfare(&self, env: &Environment) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.scenarios {
            total += s.weight * env.optimal_welfare(&s.values)?;
        }
        Ok(total)
    }
}

fn other_values(s: &Scenario, i: usize) -> Vec<f64> {
    s.values.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn virtual_values() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        assert!((u.virtual_value(0.7).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(u.virtual_value(0.5).unwrap(), 0.0);
        let er = ValueDistribution::equal_revenue(100.0).unwrap();
        assert_eq!(er.virtual_value(3.0).unwrap(), 0.0);
        assert!(matches!(er.virtual_value(100.0), Err(Error::UndefinedVirtualValue { .. })));
        let cor = ValueDistribution::ExampleCor;
        assert!(cor.virtual_value(0.0).is_err());
        // oracle: v - (1 - F) / f
        let v = 0.3;
        let direct = v - (1.0 - cor.cdf(v)) / cor.pdf(v).unwrap();
        assert!((cor.virtual_value(v).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn monopoly_reserves() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        assert!((u.monopoly_reserve().unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(ValueDistribution::degenerate(1.0).unwrap().monopoly_reserve().unwrap(), 1.0);
        let er = ValueDistribution::equal_revenue(100.0).unwrap();
        assert!(matches!(er.monopoly_reserve(), Err(Error::AmbiguousReserve(_))));
        let perturbed = ValueDistribution::equal_revenue_perturbed(100.0, 1e-3).unwrap();
        assert_eq!(perturbed.monopoly_reserve().unwrap(), 1.0);
        let r = ValueDistribution::ExampleCor.monopoly_reserve().unwrap();
        assert!((r - (1.0 - (-0.5f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn optimal_revenue() {
        let one = Environment::single_item(1).unwrap();
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap();
        let rev = myerson_optimal_revenue(&one, &[u], 64, 1_000_000).unwrap();
        assert!((rev - 0.25).abs() < 1e-12);
        let rev = myerson_optimal_revenue(&one, &[ValueDistribution::degenerate(1.0).unwrap()], 8, 100).unwrap();
        assert_eq!(rev, 1.0);
        let two = Environment::single_item(2).unwrap();
        let dists = [ValueDistribution::degenerate(1.0).unwrap(), ValueDistribution::equal_revenue(100.0).unwrap()];
        let rev = myerson_optimal_revenue(&two, &dists, 16, 1_000).unwrap();
        assert!((rev - 1.99).abs() < 1e-9);
        assert!(matches!(myerson_optimal_revenue(&two, &dists, 16, 4), Err(Error::Budget(_))));
    }

    #[test]
    fn discretization() {
        let u = ValueDistribution::uniform(0.0, 1.0).unwrap().discretize(4).unwrap();
        assert_eq!(u, ValueDistribution::Discrete(vec![(0.125, 0.25), (0.375, 0.25), (0.625, 0.25), (0.875, 0.25)]));
        let d = ValueDistribution::degenerate(1.0).unwrap();
        assert_eq!(d.discretize(7).unwrap().atoms(), vec![(1.0, 1.0)]);
        let cor = ValueDistribution::ExampleCor.discretize(100).unwrap();
        assert_eq!(cor.atoms()[0], (0.0, 1.0 / E));
        assert!((cor.mean() - ValueDistribution::ExampleCor.mean()).abs() < 1e-3);
    }

    #[test]
    fn moments() {
        let cor = ValueDistribution::ExampleCor;
        assert!((cor.partial_moment(0, 0.0, 1.0) - (1.0 - 1.0 / E)).abs() < 1e-12);
        assert!((cor.mean() - (E - 2.0) / E).abs() < 1e-12);
        let er = ValueDistribution::equal_revenue(100.0).unwrap();
        assert!((er.mean() - (1.0 + 100f64.ln())).abs() < 1e-12);
        // midpoint-rule oracle for the second moment
        let n = 200_000;
        let (a, b) = (0.1, 0.5);
        let h = (b - a) / n as f64;
        let quad: f64 = (0..n).map(|k| a + (k as f64 + 0.5) * h).map(|v| v * v * cor.pdf(v).unwrap() * h).sum();
        assert!((cor.partial_moment(2, a, b) - quad).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in [
            ValueDistribution::uniform(0.0, 2.0).unwrap(),
            ValueDistribution::equal_revenue(50.0).unwrap(),
            ValueDistribution::ExampleCor,
        ] {
            let (lo, hi) = d.support();
            for k in 1..100 {
                let v = lo + (hi - lo) * k as f64 / 100.0;
                if d.pdf(v).is_some() {
                    assert!((d.quantile(d.cdf(v)) - v).abs() < 1e-9, "{d:?} at {v}");
                }
            }
        }
    }

    #[test]
    fn sampler_matches_cdf() {
        // Kolmogorov-Smirnov 99% band at 1e5 draws
        let band = 1.628 / (1e5f64).sqrt();
        for d in [
            ValueDistribution::uniform(0.0, 1.0).unwrap(),
            ValueDistribution::equal_revenue(100.0).unwrap(),
            ValueDistribution::ExampleCor,
            ValueDistribution::discrete(vec![(0.2, 0.3), (0.9, 0.7)]).unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
            xs.sort_by(|a, b| a.total_cmp(b));
            let n = xs.len() as f64;
            let mut worst: f64 = 0.0;
            let mut k = 0;
            while k < xs.len() {
                let v = xs[k];
                let mut j = k;
                while j < xs.len() && xs[j] == v {
                    j += 1;
                }
                worst = worst.max((j as f64 / n - d.cdf(v)).abs());
                worst = worst.max((k as f64 / n - d.cdf(v) + mass_at(&d, v)).abs());
                k = j;
            }
            assert!(worst < band, "{d:?}: {worst}");
        }
    }

    fn mass_at(d: &ValueDistribution, v: f64) -> f64 {
        d.atoms().iter().filter(|a| a.0 == v).map(|a| a.1).sum()
    }

    #[test]
    fn joint_flags() {
        let product = JointScenario::product(
            &[vec![(0.5, 0.0, 0.0), (0.5, 1.0, 0.5)], vec![(0.25, 0.2, 0.1), (0.75, 0.8, 0.4)]],
            100,
        )
        .unwrap();
        assert!(product.independent_values());
        assert!(product.no_bidder_communication());
        let correlated = JointScenario::new(vec![
            Scenario { weight: 0.5, values: vec![0.0, 0.0, 1.0], bids: vec![0.0, 0.0, 0.0] },
            Scenario { weight: 0.5, values: vec![0.3, 0.3, 1.0], bids: vec![0.3, 0.3, 0.0] },
        ])
        .unwrap();
        assert!(!correlated.independent_values());
        assert!(correlated.respects_reserves(&[0.0, 0.0, 0.0]));
        assert!(!correlated.respects_reserves(&[0.0, 0.0, 0.5]));
        assert!(correlated.conditional(0, 0.7).is_err());
    }
}
