//! Scenario configs: flat `key.path = value` lines in TOML syntax.
//!
//! Agents and items are numbered from 1 in configs and from 0 in the core
//! crate; the conversion happens here.

use std::collections::BTreeMap;
use std::fmt;

use auctionkit::{
    AllocationRule, CanonicalName, Environment, Mechanism, PaymentFormat, Priority, TieBreak, ValueDistribution,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_bid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Cells per continuous part when discretizing a canonical example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mech: Option<MechSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySpec>,
    /// Metric name to expectation literal such as `">= 0.5"`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Ce,
    Ie,
    Bounds,
    Regret,
    Compose,
    Allpay,
}

impl Analysis {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ce => "ce",
            Self::Ie => "ie",
            Self::Bounds => "bounds",
            Self::Regret => "regret",
            Self::Compose => "compose",
            Self::Allpay => "allpay",
        }
    }

    fn needs_profile(self) -> bool {
        !matches!(self, Self::Ce | Self::Allpay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKindName {
    SingleItem,
    KUnit,
    Position,
    Transversal,
    SingleMinded,
    PartialAllocation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Items each agent can be matched to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Vec<usize>>>,
    /// Bundle each agent wants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    #[default]
    HighestBidsWin,
    Greedy,
    GreedySqrt,
    RankByBid,
    PartialHbw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatName {
    #[default]
    WinnerPaysBid,
    AllPay,
}

impl From<FormatName> for PaymentFormat {
    fn from(f: FormatName) -> Self {
        match f {
            FormatName::WinnerPaysBid => PaymentFormat::WinnerPaysBid,
            FormatName::AllPay => PaymentFormat::AllPay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechSpec {
    #[serde(default)]
    pub rule: RuleName,
    #[serde(default)]
    pub format: FormatName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserves: Option<Vec<f64>>,
    /// Agents in decreasing tie priority.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiebreak: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    /// One law shared by every agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all: Option<String>,
    /// One law per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    /// `canonical:<name>`, `bne`, `br-dynamics` or `table`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    /// Per agent, `[mass, value, bid]` rows; agents are independent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<[f64; 3]>>>,
}

/// Numeric settings after defaults and command-line overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knobs {
    pub grid: usize,
    pub max_bid: f64,
    pub tol: f64,
    pub seed: u64,
    pub budget: usize,
    pub atoms: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Self { grid: 11, max_bid: 1.0, tol: 1e-9, seed: 0, budget: 1_000_000, atoms: 200 }
    }
}

/// Command-line values that replace config knobs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    Eq,
    Ge,
    Le,
}

/// A target for one summary metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub cmp: Cmp,
    pub target: f64,
    /// Overrides the scenario tolerance.
    pub tol: Option<f64>,
}

impl Expectation {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let (cmp, rest) = if let Some(r) = t.strip_prefix(">=") {
            (Cmp::Ge, r)
        } else if let Some(r) = t.strip_prefix("<=") {
            (Cmp::Le, r)
        } else if let Some(r) = t.strip_prefix('=') {
            (Cmp::Eq, r)
        } else {
            return Err(format!("expectation `{t}` must start with =, >= or <="));
        };
        let (target, tol) = match rest.split_once("+-") {
            Some((a, b)) => (a, Some(number(b)?)),
            None => (rest, None),
        };
        Ok(Self { cmp, target: number(target)?, tol })
    }

    pub fn check(&self, value: f64, tol: f64) -> bool {
        let tol = self.tol.unwrap_or(tol);
        match self.cmp {
            Cmp::Eq => (value - self.target).abs() <= tol,
            Cmp::Ge => value >= self.target - tol,
            Cmp::Le => value <= self.target + tol,
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.cmp {
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Le => "<=",
        };
        write!(f, "{op} {}", self.target)?;
        if let Some(t) = self.tol {
            write!(f, " +- {t}")?;
        }
        Ok(())
    }
}

/// Metrics a config may set expectations for.
pub const METRICS: &[&str] = &[
    "allpay_reduction",
    "bne_revenue",
    "ce_profiles",
    "composition",
    "dominance_gap",
    "dynamics_converged",
    "dynamics_updates",
    "eta",
    "mu",
    "mu_allpay",
    "optimal_revenue",
    "regret",
    "revenue",
    "revenue_bound",
    "revenue_exact",
    "welfare",
    "welfare_bound",
    "welfare_exact",
    "welfare_ratio",
];

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

/// Parses a distribution literal such as `uniform(0, 1)`.
pub fn parse_distribution(text: &str) -> Result<ValueDistribution, String> {
    let t = text.trim();
    let (name, args) = match t.split_once('(') {
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| format!("`{t}` is missing a closing parenthesis"))?;
            (name.trim(), inner)
        }
        None => (t, ""),
    };
    let nums = || -> Result<Vec<f64>, String> {
        if args.trim().is_empty() {
            return Ok(vec![]);
        }
        args.split(',').map(number).collect()
    };
    let arity = |xs: &[f64], k: usize| {
        if xs.len() == k {
            Ok(())
        } else {
            Err(format!("`{name}` takes {k} argument(s), got {}", xs.len()))
        }
    };
    let core = |r: auctionkit::Result<ValueDistribution>| r.map_err(|e| e.to_string());
    match name {
        "uniform" => {
            let xs = nums()?;
            arity(&xs, 2)?;
            core(ValueDistribution::uniform(xs[0], xs[1]))
        }
        "equal-revenue" => {
            let xs = nums()?;
            arity(&xs, 1)?;
            core(ValueDistribution::equal_revenue(xs[0]))
        }
        "equal-revenue-perturbed" => {
            let xs = nums()?;
            arity(&xs, 2)?;
            core(ValueDistribution::equal_revenue_perturbed(xs[0], xs[1]))
        }
        "degenerate" => {
            let xs = nums()?;
            arity(&xs, 1)?;
            core(ValueDistribution::degenerate(xs[0]))
        }
        "example-cor" => {
            arity(&nums()?, 0)?;
            Ok(ValueDistribution::ExampleCor)
        }
        // discrete(value:mass, ...)
        "discrete" => {
            let atoms = args
                .split(',')
                .map(|pair| {
                    let (v, p) = pair.split_once(':').ok_or_else(|| format!("discrete atom `{}` needs value:mass", pair.trim()))?;
                    Ok((number(v)?, number(p)?))
                })
                .collect::<Result<Vec<_>, String>>()?;
            core(ValueDistribution::discrete(atoms))
        }
        _ => Err(format!("unknown distribution `{name}`")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    None,
    Canonical(CanonicalName),
    Bne { points: usize },
    Dynamics { values: Vec<f64>, start: Option<Vec<f64>>, iters: usize },
    Table(Vec<Vec<(f64, f64, f64)>>),
}

/// A validated config, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub analyses: Vec<Analysis>,
    /// `None` for canonical strategies, which bring their own.
    pub mechanism: Option<Mechanism>,
    pub dists: Option<Vec<ValueDistribution>>,
    pub strategy: Strategy,
    pub knobs: Knobs,
    pub expect: BTreeMap<String, Expectation>,
    pub out: Option<String>,
}

/// 1-based line of the first assignment to `key`, when the source is known.
fn line_of(source: Option<&str>, key: &str) -> Option<usize> {
    let src = source?;
    src.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('=') || rest.starts_with('.'))
    })
    .map(|k| k + 1)
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config {
            line: e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1),
            key: None,
            message: e.message().to_string(),
        })
    }

    /// Flat `key.path = value` text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let table = toml::Table::try_from(self).expect("configs always serialize");
        let mut out = String::new();
        flatten("", &table, &mut out);
        out
    }

    /// Checks the config and builds the objects it describes. `source` is
    /// the config text, used for line numbers in errors.
    pub fn validate(&self, source: Option<&str>, overrides: Overrides) -> Result<Scenario, CliError> {
        let fail = |key: &str, message: String| CliError::Config { line: line_of(source, key), key: Some(key.to_string()), message };
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return Err(fail("name", "name must be nonempty and usable as a directory".into()));
        }
        let d = Knobs::default();
        let knobs = Knobs {
            grid: overrides.grid.or(self.grid).unwrap_or(d.grid),
            max_bid: self.max_bid.unwrap_or(d.max_bid),
            tol: overrides.tol.or(self.tol).unwrap_or(d.tol),
            seed: overrides.seed.or(self.seed).unwrap_or(d.seed),
            budget: overrides.budget.or(self.budget).unwrap_or(d.budget),
            atoms: self.atoms.unwrap_or(d.atoms),
        };
        if knobs.grid < 2 {
            return Err(fail("grid", format!("grid needs at least 2 points, got {}", knobs.grid)));
        }
        if !(knobs.max_bid.is_finite() && knobs.max_bid > 0.0) {
            return Err(fail("max-bid", format!("max-bid must be positive, got {}", knobs.max_bid)));
        }
        if !(knobs.tol.is_finite() && knobs.tol >= 0.0) {
            return Err(fail("tol", format!("tol must be nonnegative, got {}", knobs.tol)));
        }
        if knobs.budget == 0 || knobs.atoms == 0 {
            return Err(fail("budget", "budget and atoms must be positive".into()));
        }

        let mut expect = BTreeMap::new();
        for (metric, text) in &self.expect {
            let key = format!("expect.{metric}");
            if !METRICS.contains(&metric.as_str()) {
                return Err(fail(&key, format!("unknown metric `{metric}`; known: {}", METRICS.join(", "))));
            }
            expect.insert(metric.clone(), Expectation::parse(text).map_err(|m| fail(&key, m))?);
        }

        let strategy = match &self.strategy {
            None => Strategy::None,
            Some(s) => self.strategy_of(s, &fail)?,
        };
        let canonical = matches!(strategy, Strategy::Canonical(_));
        let mechanism = if canonical {
            if self.env.is_some() || self.mech.is_some() {
                return Err(fail("strategy.kind", "canonical strategies bring their own environment and mechanism".into()));
            }
            None
        } else {
            let env = self.env.as_ref().ok_or_else(|| fail("env", "missing env section".into()))?;
            let env = build_environment(env).map_err(|(k, m)| fail(&k, m))?;
            let mech = self.mech.clone().unwrap_or_default();
            Some(build_mechanism(env, &mech).map_err(|(k, m)| fail(&k, m))?)
        };
        let n = mechanism.as_ref().map(|m| m.n());

        let dists = match &self.dist {
            None => None,
            Some(d) => {
                let parsed: Vec<ValueDistribution> = match (&d.all, &d.agents) {
                    (Some(all), None) => {
                        let law = parse_distribution(all).map_err(|m| fail("dist.all", m))?;
                        vec![law; n.unwrap_or(1)]
                    }
                    (None, Some(each)) => each
                        .iter()
                        .map(|t| parse_distribution(t))
                        .collect::<Result<_, _>>()
                        .map_err(|m| fail("dist.agents", m))?,
                    _ => return Err(fail("dist", "set exactly one of dist.all and dist.agents".into())),
                };
                if let Some(n) = n {
                    if parsed.len() != n {
                        return Err(fail("dist.agents", format!("{} laws for {n} agents", parsed.len())));
                    }
                }
                Some(parsed)
            }
        };

        match (&strategy, n) {
            (Strategy::Bne { .. }, Some(n)) => {
                let m = mechanism.as_ref().expect("non-canonical");
                if !matches!(m.rule().env().kind(), auctionkit::EnvKind::SingleItem) || m.reserves().iter().any(|&r| r > 0.0) {
                    return Err(fail("strategy.kind", "bne needs a single-item environment without reserves".into()));
                }
                match &dists {
                    Some(ds) if ds.windows(2).all(|p| p[0] == p[1]) && n >= 2 => {}
                    _ => return Err(fail("dist", "bne needs one shared law (dist.all) and at least 2 agents".into())),
                }
            }
            (Strategy::Dynamics { values, start, .. }, Some(n)) => {
                if values.len() != n || start.as_ref().is_some_and(|s| s.len() != n) {
                    return Err(fail("strategy.values", format!("dynamics needs {n} values and start bids")));
                }
            }
            (Strategy::Table(rows), Some(n)) if rows.len() != n => {
                return Err(fail("strategy.rows", format!("{} row lists for {n} agents", rows.len())));
            }
            _ => {}
        }
        for a in &self.analyses {
            if a.needs_profile() && strategy == Strategy::None {
                return Err(fail("analyses", format!("analysis `{}` needs a strategy section", a.label())));
            }
        }
        Ok(Scenario {
            name: self.name.clone(),
            analyses: self.analyses.clone(),
            mechanism,
            dists,
            strategy,
            knobs,
            expect,
            out: self.out.clone(),
        })
    }

    fn strategy_of(&self, s: &StrategySpec, fail: &dyn Fn(&str, String) -> CliError) -> Result<Strategy, CliError> {
        if let Some(name) = s.kind.strip_prefix("canonical:") {
            let name = name.parse::<CanonicalName>().map_err(|e| fail("strategy.kind", e.to_string()))?;
            return Ok(Strategy::Canonical(name));
        }
        match s.kind.as_str() {
            "bne" => Ok(Strategy::Bne { points: s.points.unwrap_or(100) }),
            "br-dynamics" => Ok(Strategy::Dynamics {
                values: s.values.clone().ok_or_else(|| fail("strategy.values", "br-dynamics needs values".into()))?,
                start: s.start.clone(),
                iters: s.iters.unwrap_or(10_000),
            }),
            "table" => {
                let rows = s.rows.as_ref().ok_or_else(|| fail("strategy.rows", "table needs rows".into()))?;
                Ok(Strategy::Table(rows.iter().map(|r| r.iter().map(|&[p, v, b]| (p, v, b)).collect()).collect()))
            }
            other => Err(fail(
                "strategy.kind",
                format!("unknown strategy `{other}`; use canonical:<name>, bne, br-dynamics or table"),
            )),
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut String) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push_str(&format!("{key} = {other}\n")),
        }
    }
}

type Invalid = (String, String);

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T, Invalid> {
    v.clone().ok_or_else(|| (key.to_string(), format!("missing {key}")))
}

fn zero_based(lists: Vec<Vec<usize>>, bound: usize, key: &str) -> Result<Vec<Vec<usize>>, Invalid> {
    lists
        .into_iter()
        .map(|l| {
            l.into_iter()
                .map(|j| {
                    if (1..=bound).contains(&j) {
                        Ok(j - 1)
                    } else {
                        Err((key.to_string(), format!("item {j} outside 1..={bound}")))
                    }
                })
                .collect()
        })
        .collect()
}

pub fn build_environment(spec: &EnvSpec) -> Result<Environment, Invalid> {
    let core = |key: &str, r: auctionkit::Result<Environment>| r.map_err(|e| (key.to_string(), e.to_string()));
    match spec.kind {
        EnvKindName::SingleItem => core("env.agents", Environment::single_item(need(&spec.agents, "env.agents")?)),
        EnvKindName::KUnit => core("env.units", Environment::k_unit(need(&spec.agents, "env.agents")?, need(&spec.units, "env.units")?)),
        EnvKindName::Position => core("env.weights", Environment::position(need(&spec.agents, "env.agents")?, need(&spec.weights, "env.weights")?)),
        EnvKindName::Transversal => {
            let items = need(&spec.items, "env.items")?;
            let edges = zero_based(need(&spec.edges, "env.edges")?, items, "env.edges")?;
            core("env.edges", Environment::transversal(items, edges))
        }
        EnvKindName::SingleMinded => {
            let items = need(&spec.items, "env.items")?;
            let demands = zero_based(need(&spec.demands, "env.demands")?, items, "env.demands")?;
            core("env.demands", Environment::single_minded(items, demands))
        }
        EnvKindName::PartialAllocation => core("env.caps", Environment::partial_allocation(need(&spec.caps, "env.caps")?)),
    }
}

pub fn build_mechanism(env: Environment, spec: &MechSpec) -> Result<Mechanism, Invalid> {
    let n = env.n();
    let tiebreak = match &spec.tiebreak {
        None => TieBreak::identity(n),
        Some(order) => {
            let order = zero_based(vec![order.clone()], n, "mech.tiebreak")?.remove(0);
            TieBreak::new(order).map_err(|e| ("mech.tiebreak".to_string(), e.to_string()))?
        }
    };
    let rule = match spec.rule {
        RuleName::HighestBidsWin => AllocationRule::highest_bids_win(env, tiebreak),
        RuleName::Greedy => AllocationRule::greedy(env, Priority::Identity, tiebreak),
        RuleName::GreedySqrt => AllocationRule::greedy(env, Priority::SqrtBundle, tiebreak),
        RuleName::RankByBid => AllocationRule::rank_by_bid(env, tiebreak),
        RuleName::PartialHbw => AllocationRule::partial_allocation_hbw(env, tiebreak),
    }
    .map_err(|e| ("mech.rule".to_string(), e.to_string()))?;
    let reserves = spec.reserves.clone().unwrap_or_else(|| vec![0.0; n]);
    Mechanism::new(rule, spec.format.into(), reserves).map_err(|e| ("mech.reserves".to_string(), e.to_string()))
}
