//! Built-in scenarios reproducing the acceptance checks. Each is a config
//! text, addressable on the command line as `builtin:<name>`.

pub const BUILTINS: &[(&str, &str)] = &[
    (
        "fpa-ce",
        r#"name = "fpa-ce"
analyses = ["ce", "allpay"]
grid = 11
env.kind = "single-item"
env.agents = 3
expect.mu = "= 1 +- 1e-12"
"#,
    ),
    (
        "ca-witness",
        r#"name = "ca-witness"
analyses = ["ce"]
grid = 2
env.kind = "single-minded"
env.items = 3
env.demands = [[1], [2], [3], [1, 2, 3]]
expect.mu = "= 0.3333333333333333 +- 1e-12"
"#,
    ),
    (
        "ca-greedy",
        r#"name = "ca-greedy"
analyses = ["ce"]
grid = 6
env.kind = "single-minded"
env.items = 3
env.demands = [[1], [2], [3], [1, 2, 3]]
mech.rule = "greedy-sqrt"
expect.mu = ">= 0.5773502691896257"
"#,
    ),
    (
        "position-ce",
        r#"name = "position-ce"
analyses = ["ce"]
grid = 11
env.kind = "position"
env.agents = 3
env.weights = [1.0, 0.5]
mech.rule = "rank-by-bid"
expect.mu = "= 1"
"#,
    ),
    (
        "cor-welfare",
        r#"name = "cor-welfare"
analyses = ["ce", "ie", "bounds", "regret"]
atoms = 2000
grid = 101
strategy.kind = "canonical:cor-welfare"
expect.welfare = "= 0.6321205588285577 +- 1e-3"
expect.welfare_exact = "= 0.6321205588285577 +- 1e-6"
# the example is tight, so discretization moves both sides of the bound
expect.welfare_bound = ">= 0 +- 1e-4"
expect.regret = "<= 1e-9"
"#,
    ),
    (
        "rev-half",
        r#"name = "rev-half"
analyses = ["bounds", "regret"]
atoms = 256
grid = 101
max-bid = 100.0
strategy.kind = "canonical:rev-half"
expect.revenue = "= 1 +- 1e-9"
expect.optimal_revenue = "= 1.99 +- 1e-9"
"#,
    ),
    (
        "partial-alloc",
        r#"name = "partial-alloc"
analyses = ["ce", "bounds"]
atoms = 2000
grid = 21
budget = 200
strategy.kind = "canonical:partial-alloc"
expect.mu = "= 1 +- 1e-9"
expect.welfare = "= 0.6321205588285577 +- 1e-3"
"#,
    ),
    (
        "bne-uniform",
        r#"name = "bne-uniform"
analyses = ["regret", "bounds"]
grid = 101
env.kind = "single-item"
env.agents = 2
dist.all = "uniform(0, 1)"
strategy.kind = "bne"
strategy.points = 100
expect.regret = "<= 0.02"
expect.bne_revenue = "= 0.3333333333333333 +- 1e-3"
"#,
    ),
    (
        "allpay-bne",
        r#"name = "allpay-bne"
analyses = ["regret"]
grid = 101
env.kind = "single-item"
env.agents = 2
mech.format = "all-pay"
dist.all = "uniform(0, 1)"
strategy.kind = "bne"
strategy.points = 100
expect.regret = "<= 0.02"
expect.bne_revenue = "= 0.3333333333333333 +- 1e-3"
"#,
    ),
    (
        "dynamics",
        r#"name = "dynamics"
analyses = ["regret"]
grid = 101
env.kind = "single-item"
env.agents = 2
strategy.kind = "br-dynamics"
strategy.values = [1.0, 0.5]
expect.regret = "<= 0.011"
expect.welfare_ratio = "= 1"
"#,
    ),
    (
        "composition",
        r#"name = "composition"
analyses = ["compose"]
env.kind = "single-item"
env.agents = 2
strategy.kind = "table"
strategy.rows = [[[0.5, 0.4, 0.2], [0.5, 0.9, 0.5]], [[0.3, 0.2, 0.1], [0.7, 0.8, 0.45]]]
expect.composition = ">= 1"
"#,
    ),
];

/// Built-ins that instantiate the canonical examples.
pub const CANONICAL: &[&str] = &["cor-welfare", "rev-half", "partial-alloc"];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}
