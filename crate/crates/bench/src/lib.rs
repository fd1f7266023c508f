//! Workloads shared by the benchmarks.

use bellsieve::funclib::{parse_expr, FuncExpr};
use bellsieve::generator::{FactorSpec, GenConfig};
use bellsieve::pipeline::RunConfig;

fn expr(s: &str) -> FuncExpr {
    parse_expr(s)
        .expect("valid expression")
        .instantiate(&Default::default())
        .expect("concrete expression")
}

fn factor(e: &str, min: u32, max: u32) -> FactorSpec {
    FactorSpec {
        expr: expr(e),
        min,
        max,
    }
}

/// `λ τ^i σ'^j` with `i <= 1`, `j <= 2` and three shifts.
pub fn small() -> RunConfig {
    RunConfig::new(GenConfig {
        factors: vec![
            factor("lambda", 1, 1),
            factor("tau", 0, 1),
            factor("sigmaprime:1", 0, 2),
        ],
        min_s: 0,
        max_s: 2,
        max_score: 4,
    })
}

/// Eight factors up to score 3, a few hundred R-fractions.
pub fn medium() -> RunConfig {
    RunConfig::new(GenConfig {
        factors: [
            "lambda",
            "mu",
            "tau",
            "sigma:1",
            "phi",
            "jordan:2",
            "sigmaprime:1",
            "theta",
        ]
        .iter()
        .map(|e| factor(e, 0, 2))
        .collect(),
        min_s: 0,
        max_s: 2,
        max_score: 3,
    })
}
