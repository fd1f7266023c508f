//! Enumeration of `L(Π f_i^{j_i}, s)` families with their R-fractions.

use std::collections::HashMap;
use std::fmt;

use log::warn;
use thiserror::Error;

use crate::ffpoly::ModFrac;
use crate::funclib::{FuncError, FuncExpr};
use crate::pseudolinear::PseudoLinearRep;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("factor list is empty")]
    EmptyFactors,
    #[error("factor {index}: min exponent {min} exceeds max {max}")]
    ExponentRange { index: usize, min: u32, max: u32 },
    #[error("min_s {0} exceeds max_s {1}")]
    ShiftRange(i64, i64),
}

#[derive(Clone, Debug)]
pub struct FactorSpec {
    pub expr: FuncExpr,
    pub min: u32,
    pub max: u32,
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub factors: Vec<FactorSpec>,
    pub min_s: i64,
    pub max_s: i64,
    pub max_score: u32,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.factors.is_empty() {
            return Err(GenError::EmptyFactors);
        }
        for (index, f) in self.factors.iter().enumerate() {
            if f.min > f.max {
                return Err(GenError::ExponentRange {
                    index,
                    min: f.min,
                    max: f.max,
                });
            }
        }
        if self.min_s > self.max_s {
            return Err(GenError::ShiftRange(self.min_s, self.max_s));
        }
        Ok(())
    }

    /// Admissible exponent tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut cur: Vec<u32> = self.factors.iter().map(|f| f.min).collect();
        if cur.iter().sum::<u32>() > self.max_score {
            return out;
        }
        loop {
            out.push(cur.clone());
            // Odometer increment, last factor fastest, skipping over-score tuples.
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.factors[i].max && cur.iter().sum::<u32>() < self.max_score {
                    cur[i] += 1;
                    break;
                }
                cur[i] = self.factors[i].min;
            }
        }
    }

    pub fn label(&self, tuple: &[u32]) -> FuncExpr {
        FuncExpr::product(
            self.factors
                .iter()
                .zip(tuple)
                .map(|(f, &j)| (f.expr.clone(), j)),
        )
    }
}

/// `L(f, s)` identified by its function and integer shift.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub expr: FuncExpr,
    pub shift: i64,
}

impl Label {
    pub fn zeta(s: i64) -> Label {
        Label {
            expr: FuncExpr::one(),
            shift: s,
        }
    }

    pub fn is_zeta(&self) -> bool {
        self.expr.is_one()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zeta() {
            write!(f, "ζ({})", self.shift)
        } else {
            write!(f, "L({}, {})", self.expr, self.shift)
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedEntry {
    pub label: Label,
    pub fraction: ModFrac,
    pub score: u32,
    /// Minimal convergent shift `s(f)` of the function.
    pub min_shift: i64,
}

#[derive(Clone, Debug)]
pub struct Skipped {
    pub expr: FuncExpr,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Generation {
    pub entries: Vec<GeneratedEntry>,
    pub skipped: Vec<Skipped>,
}

struct RepCache<'a> {
    cfg: &'a GenConfig,
    p: u32,
    leaves: Vec<Result<PseudoLinearRep, FuncError>>,
    memo: HashMap<Vec<u32>, Result<PseudoLinearRep, FuncError>>,
}

impl RepCache<'_> {
    /// Representation of the tuple, built from its predecessor with one
    /// factor fewer.
    fn get(&mut self, tuple: &[u32]) -> Result<PseudoLinearRep, FuncError> {
        if let Some(r) = self.memo.get(tuple) {
            return r.clone();
        }
        let r = match tuple.iter().rposition(|&j| j > 0) {
            None => Ok(FuncExpr::one().rep(self.p).expect("unit representation")),
            Some(i) => {
                let mut parent = tuple.to_vec();
                parent[i] -= 1;
                let leaf = self.leaves[i].clone();
                match (self.get(&parent), leaf) {
                    (Ok(_), Ok(b)) if parent.iter().all(|&j| j == 0) => Ok(b),
                    (Ok(a), Ok(b)) => Ok(a.product(&b).reduce()),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                }
            }
        };
        self.memo.insert(tuple.to_vec(), r.clone());
        r
    }
}

/// Every admissible `(tuple, shift)` entry; failures are skipped with a warning.
pub fn enumerate(cfg: &GenConfig, p: u32) -> Result<Generation, GenError> {
    cfg.validate()?;
    let mut cache = RepCache {
        cfg,
        p,
        leaves: cfg.factors.iter().map(|f| f.expr.rep(p)).collect(),
        memo: HashMap::new(),
    };
    let mut out = Generation::default();
    for tuple in cfg.tuples() {
        let expr = cache.cfg.label(&tuple);
        let score = tuple.iter().sum();
        let rep = match cache.get(&tuple) {
            Ok(r) => r,
            Err(e) => {
                warn!("skipping {expr}: {e}");
                out.skipped.push(Skipped {
                    expr,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let s0 = match rep.min_shift() {
            Ok(s) => s,
            Err(e) => {
                warn!("skipping {expr}: {e}");
                out.skipped.push(Skipped {
                    expr,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        for k in cfg.min_s..=cfg.max_s {
            let shift = s0 + k;
            match rep.rfraction_at(shift) {
                Ok(fraction) => out.entries.push(GeneratedEntry {
                    label: Label {
                        expr: expr.clone(),
                        shift,
                    },
                    fraction,
                    score,
                    min_shift: s0,
                }),
                Err(e) => {
                    warn!("skipping L({expr}, {shift}): {e}");
                    out.skipped.push(Skipped {
                        expr: expr.clone(),
                        reason: format!("shift {shift}: {e}"),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Recompute up to `count` evenly spaced entries from scratch; returns the
/// labels whose fractions disagree.
pub fn spot_check(entries: &[GeneratedEntry], p: u32, count: usize) -> Vec<Label> {
    if entries.is_empty() || count == 0 {
        return Vec::new();
    }
    let step = (entries.len() / count).max(1);
    entries
        .iter()
        .step_by(step)
        .take(count)
        .filter(|e| {
            e.label
                .expr
                .rep(p)
                .and_then(|r| Ok(r.rfraction_at(e.label.shift)?))
                .map(|f| f != e.fraction)
                .unwrap_or(true)
        })
        .map(|e| e.label.clone())
        .collect()
}
