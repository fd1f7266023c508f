//! Relation templates loaded from JSON.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use super::{Relation, Term};
use crate::funclib::{parse_expr, parse_int_expr, Bindings, FuncExpr, IntExpr, LeafKind, PatExpr};
use crate::generator::Label;

const KNOWN_JSON: &str = include_str!("../../catalog/known.json");
const CONJECTURES_JSON: &str = include_str!("../../catalog/conjectures.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("catalog JSON error at line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("template {id}: {msg}")]
    Template { id: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    const TOKENS: [(&'static str, CmpOp); 8] = [
        (">=", CmpOp::Ge),
        ("<=", CmpOp::Le),
        ("!=", CmpOp::Ne),
        ("==", CmpOp::Eq),
        ("≥", CmpOp::Ge),
        ("≤", CmpOp::Le),
        (">", CmpOp::Gt),
        ("<", CmpOp::Lt),
    ];

    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Side condition on template parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    Parity {
        expr: IntExpr,
        odd: bool,
    },
    Cmp {
        lhs: IntExpr,
        op: CmpOp,
        rhs: IntExpr,
    },
}

impl Condition {
    pub fn parse(s: &str) -> Result<Condition, String> {
        let s = s.trim();
        for (word, odd) in [("odd", true), ("even", false)] {
            if let Some(head) = s.strip_suffix(word) {
                let expr = parse_int_expr(head.trim()).map_err(|e| e.to_string())?;
                return Ok(Condition::Parity { expr, odd });
            }
        }
        for (tok, op) in CmpOp::TOKENS {
            if let Some((l, r)) = s.split_once(tok) {
                let lhs = parse_int_expr(l.trim()).map_err(|e| e.to_string())?;
                let rhs = parse_int_expr(r.trim()).map_err(|e| e.to_string())?;
                return Ok(Condition::Cmp { lhs, op, rhs });
            }
        }
        Err(format!("unrecognized condition `{s}`"))
    }

    /// `None` when a symbol is unbound.
    pub fn holds(&self, b: &Bindings) -> Option<bool> {
        Some(match self {
            Condition::Parity { expr, odd } => (expr.eval(b)?.rem_euclid(2) == 1) == *odd,
            Condition::Cmp { lhs, op, rhs } => op.holds(lhs.eval(b)?, rhs.eval(b)?),
        })
    }

    fn symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Condition::Parity { expr, .. } => expr.symbols(out),
            Condition::Cmp { lhs, rhs, .. } => {
                lhs.symbols(out);
                rhs.symbols(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateTerm {
    pub expr: PatExpr,
    pub shift: IntExpr,
    pub exp: IntExpr,
}

impl TemplateTerm {
    pub fn is_zeta(&self) -> bool {
        matches!(self.expr, PatExpr::Leaf(LeafKind::One, _))
    }
}

/// Parameterized identity `Π L(f_i, s_i)^{e_i} = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationTemplate {
    pub id: String,
    pub terms: Vec<TemplateTerm>,
    pub conditions: Vec<Condition>,
    /// Sample functions for each wildcard, used when enumerating instances.
    pub wildcards: BTreeMap<String, Vec<FuncExpr>>,
}

/// A template evaluated at concrete parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub bindings: Bindings,
    pub wild: BTreeMap<String, FuncExpr>,
    pub relation: Relation,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExp {
    Int(i64),
    Expr(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    expr: String,
    shift: RawExp,
    exp: RawExp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    id: String,
    terms: Vec<RawTerm>,
    #[serde(default)]
    conditions: Vec<String>,
    #[serde(default)]
    wildcards: BTreeMap<String, Vec<String>>,
}

fn int_expr(raw: &RawExp) -> Result<IntExpr, String> {
    match raw {
        RawExp::Int(n) => Ok(IntExpr::Num(*n)),
        RawExp::Expr(s) => parse_int_expr(s).map_err(|e| e.to_string()),
    }
}

impl RelationTemplate {
    fn from_raw(raw: RawTemplate) -> Result<Self, CatalogError> {
        let id = raw.id;
        let err = |msg: String| CatalogError::Template {
            id: id.clone(),
            msg,
        };
        let mut terms = Vec::new();
        for t in &raw.terms {
            terms.push(TemplateTerm {
                expr: parse_expr(&t.expr).map_err(|e| err(format!("`{}`: {e}", t.expr)))?,
                shift: int_expr(&t.shift).map_err(&err)?,
                exp: int_expr(&t.exp).map_err(&err)?,
            });
        }
        if !terms.iter().any(|t| !t.is_zeta()) {
            return Err(err("needs at least one non-ζ term".into()));
        }
        let conditions = raw
            .conditions
            .iter()
            .map(|c| Condition::parse(c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(&err)?;
        let mut wildcards = BTreeMap::new();
        for (w, samples) in raw.wildcards {
            let mut out = Vec::new();
            for s in samples {
                let f = parse_expr(&s)
                    .map_err(|e| e.to_string())
                    .and_then(|p| p.instantiate(&Bindings::new()))
                    .map_err(|e| err(format!("wildcard sample `{s}`: {e}")))?;
                out.push(f);
            }
            wildcards.insert(w, out);
        }
        let t = RelationTemplate {
            id: id.clone(),
            terms,
            conditions,
            wildcards,
        };
        t.validate().map_err(err)?;
        Ok(t)
    }

    /// Every symbol must be determined by an expression or shift slot.
    fn validate(&self) -> Result<(), String> {
        let mut slots = BTreeSet::new();
        let mut all = BTreeSet::new();
        let mut wild = BTreeSet::new();
        for t in &self.terms {
            t.expr.symbols(&mut slots);
            t.shift.symbols(&mut slots);
            t.exp.symbols(&mut all);
            t.expr.wildcards(&mut wild);
        }
        for c in &self.conditions {
            c.symbols(&mut all);
        }
        if let Some(s) = all.difference(&slots).next() {
            return Err(format!(
                "symbol `{s}` only occurs in exponents or conditions"
            ));
        }
        if let Some(w) = self.wildcards.keys().find(|w| !wild.contains(*w)) {
            return Err(format!("samples given for unused wildcard ${w}"));
        }
        Ok(())
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.terms {
            t.expr.symbols(&mut out);
            t.shift.symbols(&mut out);
            t.exp.symbols(&mut out);
        }
        out
    }

    pub fn conditions_hold(&self, b: &Bindings) -> bool {
        self.conditions.iter().all(|c| c.holds(b) == Some(true))
    }

    /// Concrete relation at the given parameters, or why there is none.
    pub fn instantiate(
        &self,
        b: &Bindings,
        wild: &BTreeMap<String, FuncExpr>,
    ) -> Result<Relation, String> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let expr = t.expr.instantiate_with(b, wild)?;
            let shift = t
                .shift
                .eval(b)
                .ok_or_else(|| format!("cannot evaluate `{}`", t.shift))?;
            let exp = t
                .exp
                .eval(b)
                .ok_or_else(|| format!("cannot evaluate `{}`", t.exp))?;
            terms.push(Term {
                label: Label { expr, shift },
                exp,
            });
        }
        Relation::from_terms(terms).ok_or_else(|| "all terms cancel".to_string())
    }

    /// The `count` smallest parameter points (by coordinate sum, then
    /// lexicographically) that satisfy the conditions and where every term
    /// converges; symbols range over `0..=bound`.
    pub fn instances(&self, count: usize, bound: i64, p: u32) -> Vec<Instance> {
        let syms: Vec<String> = self.symbols().into_iter().collect();
        let wild_names: Vec<&String> = self.wildcards.keys().collect();
        let mut points: Vec<Vec<i64>> = vec![vec![]];
        for _ in &syms {
            points = points
                .into_iter()
                .flat_map(|pt| {
                    (0..=bound).map(move |v| {
                        let mut q = pt.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points.sort_by_key(|pt| (pt.iter().sum::<i64>(), pt.clone()));
        let mut wild_choices: Vec<BTreeMap<String, FuncExpr>> = vec![BTreeMap::new()];
        for w in &wild_names {
            wild_choices = wild_choices
                .into_iter()
                .flat_map(|m| {
                    self.wildcards[*w].iter().map(move |f| {
                        let mut m = m.clone();
                        m.insert((*w).clone(), f.clone());
                        m
                    })
                })
                .collect();
        }
        let mut shifts: HashMap<FuncExpr, Option<i64>> = HashMap::new();
        let mut out = Vec::new();
        for pt in points {
            let b: Bindings = syms.iter().cloned().zip(pt).collect();
            if !self.conditions_hold(&b) {
                continue;
            }
            for wild in &wild_choices {
                let Ok(relation) = self.instantiate(&b, wild) else {
                    continue;
                };
                if !relation.has_function_term() || !relation.convergent_with(p, &mut shifts) {
                    continue;
                }
                out.push(Instance {
                    bindings: b.clone(),
                    wild: wild.clone(),
                    relation,
                });
                if out.len() == count {
                    return out;
                }
            }
        }
        out
    }
}

impl fmt::Display for RelationTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.id)
    }
}

/// Parse a JSON list of templates.
pub fn parse_catalog(text: &str) -> Result<Vec<RelationTemplate>, CatalogError> {
    let raw: Vec<RawTemplate> = serde_json::from_str(text).map_err(|e| CatalogError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    raw.into_iter().map(RelationTemplate::from_raw).collect()
}

/// Classical identities shipped as the default catalog.
pub fn known() -> Vec<RelationTemplate> {
    parse_catalog(KNOWN_JSON).expect("embedded catalog is valid")
}

/// Conjectured identities, opt-in.
pub fn conjectures() -> Vec<RelationTemplate> {
    parse_catalog(CONJECTURES_JSON).expect("embedded catalog is valid")
}
