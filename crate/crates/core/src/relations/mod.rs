//! Labeled multiplicative relations: construction from kernel vectors,
//! classification against templates, and rendering.

mod catalog;
mod classify;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::funclib::FuncExpr;
use crate::generator::Label;
use crate::sieve::KernelVector;

pub use catalog::{
    conjectures, known, parse_catalog, CatalogError, CmpOp, Condition, Instance, RelationTemplate,
    TemplateTerm,
};
pub use classify::{classify, Match};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("nothing to render")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub label: Label,
    pub exp: i64,
}

/// `Π L(f_i, s_i)^{e_i} = 1`, primitive, in canonical order and sign.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    terms: Vec<Term>,
}

/// Classification outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Class {
    Known(Match),
    Unknown,
}

impl Class {
    pub fn tag(&self) -> &str {
        match self {
            Class::Known(m) => &m.id,
            Class::Unknown => "!!!!",
        }
    }
}

fn sort_key(t: &Term) -> (std::cmp::Reverse<u32>, i64, String) {
    (
        std::cmp::Reverse(t.label.expr.score()),
        t.label.shift,
        t.label.expr.shell(),
    )
}

/// Lead term, numerator factors and denominator factors.
type Sides<'a> = (&'a Term, Vec<(&'a Label, i64)>, Vec<(&'a Label, i64)>);

impl Relation {
    /// Merge equal labels, drop cancelled terms, make primitive and fix the
    /// sign so that the leading term is positive. `None` if nothing is left.
    pub fn from_terms(terms: Vec<Term>) -> Option<Relation> {
        let mut merged: BTreeMap<(FuncExpr, i64), (Label, i64)> = BTreeMap::new();
        for t in terms {
            let key = (t.label.expr.canonical(), t.label.shift);
            merged.entry(key).or_insert((t.label, 0)).1 += t.exp;
        }
        let mut terms: Vec<Term> = merged
            .into_values()
            .filter(|(_, e)| *e != 0)
            .map(|(label, exp)| Term { label, exp })
            .collect();
        if terms.is_empty() {
            return None;
        }
        terms.sort_by_key(sort_key);
        let mut g = terms.iter().fold(0i64, |g, t| g.gcd(&t.exp));
        if terms[0].exp < 0 {
            g = -g;
        }
        for t in &mut terms {
            t.exp /= g;
        }
        Some(Relation { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Canonical `(function, shift) -> exponent` map used for comparisons.
    pub fn key(&self) -> BTreeMap<(FuncExpr, i64), i64> {
        self.terms
            .iter()
            .map(|t| ((t.label.expr.canonical(), t.label.shift), t.exp))
            .collect()
    }

    pub fn has_function_term(&self) -> bool {
        self.terms.iter().any(|t| !t.label.is_zeta())
    }

    /// Relations among ζ values only.
    pub fn is_trivial(&self) -> bool {
        !self.has_function_term()
    }

    /// Every term converges: ζ shifts are at least 2 and each function's
    /// shift is at least its minimal convergent shift.
    pub fn convergent_with(&self, p: u32, cache: &mut HashMap<FuncExpr, Option<i64>>) -> bool {
        self.terms.iter().all(|t| {
            if t.label.is_zeta() {
                return t.label.shift >= 2;
            }
            let s0 = *cache
                .entry(t.label.expr.canonical())
                .or_insert_with(|| t.label.expr.rep(p).ok().and_then(|r| r.min_shift().ok()));
            s0.is_some_and(|s0| t.label.shift >= s0)
        })
    }

    pub fn convergent(&self, p: u32) -> bool {
        self.convergent_with(p, &mut HashMap::new())
    }

    pub fn score(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.label.expr.score())
            .max()
            .unwrap_or(0)
    }

    /// Leading term on the left; everything else moved to the right.
    fn sides(&self) -> Result<Sides<'_>, RenderError> {
        let (lead, rest) = self.terms.split_first().ok_or(RenderError::Empty)?;
        let mut num: Vec<(&Label, i64)> = Vec::new();
        let mut den = Vec::new();
        // Functions before ζ values, each group in canonical order.
        for zeta in [false, true] {
            for t in rest.iter().filter(|t| t.label.is_zeta() == zeta) {
                if t.exp < 0 {
                    num.push((&t.label, -t.exp));
                } else {
                    den.push((&t.label, t.exp));
                }
            }
        }
        Ok((lead, num, den))
    }

    /// Unicode rendering, e.g. `L(λ σ', 3) = (ζ(2) ζ(6)) / ζ(3)`.
    pub fn render_shell(&self) -> Result<String, RenderError> {
        let (lead, num, den) = self.sides()?;
        let power = |s: &mut String, e: i64| {
            if e != 1 {
                let _ = write!(s, "^{e}");
            }
        };
        let group = |items: &[(&Label, i64)], wrap: bool| -> String {
            let parts: Vec<String> = items
                .iter()
                .map(|(l, e)| {
                    let mut s = l.to_string();
                    power(&mut s, *e);
                    s
                })
                .collect();
            if wrap && parts.len() > 1 {
                format!("({})", parts.join(" "))
            } else {
                parts.join(" ")
            }
        };
        let mut out = lead.label.to_string();
        power(&mut out, lead.exp);
        out.push_str(" = ");
        match (num.is_empty(), den.is_empty()) {
            (true, true) => out.push('1'),
            (false, true) => out.push_str(&group(&num, false)),
            (true, false) => {
                out.push_str("1 / ");
                out.push_str(&group(&den, true));
            }
            (false, false) => {
                out.push_str(&group(&num, true));
                out.push_str(" / ");
                out.push_str(&group(&den, true));
            }
        }
        Ok(out)
    }

    /// LaTeX math rendering (without surrounding `$`).
    pub fn render_latex(&self) -> Result<String, RenderError> {
        let (lead, num, den) = self.sides()?;
        let one = |l: &Label, e: i64| {
            let base = if l.is_zeta() {
                format!("\\zeta({})", l.shift)
            } else {
                format!("L\\left({}, {}\\right)", l.expr.latex(), l.shift)
            };
            if e == 1 {
                base
            } else {
                format!("{base}^{{{e}}}")
            }
        };
        let group = |items: &[(&Label, i64)]| {
            if items.is_empty() {
                "1".to_string()
            } else {
                items
                    .iter()
                    .map(|(l, e)| one(l, *e))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        };
        let lhs = one(&lead.label, lead.exp);
        let rhs = if den.is_empty() {
            group(&num)
        } else {
            format!("\\frac{{{}}}{{{}}}", group(&num), group(&den))
        };
        Ok(format!("{lhs} = {rhs}"))
    }

    pub fn to_json(&self, id: Option<&str>, verified: Option<bool>) -> RelationJson {
        RelationJson {
            id: id.map(str::to_string),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    expr: t.label.expr.to_grammar(),
                    display: t.label.expr.shell(),
                    shift: t.label.shift,
                    exp: t.exp,
                })
                .collect(),
            verified,
        }
    }
}

/// Map kernel coefficients onto labels.
pub fn relation_from_kernel(v: &KernelVector, labels: &[Label]) -> Option<Relation> {
    let terms = v
        .coeffs
        .iter()
        .map(|(r, c)| Term {
            label: labels[*r].clone(),
            exp: c.to_i64().expect("kernel coefficient fits in i64"),
        })
        .collect();
    Relation::from_terms(terms)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TermJson {
    pub expr: String,
    pub display: String,
    pub shift: i64,
    pub exp: i64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RelationJson {
    pub id: Option<String>,
    pub terms: Vec<TermJson>,
    pub verified: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funclib::parse_expr;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn f(s: &str) -> FuncExpr {
        parse_expr(s)
            .unwrap()
            .instantiate(&Default::default())
            .unwrap()
    }

    fn label(s: &str, shift: i64) -> Label {
        Label { expr: f(s), shift }
    }

    fn kv(c: &[i64]) -> KernelVector {
        KernelVector {
            coeffs: c
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| (i, BigInt::from(x)))
                .collect(),
        }
    }

    #[test]
    fn from_kernel_examples() {
        let labels = [label("phi", 3), Label::zeta(2), Label::zeta(3)];
        let r = relation_from_kernel(&kv(&[1, -1, 1]), &labels).unwrap();
        assert_eq!(r.render_shell().unwrap(), "L(φ, 3) = ζ(2) / ζ(3)");
        let flipped = relation_from_kernel(&kv(&[-1, 1, -1]), &labels).unwrap();
        assert_eq!(flipped, r);
        assert_eq!(flipped.terms()[0].exp, 1);
        let dup = [Label::zeta(4), Label::zeta(4)];
        assert!(relation_from_kernel(&kv(&[2, -2]), &dup).is_none());
    }

    #[test]
    fn primitive_after_merge() {
        let r = Relation::from_terms(vec![
            Term {
                label: label("lambda * tau", 4),
                exp: -2,
            },
            Term {
                label: Label::zeta(8),
                exp: 4,
            },
            Term {
                label: Label::zeta(4),
                exp: -4,
            },
        ])
        .unwrap();
        assert_eq!(r.render_shell().unwrap(), "L(λ τ, 4) = ζ(8)^2 / ζ(4)^2");
        assert_eq!(
            r.render_latex().unwrap(),
            "L\\left(\\lambda \\tau, 4\\right) = \\frac{\\zeta(8)^{2}}{\\zeta(4)^{2}}"
        );
    }

    #[test]
    fn rendering_shapes() {
        let r = Relation::from_terms(vec![
            Term {
                label: label("lambda * sigmaprime:1^2", 4),
                exp: 1,
            },
            Term {
                label: Label::zeta(3),
                exp: -2,
            },
            Term {
                label: Label::zeta(8),
                exp: -1,
            },
            Term {
                label: Label::zeta(2),
                exp: 1,
            },
            Term {
                label: Label::zeta(6),
                exp: 1,
            },
        ])
        .unwrap();
        assert_eq!(
            r.render_shell().unwrap(),
            "L(λ σ'^2, 4) = (ζ(3)^2 ζ(8)) / (ζ(2) ζ(6))"
        );
        let single = Relation::from_terms(vec![Term {
            label: label("epsilon", 2),
            exp: 1,
        }])
        .unwrap();
        assert_eq!(single.render_shell().unwrap(), "L(ε, 2) = 1");
        let inv = Relation::from_terms(vec![
            Term {
                label: label("mu", 2),
                exp: 1,
            },
            Term {
                label: Label::zeta(2),
                exp: 1,
            },
        ])
        .unwrap();
        assert_eq!(inv.render_shell().unwrap(), "L(μ, 2) = 1 / ζ(2)");
        assert_eq!(
            inv.render_latex().unwrap(),
            "L\\left(\\mu, 2\\right) = \\frac{1}{\\zeta(2)}"
        );
        let two = Relation::from_terms(vec![
            Term {
                label: label("theta * sigma:2", 4),
                exp: 1,
            },
            Term {
                label: label("jordan:2^2", 8),
                exp: -1,
            },
            Term {
                label: Label::zeta(2),
                exp: -2,
            },
        ])
        .unwrap();
        assert_eq!(
            two.render_shell().unwrap(),
            "L(θ σ₂, 4) = L(J₂^2, 8) ζ(2)^2"
        );
    }

    #[test]
    fn trivial_and_json() {
        let r = Relation::from_terms(vec![
            Term {
                label: Label::zeta(2),
                exp: 1,
            },
            Term {
                label: Label::zeta(3),
                exp: -1,
            },
        ])
        .unwrap();
        assert!(r.is_trivial());
        let j = r.to_json(None, Some(true));
        assert_eq!(j.terms.len(), 2);
        assert_eq!(j.terms[0].expr, "one");
    }

    type Triple = (String, i64, i64);

    /// Factors `open NAME, SHIFT close` or `zeta SHIFT close`, each with an
    /// optional power, read back from one side of a rendering.
    fn read_factors(
        mut s: &str,
        open: &str,
        zeta: &str,
        close: &str,
        pow: (&str, &str),
        sign: i64,
    ) -> Vec<Triple> {
        let mut out = Vec::new();
        loop {
            let (i, is_zeta) = match (s.find(open), s.find(zeta)) {
                (Some(a), Some(b)) if b < a => (b, true),
                (Some(a), _) => (a, false),
                (None, Some(b)) => (b, true),
                (None, None) => return out,
            };
            s = &s[i + if is_zeta { zeta.len() } else { open.len() }..];
            let end = s.find(if is_zeta { ")" } else { close }).unwrap();
            let inner = &s[..end];
            s = &s[end + if is_zeta { 1 } else { close.len() }..];
            let (name, shift) = if is_zeta {
                ("ζ".to_string(), inner.parse().unwrap())
            } else {
                let (n, sh) = inner.rsplit_once(", ").unwrap();
                (n.to_string(), sh.parse().unwrap())
            };
            let mut exp = 1;
            if let Some(rest) = s.strip_prefix(pow.0) {
                let end = rest
                    .find(|c: char| !c.is_ascii_digit())
                    .unwrap_or(rest.len());
                exp = rest[..end].parse().unwrap();
                s = rest[end..].strip_prefix(pow.1).unwrap();
            }
            out.push((name, shift, sign * exp));
        }
    }

    fn shell_triples(r: &Relation) -> Vec<Triple> {
        let text = r.render_shell().unwrap();
        let (lhs, rhs) = text.split_once(" = ").unwrap();
        let (num, den) = rhs.split_once(" / ").unwrap_or((rhs, ""));
        let read = |side, sign| read_factors(side, "L(", "ζ(", ")", ("^", ""), sign);
        [read(lhs, 1), read(num, -1), read(den, 1)].concat()
    }

    fn latex_triples(r: &Relation) -> Vec<Triple> {
        let text = r.render_latex().unwrap();
        let (lhs, rhs) = text.split_once(" = ").unwrap();
        let (num, den) = match rhs.strip_prefix("\\frac{") {
            Some(body) => body.split_once("}{").unwrap(),
            None => (rhs, ""),
        };
        let read =
            |side, sign| read_factors(side, "L\\left(", "\\zeta(", "\\right)", ("^{", "}"), sign);
        [read(lhs, 1), read(num, -1), read(den, 1)].concat()
    }

    /// Resolve rendered names through the relation's own labels.
    fn resolve(r: &Relation, triples: Vec<Triple>, latex: bool) -> Vec<(FuncExpr, i64, i64)> {
        let names: HashMap<String, FuncExpr> = r
            .terms()
            .iter()
            .filter(|t| !t.label.is_zeta())
            .map(|t| {
                let e = &t.label.expr;
                (if latex { e.latex() } else { e.shell() }, e.canonical())
            })
            .collect();
        let mut out: Vec<_> = triples
            .into_iter()
            .map(|(n, s, e)| {
                let f = if n == "ζ" {
                    FuncExpr::one()
                } else {
                    names[&n].clone()
                };
                (f, s, e)
            })
            .collect();
        out.sort();
        out
    }

    const EXPRS: [&str; 7] = [
        "lambda",
        "lambda * tau",
        "lambda * sigmaprime:1^2",
        "theta * sigma:2",
        "jordan:2^2",
        "mu",
        "phi",
    ];

    proptest! {
        #[test]
        fn renderings_parse_back_to_the_same_terms(
            raw in prop::collection::vec((0usize..EXPRS.len() + 3, 1i64..14, -3i64..4), 1..7)
        ) {
            let terms = raw
                .into_iter()
                .map(|(i, shift, exp)| Term {
                    label: if i < EXPRS.len() { label(EXPRS[i], shift) } else { Label::zeta(shift) },
                    exp,
                })
                .collect();
            let Some(r) = Relation::from_terms(terms) else { return Ok(()) };
            let mut want: Vec<_> = r.key().into_iter().map(|((f, s), e)| (f, s, e)).collect();
            want.sort();
            prop_assert_eq!(&resolve(&r, shell_triples(&r), false), &want);
            prop_assert_eq!(&resolve(&r, latex_triples(&r), true), &want);
        }
    }
}
