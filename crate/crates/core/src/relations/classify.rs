//! Matching relations against parameterized templates.

use std::collections::BTreeMap;

use num_integer::Integer;

use super::{Relation, RelationTemplate, TemplateTerm};
use crate::funclib::{Bindings, FuncExpr, IntExpr, PatExpr};

/// A template id with the parameters that reproduce the relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub id: String,
    pub bindings: Bindings,
    pub wild: BTreeMap<String, FuncExpr>,
}

#[derive(Clone, Debug, Default)]
struct State {
    b: Bindings,
    pending: Vec<(IntExpr, i64)>,
    wild: BTreeMap<String, FuncExpr>,
}

impl State {
    /// Record `e = v`, solving for single unknowns until nothing changes.
    fn constrain(mut self, e: &IntExpr, v: i64) -> Option<State> {
        self.pending.push((e.clone(), v));
        loop {
            let mut progress = false;
            let mut keep = Vec::new();
            for (e, v) in std::mem::take(&mut self.pending) {
                match e.eval(&self.b) {
                    Some(x) if x != v => return None,
                    Some(_) => {}
                    None => match e.solve(&self.b, v) {
                        Some((sym, x)) => {
                            self.b.insert(sym, x);
                            progress = true;
                        }
                        None => keep.push((e, v)),
                    },
                }
            }
            self.pending = keep;
            if !progress {
                return Some(self);
            }
        }
    }

    fn bind_wild(mut self, w: &str, f: FuncExpr) -> Option<State> {
        let f = f.canonical();
        match self.wild.get(w) {
            Some(g) if *g != f => None,
            Some(_) => Some(self),
            None => {
                self.wild.insert(w.to_string(), f);
                Some(self)
            }
        }
    }
}

fn factors(f: &FuncExpr) -> Vec<(FuncExpr, u32)> {
    match f {
        FuncExpr::Product(fs) => fs.clone(),
        _ if f.is_one() => Vec::new(),
        _ => vec![(f.clone(), 1)],
    }
}

/// All states under which `p` can denote `f`.
fn match_expr(p: &PatExpr, f: &FuncExpr, st: State) -> Vec<State> {
    match p {
        PatExpr::Wildcard(w) => st.bind_wild(w, f.clone()).into_iter().collect(),
        PatExpr::Leaf(kind, param) => {
            let FuncExpr::Leaf(l) = f else {
                return Vec::new();
            };
            let Some(v) = l.as_kind(*kind) else {
                return Vec::new();
            };
            match param {
                Some(e) => st.constrain(e, i64::from(v)).into_iter().collect(),
                None => vec![st],
            }
        }
        PatExpr::Product(pfs) => {
            let mut ordered: Vec<&(PatExpr, IntExpr)> = pfs.iter().collect();
            ordered.sort_by_key(|(pf, _)| matches!(pf, PatExpr::Wildcard(_)));
            match_factors(&ordered, factors(f), st)
        }
        PatExpr::Conv(a, b) => {
            let FuncExpr::Convolution(x, y) = f else {
                return Vec::new();
            };
            let mut out = Vec::new();
            for (l, r) in [(x, y), (y, x)] {
                for s in match_expr(a, l, st.clone()) {
                    out.extend(match_expr(b, r, s));
                }
            }
            out
        }
        PatExpr::PowerSub(g, ell) => {
            let mut out = Vec::new();
            if let FuncExpr::PowerSub(h, l) = f {
                if let Some(s) = st.clone().constrain(ell, i64::from(*l)) {
                    out.extend(match_expr(g, h, s));
                }
            }
            if let Some(s) = st.constrain(ell, 1) {
                out.extend(match_expr(g, f, s));
            }
            out
        }
    }
}

fn match_factors(pfs: &[&(PatExpr, IntExpr)], rest: Vec<(FuncExpr, u32)>, st: State) -> Vec<State> {
    let Some(((pf, pe), tail)) = pfs.split_first() else {
        return if rest.is_empty() {
            vec![st]
        } else {
            Vec::new()
        };
    };
    if let PatExpr::Wildcard(w) = pf {
        // A wildcard factor absorbs everything left over.
        if !tail.is_empty() {
            return Vec::new();
        }
        let Some(e) = pe
            .eval(&st.b)
            .and_then(|e| u32::try_from(e).ok())
            .filter(|&e| e > 0)
        else {
            return Vec::new();
        };
        if rest.iter().any(|(_, d)| d % e != 0) {
            return Vec::new();
        }
        let g = FuncExpr::product(rest.into_iter().map(|(h, d)| (h, d / e)));
        return st.bind_wild(w, g).into_iter().collect();
    }
    let mut out = Vec::new();
    if let Some(s) = st.clone().constrain(pe, 0) {
        out.extend(match_factors(tail, rest.clone(), s));
    }
    for (j, (h, d)) in rest.iter().enumerate() {
        for s in match_expr(pf, h, st.clone()) {
            if let Some(s) = s.constrain(pe, i64::from(*d)) {
                let mut remaining = rest.clone();
                remaining.remove(j);
                out.extend(match_factors(tail, remaining, s));
            }
        }
    }
    out
}

/// Bind function terms to relation terms one by one.
fn match_functions(
    tts: &[&TemplateTerm],
    rel: &[(FuncExpr, i64)],
    used: &mut Vec<bool>,
    st: State,
    out: &mut Vec<State>,
) {
    let Some((t, tail)) = tts.split_first() else {
        out.push(st);
        return;
    };
    for j in 0..rel.len() {
        if used[j] {
            continue;
        }
        for s in match_expr(&t.expr, &rel[j].0, st.clone()) {
            if let Some(s) = s.constrain(&t.shift, rel[j].1) {
                used[j] = true;
                match_functions(tail, rel, used, s, out);
                used[j] = false;
            }
        }
    }
}

/// Bind remaining symbols through ζ shifts.
fn match_zetas(zts: &[&TemplateTerm], shifts: &[i64], st: State, out: &mut Vec<State>) {
    let pending = zts.iter().position(|t| t.shift.eval(&st.b).is_none());
    let Some(i) = pending else {
        out.push(st);
        return;
    };
    for &s in shifts {
        if let Some(next) = st.clone().constrain(&zts[i].shift, s) {
            if zts[i].shift.eval(&next.b).is_some() {
                match_zetas(zts, shifts, next, out);
            }
        }
    }
}

fn primitive(mut m: BTreeMap<(FuncExpr, i64), i64>) -> BTreeMap<(FuncExpr, i64), i64> {
    m.retain(|_, e| *e != 0);
    let g = m.values().fold(0i64, |g, e| g.gcd(e));
    if g > 1 {
        m.values_mut().for_each(|e| *e /= g);
    }
    m
}

fn matches_at(t: &RelationTemplate, r: &Relation, st: &State) -> bool {
    if !st.pending.is_empty() || !t.conditions_hold(&st.b) {
        return false;
    }
    let mut inst: BTreeMap<(FuncExpr, i64), i64> = BTreeMap::new();
    for tt in &t.terms {
        let (Ok(f), Some(s), Some(e)) = (
            tt.expr.instantiate_with(&st.b, &st.wild),
            tt.shift.eval(&st.b),
            tt.exp.eval(&st.b),
        ) else {
            return false;
        };
        *inst.entry((f.canonical(), s)).or_insert(0) += e;
    }
    let inst = primitive(inst);
    let want = r.key();
    inst == want || inst.iter().all(|(k, e)| want.get(k) == Some(&-e)) && inst.len() == want.len()
}

/// First template (in catalog order) admitting parameters that reproduce `r`.
pub fn classify(r: &Relation, catalog: &[RelationTemplate]) -> Option<Match> {
    let rel_fns: Vec<(FuncExpr, i64)> = r
        .terms()
        .iter()
        .filter(|t| !t.label.is_zeta())
        .map(|t| (t.label.expr.canonical(), t.label.shift))
        .collect();
    let rel_zetas: Vec<i64> = r
        .terms()
        .iter()
        .filter(|t| t.label.is_zeta())
        .map(|t| t.label.shift)
        .collect();
    for t in catalog {
        let fn_terms: Vec<&TemplateTerm> = t.terms.iter().filter(|x| !x.is_zeta()).collect();
        let zeta_terms: Vec<&TemplateTerm> = t.terms.iter().filter(|x| x.is_zeta()).collect();
        if fn_terms.len() != rel_fns.len() {
            continue;
        }
        let mut partial = Vec::new();
        match_functions(
            &fn_terms,
            &rel_fns,
            &mut vec![false; rel_fns.len()],
            State::default(),
            &mut partial,
        );
        for st in partial {
            let mut full = Vec::new();
            match_zetas(&zeta_terms, &rel_zetas, st, &mut full);
            if let Some(st) = full.into_iter().find(|st| matches_at(t, r, st)) {
                return Some(Match {
                    id: t.id.clone(),
                    bindings: st.b,
                    wild: st.wild,
                });
            }
        }
    }
    None
}
