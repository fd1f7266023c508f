//! Numerical checks of relations by truncated Dirichlet series.

use std::collections::HashMap;
use std::fmt;

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funclib::{FuncExpr, SpfTable};
use crate::relations::Relation;

pub const DEFAULT_CUTOFF: u64 = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Agreement required between the Dirichlet sum and the Euler product.
pub const CROSS_CHECK_TOL: f64 = 1e-3;
const EULER_PRIME_BOUND: u64 = 100_000;
const MAX_CONSTANT_DEN: i64 = 100;
const CONSTANT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("ζ(s) needs s >= 2, got {0}")]
    ZetaDomain(i64),
    #[error("cutoff {n} exceeds the factor table size {size}")]
    TableTooSmall { n: u64, size: u64 },
}

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// `Σ_{n≤N} n^{-s}` plus the Euler–Maclaurin tail through `N^{-s-3}`.
pub fn zeta_value(s: i64, n: u64) -> Result<f64, VerifyError> {
    if s < 2 {
        return Err(VerifyError::ZetaDomain(s));
    }
    let n = n.max(1);
    let sf = s as f64;
    let mut acc = KahanSum::default();
    for k in (1..=n).rev() {
        acc.add((k as f64).powf(-sf));
    }
    let nf = n as f64;
    let ns = nf.powf(-sf);
    let tail = nf * ns / (sf - 1.0) - ns / 2.0 + sf * ns / nf / 12.0
        - sf * (sf + 1.0) * (sf + 2.0) * ns / (nf * nf * nf) / 720.0;
    Ok(acc.value() + tail)
}

/// `f(n)` for every `n <= limit`, from prime-power values.
pub fn multiplicative_table(
    e: &FuncExpr,
    limit: u64,
    spf: &SpfTable,
) -> Result<Vec<f64>, VerifyError> {
    if limit > spf.limit() {
        return Err(VerifyError::TableTooSmall {
            n: limit,
            size: spf.limit(),
        });
    }
    let len = limit as usize + 1;
    let mut vals = vec![0.0f64; len];
    // Largest power of the smallest prime dividing n, and its exponent.
    let mut pw = vec![1u64; len];
    let mut ex = vec![0u32; len];
    if len > 1 {
        vals[1] = 1.0;
    }
    for n in 2..len {
        let q = spf.spf(n as u64);
        let m = n / q as usize;
        if m > 1 && spf.spf(m as u64) == q {
            pw[n] = pw[m] * q;
            ex[n] = ex[m] + 1;
        } else {
            pw[n] = q;
            ex[n] = 1;
        }
        vals[n] = if pw[n] == n as u64 {
            e.prime_power_value(q, ex[n]).to_f64().unwrap_or(f64::NAN)
        } else {
            vals[pw[n] as usize] * vals[n / pw[n] as usize]
        };
    }
    Ok(vals)
}

fn sum_table(vals: &[f64], s: i64) -> f64 {
    let sf = s as f64;
    let mut acc = KahanSum::default();
    for (n, &v) in vals.iter().enumerate().skip(1).rev() {
        if v != 0.0 {
            acc.add(v * (n as f64).powf(-sf));
        }
    }
    acc.value()
}

/// `Σ_{n≤N} f(n)/n^s`, Kahan-compensated.
pub fn dirichlet_partial_sum(
    e: &FuncExpr,
    s: i64,
    n: u64,
    spf: &SpfTable,
) -> Result<f64, VerifyError> {
    Ok(sum_table(&multiplicative_table(e, n, spf)?, s))
}

/// `Π_{q≤P} Σ_j f(q^j) q^{-js}` with each local series summed until its
/// terms are negligible.
pub fn euler_product(e: &FuncExpr, s: i64, spf: &SpfTable, prime_bound: u64) -> f64 {
    let sf = s as f64;
    let mut log_sum = KahanSum::default();
    let mut sign = 1.0;
    for q in spf.primes().take_while(|&q| q <= prime_bound) {
        let lq = (q as f64).ln();
        let mut local = KahanSum::default();
        local.add(1.0);
        for j in 1..=256u32 {
            let v = e.prime_power_value(q, j).to_f64().unwrap_or(f64::NAN);
            let term = v * (-(j as f64) * sf * lq).exp();
            local.add(term);
            if (j as f64) * sf * lq > 60.0 && term.abs() < 1e-18 {
                break;
            }
        }
        let l = local.value();
        if l < 0.0 {
            sign = -sign;
        }
        log_sum.add(l.abs().ln());
    }
    sign * log_sum.value().exp()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum VerifyStatus {
    Pass,
    Fail,
    ConstantMismatch { num: i64, den: i64 },
    DivergentTerm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub cutoff: u64,
    pub status: VerifyStatus,
    /// Largest relative gap between a term's Dirichlet sum and its Euler product.
    pub cross_check: Option<f64>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.status == VerifyStatus::Pass
    }

    fn divergent(cutoff: u64) -> VerifyReport {
        VerifyReport {
            lhs: f64::NAN,
            rhs: f64::NAN,
            residual: f64::INFINITY,
            cutoff,
            status: VerifyStatus::DivergentTerm,
            cross_check: None,
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            VerifyStatus::Pass => {
                write!(f, "verified (res={:.1e}, N={})", self.residual, self.cutoff)
            }
            VerifyStatus::Fail => {
                write!(f, "FAILED (res={:.1e}, N={})", self.residual, self.cutoff)
            }
            VerifyStatus::ConstantMismatch { num, den } => write!(
                f,
                "FAILED (constant mismatch c ≈ {num}/{den}, N={})",
                self.cutoff
            ),
            VerifyStatus::DivergentTerm => f.write_str("divergent-term"),
        }
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`.
pub fn rational_approx(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 > 0).then_some((h1, k1))
}

/// Shared inputs for verifying many relations.
pub struct Verifier {
    spf: SpfTable,
    cutoff: u64,
    tol: f64,
    p: u32,
    cross_check: bool,
}

impl Verifier {
    pub fn new(cutoff: u64, tol: f64, p: u32) -> Verifier {
        Verifier {
            spf: SpfTable::new(cutoff.max(EULER_PRIME_BOUND.min(cutoff))),
            cutoff,
            tol,
            p,
            cross_check: true,
        }
    }

    /// Skip the Euler-product comparison.
    pub fn without_cross_check(mut self) -> Self {
        self.cross_check = false;
        self
    }

    pub fn spf(&self) -> &SpfTable {
        &self.spf
    }

    pub fn verify(&self, r: &Relation) -> VerifyReport {
        if !r.convergent(self.p) {
            return VerifyReport::divergent(self.cutoff);
        }
        let mut lhs = 1.0f64;
        let mut rhs = 1.0f64;
        let mut gap: Option<f64> = None;
        let mut tables: HashMap<FuncExpr, Vec<f64>> = HashMap::new();
        for t in r.terms() {
            let s = t.label.shift;
            if t.label.is_zeta() {
                let z = zeta_value(s, self.cutoff).expect("convergent ζ shift");
                rhs *= z.powi(-t.exp as i32);
                continue;
            }
            let key = t.label.expr.canonical();
            let vals = tables.entry(key).or_insert_with(|| {
                multiplicative_table(&t.label.expr, self.cutoff, &self.spf)
                    .expect("table sized to cutoff")
            });
            let v = sum_table(vals, s);
            if self.cross_check {
                let bound = EULER_PRIME_BOUND.min(self.cutoff);
                let ep = euler_product(&t.label.expr, s, &self.spf, bound);
                let g = ((v - ep) / v).abs();
                gap = Some(gap.map_or(g, |x: f64| x.max(g)));
            }
            lhs *= v.powi(t.exp as i32);
        }
        let ratio = lhs / rhs;
        let residual = (ratio - 1.0).abs();
        let status = if residual < self.tol && gap.is_none_or(|g| g < CROSS_CHECK_TOL) {
            VerifyStatus::Pass
        } else {
            match rational_approx(ratio, MAX_CONSTANT_DEN) {
                Some((num, den))
                    if (num, den) != (1, 1)
                        && (ratio - num as f64 / den as f64).abs() < CONSTANT_TOL * ratio.abs() =>
                {
                    VerifyStatus::ConstantMismatch { num, den }
                }
                _ => VerifyStatus::Fail,
            }
        };
        VerifyReport {
            lhs,
            rhs,
            residual,
            cutoff: self.cutoff,
            status,
            cross_check: gap,
        }
    }

    pub fn verify_all(&self, rs: &[Relation]) -> Vec<VerifyReport> {
        rs.par_iter().map(|r| self.verify(r)).collect()
    }
}

/// One-off check of a relation.
pub fn verify_relation(r: &Relation, cutoff: u64, tol: f64, p: u32) -> VerifyReport {
    Verifier::new(cutoff, tol, p).verify(r)
}
