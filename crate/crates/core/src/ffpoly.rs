//! Dense univariate polynomials over a prime field F_p and rational fractions
//! over them.
//!
//! Coefficients are stored lowest degree first. Every constructor trims
//! trailing zeros, so the zero polynomial is the empty coefficient vector.
//! [`ModFrac`] keeps its denominator monic and coprime to the numerator; the
//! scalar unit stays on the numerator so arithmetic is exact. Use
//! [`ModFrac::monic`] (or [`frac_normalize`]) to drop it.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Default modulus.
pub const DEFAULT_PRIME: u32 = 997;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("inexact division: remainder {0}")]
    Inexact(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("gcd of two zero polynomials")]
    BothZero,
}

/// Deterministic primality test for word-sized moduli.
pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
fn mulmod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

#[inline]
fn addmod(a: u32, b: u32, p: u32) -> u32 {
    let s = a as u64 + b as u64;
    if s >= p as u64 {
        (s - p as u64) as u32
    } else {
        s as u32
    }
}

#[inline]
fn submod(a: u32, b: u32, p: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        (a as u64 + p as u64 - b as u64) as u32
    }
}

fn powmod(mut a: u32, mut e: u64, p: u32) -> u32 {
    let mut r = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

/// Multiplicative inverse of a nonzero residue.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    assert!(!a.is_multiple_of(p), "inverse of zero mod {p}");
    powmod(a, p as u64 - 2, p)
}

/// Reduce a signed integer into `[0, p)`.
pub fn residue(c: i64, p: u32) -> u32 {
    c.rem_euclid(p as i64) as u32
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ModPoly {
    coeffs: Vec<u32>,
    p: u32,
}

impl ModPoly {
    pub fn new(mut coeffs: Vec<u32>, p: u32) -> Self {
        for c in coeffs.iter_mut() {
            *c %= p;
        }
        let mut r = ModPoly { coeffs, p };
        r.trim();
        r
    }

    pub fn from_i64(coeffs: &[i64], p: u32) -> Self {
        ModPoly::new(coeffs.iter().map(|&c| residue(c, p)).collect(), p)
    }

    pub fn zero(p: u32) -> Self {
        ModPoly {
            coeffs: Vec::new(),
            p,
        }
    }

    pub fn one(p: u32) -> Self {
        ModPoly::constant(1, p)
    }

    pub fn constant(c: i64, p: u32) -> Self {
        ModPoly::new(vec![residue(c, p)], p)
    }

    pub fn x(p: u32) -> Self {
        ModPoly::monomial(1, 1, p)
    }

    /// `c·X^d`.
    pub fn monomial(c: i64, d: usize, p: u32) -> Self {
        let c = residue(c, p);
        if c == 0 {
            return ModPoly::zero(p);
        }
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = c;
        ModPoly { coeffs, p }
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn modulus(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 1
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with `-1` for the zero polynomial.
    pub fn deg_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    /// Leading coefficient, zero for the zero polynomial.
    pub fn lead(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    /// Coefficients mapped to the symmetric range `(-p/2, p/2]`.
    pub fn signed_coeffs(&self) -> Vec<i64> {
        self.coeffs.iter().map(|&c| signed(c, self.p)).collect()
    }

    fn check(&self, other: &ModPoly) {
        assert_eq!(self.p, other.p, "modulus mismatch");
    }

    pub fn scale(&self, c: u32) -> ModPoly {
        let c = c % self.p;
        if c == 0 {
            return ModPoly::zero(self.p);
        }
        ModPoly {
            coeffs: self.coeffs.iter().map(|&a| mulmod(a, c, self.p)).collect(),
            p: self.p,
        }
    }

    /// Multiply by `X^k`.
    pub fn shift_up(&self, k: usize) -> ModPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        ModPoly { coeffs, p: self.p }
    }

    /// Returns `(lead, self / lead)`; the zero polynomial maps to `(0, 0)`.
    pub fn make_monic(&self) -> (u32, ModPoly) {
        let l = self.lead();
        if l == 0 || l == 1 {
            return (l, self.clone());
        }
        (l, self.scale(inv_mod(l, self.p)))
    }

    pub fn div_rem(&self, d: &ModPoly) -> (ModPoly, ModPoly) {
        self.check(d);
        assert!(!d.is_zero(), "polynomial division by zero");
        let p = self.p;
        if self.coeffs.len() < d.coeffs.len() {
            return (ModPoly::zero(p), self.clone());
        }
        let dn = d.coeffs.len() - 1;
        let inv = inv_mod(d.lead(), p);
        let mut r = self.coeffs.clone();
        let mut q = vec![0u32; r.len() - dn];
        for i in (0..q.len()).rev() {
            let c = mulmod(r[i + dn], inv, p);
            q[i] = c;
            if c != 0 {
                for (j, &dc) in d.coeffs.iter().enumerate() {
                    r[i + j] = submod(r[i + j], mulmod(c, dc, p), p);
                }
            }
        }
        r.truncate(dn);
        (ModPoly::new(q, p), ModPoly::new(r, p))
    }

    pub fn rem(&self, d: &ModPoly) -> ModPoly {
        self.div_rem(d).1
    }

    /// Quotient when `d` divides `self` exactly.
    pub fn try_div_exact(&self, d: &ModPoly) -> Option<ModPoly> {
        if d.is_one() {
            return Some(self.clone());
        }
        let (q, r) = self.div_rem(d);
        r.is_zero().then_some(q)
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &ModPoly) -> ModPoly {
        self.check(other);
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            if b.is_constant() {
                return ModPoly::one(self.p);
            }
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.make_monic().1
    }

    pub fn pow(&self, mut e: u32) -> ModPoly {
        let mut base = self.clone();
        let mut r = ModPoly::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                r = &r * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        r
    }

    /// Evaluate at `x` (Horner).
    pub fn eval(&self, x: u32) -> u32 {
        let x = x % self.p;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| addmod(mulmod(acc, x, self.p), c, self.p))
    }

    /// Degree first, then coefficients from the top down.
    pub fn cmp_deglex(&self, other: &ModPoly) -> Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

fn signed(c: u32, p: u32) -> i64 {
    if c > p / 2 {
        c as i64 - p as i64
    } else {
        c as i64
    }
}

impl Add for &ModPoly {
    type Output = ModPoly;
    fn add(self, rhs: &ModPoly) -> ModPoly {
        self.check(rhs);
        let p = self.p;
        let (long, short) = if self.coeffs.len() >= rhs.coeffs.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (c, &s) in coeffs.iter_mut().zip(&short.coeffs) {
            *c = addmod(*c, s, p);
        }
        let mut r = ModPoly { coeffs, p };
        r.trim();
        r
    }
}

impl Sub for &ModPoly {
    type Output = ModPoly;
    fn sub(self, rhs: &ModPoly) -> ModPoly {
        self.check(rhs);
        let p = self.p;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| submod(self.coeff(i), rhs.coeff(i), p))
            .collect();
        let mut r = ModPoly { coeffs, p };
        r.trim();
        r
    }
}

impl Neg for &ModPoly {
    type Output = ModPoly;
    fn neg(self) -> ModPoly {
        ModPoly {
            coeffs: self.coeffs.iter().map(|&c| submod(0, c, self.p)).collect(),
            p: self.p,
        }
    }
}

impl Mul for &ModPoly {
    type Output = ModPoly;
    fn mul(self, rhs: &ModPoly) -> ModPoly {
        self.check(rhs);
        let p = self.p;
        if self.is_zero() || rhs.is_zero() {
            return ModPoly::zero(p);
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return rhs.clone();
        }
        let n = self.coeffs.len() + rhs.coeffs.len() - 1;
        let pp = p as u64;
        let mut acc = vec![0u64; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let a = a as u64;
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let slot = &mut acc[i + j];
                *slot = (*slot + a * b as u64) % pp;
            }
        }
        ModPoly::new(acc.into_iter().map(|c| c as u32).collect(), p)
    }
}

macro_rules! forward_owned {
    ($ty:ty, $tr:ident, $m:ident) => {
        impl $tr for $ty {
            type Output = $ty;
            fn $m(self, rhs: $ty) -> $ty {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(ModPoly, Add, add);
forward_owned!(ModPoly, Sub, sub);
forward_owned!(ModPoly, Mul, mul);

impl fmt::Display for ModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (d, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let s = signed(c, self.p);
            let mag = s.unsigned_abs();
            if first {
                if s < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if s < 0 { '-' } else { '+' })?;
            }
            first = false;
            match (d, mag) {
                (0, m) => write!(f, "{m}")?,
                (1, 1) => write!(f, "X")?,
                (1, m) => write!(f, "{m}X")?,
                (d, 1) => write!(f, "X^{d}")?,
                (d, m) => write!(f, "{m}X^{d}")?,
            }
        }
        Ok(())
    }
}

/// Monic gcd of two polynomials over the same field.
pub fn poly_gcd(a: &ModPoly, b: &ModPoly) -> Result<ModPoly, PolyError> {
    if a.p != b.p {
        return Err(PolyError::ModulusMismatch(a.p, b.p));
    }
    if a.is_zero() && b.is_zero() {
        return Err(PolyError::BothZero);
    }
    Ok(a.gcd(b))
}

/// Exact quotient `a / b`.
pub fn poly_divexact(a: &ModPoly, b: &ModPoly) -> Result<ModPoly, PolyError> {
    if a.p != b.p {
        return Err(PolyError::ModulusMismatch(a.p, b.p));
    }
    if b.is_zero() {
        return Err(PolyError::DivisionByZero);
    }
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        Ok(q)
    } else {
        Err(PolyError::Inexact(r.to_string()))
    }
}

/// Element of F_p(X) in lowest terms with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ModFrac {
    num: ModPoly,
    den: ModPoly,
}

impl ModFrac {
    /// Exact fraction `num/den`, keeping the scalar unit on the numerator.
    pub fn new(num: ModPoly, den: ModPoly) -> Result<Self, PolyError> {
        if num.p != den.p {
            return Err(PolyError::ModulusMismatch(num.p, den.p));
        }
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: ModPoly, den: ModPoly) -> Self {
        let p = num.p;
        if num.is_zero() {
            return ModFrac::zero(p);
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_rem(&g).0, den.div_rem(&g).0)
        };
        let l = den.lead();
        if l == 1 {
            ModFrac { num, den }
        } else {
            let inv = inv_mod(l, p);
            ModFrac {
                num: num.scale(inv),
                den: den.scale(inv),
            }
        }
    }

    pub fn from_poly(num: ModPoly) -> Self {
        let p = num.p;
        ModFrac {
            num,
            den: ModPoly::one(p),
        }
    }

    pub fn zero(p: u32) -> Self {
        ModFrac::from_poly(ModPoly::zero(p))
    }

    pub fn one(p: u32) -> Self {
        ModFrac::from_poly(ModPoly::one(p))
    }

    pub fn constant(c: i64, p: u32) -> Self {
        ModFrac::from_poly(ModPoly::constant(c, p))
    }

    /// `X^k` for any integer `k`.
    pub fn x_pow(k: i64, p: u32) -> Self {
        let m = ModPoly::monomial(1, k.unsigned_abs() as usize, p);
        if k >= 0 {
            ModFrac::from_poly(m)
        } else {
            ModFrac {
                num: ModPoly::one(p),
                den: m,
            }
        }
    }

    /// `c·X^k`.
    pub fn monomial(c: i64, k: i64, p: u32) -> Self {
        ModFrac::x_pow(k, p).scale(residue(c, p))
    }

    pub fn num(&self) -> &ModPoly {
        &self.num
    }

    pub fn den(&self) -> &ModPoly {
        &self.den
    }

    pub fn modulus(&self) -> u32 {
        self.num.p
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_one()
    }

    /// Checks the representation invariants.
    pub fn is_canonical(&self) -> bool {
        self.den.is_monic()
            && !self.den.is_zero()
            && (self.num.is_zero() && self.den.is_one() || self.num.gcd(&self.den).is_one())
    }

    /// Drops the scalar unit: both numerator and denominator monic.
    pub fn monic(&self) -> ModFrac {
        ModFrac {
            num: self.num.make_monic().1,
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, c: u32) -> ModFrac {
        if c.is_multiple_of(self.modulus()) {
            return ModFrac::zero(self.modulus());
        }
        ModFrac {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<ModFrac, PolyError> {
        if self.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        Ok(Self::reduce(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &ModFrac) -> Result<ModFrac, PolyError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn pow(&self, k: i64) -> Result<ModFrac, PolyError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let e = k.unsigned_abs() as u32;
        // num and den stay coprime under powers.
        Ok(ModFrac {
            num: base.num.pow(e),
            den: base.den.pow(e),
        })
    }

    /// Value at `x`, or `None` when the denominator vanishes there.
    pub fn eval(&self, x: u32) -> Option<u32> {
        let d = self.den.eval(x);
        if d == 0 {
            return None;
        }
        let p = self.modulus();
        Some(mulmod(self.num.eval(x), inv_mod(d, p), p))
    }
}

impl Add for &ModFrac {
    type Output = ModFrac;
    fn add(self, rhs: &ModFrac) -> ModFrac {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            let n = &self.num + &rhs.num;
            if self.den.is_one() {
                return ModFrac::from_poly(n);
            }
            return ModFrac::reduce(n, self.den.clone());
        }
        if self.den.is_one() {
            return ModFrac::reduce(&(&self.num * &rhs.den) + &rhs.num, rhs.den.clone());
        }
        if rhs.den.is_one() {
            return ModFrac::reduce(&self.num + &(&rhs.num * &self.den), self.den.clone());
        }
        let g = self.den.gcd(&rhs.den);
        let a = self.den.div_rem(&g).0;
        let b = rhs.den.div_rem(&g).0;
        let n = &(&self.num * &b) + &(&rhs.num * &a);
        ModFrac::reduce(n, &self.den * &b)
    }
}

impl Neg for &ModFrac {
    type Output = ModFrac;
    fn neg(self) -> ModFrac {
        ModFrac {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Sub for &ModFrac {
    type Output = ModFrac;
    fn sub(self, rhs: &ModFrac) -> ModFrac {
        self + &(-rhs)
    }
}

impl Mul for &ModFrac {
    type Output = ModFrac;
    fn mul(self, rhs: &ModFrac) -> ModFrac {
        if self.is_zero() || rhs.is_zero() {
            return ModFrac::zero(self.modulus());
        }
        if self.den.is_one() && rhs.den.is_one() {
            return ModFrac::from_poly(&self.num * &rhs.num);
        }
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let cut = |a: &ModPoly, g: &ModPoly| {
            if g.is_one() {
                a.clone()
            } else {
                a.div_rem(g).0
            }
        };
        let num = &cut(&self.num, &g1) * &cut(&rhs.num, &g2);
        let den = &cut(&self.den, &g2) * &cut(&rhs.den, &g1);
        // Quotients of monic polynomials by monic gcds stay monic.
        ModFrac { num, den }
    }
}

forward_owned!(ModFrac, Add, add);
forward_owned!(ModFrac, Sub, sub);
forward_owned!(ModFrac, Mul, mul);

impl fmt::Display for ModFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let wrap = |p: &ModPoly| {
            if p.coeffs.iter().filter(|&&c| c != 0).count() > 1 {
                format!("({p})")
            } else {
                p.to_string()
            }
        };
        write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
    }
}

/// Reduce `num/den` to lowest terms with both sides monic.
pub fn frac_normalize(num: &ModPoly, den: &ModPoly) -> Result<ModFrac, PolyError> {
    Ok(ModFrac::new(num.clone(), den.clone())?.monic())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracOp {
    Mul,
    Div,
    Add,
    Sub,
    Pow(i64),
}

/// Field arithmetic in F_p(X). `b` is ignored for [`FracOp::Pow`].
pub fn frac_arith(a: &ModFrac, b: &ModFrac, op: FracOp) -> Result<ModFrac, PolyError> {
    if a.modulus() != b.modulus() {
        return Err(PolyError::ModulusMismatch(a.modulus(), b.modulus()));
    }
    match op {
        FracOp::Mul => Ok(a * b),
        FracOp::Div => a.checked_div(b),
        FracOp::Add => Ok(a + b),
        FracOp::Sub => Ok(a - b),
        FracOp::Pow(k) => a.pow(k),
    }
}
