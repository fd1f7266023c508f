//! Pseudo-linear representations `(A, u)` with `f(p^k) = π(A^k u)`, where `π`
//! takes the first component and `X` stands for the prime `p`.

use thiserror::Error;

use crate::ffpoly::{ModFrac, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepError {
    #[error("singular convolution: A⊗I − I⊗B is not invertible")]
    SingularConvolution,
    #[error("divergent Bell series: I − A is singular")]
    DivergentBellSeries,
    #[error("no convergent shift in [{lo}, {hi}]")]
    NoConvergentShift { lo: i64, hi: i64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Square matrix `A` (row-major) and vector `u` over F_p(X).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoLinearRep {
    dim: usize,
    a: Vec<ModFrac>,
    u: Vec<ModFrac>,
}

impl PseudoLinearRep {
    pub fn new(a: Vec<Vec<ModFrac>>, u: Vec<ModFrac>) -> Result<Self, RepError> {
        let dim = u.len();
        if dim == 0 {
            return Err(RepError::Shape("empty representation".into()));
        }
        if a.len() != dim || a.iter().any(|row| row.len() != dim) {
            return Err(RepError::Shape(format!("A is not {dim}×{dim}")));
        }
        let p = u[0].modulus();
        let a: Vec<ModFrac> = a.into_iter().flatten().collect();
        if let Some(bad) = a.iter().chain(&u).find(|e| e.modulus() != p) {
            return Err(PolyError::ModulusMismatch(p, bad.modulus()).into());
        }
        Ok(PseudoLinearRep { dim, a, u })
    }

    /// Build from integer-coefficient monomial entries `(c, k)` meaning `c·X^k`.
    pub fn from_monomials(a: &[Vec<(i64, i64)>], u: &[(i64, i64)], p: u32) -> Self {
        let m = |&(c, k): &(i64, i64)| ModFrac::monomial(c, k, p);
        PseudoLinearRep::new(
            a.iter().map(|row| row.iter().map(m).collect()).collect(),
            u.iter().map(m).collect(),
        )
        .expect("well-formed monomial representation")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> u32 {
        self.u[0].modulus()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ModFrac {
        &self.a[i * self.dim + j]
    }

    pub fn u(&self) -> &[ModFrac] {
        &self.u
    }

    fn apply(&self, v: &[ModFrac]) -> Vec<ModFrac> {
        mat_vec(&self.a, self.dim, v)
    }

    /// `c_k = π(A^k u)`.
    pub fn bell_coeff(&self, k: usize) -> ModFrac {
        let mut v = self.u.clone();
        for _ in 0..k {
            v = self.apply(&v);
        }
        v.swap_remove(0)
    }

    /// `c_0, …, c_{count-1}`.
    pub fn bell_coeffs(&self, count: usize) -> Vec<ModFrac> {
        let mut out = Vec::with_capacity(count);
        let mut v = self.u.clone();
        for k in 0..count {
            out.push(v[0].clone());
            if k + 1 < count {
                v = self.apply(&v);
            }
        }
        out
    }

    /// Representation of `f·Id^{-s}`.
    pub fn shift(&self, s: i64) -> PseudoLinearRep {
        if s == 0 {
            return self.clone();
        }
        let t = ModFrac::x_pow(-s, self.modulus());
        PseudoLinearRep {
            dim: self.dim,
            a: self.a.iter().map(|e| e * &t).collect(),
            u: self.u.clone(),
        }
    }

    /// Pointwise product via `(A⊗B, u⊗v)`.
    pub fn product(&self, g: &PseudoLinearRep) -> PseudoLinearRep {
        PseudoLinearRep {
            dim: self.dim * g.dim,
            a: kron(&self.a, self.dim, &g.a, g.dim),
            u: kron_vec(&self.u, &g.u),
        }
    }

    /// Dirichlet convolution via the `⊙` construction; dimension `1 + 2nm`.
    pub fn convolve(&self, g: &PseudoLinearRep) -> Result<PseudoLinearRep, RepError> {
        let p = self.modulus();
        let (n, m) = (self.dim, g.dim);
        let nm = n * m;
        let ia = kron(&self.a, n, &identity(m, p), m);
        let ib = kron(&identity(n, p), n, &g.a, m);
        let diff: Vec<ModFrac> = ia.iter().zip(&ib).map(|(x, y)| x - y).collect();
        let w = kron_vec(&self.u, &g.u);
        let z = solve(diff, nm, w).ok_or(RepError::SingularConvolution)?;
        let u1 = mat_vec(&ia, nm, &z);
        let v1: Vec<ModFrac> = mat_vec(&ib, nm, &z).iter().map(|e| -e).collect();

        let dim = 1 + 2 * nm;
        let mut a = vec![ModFrac::zero(p); dim * dim];
        for j in 0..nm {
            a[1 + j] = ia[j].clone();
            a[1 + nm + j] = ib[j].clone();
        }
        for i in 0..nm {
            for j in 0..nm {
                a[(1 + i) * dim + 1 + j] = ia[i * nm + j].clone();
                a[(1 + nm + i) * dim + 1 + nm + j] = ib[i * nm + j].clone();
            }
        }
        let mut u = Vec::with_capacity(dim);
        u.push(&u1[0] + &v1[0]);
        u.extend(u1);
        u.extend(v1);
        Ok(PseudoLinearRep { dim, a, u })
    }

    /// Representation of `m ↦ f(m^ℓ)` at prime powers: `(A^ℓ, u)`.
    pub fn power(&self, ell: u32) -> PseudoLinearRep {
        assert!(ell >= 1, "power substitution needs ell >= 1");
        let mut acc = self.a.clone();
        for _ in 1..ell {
            acc = mat_mul(&acc, &self.a, self.dim);
        }
        PseudoLinearRep {
            dim: self.dim,
            a: acc,
            u: self.u.clone(),
        }
    }

    /// Minimal realization in companion form, state `(c_k, …, c_{k+r-1})`.
    pub fn reduce(&self) -> PseudoLinearRep {
        let n = self.dim;
        let seq = self.bell_coeffs(2 * n + 1);
        let rec = berlekamp_massey(&seq[..2 * n]);
        let r = rec.len();
        debug_assert!(recurrence_holds(&rec, &seq[..(n + r + 1).min(seq.len())]));
        companion(&rec, &seq[..r], self.modulus())
    }

    /// `R = π((I − A)^{-1} u)`.
    pub fn to_rfraction(&self) -> Result<ModFrac, RepError> {
        let p = self.modulus();
        let n = self.dim;
        let mut m: Vec<ModFrac> = self.a.iter().map(|e| -e).collect();
        for i in 0..n {
            m[i * n + i] = &m[i * n + i] + &ModFrac::one(p);
        }
        let w = solve(m, n, self.u.clone()).ok_or(RepError::DivergentBellSeries)?;
        Ok(w.into_iter().next().expect("nonempty"))
    }

    /// R-fraction of `f` at shift `s`.
    pub fn rfraction_at(&self, s: i64) -> Result<ModFrac, RepError> {
        self.shift(s).to_rfraction()
    }

    /// Least integer shift passing the degree criterion.
    pub fn min_shift(&self) -> Result<i64, RepError> {
        let coeffs = self.bell_coeffs(self.dim + 2);
        if coeffs[1..].iter().all(ModFrac::is_zero) {
            return Ok(0);
        }
        let maxdeg = self
            .a
            .iter()
            .map(|e| e.num().deg_i64().max(e.den().deg_i64()))
            .max()
            .unwrap_or(0)
            .max(0);
        let bound = 4 * (maxdeg + 2);
        let ok = |s: i64| {
            self.rfraction_at(s)
                .map(|r| degree_criterion(&r))
                .unwrap_or(false)
        };
        let hint = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                let d = c.num().deg_i64() - c.den().deg_i64() + 2;
                d.div_euclid(k as i64) + i64::from(d.rem_euclid(k as i64) != 0)
            })
            .max()
            .unwrap_or(0)
            .clamp(-bound, bound);
        let mut s = hint;
        if ok(s) {
            while s > -bound && ok(s - 1) {
                s -= 1;
            }
            return Ok(s);
        }
        while s < bound {
            s += 1;
            if ok(s) {
                return Ok(s);
            }
        }
        Err(RepError::NoConvergentShift {
            lo: -bound,
            hi: bound,
        })
    }
}

/// `N/D` with equal degrees and `deg(N − D) ≤ deg D − 2`.
pub fn degree_criterion(r: &ModFrac) -> bool {
    let (n, d) = (r.num(), r.den());
    if n.degree() != d.degree() || !n.is_monic() {
        return false;
    }
    (n - d).deg_i64() <= d.deg_i64() - 2
}

fn identity(n: usize, p: u32) -> Vec<ModFrac> {
    let mut m = vec![ModFrac::zero(p); n * n];
    for i in 0..n {
        m[i * n + i] = ModFrac::one(p);
    }
    m
}

fn mat_vec(a: &[ModFrac], n: usize, v: &[ModFrac]) -> Vec<ModFrac> {
    let p = v[0].modulus();
    (0..n)
        .map(|i| {
            let mut acc = ModFrac::zero(p);
            for (e, x) in a[i * n..(i + 1) * n].iter().zip(v) {
                if !e.is_zero() && !x.is_zero() {
                    acc = &acc + &(e * x);
                }
            }
            acc
        })
        .collect()
}

fn mat_mul(a: &[ModFrac], b: &[ModFrac], n: usize) -> Vec<ModFrac> {
    let p = a[0].modulus();
    let mut out = vec![ModFrac::zero(p); n * n];
    for i in 0..n {
        for k in 0..n {
            let x = &a[i * n + k];
            if x.is_zero() {
                continue;
            }
            for j in 0..n {
                let y = &b[k * n + j];
                if !y.is_zero() {
                    out[i * n + j] = &out[i * n + j] + &(x * y);
                }
            }
        }
    }
    out
}

fn kron(a: &[ModFrac], n: usize, b: &[ModFrac], m: usize) -> Vec<ModFrac> {
    let p = a[0].modulus();
    let nm = n * m;
    let mut out = vec![ModFrac::zero(p); nm * nm];
    for i in 0..n {
        for j in 0..n {
            let x = &a[i * n + j];
            if x.is_zero() {
                continue;
            }
            for k in 0..m {
                for l in 0..m {
                    let y = &b[k * m + l];
                    if !y.is_zero() {
                        out[(i * m + k) * nm + j * m + l] = x * y;
                    }
                }
            }
        }
    }
    out
}

fn kron_vec(u: &[ModFrac], v: &[ModFrac]) -> Vec<ModFrac> {
    u.iter()
        .flat_map(|x| v.iter().map(move |y| x * y))
        .collect()
}

fn weight(e: &ModFrac) -> i64 {
    e.num().deg_i64() + e.den().deg_i64()
}

/// Gaussian elimination over F_p(X); `None` when `m` is singular.
fn solve(mut m: Vec<ModFrac>, n: usize, mut b: Vec<ModFrac>) -> Option<Vec<ModFrac>> {
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !m[r * n + col].is_zero())
            .min_by_key(|&r| weight(&m[r * n + col]))?;
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        let inv = m[col * n + col].inv().ok()?;
        for j in col..n {
            m[col * n + j] = &m[col * n + j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || m[r * n + col].is_zero() {
                continue;
            }
            let f = m[r * n + col].clone();
            for j in col..n {
                if !m[col * n + j].is_zero() {
                    m[r * n + j] = &m[r * n + j] - &(&f * &m[col * n + j]);
                }
            }
            if !b[col].is_zero() {
                b[r] = &b[r] - &(&f * &b[col]);
            }
        }
    }
    Some(b)
}

/// Shortest recurrence `c_{k+r} = Σ_{i<r} a_i c_{k+i}` generating `seq`.
pub fn berlekamp_massey(seq: &[ModFrac]) -> Vec<ModFrac> {
    let p = seq.first().map(ModFrac::modulus).unwrap_or(2);
    let mut c = vec![ModFrac::one(p)];
    let mut b = vec![ModFrac::one(p)];
    let mut len = 0usize;
    let mut gap = 1usize;
    let mut last = ModFrac::one(p);
    for n in 0..seq.len() {
        let mut d = seq[n].clone();
        for i in 1..=len {
            if !c[i].is_zero() && !seq[n - i].is_zero() {
                d = &d + &(&c[i] * &seq[n - i]);
            }
        }
        if d.is_zero() {
            gap += 1;
            continue;
        }
        let coef = &d * &last.inv().expect("nonzero discrepancy");
        let prev = c.clone();
        if c.len() < b.len() + gap {
            c.resize(b.len() + gap, ModFrac::zero(p));
        }
        for (i, bi) in b.iter().enumerate() {
            if !bi.is_zero() {
                c[i + gap] = &c[i + gap] - &(&coef * bi);
            }
        }
        if 2 * len <= n {
            len = n + 1 - len;
            b = prev;
            last = d;
            gap = 1;
        } else {
            gap += 1;
        }
    }
    c.resize(len + 1, ModFrac::zero(p));
    // c_n = -Σ_{i=1..len} C_i c_{n-i}; a_j multiplies c_{k+j}.
    (0..len).map(|j| -&c[len - j]).collect()
}

fn recurrence_holds(rec: &[ModFrac], seq: &[ModFrac]) -> bool {
    let r = rec.len();
    (r..seq.len()).all(|k| {
        let p = seq[0].modulus();
        let s = rec
            .iter()
            .zip(&seq[k - r..k])
            .fold(ModFrac::zero(p), |acc, (a, c)| &acc + &(a * c));
        s == seq[k]
    })
}

fn companion(rec: &[ModFrac], init: &[ModFrac], p: u32) -> PseudoLinearRep {
    let r = rec.len();
    if r == 0 {
        return PseudoLinearRep {
            dim: 1,
            a: vec![ModFrac::zero(p)],
            u: vec![ModFrac::zero(p)],
        };
    }
    let mut a = vec![ModFrac::zero(p); r * r];
    for i in 0..r - 1 {
        a[i * r + i + 1] = ModFrac::one(p);
    }
    a[(r - 1) * r..].clone_from_slice(rec);
    PseudoLinearRep {
        dim: r,
        a,
        u: init.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffpoly::{ModPoly, DEFAULT_PRIME};
    use proptest::prelude::*;

    const P: u32 = DEFAULT_PRIME;

    fn tau() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(
            &[vec![(1, 0), (1, 0)], vec![(0, 0), (1, 0)]],
            &[(1, 0), (1, 0)],
            P,
        )
    }
    fn one() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(&[vec![(1, 0)]], &[(1, 0)], P)
    }
    fn eps() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(&[vec![(0, 0)]], &[(1, 0)], P)
    }
    fn liouville() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(&[vec![(-1, 0)]], &[(1, 0)], P)
    }
    fn id() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(&[vec![(1, 1)]], &[(1, 0)], P)
    }
    fn mu() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(
            &[vec![(0, 0), (1, 0)], vec![(0, 0), (0, 0)]],
            &[(1, 0), (-1, 0)],
            P,
        )
    }
    fn phi() -> PseudoLinearRep {
        PseudoLinearRep::new(
            vec![
                vec![ModFrac::zero(P), ModFrac::one(P)],
                vec![ModFrac::zero(P), ModFrac::x_pow(1, P)],
            ],
            vec![
                ModFrac::one(P),
                ModFrac::from_poly(ModPoly::from_i64(&[-1, 1], P)),
            ],
        )
        .unwrap()
    }
    fn xi2() -> PseudoLinearRep {
        PseudoLinearRep::from_monomials(
            &[vec![(0, 0), (1, 0)], vec![(0, 0), (0, 0)]],
            &[(1, 0), (1, 0)],
            P,
        )
    }
    fn poly(c: &[i64]) -> ModFrac {
        ModFrac::from_poly(ModPoly::from_i64(c, P))
    }
    fn frac(n: &[i64], d: &[i64]) -> ModFrac {
        ModFrac::new(ModPoly::from_i64(n, P), ModPoly::from_i64(d, P)).unwrap()
    }

    #[test]
    fn bell_coeff_examples() {
        assert_eq!(tau().bell_coeff(3), ModFrac::constant(4, P));
        assert_eq!(phi().bell_coeff(0), ModFrac::one(P));
        assert_eq!(one().shift(2).bell_coeff(2), ModFrac::x_pow(-4, P));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(one().shift(2).bell_coeff(1), ModFrac::x_pow(-2, P));
        assert_eq!(tau().shift(0), tau());
    }

    #[test]
    fn product_examples() {
        assert_eq!(tau().product(&tau()).bell_coeff(2), ModFrac::constant(9, P));
        let pe = phi().product(&eps());
        assert!(pe.bell_coeff(0).is_one());
        assert!((1..6).all(|k| pe.bell_coeff(k).is_zero()));
        let ll = liouville().product(&liouville());
        assert!((0..6).all(|k| ll.bell_coeff(k).is_one()));
    }

    #[test]
    fn convolve_examples() {
        let c = mu().convolve(&id()).unwrap();
        assert_eq!(c.dim(), 1 + 2 * 2);
        assert_eq!(c.bell_coeff(1), poly(&[-1, 1]));
        assert_eq!(c.bell_coeff(2), poly(&[0, -1, 1]));
        for k in 0..7 {
            assert_eq!(c.bell_coeff(k), phi().bell_coeff(k));
        }
        assert_eq!(one().convolve(&one()), Err(RepError::SingularConvolution));
        // Shifting one side breaks the shared eigenvalue.
        let c = one().convolve(&one().shift(1)).unwrap();
        assert_eq!(c.bell_coeff(2), frac(&[1, 1, 1], &[0, 0, 1]));
    }

    #[test]
    fn power_examples() {
        assert_eq!(tau().power(1).bell_coeffs(6), tau().bell_coeffs(6));
        assert_eq!(tau().power(2).bell_coeff(1), ModFrac::constant(3, P));
        let x = xi2().power(3);
        assert!((1..6).all(|k| x.bell_coeff(k).is_zero()));
    }

    #[test]
    fn reduce_examples() {
        let tt = tau().product(&tau()).reduce();
        assert_eq!(tt.dim(), 3);
        for k in 0..10 {
            assert_eq!(
                tt.bell_coeff(k),
                ModFrac::constant(((k + 1) * (k + 1)) as i64, P)
            );
        }
        assert_eq!(one().reduce().dim(), 1);
        assert_eq!(mu().convolve(&id()).unwrap().reduce().dim(), 2);
        let z = eps().product(&mu()).reduce();
        assert!(z.bell_coeff(0).is_one() && z.bell_coeff(1).is_zero());
    }

    #[test]
    fn rfraction_examples() {
        for s in 1..6 {
            let xs = ModPoly::monomial(1, s as usize, P);
            let want = ModFrac::new(xs.clone(), &xs - &ModPoly::one(P)).unwrap();
            assert_eq!(one().rfraction_at(s).unwrap(), want);
            if s == 1 {
                continue;
            }
            let want = ModFrac::new(&xs - &ModPoly::one(P), &xs - &ModPoly::x(P)).unwrap();
            assert_eq!(phi().rfraction_at(s).unwrap(), want);
        }
        assert_eq!(one().to_rfraction(), Err(RepError::DivergentBellSeries));
    }

    #[test]
    fn min_shift_examples() {
        assert_eq!(one().min_shift().unwrap(), 2);
        assert_eq!(phi().min_shift().unwrap(), 3);
        assert_eq!(liouville().min_shift().unwrap(), 2);
        assert_eq!(eps().min_shift().unwrap(), 0);
        assert_eq!(tau().min_shift().unwrap(), 2);
        assert_eq!(id().min_shift().unwrap(), 3);
    }

    #[test]
    fn berlekamp_massey_geometric() {
        let seq: Vec<ModFrac> = (0..6).map(|k| ModFrac::x_pow(k, P)).collect();
        assert_eq!(berlekamp_massey(&seq), vec![ModFrac::x_pow(1, P)]);
    }

    fn arb_leaf() -> impl Strategy<Value = PseudoLinearRep> {
        prop_oneof![
            Just(tau()),
            Just(one()),
            Just(eps()),
            Just(liouville()),
            Just(id()),
            Just(mu()),
            Just(phi()),
            Just(xi2()),
        ]
    }

    fn arb_rep() -> impl Strategy<Value = PseudoLinearRep> {
        (arb_leaf(), arb_leaf(), -2i64..3, 1u32..3).prop_map(|(a, b, s, l)| {
            match a.convolve(&b.shift(s.max(1))) {
                Ok(c) => c.reduce().power(l),
                Err(_) => a.product(&b).power(l),
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn shift_composes(r in arb_rep(), a in -3i64..4, b in -3i64..4) {
            prop_assert_eq!(r.shift(a).shift(b).bell_coeffs(7), r.shift(a + b).bell_coeffs(7));
        }

        #[test]
        fn reduce_preserves_coefficients(r in arb_rep()) {
            let red = r.reduce();
            prop_assert!(red.dim() <= r.dim());
            let n = 2 * r.dim() + 2;
            prop_assert_eq!(red.bell_coeffs(n), r.bell_coeffs(n));
            prop_assert_eq!(red.reduce().dim(), red.dim());
        }

        #[test]
        fn shift_commutes_with_convolution(a in arb_leaf(), b in arb_leaf(), s in -2i64..3) {
            let b = b.shift(1);
            if let (Ok(lhs), Ok(rhs)) = (a.convolve(&b), a.shift(s).convolve(&b.shift(s))) {
                prop_assert_eq!(lhs.shift(s).bell_coeffs(7), rhs.bell_coeffs(7));
            }
        }

        #[test]
        fn rfraction_matches_series(r in arb_rep(), s in 3i64..6, q in prop::sample::select(vec![2u32, 3, 5, 7])) {
            // Evaluating at X = q commutes with the solve over F_p(X).
            let shifted = r.shift(s);
            if let Ok(rf) = shifted.to_rfraction() {
                if let Some(v) = rf.eval(q) {
                    let n = shifted.dim();
                    let mut ok = true;
                    let a: Vec<u32> = (0..n * n).filter_map(|i| shifted.a[i].eval(q)).collect();
                    let u: Vec<u32> = shifted.u.iter().filter_map(|e| e.eval(q)).collect();
                    if a.len() == n * n && u.len() == n {
                        let m: Vec<ModFrac> = (0..n * n)
                            .map(|i| {
                                let diag = if i / n == i % n { 1 } else { 0 };
                                ModFrac::constant(diag - a[i] as i64, P)
                            })
                            .collect();
                        let b: Vec<ModFrac> = u.iter().map(|&x| ModFrac::constant(x as i64, P)).collect();
                        if let Some(w) = solve(m, n, b) {
                            ok = w[0] == ModFrac::constant(v as i64, P);
                        }
                    }
                    prop_assert!(ok);
                }
            }
        }
    }
}
