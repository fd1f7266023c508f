//! Multiplicative functions as expression trees.
//!
//! Every leaf has a hand-written pseudo-linear representation and an exact
//! prime-power value oracle. Composite expressions are closed under pointwise
//! product, Dirichlet convolution and power substitution `m ↦ f(m^ℓ)`.

mod grammar;
mod spf;

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

use crate::ffpoly::{ModFrac, ModPoly};
use crate::pseudolinear::{PseudoLinearRep, RepError};

pub use grammar::{parse_expr, parse_int_expr, Bindings, IntExpr, ParseError, PatExpr};
pub use spf::SpfTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuncError {
    #[error("unknown leaf `{0}`")]
    UnknownLeaf(String),
    #[error("invalid parameter for {leaf}: {msg}")]
    InvalidParam { leaf: String, msg: String },
    #[error("singular convolution in `{0}`")]
    SingularConvolution(String),
    #[error("{n} is outside the factor table (size {size})")]
    OutOfRange { n: u64, size: u64 },
    #[error(transparent)]
    Rep(#[from] RepError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafKind {
    One,
    Epsilon,
    Id,
    Phi,
    Sigma,
    Tau,
    TauK,
    Mu,
    MuK,
    Jordan,
    Liouville,
    ZetaK,
    Nu,
    Xi,
    Theta,
    SigmaPrime,
    Psi,
}

impl LeafKind {
    pub const ALL: [LeafKind; 17] = [
        LeafKind::One,
        LeafKind::Epsilon,
        LeafKind::Id,
        LeafKind::Phi,
        LeafKind::Sigma,
        LeafKind::Tau,
        LeafKind::TauK,
        LeafKind::Mu,
        LeafKind::MuK,
        LeafKind::Jordan,
        LeafKind::Liouville,
        LeafKind::ZetaK,
        LeafKind::Nu,
        LeafKind::Xi,
        LeafKind::Theta,
        LeafKind::SigmaPrime,
        LeafKind::Psi,
    ];

    /// Name in the config grammar.
    pub fn grammar_name(self) -> &'static str {
        match self {
            LeafKind::One => "one",
            LeafKind::Epsilon => "epsilon",
            LeafKind::Id => "id",
            LeafKind::Phi => "phi",
            LeafKind::Sigma => "sigma",
            LeafKind::Tau => "tau",
            LeafKind::TauK => "tau_k",
            LeafKind::Mu => "mu",
            LeafKind::MuK => "mu_k",
            LeafKind::Jordan => "jordan",
            LeafKind::Liouville => "lambda",
            LeafKind::ZetaK => "zeta",
            LeafKind::Nu => "nu",
            LeafKind::Xi => "xi",
            LeafKind::Theta => "theta",
            LeafKind::SigmaPrime => "sigmaprime",
            LeafKind::Psi => "psi",
        }
    }

    pub fn from_grammar_name(name: &str) -> Option<LeafKind> {
        LeafKind::ALL
            .into_iter()
            .find(|k| k.grammar_name() == name)
            .or(match name {
                "eps" => Some(LeafKind::Epsilon),
                "liouville" => Some(LeafKind::Liouville),
                "J" => Some(LeafKind::Jordan),
                _ => None,
            })
    }

    pub fn takes_param(self) -> bool {
        matches!(
            self,
            LeafKind::Sigma
                | LeafKind::TauK
                | LeafKind::MuK
                | LeafKind::Jordan
                | LeafKind::ZetaK
                | LeafKind::Nu
                | LeafKind::Xi
                | LeafKind::SigmaPrime
                | LeafKind::Psi
        )
    }

    pub fn min_param(self) -> u32 {
        match self {
            LeafKind::TauK | LeafKind::MuK | LeafKind::Nu | LeafKind::Xi => 1,
            _ => 0,
        }
    }
}

/// A catalog leaf with its integer parameter (zero when unused).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leaf {
    pub kind: LeafKind,
    pub param: u32,
}

impl Leaf {
    pub fn new(kind: LeafKind, param: u32) -> Result<Leaf, FuncError> {
        if !kind.takes_param() {
            return Ok(Leaf { kind, param: 0 });
        }
        if param < kind.min_param() {
            return Err(FuncError::InvalidParam {
                leaf: kind.grammar_name().into(),
                msg: format!("needs k >= {}, got {param}", kind.min_param()),
            });
        }
        Ok(Leaf { kind, param })
    }

    pub fn plain(kind: LeafKind) -> Leaf {
        Leaf { kind, param: 0 }
    }

    /// The same function written as another leaf kind, if one exists.
    pub fn as_kind(self, kind: LeafKind) -> Option<u32> {
        if self.kind == kind {
            return Some(self.param);
        }
        let c = self.canonical();
        if c.kind == kind {
            return Some(c.param);
        }
        use LeafKind::*;
        let alt = match (c.kind, kind) {
            (Tau, Sigma) => 0,
            (Tau, TauK) => 2,
            (Phi, Jordan) => 1,
            (Id, ZetaK) => 1,
            (Mu, MuK) => 1,
            (One, ZetaK) => 0,
            (One, TauK) | (One, Nu) => 1,
            (Epsilon, Xi) => 1,
            (Epsilon, Jordan) => 0,
            (Theta, Psi) => 0,
            (Nu, SigmaPrime) if c.param == 2 => 0,
            _ => return None,
        };
        Some(alt)
    }

    /// Representative among equal leaves.
    pub fn canonical(self) -> Leaf {
        use LeafKind::*;
        let k = self.param;
        let kind = match (self.kind, k) {
            (Sigma, 0) | (TauK, 2) => Tau,
            (Jordan, 1) => Phi,
            (ZetaK, 1) => Id,
            (MuK, 1) => Mu,
            (ZetaK, 0) | (TauK, 1) | (Nu, 1) => One,
            (Xi, 1) | (Jordan, 0) => Epsilon,
            (Psi, 0) => Theta,
            (SigmaPrime, 0) => return Leaf { kind: Nu, param: 2 },
            _ => return self,
        };
        Leaf::plain(kind)
    }

    /// Exact value at `q^j`.
    pub fn value(self, q: u64, j: u32) -> BigInt {
        let k = self.param;
        let qb = BigInt::from(q);
        let qpow = |e: u64| -> BigInt { Pow::pow(&qb, e) };
        let ind = |b: bool| BigInt::from(b as i32);
        match self.kind {
            LeafKind::One => BigInt::one(),
            LeafKind::Epsilon => ind(j == 0),
            LeafKind::Id => qpow(j as u64),
            LeafKind::Phi => Leaf {
                kind: LeafKind::Jordan,
                param: 1,
            }
            .value(q, j),
            LeafKind::Sigma => (0..=j as u64).map(|i| qpow(i * k as u64)).sum(),
            LeafKind::Tau => BigInt::from(j + 1),
            LeafKind::TauK => binomial(j as u64 + k as u64 - 1, k as u64 - 1),
            LeafKind::Mu => ind(j == 0) - ind(j == 1),
            LeafKind::MuK => ind(j == 0) - ind(j == k),
            LeafKind::Jordan if j == 0 => BigInt::one(),
            LeafKind::Jordan => qpow(j as u64 * k as u64) - qpow((j as u64 - 1) * k as u64),
            LeafKind::Liouville => BigInt::from(if j.is_multiple_of(2) { 1 } else { -1 }),
            LeafKind::ZetaK => qpow(j as u64 * k as u64),
            LeafKind::Nu => ind(j.is_multiple_of(k)),
            LeafKind::Xi => ind(j < k),
            LeafKind::Theta => BigInt::from(if j == 0 { 1 } else { 2 }),
            LeafKind::SigmaPrime => (0..=j as u64)
                .map(|i| {
                    let t = qpow(i * k as u64);
                    if i % 2 == 0 {
                        t
                    } else {
                        -t
                    }
                })
                .sum(),
            LeafKind::Psi if j == 0 => BigInt::one(),
            LeafKind::Psi => qpow(j as u64 * k as u64) + qpow((j as u64 - 1) * k as u64),
        }
    }

    /// Hand-written representation over F_p.
    pub fn rep(self, p: u32) -> PseudoLinearRep {
        let k = self.param as i64;
        let m = |c: i64, d: i64| ModFrac::monomial(c, d, p);
        let z = || ModFrac::zero(p);
        let o = || ModFrac::one(p);
        let square = |n: usize, f: &dyn Fn(usize, usize) -> ModFrac| -> Vec<Vec<ModFrac>> {
            (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
        };
        let build = |a: Vec<Vec<ModFrac>>, u: Vec<ModFrac>| {
            PseudoLinearRep::new(a, u).expect("leaf representation is well formed")
        };
        let jordan_like = |sign: i64| {
            let xk = ModPoly::monomial(1, k as usize, p);
            let u1 = &xk + &ModPoly::constant(sign, p);
            build(
                vec![vec![z(), o()], vec![z(), m(1, k)]],
                vec![o(), ModFrac::from_poly(u1)],
            )
        };
        match self.kind {
            LeafKind::One => build(vec![vec![o()]], vec![o()]),
            LeafKind::Epsilon => build(vec![vec![z()]], vec![o()]),
            LeafKind::Id => build(vec![vec![m(1, 1)]], vec![o()]),
            LeafKind::Phi => Leaf {
                kind: LeafKind::Jordan,
                param: 1,
            }
            .rep(p),
            LeafKind::Sigma => build(vec![vec![o(), m(1, k)], vec![z(), m(1, k)]], vec![o(), o()]),
            LeafKind::Tau => Leaf {
                kind: LeafKind::TauK,
                param: 2,
            }
            .rep(p),
            LeafKind::TauK => {
                let n = self.param as usize;
                build(
                    square(n, &|i, j| if j >= i { o() } else { z() }),
                    vec![o(); n],
                )
            }
            LeafKind::Mu => Leaf {
                kind: LeafKind::MuK,
                param: 1,
            }
            .rep(p),
            LeafKind::MuK => {
                let n = self.param as usize + 1;
                let mut u = vec![z(); n];
                u[0] = o();
                u[n - 1] = m(-1, 0);
                build(square(n, &|i, j| if j == i + 1 { o() } else { z() }), u)
            }
            LeafKind::Jordan => jordan_like(-1),
            LeafKind::Liouville => build(vec![vec![m(-1, 0)]], vec![o()]),
            LeafKind::ZetaK => build(vec![vec![m(1, k)]], vec![o()]),
            LeafKind::Nu => {
                let n = self.param as usize;
                let mut u = vec![z(); n];
                u[0] = o();
                build(
                    square(n, &|i, j| if j == (i + 1) % n { o() } else { z() }),
                    u,
                )
            }
            LeafKind::Xi => {
                let n = self.param as usize;
                build(
                    square(n, &|i, j| if j == i + 1 { o() } else { z() }),
                    vec![o(); n],
                )
            }
            LeafKind::Theta => build(vec![vec![z(), o()], vec![z(), o()]], vec![o(), m(2, 0)]),
            LeafKind::SigmaPrime => build(
                vec![vec![o(), m(-1, k)], vec![z(), m(-1, k)]],
                vec![o(), o()],
            ),
            LeafKind::Psi => jordan_like(1),
        }
    }

    fn subscript(self) -> Option<u32> {
        match self.kind {
            LeafKind::Sigma | LeafKind::SigmaPrime | LeafKind::Psi if self.param == 1 => None,
            k if k.takes_param() => Some(self.param),
            _ => None,
        }
    }

    fn shell_base(self) -> &'static str {
        match self.kind {
            LeafKind::One => "𝟙",
            LeafKind::Epsilon => "ε",
            LeafKind::Id => "Id",
            LeafKind::Phi => "φ",
            LeafKind::Sigma => "σ",
            LeafKind::Tau | LeafKind::TauK => "τ",
            LeafKind::Mu | LeafKind::MuK => "μ",
            LeafKind::Jordan => "J",
            LeafKind::Liouville => "λ",
            LeafKind::ZetaK => "ζ",
            LeafKind::Nu => "ν",
            LeafKind::Xi => "ξ",
            LeafKind::Theta => "θ",
            LeafKind::SigmaPrime => "σ'",
            LeafKind::Psi => "ψ",
        }
    }

    fn latex_base(self) -> &'static str {
        match self.kind {
            LeafKind::One => "\\mathbf{1}",
            LeafKind::Epsilon => "\\varepsilon",
            LeafKind::Id => "\\mathrm{Id}",
            LeafKind::Phi => "\\varphi",
            LeafKind::Sigma => "\\sigma",
            LeafKind::Tau | LeafKind::TauK => "\\tau",
            LeafKind::Mu | LeafKind::MuK => "\\mu",
            LeafKind::Jordan => "J",
            LeafKind::Liouville => "\\lambda",
            LeafKind::ZetaK => "\\zeta",
            LeafKind::Nu => "\\nu",
            LeafKind::Xi => "\\xi",
            LeafKind::Theta => "\\theta",
            LeafKind::SigmaPrime => "\\sigma'",
            LeafKind::Psi => "\\psi",
        }
    }
}

fn binomial(n: u64, r: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn subscript_digits(n: u32) -> String {
    const SUB: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    n.to_string()
        .bytes()
        .map(|b| SUB[(b - b'0') as usize])
        .collect()
}

/// Expression over the leaf catalog.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FuncExpr {
    Leaf(Leaf),
    /// Factors with positive exponents, in construction order.
    Product(Vec<(FuncExpr, u32)>),
    Convolution(Box<FuncExpr>, Box<FuncExpr>),
    PowerSub(Box<FuncExpr>, u32),
}

impl From<Leaf> for FuncExpr {
    fn from(l: Leaf) -> Self {
        FuncExpr::Leaf(l)
    }
}

impl FuncExpr {
    pub fn leaf(kind: LeafKind, param: u32) -> Result<FuncExpr, FuncError> {
        Ok(FuncExpr::Leaf(Leaf::new(kind, param)?))
    }

    pub fn one() -> FuncExpr {
        FuncExpr::Leaf(Leaf::plain(LeafKind::One))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, FuncExpr::Leaf(l) if l.canonical().kind == LeafKind::One)
    }

    /// Flattened product; merges equal factors and drops `𝟙` and zero exponents.
    pub fn product<I: IntoIterator<Item = (FuncExpr, u32)>>(factors: I) -> FuncExpr {
        let mut out: Vec<(FuncExpr, u32)> = Vec::new();
        fn push(out: &mut Vec<(FuncExpr, u32)>, f: FuncExpr, e: u32) {
            if e == 0 || f.is_one() {
                return;
            }
            if let FuncExpr::Product(inner) = f {
                for (g, d) in inner {
                    push(out, g, d * e);
                }
                return;
            }
            match out.iter_mut().find(|(g, _)| *g == f) {
                Some(slot) => slot.1 += e,
                None => out.push((f, e)),
            }
        }
        for (f, e) in factors {
            push(&mut out, f, e);
        }
        match out.len() {
            0 => FuncExpr::one(),
            1 if out[0].1 == 1 => out.pop().expect("one factor").0,
            _ => FuncExpr::Product(out),
        }
    }

    pub fn times(&self, other: &FuncExpr) -> FuncExpr {
        FuncExpr::product([(self.clone(), 1), (other.clone(), 1)])
    }

    pub fn pow(&self, e: u32) -> FuncExpr {
        FuncExpr::product([(self.clone(), e)])
    }

    pub fn conv(a: FuncExpr, b: FuncExpr) -> FuncExpr {
        FuncExpr::Convolution(Box::new(a), Box::new(b))
    }

    pub fn power_sub(f: FuncExpr, ell: u32) -> FuncExpr {
        if ell == 1 {
            f
        } else {
            FuncExpr::PowerSub(Box::new(f), ell)
        }
    }

    /// Number of leaf factors counted with multiplicity.
    pub fn score(&self) -> u32 {
        match self {
            FuncExpr::Leaf(l) if l.canonical().kind == LeafKind::One => 0,
            FuncExpr::Leaf(_) => 1,
            FuncExpr::Product(fs) => fs.iter().map(|(f, e)| f.score() * e).sum(),
            FuncExpr::Convolution(a, b) => a.score() + b.score(),
            FuncExpr::PowerSub(f, _) => f.score(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            FuncExpr::Leaf(_) => 0,
            FuncExpr::Product(fs) => 1 + fs.iter().map(|(f, _)| f.depth()).max().unwrap_or(0),
            FuncExpr::Convolution(a, b) => 1 + a.depth().max(b.depth()),
            FuncExpr::PowerSub(f, _) => 1 + f.depth(),
        }
    }

    /// Structural normal form: leaf aliases resolved, products sorted.
    pub fn canonical(&self) -> FuncExpr {
        match self {
            FuncExpr::Leaf(l) => FuncExpr::Leaf(l.canonical()),
            FuncExpr::Product(fs) => {
                let merged = FuncExpr::product(fs.iter().map(|(f, e)| (f.canonical(), *e)));
                match merged {
                    FuncExpr::Product(mut fs) => {
                        fs.sort();
                        FuncExpr::Product(fs)
                    }
                    other => other,
                }
            }
            FuncExpr::Convolution(a, b) => {
                let (a, b) = (a.canonical(), b.canonical());
                if a <= b {
                    FuncExpr::conv(a, b)
                } else {
                    FuncExpr::conv(b, a)
                }
            }
            FuncExpr::PowerSub(f, l) => FuncExpr::power_sub(f.canonical(), *l),
        }
    }

    /// Exact value at the prime power `q^j`.
    pub fn prime_power_value(&self, q: u64, j: u32) -> BigInt {
        match self {
            FuncExpr::Leaf(l) => l.value(q, j),
            FuncExpr::Product(fs) => fs
                .iter()
                .map(|(f, e)| Pow::pow(f.prime_power_value(q, j), *e))
                .product(),
            FuncExpr::Convolution(a, b) => (0..=j)
                .map(|i| a.prime_power_value(q, i) * b.prime_power_value(q, j - i))
                .sum(),
            FuncExpr::PowerSub(f, l) => f.prime_power_value(q, j * l),
        }
    }

    /// Representation with reduction after every composite node.
    pub fn rep(&self, p: u32) -> Result<PseudoLinearRep, FuncError> {
        match self {
            FuncExpr::Leaf(l) => Ok(l.rep(p)),
            FuncExpr::Product(fs) => {
                let mut acc: Option<PseudoLinearRep> = None;
                for (f, e) in fs {
                    let r = f.rep(p)?;
                    for _ in 0..*e {
                        acc = Some(match acc {
                            None => r.clone(),
                            Some(a) => a.product(&r).reduce(),
                        });
                    }
                }
                Ok(acc.unwrap_or_else(|| Leaf::plain(LeafKind::One).rep(p)))
            }
            FuncExpr::Convolution(a, b) => {
                let (ra, rb) = (a.rep(p)?, b.rep(p)?);
                match ra.convolve(&rb) {
                    Ok(r) => Ok(r.reduce()),
                    Err(RepError::SingularConvolution) => {
                        Err(FuncError::SingularConvolution(self.to_string()))
                    }
                    Err(e) => Err(e.into()),
                }
            }
            FuncExpr::PowerSub(f, l) => Ok(f.rep(p)?.power(*l).reduce()),
        }
    }

    /// `f(n)`, factoring `n` with the table.
    pub fn value(&self, n: u64, spf: &SpfTable) -> Result<BigInt, FuncError> {
        if n > spf.limit() {
            return Err(FuncError::OutOfRange {
                n,
                size: spf.limit(),
            });
        }
        Ok(spf
            .factor(n)
            .into_iter()
            .map(|(q, j)| self.prime_power_value(q, j))
            .product())
    }

    /// Text accepted by [`parse_expr`].
    pub fn to_grammar(&self) -> String {
        match self {
            FuncExpr::Leaf(l) if l.kind.takes_param() => {
                format!("{}:{}", l.kind.grammar_name(), l.param)
            }
            FuncExpr::Leaf(l) => l.kind.grammar_name().to_string(),
            FuncExpr::Product(fs) => fs
                .iter()
                .map(|(f, e)| {
                    let inner = f.to_grammar();
                    if *e == 1 {
                        inner
                    } else {
                        format!("{inner}^{e}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" * "),
            FuncExpr::Convolution(a, b) => format!("conv({}, {})", a.to_grammar(), b.to_grammar()),
            FuncExpr::PowerSub(f, l) => format!("powersub({}, {l})", f.to_grammar()),
        }
    }

    /// Unicode rendering, e.g. `λ σ'^2`.
    pub fn shell(&self) -> String {
        let mut s = String::new();
        self.write_shell(&mut s);
        s
    }

    fn write_shell(&self, s: &mut String) {
        match self {
            FuncExpr::Leaf(l) => {
                s.push_str(l.shell_base());
                if let Some(k) = l.subscript() {
                    s.push_str(&subscript_digits(k));
                }
            }
            FuncExpr::Product(fs) => {
                for (i, (f, e)) in fs.iter().enumerate() {
                    if i > 0 {
                        s.push(' ');
                    }
                    f.write_shell(s);
                    if *e > 1 {
                        let _ = write!(s, "^{e}");
                    }
                }
            }
            FuncExpr::Convolution(a, b) => {
                s.push('(');
                a.write_shell(s);
                s.push_str(" ∗ ");
                b.write_shell(s);
                s.push(')');
            }
            FuncExpr::PowerSub(f, l) => {
                s.push_str("(m ↦ ");
                if matches!(**f, FuncExpr::Product(_)) {
                    s.push('(');
                    f.write_shell(s);
                    s.push(')');
                } else {
                    f.write_shell(s);
                }
                let _ = write!(s, "(m^{l}))");
            }
        }
    }

    /// LaTeX math-mode rendering.
    pub fn latex(&self) -> String {
        match self {
            FuncExpr::Leaf(l) => match l.subscript() {
                Some(k) => format!("{}_{{{k}}}", l.latex_base()),
                None => l.latex_base().to_string(),
            },
            FuncExpr::Product(fs) => fs
                .iter()
                .map(|(f, e)| {
                    if *e == 1 {
                        f.latex()
                    } else {
                        format!("{{{}}}^{{{e}}}", f.latex())
                    }
                })
                .collect::<Vec<_>>()
                .join(" "),
            FuncExpr::Convolution(a, b) => format!("({} \\ast {})", a.latex(), b.latex()),
            FuncExpr::PowerSub(f, l) => {
                let inner = if matches!(**f, FuncExpr::Product(_)) {
                    format!("({})", f.latex())
                } else {
                    f.latex()
                };
                format!("(m \\mapsto {inner}(m^{{{l}}}))")
            }
        }
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.shell())
    }
}

/// Direct value of `f(q^j)` reduced mod `p`.
pub fn value_mod(v: &BigInt, p: u32) -> u32 {
    let r = v % BigInt::from(p);
    let r = if r.is_negative() {
        r + BigInt::from(p)
    } else {
        r
    };
    if r.is_zero() {
        0
    } else {
        u32::try_from(r).expect("residue fits")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffpoly::DEFAULT_PRIME;
    use proptest::prelude::*;

    const P: u32 = DEFAULT_PRIME;

    fn leaf(kind: LeafKind, k: u32) -> FuncExpr {
        FuncExpr::leaf(kind, k).unwrap()
    }

    fn all_leaves() -> Vec<Leaf> {
        let mut out = Vec::new();
        for kind in LeafKind::ALL {
            if kind.takes_param() {
                for k in kind.min_param()..=4 {
                    out.push(Leaf::new(kind, k).unwrap());
                }
            } else {
                out.push(Leaf::plain(kind));
            }
        }
        out
    }

    #[test]
    fn leaf_value_examples() {
        assert_eq!(
            Leaf::new(LeafKind::Sigma, 2).unwrap().value(3, 2),
            BigInt::from(91)
        );
        for j in 1..6 {
            assert_eq!(Leaf::plain(LeafKind::Theta).value(7, j), BigInt::from(2));
        }
        assert_eq!(Leaf::plain(LeafKind::Tau).value(5, 3), BigInt::from(4));
        assert_eq!(
            Leaf::new(LeafKind::TauK, 3).unwrap().value(2, 2),
            BigInt::from(6)
        );
        assert_eq!(
            Leaf::new(LeafKind::MuK, 2).unwrap().value(2, 2),
            BigInt::from(-1)
        );
        assert_eq!(
            Leaf::new(LeafKind::Psi, 1).unwrap().value(3, 2),
            BigInt::from(12)
        );
    }

    #[test]
    fn leaf_rep_examples() {
        let tau = Leaf::plain(LeafKind::Tau).rep(P);
        assert_eq!(tau.entry(0, 0), &ModFrac::one(P));
        assert_eq!(tau.entry(0, 1), &ModFrac::one(P));
        assert_eq!(tau.entry(1, 0), &ModFrac::zero(P));
        assert_eq!(tau.entry(1, 1), &ModFrac::one(P));
        assert_eq!(tau.u(), &[ModFrac::one(P), ModFrac::one(P)]);
        let one = Leaf::plain(LeafKind::One).rep(P);
        assert_eq!(
            (one.dim(), one.entry(0, 0), &one.u()[0]),
            (1, &ModFrac::one(P), &ModFrac::one(P))
        );
        let xi = Leaf::new(LeafKind::Xi, 2).unwrap().rep(P);
        assert_eq!(xi.dim(), 2);
        assert!(xi.bell_coeff(0).is_one() && xi.bell_coeff(1).is_one());
        assert!((2..8).all(|k| xi.bell_coeff(k).is_zero()));
    }

    #[test]
    fn leaf_reps_match_values() {
        for l in all_leaves() {
            let r = l.rep(P);
            let c = r.bell_coeffs(9);
            for q in [2u32, 3, 5, 7] {
                for (j, ck) in c.iter().enumerate() {
                    assert_eq!(
                        ck.eval(q),
                        Some(value_mod(&l.value(q as u64, j as u32), P)),
                        "{:?} at {q}^{j}",
                        l
                    );
                }
            }
        }
    }

    #[test]
    fn aliases_agree_on_values() {
        for l in all_leaves() {
            let c = l.canonical();
            for kind in LeafKind::ALL {
                if let Some(k) = l.as_kind(kind) {
                    let alt = Leaf { kind, param: k };
                    for j in 0..6 {
                        assert_eq!(alt.value(3, j), l.value(3, j), "{l:?} as {alt:?}");
                    }
                }
            }
            for j in 0..6 {
                assert_eq!(c.value(5, j), l.value(5, j), "{l:?} vs {c:?}");
            }
        }
    }

    #[test]
    fn expr_rep_examples() {
        let lt = leaf(LeafKind::Liouville, 0).times(&leaf(LeafKind::Tau, 0));
        assert_eq!(lt.rep(P).unwrap().bell_coeff(2), ModFrac::constant(3, P));

        let c = FuncExpr::conv(leaf(LeafKind::Mu, 0), leaf(LeafKind::ZetaK, 1));
        let (rc, rphi) = (c.rep(P).unwrap(), leaf(LeafKind::Phi, 0).rep(P).unwrap());
        assert_eq!(rc.bell_coeffs(7), rphi.bell_coeffs(7));

        let ps = FuncExpr::power_sub(leaf(LeafKind::Jordan, 2), 3);
        assert_eq!(
            ps.prime_power_value(5, 1),
            BigInt::from(5i64.pow(6) - 5i64.pow(4))
        );
    }

    #[test]
    fn singular_convolution_reports_subexpression() {
        let c = FuncExpr::conv(FuncExpr::one(), FuncExpr::one());
        match c.rep(P) {
            Err(FuncError::SingularConvolution(s)) => assert_eq!(s, "(𝟙 ∗ 𝟙)"),
            other => panic!("{other:?}"),
        }
        let spf = SpfTable::new(100);
        for n in 1..30 {
            let tau_n = leaf(LeafKind::Tau, 0).value(n, &spf).unwrap();
            assert_eq!(c.value(n, &spf).unwrap(), tau_n);
        }
    }

    #[test]
    fn rfraction_of_theta_sigma() {
        let e = leaf(LeafKind::Theta, 0).times(&leaf(LeafKind::Sigma, 1));
        let r = e.rep(P).unwrap().rfraction_at(2).unwrap();
        let num = ModPoly::from_i64(&[1, -2, 0, 0, 1], P);
        let den = &(&ModPoly::from_i64(&[-1, 1], P) * &ModPoly::from_i64(&[-1, 1], P))
            * &ModPoly::from_i64(&[-1, 0, 1], P);
        assert_eq!(r, ModFrac::new(num, den).unwrap());
    }

    #[test]
    fn expr_value_examples() {
        let spf = SpfTable::new(1000);
        assert_eq!(
            leaf(LeafKind::Liouville, 0).value(12, &spf).unwrap(),
            BigInt::from(-1)
        );
        let e = FuncExpr::product([
            (leaf(LeafKind::Liouville, 0), 1),
            (leaf(LeafKind::Tau, 0), 1),
            (leaf(LeafKind::SigmaPrime, 2), 1),
        ]);
        assert_eq!(e.value(4, &spf).unwrap(), BigInt::from(39));
        assert_eq!(e.value(1, &spf).unwrap(), BigInt::one());
        assert!(matches!(
            e.value(5000, &spf),
            Err(FuncError::OutOfRange { .. })
        ));
    }

    #[test]
    fn min_shift_of_composites() {
        let lt = leaf(LeafKind::Liouville, 0).times(&leaf(LeafKind::Tau, 0));
        assert_eq!(lt.rep(P).unwrap().min_shift().unwrap(), 2);
        let lts = lt.times(&leaf(LeafKind::SigmaPrime, 1));
        assert_eq!(lts.rep(P).unwrap().min_shift().unwrap(), 3);
        let ls2 = leaf(LeafKind::Liouville, 0).times(&leaf(LeafKind::SigmaPrime, 1).pow(2));
        assert_eq!(ls2.rep(P).unwrap().min_shift().unwrap(), 4);
    }

    #[test]
    fn rendering() {
        let e = leaf(LeafKind::Liouville, 0).times(&leaf(LeafKind::SigmaPrime, 1).pow(2));
        assert_eq!(e.shell(), "λ σ'^2");
        assert_eq!(e.latex(), "\\lambda {\\sigma'}^{2}");
        assert_eq!(leaf(LeafKind::Jordan, 2).pow(2).shell(), "J₂^2");
        let ps = FuncExpr::power_sub(
            leaf(LeafKind::Theta, 0).times(&leaf(LeafKind::Jordan, 2)),
            3,
        );
        assert_eq!(ps.shell(), "(m ↦ (θ J₂)(m^3))");
        assert_eq!(
            FuncExpr::conv(leaf(LeafKind::Mu, 0), leaf(LeafKind::Id, 0)).shell(),
            "(μ ∗ Id)"
        );
    }

    #[test]
    fn product_normalizes() {
        let l = leaf(LeafKind::Liouville, 0);
        let t = leaf(LeafKind::Tau, 0);
        let a = FuncExpr::product([(l.clone(), 1), (t.clone(), 1), (l.clone(), 1)]);
        assert_eq!(a, FuncExpr::Product(vec![(l.clone(), 2), (t.clone(), 1)]));
        assert_eq!(FuncExpr::product([(l.clone(), 0)]), FuncExpr::one());
        assert_eq!(FuncExpr::product([(l.clone(), 1), (FuncExpr::one(), 3)]), l);
        assert_eq!(l.times(&t).canonical(), t.times(&l).canonical());
    }

    pub(crate) fn arb_leaf() -> impl Strategy<Value = FuncExpr> {
        let leaves = all_leaves();
        prop::sample::select(leaves).prop_map(FuncExpr::Leaf)
    }

    fn arb_expr() -> impl Strategy<Value = FuncExpr> {
        arb_leaf().prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), 1u32..3)
                    .prop_map(|(a, b, e)| FuncExpr::product([(a, 1), (b, e)])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| FuncExpr::conv(a, b)),
                (inner, 2u32..4).prop_map(|(a, l)| FuncExpr::power_sub(a, l)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn multiplicative(e in arb_expr(), a in 1u64..60, b in 1u64..60) {
            let spf = SpfTable::new(4000);
            prop_assume!(num_integer::Integer::gcd(&a, &b) == 1);
            prop_assert_eq!(
                e.value(a * b, &spf).unwrap(),
                e.value(a, &spf).unwrap() * e.value(b, &spf).unwrap()
            );
        }

        #[test]
        fn convolution_associative(a in arb_leaf(), b in arb_leaf(), c in arb_leaf()) {
            let l = FuncExpr::conv(FuncExpr::conv(a.clone(), b.clone()), c.clone());
            let r = FuncExpr::conv(a, FuncExpr::conv(b, c));
            for j in 0..=5 {
                prop_assert_eq!(l.prime_power_value(3, j), r.prime_power_value(3, j));
            }
        }

        #[test]
        fn grammar_roundtrip(e in arb_expr()) {
            let back = parse_expr(&e.to_grammar()).unwrap().instantiate(&Bindings::new()).unwrap();
            prop_assert_eq!(back.canonical(), e.canonical());
        }
    }
}
