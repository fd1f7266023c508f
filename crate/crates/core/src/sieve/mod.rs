//! Factor refinement of R-fractions, exponent decomposition and kernel
//! extraction.

mod basis;
mod kernel;

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ffpoly::{ModFrac, ModPoly};

pub use basis::{basis_sort, HoldingBasis};
pub use kernel::{echelon, kernel_relations, KernelVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SieveError {
    #[error("cannot insert the zero polynomial")]
    ZeroPolynomial,
    #[error("fraction {0} is not a product of basis elements")]
    IncompleteBasis(String),
}

/// Sparse row of `(basis index, exponent)` pairs, indices increasing.
pub type SparseRow = Vec<(usize, BigRational)>;

/// Exponent rows of a list of fractions over a fixed basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompositionMatrix {
    pub rows: Vec<SparseRow>,
    pub cols: usize,
}

/// Strip every power of `b` from `x`; returns the multiplicity.
fn strip(x: &mut ModPoly, b: &ModPoly) -> i64 {
    let bd = b.degree().unwrap_or(0);
    let mut m = 0;
    while x.degree().unwrap_or(0) >= bd {
        match x.try_div_exact(b) {
            Some(q) => {
                *x = q;
                m += 1;
            }
            None => break,
        }
    }
    m
}

/// Exponent of each basis element in `f`.
pub fn decompose(f: &ModFrac, basis: &[ModPoly]) -> Result<SparseRow, SieveError> {
    let mut num = f.num().clone();
    let mut den = f.den().clone();
    if num.is_zero() {
        return Err(SieveError::IncompleteBasis(f.to_string()));
    }
    let mut row = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        if num.is_constant() && den.is_constant() {
            break;
        }
        let e = strip(&mut num, b) - strip(&mut den, b);
        if e != 0 {
            row.push((i, BigRational::from_integer(BigInt::from(e))));
        }
    }
    if !(num.is_constant() && den.is_constant()) {
        return Err(SieveError::IncompleteBasis(f.to_string()));
    }
    Ok(row)
}

/// Decompose every fraction in parallel.
pub fn composition_matrix(
    fractions: &[ModFrac],
    basis: &[ModPoly],
) -> Result<CompositionMatrix, SieveError> {
    let rows = fractions
        .par_iter()
        .map(|f| decompose(f, basis))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CompositionMatrix {
        rows,
        cols: basis.len(),
    })
}

/// Monic-normalized product of `basis[i]^e` over a row.
pub fn reconstruct(row: &SparseRow, basis: &[ModPoly], p: u32) -> ModFrac {
    let mut num = ModPoly::one(p);
    let mut den = ModPoly::one(p);
    for (i, e) in row {
        assert!(e.is_integer(), "non-integral exponent {e}");
        let k = e.to_integer();
        let mag = u32::try_from(num_traits::Signed::abs(&k)).expect("exponent overflow");
        let pw = basis[*i].pow(mag);
        if k > BigInt::zero() {
            num = &num * &pw;
        } else {
            den = &den * &pw;
        }
    }
    ModFrac::new(num, den)
        .expect("basis elements are nonzero")
        .monic()
}

/// Every numerator and denominator, the inputs of a basis build.
pub fn fraction_polys(fractions: &[ModFrac]) -> Vec<ModPoly> {
    fractions
        .iter()
        .flat_map(|f| [f.num().clone(), f.den().clone()])
        .filter(|p| !p.is_zero())
        .collect()
}

#[derive(Serialize)]
struct DebugDump<'a> {
    modulus: u32,
    basis: Vec<Vec<u32>>,
    rows: Vec<Vec<(usize, String)>>,
    labels: &'a [String],
}

/// Write the basis (coefficient lists) and sparse rows as JSON.
pub fn dump_debug(
    path: &Path,
    p: u32,
    basis: &[ModPoly],
    matrix: &CompositionMatrix,
    labels: &[String],
) -> std::io::Result<()> {
    let dump = DebugDump {
        modulus: p,
        basis: basis.iter().map(|b| b.coeffs().to_vec()).collect(),
        rows: matrix
            .rows
            .iter()
            .map(|r| r.iter().map(|(i, e)| (*i, e.to_string())).collect())
            .collect(),
        labels,
    };
    let text = serde_json::to_string_pretty(&dump).map_err(std::io::Error::other)?;
    std::fs::write(path, text)
}
