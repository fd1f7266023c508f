//! Left null space of a composition matrix by fraction-free elimination.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::CompositionMatrix;

/// Integer combination of matrix rows summing to zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KernelVector {
    pub coeffs: BTreeMap<usize, BigInt>,
}

impl KernelVector {
    pub fn support(&self) -> usize {
        self.coeffs.len()
    }

    /// Dense coefficients over `n` rows.
    pub fn to_dense(&self, n: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); n];
        for (i, c) in &self.coeffs {
            v[*i] = c.clone();
        }
        v
    }
}

type Sparse = BTreeMap<usize, BigInt>;

fn axpy(dst: &mut Sparse, a: &BigInt, src: &Sparse, b: &BigInt) {
    // dst = a*dst + b*src
    if !a.is_one() {
        for v in dst.values_mut() {
            *v *= a;
        }
    }
    for (k, v) in src {
        let e = dst.entry(*k).or_insert_with(BigInt::zero);
        *e += b * v;
        if e.is_zero() {
            dst.remove(k);
        }
    }
}

fn content(parts: &[&Sparse]) -> BigInt {
    parts
        .iter()
        .flat_map(|p| p.values())
        .fold(BigInt::zero(), |g, v| g.gcd(v))
}

fn divide(s: &mut Sparse, g: &BigInt) {
    for v in s.values_mut() {
        *v /= g;
    }
}

/// Primitive form with a positive first coefficient.
fn normalize(mut v: Sparse) -> Sparse {
    let g = content(&[&v]);
    if g.is_zero() {
        return v;
    }
    let neg = v.values().next().is_some_and(|c| c.is_negative());
    let g = if neg { -g } else { g };
    divide(&mut v, &g);
    v
}

fn weight(v: &Sparse) -> (usize, BigInt) {
    (v.len(), v.values().map(|c| c.abs()).sum())
}

/// Replace vectors by `v_i - t v_j` while that shrinks their support (then
/// their coefficient mass).
fn pairwise_reduce(vs: &mut [Sparse]) {
    for _ in 0..8 {
        let mut changed = false;
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                if i == j {
                    continue;
                }
                let mut best: Option<(Sparse, (usize, BigInt))> = None;
                for (k, cj) in &vs[j] {
                    let Some(ci) = vs[i].get(k) else { continue };
                    let (t, r) = ci.div_rem(cj);
                    if !r.is_zero() {
                        continue;
                    }
                    let mut cand = vs[i].clone();
                    axpy(&mut cand, &BigInt::one(), &vs[j], &-t);
                    if cand.is_empty() {
                        continue;
                    }
                    let cand = normalize(cand);
                    let w = weight(&cand);
                    let current = best
                        .as_ref()
                        .map_or_else(|| weight(&vs[i]), |b| b.1.clone());
                    if w < current {
                        best = Some((cand, w));
                    }
                }
                if let Some((cand, _)) = best {
                    vs[i] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Basis of `{c : Σ c_r M[r] = 0}`, processed in row order so that each
/// vector is anchored on the first row that becomes dependent.
pub fn kernel_relations(m: &CompositionMatrix) -> Vec<KernelVector> {
    let mut pivots: HashMap<usize, (Sparse, Sparse)> = HashMap::new();
    let mut kernel = Vec::new();
    for (r, row) in m.rows.iter().enumerate() {
        let den = row.iter().fold(BigInt::one(), |l, (_, e)| l.lcm(e.denom()));
        let mut vals: Sparse = row
            .iter()
            .filter(|(_, e)| !e.is_zero())
            .map(|(c, e)| (*c, e.numer() * (&den / e.denom())))
            .collect();
        let mut comb: Sparse = BTreeMap::from([(r, den)]);
        loop {
            let Some((&c, a)) = vals.iter().next() else {
                kernel.push(normalize(comb));
                break;
            };
            match pivots.get(&c) {
                None => {
                    pivots.insert(c, (vals, comb));
                    break;
                }
                Some((prow, pcomb)) => {
                    let b = &prow[&c];
                    let g = a.gcd(b);
                    let (fa, fb) = (b / &g, -(a / &g));
                    axpy(&mut vals, &fa, prow, &fb);
                    axpy(&mut comb, &fa, pcomb, &fb);
                    let g = content(&[&vals, &comb]);
                    if !g.is_one() {
                        divide(&mut vals, &g);
                        divide(&mut comb, &g);
                    }
                }
            }
        }
    }
    pairwise_reduce(&mut kernel);
    kernel
        .into_iter()
        .map(|coeffs| KernelVector { coeffs })
        .collect()
}

/// Reduced echelon form of `vs` on the coordinates `cols`, pivoting in the
/// given order. Each vector ends up with exactly one pivot coordinate and
/// zeros on every other pivot; the result depends only on the span.
pub fn echelon(vs: Vec<KernelVector>, cols: &[usize]) -> Vec<KernelVector> {
    let mut rest: Vec<Sparse> = vs.into_iter().map(|v| v.coeffs).collect();
    let mut done: Vec<(usize, Sparse)> = Vec::new();
    for &c in cols {
        let Some(i) = rest.iter().position(|v| v.contains_key(&c)) else {
            continue;
        };
        let piv = normalize(rest.swap_remove(i));
        let a = piv[&c].clone();
        for v in rest.iter_mut().chain(done.iter_mut().map(|(_, v)| v)) {
            let Some(b) = v.get(&c).cloned() else {
                continue;
            };
            let g = a.gcd(&b);
            axpy(v, &(&a / &g), &piv, &-(&b / &g));
            *v = normalize(std::mem::take(v));
        }
        done.push((c, piv));
    }
    done.into_iter()
        .map(|(_, v)| v)
        .chain(rest.into_iter().filter(|v| !v.is_empty()).map(normalize))
        .map(|coeffs| KernelVector { coeffs })
        .collect()
}
