//! Pairwise-coprime holding basis built by factor refinement.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::RwLock;

use super::SieveError;
use crate::ffpoly::ModPoly;

/// Monic, pairwise-coprime polynomials together with the multiset of
/// polynomials that were inserted into them.
#[derive(Clone, Debug, Default)]
pub struct HoldingBasis {
    elements: Vec<ModPoly>,
    inserted: HashMap<ModPoly, usize>,
}

enum Step {
    Done,
    Divide(ModPoly),
    Split { index: usize, gcd: ModPoly },
    Append,
}

/// Find the first applicable case for `p`: divisibility is checked against
/// every element before any gcd is computed.
fn classify(elements: &[ModPoly], p: &ModPoly) -> Step {
    if p.is_constant() {
        return Step::Done;
    }
    let pd = p.degree().unwrap_or(0);
    for q in elements {
        if q.degree().unwrap_or(0) <= pd {
            if let Some(quot) = p.try_div_exact(q) {
                return Step::Divide(quot);
            }
        }
    }
    for (index, q) in elements.iter().enumerate() {
        let g = q.gcd(p);
        if !g.is_one() {
            return Step::Split { index, gcd: g };
        }
    }
    Step::Append
}

fn split(elements: &mut Vec<ModPoly>, index: usize, g: &ModPoly) {
    let rest = elements[index]
        .try_div_exact(g)
        .expect("gcd divides basis element");
    if rest.is_constant() {
        elements.remove(index);
    } else {
        elements[index] = rest;
    }
}

fn split_work(p: &ModPoly, g: &ModPoly, stack: &mut Vec<ModPoly>) {
    stack.push(p.try_div_exact(g).expect("gcd divides input"));
    stack.push(g.clone());
}

impl HoldingBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn elements(&self) -> &[ModPoly] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Refine the basis so that `p` becomes a product of its elements.
    pub fn insert(&mut self, p: &ModPoly) -> Result<(), SieveError> {
        if p.is_zero() {
            return Err(SieveError::ZeroPolynomial);
        }
        let p = p.make_monic().1;
        *self.inserted.entry(p.clone()).or_insert(0) += 1;
        let mut stack = vec![p];
        while let Some(cur) = stack.pop() {
            match classify(&self.elements, &cur) {
                Step::Done => {}
                Step::Divide(q) => stack.push(q),
                Step::Split { index, gcd } => {
                    split(&mut self.elements, index, &gcd);
                    split_work(&cur, &gcd, &mut stack);
                }
                Step::Append => self.elements.push(cur),
            }
        }
        Ok(())
    }

    /// Build a basis from `inputs` with `threads` concurrent workers.
    ///
    /// Workers scan under a shared read lock and only take the write lock to
    /// split or append; a version counter detects scans made stale by a
    /// concurrent mutation, in which case the scan is redone.
    pub fn build_parallel(inputs: &[ModPoly], threads: usize) -> Result<Self, SieveError> {
        if inputs.iter().any(ModPoly::is_zero) {
            return Err(SieveError::ZeroPolynomial);
        }
        let mut inserted: HashMap<ModPoly, usize> = HashMap::new();
        let mut distinct = Vec::new();
        for p in inputs {
            let m = p.make_monic().1;
            let e = inserted.entry(m.clone()).or_insert(0);
            if *e == 0 {
                distinct.push(m);
            }
            *e += 1;
        }
        let threads = threads.max(1);
        let shared = RwLock::new((Vec::<ModPoly>::new(), 0u64));
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                    let Some(p) = distinct.get(i) else { break };
                    let mut stack = vec![p.clone()];
                    while let Some(cur) = stack.pop() {
                        loop {
                            let (step, seen) = {
                                let guard = shared.read().expect("basis lock poisoned");
                                (classify(&guard.0, &cur), guard.1)
                            };
                            match step {
                                Step::Done => break,
                                Step::Divide(q) => {
                                    stack.push(q);
                                    break;
                                }
                                Step::Split { index, gcd } => {
                                    let mut guard = shared.write().expect("basis lock poisoned");
                                    if guard.1 != seen {
                                        continue;
                                    }
                                    split(&mut guard.0, index, &gcd);
                                    guard.1 += 1;
                                    split_work(&cur, &gcd, &mut stack);
                                    break;
                                }
                                Step::Append => {
                                    let mut guard = shared.write().expect("basis lock poisoned");
                                    if guard.1 != seen {
                                        continue;
                                    }
                                    guard.0.push(cur.clone());
                                    guard.1 += 1;
                                    break;
                                }
                            }
                        }
                    }
                });
            }
        });
        let (elements, _) = shared.into_inner().expect("basis lock poisoned");
        Ok(HoldingBasis { elements, inserted })
    }

    /// Sequential counterpart of [`HoldingBasis::build_parallel`].
    pub fn build(inputs: &[ModPoly]) -> Result<Self, SieveError> {
        let mut b = HoldingBasis::new();
        for p in inputs {
            b.insert(p)?;
        }
        Ok(b)
    }

    /// Number of inserted polynomials (with multiplicity) divisible by each
    /// element.
    pub fn usage_counts(&self) -> Vec<usize> {
        self.elements
            .iter()
            .map(|e| {
                self.inserted
                    .iter()
                    .filter(|(p, _)| p.rem(e).is_zero())
                    .map(|(_, &m)| m)
                    .sum()
            })
            .collect()
    }

    /// Elements in frequency order.
    pub fn sorted(&self) -> Vec<ModPoly> {
        let counted = self
            .elements
            .iter()
            .cloned()
            .zip(self.usage_counts())
            .collect();
        basis_sort(counted)
    }
}

/// Order by descending count, then degree, then coefficients.
pub fn basis_sort(mut counted: Vec<(ModPoly, usize)>) -> Vec<ModPoly> {
    counted.sort_by(|(a, ca), (b, cb)| match cb.cmp(ca) {
        Ordering::Equal => a.cmp_deglex(b),
        o => o,
    });
    counted.into_iter().map(|(e, _)| e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{rngs::StdRng, SeedableRng};

    const P: u32 = 997;

    fn poly(c: &[i64]) -> ModPoly {
        ModPoly::from_i64(c, P)
    }

    fn set(mut v: Vec<ModPoly>) -> Vec<ModPoly> {
        v.sort_by(|a, b| a.cmp_deglex(b));
        v
    }

    #[test]
    fn insert_examples() {
        let mut b = HoldingBasis::new();
        b.insert(&poly(&[-1, 1])).unwrap();
        b.insert(&poly(&[-1, 0, 1])).unwrap();
        assert_eq!(
            set(b.elements().to_vec()),
            set(vec![poly(&[-1, 1]), poly(&[1, 1])])
        );

        let mut b = HoldingBasis::new();
        b.insert(&poly(&[-1, 0, 1])).unwrap();
        b.insert(&poly(&[-1, 0, 0, 1])).unwrap();
        assert_eq!(
            set(b.elements().to_vec()),
            set(vec![poly(&[1, 1]), poly(&[-1, 1]), poly(&[1, 1, 1])])
        );

        let mut b = HoldingBasis::new();
        b.insert(&poly(&[0, 1])).unwrap();
        b.insert(&poly(&[0, 1])).unwrap();
        b.insert(&ModPoly::one(P)).unwrap();
        assert_eq!(b.elements(), &[poly(&[0, 1])]);
        assert_eq!(b.insert(&ModPoly::zero(P)), Err(SieveError::ZeroPolynomial));
    }

    #[test]
    fn repeated_factor_stays_single() {
        let mut b = HoldingBasis::new();
        b.insert(&poly(&[1, -2, 1])).unwrap();
        b.insert(&poly(&[-1, 1])).unwrap();
        assert_eq!(b.elements(), &[poly(&[-1, 1])]);
    }

    #[test]
    fn sort_examples() {
        let xm1 = poly(&[-1, 1]);
        let xp1 = poly(&[1, 1]);
        assert_eq!(
            basis_sort(vec![(xp1.clone(), 2), (xm1.clone(), 5)]),
            vec![xm1.clone(), xp1.clone()]
        );
        let q = poly(&[1, 1, 1]);
        assert_eq!(
            basis_sort(vec![(q.clone(), 3), (xp1.clone(), 3)]),
            vec![xp1, q]
        );
        assert!(basis_sort(vec![]).is_empty());
    }

    #[test]
    fn usage_counts_follow_divisibility() {
        let inputs = vec![poly(&[-1, 0, 1]), poly(&[-1, 1]), poly(&[-1, 0, 0, 1])];
        let b = HoldingBasis::build(&inputs).unwrap();
        let sorted = b.sorted();
        assert_eq!(sorted[0], poly(&[-1, 1]));
    }

    fn random_monic(rng: &mut StdRng, max_deg: usize) -> ModPoly {
        use rand::Rng;
        let d = rng.gen_range(1..=max_deg);
        let mut c: Vec<u32> = (0..d).map(|_| rng.gen_range(0..P)).collect();
        c.push(1);
        ModPoly::new(c, P)
    }

    /// Products of at most five random monic factors, sharing a small pool so
    /// that refinement has something to split.
    fn random_inputs(seed: u64) -> Vec<ModPoly> {
        use rand::Rng;
        let mut rng = StdRng::seed_from_u64(seed);
        let pool: Vec<ModPoly> = (0..6).map(|_| random_monic(&mut rng, 6)).collect();
        let n = rng.gen_range(1..=8);
        (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=5);
                (0..k).fold(ModPoly::one(P), |acc, _| {
                    &acc * pool.choose(&mut rng).unwrap()
                })
            })
            .collect()
    }

    pub(crate) fn check_refinement(inputs: &[ModPoly], b: &[ModPoly]) {
        for (i, x) in b.iter().enumerate() {
            assert!(!x.is_constant());
            for y in &b[i + 1..] {
                assert!(x.gcd(y).is_one(), "{x} and {y} share a factor");
            }
        }
        for p in inputs {
            let mut rest = p.make_monic().1;
            for e in b {
                while let Some(q) = rest.try_div_exact(e) {
                    rest = q;
                }
            }
            assert!(rest.is_constant(), "{p} not reconstructed");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn refinement_properties(seed in any::<u64>()) {
            let inputs = random_inputs(seed);
            let seq = HoldingBasis::build(&inputs).unwrap();
            check_refinement(&inputs, seq.elements());
            let mut shuffled = inputs.clone();
            shuffled.shuffle(&mut StdRng::seed_from_u64(seed ^ 0x5eed));
            let other = HoldingBasis::build(&shuffled).unwrap();
            prop_assert_eq!(set(seq.elements().to_vec()), set(other.elements().to_vec()));
            let par = HoldingBasis::build_parallel(&inputs, 8).unwrap();
            prop_assert_eq!(seq.sorted(), par.sorted());
        }
    }
}
