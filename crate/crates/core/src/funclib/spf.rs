/// Smallest-prime-factor table for `1..=limit`.
#[derive(Clone, Debug)]
pub struct SpfTable {
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn new(limit: u64) -> SpfTable {
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        SpfTable { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf(n) == n
    }

    /// Prime factorization as `(prime, exponent)` pairs in increasing order.
    pub fn factor(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let q = self.spf(n);
            let mut j = 0;
            while n.is_multiple_of(q) {
                n /= q;
                j += 1;
            }
            out.push((q, j));
        }
        out
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit()).filter(move |&n| self.is_prime(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors() {
        let t = SpfTable::new(1000);
        assert_eq!(t.factor(1), vec![]);
        assert_eq!(t.factor(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(t.factor(997), vec![(997, 1)]);
        assert_eq!(t.primes().take(5).collect::<Vec<_>>(), vec![2, 3, 5, 7, 11]);
        assert_eq!(t.primes().count(), 168);
    }
}
