//! Small enumeration helpers.

use num_bigint::BigInt;
use num_traits::One;

/// Iterate over all k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Combinations {
    Combinations {
        n,
        k,
        state: None,
        done: k > n,
    }
}

pub struct Combinations {
    n: usize,
    k: usize,
    state: Option<Vec<usize>>,
    done: bool,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        match &mut self.state {
            None => {
                let first: Vec<usize> = (0..self.k).collect();
                self.state = Some(first.clone());
                Some(first)
            }
            Some(c) => {
                // Advance the rightmost index that can still move.
                let mut i = self.k;
                loop {
                    if i == 0 {
                        self.done = true;
                        return None;
                    }
                    i -= 1;
                    if c[i] + 1 <= self.n - (self.k - i) {
                        c[i] += 1;
                        for j in i + 1..self.k {
                            c[j] = c[j - 1] + 1;
                        }
                        return Some(c.clone());
                    }
                }
            }
        }
    }
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    use num_traits::ToPrimitive;
    binomial(n, k).to_u128()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        for n in 0..8 {
            for k in 0..=n + 1 {
                let count = combinations(n, k).count();
                assert_eq!(BigInt::from(count), binomial(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn lexicographic_order() {
        let all: Vec<_> = combinations(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
    }

    #[test]
    fn empty_subset() {
        let all: Vec<_> = combinations(3, 0).collect();
        assert_eq!(all, vec![Vec::<usize>::new()]);
    }
}
