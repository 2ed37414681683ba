//! Fixed-width bit rows used by the enumeration kernels.
//!
//! Edge incidence, candidate sets and neighbourhood rows are all stored as
//! flat `u64` words so the hot loops reduce to AND + popcount.

/// A bit vector with a fixed length.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn word_count(len: usize) -> usize {
    (len + 63) / 64
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = BitRow {
            len,
            words: vec![!0u64; word_count(len)],
        };
        row.trim_tail();
        row
    }

    fn trim_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn unset(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn and_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn andnot_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn count_and(&self, other: &BitRow) -> u64 {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    /// Popcount of the intersection of an arbitrary collection of rows.
    pub fn count_and_many(rows: &[&BitRow]) -> u64 {
        let first = match rows.first() {
            Some(r) => r,
            None => return 0,
        };
        let nw = first.words.len();
        let mut total = 0u64;
        for w in 0..nw {
            let mut acc = first.words[w];
            for r in &rows[1..] {
                acc &= r.words[w];
            }
            total += acc.count_ones() as u64;
        }
        total
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }
}
