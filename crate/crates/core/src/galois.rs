//! Finite fields GF(p^t) for small prime powers, as dense operation tables.

use crate::error::{Error, Result};

pub const FIELD_CAP: u64 = 32;

/// GF(q) with dense add/mul tables, q = p^t ≤ 32.
///
/// Elements are 0..q, encoded for t > 1 as base-p digit vectors of the
/// polynomial coefficients (constant term in the least significant digit).
/// The reducing polynomial is the lexicographically least monic irreducible
/// of degree t, so the construction is deterministic; for GF(4) this is
/// x² + x + 1.
#[derive(Clone, Debug)]
pub struct GaloisField {
    p: u64,
    t: u32,
    q: u64,
    add: Vec<u8>,
    mul: Vec<u8>,
    /// Encoded reducing polynomial (degree-t coefficient included), 0 for t = 1.
    modulus: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Decompose q as p^t with p prime, t ≥ 1.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    for p in 2..=q {
        if !is_prime(p) {
            continue;
        }
        if q % p == 0 {
            let mut t = 0;
            let mut m = q;
            while m % p == 0 {
                m /= p;
                t += 1;
            }
            return if m == 1 { Some((p, t)) } else { None };
        }
    }
    None
}

/// Polynomials over GF(p) encoded as base-p digit strings.
mod poly {
    pub fn deg(mut f: u64, p: u64) -> i32 {
        let mut d = -1;
        let mut i = 0;
        while f > 0 {
            if f % p != 0 {
                d = i;
            }
            f /= p;
            i += 1;
        }
        d
    }

    pub fn coeff(f: u64, p: u64, i: u32) -> u64 {
        (f / p.pow(i)) % p
    }

    pub fn add(a: u64, b: u64, p: u64) -> u64 {
        let mut out = 0;
        let mut scale = 1;
        let (mut a, mut b) = (a, b);
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * scale;
            a /= p;
            b /= p;
            scale *= p;
        }
        out
    }

    pub fn mul(a: u64, b: u64, p: u64) -> u64 {
        let mut out = 0;
        let mut a_shift = a;
        let mut i = 0u32;
        while a_shift > 0 {
            let c = a_shift % p;
            if c != 0 {
                // out += c * b * x^i
                let mut bb = b;
                let mut j = 0u32;
                while bb > 0 {
                    let d = bb % p;
                    if d != 0 {
                        let term = (c * d % p) * p.pow(i + j);
                        out = add(out, term, p);
                    }
                    bb /= p;
                    j += 1;
                }
            }
            a_shift /= p;
            i += 1;
        }
        out
    }

    pub fn rem(mut f: u64, m: u64, p: u64) -> u64 {
        let dm = deg(m, p);
        debug_assert!(dm >= 0);
        let lead_m = coeff(m, p, dm as u32);
        loop {
            let df = deg(f, p);
            if df < dm {
                return f;
            }
            let lead_f = coeff(f, p, df as u32);
            // factor = lead_f / lead_m in GF(p)
            let inv = mod_inverse(lead_m, p);
            let factor = lead_f * inv % p;
            let shift = (df - dm) as u32;
            // f -= factor * x^shift * m
            let mut sub = 0;
            let mut mm = m;
            let mut j = 0u32;
            while mm > 0 {
                let c = mm % p;
                if c != 0 {
                    sub += (factor * c % p) * p.pow(shift + j);
                }
                mm /= p;
                j += 1;
            }
            // subtraction in GF(p) coefficients: f + (p-1)*sub termwise
            let mut neg = 0;
            let mut ss = sub;
            let mut j = 0u32;
            while ss > 0 {
                let c = ss % p;
                if c != 0 {
                    neg += (p - c) * p.pow(j);
                }
                ss /= p;
                j += 1;
            }
            f = add(f, neg, p);
        }
    }

    fn mod_inverse(a: u64, p: u64) -> u64 {
        // p is a small prime
        for x in 1..p {
            if a * x % p == 1 {
                return x;
            }
        }
        unreachable!("non-invertible element in prime field")
    }
}

/// Lexicographically least monic irreducible polynomial of degree t over
/// GF(p), by encoded value, found by trial division.
fn least_irreducible(p: u64, t: u32) -> u64 {
    let lead = p.pow(t);
    for low in 0..lead {
        let f = lead + low;
        if is_irreducible(f, p, t) {
            return f;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

fn is_irreducible(f: u64, p: u64, t: u32) -> bool {
    // Trial division by all monic polynomials of degree 1..=t/2.
    for d in 1..=t / 2 {
        let lead = p.pow(d);
        for low in 0..lead {
            let g = lead + low;
            if poly::rem(f, g, p) == 0 {
                return false;
            }
        }
    }
    t >= 1
}

impl GaloisField {
    pub fn new(q: u64) -> Result<Self> {
        if q > FIELD_CAP {
            return Err(Error::NotPrimePower(q));
        }
        let (p, t) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        let (add, mul, modulus) = if t == 1 {
            let mut add = vec![0u8; (q * q) as usize];
            let mut mul = vec![0u8; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    add[(a * q + b) as usize] = ((a + b) % q) as u8;
                    mul[(a * q + b) as usize] = (a * b % q) as u8;
                }
            }
            (add, mul, 0)
        } else {
            let m = least_irreducible(p, t);
            let mut add = vec![0u8; (q * q) as usize];
            let mut mul = vec![0u8; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    add[(a * q + b) as usize] = poly::add(a, b, p) as u8;
                    mul[(a * q + b) as usize] = poly::rem(poly::mul(a, b, p), m, p) as u8;
                }
            }
            (add, mul, m)
        };
        let field = GaloisField {
            p,
            t,
            q,
            add,
            mul,
            modulus,
        };
        field.validate()?;
        Ok(field)
    }

    /// Exhaustive check of the field axioms over the tables.
    fn validate(&self) -> Result<()> {
        let q = self.q;
        let fail = |what: &str| Err(Error::Internal(format!("field axiom failed: {what}")));
        for a in 0..q {
            if self.add(a, 0) != a || self.mul(a, 1) != a || self.mul(a, 0) != 0 {
                return fail("identities");
            }
            if (0..q).all(|b| self.add(a, b) != 0) {
                return fail("additive inverse");
            }
            if a != 0 && (0..q).all(|b| self.mul(a, b) != 1) {
                return fail("multiplicative inverse");
            }
            for b in 0..q {
                if self.add(a, b) != self.add(b, a) || self.mul(a, b) != self.mul(b, a) {
                    return fail("commutativity");
                }
                for c in 0..q {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c)) {
                        return fail("additive associativity");
                    }
                    if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                        return fail("multiplicative associativity");
                    }
                    if self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c)) {
                        return fail("distributivity");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        self.add[(a * self.q + b) as usize] as u64
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.mul[(a * self.q + b) as usize] as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        (0..self.q).find(|&b| self.add(a, b) == 0).unwrap()
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::OutOfRange("inverse of zero".into()));
        }
        Ok((1..self.q).find(|&b| self.mul(a, b) == 1).unwrap())
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        let mut acc = 1;
        for _ in 0..e {
            acc = self.mul(acc, a);
        }
        acc
    }

    /// The multiplicative order of a nonzero element.
    pub fn order(&self, a: u64) -> u64 {
        assert!(a != 0);
        let mut acc = a;
        let mut ord = 1;
        while acc != 1 {
            acc = self.mul(acc, a);
            ord += 1;
        }
        ord
    }

    /// Elements fixed by the Frobenius x ↦ x^s, i.e. the subfield GF(s)
    /// when s^j = q.
    pub fn subfield_elements(&self, s: u64) -> Vec<u64> {
        (0..self.q).filter(|&x| self.pow(x, s) == x).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_is_xor_and() {
        let f = GaloisField::new(2).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(f.add(a, b), a ^ b);
                assert_eq!(f.mul(a, b), a & b);
            }
        }
    }

    #[test]
    fn gf4_uses_x2_x_1_and_is_cyclic() {
        let f = GaloisField::new(4).unwrap();
        // x^2 + x + 1 encodes as 4 + 2 + 1 = 7 in base 2 digits.
        assert_eq!(f.modulus(), 7);
        assert_eq!(f.q(), 4);
        // Multiplicative group of order 3: every nonzero non-one element generates.
        assert_eq!(f.order(2), 3);
        assert_eq!(f.order(3), 3);
    }

    #[test]
    fn non_prime_powers_rejected() {
        assert!(GaloisField::new(6).is_err());
        assert!(GaloisField::new(12).is_err());
        assert!(GaloisField::new(33).is_err());
        assert!(GaloisField::new(64).is_err());
    }

    #[test]
    fn odd_prime_power() {
        let f = GaloisField::new(9).unwrap();
        assert_eq!(f.p(), 3);
        assert_eq!(f.t(), 2);
        // GF(3) sits inside GF(9) as the Frobenius fixed points.
        assert_eq!(f.subfield_elements(3).len(), 3);
    }

    #[test]
    fn gf4_subfield_is_gf2() {
        let f = GaloisField::new(4).unwrap();
        assert_eq!(f.subfield_elements(2), vec![0, 1]);
    }
}
