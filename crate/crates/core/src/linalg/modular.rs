//! Exact characteristic polynomials of integer matrices.
//!
//! The polynomial is computed modulo a sequence of 62-bit primes by
//! Hessenberg reduction and reassembled by Chinese remaindering. Enough
//! primes are used to exceed twice the bound `Π_i (1 + ‖row_i‖₂)` on every
//! coefficient, which is a sum of principal minors (Hadamard), so the
//! symmetric residue is the exact integer.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::poly::IntPolynomial;

/// Arithmetic modulo an odd prime `p < 2^62` in Montgomery form.
#[derive(Debug, Clone, Copy)]
struct Montgomery {
    p: u64,
    /// `-p^{-1} mod 2^64`
    neg_inv: u64,
    /// `2^128 mod p`
    r2: u64,
}

impl Montgomery {
    fn new(p: u64) -> Self {
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = ((r as u128 * r as u128) % p as u128) as u64;
        Self {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.p, self.r2)
    }

    fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    fn from_i64(&self, a: i64) -> u64 {
        let r = a.rem_euclid(self.p as i64) as u64;
        self.to_mont(r)
    }

    fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = self.to_mont(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^62`, descending, generated on first use.
fn primes(count: usize) -> Vec<u64> {
    static CACHE: OnceLock<std::sync::Mutex<Vec<u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| std::sync::Mutex::new(Vec::new()));
    let mut list = cache.lock().expect("prime cache poisoned");
    let mut candidate = list.last().map_or((1u64 << 62) - 1, |&p| p - 2);
    while list.len() < count {
        if is_prime(candidate) {
            list.push(candidate);
        }
        candidate -= 2;
    }
    list[..count].to_vec()
}

/// Characteristic polynomial `det(xI − M) mod p`, ascending coefficients
/// (plain residues), via Hessenberg reduction.
fn char_poly_mod(m: &DMatrix<i64>, ar: &Montgomery) -> Vec<u64> {
    let n = m.nrows();
    // row-major working copy
    let mut h: Vec<u64> = (0..n * n).map(|k| ar.from_i64(m[(k / n, k % n)])).collect();
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n.saturating_sub(2) {
        let Some(piv) = (j + 1..n).find(|&i| h[idx(i, j)] != 0) else {
            continue;
        };
        if piv != j + 1 {
            for c in 0..n {
                h.swap(idx(piv, c), idx(j + 1, c));
            }
            for r in 0..n {
                h.swap(idx(r, piv), idx(r, j + 1));
            }
        }
        let t_inv = ar.inv(h[idx(j + 1, j)]);
        for i in j + 2..n {
            let u = ar.mul(h[idx(i, j)], t_inv);
            if u == 0 {
                continue;
            }
            // row_i -= u · row_{j+1}
            for c in j..n {
                let v = ar.mul(u, h[idx(j + 1, c)]);
                h[idx(i, c)] = ar.sub(h[idx(i, c)], v);
            }
            // col_{j+1} += u · col_i
            for r in 0..n {
                let v = ar.mul(u, h[idx(r, i)]);
                h[idx(r, j + 1)] = ar.add(h[idx(r, j + 1)], v);
            }
        }
    }
    // p_k = (x − h_kk) p_{k−1} − Σ_i h_{k−i,k} (Π subdiag) p_{k−i−1}
    let one = ar.to_mont(1);
    let mut polys: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
    polys.push(vec![one]);
    for k in 1..=n {
        let prev = &polys[k - 1];
        let mut cur = vec![0u64; k + 1];
        let diag = h[idx(k - 1, k - 1)];
        for (i, &c) in prev.iter().enumerate() {
            cur[i + 1] = ar.add(cur[i + 1], c);
            cur[i] = ar.sub(cur[i], ar.mul(diag, c));
        }
        let mut t = one;
        for i in 1..k {
            t = ar.mul(t, h[idx(k - i, k - i - 1)]);
            if t == 0 {
                break;
            }
            let coef = ar.mul(t, h[idx(k - i - 1, k - 1)]);
            if coef == 0 {
                continue;
            }
            for (j, &c) in polys[k - i - 1].iter().enumerate() {
                cur[j] = ar.sub(cur[j], ar.mul(coef, c));
            }
        }
        polys.push(cur);
    }
    polys.pop().unwrap().into_iter().map(|c| ar.from_mont(c)).collect()
}

/// Bits needed so that the modulus exceeds `2·Π(1 + ‖row‖₂)`.
fn coefficient_bound_bits(m: &DMatrix<i64>) -> f64 {
    m.row_iter()
        .map(|row| {
            let norm2: f64 = row.iter().map(|&x| (x as f64) * (x as f64)).sum();
            (1.0 + norm2.sqrt()).log2()
        })
        .sum::<f64>()
        + 2.0
}

/// Exact `det(xI − M)` for a square integer matrix.
pub fn integer_char_poly(m: &DMatrix<i64>) -> IntPolynomial {
    assert_eq!(m.nrows(), m.ncols(), "characteristic polynomial of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return IntPolynomial::one();
    }
    let bits = coefficient_bound_bits(m);
    let count = (bits / 61.0).ceil() as usize + 1;
    let mut modulus = BigInt::one();
    let mut acc = vec![BigInt::zero(); n + 1];
    for p in primes(count) {
        let ar = Montgomery::new(p);
        let residues = char_poly_mod(m, &ar);
        // Garner step: acc += modulus · ((r − acc) · modulus⁻¹ mod p)
        let big_p = BigInt::from(p);
        let m_mod_p = (&modulus % &big_p).to_u64().expect("residue fits in u64");
        let m_inv = powmod(m_mod_p, p - 2, p);
        for (a, &r) in acc.iter_mut().zip(&residues) {
            let a_mod_p = (&*a % &big_p).to_u64().expect("residue fits in u64");
            let diff = (r + p - a_mod_p) % p;
            let k = mulmod(diff, m_inv, p);
            if k != 0 {
                *a += &modulus * BigInt::from(k);
            }
        }
        modulus *= &big_p;
    }
    let half = &modulus >> 1;
    for a in acc.iter_mut() {
        if *a > half {
            *a -= &modulus;
        }
    }
    IntPolynomial::new(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn montgomery_matches_plain_arithmetic() {
        let p = primes(1)[0];
        let ar = Montgomery::new(p);
        let (a, b) = (123_456_789_012_345u64, p - 17);
        let prod = ar.from_mont(ar.mul(ar.to_mont(a), ar.to_mont(b)));
        assert_eq!(prod, mulmod(a, b, p));
        let x = ar.to_mont(987_654_321);
        assert_eq!(ar.from_mont(ar.mul(x, ar.inv(x))), 1);
        assert_eq!(ar.from_mont(ar.from_i64(-1)), p - 1);
    }

    #[test]
    fn primes_are_prime_and_distinct() {
        let ps = primes(5);
        assert!(ps.windows(2).all(|w| w[0] > w[1]));
        assert!(ps.iter().all(|&p| is_prime(p) && p < 1 << 62));
        assert!(!is_prime(1 << 61));
        assert!(is_prime(2_305_843_009_213_693_951)); // 2^61 − 1
    }

    #[test]
    fn small_char_polys() {
        let m = DMatrix::from_row_slice(2, 2, &[2i64, 1, 1, 2]);
        assert_eq!(integer_char_poly(&m), IntPolynomial::from_i64(&[3, -4, 1]));
        let z = DMatrix::<i64>::zeros(3, 3);
        assert_eq!(integer_char_poly(&z), IntPolynomial::from_i64(&[0, 0, 0, 1]));
        // needs a row swap in the Hessenberg reduction
        let m = DMatrix::from_row_slice(3, 3, &[0i64, 1, 0, 0, 0, 1, 6, -11, 6]);
        assert_eq!(integer_char_poly(&m), IntPolynomial::from_i64(&[-6, 11, -6, 1]));
        assert_eq!(integer_char_poly(&DMatrix::<i64>::zeros(0, 0)), IntPolynomial::one());
    }

    #[test]
    fn large_coefficients_survive_reconstruction() {
        // diag(1000, ..., 1000): (x − 1000)^12, coefficients exceed one prime
        let m = DMatrix::<i64>::from_diagonal_element(12, 12, 1000);
        let expect = IntPolynomial::from_i64(&[-1000, 1]).pow(12);
        assert_eq!(integer_char_poly(&m), expect);
    }
}
