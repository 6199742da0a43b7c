//! Small integer helpers shared by the algebra and sieve modules.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_modular::ModularSymbols;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    a.gcd(&b).gcd(&c)
}

pub fn is_prime(n: u64) -> bool {
    num_prime::nt_funcs::is_prime64(n)
}

/// Prime factorisation as ascending `(prime, exponent)` pairs. `factor(1)` is empty.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    if n <= 1 {
        return Vec::new();
    }
    num_prime::nt_funcs::factorize64(n)
        .into_iter()
        .map(|(p, e)| (p, e as u32))
        .collect()
}

pub fn factor_u128(n: u128) -> Vec<(u128, u32)> {
    if n <= 1 {
        return Vec::new();
    }
    num_prime::nt_funcs::factorize128(n)
        .into_iter()
        .map(|(p, e)| (p, e as u32))
        .collect()
}

/// Kronecker symbol (a/n) for n >= 1.
pub fn kronecker(a: i64, n: i64) -> i8 {
    a.kronecker(&n)
}

/// Euler's totient via factorisation.
pub fn totient(n: u64) -> u64 {
    factor(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Exact floor square root of a non-negative i128; `None` for negative input.
pub fn isqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    Some(n.sqrt())
}

/// `Some(s)` when `n = s²`.
pub fn exact_sqrt(n: i128) -> Option<i128> {
    let s = isqrt(n)?;
    (s * s == n).then_some(s)
}

/// Solve `x·s ≡ 1 (mod m)` style problems: returns `(g, x, y)` with `g = ax + by`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let e = a.extended_gcd(&b);
    (e.gcd, e.x, e.y)
}

/// Modular inverse of `a` mod `m` (m >= 1), in `[0, m)`.
pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

/// Combine congruences `x ≡ r_i (mod m_i)` with possibly non-coprime moduli.
///
/// Returns the smallest non-negative solution together with the lcm of the
/// moduli, or a description of the first clashing pair.
pub fn crt(system: &[(BigInt, BigInt)]) -> std::result::Result<(BigInt, BigInt), String> {
    let mut x = BigInt::zero();
    let mut modulus = BigInt::one();
    for (r, m) in system {
        if !m.is_positive() {
            return Err(format!("non-positive modulus {m}"));
        }
        let g = modulus.gcd(m);
        let diff = r - &x;
        if !(&diff % &g).is_zero() {
            return Err(format!(
                "x ≡ {x} (mod {modulus}) is incompatible with x ≡ {r} (mod {m})"
            ));
        }
        let m_g = m / &g;
        let e = (&modulus / &g).extended_gcd(&m_g);
        // (modulus/g)·e.x ≡ 1 mod m/g
        let k = ((&diff / &g) * e.x).mod_floor(&m_g);
        x += &modulus * k;
        modulus = modulus.lcm(m);
        x = x.mod_floor(&modulus);
    }
    Ok((x, modulus))
}

pub fn to_i64(v: &BigInt, what: &str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(format!("{what} = {v} exceeds 64 bits")))
}

pub fn i128_to_i64(v: i128, what: &str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(format!("{what} = {v} exceeds 64 bits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn crt_with_shared_factor_two() {
        let (x, m) = crt(&[(big(-1), big(6)), (big(37), big(58)), (big(1), big(2))]).unwrap();
        assert_eq!(m, big(174));
        assert_eq!(x, big(95));
    }

    #[test]
    fn crt_reports_clash() {
        assert!(crt(&[(big(0), big(4)), (big(1), big(6))]).is_err());
    }

    #[test]
    fn totient_small() {
        let phi: Vec<u64> = (1..=12).map(totient).collect();
        assert_eq!(phi, vec![1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]);
    }

    #[test]
    fn exact_sqrt_detects_squares() {
        assert_eq!(exact_sqrt(0), Some(0));
        assert_eq!(exact_sqrt(49), Some(7));
        assert_eq!(exact_sqrt(50), None);
        assert_eq!(exact_sqrt(-4), None);
        let big = (1i128 << 60) + 7;
        assert_eq!(exact_sqrt(big * big), Some(big));
    }

    #[test]
    fn kronecker_minus_four() {
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(-4, 7), -1);
        assert_eq!(kronecker(-23, 3), 1);
    }
}
