//! Root counts `ρ(d) = #{ν mod d : F(1,ν) ≡ 0 (d)}` and
//! `ρ(d; a, b) = #{ν mod d : F(b,ν) ≡ a (d)}`.
//!
//! Both count roots of a quadratic `c₂ν² + c₁ν + c₀` modulo `d` and are
//! assembled over the prime powers of `d`. At an odd prime not dividing
//! `c₂` or the discriminant, the roots are simple and the count is
//! `1 + (disc/p)` at every power. Elsewhere the roots mod `p^k` are listed
//! directly for `p^k ≤ 10^6` and lifted one power at a time above that.

use crate::bqf::Form;
use crate::numtheory::{factor, kronecker};

/// Largest prime power handled by direct enumeration.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug)]
struct Quadratic {
    c0: i128,
    c1: i128,
    c2: i128,
}

impl Quadratic {
    fn eval_mod(&self, nu: u64, m: u64) -> u64 {
        let m = m as i128;
        let nu = nu as i128;
        let v = (self.c2.rem_euclid(m) * nu % m * nu + self.c1.rem_euclid(m) * nu + self.c0.rem_euclid(m)) % m;
        v as u64
    }

    fn disc(&self) -> i128 {
        self.c1 * self.c1 - 4 * self.c2 * self.c0
    }

    fn count_enumerate(&self, m: u64) -> u64 {
        (0..m).filter(|&nu| self.eval_mod(nu, m) == 0).count() as u64
    }

    fn count_prime_power(&self, p: u64, k: u32) -> u64 {
        let pk = p.pow(k);
        let pi = p as i128;
        if p != 2 && self.c2 % pi != 0 {
            let d = self.disc().rem_euclid(pi);
            if d != 0 {
                return (1 + kronecker(d as i64, p as i64) as i64) as u64;
            }
        }
        if pk <= ENUMERATION_LIMIT {
            return self.count_enumerate(pk);
        }
        let mut roots: Vec<u64> = (0..p).filter(|&nu| self.eval_mod(nu, p) == 0).collect();
        let mut modulus = p;
        for _ in 1..k {
            let next = modulus * p;
            roots = roots
                .iter()
                .flat_map(|&r| (0..p).map(move |t| r + t * modulus))
                .filter(|&nu| self.eval_mod(nu, next) == 0)
                .collect();
            modulus = next;
        }
        roots.len() as u64
    }

    fn count(&self, d: u64) -> u64 {
        factor(d)
            .into_iter()
            .map(|(p, k)| self.count_prime_power(p, k))
            .product()
    }
}

fn rho_poly(f: &Form) -> Quadratic {
    Quadratic { c0: f.a() as i128, c1: f.b() as i128, c2: f.c() as i128 }
}

fn rho_ab_poly(f: &Form, a: i64, b: i64) -> Quadratic {
    let b = b as i128;
    Quadratic {
        c0: f.a() as i128 * b * b - a as i128,
        c1: f.b() as i128 * b,
        c2: f.c() as i128,
    }
}

/// `ρ(d)` for `d ≥ 1`.
pub fn rho(d: u64, f: &Form) -> u64 {
    assert!(d >= 1, "rho needs d ≥ 1");
    rho_poly(f).count(d)
}

/// `ρ(p^k)` for a prime `p`.
pub fn rho_prime_power(p: u64, k: u32, f: &Form) -> u64 {
    rho_poly(f).count_prime_power(p, k)
}

/// `ρ(d)` by listing every residue.
pub fn rho_brute(d: u64, f: &Form) -> u64 {
    rho_poly(f).count_enumerate(d)
}

/// `ρ(d; a, b)` for `d ≥ 1`; direct for `d ≤ 10^6`, multiplicative above.
pub fn rho_ab(d: u64, a: i64, b: i64, f: &Form) -> u64 {
    assert!(d >= 1, "rho_ab needs d ≥ 1");
    let poly = rho_ab_poly(f, a, b);
    if d <= ENUMERATION_LIMIT {
        poly.count_enumerate(d)
    } else {
        poly.count(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: i64, b: i64, c: i64) -> Form {
        Form::new(a, b, c).unwrap()
    }

    #[test]
    fn examples() {
        let f = form(1, 0, 1);
        assert_eq!((rho(5, &f), rho(2, &f), rho(9, &f), rho(1, &f)), (2, 1, 0, 1));
        assert_eq!(rho(2, &form(2, 1, 1)), 2);
        assert_eq!(rho_ab(5, 0, 1, &f), 2);
        assert_eq!(rho_ab(1, 3, 7, &f), 1);
        assert_eq!(rho_ab(4, 1, 1, &f), 2);
    }

    #[test]
    fn multiplicative_and_brute_agree() {
        for f in [form(1, 0, 1), form(1, 1, 6), form(2, 1, 3), form(2, 1, 1), form(3, 2, 7)] {
            for d in 1..=2000 {
                assert_eq!(rho(d, &f), rho_brute(d, &f), "{f:?} d={d}");
            }
        }
    }

    #[test]
    fn lifting_matches_enumeration_above_limit() {
        // 2^21 and 3^13 exceed the direct limit; compare the lifted count with a
        // slow enumeration.
        let f = form(1, 0, 1);
        let g = form(1, 1, 6);
        for (p, k) in [(2u64, 21u32), (3, 13)] {
            for h in [f, g, form(3, 3, 5)] {
                let poly = rho_poly(&h);
                assert_eq!(poly.count_prime_power(p, k), poly.count_enumerate(p.pow(k)), "{h:?} {p}^{k}");
            }
        }
        let poly = rho_ab_poly(&f, 1, 2);
        assert_eq!(rho_ab(2u64.pow(21), 1, 2, &f), poly.count_enumerate(2u64.pow(21)));
        let d = 3 * 1_000_003;
        assert_eq!(rho_ab(d, 5, 1, &f), rho_ab_poly(&f, 5, 1).count_enumerate(d));
    }
}
