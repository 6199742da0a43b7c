//! Truncated Euler products for the singular series `H_{F,q}` and `H_q`.
//!
//! Factors are taken over ascending primes `p ≤ P_max` and multiplied in
//! double-double arithmetic. The reported tail is the change between the
//! partial products at `P_max/2` and `P_max`.

use serde::{Deserialize, Serialize};

use crate::arithmetic::rho::rho_prime_power;
use crate::arithmetic::sieve::primes_up_to;
use crate::bqf::Form;
use crate::composition::CompositionContext;
use crate::error::{Error, Result};

pub const MIN_P_MAX: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerProduct {
    pub value: f64,
    pub tail: f64,
    pub p_max: u64,
    /// First prime whose factor vanishes, if any.
    pub zero_at: Option<u64>,
}

/// Unevaluated double-double `hi + lo`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn quotient(num: f64, den: f64) -> Dd {
        let hi = num / den;
        let r = (-hi).mul_add(den, num);
        Dd { hi, lo: r / den }
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let s = p + e;
        Dd { hi: s, lo: e - (s - p) }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn product(
    p_max: u64,
    q: u64,
    rho: impl Fn(u64) -> u64,
    exceptional: impl Fn(u64) -> bool,
) -> Result<EulerProduct> {
    if p_max < MIN_P_MAX {
        return Err(Error::Precondition(format!("P_max must be at least {MIN_P_MAX}, got {p_max}")));
    }
    if q == 0 {
        return Err(Error::Precondition("q must be positive".into()));
    }
    let mut acc = Dd::ONE;
    let mut half = None;
    for p in primes_up_to(p_max) {
        if half.is_none() && p > p_max / 2 {
            half = Some(acc.value());
        }
        let rho = rho(p);
        // a prime p ∤ q with ρ(p) = p makes every F(ℓ, m) with p ∤ ℓ divisible by p
        if rho == p && q % p != 0 {
            return Ok(EulerProduct { value: 0.0, tail: 0.0, p_max, zero_at: Some(p) });
        }
        let factor = if exceptional(p) {
            Dd::quotient(p as f64, (p - 1) as f64)
        } else {
            Dd::quotient((p - rho) as f64, (p - 1) as f64)
        };
        acc = acc.mul(factor);
    }
    let value = acc.value();
    let tail = (value - half.unwrap_or(value)).abs();
    Ok(EulerProduct { value, tail, p_max, zero_at: None })
}

/// `H_{F,q}`: `(1−ρ(p)/p)(1−1/p)^{-1}` for `p ∤ qP_F`, `(1−1/p)^{-1}` for `p | qP_F`.
///
/// Returns exactly zero when some prime `p ∤ q` has `ρ(p) = p`, even if
/// `p | P_F`.
pub fn h_fq(ctx: &CompositionContext, q: u64, p_max: u64) -> Result<EulerProduct> {
    h_fq_with_cf(&ctx.form, q, ctx.cf, p_max)
}

pub fn h_fq_with_cf(f: &Form, q: u64, cf: u64, p_max: u64) -> Result<EulerProduct> {
    f.require_primitive_definite()?;
    product(p_max, q, |p| rho_prime_power(p, 1, f), |p| q % p == 0 || p <= cf)
}

/// `H_q`: `(1−ρ(p)/p)(1−1/p)^{-1}` for `p ∤ q`, `(1−1/p)^{-1}` for `p | q`.
pub fn h_q(f: &Form, q: u64, p_max: u64) -> Result<EulerProduct> {
    f.require_primitive_definite()?;
    product(p_max, q, |p| rho_prime_power(p, 1, f), |p| q % p == 0)
}
