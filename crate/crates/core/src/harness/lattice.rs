//! Enumeration of `{(ℓ, m) : 1 ≤ F(ℓ, m) ≤ X}`.
//!
//! From `4γF(ℓ,m) = (2γm + βℓ)² + Δℓ²` the rows are `Δℓ² ≤ 4γX` and in
//! row `ℓ` the admissible `m` satisfy `|2γm + βℓ| ≤ ⌊√(4γX − Δℓ²)⌋`.

use crate::bqf::Form;
use crate::numtheory::isqrt;

/// Largest `|ℓ|` with a lattice point in the region.
pub fn ell_bound(f: &Form, x: u64) -> i64 {
    let four_gamma_x = 4 * f.c() as i128 * x as i128;
    isqrt(four_gamma_x / f.delta()).unwrap_or(0) as i64
}

/// Inclusive `m`-range of row `ℓ`, or `None` when the row is empty.
pub fn m_range(f: &Form, x: u64, ell: i64) -> Option<(i64, i64)> {
    let (beta, gamma) = (f.b() as i128, f.c() as i128);
    let ell = ell as i128;
    let t = 4 * gamma * x as i128 - f.delta() * ell * ell;
    let s = isqrt(t)?;
    let lo = -(s + beta * ell).div_euclid(2 * gamma);
    let hi = (s - beta * ell).div_euclid(2 * gamma);
    (lo <= hi).then_some((lo as i64, hi as i64))
}

/// Calls `visit(m, N)` for the pairs of row `ℓ`, ascending in `m`.
pub fn for_row(f: &Form, x: u64, ell: i64, mut visit: impl FnMut(i64, u64)) {
    if let Some((lo, hi)) = m_range(f, x, ell) {
        for m in lo..=hi {
            let n = f.eval(ell, m);
            if n >= 1 && n <= x as i128 {
                visit(m, n as u64);
            }
        }
    }
}

/// Visits every `(ℓ, m, N)` with `1 ≤ N = F(ℓ, m) ≤ X`, `ℓ` ascending, then `m`.
pub fn lattice_iterate(f: &Form, x: u64, mut visit: impl FnMut(i64, i64, u64)) {
    let l = ell_bound(f, x);
    for ell in -l..=l {
        for_row(f, x, ell, |m, n| visit(ell, m, n));
    }
}
