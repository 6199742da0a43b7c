//! Integral binary quadratic forms `ax² + bxy + cy²`.
//!
//! Coefficients are stored as `i64` restricted to `|coef| <= 2^62`, so the
//! discriminant and all single products fit in `i128` without overflow.
//! Every constructor enforces that range.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{exact_sqrt, gcd, gcd3, i128_to_i64, isqrt, mod_inverse};

/// Largest coefficient magnitude accepted by [`Form::new`].
pub const COEFF_LIMIT: i64 = 1 << 62;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i64; 3]", into = "[i64; 3]")]
pub struct Form {
    a: i64,
    b: i64,
    c: i64,
}

impl Form {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        for v in [a, b, c] {
            if v.unsigned_abs() > COEFF_LIMIT as u64 {
                return Err(Error::Overflow(format!(
                    "coefficient {v} outside ±2^62"
                )));
            }
        }
        Ok(Form { a, b, c })
    }

    fn from_i128(a: i128, b: i128, c: i128) -> Result<Self> {
        Form::new(
            i128_to_i64(a, "coefficient a")?,
            i128_to_i64(b, "coefficient b")?,
            i128_to_i64(c, "coefficient c")?,
        )
    }

    /// The principal form of discriminant `disc`: `x² + (−disc/4)y²` or
    /// `x² + xy + ((1−disc)/4)y²`.
    pub fn principal(disc: i128) -> Result<Self> {
        check_discriminant(disc)?;
        let b = disc.rem_euclid(2);
        Form::from_i128(1, b, (b * b - disc) / 4)
    }

    pub fn a(&self) -> i64 {
        self.a
    }
    pub fn b(&self) -> i64 {
        self.b
    }
    pub fn c(&self) -> i64 {
        self.c
    }

    pub fn coefficients(&self) -> [i64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn discriminant(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - 4 * a * c
    }

    /// `Δ = −disc`, positive for definite forms.
    pub fn delta(&self) -> i128 {
        -self.discriminant()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.discriminant() < 0
    }

    pub fn is_primitive(&self) -> bool {
        gcd3(self.a, self.b, self.c) == 1
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    /// `f(x, y)`, exact. Panics if the value leaves `i128`, which only
    /// happens for arguments far outside the ranges this crate enumerates.
    pub fn eval(&self, x: i64, y: i64) -> i128 {
        self.try_eval(x, y)
            .expect("form value exceeds the i128 range")
    }

    pub fn try_eval(&self, x: i64, y: i64) -> Option<i128> {
        let (x, y) = (x as i128, y as i128);
        let xx = x.checked_mul(x)?;
        let xy = x.checked_mul(y)?;
        let yy = y.checked_mul(y)?;
        (self.a as i128)
            .checked_mul(xx)?
            .checked_add((self.b as i128).checked_mul(xy)?)?
            .checked_add((self.c as i128).checked_mul(yy)?)
    }

    pub fn require_positive_definite(&self) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite(*self))
        }
    }

    pub fn require_primitive_definite(&self) -> Result<()> {
        self.require_positive_definite()?;
        if self.is_primitive() {
            Ok(())
        } else {
            Err(Error::NotPrimitive(*self))
        }
    }

    /// All `(x, y)` with `f(x, y) = n`, sorted. Requires a positive definite form.
    ///
    /// Uses `4a·f(x,y) = (2ax + by)² + Δy²`: for each admissible `y` the
    /// quadratic in `x` is solved exactly.
    pub fn representations(&self, n: i128) -> Vec<(i64, i64)> {
        debug_assert!(self.is_positive_definite());
        let mut out = Vec::new();
        if n < 0 {
            return out;
        }
        if n == 0 {
            out.push((0, 0));
            return out;
        }
        let a = self.a as i128;
        let b = self.b as i128;
        let delta = self.delta();
        let y_max = isqrt(4 * a * n / delta).unwrap_or(0);
        for y in -y_max..=y_max {
            let disc = 4 * a * n - delta * y * y;
            let Some(s) = exact_sqrt(disc) else { continue };
            for root in [-b * y + s, -b * y - s] {
                if root.rem_euclid(2 * a) == 0 {
                    let x = root / (2 * a);
                    if s == 0 && root != -b * y + s {
                        continue;
                    }
                    out.push((x as i64, y as i64));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Representations with `gcd(x, y) = 1`.
    pub fn primitive_representations(&self, n: i128) -> Vec<(i64, i64)> {
        self.representations(n)
            .into_iter()
            .filter(|&(x, y)| gcd(x, y) == 1)
            .collect()
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, self.c)
    }
}

impl TryFrom<[i64; 3]> for Form {
    type Error = Error;
    fn try_from(v: [i64; 3]) -> Result<Self> {
        Form::new(v[0], v[1], v[2])
    }
}

impl From<Form> for [i64; 3] {
    fn from(f: Form) -> Self {
        f.coefficients()
    }
}

impl FromStr for Form {
    type Err = Error;

    /// Parses `"a,b,c"` (whitespace tolerated).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected a form as \"a,b,c\", got {s:?}")));
        }
        let mut v = [0i64; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient {p:?} in form {s:?}")))?;
        }
        Form::try_from(v)
    }
}

/// Determinant-one substitution `(x, y) ↦ (px + qy, rx + sy)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct UnimodularMap {
    p: i64,
    q: i64,
    r: i64,
    s: i64,
}

impl UnimodularMap {
    pub const IDENTITY: UnimodularMap = UnimodularMap { p: 1, q: 0, r: 0, s: 1 };

    pub fn new(p: i64, q: i64, r: i64, s: i64) -> Result<Self> {
        if (p as i128) * (s as i128) - (q as i128) * (r as i128) != 1 {
            return Err(Error::NotUnimodular(p, q, r, s));
        }
        Ok(UnimodularMap { p, q, r, s })
    }

    fn from_i128(p: i128, q: i128, r: i128, s: i128) -> Result<Self> {
        UnimodularMap::new(
            i128_to_i64(p, "matrix entry")?,
            i128_to_i64(q, "matrix entry")?,
            i128_to_i64(r, "matrix entry")?,
            i128_to_i64(s, "matrix entry")?,
        )
    }

    /// A unimodular map whose first column is the primitive vector `(x, y)`.
    ///
    /// The second column `(r, s)` solves `xs − ry = 1` with `s` normalised
    /// into `[0, |y|)` (and `r = 0` when `y = 0`).
    pub fn with_first_column(x: i64, y: i64) -> Result<Self> {
        if gcd(x, y) != 1 {
            return Err(Error::Precondition(format!(
                "({x}, {y}) is not a primitive vector"
            )));
        }
        let (x, y) = (x as i128, y as i128);
        if y == 0 {
            return UnimodularMap::from_i128(x, 0, 0, x);
        }
        let m = y.abs();
        // xs ≡ 1 (mod |y|)
        let s = mod_inverse(x, m).expect("gcd(x, y) = 1");
        let r = (x * s - 1) / y;
        UnimodularMap::from_i128(x, r, y, s)
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.p, self.q, self.r, self.s]
    }

    /// Matrix product `self · other`; substituting by the product equals
    /// substituting by `self` and then by `other`.
    pub fn then(&self, other: &UnimodularMap) -> Result<Self> {
        let [p1, q1, r1, s1] = self.entries().map(|v| v as i128);
        let [p2, q2, r2, s2] = other.entries().map(|v| v as i128);
        UnimodularMap::from_i128(
            p1 * p2 + q1 * r2,
            p1 * q2 + q1 * s2,
            r1 * p2 + s1 * r2,
            r1 * q2 + s1 * s2,
        )
    }

    pub fn inverse(&self) -> Self {
        UnimodularMap {
            p: self.s,
            q: -self.q,
            r: -self.r,
            s: self.p,
        }
    }

    pub fn apply(&self, x: i64, y: i64) -> (i128, i128) {
        let (x, y) = (x as i128, y as i128);
        (
            self.p as i128 * x + self.q as i128 * y,
            self.r as i128 * x + self.s as i128 * y,
        )
    }
}

impl fmt::Display for UnimodularMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.p, self.q, self.r, self.s)
    }
}

impl TryFrom<[i64; 4]> for UnimodularMap {
    type Error = Error;
    fn try_from(v: [i64; 4]) -> Result<Self> {
        UnimodularMap::new(v[0], v[1], v[2], v[3])
    }
}

impl From<UnimodularMap> for [i64; 4] {
    fn from(u: UnimodularMap) -> Self {
        u.entries()
    }
}

pub fn check_discriminant(disc: i128) -> Result<()> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidDiscriminant(disc));
    }
    Ok(())
}

/// `g(x, y) = f(px + qy, rx + sy)`.
pub fn transform(f: &Form, u: &UnimodularMap) -> Result<Form> {
    let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
    let [p, q, r, s] = u.entries().map(|v| v as i128);
    let overflow = || Error::Overflow(format!("transform of {f:?} by {u}"));
    let new_a = f.try_eval(u.p, u.r).ok_or_else(overflow)?;
    let new_c = f.try_eval(u.q, u.s).ok_or_else(overflow)?;
    let new_b = (|| {
        let t1 = (2 * a).checked_mul(p.checked_mul(q)?)?;
        let t2 = b.checked_mul(p.checked_mul(s)?.checked_add(q.checked_mul(r)?)?)?;
        let t3 = (2 * c).checked_mul(r.checked_mul(s)?)?;
        t1.checked_add(t2)?.checked_add(t3)
    })()
    .ok_or_else(overflow)?;
    Form::from_i128(new_a, new_b, new_c)
}

/// Gauss reduction of a positive definite form.
///
/// Returns the reduced form `g` and a witness `U` with `transform(f, U) = g`.
pub fn reduce(f: &Form) -> Result<(Form, UnimodularMap)> {
    f.require_positive_definite()?;
    let (mut a, mut b, mut c) = (f.a as i128, f.b as i128, f.c as i128);
    // accumulated matrix, kept in i128 until the end
    let (mut p, mut q, mut r, mut s) = (1i128, 0i128, 0i128, 1i128);
    loop {
        // x ↦ x + ky brings b into (−a, a]
        let k = (a - b).div_euclid(2 * a);
        if k != 0 {
            c += k * (a * k + b);
            b += 2 * a * k;
            q += p * k;
            s += r * k;
        }
        if a > c || (a == c && b < 0) {
            // (x, y) ↦ (−y, x)
            std::mem::swap(&mut a, &mut c);
            b = -b;
            (p, q) = (q, -p);
            (r, s) = (s, -r);
            continue;
        }
        break;
    }
    let g = Form::from_i128(a, b, c)?;
    let u = UnimodularMap::from_i128(p, q, r, s)?;
    debug_assert!(g.is_reduced());
    Ok((g, u))
}

/// All primitive reduced forms of discriminant `disc`, sorted by `a`, then
/// `|b|`, positive `b` before negative.
pub fn enumerate_reduced_forms(disc: i128) -> Result<Vec<Form>> {
    check_discriminant(disc)?;
    let mut out = Vec::new();
    let mut a: i128 = 1;
    while 3 * a * a <= -disc {
        for b in (1 - a)..=a {
            if (b * b - disc) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b - disc) / (4 * a);
            if c < a || (b < 0 && c == a) {
                continue;
            }
            let f = Form::from_i128(a, b, c)?;
            if f.is_primitive() {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort_by_key(|f| (f.a, f.b.abs(), f.b < 0));
    Ok(out)
}

/// A witness `U` with `transform(f, U) = g`, when the forms are properly
/// equivalent.
pub fn properly_equivalent(f: &Form, g: &Form) -> Result<Option<UnimodularMap>> {
    f.require_primitive_definite()?;
    g.require_primitive_definite()?;
    if f.discriminant() != g.discriminant() {
        return Err(Error::DiscriminantMismatch(
            *f,
            f.discriminant(),
            *g,
            g.discriminant(),
        ));
    }
    let (rf, uf) = reduce(f)?;
    let (rg, ug) = reduce(g)?;
    if rf != rg {
        return Ok(None);
    }
    let w = uf.then(&ug.inverse())?;
    let check = transform(f, &w)?;
    if check != *g {
        return Err(Error::Verification(format!(
            "equivalence witness {w} maps {f:?} to {check:?}, expected {g:?}"
        )));
    }
    Ok(Some(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: i64, b: i64, c: i64) -> Form {
        Form::new(a, b, c).unwrap()
    }

    fn map(p: i64, q: i64, r: i64, s: i64) -> UnimodularMap {
        UnimodularMap::new(p, q, r, s).unwrap()
    }

    #[test]
    fn discriminant_examples() {
        assert_eq!(form(1, 0, 1).discriminant(), -4);
        assert_eq!(form(1, 1, 6).discriminant(), -23);
        assert_eq!(form(2, 1, 1).discriminant(), -7);
    }

    #[test]
    fn discriminant_at_coefficient_limit() {
        let l = COEFF_LIMIT;
        let f = form(l, l, -l);
        let l = l as i128;
        assert_eq!(f.discriminant(), l * l + 4 * l * l);
        assert!(Form::new(l as i64 + 1, 0, 1).is_err());
    }

    #[test]
    fn transform_examples() {
        let f = form(1, 0, 1);
        assert_eq!(transform(&f, &UnimodularMap::IDENTITY).unwrap(), f);
        assert_eq!(transform(&f, &map(1, 1, 0, 1)).unwrap(), form(1, 2, 2));
        let g = transform(&form(2, -1, 3), &map(2, 1, 3, 2)).unwrap();
        assert_eq!(g, form(29, 37, 12));
        assert_eq!(g.discriminant(), -23);
    }

    #[test]
    fn non_unimodular_rejected() {
        assert!(UnimodularMap::new(1, 1, 1, 1).is_err());
        assert!(UnimodularMap::new(0, 1, 1, 0).is_err());
    }

    /// Breadth-first search through the elementary moves `x ↦ x ± y` and
    /// `(x, y) ↦ (−y, x)` until a reduced form is met.
    fn bfs_reduce(f: Form) -> Form {
        use std::collections::{HashSet, VecDeque};
        let moves = [map(1, 1, 0, 1), map(1, -1, 0, 1), map(0, -1, 1, 0)];
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([f]);
        while let Some(g) = queue.pop_front() {
            if g.is_reduced() {
                return g;
            }
            for m in &moves {
                let h = transform(&g, m).unwrap();
                if h.a.abs() < 10_000 && h.c.abs() < 10_000 && seen.insert(h) {
                    queue.push_back(h);
                }
            }
        }
        panic!("no reduced form reached from {f:?}");
    }

    #[test]
    fn reduce_examples_match_bfs() {
        for (f, expect) in [
            (form(4, 5, 3), form(2, -1, 3)),
            (form(1, 1, 6), form(1, 1, 6)),
            (form(2, 1, 1), form(1, 1, 2)),
        ] {
            assert_eq!(bfs_reduce(f), expect);
            let (g, u) = reduce(&f).unwrap();
            assert_eq!(g, expect);
            assert_eq!(transform(&f, &u).unwrap(), g);
        }
        assert_eq!(reduce(&form(1, 1, 6)).unwrap().1, UnimodularMap::IDENTITY);
    }

    #[test]
    fn reduce_rejects_indefinite() {
        assert!(matches!(
            reduce(&form(1, 3, 1)),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(reduce(&form(-1, 0, -1)).is_err());
    }

    #[test]
    fn reduction_tie_breaks() {
        // a = c forces b >= 0, |b| = a forces b = a
        assert_eq!(reduce(&form(2, -1, 2)).unwrap().0, form(2, 1, 2));
        assert_eq!(reduce(&form(2, -2, 3)).unwrap().0, form(2, 2, 3));
    }

    fn brute_reduced(disc: i128) -> Vec<Form> {
        let mut out = Vec::new();
        let bound = (-disc) as i64;
        for a in 1..=bound {
            for b in -a..=a {
                let num = (b as i128) * (b as i128) - disc;
                if num % (4 * a as i128) == 0 {
                    let c = (num / (4 * a as i128)) as i64;
                    let f = form(a, b, c);
                    if f.is_reduced() && f.is_primitive() {
                        out.push(f);
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(
            enumerate_reduced_forms(-23).unwrap(),
            vec![form(1, 1, 6), form(2, 1, 3), form(2, -1, 3)]
        );
        assert_eq!(enumerate_reduced_forms(-4).unwrap(), vec![form(1, 0, 1)]);
        assert_eq!(enumerate_reduced_forms(-3).unwrap(), vec![form(1, 1, 1)]);
        assert!(matches!(
            enumerate_reduced_forms(-5),
            Err(Error::InvalidDiscriminant(-5))
        ));
        assert!(enumerate_reduced_forms(8).is_err());
    }

    #[test]
    fn enumerate_matches_brute_force() {
        // known class numbers for a few discriminants
        for (disc, h) in [(-3, 1), (-4, 1), (-7, 1), (-20, 2), (-23, 3), (-40, 2), (-47, 5), (-56, 4), (-71, 7), (-84, 4)] {
            let mut got = enumerate_reduced_forms(disc).unwrap();
            assert_eq!(got.len(), h, "h({disc})");
            got.sort();
            assert_eq!(got, brute_reduced(disc), "disc {disc}");
        }
    }

    #[test]
    fn equivalence_examples() {
        assert!(properly_equivalent(&form(4, 5, 3), &form(2, -1, 3)).unwrap().is_some());
        assert!(properly_equivalent(&form(2, 1, 3), &form(2, -1, 3)).unwrap().is_none());
        let f = form(1, 1, 6);
        assert_eq!(
            properly_equivalent(&f, &f).unwrap(),
            Some(UnimodularMap::IDENTITY)
        );
        assert!(matches!(
            properly_equivalent(&form(1, 0, 1), &form(1, 1, 6)),
            Err(Error::DiscriminantMismatch(..))
        ));
    }

    #[test]
    fn representations_of_sums_of_two_squares() {
        let f = form(1, 0, 1);
        assert_eq!(f.representations(5).len(), 8);
        assert_eq!(f.representations(25).len(), 12);
        assert_eq!(f.primitive_representations(25).len(), 8);
        assert!(f.representations(3).is_empty());
        assert_eq!(f.representations(1), vec![(-1, 0), (0, -1), (0, 1), (1, 0)]);
    }

    #[test]
    fn with_first_column_examples() {
        assert_eq!(UnimodularMap::with_first_column(2, 3).unwrap(), map(2, 1, 3, 2));
        assert_eq!(UnimodularMap::with_first_column(0, 1).unwrap(), map(0, -1, 1, 0));
        assert_eq!(UnimodularMap::with_first_column(1, 0).unwrap(), UnimodularMap::IDENTITY);
        assert_eq!(UnimodularMap::with_first_column(-1, 0).unwrap(), map(-1, 0, 0, -1));
        assert!(UnimodularMap::with_first_column(2, 4).is_err());
    }

    #[test]
    fn parse_and_display() {
        let f: Form = "4, 5,3".parse().unwrap();
        assert_eq!(f, form(4, 5, 3));
        assert_eq!(f.to_string(), "4,5,3");
        assert!("4,5".parse::<Form>().is_err());
        assert!("a,b,c".parse::<Form>().is_err());
        assert_eq!(serde_json::to_string(&f).unwrap(), "[4,5,3]");
    }
}
