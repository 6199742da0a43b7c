//! Dirichlet composition and the composition context of a form.
//!
//! For `f = (a, b, c)` and `F = (α, β, γ)` of discriminant `−Δ` with
//! `gcd(a, α, (b+β)/2) = 1`, and `B` with `B ≡ b (2a)`, `B ≡ β (2α)`,
//! `B² + Δ ≡ 0 (4aα)`, the composite is `h = (aα, B, (B²+Δ)/(4aα))` and
//! the bilinear substitution
//!
//! ```text
//! W = (u − kv)X − (ju + lv)Y        k = (B − b)/(2a)
//! Z = αvX + (au + sv)Y              j = (B − β)/(2α)
//!                                   l = ((b+β)B + Δ − bβ)/(4aα)
//!                                   s = (b + β)/2
//! ```
//!
//! satisfies `f(u, v)·F(X, Y) = h(W, Z)`. Its inverse, scaled by `f(u, v)`,
//! gives `X = (au + sv)w + (ju + lv)z` and `Y = −αvw + (u − kv)z`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bqf::{enumerate_reduced_forms, reduce, transform, Form, UnimodularMap};
use crate::error::{Error, Result};
use crate::numtheory::{self, crt, ext_gcd, gcd, gcd3, i128_to_i64, is_prime, to_i64};

/// Candidate points tried per class when looking for a prime leading coefficient.
pub const PRIME_SEARCH_BUDGET: usize = 100_000;

/// The derived integers of the bilinear substitution for a pair `(f, F)`
/// and a fixed `B`. Construction checks every division is exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub a: i128,
    pub b: i128,
    pub alpha: i128,
    pub beta: i128,
    pub delta: i128,
    pub big_b: i128,
    pub k: i128,
    pub j: i128,
    pub l: i128,
    pub s: i128,
}

fn exact_div(num: i128, den: i128, what: &str) -> Result<i128> {
    if den == 0 || num % den != 0 {
        return Err(Error::InexactDivision(format!("{what}: {num} / {den}")));
    }
    Ok(num / den)
}

impl Substitution {
    pub fn new(f: &Form, big_f: &Form, big_b: i64) -> Result<Self> {
        let (a, b) = (f.a() as i128, f.b() as i128);
        let (alpha, beta) = (big_f.a() as i128, big_f.b() as i128);
        let delta = big_f.delta();
        let big_b = big_b as i128;
        let k = exact_div(big_b - b, 2 * a, "(B − b)/(2a)")?;
        let j = exact_div(big_b - beta, 2 * alpha, "(B − β)/(2α)")?;
        let l = exact_div(
            (b + beta) * big_b + delta - b * beta,
            4 * a * alpha,
            "((b+β)B + Δ − bβ)/(4aα)",
        )?;
        let s = exact_div(b + beta, 2, "(b + β)/2")?;
        Ok(Substitution { a, b, alpha, beta, delta, big_b, k, j, l, s })
    }

    /// `(W, Z)` with `f(u,v)·F(X,Y) = h(W,Z)`.
    pub fn wz(&self, u: i64, v: i64, x: i64, y: i64) -> (i128, i128) {
        let (u, v, x, y) = (u as i128, v as i128, x as i128, y as i128);
        let w = (u - self.k * v) * x - (self.j * u + self.l * v) * y;
        let z = self.alpha * v * x + (self.a * u + self.s * v) * y;
        (w, z)
    }

    /// `(X, Y)` recovered from `(u, v, w, z)`.
    pub fn xy(&self, u: i64, v: i64, w: i64, z: i64) -> (i128, i128) {
        let (u, v, w, z) = (u as i128, v as i128, w as i128, z as i128);
        let x = (self.a * u + self.s * v) * w + (self.j * u + self.l * v) * z;
        let y = -self.alpha * v * w + (u - self.k * v) * z;
        (x, y)
    }

    /// `αvw + (u − kv)z`.
    pub fn bilinear(&self, u: i64, v: i64, w: i64, z: i64) -> i128 {
        let (u, v, w, z) = (u as i128, v as i128, w as i128, z as i128);
        self.alpha * v * w + (u - self.k * v) * z
    }
}

fn check_pair(f: &Form, big_f: &Form) -> Result<()> {
    f.require_primitive_definite()?;
    big_f.require_primitive_definite()?;
    if f.discriminant() != big_f.discriminant() {
        return Err(Error::DiscriminantMismatch(
            *f,
            f.discriminant(),
            *big_f,
            big_f.discriminant(),
        ));
    }
    let g = gcd3(f.a(), big_f.a(), (f.b() + big_f.b()) / 2);
    if g != 1 {
        return Err(Error::CompositionGcd { f: *f, big_f: *big_f, gcd: g });
    }
    Ok(())
}

fn check_congruences(f: &Form, big_f: &Form, big_b: i64) -> Result<()> {
    let (a, b) = (f.a() as i128, f.b() as i128);
    let (alpha, beta) = (big_f.a() as i128, big_f.b() as i128);
    let bb = big_b as i128;
    let fail = |c: String| Error::Congruence { b: big_b.to_string(), congruence: c };
    if (bb - b).rem_euclid(2 * a) != 0 {
        return Err(fail(format!("B ≡ b = {b} (mod 2a = {})", 2 * a)));
    }
    if (bb - beta).rem_euclid(2 * alpha) != 0 {
        return Err(fail(format!("B ≡ β = {beta} (mod 2α = {})", 2 * alpha)));
    }
    if (bb * bb + big_f.delta()).rem_euclid(4 * a * alpha) != 0 {
        return Err(fail(format!("B² + Δ ≡ 0 (mod 4aα = {})", 4 * a * alpha)));
    }
    Ok(())
}

/// The Dirichlet composite `(aα, B, (B²+Δ)/(4aα))` of `f` and `F`.
pub fn dirichlet_compose(f: &Form, big_f: &Form, big_b: i64) -> Result<Form> {
    check_pair(f, big_f)?;
    check_congruences(f, big_f, big_b)?;
    companion_form(f, big_f, big_b)
}

/// `(aα, B, (B²+Δ)/(4aα))` without revalidating the congruences.
pub fn companion_form(f: &Form, big_f: &Form, big_b: i64) -> Result<Form> {
    let a_alpha = f.a() as i128 * big_f.a() as i128;
    let bb = big_b as i128;
    let c = exact_div(bb * bb + big_f.delta(), 4 * a_alpha, "(B² + Δ)/(4aα)")?;
    Form::new(i128_to_i64(a_alpha, "aα")?, big_b, i128_to_i64(c, "(B²+Δ)/(4aα)")?)
}

/// Smallest non-negative `B` satisfying the three composition congruences.
///
/// Solves `ak ≡ (β−b)/2 (mod α)` and `((b+β)/2)k ≡ −c (mod α)` for
/// `B = b + 2ak`; the solution is unique mod `2aα`.
pub fn composition_b(f: &Form, big_f: &Form) -> Result<i64> {
    check_pair(f, big_f)?;
    let (a, b, c) = (f.a() as i128, f.b() as i128, f.c() as i128);
    let (alpha, beta) = (big_f.a() as i128, big_f.b() as i128);
    let n = (beta - b) / 2;
    let s = (b + beta) / 2;
    let (g1, x1, y1) = ext_gcd(a, s);
    let (g, x2, _) = ext_gcd(g1, alpha);
    debug_assert_eq!(g.abs(), 1);
    let (lam, mu) = (x1 * x2 * g, y1 * x2 * g);
    let k = (lam * n - mu * c).rem_euclid(alpha);
    let big_b = (b + 2 * a * k).rem_euclid(2 * a * alpha);
    let big_b = i128_to_i64(big_b, "B")?;
    check_congruences(f, big_f, big_b)?;
    Ok(big_b)
}

/// `(W, Z)` with `f(u,v)·F(X,Y) = h(W,Z)` where `h = dirichlet_compose(f, F, B)`.
pub fn wz_substitution(
    f: &Form,
    big_f: &Form,
    big_b: i64,
    (u, v): (i64, i64),
    (x, y): (i64, i64),
) -> Result<(i128, i128)> {
    check_pair(f, big_f)?;
    check_congruences(f, big_f, big_b)?;
    Ok(Substitution::new(f, big_f, big_b)?.wz(u, v, x, y))
}

/// Composition of two arbitrary primitive classes of the same
/// discriminant, returned reduced. When the gcd condition fails for the
/// given representatives, `g` is first replaced by an equivalent form whose
/// leading coefficient is coprime to `f(1, 0)`.
pub fn compose_classes(f: &Form, g: &Form) -> Result<Form> {
    let g = match check_pair(f, g) {
        Ok(()) => *g,
        Err(Error::CompositionGcd { .. }) => coprime_leading_equivalent(g, f.a())?,
        Err(e) => return Err(e),
    };
    let h = dirichlet_compose(f, &g, composition_b(f, &g)?)?;
    Ok(reduce(&h)?.0)
}

fn coprime_leading_equivalent(g: &Form, modulus: i64) -> Result<Form> {
    for (x, y) in box_points().take(PRIME_SEARCH_BUDGET) {
        let value = g.eval(x, y);
        if i128_to_i64(value, "form value").map(|v| gcd(v, modulus) == 1).unwrap_or(false) {
            return transform(g, &UnimodularMap::with_first_column(x, y)?);
        }
    }
    Err(Error::SearchExhausted { form: *g, budget: PRIME_SEARCH_BUDGET })
}

/// Primitive points of the closed first quadrant in growing boxes
/// `max(x, y) = r`, `r = 1, 2, …`; within a box `x` ascends, then `y`.
fn box_points() -> impl Iterator<Item = (i64, i64)> {
    (1i64..).flat_map(|r| {
        (0..=r).flat_map(move |x| {
            let ys: Vec<i64> = if x == r { (0..=r).collect() } else { vec![r] };
            ys.into_iter()
                .filter(move |&y| gcd(x, y) == 1)
                .map(move |y| (x, y))
        })
    })
}

/// One member of `S_F(t)` with the data that certifies its choice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representative {
    pub form: Form,
    /// The reduced form of the class.
    pub class: Form,
    /// Leading coefficient of `form`: 1 for the principal class, otherwise a prime.
    pub leading: i64,
    /// Point where `class` takes the value `leading`.
    pub point: (i64, i64),
    /// `transform(class, map) = form`.
    pub map: UnimodularMap,
}

impl Representative {
    fn verify(&self) -> Result<()> {
        let moved = transform(&self.class, &self.map)?;
        if moved != self.form || self.form.a() != self.leading {
            return Err(Error::Verification(format!(
                "representative {:?} is not the image of {:?} under {}",
                self.form, self.class, self.map
            )));
        }
        if self.map.entries()[0] != self.point.0 || self.map.entries()[2] != self.point.1 {
            return Err(Error::Verification(format!(
                "map {} does not start at {:?}",
                self.map, self.point
            )));
        }
        if reduce(&self.form)?.0 != self.class {
            return Err(Error::Verification(format!(
                "{:?} does not reduce to {:?}",
                self.form, self.class
            )));
        }
        Ok(())
    }
}

/// Builds `S_F(t)`: one form per proper-equivalence class of discriminant
/// `disc F`, the principal class kept as the reduced principal form, every
/// other class moved so its leading coefficient is a prime not dividing
/// `2tΔ` and not used by an earlier class.
///
/// The result depends on `F` only through its discriminant.
pub fn build_sf(big_f: &Form, t: i64) -> Result<Vec<Representative>> {
    big_f.require_primitive_definite()?;
    if t == 0 {
        return Err(Error::Precondition("S_F(t) needs t ≠ 0".into()));
    }
    let disc = big_f.discriminant();
    let excluded = 2 * (t as i128).abs() * (-disc);
    let classes = enumerate_reduced_forms(disc)?;
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(classes.len());
    for (i, class) in classes.iter().enumerate() {
        if i == 0 {
            debug_assert_eq!(class.a(), 1);
            out.push(Representative {
                form: *class,
                class: *class,
                leading: 1,
                point: (1, 0),
                map: UnimodularMap::IDENTITY,
            });
            continue;
        }
        let mut found = None;
        for (x, y) in box_points().take(PRIME_SEARCH_BUDGET) {
            let value = class.eval(x, y);
            let Ok(p) = u64::try_from(value) else { continue };
            if !is_prime(p) || excluded % (p as i128) == 0 || used.contains(&p) {
                continue;
            }
            found = Some((p, x, y));
            break;
        }
        let (p, x, y) = found.ok_or(Error::SearchExhausted {
            form: *class,
            budget: PRIME_SEARCH_BUDGET,
        })?;
        used.insert(p);
        let map = UnimodularMap::with_first_column(x, y)?;
        let rep = Representative {
            form: transform(class, &map)?,
            class: *class,
            leading: p as i64,
            point: (x, y),
            map,
        };
        rep.verify()?;
        out.push(rep);
    }
    Ok(out)
}

fn b_system<'a>(
    big_f: &Form,
    forms: impl Iterator<Item = &'a Form>,
) -> Vec<(BigInt, BigInt)> {
    let mut system = vec![(BigInt::from(big_f.b()), BigInt::from(2 * big_f.a() as i128))];
    for f in forms {
        system.push((BigInt::from(f.b()), BigInt::from(2 * f.a() as i128)));
    }
    system
}

fn solve_b(system: &[(BigInt, BigInt)]) -> Result<i64> {
    let (b, _) = crt(system).map_err(Error::InconsistentSystem)?;
    to_i64(&b, "B")
}

/// Smallest non-negative `B` with `B ≡ b (2a)` for every `(a,b,c)` in
/// `sf` and `B ≡ β (2α)`; the products `4aα` are then checked to divide
/// `B² + Δ`.
pub fn choose_b(sf: &[Form], big_f: &Form) -> Result<i64> {
    let big_b = solve_b(&b_system(big_f, sf.iter()))?;
    for f in sf {
        check_congruences(f, big_f, big_b).map_err(|e| Error::InconsistentSystem(e.to_string()))?;
    }
    Ok(big_b)
}

/// Joint `B` for `S_F` and the nested sets: additionally `B ≡ e (2d)` for
/// `(d,e,f)` in the nested lists and `B² + Δ ≡ 0 (4adα)` for all pairs.
pub fn choose_joint_b(sf: &[Form], nested: &[Vec<Form>], big_f: &Form) -> Result<i64> {
    let system = b_system(big_f, sf.iter().chain(nested.iter().flatten()));
    let big_b = solve_b(&system)?;
    let bb = BigInt::from(big_b);
    let lhs = &bb * &bb + BigInt::from(big_f.delta());
    for f in sf {
        check_congruences(f, big_f, big_b).map_err(|e| Error::InconsistentSystem(e.to_string()))?;
        for g in nested.iter().flatten() {
            check_congruences(g, big_f, big_b)
                .map_err(|e| Error::InconsistentSystem(e.to_string()))?;
            let modulus = BigInt::from(4) * f.a() * g.a() * big_f.a();
            if !(&lhs % &modulus).is_zero() {
                return Err(Error::InconsistentSystem(format!(
                    "B² + Δ ≢ 0 (mod 4adα = {modulus}) for a = {}, d = {}",
                    f.a(),
                    g.a()
                )));
            }
        }
    }
    Ok(big_b)
}

/// `2αγΔ ∏ f(1, 0)` over the given set.
pub fn q_constant(big_f: &Form, set: &[Form]) -> BigUint {
    let mut q = BigUint::from(2u32)
        * BigUint::from(big_f.a() as u64)
        * BigUint::from(big_f.c().unsigned_abs())
        * BigUint::from(big_f.delta() as u128);
    for f in set {
        q *= BigUint::from(f.a() as u64);
    }
    q
}

fn primorial(limit: u64) -> BigUint {
    let mut acc = BigUint::one();
    for p in 2..=limit {
        if is_prime(p) {
            acc *= BigUint::from(p);
        }
    }
    acc
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid decimal integer {s:?}")))
    }

    pub mod vec {
        use num_bigint::BigUint;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| x.to_str_radix(10)))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
            Vec::<String>::deserialize(d)?
                .into_iter()
                .map(|s| {
                    BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| {
                        serde::de::Error::custom(format!("invalid decimal integer {s:?}"))
                    })
                })
                .collect()
        }
    }
}

/// A solution `(f; u, v, w, z)` of the decomposition of a coprime product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DecompositionTuple {
    pub f: Form,
    pub u: i64,
    pub v: i64,
    pub w: i64,
    pub z: i64,
}

/// Everything the composition identities need for a fixed form `F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionContext {
    pub form: Form,
    pub delta: i64,
    pub sf: Vec<Representative>,
    /// Nested set `S_{f*}` for each member of `sf`, in the same order.
    pub sf_star: Vec<Vec<Representative>>,
    /// Joint exponent.
    pub b: i64,
    #[serde(with = "decimal")]
    pub qf: BigUint,
    #[serde(with = "decimal::vec")]
    pub q_fstar: Vec<BigUint>,
    pub cf: u64,
    #[serde(with = "decimal")]
    pub pf: BigUint,
}

impl CompositionContext {
    /// Runs the full construction and verifies every invariant.
    pub fn build(big_f: &Form) -> Result<Self> {
        big_f.require_primitive_definite()?;
        let delta = i128_to_i64(big_f.delta(), "Δ")?;
        let sf = build_sf(big_f, big_f.a())?;
        let t_nested = sf
            .iter()
            .try_fold(big_f.a() as i128, |acc, r| acc.checked_mul(r.leading as i128))
            .ok_or_else(|| Error::Overflow("α ∏ f(1,0)".into()))?;
        let t_nested = i128_to_i64(t_nested, "α ∏ f(1,0)")?;
        // S_{f*} depends only on the discriminant and t, so one list serves every f.
        let nested = build_sf(big_f, t_nested)?;
        let sf_star = vec![nested; sf.len()];

        let sf_forms: Vec<Form> = sf.iter().map(|r| r.form).collect();
        let nested_forms: Vec<Vec<Form>> = sf_star
            .iter()
            .map(|list| list.iter().map(|r| r.form).collect())
            .collect();
        let b = choose_joint_b(&sf_forms, &nested_forms, big_f)?;

        let qf = q_constant(big_f, &sf_forms);
        let mut q_fstar = Vec::with_capacity(sf.len());
        for (f, list) in sf_forms.iter().zip(&nested_forms) {
            let fstar = companion_form(f, big_f, b)?;
            q_fstar.push(q_constant(&fstar, list));
        }
        let mut cf = 0u64;
        for q in std::iter::once(&qf).chain(&q_fstar) {
            cf = cf.max(largest_prime_factor(q)?);
        }
        let pf = primorial(cf);
        let ctx = CompositionContext {
            form: *big_f,
            delta,
            sf,
            sf_star,
            b,
            qf,
            q_fstar,
            cf,
            pf,
        };
        ctx.verify()?;
        Ok(ctx)
    }

    /// Re-checks every invariant; used after construction and after loading.
    pub fn verify(&self) -> Result<()> {
        let f0 = &self.form;
        f0.require_primitive_definite()?;
        let fail = |msg: String| Err(Error::Verification(msg));
        if self.delta as i128 != f0.delta() {
            return fail(format!("Δ = {} but disc F = {}", self.delta, f0.discriminant()));
        }
        let classes = enumerate_reduced_forms(f0.discriminant())?;
        let check_set = |set: &[Representative], t: i128, label: &str| -> Result<()> {
            if set.len() != classes.len() {
                return fail(format!("{label} has {} members, h = {}", set.len(), classes.len()));
            }
            let mut seen_classes = BTreeSet::new();
            let mut seen_primes = BTreeSet::new();
            for r in set {
                r.verify()?;
                if r.form.discriminant() != f0.discriminant() {
                    return fail(format!("{label}: {:?} has the wrong discriminant", r.form));
                }
                if !seen_classes.insert(r.class) {
                    return fail(format!("{label}: class {:?} repeated", r.class));
                }
                if r.leading != 1 {
                    let p = r.leading as u64;
                    if !is_prime(p) || (2 * t.abs() * self.delta as i128) % p as i128 == 0 {
                        return fail(format!("{label}: leading coefficient {p} not admissible"));
                    }
                    if !seen_primes.insert(p) {
                        return fail(format!("{label}: prime {p} used twice"));
                    }
                } else if r.form != classes[0] {
                    return fail(format!("{label}: {:?} has leading 1 but is not principal", r.form));
                }
            }
            if !seen_classes.contains(&classes[0]) {
                return fail(format!("{label}: principal class missing"));
            }
            Ok(())
        };
        check_set(&self.sf, f0.a() as i128, "S_F")?;
        if self.sf_star.len() != self.sf.len() {
            return fail("one nested set per member of S_F expected".into());
        }
        let t_nested = self.sf.iter().fold(f0.a() as i128, |acc, r| acc * r.leading as i128);
        for list in &self.sf_star {
            check_set(list, t_nested, "S_f*")?;
        }
        let sf_forms: Vec<Form> = self.sf_forms();
        let nested: Vec<Vec<Form>> = self
            .sf_star
            .iter()
            .map(|l| l.iter().map(|r| r.form).collect())
            .collect();
        let b = choose_joint_b(&sf_forms, &nested, f0)?;
        if b != self.b {
            return fail(format!("stored B = {} but the congruence system gives {b}", self.b));
        }
        if self.qf != q_constant(f0, &sf_forms) {
            return fail("Q_F does not match 2αγΔ∏f(1,0)".into());
        }
        for ((f, list), q) in sf_forms.iter().zip(&nested).zip(&self.q_fstar) {
            if *q != q_constant(&companion_form(f, f0, self.b)?, list) {
                return fail(format!("Q_f* mismatch for {f:?}"));
            }
        }
        if self.pf != primorial(self.cf) {
            return fail(format!("P_F is not the primorial of C_F = {}", self.cf));
        }
        for q in std::iter::once(&self.qf).chain(&self.q_fstar) {
            // Q may carry prime powers; P_F is squarefree, so only radicals divide.
            let mut rest = q.clone();
            loop {
                let g = rest.gcd(&self.pf);
                if g.is_one() {
                    break;
                }
                while (&rest % &g).is_zero() {
                    rest /= &g;
                }
            }
            if !rest.is_one() {
                return fail(format!("Q = {q} has a prime factor above C_F = {}", self.cf));
            }
        }
        Ok(())
    }

    pub fn sf_forms(&self) -> Vec<Form> {
        self.sf.iter().map(|r| r.form).collect()
    }

    /// Number of tuples per representation: 6, 4 or 2.
    pub fn unit_count(&self) -> u64 {
        match self.delta {
            3 => 6,
            4 => 4,
            _ => 2,
        }
    }

    pub fn gcd_with_pf(&self, n: u64) -> u64 {
        if n == 0 {
            return 0;
        }
        let r = (&self.pf % BigUint::from(n)).to_u64().unwrap_or(0);
        r.gcd(&n)
    }

    pub fn coprime_to_pf(&self, n: u64) -> bool {
        self.gcd_with_pf(n) == 1
    }

    fn member(&self, f: &Form) -> Result<()> {
        if self.sf.iter().any(|r| r.form == *f) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{f:?} is not a member of S_F")))
        }
    }

    pub fn substitution(&self, f: &Form) -> Result<Substitution> {
        Substitution::new(f, &self.form, self.b)
    }

    /// `f* = (aα, B, (B²+Δ)/(4aα))`.
    pub fn fstar(&self, f: &Form) -> Result<Form> {
        self.member(f)?;
        companion_form(f, &self.form, self.b)
    }

    /// `αvw + (u − ((B−b)/(2a))v)z`.
    pub fn qf_bilinear(&self, f: &Form, u: i64, v: i64, w: i64, z: i64) -> Result<i128> {
        self.member(f)?;
        Ok(self.substitution(f)?.bilinear(u, v, w, z))
    }

    /// All `(f; u, v, w, z)` with `f ∈ S_F`, `f(u,v) = m`, `f*(w,z) = n`,
    /// both pairs primitive, mapping back to `(X, Y)`.
    pub fn decompose_representation(
        &self,
        m: u64,
        n: u64,
        xy: (i64, i64),
    ) -> Result<Vec<DecompositionTuple>> {
        self.check_coprime_pair(m, n)?;
        if !self.coprime_to_pf(m * n) {
            return Err(Error::Precondition(format!("gcd(mn, P_F) ≠ 1 for mn = {}", m * n)));
        }
        let tuples = self.decompose_unchecked(m, n, xy)?;
        if tuples.is_empty() {
            return Err(Error::Verification(format!(
                "no decomposition of F{xy:?} = {m}·{n}"
            )));
        }
        Ok(tuples)
    }

    /// Decomposition without the `P_F` coprimality precondition.
    ///
    /// Still requires `gcd(X, Y) = 1` and `F(X, Y) = mn`.
    pub fn decompose_unchecked(
        &self,
        m: u64,
        n: u64,
        (x, y): (i64, i64),
    ) -> Result<Vec<DecompositionTuple>> {
        if gcd(x, y) != 1 {
            return Err(Error::Precondition(format!("gcd{:?} ≠ 1", (x, y))));
        }
        let mn = m as i128 * n as i128;
        if self.form.eval(x, y) != mn {
            return Err(Error::Precondition(format!("F{:?} ≠ {mn}", (x, y))));
        }
        let m128 = m as i128;
        let mut out = Vec::new();
        for f in self.sf_forms() {
            let sub = self.substitution(&f)?;
            let fstar = companion_form(&f, &self.form, self.b)?;
            for (u, v) in f.primitive_representations(m128) {
                let (big_w, big_z) = sub.wz(u, v, x, y);
                if big_w % m128 != 0 || big_z % m128 != 0 {
                    continue;
                }
                let w = i128_to_i64(big_w / m128, "w")?;
                let z = i128_to_i64(big_z / m128, "z")?;
                if gcd(w, z) != 1 || fstar.eval(w, z) != n as i128 || sub.xy(u, v, w, z) != (x as i128, y as i128) {
                    return Err(Error::Verification(format!(
                        "tuple ({f:?}; {u},{v},{w},{z}) fails reconstruction of {:?}",
                        (x, y)
                    )));
                }
                out.push(DecompositionTuple { f, u, v, w, z });
            }
        }
        Ok(out)
    }

    fn check_coprime_pair(&self, m: u64, n: u64) -> Result<()> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition("m and n must be positive".into()));
        }
        if m.gcd(&n) != 1 {
            return Err(Error::Precondition(format!("gcd({m}, {n}) ≠ 1")));
        }
        Ok(())
    }

    /// Multiset of ℓ-coordinates produced by the decomposition route:
    /// for every `f ∈ S_F`, primitive `(w,z)` with `f*(w,z) = m` and
    /// primitive `(u,v)` with `f(u,v) = n`, the first coordinate of the
    /// recovered `(X, Y)`. Only positive ℓ are kept.
    pub fn ell_profile_via_decomposition(&self, m: u64, n: u64) -> Result<BTreeMap<i64, u64>> {
        self.check_coprime_pair(m, n)?;
        let mut profile = BTreeMap::new();
        for f in self.sf_forms() {
            let sub = self.substitution(&f)?;
            let fstar = companion_form(&f, &self.form, self.b)?;
            let outer = fstar.primitive_representations(m as i128);
            if outer.is_empty() {
                continue;
            }
            let inner = f.primitive_representations(n as i128);
            for &(w, z) in &outer {
                for &(u, v) in &inner {
                    let (ell, _) = sub.xy(u, v, w, z);
                    if ell > 0 {
                        *profile.entry(i128_to_i64(ell, "ℓ")?).or_insert(0) += 1;
                    }
                }
            }
        }
        Ok(profile)
    }

    /// The right-hand side of the `a_{mn}` decomposition identity for the
    /// weight `lambda` (zero on ℓ ≤ 0).
    ///
    /// Each representation is hit [`unit_count`](Self::unit_count) times;
    /// the division happens on the integer multiplicities, and a
    /// multiplicity not divisible by the unit count is reported as an
    /// invariant failure.
    pub fn amn_via_decomposition(
        &self,
        m: u64,
        n: u64,
        lambda: impl Fn(i64) -> f64,
    ) -> Result<f64> {
        if !self.coprime_to_pf(m * n) {
            return Err(Error::Precondition(format!("gcd(mn, P_F) ≠ 1 for mn = {}", m * n)));
        }
        let profile = self.ell_profile_via_decomposition(m, n)?;
        let units = self.unit_count();
        let mut scaled = BTreeMap::new();
        for (ell, mult) in profile {
            if mult % units != 0 {
                return Err(Error::Verification(format!(
                    "ℓ = {ell} hit {mult} times, not a multiple of {units}"
                )));
            }
            scaled.insert(ell, mult / units);
        }
        Ok(weigh_profile(&scaled, lambda))
    }
}

/// `Σ mult·λ(ℓ)` in ascending ℓ.
pub fn weigh_profile(profile: &BTreeMap<i64, u64>, lambda: impl Fn(i64) -> f64) -> f64 {
    profile
        .iter()
        .filter(|(&ell, _)| ell > 0)
        .map(|(&ell, &mult)| mult as f64 * lambda(ell))
        .sum()
}

/// Multiset of ℓ over `F(ℓ, m) = N`, `gcd(ℓ, γm) = 1`, `ℓ ≥ 1`.
pub fn ell_profile_direct(big_f: &Form, n: u64) -> BTreeMap<i64, u64> {
    let gamma = big_f.c();
    let mut profile = BTreeMap::new();
    for (ell, m) in big_f.representations(n as i128) {
        if ell >= 1 && gcd(ell, gamma) == 1 && gcd(ell, m) == 1 {
            *profile.entry(ell).or_insert(0) += 1;
        }
    }
    profile
}

fn largest_prime_factor(q: &BigUint) -> Result<u64> {
    let v = q
        .to_u128()
        .ok_or_else(|| Error::Overflow(format!("cannot factor Q = {q} (above 128 bits)")))?;
    let p = numtheory::factor_u128(v).last().map(|&(p, _)| p).unwrap_or(1);
    u64::try_from(p).map_err(|_| Error::Overflow(format!("prime factor {p} of Q exceeds 64 bits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: i64, b: i64, c: i64) -> Form {
        Form::new(a, b, c).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert_eq!(dirichlet_compose(&form(1, 1, 6), &form(2, 1, 3), 1).unwrap(), form(2, 1, 3));
        let h = dirichlet_compose(&form(2, 1, 3), &form(2, 1, 3), 5).unwrap();
        assert_eq!(h, form(4, 5, 3));
        assert_eq!(reduce(&h).unwrap().0, form(2, -1, 3));
        assert_eq!(dirichlet_compose(&form(1, 0, 1), &form(1, 0, 1), 0).unwrap(), form(1, 0, 1));
    }

    #[test]
    fn compose_rejections() {
        let f = form(2, 1, 3);
        let g = form(2, -1, 3);
        assert!(matches!(
            dirichlet_compose(&f, &g, 1),
            Err(Error::CompositionGcd { gcd: 2, .. })
        ));
        match dirichlet_compose(&f, &f, 3) {
            Err(Error::Congruence { congruence, .. }) => assert!(congruence.contains("mod 2a")),
            other => panic!("unexpected {other:?}"),
        }
        // 9 ≡ 1 mod 4 but 81 + 23 = 104 is not divisible by 16
        match dirichlet_compose(&f, &f, 9) {
            Err(Error::Congruence { congruence, .. }) => assert!(congruence.contains("4aα")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            dirichlet_compose(&form(1, 0, 1), &f, 0),
            Err(Error::DiscriminantMismatch(..))
        ));
    }

    #[test]
    fn composition_b_solves_system() {
        assert_eq!(composition_b(&form(2, 1, 3), &form(2, 1, 3)).unwrap(), 5);
        assert_eq!(composition_b(&form(1, 1, 6), &form(2, 1, 3)).unwrap(), 1);
        assert_eq!(composition_b(&form(3, -1, 2), &form(29, 37, 12)).unwrap() % 2, 1);
    }

    #[test]
    fn wz_examples() {
        let f = form(1, 0, 1);
        for (u, v, x, y) in [(1, 2, 3, 4), (-2, 5, 7, -1), (0, 1, 1, 0)] {
            let (w, z) = wz_substitution(&f, &f, 0, (u, v), (x, y)).unwrap();
            assert_eq!((w, z), ((u * x - v * y) as i128, (v * x + u * y) as i128));
        }
        let (w, z) = wz_substitution(&form(1, 1, 6), &form(2, 1, 3), 1, (1, 0), (1, 0)).unwrap();
        assert_eq!(form(2, 1, 3).eval(w as i64, z as i64), 2);
        let (w, z) = wz_substitution(&form(1, 1, 6), &form(2, 1, 3), 1, (0, 0), (5, -3)).unwrap();
        assert_eq!((w, z), (0, 0));
    }

    #[test]
    fn build_sf_examples() {
        let forms = |f: Form, t| -> Vec<Form> {
            build_sf(&f, t).unwrap().into_iter().map(|r| r.form).collect()
        };
        assert_eq!(forms(form(1, 0, 1), 1), vec![form(1, 0, 1)]);
        assert_eq!(forms(form(1, 0, 1), 35), vec![form(1, 0, 1)]);
        assert_eq!(
            forms(form(1, 1, 6), 1),
            vec![form(1, 1, 6), form(3, -1, 2), form(29, 37, 12)]
        );
        assert_eq!(forms(form(1, 1, 1), 1), vec![form(1, 1, 1)]);
        let reps = build_sf(&form(1, 1, 6), 1).unwrap();
        assert_eq!(reps[1].point, (0, 1));
        assert_eq!(reps[2].point, (2, 3));
        assert_eq!(reps[2].map, UnimodularMap::new(2, 1, 3, 2).unwrap());
        assert!(build_sf(&form(1, 1, 6), 0).is_err());
    }

    #[test]
    fn build_sf_avoids_t_and_used_primes() {
        // 3 and 29 are excluded by t = 87
        let reps = build_sf(&form(1, 1, 6), 87).unwrap();
        let leads: Vec<i64> = reps.iter().map(|r| r.leading).collect();
        assert_eq!(leads, vec![1, 13, 31]);
    }

    #[test]
    fn choose_b_examples() {
        assert_eq!(choose_b(&[form(1, 0, 1)], &form(1, 0, 1)).unwrap(), 0);
        let sf = [form(1, 1, 6), form(3, -1, 2), form(29, 37, 12)];
        let b = choose_b(&sf, &form(1, 1, 6)).unwrap();
        assert_eq!(b, 95);
        for d in [4, 12, 116] {
            assert_eq!((95 * 95 + 23) % d, 0);
        }
        assert_eq!(choose_b(&[form(1, 1, 1)], &form(1, 1, 1)).unwrap(), 1);
        // two forms with the same leading 3 and incompatible middle coefficients
        assert!(matches!(
            choose_b(&[form(3, 1, 2), form(3, -1, 2)], &form(1, 1, 6)),
            Err(Error::InconsistentSystem(_))
        ));
    }

    fn ctx_with_b(big_f: Form, sf: &[Form], b: i64) -> CompositionContext {
        let mut ctx = CompositionContext::build(&big_f).unwrap();
        ctx.b = b;
        for (slot, f) in ctx.sf.iter_mut().zip(sf) {
            slot.form = *f;
        }
        ctx
    }

    #[test]
    fn fstar_and_bilinear_examples() {
        let c4 = CompositionContext::build(&form(1, 0, 1)).unwrap();
        assert_eq!(c4.fstar(&form(1, 0, 1)).unwrap(), form(1, 0, 1));
        for (u, v, w, z) in [(1, 2, 3, 4), (-3, 1, 0, 2), (5, -7, 2, 2)] {
            assert_eq!(
                c4.qf_bilinear(&form(1, 0, 1), u, v, w, z).unwrap(),
                (v * w + u * z) as i128
            );
        }
        let sf = [form(1, 1, 6), form(3, -1, 2), form(29, 37, 12)];
        let c23 = ctx_with_b(form(1, 1, 6), &sf, 95);
        assert_eq!(c23.fstar(&form(3, -1, 2)).unwrap(), form(3, 95, 754));
        assert_eq!(c23.fstar(&form(1, 1, 6)).unwrap(), form(1, 95, 2262));
        assert_eq!(c23.qf_bilinear(&form(1, 1, 6), 1, 1, 1, 1).unwrap(), -45);
        for f in &sf {
            assert_eq!(c23.qf_bilinear(f, 1, 0, 0, 1).unwrap(), 1);
        }
        assert!(c23.fstar(&form(2, 1, 3)).is_err());
    }

    #[test]
    fn build_context_examples() {
        let c4 = CompositionContext::build(&form(1, 0, 1)).unwrap();
        assert_eq!(c4.sf_forms(), vec![form(1, 0, 1)]);
        assert_eq!(c4.b, 0);
        assert_eq!(c4.qf, BigUint::from(8u32));
        assert_eq!((c4.cf, c4.pf.clone()), (2, BigUint::from(2u32)));

        let c3 = CompositionContext::build(&form(1, 1, 1)).unwrap();
        assert_eq!(c3.sf_forms(), vec![form(1, 1, 1)]);
        assert_eq!(c3.qf, BigUint::from(6u32));
        assert_eq!((c3.cf, c3.pf.clone()), (3, BigUint::from(6u32)));

        let c23 = CompositionContext::build(&form(1, 1, 6)).unwrap();
        assert_eq!(c23.sf_forms(), vec![form(1, 1, 6), form(3, -1, 2), form(29, 37, 12)]);
        for p in [2u32, 3, 23, 29, 13, 31] {
            assert!((&c23.pf % BigUint::from(p)).is_zero(), "{p} ∤ P_F");
        }
        for list in &c23.sf_star {
            let leads: Vec<i64> = list.iter().map(|r| r.leading).collect();
            assert_eq!(leads, vec![1, 13, 31]);
        }
        assert_eq!(c23.b, 38549);
        assert_eq!(c23.qf, BigUint::from(24012u32));
        assert_eq!(c23.cf, 883);
        let json = serde_json::to_string(&c23).unwrap();
        let back: CompositionContext = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c23);
        back.verify().unwrap();
    }

    #[test]
    fn context_verify_catches_tampering() {
        let mut ctx = CompositionContext::build(&form(1, 1, 6)).unwrap();
        ctx.b += 2;
        assert!(matches!(ctx.verify(), Err(Error::Verification(_))));
        let mut ctx = CompositionContext::build(&form(1, 1, 6)).unwrap();
        ctx.cf = 29;
        ctx.pf = primorial(29);
        assert!(ctx.verify().is_err());
    }

    #[test]
    fn decompose_sum_of_two_squares() {
        let ctx = CompositionContext::build(&form(1, 0, 1)).unwrap();
        let tuples = ctx.decompose_representation(5, 13, (4, 7)).unwrap();
        assert_eq!(tuples.len(), 4);
        let f = form(1, 0, 1);
        for t in [
            DecompositionTuple { f, u: 2, v: -1, w: 3, z: 2 },
            DecompositionTuple { f, u: -2, v: 1, w: -3, z: -2 },
        ] {
            assert!(tuples.contains(&t), "{t:?} missing");
        }
        assert_eq!(ctx.decompose_representation(1, 5, (1, 2)).unwrap().len(), 4);
        assert!(ctx.decompose_representation(2, 5, (1, 3)).is_err());
        assert!(ctx.decompose_representation(5, 5, (0, 5)).is_err());
        assert!(ctx.decompose_representation(5, 13, (4, 6)).is_err());
    }

    #[test]
    fn amn_edges() {
        let ctx = CompositionContext::build(&form(1, 0, 1)).unwrap();
        let one = |l: i64| if l > 0 { 1.0 } else { 0.0 };
        assert_eq!(ctx.amn_via_decomposition(1, 1, one).unwrap(), 1.0);
        let direct = weigh_profile(&ell_profile_direct(&form(1, 0, 1), 65), one);
        assert_eq!(ctx.amn_via_decomposition(5, 13, one).unwrap(), direct);
        assert_eq!(ctx.amn_via_decomposition(5, 13, |_| 0.0).unwrap(), 0.0);
        assert!(ctx.amn_via_decomposition(5, 10, one).is_err());
    }
}
