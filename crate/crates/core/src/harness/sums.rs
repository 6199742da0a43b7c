//! The sequences and sums built on `a_N = Σ_{F(ℓ,m)=N, gcd(ℓ,γm)=1} λ(ℓ)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arithmetic::characters::DirichletCharacter;
use crate::arithmetic::rho::rho;
use crate::arithmetic::sieve::SieveTables;
use crate::bqf::Form;
use crate::composition::CompositionContext;
use crate::error::{Error, Result};
use crate::harness::lambda::LambdaSpec;
use crate::harness::lattice::{ell_bound, for_row};
use crate::numtheory::gcd;

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedC {
    re: Compensated,
    im: Compensated,
}

impl CompensatedC {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// A periodic weight on `N`: a Dirichlet character, the indicator of a
/// residue class, or 1.
#[derive(Clone, Debug)]
pub struct Twist {
    q: u64,
    values: Vec<Complex64>,
}

impl Twist {
    pub fn trivial() -> Self {
        Twist { q: 1, values: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn character(chi: &DirichletCharacter) -> Self {
        Twist { q: chi.modulus(), values: chi.table() }
    }

    /// `[N ≡ a (mod q)]`.
    pub fn residue(a: i64, q: u64) -> Self {
        let r = a.rem_euclid(q as i64) as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
        values[r] = Complex64::new(1.0, 0.0);
        Twist { q, values }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn at(&self, n: u64) -> Complex64 {
        self.values[(n % self.q) as usize]
    }
}

/// Per-`d` terms of the remainder sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Remainders {
    /// `(d, A_d, M_d)` for `d = 1..=D`.
    pub terms: Vec<(u64, Complex64, Complex64)>,
    /// `Σ_{d ≤ D} |A_d − M_d|`.
    pub total: f64,
}

/// Shared state for the sums at one `(F, X, λ)`.
pub struct SieveHarness<'a> {
    form: Form,
    x: u64,
    ctx: &'a CompositionContext,
    tables: &'a SieveTables,
    lambda: Vec<f64>,
    ell_max: i64,
}

impl<'a> SieveHarness<'a> {
    pub fn new(
        ctx: &'a CompositionContext,
        x: u64,
        lambda: &LambdaSpec,
        tables: &'a SieveTables,
    ) -> Result<Self> {
        if tables.limit() < x {
            return Err(Error::Precondition(format!(
                "X = {x} exceeds the sieve limit {}",
                tables.limit()
            )));
        }
        lambda.validate()?;
        let form = ctx.form;
        let ell_max = ell_bound(&form, x);
        let lambda = lambda.dense(ell_max.max(0) as u64, Some(tables))?;
        Ok(SieveHarness { form, x, ctx, tables, lambda, ell_max })
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn lambda_at(&self, ell: i64) -> f64 {
        if ell < 1 { 0.0 } else { self.lambda[ell as usize] }
    }

    pub fn ell_max(&self) -> i64 {
        self.ell_max
    }

    pub fn pf_coprime(&self, n: u64) -> bool {
        n == 1 || self.tables.spf(n) > self.ctx.cf
    }

    fn admissible(&self, d: u64, twist: &Twist) -> bool {
        gcd(d as i64, twist.modulus() as i64) == 1 && self.pf_coprime(d)
    }

    fn primitive_pair(&self, ell: i64, m: i64) -> bool {
        gcd(ell, self.form.c()) == 1 && gcd(ell, m) == 1
    }

    /// `a_N` for `N = 0..=X`.
    pub fn a_n(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.x as usize + 1];
        for ell in 1..=self.ell_max {
            let w = self.lambda_at(ell);
            if w == 0.0 {
                continue;
            }
            for_row(&self.form, self.x, ell, |m, n| {
                if self.primitive_pair(ell, m) {
                    a[n as usize] += w;
                }
            });
        }
        a
    }

    /// `A_d = Σ_{N ≤ X, d | N, gcd(N, P_F) = 1} a_N w(N)`; zero when `gcd(d, qP_F) > 1`.
    pub fn a_d(&self, a: &[f64], d: u64, twist: &Twist) -> Complex64 {
        let mut acc = CompensatedC::default();
        if d == 0 || !self.admissible(d, twist) {
            return acc.value();
        }
        let mut n = d;
        while n <= self.x {
            let v = a[n as usize];
            if v != 0.0 && self.pf_coprime(n) {
                acc.add(twist.at(n) * v);
            }
            n += d;
        }
        acc.value()
    }

    /// `λ(ℓ)·Σ_m w(F(ℓ,m))` over the row with `gcd(ℓ, γm) = 1` and
    /// `gcd(F(ℓ,m), P_F) = 1`, for `ℓ = 0..=ℓ_max`.
    pub fn row_sums(&self, twist: &Twist) -> Vec<Complex64> {
        (0..=self.ell_max)
            .into_par_iter()
            .map(|ell| {
                let w = self.lambda_at(ell);
                let mut acc = CompensatedC::default();
                if w != 0.0 {
                    for_row(&self.form, self.x, ell, |m, n| {
                        if self.primitive_pair(ell, m) && self.pf_coprime(n) {
                            acc.add(twist.at(n));
                        }
                    });
                }
                acc.value() * w
            })
            .collect()
    }

    /// `M_d = ρ(d)/d · Σ_{gcd(ℓ, d) = 1} rows[ℓ]`; zero when `gcd(d, qP_F) > 1`.
    pub fn m_d(&self, rows: &[Complex64], d: u64, twist: &Twist) -> Complex64 {
        let mut acc = CompensatedC::default();
        if d == 0 || !self.admissible(d, twist) {
            return acc.value();
        }
        let r = rho(d, &self.form);
        if r == 0 {
            return acc.value();
        }
        for (ell, &v) in rows.iter().enumerate().skip(1) {
            if gcd(ell as i64, d as i64) == 1 {
                acc.add(v);
            }
        }
        acc.value() * (r as f64 / d as f64)
    }

    /// `A_d`, `M_d` for `d ≤ D` and `R(X, D) = Σ |A_d − M_d|`.
    pub fn remainders(&self, a: &[f64], d_max: u64, twist: &Twist) -> Result<Remainders> {
        if d_max > self.x {
            return Err(Error::Precondition(format!("D = {d_max} exceeds X = {}", self.x)));
        }
        let rows = self.row_sums(twist);
        let terms: Vec<(u64, Complex64, Complex64)> = (1..=d_max)
            .into_par_iter()
            .map(|d| (d, self.a_d(a, d, twist), self.m_d(&rows, d, twist)))
            .collect();
        let mut total = Compensated::default();
        for (_, ad, md) in &terms {
            total.add((ad - md).norm());
        }
        Ok(Remainders { terms, total: total.value() })
    }

    /// `P(X; w) = Σ_{N ≤ X, gcd(N, P_F) = 1} a_N w(N) Λ(N)`.
    pub fn p_x_chi(&self, a: &[f64], twist: &Twist) -> Complex64 {
        let mut acc = CompensatedC::default();
        for n in 2..=self.x {
            let v = a[n as usize];
            if v == 0.0 || !self.pf_coprime(n) {
                continue;
            }
            let lam = self.tables.lambda(n);
            if lam != 0.0 {
                acc.add(twist.at(n) * (v * lam));
            }
        }
        acc.value()
    }

    /// `B(X; Y, Z; w) = Σ_{bd ≤ X, b > Y, gcd(bd, P_F) = 1} μ(b) (Σ_{c | d, c > Z} Λ(c)) a_{bd} w(bd)`.
    pub fn bilinear_b(&self, a: &[f64], y: f64, z: f64, twist: &Twist) -> Result<Complex64> {
        if !(y > 1.0 && z > 1.0) {
            return Err(Error::Precondition(format!("bilinear sum needs Y, Z > 1, got Y = {y}, Z = {z}")));
        }
        let mut acc = CompensatedC::default();
        for n in 2..=self.x {
            let v = a[n as usize];
            if v == 0.0 || !self.pf_coprime(n) {
                continue;
            }
            let fac = self.tables.factor(n);
            let k = fac.len();
            let mut inner_total = Compensated::default();
            for mask in 0u32..(1 << k) {
                let mut b = 1u64;
                for (i, &(p, _)) in fac.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        b *= p;
                    }
                }
                if (b as f64) <= y {
                    continue;
                }
                let mut inner = 0.0;
                for (i, &(p, e)) in fac.iter().enumerate() {
                    let e = e - (mask >> i & 1);
                    let mut c = 1u64;
                    for _ in 0..e {
                        c *= p;
                        if c as f64 > z {
                            inner += (p as f64).ln();
                        }
                    }
                }
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                inner_total.add(sign * inner);
            }
            let s = inner_total.value();
            if s != 0.0 {
                acc.add(twist.at(n) * (v * s));
            }
        }
        Ok(acc.value())
    }
}
