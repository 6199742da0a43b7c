//! Weights `λ(ℓ)` on the first coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arithmetic::sieve::SieveTables;
use crate::error::{Error, Result};
use crate::numtheory::{factor, is_prime};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaKind {
    ConstantOne,
    VonMangoldt,
    PrimeIndicator,
    /// `values[ℓ − 1] = λ(ℓ)`; declared bound `|λ(ℓ)| ≤ C·max(1, log ℓ)^A`.
    Table { values: Vec<f64>, a: f64, c: f64 },
}

/// `ℓ ≡ b (mod q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    pub b: i64,
    pub q: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSpec {
    #[serde(flatten)]
    pub kind: LambdaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<Restriction>,
}

impl LambdaSpec {
    pub fn new(kind: LambdaKind) -> Result<Self> {
        let spec = LambdaSpec { kind, restriction: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant_one() -> Self {
        LambdaSpec { kind: LambdaKind::ConstantOne, restriction: None }
    }

    pub fn von_mangoldt() -> Self {
        LambdaSpec { kind: LambdaKind::VonMangoldt, restriction: None }
    }

    pub fn prime_indicator() -> Self {
        LambdaSpec { kind: LambdaKind::PrimeIndicator, restriction: None }
    }

    /// Uniform values in `[−1, 1)` for `ℓ = 1..=len`, bound `C = 1, A = 0`.
    pub fn random_table(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        LambdaSpec { kind: LambdaKind::Table { values, a: 0.0, c: 1.0 }, restriction: None }
    }

    pub fn restricted(mut self, b: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Precondition("restriction modulus must be positive".into()));
        }
        self.restriction = Some(Restriction { b: b.rem_euclid(q as i64), q });
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.restriction {
            if r.q == 0 {
                return Err(Error::Precondition("restriction modulus must be positive".into()));
            }
        }
        if let LambdaKind::Table { values, a, c } = &self.kind {
            if !(a.is_finite() && c.is_finite() && *a >= 0.0 && *c > 0.0) {
                return Err(Error::Precondition(format!("table bound needs A ≥ 0, C > 0, got A = {a}, C = {c}")));
            }
            for (i, v) in values.iter().enumerate() {
                let ell = (i + 1) as f64;
                let bound = c * ell.ln().max(1.0).powf(*a);
                if !v.is_finite() || v.abs() > bound {
                    return Err(Error::Precondition(format!(
                        "λ({}) = {v} exceeds C·max(1, log ℓ)^A = {bound}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn admits(&self, ell: i64) -> bool {
        ell >= 1
            && self
                .restriction
                .is_none_or(|r| ell.rem_euclid(r.q as i64) == r.b.rem_euclid(r.q as i64))
    }

    /// `λ(ℓ)`; zero for `ℓ ≤ 0`, outside the restriction, or past the end of a table.
    pub fn value(&self, ell: i64) -> f64 {
        if !self.admits(ell) {
            return 0.0;
        }
        let n = ell as u64;
        match &self.kind {
            LambdaKind::ConstantOne => 1.0,
            LambdaKind::VonMangoldt => match factor(n).as_slice() {
                [(p, _)] => (*p as f64).ln(),
                _ => 0.0,
            },
            LambdaKind::PrimeIndicator => {
                if is_prime(n) {
                    1.0
                } else {
                    0.0
                }
            }
            LambdaKind::Table { values, .. } => values.get(n as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `λ(ℓ)` for `ℓ = 0..=max`, read from `tables` where they cover the range.
    pub fn dense(&self, max: u64, tables: Option<&SieveTables>) -> Result<Vec<f64>> {
        if let LambdaKind::Table { values, .. } = &self.kind {
            if (values.len() as u64) < max {
                return Err(Error::Precondition(format!(
                    "λ table has {} entries, {max} needed",
                    values.len()
                )));
            }
        }
        let covered = tables.filter(|t| t.limit() >= max);
        Ok((0..=max as i64)
            .map(|ell| match (&self.kind, covered) {
                _ if !self.admits(ell) => 0.0,
                (LambdaKind::VonMangoldt, Some(t)) => t.lambda(ell as u64),
                (LambdaKind::PrimeIndicator, Some(t)) => {
                    if t.is_prime(ell as u64) {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => self.value(ell),
            })
            .collect())
    }
}
