//! Dirichlet characters modulo `q`.
//!
//! `(Z/q)^×` is split into cyclic pieces: one per odd prime power, generated
//! by a primitive root, and for `2^k` the pieces `⟨−1⟩` (k ≥ 2) and `⟨5⟩`
//! (k ≥ 3). A character is a vector of exponents, one per piece, and
//! `χ(n) = e(t/M)` for an integer `t` mod the group exponent `M`. Values
//! stay as exponents until a complex number is asked for.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::numtheory::{factor, gcd};

const NOT_UNIT: u32 = u32::MAX;

#[derive(Debug)]
struct Piece {
    /// Prime power this piece lives on.
    modulus: u64,
    order: u64,
    /// Discrete log of every residue mod `modulus` (`NOT_UNIT` off the group).
    dlog: Vec<u32>,
}

#[derive(Debug)]
pub struct CharacterGroup {
    q: u64,
    pieces: Vec<Piece>,
    exponent: u64,
    roots: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct DirichletCharacter {
    group: Arc<CharacterGroup>,
    index: Vec<u64>,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = factor(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&(r, _)| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("every prime has a primitive root")
}

fn cyclic_piece(modulus: u64, generator: u64, order: u64, fold_sign: bool) -> Piece {
    let mut dlog = vec![NOT_UNIT; modulus as usize];
    let mut x = 1u64;
    for e in 0..order {
        dlog[x as usize] = e as u32;
        if fold_sign {
            dlog[(modulus - x) as usize] = e as u32;
        }
        x = x * generator % modulus;
    }
    Piece { modulus, order, dlog }
}

fn sign_piece(modulus: u64) -> Piece {
    let mut dlog = vec![NOT_UNIT; modulus as usize];
    for x in (1..modulus).step_by(2) {
        dlog[x as usize] = if x % 4 == 1 { 0 } else { 1 };
    }
    Piece { modulus, order: 2, dlog }
}

impl CharacterGroup {
    pub fn new(q: u64) -> Self {
        assert!((1..=1_000_000).contains(&q), "modulus must lie in [1, 10^6]");
        let mut pieces = Vec::new();
        for (p, k) in factor(q) {
            let pk = p.pow(k);
            if p == 2 {
                if k >= 2 {
                    pieces.push(sign_piece(pk));
                }
                if k >= 3 {
                    // 5 generates the residues ≡ 1 mod 4; ±x share a log
                    pieces.push(cyclic_piece(pk, 5, pk / 4, true));
                }
                continue;
            }
            let mut g = primitive_root(p);
            if k >= 2 && pow_mod(g, p - 1, p * p) == 1 {
                g += p;
            }
            pieces.push(cyclic_piece(pk, g, pk / p * (p - 1), false));
        }
        let exponent = pieces.iter().fold(1u64, |acc, pc| num_integer::lcm(acc, pc.order));
        let roots = (0..exponent)
            .map(|t| Complex64::from_polar(1.0, TAU * t as f64 / exponent as f64))
            .collect();
        CharacterGroup { q, pieces, exponent, roots }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Exponent `M` of the unit group; character values are `M`-th roots of unity.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn order(&self) -> u64 {
        self.pieces.iter().map(|p| p.order).product()
    }

    fn logs(&self, n: i64) -> Option<Vec<u64>> {
        if gcd(n, self.q as i64) != 1 {
            return None;
        }
        self.pieces
            .iter()
            .map(|pc| {
                let r = n.rem_euclid(pc.modulus as i64) as usize;
                let l = pc.dlog[r];
                (l != NOT_UNIT).then_some(l as u64)
            })
            .collect()
    }

    pub fn root(&self, t: u64) -> Complex64 {
        self.roots[(t % self.exponent) as usize]
    }
}

/// All `φ(q)` characters mod `q`, the principal one first.
pub fn characters_mod(q: u64) -> Vec<DirichletCharacter> {
    let group = Arc::new(CharacterGroup::new(q));
    let mut out = vec![Vec::new()];
    for pc in &group.pieces {
        out = out
            .into_iter()
            .flat_map(|idx: Vec<u64>| {
                (0..pc.order).map(move |e| {
                    let mut v = idx.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|index| DirichletCharacter { group: group.clone(), index })
        .collect()
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.group.q
    }

    pub fn group(&self) -> &CharacterGroup {
        &self.group
    }

    pub fn index(&self) -> &[u64] {
        &self.index
    }

    pub fn is_principal(&self) -> bool {
        self.index.iter().all(|&e| e == 0)
    }

    /// `t` with `χ(n) = e(t/M)`, or `None` when `gcd(n, q) > 1`.
    pub fn exponent_at(&self, n: i64) -> Option<u64> {
        let logs = self.group.logs(n)?;
        let m = self.group.exponent;
        let t = self
            .group
            .pieces
            .iter()
            .zip(&self.index)
            .zip(logs)
            .map(|((pc, &e), l)| (e * l % pc.order) * (m / pc.order))
            .sum::<u64>();
        Some(t % m)
    }

    pub fn eval(&self, n: i64) -> Complex64 {
        match self.exponent_at(n) {
            Some(t) => self.group.root(t),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `χ(n)` for every residue `n mod q`.
    pub fn table(&self) -> Vec<Complex64> {
        (0..self.group.q as i64).map(|n| self.eval(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::totient;

    /// Sum of `e(t/M)` over a multiset of exponents, decided exactly: `Some(n)`
    /// when every exponent is 0, `Some(0)` when the multiset is a union of
    /// copies of a nontrivial subgroup of the `M`-th roots of unity.
    fn exact_root_sum(exps: &[u64], m: u64) -> Option<u64> {
        let mut hist = vec![0u64; m as usize];
        for &t in exps {
            hist[t as usize] += 1;
        }
        if hist[0] == exps.len() as u64 {
            return Some(exps.len() as u64);
        }
        let step = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .fold(m, |g, (t, _)| num_integer::gcd(g, t as u64));
        let uniform = (0..m)
            .all(|t| hist[t as usize] == if t % step == 0 { hist[0] } else { 0 });
        (uniform && step < m).then_some(0)
    }

    #[test]
    fn examples() {
        let c1 = characters_mod(1);
        assert_eq!(c1.len(), 1);
        assert_eq!(c1[0].eval(17), Complex64::new(1.0, 0.0));
        let c4 = characters_mod(4);
        assert_eq!(c4.len(), 2);
        assert_eq!(c4[1].exponent_at(3), Some(1));
        assert_eq!(c4[1].group().exponent(), 2);
        assert_eq!(c4[1].eval(3).re, -1.0);
        assert_eq!(c4[1].eval(2), Complex64::new(0.0, 0.0));
        let c5 = characters_mod(5);
        assert_eq!(c5.len(), 4);
        assert_eq!(c5[0].group().exponent(), 4);
        assert!(c5.iter().any(|chi| matches!(chi.exponent_at(2), Some(1 | 3))));
    }

    #[test]
    fn counts_and_multiplicativity() {
        for q in 1..=200u64 {
            let chars = characters_mod(q);
            assert_eq!(chars.len() as u64, totient(q), "q = {q}");
            assert!(chars[0].is_principal());
            for chi in chars.iter().take(6) {
                let m = chi.group().exponent();
                for a in 0..q as i64 {
                    assert_eq!(chi.exponent_at(a).is_none(), gcd(a, q as i64) > 1);
                    for b in 0..q as i64 {
                        let ab = chi.exponent_at(a * b);
                        let sum = chi.exponent_at(a).zip(chi.exponent_at(b)).map(|(x, y)| (x + y) % m);
                        assert_eq!(ab, sum, "q={q} a={a} b={b}");
                    }
                }
                assert_eq!(chi.exponent_at(1), Some(0));
                assert_eq!(chi.exponent_at(q as i64 + 1), Some(0));
            }
        }
    }

    #[test]
    fn orthogonality_exact() {
        for q in 1..=100u64 {
            let chars = characters_mod(q);
            let m = chars[0].group().exponent();
            let phi = totient(q);
            let units: Vec<i64> = (1..=q as i64).filter(|&n| gcd(n, q as i64) == 1).collect();
            // sum over characters
            for &a in &units {
                for &b in &units {
                    let exps: Vec<u64> = chars
                        .iter()
                        .map(|c| (c.exponent_at(a).unwrap() + m - c.exponent_at(b).unwrap()) % m)
                        .collect();
                    let expected = if (a - b) % q as i64 == 0 { phi } else { 0 };
                    assert_eq!(exact_root_sum(&exps, m), Some(expected), "q={q} a={a} b={b}");
                }
            }
            // sum over residues
            for (i, chi) in chars.iter().enumerate() {
                for (j, psi) in chars.iter().enumerate() {
                    let exps: Vec<u64> = units
                        .iter()
                        .map(|&n| (chi.exponent_at(n).unwrap() + m - psi.exponent_at(n).unwrap()) % m)
                        .collect();
                    let expected = if i == j { phi } else { 0 };
                    assert_eq!(exact_root_sum(&exps, m), Some(expected), "q={q} {i} {j}");
                }
            }
        }
    }
}
