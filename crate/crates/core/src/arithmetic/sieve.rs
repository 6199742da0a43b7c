//! Smallest-prime-factor, Möbius and von Mangoldt tables.
//!
//! Binary layout (little endian):
//!
//! ```text
//! offset  size            field
//! 0       8               magic "QFSIEVE1"
//! 8       8               limit X as u64
//! 16      4·(X+1)         spf[0..=X] as u32, 0 marks a prime
//! ..      X+1             mu[0..=X] as i8
//! ..      8·(X+1)         lambda[0..=X] as f64 bits
//! ```
//!
//! Entries 0 and 1 hold `spf = 0, 1`, `mu = 0, 1` and `lambda = 0, 0`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QFSIEVE1";
pub const MAX_LIMIT: u64 = 1 << 34;
pub const DEFAULT_MEMORY_BUDGET: u64 = 8 << 30;
const BYTES_PER_ENTRY: u64 = 4 + 1 + 8;
const SEGMENT: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SieveTables {
    limit: u64,
    spf: Vec<u32>,
    mu: Vec<i8>,
    lambda: Vec<f64>,
}

/// Primes up to `n` by a plain sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

fn sieve_segment(lo: u64, spf: &mut [u32], mu: &mut [i8], lambda: &mut [f64], base: &[u64]) {
    let len = spf.len();
    let hi = lo + len as u64;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut distinct = vec![0u8; len];
    mu.fill(1);
    spf.fill(0);
    for &p in base {
        // after all p ≤ sqrt(n) are divided out the cofactor is 1 or prime
        if p * p > hi - 1 {
            break;
        }
        let mut n = lo.div_ceil(p).max(1) * p;
        while n < hi {
            let i = (n - lo) as usize;
            if spf[i] == 0 && n != p {
                spf[i] = p as u32;
            }
            let mut e = 0;
            while rem[i] % p == 0 {
                rem[i] /= p;
                e += 1;
            }
            distinct[i] += 1;
            mu[i] = if e > 1 { 0 } else { -mu[i] };
            n += p;
        }
    }
    for i in 0..len {
        let n = lo + i as u64;
        if n < 2 {
            spf[i] = n as u32;
            mu[i] = n as i8;
            lambda[i] = 0.0;
        } else if spf[i] == 0 {
            mu[i] = -1;
            lambda[i] = (n as f64).ln();
        } else {
            if rem[i] > 1 {
                mu[i] = -mu[i];
                distinct[i] += 1;
            }
            lambda[i] = if distinct[i] == 1 { (spf[i] as f64).ln() } else { 0.0 };
        }
    }
}

impl SieveTables {
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with(limit, DEFAULT_MEMORY_BUDGET, true)
    }

    /// Builds the tables segment by segment; `parallel = false` processes
    /// the same segments in order on the calling thread.
    pub fn build_with(limit: u64, budget: u64, parallel: bool) -> Result<Self> {
        if !(2..=MAX_LIMIT).contains(&limit) {
            return Err(Error::Precondition(format!(
                "sieve limit must lie in [2, 2^34], got {limit}"
            )));
        }
        let bytes = (limit + 1) * BYTES_PER_ENTRY;
        if bytes > budget {
            return Err(Error::MemoryBudget { limit, bytes, budget });
        }
        let base = primes_up_to(limit.isqrt());
        let len = (limit + 1) as usize;
        let mut spf = vec![0u32; len];
        let mut mu = vec![0i8; len];
        let mut lambda = vec![0f64; len];
        let job = |(k, ((s, m), l)): (usize, ((&mut [u32], &mut [i8]), &mut [f64]))| {
            sieve_segment((k * SEGMENT) as u64, s, m, l, &base)
        };
        if parallel {
            spf.par_chunks_mut(SEGMENT)
                .zip(mu.par_chunks_mut(SEGMENT))
                .zip(lambda.par_chunks_mut(SEGMENT))
                .enumerate()
                .for_each(job);
        } else {
            spf.chunks_mut(SEGMENT)
                .zip(mu.chunks_mut(SEGMENT))
                .zip(lambda.chunks_mut(SEGMENT))
                .enumerate()
                .for_each(job);
        }
        Ok(SieveTables { limit, spf, mu, lambda })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn check(&self, n: u64) {
        assert!(n <= self.limit, "{n} is above the sieve limit {}", self.limit);
    }

    /// Smallest prime factor of `n ≥ 2`.
    pub fn spf(&self, n: u64) -> u64 {
        self.check(n);
        match self.spf[n as usize] {
            0 => n,
            p => p as u64,
        }
    }

    pub fn is_prime(&self, n: u64) -> bool {
        self.check(n);
        n >= 2 && self.spf[n as usize] == 0
    }

    pub fn mu(&self, n: u64) -> i8 {
        self.check(n);
        self.mu[n as usize]
    }

    pub fn lambda(&self, n: u64) -> f64 {
        self.check(n);
        self.lambda[n as usize]
    }

    pub fn mu_slice(&self) -> &[i8] {
        &self.mu
    }

    pub fn lambda_slice(&self) -> &[f64] {
        &self.lambda
    }

    /// Factorisation of `n ≤ limit` by repeated smallest-prime-factor lookup.
    pub fn factor(&self, mut n: u64) -> Vec<(u64, u32)> {
        self.check(n);
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            n /= p;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&self.limit.to_le_bytes())?;
        for &s in &self.spf {
            w.write_all(&s.to_le_bytes())?;
        }
        let mu: Vec<u8> = self.mu.iter().map(|&m| m as u8).collect();
        w.write_all(&mu)?;
        for &l in &self.lambda {
            w.write_all(&l.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let size = file.metadata()?.len();
        let mut r = BufReader::new(file);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::TableFormat(format!("{}: truncated header", path.display())))?;
        if &header[..8] != MAGIC {
            return Err(Error::TableFormat(format!("{}: bad magic", path.display())));
        }
        let limit = u64::from_le_bytes(header[8..].try_into().unwrap());
        if !(2..=MAX_LIMIT).contains(&limit) {
            return Err(Error::TableFormat(format!("{}: limit {limit} out of range", path.display())));
        }
        let expected = 16 + (limit + 1) * BYTES_PER_ENTRY;
        if size != expected {
            return Err(Error::TableFormat(format!(
                "{}: {size} bytes, expected {expected} for limit {limit}",
                path.display()
            )));
        }
        let len = (limit + 1) as usize;
        let mut buf = vec![0u8; len * 4];
        r.read_exact(&mut buf)?;
        let spf = buf.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let mu = buf.iter().map(|&b| b as i8).collect();
        let mut buf = vec![0u8; len * 8];
        r.read_exact(&mut buf)?;
        let lambda = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(SieveTables { limit, spf, mu, lambda })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::factor;

    #[test]
    fn small_values() {
        let t = SieveTables::build(100).unwrap();
        let mu: Vec<i8> = (1..=10).map(|n| t.mu(n)).collect();
        assert_eq!(mu, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(t.lambda(8), 2f64.ln());
        assert_eq!(t.lambda(12), 0.0);
        assert_eq!(t.lambda(1), 0.0);
        assert_eq!(t.spf(91), 7);
        assert_eq!(t.spf(97), 97);
        assert!(t.is_prime(2) && !t.is_prime(1) && !t.is_prime(4));
    }

    #[test]
    fn agrees_with_factorisation() {
        let t = SieveTables::build(200_000).unwrap();
        for n in 2..=200_000u64 {
            let f = factor(n);
            assert_eq!(t.spf(n), f[0].0, "spf({n})");
            let mu = if f.iter().any(|&(_, e)| e > 1) { 0 } else if f.len() % 2 == 0 { 1 } else { -1 };
            assert_eq!(t.mu(n), mu, "mu({n})");
            let lam = if f.len() == 1 { (f[0].0 as f64).ln() } else { 0.0 };
            assert_eq!(t.lambda(n), lam, "lambda({n})");
            assert_eq!(t.factor(n), f);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let a = SieveTables::build_with(300_001, DEFAULT_MEMORY_BUDGET, true).unwrap();
        let b = SieveTables::build_with(300_001, DEFAULT_MEMORY_BUDGET, false).unwrap();
        assert_eq!(a.spf, b.spf);
        assert_eq!(a.mu, b.mu);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.lambda), bits(&b.lambda));
    }

    #[test]
    fn limits_and_budget() {
        assert!(SieveTables::build(1).is_err());
        assert!(SieveTables::build(MAX_LIMIT + 1).is_err());
        assert!(matches!(
            SieveTables::build(MAX_LIMIT),
            Err(Error::MemoryBudget { .. })
        ));
        assert!(SieveTables::build(2).is_ok());
    }

    #[test]
    fn binary_round_trip() {
        let t = SieveTables::build(5000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        t.write_to(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 5001 * 13);
        assert_eq!(SieveTables::read_from(&path).unwrap(), t);
        std::fs::write(&path, b"QFSIEVE0xxxxxxxx").unwrap();
        assert!(matches!(SieveTables::read_from(&path), Err(Error::TableFormat(_))));
    }

    #[test]
    fn primes_up_to_small() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(primes_up_to(1).is_empty());
    }
}
