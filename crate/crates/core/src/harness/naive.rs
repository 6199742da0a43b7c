//! Direct evaluations of the harness sums, straight from the definitions.
//!
//! Used as test oracles; every quantity is rebuilt from exact
//! representations and trial factorisation, sharing no code with the fast
//! paths beyond the form arithmetic.

use num_complex::Complex64;

use crate::arithmetic::rho::rho_brute;
use crate::bqf::Form;
use crate::composition::CompositionContext;
use crate::harness::lambda::LambdaSpec;
use crate::harness::sums::Twist;
use crate::numtheory::{factor, gcd};

fn coprime_to_pf(ctx: &CompositionContext, n: u64) -> bool {
    ctx.coprime_to_pf(n)
}

fn lambda_vm(n: u64) -> f64 {
    let f = factor(n);
    if f.len() == 1 { (f[0].0 as f64).ln() } else { 0.0 }
}

pub fn a_n(f: &Form, n: u64, lambda: &LambdaSpec) -> f64 {
    if n == 0 {
        return 0.0;
    }
    f.representations(n as i128)
        .into_iter()
        .filter(|&(l, m)| l >= 1 && gcd(l, f.c()) == 1 && gcd(l, m) == 1)
        .map(|(l, _)| lambda.value(l))
        .sum()
}

fn zero_for(ctx: &CompositionContext, d: u64, twist: &Twist) -> bool {
    gcd(d as i64, twist.modulus() as i64) > 1 || !coprime_to_pf(ctx, d)
}

pub fn a_d(ctx: &CompositionContext, x: u64, d: u64, twist: &Twist, lambda: &LambdaSpec) -> Complex64 {
    if zero_for(ctx, d, twist) {
        return Complex64::new(0.0, 0.0);
    }
    (1..=x)
        .filter(|&n| n % d == 0 && coprime_to_pf(ctx, n))
        .map(|n| twist.at(n) * a_n(&ctx.form, n, lambda))
        .sum()
}

pub fn m_d(ctx: &CompositionContext, x: u64, d: u64, twist: &Twist, lambda: &LambdaSpec) -> Complex64 {
    if zero_for(ctx, d, twist) {
        return Complex64::new(0.0, 0.0);
    }
    let f = &ctx.form;
    let mut s = Complex64::new(0.0, 0.0);
    // F(l, ·) is a convex quadratic with its minimum near −βl/(2γ); scan
    // outwards from there until the values exceed X
    for l in 1i64.. {
        let centre = (-(f.b() as f64) * l as f64 / (2.0 * f.c() as f64)).round() as i64;
        let row_min = (centre - 1..=centre + 1).map(|m| f.eval(l, m)).min().unwrap();
        if row_min > x as i128 {
            break;
        }
        let mut ms = Vec::new();
        let mut m = centre;
        while f.eval(l, m) <= x as i128 || m >= centre - 1 {
            ms.push(m);
            m -= 1;
        }
        let mut m = centre + 1;
        while f.eval(l, m) <= x as i128 || m <= centre + 1 {
            ms.push(m);
            m += 1;
        }
        for m in ms {
            let n = f.eval(l, m);
            if n < 1 || n > x as i128 {
                continue;
            }
            let gm = f.c() as i128 * m as i128 * d as i128;
            if num_integer::Integer::gcd(&(l as i128), &gm) != 1 || !coprime_to_pf(ctx, n as u64) {
                continue;
            }
            s += twist.at(n as u64) * lambda.value(l);
        }
    }
    s * (rho_brute(d, f) as f64 / d as f64)
}

pub fn r_total(ctx: &CompositionContext, x: u64, d_max: u64, twist: &Twist, lambda: &LambdaSpec) -> f64 {
    (1..=d_max)
        .map(|d| (a_d(ctx, x, d, twist, lambda) - m_d(ctx, x, d, twist, lambda)).norm())
        .sum()
}

pub fn p_x_chi(ctx: &CompositionContext, x: u64, twist: &Twist, lambda: &LambdaSpec) -> Complex64 {
    (1..=x)
        .filter(|&n| coprime_to_pf(ctx, n))
        .map(|n| twist.at(n) * (a_n(&ctx.form, n, lambda) * lambda_vm(n)))
        .sum()
}

fn mobius(n: u64) -> i32 {
    let f = factor(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn bilinear_b(
    ctx: &CompositionContext,
    x: u64,
    y: f64,
    z: f64,
    twist: &Twist,
    lambda: &LambdaSpec,
) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for b in 1..=x {
        if b as f64 <= y {
            continue;
        }
        let mu = mobius(b);
        if mu == 0 {
            continue;
        }
        for d in 1..=x / b {
            let n = b * d;
            if !coprime_to_pf(ctx, n) {
                continue;
            }
            let a = a_n(&ctx.form, n, lambda);
            if a == 0.0 {
                continue;
            }
            let inner: f64 = (1..=d)
                .filter(|&c| d % c == 0 && c as f64 > z)
                .map(lambda_vm)
                .sum();
            s += twist.at(n) * (mu as f64 * inner * a);
        }
    }
    s
}
