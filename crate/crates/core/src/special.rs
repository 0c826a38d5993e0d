//! Bernoulli numbers, Euler's constant and log-gamma at positive rationals.
//!
//! Every routine truncates an Euler-Maclaurin or Stirling series whose
//! remainder is bounded by the first omitted term; the truncation point is
//! chosen from that bound against the working precision.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::precise::{Precision, Real};

/// Highest Bernoulli index kept in the shared table.
const MAX_BERNOULLI: usize = 240;
/// Shifts beyond this are considered unreachable.
const MAX_SHIFT: u64 = 1 << 22;

fn bernoulli_table() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| bernoulli_numbers(MAX_BERNOULLI))
}

/// B_0..=B_n with B_1 = -1/2, via the Akiyama-Tanigawa transform.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(n + 1);
    let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(BigRational::new(BigInt::one(), BigInt::from(m as u64 + 1)));
        for j in (1..=m).rev() {
            let diff = &a[j - 1] - &a[j];
            a[j - 1] = diff * BigRational::from_integer(BigInt::from(j as u64));
        }
        out.push(a[0].clone());
    }
    // the transform yields B_1 = +1/2
    if n >= 1 {
        out[1] = -out[1].clone();
    }
    out
}

pub fn bernoulli(n: usize) -> BigRational {
    if n <= MAX_BERNOULLI {
        bernoulli_table()[n].clone()
    } else {
        bernoulli_numbers(n).pop().unwrap_or_else(BigRational::zero)
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Upper bound for ln|B_2k|: |B_2k| <= 4 (2k)! / (2 pi)^2k.
fn ln_abs_bernoulli_bound(k: usize) -> f64 {
    4f64.ln() + ln_factorial(2 * k) - (2 * k) as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Smallest shift `n` (and a term count `k`) with `ln_remainder(n, k)` below
/// -bits·ln 2. Shifts grow geometrically.
pub(crate) fn choose_truncation<F>(bits: usize, digits: u32, ln_remainder: F) -> Result<(u64, usize)>
where
    F: Fn(f64, usize) -> f64,
{
    let target = -(bits as f64) * std::f64::consts::LN_2;
    let kmax = MAX_BERNOULLI / 2 - 1;
    let mut n: u64 = 8;
    while n <= MAX_SHIFT {
        for k in 1..=kmax {
            if ln_remainder(n as f64, k) < target {
                return Ok((n, k));
            }
        }
        n += n / 4 + 1;
    }
    Err(Error::PrecisionUnreachable(digits))
}

/// Truncation for the Stirling and harmonic series: the bound
/// |B_2(k+1)|·(2k+1)/n^(2k+1) dominates both remainders.
pub(crate) fn series_parameters(bits: usize, digits: u32) -> Result<(u64, usize)> {
    choose_truncation(bits, digits, |n, k| {
        ln_abs_bernoulli_bound(k + 1) + ((2 * k + 1) as f64).ln() - (2 * k + 1) as f64 * n.ln()
    })
}

/// Upper bound for ln((2k-1)!) - 2k·ln(2π), the Euler-Maclaurin factor.
pub(crate) fn ln_em_factor(k: usize) -> f64 {
    ln_factorial(2 * k - 1) - (2 * k) as f64 * (2.0 * std::f64::consts::PI).ln()
}

pub(crate) fn big_rational(ctx: &Precision, r: &BigRational) -> Real {
    ctx.big_ratio(r.numer(), r.denom())
}

/// Euler's constant from H_n - ln n - 1/(2n) + sum_k B_2k / (2k n^2k).
pub fn euler_gamma(ctx: &mut Precision) -> Result<Real> {
    let (n, kmax) = series_parameters(ctx.bits(), ctx.digits())?;
    let one = ctx.int(1);
    let mut h = ctx.int(0);
    for j in 1..=n as i64 {
        h = &h + &one.div_int(j);
    }
    let ln_n = ctx.ln_int(n as i64);
    let nn = BigInt::from(n);
    let mut acc = &(&h - &ln_n) - &ctx.rational(&crate::arith::Rational::new(1, 2 * n as i64));
    let mut npow = BigInt::one();
    for k in 1..=kmax {
        npow *= &nn * &nn;
        let b = bernoulli(2 * k);
        let term = b / BigRational::from_integer(BigInt::from(2 * k as u64) * &npow);
        acc = &acc + &big_rational(ctx, &term);
    }
    Ok(acc)
}

/// ln Gamma(num/den) for num/den > 0.
pub fn ln_gamma_rational(ctx: &mut Precision, num: i64, den: i64) -> Result<Real> {
    if num <= 0 || den <= 0 {
        return Err(Error::Contract(format!("ln_gamma needs a positive argument, got {num}/{den}")));
    }
    let (n, kmax) = series_parameters(ctx.bits(), ctx.digits())?;
    let (num, den) = (BigInt::from(num), BigInt::from(den));
    // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1))
    let mut pnum = BigInt::one();
    let mut pden = BigInt::one();
    for j in 0..n {
        pnum *= &num + &den * BigInt::from(j);
        pden *= &den;
    }
    let shift_log = ctx.ln(&ctx.big_ratio(&pnum, &pden));
    let z_num = &num + &den * BigInt::from(n);
    let z = BigRational::new(z_num, den);
    let zr = big_rational(ctx, &z);
    let ln_z = ctx.ln(&zr);
    let half = ctx.rational(&crate::arith::Rational::new(1, 2));
    let two_pi = ctx.pi().mul_int(2);
    let ln_2pi = ctx.ln(&two_pi);
    let mut acc = &(&(&(&zr - &half) * &ln_z) - &zr) + &(&half * &ln_2pi);
    let z2 = &z * &z;
    let mut zpow = z.clone();
    for k in 1..=kmax {
        let b = bernoulli(2 * k);
        let c = BigRational::from_integer(BigInt::from((2 * k) as u64 * (2 * k - 1) as u64));
        let term = b / (c * &zpow);
        acc = &acc + &big_rational(ctx, &term);
        zpow = &zpow * &z2;
    }
    Ok(&acc - &shift_log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn br(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn first_bernoulli_numbers() {
        let b = bernoulli_numbers(12);
        assert_eq!(b[0], br(1, 1));
        assert_eq!(b[1], br(-1, 2));
        assert_eq!(b[2], br(1, 6));
        assert_eq!(b[3], br(0, 1));
        assert_eq!(b[4], br(-1, 30));
        assert_eq!(b[10], br(5, 66));
        assert_eq!(b[12], br(-691, 2730));
    }

    #[test]
    fn euler_constant() {
        let mut ctx = Precision::with_digits(60).unwrap();
        let g = ctx.euler_gamma().unwrap();
        assert_eq!(g.to_decimal(50), "0.57721566490153286060651209008240243104215933593992");
    }

    #[test]
    fn ln_gamma_values() {
        let mut ctx = Precision::with_digits(50).unwrap();
        // Gamma(1/2) = sqrt(pi)
        let lg = ln_gamma_rational(&mut ctx, 1, 2).unwrap();
        let pi = ctx.pi();
        let expect = ctx.ln(&pi).div_int(2);
        assert!((&lg - &expect).below_ten_pow_neg(48));
        // Gamma(5) = 24
        let lg5 = ln_gamma_rational(&mut ctx, 5, 1).unwrap();
        let ln24 = ctx.ln_int(24);
        assert!((&lg5 - &ln24).below_ten_pow_neg(48));
        // reflection: Gamma(1/7) Gamma(6/7) = pi / sin(pi/7)
        let a = ln_gamma_rational(&mut ctx, 1, 7).unwrap();
        let b = ln_gamma_rational(&mut ctx, 6, 7).unwrap();
        let s = ctx.sin(&pi.div_int(7));
        let rhs = ctx.ln(&(&pi / &s));
        assert!((&(&a + &b) - &rhs).below_ten_pow_neg(48));
    }
}
