//! Differences j(τ₁) − j(τ₂) over pairs of CM points, recognized as
//! integers and factored.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{factorize_big, kronecker_prime, BigFactorization};
use crate::error::{Error, Result};
use crate::forms::j_coefficients;
use crate::precise::{Complex, Precision, Real};
use crate::quadfield::{is_odd_fundamental, reduced_forms, ReducedForm};

pub const MIN_J_PREC: u32 = 30;
/// Largest digit count tried before giving up on integer recognition.
pub const MAX_GZ_PREC: u32 = 2048;
const TRIAL_BOUND: u64 = 1_000_000;

/// log of Σ_{n>N} e^{4π√n}·rⁿ, an upper bound for the q-series tail of j
/// since c(n) ≤ e^{4π√n}.
fn tail_log_bound(terms: usize, ln_r: f64) -> f64 {
    let n1 = (terms + 1) as f64;
    let ln_ratio = 2.0 * std::f64::consts::PI / n1.sqrt() + ln_r;
    if ln_ratio >= 0.0 {
        return f64::INFINITY;
    }
    4.0 * std::f64::consts::PI * n1.sqrt() + n1 * ln_r - (-ln_ratio.exp()).ln_1p()
}

/// Number of positive-index terms making the tail smaller than 10^(−digits).
pub fn j_terms_needed(ln_r: f64, digits: u32) -> usize {
    let target = -(digits as f64) * std::f64::consts::LN_10;
    let mut n = 8;
    while tail_log_bound(n, ln_r) > target {
        n += 8;
    }
    n
}

fn j_at(ctx: &mut Precision, form: &ReducedForm, d: u64, abs_digits: u32) -> Complex {
    let pi = ctx.pi();
    let sqrt_d = ctx.sqrt(&ctx.int(d as i64));
    // q = e^{2πiτ}, τ = (−b + i√d)/(2a)
    let radius = ctx.exp(&-&(&pi * &sqrt_d).div_int(form.a));
    let angle = pi.mul_int(-form.b).div_int(form.a);
    let (c, s) = (ctx.cos(&angle), ctx.sin(&angle));
    let q = Complex::new(&radius * &c, &radius * &s);
    let ln_r = -std::f64::consts::PI * (d as f64).sqrt() / form.a as f64;
    let terms = j_terms_needed(ln_r, abs_digits);
    let coeffs = j_coefficients(terms + 2);
    let mut sum = q.inv();
    let mut qn = Complex::new(ctx.int(1), ctx.int(0));
    for c in &coeffs[1..] {
        if !c.is_zero() {
            let cr = ctx.big(c);
            sum = sum.add(&qn.scale(&cr));
        }
        qn = qn.mul(&q);
    }
    sum
}

fn digits_for_magnitude(ln_mag: f64) -> u32 {
    (ln_mag.max(0.0) / std::f64::consts::LN_10).ceil() as u32 + 2
}

/// j((−b + √−d)/(2a)) with absolute error below 10^(−prec).
pub fn j_value(form: &ReducedForm, d: u64, prec: u32) -> Result<Complex> {
    if prec < MIN_J_PREC {
        return Err(Error::PrecisionUnreachable(prec));
    }
    if !is_odd_fundamental(d) || form.disc() != -(d as i64) {
        return Err(Error::NonFundamental(d));
    }
    let mag = digits_for_magnitude(std::f64::consts::PI * (d as f64).sqrt() / form.a as f64);
    let mut ctx = Precision::with_digits(prec + mag + 10)?;
    Ok(j_at(&mut ctx, form, d, prec + 5))
}

#[derive(Clone, Debug)]
pub struct GZResult {
    pub d1: u64,
    pub d2: u64,
    pub product: BigInt,
    pub factorization: BigFactorization,
    /// digits at which the rounding was accepted
    pub precision_used: u32,
    /// |x − round(x)| for the accepted evaluation, imaginary part included
    pub margin: f64,
}

impl GZResult {
    /// Π p^e, with any unsplit cofactor as a final factor.
    pub fn factorization_string(&self) -> String {
        let f = &self.factorization;
        let mut parts: Vec<String> =
            f.factors.iter().map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") }).collect();
        if f.cofactor > 1u32.into() {
            parts.push(format!("[{}]", f.cofactor));
        }
        let body = if parts.is_empty() { "1".to_string() } else { parts.join(" * ") };
        if f.sign < 0 {
            format!("-{body}")
        } else {
            body
        }
    }
}

impl fmt::Display for GZResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "product = {} = {}", self.product, self.factorization_string())
    }
}

/// Π over pairs of classes of (j(τ₁) − j(τ₂)).
pub fn gz_product(d1: u64, d2: u64, prec: u32) -> Result<GZResult> {
    for d in [d1, d2] {
        if !is_odd_fundamental(d) {
            return Err(Error::NonFundamental(d));
        }
    }
    if d1.gcd(&d2) != 1 {
        return Err(Error::NotCoprime(d1, d2));
    }
    let f1 = reduced_forms(d1)?;
    let f2 = reduced_forms(d2)?;
    let pairs = (f1.len() * f2.len()) as f64;
    let dmax = d1.max(d2) as f64;
    let size = digits_for_magnitude(pairs * (std::f64::consts::PI * dmax.sqrt() + 30.0));
    let mut p = prec.max(MIN_J_PREC);
    loop {
        let mag = digits_for_magnitude(std::f64::consts::PI * dmax.sqrt());
        let mut ctx = Precision::with_digits(p + size + mag + 20)?;
        let j1: Vec<Complex> = f1.iter().map(|f| j_at(&mut ctx, f, d1, p + size + 10)).collect();
        let j2: Vec<Complex> = f2.iter().map(|f| j_at(&mut ctx, f, d2, p + size + 10)).collect();
        let mut prod = Complex::new(ctx.int(1), ctx.int(0));
        for a in &j1 {
            for b in &j2 {
                prod = prod.mul(&a.sub(b));
            }
        }
        if let Some(n) = prod.re.round_to_bigint() {
            let err_re = (&prod.re - &ctx.big(&n)).abs();
            let err = if err_re.cmp_real(&prod.im.abs()).is_lt() { prod.im.abs() } else { err_re };
            if !n.is_zero() && err.below_ten_pow_neg(p.div_ceil(2)) {
                let factorization = factorize_big(&n, TRIAL_BOUND);
                return Ok(GZResult { d1, d2, product: n, factorization, precision_used: p, margin: real_to_f64(&err) });
            }
        }
        if p >= MAX_GZ_PREC {
            return Err(Error::RoundingFailure(p));
        }
        p = (2 * p).min(MAX_GZ_PREC);
    }
}

fn real_to_f64(x: &Real) -> f64 {
    match x.exponent() {
        None => 0.0,
        Some(e) if e < -1000 => 0.0,
        _ => x.to_f64(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GZViolation {
    pub p: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GZSupport {
    pub ok: bool,
    pub violations: Vec<GZViolation>,
}

/// Every prime factor is non-split in both fields and at most d1·d2/4.
pub fn gz_support_check(result: &GZResult) -> GZSupport {
    let (d1, d2) = (result.d1, result.d2);
    let mut violations = Vec::new();
    for &(p, _) in &result.factorization.factors {
        for d in [d1, d2] {
            if kronecker_prime(-(d as i64), p) == 1 {
                violations.push(GZViolation { p, reason: format!("splits in Q(sqrt(-{d}))") });
            }
        }
        if 4 * p > d1 * d2 {
            violations.push(GZViolation { p, reason: format!("exceeds {}·{}/4", d1, d2) });
        }
    }
    if result.factorization.cofactor > 1u32.into() {
        let p = result.factorization.cofactor.to_u64().unwrap_or(0);
        violations.push(GZViolation { p, reason: format!("unfactored cofactor {}", result.factorization.cofactor) });
    }
    GZSupport { ok: violations.is_empty(), violations }
}

/// Coprime pairs d1 < d2 of odd fundamental magnitudes with d1·d2 ≤ bound.
pub fn coprime_pairs(bound: u64) -> Vec<(u64, u64)> {
    let ds: Vec<u64> = (3..=bound / 3).filter(|&d| is_odd_fundamental(d)).collect();
    let mut out = Vec::new();
    for (i, &a) in ds.iter().enumerate() {
        for &b in &ds[i + 1..] {
            if a * b <= bound && a.gcd(&b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(a: i64, b: i64, c: i64) -> ReducedForm {
        ReducedForm { a, b, c }
    }

    #[test]
    fn j_examples() {
        let z = j_value(&form(1, 1, 1), 3, 40).unwrap();
        assert!(z.re.abs().below_ten_pow_neg(35));
        assert!(z.im.abs().below_ten_pow_neg(35));
        let j7 = j_value(&form(1, 1, 2), 7, 40).unwrap();
        assert_eq!(j7.re.round_to_bigint().unwrap(), BigInt::from(-3375));
        assert!((&j7.re - &Precision::with_digits(60).unwrap().int(-3375)).below_ten_pow_neg(35));
        let j163 = j_value(&form(1, 1, 41), 163, 40).unwrap();
        assert_eq!(j163.re.round_to_bigint().unwrap(), BigInt::from(-262537412640768000i64));
        assert!(matches!(j_value(&form(1, 0, 1), 4, 40), Err(Error::NonFundamental(4))));
        assert!(matches!(j_value(&form(1, 1, 2), 7, 10), Err(Error::PrecisionUnreachable(10))));
    }

    #[test]
    fn coefficient_bound_holds() {
        let c = j_coefficients(602);
        for (i, cn) in c.iter().enumerate().skip(2) {
            let n = (i - 1) as f64;
            let ln_c = cn.to_string().len() as f64 * std::f64::consts::LN_10;
            // ln c(n) < number of digits · ln 10 ≤ 4π√n + ln 10
            assert!(ln_c <= 4.0 * std::f64::consts::PI * n.sqrt() + std::f64::consts::LN_10, "n = {n}");
            let approx = cn.to_f64().unwrap_or(f64::INFINITY);
            if approx.is_finite() {
                assert!(approx.ln() <= 4.0 * std::f64::consts::PI * n.sqrt(), "n = {n}");
            }
        }
    }

    #[test]
    fn gz_examples() {
        let r = gz_product(3, 7, 64).unwrap();
        assert_eq!(r.product, BigInt::from(3375));
        assert_eq!(r.factorization_string(), "3^3 * 5^3");
        assert_eq!(r.to_string(), "product = 3375 = 3^3 * 5^3");
        assert!(r.margin < 1e-20);
        assert!(gz_support_check(&r).ok);
        let r = gz_product(7, 43, 64).unwrap();
        assert_eq!(r.product, BigInt::from(884732625));
        assert_eq!(r.factorization_string(), "3^6 * 5^3 * 7 * 19 * 73");
        assert!(gz_support_check(&r).ok);
        let r = gz_product(43, 7, 64).unwrap();
        assert_eq!(r.product, BigInt::from(-884732625));
        assert!(matches!(gz_product(7, 7, 64), Err(Error::NotCoprime(7, 7))));
        assert!(matches!(gz_product(7, 8, 64), Err(Error::NonFundamental(8))));
    }

    #[test]
    fn synthetic_violation() {
        let n = BigInt::from(11 * 5);
        let r = GZResult { d1: 3, d2: 7, factorization: factorize_big(&n, 100), product: n, precision_used: 64, margin: 0.0 };
        let s = gz_support_check(&r);
        assert!(!s.ok);
        assert!(s.violations.iter().any(|v| v.p == 11 && v.reason.contains("splits in Q(sqrt(-7))")));
    }

    #[test]
    fn symmetry_and_doubling() {
        for (a, b) in [(3, 11), (7, 15), (11, 23), (15, 23)] {
            let x = gz_product(a, b, 64).unwrap();
            let y = gz_product(b, a, 64).unwrap();
            let h = (reduced_forms(a).unwrap().len() * reduced_forms(b).unwrap().len()) as u32;
            assert_eq!(&x.product * BigInt::from(-1).pow(h), y.product);
            assert_eq!(gz_product(a, b, 128).unwrap().product, x.product);
        }
    }

    #[test]
    fn pair_enumeration() {
        let p = coprime_pairs(100);
        assert!(p.contains(&(3, 7)));
        assert!(p.contains(&(3, 31)));
        assert!(!p.contains(&(3, 15)));
        assert!(p.iter().all(|(a, b)| a * b <= 100 && a < b));
    }
}
