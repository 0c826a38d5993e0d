//! Imaginary quadratic fields k = ℚ(√−d), d > 3 squarefree, d ≡ 3 (mod 4).
//!
//! Besides the exact data (character, splitting, ideal counts, class group
//! via reduced forms) this module evaluates L(1, χ), L′(1, χ) and the
//! constant k₀(0) = log d + 2Λ′(1)/Λ(1) to arbitrary precision.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{factorize, hilbert_symbol, jacobi, kronecker_prime, prime_divisors, Place, Rational};
use crate::error::{Error, Result};
use crate::precise::{Precision, Real};
use crate::special::{self, big_rational, choose_truncation, ln_em_factor};

/// Decimal digits carried beyond a caller's requested precision.
pub const GUARD_DIGITS: u32 = 20;
pub const MIN_PREC: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl ReducedForm {
    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }
}

impl fmt::Display for ReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// True when −d is an odd fundamental discriminant.
pub fn is_odd_fundamental(d: u64) -> bool {
    d >= 3 && d % 4 == 3 && is_squarefree(d)
}

/// Reduced primitive forms of discriminant −d, ordered by (a, b).
pub fn reduced_forms(d: u64) -> Result<Vec<ReducedForm>> {
    if !is_odd_fundamental(d) {
        return Err(Error::NonFundamental(d));
    }
    let d = d as i64;
    let mut out = Vec::new();
    let mut a = 1i64;
    // reduced forms satisfy 3a² ≤ d
    while 3 * a * a <= d {
        for b in -a + 1..=a {
            if (b * b + d) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b + d) / (4 * a);
            if c < a || (b < 0 && a == c) {
                continue;
            }
            if a.gcd(&b).gcd(&c) != 1 {
                continue;
            }
            out.push(ReducedForm { a, b, c });
        }
        a += 1;
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplittingType {
    Split,
    Inert,
    Ramified,
}

impl fmt::Display for SplittingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplittingType::Split => "split",
            SplittingType::Inert => "inert",
            SplittingType::Ramified => "ramified",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadField {
    pub d: u64,
    pub ramified: Vec<u64>,
    pub h: u64,
    pub w: u64,
    pub forms: Vec<ReducedForm>,
}

pub fn make_field(d: u64) -> Result<QuadField> {
    QuadField::new(d)
}

impl QuadField {
    pub fn new(d: u64) -> Result<Self> {
        if d <= 3 || !is_odd_fundamental(d) || d > (1 << 40) {
            return Err(Error::UnsupportedDiscriminant(d));
        }
        let forms = reduced_forms(d)?;
        Ok(Self { d, ramified: prime_divisors(d), h: forms.len() as u64, w: 2, forms })
    }

    pub fn discriminant(&self) -> i64 {
        -(self.d as i64)
    }

    /// Local character χ_v(t) = (t, −d)_v.
    pub fn chi(&self, t: &Rational, place: Place) -> i8 {
        hilbert_symbol(t, &Rational::from_integer(self.discriminant()), place)
    }

    /// Global Dirichlet character χ_d(p) at a prime, 0 when p | d.
    pub fn chi_of_prime(&self, p: u64) -> i8 {
        kronecker_prime(self.discriminant(), p)
    }

    /// χ_d(n) for a positive integer n; equals the Jacobi symbol (n / d).
    pub fn chi_int(&self, n: u64) -> i8 {
        jacobi(n as i128, self.d)
    }

    pub fn splitting(&self, p: u64) -> SplittingType {
        match self.chi_of_prime(p) {
            0 => SplittingType::Ramified,
            1 => SplittingType::Split,
            _ => SplittingType::Inert,
        }
    }

    pub fn is_ramified(&self, p: u64) -> bool {
        self.d.is_multiple_of(p)
    }

    /// Local ideal count ρ_p(p^a).
    pub fn rho_local(&self, p: u64, a: i32) -> u64 {
        if a < 0 {
            return 0;
        }
        match self.splitting(p) {
            SplittingType::Split => a as u64 + 1,
            SplittingType::Inert => u64::from(a % 2 == 0),
            SplittingType::Ramified => 1,
        }
    }

    /// Number of integral ideals of norm t; 0 unless t is a positive integer.
    pub fn rho(&self, t: &Rational) -> u64 {
        if *t <= Rational::zero() || !t.is_integer() {
            return 0;
        }
        factorize(*t.numer() as u64).into_iter().map(|(p, e)| self.rho_local(p, e as i32)).product()
    }

    /// Class number formula value 2πh/(w√d).
    pub fn class_number_formula(&self, ctx: &mut Precision) -> Real {
        let pi = ctx.pi();
        let root = ctx.sqrt(&ctx.int(self.d as i64));
        pi.mul_int(2 * self.h as i64).div(&root.mul_int(self.w as i64))
    }
}

/// The constant k₀(0) of a field, kept symbolic in exact values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KZeroSymbol {
    pub d: u64,
}

impl fmt::Display for KZeroSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k0(-{})", self.d)
    }
}

impl FromStr for KZeroSymbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .strip_prefix("k0(-")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|r| r.parse().ok())
            .map(|d| KZeroSymbol { d })
            .ok_or_else(|| Error::Parse(format!("bad k0 symbol {s:?}")))
    }
}

/// All transcendental quantities of one field at one precision.
#[derive(Clone, Debug)]
pub struct FieldNumerics {
    pub prec: u32,
    pub l1: Real,
    pub l1_prime: Real,
    /// (w/2h)·Σ χ(a) log Γ(a/d)
    pub gamma_sum: Real,
    /// L′(0)/L(0) through log Γ at rationals.
    pub log_deriv_zero: Real,
    /// L′(0)/L(0) through the functional equation and the series at 1.
    pub log_deriv_zero_direct: Real,
    /// log d + 2Λ′(1)/Λ(1)
    pub k0: Real,
    pub euler_gamma: Real,
    pub ln_d: Real,
    pub ln_pi: Real,
    pub ln_2: Real,
    pub class_number_formula: Real,
}

fn check_prec(prec: u32) -> Result<()> {
    if prec < MIN_PREC {
        Err(Error::PrecisionUnreachable(prec))
    } else {
        Ok(())
    }
}

pub fn working_precision(prec: u32) -> Result<Precision> {
    check_prec(prec)?;
    Precision::with_digits(prec + GUARD_DIGITS)
}

/// L(1, χ) and L′(1, χ) by partial sums up to dJ plus an Euler-Maclaurin
/// tail per residue class. The divergent tail integrals cancel in the
/// χ-weighted sum, leaving −(1/d)·log y and −(1/2d)·log² y at y = a + dJ.
fn l_series_at_one(field: &QuadField, ctx: &mut Precision) -> Result<(Real, Real)> {
    let d = field.d;
    let (j, kmax) = choose_truncation(ctx.bits(), ctx.digits(), |n, k| {
        let y = d as f64 * n;
        4f64.ln() + ln_em_factor(k) - (2 * k) as f64 * n.ln() + (y.ln() + (2 * k) as f64 + 1.0).ln()
    })?;
    let m = d * j;

    let mut ln_primes = std::collections::HashMap::new();
    let mut s0 = ctx.int(0);
    let mut s1 = ctx.int(0);
    for n in 1..m {
        let c = field.chi_int(n);
        if c == 0 {
            continue;
        }
        let mut ln_n = ctx.int(0);
        for (p, e) in factorize(n) {
            let lp = ln_primes.entry(p).or_insert_with(|| ctx.ln_int(p as i64)).clone();
            ln_n = &ln_n + &lp.mul_int(e as i64);
        }
        let inv = ctx.int(c as i64).div_int(n as i64);
        s0 = &s0 + &inv;
        s1 = &s1 + &(&inv * &ln_n);
    }

    let bern: Vec<BigRational> = (1..=kmax).map(|k| special::bernoulli(2 * k)).collect();
    let mut harmonic = vec![BigRational::zero()];
    for i in 1..2 * kmax {
        let next = &harmonic[i - 1] + BigRational::new(BigInt::one(), BigInt::from(i as u64));
        harmonic.push(next);
    }
    let dd = BigInt::from(d);
    for a in 1..d {
        let c = field.chi_int(a);
        if c == 0 {
            continue;
        }
        let y = a + d * j;
        let yr = ctx.int(y as i64);
        let ly = ctx.ln(&yr);
        let mut t0 = &(-&ly.div_int(d as i64)) + &ctx.int(1).div(&yr.mul_int(2));
        let mut t1 = &(-&(&ly * &ly).div_int(2 * d as i64)) + &ly.div(&yr.mul_int(2));
        let y2 = BigInt::from(y) * BigInt::from(y);
        let mut ypow = BigInt::one();
        let mut dpow = dd.clone();
        for k in 1..=kmax {
            ypow *= &y2;
            let coeff = &bern[k - 1] * BigRational::new(dpow.clone(), BigInt::from(2 * k as u64) * &ypow);
            dpow *= &dd * &dd;
            let cr = big_rational(ctx, &coeff);
            let shifted = &ly - &big_rational(ctx, &harmonic[2 * k - 1]);
            t0 = &t0 + &cr;
            t1 = &t1 + &(&cr * &shifted);
        }
        if c > 0 {
            s0 = &s0 + &t0;
            s1 = &s1 + &t1;
        } else {
            s0 = &s0 - &t0;
            s1 = &s1 - &t1;
        }
    }
    Ok((s0, -&s1))
}

impl FieldNumerics {
    pub fn compute(field: &QuadField, prec: u32) -> Result<Self> {
        let mut ctx = working_precision(prec)?;
        let (l1, l1_prime) = l_series_at_one(field, &mut ctx)?;
        let d = field.d as i64;
        let mut sum = ctx.int(0);
        for a in 1..d {
            let c = field.chi_int(a as u64);
            if c == 0 {
                continue;
            }
            let lg = special::ln_gamma_rational(&mut ctx, a, d)?;
            sum = if c > 0 { &sum + &lg } else { &sum - &lg };
        }
        let gamma_sum = sum.mul_int(field.w as i64).div_int(2 * field.h as i64);
        let ln_d = ctx.ln_int(d);
        let pi = ctx.pi();
        let ln_pi = ctx.ln(&pi);
        let ln_2 = ctx.ln_int(2);
        let euler_gamma = ctx.euler_gamma()?;
        let log_deriv_zero = &gamma_sum - &ln_d;
        let l1_ratio = &l1_prime / &l1;
        // functional equation of (d/π)^((s+1)/2) Γ((s+1)/2) L(s, χ)
        let log_deriv_zero_direct = &(&(&(&ln_pi + &euler_gamma) + &ln_2) - &ln_d) - &l1_ratio;
        // 2Λ′(1)/Λ(1) = −log π + ψ(1) + 2L′(1)/L(1)
        let k0 = &(&(&ln_d - &ln_pi) - &euler_gamma) + &l1_ratio.mul_int(2);
        let class_number_formula = field.class_number_formula(&mut ctx);
        Ok(Self {
            prec,
            l1,
            l1_prime,
            gamma_sum,
            log_deriv_zero,
            log_deriv_zero_direct,
            k0,
            euler_gamma,
            ln_d,
            ln_pi,
            ln_2,
            class_number_formula,
        })
    }

    /// log(4dπ) − 2L′(0)/L(0)
    pub fn k0_functional_equation_form(&self) -> Real {
        let ln4 = self.ln_2.mul_int(2);
        &(&(&ln4 + &self.ln_d) + &self.ln_pi) - &self.log_deriv_zero.mul_int(2)
    }

    /// log(4π/d) + γ − 2L′(0)/L(0), the form the functional equation yields.
    pub fn k0_reflected(&self) -> Real {
        let ln4 = self.ln_2.mul_int(2);
        &(&(&(&ln4 - &self.ln_d) + &self.ln_pi) + &self.euler_gamma) - &self.log_deriv_zero.mul_int(2)
    }
}

pub fn l_at_one(field: &QuadField, prec: u32) -> Result<Real> {
    let mut ctx = working_precision(prec)?;
    Ok(l_series_at_one(field, &mut ctx)?.0)
}

/// L′(0, χ)/L(0, χ) = (w/2h)·Σ χ(a) log Γ(a/d) − log d.
pub fn chowla_selberg_log_deriv(field: &QuadField, prec: u32) -> Result<Real> {
    let mut ctx = working_precision(prec)?;
    let d = field.d as i64;
    let mut sum = ctx.int(0);
    for a in 1..d {
        match field.chi_int(a as u64) {
            0 => {}
            c => {
                let lg = special::ln_gamma_rational(&mut ctx, a, d)?;
                sum = if c > 0 { &sum + &lg } else { &sum - &lg };
            }
        }
    }
    let ln_d = ctx.ln_int(d);
    Ok(&sum.mul_int(field.w as i64).div_int(2 * field.h as i64) - &ln_d)
}

/// k₀(0) with its symbolic tag.
pub fn kappa_zero_constant(field: &QuadField, prec: u32) -> Result<(Real, KZeroSymbol)> {
    let n = FieldNumerics::compute(field, prec)?;
    Ok((n.k0, KZeroSymbol { d: field.d }))
}
