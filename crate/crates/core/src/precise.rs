//! Thin high-precision real/complex layer over `astro-float`.
//!
//! A [`Precision`] owns the working precision and the constants cache; values
//! are plain [`Real`]s whose arithmetic rounds to the larger operand
//! precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, Sign as BigSign};
use num_traits::{Signed, Zero};

use crate::arith::Rational;
use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const WORD_BITS: usize = 64;
/// Extra bits carried beyond the requested decimal digits.
pub const GUARD_BITS: usize = 96;

/// log2(10)
const BITS_PER_DIGIT: f64 = std::f64::consts::LOG2_10;

#[derive(Clone)]
pub struct Real(BigFloat);

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_decimal(30))
    }
}

pub struct Precision {
    digits: u32,
    bits: usize,
    cc: Consts,
    euler: Option<Real>,
}

impl Precision {
    pub fn with_digits(digits: u32) -> Result<Self> {
        if digits == 0 {
            return Err(Error::PrecisionUnreachable(digits));
        }
        let bits = (digits as f64 * BITS_PER_DIGIT).ceil() as usize + GUARD_BITS;
        let bits = bits.div_ceil(WORD_BITS) * WORD_BITS;
        let cc = Consts::new().map_err(|_| Error::PrecisionUnreachable(digits))?;
        Ok(Self { digits, bits, cc, euler: None })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn int(&self, n: i64) -> Real {
        Real(BigFloat::from_i64(n, self.bits))
    }

    pub fn big(&self, n: &BigInt) -> Real {
        if n.is_zero() {
            return self.int(0);
        }
        let words = n.magnitude().to_u64_digits();
        let sign = if n.is_negative() { Sign::Neg } else { Sign::Pos };
        let e = (words.len() * WORD_BITS) as i32;
        let mut v = BigFloat::from_words(&words, sign, e);
        // from_words keeps the full word precision; bring it to the working one
        v.set_precision(self.bits.max(words.len() * WORD_BITS), RM).expect("precision");
        Real(v)
    }

    pub fn rational(&self, r: &Rational) -> Real {
        self.int(*r.numer()).div(&self.int(*r.denom()))
    }

    pub fn big_ratio(&self, num: &BigInt, den: &BigInt) -> Real {
        self.big(num).div(&self.big(den))
    }

    pub fn pi(&mut self) -> Real {
        Real(self.cc.pi(self.bits, RM))
    }

    pub fn ln(&mut self, x: &Real) -> Real {
        Real(x.0.ln(self.bits, RM, &mut self.cc))
    }

    pub fn ln_int(&mut self, n: i64) -> Real {
        let x = self.int(n);
        self.ln(&x)
    }

    pub fn exp(&mut self, x: &Real) -> Real {
        Real(x.0.exp(self.bits, RM, &mut self.cc))
    }

    pub fn sin(&mut self, x: &Real) -> Real {
        Real(x.0.sin(self.bits, RM, &mut self.cc))
    }

    pub fn cos(&mut self, x: &Real) -> Real {
        Real(x.0.cos(self.bits, RM, &mut self.cc))
    }

    pub fn sqrt(&self, x: &Real) -> Real {
        Real(x.0.sqrt(self.bits, RM))
    }

    /// 10^(-k) at working precision.
    pub fn ten_pow_neg(&self, k: u32) -> Real {
        self.int(1).div(&self.big(&BigInt::from(10).pow(k)))
    }

    /// Euler's constant, via Euler-Maclaurin on the harmonic numbers.
    pub fn euler_gamma(&mut self) -> Result<Real> {
        if let Some(g) = &self.euler {
            return Ok(g.clone());
        }
        let g = crate::special::euler_gamma(self)?;
        self.euler = Some(g.clone());
        Ok(g)
    }
}

/// Σ e_p·log p at working precision.
pub fn flog_value(ctx: &mut Precision, f: &crate::arith::FactoredLog) -> Real {
    let mut acc = ctx.int(0);
    for (p, e) in f.terms() {
        let lp = ctx.ln_int(p as i64);
        acc = &acc + &(&lp * &ctx.rational(&e));
    }
    acc
}

impl Real {
    pub fn precision_bits(&self) -> usize {
        self.0.precision().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn abs(&self) -> Real {
        Real(self.0.abs())
    }

    fn prec_with(&self, other: &Real) -> usize {
        self.precision_bits().max(other.precision_bits()).max(WORD_BITS)
    }

    pub fn add(&self, o: &Real) -> Real {
        Real(self.0.add(&o.0, self.prec_with(o), RM))
    }

    pub fn sub(&self, o: &Real) -> Real {
        Real(self.0.sub(&o.0, self.prec_with(o), RM))
    }

    pub fn mul(&self, o: &Real) -> Real {
        Real(self.0.mul(&o.0, self.prec_with(o), RM))
    }

    pub fn div(&self, o: &Real) -> Real {
        Real(self.0.div(&o.0, self.prec_with(o), RM))
    }

    pub fn mul_int(&self, n: i64) -> Real {
        self.mul(&Real(BigFloat::from_i64(n, self.precision_bits().max(WORD_BITS))))
    }

    pub fn div_int(&self, n: i64) -> Real {
        self.div(&Real(BigFloat::from_i64(n, self.precision_bits().max(WORD_BITS))))
    }

    /// Binary exponent e with |x| in [2^(e-1), 2^e); `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            self.0.exponent().map(i64::from)
        }
    }

    /// True when |self| < 10^(-digits).
    pub fn below_ten_pow_neg(&self, digits: u32) -> bool {
        match self.exponent() {
            None => true,
            // |x| < 2^e, so e <= -digits·log2(10) suffices
            Some(e) => (e as f64) <= -(digits as f64) * BITS_PER_DIGIT,
        }
    }

    /// Nearest integer (ties away from zero).
    pub fn round_to_bigint(&self) -> Option<BigInt> {
        if !self.is_finite() {
            return None;
        }
        if self.is_zero() {
            return Some(BigInt::zero());
        }
        let (words, _, sign, e, _) = self.0.as_raw_parts()?;
        let mantissa = BigInt::from_slice(
            BigSign::Plus,
            &words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<_>>(),
        );
        let shift = e as i64 - (words.len() * WORD_BITS) as i64;
        let magnitude = if shift >= 0 {
            mantissa << shift as usize
        } else {
            let s = (-shift) as usize;
            (mantissa + (BigInt::from(1) << (s - 1))) >> s
        };
        Some(if sign == Sign::Neg { -magnitude } else { magnitude })
    }

    pub fn to_f64(&self) -> f64 {
        if !self.is_finite() {
            return f64::NAN;
        }
        if self.is_zero() {
            return 0.0;
        }
        let e = self.exponent().unwrap_or(0);
        // scale into [2^52, 2^53) before rounding so no information is lost
        let scaled = Real(self.0.clone());
        let k = 60 - e;
        let two = BigFloat::from_i64(2, WORD_BITS);
        let factor = two.powi(k.unsigned_abs() as usize, self.precision_bits().max(WORD_BITS), RM);
        let s = if k >= 0 { scaled.0.mul(&factor, self.precision_bits(), RM) } else { scaled.0.div(&factor, self.precision_bits(), RM) };
        let n = Real(s).round_to_bigint().unwrap_or_default();
        let m: f64 = n.to_string().parse().unwrap_or(f64::NAN);
        m * 2f64.powi(-(k as i32))
    }

    /// Fixed-point decimal rendering with `digits` fractional digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        if !self.is_finite() {
            return "NaN".into();
        }
        let p = self.precision_bits().max(WORD_BITS) + 64;
        let scale = BigFloat::from_i64(10, p).powi(digits as usize, p, RM);
        let n = Real(self.0.mul(&scale, p, RM)).round_to_bigint().unwrap_or_default();
        let neg = n.is_negative();
        let s = n.magnitude().to_string();
        let s = if s.len() <= digits as usize {
            format!("{}{}", "0".repeat(digits as usize + 1 - s.len()), s)
        } else {
            s
        };
        let (int, fr) = s.split_at(s.len() - digits as usize);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{fr}")
        }
    }

    pub fn cmp_real(&self, o: &Real) -> Ordering {
        match self.0.cmp(&o.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

impl Add for &Real {
    type Output = Real;
    fn add(self, o: &Real) -> Real {
        Real::add(self, o)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, o: &Real) -> Real {
        Real::sub(self, o)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, o: &Real) -> Real {
        Real::mul(self, o)
    }
}

impl Div for &Real {
    type Output = Real;
    fn div(self, o: &Real) -> Real {
        Real::div(self, o)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-&self.0)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20) as u32;
        write!(f, "{}", self.to_decimal(digits))
    }
}

#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Self { re, im }
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        Complex::new(
            &(&self.re * &o.re) - &(&self.im * &o.im),
            &(&self.re * &o.im) + &(&self.im * &o.re),
        )
    }

    pub fn scale(&self, r: &Real) -> Complex {
        Complex::new(&self.re * r, &self.im * r)
    }

    pub fn inv(&self) -> Complex {
        let n = &(&self.re * &self.re) + &(&self.im * &self.im);
        Complex::new(&self.re / &n, &(-&self.im) / &n)
    }
}
