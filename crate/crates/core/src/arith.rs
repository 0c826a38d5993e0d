//! Exact integer and rational primitives: factorization, valuations,
//! Legendre/Kronecker/Hilbert symbols and the [`FactoredLog`] value type.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational used for every "small" quantity (norms, exponents, Q-values).
pub type Rational = Ratio<i64>;

/// A place of ℚ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Infinity,
    Prime(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Infinity => write!(f, "inf"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

const POLLARD_THRESHOLD: u64 = 1_000_000_000_000;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let f = pollard_rho(n);
    split_large(f, out);
    split_large(n / f, out);
}

/// Prime factorization of `n ≥ 1`, primes strictly increasing.
///
/// Trial division handles everything below 10^12; larger cofactors are split
/// with Pollard's rho.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize: n must be positive");
    let mut out = Vec::new();
    let mut m = n;
    for p in [2u64, 3] {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2u64;
    while p.saturating_mul(p) <= m && p <= 1_000_000 {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if m > 1 {
        if m < POLLARD_THRESHOLD || is_prime(m) {
            out.push((m, 1));
        } else {
            let mut primes = Vec::new();
            split_large(m, &mut primes);
            primes.sort_unstable();
            for q in primes {
                match out.last_mut() {
                    Some((last, e)) if *last == q => *e += 1,
                    _ => out.push((q, 1)),
                }
            }
        }
    }
    out
}

/// Distinct prime divisors of `n`.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// Result of factoring a big integer over small primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFactorization {
    pub sign: i8,
    pub factors: Vec<(u64, u32)>,
    /// Part that could not be split (1 when the factorization is complete).
    pub cofactor: BigUint,
}

/// Factors an arbitrary integer: trial division by primes up to `trial_bound`,
/// then Pollard's rho if the remaining cofactor fits in 64 bits.
pub fn factorize_big(n: &BigInt, trial_bound: u64) -> BigFactorization {
    assert!(!n.is_zero(), "factorize_big: n must be nonzero");
    let sign = if n.is_negative() { -1 } else { 1 };
    let mut m = n.magnitude().clone();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut p = 2u64;
    while p <= trial_bound && m > BigUint::one() {
        let bp = BigUint::from(p);
        let mut e = 0;
        loop {
            let (q, r) = m.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            m = q;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if let Some(small) = m.to_u64() {
        if small > 1 {
            for (q, e) in factorize(small) {
                match factors.iter_mut().find(|(r, _)| *r == q) {
                    Some((_, f)) => *f += e,
                    None => factors.push((q, e)),
                }
            }
            factors.sort_unstable();
        }
        m = BigUint::one();
    }
    BigFactorization { sign, factors, cofactor: m }
}

/// Exponent of the prime `p` in the nonzero rational `t`.
pub fn valuation(t: &Rational, p: u64) -> Result<i32> {
    if t.is_zero() {
        return Err(Error::UndefinedValuation);
    }
    Ok(int_valuation(t.numer().unsigned_abs(), p) as i32
        - int_valuation(t.denom().unsigned_abs(), p) as i32)
}

fn int_valuation(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n.is_multiple_of(p) {
        n /= p;
        e += 1;
    }
    e
}

/// Jacobi symbol (a / n) for odd positive n.
pub fn jacobi(a: i128, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi: modulus must be odd");
    let n = n as i128;
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut acc = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                acc = -acc;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            acc = -acc;
        }
        a %= n;
    }
    if n == 1 {
        acc
    } else {
        0
    }
}

/// Kronecker symbol (D / p) for a prime p and D ≡ 0, 1 (mod 4).
pub fn kronecker_prime(disc: i64, p: u64) -> i8 {
    if p == 2 {
        return match disc.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    jacobi(disc as i128, p)
}

/// Writes a nonzero integer as p^e · u with u a p-unit.
fn split_power(mut n: i128, p: i128) -> (u32, i128) {
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    (e, n)
}

/// Representative integer of the square class of a nonzero rational.
fn square_class(t: &Rational) -> i128 {
    *t.numer() as i128 * *t.denom() as i128
}

/// Local quadratic Hilbert symbol (a, b)_v.
pub fn hilbert_symbol(a: &Rational, b: &Rational, place: Place) -> i8 {
    assert!(!a.is_zero() && !b.is_zero(), "hilbert_symbol: arguments must be nonzero");
    let (a, b) = (square_class(a), square_class(b));
    match place {
        Place::Infinity => {
            if a < 0 && b < 0 {
                -1
            } else {
                1
            }
        }
        Place::Prime(2) => {
            let (alpha, u) = split_power(a, 2);
            let (beta, v) = split_power(b, 2);
            let eps = |x: i128| ((x - 1) / 2).rem_euclid(2);
            let omega = |x: i128| ((x * x - 1) / 8).rem_euclid(2);
            let e = eps(u) * eps(v) + alpha as i128 * omega(v) + beta as i128 * omega(u);
            if e % 2 == 0 {
                1
            } else {
                -1
            }
        }
        Place::Prime(p) => {
            let (alpha, u) = split_power(a, p as i128);
            let (beta, v) = split_power(b, p as i128);
            let mut s = 1i8;
            if (alpha * beta) % 2 == 1 && p % 4 == 3 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= jacobi(u, p);
            }
            if alpha % 2 == 1 {
                s *= jacobi(v, p);
            }
            s
        }
    }
}

/// Parses "a/b" or "a" into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Always renders "a/b", including integers ("3/1").
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Fractional part in [0, 1).
pub fn frac(r: &Rational) -> Rational {
    r - r.floor()
}

/// Exact finite combination Σ e_p · log p over distinct primes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FactoredLog {
    terms: BTreeMap<u64, Rational>,
}

impl FactoredLog {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `coeff · log p`.
    pub fn log_prime(p: u64, coeff: Rational) -> Self {
        let mut f = Self::zero();
        f.add_term(p, coeff);
        f
    }

    /// log of a positive rational, expanded over its prime factors.
    pub fn log_of(r: &Rational) -> Self {
        assert!(r.is_positive(), "log_of: argument must be positive");
        let mut f = Self::zero();
        for (p, e) in factorize(r.numer().unsigned_abs()) {
            f.add_term(p, Rational::from_integer(e as i64));
        }
        for (p, e) in factorize(r.denom().unsigned_abs()) {
            f.add_term(p, Rational::from_integer(-(e as i64)));
        }
        f
    }

    /// Adds `coeff · log p`; `p` must be prime.
    pub fn add_term(&mut self, p: u64, coeff: Rational) {
        debug_assert!(is_prime(p), "FactoredLog key {p} is not prime");
        if coeff.is_zero() {
            return;
        }
        let e = self.terms.entry(p).or_insert_with(Rational::zero);
        *e += coeff;
        if e.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn scale(&self, c: Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&p, &e)| (p, e * c)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, p: u64) -> Rational {
        self.terms.get(&p).copied().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, Rational)> + '_ {
        self.terms.iter().map(|(&p, &e)| (p, e))
    }

    pub fn support(&self) -> Vec<u64> {
        self.terms.keys().copied().collect()
    }

    pub fn to_f64(&self) -> f64 {
        self.terms()
            .map(|(p, e)| e.to_f64().unwrap_or(f64::NAN) * (p as f64).ln())
            .sum()
    }

    /// Canonical serialization `p^(a/b)*q^(c/d)`; the empty value is `1`.
    pub fn to_power_string(&self) -> String {
        if self.is_zero() {
            return "1".to_string();
        }
        self.terms()
            .map(|(p, e)| format!("{p}^({})", fmt_rational(&e)))
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn parse_power_string(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut f = Self::zero();
        if s == "1" {
            return Ok(f);
        }
        for part in s.split('*') {
            let bad = || Error::Parse(format!("bad factored-log term {part:?}"));
            let (p, rest) = part.trim().split_once("^(").ok_or_else(bad)?;
            let e = rest.strip_suffix(')').ok_or_else(bad)?;
            let p: u64 = p.parse().map_err(|_| bad())?;
            if !is_prime(p) || f.terms.contains_key(&p) {
                return Err(bad());
            }
            f.add_term(p, parse_rational(e)?);
        }
        Ok(f)
    }
}

/// Exact linear combination Σ c_i · v_i.
pub fn flog_combine<'a, I>(items: I) -> FactoredLog
where
    I: IntoIterator<Item = (Rational, &'a FactoredLog)>,
{
    let mut out = FactoredLog::zero();
    for (c, v) in items {
        for (p, e) in v.terms() {
            out.add_term(p, c * e);
        }
    }
    out
}

impl Add for &FactoredLog {
    type Output = FactoredLog;
    fn add(self, rhs: &FactoredLog) -> FactoredLog {
        let mut out = self.clone();
        for (p, e) in rhs.terms() {
            out.add_term(p, e);
        }
        out
    }
}

impl Sub for &FactoredLog {
    type Output = FactoredLog;
    fn sub(self, rhs: &FactoredLog) -> FactoredLog {
        self + &(-rhs)
    }
}

impl Neg for &FactoredLog {
    type Output = FactoredLog;
    fn neg(self) -> FactoredLog {
        self.scale(-Rational::one())
    }
}

/// Renders `-2*log(7) + 1/2*log(3)`; the zero value is `0`.
impl fmt::Display for FactoredLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (p, e)) in self.terms().enumerate() {
            let mag = e.abs();
            let sign = if e.is_negative() { "-" } else { "+" };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                (_, s) => write!(f, " {s} ")?,
            }
            if mag.is_one() {
                write!(f, "log({p})")?;
            } else {
                write!(f, "{mag}*log({p})")?;
            }
        }
        Ok(())
    }
}

impl FromStr for FactoredLog {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_power_string(s)
    }
}

/// Renders a factored rational `-3^3 * 5^3`; exponents that are not integers
/// are printed as `p^(a/b)`.
pub fn fmt_factored(sign: i8, factors: &[(u64, Rational)]) -> String {
    let body = if factors.is_empty() {
        "1".to_string()
    } else {
        factors
            .iter()
            .map(|(p, e)| {
                if e.is_one() {
                    p.to_string()
                } else if e.is_integer() {
                    format!("{p}^{}", e.numer())
                } else {
                    format!("{p}^({})", fmt_rational(e))
                }
            })
            .collect::<Vec<_>>()
            .join(" * ")
    };
    if sign < 0 {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while n > 1 {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        out
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).is_empty());
        assert_eq!(factorize(21), vec![(3, 1), (7, 1)]);
        let expected = trial_division(884732625);
        assert_eq!(expected, vec![(3, 6), (5, 3), (7, 1), (19, 1), (73, 1)]);
        assert_eq!(factorize(884732625), expected);
    }

    #[test]
    fn factorize_large_semiprime() {
        let (p, q) = (1_000_003u64, 998_244_353u64);
        assert_eq!(factorize(p * q), vec![(p, 1), (q, 1)]);
        assert_eq!(factorize(p * p * 4), vec![(2, 2), (p, 2)]);
    }

    #[test]
    fn factorize_matches_trial_division() {
        for n in 1..3000u64 {
            assert_eq!(factorize(n), trial_division(n), "n={n}");
        }
    }

    #[test]
    fn big_factorization() {
        let n = BigInt::from(-884732625i64);
        let f = factorize_big(&n, 1000);
        assert_eq!(f.sign, -1);
        assert_eq!(f.factors, vec![(3, 6), (5, 3), (7, 1), (19, 1), (73, 1)]);
        assert!(f.cofactor.is_one());
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(&r(12, 1), 2).unwrap(), 2);
        assert_eq!(valuation(&r(3, 7), 7).unwrap(), -1);
        assert_eq!(valuation(&r(5, 1), 3).unwrap(), 0);
        assert!(matches!(valuation(&r(0, 1), 3), Err(Error::UndefinedValuation)));
    }

    /// Solvability of a x^2 + b y^2 = z^2 with (x, y, z) primitive mod p^k.
    fn hilbert_by_search(a: i64, b: i64, p: u64) -> i8 {
        let k = if p == 2 { 4 } else { 2 };
        let m = (p as i64).pow(k);
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    let primitive = x % p as i64 != 0 || y % p as i64 != 0 || z % p as i64 != 0;
                    if primitive && (a * x * x + b * y * y - z * z).rem_euclid(m) == 0 {
                        return 1;
                    }
                }
            }
        }
        -1
    }

    #[test]
    fn hilbert_examples() {
        assert_eq!(hilbert_symbol(&r(1, 1), &r(-5, 3), Place::Prime(7)), 1);
        assert_eq!(hilbert_symbol(&r(-3, 1), &r(-7, 1), Place::Prime(7)), 1);
        assert_eq!(hilbert_symbol(&r(-1, 1), &r(-7, 1), Place::Prime(7)), -1);
        assert_eq!(hilbert_symbol(&r(-1, 1), &r(-1, 1), Place::Infinity), -1);
        assert_eq!(hilbert_symbol(&r(-1, 1), &r(-1, 1), Place::Prime(2)), -1);
    }

    #[test]
    fn hilbert_matches_search_for_small_entries() {
        // Entries have valuation at most 1, so a primitive solution mod p^2
        // (mod 16 at p = 2) decides local solvability.
        for p in [2u64, 3, 5] {
            for a in [-10i64, -6, -5, -3, -2, -1, 1, 2, 3, 5, 6, 7, 10] {
                for b in [-7i64, -5, -3, -2, -1, 1, 2, 3, 6] {
                    assert_eq!(
                        hilbert_symbol(&r(a, 1), &r(b, 1), Place::Prime(p)),
                        hilbert_by_search(a, b, p),
                        "({a},{b})_{p}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_and_kronecker() {
        assert_eq!(jacobi(2, 7), 1);
        assert_eq!(jacobi(3, 7), -1);
        assert_eq!(jacobi(0, 9), 0);
        assert_eq!(kronecker_prime(-7, 2), 1);
        assert_eq!(kronecker_prime(-3, 2), -1);
        assert_eq!(kronecker_prime(-7, 7), 0);
    }

    #[test]
    fn flog_combine_examples() {
        let a = FactoredLog::log_prime(3, r(1, 1));
        let b = FactoredLog::log_prime(3, r(-1, 1));
        assert!(flog_combine([(r(1, 1), &a), (r(1, 1), &b)]).is_zero());
        let seven = FactoredLog::log_prime(7, r(1, 1));
        assert_eq!(flog_combine([(r(2, 1), &seven)]), FactoredLog::log_prime(7, r(2, 1)));
        let three4 = FactoredLog::log_prime(3, r(4, 1));
        let five = FactoredLog::log_prime(5, r(1, 1));
        let got = flog_combine([(r(1, 2), &three4), (r(1, 1), &five)]);
        assert_eq!(got.coeff(3), r(2, 1));
        assert_eq!(got.coeff(5), r(1, 1));
        assert_eq!(got.support(), vec![3, 5]);
    }

    #[test]
    fn rendering() {
        let f = &FactoredLog::log_prime(7, r(-2, 1)) + &FactoredLog::log_prime(3, r(1, 2));
        assert_eq!(f.to_string(), "1/2*log(3) - 2*log(7)");
        assert_eq!(FactoredLog::log_prime(7, r(-2, 1)).to_string(), "-2*log(7)");
        assert_eq!(f.to_power_string(), "3^(1/2)*7^(-2/1)");
        assert_eq!(FactoredLog::parse_power_string(&f.to_power_string()).unwrap(), f);
        assert_eq!(FactoredLog::zero().to_power_string(), "1");
        assert!(FactoredLog::parse_power_string("4^(1/1)").is_err());
        assert_eq!(fmt_factored(1, &[(3, r(3, 1)), (5, r(3, 1))]), "3^3 * 5^3");
    }

    #[test]
    fn log_of_rational() {
        let f = FactoredLog::log_of(&r(12, 35));
        assert_eq!(f.coeff(2), r(2, 1));
        assert_eq!(f.coeff(3), r(1, 1));
        assert_eq!(f.coeff(5), r(-1, 1));
        assert_eq!(f.coeff(7), r(-1, 1));
    }
}
