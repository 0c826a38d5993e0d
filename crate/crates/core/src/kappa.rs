//! Closed formula for κ(t, μ, 𝔞) on an ideal lattice 𝔞 with Q = −N/N𝔞.
//!
//! For t > 0:
//!
//! κ = −(1/h)·Π_q char(Q(μ_q) + ℤ_q)(t)·[ ρ(dt)·Σ_{q: μ_q=0} η_q·(ord_q t + 1)·log q
//!                                       + η_0·Σ_{p inert} (ord_p t + 1)·ρ(dt/p)·log p ]
//!
//! κ(0, 0) is the symbolic constant k₀(0); κ vanishes for t < 0 and for
//! t = 0, μ ≠ 0.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_traits::{One, Zero};

use crate::arith::{fmt_rational, prime_divisors, valuation, FactoredLog, Place, Rational};
use crate::error::{Error, Result};
use crate::lattice::{DualCoset, IdealLattice};
use crate::precise::{flog_value, Precision, Real};
use crate::quadfield::{QuadField, SplittingType};

fn ri(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// log_part + kzero_multiple·k₀(0)
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct KappaValue {
    pub log_part: FactoredLog,
    pub kzero_multiple: Rational,
}

impl KappaValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn kzero() -> Self {
        Self { log_part: FactoredLog::zero(), kzero_multiple: Rational::one() }
    }

    pub fn from_log(log_part: FactoredLog) -> Self {
        Self { log_part, kzero_multiple: Rational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.log_part.is_zero() && self.kzero_multiple.is_zero()
    }

    pub fn scale(&self, c: Rational) -> Self {
        Self { log_part: self.log_part.scale(c), kzero_multiple: self.kzero_multiple * c }
    }

    pub fn add_assign(&mut self, other: &KappaValue) {
        self.log_part = &self.log_part + &other.log_part;
        self.kzero_multiple += other.kzero_multiple;
    }

    pub fn add_scaled(&mut self, c: Rational, other: &KappaValue) {
        self.add_assign(&other.scale(c));
    }

    pub fn numeric(&self, ctx: &mut Precision, k0: &Real) -> Real {
        let logs = flog_value(ctx, &self.log_part);
        &logs + &(k0 * &ctx.rational(&self.kzero_multiple))
    }
}

impl fmt::Display for KappaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.log_part.is_zero(), self.kzero_multiple.is_zero()) {
            (_, true) => write!(f, "{}", self.log_part),
            (true, false) => write!(f, "{}*k0", fmt_rational(&self.kzero_multiple)),
            (false, false) => write!(f, "{} + {}*k0", self.log_part, fmt_rational(&self.kzero_multiple)),
        }
    }
}

/// (1 − χ_q(−t))·Π_{q′ ≠ q, μ_q′ = 0} (1 + χ_q′(−t))
pub fn eta_q(field: &QuadField, t: &Rational, mu: &DualCoset, q: u64) -> Result<i64> {
    if !field.is_ramified(q) {
        return Err(Error::Contract(format!("eta_q: {q} does not divide {}", field.d)));
    }
    if !mu.local_zero(q) {
        return Err(Error::Contract(format!("eta_q: coset {} is nonzero at {q}", mu.label)));
    }
    let chi = |p: u64| field.chi(&-t, Place::Prime(p)) as i64;
    Ok((1 - chi(q))
        * field.ramified.iter().filter(|&&p| p != q && mu.local_zero(p)).map(|&p| 1 + chi(p)).product::<i64>())
}

/// Π_{q: μ_q = 0} (1 + χ_q(−t)); 1 for an empty product.
pub fn eta_0(field: &QuadField, t: &Rational, mu: &DualCoset) -> i64 {
    field
        .ramified
        .iter()
        .filter(|&&q| mu.local_zero(q))
        .map(|&q| 1 + field.chi(&-t, Place::Prime(q)) as i64)
        .product()
}

fn check_lattice(lat: &IdealLattice, mu: &DualCoset) -> Result<()> {
    match lat.cosets().get(mu.label) {
        Some(c) if c == mu => Ok(()),
        _ => Err(Error::UnsupportedLattice(format!("coset {} does not belong to this ideal lattice", mu.label))),
    }
}

pub fn kappa_positive(lat: &IdealLattice, mu: &DualCoset, t: &Rational) -> Result<KappaValue> {
    check_lattice(lat, mu)?;
    if *t <= Rational::zero() {
        return Err(Error::Contract("kappa_positive needs t > 0".into()));
    }
    if !mu.char_condition(t) {
        return Ok(KappaValue::zero());
    }
    let field = &lat.field;
    let dt = t * ri(field.d as i64);
    let mut out = FactoredLog::zero();
    let rho_dt = field.rho(&dt);
    if rho_dt != 0 {
        for &q in field.ramified.iter().filter(|&&q| mu.local_zero(q)) {
            let e = eta_q(field, t, mu, q)?;
            let ord = valuation(t, q)? as i64;
            out.add_term(q, ri(e * (ord + 1) * rho_dt as i64));
        }
    }
    let e0 = eta_0(field, t, mu);
    if e0 != 0 && dt.is_integer() {
        for p in prime_divisors(dt.numer().unsigned_abs()) {
            if field.splitting(p) != SplittingType::Inert {
                continue;
            }
            let ord = valuation(t, p)? as i64;
            let rho = field.rho(&(dt / ri(p as i64))) as i64;
            out.add_term(p, ri(e0 * (ord + 1) * rho));
        }
    }
    Ok(KappaValue::from_log(out.scale(Rational::new(-1, field.h as i64))))
}

/// κ at an arbitrary rational m.
pub fn kappa_at(lat: &IdealLattice, mu: &DualCoset, m: &Rational) -> Result<KappaValue> {
    check_lattice(lat, mu)?;
    if *m < Rational::zero() {
        Ok(KappaValue::zero())
    } else if m.is_zero() {
        Ok(if mu.is_zero() { KappaValue::kzero() } else { KappaValue::zero() })
    } else {
        kappa_positive(lat, mu, m)
    }
}

type CacheKey = (u64, [[i64; 2]; 2], usize, Rational);

/// Lock-protected memo of κ values keyed by (d, ideal basis, μ, t).
#[derive(Default)]
pub struct KappaCache {
    map: Mutex<HashMap<CacheKey, KappaValue>>,
}

impl KappaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, lat: &IdealLattice, label: usize, m: &Rational) -> Result<KappaValue> {
        let key = (lat.d(), lat.basis, label, *m);
        if let Some(v) = self.map.lock().expect("kappa cache poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = kappa_at(lat, lat.coset(label)?, m)?;
        self.map.lock().expect("kappa cache poisoned").insert(key, v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("kappa cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
