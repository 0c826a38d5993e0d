//! Normalized local Whittaker functions as polynomials in X = p^(−s).
//!
//! The Eisenstein coefficient is reassembled from local factors, giving an
//! oracle for κ that never uses the closed formula of [`crate::kappa`].
//! Normalization: the archimedean factor is the constant −2 and every
//! ramified factor drops its γ_q·q^(−1/2) unit; those units multiply with
//! d^(1/2) and γ_∞ to 1.

use std::fmt;

use num_traits::{One, Zero};

use crate::arith::{valuation, FactoredLog, Place, Rational};
use crate::error::{Error, Result};
use crate::lattice::{DualCoset, IdealLattice};
use crate::quadfield::QuadField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prefactor {
    None,
    /// A suppressed γ_q·q^(−1/2).
    GammaQRootQ,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WhittakerPoly {
    pub p: u64,
    /// coeffs[k] multiplies X^k; no trailing zeros.
    pub coeffs: Vec<Rational>,
    pub prefactor: Prefactor,
}

impl WhittakerPoly {
    fn new(p: u64, mut coeffs: Vec<Rational>, prefactor: Prefactor) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { p, coeffs, prefactor }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }
}

impl fmt::Display for WhittakerPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = *c < Rational::zero();
            let a = if neg { -c } else { *c };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let coef = if a.is_integer() { a.to_integer().to_string() } else { crate::arith::fmt_rational(&a) };
            match k {
                0 => write!(f, "{coef}")?,
                _ if a.is_one() => write!(f, "X^{k}")?,
                _ => write!(f, "{coef}*X^{k}")?,
            }
        }
        Ok(())
    }
}

fn ri(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Σ_{r=0}^{ord_p t} (χ_p(p)X)^r, zero when ord_p t < 0.
pub fn whit_unramified(field: &QuadField, p: u64, t: &Rational) -> Result<WhittakerPoly> {
    if field.is_ramified(p) {
        return Err(Error::Contract(format!("{p} is ramified in Q(sqrt(-{}))", field.d)));
    }
    let a = valuation(t, p)?;
    let c = field.chi_of_prime(p) as i64;
    let coeffs = (0..=a.max(-1)).map(|r| ri(c.pow(r as u32))).collect();
    Ok(WhittakerPoly::new(p, coeffs, Prefactor::None))
}

fn ramified_poly(q: u64, sign: i8, a: i32) -> WhittakerPoly {
    if a < 0 {
        return WhittakerPoly::new(q, vec![], Prefactor::GammaQRootQ);
    }
    let mut coeffs = vec![Rational::zero(); a as usize + 2];
    coeffs[0] = Rational::one();
    coeffs[a as usize + 1] = ri(sign as i64);
    WhittakerPoly::new(q, coeffs, Prefactor::GammaQRootQ)
}

/// 1 + χ_q(−t)·X^(ord_q t + 1) for μ_q = 0.
pub fn whit_ramified_zero(field: &QuadField, q: u64, t: &Rational) -> Result<WhittakerPoly> {
    if !field.is_ramified(q) {
        return Err(Error::Contract(format!("{q} is not ramified in Q(sqrt(-{}))", field.d)));
    }
    let a = valuation(t, q)?;
    Ok(ramified_poly(q, field.chi(&-t, Place::Prime(q)), a))
}

/// The two-case form: (q, −t)_q for even ord_q t, (q, −dt)_q for odd.
pub fn whit_ramified_zero_casewise(field: &QuadField, q: u64, t: &Rational) -> Result<WhittakerPoly> {
    if !field.is_ramified(q) {
        return Err(Error::Contract(format!("{q} is not ramified in Q(sqrt(-{}))", field.d)));
    }
    let a = valuation(t, q)?;
    let qq = ri(q as i64);
    let other = if a.rem_euclid(2) == 0 { -t } else { -t * ri(field.d as i64) };
    Ok(ramified_poly(q, crate::arith::hilbert_symbol(&qq, &other, Place::Prime(q)), a))
}

/// char(Q(μ_q) + ℤ_q)(t) for μ_q ≠ 0.
pub fn whit_ramified_nonzero(field: &QuadField, q: u64, t: &Rational, mu: &DualCoset) -> Result<WhittakerPoly> {
    let local = mu
        .local
        .iter()
        .find(|l| l.q == q)
        .ok_or_else(|| Error::Contract(format!("{q} is not ramified in Q(sqrt(-{}))", field.d)))?;
    if local.zero {
        return Err(Error::Contract(format!("coset {} is locally zero at {q}", mu.label)));
    }
    let diff = t - local.q_local;
    let inside = diff.is_zero() || valuation(&diff, q)? >= 0;
    let coeffs = if inside { vec![Rational::one()] } else { vec![] };
    Ok(WhittakerPoly::new(q, coeffs, Prefactor::GammaQRootQ))
}

/// Value at s = 0 (X = 1) and s-derivative there, using dX/ds = −log p·X.
pub fn value_deriv_at_zero(w: &WhittakerPoly) -> (Rational, FactoredLog) {
    let value = w.coeffs.iter().sum();
    let slope: Rational = w.coeffs.iter().enumerate().map(|(k, c)| c * ri(k as i64)).sum();
    (value, FactoredLog::log_prime(w.p, -slope))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleFlag {
    /// No local factor vanished at s = 0.
    NonvanishingValue,
}

#[derive(Clone, Debug)]
pub struct OracleOutput {
    /// κ(t, μ, 𝔞) as reassembled from local data.
    pub kappa: FactoredLog,
    pub factors: Vec<WhittakerPoly>,
    pub vanishing: usize,
    pub flags: Vec<OracleFlag>,
}

/// Reassembles E*′_t(τ, 0) = −2·Σ_i W_i′(0)·Π_{j≠i} W_j(0) and divides by h_k.
pub fn eisenstein_deriv_coeff(lat: &IdealLattice, mu: &DualCoset, t: &Rational) -> Result<OracleOutput> {
    if *t <= Rational::zero() {
        return Err(Error::Contract("the Eisenstein oracle needs t > 0".into()));
    }
    let field = &lat.field;
    let mut factors = Vec::new();
    for &q in &field.ramified {
        factors.push(if mu.local_zero(q) { whit_ramified_zero(field, q, t)? } else { whit_ramified_nonzero(field, q, t, mu)? });
    }
    // every other unramified prime has ord_p t = 0 and contributes 1
    let mut primes: Vec<u64> = crate::arith::prime_divisors(t.numer().unsigned_abs());
    primes.extend(crate::arith::prime_divisors(t.denom().unsigned_abs()));
    primes.sort_unstable();
    primes.dedup();
    for p in primes.into_iter().filter(|&p| !field.is_ramified(p)) {
        factors.push(whit_unramified(field, p, t)?);
    }

    let local: Vec<(Rational, FactoredLog)> = factors.iter().map(value_deriv_at_zero).collect();
    let vanishing = local.iter().filter(|(v, _)| v.is_zero()).count();
    let mut flags = Vec::new();
    let kappa = match vanishing {
        0 => {
            flags.push(OracleFlag::NonvanishingValue);
            FactoredLog::zero()
        }
        1 => {
            let i = local.iter().position(|(v, _)| v.is_zero()).unwrap_or(0);
            let others: Rational = local.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, (v, _))| *v).product();
            local[i].1.scale(ri(-2) * others / ri(field.h as i64))
        }
        _ => FactoredLog::zero(),
    };
    Ok(OracleOutput { kappa, factors, vanishing, flags })
}
