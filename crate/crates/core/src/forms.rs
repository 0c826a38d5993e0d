//! Coefficient tables of weakly holomorphic vector-valued forms and exact
//! classical q-expansions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{fmt_rational, parse_rational, Rational};
use crate::error::{Error, Result};
use crate::lattice::SplitLattice;

/// Σ coeffs[i]·q^(valuation + i), known modulo q^(valuation + len).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpansion {
    pub valuation: i64,
    pub coeffs: Vec<BigInt>,
}

impl QExpansion {
    pub fn new(valuation: i64, coeffs: Vec<BigInt>) -> Self {
        Self { valuation, coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// First exponent not determined by the stored coefficients.
    pub fn precision(&self) -> i64 {
        self.valuation + self.coeffs.len() as i64
    }

    pub fn coeff(&self, n: i64) -> BigInt {
        let i = n - self.valuation;
        if i < 0 || i >= self.coeffs.len() as i64 {
            BigInt::zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    pub fn truncate(&self, terms: usize) -> Self {
        Self::new(self.valuation, self.coeffs.iter().take(terms).cloned().collect())
    }

    pub fn add(&self, o: &QExpansion) -> QExpansion {
        let v = self.valuation.min(o.valuation);
        let prec = self.precision().min(o.precision());
        let coeffs = (v..prec).map(|n| self.coeff(n) + o.coeff(n)).collect();
        QExpansion::new(v, coeffs)
    }

    pub fn mul(&self, o: &QExpansion) -> QExpansion {
        let len = self.len().min(o.len());
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().take(len - i).enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QExpansion::new(self.valuation + o.valuation, coeffs)
    }

    pub fn scale(&self, c: &BigInt) -> QExpansion {
        QExpansion::new(self.valuation, self.coeffs.iter().map(|x| x * c).collect())
    }

    /// 1/f, defined when the leading coefficient is ±1.
    pub fn inverse(&self) -> Result<QExpansion> {
        let lead = self.coeffs.first().ok_or_else(|| Error::Contract("cannot invert an empty expansion".into()))?;
        if lead.abs() != BigInt::one() {
            return Err(Error::Contract(format!("leading coefficient {lead} is not a unit")));
        }
        let n = self.len();
        let mut inv: Vec<BigInt> = Vec::with_capacity(n);
        inv.push(lead.clone());
        for k in 1..n {
            let s: BigInt = (1..=k).map(|i| &self.coeffs[i] * &inv[k - i]).sum();
            inv.push(-(s * lead));
        }
        Ok(QExpansion::new(-self.valuation, inv))
    }

    pub fn div(&self, o: &QExpansion) -> Result<QExpansion> {
        Ok(self.mul(&o.inverse()?))
    }
}

impl fmt::Display for QExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let n = self.valuation + i as i64;
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let mono = match n {
                0 => String::new(),
                1 => "q".into(),
                _ => format!("q^{n}"),
            };
            match (a.is_one(), mono.is_empty()) {
                (_, true) => write!(f, "{a}")?,
                (true, false) => write!(f, "{mono}")?,
                (false, false) => write!(f, "{a}{mono}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(q^{})", self.precision())
    }
}

fn sigma(n: u64, k: u32) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += BigInt::from(d).pow(k);
            if d * d != n {
                s += BigInt::from(n / d).pow(k);
            }
        }
        d += 1;
    }
    s
}

fn eisenstein(terms: usize, k: u32, c: i64) -> QExpansion {
    let coeffs = (0..terms as u64).map(|n| if n == 0 { BigInt::one() } else { sigma(n, k) * c }).collect();
    QExpansion::new(0, coeffs)
}

/// q·Π(1 − qⁿ)^24 to `terms` coefficients.
fn delta(terms: usize) -> QExpansion {
    let mut p = vec![BigInt::zero(); terms];
    if terms > 0 {
        p[0] = BigInt::one();
    }
    for n in 1..terms {
        for _ in 0..24 {
            for i in (n..terms).rev() {
                let prev = p[i - n].clone();
                p[i] -= prev;
            }
        }
    }
    QExpansion::new(1, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classical {
    Delta,
    E4,
    E6,
    J,
}

impl std::str::FromStr for Classical {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "delta" => Ok(Classical::Delta),
            "e4" => Ok(Classical::E4),
            "e6" => Ok(Classical::E6),
            "j" => Ok(Classical::J),
            _ => Err(Error::Parse(format!("unknown q-expansion {s:?}; expected delta, e4, e6 or j"))),
        }
    }
}

/// `terms` coefficients from the leading exponent; for j the polar q⁻¹
/// term comes on top of them.
pub fn classical_qexp(name: Classical, terms: usize) -> Result<QExpansion> {
    if terms == 0 {
        return Err(Error::Contract("need at least one term".into()));
    }
    Ok(match name {
        Classical::Delta => delta(terms),
        Classical::E4 => eisenstein(terms, 3, 240),
        Classical::E6 => eisenstein(terms, 5, -504),
        Classical::J => QExpansion::new(-1, j_coefficients(terms + 1)),
    })
}

/// Coefficients c(−1), c(0), c(1), … of j, at least `count` of them; cached.
pub fn j_coefficients(count: usize) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<Vec<BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().expect("j cache poisoned");
    if guard.len() < count {
        let n = count.max(2 * guard.len()).max(64);
        let e4 = eisenstein(n, 3, 240);
        let e4c = e4.mul(&e4).mul(&e4);
        let j = e4c.div(&delta(n)).expect("Δ has unit leading coefficient");
        *guard = j.coeffs;
    }
    guard[..count].to_vec()
}

/// Coefficient table c_η(m) of F = Σ_η Σ_m c_η(m) qᵐ φ_η.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierForm {
    pub d: u64,
    pub lattice_ref: String,
    pub coeffs: BTreeMap<(usize, Rational), Rational>,
}

impl FourierForm {
    pub fn new(d: u64, lattice_ref: impl Into<String>) -> Self {
        Self { d, lattice_ref: lattice_ref.into(), coeffs: BTreeMap::new() }
    }

    pub fn set(&mut self, eta: usize, m: Rational, c: Rational) {
        if c.is_zero() {
            self.coeffs.remove(&(eta, m));
        } else {
            self.coeffs.insert((eta, m), c);
        }
    }

    pub fn get(&self, eta: usize, m: &Rational) -> Rational {
        self.coeffs.get(&(eta, *m)).copied().unwrap_or_else(Rational::zero)
    }

    pub fn principal_support(&self) -> Vec<(usize, Rational)> {
        self.coeffs.keys().filter(|(_, m)| *m < Rational::zero()).copied().collect()
    }

    /// Nonzero (η, m, c) with m ≤ 0.
    pub fn nonpositive_terms(&self) -> impl Iterator<Item = (usize, Rational, Rational)> + '_ {
        self.coeffs.iter().filter(|((_, m), _)| *m <= Rational::zero()).map(|(&(e, m), &c)| (e, m, c))
    }

    /// Checks integrality, the support congruence and the labels.
    pub fn validate(&self, lat: &SplitLattice) -> Result<()> {
        if lat.field().d != self.d {
            return Err(Error::Contract(format!("form is for d = {} but the lattice has d = {}", self.d, lat.field().d)));
        }
        for (&(eta, m), c) in &self.coeffs {
            let q = lat.class(eta)?.q_mod_one;
            if m <= Rational::zero() && !c.is_integer() {
                return Err(Error::IntegralityViolation { eta, m: fmt_rational(&m), c: fmt_rational(c) });
            }
            if !(m + q).is_integer() {
                return Err(Error::SupportCongruenceViolation { eta, m: fmt_rational(&m) });
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut lattice_ref = String::new();
        let mut form = FourierForm::new(0, "");
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                match k.trim() {
                    "d" => d = Some(v.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad d", no + 1)))?),
                    "lattice" => lattice_ref = v.trim().to_string(),
                    other => return Err(Error::Parse(format!("line {}: unknown header {other:?}", no + 1))),
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [eta, m, c] = parts.as_slice() else {
                return Err(Error::Parse(format!("line {}: expected 'eta m c'", no + 1)));
            };
            let eta: usize = eta.parse().map_err(|_| Error::Parse(format!("line {}: bad label", no + 1)))?;
            if m.contains("inf") || *m == "*" || m.contains("..") {
                return Err(Error::InfinitePrincipalPart(format!("line {}: index {m:?} is not a single rational", no + 1)));
            }
            let m = parse_rational(m)?;
            let c = parse_rational(c)?;
            if form.coeffs.contains_key(&(eta, m)) {
                return Err(Error::Parse(format!("line {}: duplicate coefficient", no + 1)));
            }
            form.set(eta, m, c);
        }
        form.d = d.ok_or_else(|| Error::Parse("missing d header".into()))?;
        form.lattice_ref = lattice_ref;
        Ok(form)
    }

    /// max{m > 0 : c_η(−m) ≠ 0 for some η}, or 0.
    pub fn m_max(&self) -> Rational {
        self.principal_support().into_iter().map(|(_, m)| -m).max().unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for FourierForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d={}", self.d)?;
        writeln!(f, "lattice={}", self.lattice_ref)?;
        for (&(eta, m), c) in &self.coeffs {
            writeln!(f, "{eta} {} {}", fmt_rational(&m), fmt_rational(c))?;
        }
        Ok(())
    }
}

/// Parses and validates a form against its lattice.
pub fn load_form(text: &str, lat: &SplitLattice) -> Result<FourierForm> {
    let f = FourierForm::parse(text)?;
    f.validate(lat)?;
    Ok(f)
}

pub fn m_max(f: &FourierForm) -> Rational {
    f.m_max()
}
