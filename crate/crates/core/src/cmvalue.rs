//! CM-cycle sums of Φ(F) and log‖Ψ(F)‖² as exact log-combinations plus
//! one multiple of κ(0,0).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{fmt_rational, FactoredLog, Rational};
use crate::error::{Error, Result};
use crate::forms::FourierForm;
use crate::kappa::{KappaCache, KappaValue};
use crate::lattice::{mat_inverse, SplitLattice};
use crate::precise::{flog_value, Real};
use crate::quadfield::{working_precision, FieldNumerics, QuadField, SplittingType};

fn ri(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// C_{η,λ₊}(m) keyed by (η, λ, m); λ indexes `SplitLattice::decompose(η)`.
pub type ContractionTable = BTreeMap<(usize, usize, Rational), Rational>;

/// Convolution of c_η with the theta counts of η₊ + λ₊ + L₊ for lo ≤ m ≤ hi.
/// Coefficients absent from F count as zero, so entries with m > 0 are
/// complete only as far as F lists its positive part.
pub fn contraction_coeffs(f: &FourierForm, sl: &SplitLattice, lo: &Rational, hi: &Rational) -> Result<ContractionTable> {
    let mut out = ContractionTable::new();
    for class in sl.classes() {
        let pieces = sl.decompose(class.label)?;
        for ((eta, m1), c) in f.coeffs.range((class.label, Rational::new(i64::MIN / 2, 1))..) {
            if *eta != class.label || m1 > hi {
                break;
            }
            for (lam, (plus, _)) in pieces.iter().enumerate() {
                for (n2, cnt) in sl.plus.vectors_by_norm(plus, &(hi - m1)) {
                    let m = m1 + n2;
                    if m >= *lo {
                        *out.entry((class.label, lam, m)).or_insert_with(Rational::zero) += c * ri(cnt as i64);
                    }
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Σ_η Σ_{λ : η₋+λ₋ = 0} C_{η,λ₊}(0), the constant term of ⟨F, θ₊⟩.
pub fn c00_contraction(f: &FourierForm, sl: &SplitLattice) -> Result<Rational> {
    let mut total = Rational::zero();
    for (eta, m1, c) in f.nonpositive_terms() {
        for (plus, minus) in sl.decompose(eta)? {
            if sl.minus.coset(minus)?.is_zero() {
                total += c * ri(sl.plus.count_vectors(&plus, &-m1) as i64);
            }
        }
    }
    Ok(total)
}

/// Same double sum by box enumeration over the glue list and exact norms.
pub fn c00_brute_force(f: &FourierForm, sl: &SplitLattice) -> Result<Rational> {
    let gram = &sl.plus.gram;
    let n = gram.len();
    let inv = if n == 0 { vec![] } else { mat_inverse(gram).ok_or_else(|| Error::InvalidGram("singular".into()))? };
    let mut total = Rational::zero();
    for (eta, m1, c) in f.nonpositive_terms() {
        let class = sl.class(eta)?;
        let target = -m1;
        for (lp, lm) in &sl.core.glue {
            let minus: Vec<Rational> = class.minus.iter().zip(lm).map(|(a, b)| a + b).collect();
            if !minus.iter().all(|x| x.is_integer()) {
                continue;
            }
            let offset: Vec<Rational> = class.plus.iter().zip(lp).map(|(a, b)| a + b).collect();
            // |x_i|² ≤ 2·Q(x)·(G⁻¹)_ii
            let bounds: Vec<i64> = (0..n)
                .map(|i| {
                    let b2 = (ri(2) * target * inv[i][i]).to_f64().unwrap_or(0.0);
                    b2.max(0.0).sqrt().ceil() as i64 + 2
                })
                .collect();
            total += c * ri(box_count(sl, &offset, &bounds, &target));
        }
    }
    Ok(total)
}

fn box_count(sl: &SplitLattice, offset: &[Rational], bounds: &[i64], target: &Rational) -> i64 {
    let n = offset.len();
    let mut z: Vec<i64> = bounds.iter().map(|b| -b).collect();
    let mut count = 0;
    loop {
        let x: Vec<Rational> = (0..n).map(|i| offset[i] + ri(z[i])).collect();
        if sl.plus.q_form(&x) == *target {
            count += 1;
        }
        let mut i = 0;
        while i < n && z[i] == bounds[i] {
            z[i] = -bounds[i];
            i += 1;
        }
        if i == n {
            return count;
        }
        z[i] += 1;
    }
}

/// κ_η(m) = Σ_λ Σ_{x ∈ η₊+λ₊+L₊} κ_{η₋+λ₋}(m − Q(x)).
pub fn kappa_eta(sl: &SplitLattice, eta: usize, m: &Rational, cache: &KappaCache) -> Result<KappaValue> {
    kappa_eta_bounded(sl, eta, m, m, cache)
}

/// κ_η(m) with the x-enumeration cut at Q(x) ≤ bound; any bound ≥ m gives κ_η(m).
pub fn kappa_eta_bounded(sl: &SplitLattice, eta: usize, m: &Rational, bound: &Rational, cache: &KappaCache) -> Result<KappaValue> {
    let mut out = KappaValue::zero();
    for (plus, minus) in sl.decompose(eta)? {
        for (qx, cnt) in sl.plus.vectors_by_norm(&plus, bound) {
            let v = cache.get(&sl.minus, minus, &(m - qx))?;
            out.add_scaled(ri(cnt as i64), &v);
        }
    }
    Ok(out)
}

/// Σ_η Σ_{m≥0} c_η(−m)·κ_η(m) in both normalizations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiAverage {
    pub sum: KappaValue,
    /// 2·sum, the integral over SO(U).
    pub so_u: KappaValue,
    /// (4/vol(K_T))·sum, the sum over the CM cycle.
    pub cycle_sum: KappaValue,
    pub vol_kt: Rational,
}

pub fn default_vol_kt(field: &QuadField) -> Rational {
    Rational::new(2, field.h as i64)
}

fn check_vol(vol: &Rational) -> Result<()> {
    if vol.is_positive() {
        Ok(())
    } else {
        Err(Error::Contract(format!("vol(K_T) must be positive, got {}", fmt_rational(vol))))
    }
}

pub fn phi_sum(f: &FourierForm, sl: &SplitLattice, cache: &KappaCache) -> Result<KappaValue> {
    if f.d != sl.field().d {
        return Err(Error::Contract(format!("form is for d = {} but the lattice has d = {}", f.d, sl.field().d)));
    }
    let mut s = KappaValue::zero();
    for (eta, m1, c) in f.nonpositive_terms() {
        let k = kappa_eta(sl, eta, &-m1, cache)?;
        s.add_scaled(c, &k);
    }
    Ok(s)
}

pub fn phi_average(f: &FourierForm, sl: &SplitLattice, vol_kt: Option<Rational>) -> Result<PhiAverage> {
    let vol = vol_kt.unwrap_or_else(|| default_vol_kt(sl.field()));
    check_vol(&vol)?;
    let sum = phi_sum(f, sl, &KappaCache::new())?;
    Ok(PhiAverage { so_u: sum.scale(ri(2)), cycle_sum: sum.scale(ri(4) / vol), sum, vol_kt: vol })
}

/// High-precision evaluation of a report; the base logs are four routes
/// to log of the transcendental factor.
#[derive(Clone, Debug)]
pub struct CMNumeric {
    pub digits: u32,
    pub rational_part: Real,
    pub k0: Real,
    /// log∏‖Ψ‖² = rational_part + exponent·base_log
    pub log_value: Real,
    /// −κ(0,0) = −log d − 2Λ′(1)/Λ(1)
    pub base_log: Real,
    /// −log(4π/d) − γ + 2L′(0)/L(0), L′(0)/L(0) from the functional equation
    pub base_log_direct: Real,
    /// the same with L′(0)/L(0) from log Γ(a/d)
    pub base_log_chowla_selberg: Real,
    /// log of (4dπ)⁻¹·e^{2L′(0)/L(0)}; differs from base_log by γ − 2·log d
    pub base_log_literal: Real,
    pub routes_agree: bool,
}

#[derive(Clone, Debug)]
pub struct CMValueReport {
    pub d: u64,
    pub h: u64,
    /// log rat
    pub rational_part: FactoredLog,
    /// coefficient of κ(0,0) in log∏‖Ψ‖², = −(2/vol(K_T))·c00
    pub kzero_coeff: Rational,
    /// c₀(0)(⟨F,θ₊⟩)
    pub c00: Rational,
    /// (2/vol(K_T))·c00, = h·c00 at the default volume
    pub transcendental_exponent: Rational,
    pub degree: u64,
    pub vol_kt: Rational,
    pub vol_kt_overridden: bool,
    /// Z(U)_K meets div Ψ(F); the values are then those of Φ only.
    pub meets_divisor: bool,
    /// All c_η(−m), m > 0, non-negative: whether the exponents of rat share a sign.
    pub exponents_sign_definite: Option<bool>,
    pub phi: PhiAverage,
    pub numeric: Option<CMNumeric>,
}

fn meets_divisor(f: &FourierForm, sl: &SplitLattice) -> Result<bool> {
    for (eta, m1, c) in f.nonpositive_terms() {
        if m1.is_zero() || c.is_zero() {
            continue;
        }
        for (plus, minus) in sl.decompose(eta)? {
            if sl.minus.coset(minus)?.is_zero() && sl.plus.count_vectors(&plus, &-m1) > 0 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

pub fn log_psi_product(f: &FourierForm, sl: &SplitLattice, vol_kt: Option<Rational>) -> Result<CMValueReport> {
    let field = sl.field();
    let vol_kt_overridden = vol_kt.is_some();
    let phi = phi_average(f, sl, vol_kt)?;
    let c00 = c00_contraction(f, sl)?;
    if phi.sum.kzero_multiple != c00 {
        return Err(Error::Contract(format!(
            "κ(0,0) multiple {} disagrees with c00 {}",
            fmt_rational(&phi.sum.kzero_multiple),
            fmt_rational(&c00)
        )));
    }
    let factor = -ri(2) / phi.vol_kt;
    let rational_part = phi.sum.log_part.scale(factor);
    let hypothesis = f.principal_support().iter().all(|k| !f.coeffs[k].is_negative());
    let exponents_sign_definite = hypothesis.then(|| {
        let e: Vec<Rational> = rational_part.terms().map(|(_, e)| e).collect();
        e.iter().all(|x| !x.is_negative()) || e.iter().all(|x| !x.is_positive())
    });
    Ok(CMValueReport {
        d: field.d,
        h: field.h,
        rational_part,
        kzero_coeff: factor * c00,
        c00,
        transcendental_exponent: -factor * c00,
        degree: 2 * field.h,
        vol_kt: phi.vol_kt,
        vol_kt_overridden,
        meets_divisor: meets_divisor(f, sl)?,
        exponents_sign_definite,
        phi,
        numeric: None,
    })
}

impl CMValueReport {
    pub fn is_rational(&self) -> bool {
        self.kzero_coeff.is_zero()
    }

    /// exp(rational_part) as Π p^e, when no transcendental factor is present.
    pub fn factored_rational(&self) -> Option<String> {
        self.is_rational().then(|| self.rational_part.to_power_string())
    }

    pub fn evaluate(&mut self, field: &QuadField, digits: u32) -> Result<()> {
        let nums = FieldNumerics::compute(field, digits)?;
        let mut ctx = working_precision(digits)?;
        let rational_part = flog_value(&mut ctx, &self.rational_part);
        let pi = ctx.pi();
        let four_pi = pi.mul_int(4);
        let ln4pi = ctx.ln(&four_pi);
        let base_log = -&nums.k0;
        let shift = &(&nums.ln_d - &ln4pi) - &nums.euler_gamma;
        let base_log_direct = &shift + &nums.log_deriv_zero_direct.mul_int(2);
        let base_log_chowla_selberg = &shift + &nums.log_deriv_zero.mul_int(2);
        let base_log_literal = &(&-&ln4pi - &nums.ln_d) + &nums.log_deriv_zero.mul_int(2);
        let tol = digits.saturating_sub(10);
        let routes_agree = (&base_log - &base_log_direct).below_ten_pow_neg(tol)
            && (&base_log - &base_log_chowla_selberg).below_ten_pow_neg(tol);
        let exponent = ctx.rational(&self.transcendental_exponent);
        let log_value = &rational_part + &(&exponent * &base_log);
        self.numeric = Some(CMNumeric {
            digits,
            rational_part,
            k0: nums.k0,
            log_value,
            base_log,
            base_log_direct,
            base_log_chowla_selberg,
            base_log_literal,
            routes_agree,
        });
        Ok(())
    }
}

/// (4dπ)^(−h)·e^(−hγ)·Π Γ(a/d)^(w·χ(a)), the transcendental factor raised
/// to c00 in Chowla-Selberg form.
pub fn chowla_selberg_display(field: &QuadField) -> String {
    let d = field.d;
    let h = field.h as i64;
    let mut s = format!("(4*{d}*pi)^({}) * exp({}*gamma)", -h, -h);
    for a in 1..d {
        let c = field.chi_int(a);
        if c != 0 {
            s.push_str(&format!(" * Gamma({a}/{d})^({})", c as i64 * field.w as i64));
        }
    }
    s
}

impl fmt::Display for CMValueReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "h = {}", self.h)?;
        writeln!(f, "degree = {}", self.degree)?;
        writeln!(f, "vol_kt = {}{}", fmt_rational(&self.vol_kt), if self.vol_kt_overridden { " (override)" } else { "" })?;
        writeln!(f, "phi_so_u = {}", self.phi.so_u)?;
        writeln!(f, "phi_cycle_sum = {}", self.phi.cycle_sum)?;
        writeln!(f, "c00 = {}", fmt_rational(&self.c00))?;
        writeln!(f, "rational_part = {}", self.rational_part)?;
        writeln!(f, "rat = {}", self.rational_part.to_power_string())?;
        writeln!(f, "kzero_coeff = {}", fmt_rational(&self.kzero_coeff))?;
        writeln!(f, "transcendental_exponent = {}", fmt_rational(&self.transcendental_exponent))?;
        writeln!(f, "meets_divisor = {}", self.meets_divisor)?;
        match self.exponents_sign_definite {
            Some(b) => writeln!(f, "exponents_sign_definite = {b}")?,
            None => writeln!(f, "exponents_sign_definite = n/a")?,
        }
        if let Some(n) = &self.numeric {
            let k = n.digits;
            writeln!(f, "digits = {k}")?;
            writeln!(f, "log_value = {}", n.log_value.to_decimal(k))?;
            writeln!(f, "rational_part_value = {}", n.rational_part.to_decimal(k))?;
            writeln!(f, "k0 = {}", n.k0.to_decimal(k))?;
            writeln!(f, "base_log = {}", n.base_log.to_decimal(k))?;
            writeln!(f, "base_log_direct = {}", n.base_log_direct.to_decimal(k))?;
            writeln!(f, "base_log_chowla_selberg = {}", n.base_log_chowla_selberg.to_decimal(k))?;
            writeln!(f, "base_log_literal = {}", n.base_log_literal.to_decimal(k))?;
            writeln!(f, "routes_agree = {}", n.routes_agree)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportCheck {
    pub ok: bool,
    pub violations: Vec<u64>,
}

/// Every prime of rat is ramified, or inert with p ≤ d·m_max(F).
pub fn check_prime_support_log(rational_part: &FactoredLog, field: &QuadField, m_max: &Rational) -> SupportCheck {
    let bound = ri(field.d as i64) * m_max;
    let violations: Vec<u64> = rational_part
        .support()
        .into_iter()
        .filter(|&p| match field.splitting(p) {
            SplittingType::Ramified => false,
            SplittingType::Inert => ri(p as i64) > bound,
            SplittingType::Split => true,
        })
        .collect();
    SupportCheck { ok: violations.is_empty(), violations }
}

pub fn check_prime_support(report: &CMValueReport, field: &QuadField, f: &FourierForm) -> SupportCheck {
    check_prime_support_log(&report.rational_part, field, &f.m_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kappa::kappa_at;
    use crate::lattice::{IdealLattice, IdealSpec, LatticeFile, PosLattice};
    use crate::quadfield::make_field;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn d7_unit() -> SplitLattice {
        SplitLattice::ideal_only(IdealLattice::unit(&make_field(7).unwrap()))
    }

    fn split_rank1(d: u64) -> SplitLattice {
        let field = make_field(d).unwrap();
        SplitLattice::new(PosLattice::new(vec![vec![ri(2)]]).unwrap(), IdealLattice::unit(&field), &[]).unwrap()
    }

    fn glued7() -> SplitLattice {
        LatticeFile::parse("d = 7\nideal = unit\nrank = 1\ngram = 14\nglue = 1/7 1/7 5/7\n").unwrap().build().unwrap()
    }

    fn stub(d: u64) -> FourierForm {
        let mut f = FourierForm::new(d, "unit");
        f.set(0, ri(-1), ri(1));
        f
    }

    #[test]
    fn desk_instance_d7() {
        let sl = d7_unit();
        let phi = phi_average(&stub(7), &sl, None).unwrap();
        assert_eq!(phi.so_u.to_string(), "-4*log(7)");
        assert_eq!(phi.sum.to_string(), "-2*log(7)");
        assert_eq!(phi.vol_kt, r(2, 1));
        assert_eq!(phi.cycle_sum.to_string(), "-4*log(7)");
        let rep = log_psi_product(&stub(7), &sl, None).unwrap();
        assert_eq!(rep.rational_part.support(), vec![7]);
        assert_eq!(rep.rational_part.coeff(7), ri(2));
        assert!(rep.is_rational());
        assert_eq!(rep.factored_rational().unwrap(), "7^(2/1)");
        assert_eq!(rep.degree, 2);
        assert!(!rep.meets_divisor);
        assert!(check_prime_support(&rep, sl.field(), &stub(7)).ok);
    }

    #[test]
    fn constant_term_is_symbolic() {
        let sl = d7_unit();
        let mut f = stub(7);
        f.set(0, ri(0), ri(3));
        let phi = phi_average(&f, &sl, None).unwrap();
        assert_eq!(phi.so_u.kzero_multiple, ri(6));
        assert_eq!(phi.so_u.log_part.coeff(7), ri(-4));
        let rep = log_psi_product(&f, &sl, None).unwrap();
        assert_eq!(rep.c00, ri(3));
        assert_eq!(rep.transcendental_exponent, ri(3));
        assert_eq!(rep.kzero_coeff, ri(-3));
        assert!(rep.factored_rational().is_none());
    }

    #[test]
    fn empty_principal_part_is_zero() {
        let sl = d7_unit();
        let f = FourierForm::new(7, "unit");
        assert!(phi_average(&f, &sl, None).unwrap().so_u.is_zero());
        let rep = log_psi_product(&f, &sl, None).unwrap();
        assert!(rep.rational_part.is_zero());
        assert!(rep.c00.is_zero());
    }

    #[test]
    fn contraction_examples() {
        let sl = split_rank1(7);
        let f = stub(7);
        let t = contraction_coeffs(&f, &sl, &ri(-1), &ri(0)).unwrap();
        // x ∈ ℤ with x² = 1 gives d(1) = 2
        assert_eq!(t.get(&(0, 0, ri(0))), Some(&ri(2)));
        assert_eq!(t.get(&(0, 0, ri(-1))), Some(&ri(1)));
        assert_eq!(c00_contraction(&f, &sl).unwrap(), ri(2));
        assert_eq!(c00_brute_force(&f, &sl).unwrap(), ri(2));
        let n0 = contraction_coeffs(&f, &d7_unit(), &ri(-5), &ri(0)).unwrap();
        assert_eq!(n0.len(), 1);
        assert_eq!(c00_contraction(&f, &d7_unit()).unwrap(), ri(0));
        let mut g = f.clone();
        g.set(0, ri(0), ri(5));
        assert_eq!(c00_contraction(&g, &d7_unit()).unwrap(), ri(5));
    }

    #[test]
    fn kappa_eta_rank1() {
        let sl = split_rank1(7);
        let cache = KappaCache::new();
        let k = kappa_eta(&sl, 0, &ri(1), &cache).unwrap();
        let field = make_field(7).unwrap();
        let lat = IdealLattice::unit(&field);
        let mut want = kappa_at(&lat, &lat.cosets()[0], &ri(1)).unwrap();
        want.add_scaled(ri(2), &KappaValue::kzero());
        assert_eq!(k, want);
        assert!(kappa_eta(&sl, 0, &ri(-1), &cache).unwrap().is_zero());
        // the cycle meets Z(1, 0) through x = ±1
        let rep = log_psi_product(&stub(7), &sl, None).unwrap();
        assert!(rep.meets_divisor);
        assert_eq!(rep.c00, ri(2));
    }

    #[test]
    fn support_check_examples() {
        let field = make_field(7).unwrap();
        assert!(check_prime_support_log(&FactoredLog::log_prime(7, ri(4)), &field, &ri(1)).ok);
        assert!(check_prime_support_log(&FactoredLog::log_prime(3, ri(-4)), &field, &ri(1)).ok);
        assert!(check_prime_support_log(&FactoredLog::log_prime(5, ri(1)), &field, &r(5, 7)).ok);
        let bad = check_prime_support_log(&FactoredLog::log_prime(5, ri(1)), &field, &r(4, 7));
        assert_eq!(bad.violations, vec![5]);
        assert!(!check_prime_support_log(&FactoredLog::log_prime(2, ri(1)), &field, &ri(9)).ok);
    }

    #[test]
    fn report_numeric_routes() {
        let sl = d7_unit();
        let mut f = stub(7);
        f.set(0, ri(0), ri(1));
        let mut rep = log_psi_product(&f, &sl, None).unwrap();
        rep.evaluate(sl.field(), 40).unwrap();
        let n = rep.numeric.as_ref().unwrap();
        assert!(n.routes_agree);
        assert!((n.k0.to_f64() - 0.255_235_978_291_821).abs() < 1e-12);
        let want = 2.0 * 7f64.ln() - 0.255_235_978_291_821;
        assert!((n.log_value.to_f64() - want).abs() < 1e-12);
        let gap = n.base_log_literal.to_f64() - n.base_log.to_f64();
        assert!((gap - (0.577_215_664_901_532_9 - 2.0 * 7f64.ln())).abs() < 1e-12);
        assert_eq!(
            chowla_selberg_display(sl.field()),
            "(4*7*pi)^(-1) * exp(-1*gamma) * Gamma(1/7)^(2) * Gamma(2/7)^(2) * Gamma(3/7)^(-2) * Gamma(4/7)^(2) * Gamma(5/7)^(-2) * Gamma(6/7)^(-2)"
        );
    }

    #[test]
    fn vol_override_and_errors() {
        let sl = d7_unit();
        let rep = log_psi_product(&stub(7), &sl, Some(ri(1))).unwrap();
        assert!(rep.vol_kt_overridden);
        assert_eq!(rep.rational_part.coeff(7), ri(4));
        assert!(phi_average(&stub(7), &sl, Some(ri(0))).is_err());
        assert!(phi_average(&stub(11), &sl, None).is_err());
    }

    #[test]
    fn glued_c00_two_paths() {
        let sl = glued7();
        for eta in 0..sl.classes().len() {
            let q = sl.class(eta).unwrap().q_mod_one;
            let mut f = FourierForm::new(7, "glued");
            for k in 1..4 {
                f.set(eta, ri(-k) - q + ri(if q.is_zero() { 0 } else { 1 }), ri(k));
            }
            f.validate(&sl).unwrap();
            assert_eq!(c00_contraction(&f, &sl).unwrap(), c00_brute_force(&f, &sl).unwrap());
        }
    }

    fn arb_form(sl: SplitLattice) -> impl Strategy<Value = (SplitLattice, FourierForm)> {
        let n = sl.classes().len();
        proptest::collection::vec((0..n, 0i64..4, -3i64..4), 1..5).prop_map(move |entries| {
            let mut f = FourierForm::new(sl.field().d, "test");
            for (eta, k, c) in entries {
                let q = sl.class(eta).unwrap().q_mod_one;
                // m ≤ 0 with m ≡ −Q(η) mod 1
                let m = -q - ri(k);
                f.set(eta, m, ri(c));
            }
            (sl.clone(), f)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn n0_reduction((sl, f) in arb_form(d7_unit())) {
            let phi = phi_average(&f, &sl, None).unwrap();
            let lat = &sl.minus;
            let mut want = KappaValue::zero();
            for (mu, m, c) in f.nonpositive_terms() {
                want.add_scaled(c, &kappa_at(lat, lat.coset(mu).unwrap(), &-m).unwrap());
            }
            prop_assert_eq!(phi.so_u, want.scale(ri(2)));
        }

        #[test]
        fn linearity((sl, f) in arb_form(glued7()), g_seed in 0usize..1000) {
            let mut g = FourierForm::new(7, "test");
            for (i, (&(eta, m), c)) in f.coeffs.iter().enumerate() {
                g.set(eta, m, c * ri(((g_seed + i) % 5) as i64 - 2));
            }
            let mut sum = f.clone();
            for (&(eta, m), c) in &g.coeffs {
                let v = sum.get(eta, &m) + c * ri(3);
                sum.set(eta, m, v);
            }
            let a = phi_average(&f, &sl, None).unwrap().so_u;
            let b = phi_average(&g, &sl, None).unwrap().so_u;
            let mut want = a.clone();
            want.add_scaled(ri(3), &b);
            prop_assert_eq!(phi_average(&sum, &sl, None).unwrap().so_u, want);
        }

        #[test]
        fn enumeration_margin((sl, f) in arb_form(glued7()), margin in 0i64..3) {
            let cache = KappaCache::new();
            for (eta, m, _) in f.nonpositive_terms() {
                let a = kappa_eta(&sl, eta, &-m, &cache).unwrap();
                let b = kappa_eta_bounded(&sl, eta, &-m, &(-m + ri(margin)), &cache).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn c00_paths_and_integrality((sl, f) in arb_form(glued7())) {
            let c00 = c00_contraction(&f, &sl).unwrap();
            prop_assert_eq!(c00, c00_brute_force(&f, &sl).unwrap());
            let table = contraction_coeffs(&f, &sl, &ri(-10), &ri(0)).unwrap();
            let mut col = Rational::zero();
            for ((eta, lam, m), c) in &table {
                prop_assert!(c.is_integer());
                let (_, minus) = sl.decompose(*eta).unwrap()[*lam].clone();
                if m.is_zero() && sl.minus.coset(minus).unwrap().is_zero() {
                    col += c;
                }
            }
            prop_assert_eq!(col, c00);
            let rep = log_psi_product(&f, &sl, None).unwrap();
            prop_assert!(check_prime_support(&rep, sl.field(), &f).ok);
        }

        #[test]
        fn non_principal_support(k in 0i64..3, c in 1i64..4) {
            let field = make_field(23).unwrap();
            let lat = IdealLattice::new(&field, &IdealSpec::Generated { n: 2, gen: [0, 1] }).unwrap();
            let sl = SplitLattice::ideal_only(lat);
            let mut f = FourierForm::new(23, "gen 2;0,1");
            for class in sl.classes().iter().take(5) {
                f.set(class.label, -class.q_mod_one - ri(k), ri(c));
            }
            let rep = log_psi_product(&f, &sl, None).unwrap();
            prop_assert!(check_prime_support(&rep, &field, &f).ok);
            prop_assert_eq!(rep.degree, 6);
        }
    }
}
