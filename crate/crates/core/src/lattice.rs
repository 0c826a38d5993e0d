//! Lattices on both sides of V = V₊ ⊕ U.
//!
//! * [`IdealLattice`]: an integral ideal 𝔞 ⊂ O_k with Q(x) = −N(x)/N𝔞; its
//!   dual is D⁻¹𝔞 and D⁻¹𝔞/𝔞 is cyclic of order d.
//! * [`PosLattice`]: an even positive-definite lattice with vector counts.
//! * [`GlueCore`] / [`SplitLattice`]: L = L₊ ⊕ L₋ + Σ ℤ·g for glue vectors
//!   g ∈ L₊^∨ ⊕ L₋^∨, with the decomposition of L^∨/L into (η₊, η₋) parts.
//!
//! Elements of k are coordinate pairs [x, y] meaning x + yω, ω = (1+√−d)/2.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{frac, parse_rational, valuation, Rational};
use crate::error::{Error, Result};
use crate::quadfield::{make_field, QuadField};

pub type Elt = [Rational; 2];
pub type Matrix = Vec<Vec<Rational>>;

fn ri(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// (1 + d)/4, the norm of ω.
fn norm_omega(d: u64) -> i64 {
    (1 + d as i64) / 4
}

pub fn elt_norm(d: u64, a: &Elt) -> Rational {
    a[0] * a[0] + a[0] * a[1] + a[1] * a[1] * ri(norm_omega(d))
}

/// Tr(a·b̄)
pub fn elt_trace_pair(d: u64, a: &Elt, b: &Elt) -> Rational {
    ri(2) * a[0] * b[0] + a[0] * b[1] + a[1] * b[0] + ri(2 * norm_omega(d)) * a[1] * b[1]
}

pub fn elt_mul(d: u64, a: &Elt, b: &Elt) -> Elt {
    let w2 = ri(norm_omega(d));
    [a[0] * b[0] - a[1] * b[1] * w2, a[0] * b[1] + a[1] * b[0] + a[1] * b[1]]
}

fn frac_vec(v: &[Rational]) -> Vec<Rational> {
    v.iter().map(frac).collect()
}

fn add_mod_one(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| frac(&(x + y))).collect()
}

fn is_integral_vec(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_integer())
}

pub fn mat_vec(m: &Matrix, v: &[Rational]) -> Vec<Rational> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn bilinear(g: &Matrix, u: &[Rational], v: &[Rational]) -> Rational {
    u.iter().zip(mat_vec(g, v)).map(|(a, b)| a * b).sum()
}

/// Inverse by Gauss-Jordan elimination; `None` when singular.
pub fn mat_inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(pivot_row) {
                    *x -= f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Closure in (ℚ/ℤ)^n of the given generators; zero first, then sorted.
pub fn group_closure(gens: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let zero = vec![Rational::zero(); n];
    let mut seen: HashSet<Vec<Rational>> = HashSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = add_mod_one(&x, g);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    out
}

/// Discriminant group G⁻¹ℤⁿ/ℤⁿ of a nondegenerate Gram matrix.
pub fn discriminant_group(gram: &Matrix) -> Result<Vec<Vec<Rational>>> {
    let inv = mat_inverse(gram).ok_or_else(|| Error::InvalidGram("singular Gram matrix".into()))?;
    let n = gram.len();
    let gens: Vec<Vec<Rational>> = (0..n).map(|j| frac_vec(&(0..n).map(|i| inv[i][j]).collect::<Vec<_>>())).collect();
    Ok(group_closure(&gens, n))
}

fn check_even_symmetric(gram: &Matrix, what: &str) -> Result<()> {
    let n = gram.len();
    for (i, row) in gram.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidGram(format!("{what}: row {i} has {} entries, expected {n}", row.len())));
        }
        for j in 0..n {
            if row[j] != gram[j][i] {
                return Err(Error::InvalidGram(format!("{what}: not symmetric at ({i},{j})")));
            }
            if !row[j].is_integer() {
                return Err(Error::InvalidGram(format!("{what}: entry ({i},{j}) is not integral")));
            }
        }
        if (row[i].to_integer() % 2) != 0 {
            return Err(Error::InvalidGram(format!("{what}: diagonal entry {i} is odd")));
        }
    }
    Ok(())
}

/// Ideal data as given by a user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdealSpec {
    Unit,
    /// ℤ-basis of the ideal in {1, ω} coordinates.
    Basis([[i64; 2]; 2]),
    /// n·O_k + (x + yω)·O_k
    Generated { n: i64, gen: [i64; 2] },
}

impl fmt::Display for IdealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdealSpec::Unit => write!(f, "unit"),
            IdealSpec::Basis(b) => write!(f, "basis {},{};{},{}", b[0][0], b[0][1], b[1][0], b[1][1]),
            IdealSpec::Generated { n, gen } => write!(f, "gen {};{},{}", n, gen[0], gen[1]),
        }
    }
}

fn parse_pair(s: &str) -> Result<[i64; 2]> {
    let v: Vec<&str> = s.split(',').map(str::trim).collect();
    match v.as_slice() {
        [x, y] => Ok([
            x.parse().map_err(|_| Error::Parse(format!("bad integer {x:?}")))?,
            y.parse().map_err(|_| Error::Parse(format!("bad integer {y:?}")))?,
        ]),
        _ => Err(Error::Parse(format!("expected x,y but found {s:?}"))),
    }
}

impl FromStr for IdealSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "unit" {
            return Ok(IdealSpec::Unit);
        }
        if let Some(rest) = s.strip_prefix("basis") {
            let parts: Vec<&str> = rest.split(';').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("ideal basis needs two vectors: {s:?}")));
            }
            return Ok(IdealSpec::Basis([parse_pair(parts[0])?, parse_pair(parts[1])?]));
        }
        if let Some(rest) = s.strip_prefix("gen") {
            let (n, g) = rest
                .split_once(';')
                .ok_or_else(|| Error::Parse(format!("expected 'gen n;x,y' but found {s:?}")))?;
            let n = n.trim().parse().map_err(|_| Error::Parse(format!("bad integer in {s:?}")))?;
            return Ok(IdealSpec::Generated { n, gen: parse_pair(g)? });
        }
        Err(Error::Parse(format!("unknown ideal spec {s:?}")))
    }
}

/// Hermite basis [(a, 0), (b, c)] with 0 ≤ b < a of the span of `vs`.
fn hnf2(vs: &[[i64; 2]]) -> Option<[[i64; 2]; 2]> {
    let mut a: i64 = 0;
    let mut p: Option<[i64; 2]> = None;
    for v in vs {
        if v[1] == 0 {
            a = a.gcd(&v[0]);
            continue;
        }
        match p {
            None => p = Some(if v[1] < 0 { [-v[0], -v[1]] } else { *v }),
            Some(q) => {
                let e = q[1].extended_gcd(&v[1]);
                let g = e.gcd;
                let np = [e.x * q[0] + e.y * v[0], g];
                // this combination kills the ω coordinate
                let x = (v[1] / g) * q[0] - (q[1] / g) * v[0];
                a = a.gcd(&x);
                p = Some(if np[1] < 0 { [-np[0], -np[1]] } else { np });
            }
        }
    }
    let p = p?;
    if a == 0 {
        return None;
    }
    Some([[a, 0], [p[0].rem_euclid(a), p[1]]])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPart {
    pub q: u64,
    /// μ_q = 0
    pub zero: bool,
    /// Q(μ_q) as a fraction with denominator dividing q, in [0, 1).
    pub q_local: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualCoset {
    pub label: usize,
    /// Representative in {1, ω} coordinates.
    pub rep: Elt,
    /// Fractional coordinates in the ideal basis.
    pub coords: [Rational; 2],
    pub q_mod_one: Rational,
    pub local: Vec<LocalPart>,
}

impl DualCoset {
    pub fn is_zero(&self) -> bool {
        self.label == 0
    }

    pub fn local_zero(&self, q: u64) -> bool {
        self.local.iter().any(|l| l.q == q && l.zero)
    }

    /// t ∈ Q(μ_q) + ℤ_q at every ramified q.
    pub fn char_condition(&self, t: &Rational) -> bool {
        let diff = t - self.q_mod_one;
        diff.is_zero() || self.local.iter().all(|l| valuation(&diff, l.q).map(|v| v >= 0).unwrap_or(true))
    }
}

#[derive(Clone, Debug)]
pub struct IdealLattice {
    pub field: QuadField,
    pub spec: IdealSpec,
    /// Hermite ℤ-basis [(a, 0), (b, c)].
    pub basis: [[i64; 2]; 2],
    pub norm: i64,
    /// Gram matrix of (x, y) = −Tr(x ȳ)/N𝔞 in the ideal basis.
    pub gram: Matrix,
    /// β ∈ 𝔞 with label k ↔ k·β/√−d.
    pub beta: Elt,
    cosets: Vec<DualCoset>,
    index: HashMap<[Rational; 2], usize>,
}

impl IdealLattice {
    pub fn new(field: &QuadField, spec: &IdealSpec) -> Result<Self> {
        let d = field.d;
        let w2 = norm_omega(d);
        let gens: Vec<[i64; 2]> = match spec {
            IdealSpec::Unit => vec![[1, 0], [0, 1]],
            IdealSpec::Basis(b) => {
                if b[0][0] * b[1][1] - b[0][1] * b[1][0] == 0 {
                    return Err(Error::NotAnIdeal("basis vectors are dependent".into()));
                }
                b.to_vec()
            }
            IdealSpec::Generated { n, gen } => {
                // gen·ω = −y(1+d)/4 + (x + y)ω
                vec![[*n, 0], [0, *n], *gen, [-gen[1] * w2, gen[0] + gen[1]]]
            }
        };
        let basis = hnf2(&gens).ok_or_else(|| Error::NotAnIdeal(format!("{spec} does not span a rank-2 lattice")))?;
        if let IdealSpec::Basis(b) = spec {
            let det = (b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs();
            if det != basis[0][0] * basis[1][1] {
                return Err(Error::NotAnIdeal("vectors do not form a basis of their span".into()));
            }
        }
        let [[a, _], [b, c]] = basis;
        let contains = |v: [i64; 2]| v[1] % c == 0 && (v[0] - (v[1] / c) * b) % a == 0;
        // ω·a and ω·(b + cω)
        if !contains([0, a]) || !contains([-c * w2, b + c]) {
            return Err(Error::NotAnIdeal(format!("{spec} is not stable under multiplication by ω")));
        }
        let norm = a * c;
        let e: [Elt; 2] = [[ri(a), ri(0)], [ri(b), ri(c)]];
        let gram: Matrix = (0..2)
            .map(|i| (0..2).map(|j| -elt_trace_pair(d, &e[i], &e[j]) / ri(norm)).collect())
            .collect();

        let candidates = [[1, 0], [0, 1], [1, 1], [1, 2], [2, 1], [1, 3], [3, 1], [1, -1], [1, -2]];
        let beta = candidates
            .iter()
            .map(|&[s, t]| [e[0][0] * ri(s) + e[1][0] * ri(t), e[0][1] * ri(s) + e[1][1] * ri(t)])
            .find(|x| (elt_norm(d, x) / ri(norm)).to_integer().gcd(&(d as i64)) == 1)
            .ok_or_else(|| Error::NotAnIdeal("no generator of the dual quotient found".into()))?;

        let mut lat = Self { field: field.clone(), spec: spec.clone(), basis, norm, gram, beta, cosets: vec![], index: HashMap::new() };
        lat.build_cosets()?;
        Ok(lat)
    }

    pub fn unit(field: &QuadField) -> Self {
        Self::new(field, &IdealSpec::Unit).expect("O_k is an ideal")
    }

    pub fn d(&self) -> u64 {
        self.field.d
    }

    /// Ideal-basis coordinates of an element of k.
    pub fn to_coords(&self, x: &Elt) -> [Rational; 2] {
        let [[a, _], [b, c]] = self.basis;
        let u2 = x[1] / ri(c);
        let u1 = (x[0] - u2 * ri(b)) / ri(a);
        [u1, u2]
    }

    pub fn from_coords(&self, u: &[Rational]) -> Elt {
        let [[a, _], [b, c]] = self.basis;
        [u[0] * ri(a) + u[1] * ri(b), u[1] * ri(c)]
    }

    pub fn q_form(&self, x: &Elt) -> Rational {
        -elt_norm(self.d(), x) / ri(self.norm)
    }

    fn build_cosets(&mut self) -> Result<()> {
        let d = self.d();
        // 1/√−d = (1 − 2ω)/d
        let inv_root: Elt = [Rational::new(1, d as i64), Rational::new(-2, d as i64)];
        let gen = elt_mul(d, &self.beta, &inv_root);
        let mut cosets = Vec::with_capacity(d as usize);
        let mut index = HashMap::new();
        for k in 0..d as i64 {
            let x = [gen[0] * ri(k), gen[1] * ri(k)];
            let u = self.to_coords(&x);
            let coords = [frac(&u[0]), frac(&u[1])];
            if !is_integral_vec(&mat_vec(&self.gram, &coords)) {
                return Err(Error::NotAnIdeal("dual generator fails to pair integrally".into()));
            }
            if index.insert(coords, k as usize).is_some() {
                return Err(Error::NotAnIdeal("dual quotient is not cyclic of order d".into()));
            }
            let rep = self.from_coords(&coords);
            let q_mod_one = frac(&self.q_form(&rep));
            let local = self
                .field
                .ramified
                .iter()
                .map(|&q| {
                    let cofactor = d / q;
                    // q-part of Q(μ) mod 1 via partial fractions over d = q·cofactor
                    let num = (q_mod_one * ri(d as i64)).to_integer();
                    let inv = (cofactor as i64).extended_gcd(&(q as i64)).x;
                    let x = (num * inv).rem_euclid(q as i64);
                    LocalPart { q, zero: k % q as i64 == 0, q_local: Rational::new(x, q as i64) }
                })
                .collect();
            cosets.push(DualCoset { label: k as usize, rep, coords, q_mod_one, local });
        }
        self.cosets = cosets;
        self.index = index;
        Ok(())
    }

    pub fn cosets(&self) -> &[DualCoset] {
        &self.cosets
    }

    pub fn coset(&self, label: usize) -> Result<&DualCoset> {
        self.cosets.get(label).ok_or(Error::UnknownLabel(label))
    }

    /// Label of the coset containing the dual vector with these ideal coordinates.
    pub fn label_of_coords(&self, u: &[Rational]) -> Result<usize> {
        let key = [frac(&u[0]), frac(&u[1])];
        self.index
            .get(&key)
            .copied()
            .ok_or_else(|| Error::InconsistentEmbedding(format!("({}, {}) is not in the dual lattice", u[0], u[1])))
    }

    pub fn label_of_elt(&self, x: &Elt) -> Result<usize> {
        self.label_of_coords(&self.to_coords(x))
    }

    pub fn contains(&self, x: &Elt) -> bool {
        is_integral_vec(&self.to_coords(x))
    }
}

pub fn enumerate_dual_cosets(lat: &IdealLattice) -> &[DualCoset] {
    lat.cosets()
}

pub fn q_of_coset(mu: &DualCoset) -> Rational {
    mu.q_mod_one
}

pub fn make_ideal_lattice(field: &QuadField, spec: &IdealSpec) -> Result<IdealLattice> {
    IdealLattice::new(field, spec)
}

/// Even positive-definite lattice L₊ given by its Gram matrix.
#[derive(Clone, Debug)]
pub struct PosLattice {
    pub gram: Matrix,
    pub dual_cosets: Vec<Vec<Rational>>,
    /// Fincke-Pohst coefficients of Q = Σ q_ii (x_i + Σ_{j>i} q_ij x_j)².
    fp: Vec<Vec<f64>>,
}

impl PosLattice {
    pub fn new(gram: Matrix) -> Result<Self> {
        check_even_symmetric(&gram, "positive lattice")?;
        let n = gram.len();
        // leading minors by exact elimination
        let mut a = gram.clone();
        for k in 0..n {
            if a[k][k] <= Rational::zero() {
                return Err(Error::InvalidGram(format!("not positive definite (minor {})", k + 1)));
            }
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                let (top, rest) = a.split_at_mut(i);
                for (x, v) in rest[0][k..].iter_mut().zip(&top[k][k..]) {
                    *x -= f * v;
                }
            }
        }
        let half: Vec<Vec<f64>> = gram.iter().map(|r| r.iter().map(|x| x.to_f64().unwrap_or(0.0) / 2.0).collect()).collect();
        let mut q = half.clone();
        for i in 0..n {
            for j in i + 1..n {
                q[j][i] = q[i][j];
                q[i][j] /= q[i][i];
            }
            for k in i + 1..n {
                for l in k..n {
                    q[k][l] -= q[k][i] * q[i][l];
                }
            }
        }
        let dual_cosets = if n == 0 { vec![vec![]] } else { discriminant_group(&gram)? };
        Ok(Self { gram, dual_cosets, fp: q })
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn q_form(&self, x: &[Rational]) -> Rational {
        bilinear(&self.gram, x, x) / ri(2)
    }

    /// Number of vectors of each norm Q(x) ≤ bound in coset + L₊.
    pub fn vectors_by_norm(&self, coset: &[Rational], bound: &Rational) -> BTreeMap<Rational, u64> {
        let mut out = BTreeMap::new();
        if *bound < Rational::zero() {
            return out;
        }
        let n = self.rank();
        if n == 0 {
            out.insert(Rational::zero(), 1);
            return out;
        }
        let offset = frac_vec(coset);
        let b = bound.to_f64().unwrap_or(f64::MAX) * (1.0 + 1e-9) + 1e-9;
        let mut x = vec![Rational::zero(); n];
        let mut xf = vec![0.0; n];
        self.enumerate(n - 1, b, &offset, &mut x, &mut xf, bound, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        i: usize,
        rem: f64,
        offset: &[Rational],
        x: &mut Vec<Rational>,
        xf: &mut Vec<f64>,
        bound: &Rational,
        out: &mut BTreeMap<Rational, u64>,
    ) {
        let n = self.rank();
        let center: f64 = -(i + 1..n).map(|j| self.fp[i][j] * xf[j]).sum::<f64>();
        let radius = (rem.max(0.0) / self.fp[i][i]).sqrt();
        let off = offset[i].to_f64().unwrap_or(0.0);
        let lo = (center - radius - off - 1e-7).ceil() as i64;
        let hi = (center + radius - off + 1e-7).floor() as i64;
        for z in lo..=hi {
            x[i] = offset[i] + ri(z);
            xf[i] = off + z as f64;
            let t = xf[i] - center;
            let used = self.fp[i][i] * t * t;
            if i == 0 {
                let q = self.q_form(x);
                if q <= *bound {
                    *out.entry(q).or_insert(0) += 1;
                }
            } else {
                self.enumerate(i - 1, rem - used + 1e-9, offset, x, xf, bound, out);
            }
        }
    }

    /// #{x ∈ coset + L₊ : Q(x) = m}
    pub fn count_vectors(&self, coset: &[Rational], m: &Rational) -> u64 {
        self.vectors_by_norm(coset, m).get(m).copied().unwrap_or(0)
    }
}

pub fn count_vectors(pl: &PosLattice, coset: &[Rational], m: &Rational) -> u64 {
    pl.count_vectors(coset, m)
}

/// One class η ∈ L^∨/L with its components in A₊ × A₋.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualClass {
    pub label: usize,
    pub plus: Vec<Rational>,
    pub minus: Vec<Rational>,
    pub q_mod_one: Rational,
}

/// Glue decomposition of L = L₊ ⊕ L₋ + Σ ℤ·g, independent of what L₋ is.
#[derive(Clone, Debug)]
pub struct GlueCore {
    pub plus_gram: Matrix,
    pub minus_gram: Matrix,
    /// L/(L₊ + L₋), zero first.
    pub glue: Vec<(Vec<Rational>, Vec<Rational>)>,
    /// L^∨/L, indexed by label.
    pub classes: Vec<DualClass>,
}

impl GlueCore {
    /// `minus_key` orders A₋ for labeling; it must send 0 to the least key.
    pub fn new<K>(plus_gram: Matrix, minus_gram: Matrix, glue_gens: &[Vec<Rational>], minus_key: K) -> Result<Self>
    where
        K: Fn(&[Rational]) -> Vec<Rational>,
    {
        let n = plus_gram.len();
        let r = minus_gram.len();
        let bad = |m: String| Error::InconsistentEmbedding(m);
        for g in glue_gens {
            if g.len() != n + r {
                return Err(bad(format!("glue vector has {} coordinates, expected {}", g.len(), n + r)));
            }
            if !is_integral_vec(&mat_vec(&plus_gram, &g[..n])) || !is_integral_vec(&mat_vec(&minus_gram, &g[n..])) {
                return Err(bad("glue vector is not in L₊^∨ ⊕ L₋^∨".into()));
            }
        }
        let split = |v: &[Rational]| (v[..n].to_vec(), v[n..].to_vec());
        let pair = |u: &[Rational], v: &[Rational]| bilinear(&plus_gram, &u[..n], &v[..n]) + bilinear(&minus_gram, &u[n..], &v[n..]);
        for (i, g) in glue_gens.iter().enumerate() {
            if !(pair(g, g) / ri(2)).is_integer() {
                return Err(bad(format!("glue vector {i} has non-integral norm")));
            }
            for h in &glue_gens[i + 1..] {
                if !pair(g, h).is_integer() {
                    return Err(bad("glue vectors pair non-integrally".into()));
                }
            }
        }
        let gens: Vec<Vec<Rational>> = glue_gens.iter().map(|g| frac_vec(g)).collect();
        let group = group_closure(&gens, n + r);
        for g in &group {
            let (p, m) = split(g);
            let pz = p.iter().all(Zero::is_zero);
            let mz = m.iter().all(Zero::is_zero);
            if pz != mz {
                return Err(bad("glue meets V₊ or U in more than L₊ or L₋".into()));
            }
        }

        let a_plus = if n == 0 { vec![vec![]] } else { discriminant_group(&plus_gram)? };
        let a_minus = if r == 0 { vec![vec![]] } else { discriminant_group(&minus_gram)? };
        let key = |v: &[Rational]| {
            let mut k = minus_key(&v[n..]);
            k.extend_from_slice(&v[..n]);
            k
        };
        let mut reps: BTreeMap<Vec<Rational>, Vec<Rational>> = BTreeMap::new();
        let mut seen: HashSet<Vec<Rational>> = HashSet::new();
        for p in &a_plus {
            for m in &a_minus {
                let mut v = p.clone();
                v.extend_from_slice(m);
                if seen.contains(&v) || !gens.iter().all(|g| pair(&v, g).is_integer()) {
                    continue;
                }
                let orbit: Vec<Vec<Rational>> = group.iter().map(|g| add_mod_one(&v, g)).collect();
                let rep = orbit.iter().min_by_key(|w| key(w)).cloned().unwrap_or_default();
                seen.extend(orbit);
                reps.insert(key(&rep), rep);
            }
        }
        let classes = reps
            .into_values()
            .enumerate()
            .map(|(label, v)| {
                let q = frac(&(pair(&v, &v) / ri(2)));
                let (plus, minus) = split(&v);
                DualClass { label, plus, minus, q_mod_one: q }
            })
            .collect();
        let glue = group.iter().map(|g| split(g)).collect();
        Ok(Self { plus_gram, minus_gram, glue, classes })
    }

    pub fn class(&self, label: usize) -> Result<&DualClass> {
        self.classes.get(label).ok_or(Error::UnknownLabel(label))
    }

    /// (η₊ + λ₊, η₋ + λ₋) for every λ ∈ L/(L₊ + L₋).
    pub fn decompose(&self, label: usize) -> Result<Vec<(Vec<Rational>, Vec<Rational>)>> {
        let eta = self.class(label)?;
        Ok(self.glue.iter().map(|(lp, lm)| (add_mod_one(&eta.plus, lp), add_mod_one(&eta.minus, lm))).collect())
    }
}

/// L ⊂ V₊ ⊕ U with L ∩ V₊ = L₊ even positive definite and L ∩ U = 𝔞.
#[derive(Clone, Debug)]
pub struct SplitLattice {
    pub plus: PosLattice,
    pub minus: IdealLattice,
    pub core: GlueCore,
}

impl SplitLattice {
    pub fn new(plus: PosLattice, minus: IdealLattice, glue_gens: &[Vec<Rational>]) -> Result<Self> {
        let probe = minus.clone();
        let core = GlueCore::new(plus.gram.clone(), minus.gram.clone(), glue_gens, |m| match probe.label_of_coords(m) {
            Ok(l) => vec![ri(l as i64)],
            Err(_) => m.to_vec(),
        })?;
        Ok(Self { plus, minus, core })
    }

    /// L = 𝔞 with no positive part.
    pub fn ideal_only(minus: IdealLattice) -> Self {
        let plus = PosLattice::new(vec![]).expect("rank 0");
        Self::new(plus, minus, &[]).expect("trivial glue")
    }

    pub fn field(&self) -> &QuadField {
        &self.minus.field
    }

    pub fn classes(&self) -> &[DualClass] {
        &self.core.classes
    }

    pub fn class(&self, label: usize) -> Result<&DualClass> {
        self.core.class(label)
    }

    /// For each λ: (plus coset η₊ + λ₊, label of the ideal coset η₋ + λ₋).
    pub fn decompose(&self, label: usize) -> Result<Vec<(Vec<Rational>, usize)>> {
        self.core
            .decompose(label)?
            .into_iter()
            .map(|(p, m)| Ok((p, self.minus.label_of_coords(&m)?)))
            .collect()
    }

    pub fn glue_index(&self) -> usize {
        self.core.glue.len()
    }
}

pub fn glue_group(plus: PosLattice, minus: IdealLattice, glue_gens: &[Vec<Rational>]) -> Result<SplitLattice> {
    SplitLattice::new(plus, minus, glue_gens)
}

/// Parsed lattice file.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFile {
    pub d: u64,
    pub ideal: IdealSpec,
    pub gram: Matrix,
    pub glue: Vec<Vec<Rational>>,
}

fn parse_row(s: &str) -> Result<Vec<Rational>> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(parse_rational).collect()
}

impl LatticeFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut ideal = IdealSpec::Unit;
        let mut rank: Option<usize> = None;
        let mut gram = Vec::new();
        let mut glue = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            let v = v.trim();
            match k.trim() {
                "d" => d = Some(v.parse().map_err(|_| Error::Parse(format!("line {}: bad d", no + 1)))?),
                "ideal" => ideal = v.parse()?,
                "rank" => rank = Some(v.parse().map_err(|_| Error::Parse(format!("line {}: bad rank", no + 1)))?),
                "gram" => gram.push(parse_row(v)?),
                "glue" => glue.push(parse_row(v)?),
                other => return Err(Error::Parse(format!("line {}: unknown key {other:?}", no + 1))),
            }
        }
        let d = d.ok_or_else(|| Error::Parse("missing d".into()))?;
        let rank = rank.unwrap_or(gram.len());
        if gram.len() != rank {
            return Err(Error::Parse(format!("rank {rank} but {} gram rows", gram.len())));
        }
        Ok(Self { d, ideal, gram, glue })
    }

    pub fn build(&self) -> Result<SplitLattice> {
        let field = make_field(self.d)?;
        let minus = IdealLattice::new(&field, &self.ideal)?;
        let plus = PosLattice::new(self.gram.clone())?;
        SplitLattice::new(plus, minus, &self.glue)
    }
}

impl fmt::Display for LatticeFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |r: &[Rational]| r.iter().map(crate::arith::fmt_rational).collect::<Vec<_>>().join(" ");
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "ideal = {}", self.ideal)?;
        writeln!(f, "rank = {}", self.gram.len())?;
        for r in &self.gram {
            writeln!(f, "gram = {}", row(r))?;
        }
        for g in &self.glue {
            writeln!(f, "glue = {}", row(g))?;
        }
        Ok(())
    }
}

/// |det| of an integral Gram matrix, i.e. the order of its discriminant group.
pub fn index_of(gram: &Matrix) -> Option<i64> {
    let n = gram.len();
    let mut a = gram.clone();
    let mut det = Rational::one();
    for k in 0..n {
        let piv = (k..n).find(|&r| !a[r][k].is_zero())?;
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            let (top, rest) = a.split_at_mut(i);
            for (x, v) in rest[0][k..].iter_mut().zip(&top[k][k..]) {
                *x -= f * v;
            }
        }
    }
    Some(det.abs().to_integer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn gram(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|row| row.iter().map(|&x| ri(x)).collect()).collect()
    }

    #[test]
    fn unit_ideal_d7() {
        let k = make_field(7).unwrap();
        let lat = IdealLattice::unit(&k);
        assert_eq!(lat.norm, 1);
        assert_eq!(lat.cosets().len(), 7);
        assert_eq!(lat.cosets().iter().filter(|c| c.local_zero(7)).count(), 1);
        assert!(lat.coset(0).unwrap().is_zero());
        // 1/√−7 has Q = −1/7
        assert_eq!(q_of_coset(lat.coset(1).unwrap()), r(6, 7));
        assert_eq!(index_of(&lat.gram), Some(7));
        for c in lat.cosets() {
            assert_eq!(7 % c.q_mod_one.denom(), 0);
        }
    }

    #[test]
    fn ideal_above_two() {
        let k = make_field(7).unwrap();
        let lat = IdealLattice::new(&k, &"gen 2;0,1".parse().unwrap()).unwrap();
        assert_eq!(lat.norm, 2);
        assert_eq!(lat.cosets().len(), 7);
        assert_eq!(index_of(&lat.gram), Some(7));
        let same = IdealLattice::new(&k, &"basis 2,0;0,1".parse().unwrap()).unwrap();
        assert_eq!(same.basis, lat.basis);
        assert!(matches!(IdealLattice::new(&k, &IdealSpec::Basis([[3, 0], [1, 1]])), Err(Error::NotAnIdeal(_))));
        assert!(matches!(IdealLattice::new(&k, &IdealSpec::Basis([[1, 0], [2, 0]])), Err(Error::NotAnIdeal(_))));
    }

    #[test]
    fn crt_pattern_d15() {
        let k = make_field(15).unwrap();
        let lat = IdealLattice::unit(&k);
        assert_eq!(lat.cosets().len(), 15);
        let z3 = lat.cosets().iter().filter(|c| c.local_zero(3)).count();
        let z5 = lat.cosets().iter().filter(|c| c.local_zero(5)).count();
        let both = lat.cosets().iter().filter(|c| c.local_zero(3) && c.local_zero(5)).count();
        assert_eq!((z3, z5, both), (5, 3, 1));
        for c in lat.cosets() {
            let sum: Rational = c.local.iter().map(|l| l.q_local).sum();
            assert_eq!(frac(&sum), c.q_mod_one);
        }
    }

    #[test]
    fn non_principal_ideal_d23() {
        let k = make_field(23).unwrap();
        let lat = IdealLattice::new(&k, &"gen 2;0,1".parse().unwrap()).unwrap();
        assert_eq!(lat.norm, 2);
        assert_eq!(lat.cosets().len(), 23);
        for c in lat.cosets() {
            assert!(is_integral_vec(&mat_vec(&lat.gram, &c.coords)));
        }
    }

    #[test]
    fn rank_one_counts_match_theta() {
        let pl = PosLattice::new(gram(&[&[2]])).unwrap();
        let zero = vec![ri(0)];
        assert_eq!(pl.count_vectors(&zero, &ri(0)), 1);
        assert_eq!(pl.count_vectors(&zero, &ri(1)), 2);
        assert_eq!(pl.count_vectors(&zero, &ri(-1)), 0);
        let counts = pl.vectors_by_norm(&zero, &ri(2500));
        for m in 1..=2500i64 {
            let sq = (m as f64).sqrt().round() as i64;
            let expect = if sq * sq == m { 2 } else { 0 };
            assert_eq!(counts.get(&ri(m)).copied().unwrap_or(0), expect, "m = {m}");
        }
    }

    #[test]
    fn rejects_bad_grams() {
        assert!(PosLattice::new(gram(&[&[1]])).is_err());
        assert!(PosLattice::new(gram(&[&[2, 1], &[0, 2]])).is_err());
        assert!(PosLattice::new(gram(&[&[2, 3], &[3, 2]])).is_err());
        assert!(PosLattice::new(vec![vec![r(1, 2)]]).is_err());
    }

    #[test]
    fn split_lattice_has_trivial_glue() {
        let k = make_field(7).unwrap();
        let sl = SplitLattice::new(PosLattice::new(gram(&[&[2]])).unwrap(), IdealLattice::unit(&k), &[]).unwrap();
        assert_eq!(sl.glue_index(), 1);
        assert_eq!(sl.classes().len(), 14);
    }

    #[test]
    fn index_two_glue_in_generic_core() {
        let g = GlueCore::new(gram(&[&[2]]), gram(&[&[-2, 0], &[0, -2]]), &[vec![r(1, 2), r(1, 2), ri(0)]], |m| m.to_vec()).unwrap();
        assert_eq!(g.glue.len(), 2);
        // |A₊||A₋| / |G|² = 2·4/4
        assert_eq!(g.classes.len(), 2);
        // cross-check the glue index against the determinant of the glued Gram
        // basis of L: (1/2, 1/2, 0), (0, 1, 0), (0, 0, 1) in L₊ ⊕ L₋ coordinates
        let big = gram(&[&[2, 0, 0], &[0, -2, 0], &[0, 0, -2]]);
        let b = [[r(1, 2), r(1, 2), ri(0)], [ri(0), ri(1), ri(0)], [ri(0), ri(0), ri(1)]];
        let gl: Matrix = (0..3).map(|i| (0..3).map(|j| bilinear(&big, &b[i], &b[j])).collect()).collect();
        assert_eq!(index_of(&gl), Some(2));
        assert!(GlueCore::new(gram(&[&[2]]), gram(&[&[-2, 0], &[0, -2]]), &[vec![r(1, 2), ri(0), ri(0)]], |m| m.to_vec()).is_err());
    }

    #[test]
    fn index_seven_glue_d7() {
        let text = "d = 7\nideal = unit\nrank = 1\ngram = 14\nglue = 1/7 1/7 5/7\n";
        let lf = LatticeFile::parse(text).unwrap();
        let sl = lf.build().unwrap();
        assert_eq!(sl.glue_index(), 7);
        assert_eq!(sl.classes().len(), 2);
        assert_eq!(LatticeFile::parse(&lf.to_string()).unwrap(), lf);
        for c in sl.classes() {
            let parts = sl.decompose(c.label).unwrap();
            assert_eq!(parts.len(), 7);
        }
        let bad = "d = 7\nideal = unit\nrank = 1\ngram = 14\nglue = 1/7 0 0\n";
        assert!(LatticeFile::parse(bad).unwrap().build().is_err());
    }

    /// Brute force: the translates (η₊+λ₊+L₊) + (η₋+λ₋+L₋) tile η + L.
    #[test]
    fn coset_partition_by_sampling() {
        let text = "d = 7\nideal = unit\nrank = 1\ngram = 14\nglue = 1/7 1/7 5/7\n";
        let sl = LatticeFile::parse(text).unwrap().build().unwrap();
        let g = &sl.core.glue;
        for c in sl.classes() {
            let mut hits = HashMap::new();
            // points η + Σ c_i·g_i + integer box
            for (lp, lm) in g {
                for z0 in -2..=2 {
                    for z1 in -2..=2 {
                        for z2 in -2..=2 {
                            let p = c.plus[0] + lp[0] + ri(z0);
                            let m = [c.minus[0] + lm[0] + ri(z1), c.minus[1] + lm[1] + ri(z2)];
                            *hits.entry((p, m)).or_insert(0) += 1;
                        }
                    }
                }
            }
            assert!(hits.values().all(|&v| v == 1));
        }
    }

    proptest! {
        #[test]
        fn theta_counts_are_even(a in 1i64..4, b in -2i64..3, c in 1i64..4, m in 1i64..20) {
            let g = gram(&[&[2 * a, b], &[b, 2 * c]]);
            prop_assume!(4 * a * c - b * b > 0);
            let pl = PosLattice::new(g).unwrap();
            prop_assert_eq!(pl.count_vectors(&[ri(0), ri(0)], &ri(m)) % 2, 0);
        }

        #[test]
        fn counts_match_brute_force(a in 1i64..4, b in -2i64..3, c in 1i64..4, k in 0usize..50) {
            let g = gram(&[&[2 * a, b], &[b, 2 * c]]);
            prop_assume!(4 * a * c - b * b > 0);
            let pl = PosLattice::new(g.clone()).unwrap();
            let coset = pl.dual_cosets[k % pl.dual_cosets.len()].clone();
            let fast = pl.vectors_by_norm(&coset, &ri(6));
            let mut slow = BTreeMap::new();
            for x in -12i64..=12 {
                for y in -12i64..=12 {
                    let v = [coset[0] + ri(x), coset[1] + ri(y)];
                    let q = bilinear(&g, &v, &v) / ri(2);
                    if q <= ri(6) {
                        *slow.entry(q).or_insert(0u64) += 1;
                    }
                }
            }
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn dual_index_is_d(i in 0usize..4) {
            let d = [7u64, 11, 15, 23][i];
            let k = make_field(d).unwrap();
            let lat = IdealLattice::unit(&k);
            prop_assert_eq!(index_of(&lat.gram), Some(d as i64));
            prop_assert_eq!(lat.cosets().len() as u64, d);
        }
    }
}
