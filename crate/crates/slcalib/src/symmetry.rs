//! Internal symmetries of the two flows, classification of the real span of
//! (z₁, z₂, z₃), and normal forms for the two- and three-dimensional cases.

use nalgebra::{Matrix3, SMatrix, SymmetricEigen};

use crate::cgeom::{cr, g, herm, omega, Complex3, C64, I};
use crate::error::{Error, Result};
use crate::families::{PQCurve, ZCurve};
use crate::flow::{PQState, ZState};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

const PARAM_TOL: f64 = 1e-12;
const NULL_TOL: f64 = 1e-8;
const CHECK_TOL: f64 = 1e-8;

/// A 3×3 complex matrix, row-major.
pub type Unitary = [[C64; 3]; 3];

pub fn unitary_identity() -> Unitary {
    let (o, z) = (cr(1.0), C64::default());
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub fn unitary_mul(a: &Unitary, b: &Unitary) -> Unitary {
    let mut out = [[C64::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn apply_unitary(u: &Unitary, s: &ZState) -> ZState {
    ZState::new(s.z.map(|v| Complex3::apply(u, &v)))
}

/// (y₁, y₂, t) ↦ (ay₁ + by₂ + e, cy₁ + dy₂ + f, δt) with δ = ad − bc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GL2AffineParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl GL2AffineParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        let g = GL2AffineParams { a, b, c, d, e, f };
        if [a, b, c, d, e, f].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite GL(2) parameter".into()));
        }
        let scale = a * a + b * b + c * c + d * d;
        if g.delta().abs() <= PARAM_TOL * scale || scale == 0.0 {
            return Err(Error::InvalidInput("GL(2) element with ad - bc = 0".into()));
        }
        Ok(g)
    }

    pub fn identity() -> Self {
        GL2AffineParams { a: 1.0, b: 0.0, c: 0.0, d: 1.0, e: 0.0, f: 0.0 }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, co) = theta.sin_cos();
        GL2AffineParams { a: co, b: -s, c: s, d: co, e: 0.0, f: 0.0 }
    }

    pub fn delta(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Acting by `self` and then by `h` equals acting by the result.
    pub fn then(&self, h: &GL2AffineParams) -> GL2AffineParams {
        GL2AffineParams {
            a: self.a * h.a + self.b * h.c,
            b: self.a * h.b + self.b * h.d,
            c: self.c * h.a + self.d * h.c,
            d: self.c * h.b + self.d * h.d,
            e: self.a * h.e + self.b * h.f + self.e,
            f: self.c * h.e + self.d * h.f + self.f,
        }
    }

    pub fn inverse(&self) -> GL2AffineParams {
        let dl = self.delta();
        let (a, b, c, d) = (self.d / dl, -self.b / dl, -self.c / dl, self.a / dl);
        GL2AffineParams { a, b, c, d, e: -(a * self.e + b * self.f), f: -(c * self.e + d * self.f) }
    }

    /// Original-surface coordinates of the transformed point (y₁′, y₂′, t).
    pub fn coords(&self, y1: f64, y2: f64, t: f64) -> (f64, f64, f64) {
        (self.a * y1 + self.b * y2 + self.e, self.c * y1 + self.d * y2 + self.f, self.delta() * t)
    }

    /// The coefficients of z₁′, z₂′, z₃′ in z₁, z₂, z₃.
    pub fn quadratic_block(&self) -> [[f64; 3]; 3] {
        let GL2AffineParams { a, b, c, d, .. } = *self;
        [
            [0.5 * (a * a + b * b + c * c + d * d), 0.5 * (a * a + b * b - c * c - d * d), a * c + b * d],
            [0.5 * (a * a - b * b + c * c - d * d), 0.5 * (a * a - b * b - c * c + d * d), a * c - b * d],
            [a * b + c * d, a * b - c * d, a * d + b * c],
        ]
    }

    /// The six combinations, applied to a state at a single time.
    pub fn transform_state(&self, s: &ZState) -> ZState {
        let GL2AffineParams { a, b, c, d, e, f } = *self;
        let z = &s.z;
        let q = self.quadratic_block();
        let comb = |k: &[f64; 6]| (0..6).fold(Complex3::ZERO, |acc, j| acc + z[j].scale_re(k[j]));
        ZState::new([
            comb(&[q[0][0], q[0][1], q[0][2], 0.0, 0.0, 0.0]),
            comb(&[q[1][0], q[1][1], q[1][2], 0.0, 0.0, 0.0]),
            comb(&[q[2][0], q[2][1], q[2][2], 0.0, 0.0, 0.0]),
            comb(&[a * e + c * f, a * e - c * f, a * f + c * e, a, c, 0.0]),
            comb(&[b * e + d * f, b * e - d * f, b * f + d * e, b, d, 0.0]),
            comb(&[0.5 * (e * e + f * f), 0.5 * (e * e - f * f), e * f, e, f, 1.0]),
        ])
    }
}

/// A z-curve seen through a GL(2,R)⋉R² element.
#[derive(Debug, Clone)]
pub struct GL2Acted<C> {
    pub g: GL2AffineParams,
    pub inner: C,
}

impl<C: ZCurve> ZCurve for GL2Acted<C> {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)> {
        let dl = self.g.delta();
        let (s, ds) = self.inner.z_state(dl * t)?;
        let mut d = self.g.transform_state(&ds);
        for v in d.z.iter_mut() {
            *v = v.scale_re(dl);
        }
        Ok((self.g.transform_state(&s), d))
    }
}

pub fn gl2_act<C: ZCurve>(g: GL2AffineParams, s: C) -> GL2Acted<C> {
    GL2Acted { g, inner: s }
}

/// A z-curve multiplied by a constant unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryActed<C> {
    pub u: Unitary,
    pub inner: C,
}

impl<C: ZCurve> ZCurve for UnitaryActed<C> {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)> {
        let (s, ds) = self.inner.z_state(t)?;
        Ok((apply_unitary(&self.u, &s), apply_unitary(&self.u, &ds)))
    }
}

/// (x, y, t) ↦ (ax + b, cy + d₀ + d₁x + … + d_{k−1}x^{k−1}, δt) with δ = ac.
#[derive(Debug, Clone, PartialEq)]
pub struct KGroupParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// d₀..d_{k−1}
    pub d: Vec<f64>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl KGroupParams {
    pub fn new(a: f64, b: f64, c: f64, d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidInput("k-group needs d0..d(k-1) with k >= 1".into()));
        }
        if [a, b, c].iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite k-group parameter".into()));
        }
        if a == 0.0 || c == 0.0 {
            return Err(Error::InvalidInput("k-group element with ac = 0".into()));
        }
        Ok(KGroupParams { a, b, c, d })
    }

    pub fn identity(k: usize) -> Self {
        KGroupParams { a: 1.0, b: 0.0, c: 1.0, d: vec![0.0; k] }
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn delta(&self) -> f64 {
        self.a * self.c
    }

    fn dj(&self, j: usize) -> f64 {
        self.d.get(j).copied().unwrap_or(0.0)
    }

    pub fn coords(&self, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        let poly = self.d.iter().rev().fold(0.0, |acc, &dj| acc * x + dj);
        (self.a * x + self.b, self.c * y + poly, self.delta() * t)
    }

    /// Acting by `self` and then by `h`.
    pub fn then(&self, h: &KGroupParams) -> KGroupParams {
        let k = self.k();
        // D(x) = c_g D_h(x) + D_g(a_h x + b_h)
        let mut d: Vec<f64> = h.d.iter().map(|v| self.c * v).collect();
        for (i, &di) in self.d.iter().enumerate() {
            for j in 0..=i {
                d[j] += di * binom(i, j) * h.a.powi(j as i32) * h.b.powi((i - j) as i32);
            }
        }
        d.truncate(k);
        KGroupParams { a: self.a * h.a, b: self.a * h.b + self.b, c: self.c * h.c, d }
    }

    pub fn transform_state(&self, s: &PQState) -> Result<PQState> {
        let k = self.k();
        if s.k() != k {
            return Err(Error::InvalidInput(format!("k-group of order {k} applied to a k = {} state", s.k())));
        }
        let (a, b) = (self.a, self.b);
        let mut p = vec![Complex3::ZERO; k + 1];
        for (j, pj) in p.iter_mut().enumerate() {
            let mut acc = Complex3::ZERO;
            for i in j..=k {
                acc += s.p[i].scale_re(binom(i, j) * a.powi(j as i32) * b.powi((i - j) as i32));
            }
            let prev = if j == 0 { 0.0 } else { a * self.dj(j - 1) };
            *pj = acc + s.q1.scale_re(self.dj(j)) + s.q2.scale_re(prev + b * self.dj(j));
        }
        let q1 = s.q1.scale_re(self.c) + s.q2.scale_re(b * self.c);
        let q2 = s.q2.scale_re(a * self.c);
        PQState::new(p, q1, q2)
    }
}

/// A (p, q) curve seen through an element of the k-group.
#[derive(Debug, Clone)]
pub struct KActed<C> {
    pub g: KGroupParams,
    pub inner: C,
}

impl<C: PQCurve> PQCurve for KActed<C> {
    fn pq_state(&self, t: f64) -> Result<(PQState, PQState)> {
        let dl = self.g.delta();
        let (s, ds) = self.inner.pq_state(dl * t)?;
        let d = self.g.transform_state(&ds)?;
        let d = PQState::new(d.p.iter().map(|v| v.scale_re(dl)).collect(), d.q1.scale_re(dl), d.q2.scale_re(dl))?;
        Ok((self.g.transform_state(&s)?, d))
    }
}

pub fn k_act<C: PQCurve>(g: KGroupParams, s: C) -> KActed<C> {
    KActed { g, inner: s }
}

/// The four cases by the real dimension of span(z₁, z₂, z₃).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanCase {
    I,
    II,
    III,
    IV,
}

impl SpanCase {
    pub fn label(&self) -> &'static str {
        match self {
            SpanCase::I => "i",
            SpanCase::II => "ii",
            SpanCase::III => "iii",
            SpanCase::IV => "iv",
        }
    }
}

/// Standard form of ½c₁(y₁²+y₂²) + ½c₂(y₁²−y₂²) + c₃y₁y₂ in case ii.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricForm {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

impl QuadricForm {
    pub fn tag(&self) -> &'static str {
        match self {
            QuadricForm::PositiveDefinite => "y1^2+y2^2",
            QuadricForm::NegativeDefinite => "-y1^2-y2^2",
            QuadricForm::Indefinite => "y1^2-y2^2",
            QuadricForm::Degenerate => "y1^2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub case: SpanCase,
    pub dim: usize,
    /// Descending.
    pub singular_values: [f64; 3],
    /// Case ii only: the form and (c₁, c₂, c₃) with z_j = c_j v.
    pub quadric: Option<(QuadricForm, [f64; 3])>,
}

fn real_matrix(z: &[Complex3; 3]) -> SMatrix<f64, 6, 3> {
    SMatrix::<f64, 6, 3>::from_fn(|i, j| z[j].to_real6()[i])
}

/// Descending singular values and the matching right singular vectors.
fn span_svd(z: &[Complex3; 3]) -> Result<([f64; 3], [[f64; 3]; 3], SMatrix<f64, 6, 3>)> {
    let m = real_matrix(z);
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD failed".into())),
    };
    let sv = svd.singular_values;
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    let vals = idx.map(|i| sv[i]);
    let vecs = idx.map(|i| [vt[(i, 0)], vt[(i, 1)], vt[(i, 2)]]);
    let mut us = SMatrix::<f64, 6, 3>::zeros();
    for (col, &i) in idx.iter().enumerate() {
        us.set_column(col, &u.column(i));
    }
    Ok((vals, vecs, us))
}

pub fn classify_case(z1: &Complex3, z2: &Complex3, z3: &Complex3) -> Result<Classification> {
    let z = [*z1, *z2, *z3];
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite z vector".into()));
    }
    let (sv, vecs, u) = span_svd(&z)?;
    let dim = if sv[0] == 0.0 { 0 } else { sv.iter().filter(|&&s| s > RANK_TOL * sv[0]).count() };
    let case = [SpanCase::I, SpanCase::II, SpanCase::III, SpanCase::IV][dim];
    let quadric = (dim == 1).then(|| {
        // z_j = c_j v with v the leading left singular vector, signed so its
        // largest coordinate is positive
        let v = u.column(0);
        let imax = (0..6).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        let cs = [0, 1, 2].map(|j| sign * sv[0] * vecs[0][j]);
        let disc = cs[0] * cs[0] - cs[1] * cs[1] - cs[2] * cs[2];
        let norm2 = cs.iter().map(|x| x * x).sum::<f64>();
        let form = if disc.abs() <= RANK_TOL * norm2 {
            QuadricForm::Degenerate
        } else if disc < 0.0 {
            QuadricForm::Indefinite
        } else if cs[0] > 0.0 {
            QuadricForm::PositiveDefinite
        } else {
            QuadricForm::NegativeDefinite
        };
        (form, cs)
    });
    Ok(Classification { case, dim, singular_values: sv, quadric })
}

fn check_lagrangian(z: &[Complex3; 3]) -> Result<f64> {
    let scale = z.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let w = omega(&z[i], &z[j]);
        if w.abs() > RANK_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Inadmissible(format!("omega(z{}, z{}) = {w:e} is not zero", i + 1, j + 1)));
        }
    }
    Ok(scale)
}

fn transform3(g: &GL2AffineParams, z: &[Complex3; 3]) -> [Complex3; 3] {
    let mut s = ZState::zero();
    s.z[..3].copy_from_slice(z);
    let out = g.transform_state(&s);
    [out.z[0], out.z[1], out.z[2]]
}

/// Completes a unit vector u to a special unitary matrix with rows ⊥ u
/// first, so that U u = (0, 0, 1).
fn unitary_to_e3(u: &Complex3) -> Unitary {
    let ua = u.as_array();
    let k = (0..3).min_by(|&i, &j| ua[i].norm().total_cmp(&ua[j].norm())).unwrap_or(0);
    let mut basis = vec![*u];
    for cand in [Complex3::e(k), Complex3::e((k + 1) % 3), Complex3::e((k + 2) % 3)] {
        if basis.len() == 3 {
            break;
        }
        let mut v = cand;
        for b in &basis {
            v -= b.scale(herm(b, &v));
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v.scale_re(1.0 / n));
        }
    }
    let rows = [basis[1], basis[2], basis[0]];
    let mut m = rows.map(|r| r.conj().as_array());
    fix_det(&mut m);
    m
}

/// Multiplies the first row by a phase so the determinant becomes 1.
fn fix_det(m: &mut Unitary) {
    let det = crate::cgeom::det3(m);
    let ph = det.conj() / det.norm();
    for x in m[0].iter_mut() {
        *x *= ph;
    }
}

/// Transforms taking case-iii data at t = 0 to z₁ = z₂ = (1, −i, 0),
/// z₃ = (0, 0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CaseIIINormalization {
    pub gl2: GL2AffineParams,
    pub unitary: Unitary,
    /// The normalized z₁, z₂, z₃.
    pub z: [Complex3; 3],
}

pub fn normalize_case_iii(z1: &Complex3, z2: &Complex3, z3: &Complex3) -> Result<CaseIIINormalization> {
    let cls = classify_case(z1, z2, z3)?;
    if cls.case != SpanCase::III {
        return Err(Error::Inadmissible(format!("data is case {}, not case iii", cls.case.label())));
    }
    let z = [*z1, *z2, *z3];
    let scale = check_lagrangian(&z)?.sqrt();
    let (_, vecs, _) = span_svd(&z)?;
    let mut k = vecs[2];
    if k[0] < 0.0 {
        k = k.map(|x| -x);
    }
    let lorentz = k[0] * k[0] - k[1] * k[1] - k[2] * k[2];
    if lorentz.abs() > NULL_TOL {
        let kind = if lorentz > 0.0 { "timelike" } else { "spacelike" };
        return Err(Error::Inadmissible(format!(
            "kernel direction is {kind} (a1^2 - a2^2 - a3^2 = {lorentz:e}); such data cannot be case iii"
        )));
    }
    // (b² + d², b² − d², 2bd) ∝ k makes z₁′ − z₂′ vanish
    let (bb, dd) = if k[1] >= 0.0 {
        let b = (0.5 * (k[0] + k[1])).max(0.0).sqrt();
        (b, k[2] / (2.0 * b))
    } else {
        let d = (0.5 * (k[0] - k[1])).max(0.0).sqrt();
        (k[2] / (2.0 * d), d)
    };
    let n = bb * bb + dd * dd;
    let g1 = GL2AffineParams { a: dd / n, b: bb, c: -bb / n, d: dd, e: 0.0, f: 0.0 };
    let za = transform3(&g1, &z);
    let z3n = za[2].norm();
    if z3n <= PARAM_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("z3 vanishes after aligning the kernel direction".into()));
    }
    let lam = z3n.powf(-0.5);
    let g2 = GL2AffineParams { a: lam, b: 0.0, c: 0.0, d: lam, e: 0.0, f: 0.0 };
    let zb = transform3(&g2, &za);
    let u1 = unitary_to_e3(&zb[2].scale_re(1.0 / zb[2].norm()));
    let zc = zb.map(|v| Complex3::apply(&u1, &v));
    let [w1, w2, zz] = zc[0].as_array();
    if zz.im.abs() > CHECK_TOL * zc[0].norm().max(1.0) {
        return Err(Error::Inadmissible(format!("third component of z1 is not real ({:e})", zz.im)));
    }
    let x = (w1 - I * w2.conj()) * 0.5;
    let y = (w1 + I * w2.conj()) * 0.5;
    let s = x.norm_sqr() + y.norm_sqr();
    if s <= PARAM_TOL {
        return Err(Error::Degenerate("z1 has no e^{it} or e^{-it} part".into()));
    }
    // z₁ ↦ α²z₁ + αγz₃; |X″|² + |Y″|² = 1 needs α = s^{-1/4}, and the third
    // component cancels for γ = −αZ′
    let alpha = s.powf(-0.25);
    let g3 = GL2AffineParams { a: alpha, b: 0.0, c: -alpha * zz.re, d: 1.0 / alpha, e: 0.0, f: 0.0 };
    let (x2, y2) = (x * alpha * alpha, y * alpha * alpha);
    let v = [
        [x2.conj(), -I * y2, C64::default()],
        [-I * y2.conj(), x2, C64::default()],
        [C64::default(), C64::default(), cr(1.0)],
    ];
    let gl2 = g1.then(&g2).then(&g3);
    let unitary = unitary_mul(&v, &u1);
    let out = transform3(&gl2, &z).map(|v| Complex3::apply(&unitary, &v));
    let target = [Complex3::new(cr(1.0), -I, cr(0.0)), Complex3::new(cr(1.0), -I, cr(0.0)), Complex3::e(2)];
    let err = (0..3).map(|j| (out[j] - target[j]).norm()).fold(0.0, f64::max);
    if err > CHECK_TOL {
        return Err(Error::Consistency(format!("case-iii normalization missed the normal form by {err:e}")));
    }
    Ok(CaseIIINormalization { gl2, unitary, z: out })
}

/// Transforms taking case-iv data at t = 0 to (w₁,0,0), (0,w₂,0), (0,0,w₃).
#[derive(Debug, Clone, PartialEq)]
pub struct CaseIVNormalization {
    /// δ = 1, e = f = 0.
    pub gl2: GL2AffineParams,
    pub unitary: Unitary,
    pub w: [C64; 3],
}

fn gram(z: &[Complex3; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| g(&z[i], &z[j]))
}

/// Recovers (a, b, c, d) with ad − bc = 1 from the quadratic block it
/// induces.
fn sl2_from_block(l: &Matrix3<f64>) -> GL2AffineParams {
    let sq = [
        0.5 * (l[(0, 0)] + l[(0, 1)] + l[(1, 0)] + l[(1, 1)]),
        0.5 * (l[(0, 0)] + l[(0, 1)] - l[(1, 0)] - l[(1, 1)]),
        0.5 * (l[(0, 0)] - l[(0, 1)] + l[(1, 0)] - l[(1, 1)]),
        0.5 * (l[(0, 0)] - l[(0, 1)] - l[(1, 0)] + l[(1, 1)]),
    ];
    let ab = 0.5 * (l[(2, 0)] + l[(2, 1)]);
    let cd = 0.5 * (l[(2, 0)] - l[(2, 1)]);
    let ac = 0.5 * (l[(0, 2)] + l[(1, 2)]);
    let bd = 0.5 * (l[(0, 2)] - l[(1, 2)]);
    let ad = 0.5 * (l[(2, 2)] + 1.0);
    let bc = 0.5 * (l[(2, 2)] - 1.0);
    let p = [[sq[0], ab, ac, ad], [ab, sq[1], bc, bd], [ac, bc, sq[2], cd], [ad, bd, cd, sq[3]]];
    let i = (0..4).max_by(|&x, &y| sq[x].total_cmp(&sq[y])).unwrap_or(0);
    let r = sq[i].max(0.0).sqrt();
    let x = p[i].map(|v| v / r);
    GL2AffineParams { a: x[0], b: x[1], c: x[2], d: x[3], e: 0.0, f: 0.0 }
}

pub fn normalize_case_iv(z1: &Complex3, z2: &Complex3, z3: &Complex3) -> Result<CaseIVNormalization> {
    let cls = classify_case(z1, z2, z3)?;
    if cls.case != SpanCase::IV {
        return Err(Error::Inadmissible(format!("data is case {}, not case iv", cls.case.label())));
    }
    let z = [*z1, *z2, *z3];
    check_lagrangian(&z)?;
    let gm = gram(&z);
    let chol = gm.cholesky().ok_or_else(|| Error::Degenerate("Gram matrix is not positive definite".into()))?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::Degenerate("singular Gram factor".into()))?;
    let eta = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, -1.0));
    let s = linv * eta * linv.transpose();
    let eig = SymmetricEigen::new(0.5 * (s + s.transpose()));
    let nu = eig.eigenvalues;
    let numax = nu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pos: Vec<usize> = (0..3).filter(|&i| nu[i] > 0.0).collect();
    let neg: Vec<usize> = (0..3).filter(|&i| nu[i] < 0.0).collect();
    if pos.len() != 1 || neg.len() != 2 {
        return Err(Error::Numerical("pencil does not have signature (1, 2)".into()));
    }
    if (nu[neg[0]] - nu[neg[1]]).abs() <= RANK_TOL * numax {
        return Err(Error::Degenerate(
            "coincident eigenvalues in the simultaneous diagonalization; the orthogonal frame is not unique".into(),
        ));
    }
    // v = C^{-T} u, scaled to |η(v, v)| = 1
    let vec_of = |i: usize| {
        let v = linv.transpose() * eig.eigenvectors.column(i);
        let n = (v.transpose() * eta * v)[(0, 0)].abs().sqrt();
        v / n
    };
    let mut v1 = vec_of(pos[0]);
    let (mut v2, mut v3) = (vec_of(neg[0]), vec_of(neg[1]));
    if v3[1].abs() > v2[1].abs() {
        std::mem::swap(&mut v2, &mut v3);
    }
    if v1[0] < 0.0 {
        v1 = -v1;
    }
    if v2[1] < 0.0 {
        v2 = -v2;
    }
    let mut vm = Matrix3::from_columns(&[v1, v2, v3]);
    if vm.determinant() < 0.0 {
        vm.set_column(2, &(-v3));
    }
    let gl2 = sl2_from_block(&vm.transpose());
    let zp = transform3(&gl2, &z);
    let gp = gram(&zp);
    let dmax = (0..3).map(|i| gp[(i, i)]).fold(0.0, f64::max);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if gp[(i, j)].abs() > CHECK_TOL * dmax {
            return Err(Error::Consistency(format!("transformed triple is not orthogonal ({:e})", gp[(i, j)])));
        }
    }
    let mut unitary = zp.map(|v| v.scale_re(1.0 / v.norm()).conj().as_array());
    for (j, row) in unitary.iter_mut().enumerate() {
        let dj = row[j];
        if dj.norm() > PARAM_TOL {
            let ph = dj.conj() / dj.norm();
            for x in row.iter_mut() {
                *x *= ph;
            }
        }
    }
    fix_det(&mut unitary);
    let w = [0, 1, 2].map(|j| Complex3::apply(&unitary, &zp[j]).as_array()[j]);
    Ok(CaseIVNormalization { gl2, unitary, w })
}
