//! Numerical checks on assembled 3-folds: special Lagrangian residuals,
//! immersion and singularity detection, the branched-cover model near a
//! singular point, periodicity, and growth rates at infinity.

use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::cgeom::{cross, g, im_omega3, omega, Complex3};
use crate::error::{Error, Result};
use crate::families::{assemble_phi_pq, assemble_phi_z, AlphaTriple, CaseD, Jet, KFamily, PQCurve, Surface, ZCurve};
use crate::flow::{integrate_final, rhs_z, IntegratorCfg, ZState};

/// Central-difference step for surfaces without analytic partials.
pub const FD_STEP: f64 = 1e-5;
/// ‖∂Φ/∂t‖ at or below this is treated as a failure to immerse.
pub const IMMERSION_TOL: f64 = 1e-8;
/// Relative size of the smallest frame singular value counted as a root.
pub const SINGULAR_TOL: f64 = 1e-8;
/// Width to which singular times are located.
pub const ROOT_TOL: f64 = 1e-10;

const CONSTRAINT_TOL: f64 = 1e-9;

/// A surface known only through its points; partials by central differences.
pub struct FdSurface<F> {
    f: F,
    h: f64,
    factor: f64,
}

impl<F> FdSurface<F>
where
    F: Fn(f64, f64, f64) -> Result<Complex3> + Sync,
{
    pub fn new(f: F) -> Self {
        FdSurface { f, h: FD_STEP, factor: 1.0 }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    /// The constant c in ∂Φ/∂t = c·(∂₁Φ × ∂₂Φ).
    pub fn with_flow_factor(mut self, c: f64) -> Self {
        self.factor = c;
        self
    }
}

impl<F> Surface for FdSurface<F>
where
    F: Fn(f64, f64, f64) -> Result<Complex3> + Sync,
{
    fn jet(&self, s1: f64, s2: f64, t: f64) -> Result<Jet> {
        let (f, h) = (&self.f, self.h);
        let diff = |a: Complex3, b: Complex3| (a - b).scale_re(0.5 / h);
        Ok(Jet {
            phi: f(s1, s2, t)?,
            d1: diff(f(s1 + h, s2, t)?, f(s1 - h, s2, t)?),
            d2: diff(f(s1, s2 + h, t)?, f(s1, s2 - h, t)?),
            dt: diff(f(s1, s2, t + h)?, f(s1, s2, t - h)?),
        })
    }

    fn point(&self, s1: f64, s2: f64, t: f64) -> Result<Complex3> {
        (self.f)(s1, s2, t)
    }

    fn flow_factor(&self) -> f64 {
        self.factor
    }
}

/// n₁·n₂·n₃ points evenly filling the box [lo, hi].
pub fn lattice(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Vec<[f64; 3]> {
    let axis = |k: usize| -> Vec<f64> {
        match n[k] {
            0 => vec![],
            1 => vec![0.5 * (lo[k] + hi[k])],
            m => (0..m).map(|i| lo[k] + (hi[k] - lo[k]) * i as f64 / (m - 1) as f64).collect(),
        }
    };
    let (a, b, c) = (axis(0), axis(1), axis(2));
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for &x in &a {
        for &y in &b {
            for &t in &c {
                out.push([x, y, t]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SLResidualReport {
    /// max |ω(∂ᵢΦ, ∂ⱼΦ)| over all pairs.
    pub max_omega: f64,
    /// max |Im Ω(∂₁Φ, ∂₂Φ, ∂ₜΦ)| / (‖∂₁Φ‖‖∂₂Φ‖‖∂ₜΦ‖), degenerate samples excluded.
    pub max_im_omega3: f64,
    /// max ‖c·∂₁Φ×∂₂Φ − ∂ₜΦ‖.
    pub max_lemma61: f64,
    pub samples: usize,
    /// Samples with a tangent vector of norm ≤ IMMERSION_TOL.
    pub degenerate: usize,
}

impl SLResidualReport {
    pub fn worst(&self) -> f64 {
        self.max_omega.max(self.max_im_omega3).max(self.max_lemma61)
    }
}

fn residuals_at(j: &Jet, factor: f64) -> (f64, Option<f64>, f64) {
    let om = [omega(&j.d1, &j.d2), omega(&j.d1, &j.dt), omega(&j.d2, &j.dt)];
    let om = om.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norms = j.d1.norm() * j.d2.norm() * j.dt.norm();
    let degenerate = [j.d1.norm(), j.d2.norm(), j.dt.norm()].iter().any(|&n| n <= IMMERSION_TOL);
    let im3 = (!degenerate).then(|| im_omega3(&j.d1, &j.d2, &j.dt).abs() / norms);
    let l61 = (cross(&j.d1, &j.d2).scale_re(factor) - j.dt).norm();
    (om, im3, l61)
}

/// Special Lagrangian residuals of Φ over a set of (s₁, s₂, t) samples.
pub fn sl_residual(phi: &dyn Surface, points: &[[f64; 3]]) -> Result<SLResidualReport> {
    let factor = phi.flow_factor();
    let per: Vec<(f64, Option<f64>, f64)> = points
        .par_iter()
        .map(|&[a, b, t]| phi.jet(a, b, t).map(|j| residuals_at(&j, factor)))
        .collect::<Result<_>>()?;
    let mut rep = SLResidualReport { samples: points.len(), ..Default::default() };
    for (om, im3, l61) in per {
        rep.max_omega = rep.max_omega.max(om);
        rep.max_lemma61 = rep.max_lemma61.max(l61);
        match im3 {
            Some(v) => rep.max_im_omega3 = rep.max_im_omega3.max(v),
            None => rep.degenerate += 1,
        }
    }
    Ok(rep)
}

/// Whether Φ immerses near the point, by ∂Φ/∂t ≠ 0; returns ‖∂Φ/∂t‖ too.
pub fn immersion_test(phi: &dyn Surface, point: [f64; 3]) -> Result<(bool, f64)> {
    let n = phi.jet(point[0], point[1], point[2])?.dt.norm();
    Ok((n > IMMERSION_TOL, n))
}

/// Smallest and largest singular values of the real 6×2 matrix [a b].
/// The smallest comes from the area |a∧b| to avoid cancellation.
fn frame_sigma(a: &Complex3, b: &Complex3) -> (f64, f64) {
    let (ra, rb) = (a.to_real6(), b.to_real6());
    let (aa, bb, ab) = (a.norm_sqr(), b.norm_sqr(), g(a, b));
    let big = (0.5 * (aa + bb) + (0.25 * (aa - bb) * (aa - bb) + ab * ab).sqrt()).sqrt();
    let mut area = 0.0;
    for i in 0..6 {
        for j in i + 1..6 {
            let m = ra[i] * rb[j] - ra[j] * rb[i];
            area += m * m;
        }
    }
    if big == 0.0 {
        return (0.0, 0.0);
    }
    (area.sqrt() / big, big)
}

fn scan_frame<F>(frame: F, ts: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<(Complex3, Complex3)> + Sync,
{
    if ts.len() < 2 || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("t-grid must be increasing with at least two points".into()));
    }
    let smin = |t: f64| -> Result<(f64, f64)> {
        let (a, b) = frame(t)?;
        Ok(frame_sigma(&a, &b))
    };
    let vals: Vec<f64> = ts.par_iter().map(|&t| smin(t).map(|s| s.0)).collect::<Result<_>>()?;
    let mut roots: Vec<f64> = Vec::new();
    let n = ts.len();
    for i in 0..n {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == n { f64::INFINITY } else { vals[i + 1] };
        if vals[i] > left || vals[i] > right {
            continue;
        }
        // golden-section refinement of the local minimum
        let (mut lo, mut hi) = (ts[i.saturating_sub(1)], ts[(i + 1).min(n - 1)]);
        let gr = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - gr * (hi - lo);
        let mut x2 = lo + gr * (hi - lo);
        let (mut f1, mut f2) = (smin(x1)?.0, smin(x2)?.0);
        while hi - lo > ROOT_TOL {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = smin(x1)?.0;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = smin(x2)?.0;
            }
        }
        // the grid point itself may beat the interior bracket
        let cands = [(0.5 * (lo + hi), smin(0.5 * (lo + hi))?), (ts[i], smin(ts[i])?)];
        let (t, (s, big)) = if (cands[1].1).0 < (cands[0].1).0 { cands[1] } else { cands[0] };
        if s <= SINGULAR_TOL * big.max(f64::MIN_POSITIVE) && !roots.iter().any(|r| (r - t).abs() < 1e-8) {
            roots.push(t);
        }
    }
    Ok(roots)
}

/// Times on the grid's span where z₄(t) and z₅(t) are linearly dependent.
pub fn singular_scan(curve: &dyn ZCurve, ts: &[f64]) -> Result<Vec<f64>> {
    scan_frame(|t| curve.z_state(t).map(|(s, _)| (s.z[3], s.z[4])), ts)
}

/// The (p, q) analogue: times where p₁(t) and q₁(t) are dependent, i.e.
/// the frame at x = y = 0 degenerates.
pub fn singular_scan_pq(curve: &dyn PQCurve, ts: &[f64]) -> Result<Vec<f64>> {
    scan_frame(|t| curve.pq_state(t).map(|(s, _)| (s.p[1], s.q1)), ts)
}

/// Least-squares slope of log y against log x. None if any value is not
/// positive or there are fewer than two points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// n geometrically spaced values from lo to hi inclusive.
pub fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| lo * r.powi(i as i32)).collect()
}

/// Initial data z₁ = v + w, z₂ = v − w, z₃ = x, z₄ = u, z₅ = z₆ = 0 of a
/// singular point at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchData {
    pub u: Complex3,
    pub v: Complex3,
    pub w: Complex3,
    pub x: Complex3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BranchOutcome {
    /// Slope of log‖Φ(ε²y₁, εy₂, εt) − ε²L(y₁, y₂, t)‖ against log ε.
    Fitted {
        slope: f64,
        eps: Vec<f64>,
        deviation: Vec<f64>,
    },
    /// u = 0: Φ is homogeneous quadratic and N is a cone.
    Cone,
    Unsupported(String),
}

impl BranchData {
    /// Reads the data off a state with z₅ = z₆ = 0.
    pub fn from_state(s: &ZState) -> Result<Self> {
        let scale = s.z.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
        if s.z[4].norm() > CONSTRAINT_TOL * scale || s.z[5].norm() > CONSTRAINT_TOL * scale {
            return Err(Error::InvalidInput("branch model needs z5(0) = z6(0) = 0".into()));
        }
        Ok(BranchData { u: s.z[3], v: (s.z[0] + s.z[1]).scale_re(0.5), w: (s.z[0] - s.z[1]).scale_re(0.5), x: s.z[2] })
    }

    pub fn state(&self) -> ZState {
        ZState::new([self.v + self.w, self.v - self.w, self.x, self.u, Complex3::ZERO, Complex3::ZERO])
    }

    /// Largest of |ω(u,w)|, |ω(u,x)|, |ω(v,w)|, |ω(v,x)|, |ω(w,x)|.
    pub fn constraint_residual(&self) -> f64 {
        let (u, v, w, x) = (&self.u, &self.v, &self.w, &self.x);
        [omega(u, w), omega(u, x), omega(v, w), omega(v, x), omega(w, x)].iter().fold(0.0, |m, r| r.abs().max(m))
    }

    /// (y₁ + ¼g(u,w)t²)u + (y₂² − ¼|u|²t²)w + 2y₂t·u×w.
    pub fn leading_model(&self, y1: f64, y2: f64, t: f64) -> Complex3 {
        let (u, w) = (&self.u, &self.w);
        u.scale_re(y1 + 0.25 * g(u, w) * t * t)
            + w.scale_re(y2 * y2 - 0.25 * u.norm_sqr() * t * t)
            + cross(u, w).scale_re(2.0 * y2 * t)
    }
}

const BRANCH_SAMPLES: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [-0.5, 0.7, -1.2], [0.3, -1.0, 0.8]];

pub fn branch_model_fit(d: &BranchData, eps: &[f64]) -> Result<BranchOutcome> {
    let scale = [d.u, d.v, d.w, d.x].iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).max(1.0);
    let res = d.constraint_residual();
    if res > CONSTRAINT_TOL * scale {
        return Err(Error::Inadmissible(format!("branch data violates the omega conditions ({res:e})")));
    }
    if d.u.norm() <= CONSTRAINT_TOL * scale.sqrt() {
        return Ok(BranchOutcome::Cone);
    }
    let (lo, hi) = frame_sigma(&d.u, &d.w);
    if lo <= SINGULAR_TOL * hi {
        return Ok(BranchOutcome::Unsupported(
            "u and w are linearly dependent; the model needs third-order terms".into(),
        ));
    }
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("need at least two positive epsilons".into()));
    }
    let s0 = d.state();
    let cfg = IntegratorCfg::rk4(1e-4);
    let deviation: Vec<f64> = eps
        .par_iter()
        .map(|&e| -> Result<f64> {
            let mut worst = 0.0f64;
            for &[y1, y2, t] in &BRANCH_SAMPLES {
                let s = integrate_final(rhs_z, &s0, 0.0, e * t, &cfg)?;
                let lhs = assemble_phi_z(&s, e * e * y1, e * y2);
                worst = worst.max((lhs - d.leading_model(y1, y2, t).scale_re(e * e)).norm());
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let slope =
        loglog_slope(eps, &deviation).ok_or_else(|| Error::Numerical("deviation vanished; no slope to fit".into()))?;
    Ok(BranchOutcome::Fitted { slope, eps: eps.to_vec(), deviation })
}

/// Integer data of a rational periodic case-d family.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicitySpec {
    pub p: i64,
    pub q: i64,
    pub s: Ratio<i64>,
    pub sigma: Ratio<i64>,
    pub tau: Ratio<i64>,
    pub a: [i64; 3],
    pub lambda: i64,
    /// Whether a and λ were divided by 3 (p + q ≡ 0 mod 3).
    pub divided: bool,
}

impl PeriodicitySpec {
    /// Φ(y, t + 4π) = Φ(y, t).
    pub fn period(&self) -> f64 {
        4.0 * PI
    }

    /// (a₂a₃, −a₃a₁, −a₁a₂).
    pub fn alpha_ints(&self) -> [i64; 3] {
        let [a1, a2, a3] = self.a;
        [a2 * a3, -a3 * a1, -a1 * a2]
    }
}

pub fn periodicity_from_pq(p: i64, q: i64) -> Result<(PeriodicitySpec, AlphaTriple)> {
    if !(p > 0 && 2 * p < q) {
        return Err(Error::InvalidInput(format!("need 0 < 2p < q, got p = {p}, q = {q}")));
    }
    if p.gcd(&q) != 1 {
        return Err(Error::InvalidInput(format!("p = {p} and q = {q} are not coprime")));
    }
    if q > 1_000_000 {
        return Err(Error::InvalidInput("q too large for exact integer arithmetic".into()));
    }
    let mut a = [p * p - q * q, q * q - 2 * p * q, 2 * p * q - p * p];
    let mut lambda = p * p - p * q + q * q;
    let divided = (p + q) % 3 == 0;
    if divided {
        a = a.map(|v| v / 3);
        lambda /= 3;
    }
    let h = a[0].gcd(&a[1]).gcd(&a[2]);
    if h != 1 || h.gcd(&lambda) != 1 {
        return Err(Error::Consistency(format!("hcf(a1, a2, a3, lambda) = {h}, expected 1")));
    }
    if lambda % 2 == 0 {
        return Err(Error::Consistency(format!("lambda = {lambda} is even")));
    }
    if a.iter().sum::<i64>() != 0 || lambda * lambda != a[0] * a[0] - a[1] * a[2] {
        return Err(Error::Consistency("a1 + a2 + a3 = 0 or lambda^2 = a1^2 - a2 a3 fails".into()));
    }
    let s = Ratio::new(p, q);
    let one = Ratio::from_integer(1);
    let sigma = (one - s * 2) / (one - s * s);
    let tau = (one - s + s * s) / (one - s * s);
    if tau * tau != sigma * sigma - sigma + one || Ratio::from_integer(a[1]) != -sigma * a[0] {
        return Err(Error::Consistency("conic parametrization does not reproduce a".into()));
    }
    let spec = PeriodicitySpec { p, q, s, sigma, tau, a, lambda, divided };
    let [x, y, z] = spec.alpha_ints().map(|v| v as f64);
    Ok((spec, AlphaTriple::new(x, y, z)?))
}

/// Every admissible (p, q) with q ≤ qmax, in increasing (q, p) order.
pub fn periodicity_scan(qmax: i64) -> Result<Vec<PeriodicitySpec>> {
    let mut out = Vec::new();
    for q in 3..=qmax {
        for p in 1..q {
            if 2 * p < q && p.gcd(&q) == 1 {
                out.push(periodicity_from_pq(p, q)?.0);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodRelation {
    /// Φ(s₁, s₂, t + T) = Φ(s₁, s₂, t).
    Periodic(f64),
    /// Φ(s₁, s₂, t + T) = Φ(−s₁, −s₂, t).
    FlipShift(f64),
}

/// Largest ‖LHS − RHS‖ of the relation over the samples.
pub fn check_periodicity(phi: &dyn Surface, rel: PeriodRelation, points: &[[f64; 3]]) -> Result<f64> {
    let v: Vec<f64> = points
        .par_iter()
        .map(|&[a, b, t]| -> Result<f64> {
            let (shift, sign) = match rel {
                PeriodRelation::Periodic(tp) => (tp, 1.0),
                PeriodRelation::FlipShift(tp) => (tp, -1.0),
            };
            Ok((phi.point(a, b, t + shift)? - phi.point(sign * a, sign * b, t)?).norm())
        })
        .collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// Asymptotic regimes of the polynomial-curve family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KRegime {
    /// x ≫ 0, x ~ r^{1/k}, y ~ r^{(k−1)/k}; model x^k p_k + xy q₂.
    I,
    /// y ≫ 0, x bounded; model y q₁ + xy q₂.
    II,
    /// As I with x ≪ 0.
    III,
    /// As II with y ≪ 0.
    IV,
}

pub enum AsymptoticTarget<'a> {
    /// Limit Φ₀: the quadratic part, a double cover of the T²-cone.
    CaseD(&'a CaseD),
    K(&'a KFamily, KRegime),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub radii: Vec<f64>,
    pub deviation: Vec<f64>,
    /// None when the deviation vanishes identically.
    pub slope: Option<f64>,
    pub expected: f64,
}

/// Φ₀ of a case-d family: only the z₁, z₂, z₃ terms.
pub fn cased_phi0(fam: &CaseD, y1: f64, y2: f64, t: f64) -> Complex3 {
    let mut z = fam.state(t).to_z();
    for v in &mut z.z[3..] {
        *v = Complex3::ZERO;
    }
    assemble_phi_z(&z, y1, y2)
}

const ASYM_TIMES: [f64; 3] = [0.0, 0.9, 2.2];
const ASYM_ANGLES: [f64; 4] = [0.3, 1.2, 2.0, 4.0];

/// Largest deviation ‖Φ − Φ₀‖ at each radius of the ladder and its log-log
/// slope. The radius is y₁² + y₂² for case d and the scale ρ with
/// x ~ ρ^{1/k}, y ~ ρ^{(k−1)/k} (regimes I/III) or y ~ ρ (II/IV) for the
/// k-family; both are proportional to |Φ| along the samples.
pub fn asymptotic_fit(target: &AsymptoticTarget, radii: &[f64]) -> Result<AsymptoticFit> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput("need at least two positive radii".into()));
    }
    let dev_at = |rho: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        match target {
            AsymptoticTarget::CaseD(fam) => {
                let z = crate::families::Packed(*fam);
                for &t in &ASYM_TIMES {
                    let (s, _) = z.z_state(t)?;
                    for &th in &ASYM_ANGLES {
                        let (y1, y2) = (rho.sqrt() * th.cos(), rho.sqrt() * th.sin());
                        let d = assemble_phi_z(&s, y1, y2) - cased_phi0(fam, y1, y2, t);
                        worst = worst.max(d.norm());
                    }
                }
            }
            AsymptoticTarget::K(fam, regime) => {
                let k = fam.params().k as f64;
                for &t in &ASYM_TIMES {
                    let (s, _) = fam.pq_state(t)?;
                    for &c in &[-1.0, 0.5, 1.0] {
                        let (x, y) = match regime {
                            KRegime::I => (rho.powf(1.0 / k), c * rho.powf((k - 1.0) / k)),
                            KRegime::III => (-rho.powf(1.0 / k), c * rho.powf((k - 1.0) / k)),
                            KRegime::II => (c, rho),
                            KRegime::IV => (c, -rho),
                        };
                        let model = match regime {
                            KRegime::I | KRegime::III => {
                                s.p[s.k()].scale_re(x.powi(s.k() as i32)) + s.q2.scale_re(x * y)
                            }
                            KRegime::II | KRegime::IV => s.q1.scale_re(y) + s.q2.scale_re(x * y),
                        };
                        worst = worst.max((assemble_phi_pq(&s, x, y) - model).norm());
                    }
                }
            }
        }
        Ok(worst)
    };
    let deviation: Vec<f64> = radii.par_iter().map(|&r| dev_at(r)).collect::<Result<_>>()?;
    let expected = match target {
        AsymptoticTarget::CaseD(_) => 0.5,
        AsymptoticTarget::K(fam, KRegime::I | KRegime::III) => {
            let k = fam.params().k as f64;
            (k - 1.0) / k
        }
        AsymptoticTarget::K(_, _) => 0.0,
    };
    let slope = if deviation.iter().all(|d| *d == 0.0) { None } else { loglog_slope(radii, &deviation) };
    Ok(AsymptoticFit { radii: radii.to_vec(), deviation, slope, expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgeom::{c, cr};
    use crate::families::{CaseDParams, CaseIII, CaseIIIParams, KFamilyParams, ZSurface};

    fn plane() -> impl Surface {
        // case i with z₄ = e₁, z₅ = e₂: Φ = y₁e₁ + y₂e₂ + t·e₁×e₂
        FdSurface::new(|y1: f64, y2: f64, t: f64| Ok(Complex3::real(y1, y2, 0.5 * t)))
    }

    #[test]
    fn flat_plane_residuals_vanish() {
        let pts = lattice([-2.0; 3], [2.0; 3], [4, 4, 4]);
        let rep = sl_residual(&plane(), &pts).unwrap();
        assert_eq!(rep.samples, 64);
        assert!(rep.worst() < 1e-10, "{rep:?}");
        assert!(immersion_test(&plane(), [0.3, 0.1, -2.0]).unwrap().0);
    }

    #[test]
    fn case_iii_residuals() {
        let p = CaseIIIParams { a: c(0.4, -0.2), b: c(0.1, 0.3), d: c(0.6, 0.0), e: c(0.4, 0.0) };
        let s = ZSurface(CaseIII::new(p).unwrap());
        let pts = lattice([-1.5, -1.5, -3.0], [1.5, 1.5, 3.0], [10, 10, 10]);
        let rep = sl_residual(&s, &pts).unwrap();
        assert!(rep.worst() < 1e-9, "{rep:?}");
    }

    #[test]
    fn broken_state_detected() {
        let mut s = ZState::zero();
        s.z[3] = Complex3::e(0);
        s.z[4] = Complex3::e(0).scale(c(0.0, 1.0));
        // ω(z₄, z₅) = 1
        assert!((omega(&s.z[3], &s.z[4]) - 1.0).abs() < 1e-15);
        let surf = FdSurface::new(move |y1, y2, _t| Ok(assemble_phi_z(&s, y1, y2)));
        let rep = sl_residual(&surf, &lattice([-1.0; 3], [1.0; 3], [3, 3, 3])).unwrap();
        assert!(rep.max_omega > 0.1);
    }

    #[test]
    fn case_iii_with_dependent_frame_is_not_immersed() {
        // A = B = 0 makes z₅ vanish at t = 0
        let p = CaseIIIParams { d: c(0.6, 0.2), e: c(-0.1, 0.3), ..Default::default() };
        let fam = CaseIII::new(p).unwrap();
        let (s, _) = fam.z_state(0.0).unwrap();
        assert_eq!(s.z[4], Complex3::ZERO);
        let (ok, n) = immersion_test(&ZSurface(&fam), [0.0, 0.0, 0.0]).unwrap();
        assert!(!ok, "{n}");
        let ts: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let roots = singular_scan(&fam, &ts).unwrap();
        assert!(roots.iter().any(|r| r.abs() < 1e-9), "{roots:?}");
    }

    #[test]
    fn scan_finds_constructed_root() {
        let p = CaseIIIParams { a: c(0.4, -0.2), b: c(0.1, 0.3), d: c(0.6, 0.0), e: c(0.4, 0.0) };
        let fam = CaseIII::new(p).unwrap();
        let ts: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        let generic = singular_scan(&fam, &ts).unwrap();
        assert!(generic.is_empty(), "{generic:?}");
        let t0 = 0.437;
        let zero_frame = |t: f64| Ok((Complex3::e(0).scale_re(1.0 + t * t), Complex3::e(1).scale_re(t - t0)));
        let roots = scan_frame(zero_frame, &ts).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - t0).abs() < 1e-9);
    }

    #[test]
    fn slope_of_synthetic_remainder() {
        let eps = geometric_ladder(1e-3, 1e-1, 8);
        let dev: Vec<f64> = eps.iter().map(|e| 2.5 * e * e * e).collect();
        assert!((loglog_slope(&eps, &dev).unwrap() - 3.0).abs() < 1e-10);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    fn branch() -> BranchData {
        // u, w, u×w span a real 3-plane; v, x in the real span too
        let u = Complex3::real(1.0, 0.0, 0.0);
        let w = Complex3::real(0.3, 1.0, 0.0);
        let v = Complex3::real(0.2, -0.4, 0.7);
        let x = Complex3::real(-0.5, 0.1, 0.3);
        BranchData { u, v, w, x }
    }

    #[test]
    fn branch_fit_slope() {
        let d = branch();
        assert!(d.constraint_residual() < 1e-15);
        match branch_model_fit(&d, &geometric_ladder(1e-3, 1e-1, 8)).unwrap() {
            BranchOutcome::Fitted { slope, .. } => assert!(slope >= 2.9, "{slope}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn branch_special_configurations() {
        let eps = geometric_ladder(1e-3, 1e-1, 8);
        let cone = BranchData { u: Complex3::ZERO, ..branch() };
        assert_eq!(branch_model_fit(&cone, &eps).unwrap(), BranchOutcome::Cone);
        let dep = BranchData { w: branch().u.scale_re(2.0), ..branch() };
        assert!(matches!(branch_model_fit(&dep, &eps).unwrap(), BranchOutcome::Unsupported(_)));
        let bad = BranchData {
            w: Complex3::new(cr(0.0), c(0.0, 1.0), cr(0.0)),
            x: Complex3::new(cr(0.0), cr(1.0), cr(0.0)),
            ..branch()
        };
        assert!(branch_model_fit(&bad, &eps).is_err());
    }

    #[test]
    fn periodicity_examples() {
        let (s, al) = periodicity_from_pq(1, 3).unwrap();
        assert_eq!((s.a, s.lambda), ([-8, 3, 5], 7));
        assert_eq!(s.alpha_ints(), [15, 40, 24]);
        assert!(al.harmonic_residual().abs() < 1e-15);
        let (s, _) = periodicity_from_pq(1, 5).unwrap();
        assert_eq!((s.a, s.lambda, s.divided), ([-8, 5, 3], 7, true));
        let (s, _) = periodicity_from_pq(2, 7).unwrap();
        assert_eq!((s.a, s.lambda), ([-15, 7, 8], 13));
        assert!(periodicity_from_pq(1, 2).is_err());
        assert!(periodicity_from_pq(2, 6).is_err());
        assert_eq!(periodicity_scan(3).unwrap().len(), 1);
    }

    #[test]
    fn rational_cased_flip_relation() {
        let (_, al) = periodicity_from_pq(1, 3).unwrap();
        let p = CaseDParams::complete(
            al,
            c(0.3, -0.1),
            c(0.2, 0.25),
            c(-0.15, 0.4),
            0.5,
            [c(0.1, 0.0), cr(-0.2), c(0.0, 0.3)],
        )
        .unwrap();
        let fam = CaseD::new(p).unwrap();
        let s = ZSurface(crate::families::Packed(&fam));
        let pts = lattice([-1.0, -1.0, 0.0], [1.0, 1.0, 3.0], [3, 3, 5]);
        assert!(check_periodicity(&s, PeriodRelation::FlipShift(2.0 * PI), &pts).unwrap() <= 1e-10);
        assert!(check_periodicity(&s, PeriodRelation::Periodic(4.0 * PI), &pts).unwrap() <= 1e-10);
        assert!(check_periodicity(&s, PeriodRelation::Periodic(2.0 * PI), &pts).unwrap() > 1e-3);
    }

    #[test]
    fn case_iii_period() {
        let p = CaseIIIParams { d: c(0.6, 0.2), e: c(-0.1, 0.3), ..Default::default() };
        let s = ZSurface(CaseIII::new(p).unwrap());
        let pts = lattice([-1.0, -1.0, 0.0], [1.0, 1.0, 3.0], [3, 3, 4]);
        assert!(check_periodicity(&s, PeriodRelation::Periodic(4.0 * PI), &pts).unwrap() <= 1e-12);
    }

    #[test]
    fn cased_asymptotics() {
        let (_, al) = periodicity_from_pq(1, 3).unwrap();
        let radii = geometric_ladder(1e2, 1e6, 8);
        let zero = CaseD::new(CaseDParams::new(al)).unwrap();
        let fit = asymptotic_fit(&AsymptoticTarget::CaseD(&zero), &radii).unwrap();
        assert!(fit.slope.is_none());
        let p = CaseDParams::complete(al, c(0.03, -0.01), c(0.02, 0.01), c(-0.01, 0.02), 0.5, [C0; 3]).unwrap();
        let fam = CaseD::new(p).unwrap();
        let fit = asymptotic_fit(&AsymptoticTarget::CaseD(&fam), &radii).unwrap();
        assert!((fit.slope.unwrap() - 0.5).abs() < 0.1, "{fit:?}");
        // the double-cover symmetry of Φ₀
        for (y1, y2, t) in [(1.3, -0.2, 0.4), (-2.0, 0.5, 3.1)] {
            assert_eq!(cased_phi0(&fam, y1, y2, t), cased_phi0(&fam, -y1, -y2, t));
        }
    }

    const C0: crate::cgeom::C64 = crate::cgeom::C64 { re: 0.0, im: 0.0 };

    #[test]
    fn k_asymptotics() {
        let p = KFamilyParams {
            k: 4,
            a1: 0.0,
            a: vec![C0, c(0.2, 0.1), c(0.5, -0.3)],
            b: vec![c(0.1, 0.0), c(0.0, 0.2), c(-0.1, 0.1), c(0.3, 0.2)],
        };
        let fam = KFamily::new(p).unwrap();
        let radii = geometric_ladder(1e2, 1e6, 8);
        let fit = asymptotic_fit(&AsymptoticTarget::K(&fam, KRegime::I), &radii).unwrap();
        assert!((fit.slope.unwrap() - 0.75).abs() < 0.1, "{fit:?}");
        let pts = lattice([-1.0, -1.0, 0.0], [1.0, 1.0, 3.0], [3, 3, 4]);
        let s = crate::families::PQSurface(&fam);
        assert!(check_periodicity(&s, PeriodRelation::FlipShift(PI), &pts).unwrap() <= 1e-10);
    }
}
