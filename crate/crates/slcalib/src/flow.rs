//! Right-hand sides of the z-flow, the (p, q) flow and the diagonal
//! (w, p, q, r) reduction, their first integrals, and a deterministic
//! Runge–Kutta integrator.

use crate::cgeom::{cross, omega, Complex3, C64};
use crate::error::{Error, Result};
use std::sync::RwLock;

/// The six C³ vectors z₁..z₆ of the z-flow.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZState {
    pub z: [Complex3; 6],
}

impl ZState {
    pub fn new(z: [Complex3; 6]) -> Self {
        ZState { z }
    }

    pub fn zero() -> Self {
        ZState { z: [Complex3::ZERO; 6] }
    }
}

/// p₀..p_k, q₁, q₂ of the polynomial-curve flow.
#[derive(Debug, Clone, PartialEq)]
pub struct PQState {
    pub p: Vec<Complex3>,
    pub q1: Complex3,
    pub q2: Complex3,
}

impl PQState {
    pub fn new(p: Vec<Complex3>, q1: Complex3, q2: Complex3) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidInput("need p_0..p_k with k >= 1".into()));
        }
        Ok(PQState { p, q1, q2 })
    }

    pub fn zero(k: usize) -> Self {
        PQState { p: vec![Complex3::ZERO; k + 1], q1: Complex3::ZERO, q2: Complex3::ZERO }
    }

    pub fn k(&self) -> usize {
        self.p.len() - 1
    }
}

/// Scalars of the diagonal reduction: z₁ = (w₁,0,0), z₂ = (0,w₂,0),
/// z₃ = (0,0,w₃), z₄ = (p₁,p₂,q₃), z₅ = (q₁,−q₂,p₃), z₆ = (r₁,r₂,r₃).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WPQRState {
    pub w: [C64; 3],
    pub p: [C64; 3],
    pub q: [C64; 3],
    pub r: [C64; 3],
}

impl WPQRState {
    pub fn to_z(&self) -> ZState {
        let o = C64::new(0.0, 0.0);
        let [w1, w2, w3] = self.w;
        let [p1, p2, p3] = self.p;
        let [q1, q2, q3] = self.q;
        ZState::new([
            Complex3::new(w1, o, o),
            Complex3::new(o, w2, o),
            Complex3::new(o, o, w3),
            Complex3::new(p1, p2, q3),
            Complex3::new(q1, -q2, p3),
            Complex3::from_array(self.r),
        ])
    }

    /// Inverse of `to_z`; off-diagonal entries of z₁..z₃ are dropped.
    pub fn from_z(s: &ZState) -> Self {
        let z = &s.z;
        WPQRState {
            w: [z[0][0], z[1][1], z[2][2]],
            p: [z[3][0], z[3][1], z[4][2]],
            q: [z[4][0], -z[4][1], z[3][2]],
            r: z[5].as_array(),
        }
    }
}

/// Vector-space operations the integrator needs.
pub trait OdeState: Clone {
    /// self + a·other
    fn axpy(&self, a: f64, other: &Self) -> Self;
    fn max_abs(&self) -> f64;
    fn all_finite(&self) -> bool;
}

fn c3_axpy(x: &Complex3, a: f64, y: &Complex3) -> Complex3 {
    *x + y.scale_re(a)
}

fn c3_max(x: &Complex3) -> f64 {
    x.as_array().iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

impl OdeState for ZState {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        let mut z = self.z;
        for j in 0..6 {
            z[j] = c3_axpy(&self.z[j], a, &o.z[j]);
        }
        ZState { z }
    }
    fn max_abs(&self) -> f64 {
        self.z.iter().map(c3_max).fold(0.0, f64::max)
    }
    fn all_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }
}

impl OdeState for PQState {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        PQState {
            p: self.p.iter().zip(&o.p).map(|(x, y)| c3_axpy(x, a, y)).collect(),
            q1: c3_axpy(&self.q1, a, &o.q1),
            q2: c3_axpy(&self.q2, a, &o.q2),
        }
    }
    fn max_abs(&self) -> f64 {
        self.p.iter().chain([&self.q1, &self.q2]).map(c3_max).fold(0.0, f64::max)
    }
    fn all_finite(&self) -> bool {
        self.p.iter().chain([&self.q1, &self.q2]).all(|v| v.is_finite())
    }
}

fn arr_axpy(x: &[C64; 3], a: f64, y: &[C64; 3]) -> [C64; 3] {
    [x[0] + y[0] * a, x[1] + y[1] * a, x[2] + y[2] * a]
}

impl OdeState for WPQRState {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        WPQRState {
            w: arr_axpy(&self.w, a, &o.w),
            p: arr_axpy(&self.p, a, &o.p),
            q: arr_axpy(&self.q, a, &o.q),
            r: arr_axpy(&self.r, a, &o.r),
        }
    }
    fn max_abs(&self) -> f64 {
        self.to_z().max_abs()
    }
    fn all_finite(&self) -> bool {
        [self.w, self.p, self.q, self.r].iter().flatten().all(|z| z.is_finite())
    }
}

impl OdeState for Vec<f64> {
    fn axpy(&self, a: f64, o: &Self) -> Self {
        self.iter().zip(o).map(|(x, y)| x + a * y).collect()
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// dz₁..dz₆ of the z-flow.
pub fn rhs_z(s: &ZState) -> ZState {
    let [z1, z2, z3, z4, z5, _] = &s.z;
    ZState::new([
        cross(z2, z3).scale_re(2.0),
        cross(z1, z3).scale_re(2.0),
        cross(z1, z2).scale_re(-2.0),
        cross(z1, z5) + cross(z2, z5) - cross(z3, z4),
        -cross(z1, z4) + cross(z2, z4) + cross(z3, z5),
        cross(z4, z5),
    ])
}

/// Derivatives of the (p, q) flow.
pub fn rhs_pq(s: &PQState) -> PQState {
    let k = s.k();
    let mut dp = Vec::with_capacity(k + 1);
    dp.push(cross(&s.p[1], &s.q1).scale_re(2.0));
    for j in 1..k {
        let jf = j as f64;
        dp.push(cross(&s.p[j + 1], &s.q1).scale_re(2.0 * (jf + 1.0)) + cross(&s.p[j], &s.q2).scale_re(2.0 * jf));
    }
    dp.push(cross(&s.p[k], &s.q2).scale_re(2.0 * k as f64));
    PQState { p: dp, q1: cross(&s.q1, &s.q2).scale_re(-2.0), q2: Complex3::ZERO }
}

/// dw/dt for the diagonal reduction.
pub fn rhs_w(w: &[C64; 3]) -> [C64; 3] {
    [(w[1] * w[2]).conj(), -(w[2] * w[0]).conj(), -(w[0] * w[1]).conj()]
}

/// The linear system satisfied by both p and q given w.
pub fn rhs_pq_linear(w: &[C64; 3], p: &[C64; 3]) -> [C64; 3] {
    let (w, p) = ([w[0].conj(), w[1].conj(), w[2].conj()], [p[0].conj(), p[1].conj(), p[2].conj()]);
    [(w[1] * p[2] + w[2] * p[1]) * 0.5, -(w[2] * p[0] + w[0] * p[2]) * 0.5, -(w[0] * p[1] + w[1] * p[0]) * 0.5]
}

/// dr/dt given p and q.
pub fn rhs_r(p: &[C64; 3], q: &[C64; 3]) -> [C64; 3] {
    let (p, q) = ([p[0].conj(), p[1].conj(), p[2].conj()], [q[0].conj(), q[1].conj(), q[2].conj()]);
    [(p[1] * p[2] + q[2] * q[1]) * 0.5, (q[2] * q[0] - p[0] * p[2]) * 0.5, -(p[0] * q[1] + p[1] * q[0]) * 0.5]
}

pub fn rhs_wpqr(s: &WPQRState) -> WPQRState {
    WPQRState { w: rhs_w(&s.w), p: rhs_pq_linear(&s.w, &s.p), q: rhs_pq_linear(&s.w, &s.q), r: rhs_r(&s.p, &s.q) }
}

/// Real (u, v) systems for real w; `sign` = +1 for u, −1 for v.
pub fn rhs_uv(w: &[f64; 3], u: &[f64; 3], sign: f64) -> [f64; 3] {
    [
        sign * 0.5 * (w[1] * u[2] + w[2] * u[1]),
        -sign * 0.5 * (w[2] * u[0] + w[0] * u[2]),
        -sign * 0.5 * (w[0] * u[1] + w[1] * u[0]),
    ]
}

/// The six ω-constraints of the z-flow.
pub fn constraint_residuals_z(s: &ZState) -> [f64; 6] {
    let [z1, z2, z3, z4, z5, _] = &s.z;
    [
        omega(z2, z3),
        omega(z1, z3),
        omega(z1, z2),
        omega(z1, z5) + omega(z2, z5) - omega(z3, z4),
        -omega(z1, z4) + omega(z2, z4) + omega(z3, z5),
        omega(z4, z5),
    ]
}

/// ω(q₁,q₂), ω(p_k,q₂), then j ω(p_j,q₁) + (j−1) ω(p_{j−1},q₂) for j = 1..k.
pub fn constraint_residuals_pq(s: &PQState) -> Vec<f64> {
    let k = s.k();
    let mut out = Vec::with_capacity(k + 2);
    out.push(omega(&s.q1, &s.q2));
    out.push(omega(&s.p[k], &s.q2));
    for j in 1..=k {
        let jf = j as f64;
        out.push(jf * omega(&s.p[j], &s.q1) + (jf - 1.0) * omega(&s.p[j - 1], &s.q2));
    }
    out
}

fn lorentz_im(a: &[C64; 3], b: &[C64; 3]) -> f64 {
    (a[0] * b[0].conj() - a[1] * b[1].conj() - a[2] * b[2].conj()).im
}

/// Im(w·p̄), Im(w·q̄), Im(p·q̄) in the signature (+,−,−).
pub fn lemma91_invariants(w: &[C64; 3], p: &[C64; 3], q: &[C64; 3]) -> [f64; 3] {
    [lorentz_im(w, p), lorentz_im(w, q), lorentz_im(p, q)]
}

/// z₄ = e z₁ + e z₂ + f z₃, z₅ = f z₁ − f z₂ + e z₃.
pub fn corollary51_z45(z1: &Complex3, z2: &Complex3, z3: &Complex3, e: f64, f: f64) -> (Complex3, Complex3) {
    (e * *z1 + e * *z2 + f * *z3, f * *z1 - f * *z2 + e * *z3)
}

/// Given three solutions of the u-system as the rows of `u`, returns the
/// matrix whose columns are the matching solutions of the v-system:
/// (u · diag(1,−1,−1))⁻¹.
pub fn dual_solutions(u: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| if j == 0 { u[i][j] } else { -u[i][j] });
    let scale = m.abs().max();
    if scale == 0.0 || m.determinant().abs() <= 1e-12 * scale.powi(3) {
        return Err(Error::Degenerate("u-solutions are linearly dependent".into()));
    }
    let inv = m.try_inverse().ok_or_else(|| Error::Degenerate("singular u-matrix".into()))?;
    Ok([
        [inv[(0, 0)], inv[(0, 1)], inv[(0, 2)]],
        [inv[(1, 0)], inv[(1, 1)], inv[(1, 2)]],
        [inv[(2, 0)], inv[(2, 1)], inv[(2, 2)]],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorCfg {
    pub method: Method,
    /// Fixed step for RK4, absolute/relative tolerance for RK45.
    pub step_or_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        IntegratorCfg { method: Method::Rk4, step_or_tol: 1e-3, max_steps: 100_000_000 }
    }
}

impl IntegratorCfg {
    pub fn rk4(h: f64) -> Self {
        IntegratorCfg { method: Method::Rk4, step_or_tol: h, max_steps: 100_000_000 }
    }

    pub fn rk45(tol: f64) -> Self {
        IntegratorCfg { method: Method::Rk45, step_or_tol: tol, max_steps: 10_000_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_or_tol > 0.0 && self.step_or_tol.is_finite()) {
            return Err(Error::InvalidInput("integrator step/tolerance must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

fn rk4_step<S: OdeState, F: Fn(&S) -> S>(f: &F, s: &S, h: f64) -> S {
    let k1 = f(s);
    let k2 = f(&s.axpy(0.5 * h, &k1));
    let k3 = f(&s.axpy(0.5 * h, &k2));
    let k4 = f(&s.axpy(h, &k3));
    s.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

/// Integrates from t0 to t1, calling `observe` on every accepted (t, state)
/// including the initial one.
pub fn integrate_observe<S, F, O>(f: F, state0: &S, t0: f64, t1: f64, cfg: &IntegratorCfg, mut observe: O) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> S,
    O: FnMut(f64, &S),
{
    cfg.validate()?;
    if t1 == t0 || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInput("integration interval must be nonempty and finite".into()));
    }
    if !state0.all_finite() {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    observe(t0, state0);
    match cfg.method {
        Method::Rk4 => {
            let n = ((t1 - t0).abs() / cfg.step_or_tol).ceil().max(1.0);
            if n > cfg.max_steps as f64 {
                return Err(Error::Numerical(format!("{n} steps exceed max_steps")));
            }
            let n = n as usize;
            let h = (t1 - t0) / n as f64;
            let mut s = state0.clone();
            for i in 1..=n {
                s = rk4_step(&f, &s, h);
                let t = t0 + i as f64 * h;
                if !s.all_finite() {
                    return Err(Error::Numerical(format!("non-finite state at t = {t}")));
                }
                observe(t, &s);
            }
            Ok(s)
        }
        Method::Rk45 => dopri(&f, state0, t0, t1, cfg, observe),
    }
}

/// Full trajectory as (t, state) pairs.
pub fn integrate<S, F>(f: F, state0: &S, t0: f64, t1: f64, cfg: &IntegratorCfg) -> Result<Vec<(f64, S)>>
where
    S: OdeState,
    F: Fn(&S) -> S,
{
    let mut out = Vec::new();
    integrate_observe(f, state0, t0, t1, cfg, |t, s| out.push((t, s.clone())))?;
    Ok(out)
}

/// Final state only.
pub fn integrate_final<S, F>(f: F, state0: &S, t0: f64, t1: f64, cfg: &IntegratorCfg) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> S,
{
    integrate_observe(f, state0, t0, t1, cfg, |_, _| {})
}

/// Lazily extended RK4 trajectory through (t0, s0) on the grid t0 + n·h,
/// evaluated off-grid by one partial RK4 step from the nearest node toward
/// t0. Safe to query from several threads.
pub struct DenseTrajectory<S, F> {
    f: F,
    t0: f64,
    h: f64,
    max_nodes: usize,
    fwd: RwLock<Vec<S>>,
    bwd: RwLock<Vec<S>>,
}

impl<S, F> DenseTrajectory<S, F>
where
    S: OdeState,
    F: Fn(&S) -> S,
{
    pub fn new(f: F, s0: S, t0: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidInput("dense trajectory needs finite t0 and h > 0".into()));
        }
        if !s0.all_finite() {
            return Err(Error::InvalidInput("non-finite initial state".into()));
        }
        Ok(DenseTrajectory {
            f,
            t0,
            h,
            max_nodes: 20_000_000,
            fwd: RwLock::new(vec![s0.clone()]),
            bwd: RwLock::new(vec![s0]),
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, t: f64) -> Result<S> {
        if !t.is_finite() {
            return Err(Error::InvalidInput("non-finite time".into()));
        }
        let dt = t - self.t0;
        let n = (dt.abs() / self.h).floor();
        if n >= self.max_nodes as f64 {
            return Err(Error::Numerical(format!("t = {t} is too far from the initial time")));
        }
        let n = n as usize;
        let (nodes, dir) = if dt >= 0.0 { (&self.fwd, 1.0) } else { (&self.bwd, -1.0) };
        let node = {
            let read = nodes.read().unwrap_or_else(|e| e.into_inner());
            read.get(n).cloned()
        };
        let node = match node {
            Some(s) => s,
            None => {
                let mut w = nodes.write().unwrap_or_else(|e| e.into_inner());
                while w.len() <= n {
                    let next = rk4_step(&self.f, w.last().unwrap(), dir * self.h);
                    if !next.all_finite() {
                        let tn = self.t0 + dir * self.h * w.len() as f64;
                        return Err(Error::Numerical(format!("non-finite state at t = {tn}")));
                    }
                    w.push(next);
                }
                w[n].clone()
            }
        };
        let rem = dt - dir * self.h * n as f64;
        if rem == 0.0 {
            return Ok(node);
        }
        let s = rk4_step(&self.f, &node, rem);
        if !s.all_finite() {
            return Err(Error::Numerical(format!("non-finite state at t = {t}")));
        }
        Ok(s)
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri<S, F, O>(f: &F, s0: &S, t0: f64, t1: f64, cfg: &IntegratorCfg, mut observe: O) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> S,
    O: FnMut(f64, &S),
{
    let tol = cfg.step_or_tol;
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut s = s0.clone();
    let mut h = dir * ((t1 - t0).abs() * 1e-3).min(1e-2);
    let mut k1 = f(&s);
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        if steps >= cfg.max_steps {
            return Err(Error::Numerical(format!("max_steps exceeded at t = {t}")));
        }
        steps += 1;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k2 = f(&s.axpy(h * A21, &k1));
        let k3 = f(&s.axpy(h * A31, &k1).axpy(h * A32, &k2));
        let k4 = f(&s.axpy(h * A41, &k1).axpy(h * A42, &k2).axpy(h * A43, &k3));
        let k5 = f(&s.axpy(h * A51, &k1).axpy(h * A52, &k2).axpy(h * A53, &k3).axpy(h * A54, &k4));
        let k6 = f(&s.axpy(h * A61, &k1).axpy(h * A62, &k2).axpy(h * A63, &k3).axpy(h * A64, &k4).axpy(h * A65, &k5));
        let next = s.axpy(h * B1, &k1).axpy(h * B3, &k3).axpy(h * B4, &k4).axpy(h * B5, &k5).axpy(h * B6, &k6);
        let k7 = f(&next);
        let err = k1
            .axpy(-1.0, &k1)
            .axpy(h * E1, &k1)
            .axpy(h * E3, &k3)
            .axpy(h * E4, &k4)
            .axpy(h * E5, &k5)
            .axpy(h * E6, &k6)
            .axpy(h * E7, &k7)
            .max_abs();
        let scale = tol * (1.0 + s.max_abs().max(next.max_abs()));
        if !next.all_finite() {
            return Err(Error::Numerical(format!("non-finite state at t = {}", t + h)));
        }
        if err <= scale {
            t += h;
            s = next;
            k1 = k7;
            observe(t, &s);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numerical(format!("step size underflow at t = {t}")));
        }
    }
    Ok(s)
}
