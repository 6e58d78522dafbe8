//! Elliptic-function solutions of the w-system, and numerically integrated
//! p, q, r over an arbitrary diagonal start.

use std::f64::consts::FRAC_PI_2;

use super::cased::AlphaTriple;
use super::WpqrCurve;
use crate::cgeom::{cr, expi, C64, I};
use crate::error::{Error, Result};
use crate::flow::{lemma91_invariants, rhs_wpqr, DenseTrajectory, WPQRState};
use crate::specfun::{cubic_roots_sorted, jacobi, sigma_tau, theta_integrals, EllipticModulus};

/// The value of θ₁(0) for which the phased w solves the w-system: the
/// conserved quantity forces sin(θ₁+θ₂+θ₃) = 1 where u reaches γ₁.
pub const CASEC_THETA1_0: f64 = FRAC_PI_2;

/// Admissibility tolerance for the start of a numerically integrated curve.
pub const ADMISSIBLE_TOL: f64 = 1e-9;

/// w₁ = √(α₁+α₂) sn(σt,τ), w₂ = √(α₁+α₂) cn(σt,τ), w₃ = √(α₁+α₃) dn(σt,τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseBW {
    alphas: AlphaTriple,
    amp12: f64,
    sigma: f64,
    tau: EllipticModulus,
}

impl CaseBW {
    pub fn new(alphas: AlphaTriple) -> Result<Self> {
        let [a1, a2, a3] = alphas.get();
        if a2 >= a3 {
            return Err(Error::InvalidInput("case b needs a2 < a3".into()));
        }
        let sigma = (a1 + a3).sqrt();
        let tau = EllipticModulus::new(((a1 + a2) / (a1 + a3)).sqrt())?;
        Ok(CaseBW { alphas, amp12: (a1 + a2).sqrt(), sigma, tau })
    }

    pub fn alphas(&self) -> AlphaTriple {
        self.alphas
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn modulus(&self) -> EllipticModulus {
        self.tau
    }

    pub fn w(&self, t: f64) -> [f64; 3] {
        let (sn, cn, dn) = jacobi(self.sigma * t, self.tau);
        [self.amp12 * sn, self.amp12 * cn, self.sigma * dn]
    }

    pub fn dw(&self, t: f64) -> [f64; 3] {
        let (sn, cn, dn) = jacobi(self.sigma * t, self.tau);
        let (a, s, k) = (self.amp12, self.sigma, self.tau.k());
        [a * s * cn * dn, -a * s * sn * dn, -s * s * k * k * sn * cn]
    }
}

impl WpqrCurve for CaseBW {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        let s = WPQRState { w: self.w(t).map(cr), ..Default::default() };
        let d = WPQRState { w: self.dw(t).map(cr), ..Default::default() };
        Ok((s, d))
    }
}

pub fn caseb_w(t: f64, alphas: &AlphaTriple) -> Result<[f64; 3]> {
    Ok(CaseBW::new(*alphas)?.w(t))
}

/// Phased solution: u = γ₁ + (γ₂−γ₁)sn²(σt,τ) and
/// w = (e^{iθ₁}√(α₁+u), e^{iθ₂}√(α₂−u), e^{iθ₃}√(α₃−u)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseCW {
    alphas: AlphaTriple,
    amp: f64,
    theta1_0: f64,
    gamma: (f64, f64, f64),
    sigma: f64,
    tau: EllipticModulus,
}

impl CaseCW {
    pub fn new(alphas: AlphaTriple, amp: f64, theta1_0: f64) -> Result<Self> {
        if !amp.is_finite() || !theta1_0.is_finite() {
            return Err(Error::InvalidInput("non-finite case-c parameter".into()));
        }
        let [a1, a2, a3] = alphas.get();
        let gamma = cubic_roots_sorted(a1, a2, a3, amp)?;
        let (sigma, tau) = sigma_tau(gamma);
        Ok(CaseCW { alphas, amp, theta1_0, gamma, sigma, tau: EllipticModulus::new(tau.min(1.0))? })
    }

    pub fn gamma(&self) -> (f64, f64, f64) {
        self.gamma
    }

    pub fn u(&self, t: f64) -> (f64, f64) {
        let (sn, cn, dn) = jacobi(self.sigma * t, self.tau);
        let span = self.gamma.1 - self.gamma.0;
        (self.gamma.0 + span * sn * sn, 2.0 * span * self.sigma * sn * cn * dn)
    }

    pub fn thetas(&self, t: f64) -> Result<[f64; 3]> {
        let [a1, a2, a3] = self.alphas.get();
        let (x, y, z) = theta_integrals((a1, a2, a3), self.amp, self.gamma, t, self.theta1_0)?;
        Ok([x, y, z])
    }

    /// (u, θ, w) at t, and the t-derivative of w.
    pub fn eval(&self, t: f64) -> Result<(f64, [f64; 3], [C64; 3], [C64; 3])> {
        let [a1, a2, a3] = self.alphas.get();
        let (u, du) = self.u(t);
        let th = self.thetas(t)?;
        let mods = [(a1 + u).max(0.0).sqrt(), (a2 - u).max(0.0).sqrt(), (a3 - u).max(0.0).sqrt()];
        let dmods = [du, -du, -du];
        let dth = [-self.amp / (a1 + u), self.amp / (a2 - u), self.amp / (a3 - u)];
        let mut w = [C64::default(); 3];
        let mut dw = [C64::default(); 3];
        for j in 0..3 {
            let ph = expi(th[j]);
            w[j] = ph * mods[j];
            let dm = if mods[j] > 0.0 { dmods[j] / (2.0 * mods[j]) } else { 0.0 };
            dw[j] = ph * (I * dth[j] * mods[j] + dm);
        }
        Ok((u, th, w, dw))
    }
}

impl WpqrCurve for CaseCW {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        let (_, _, w, dw) = self.eval(t)?;
        Ok((WPQRState { w, ..Default::default() }, WPQRState { w: dw, ..Default::default() }))
    }
}

pub fn casec_wu(t: f64, alphas: &AlphaTriple, amp: f64, theta1_0: f64) -> Result<(f64, [f64; 3], [C64; 3])> {
    let (u, th, w, _) = CaseCW::new(*alphas, amp, theta1_0)?.eval(t)?;
    Ok((u, th, w))
}

type WpqrRhs = fn(&WPQRState) -> WPQRState;

/// Numerical solution of the full diagonal system from a start at t = 0.
pub struct IntegratedWpqr {
    start: WPQRState,
    traj: DenseTrajectory<WPQRState, WpqrRhs>,
}

impl std::fmt::Debug for IntegratedWpqr {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("IntegratedWpqr").field("start", &self.start).finish()
    }
}

impl IntegratedWpqr {
    /// The start must satisfy the three invariants Im(w·p̄), Im(w·q̄), Im(p·q̄) = 0.
    pub fn new(start: WPQRState, h: f64) -> Result<Self> {
        let inv = lemma91_invariants(&start.w, &start.p, &start.q);
        let worst = inv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > ADMISSIBLE_TOL {
            return Err(Error::Inadmissible(format!("start violates the diagonal constraints ({worst:e})")));
        }
        let traj = DenseTrajectory::new(rhs_wpqr as WpqrRhs, start, 0.0, h)?;
        Ok(IntegratedWpqr { start, traj })
    }

    pub fn start(&self) -> &WPQRState {
        &self.start
    }

    pub fn state(&self, t: f64) -> Result<WPQRState> {
        self.traj.eval(t)
    }
}

impl WpqrCurve for IntegratedWpqr {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        let s = self.traj.eval(t)?;
        Ok((s, rhs_wpqr(&s)))
    }
}
