//! Diagonal solutions over w = (tanh t, sech t, sech t).

use super::WpqrCurve;
use crate::cgeom::{c, cr, C64};
use crate::error::{Error, Result};
use crate::flow::{rhs_r, DenseTrajectory, WPQRState};
use crate::specfun::f_cosh;

/// RK4 step for the r-integration.
pub const R_STEP: f64 = 1e-3;

const PARAM_TOL: f64 = 1e-12;

/// Real coefficients of p (unprimed) and q (primed). A and D are fixed to 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaseAParams {
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub b2: f64,
    pub c2: f64,
    pub e2: f64,
    pub f2: f64,
}

impl CaseAParams {
    /// BE′ + CF′ − B′E − C′F, which must vanish.
    pub fn constraint(&self) -> f64 {
        self.b * self.e2 + self.c * self.f2 - self.b2 * self.e - self.c2 * self.f
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.b, self.c, self.e, self.f, self.b2, self.c2, self.e2, self.f2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite case-a parameter".into()));
        }
        let r = self.constraint();
        if r.abs() > PARAM_TOL {
            return Err(Error::Inadmissible(format!("case-a constraint BE' + CF' = B'E + C'F violated (value {r:e})")));
        }
        Ok(())
    }

    pub fn p_coeffs(&self) -> [f64; 6] {
        [0.0, self.b, self.c, 0.0, self.e, self.f]
    }

    pub fn q_coeffs(&self) -> [f64; 6] {
        [0.0, self.b2, self.c2, 0.0, self.e2, self.f2]
    }
}

pub fn casea_w(t: f64) -> [C64; 3] {
    let se = 1.0 / t.cosh();
    [cr(t.tanh()), cr(se), cr(se)]
}

fn casea_dw(t: f64) -> [C64; 3] {
    let se = 1.0 / t.cosh();
    let d = -se * t.tanh();
    [cr(se * se), cr(d), cr(d)]
}

/// The general solution of the linear p-system over case-a w with real
/// coefficients [A, B, C, D, E, F], given f = ∫₀ᵗ √cosh. Returns the value
/// and its t-derivative. The D-mode of p₁ is −iDf/√cosh; with −iDf/cosh the
/// system is not satisfied.
pub fn casea_p_general(t: f64, f: f64, k: &[f64; 6]) -> ([C64; 3], [C64; 3]) {
    let [a, b, cc, d, e, ff] = *k;
    let (ch, sh, th) = (t.cosh(), t.sinh(), t.tanh());
    let se = 1.0 / ch;
    let s = ch.sqrt();
    let p1 = c(a * th + b * (f * th - 2.0 * s), -d * f / s + e / s);
    let dp1 = c(a * se * se + b * f * se * se, -d * (1.0 - f * sh / (2.0 * s * ch)) - e * sh / (2.0 * s * ch));
    let re23 = a * se + b * f * se;
    let im23 = d * (ch - f * sh / (2.0 * s)) + e * sh / (2.0 * s);
    let dre23 = -a * se * th + b * (1.0 / s - f * se * th);
    let dim23 = d * (0.5 * sh - f * ch / (2.0 * s) + f * sh * sh / (4.0 * s * ch))
        + e * (ch / (2.0 * s) - sh * sh / (4.0 * s * ch));
    let (cs, dcs) = (cc * s, cc * sh / (2.0 * s));
    let (fs, dfs) = (ff / s, -ff * sh / (2.0 * s * ch));
    (
        [p1, c(re23 + cs, im23 + fs), c(re23 - cs, im23 - fs)],
        [dp1, c(dre23 + dcs, dim23 + dfs), c(dre23 - dcs, dim23 - dfs)],
    )
}

type Rhs = Box<dyn Fn(&Vec<f64>) -> Vec<f64> + Send + Sync>;

/// Closed-form w, p, q together with r integrated from r(0) = 0.
pub struct CaseA {
    params: CaseAParams,
    traj: DenseTrajectory<Vec<f64>, Rhs>,
}

impl std::fmt::Debug for CaseA {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("CaseA").field("params", &self.params).finish()
    }
}

fn split(r: &[f64]) -> [C64; 3] {
    [c(r[0], r[1]), c(r[2], r[3]), c(r[4], r[5])]
}

impl CaseA {
    pub fn new(params: CaseAParams) -> Result<Self> {
        params.validate()?;
        let (kp, kq) = (params.p_coeffs(), params.q_coeffs());
        // state: t, f(t), Re/Im of r1, r2, r3
        let rhs: Rhs = Box::new(move |s: &Vec<f64>| {
            let (t, f) = (s[0], s[1]);
            let (p, _) = casea_p_general(t, f, &kp);
            let (q, _) = casea_p_general(t, f, &kq);
            let dr = rhs_r(&p, &q);
            vec![1.0, t.cosh().sqrt(), dr[0].re, dr[0].im, dr[1].re, dr[1].im, dr[2].re, dr[2].im]
        });
        let traj = DenseTrajectory::new(rhs, vec![0.0; 8], 0.0, R_STEP)?;
        Ok(CaseA { params, traj })
    }

    pub fn params(&self) -> &CaseAParams {
        &self.params
    }

    /// w, p, q only; r left at zero.
    pub fn wpq(&self, t: f64) -> WPQRState {
        let f = f_cosh(t);
        WPQRState {
            w: casea_w(t),
            p: casea_p_general(t, f, &self.params.p_coeffs()).0,
            q: casea_p_general(t, f, &self.params.q_coeffs()).0,
            r: [C64::default(); 3],
        }
    }

    pub fn state(&self, t: f64) -> Result<WPQRState> {
        Ok(self.state_and_deriv(t)?.0)
    }

    fn state_and_deriv(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        let s = self.traj.eval(t)?;
        let f = f_cosh(t);
        let (p, dp) = casea_p_general(t, f, &self.params.p_coeffs());
        let (q, dq) = casea_p_general(t, f, &self.params.q_coeffs());
        let state = WPQRState { w: casea_w(t), p, q, r: split(&s[2..]) };
        let deriv = WPQRState { w: casea_dw(t), p: dp, q: dq, r: rhs_r(&p, &q) };
        Ok((state, deriv))
    }
}

impl WpqrCurve for CaseA {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        self.state_and_deriv(t)
    }
}

/// w, p, q and the integrated r at time t.
pub fn casea_wpq(t: f64, p: &CaseAParams) -> Result<WPQRState> {
    CaseA::new(*p)?.state(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{lemma91_invariants, rhs_pq_linear, rhs_w};

    #[test]
    fn zero_params() {
        let s = casea_wpq(0.8, &CaseAParams::default()).unwrap();
        assert_eq!(s.w, casea_w(0.8));
        assert_eq!(s.p, [C64::default(); 3]);
        assert_eq!(s.q, [C64::default(); 3]);
        assert!((s.w[0].re - 0.8f64.tanh()).abs() < 1e-16);
    }

    #[test]
    fn general_solution_solves_linear_system() {
        let k = [0.3, -1.1, 0.7, 0.4, -0.2, 1.3];
        for i in 0..=30 {
            let t = -3.0 + 0.2 * i as f64;
            let (p, dp) = casea_p_general(t, f_cosh(t), &k);
            let rhs = rhs_pq_linear(&casea_w(t), &p);
            for j in 0..3 {
                assert!((dp[j] - rhs[j]).norm() < 1e-11, "t={t} j={j}");
            }
            let dw = rhs_w(&casea_w(t));
            for j in 0..3 {
                assert!((dw[j] - casea_dw(t)[j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = [0.0, 1.0, -0.5, 0.9, 0.3, 0.2];
        let h = 1e-5;
        for t in [-2.0, 0.0, 1.5] {
            let (_, dp) = casea_p_general(t, f_cosh(t), &k);
            let (pp, _) = casea_p_general(t + h, f_cosh(t + h), &k);
            let (pm, _) = casea_p_general(t - h, f_cosh(t - h), &k);
            for j in 0..3 {
                assert!((dp[j] - (pp[j] - pm[j]) / (2.0 * h)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn invariants_and_r() {
        let p = CaseAParams { b: 0.5, c: -0.3, e: 0.2, f: 0.7, b2: 0.4, c2: 0.1, e2: 0.6, f2: 0.0 };
        let p = CaseAParams { f2: (p.b2 * p.e + p.c2 * p.f - p.b * p.e2) / p.c, ..p };
        let fam = CaseA::new(p).unwrap();
        assert_eq!(fam.state(0.0).unwrap().r, [C64::default(); 3]);
        for t in [-1.0, 0.5, 2.0] {
            let s = fam.state(t).unwrap();
            for v in lemma91_invariants(&s.w, &s.p, &s.q) {
                assert!(v.abs() < 1e-12);
            }
        }
        // r by Simpson on the closed-form rhs
        let t1 = 1.2;
        let n = 2000;
        let h = t1 / n as f64;
        let mut acc = [C64::default(); 3];
        for i in 0..=n {
            let t = i as f64 * h;
            let wgt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let s = fam.wpq(t);
            let d = rhs_r(&s.p, &s.q);
            for j in 0..3 {
                acc[j] += d[j] * (wgt * h / 3.0);
            }
        }
        let r = fam.state(t1).unwrap().r;
        for j in 0..3 {
            assert!((r[j] - acc[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_constraint_violation() {
        let p = CaseAParams { b: 1.0, e2: 1.0, ..Default::default() };
        assert!(matches!(CaseA::new(p), Err(Error::Inadmissible(_))));
    }
}
