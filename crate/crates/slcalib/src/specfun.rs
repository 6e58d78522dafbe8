//! Jacobi elliptic functions, adaptive quadrature, and the real cubic and
//! phase integrals used by the elliptic families of the w-system.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const AGM_MAX_ITER: usize = 40;
const SIMPSON_TOL: f64 = 1e-12;
const SIMPSON_DEPTH: u32 = 40;

/// Elliptic modulus k with 0 ≤ k ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::InvalidInput(format!("elliptic modulus {k} outside [0,1]")));
        }
        Ok(EllipticModulus(k))
    }

    pub fn k(&self) -> f64 {
        self.0
    }
}

/// (sn, cn, dn)(t, k) by the descending Landen (AGM) scheme.
pub fn jacobi(t: f64, k: EllipticModulus) -> (f64, f64, f64) {
    let k = k.0;
    if k == 0.0 {
        return (t.sin(), t.cos(), 1.0);
    }
    if k == 1.0 {
        let s = 1.0 / t.cosh();
        return (t.tanh(), s, s);
    }
    let m = k * k;
    let mut a = [0.0f64; AGM_MAX_ITER + 1];
    let mut cc = [0.0f64; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    cc[0] = k;
    let mut n = 0;
    while cc[n].abs() > f64::EPSILON * a[n] && n < AGM_MAX_ITER {
        a[n + 1] = 0.5 * (a[n] + b);
        cc[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = 2f64.powi(n as i32) * a[n] * t;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (cc[j] / a[j] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = (1.0 - m * sn * sn).sqrt();
    (sn, cn, dn)
}

/// Arithmetic-geometric mean of a, b > 0.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    a
}

/// Complete elliptic integral of the first kind K(k); infinite at k = 1.
pub fn ellip_k(k: EllipticModulus) -> f64 {
    let k = k.0;
    if k == 1.0 {
        return f64::INFINITY;
    }
    PI / (2.0 * agm(1.0, (1.0 - k * k).sqrt()))
}

/// Adaptive Simpson quadrature of f over [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = tol.max(64.0 * f64::EPSILON * whole.abs());
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// f(t) = ∫₀ᵗ √(cosh s) ds.
pub fn f_cosh(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let g = |s: f64| s.cosh().sqrt();
    let v = adaptive_simpson(&g, 0.0, t.abs(), SIMPSON_TOL);
    v.copysign(t)
}

fn harmonic_ok(a1: f64, a2: f64, a3: f64) -> bool {
    (a2 * a3 - a1 * (a2 + a3)).abs() <= 1e-12 * (a2 * a3).abs().max(1.0)
}

/// Roots γ1 ≤ γ2 ≤ γ3 of (α1+u)(α2−u)(α3−u) − A².
pub fn cubic_roots_sorted(a1: f64, a2: f64, a3: f64, amp: f64) -> Result<(f64, f64, f64)> {
    if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) {
        return Err(Error::Inadmissible("alphas must be positive".into()));
    }
    if !harmonic_ok(a1, a2, a3) {
        return Err(Error::Inadmissible("alphas must satisfy 1/a1 = 1/a2 + 1/a3".into()));
    }
    let qmax = a1 * a2 * a3;
    let aa = amp * amp;
    // At A² = α1α2α3 the two smaller roots merge at u = 0.
    if !(aa > 0.0 && aa < qmax * (1.0 - 1e-12)) {
        return Err(Error::Inadmissible(format!("need 0 < A^2 < a1*a2*a3 = {qmax}, got A^2 = {aa}")));
    }
    // u³ + b u² + c u + d
    let b = a1 - a2 - a3;
    let cc = a2 * a3 - a1 * (a2 + a3);
    let d = qmax - aa;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    if p >= 0.0 {
        return Err(Error::Consistency("cubic does not have three real roots".into()));
    }
    let r = (-p / 3.0).sqrt();
    let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let cubic = |u: f64| ((u + b) * u + cc) * u + d;
    let dcubic = |u: f64| (3.0 * u + 2.0 * b) * u + cc;
    let mut roots = [0.0; 3];
    for (j, root) in roots.iter_mut().enumerate() {
        let mut u = 2.0 * r * (phi - 2.0 * PI * j as f64 / 3.0).cos() - b / 3.0;
        for _ in 0..4 {
            let dv = dcubic(u);
            if dv == 0.0 {
                break;
            }
            let step = cubic(u) / dv;
            u -= step;
            if step.abs() <= f64::EPSILON * u.abs().max(1.0) {
                break;
            }
        }
        *root = u;
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok((roots[0], roots[1], roots[2]))
}

/// σ and τ for the sn² parametrization of u.
pub fn sigma_tau(g: (f64, f64, f64)) -> (f64, f64) {
    let sigma = (g.2 - g.0).sqrt();
    let tau = ((g.1 - g.0) / (g.2 - g.0)).sqrt();
    (sigma, tau)
}

/// Phase integrals θ1..θ3 at time t, with θ2(0) = θ3(0) = 0.
pub fn theta_integrals(
    alpha: (f64, f64, f64),
    amp: f64,
    gamma: (f64, f64, f64),
    t: f64,
    theta1_0: f64,
) -> Result<(f64, f64, f64)> {
    let (sigma, tau) = sigma_tau(gamma);
    let k = EllipticModulus::new(tau.min(1.0))?;
    let (g1, g2, _) = gamma;
    let d1 = alpha.0 + g1;
    let d2 = alpha.1 - g1;
    let d3 = alpha.2 - g1;
    let span = g2 - g1;
    for (name, lo, hi) in [("1", d1, d1 + span), ("2", d2, d2 - span), ("3", d3, d3 - span)] {
        if lo.abs() < 1e-14 || hi.abs() < 1e-14 || lo.signum() != hi.signum() {
            return Err(Error::Degenerate(format!("vanishing denominator in theta{name}")));
        }
    }
    if t == 0.0 || amp == 0.0 {
        return Ok((theta1_0, 0.0, 0.0));
    }
    let sn2 = |s: f64| {
        let sn = jacobi(sigma * s, k).0;
        sn * sn
    };
    let i1 = adaptive_simpson(&|s| 1.0 / (d1 + span * sn2(s)), 0.0, t, SIMPSON_TOL);
    let i2 = adaptive_simpson(&|s| 1.0 / (d2 - span * sn2(s)), 0.0, t, SIMPSON_TOL);
    let i3 = adaptive_simpson(&|s| 1.0 / (d3 - span * sn2(s)), 0.0, t, SIMPSON_TOL);
    Ok((theta1_0 - amp * i1, amp * i2, amp * i3))
}
