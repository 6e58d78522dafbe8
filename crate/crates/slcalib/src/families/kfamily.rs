//! Polynomial-curve solutions p₀ + x p₁ + … + x^k p_k with
//! q₁ = (e^{it}, ie^{−it}, 0) and q₂ = (0, 0, 1).
//!
//! Writing p_j = (a_j, b_j, c_j), the components are Fourier polynomials in t,
//! built from level k downward. At level j the function a_j solves
//! a_j'' + j²a_j = j(j+1)e^{it}c_{j+1} + (j+1)(ie^{it}c̄_{j+1})', then b_j
//! and c_j follow from the first-order equations.

use super::expsum::FourierPoly;
use super::PQCurve;
use crate::cgeom::{cr, expi, Complex3, C64, I};
use crate::error::{Error, Result};
use crate::flow::PQState;

const PARAM_TOL: f64 = 1e-12;
const RESONANCE_TOL: f64 = 1e-12;

/// A₁ ∈ R, A₂..A_k ∈ C and B₁..B_k ∈ C.
#[derive(Debug, Clone, PartialEq)]
pub struct KFamilyParams {
    pub k: usize,
    pub a1: f64,
    /// A₂..A_k
    pub a: Vec<C64>,
    /// B₁..B_k
    pub b: Vec<C64>,
}

impl KFamilyParams {
    pub fn zero(k: usize) -> Self {
        KFamilyParams { k, a1: 0.0, a: vec![C64::default(); k.saturating_sub(1)], b: vec![C64::default(); k] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.a.len() + 1 != self.k || self.b.len() != self.k {
            return Err(Error::InvalidInput(format!("k = {} needs A2..Ak and B1..Bk", self.k)));
        }
        if !self.a1.is_finite() || self.a.iter().chain(&self.b).any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("non-finite k-family coefficient".into()));
        }
        Ok(())
    }

    /// A_j, zero beyond k.
    pub fn coeff_a(&self, j: usize) -> C64 {
        match j {
            0 => C64::default(),
            1 => cr(self.a1),
            _ => self.a.get(j - 2).copied().unwrap_or_default(),
        }
    }

    /// B_j, zero beyond k.
    pub fn coeff_b(&self, j: usize) -> C64 {
        if j == 0 {
            return C64::default();
        }
        self.b.get(j - 1).copied().unwrap_or_default()
    }

    /// A₁ = A₂ = 0, which makes Φ 2π-periodic in t.
    pub fn is_periodic(&self) -> bool {
        self.a1.abs() <= PARAM_TOL && self.coeff_a(2).norm() <= PARAM_TOL
    }
}

/// (a_j, b_j, c_j) for one index j.
pub type Level = [FourierPoly; 3];

fn mul_e(p: &FourierPoly, m: i64) -> Result<FourierPoly> {
    p.shift(m)
}

fn scale_norm(p: &FourierPoly) -> f64 {
    p.coeffs.values().fold(p.linear.norm(), |m, c| m.max(c.norm())).max(1.0)
}

fn solve_level(j: usize, above: &Level, prm: &KFamilyParams) -> Result<Level> {
    let jf = j as f64;
    let ji = j as i64;
    let c_up = &above[2];
    // ie^{it} c̄_{j+1}
    let forcing = mul_e(&c_up.conj(), 1)?.scale(I);
    let rhs = mul_e(c_up, 1)?.scale(cr(jf * (jf + 1.0))).add(&forcing.deriv().scale(cr(jf + 1.0)));
    let tol = RESONANCE_TOL * scale_norm(&rhs);
    let mut a = FourierPoly::zero();
    for (&n, &c) in &rhs.coeffs {
        if n == ji || n == -ji {
            if c.norm() > tol {
                return Err(Error::Consistency(format!("resonant forcing at frequency {n} for j = {j}")));
            }
            continue;
        }
        a.add_term(n, c / (jf * jf - (n * n) as f64));
    }
    a.add_term(ji, prm.coeff_a(j));
    a.add_term(-ji, prm.coeff_b(j));
    // b̄_j = (a_j' − (j+1) i e^{it} c̄_{j+1}) / j
    let b = a.deriv().add(&forcing.scale(cr(-(jf + 1.0)))).conj().scale(cr(1.0 / jf));
    let c = level_c(j, above)?;
    Ok([a.pruned(0.0), b.pruned(0.0), c])
}

/// c_j = ∫ −(j+1)(ie^{it}ā_{j+1} + e^{−it}b̄_{j+1}) with zero constant.
fn level_c(j: usize, above: &Level) -> Result<FourierPoly> {
    let jf = j as f64;
    let dc = mul_e(&above[0].conj(), 1)?.scale(I).add(&mul_e(&above[1].conj(), -1)?).scale(cr(-(jf + 1.0)));
    let zero_mode = dc.coeff(0);
    if j > 0 && zero_mode.norm() > RESONANCE_TOL * scale_norm(&dc) {
        return Err(Error::Consistency(format!("secular term in c_{j}")));
    }
    let mut dc = dc;
    if j > 0 {
        dc.coeffs.remove(&0);
    }
    dc.antideriv()
}

/// Fourier coefficients of (a_j, b_j, c_j) for j = 0..k.
pub fn generic_k_solve(p: &KFamilyParams) -> Result<Vec<Level>> {
    p.validate()?;
    let k = p.k;
    let kk = k as i64;
    let mut levels: Vec<Level> = vec![Default::default(); k + 1];
    let (ak, bk) = (p.coeff_a(k), p.coeff_b(k));
    levels[k] = [
        FourierPoly::term(kk, ak).add(&FourierPoly::term(-kk, bk)),
        FourierPoly::term(kk, I * bk.conj()).add(&FourierPoly::term(-kk, -I * ak.conj())),
        FourierPoly::zero(),
    ];
    for j in (1..k).rev() {
        levels[j] = solve_level(j, &levels[j + 1], p)?;
    }
    let c1 = &levels[1][2];
    let a0 = mul_e(&c1.conj(), 1)?.scale(I).antideriv()?;
    let b0 = mul_e(&c1.conj(), -1)?.antideriv()?;
    let c0 = level_c(0, &levels[1])?;
    levels[0] = [a0, b0, c0];
    for l in &mut levels {
        for comp in l.iter_mut() {
            *comp = comp.pruned(0.0);
        }
    }
    Ok(levels)
}

/// The closed form for k = 4 as printed coefficient lists.
pub fn k4_polys(p: &KFamilyParams) -> Result<Vec<Level>> {
    p.validate()?;
    if p.k != 4 {
        return Err(Error::InvalidInput(format!("closed form needs k = 4, got {}", p.k)));
    }
    let a1 = p.coeff_a(1);
    let (a2, a3, a4) = (p.coeff_a(2), p.coeff_a(3), p.coeff_a(4));
    let (b1, b2, b3, b4) = (p.coeff_b(1), p.coeff_b(2), p.coeff_b(3), p.coeff_b(4));
    let (a2c, a3c, a4c) = (a2.conj(), a3.conj(), a4.conj());
    let (b1c, b2c, b3c, b4c) = (b1.conj(), b2.conj(), b3.conj(), b4.conj());
    let poly = |terms: &[(i64, C64)], linear: C64| {
        let mut f = FourierPoly::zero();
        for &(n, c) in terms {
            f.add_term(n, c);
        }
        f.linear = linear;
        f.pruned(0.0)
    };
    let z = C64::default();
    let p0 = [
        poly(
            &[(2, a2), (4, -(b2c - 4.0 * a4) / 6.0), (-2, (b2 + 2.0 * a4c) / 3.0), (6, -b4c / 10.0), (-4, 0.15 * b4)],
            -2.0 * I * a2c,
        ),
        poly(
            &[
                (-2, -I * a2c),
                (2, I / 3.0 * (b2c - 4.0 * a4)),
                (-4, -I / 6.0 * (b2 + 2.0 * a4c)),
                (-6, -I / 10.0 * b4),
                (4, 0.15 * I * b4c),
            ],
            2.0 * a2,
        ),
        poly(
            &[(-2, -0.5 * (b1 - 4.5 * a3c)), (2, -0.5 * (b1c + 1.5 * a3)), (-4, -0.25 * b3), (4, -0.25 * b3c)],
            -2.0 * I * a1,
        ),
    ];
    let p1 = [
        poly(&[(1, a1), (-1, b1), (3, 1.5 * a3), (-3, 0.75 * b3), (5, -0.25 * b3c)], z),
        poly(
            &[
                (1, I * (b1c - 3.0 * a3)),
                (-1, -I * a1.conj()),
                (-5, -0.25 * I * b3),
                (3, 0.75 * I * b3c),
                (-3, -1.5 * I * a3c),
            ],
            z,
        ),
        poly(
            &[
                (1, -2.0 * a2),
                (-1, 2.0 * a2c),
                (-3, -2.0 / 3.0 * (b2 - 4.0 * a4c)),
                (3, -2.0 / 3.0 * (b2c + 2.0 * a4)),
                (-5, -0.6 * b4),
                (5, -0.6 * b4c),
            ],
            z,
        ),
    ];
    let p2 = [
        poly(&[(2, a2), (-2, b2), (4, 2.0 * a4), (-4, 1.2 * b4), (6, -0.3 * b4c)], z),
        poly(
            &[(2, I * (b2c - 2.0 * a4)), (-2, -I * a2c), (-6, -0.3 * I * b4), (4, 1.2 * I * b4c), (-4, -2.0 * I * a4c)],
            z,
        ),
        poly(&[(2, -1.5 * a3), (-2, 1.5 * a3c), (-4, -0.75 * b3), (4, -0.75 * b3c)], z),
    ];
    let p3 = [
        poly(&[(3, a3), (-3, b3)], z),
        poly(&[(3, I * b3c), (-3, -I * a3c)], z),
        poly(&[(3, -4.0 / 3.0 * a4), (-3, 4.0 / 3.0 * a4c), (-5, -0.8 * b4), (5, -0.8 * b4c)], z),
    ];
    let p4 = [poly(&[(4, a4), (-4, b4)], z), poly(&[(4, I * b4c), (-4, -I * a4c)], z), FourierPoly::zero()];
    Ok(vec![p0, p1, p2, p3, p4])
}

fn eval_levels(levels: &[Level], t: f64) -> (PQState, PQState) {
    let p: Vec<Complex3> = levels.iter().map(|l| Complex3::new(l[0].eval(t), l[1].eval(t), l[2].eval(t))).collect();
    let dp: Vec<Complex3> =
        levels.iter().map(|l| Complex3::new(l[0].deriv_eval(t), l[1].deriv_eval(t), l[2].deriv_eval(t))).collect();
    let (e, ec) = (expi(t), expi(-t));
    let o = C64::default();
    let s = PQState { p, q1: Complex3::new(e, I * ec, o), q2: Complex3::e(2) };
    let ds = PQState { p: dp, q1: Complex3::new(I * e, ec, o), q2: Complex3::ZERO };
    (s, ds)
}

pub fn k4_state(t: f64, p: &KFamilyParams) -> Result<PQState> {
    Ok(eval_levels(&k4_polys(p)?, t).0)
}

/// The k-family as a (p, q) curve.
#[derive(Debug, Clone)]
pub struct KFamily {
    params: KFamilyParams,
    levels: Vec<Level>,
}

impl KFamily {
    pub fn new(params: KFamilyParams) -> Result<Self> {
        let levels = generic_k_solve(&params)?;
        Ok(KFamily { params, levels })
    }

    pub fn params(&self) -> &KFamilyParams {
        &self.params
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn state(&self, t: f64) -> PQState {
        eval_levels(&self.levels, t).0
    }
}

impl PQCurve for KFamily {
    fn pq_state(&self, t: f64) -> Result<(PQState, PQState)> {
        Ok(eval_levels(&self.levels, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgeom::c;
    use crate::flow::{constraint_residuals_pq, rhs_pq};

    fn sample4() -> KFamilyParams {
        KFamilyParams {
            k: 4,
            a1: 0.7,
            a: vec![c(0.2, -0.5), c(-1.1, 0.3), c(0.4, 0.9)],
            b: vec![c(0.3, 0.1), c(-0.6, 0.8), c(1.2, -0.2), c(0.5, 0.5)],
        }
    }

    #[test]
    fn canonical_q() {
        let s = k4_state(0.3, &KFamilyParams::zero(4)).unwrap();
        assert!(s.p.iter().all(|v| *v == Complex3::ZERO));
        assert!((s.q1 - Complex3::new(expi(0.3), I * expi(-0.3), cr(0.0))).norm() < 1e-15);
        assert_eq!(s.q2, Complex3::e(2));
    }

    #[test]
    fn single_b1() {
        let mut p = KFamilyParams::zero(4);
        p.b[0] = cr(1.0);
        for t in [0.0, 0.6, 2.2] {
            let s = k4_state(t, &p).unwrap();
            assert!((s.p[1] - Complex3::new(expi(-t), I * expi(t), cr(0.0))).norm() < 1e-15);
            assert!((s.p[0][2] - (-0.5 * expi(-2.0 * t) - 0.5 * expi(2.0 * t))).norm() < 1e-15);
        }
    }

    #[test]
    fn closed_form_solves_flow() {
        let p = sample4();
        let polys = k4_polys(&p).unwrap();
        for t in [-1.0, 0.0, 0.8, 3.1] {
            let (s, ds) = eval_levels(&polys, t);
            let r = rhs_pq(&s);
            for j in 0..=4 {
                assert!((ds.p[j] - r.p[j]).norm() < 1e-11, "p{j} at t={t}");
            }
            assert!((ds.q1 - r.q1).norm() < 1e-14);
            for v in constraint_residuals_pq(&s) {
                assert!(v.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn generic_matches_closed_form() {
        let p = sample4();
        let g = generic_k_solve(&p).unwrap();
        let o = k4_polys(&p).unwrap();
        for j in 0..=4 {
            for m in 0..3 {
                assert!(g[j][m].max_diff(&o[j][m]) < 1e-12, "p{j} component {m}");
            }
        }
    }

    #[test]
    fn k1_base() {
        let p = KFamilyParams { k: 1, a1: 0.8, a: vec![], b: vec![c(0.2, 0.3)] };
        let g = generic_k_solve(&p).unwrap();
        assert_eq!(g[1][0].coeff(1), cr(0.8));
        assert_eq!(g[1][0].coeff(-1), c(0.2, 0.3));
        assert!(g[0][2].support(0.0).iter().all(|&n| n != 0));
        assert!((g[0][2].linear - c(0.0, -1.6)).norm() < 1e-15);
    }

    #[test]
    fn zero_params_give_zero() {
        for k in 1..=6 {
            let g = generic_k_solve(&KFamilyParams::zero(k)).unwrap();
            for l in &g {
                for comp in l {
                    assert!(comp.coeffs.is_empty() && comp.linear == C64::default());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(generic_k_solve(&KFamilyParams::zero(0)).is_err());
        assert!(k4_state(0.0, &KFamilyParams::zero(3)).is_err());
        let mut p = KFamilyParams::zero(3);
        p.b.pop();
        assert!(generic_k_solve(&p).is_err());
    }
}
