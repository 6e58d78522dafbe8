//! Diagonal solutions over w = (i√α₁e^{ia₁t}, √α₂e^{ia₂t}, √α₃e^{ia₃t}),
//! where p, q, r are finite exponential sums.

use nalgebra::{Matrix3, Matrix6, Vector3};

use super::expsum::ExpSum;
use super::WpqrCurve;
use crate::cgeom::{cr, C64, I};
use crate::error::{Error, Result};
use crate::flow::WPQRState;

const PARAM_TOL: f64 = 1e-12;

/// Positive α₁, α₂, α₃ with 1/α₁ = 1/α₂ + 1/α₃.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaTriple {
    a: [f64; 3],
}

impl AlphaTriple {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a3 > 0.0) || ![a1, a2, a3].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("alphas must be positive and finite".into()));
        }
        let t = AlphaTriple { a: [a1, a2, a3] };
        let r = t.harmonic_residual();
        if r.abs() > 1e-12 * (1.0 / a1) {
            return Err(Error::Inadmissible(format!("alphas violate 1/a1 = 1/a2 + 1/a3 (residual {r:e})")));
        }
        Ok(t)
    }

    /// The triple with α₁ = α₂α₃/(α₂+α₃).
    pub fn from_pair(a2: f64, a3: f64) -> Result<Self> {
        Self::new(a2 * a3 / (a2 + a3), a2, a3)
    }

    pub fn get(&self) -> [f64; 3] {
        self.a
    }

    pub fn harmonic_residual(&self) -> f64 {
        let [a1, a2, a3] = self.a;
        1.0 / a1 - 1.0 / a2 - 1.0 / a3
    }

    pub fn sqrt(&self) -> [f64; 3] {
        self.a.map(f64::sqrt)
    }

    /// a₁ = −√(α₂α₃/α₁), a₂ = √(α₃α₁/α₂), a₃ = √(α₁α₂/α₃).
    pub fn frequencies(&self) -> [f64; 3] {
        let [a1, a2, a3] = self.a;
        [-(a2 * a3 / a1).sqrt(), (a3 * a1 / a2).sqrt(), (a1 * a2 / a3).sqrt()]
    }
}

/// Frequencies, λ and the real vectors b..f spanning the solutions of the
/// linear p-system.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub alphas: AlphaTriple,
    pub a: [f64; 3],
    pub lambda: f64,
    pub b: [f64; 3],
    pub c: [f64; 3],
    pub d: [f64; 3],
    pub e: [f64; 3],
    pub f: [f64; 3],
}

fn coupling(alphas: &AlphaTriple) -> Matrix3<f64> {
    let [s1, s2, s3] = alphas.sqrt();
    Matrix3::new(0.0, -s3, -s2, s3, 0.0, s1, s2, s1, 0.0)
}

/// The real 6×6 matrix M with d/dt(β, β̄) = ½iM(β, β̄).
pub fn cased_matrix(alphas: &AlphaTriple) -> Matrix6<f64> {
    let a = alphas.frequencies();
    let n = coupling(alphas);
    let mut m = Matrix6::zeros();
    for i in 0..3 {
        m[(i, i)] = -2.0 * a[i];
        m[(i + 3, i + 3)] = 2.0 * a[i];
        for j in 0..3 {
            m[(i, j + 3)] = n[(i, j)];
            m[(i + 3, j)] = -n[(i, j)];
        }
    }
    m
}

fn eigvec(m: &Matrix6<f64>, mu: f64) -> Result<[f64; 6]> {
    let shifted = m - Matrix6::identity() * mu;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let (mut imin, mut imin2) = (0, 1);
    if sv[imin2] < sv[imin] {
        std::mem::swap(&mut imin, &mut imin2);
    }
    for i in 2..6 {
        if sv[i] < sv[imin] {
            imin2 = imin;
            imin = i;
        } else if sv[i] < sv[imin2] {
            imin2 = i;
        }
    }
    let smax = sv.max();
    if sv[imin] > 1e-9 * smax || sv[imin2] <= 1e-9 * smax {
        return Err(Error::Numerical(format!("defective eigenpair at {mu}")));
    }
    let mut v: [f64; 6] = std::array::from_fn(|j| vt[(imin, j)]);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
    let s = lead.signum() / norm;
    for x in &mut v {
        *x *= s;
    }
    Ok(v)
}

impl Eigensystem {
    pub fn new(alphas: AlphaTriple) -> Result<Self> {
        let a = alphas.frequencies();
        let lambda = (a[0] * a[0] - a[1] * a[2]).sqrt();
        if !(lambda > 0.0) {
            return Err(Error::Numerical("lambda is not positive".into()));
        }
        let sa = alphas.sqrt();
        let lhs = Matrix3::from_diagonal(&Vector3::new(2.0 * a[0], 2.0 * a[1], 2.0 * a[2])) + coupling(&alphas);
        let b = lhs
            .lu()
            .solve(&-Vector3::new(sa[0], sa[1], sa[2]))
            .ok_or_else(|| Error::Numerical("singular b-system".into()))?;
        let m = cased_matrix(&alphas);
        let cd = eigvec(&m, lambda)?;
        let ef = eigvec(&m, 3.0 * lambda)?;
        Ok(Eigensystem {
            alphas,
            a,
            lambda,
            b: [b[0], b[1], b[2]],
            c: [cd[0], cd[1], cd[2]],
            d: [cd[3], cd[4], cd[5]],
            e: [ef[0], ef[1], ef[2]],
            f: [ef[3], ef[4], ef[5]],
        })
    }

    /// Max-norm residuals of M·(√α,√α) = 0, M·(b,−b) = (√α,√α),
    /// M·(c,d) = λ(c,d), M·(d,c) = −λ(d,c), M·(e,f) = 3λ(e,f), M·(f,e) = −3λ(f,e).
    pub fn relation_residuals(&self) -> [f64; 6] {
        let m = cased_matrix(&self.alphas);
        let sa = self.alphas.sqrt();
        let stack = |x: &[f64; 3], y: &[f64; 3]| nalgebra::Vector6::new(x[0], x[1], x[2], y[0], y[1], y[2]);
        let nb = self.b.map(|x| -x);
        let l = self.lambda;
        [
            (m * stack(&sa, &sa)).amax(),
            (m * stack(&self.b, &nb) - stack(&sa, &sa)).amax(),
            (m * stack(&self.c, &self.d) - stack(&self.c, &self.d) * l).amax(),
            (m * stack(&self.d, &self.c) + stack(&self.d, &self.c) * l).amax(),
            (m * stack(&self.e, &self.f) - stack(&self.e, &self.f) * (3.0 * l)).amax(),
            (m * stack(&self.f, &self.e) + stack(&self.f, &self.e) * (3.0 * l)).amax(),
        ]
    }

    /// The six orthogonality identities between √α, b, c, d, e, f in the
    /// signature (+,−,−).
    pub fn identity_residuals(&self) -> [f64; 6] {
        let dot = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] - x[1] * y[1] - x[2] * y[2];
        let sa = self.alphas.sqrt();
        let (b, c, d, e, f) = (&self.b, &self.c, &self.d, &self.e, &self.f);
        [
            dot(&sa, c) - dot(&sa, d),
            dot(&sa, e) - dot(&sa, f),
            dot(b, c) + dot(b, d),
            dot(b, e) + dot(b, f),
            dot(c, e) - dot(d, f),
            dot(c, f) - dot(d, e),
        ]
    }

    /// c₁²−c₂²−c₃²−d₁²+d₂²+d₃² and the same for e, f.
    pub fn signature_norms(&self) -> (f64, f64) {
        let sq = |x: &[f64; 3]| x[0] * x[0] - x[1] * x[1] - x[2] * x[2];
        (sq(&self.c) - sq(&self.d), sq(&self.e) - sq(&self.f))
    }
}

pub fn cased_eigensystem(alphas: &AlphaTriple) -> Result<Eigensystem> {
    Eigensystem::new(*alphas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDParams {
    pub alphas: AlphaTriple,
    pub c: C64,
    pub d: C64,
    pub c2: C64,
    pub d2: C64,
    pub e: [C64; 3],
}

impl CaseDParams {
    pub fn new(alphas: AlphaTriple) -> Self {
        CaseDParams {
            alphas,
            c: C64::default(),
            d: C64::default(),
            c2: C64::default(),
            d2: C64::default(),
            e: [C64::default(); 3],
        }
    }

    /// Im(CC̄′)·S_cd + Im(DD̄′)·S_ef, which must vanish.
    pub fn constraint(&self, eig: &Eigensystem) -> f64 {
        let (scd, sef) = eig.signature_norms();
        (self.c * self.c2.conj()).im * scd + (self.d * self.d2.conj()).im * sef
    }

    /// Admissible parameters with D′ = D(ρ + iκ), κ solving the constraint.
    pub fn complete(alphas: AlphaTriple, c: C64, d: C64, c2: C64, rho: f64, e: [C64; 3]) -> Result<Self> {
        let eig = Eigensystem::new(alphas)?;
        let (scd, sef) = eig.signature_norms();
        let lhs = (c * c2.conj()).im * scd;
        let denom = d.norm_sqr() * sef;
        if denom.abs() <= PARAM_TOL {
            if lhs.abs() > PARAM_TOL {
                return Err(Error::Inadmissible("D = 0 leaves Im(C conj C') S_cd = 0 unsatisfied".into()));
            }
            return Ok(CaseDParams { alphas, c, d, c2, d2: C64::default(), e });
        }
        Ok(CaseDParams { alphas, c, d, c2, d2: d * C64::new(rho, lhs / denom), e })
    }
}

/// Case-d state as exponential sums.
#[derive(Debug, Clone)]
pub struct CaseD {
    params: CaseDParams,
    eig: Eigensystem,
    w: [ExpSum; 3],
    p: [ExpSum; 3],
    q: [ExpSum; 3],
    r: [ExpSum; 3],
}

fn pq_sums(eig: &Eigensystem, c: C64, d: C64) -> [ExpSum; 3] {
    let l = eig.lambda;
    let phase = [I, cr(1.0), cr(1.0)];
    std::array::from_fn(|j| {
        let a = eig.a[j];
        ExpSum::term(a + 0.5 * l, c * eig.c[j])
            .add(&ExpSum::term(a - 0.5 * l, c.conj() * eig.d[j]))
            .add(&ExpSum::term(a + 1.5 * l, d * eig.e[j]))
            .add(&ExpSum::term(a - 1.5 * l, d.conj() * eig.f[j]))
            .scale(phase[j])
    })
}

fn r_sums(p: &[ExpSum; 3], q: &[ExpSum; 3], e: &[C64; 3]) -> Result<[ExpSum; 3]> {
    let pc: Vec<ExpSum> = p.iter().map(ExpSum::conj).collect();
    let qc: Vec<ExpSum> = q.iter().map(ExpSum::conj).collect();
    let half = cr(0.5);
    let dr = [
        pc[1].mul(&pc[2])?.add(&qc[2].mul(&qc[1])?).scale(half),
        qc[2].mul(&qc[0])?.sub(&pc[0].mul(&pc[2])?).scale(half),
        pc[0].mul(&qc[1])?.add(&pc[1].mul(&qc[0])?).scale(-half),
    ];
    let mut out: [ExpSum; 3] = Default::default();
    for j in 0..3 {
        let r = dr[j].integrate()?;
        let scale = dr[j].terms().iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        if r.linear().norm() > 1e-12 * scale.max(1.0) {
            return Err(Error::Consistency(format!("resonant frequency in dr{}/dt", j + 1)));
        }
        out[j] = ExpSum::constant(e[j]).add(&strip_linear(&r));
    }
    Ok(out)
}

fn strip_linear(s: &ExpSum) -> ExpSum {
    s.terms().iter().fold(ExpSum::zero(), |acc, &(f, c)| acc.add(&ExpSum::term(f, c)))
}

impl CaseD {
    pub fn new(params: CaseDParams) -> Result<Self> {
        for v in [params.c, params.d, params.c2, params.d2].iter().chain(&params.e) {
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite case-d parameter".into()));
            }
        }
        let eig = Eigensystem::new(params.alphas)?;
        let res = params.constraint(&eig);
        if res.abs() > PARAM_TOL {
            return Err(Error::Inadmissible(format!(
                "case-d constraint Im(C conj C')S_cd + Im(D conj D')S_ef = 0 violated (value {res:e})"
            )));
        }
        let sa = params.alphas.sqrt();
        let w =
            [ExpSum::term(eig.a[0], I * sa[0]), ExpSum::term(eig.a[1], cr(sa[1])), ExpSum::term(eig.a[2], cr(sa[2]))];
        let p = pq_sums(&eig, params.c, params.d);
        let q = pq_sums(&eig, params.c2, params.d2);
        let r = r_sums(&p, &q, &params.e)?;
        Ok(CaseD { params, eig, w, p, q, r })
    }

    pub fn params(&self) -> &CaseDParams {
        &self.params
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    /// The exponential sums r₁, r₂, r₃.
    pub fn r_sums(&self) -> &[ExpSum; 3] {
        &self.r
    }

    pub fn state(&self, t: f64) -> WPQRState {
        let ev = |s: &[ExpSum; 3]| [s[0].eval(t), s[1].eval(t), s[2].eval(t)];
        WPQRState { w: ev(&self.w), p: ev(&self.p), q: ev(&self.q), r: ev(&self.r) }
    }

    pub fn deriv(&self, t: f64) -> WPQRState {
        let ev = |s: &[ExpSum; 3]| [s[0].deriv_eval(t), s[1].deriv_eval(t), s[2].deriv_eval(t)];
        WPQRState { w: ev(&self.w), p: ev(&self.p), q: ev(&self.q), r: ev(&self.r) }
    }
}

impl WpqrCurve for CaseD {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        Ok((self.state(t), self.deriv(t)))
    }
}

pub fn cased_state(t: f64, p: &CaseDParams) -> Result<WPQRState> {
    Ok(CaseD::new(p.clone())?.state(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgeom::c;
    use crate::flow::{lemma91_invariants, rhs_pq_linear, rhs_r, rhs_w};

    fn alphas() -> AlphaTriple {
        AlphaTriple::from_pair(0.8, 1.9).unwrap()
    }

    fn admissible(alphas: AlphaTriple) -> CaseDParams {
        let eig = Eigensystem::new(alphas).unwrap();
        let (scd, sef) = eig.signature_norms();
        let (cc, c2, d) = (c(0.7, -0.4), c(-0.3, 0.9), c(0.5, 0.2));
        // D' = D(ρ + iκ), Im(D D̄') = −κ|D|²
        let kappa = (cc * c2.conj()).im * scd / (d.norm_sqr() * sef);
        CaseDParams { alphas, c: cc, d, c2, d2: d * c(0.6, kappa), e: [c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.4)] }
    }

    #[test]
    fn symmetric_alphas() {
        let al = AlphaTriple::new(1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0).unwrap();
        let eig = cased_eigensystem(&al).unwrap();
        let s3 = 3f64.sqrt();
        for (x, y) in eig.a.iter().zip([-2.0 / s3, 1.0 / s3, 1.0 / s3]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!((eig.lambda - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigensystem_relations() {
        for al in [alphas(), AlphaTriple::from_pair(1.0, 1.0).unwrap(), AlphaTriple::from_pair(0.2, 7.0).unwrap()] {
            let eig = Eigensystem::new(al).unwrap();
            assert!(eig.a.iter().sum::<f64>().abs() < 1e-14);
            for r in eig.relation_residuals() {
                assert!(r < 1e-11, "{r}");
            }
            for r in eig.identity_residuals() {
                assert!(r.abs() < 1e-11, "{r}");
            }
        }
    }

    #[test]
    fn rejects_bad_alphas() {
        assert!(AlphaTriple::new(1.0, 1.0, 1.0).is_err());
        assert!(AlphaTriple::new(-1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn p_at_origin() {
        let eig = Eigensystem::new(alphas()).unwrap();
        let p = CaseDParams { c: cr(1.0), ..CaseDParams::new(alphas()) };
        let s = cased_state(0.0, &p).unwrap();
        assert!((s.p[0] - I * (eig.c[0] + eig.d[0])).norm() < 1e-15);
        assert!((s.p[1] - cr(eig.c[1] + eig.d[1])).norm() < 1e-15);
        assert!((s.p[2] - cr(eig.c[2] + eig.d[2])).norm() < 1e-15);
    }

    #[test]
    fn zero_coefficients() {
        let s = cased_state(1.3, &CaseDParams::new(alphas())).unwrap();
        assert_eq!(s.p, [C64::default(); 3]);
        assert_eq!(s.r, [C64::default(); 3]);
        let [a1, a2, a3] = alphas().get();
        assert!((s.w[0].norm() - a1.sqrt()).abs() < 1e-15);
        assert!((s.w[1].norm() - a2.sqrt()).abs() < 1e-15);
        assert!((s.w[2].norm() - a3.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn solves_reduced_system() {
        let fam = CaseD::new(admissible(alphas())).unwrap();
        for t in [-4.0, -0.3, 0.0, 1.1, 6.5] {
            let s = fam.state(t);
            let d = fam.deriv(t);
            let (dw, dp, dq, dr) =
                (rhs_w(&s.w), rhs_pq_linear(&s.w, &s.p), rhs_pq_linear(&s.w, &s.q), rhs_r(&s.p, &s.q));
            for j in 0..3 {
                assert!((d.w[j] - dw[j]).norm() < 1e-12);
                assert!((d.p[j] - dp[j]).norm() < 1e-12);
                assert!((d.q[j] - dq[j]).norm() < 1e-12);
                assert!((d.r[j] - dr[j]).norm() < 1e-12);
            }
            for v in lemma91_invariants(&s.w, &s.p, &s.q) {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    fn coeff_at(s: &ExpSum, freq: f64) -> C64 {
        s.terms().iter().filter(|(f, _)| (f - freq).abs() < 1e-9).map(|(_, c)| *c).sum()
    }

    #[test]
    fn r_matches_printed_coefficients() {
        // The printed r lists the frequencies a_j ± λ and a_j ± 3λ only; the
        // cross terms at a_j and a_j ± 2λ are checked through the rhs instead.
        let prm = admissible(alphas());
        let fam = CaseD::new(prm.clone()).unwrap();
        let eig = fam.eigensystem();
        let (a, l) = (eig.a, eig.lambda);
        let (b, bb, d2, dd2) = (prm.c, prm.c.conj(), prm.c2, prm.c2.conj());
        let (dd, ddc, dp, dpc) = (prm.d, prm.d.conj(), prm.d2, prm.d2.conj());
        let (cv, dv, ev, fv) = (eig.c, eig.d, eig.e, eig.f);
        let r1 = [
            (a[0] + 3.0 * l, -I / (2.0 * (a[0] + 3.0 * l)) * (dd * dd + dp * dp) * fv[1] * fv[2]),
            (a[0] - 3.0 * l, -I / (2.0 * (a[0] - 3.0 * l)) * (ddc * ddc + dpc * dpc) * ev[1] * ev[2]),
            (
                a[0] + l,
                -I / (2.0 * (a[0] + l))
                    * ((b * b + d2 * d2) * dv[1] * dv[2] + (bb * dd + dd2 * dp) * (cv[1] * fv[2] + fv[1] * cv[2])),
            ),
            (
                a[0] - l,
                -I / (2.0 * (a[0] - l))
                    * ((bb * bb + dd2 * dd2) * cv[1] * cv[2] + (b * ddc + d2 * dpc) * (dv[1] * ev[2] + ev[1] * dv[2])),
            ),
            (0.0, prm.e[0]),
        ];
        let r2 = [
            (a[1] + 3.0 * l, 1.0 / (2.0 * (a[1] + 3.0 * l)) * (dd * dd - dp * dp) * fv[0] * fv[2]),
            (a[1] - 3.0 * l, 1.0 / (2.0 * (a[1] - 3.0 * l)) * (ddc * ddc - dpc * dpc) * ev[0] * ev[2]),
            (
                a[1] + l,
                1.0 / (2.0 * (a[1] + l))
                    * ((b * b - d2 * d2) * dv[0] * dv[2] + (bb * dd - dd2 * dp) * (cv[0] * fv[2] + fv[0] * cv[2])),
            ),
            (
                a[1] - l,
                1.0 / (2.0 * (a[1] - l))
                    * ((bb * bb - dd2 * dd2) * cv[0] * cv[2] + (b * ddc - d2 * dpc) * (dv[0] * ev[2] + ev[0] * dv[2])),
            ),
            (0.0, prm.e[1]),
        ];
        // the e₁e₂ factor of the conjugate 3λ term is restored here
        let r3 = [
            (a[2] + 3.0 * l, 1.0 / (a[2] + 3.0 * l) * dd * dp * fv[0] * fv[1]),
            (a[2] - 3.0 * l, 1.0 / (a[2] - 3.0 * l) * ddc * dpc * ev[0] * ev[1]),
            (
                a[2] + l,
                1.0 / (2.0 * (a[2] + l))
                    * (2.0 * b * d2 * dv[0] * dv[1] + (bb * dp + dd2 * dd) * (cv[0] * fv[1] + fv[0] * cv[1])),
            ),
            (
                a[2] - l,
                1.0 / (2.0 * (a[2] - l))
                    * (2.0 * bb * dd2 * cv[0] * cv[1] + (b * dpc + d2 * ddc) * (dv[0] * ev[1] + ev[0] * dv[1])),
            ),
            (0.0, prm.e[2]),
        ];
        for (j, printed) in [r1, r2, r3].iter().enumerate() {
            for &(freq, coeff) in printed {
                let ours = coeff_at(&fam.r_sums()[j], freq);
                assert!((ours - coeff).norm() < 1e-12, "r{} at frequency {freq}", j + 1);
            }
        }
    }

    #[test]
    fn r_has_cross_frequencies() {
        let prm = CaseDParams { c: cr(1.0), ..CaseDParams::new(alphas()) };
        let fam = CaseD::new(prm).unwrap();
        let eig = fam.eigensystem();
        let expect = 0.5 * (eig.c[1] * eig.d[2] + eig.d[1] * eig.c[2]) / (I * eig.a[0]);
        assert!((coeff_at(&fam.r_sums()[0], eig.a[0]) - expect).norm() < 1e-14);
    }

    #[test]
    fn rejects_constraint_violation() {
        let p = CaseDParams { c: cr(1.0), c2: I, ..CaseDParams::new(alphas()) };
        assert!(matches!(CaseD::new(p), Err(Error::Inadmissible(_))));
    }
}
