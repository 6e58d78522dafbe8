//! Closed-form solution families of the z-flow and the (p, q) flow, the
//! recursive Fourier solver for general k, and the assembly of the
//! parametrization Φ of the resulting special Lagrangian 3-folds.

pub mod casea;
pub mod cased;
pub mod caseiii;
pub mod elliptic;
pub mod expsum;
pub mod kfamily;

use crate::cgeom::Complex3;
use crate::error::Result;
use crate::flow::{PQState, WPQRState, ZState};

pub use casea::{casea_wpq, CaseA, CaseAParams};
pub use cased::{cased_eigensystem, cased_state, AlphaTriple, CaseD, CaseDParams, Eigensystem};
pub use caseiii::{caseiii_point, caseiii_state, CaseIII, CaseIIIParams};
pub use elliptic::{caseb_w, casec_wu, CaseBW, CaseCW, IntegratedWpqr, CASEC_THETA1_0};
pub use expsum::{ExpSum, ExpVec3, FourierPoly};
pub use kfamily::{generic_k_solve, k4_state, KFamily, KFamilyParams};

/// Φ at a point together with its three partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub phi: Complex3,
    pub d1: Complex3,
    pub d2: Complex3,
    pub dt: Complex3,
}

/// A parametrized 3-fold Φ(s₁, s₂, t) in C³ with partials.
///
/// `flow_factor` is c in ∂Φ/∂t = c·(∂Φ/∂s₁ × ∂Φ/∂s₂): 1 for the z-flow and
/// 2 for the (p, q) flow.
pub trait Surface: Sync {
    fn jet(&self, s1: f64, s2: f64, t: f64) -> Result<Jet>;

    fn point(&self, s1: f64, s2: f64, t: f64) -> Result<Complex3> {
        Ok(self.jet(s1, s2, t)?.phi)
    }

    fn flow_factor(&self) -> f64 {
        1.0
    }
}

/// A solution curve of the z-flow: state and time derivative at t.
pub trait ZCurve: Sync {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)>;
}

/// A solution curve of the (p, q) flow.
pub trait PQCurve: Sync {
    fn pq_state(&self, t: f64) -> Result<(PQState, PQState)>;
}

/// A solution of the diagonal (w, p, q, r) reduction.
pub trait WpqrCurve: Sync {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)>;
}

/// Φ(y₁,y₂,t) = ½(y₁²+y₂²)z₁ + ½(y₁²−y₂²)z₂ + y₁y₂z₃ + y₁z₄ + y₂z₅ + z₆.
pub fn assemble_phi_z(s: &ZState, y1: f64, y2: f64) -> Complex3 {
    let z = &s.z;
    z[0].scale_re(0.5 * (y1 * y1 + y2 * y2))
        + z[1].scale_re(0.5 * (y1 * y1 - y2 * y2))
        + z[2].scale_re(y1 * y2)
        + z[3].scale_re(y1)
        + z[4].scale_re(y2)
        + z[5]
}

/// Φ(x,y,t) = p₀ + x p₁ + … + x^k p_k + y q₁ + xy q₂.
pub fn assemble_phi_pq(s: &PQState, x: f64, y: f64) -> Complex3 {
    let mut acc = Complex3::ZERO;
    for p in s.p.iter().rev() {
        acc = acc.scale_re(x) + *p;
    }
    acc + s.q1.scale_re(y) + s.q2.scale_re(x * y)
}

pub fn jet_z(s: &ZState, ds: &ZState, y1: f64, y2: f64) -> Jet {
    let z = &s.z;
    Jet {
        phi: assemble_phi_z(s, y1, y2),
        d1: z[0].scale_re(y1) + z[1].scale_re(y1) + z[2].scale_re(y2) + z[3],
        d2: z[0].scale_re(y2) - z[1].scale_re(y2) + z[2].scale_re(y1) + z[4],
        dt: assemble_phi_z(ds, y1, y2),
    }
}

pub fn jet_pq(s: &PQState, ds: &PQState, x: f64, y: f64) -> Jet {
    let k = s.k();
    let mut dx = Complex3::ZERO;
    for j in (1..=k).rev() {
        dx = dx.scale_re(x) + s.p[j].scale_re(j as f64);
    }
    Jet {
        phi: assemble_phi_pq(s, x, y),
        d1: dx + s.q2.scale_re(y),
        d2: s.q1 + s.q2.scale_re(x),
        dt: assemble_phi_pq(ds, x, y),
    }
}

/// Adapter turning a z-curve into a surface.
pub struct ZSurface<C>(pub C);

impl<C: ZCurve> Surface for ZSurface<C> {
    fn jet(&self, y1: f64, y2: f64, t: f64) -> Result<Jet> {
        let (s, ds) = self.0.z_state(t)?;
        Ok(jet_z(&s, &ds, y1, y2))
    }
}

/// Adapter turning a (p, q) curve into a surface.
pub struct PQSurface<C>(pub C);

impl<C: PQCurve> Surface for PQSurface<C> {
    fn jet(&self, x: f64, y: f64, t: f64) -> Result<Jet> {
        let (s, ds) = self.0.pq_state(t)?;
        Ok(jet_pq(&s, &ds, x, y))
    }

    fn flow_factor(&self) -> f64 {
        2.0
    }
}

/// Diagonal-reduction curves are z-curves through the packing.
pub struct Packed<C>(pub C);

impl<C: WpqrCurve> ZCurve for Packed<C> {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)> {
        let (s, ds) = self.0.wpqr_state(t)?;
        Ok((s.to_z(), ds.to_z()))
    }
}

impl<C: ZCurve + ?Sized> ZCurve for &C {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)> {
        (**self).z_state(t)
    }
}

impl<C: PQCurve + ?Sized> PQCurve for &C {
    fn pq_state(&self, t: f64) -> Result<(PQState, PQState)> {
        (**self).pq_state(t)
    }
}

impl<C: WpqrCurve + ?Sized> WpqrCurve for &C {
    fn wpqr_state(&self, t: f64) -> Result<(WPQRState, WPQRState)> {
        (**self).wpqr_state(t)
    }
}

/// Closed-form family parameters, one variant per family.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    CaseIII(CaseIIIParams),
    CaseA(CaseAParams),
    CaseB { alphas: AlphaTriple },
    CaseC { alphas: AlphaTriple, amp: f64, theta1_0: f64 },
    CaseD(CaseDParams),
    K(KFamilyParams),
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::CaseIII(_) => "case-iii",
            FamilySpec::CaseA(_) => "case-a",
            FamilySpec::CaseB { .. } => "case-b",
            FamilySpec::CaseC { .. } => "case-c",
            FamilySpec::CaseD(_) => "case-d",
            FamilySpec::K(_) => "k",
        }
    }

    /// Builds the surface Φ of the family. Cases b and c carry p = q = r = 0.
    pub fn surface(&self) -> Result<Box<dyn Surface>> {
        Ok(match self {
            FamilySpec::CaseIII(p) => Box::new(ZSurface(CaseIII::new(*p)?)),
            FamilySpec::CaseA(p) => Box::new(ZSurface(Packed(CaseA::new(*p)?))),
            FamilySpec::CaseB { alphas } => Box::new(ZSurface(Packed(CaseBW::new(*alphas)?))),
            FamilySpec::CaseC { alphas, amp, theta1_0 } => {
                Box::new(ZSurface(Packed(CaseCW::new(*alphas, *amp, *theta1_0)?)))
            }
            FamilySpec::CaseD(p) => Box::new(ZSurface(Packed(CaseD::new(p.clone())?))),
            FamilySpec::K(p) => Box::new(PQSurface(KFamily::new(p.clone())?)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgeom::{c, cr};

    #[test]
    fn phi_from_constant_term() {
        let mut s = ZState::zero();
        s.z[5] = Complex3::new(cr(1.0), c(0.0, 2.0), cr(0.0));
        for (y1, y2) in [(0.0, 0.0), (1.5, -2.0)] {
            assert_eq!(assemble_phi_z(&s, y1, y2), s.z[5]);
        }
    }

    #[test]
    fn phi_pq_at_origin() {
        let mut s = PQState::zero(3);
        s.p[0] = Complex3::real(1.0, 2.0, 3.0);
        s.p[2] = Complex3::real(5.0, 0.0, 0.0);
        s.q1 = Complex3::e(1);
        assert_eq!(assemble_phi_pq(&s, 0.0, 0.0), s.p[0]);
        assert_eq!(assemble_phi_pq(&s, 2.0, 1.0), Complex3::real(21.0, 3.0, 3.0));
    }

    #[test]
    fn diagonal_packing_layout() {
        let s = WPQRState {
            w: [cr(1.0), cr(2.0), cr(3.0)],
            p: [cr(4.0), cr(5.0), cr(6.0)],
            q: [cr(7.0), cr(8.0), cr(9.0)],
            r: [cr(0.0); 3],
        };
        let z = s.to_z();
        assert_eq!(z.z[3], Complex3::real(4.0, 5.0, 9.0));
        assert_eq!(z.z[4], Complex3::real(7.0, -8.0, 6.0));
        let phi = assemble_phi_z(&z, 1.0, 1.0);
        assert_eq!(phi, Complex3::real(1.0 + 4.0 + 7.0, 5.0 - 8.0, 3.0 + 9.0 + 6.0));
    }
}
