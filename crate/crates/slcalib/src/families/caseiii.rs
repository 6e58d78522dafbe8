//! The ruled family with z₁ = z₂ = (e^{it}, −ie^{−it}, 0), z₃ = (0,0,1).

use super::expsum::{ExpSum, ExpVec3};
use super::{assemble_phi_z, ZCurve};
use crate::cgeom::{cr, Complex3, C64, I};
use crate::error::{Error, Result};
use crate::flow::ZState;

pub const PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaseIIIParams {
    pub a: C64,
    pub b: C64,
    pub d: C64,
    pub e: C64,
}

impl CaseIIIParams {
    /// Im(A·D̄ + B·Ē), which must vanish.
    pub fn constraint(&self) -> f64 {
        (self.a * self.d.conj() + self.b * self.e.conj()).im
    }

    pub fn validate(&self) -> Result<()> {
        for v in [self.a, self.b, self.d, self.e] {
            if !v.is_finite() {
                return Err(Error::InvalidInput("non-finite case-iii parameter".into()));
            }
        }
        let r = self.constraint();
        if r.abs() > PARAM_TOL {
            return Err(Error::Inadmissible(format!(
                "case-iii constraint Im(A*conj(D) + B*conj(E)) = 0 violated (value {r:e})"
            )));
        }
        Ok(())
    }
}

/// Closed-form z₁..z₆ as exponential sums in t.
#[derive(Debug, Clone)]
pub struct CaseIII {
    params: CaseIIIParams,
    z: [ExpVec3; 6],
}

fn t(f: f64, c: C64) -> ExpSum {
    ExpSum::term(f, c)
}

fn sum(parts: &[ExpSum]) -> ExpSum {
    parts.iter().fold(ExpSum::zero(), |acc, p| acc.add(p))
}

impl CaseIII {
    pub fn new(params: CaseIIIParams) -> Result<Self> {
        params.validate()?;
        let CaseIIIParams { a, b, d, e } = params;
        let (ac, bc, dc, ec) = (a.conj(), b.conj(), d.conj(), e.conj());
        let one = cr(1.0);
        let z1 = ExpVec3([t(1.0, one), t(-1.0, -I), ExpSum::zero()]);
        let z3 = ExpVec3([ExpSum::zero(), ExpSum::zero(), ExpSum::constant(one)]);
        let z4 = ExpVec3([
            sum(&[t(0.5, d), t(-0.5, e)]),
            sum(&[t(-0.5, -I * dc), t(0.5, I * ec)]),
            sum(&[t(-0.5, 2.0 * a), t(0.5, -2.0 * ac), t(-1.5, -2.0 / 3.0 * b), t(1.5, -2.0 / 3.0 * bc)]),
        ]);
        let z5 = ExpVec3([sum(&[t(0.5, a), t(-0.5, b)]), sum(&[t(-0.5, I * ac), t(0.5, -I * bc)]), ExpSum::zero()]);
        let r1 = sum(&[
            t(2.0, -a * bc / 6.0),
            t(1.0, a * ac + b * bc / 3.0),
            t(-1.0, -2.0 / 3.0 * a * b),
            t(-2.0, -b * b / 6.0),
        ])
        .with_linear(-I * (a * a + ac * b));
        let r2 = sum(&[
            t(2.0, I / 6.0 * bc * bc),
            t(1.0, -2.0 / 3.0 * I * ac * bc),
            t(-1.0, -I * (a * ac + b * bc / 3.0)),
            t(-2.0, -I / 6.0 * ac * b),
        ])
        .with_linear(ac * ac - a * bc);
        let r3 = sum(&[t(1.0, -0.5 * (a * ec + bc * d)), t(-1.0, -0.5 * (ac * e + b * dc))])
            .with_linear(-I * (a * dc - b * ec).re);
        let z6 = ExpVec3([r1, r2, r3]);
        Ok(CaseIII { params, z: [z1.clone(), z1, z3, z4, z5, z6] })
    }

    pub fn params(&self) -> &CaseIIIParams {
        &self.params
    }

    pub fn state(&self, t: f64) -> ZState {
        ZState::new(std::array::from_fn(|j| self.z[j].eval(t)))
    }

    pub fn deriv(&self, t: f64) -> ZState {
        ZState::new(std::array::from_fn(|j| self.z[j].deriv_eval(t)))
    }

    pub fn point(&self, y1: f64, y2: f64, t: f64) -> Complex3 {
        assemble_phi_z(&self.state(t), y1, y2)
    }
}

impl ZCurve for CaseIII {
    fn z_state(&self, t: f64) -> Result<(ZState, ZState)> {
        Ok((self.state(t), self.deriv(t)))
    }
}

pub fn caseiii_state(t: f64, p: &CaseIIIParams) -> Result<ZState> {
    Ok(CaseIII::new(*p)?.state(t))
}

pub fn caseiii_point(y1: f64, y2: f64, t: f64, p: &CaseIIIParams) -> Result<Complex3> {
    Ok(CaseIII::new(*p)?.point(y1, y2, t))
}
