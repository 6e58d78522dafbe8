//! Finite sums Σ c·e^{iωt} plus a t-linear term, with real frequencies
//! (`ExpSum`) or integer frequencies (`FourierPoly`).

use std::collections::BTreeMap;

use crate::cgeom::{expi, Complex3, C64, I};
use crate::error::{Error, Result};

const FREQ_EPS: f64 = 1e-12;

/// Σ c_j e^{iω_j t} + linear·t with real ω_j.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpSum {
    terms: Vec<(f64, C64)>,
    linear: C64,
}

impl ExpSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(freq: f64, coeff: C64) -> Self {
        let mut s = ExpSum { terms: vec![(freq, coeff)], linear: C64::default() };
        s.normalize();
        s
    }

    pub fn constant(coeff: C64) -> Self {
        Self::term(0.0, coeff)
    }

    pub fn with_linear(mut self, linear: C64) -> Self {
        self.linear += linear;
        self
    }

    pub fn terms(&self) -> &[(f64, C64)] {
        &self.terms
    }

    pub fn linear(&self) -> C64 {
        self.linear
    }

    fn normalize(&mut self) {
        self.terms.retain(|(_, c)| *c != C64::default());
        self.terms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, C64)> = Vec::with_capacity(self.terms.len());
        for &(f, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if (last.0 - f).abs() <= FREQ_EPS * (1.0 + f.abs()) => last.1 += c,
                _ => merged.push((f, c)),
            }
        }
        self.terms = merged;
    }

    pub fn add(&self, o: &ExpSum) -> ExpSum {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&o.terms);
        let mut s = ExpSum { terms, linear: self.linear + o.linear };
        s.normalize();
        s
    }

    pub fn sub(&self, o: &ExpSum) -> ExpSum {
        self.add(&o.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: C64) -> ExpSum {
        let mut s = ExpSum { terms: self.terms.iter().map(|&(f, c)| (f, a * c)).collect(), linear: a * self.linear };
        s.normalize();
        s
    }

    pub fn conj(&self) -> ExpSum {
        let mut s =
            ExpSum { terms: self.terms.iter().map(|&(f, c)| (-f, c.conj())).collect(), linear: self.linear.conj() };
        s.normalize();
        s
    }

    /// Product of two sums without t-linear parts.
    pub fn mul(&self, o: &ExpSum) -> Result<ExpSum> {
        if self.linear != C64::default() || o.linear != C64::default() {
            return Err(Error::Consistency("product of t-linear sums is not representable".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for &(f, c) in &self.terms {
            for &(g, d) in &o.terms {
                terms.push((f + g, c * d));
            }
        }
        let mut s = ExpSum { terms, linear: C64::default() };
        s.normalize();
        Ok(s)
    }

    /// Term-wise antiderivative with zero constant; a frequency-0 term
    /// becomes the t-linear part.
    pub fn integrate(&self) -> Result<ExpSum> {
        if self.linear != C64::default() {
            return Err(Error::Consistency("integrating a t-linear term gives t^2".into()));
        }
        let mut out = ExpSum::zero();
        for &(f, c) in &self.terms {
            if f.abs() <= FREQ_EPS {
                out.linear += c;
            } else {
                out.terms.push((f, c / (I * f)));
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.terms.iter().map(|&(f, c)| c * expi(f * t)).sum::<C64>() + self.linear * t
    }

    pub fn deriv_eval(&self, t: f64) -> C64 {
        self.terms.iter().map(|&(f, c)| I * f * c * expi(f * t)).sum::<C64>() + self.linear
    }
}

/// Three `ExpSum`s forming a C³-valued function of t.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpVec3(pub [ExpSum; 3]);

impl ExpVec3 {
    pub fn eval(&self, t: f64) -> Complex3 {
        Complex3::new(self.0[0].eval(t), self.0[1].eval(t), self.0[2].eval(t))
    }

    pub fn deriv_eval(&self, t: f64) -> Complex3 {
        Complex3::new(self.0[0].deriv_eval(t), self.0[1].deriv_eval(t), self.0[2].deriv_eval(t))
    }
}

/// Σ c_n e^{int} + linear·t with integer n.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FourierPoly {
    pub coeffs: BTreeMap<i64, C64>,
    pub linear: C64,
}

impl FourierPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(n: i64, c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term(n, c);
        p
    }

    pub fn add_term(&mut self, n: i64, c: C64) {
        *self.coeffs.entry(n).or_default() += c;
    }

    pub fn coeff(&self, n: i64) -> C64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn add(&self, o: &FourierPoly) -> FourierPoly {
        let mut out = self.clone();
        for (&n, &c) in &o.coeffs {
            out.add_term(n, c);
        }
        out.linear += o.linear;
        out
    }

    pub fn scale(&self, a: C64) -> FourierPoly {
        FourierPoly { coeffs: self.coeffs.iter().map(|(&n, &c)| (n, a * c)).collect(), linear: a * self.linear }
    }

    pub fn conj(&self) -> FourierPoly {
        FourierPoly { coeffs: self.coeffs.iter().map(|(&n, &c)| (-n, c.conj())).collect(), linear: self.linear.conj() }
    }

    /// Multiplication by e^{imt}; the t-linear part must vanish.
    pub fn shift(&self, m: i64) -> Result<FourierPoly> {
        if self.linear != C64::default() {
            return Err(Error::Consistency("cannot shift a t-linear term".into()));
        }
        Ok(FourierPoly { coeffs: self.coeffs.iter().map(|(&n, &c)| (n + m, c)).collect(), linear: C64::default() })
    }

    pub fn deriv(&self) -> FourierPoly {
        let mut out = FourierPoly {
            coeffs: self.coeffs.iter().filter(|(&n, _)| n != 0).map(|(&n, &c)| (n, I * n as f64 * c)).collect(),
            linear: C64::default(),
        };
        if self.linear != C64::default() {
            out.add_term(0, self.linear);
        }
        out
    }

    /// Antiderivative with zero constant.
    pub fn antideriv(&self) -> Result<FourierPoly> {
        if self.linear != C64::default() {
            return Err(Error::Consistency("integrating a t-linear term gives t^2".into()));
        }
        let mut out = FourierPoly::zero();
        for (&n, &c) in &self.coeffs {
            if n == 0 {
                out.linear += c;
            } else {
                out.add_term(n, c / (I * n as f64));
            }
        }
        Ok(out)
    }

    /// Drops coefficients with modulus ≤ tol.
    pub fn pruned(&self, tol: f64) -> FourierPoly {
        FourierPoly {
            coeffs: self.coeffs.iter().filter(|(_, c)| c.norm() > tol).map(|(&n, &c)| (n, c)).collect(),
            linear: if self.linear.norm() > tol { self.linear } else { C64::default() },
        }
    }

    pub fn support(&self, tol: f64) -> Vec<i64> {
        self.coeffs.iter().filter(|(_, c)| c.norm() > tol).map(|(&n, _)| n).collect()
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.coeffs.iter().map(|(&n, &c)| c * expi(n as f64 * t)).sum::<C64>() + self.linear * t
    }

    pub fn deriv_eval(&self, t: f64) -> C64 {
        self.coeffs.iter().map(|(&n, &c)| I * n as f64 * c * expi(n as f64 * t)).sum::<C64>() + self.linear
    }

    /// Largest coefficient difference, including the t-linear slot.
    pub fn max_diff(&self, o: &FourierPoly) -> f64 {
        let mut m = (self.linear - o.linear).norm();
        for n in self.coeffs.keys().chain(o.coeffs.keys()) {
            m = m.max((self.coeff(*n) - o.coeff(*n)).norm());
        }
        m
    }
}
