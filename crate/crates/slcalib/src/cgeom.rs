//! Complex 3-vector algebra on C³: the Hermitian pairing, the metric and
//! Kähler form, the holomorphic volume form, and the anti-bilinear cross
//! product that drives every flow in this crate.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// e^{iθ}
#[inline]
pub fn expi(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// A vector in C³.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex3 {
    pub(crate) c: [C64; 3],
}

impl Complex3 {
    pub const ZERO: Complex3 = Complex3 { c: [C64 { re: 0.0, im: 0.0 }; 3] };

    /// Builds a vector; components are expected to be finite.
    pub fn new(c1: C64, c2: C64, c3: C64) -> Self {
        debug_assert!(c1.is_finite() && c2.is_finite() && c3.is_finite());
        Complex3 { c: [c1, c2, c3] }
    }

    pub fn try_new(c1: C64, c2: C64, c3: C64) -> Result<Self> {
        if c1.is_finite() && c2.is_finite() && c3.is_finite() {
            Ok(Complex3 { c: [c1, c2, c3] })
        } else {
            Err(Error::InvalidInput("non-finite component in C^3 vector".into()))
        }
    }

    pub fn from_array(c: [C64; 3]) -> Self {
        Complex3 { c }
    }

    pub fn real(x: f64, y: f64, z: f64) -> Self {
        Complex3 { c: [cr(x), cr(y), cr(z)] }
    }

    /// Standard basis vector e_j, j in 0..3.
    pub fn e(j: usize) -> Self {
        let mut v = Self::ZERO;
        v.c[j] = cr(1.0);
        v
    }

    pub fn c1(&self) -> C64 {
        self.c[0]
    }
    pub fn c2(&self) -> C64 {
        self.c[1]
    }
    pub fn c3(&self) -> C64 {
        self.c[2]
    }

    pub fn as_array(&self) -> [C64; 3] {
        self.c
    }

    pub fn conj(&self) -> Self {
        Complex3 { c: [self.c[0].conj(), self.c[1].conj(), self.c[2].conj()] }
    }

    pub fn scale(&self, a: C64) -> Self {
        Complex3 { c: [a * self.c[0], a * self.c[1], a * self.c[2]] }
    }

    pub fn scale_re(&self, a: f64) -> Self {
        Complex3 { c: [self.c[0] * a, self.c[1] * a, self.c[2] * a] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.is_finite())
    }

    /// The six real coordinates (Re c1, Im c1, Re c2, Im c2, Re c3, Im c3).
    pub fn to_real6(&self) -> [f64; 6] {
        [self.c[0].re, self.c[0].im, self.c[1].re, self.c[1].im, self.c[2].re, self.c[2].im]
    }

    pub fn from_real6(x: &[f64; 6]) -> Self {
        Complex3 { c: [c(x[0], x[1]), c(x[2], x[3]), c(x[4], x[5])] }
    }

    /// Applies a 3×3 complex matrix given row-major.
    pub fn apply(m: &[[C64; 3]; 3], v: &Complex3) -> Complex3 {
        let mut out = [C64::default(); 3];
        for (i, row) in m.iter().enumerate() {
            out[i] = row[0] * v.c[0] + row[1] * v.c[1] + row[2] * v.c[2];
        }
        Complex3 { c: out }
    }
}

impl Index<usize> for Complex3 {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.c[i]
    }
}

impl Add for Complex3 {
    type Output = Complex3;
    fn add(self, o: Complex3) -> Complex3 {
        Complex3 { c: [self.c[0] + o.c[0], self.c[1] + o.c[1], self.c[2] + o.c[2]] }
    }
}

impl Sub for Complex3 {
    type Output = Complex3;
    fn sub(self, o: Complex3) -> Complex3 {
        Complex3 { c: [self.c[0] - o.c[0], self.c[1] - o.c[1], self.c[2] - o.c[2]] }
    }
}

impl Neg for Complex3 {
    type Output = Complex3;
    fn neg(self) -> Complex3 {
        Complex3 { c: [-self.c[0], -self.c[1], -self.c[2]] }
    }
}

impl AddAssign for Complex3 {
    fn add_assign(&mut self, o: Complex3) {
        for j in 0..3 {
            self.c[j] += o.c[j];
        }
    }
}

impl SubAssign for Complex3 {
    fn sub_assign(&mut self, o: Complex3) {
        for j in 0..3 {
            self.c[j] -= o.c[j];
        }
    }
}

impl Mul<Complex3> for f64 {
    type Output = Complex3;
    fn mul(self, v: Complex3) -> Complex3 {
        v.scale_re(self)
    }
}

impl Mul<Complex3> for C64 {
    type Output = Complex3;
    fn mul(self, v: Complex3) -> Complex3 {
        v.scale(self)
    }
}

/// Σ conj(u_j) v_j
pub fn herm(u: &Complex3, v: &Complex3) -> C64 {
    u.c[0].conj() * v.c[0] + u.c[1].conj() * v.c[1] + u.c[2].conj() * v.c[2]
}

/// Euclidean metric g(u,v) = Re herm(u,v).
pub fn g(u: &Complex3, v: &Complex3) -> f64 {
    herm(u, v).re
}

/// Kähler form ω(u,v) = Im herm(u,v).
pub fn omega(u: &Complex3, v: &Complex3) -> f64 {
    herm(u, v).im
}

/// Anti-bilinear cross product, ½·conj of the usual cross product.
pub fn cross(r: &Complex3, s: &Complex3) -> Complex3 {
    let (r1, r2, r3) = (r.c[0].conj(), r.c[1].conj(), r.c[2].conj());
    let (s1, s2, s3) = (s.c[0].conj(), s.c[1].conj(), s.c[2].conj());
    Complex3 { c: [(r2 * s3 - r3 * s2) * 0.5, (r3 * s1 - r1 * s3) * 0.5, (r1 * s2 - r2 * s1) * 0.5] }
}

/// det[u v w] with u, v, w as columns, i.e. (dz1∧dz2∧dz3)(u,v,w).
pub fn omega3(u: &Complex3, v: &Complex3, w: &Complex3) -> C64 {
    u.c[0] * (v.c[1] * w.c[2] - v.c[2] * w.c[1]) - v.c[0] * (u.c[1] * w.c[2] - u.c[2] * w.c[1])
        + w.c[0] * (u.c[1] * v.c[2] - u.c[2] * v.c[1])
}

pub fn re_omega3(u: &Complex3, v: &Complex3, w: &Complex3) -> f64 {
    omega3(u, v, w).re
}

pub fn im_omega3(u: &Complex3, v: &Complex3, w: &Complex3) -> f64 {
    omega3(u, v, w).im
}

/// Determinant of a complex 3×3 matrix given row-major.
pub fn det3(m: &[[C64; 3]; 3]) -> C64 {
    let col = |j: usize| Complex3::new(m[0][j], m[1][j], m[2][j]);
    omega3(&col(0), &col(1), &col(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn herm_basics() {
        let e1 = Complex3::e(0);
        let ie1 = Complex3::new(I, cr(0.0), cr(0.0));
        assert!(close(herm(&e1, &ie1), I));
        assert_eq!(omega(&e1, &ie1), 1.0);
        assert_eq!(g(&e1, &ie1), 0.0);
        assert!(close(herm(&e1, &Complex3::e(1)), cr(0.0)));
    }

    #[test]
    fn cross_examples() {
        let z = cross(&Complex3::e(0), &Complex3::e(1));
        assert_eq!(z, Complex3::new(cr(0.0), cr(0.0), cr(0.5)));
        let ie1 = Complex3::new(I, cr(0.0), cr(0.0));
        let z = cross(&ie1, &Complex3::e(1));
        assert!(close(z.c3(), c(0.0, -0.5)));
        let r = Complex3::new(c(1.0, 2.0), c(-0.3, 0.1), c(0.0, 4.0));
        assert_eq!(cross(&r, &r).norm(), 0.0);
    }

    #[test]
    fn volume_form_examples() {
        let (e1, e2, e3) = (Complex3::e(0), Complex3::e(1), Complex3::e(2));
        assert_eq!(re_omega3(&e1, &e2, &e3), 1.0);
        assert_eq!(im_omega3(&e1, &e2, &e3), 0.0);
        let ie3 = e3.scale(I);
        assert_eq!(re_omega3(&e1, &e2, &ie3), 0.0);
        assert_eq!(im_omega3(&e1, &e2, &ie3), 1.0);
        assert_eq!(omega3(&e1, &e2, &e1).norm(), 0.0);
    }

    #[test]
    fn double_cross_example() {
        let u = Complex3::real(2.0, 0.0, 0.0);
        let w = Complex3::real(0.0, 1.0, 0.0);
        assert_eq!(cross(&u, &cross(&u, &w)), Complex3::real(0.0, -1.0, 0.0));
    }

    #[test]
    fn try_new_rejects_nan() {
        assert!(Complex3::try_new(c(f64::NAN, 0.0), cr(0.0), cr(0.0)).is_err());
        assert!(Complex3::try_new(cr(1.0), cr(f64::INFINITY), cr(0.0)).is_err());
    }
}
