//! The two concrete sets of affine evolution data (P, χ): the quadric
//! surface in R⁵ behind the z-flow and the polynomial curve surface in
//! R^{k+2} behind the (p, q) flow.

use crate::error::{Error, Result};

/// Element of Λ²Rⁿ stored as a full antisymmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Bivector {
    n: usize,
    coeffs: Vec<f64>,
}

impl Bivector {
    pub fn zero(n: usize) -> Self {
        Bivector { n, coeffs: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Coefficient of e_i∧e_j (antisymmetric in i, j).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * self.n + j]
    }

    /// Adds `v`·e_i∧e_j.
    pub fn add_term(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            return;
        }
        self.coeffs[i * self.n + j] += v;
        self.coeffs[j * self.n + i] -= v;
    }

    /// u∧v for u, v in Rⁿ.
    pub fn wedge(u: &[f64], v: &[f64]) -> Self {
        let n = u.len();
        let mut b = Bivector::zero(n);
        for i in 0..n {
            for j in (i + 1)..n {
                b.add_term(i, j, u[i] * v[j] - u[j] * v[i]);
            }
        }
        b
    }

    pub fn scaled(&self, s: f64) -> Self {
        Bivector { n: self.n, coeffs: self.coeffs.iter().map(|x| x * s).collect() }
    }

    /// Euclidean norm over the canonical coefficients i < j.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn sub(&self, o: &Bivector) -> Self {
        assert_eq!(self.n, o.n);
        Bivector { n: self.n, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolutionDataId {
    Ex41,
    Ex42 { k: usize },
}

impl EvolutionDataId {
    pub fn ex42(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        Ok(EvolutionDataId::Ex42 { k })
    }

    pub fn dim(&self) -> usize {
        match *self {
            EvolutionDataId::Ex41 => 5,
            EvolutionDataId::Ex42 { k } => k + 2,
        }
    }

    /// Ratio between χ on P and the pushforward of the coordinate bivector.
    pub fn factor(&self) -> f64 {
        match self {
            EvolutionDataId::Ex41 => 1.0,
            EvolutionDataId::Ex42 { .. } => 2.0,
        }
    }
}

/// ψ: R² → P ⊂ Rⁿ.
pub fn psi(id: EvolutionDataId, y: (f64, f64)) -> Vec<f64> {
    let (a, b) = y;
    match id {
        EvolutionDataId::Ex41 => {
            vec![0.5 * (a * a + b * b), 0.5 * (a * a - b * b), a * b, a, b]
        }
        EvolutionDataId::Ex42 { k } => {
            let mut out = Vec::with_capacity(k + 2);
            let mut p = 1.0;
            for _ in 0..k {
                p *= a;
                out.push(p);
            }
            out.push(b);
            out.push(a * b);
            out
        }
    }
}

/// The affine map χ: Rⁿ → Λ²Rⁿ.
pub fn chi(id: EvolutionDataId, x: &[f64]) -> Result<Bivector> {
    let n = id.dim();
    if x.len() != n {
        return Err(Error::InvalidInput(format!("chi expects a vector of length {n}, got {}", x.len())));
    }
    let mut b = Bivector::zero(n);
    match id {
        EvolutionDataId::Ex41 => {
            b.add_term(1, 2, 2.0 * x[0]);
            b.add_term(0, 2, 2.0 * x[1]);
            b.add_term(0, 1, -2.0 * x[2]);
            b.add_term(0, 4, x[3]);
            b.add_term(1, 4, x[3]);
            b.add_term(2, 3, -x[3]);
            b.add_term(0, 3, -x[4]);
            b.add_term(1, 3, x[4]);
            b.add_term(2, 4, x[4]);
            b.add_term(3, 4, 1.0);
        }
        EvolutionDataId::Ex42 { k } => {
            let (y1, y2) = (k, k + 1);
            b.add_term(y1, y2, -2.0 * x[y1]);
            b.add_term(0, y1, 2.0);
            for j in 2..=k {
                b.add_term(j - 1, y1, 2.0 * j as f64 * x[j - 2]);
            }
            for j in 1..=k {
                b.add_term(j - 1, y2, 2.0 * j as f64 * x[j - 1]);
            }
        }
    }
    Ok(b)
}

/// The two Jacobian columns of ψ at y.
pub fn jacobian_columns(id: EvolutionDataId, y: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = y;
    match id {
        EvolutionDataId::Ex41 => (vec![a, a, b, 1.0, 0.0], vec![b, -b, a, 0.0, 1.0]),
        EvolutionDataId::Ex42 { k } => {
            let mut dx = Vec::with_capacity(k + 2);
            let mut p = 1.0;
            for j in 1..=k {
                dx.push(j as f64 * p);
                p *= a;
            }
            dx.push(0.0);
            dx.push(b);
            let mut dy = vec![0.0; k + 2];
            dy[k] = 1.0;
            dy[k + 1] = a;
            (dx, dy)
        }
    }
}

/// ψ_*(∂/∂y₁ ∧ ∂/∂y₂) at y.
pub fn pushforward_wedge(id: EvolutionDataId, y: (f64, f64)) -> Bivector {
    let (u, v) = jacobian_columns(id, y);
    Bivector::wedge(&u, &v)
}

/// Max over the grid of ‖χ(ψ(y)) − factor·ψ_*(∂₁∧∂₂)‖. Fails if the grid is
/// empty or χ vanishes at a sample.
pub fn verify_evolution_data(id: EvolutionDataId, grid: &[(f64, f64)]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty sample grid".into()));
    }
    let mut worst: f64 = 0.0;
    for &y in grid {
        let lhs = chi(id, &psi(id, y))?;
        if lhs.norm() == 0.0 {
            return Err(Error::Consistency(format!("chi vanishes at {y:?}")));
        }
        let rhs = pushforward_wedge(id, y).scaled(id.factor());
        worst = worst.max(lhs.sub(&rhs).norm());
    }
    Ok(worst)
}

/// Uniform n×n grid on [lo, hi]².
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((lo + i as f64 * step, lo + j as f64 * step));
        }
    }
    out
}
