//! Seeded generators of random admissible data shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slcalib::analysis::BranchData;
use slcalib::cgeom::{c, C64};
use slcalib::families::{AlphaTriple, CaseAParams, CaseDParams, CaseIIIParams, KFamilyParams};
use slcalib::flow::{PQState, ZState};
use slcalib::Complex3;

pub type Unitary = [[C64; 3]; 3];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unif(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    r.gen_range(lo..hi)
}

pub fn rand_c(r: &mut ChaCha8Rng) -> C64 {
    c(unif(r, -1.0, 1.0), unif(r, -1.0, 1.0))
}

pub fn rand_c3(r: &mut ChaCha8Rng) -> Complex3 {
    Complex3::new(rand_c(r), rand_c(r), rand_c(r))
}

pub fn rand_real3(r: &mut ChaCha8Rng) -> [f64; 3] {
    [unif(r, -1.0, 1.0), unif(r, -1.0, 1.0), unif(r, -1.0, 1.0)]
}

/// Gram–Schmidt on random complex columns.
pub fn rand_unitary(r: &mut ChaCha8Rng) -> Unitary {
    let mut cols: Vec<[C64; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [rand_c(r), rand_c(r), rand_c(r)];
        for u in &cols {
            let p: C64 = (0..3).map(|j| u[j].conj() * v[j]).sum();
            for j in 0..3 {
                v[j] -= p * u[j];
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            cols.push(v.map(|x| x / n));
        }
    }
    let mut u = [[C64::default(); 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            u[i][j] = col[i];
        }
    }
    u
}

/// U(re + i·im).
pub fn in_frame(u: &Unitary, re: [f64; 3], im: [f64; 3]) -> Complex3 {
    let v = [c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2])];
    Complex3::apply(u, &Complex3::from_array(v))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orthogonal projection of x onto the null space of m.
pub fn project_null(m: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    let mut out = x.clone();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-12 * smax.max(1e-300) {
            let row = vt.row(i).transpose();
            out -= &row * row.dot(x);
        }
    }
    out
}

/// A random state satisfying all six ω-constraints. In a unitary frame U,
/// z₁..z₃ are U·(real), z₄ = U(a + ib), z₅ = U(c + id); for fixed real
/// parts the constraints are linear in (b, d).
pub fn admissible_z(r: &mut ChaCha8Rng, scale: f64) -> ZState {
    let u = rand_unitary(r);
    let x: Vec<[f64; 3]> = (0..3).map(|_| rand_real3(r)).collect();
    let (a, cc) = (rand_real3(r), rand_real3(r));
    let mut m = DMatrix::zeros(3, 6);
    for j in 0..3 {
        // ω(z₁,z₅) + ω(z₂,z₅) − ω(z₃,z₄) = 0
        m[(0, 3 + j)] = x[0][j] + x[1][j];
        m[(0, j)] = -x[2][j];
        // −ω(z₁,z₄) + ω(z₂,z₄) + ω(z₃,z₅) = 0
        m[(1, j)] = -x[0][j] + x[1][j];
        m[(1, 3 + j)] = x[2][j];
        // ω(z₄,z₅) = a·d − b·c = 0
        m[(2, 3 + j)] = a[j];
        m[(2, j)] = -cc[j];
    }
    let bd = project_null(&m, &DVector::from_fn(6, |_, _| unif(r, -1.0, 1.0)));
    let (b, d) = ([bd[0], bd[1], bd[2]], [bd[3], bd[4], bd[5]]);
    let s = |v: Complex3| v.scale_re(scale);
    ZState::new([
        s(in_frame(&u, x[0], [0.0; 3])),
        s(in_frame(&u, x[1], [0.0; 3])),
        s(in_frame(&u, x[2], [0.0; 3])),
        s(in_frame(&u, a, b)),
        s(in_frame(&u, cc, d)),
        s(rand_c3(r)),
    ])
}

/// A random (p, q) state satisfying the polynomial-curve constraints.
pub fn admissible_pq(r: &mut ChaCha8Rng, k: usize, scale: f64) -> PQState {
    let u = rand_unitary(r);
    let (q1, q2) = (rand_real3(r), rand_real3(r));
    let re: Vec<[f64; 3]> = (0..=k).map(|_| rand_real3(r)).collect();
    let n = 3 * (k + 1);
    let mut m = DMatrix::zeros(k + 1, n);
    // ω(p_k, q₂) = 0
    for j in 0..3 {
        m[(0, 3 * k + j)] = q2[j];
    }
    // j·ω(p_j, q₁) + (j−1)·ω(p_{j−1}, q₂) = 0; ω(U r, U(a+ib)) = r·b
    for jj in 1..=k {
        for m3 in 0..3 {
            m[(jj, 3 * jj + m3)] += jj as f64 * q1[m3];
            m[(jj, 3 * (jj - 1) + m3)] += (jj as f64 - 1.0) * q2[m3];
        }
    }
    // these are ω(q, p) with the opposite sign, which does not matter for the null space
    let b = project_null(&m, &DVector::from_fn(n, |_, _| unif(r, -1.0, 1.0)));
    let p = (0..=k).map(|i| in_frame(&u, re[i], [b[3 * i], b[3 * i + 1], b[3 * i + 2]]).scale_re(scale)).collect();
    PQState::new(p, in_frame(&u, q1, [0.0; 3]).scale_re(scale), in_frame(&u, q2, [0.0; 3]).scale_re(scale)).unwrap()
}

/// Singular-point data with ω(u,w) = ω(u,x) = ω(v,w) = ω(v,x) = ω(w,x) = 0.
pub fn branch_data(r: &mut ChaCha8Rng) -> BranchData {
    let f = rand_unitary(r);
    let (u, w, x) = (rand_real3(r), rand_real3(r), rand_real3(r));
    // v = F(a + ib) with b ⊥ w, x
    let mut b = rand_real3(r);
    let nrm = [w[1] * x[2] - w[2] * x[1], w[2] * x[0] - w[0] * x[2], w[0] * x[1] - w[1] * x[0]];
    let s = dot(&b, &nrm) / dot(&nrm, &nrm);
    b = [nrm[0] * s, nrm[1] * s, nrm[2] * s];
    BranchData {
        u: in_frame(&f, u, [0.0; 3]),
        v: in_frame(&f, rand_real3(r), b),
        w: in_frame(&f, w, [0.0; 3]),
        x: in_frame(&f, x, [0.0; 3]),
    }
}

pub fn random_alphas(r: &mut ChaCha8Rng) -> AlphaTriple {
    AlphaTriple::from_pair(unif(r, 0.2, 3.0), unif(r, 0.2, 3.0)).unwrap()
}

/// Im(A·D̄ + B·Ē) = 0 solved for Im E.
pub fn caseiii_params(r: &mut ChaCha8Rng) -> CaseIIIParams {
    let (a, b, d) = (rand_c(r), rand_c(r), rand_c(r));
    let b = c(b.re.signum() * b.re.abs().max(0.3), b.im);
    let er = unif(r, -1.0, 1.0);
    // Im(BĒ) = Im(B)·Re(E) − Re(B)·Im(E)
    let ei = ((a * d.conj()).im + b.im * er) / b.re;
    CaseIIIParams { a, b, d, e: c(er, ei) }
}

pub fn casea_params(r: &mut ChaCha8Rng) -> CaseAParams {
    let mut v = [0.0; 8];
    for x in &mut v {
        *x = unif(r, -1.0, 1.0);
    }
    let p = CaseAParams {
        b: v[0],
        c: v[1].signum() * v[1].abs().max(0.3),
        e: v[2],
        f: v[3],
        b2: v[4],
        c2: v[5],
        e2: v[6],
        f2: 0.0,
    };
    // BE′ + CF′ − B′E − C′F = 0
    CaseAParams { f2: (p.b2 * p.e + p.c2 * p.f - p.b * p.e2) / p.c, ..p }
}

pub fn cased_params(r: &mut ChaCha8Rng, alphas: AlphaTriple) -> CaseDParams {
    let e = [rand_c(r), rand_c(r), rand_c(r)].map(|z| z * 0.3);
    CaseDParams::complete(alphas, rand_c(r) * 0.5, rand_c(r) * 0.5, rand_c(r) * 0.5, unif(r, -1.0, 1.0), e).unwrap()
}

pub fn k_params(r: &mut ChaCha8Rng, k: usize, periodic: bool) -> KFamilyParams {
    let mut p = KFamilyParams::zero(k);
    p.a1 = if periodic { 0.0 } else { unif(r, -0.5, 0.5) };
    for (j, a) in p.a.iter_mut().enumerate() {
        *a = if periodic && j == 0 { C64::default() } else { rand_c(r) * 0.5 };
    }
    for b in &mut p.b {
        *b = rand_c(r) * 0.5;
    }
    p
}

/// n evenly spaced values on [lo, hi].
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
