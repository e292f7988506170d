//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use nga_core::dense::CMatrix;
use nga_core::{FourierOperator, MultiIndex, StandardBasis};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `sum_sigma c_sigma B_{sigma_0} (x) ... (x) B_{sigma_{D-1}}` by explicit Kronecker products.
pub fn kron_sum(op: &FourierOperator, elements: &[CMatrix]) -> CMatrix {
    let dim = op.m().pow(op.registers() as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for (sigma, coeff) in op.terms() {
        let mut term = CMatrix::identity(1, 1);
        for &s in &sigma.0 {
            term = term.kronecker(&elements[s as usize]);
        }
        out += term * c(coeff);
    }
    out
}

/// Real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`.
fn real_embedding(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Eigenvalues of a Hermitian matrix through its real embedding, ascending.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(real_embedding(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    // each eigenvalue appears twice in the embedding
    v.into_iter().step_by(2).collect()
}

/// `||M - pos(M)||_F^2`, with `pos` built from the real embedding.
pub fn distance_to_psd_sq(m: &CMatrix) -> f64 {
    let e = real_embedding(m);
    let eig = SymmetricEigen::new(e.clone());
    let clamped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    let pos = &eig.eigenvectors * clamped * eig.eigenvectors.transpose();
    (e - pos).norm_squared() / 2.0
}

/// `m^{-n} Tr zeta(M)`.
pub fn normalized_zeta(m: &CMatrix) -> f64 {
    eigenvalues(m)
        .iter()
        .filter(|&&l| l < 0.0)
        .map(|l| l * l)
        .sum::<f64>()
        / m.nrows() as f64
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues(m)[0]
}

/// `Delta_rho` applied on every register: `X -> rho X + (1 - rho)/m Tr_r(X) (x) I_r`.
pub fn depolarize_each(x: &CMatrix, m: usize, registers: usize, rho: f64) -> CMatrix {
    let mut cur = x.clone();
    for r in 0..registers {
        let stride = m.pow((registers - 1 - r) as u32);
        let dim = cur.nrows();
        let mut out = cur.clone() * c(rho);
        for row in 0..dim {
            for col in 0..dim {
                let (dr, dc) = ((row / stride) % m, (col / stride) % m);
                if dr != dc {
                    continue;
                }
                // partial trace over register r at the other indices
                let base_r = row - dr * stride;
                let base_c = col - dc * stride;
                let mut tr = Complex64::new(0.0, 0.0);
                for k in 0..m {
                    tr += cur[(base_r + k * stride, base_c + k * stride)];
                }
                out[(row, col)] += tr * c((1.0 - rho) / m as f64);
            }
        }
        cur = out;
    }
    cur
}

/// `Tr((P (x) Q) state^{(x) D})` with `P` on the A halves and `Q` on the B halves.
pub fn pair_contraction(
    p: &CMatrix,
    q: &CMatrix,
    state: &CMatrix,
    m: usize,
    registers: usize,
) -> f64 {
    let dim = p.nrows();
    let digits = |mut v: usize| {
        let mut d = vec![0; registers];
        for slot in d.iter_mut().rev() {
            *slot = v % m;
            v /= m;
        }
        d
    };
    let digit_table: Vec<Vec<usize>> = (0..dim).map(digits).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            let pij = p[(i, j)];
            if pij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..dim {
                for l in 0..dim {
                    let qkl = q[(k, l)];
                    if qkl == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    // (P (x) Q)[(i,k),(j,l)] * R[(j,l),(i,k)]
                    let mut r = c(1.0);
                    for reg in 0..registers {
                        let row = digit_table[j][reg] * m + digit_table[l][reg];
                        let col = digit_table[i][reg] * m + digit_table[k][reg];
                        r *= state[(row, col)];
                    }
                    total += pij * qkl * r;
                }
            }
        }
    }
    total.re
}

/// Independent generalized Gell-Mann construction, same order and scaling as the
/// library basis: identity, symmetric, antisymmetric, diagonal.
pub fn gell_mann(m: usize) -> Vec<CMatrix> {
    let s = (m as f64 / 2.0).sqrt();
    let mut out = vec![CMatrix::identity(m, m)];
    let unit = |j: usize, k: usize| {
        let mut e = CMatrix::zeros(m, m);
        e[(j, k)] = c(1.0);
        e
    };
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|j| ((j + 1)..m).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        out.push((unit(j, k) + unit(k, j)) * c(s));
    }
    for &(j, k) in &pairs {
        out.push(
            (unit(j, k) * Complex64::new(0.0, -1.0) + unit(k, j) * Complex64::new(0.0, 1.0)) * c(s),
        );
    }
    for l in 1..m {
        let mut e = CMatrix::zeros(m, m);
        for j in 0..l {
            e[(j, j)] = c(1.0);
        }
        e[(l, l)] = c(-(l as f64));
        let norm = (m as f64 / (l * (l + 1)) as f64).sqrt();
        out.push(e * c(norm));
    }
    out
}

pub fn elements(basis: &StandardBasis) -> Vec<CMatrix> {
    basis.elements().to_vec()
}

pub fn random_sigma(rng: &mut impl Rng, m: usize, registers: usize, weight: usize) -> MultiIndex {
    let mut digits = vec![0u16; registers];
    for i in sample(rng, registers, weight.min(registers)).into_iter() {
        digits[i] = rng.gen_range(1..(m * m) as u16);
    }
    MultiIndex(digits)
}

/// Gaussian coefficients on up to `terms` multi-indices of weight at most `degree`.
pub fn random_op(
    rng: &mut impl Rng,
    m: usize,
    registers: usize,
    degree: usize,
    terms: usize,
    tag: &str,
) -> FourierOperator {
    let mut op = FourierOperator::new(m, registers, tag).unwrap();
    for _ in 0..terms {
        let w = rng.gen_range(0..=degree.min(registers));
        let v: f64 = rng.sample(StandardNormal);
        op.add_term(random_sigma(rng, m, registers, w), v).unwrap();
    }
    op
}

pub fn normalized(op: &FourierOperator, norm_sq: f64) -> FourierOperator {
    let n = op.two_norm_sq();
    if n == 0.0 {
        op.clone()
    } else {
        op.scaled((norm_sq / n).sqrt())
    }
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + g.adjoint()) * c(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
