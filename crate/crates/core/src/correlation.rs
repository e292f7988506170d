//! Noisy maximally entangled states and their correlation spectrum.
//!
//! For a bipartite state with maximally mixed marginals there are standard bases
//! `{A_i}`, `{B_i}` with `Tr((A_i (x) B_j) psi) = delta_ij c_i`. They are obtained
//! here from the singular value decomposition of the correlation matrix of the
//! traceless Gell-Mann elements. With aligned bases,
//! `Tr((P (x) Q) psi^{(x) D}) = sum_sigma P(sigma) Q(sigma) c_sigma`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dense::{checked_pow, CMatrix, DenseBudget, DenseHermitian};
use crate::error::{Error, Result};
use crate::qudit_algebra::{build_standard_basis, FourierOperator, StandardBasis};

/// Tolerance for marginals, alignment and the noisy threshold.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NoisyMES {
    m: usize,
    state: DenseHermitian,
    c: Vec<f64>,
    basis_a: StandardBasis,
    basis_b: StandardBasis,
    label: String,
}

impl NoisyMES {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn state(&self) -> &DenseHermitian {
        &self.state
    }

    /// Correlation spectrum `c_0 = 1 >= c_1 >= ... >= c_{m^2 - 1} >= 0`.
    pub fn spectrum(&self) -> &[f64] {
        &self.c
    }

    /// Maximal correlation `rho = c_1`.
    pub fn rho(&self) -> f64 {
        self.c[1]
    }

    pub fn basis_a(&self) -> &StandardBasis {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &StandardBasis {
        &self.basis_b
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `c_sigma = prod_i c_{sigma_i}`.
    pub fn c_sigma(&self, sigma: &[u16]) -> f64 {
        sigma.iter().map(|&s| self.c[s as usize]).product()
    }

    /// `max_{i,j} |Tr((A_i (x) B_j) psi) - delta_ij c_i|` recomputed from the state.
    pub fn alignment_residual(&self) -> f64 {
        let n = self.m * self.m;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let v = local_pair_trace(
                    self.basis_a.element(i),
                    self.basis_b.element(j),
                    &self.state,
                    self.m,
                );
                let target = if i == j { self.c[i] } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// `Tr((a (x) b) state)` for `m x m` local operators and an `m^2`-dimensional state.
fn local_pair_trace(a: &CMatrix, b: &CMatrix, state: &DenseHermitian, m: usize) -> f64 {
    let s = state.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for r1 in 0..m {
        for c1 in 0..m {
            let av = a[(r1, c1)];
            if av == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r2 in 0..m {
                for c2 in 0..m {
                    // (a (x) b)[(r1 r2), (c1 c2)] * state[(c1 c2), (r1 r2)]
                    acc += av * b[(r2, c2)] * s[(c1 * m + c2, r1 * m + r2)];
                }
            }
        }
    }
    acc.re
}

/// `(1 - eps) |Psi><Psi| + eps (I/m (x) I/m)` with `|Psi> = m^{-1/2} sum_i |ii>`.
pub fn depolarized_state(m: usize, eps: f64) -> Result<DenseHermitian> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!("local dimension {m} < 2")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        if eps == 0.0 {
            return Err(Error::NotNoisy(1.0));
        }
        return Err(Error::InvalidParameter(format!(
            "depolarizing noise {eps} outside (0, 1]"
        )));
    }
    let dim = m * m;
    let mut mat = CMatrix::zeros(dim, dim);
    let ent = (1.0 - eps) / m as f64;
    for i in 0..m {
        for j in 0..m {
            mat[(i * m + i, j * m + j)] += Complex64::new(ent, 0.0);
        }
    }
    let mixed = eps / dim as f64;
    for i in 0..dim {
        mat[(i, i)] += Complex64::new(mixed, 0.0);
    }
    Ok(DenseHermitian::symmetrized(mat))
}

/// The depolarized maximally entangled state with its aligned bases.
pub fn depolarized_mes(m: usize, eps: f64) -> Result<NoisyMES> {
    let state = depolarized_state(m, eps)?;
    let mut mes = align_bases_labeled(state, m, format!("depolarized:m={m},eps={eps}"))?;
    let expected = 1.0 - eps;
    if (mes.rho() - expected).abs() > STATE_TOL {
        return Err(Error::InvalidState(format!(
            "maximal correlation {} differs from 1 - eps = {expected}",
            mes.rho()
        )));
    }
    mes.label = format!("depolarized:m={m},eps={eps}");
    Ok(mes)
}

/// Aligns the local bases of a state with maximally mixed marginals.
pub fn align_bases(state: DenseHermitian, m: usize) -> Result<NoisyMES> {
    let label = format!("state:{:016x}", fingerprint(&state));
    align_bases_labeled(state, m, label)
}

fn fingerprint(state: &DenseHermitian) -> u64 {
    // FNV-1a over the entry bit patterns, rounded to 12 significant digits
    let mut h: u64 = 0xcbf29ce484222325;
    for z in state.matrix().iter() {
        for part in [z.re, z.im] {
            let rounded = (part * 1e12).round() as i64;
            for byte in rounded.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
    }
    h
}

pub fn align_bases_labeled(state: DenseHermitian, m: usize, label: String) -> Result<NoisyMES> {
    if m < 2 || state.dim() != m * m {
        return Err(Error::InvalidDimension(format!(
            "state of dimension {} is not bipartite with local dimension {m}",
            state.dim()
        )));
    }
    let eigs = state.eigenvalues();
    if eigs[0] < -STATE_TOL {
        return Err(Error::InvalidState(format!(
            "state is not PSD (eigenvalue {:.3e})",
            eigs[0]
        )));
    }
    if (state.trace() - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {} != 1", state.trace())));
    }
    let (pa, pb) = marginals(&state, m);
    let target = 1.0 / m as f64;
    for (name, marg) in [("A", &pa), ("B", &pb)] {
        for i in 0..m {
            for j in 0..m {
                let t = if i == j { target } else { 0.0 };
                if (marg[(i, j)] - Complex64::new(t, 0.0)).norm() > STATE_TOL {
                    return Err(Error::InvalidState(format!(
                        "marginal {name} is not maximally mixed"
                    )));
                }
            }
        }
    }

    let base = build_standard_basis(m)?;
    let k = m * m - 1;
    let mut corr = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            corr[(i, j)] = local_pair_trace(base.element(i + 1), base.element(j + 1), &state, m);
        }
    }
    let svd = nalgebra::SVD::new(corr, true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let mut order: Vec<usize> = (0..k).collect();
    // stable: ties keep the decomposition's own order
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut c = vec![1.0];
    let mut elems_a = vec![CMatrix::identity(m, m)];
    let mut elems_b = vec![CMatrix::identity(m, m)];
    for &col in &order {
        c.push(svd.singular_values[col].max(0.0));
        let mut ea = CMatrix::zeros(m, m);
        let mut eb = CMatrix::zeros(m, m);
        for i in 0..k {
            ea += base.element(i + 1) * Complex64::new(u[(i, col)], 0.0);
            eb += base.element(i + 1) * Complex64::new(v[(i, col)], 0.0);
        }
        elems_a.push(ea);
        elems_b.push(eb);
    }
    if c[1] >= 1.0 - STATE_TOL {
        return Err(Error::NotNoisy(c[1]));
    }
    let basis_a = StandardBasis::from_elements(m, elems_a, format!("aligned-A:{label}"))?;
    let basis_b = StandardBasis::from_elements(m, elems_b, format!("aligned-B:{label}"))?;
    let mes = NoisyMES {
        m,
        state,
        c,
        basis_a,
        basis_b,
        label,
    };
    let residual = mes.alignment_residual();
    if residual > STATE_TOL {
        return Err(Error::InvalidState(format!(
            "alignment residual {residual:.3e}"
        )));
    }
    Ok(mes)
}

fn marginals(state: &DenseHermitian, m: usize) -> (CMatrix, CMatrix) {
    let s = state.matrix();
    let mut pa = CMatrix::zeros(m, m);
    let mut pb = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                pa[(i, j)] += s[(i * m + k, j * m + k)];
                pb[(i, j)] += s[(k * m + i, k * m + j)];
            }
        }
    }
    (pa, pb)
}

/// `sum_sigma P(sigma) Q(sigma) c_sigma`, with `P` in basis A and `Q` in basis B.
pub fn pair_expectation(p: &FourierOperator, q: &FourierOperator, mes: &NoisyMES) -> Result<f64> {
    check_pair_shapes(p, q, mes)?;
    let mut acc = 0.0;
    for (sigma, pc) in p.terms() {
        let qc = q.coeff(sigma);
        if qc != 0.0 {
            acc += pc * qc * mes.c_sigma(&sigma.0);
        }
    }
    Ok(acc)
}

fn check_pair_shapes(p: &FourierOperator, q: &FourierOperator, mes: &NoisyMES) -> Result<()> {
    if p.m() != mes.m || q.m() != mes.m || p.registers() != q.registers() {
        return Err(Error::Mismatch(format!(
            "operators (m={}, D={}) and (m={}, D={}) against a state with m={}",
            p.m(),
            p.registers(),
            q.m(),
            q.registers(),
            mes.m
        )));
    }
    if p.basis_tag() != mes.basis_a.tag() {
        return Err(Error::BasisMismatch {
            expected: mes.basis_a.tag().into(),
            found: p.basis_tag().into(),
        });
    }
    if q.basis_tag() != mes.basis_b.tag() {
        return Err(Error::BasisMismatch {
            expected: mes.basis_b.tag().into(),
            found: q.basis_tag().into(),
        });
    }
    Ok(())
}

/// Dense contraction `Tr((P (x) Q) psi^{(x) D})` where `P` acts on the `A` halves
/// and `Q` on the `B` halves of the `D` copies. Cost is `m^{4D}`.
pub fn dense_pair_expectation(
    p: &DenseHermitian,
    q: &DenseHermitian,
    mes: &NoisyMES,
    registers: usize,
    budget: DenseBudget,
) -> Result<f64> {
    let m = mes.m;
    let dim = checked_pow(m, registers)
        .ok_or_else(|| Error::InvalidDimension(format!("{m}^{registers} overflows")))?;
    if p.dim() != dim || q.dim() != dim {
        return Err(Error::Mismatch(format!(
            "operators of dimension {}, {} against {registers} copies of a local dimension {m} state",
            p.dim(),
            q.dim()
        )));
    }
    budget.check(dim * dim)?;
    let s = mes.state.matrix();
    let pm = p.matrix();
    let qm = q.matrix();
    let digits = |mut x: usize| -> Vec<usize> {
        let mut d = vec![0; registers];
        for slot in d.iter_mut().rev() {
            *slot = x % m;
            x /= m;
        }
        d
    };
    let all: Vec<Vec<usize>> = (0..dim).map(digits).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    // sum_{a, a', b, b'} P[a][a'] Q[b][b'] prod_k psi[(a'_k b'_k), (a_k b_k)]
    for a in 0..dim {
        for a2 in 0..dim {
            let pv = pm[(a, a2)];
            if pv.norm_sqr() == 0.0 {
                continue;
            }
            for b in 0..dim {
                for b2 in 0..dim {
                    let qv = qm[(b, b2)];
                    if qv.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut w = Complex64::new(1.0, 0.0);
                    for k in 0..registers {
                        w *= s[(all[a2][k] * m + all[b2][k], all[a][k] * m + all[b][k])];
                        if w.norm_sqr() == 0.0 {
                            break;
                        }
                    }
                    acc += pv * qv * w;
                }
            }
        }
    }
    Ok(acc.re)
}
