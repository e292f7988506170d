//! Operator Fourier analysis over tensor products of `m x m` Hermitian matrices.
//!
//! An operator on `D` qudits is stored by its coefficients in the product basis
//! `B_sigma = B_{sigma_1} (x) ... (x) B_{sigma_D}`, where `{B_i}` is a standard
//! orthonormal basis: Hermitian, `B_0 = I`, orthonormal under `<P, Q> = Tr(P^dagger Q)/m`.
//! Registers are indexed from 0 throughout the crate.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::dense::{checked_pow, CMatrix, DenseBudget, DenseHermitian};
use crate::error::{Error, Result};

/// Analysis drops coefficients whose magnitude is below this.
pub const ANALYZE_ZERO_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardBasis {
    m: usize,
    elements: Vec<CMatrix>,
    tag: String,
}

impl StandardBasis {
    /// Validates the standard-basis invariants at tolerance `1e-12`.
    pub fn from_elements(m: usize, elements: Vec<CMatrix>, tag: impl Into<String>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("qudit dimension {m} < 2")));
        }
        if elements.len() != m * m || elements.iter().any(|e| e.nrows() != m || e.ncols() != m) {
            return Err(Error::InvalidDimension(format!(
                "expected {} elements of size {m}x{m}",
                m * m
            )));
        }
        let tol = 1e-12;
        let id = CMatrix::identity(m, m);
        if elements[0]
            .iter()
            .zip(id.iter())
            .any(|(a, b)| (a - b).norm() > tol)
        {
            return Err(Error::InvalidInput("B_0 is not the identity".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            if crate::dense::hermitian_deviation(e) > tol {
                return Err(Error::InvalidInput(format!("B_{i} is not Hermitian")));
            }
        }
        let basis = StandardBasis {
            m,
            elements,
            tag: tag.into(),
        };
        let gram_err = basis.gram_error();
        if gram_err > tol {
            return Err(Error::InvalidInput(format!(
                "basis is not orthonormal (Gram error {gram_err:.3e})"
            )));
        }
        Ok(basis)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    /// `max_{i,j} |Tr(B_i B_j)/m - delta_ij|`.
    pub fn gram_error(&self) -> f64 {
        let n = self.elements.len();
        let mut err = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let ip = (&self.elements[i] * &self.elements[j]).trace() / self.m as f64;
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((ip - Complex64::new(target, 0.0)).norm());
            }
        }
        err
    }

    fn expect_tag(&self, tag: &str) -> Result<()> {
        if self.tag != tag {
            return Err(Error::BasisMismatch {
                expected: tag.to_string(),
                found: self.tag.clone(),
            });
        }
        Ok(())
    }
}

/// Identity followed by the generalized Gell-Mann matrices (symmetric pairs in
/// lexicographic order, then antisymmetric pairs, then diagonals), each scaled to
/// unit normalized trace norm. For `m = 2` this is `{I, X, Y, Z}`.
pub fn build_standard_basis(m: usize) -> Result<StandardBasis> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!("qudit dimension {m} < 2")));
    }
    let scale = (m as f64 / 2.0).sqrt();
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut elements = vec![CMatrix::identity(m, m)];
    for j in 0..m {
        for k in (j + 1)..m {
            let mut e = CMatrix::zeros(m, m);
            e[(j, k)] = re(scale);
            e[(k, j)] = re(scale);
            elements.push(e);
        }
    }
    for j in 0..m {
        for k in (j + 1)..m {
            let mut e = CMatrix::zeros(m, m);
            e[(j, k)] = Complex64::new(0.0, -scale);
            e[(k, j)] = Complex64::new(0.0, scale);
            elements.push(e);
        }
    }
    for l in 1..m {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut e = CMatrix::zeros(m, m);
        for j in 0..l {
            e[(j, j)] = re(norm);
        }
        e[(l, l)] = re(-(l as f64) * norm);
        elements.push(e);
    }
    StandardBasis::from_elements(m, elements, format!("gellmann:{m}"))
}

/// A multi-index `sigma` over registers; lexicographic order equals the order of
/// the packed base-`m^2` encoding with register 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u16>);

impl MultiIndex {
    pub fn zero(registers: usize) -> Self {
        MultiIndex(vec![0; registers])
    }

    /// A single nonzero entry `value` at `register`.
    pub fn single(registers: usize, register: usize, value: u16) -> Self {
        let mut v = vec![0; registers];
        v[register] = value;
        MultiIndex(v)
    }

    /// Number of nonzero entries.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&s| s != 0).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&s| s == 0)
    }

    pub fn entries(&self) -> &[u16] {
        &self.0
    }

    /// Packed base-`radix` encoding (register 0 most significant).
    pub fn pack(&self, radix: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * radix + s as usize)
    }

    pub fn unpack(mut packed: usize, radix: usize, registers: usize) -> Self {
        let mut v = vec![0u16; registers];
        for slot in v.iter_mut().rev() {
            *slot = (packed % radix) as u16;
            packed /= radix;
        }
        MultiIndex(v)
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(MultiIndex(Vec::new()));
        }
        text.split(',')
            .map(|d| {
                d.trim()
                    .parse::<u16>()
                    .map_err(|e| format!("bad digit `{d}`: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(MultiIndex)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Sparse Fourier coefficients of a Hermitian operator on `registers` qudits.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOperator {
    m: usize,
    registers: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
    basis_tag: String,
}

impl FourierOperator {
    pub fn new(m: usize, registers: usize, basis_tag: impl Into<String>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("qudit dimension {m} < 2")));
        }
        if m * m > u16::MAX as usize {
            return Err(Error::InvalidDimension(format!(
                "qudit dimension {m} too large"
            )));
        }
        Ok(FourierOperator {
            m,
            registers,
            coeffs: BTreeMap::new(),
            basis_tag: basis_tag.into(),
        })
    }

    pub fn identity(m: usize, registers: usize, basis_tag: impl Into<String>) -> Result<Self> {
        let mut op = Self::new(m, registers, basis_tag)?;
        op.coeffs.insert(MultiIndex::zero(registers), 1.0);
        Ok(op)
    }

    /// Builds an operator from terms; repeated keys accumulate.
    pub fn from_terms(
        m: usize,
        registers: usize,
        basis_tag: impl Into<String>,
        terms: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut op = Self::new(m, registers, basis_tag)?;
        for (sigma, c) in terms {
            op.add_term(sigma, c)?;
        }
        Ok(op)
    }

    fn validate_key(&self, sigma: &MultiIndex, c: f64) -> Result<()> {
        if sigma.len() != self.registers {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has {} entries, expected {}",
                sigma.len(),
                self.registers
            )));
        }
        if sigma.0.iter().any(|&s| s as usize >= self.m * self.m) {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has an entry outside [0, {}]",
                self.m * self.m - 1
            )));
        }
        if !c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coefficient at {sigma} is not finite"
            )));
        }
        Ok(())
    }

    /// Overwrites the coefficient at `sigma`.
    pub fn set(&mut self, sigma: MultiIndex, c: f64) -> Result<()> {
        self.validate_key(&sigma, c)?;
        self.coeffs.insert(sigma, c);
        Ok(())
    }

    pub fn add_term(&mut self, sigma: MultiIndex, c: f64) -> Result<()> {
        self.validate_key(&sigma, c)?;
        *self.coeffs.entry(sigma).or_insert(0.0) += c;
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn basis_tag(&self) -> &str {
        &self.basis_tag
    }

    pub fn with_basis_tag(mut self, tag: impl Into<String>) -> Self {
        self.basis_tag = tag.into();
        self
    }

    pub fn coeff(&self, sigma: &MultiIndex) -> f64 {
        self.coeffs.get(sigma).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, _)| s.weight())
            .max()
            .unwrap_or(0)
    }

    /// Parseval: the normalized squared 2-norm of the synthesized operator.
    pub fn two_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    /// `sum_{sigma != 0} coeff^2`.
    pub fn nonconstant_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(s, _)| !s.is_zero())
            .map(|(_, c)| c * c)
            .sum()
    }

    pub fn scaled(&self, s: f64) -> FourierOperator {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &FourierOperator, s: f64) -> Result<FourierOperator> {
        self.expect_same_shape(other)?;
        let mut out = self.clone();
        for (k, c) in other.terms() {
            *out.coeffs.entry(k.clone()).or_insert(0.0) += s * c;
        }
        Ok(out)
    }

    pub fn expect_same_shape(&self, other: &FourierOperator) -> Result<()> {
        if self.m != other.m || self.registers != other.registers {
            return Err(Error::Mismatch(format!(
                "operators on (m={}, D={}) and (m={}, D={})",
                self.m, self.registers, other.m, other.registers
            )));
        }
        if self.basis_tag != other.basis_tag {
            return Err(Error::BasisMismatch {
                expected: self.basis_tag.clone(),
                found: other.basis_tag.clone(),
            });
        }
        Ok(())
    }

    /// Largest coefficient difference over the union of keys.
    pub fn max_coeff_diff(&self, other: &FourierOperator) -> f64 {
        let mut d = 0.0_f64;
        for (k, c) in self.terms() {
            d = d.max((c - other.coeff(k)).abs());
        }
        for (k, c) in other.terms() {
            d = d.max((c - self.coeff(k)).abs());
        }
        d
    }

    /// Text form: header `m D basis_tag`, then `sigma : coefficient` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.m, self.registers, self.basis_tag);
        for (k, c) in self.terms() {
            out.push_str(&format!("{k} : {c:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header `m D basis_tag`".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `m D basis_tag`".into(),
            });
        }
        let parse_usize = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: hline,
                message: format!("bad {what} `{s}`: {e}"),
            })
        };
        let m = parse_usize(fields[0], "m")?;
        let d = parse_usize(fields[1], "D")?;
        let mut op = FourierOperator::new(m, d, fields[2]).map_err(|e| Error::Parse {
            line: hline,
            message: e.to_string(),
        })?;
        for (line, rec) in lines {
            let (s, c) = rec.split_once(':').ok_or(Error::Parse {
                line,
                message: "expected `sigma : coefficient`".into(),
            })?;
            let sigma = MultiIndex::parse(s).map_err(|message| Error::Parse { line, message })?;
            let c: f64 = c.trim().parse().map_err(|e| Error::Parse {
                line,
                message: format!("bad coefficient `{}`: {e}", c.trim()),
            })?;
            op.add_term(sigma, c).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(op)
    }
}

/// Applies the `r x r` matrix `w` (row-major, `w[a * r + b]`) along `axis` of a
/// tensor with `axes` axes of length `r`, stored row-major.
fn apply_along_axis(
    data: &[Complex64],
    r: usize,
    axes: usize,
    axis: usize,
    w: &[Complex64],
) -> Vec<Complex64> {
    let post = r.pow((axes - 1 - axis) as u32);
    let pre = data.len() / (post * r);
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut scratch = vec![Complex64::new(0.0, 0.0); r];
    for p in 0..pre {
        for q in 0..post {
            for (b, s) in scratch.iter_mut().enumerate() {
                *s = data[(p * r + b) * post + q];
            }
            for a in 0..r {
                let row = &w[a * r..(a + 1) * r];
                let mut acc = Complex64::new(0.0, 0.0);
                for (wb, s) in row.iter().zip(scratch.iter()) {
                    acc += wb * s;
                }
                out[(p * r + a) * post + q] = acc;
            }
        }
    }
    out
}

/// Maps the packed pair index `(i_1 j_1, ..., i_D j_D)` to the matrix entry `(row, col)`.
fn pair_to_entry(mut packed: usize, m: usize, registers: usize) -> (usize, usize) {
    let mut row = 0;
    let mut col = 0;
    let mut place = 1;
    for _ in 0..registers {
        let pair = packed % (m * m);
        packed /= m * m;
        row += (pair / m) * place;
        col += (pair % m) * place;
        place *= m;
    }
    (row, col)
}

fn dense_dim(m: usize, registers: usize) -> Result<usize> {
    checked_pow(m, registers)
        .ok_or_else(|| Error::InvalidDimension(format!("{m}^{registers} overflows")))
}

/// `sum_sigma coeff(sigma) B_sigma` as a dense `m^D x m^D` matrix.
pub fn synthesize(
    op: &FourierOperator,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<DenseHermitian> {
    if op.m != basis.m {
        return Err(Error::BasisMismatch {
            expected: format!("m={}", op.m),
            found: format!("m={}", basis.m),
        });
    }
    basis.expect_tag(&op.basis_tag)?;
    let m = op.m;
    let registers = op.registers;
    let dim = dense_dim(m, registers)?;
    budget.check(dim)?;
    let r = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (sigma, c) in op.terms() {
        data[sigma.pack(r)] += Complex64::new(c, 0.0);
    }
    // w[(i, j), b] = B_b[i][j]
    let mut w = vec![Complex64::new(0.0, 0.0); r * r];
    for i in 0..m {
        for j in 0..m {
            for b in 0..r {
                w[(i * m + j) * r + b] = basis.elements[b][(i, j)];
            }
        }
    }
    for axis in 0..registers {
        data = apply_along_axis(&data, r, registers, axis, &w);
    }
    let mut mat = CMatrix::zeros(dim, dim);
    for (p, v) in data.into_iter().enumerate() {
        let (row, col) = pair_to_entry(p, m, registers);
        mat[(row, col)] = v;
    }
    Ok(DenseHermitian::symmetrized(mat))
}

/// Fourier coefficients `m^{-D} Tr(B_sigma M)` of a dense Hermitian matrix.
pub fn analyze(
    mat: &DenseHermitian,
    m: usize,
    registers: usize,
    basis: &StandardBasis,
) -> Result<FourierOperator> {
    if basis.m != m {
        return Err(Error::BasisMismatch {
            expected: format!("m={m}"),
            found: format!("m={}", basis.m),
        });
    }
    let dim = dense_dim(m, registers)?;
    if mat.dim() != dim {
        return Err(Error::InvalidDimension(format!(
            "matrix dimension {} != {m}^{registers}",
            mat.dim()
        )));
    }
    let r = m * m;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (p, slot) in data.iter_mut().enumerate() {
        let (row, col) = pair_to_entry(p, m, registers);
        *slot = mat.matrix()[(row, col)];
    }
    // w[b, (i, j)] = B_b[j][i] / m, so that the sum over (i, j) is Tr(B_b M)/m
    let inv_m = 1.0 / m as f64;
    let mut w = vec![Complex64::new(0.0, 0.0); r * r];
    for b in 0..r {
        for i in 0..m {
            for j in 0..m {
                w[b * r + i * m + j] = basis.elements[b][(j, i)] * inv_m;
            }
        }
    }
    for axis in 0..registers {
        data = apply_along_axis(&data, r, registers, axis, &w);
    }
    let mut op = FourierOperator::new(m, registers, basis.tag.clone())?;
    for (packed, v) in data.into_iter().enumerate() {
        if v.re.abs() > ANALYZE_ZERO_TOL {
            op.coeffs
                .insert(MultiIndex::unpack(packed, r, registers), v.re);
        }
    }
    Ok(op)
}

/// `Inf_i(P) = sum_{sigma: sigma_i != 0} coeff(sigma)^2` for the 0-based register `i`.
pub fn influence(op: &FourierOperator, register: usize) -> Result<f64> {
    if register >= op.registers {
        return Err(Error::InvalidIndex {
            index: register,
            registers: op.registers,
        });
    }
    Ok(op
        .terms()
        .filter(|(s, _)| s.0[register] != 0)
        .map(|(_, c)| c * c)
        .sum())
}

/// All per-register influences, computed in one pass.
pub fn influences(op: &FourierOperator) -> Vec<f64> {
    let mut inf = vec![0.0; op.registers];
    for (s, c) in op.terms() {
        for (i, &d) in s.0.iter().enumerate() {
            if d != 0 {
                inf[i] += c * c;
            }
        }
    }
    inf
}

pub fn total_influence(op: &FourierOperator) -> f64 {
    op.terms().map(|(s, c)| s.weight() as f64 * c * c).sum()
}

/// The noise operator: each coefficient scaled by `rho^{|sigma|}`.
pub fn apply_noise(op: &FourierOperator, rho: f64) -> Result<FourierOperator> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "noise rate {rho} outside [0, 1]"
        )));
    }
    let mut out = op.clone();
    for (s, c) in out.coeffs.iter_mut() {
        *c *= rho.powi(s.weight() as i32);
    }
    out.coeffs.retain(|s, c| *c != 0.0 || s.is_zero());
    Ok(out)
}

/// Drops every term of weight above `d`.
pub fn truncate_degree(op: &FourierOperator, d: usize) -> FourierOperator {
    let mut out = op.clone();
    out.coeffs.retain(|s, _| s.weight() <= d);
    out
}

/// `sum_{lambda < 0} lambda^2` over the spectrum (un-normalized).
pub fn zeta_trace(mat: &DenseHermitian) -> f64 {
    mat.eigenvalues()
        .into_iter()
        .filter(|&l| l < 0.0)
        .fold(0.0, |acc, l| acc + l * l)
}

/// The nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to 0.
pub fn positive_part(mat: &DenseHermitian) -> DenseHermitian {
    mat.map_spectrum(|l| l.max(0.0))
}

/// `((1/dim) sum_i s_i^p)^{1/p}` over singular values.
pub fn normalized_p_norm(mat: &DenseHermitian, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    let dim = mat.dim() as f64;
    let sum: f64 = mat.eigenvalues().iter().map(|l| l.abs().powf(p)).sum();
    Ok((sum / dim).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> StandardBasis {
        build_standard_basis(2).unwrap()
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = pauli();
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(b.element(1)[(0, 1)], one);
        assert_eq!(b.element(2)[(0, 1)], -i);
        assert_eq!(b.element(2)[(1, 0)], i);
        assert_eq!(b.element(3)[(1, 1)], -one);
        let xx = (b.element(1) * b.element(1)).trace() / 2.0;
        assert!((xx.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qutrit_basis_gram_is_identity() {
        let b = build_standard_basis(3).unwrap();
        assert_eq!(b.elements().len(), 9);
        assert!(b.gram_error() < 1e-12);
        assert!(build_standard_basis(1).is_err());
    }

    #[test]
    fn synthesize_identity_and_z() {
        let b = pauli();
        let id = FourierOperator::identity(2, 3, b.tag()).unwrap();
        let m = synthesize(&id, &b, DenseBudget::default()).unwrap();
        assert!(m.max_abs_diff(&DenseHermitian::identity(8)) < 1e-15);
        let z = FourierOperator::from_terms(2, 1, b.tag(), [(MultiIndex(vec![3]), 1.0)]).unwrap();
        let zm = synthesize(&z, &b, DenseBudget::default()).unwrap();
        assert!(zm.max_abs_diff(&DenseHermitian::from_real_diagonal(&[1.0, -1.0])) < 1e-15);
    }

    #[test]
    fn synthesize_respects_budget_and_tag() {
        let b = pauli();
        let op = FourierOperator::identity(2, 13, b.tag()).unwrap();
        assert!(matches!(
            synthesize(&op, &b, DenseBudget::default()),
            Err(Error::SizeLimit { .. })
        ));
        let other = FourierOperator::identity(2, 1, "other").unwrap();
        assert!(matches!(
            synthesize(&other, &b, DenseBudget::default()),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn analyze_zz() {
        let b = pauli();
        let z = DenseHermitian::from_real_diagonal(&[1.0, -1.0]);
        let zz = z.kron(&z);
        let op = analyze(&zz, 2, 2, &b).unwrap();
        assert_eq!(op.num_terms(), 1);
        assert!((op.coeff(&MultiIndex(vec![3, 3])) - 1.0).abs() < 1e-14);
        assert!(analyze(&zz, 2, 3, &b).is_err());
    }

    #[test]
    fn kron_ordering_matches_register_order() {
        // X on register 0, Z on register 1 must equal X (x) Z.
        let b = pauli();
        let op =
            FourierOperator::from_terms(2, 2, b.tag(), [(MultiIndex(vec![1, 3]), 1.0)]).unwrap();
        let dense = synthesize(&op, &b, DenseBudget::default()).unwrap();
        let x = DenseHermitian::new(b.element(1).clone()).unwrap();
        let z = DenseHermitian::new(b.element(3).clone()).unwrap();
        assert!(dense.max_abs_diff(&x.kron(&z)) < 1e-15);
    }

    #[test]
    fn influence_examples() {
        let op = FourierOperator::from_terms(
            2,
            2,
            "t",
            [
                (MultiIndex(vec![1, 0]), 0.5),
                (MultiIndex(vec![0, 2]), 0.25),
            ],
        )
        .unwrap();
        assert_eq!(influence(&op, 0).unwrap(), 0.25);
        assert_eq!(influence(&op, 1).unwrap(), 0.0625);
        assert!(matches!(influence(&op, 2), Err(Error::InvalidIndex { .. })));
        let single =
            FourierOperator::from_terms(2, 2, "t", [(MultiIndex(vec![1, 0]), 1.0)]).unwrap();
        assert_eq!(influence(&single, 0).unwrap(), 1.0);
        assert_eq!(influence(&single, 1).unwrap(), 0.0);
    }

    #[test]
    fn noise_and_truncation() {
        let op = FourierOperator::from_terms(
            2,
            3,
            "t",
            [
                (MultiIndex(vec![0, 0, 0]), 1.0),
                (MultiIndex(vec![1, 2, 0]), 0.5),
                (MultiIndex(vec![1, 2, 3]), 0.25),
            ],
        )
        .unwrap();
        assert_eq!(apply_noise(&op, 1.0).unwrap(), op);
        let half = apply_noise(&op, 0.5).unwrap();
        assert_eq!(half.coeff(&MultiIndex(vec![1, 2, 3])), 0.25 * 0.125);
        let zero = apply_noise(&op, 0.0).unwrap();
        assert_eq!(zero.num_terms(), 1);
        assert_eq!(zero.coeff(&MultiIndex::zero(3)), 1.0);
        assert!(apply_noise(&op, 1.5).is_err());
        assert_eq!(truncate_degree(&op, 3), op);
        assert_eq!(truncate_degree(&op, 0).num_terms(), 1);
        assert!(truncate_degree(&op, 2).two_norm_sq() <= op.two_norm_sq());
    }

    #[test]
    fn zeta_and_positive_part_examples() {
        let m = DenseHermitian::from_real_diagonal(&[-1.0, 2.0]);
        assert!((zeta_trace(&m) - 1.0).abs() < 1e-14);
        assert_eq!(zeta_trace(&DenseHermitian::identity(3)), 0.0);
        let n = DenseHermitian::from_real_diagonal(&[-3.0, -4.0]);
        assert!((zeta_trace(&n) - 25.0).abs() < 1e-12);
        let pos = positive_part(&m);
        assert!(pos.max_abs_diff(&DenseHermitian::from_real_diagonal(&[0.0, 2.0])) < 1e-14);
    }

    #[test]
    fn p_norm_examples() {
        assert!(
            (normalized_p_norm(&DenseHermitian::identity(4), 3.0).unwrap() - 1.0).abs() < 1e-14
        );
        let m = DenseHermitian::from_real_diagonal(&[2.0, 0.0]);
        assert!((normalized_p_norm(&m, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(normalized_p_norm(&m, 0.5).is_err());
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let op = FourierOperator::from_terms(
            3,
            2,
            "gellmann:3",
            [
                (MultiIndex(vec![0, 0]), 1.0),
                (MultiIndex(vec![8, 2]), -0.1),
            ],
        )
        .unwrap();
        assert_eq!(FourierOperator::from_text(&op.to_text()).unwrap(), op);
        assert!(matches!(
            FourierOperator::from_text("2 1 t\n0,1 : 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            FourierOperator::from_text("2 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(FourierOperator::from_text("2 1 t\n4 : 1\n").is_err());
    }
}
