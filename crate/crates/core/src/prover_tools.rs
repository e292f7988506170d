//! The honest prover: smoothing, fixed-point truncation and POVM rounding, with
//! the dense strategy value used as ground truth.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::correlation::{dense_pair_expectation, NoisyMES};
use crate::dense::{checked_pow, CMatrix, DenseBudget, DenseHermitian};
use crate::error::{Error, Result};
use crate::game_verifier::{Certificate, GameSpec, Party};
use crate::qudit_algebra::{
    analyze, apply_noise, positive_part, truncate_degree, zeta_trace, FourierOperator, MultiIndex,
    StandardBasis,
};

/// Tolerance for POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-9;
/// Eigenvalue floor for `Y^{-1/2}` in [`round_to_povm`].
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Tolerance on `sum_a coeff(sigma) = [sigma = 0]` before truncation.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitStrategy {
    m: usize,
    registers: usize,
    alice: Vec<Vec<DenseHermitian>>,
    bob: Vec<Vec<DenseHermitian>>,
}

/// Checks that `elements` are PSD and sum to the identity, both within [`POVM_TOL`].
pub fn check_povm(elements: &[DenseHermitian]) -> Result<()> {
    let dim = elements
        .first()
        .ok_or_else(|| Error::InvalidInput("POVM has no elements".into()))?
        .dim();
    let mut sum = DenseHermitian::from_real_diagonal(&vec![0.0; dim]);
    for (i, e) in elements.iter().enumerate() {
        if e.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "POVM element {i} has dimension {}, expected {dim}",
                e.dim()
            )));
        }
        let low = e.eigenvalues()[0];
        if low < -POVM_TOL {
            return Err(Error::InvalidInput(format!(
                "POVM element {i} has eigenvalue {low:.3e}"
            )));
        }
        sum = sum.add(e);
    }
    let dev = sum.max_abs_diff(&DenseHermitian::identity(dim));
    if dev > POVM_TOL {
        return Err(Error::InvalidInput(format!(
            "POVM elements miss the identity by {dev:.3e}"
        )));
    }
    Ok(())
}

impl ExplicitStrategy {
    /// `alice[x][a]` and `bob[y][b]`, each on `m^D` dimensions.
    pub fn new(
        m: usize,
        registers: usize,
        alice: Vec<Vec<DenseHermitian>>,
        bob: Vec<Vec<DenseHermitian>>,
    ) -> Result<Self> {
        let dim = checked_pow(m, registers)
            .ok_or_else(|| Error::InvalidDimension(format!("{m}^{registers} overflows")))?;
        for (name, side) in [("alice", &alice), ("bob", &bob)] {
            if side.is_empty() {
                return Err(Error::InvalidInput(format!("{name} has no questions")));
            }
            for (q, povm) in side.iter().enumerate() {
                if povm.iter().any(|e| e.dim() != dim) {
                    return Err(Error::InvalidInput(format!(
                        "{name} question {q}: elements must be {dim}x{dim}"
                    )));
                }
                check_povm(povm)
                    .map_err(|e| Error::InvalidInput(format!("{name} question {q}: {e}")))?;
            }
        }
        Ok(ExplicitStrategy {
            m,
            registers,
            alice,
            bob,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn alice(&self) -> &[Vec<DenseHermitian>] {
        &self.alice
    }

    pub fn bob(&self) -> &[Vec<DenseHermitian>] {
        &self.bob
    }

    pub fn side(&self, party: Party) -> &[Vec<DenseHermitian>] {
        match party {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    fn check_game(&self, game: &GameSpec) -> Result<()> {
        game.validate()?;
        let shape = |side: &[Vec<DenseHermitian>], s: usize, t: usize| {
            side.len() == s && side.iter().all(|p| p.len() == t)
        };
        if !shape(&self.alice, game.s_x, game.t_a) || !shape(&self.bob, game.s_y, game.t_b) {
            return Err(Error::Mismatch(
                "strategy shape differs from the game".into(),
            ));
        }
        Ok(())
    }

    /// Every player answers uniformly at random: all elements `I / t`.
    pub fn uniform(m: usize, registers: usize, game: &GameSpec) -> Result<Self> {
        let dim = checked_pow(m, registers)
            .ok_or_else(|| Error::InvalidDimension(format!("{m}^{registers} overflows")))?;
        let side = |s: usize, t: usize| {
            vec![vec![DenseHermitian::identity(dim).scale(1.0 / t as f64); t]; s]
        };
        Self::new(
            m,
            registers,
            side(game.s_x, game.t_a),
            side(game.s_y, game.t_b),
        )
    }
}

/// `gamma` and the truncation degree of the smoothing map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingMap {
    pub gamma: f64,
    pub degree: usize,
    pub delta: f64,
    pub rho: f64,
    pub c_sm: f64,
}

/// `gamma = 1 - c delta (1 - rho) / ln(1/delta)`, `d = ceil(ln(1/delta) / (1 - gamma))`.
pub fn smoothing_map(rho: f64, delta: f64, c_sm: f64) -> Result<SmoothingMap> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho {rho} outside [0, 1)")));
    }
    if !(c_sm > 0.0 && c_sm.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "smoothing constant {c_sm} must be positive"
        )));
    }
    let l = (1.0 / delta).ln();
    let step = c_sm * delta * (1.0 - rho) / l;
    if step > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing step {step} exceeds 1"
        )));
    }
    let gamma = 1.0 - step;
    let degree = (l / step).ceil();
    Ok(SmoothingMap {
        gamma,
        degree: if degree >= usize::MAX as f64 {
            usize::MAX
        } else {
            degree as usize
        },
        delta,
        rho,
        c_sm,
    })
}

impl SmoothingMap {
    /// `(Delta_gamma(op))^{<= d}`: linear and unital.
    pub fn apply(&self, op: &FourierOperator) -> FourierOperator {
        let noisy = apply_noise(op, self.gamma).expect("gamma lies in [0, 1]");
        truncate_degree(&noisy, self.degree)
    }
}

/// Smoothing of one PSD operator given as a dense matrix.
pub fn smooth_strategy(
    p: &DenseHermitian,
    registers: usize,
    basis: &StandardBasis,
    rho: f64,
    delta: f64,
    c_sm: f64,
) -> Result<FourierOperator> {
    let map = smoothing_map(rho, delta, c_sm)?;
    let low = p.eigenvalues().first().copied().unwrap_or(0.0);
    if low < -POVM_TOL {
        return Err(Error::InvalidInput(format!(
            "operator is not PSD (eigenvalue {low:.3e})"
        )));
    }
    let norm = p.frobenius_sq() / p.dim() as f64;
    if norm > 1.0 + POVM_TOL {
        return Err(Error::Normalization(norm));
    }
    Ok(map.apply(&analyze(p, basis.m(), registers, basis)?))
}

/// Floor-quantizes one party's tables to multiples of `2^{-w}` and repairs the
/// identity sums: for each question and `sigma`, the deficit `k` is paid by one
/// unit to each of the `k` lowest answers whose coefficient was strictly reduced.
///
/// `ops[x][a]` are the operators; the result maps `(x, a, sigma)` to numerators.
pub fn truncate_to_certificate(
    ops: &[Vec<FourierOperator>],
    w: u32,
) -> Result<Vec<((usize, usize, MultiIndex), i64)>> {
    if w > crate::game_verifier::MAX_WIDTH {
        return Err(Error::InvalidParameter(format!("width {w} too large")));
    }
    let unit = (1i64 << w) as f64;
    let mut out = Vec::new();
    for (x, povm) in ops.iter().enumerate() {
        let mut keys: std::collections::BTreeSet<MultiIndex> = std::collections::BTreeSet::new();
        for op in povm {
            keys.extend(op.terms().map(|(s, _)| s.clone()));
        }
        if let Some(first) = povm.first() {
            keys.insert(MultiIndex::zero(first.registers()));
        }
        for sigma in keys {
            let target = if sigma.is_zero() { 1.0 } else { 0.0 };
            let coeffs: Vec<f64> = povm.iter().map(|op| op.coeff(&sigma)).collect();
            let total: f64 = coeffs.iter().sum();
            if (total - target).abs() > SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "question {x}, sigma {sigma}: coefficients sum to {total}, expected {target}"
                )));
            }
            if let Some(c) = coeffs.iter().find(|c| c.abs() > 1.0 + SUM_TOL) {
                return Err(Error::InvalidInput(format!(
                    "question {x}, sigma {sigma}: coefficient {c} exceeds 1"
                )));
            }
            let mut nums: Vec<i64> = coeffs.iter().map(|c| (c * unit).floor() as i64).collect();
            let reduced: Vec<usize> = coeffs
                .iter()
                .zip(&nums)
                .enumerate()
                .filter(|(_, (c, &n))| (n as f64) < *c * unit)
                .map(|(a, _)| a)
                .collect();
            let deficit = (target * unit) as i64 - nums.iter().sum::<i64>();
            if deficit < 0 || deficit as usize > reduced.len() {
                return Err(Error::InvalidInput(format!(
                    "question {x}, sigma {sigma}: deficit {deficit} cannot be repaired by {} reduced answers",
                    reduced.len()
                )));
            }
            for &a in reduced.iter().take(deficit as usize) {
                nums[a] += 1;
            }
            for (a, n) in nums.into_iter().enumerate() {
                if n != 0 {
                    out.push(((x, a, sigma.clone()), n));
                }
            }
        }
    }
    Ok(out)
}

/// `L_i = Y^{-1/2} pos(X_i) Y^{-1/2}` with `Y = sum_i pos(X_i)`.
pub fn round_to_povm(xs: &[DenseHermitian]) -> Result<Vec<DenseHermitian>> {
    let dim = xs
        .first()
        .ok_or_else(|| Error::InvalidInput("no operators to round".into()))?
        .dim();
    if xs.iter().any(|x| x.dim() != dim) {
        return Err(Error::InvalidInput("operators differ in dimension".into()));
    }
    let sum = xs.iter().skip(1).fold(xs[0].clone(), |acc, x| acc.add(x));
    let dev = sum.max_abs_diff(&DenseHermitian::identity(dim));
    if dev > POVM_TOL {
        return Err(Error::InvalidInput(format!(
            "operators miss the identity by {dev:.3e}"
        )));
    }
    let pos: Vec<DenseHermitian> = xs.iter().map(positive_part).collect();
    let y = pos.iter().skip(1).fold(pos[0].clone(), |acc, p| acc.add(p));
    let y_inv_sqrt = y.map_spectrum(|l| 1.0 / l.max(EIGEN_FLOOR).sqrt());
    Ok(pos
        .iter()
        .map(|p| DenseHermitian::sandwich(&y_inv_sqrt, p))
        .collect())
}

/// `6 t sum_i m^{-n} Tr zeta(X_i)`.
pub fn rounding_bound(xs: &[DenseHermitian]) -> f64 {
    let t = xs.len() as f64;
    6.0 * t
        * xs.iter()
            .map(|x| zeta_trace(x) / x.dim() as f64)
            .sum::<f64>()
}

/// `sum_i m^{-n} ||L_i - X_i||_F^2`.
pub fn rounding_distance(xs: &[DenseHermitian], ls: &[DenseHermitian]) -> f64 {
    xs.iter()
        .zip(ls)
        .map(|(x, l)| l.sub(x).frobenius_sq() / x.dim() as f64)
        .sum()
}

/// `sum mu V Tr((A^x_a (x) B^y_b) psi^{(x) D})` by dense contraction.
pub fn brute_force_value(
    strategy: &ExplicitStrategy,
    game: &GameSpec,
    mes: &NoisyMES,
    budget: DenseBudget,
) -> Result<f64> {
    strategy.check_game(game)?;
    if strategy.m != mes.m() {
        return Err(Error::Mismatch(format!(
            "strategy m={} differs from state m={}",
            strategy.m,
            mes.m()
        )));
    }
    let mut value = 0.0;
    for x in 0..game.s_x {
        for y in 0..game.s_y {
            let mu = game.mu[x][y];
            if mu == 0.0 {
                continue;
            }
            for a in 0..game.t_a {
                for b in 0..game.t_b {
                    if game.v[x][y][a][b] == 1 {
                        value += mu
                            * dense_pair_expectation(
                                &strategy.alice[x][a],
                                &strategy.bob[y][b],
                                mes,
                                strategy.registers,
                                budget,
                            )?;
                    }
                }
            }
        }
    }
    Ok(value)
}

/// Parameters and predicted tolerances of an honest certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HonestInfo {
    pub smoothing: SmoothingMap,
    pub certificate_degree: usize,
    pub w: u32,
    /// `2 delta t^2 + 2 m^D 2^{-w} t^2`.
    pub allowance: f64,
}

/// Smooths every POVM element with the state's maximal correlation, then
/// quantizes to width `w`.
pub fn honest_certificate(
    strategy: &ExplicitStrategy,
    game: &GameSpec,
    mes: &NoisyMES,
    delta: f64,
    w: u32,
    c_sm: f64,
) -> Result<(Certificate, HonestInfo)> {
    strategy.check_game(game)?;
    if strategy.m != mes.m() {
        return Err(Error::Mismatch(format!(
            "strategy m={} differs from state m={}",
            strategy.m,
            mes.m()
        )));
    }
    let map = smoothing_map(mes.rho(), delta, c_sm)?;
    let d = map.degree.min(strategy.registers);
    let mut cert = Certificate::new(strategy.m, strategy.registers, d, w)?;
    for (party, basis) in [(Party::Alice, mes.basis_a()), (Party::Bob, mes.basis_b())] {
        let ops: Vec<Vec<FourierOperator>> = strategy
            .side(party)
            .iter()
            .map(|povm| {
                povm.iter()
                    .map(|e| {
                        smooth_strategy(e, strategy.registers, basis, mes.rho(), delta, c_sm)
                            .map(|op| truncate_degree(&op, d))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for ((q, a, sigma), num) in truncate_to_certificate(&ops, w)? {
            cert.insert(party, q, a, sigma, num)?;
        }
    }
    let t = game.sizes().1 as f64;
    let dim = checked_pow(strategy.m, strategy.registers).unwrap_or(usize::MAX) as f64;
    let allowance = 2.0 * delta * t * t + 2.0 * dim * 2f64.powi(-(w as i32)) * t * t;
    Ok((
        cert,
        HonestInfo {
            smoothing: map,
            certificate_degree: d,
            w,
            allowance,
        },
    ))
}

/// A random complex matrix with standard normal real and imaginary parts.
fn random_complex(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// A random `t`-outcome POVM on `dim` dimensions: `Y^{-1/2} G_i G_i^dagger Y^{-1/2}`.
pub fn random_povm(dim: usize, t: usize, rng: &mut impl Rng) -> Vec<DenseHermitian> {
    let gs: Vec<DenseHermitian> = (0..t)
        .map(|_| {
            let g = random_complex(dim, rng);
            DenseHermitian::symmetrized(&g * g.adjoint())
        })
        .collect();
    let y = gs.iter().skip(1).fold(gs[0].clone(), |acc, g| acc.add(g));
    let y_inv_sqrt = y.map_spectrum(|l| 1.0 / l.max(EIGEN_FLOOR).sqrt());
    gs.iter()
        .map(|g| DenseHermitian::sandwich(&y_inv_sqrt, g))
        .collect()
}

/// A random projective `t`-outcome measurement: a random unitary's columns split into groups.
pub fn random_projective(dim: usize, t: usize, rng: &mut impl Rng) -> Vec<DenseHermitian> {
    let q = random_complex(dim, rng).qr().q();
    let mut elems: Vec<CMatrix> = vec![CMatrix::zeros(dim, dim); t];
    for col in 0..dim {
        let slot = rng.gen_range(0..t);
        let v = q.column(col);
        elems[slot] += &v * v.adjoint();
    }
    elems.into_iter().map(DenseHermitian::symmetrized).collect()
}

/// A random Hermitian matrix with Gaussian entries scaled by `scale`.
pub fn random_hermitian(dim: usize, scale: f64, rng: &mut impl Rng) -> DenseHermitian {
    let g = random_complex(dim, rng);
    DenseHermitian::symmetrized(g * num_complex::Complex64::new(scale, 0.0))
}

/// A POVM plus Hermitian noise, re-centered so the elements still sum to the identity.
pub fn perturbed_povm(dim: usize, t: usize, noise: f64, rng: &mut impl Rng) -> Vec<DenseHermitian> {
    let base = random_povm(dim, t, rng);
    let noises: Vec<DenseHermitian> = (0..t).map(|_| random_hermitian(dim, noise, rng)).collect();
    let mean = noises
        .iter()
        .skip(1)
        .fold(noises[0].clone(), |acc, n| acc.add(n))
        .scale(1.0 / t as f64);
    base.iter()
        .zip(&noises)
        .map(|(b, n)| b.add(&n.sub(&mean)))
        .collect()
}
