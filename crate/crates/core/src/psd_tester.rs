//! Deterministic positivity testing for low-degree operators given by Fourier
//! coefficients.
//!
//! Registers of influence above `tau` are kept as matrices; every other register
//! is replaced by signs drawn from the block combiner, and the mean normalized
//! `zeta` distance of the resulting small operators is compared against `beta`.
//!
//! The mean over the joint seed space is computed exactly without listing every
//! seed: for a fixed hash member the blocks are independent, so the law of the
//! coordinates the operator actually reads is a product of per-block marginals.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::dense::DenseBudget;
use crate::error::{Error, Result};
use crate::prg::{
    field_degree_for, make_field, make_hash_family, make_kwise_vectors, seed_space, SeedIndex,
    SeedSpace,
};
use crate::qudit_algebra::{
    influences, synthesize, zeta_trace, FourierOperator, MultiIndex, StandardBasis,
};

/// Slack on the `||P||_2^2 <= 1` precondition of regularization.
pub const NORM_TOL: f64 = 1e-9;
/// Largest `n` for which [`rademacher_reference`] enumerates `{-1,+1}^n`.
pub const RADEMACHER_LIMIT: usize = 14;
/// Largest hash family walked by the factorized mean.
pub const FACTORIZED_HASH_LIMIT: u128 = 1 << 16;
/// Largest number of active sign coordinates for the factorized mean.
pub const FACTORIZED_ACTIVE_LIMIT: usize = 16;
/// Largest vector family enumerated to tally a marginal above its uniformity.
pub const MARGINAL_ENUMERATION_LIMIT: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TesterConstants {
    /// Constant of the derandomization bound.
    pub c_derand: f64,
}

impl Default for TesterConstants {
    fn default() -> Self {
        TesterConstants { c_derand: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TesterParams {
    pub beta: f64,
    pub delta: f64,
    pub d: usize,
    pub tau_override: Option<f64>,
    /// Seeds evaluated when the exact mean is out of reach.
    pub seed_budget: u128,
    pub constants: TesterConstants,
    pub budget: DenseBudget,
}

impl TesterParams {
    pub fn new(beta: f64, delta: f64, d: usize) -> Result<Self> {
        let p = TesterParams {
            beta,
            delta,
            d,
            tau_override: None,
            seed_budget: 1 << 16,
            constants: TesterConstants::default(),
            budget: DenseBudget::from_env(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        self.tau_override = Some(tau);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.beta > self.delta && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need beta > delta > 0 (beta={}, delta={})",
                self.beta, self.delta
            )));
        }
        if let Some(t) = self.tau_override {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "tau override {t} must be positive"
                )));
            }
        }
        if self.seed_budget == 0 {
            return Err(Error::InvalidParameter(
                "seed budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TesterMode {
    /// No register was replaced, or the operator ignores the replaced ones.
    Exact,
    /// Exact mean over the full seed space.
    Factorized,
    /// Budgeted fixed-stride subsample of the seed space.
    Subsampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TesterReport {
    pub estimate: f64,
    pub accept: bool,
    pub beta: f64,
    pub delta: f64,
    pub d: usize,
    /// Kept (high-influence) registers, 0-based.
    pub heavy: Vec<usize>,
    /// Influence threshold; 0 at degree 0, where no register is replaced.
    pub tau: f64,
    pub p_log2: u32,
    pub p: Option<u128>,
    pub n: usize,
    /// Uniformity of each block source.
    pub k: usize,
    pub active_coordinates: usize,
    pub seeds_total: Option<u128>,
    pub seeds_total_log2: f64,
    /// `None` when every seed is covered and the count exceeds 128 bits.
    pub seeds_used: Option<u128>,
    pub mode: TesterMode,
    pub exact_mode: bool,
    pub subsampled: bool,
    pub evaluations: usize,
    /// `(3^d m^{d/2} sqrt(tau) d)^{2/3}`.
    pub bound_invariance: f64,
    /// `C sqrt((9m)^d d tau)`.
    pub bound_derandomization: f64,
}

/// `delta^3 / (8 * 3^{2d} * m^d * d^2)`.
pub fn default_tau(delta: f64, d: usize, m: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::DegenerateDegree);
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must be positive"
        )));
    }
    let d_f = d as f64;
    Ok(delta.powi(3) / (8.0 * 9f64.powi(d as i32) * (m as f64).powi(d as i32) * d_f * d_f))
}

/// Registers whose influence exceeds `tau`.
pub fn regularize(op: &FourierOperator, tau: f64) -> Result<Vec<usize>> {
    let norm = op.two_norm_sq();
    if norm > 1.0 + NORM_TOL {
        return Err(Error::Normalization(norm));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau {tau} must be positive"
        )));
    }
    let heavy: Vec<usize> = influences(op)
        .into_iter()
        .enumerate()
        .filter(|&(_, inf)| inf > tau)
        .map(|(i, _)| i)
        .collect();
    let cap = op.degree() as f64 / tau;
    debug_assert!(heavy.len() as f64 <= cap + 1e-9 || norm > 1.0);
    Ok(heavy)
}

fn removed_registers(registers: usize, heavy: &[usize]) -> Vec<usize> {
    (0..registers).filter(|i| !heavy.contains(i)).collect()
}

fn check_heavy(op: &FourierOperator, heavy: &[usize]) -> Result<()> {
    if heavy.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "register set must be strictly increasing".into(),
        ));
    }
    if let Some(&bad) = heavy.iter().find(|&&i| i >= op.registers()) {
        return Err(Error::InvalidIndex {
            index: bad,
            registers: op.registers(),
        });
    }
    Ok(())
}

/// Number of sign variables, `(m^2 - 1)(D - |H|)`.
pub fn sign_count(op: &FourierOperator, heavy: &[usize]) -> usize {
    (op.m() * op.m() - 1) * (op.registers() - heavy.len())
}

/// One term after substitution: the kept key and the sign coordinates it multiplies.
struct SplitTerm {
    kept: MultiIndex,
    coeff: f64,
    coords: Vec<usize>,
}

fn split_terms(op: &FourierOperator, heavy: &[usize]) -> Vec<SplitTerm> {
    let stride = op.m() * op.m() - 1;
    let rank: Vec<Option<usize>> = {
        let removed = removed_registers(op.registers(), heavy);
        let mut r = vec![None; op.registers()];
        for (k, &i) in removed.iter().enumerate() {
            r[i] = Some(k);
        }
        r
    };
    op.terms()
        .map(|(sigma, c)| {
            let kept = MultiIndex(heavy.iter().map(|&i| sigma.0[i]).collect());
            let coords = sigma
                .0
                .iter()
                .enumerate()
                .filter_map(|(i, &s)| match rank[i] {
                    Some(r) if s != 0 => Some(stride * r + s as usize - 1),
                    _ => None,
                })
                .collect();
            SplitTerm {
                kept,
                coeff: c,
                coords,
            }
        })
        .collect()
}

fn assemble(
    op: &FourierOperator,
    heavy: &[usize],
    terms: &[SplitTerm],
    sign: impl Fn(usize) -> f64,
) -> Result<FourierOperator> {
    let mut out = FourierOperator::new(op.m(), heavy.len(), op.basis_tag())?;
    for t in terms {
        let s: f64 = t.coords.iter().map(|&c| sign(c)).product();
        out.add_term(t.kept.clone(), t.coeff * s)?;
    }
    Ok(out)
}

/// `sum_sigma coeff(sigma) x_{sigma off H} B_{sigma_H}` on the kept registers.
pub fn substitute(op: &FourierOperator, heavy: &[usize], x: &[i8]) -> Result<FourierOperator> {
    check_heavy(op, heavy)?;
    let n = sign_count(op, heavy);
    if x.len() != n {
        return Err(Error::InvalidInput(format!(
            "sign vector has length {}, expected {n}",
            x.len()
        )));
    }
    if x.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::InvalidInput(
            "sign vector entries must be +1 or -1".into(),
        ));
    }
    let terms = split_terms(op, heavy);
    assemble(op, heavy, &terms, |c| x[c] as f64)
}

/// `m^{-h} Tr zeta(synthesize(op))` for an operator on `h` registers.
pub fn normalized_zeta(
    op: &FourierOperator,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<f64> {
    let mat = synthesize(op, basis, budget)?;
    Ok(zeta_trace(&mat) / mat.dim() as f64)
}

/// `m^{-D} Tr zeta(P)`: the quantity the tester estimates.
pub fn exact_reference(
    op: &FourierOperator,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<f64> {
    normalized_zeta(op, basis, budget)
}

/// `delta_{f,z}` for one seed of the joint space.
pub fn delta_for_seed(
    op: &FourierOperator,
    heavy: &[usize],
    seed: &SeedIndex,
    space: &SeedSpace,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<f64> {
    let x = space.generate(seed)?;
    normalized_zeta(&substitute(op, heavy, &x)?, basis, budget)
}

/// Exact average of `m^{-|H|} Tr zeta(substitute(op, H, b))` over all `b` in `{-1,+1}^n`.
pub fn rademacher_reference(
    op: &FourierOperator,
    heavy: &[usize],
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<f64> {
    check_heavy(op, heavy)?;
    let n = sign_count(op, heavy);
    if n > RADEMACHER_LIMIT {
        return Err(Error::EnumerationLimit(format!(
            "{n} sign variables exceed the exhaustive limit {RADEMACHER_LIMIT}"
        )));
    }
    let terms = split_terms(op, heavy);
    let values: Vec<f64> = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let sub = assemble(op, heavy, &terms, |c| {
                if mask >> c & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })?;
            normalized_zeta(&sub, basis, budget)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ordered_sum(&values) / (1u64 << n) as f64)
}

/// Fixed-order pairwise summation.
pub fn ordered_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        values.iter().fold(0.0, |acc, v| acc + v)
    } else {
        let mid = values.len() / 2;
        ordered_sum(&values[..mid]) + ordered_sum(&values[mid..])
    }
}

/// The literal mean of `delta_{f,z}` over every seed of `space`.
pub fn literal_seed_mean(
    op: &FourierOperator,
    heavy: &[usize],
    space: &SeedSpace,
    basis: &StandardBasis,
    budget: DenseBudget,
    limit: u128,
) -> Result<f64> {
    let card = space.cardinality().filter(|&c| c <= limit).ok_or_else(|| {
        Error::EnumerationLimit(format!(
            "seed space 2^{:.1} exceeds {limit}",
            space.cardinality_log2()
        ))
    })?;
    let seeds: Vec<SeedIndex> = space.iter().collect();
    let values: Vec<f64> = seeds
        .par_iter()
        .map(|s| delta_for_seed(op, heavy, s, space, basis, budget))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ordered_sum(&values) / card as f64)
}

/// Exact mean of `delta_{f,z}` over every seed of `space`, computed from the
/// law of the active sign coordinates. Returns the mean and the number of
/// distinct substituted operators evaluated, or `None` when the law is too
/// large to tabulate.
pub fn seed_space_mean(
    op: &FourierOperator,
    heavy: &[usize],
    space: &SeedSpace,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<Option<(f64, usize)>> {
    check_heavy(op, heavy)?;
    let n = sign_count(op, heavy);
    if space.hash().n() != n {
        return Err(Error::InvalidInput(format!(
            "seed space covers {} coordinates, operator has {n}",
            space.hash().n()
        )));
    }
    let terms = split_terms(op, heavy);
    let mut active: Vec<usize> = terms
        .iter()
        .flat_map(|t| t.coords.iter().copied())
        .collect();
    active.sort_unstable();
    active.dedup();
    if active.len() > FACTORIZED_ACTIVE_LIMIT
        || space
            .hash()
            .size()
            .is_none_or(|s| s > FACTORIZED_HASH_LIMIT)
    {
        return Ok(None);
    }
    let Some(weights) = factorized_weights(space, &active)? else {
        return Ok(None);
    };
    let pos: HashMap<usize, usize> = active.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let local: Vec<SplitTerm> = terms
        .iter()
        .map(|t| SplitTerm {
            kept: t.kept.clone(),
            coeff: t.coeff,
            coords: t.coords.iter().map(|c| pos[c]).collect(),
        })
        .collect();
    let support: Vec<(u64, f64)> = weights.into_iter().filter(|&(_, w)| w > 0.0).collect();
    let values: Vec<f64> = support
        .par_iter()
        .map(|&(mask, w)| {
            let sub = assemble(op, heavy, &local, |j| {
                if mask >> j & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })?;
            normalized_zeta(&sub, basis, budget).map(|v| w * v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some((ordered_sum(&values), support.len())))
}

/// Smallest power of two `>= ratio`, as its exponent.
fn power_of_two_at_least(ratio: f64) -> u32 {
    if ratio <= 1.0 {
        0
    } else {
        let mut e = ratio.log2().ceil() as u32;
        // guard the rounding of log2 on both sides
        while e > 0 && 2f64.powi(e as i32 - 1) >= ratio {
            e -= 1;
        }
        while 2f64.powi(e as i32) < ratio {
            e += 1;
        }
        e
    }
}

/// Runs the tester on `op`, expressed in `basis`.
pub fn run_tester(
    op: &FourierOperator,
    basis: &StandardBasis,
    params: &TesterParams,
) -> Result<TesterReport> {
    params.validate()?;
    let m = op.m();
    let d = params.d;
    if op.degree() > d {
        return Err(Error::InvalidInput(format!(
            "operator degree {} exceeds bound {d}",
            op.degree()
        )));
    }
    let mut report = TesterReport {
        estimate: 0.0,
        accept: false,
        beta: params.beta,
        delta: params.delta,
        d,
        heavy: (0..op.registers()).collect(),
        tau: 0.0,
        p_log2: 0,
        p: Some(1),
        n: 0,
        k: 0,
        active_coordinates: 0,
        seeds_total: Some(1),
        seeds_total_log2: 0.0,
        seeds_used: Some(1),
        mode: TesterMode::Exact,
        exact_mode: true,
        subsampled: false,
        evaluations: 1,
        bound_invariance: 0.0,
        bound_derandomization: 0.0,
    };
    if d == 0 {
        report.estimate = exact_reference(op, basis, params.budget)?;
        report.accept = report.estimate < params.beta;
        return Ok(report);
    }
    let tau = match params.tau_override {
        Some(t) => t,
        None => default_tau(params.delta, d, m)?,
    };
    report.tau = tau;
    let d_f = d as f64;
    report.bound_invariance =
        (3f64.powi(d as i32) * (m as f64).powf(d_f / 2.0) * tau.sqrt() * d_f).powf(2.0 / 3.0);
    report.bound_derandomization =
        params.constants.c_derand * ((9.0 * m as f64).powi(d as i32) * d_f * tau).sqrt();

    let heavy = regularize(op, tau)?;
    if heavy.len() == op.registers() {
        report.estimate = exact_reference(op, basis, params.budget)?;
        report.accept = report.estimate < params.beta;
        return Ok(report);
    }
    let n = sign_count(op, &heavy);
    let p_log2 = power_of_two_at_least(d_f / tau);
    let k = 4 * d;
    let terms = split_terms(op, &heavy);
    let active: Vec<usize> = {
        let mut a: Vec<usize> = terms
            .iter()
            .flat_map(|t| t.coords.iter().copied())
            .collect();
        a.sort_unstable();
        a.dedup();
        a
    };
    report.heavy = heavy.clone();
    report.n = n;
    report.k = k.min(n);
    report.p_log2 = p_log2;
    report.p = 1u128.checked_shl(p_log2).filter(|_| p_log2 < 128);
    report.active_coordinates = active.len();
    let t_hash = field_degree_for_log2(n, p_log2);
    let t_vec = field_degree_for(n, 2);
    report.seeds_total_log2 =
        2.0 * t_hash as f64 + 2f64.powi(p_log2 as i32) * (t_vec as f64 * k.min(n) as f64);
    report.seeds_total = None;
    report.seeds_used = None;

    if active.is_empty() {
        // the substituted operator is the same for every seed
        let sub = assemble(op, &heavy, &terms, |_| 1.0)?;
        report.estimate = normalized_zeta(&sub, basis, params.budget)?;
        report.accept = report.estimate < params.beta;
        report.seeds_total = seed_cardinality(n, p_log2, k);
        report.seeds_used = report.seeds_total;
        return Ok(report);
    }

    let pos: HashMap<usize, usize> = active.iter().enumerate().map(|(j, &c)| (c, j)).collect();
    let local_terms: Vec<SplitTerm> = terms
        .iter()
        .map(|t| SplitTerm {
            kept: t.kept.clone(),
            coeff: t.coeff,
            coords: t.coords.iter().map(|c| pos[c]).collect(),
        })
        .collect();
    let g = |mask: u64| -> Result<f64> {
        let sub = assemble(op, &heavy, &local_terms, |j| {
            if mask >> j & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        })?;
        normalized_zeta(&sub, basis, params.budget)
    };

    report.mode = TesterMode::Factorized;
    report.exact_mode = false;
    report.seeds_total = seed_cardinality(n, p_log2, k);
    if active.len() <= k.min(n) && active.len() <= FACTORIZED_ACTIVE_LIMIT {
        // every block sees at most k active coordinates, so for every hash member
        // the active signs are exactly uniform
        let a = active.len();
        let w = 1.0 / (1u64 << a) as f64;
        let values: Vec<f64> = (0..1u64 << a)
            .into_par_iter()
            .map(|mask| g(mask).map(|v| w * v))
            .collect::<Result<Vec<f64>>>()?;
        report.estimate = ordered_sum(&values);
        report.evaluations = values.len();
        report.seeds_used = report.seeds_total;
        report.accept = report.estimate < params.beta;
        return Ok(report);
    }
    if t_hash > 32 || p_log2 >= 31 {
        return Err(Error::UnsupportedDegree(t_hash));
    }
    let p = 1usize << p_log2;
    let hash = make_hash_family(n, p, 2, make_field(t_hash)?)?;
    let vectors = make_kwise_vectors(n, k)?;
    let space = seed_space(hash, vectors, p)?;
    report.seeds_total = space.cardinality();
    report.seeds_total_log2 = space.cardinality_log2();

    let factorizable = space
        .hash()
        .size()
        .is_some_and(|s| s <= FACTORIZED_HASH_LIMIT)
        && active.len() <= FACTORIZED_ACTIVE_LIMIT;
    let weights = if factorizable {
        factorized_weights(&space, &active)?
    } else {
        None
    };
    match weights {
        Some(weights) => {
            let support: Vec<(u64, f64)> = weights.into_iter().filter(|&(_, w)| w > 0.0).collect();
            let values: Vec<f64> = support
                .par_iter()
                .map(|&(mask, w)| g(mask).map(|v| w * v))
                .collect::<Result<Vec<f64>>>()?;
            report.estimate = ordered_sum(&values);
            report.evaluations = support.len();
            report.seeds_used = report.seeds_total;
        }
        None => {
            let sched = space.schedule(params.seed_budget);
            let masks: Vec<u64> = sched
                .seeds
                .iter()
                .map(|s| {
                    space.generate(s).map(|x| {
                        active.iter().enumerate().fold(0u64, |acc, (j, &c)| {
                            if x[c] < 0 {
                                acc | 1 << j
                            } else {
                                acc
                            }
                        })
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            let mut distinct: Vec<u64> = masks.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let values: Vec<f64> = distinct
                .par_iter()
                .map(|&mask| g(mask))
                .collect::<Result<Vec<f64>>>()?;
            let lookup: HashMap<u64, f64> = distinct.iter().copied().zip(values).collect();
            let per_seed: Vec<f64> = masks.iter().map(|mk| lookup[mk]).collect();
            report.estimate = ordered_sum(&per_seed) / per_seed.len() as f64;
            report.evaluations = distinct.len();
            report.seeds_used = Some(sched.seeds.len() as u128);
            report.subsampled = sched.subsampled;
            report.mode = if sched.subsampled {
                TesterMode::Subsampled
            } else {
                TesterMode::Factorized
            };
        }
    }
    report.accept = report.estimate < params.beta;
    Ok(report)
}

fn field_degree_for_log2(n: usize, p_log2: u32) -> u32 {
    if p_log2 >= 63 {
        p_log2 + 1
    } else {
        field_degree_for(n, 1usize << p_log2.min(62))
    }
}

fn seed_cardinality(n: usize, p_log2: u32, k: usize) -> Option<u128> {
    if p_log2 >= 31 {
        return None;
    }
    let hash = make_hash_family(
        n,
        1 << p_log2,
        2,
        make_field(field_degree_for(n, 1 << p_log2)).ok()?,
    )
    .ok()?;
    let vectors = make_kwise_vectors(n, k).ok()?;
    seed_space(hash, vectors, 1 << p_log2).ok()?.cardinality()
}

/// Law of the active sign coordinates under the full seed space, as weights
/// indexed by the bitmask of negative coordinates. `None` when a block marginal
/// would need an enumeration beyond the limit.
fn factorized_weights(space: &SeedSpace, active: &[usize]) -> Result<Option<BTreeMap<u64, f64>>> {
    let hash = space.hash();
    let vectors = space.vectors();
    let hash_size = hash.size().expect("checked by caller");
    let k = vectors.k();
    let mut marginals: HashMap<Vec<usize>, Vec<(u64, f64)>> = HashMap::new();
    let mut weights: BTreeMap<u64, f64> = BTreeMap::new();
    let inv_hash = 1.0 / hash_size as f64;
    for fi in 0..hash_size {
        let f = hash.member(fi);
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (j, &c) in active.iter().enumerate() {
            blocks.entry(f[c]).or_default().push(j);
        }
        // each block contributes a law over the bits of its own active positions
        let mut keyed: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(blocks.len());
        for (_, positions) in blocks {
            let coords: Vec<usize> = positions.iter().map(|&j| active[j]).collect();
            if !marginals.contains_key(&coords) {
                match block_marginal(vectors, &coords, k) {
                    Some(m) => {
                        marginals.insert(coords.clone(), m);
                    }
                    None => return Ok(None),
                }
            }
            keyed.push((positions, coords));
        }
        let laws = keyed
            .iter()
            .map(|(positions, coords)| (positions, &marginals[coords]));
        let mut partial: Vec<(u64, f64)> = vec![(0, inv_hash)];
        for (positions, law) in laws {
            let mut next = Vec::with_capacity(partial.len() * law.len());
            for &(mask, w) in &partial {
                for &(pattern, pw) in law.iter() {
                    let mut mk = mask;
                    for (b, &j) in positions.iter().enumerate() {
                        if pattern >> b & 1 == 1 {
                            mk |= 1 << j;
                        }
                    }
                    next.push((mk, w * pw));
                }
            }
            partial = next;
        }
        for (mask, w) in partial {
            *weights.entry(mask).or_insert(0.0) += w;
        }
    }
    Ok(Some(weights))
}

/// Law of a vector-family member restricted to `coords`, as (pattern, probability).
fn block_marginal(
    vectors: &crate::prg::KWiseVectorFamily,
    coords: &[usize],
    k: usize,
) -> Option<Vec<(u64, f64)>> {
    let s = coords.len();
    if s <= k {
        // exact by k-wise uniformity
        let w = 1.0 / (1u64 << s) as f64;
        return Some((0..1u64 << s).map(|pat| (pat, w)).collect());
    }
    let size = vectors
        .size()
        .filter(|&v| v <= MARGINAL_ENUMERATION_LIMIT)?;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for vi in 0..size {
        let z = vectors.member(vi);
        let pat = coords.iter().enumerate().fold(
            0u64,
            |acc, (b, &c)| if z[c] < 0 { acc | 1 << b } else { acc },
        );
        *counts.entry(pat).or_insert(0) += 1;
    }
    Some(
        counts
            .into_iter()
            .map(|(pat, c)| (pat, c as f64 / size as f64))
            .collect(),
    )
}
