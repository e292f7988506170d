//! Executable property checks for random operators over Rademacher signs.
//!
//! Every expectation here is an exact average over an enumerated finite set, so
//! reruns are bit-identical.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::dense::{DenseBudget, DenseHermitian};
use crate::error::{Error, Result};
use crate::prg::{
    field_degree_for, make_field, make_hash_family, make_kwise_vectors, seed_space, HashFamily,
    KWiseVectorFamily,
};
use crate::psd_tester::{
    literal_seed_mean, ordered_sum, rademacher_reference, seed_space_mean, sign_count,
};
use crate::qudit_algebra::{
    build_standard_basis, influences, normalized_p_norm, synthesize, zeta_trace, FourierOperator,
    MultiIndex, StandardBasis,
};

/// Largest number of Rademacher variables enumerated by the checks.
pub const ENUMERATION_LIMIT: usize = 12;
/// Slack on `lhs <= rhs`.
pub const HYPER_TOL: f64 = 1e-9;
/// Largest seed space listed literally when the factorized mean is unavailable.
pub const LITERAL_SEED_LIMIT: u128 = 1 << 20;
/// `1/eta^4` for Rademacher signs.
const RADEMACHER_ETA4_INV: f64 = 9.0;

/// Universal constants of the symbolic bounds, and the empirical tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationConstants {
    pub c: f64,
    pub b3: f64,
    pub c_derand: f64,
    pub tolerance: f64,
}

impl Default for ValidationConstants {
    fn default() -> Self {
        ValidationConstants {
            c: 1.0,
            b3: 1.0,
            c_derand: 1.0,
            tolerance: 0.25,
        }
    }
}

/// `P(b) = sum_S b_S P_S`, with `P_S` given by Fourier coefficients on `h` registers.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomOperatorSpec {
    m: usize,
    h: usize,
    n: usize,
    terms: BTreeMap<(Vec<usize>, MultiIndex), f64>,
}

impl RandomOperatorSpec {
    pub fn new(m: usize, h: usize, n: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("local dimension {m} < 2")));
        }
        Ok(RandomOperatorSpec {
            m,
            h,
            n,
            terms: BTreeMap::new(),
        })
    }

    /// Adds `c` to the coefficient of `b_S B_sigma`.
    pub fn add_term(&mut self, subset: &[usize], sigma: MultiIndex, c: f64) -> Result<()> {
        if !c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coefficient {c} is not finite"
            )));
        }
        if sigma.len() != self.h {
            return Err(Error::Mismatch(format!(
                "multi-index over {} registers, expected {}",
                sigma.len(),
                self.h
            )));
        }
        if sigma.0.iter().any(|&s| s as usize >= self.m * self.m) {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has a digit >= {}",
                self.m * self.m
            )));
        }
        let mut s = subset.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "subset {subset:?} repeats a variable"
            )));
        }
        if let Some(&bad) = s.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidIndex {
                index: bad,
                registers: self.n,
            });
        }
        let entry = self.terms.entry((s, sigma)).or_insert(0.0);
        *entry += c;
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<(Vec<usize>, MultiIndex), f64> {
        &self.terms
    }

    /// `max |S| + |sigma|` over nonzero terms.
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|((s, sigma), _)| s.len() + sigma.weight())
            .max()
            .unwrap_or(0)
    }

    /// The operator `P(b)` for a sign vector encoded as a bitmask (bit `i` set means `b_i = -1`).
    pub fn evaluate(&self, mask: u64, tag: &str) -> Result<FourierOperator> {
        let mut op = FourierOperator::new(self.m, self.h, tag)?;
        for ((s, sigma), &c) in &self.terms {
            let neg = s.iter().filter(|&&i| mask >> i & 1 == 1).count();
            op.add_term(sigma.clone(), if neg % 2 == 1 { -c } else { c })?;
        }
        Ok(op)
    }
}

/// Multiplies every coefficient by `gamma^{|S| + |sigma|}`.
pub fn apply_gamma(spec: &RandomOperatorSpec, gamma: f64) -> Result<RandomOperatorSpec> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} outside [0, 1]"
        )));
    }
    let mut out = spec.clone();
    for ((s, sigma), c) in out.terms.iter_mut() {
        *c *= gamma.powi((s.len() + sigma.weight()) as i32);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperReport {
    /// `E ||P(b)||_4^4`.
    pub lhs: f64,
    /// `max{9m, 1/eta^4}^d (E ||P(b)||_2^2)^2`.
    pub rhs: f64,
    pub second_moment: f64,
    pub factor: f64,
    pub degree: usize,
    pub holds: bool,
}

/// Both sides of the hypercontractive inequality by enumeration over `{-1,+1}^n`.
pub fn check_hypercontractivity(
    spec: &RandomOperatorSpec,
    eta: f64,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<HyperReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} outside (0, 1]"
        )));
    }
    if spec.n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit(format!(
            "{} Rademacher variables exceed {ENUMERATION_LIMIT}",
            spec.n
        )));
    }
    let moments: Vec<(f64, f64)> = (0..1u64 << spec.n)
        .into_par_iter()
        .map(|mask| {
            let mat = synthesize(&spec.evaluate(mask, basis.tag())?, basis, budget)?;
            let n4 = normalized_p_norm(&mat, 4.0)?;
            let n2 = normalized_p_norm(&mat, 2.0)?;
            Ok((n4.powi(4), n2 * n2))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = moments.len() as f64;
    let fourth: Vec<f64> = moments.iter().map(|m| m.0).collect();
    let second: Vec<f64> = moments.iter().map(|m| m.1).collect();
    let lhs = ordered_sum(&fourth) / count;
    let second_moment = ordered_sum(&second) / count;
    let degree = spec.degree();
    let factor = (9.0 * spec.m as f64).max(eta.powi(-4)).powi(degree as i32);
    let rhs = factor * second_moment * second_moment;
    Ok(HyperReport {
        lhs,
        rhs,
        second_moment,
        factor,
        degree,
        holds: lhs <= rhs + HYPER_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaInvarianceReport {
    pub matrix_side: f64,
    pub ensemble_side: f64,
    pub gap: f64,
    pub theoretical_bound: f64,
    pub tau: f64,
    pub degree: usize,
    pub heavy: Vec<usize>,
    pub within_tolerance: bool,
}

fn max_light_influence(op: &FourierOperator, heavy: &[usize]) -> f64 {
    influences(op)
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !heavy.contains(i))
        .map(|(_, v)| v)
        .fold(0.0, f64::max)
}

/// Normalized `Tr zeta` of `op` against its average after replacing the
/// registers outside `heavy` by Rademacher signs.
pub fn check_zeta_invariance(
    op: &FourierOperator,
    heavy: &[usize],
    basis: &StandardBasis,
    budget: DenseBudget,
    constants: &ValidationConstants,
) -> Result<ZetaInvarianceReport> {
    let norm = op.nonconstant_norm_sq();
    if norm > 1.0 + 1e-9 {
        return Err(Error::Normalization(norm));
    }
    if sign_count(op, heavy) > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit(format!(
            "{} sign variables exceed {ENUMERATION_LIMIT}",
            sign_count(op, heavy)
        )));
    }
    let mat = synthesize(op, basis, budget)?;
    let matrix_side = zeta_trace(&mat) / mat.dim() as f64;
    let ensemble_side = rademacher_reference(op, heavy, basis, budget)?;
    let gap = (matrix_side - ensemble_side).abs();
    let tau = max_light_influence(op, heavy);
    let d = op.degree();
    let inner = constants.c
        * constants.b3
        * (9.0 * op.m() as f64)
            .max(RADEMACHER_ETA4_INV)
            .powi(d as i32)
        * tau.sqrt()
        * d as f64;
    let mut h = heavy.to_vec();
    h.sort_unstable();
    h.dedup();
    Ok(ZetaInvarianceReport {
        matrix_side,
        ensemble_side,
        gap,
        theoretical_bound: 3.0 * inner.powf(2.0 / 3.0),
        tau,
        degree: d,
        heavy: h,
        within_tolerance: gap <= constants.tolerance,
    })
}

/// Block count and independence of the seed space used by [`check_derandomization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerandConfig {
    /// Number of blocks, a power of two.
    pub p: usize,
    /// Independence of the sign vectors; `None` means `4d`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerandReport {
    pub uniform_mean: f64,
    pub prg_mean: f64,
    pub gap: f64,
    pub theoretical_bound: f64,
    pub tau: f64,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub seeds: Option<u128>,
    pub seeds_log2: f64,
    pub within_tolerance: bool,
}

/// Mean over uniform signs against the mean over every seed of the block combiner.
pub fn check_derandomization(
    op: &FourierOperator,
    heavy: &[usize],
    d: usize,
    config: DerandConfig,
    basis: &StandardBasis,
    budget: DenseBudget,
    constants: &ValidationConstants,
) -> Result<DerandReport> {
    let n = sign_count(op, heavy);
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit(format!(
            "{n} sign variables exceed {ENUMERATION_LIMIT}"
        )));
    }
    let uniform_mean = rademacher_reference(op, heavy, basis, budget)?;
    let k = config.k.unwrap_or(4 * d).max(1);
    let tau = max_light_influence(op, heavy);
    let theoretical_bound =
        constants.c_derand * ((9.0 * op.m() as f64).powi(d as i32) * d as f64 * tau).sqrt();
    let finish = |prg_mean: f64, seeds: Option<u128>, seeds_log2: f64| {
        let gap = (uniform_mean - prg_mean).abs();
        DerandReport {
            uniform_mean,
            prg_mean,
            gap,
            theoretical_bound,
            tau,
            n,
            p: config.p,
            k: k.min(n.max(1)),
            seeds,
            seeds_log2,
            within_tolerance: gap <= constants.tolerance,
        }
    };
    if n == 0 {
        return Ok(finish(uniform_mean, Some(1), 0.0));
    }
    let hash = make_hash_family(n, config.p, 2, make_field(field_degree_for(n, config.p))?)?;
    let space = seed_space(hash, make_kwise_vectors(n, k)?, config.p)?;
    let prg_mean = match seed_space_mean(op, heavy, &space, basis, budget)? {
        Some((mean, _)) => mean,
        None => literal_seed_mean(op, heavy, &space, basis, budget, LITERAL_SEED_LIMIT)?,
    };
    Ok(finish(
        prg_mean,
        space.cardinality(),
        space.cardinality_log2(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub family: &'static str,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub size: u128,
    pub subsets: usize,
    pub expected: u128,
    pub min_count: u128,
    pub max_count: u128,
    pub uniform: bool,
}

fn subsets_of(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn tally(
    family: &'static str,
    n: usize,
    p: usize,
    k: usize,
    members: &[Vec<usize>],
) -> UniformityReport {
    let width = k.min(n);
    let subsets = subsets_of(n, width);
    let cells = p.pow(width as u32);
    let size = members.len() as u128;
    let expected = size / cells as u128;
    let mut min_count = u128::MAX;
    let mut max_count = 0;
    let mut exact = size % cells as u128 == 0;
    for s in &subsets {
        let mut counts = vec![0u128; cells];
        for f in members {
            let cell = s.iter().fold(0, |acc, &i| acc * p + f[i]);
            counts[cell] += 1;
        }
        for &c in &counts {
            min_count = min_count.min(c);
            max_count = max_count.max(c);
            exact &= c == expected;
        }
    }
    UniformityReport {
        family,
        n,
        p,
        k,
        size,
        subsets: subsets.len(),
        expected,
        min_count,
        max_count,
        uniform: exact,
    }
}

fn enumerable(size: Option<u128>) -> Result<u64> {
    size.filter(|&s| s <= 1 << 24)
        .map(|s| s as u64)
        .ok_or_else(|| Error::EnumerationLimit("family too large to enumerate".into()))
}

/// Integer-exact check that every `k` distinct points see every value tuple equally often.
pub fn check_hash_uniformity(hash: &HashFamily) -> Result<UniformityReport> {
    let size = enumerable(hash.size())?;
    let members: Vec<Vec<usize>> = (0..size as u128).map(|i| hash.member(i)).collect();
    Ok(tally("hash", hash.n(), hash.p(), hash.k(), &members))
}

/// Same check for a sign-vector family, with `-1` counted as the value 1.
pub fn check_vector_uniformity(vectors: &KWiseVectorFamily) -> Result<UniformityReport> {
    let size = enumerable(vectors.size())?;
    let members: Vec<Vec<usize>> = (0..size as u128)
        .map(|i| {
            vectors
                .member(i)
                .into_iter()
                .map(|v| usize::from(v < 0))
                .collect()
        })
        .collect();
    Ok(tally("vectors", vectors.n(), 2, vectors.k(), &members))
}

fn random_sigma(rng: &mut impl Rng, m: usize, registers: usize, weight: usize) -> MultiIndex {
    let mut digits = vec![0u16; registers];
    for i in sample(rng, registers, weight.min(registers)).into_iter() {
        digits[i] = rng.gen_range(1..(m * m) as u16);
    }
    MultiIndex(digits)
}

/// Random operator of degree at most `degree` with Gaussian coefficients on at
/// most `terms` multi-indices, scaled so that `||P||_2^2 = norm_sq`.
pub fn random_operator(
    rng: &mut impl Rng,
    m: usize,
    registers: usize,
    degree: usize,
    terms: usize,
    norm_sq: f64,
    tag: &str,
) -> Result<FourierOperator> {
    let mut op = FourierOperator::new(m, registers, tag)?;
    for _ in 0..terms.max(1) {
        let w = rng.gen_range(0..=degree.min(registers));
        let c: f64 = rng.sample(StandardNormal);
        op.add_term(random_sigma(rng, m, registers, w), c)?;
    }
    let total = op.two_norm_sq();
    if total == 0.0 {
        op.set(MultiIndex::zero(registers), norm_sq.sqrt())?;
        return Ok(op);
    }
    Ok(op.scaled((norm_sq / total).sqrt()))
}

/// Random spec of degree at most `d` with Gaussian coefficients.
pub fn random_spec(
    rng: &mut impl Rng,
    m: usize,
    h: usize,
    n: usize,
    d: usize,
    terms: usize,
) -> Result<RandomOperatorSpec> {
    let mut spec = RandomOperatorSpec::new(m, h, n)?;
    for _ in 0..terms.max(1) {
        let total = rng.gen_range(0..=d);
        let s_len = rng.gen_range(0..=total.min(n));
        let w = (total - s_len).min(h);
        let subset: Vec<usize> = sample(rng, n, s_len).into_vec();
        let c: f64 = rng.sample(StandardNormal);
        spec.add_term(&subset, random_sigma(rng, m, h, w), c)?;
    }
    Ok(spec)
}

/// Registers of largest influence, ties broken by index.
pub fn top_influence_registers(op: &FourierOperator, count: usize) -> Vec<usize> {
    let inf = influences(op);
    let mut order: Vec<usize> = (0..inf.len()).collect();
    order.sort_by(|&a, &b| inf[b].total_cmp(&inf[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order.into_iter().take(count).collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestConfig {
    /// Number of random instances; `None` uses each suite's default.
    pub trials: Option<usize>,
    pub seed: u64,
    pub constants: ValidationConstants,
    pub budget: DenseBudget,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            trials: None,
            seed: 0,
            constants: ValidationConstants::default(),
            budget: DenseBudget::from_env(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub schema: &'static str,
    pub suite: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub details: serde_json::Value,
}

fn report(
    suite: &str,
    cases: usize,
    failures: usize,
    details: serde_json::Value,
) -> SelftestReport {
    SelftestReport {
        schema: "1",
        suite: suite.to_string(),
        passed: failures == 0,
        cases,
        failures,
        details,
    }
}

/// Exhaustive uniformity of every hash family with `n <= 8`, `k <= 3`,
/// `p in {2, 4}`, and of the matching sign-vector families.
pub fn selftest_prg(_config: &SelftestConfig) -> Result<SelftestReport> {
    let mut checks = Vec::new();
    for n in 1..=8 {
        for k in 1..=3 {
            for p in [2, 4] {
                let hash = make_hash_family(n, p, k, make_field(field_degree_for(n, p))?)?;
                checks.push(check_hash_uniformity(&hash)?);
            }
            checks.push(check_vector_uniformity(&make_kwise_vectors(n, k)?)?);
        }
    }
    let failed: Vec<&UniformityReport> = checks.iter().filter(|r| !r.uniform).collect();
    Ok(report(
        "prg",
        checks.len(),
        failed.len(),
        json!({ "failed": failed }),
    ))
}

/// Random degree-`<= 3` specs with `m = 2`, `h <= 2`, `n <= 8`.
pub fn selftest_hyper(config: &SelftestConfig) -> Result<SelftestReport> {
    let trials = config.trials.unwrap_or(1000);
    let basis = build_standard_basis(2)?;
    let eta = 1.0 / 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let specs: Vec<RandomOperatorSpec> = (0..trials)
        .map(|_| {
            let h = rng.gen_range(1..=2);
            let n = rng.gen_range(1..=8);
            let d = rng.gen_range(0..=3);
            let terms = rng.gen_range(1..=6);
            random_spec(&mut rng, 2, h, n, d, terms)
        })
        .collect::<Result<_>>()?;
    let reports: Vec<HyperReport> = specs
        .iter()
        .map(|s| check_hypercontractivity(s, eta, &basis, config.budget))
        .collect::<Result<_>>()?;
    let violations: Vec<(usize, &HyperReport)> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.holds)
        .collect();
    let max_ratio = reports
        .iter()
        .filter(|r| r.rhs > 0.0)
        .map(|r| r.lhs / r.rhs)
        .fold(0.0, f64::max);
    Ok(report(
        "hyper",
        reports.len(),
        violations.len(),
        json!({ "max_ratio": max_ratio, "violations": violations }),
    ))
}

/// Random normalized degree-2 operators, `m = 2`, `D = 4`, two kept registers.
pub fn selftest_invariance(config: &SelftestConfig) -> Result<SelftestReport> {
    let trials = config.trials.unwrap_or(50);
    let basis = build_standard_basis(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gaps = Vec::with_capacity(trials);
    let mut failures = Vec::new();
    for i in 0..trials {
        let norm_sq = rng.gen_range(0.2..1.0);
        let op = random_operator(&mut rng, 2, 4, 2, 8, norm_sq, basis.tag())?;
        let heavy = top_influence_registers(&op, 2);
        let r = check_zeta_invariance(&op, &heavy, &basis, config.budget, &config.constants)?;
        gaps.push(r.gap);
        if !r.within_tolerance {
            failures.push(json!({ "case": i, "report": r }));
        }
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(report(
        "invariance",
        trials,
        failures.len(),
        json!({ "tolerance": config.constants.tolerance, "max_gap": max_gap, "failures": failures }),
    ))
}

/// Random degree-1 operators with six sign variables over two blocks, plus the
/// two structural cases where the means must agree exactly.
pub fn selftest_derand(config: &SelftestConfig) -> Result<SelftestReport> {
    let trials = config.trials.unwrap_or(20);
    let basis = build_standard_basis(2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut failures = Vec::new();
    let mut max_gap: f64 = 0.0;
    let mut cases = 0;
    for i in 0..trials {
        let norm_sq = rng.gen_range(0.2..1.0);
        let op = random_operator(&mut rng, 2, 3, 1, 6, norm_sq, basis.tag())?;
        let heavy = top_influence_registers(&op, 1);
        let mut check = |label: &str, config_d: DerandConfig, exact: bool| -> Result<()> {
            let r = check_derandomization(
                &op,
                &heavy,
                1,
                config_d,
                &basis,
                config.budget,
                &config.constants,
            )?;
            cases += 1;
            let ok = if exact {
                r.gap <= 1e-12
            } else {
                r.within_tolerance
            };
            if !exact {
                max_gap = max_gap.max(r.gap);
            }
            if !ok {
                failures.push(json!({ "case": i, "kind": label, "report": r }));
            }
            Ok(())
        };
        check("random", DerandConfig { p: 2, k: None }, false)?;
        // k >= n: every block is exactly uniform
        check("full-independence", DerandConfig { p: 2, k: Some(6) }, true)?;
        // a single block read on at most 4d coordinates
        let small = restrict_to_register(&op, heavy[0])?;
        let r = check_derandomization(
            &small,
            &heavy,
            1,
            DerandConfig { p: 1, k: None },
            &basis,
            config.budget,
            &config.constants,
        )?;
        cases += 1;
        if r.gap > 1e-12 {
            failures.push(json!({ "case": i, "kind": "one-block", "report": r }));
        }
    }
    Ok(report(
        "derand",
        cases,
        failures.len(),
        json!({ "tolerance": config.constants.tolerance, "max_gap": max_gap, "failures": failures }),
    ))
}

/// Keeps the terms supported on `keep` and at most one other register.
fn restrict_to_register(op: &FourierOperator, keep: usize) -> Result<FourierOperator> {
    let other = (0..op.registers()).find(|&i| i != keep);
    let terms = op.terms().filter(|(sigma, _)| {
        sigma
            .0
            .iter()
            .enumerate()
            .all(|(i, &s)| s == 0 || i == keep || Some(i) == other)
    });
    FourierOperator::from_terms(
        op.m(),
        op.registers(),
        op.basis_tag(),
        terms.map(|(s, c)| (s.clone(), c)),
    )
}

/// Runs the named suite; `all` runs every suite in order.
pub fn run_selftest(name: &str, config: &SelftestConfig) -> Result<Vec<SelftestReport>> {
    match name {
        "prg" => Ok(vec![selftest_prg(config)?]),
        "hyper" => Ok(vec![selftest_hyper(config)?]),
        "invariance" => Ok(vec![selftest_invariance(config)?]),
        "derand" => Ok(vec![selftest_derand(config)?]),
        "all" => Ok(vec![
            selftest_prg(config)?,
            selftest_hyper(config)?,
            selftest_invariance(config)?,
            selftest_derand(config)?,
        ]),
        other => Err(Error::InvalidInput(format!(
            "unknown suite `{other}` (expected prg, hyper, invariance, derand or all)"
        ))),
    }
}

/// Dense `P(b)` for one sign pattern, for callers that want the matrix itself.
pub fn evaluate_dense(
    spec: &RandomOperatorSpec,
    mask: u64,
    basis: &StandardBasis,
    budget: DenseBudget,
) -> Result<DenseHermitian> {
    synthesize(&spec.evaluate(mask, basis.tag())?, basis, budget)
}
