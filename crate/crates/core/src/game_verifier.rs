//! Games, fixed-point certificates and the verifier.
//!
//! A certificate stores every Fourier coefficient as an integer numerator over
//! `2^w`, so the sum-to-identity conditions are checked exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::NoisyMES;
use crate::dense::DenseBudget;
use crate::error::{Error, Result};
use crate::psd_tester::{run_tester, TesterConstants, TesterParams, TesterReport};
use crate::qudit_algebra::{FourierOperator, MultiIndex, StandardBasis};

/// Largest supported fixed-point width.
pub const MAX_WIDTH: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub s_x: usize,
    pub s_y: usize,
    pub t_a: usize,
    pub t_b: usize,
    /// `mu[x][y]`.
    pub mu: Vec<Vec<f64>>,
    /// `V[x][y][a][b]` in `{0, 1}`.
    #[serde(rename = "V")]
    pub v: Vec<Vec<Vec<Vec<u8>>>>,
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s_x == 0 || self.s_y == 0 || self.t_a == 0 || self.t_b == 0 {
            return Err(Error::InvalidInput(
                "question and answer sets must be nonempty".into(),
            ));
        }
        if self.mu.len() != self.s_x || self.mu.iter().any(|r| r.len() != self.s_y) {
            return Err(Error::InvalidInput(format!(
                "mu must be {}x{}",
                self.s_x, self.s_y
            )));
        }
        let mut total = 0.0;
        for row in &self.mu {
            for &p in row {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "mu entry {p} is not a probability"
                    )));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "mu sums to {total}, expected 1"
            )));
        }
        let shape_ok = self.v.len() == self.s_x
            && self.v.iter().all(|vx| {
                vx.len() == self.s_y
                    && vx
                        .iter()
                        .all(|vxy| vxy.len() == self.t_a && vxy.iter().all(|r| r.len() == self.t_b))
            });
        if !shape_ok {
            return Err(Error::InvalidInput(format!(
                "V must be {}x{}x{}x{}",
                self.s_x, self.s_y, self.t_a, self.t_b
            )));
        }
        if self.v.iter().flatten().flatten().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidInput("V entries must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let game: GameSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        game.validate()?;
        Ok(game)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serializes")
    }

    /// Uniform questions, answers in `{0,1}`, win iff `a xor b = x and y`.
    pub fn chsh() -> Self {
        let mut v = vec![vec![vec![vec![0u8; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        v[x][y][a][b] = u8::from((a ^ b) == (x & y));
                    }
                }
            }
        }
        GameSpec {
            s_x: 2,
            s_y: 2,
            t_a: 2,
            t_b: 2,
            mu: vec![vec![0.25; 2]; 2],
            v,
        }
    }

    /// The larger question count and the larger answer count.
    pub fn sizes(&self) -> (usize, usize) {
        (self.s_x.max(self.s_y), self.t_a.max(self.t_b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    #[serde(rename = "A")]
    Alice,
    #[serde(rename = "B")]
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "A",
            Party::Bob => "B",
        })
    }
}

/// `(question, answer, sigma) -> numerator`.
pub type CoefficientTable = BTreeMap<(usize, usize, MultiIndex), i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    m: usize,
    registers: usize,
    d: usize,
    w: u32,
    alice: CoefficientTable,
    bob: CoefficientTable,
}

impl Certificate {
    pub fn new(m: usize, registers: usize, d: usize, w: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("qudit dimension {m} < 2")));
        }
        if w > MAX_WIDTH {
            return Err(Error::InvalidParameter(format!(
                "width {w} exceeds {MAX_WIDTH}"
            )));
        }
        Ok(Certificate {
            m,
            registers,
            d,
            w,
            alice: BTreeMap::new(),
            bob: BTreeMap::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    /// `2^w`.
    pub fn unit(&self) -> i64 {
        1i64 << self.w
    }

    pub fn table(&self, party: Party) -> &CoefficientTable {
        match party {
            Party::Alice => &self.alice,
            Party::Bob => &self.bob,
        }
    }

    /// Stores a numerator; a zero numerator removes the entry.
    pub fn insert(
        &mut self,
        party: Party,
        question: usize,
        answer: usize,
        sigma: MultiIndex,
        numerator: i64,
    ) -> Result<()> {
        if sigma.len() != self.registers {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has {} entries, expected {}",
                sigma.len(),
                self.registers
            )));
        }
        if sigma.0.iter().any(|&s| s as usize >= self.m * self.m) {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has an entry >= {}",
                self.m * self.m
            )));
        }
        if sigma.weight() > self.d {
            return Err(Error::InvalidInput(format!(
                "multi-index {sigma} has weight above degree {}",
                self.d
            )));
        }
        if numerator.unsigned_abs() > self.unit() as u64 {
            return Err(Error::InvalidInput(format!(
                "numerator {numerator} exceeds 2^{} in absolute value",
                self.w
            )));
        }
        let table = match party {
            Party::Alice => &mut self.alice,
            Party::Bob => &mut self.bob,
        };
        if numerator == 0 {
            table.remove(&(question, answer, sigma));
        } else {
            table.insert((question, answer, sigma), numerator);
        }
        Ok(())
    }

    pub fn numerator(
        &self,
        party: Party,
        question: usize,
        answer: usize,
        sigma: &MultiIndex,
    ) -> i64 {
        self.table(party)
            .get(&(question, answer, sigma.clone()))
            .copied()
            .unwrap_or(0)
    }

    /// The decoded operator for one (question, answer) pair.
    pub fn operator(
        &self,
        party: Party,
        question: usize,
        answer: usize,
        basis_tag: &str,
    ) -> Result<FourierOperator> {
        let scale = (self.unit() as f64).recip();
        let mut op = FourierOperator::new(self.m, self.registers, basis_tag)?;
        for ((q, a, sigma), &num) in self.table(party) {
            if *q == question && *a == answer {
                op.set(sigma.clone(), num as f64 * scale)?;
            }
        }
        Ok(op)
    }

    /// Header `m D d w`, then one `party x a sigma numerator` record per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.m, self.registers, self.d, self.w);
        for party in [Party::Alice, Party::Bob] {
            for ((q, a, sigma), num) in self.table(party) {
                out.push_str(&format!("{party} {q} {a} {sigma} {num}\n"));
            }
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
            line: 0,
            message: "empty certificate".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        if fields.len() != 4 {
            return Err(parse_err(
                hline,
                format!("header needs `m D d w`, found `{header}`"),
            ));
        }
        let nums: Vec<usize> = fields
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(hline, format!("header: {e}")))?;
        let mut cert = Certificate::new(nums[0], nums[1], nums[2], nums[3] as u32)
            .map_err(|e| parse_err(hline, e.to_string()))?;
        for (line, record) in lines {
            let f: Vec<&str> = record.split_whitespace().collect();
            if f.len() != 5 {
                return Err(parse_err(
                    line,
                    format!("record needs `party x a sigma numerator`, found `{record}`"),
                ));
            }
            let party = match f[0] {
                "A" => Party::Alice,
                "B" => Party::Bob,
                other => return Err(parse_err(line, format!("unknown party `{other}`"))),
            };
            let q = f[1]
                .parse::<usize>()
                .map_err(|e| parse_err(line, format!("question: {e}")))?;
            let a = f[2]
                .parse::<usize>()
                .map_err(|e| parse_err(line, format!("answer: {e}")))?;
            let sigma = MultiIndex::parse(f[3]).map_err(|e| parse_err(line, e))?;
            let num = f[4]
                .parse::<i64>()
                .map_err(|e| parse_err(line, format!("numerator: {e}")))?;
            if cert.table(party).contains_key(&(q, a, sigma.clone())) {
                return Err(parse_err(
                    line,
                    format!("duplicate record for {party} {q} {a} {sigma}"),
                ));
            }
            cert.insert(party, q, a, sigma, num)
                .map_err(|e| parse_err(line, e.to_string()))?;
        }
        Ok(cert)
    }

    /// Fails unless every entry fits the game's question and answer sets.
    pub fn check_shape(&self, game: &GameSpec) -> Result<()> {
        for (party, s, t) in [
            (Party::Alice, game.s_x, game.t_a),
            (Party::Bob, game.s_y, game.t_b),
        ] {
            if let Some((q, a, _)) = self
                .table(party)
                .keys()
                .find(|(q, a, _)| *q >= s || *a >= t)
            {
                return Err(Error::Mismatch(format!(
                    "{party} entry ({q}, {a}) outside {s} questions x {t} answers"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityViolation {
    pub party: Party,
    pub question: usize,
    pub sigma: String,
    pub sum: i128,
    pub target: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub ok: bool,
    pub violations: Vec<IdentityViolation>,
}

/// For every question and `sigma`: `sum_a numerator = 2^w [sigma = 0]`, exactly.
pub fn check_identity_sums(cert: &Certificate, s_x: usize, s_y: usize) -> IdentityCheck {
    let mut violations = Vec::new();
    let unit = cert.unit() as i128;
    for (party, questions) in [(Party::Alice, s_x), (Party::Bob, s_y)] {
        let mut sums: BTreeMap<(usize, MultiIndex), i128> = BTreeMap::new();
        for q in 0..questions {
            sums.insert((q, MultiIndex::zero(cert.registers)), 0);
        }
        for ((q, _, sigma), &num) in cert.table(party) {
            *sums.entry((*q, sigma.clone())).or_insert(0) += num as i128;
        }
        for ((q, sigma), sum) in sums {
            let target = if sigma.is_zero() { unit } else { 0 };
            if sum != target {
                violations.push(IdentityViolation {
                    party,
                    question: q,
                    sigma: sigma.to_string(),
                    sum,
                    target,
                });
            }
        }
    }
    IdentityCheck {
        ok: violations.is_empty(),
        violations,
    }
}

/// `sum mu V sum_sigma c_sigma P(sigma) Q(sigma)` over the decoded tables.
pub fn game_value(cert: &Certificate, game: &GameSpec, mes: &NoisyMES) -> Result<f64> {
    if cert.m != mes.m() {
        return Err(Error::Mismatch(format!(
            "certificate qudit dimension {} differs from state dimension {}",
            cert.m,
            mes.m()
        )));
    }
    game.validate()?;
    cert.check_shape(game)?;
    let scale = (cert.unit() as f64).recip();
    let group = |party: Party, s: usize, t: usize| {
        let mut g: Vec<Vec<BTreeMap<&MultiIndex, f64>>> = vec![vec![BTreeMap::new(); t]; s];
        for ((q, a, sigma), &num) in cert.table(party) {
            g[*q][*a].insert(sigma, num as f64 * scale);
        }
        g
    };
    let alice = group(Party::Alice, game.s_x, game.t_a);
    let bob = group(Party::Bob, game.s_y, game.t_b);
    let mut value = 0.0;
    for x in 0..game.s_x {
        for y in 0..game.s_y {
            let mu = game.mu[x][y];
            if mu == 0.0 {
                continue;
            }
            for a in 0..game.t_a {
                for b in 0..game.t_b {
                    if game.v[x][y][a][b] == 0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for (sigma, p) in &alice[x][a] {
                        if let Some(q) = bob[y][b].get(sigma) {
                            inner += mes.c_sigma(&sigma.0) * p * q;
                        }
                    }
                    value += mu * inner;
                }
            }
        }
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifierConstants {
    pub d_mcc: f64,
    /// Smoothing constant.
    pub c_sm: f64,
    /// Multiplicative constant of the register bound.
    pub c_upper: f64,
}

impl Default for VerifierConstants {
    fn default() -> Self {
        VerifierConstants {
            d_mcc: 300.0,
            c_sm: 1.0,
            c_upper: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierParams {
    pub s: usize,
    pub t: usize,
    pub m: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub constants: VerifierConstants,
    /// `eps^2 / (4 t^3)`.
    pub eps_prime: f64,
    /// `eps'^2 / (d_mcc t (t + 1))`.
    pub delta: f64,
    /// `c_sm ln^2(1/delta) / (delta ln(1/rho))`.
    pub degree: f64,
    /// `c_sm ln^2(1/delta) / (delta (1 - rho))`, reported for comparison.
    pub degree_alt: f64,
    /// Natural log of the register bound, evaluated at `eps / 2`.
    pub ln_registers: f64,
    /// The register bound when it is representable.
    pub registers: Option<f64>,
    /// `D log2 m + log2(2/delta)`; `None` when `D` overflows.
    pub width: Option<f64>,
    /// `log2 m * exp(ln D) + log2(2/delta)` in log form: `ln` of the `D log2 m` term.
    pub ln_width_leading: f64,
}

/// The parameter table for `s` questions, `t` answers and maximal correlation `rho`.
pub fn derive_params(
    s: usize,
    t: usize,
    m: usize,
    rho: f64,
    epsilon: f64,
    constants: VerifierConstants,
) -> Result<VerifierParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, 1)"
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho {rho} outside (0, 1)")));
    }
    if s == 0 || t == 0 || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need s, t >= 1 and m >= 2 (s={s}, t={t}, m={m})"
        )));
    }
    let (s_f, t_f, m_f) = (s as f64, t as f64, m as f64);
    let eps_prime = epsilon * epsilon / (4.0 * t_f.powi(3));
    let delta = eps_prime * eps_prime / (constants.d_mcc * t_f * (t_f + 1.0));
    let l = (1.0 / delta).ln();
    let degree = constants.c_sm * l * l / (delta * (1.0 / rho).ln());
    let degree_alt = constants.c_sm * l * l / (delta * (1.0 - rho));
    let e = epsilon / 2.0;
    let ln_registers = constants.c_upper.ln() + 12.0 * s_f.ln() + 120.0 * t_f.ln() - 48.0 * e.ln()
        + 600.0 * t_f.powi(9) * m_f.ln() / (e.powi(4) * (1.0 - rho))
            * (t_f / (e * (1.0 - rho))).ln().powi(2);
    let registers = Some(ln_registers.exp()).filter(|d| d.is_finite());
    let ln_width_leading = ln_registers + m_f.log2().ln();
    let width = registers.map(|d| d * m_f.log2() + (2.0 / delta).log2());
    Ok(VerifierParams {
        s,
        t,
        m,
        rho,
        epsilon,
        constants,
        eps_prime,
        delta,
        degree,
        degree_alt,
        ln_registers,
        registers,
        width,
        ln_width_leading,
    })
}

/// `ceil(D log2 m + log2(2/delta))` for a given register count.
pub fn width_for(registers: usize, m: usize, delta: f64) -> u32 {
    (registers as f64 * (m as f64).log2() + (2.0 / delta).log2()).ceil() as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// The `delta` of the positivity sub-tests (run at `beta = 4 delta`, tolerance `2 delta`).
    pub delta: f64,
    pub tau_override: Option<f64>,
    pub seed_budget: u128,
    pub tester_constants: TesterConstants,
    pub budget: DenseBudget,
    /// Skip the remaining checks after the first failure.
    pub early_reject: bool,
}

impl VerifyOptions {
    pub fn new(delta: f64) -> Self {
        VerifyOptions {
            delta,
            tau_override: None,
            seed_budget: 1 << 16,
            tester_constants: TesterConstants::default(),
            budget: DenseBudget::from_env(),
            early_reject: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityEntry {
    pub party: Party,
    pub question: usize,
    pub answer: usize,
    pub passed: bool,
    pub estimate: Option<f64>,
    /// Set when the operator could not be tested (for example, norm above 1).
    pub note: Option<String>,
    pub report: Option<TesterReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierReport {
    pub value: f64,
    pub beta: f64,
    pub value_ok: bool,
    pub identity_ok: bool,
    pub identity_violations: Vec<IdentityViolation>,
    pub positivity_ok: bool,
    pub positivity_checked: bool,
    pub tester_beta: f64,
    pub tester_delta: f64,
    pub positivity: Vec<PositivityEntry>,
    pub accept: bool,
}

/// Runs the value, identity and positivity checks.
pub fn verify(
    cert: &Certificate,
    game: &GameSpec,
    mes: &NoisyMES,
    beta: f64,
    opts: &VerifyOptions,
) -> Result<VerifierReport> {
    if !(opts.delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {} must be positive",
            opts.delta
        )));
    }
    let value = game_value(cert, game, mes)?;
    let value_ok = value >= beta;
    let identity = check_identity_sums(cert, game.s_x, game.s_y);
    let tester_beta = 4.0 * opts.delta;
    let tester_delta = 2.0 * opts.delta;
    let mut report = VerifierReport {
        value,
        beta,
        value_ok,
        identity_ok: identity.ok,
        identity_violations: identity.violations,
        positivity_ok: false,
        positivity_checked: false,
        tester_beta,
        tester_delta,
        positivity: Vec::new(),
        accept: false,
    };
    if opts.early_reject && !(value_ok && report.identity_ok) {
        return Ok(report);
    }
    let mut params = TesterParams::new(tester_beta, tester_delta, cert.d)?;
    params.tau_override = opts.tau_override;
    params.seed_budget = opts.seed_budget;
    params.constants = opts.tester_constants;
    params.budget = opts.budget;
    params.validate()?;

    let mut jobs: Vec<(Party, usize, usize, &StandardBasis)> = Vec::new();
    for x in 0..game.s_x {
        for a in 0..game.t_a {
            jobs.push((Party::Alice, x, a, mes.basis_a()));
        }
    }
    for y in 0..game.s_y {
        for b in 0..game.t_b {
            jobs.push((Party::Bob, y, b, mes.basis_b()));
        }
    }
    let entries: Vec<PositivityEntry> = jobs
        .par_iter()
        .map(|&(party, q, a, basis)| -> Result<PositivityEntry> {
            let op = cert.operator(party, q, a, basis.tag())?;
            match run_tester(&op, basis, &params) {
                Ok(r) => Ok(PositivityEntry {
                    party,
                    question: q,
                    answer: a,
                    passed: r.accept,
                    estimate: Some(r.estimate),
                    note: None,
                    report: Some(r),
                }),
                Err(Error::Normalization(norm)) => Ok(PositivityEntry {
                    party,
                    question: q,
                    answer: a,
                    passed: false,
                    estimate: None,
                    note: Some(format!("squared 2-norm {norm} exceeds 1")),
                    report: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    report.positivity_ok = entries.iter().all(|e| e.passed);
    report.positivity_checked = true;
    report.positivity = entries;
    report.accept = report.value_ok && report.identity_ok && report.positivity_ok;
    Ok(report)
}

/// Every `sigma` that appears for a question, plus the zero index.
pub fn question_support(
    table: &CoefficientTable,
    question: usize,
    registers: usize,
) -> BTreeSet<MultiIndex> {
    let mut set: BTreeSet<MultiIndex> = table
        .keys()
        .filter(|(q, _, _)| *q == question)
        .map(|(_, _, s)| s.clone())
        .collect();
    set.insert(MultiIndex::zero(registers));
    set
}
