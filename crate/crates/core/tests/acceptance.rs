//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the summary is always printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nga_core::correlation::{depolarized_mes, pair_expectation};
use nga_core::dense::{CMatrix, DenseBudget, DenseHermitian};
use nga_core::game_verifier::{check_identity_sums, verify, GameSpec, Party, VerifyOptions};
use nga_core::prg::{field_degree_for, make_field, make_hash_family, make_kwise_vectors};
use nga_core::prover_tools::{
    brute_force_value, honest_certificate, perturbed_povm, random_povm, round_to_povm,
    ExplicitStrategy,
};
use nga_core::psd_tester::{exact_reference, run_tester, TesterParams};
use nga_core::qudit_algebra::{
    analyze, apply_noise, build_standard_basis, influences, synthesize, zeta_trace,
};
use nga_core::validation::{check_hypercontractivity, random_spec, run_selftest, SelftestConfig};
use nga_core::{FourierOperator, MultiIndex};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn budget() -> DenseBudget {
    DenseBudget::default()
}

fn criterion_1() -> Outcome {
    let limit = Duration::from_secs(30);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut basis_err: f64 = 0.0;
    for m in [2, 3] {
        let basis = build_standard_basis(m).unwrap();
        for (a, b) in basis.elements().iter().zip(gell_mann(m)) {
            basis_err = basis_err.max(max_abs(&(a - b)));
        }
    }
    let (mut roundtrip, mut parseval, mut oracle) = (0f64, 0f64, 0f64);
    for _ in 0..500 {
        let m = rng.gen_range(2..=3);
        let d = rng.gen_range(1..=4);
        let degree = rng.gen_range(0..=d);
        let basis = build_standard_basis(m).unwrap();
        let terms = rng.gen_range(1..=12);
        let op = random_op(&mut rng, m, d, degree, terms, basis.tag());
        let mat = synthesize(&op, &basis, budget()).unwrap();
        let dense = kron_sum(&op, &gell_mann(m));
        oracle = oracle.max(max_abs(&(mat.matrix() - &dense)));
        let back = analyze(&mat, m, d, &basis).unwrap();
        roundtrip = roundtrip.max(back.max_coeff_diff(&op));
        let frob = dense.iter().map(|z| z.norm_sqr()).sum::<f64>() / dense.nrows() as f64;
        parseval = parseval.max((op.two_norm_sq() - frob).abs());
        // synthesize(analyze(M)) = M for a random Hermitian M
        let h = DenseHermitian::new(random_hermitian(&mut rng, m.pow(d as u32))).unwrap();
        let again = synthesize(&analyze(&h, m, d, &basis).unwrap(), &basis, budget()).unwrap();
        roundtrip = roundtrip.max(again.max_abs_diff(&h));
    }
    let elapsed = start.elapsed();
    let worst = roundtrip.max(parseval).max(oracle).max(basis_err);
    outcome(
        worst <= 1e-10 && elapsed <= limit,
        format!(
            "500 ops; roundtrip {roundtrip:.1e}, parseval {parseval:.1e}, kron oracle {oracle:.1e}, basis {basis_err:.1e} (tol 1e-10); {:.1}s (limit 30s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let dim = rng.gen_range(1..=64);
        let m = random_hermitian(&mut rng, dim) * c(1.0 / (dim as f64).sqrt());
        let z = zeta_trace(&DenseHermitian::new(m.clone()).unwrap());
        worst = worst.max((z - distance_to_psd_sq(&m)).abs());
    }
    outcome(
        worst <= 1e-9,
        format!(
            "200 Hermitians up to dim 64; max |Tr zeta - ||M - pos M||^2| = {worst:.1e} (tol 1e-9)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let basis = build_standard_basis(2).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.gen_range(1..=3);
        let op = random_op(&mut rng, 2, d, d, 10, basis.tag());
        let rho = rng.gen_range(0.0..=1.0);
        let fourier = synthesize(&apply_noise(&op, rho).unwrap(), &basis, budget()).unwrap();
        let dense = depolarize_each(&kron_sum(&op, &gell_mann(2)), 2, d, rho);
        worst = worst.max(max_abs(&(fourier.matrix() - dense)));
    }
    outcome(
        worst <= 1e-10,
        format!("200 ops, m=2, D<=3; max entry gap Fourier vs channel {worst:.1e} (tol 1e-10)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mess: Vec<_> = [0.1, 0.25, 0.5]
        .iter()
        .map(|&e| depolarized_mes(2, e).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mes = &mess[i % 3];
        let d = rng.gen_range(1..=4);
        let p = random_op(&mut rng, 2, d, d, 8, mes.basis_a().tag());
        let q = random_op(&mut rng, 2, d, d, 8, mes.basis_b().tag());
        let fourier = pair_expectation(&p, &q, mes).unwrap();
        let pm = kron_sum(&p, mes.basis_a().elements());
        let qm = kron_sum(&q, mes.basis_b().elements());
        let dense = pair_contraction(&pm, &qm, mes.state().matrix(), 2, d);
        worst = worst.max((fourier - dense).abs());
    }
    outcome(
        worst <= 1e-9,
        format!(
            "100 pairs, eps in {{0.1, 0.25, 0.5}}; max |Fourier - dense| {worst:.1e} (tol 1e-9)"
        ),
    )
}

/// Every `min(k, n)` distinct points see every value tuple equally often.
fn exactly_uniform(members: &[Vec<usize>], n: usize, p: usize, k: usize) -> bool {
    let width = k.min(n);
    let cells = p.pow(width as u32);
    if members.len() % cells != 0 {
        return false;
    }
    let expected = members.len() / cells;
    let mut subset: Vec<usize> = (0..width).collect();
    loop {
        let mut counts = vec![0usize; cells];
        for f in members {
            counts[subset.iter().fold(0, |acc, &i| acc * p + f[i])] += 1;
        }
        if counts.iter().any(|&c| c != expected) {
            return false;
        }
        // next combination in lexicographic order
        let mut i = width;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if subset[i] < n - width + i {
                break;
            }
            if i == 0 {
                return true;
            }
        }
        subset[i] += 1;
        for j in i + 1..width {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn criterion_5() -> Outcome {
    let mut families = 0;
    let mut failed = Vec::new();
    for n in 1..=8 {
        for k in 1..=3 {
            for p in [2, 4] {
                let hash =
                    make_hash_family(n, p, k, make_field(field_degree_for(n, p)).unwrap()).unwrap();
                let members: Vec<Vec<usize>> =
                    (0..hash.size().unwrap()).map(|i| hash.member(i)).collect();
                families += 1;
                if members.iter().flatten().any(|&v| v >= p) || !exactly_uniform(&members, n, p, k)
                {
                    failed.push(format!("hash n={n} k={k} p={p}"));
                }
            }
            let vectors = make_kwise_vectors(n, k).unwrap();
            let members: Vec<Vec<usize>> = (0..vectors.size().unwrap())
                .map(|i| {
                    vectors
                        .member(i)
                        .into_iter()
                        .map(|v| usize::from(v < 0))
                        .collect()
                })
                .collect();
            families += 1;
            if !exactly_uniform(&members, n, 2, k) {
                failed.push(format!("vectors n={n} k={k}"));
            }
        }
    }
    outcome(
        failed.is_empty(),
        format!(
            "{families} families exhaustively counted; {} non-uniform {:?}",
            failed.len(),
            failed
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let basis = build_standard_basis(2).unwrap();
    let mut worst: f64 = 0.0;
    let mut not_full = 0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=5);
        let mut op = random_op(&mut rng, 2, d, 2, 8, basis.tag());
        // touch every register so the threshold can keep all of them
        for r in 0..d {
            op.add_term(
                MultiIndex::single(d, r, rng.gen_range(1..4)),
                rng.gen_range(0.1..0.5),
            )
            .unwrap();
        }
        let op = normalized(&op, rng.gen_range(0.3..1.0));
        let tau = influences(&op).into_iter().fold(f64::INFINITY, f64::min) / 2.0;
        let params = TesterParams::new(0.5, 0.1, op.degree().max(1))
            .unwrap()
            .with_tau(tau)
            .unwrap();
        let report = run_tester(&op, &basis, &params).unwrap();
        if report.heavy.len() != d || !report.exact_mode {
            not_full += 1;
        }
        let exact = exact_reference(&op, &basis, budget()).unwrap();
        let oracle = normalized_zeta(&kron_sum(&op, &gell_mann(2)));
        worst = worst
            .max((report.estimate - exact).abs())
            .max((exact - oracle).abs());
    }
    outcome(
        worst <= 1e-9 && not_full == 0,
        format!("100 ops, D<=5; max |estimate - exact| {worst:.1e} (tol 1e-9); runs without H = [D]: {not_full}"),
    )
}

/// `a I + R` with `R` a random traceless degree-2 operator.
fn shifted_op(
    rng: &mut ChaCha8Rng,
    d: usize,
    shift: f64,
    r_norm_sq: f64,
    tag: &str,
) -> FourierOperator {
    let mut r = random_op(rng, 2, d, 2, 10, tag);
    r.set(MultiIndex::zero(d), 0.0).unwrap();
    if r.two_norm_sq() == 0.0 {
        r.add_term(MultiIndex::single(d, 0, 3), 1.0).unwrap();
    }
    let mut op = normalized(&r, r_norm_sq);
    op.set(MultiIndex::zero(d), shift).unwrap();
    op
}

fn criterion_7() -> Outcome {
    let (beta, delta) = (0.5, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let basis = build_standard_basis(2).unwrap();
    let mut instances: Vec<(FourierOperator, bool)> = Vec::new();
    let (mut yes, mut no) = (0, 0);
    while yes < 50 || no < 50 {
        let d = rng.gen_range(2..=4);
        let want_yes = yes < 50 && (no >= 50 || rng.gen_bool(0.5));
        let op = if want_yes {
            let a = rng.gen_range(0.1..0.6);
            let r = rng.gen_range(0.05..(1.0 - a * a));
            shifted_op(&mut rng, d, a, r, basis.tag())
        } else {
            let a = rng.gen_range(0.82..0.97);
            let r = rng.gen_range(0.0..(1.0 - a * a));
            shifted_op(&mut rng, d, -a, r, basis.tag())
        };
        let z = normalized_zeta(&kron_sum(&op, &gell_mann(2)));
        if want_yes && z < beta - delta {
            yes += 1;
            instances.push((op, true));
        } else if !want_yes && z > beta + delta {
            no += 1;
            instances.push((op, false));
        }
    }
    let mut exact_wrong = 0;
    let (mut derand_wrong, mut derand_small_gap, mut derand_large_gap) = (0, 0, 0);
    let mut max_gap: f64 = 0.0;
    for (op, is_yes) in &instances {
        let deg = op.degree().max(1);
        let exact = run_tester(op, &basis, &TesterParams::new(beta, delta, deg).unwrap()).unwrap();
        if !exact.exact_mode || exact.accept != *is_yes {
            exact_wrong += 1;
        }
        let params = TesterParams::new(beta, delta, deg)
            .unwrap()
            .with_tau(0.02)
            .unwrap();
        let derand = run_tester(op, &basis, &params).unwrap();
        let truth = normalized_zeta(&kron_sum(op, &gell_mann(2)));
        let gap = (derand.estimate - truth).abs();
        max_gap = max_gap.max(gap);
        if gap < delta {
            derand_small_gap += 1;
            if derand.accept != *is_yes {
                derand_wrong += 1;
            }
        } else {
            derand_large_gap += 1;
        }
    }
    outcome(
        exact_wrong == 0 && derand_wrong == 0,
        format!(
            "50 yes + 50 no; exact-mode misclassified {exact_wrong}; tau=0.02: {derand_small_gap} with gap < delta, misclassified {derand_wrong}, {derand_large_gap} with gap >= delta (max gap {max_gap:.3})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let limit = Duration::from_secs(180);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let basis = build_standard_basis(2).unwrap();
    let gm = gell_mann(2);
    let eta = 1.0 / 3f64.sqrt();
    let (mut violations, mut disagreements) = (0, 0);
    let mut max_ratio: f64 = 0.0;
    let trials = 1000;
    for _ in 0..trials {
        let h = rng.gen_range(1..=2);
        let n = rng.gen_range(1..=8);
        let d = rng.gen_range(0..=3);
        let terms = rng.gen_range(1..=6);
        let spec = random_spec(&mut rng, 2, h, n, d, terms).unwrap();
        let report = check_hypercontractivity(&spec, eta, &basis, budget()).unwrap();
        // oracle: dense P(b) per sign pattern
        let dense_terms: Vec<(Vec<usize>, CMatrix)> = spec
            .terms()
            .iter()
            .map(|((s, sigma), &coef)| {
                let single =
                    FourierOperator::from_terms(2, h, basis.tag(), [(sigma.clone(), coef)])
                        .unwrap();
                (s.clone(), kron_sum(&single, &gm))
            })
            .collect();
        let degree = spec
            .terms()
            .iter()
            .filter(|(_, &coef)| coef != 0.0)
            .map(|((s, sigma), _)| s.len() + sigma.0.iter().filter(|&&x| x != 0).count())
            .max()
            .unwrap_or(0);
        let dim = 2usize.pow(h as u32);
        let (mut m4, mut m2) = (0.0, 0.0);
        for mask in 0..1u64 << n {
            let mut p = CMatrix::zeros(dim, dim);
            for (s, mat) in &dense_terms {
                let sign = if s.iter().filter(|&&i| mask >> i & 1 == 1).count() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                p += mat * c(sign);
            }
            let ev = eigenvalues(&p);
            m4 += ev.iter().map(|l| l.powi(4)).sum::<f64>() / dim as f64;
            m2 += ev.iter().map(|l| l * l).sum::<f64>() / dim as f64;
        }
        let count = (1u64 << n) as f64;
        let lhs = m4 / count;
        let rhs = 18f64.powi(degree as i32) * (m2 / count).powi(2);
        if lhs > rhs + 1e-9 {
            violations += 1;
        }
        let scale = 1.0 + lhs.abs().max(rhs.abs());
        if !report.holds
            || (report.lhs - lhs).abs() > 1e-9 * scale
            || (report.rhs - rhs).abs() > 1e-9 * scale
        {
            disagreements += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && disagreements == 0 && elapsed <= limit,
        format!(
            "{trials} instances; violations {violations}, library/oracle disagreements {disagreements}, max lhs/rhs {max_ratio:.4}; {:.1}s (limit 180s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let (mut povm_err, mut bound_excess): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for _ in 0..200 {
        let t = rng.gen_range(2..=4);
        let dim = rng.gen_range(1..=16);
        let noise = rng.gen_range(0.01..0.5);
        let xs = perturbed_povm(dim, t, noise, &mut rng);
        let ls = round_to_povm(&xs).unwrap();
        let mut sum = CMatrix::zeros(dim, dim);
        for l in &ls {
            povm_err = povm_err.max((-min_eigenvalue(l.matrix())).max(0.0));
            sum += l.matrix();
        }
        povm_err = povm_err.max(max_abs(&(sum - CMatrix::identity(dim, dim))));
        let distance: f64 = xs
            .iter()
            .zip(&ls)
            .map(|(x, l)| {
                (l.matrix() - x.matrix())
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    / dim as f64
            })
            .sum();
        let bound = 6.0 * t as f64 * xs.iter().map(|x| normalized_zeta(x.matrix())).sum::<f64>();
        bound_excess = bound_excess.max(distance - bound);
    }
    outcome(
        povm_err <= 1e-9 && bound_excess <= 1e-9,
        format!("200 perturbed POVMs, t<=4, dim<=16; POVM error {povm_err:.1e}, max (distance - 6t bound) {bound_excess:.2e} (tol 1e-9)"),
    )
}

fn random_game(rng: &mut ChaCha8Rng, t_fixed: Option<usize>) -> GameSpec {
    let s_x = rng.gen_range(1..=3);
    let s_y = rng.gen_range(1..=3);
    let t_a = t_fixed.unwrap_or_else(|| rng.gen_range(1..=2));
    let t_b = t_fixed.unwrap_or_else(|| rng.gen_range(1..=2));
    let weights: Vec<Vec<u32>> = (0..s_x)
        .map(|_| (0..s_y).map(|_| rng.gen_range(1..=8)).collect())
        .collect();
    let total: u32 = weights.iter().flatten().sum();
    let mu = weights
        .iter()
        .map(|r| r.iter().map(|&w| w as f64 / total as f64).collect())
        .collect();
    let v = (0..s_x)
        .map(|_| {
            (0..s_y)
                .map(|_| {
                    (0..t_a)
                        .map(|_| (0..t_b).map(|_| rng.gen_range(0..=1)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    GameSpec {
        s_x,
        s_y,
        t_a,
        t_b,
        mu,
        v,
    }
}

fn random_strategy(rng: &mut ChaCha8Rng, game: &GameSpec, d: usize) -> ExplicitStrategy {
    let dim = 2usize.pow(d as u32);
    let alice = (0..game.s_x)
        .map(|_| random_povm(dim, game.t_a, rng))
        .collect();
    let bob = (0..game.s_y)
        .map(|_| random_povm(dim, game.t_b, rng))
        .collect();
    ExplicitStrategy::new(2, d, alice, bob).unwrap()
}

fn oracle_value(strategy: &ExplicitStrategy, game: &GameSpec, state: &CMatrix) -> f64 {
    let mut total = 0.0;
    for x in 0..game.s_x {
        for y in 0..game.s_y {
            for a in 0..game.t_a {
                for b in 0..game.t_b {
                    if game.v[x][y][a][b] == 1 && game.mu[x][y] > 0.0 {
                        let e = pair_contraction(
                            strategy.alice()[x][a].matrix(),
                            strategy.bob()[y][b].matrix(),
                            state,
                            2,
                            strategy.registers(),
                        );
                        total += game.mu[x][y] * e;
                    }
                }
            }
        }
    }
    total
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mes = depolarized_mes(2, 0.25).unwrap();
    let (delta, w) = (0.01, 20);
    let (mut rejected, mut identity_bad) = (0, 0);
    let mut oracle_gap: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..20 {
        let game = random_game(&mut rng, None);
        let d = rng.gen_range(1..=3);
        let strategy = random_strategy(&mut rng, &game, d);
        let value = brute_force_value(&strategy, &game, &mes, budget()).unwrap();
        oracle_gap =
            oracle_gap.max((value - oracle_value(&strategy, &game, mes.state().matrix())).abs());
        let (cert, info) = honest_certificate(&strategy, &game, &mes, delta, w, 1.0).unwrap();
        let t = game.t_a.max(game.t_b) as f64;
        let allowance =
            2.0 * delta * t * t + 2.0 * 2f64.powi(d as i32) * 2f64.powi(-(w as i32)) * t * t;
        let beta = value - (allowance + 1e-6);
        if !check_identity_sums(&cert, game.s_x, game.s_y).ok {
            identity_bad += 1;
        }
        let report = verify(&cert, &game, &mes, beta, &VerifyOptions::new(delta)).unwrap();
        if !report.accept {
            rejected += 1;
        }
        min_margin = min_margin.min(report.value - beta);
        assert!((info.allowance - allowance).abs() < 1e-15);
    }
    outcome(
        rejected == 0 && identity_bad == 0 && oracle_gap <= 1e-9,
        format!(
            "20 games; rejected {rejected}, identity failures {identity_bad}, brute-force vs oracle {oracle_gap:.1e}, min value - beta {min_margin:.3}"
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let mes = depolarized_mes(2, 0.25).unwrap();
    let (delta, w) = (0.005, 16);
    let mut identity_rejected = 0;
    for _ in 0..20 {
        let game = random_game(&mut rng, None);
        let d = rng.gen_range(1..=3);
        let strategy = random_strategy(&mut rng, &game, d);
        let (mut cert, _) = honest_certificate(&strategy, &game, &mes, delta, w, 1.0).unwrap();
        let party = if rng.gen_bool(0.5) {
            Party::Alice
        } else {
            Party::Bob
        };
        let (s, t) = match party {
            Party::Alice => (game.s_x, game.t_a),
            Party::Bob => (game.s_y, game.t_b),
        };
        let (x, a) = (rng.gen_range(0..s), rng.gen_range(0..t));
        let sigma = if rng.gen_bool(0.5) {
            MultiIndex::zero(d)
        } else {
            random_sigma(&mut rng, 2, d, 1)
        };
        let old = cert.numerator(party, x, a, &sigma);
        // stay inside the representable numerator range
        let bump = if old.abs() == cert.unit() {
            -old.signum()
        } else if rng.gen_bool(0.5) {
            1
        } else {
            -1
        };
        cert.insert(party, x, a, sigma, old + bump).unwrap();
        let report = verify(&cert, &game, &mes, -1.0, &VerifyOptions::new(delta)).unwrap();
        if !report.accept && !report.identity_ok {
            identity_rejected += 1;
        }
    }
    let mut planted_rejected = 0;
    let mut min_planted: f64 = f64::INFINITY;
    for _ in 0..20 {
        let game = random_game(&mut rng, Some(2));
        let d = rng.gen_range(1..=3);
        let strategy = random_strategy(&mut rng, &game, d);
        let (cert, _) = honest_certificate(&strategy, &game, &mes, delta, w, 1.0).unwrap();
        let x = rng.gen_range(0..game.s_x);
        let zero = MultiIndex::zero(d);
        let unit = cert.unit();
        let zed = MultiIndex::single(d, 0, 3);
        // move weight from answer 0 to answer 1 on the identity and on a Z term;
        // identity sums are unchanged and numerators stay within +-unit
        let mut planted = None;
        for step in 1..=40 {
            let shift = (step as f64 * 0.05 * unit as f64).round() as i64;
            let mut trial = cert.clone();
            for sigma in [&zero, &zed] {
                let n0 = trial.numerator(Party::Alice, x, 0, sigma);
                let n1 = trial.numerator(Party::Alice, x, 1, sigma);
                let room = if sigma == &zero {
                    n0.min(unit - n1).max(0)
                } else {
                    (unit + n0).min(unit - n1).max(0)
                };
                let moved = shift.min(room);
                trial
                    .insert(Party::Alice, x, 0, sigma.clone(), n0 - moved)
                    .unwrap();
                trial
                    .insert(Party::Alice, x, 1, sigma.clone(), n1 + moved)
                    .unwrap();
            }
            let op = trial
                .operator(Party::Alice, x, 0, mes.basis_a().tag())
                .unwrap();
            let z = normalized_zeta(&kron_sum(&op, mes.basis_a().elements()));
            if z > 6.0 * delta && op.two_norm_sq() <= 1.0 {
                planted = Some((trial, z));
                break;
            }
        }
        let (trial, z) = planted.expect("a shift reaching zeta > 6 delta");
        min_planted = min_planted.min(z);
        let report = verify(&trial, &game, &mes, -1.0, &VerifyOptions::new(delta)).unwrap();
        let entry = report
            .positivity
            .iter()
            .find(|e| e.party == Party::Alice && e.question == x && e.answer == 0)
            .unwrap();
        if !report.accept && report.identity_ok && !entry.passed && entry.estimate.is_some() {
            planted_rejected += 1;
        }
    }
    outcome(
        identity_rejected == 20 && planted_rejected == 20,
        format!(
            "identity violations rejected {identity_rejected}/20; planted blocks (min zeta {min_planted:.3} > 6 delta = {:.3}) rejected {planted_rejected}/20",
            6.0 * delta
        ),
    )
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let reports = run_selftest("all", &SelftestConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let passed = reports.iter().all(|r| r.passed);
    let summary: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.suite, r.cases - r.failures, r.cases))
        .collect();
    outcome(
        passed && elapsed <= Duration::from_secs(300),
        format!(
            "{}; {:.1}s (limit 300s)",
            summary.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("fourier roundtrip and parseval", criterion_1),
        ("zeta distance identity", criterion_2),
        ("noise operator dual form", criterion_3),
        ("correlation spectrum pair value", criterion_4),
        ("k-wise uniformity", criterion_5),
        ("tester exactness", criterion_6),
        ("tester yes/no separation", criterion_7),
        ("hypercontractivity", criterion_8),
        ("povm rounding", criterion_9),
        ("end-to-end completeness", criterion_10),
        ("end-to-end soundness", criterion_11),
        ("selftest all runtime", criterion_12),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.2}s]",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
