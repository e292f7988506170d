use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nga_core::formats::{load_mes, parse_strategy, MesSpec};
use nga_core::game_verifier::{
    derive_params, game_value, verify, Certificate, GameSpec, VerifierConstants, VerifierReport,
    VerifyOptions,
};
use nga_core::prover_tools::{brute_force_value, honest_certificate};
use nga_core::psd_tester::{run_tester, TesterConstants, TesterParams};
use nga_core::qudit_algebra::build_standard_basis;
use nga_core::validation::{run_selftest, SelftestConfig, ValidationConstants};
use nga_core::{DenseBudget, Error, FourierOperator};

/// Exit codes: 0 accept or pass, 1 reject or fail, 2 usage or input error.
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "nga",
    version,
    about = "Certificates and positivity tests for games on noisy entangled states"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a certificate against a game and a state.
    Verify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long = "cert")]
        cert: PathBuf,
        /// `depolarized:m=<int>,eps=<float>` or `file:<path>`.
        #[arg(long)]
        mes: String,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long = "seed-budget")]
        seed_budget: Option<u128>,
        #[arg(long = "c-derand", default_value_t = 1.0)]
        c_derand: f64,
        /// Stop at the first failed check.
        #[arg(long = "early-reject")]
        early_reject: bool,
    },
    /// Build the honest certificate of an explicit strategy.
    Prove {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long)]
        mes: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        width: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "c-sm", default_value_t = 1.0)]
        c_sm: f64,
    },
    /// Test whether an operator is close to positive semidefinite.
    PsdTest {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        /// Degree bound; defaults to the operator's degree.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long = "seed-budget")]
        seed_budget: Option<u128>,
        #[arg(long = "c-derand", default_value_t = 1.0)]
        c_derand: f64,
    },
    /// Print the verifier parameters for a game size.
    Params {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long = "d-mcc", default_value_t = 300.0)]
        d_mcc: f64,
        #[arg(long = "c-sm", default_value_t = 1.0)]
        c_sm: f64,
        #[arg(long = "c-upper", default_value_t = 1.0)]
        c_upper: f64,
    },
    /// Run the property suites.
    Selftest {
        #[arg(value_parser = ["prg", "hyper", "invariance", "derand", "all"])]
        suite: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        tolerance: f64,
    },
}

/// Failure that maps to exit code 2.
struct InputError(String);

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        InputError(e.to_string())
    }
}

type CmdResult = Result<u8, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn with_context<T>(path: &Path, r: nga_core::Result<T>) -> Result<T, InputError> {
    r.map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<(), InputError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(InputError(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

fn emit(format: Format, command: &str, report: &impl Serialize) {
    let value = serde_json::to_value(report).expect("reports serialize");
    match format {
        Format::Json => {
            let doc = json!({ "schema": "1", "command": command, "report": value });
            say(&serde_json::to_string_pretty(&doc).expect("json"));
        }
        Format::Text => print_text(&value),
    }
}

/// Writes one line to stdout; a closed pipe ends output quietly.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// One `key: value` line per top-level field; nested values as compact JSON.
fn print_text(value: &Value) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::String(s) => say(&format!("{k}: {s}")),
                    other => say(&format!("{k}: {other}")),
                }
            }
        }
        other => say(&other.to_string()),
    }
}

fn cmd_verify(format: Format, args: &Command) -> CmdResult {
    let Command::Verify {
        game,
        cert,
        mes,
        beta,
        delta,
        tau,
        seed_budget,
        c_derand,
        early_reject,
    } = args
    else {
        unreachable!()
    };
    positive("delta", *delta)?;
    if let Some(t) = tau {
        positive("tau", *t)?;
    }
    let game_spec = with_context(game, GameSpec::from_json(&read(game)?))?;
    let certificate = with_context(cert, Certificate::from_text(&read(cert)?))?;
    let state = load_mes(&mes.parse::<MesSpec>()?)?;
    let mut opts = VerifyOptions::new(*delta);
    opts.tau_override = *tau;
    if let Some(b) = seed_budget {
        opts.seed_budget = *b;
    }
    opts.tester_constants = TesterConstants {
        c_derand: *c_derand,
    };
    opts.early_reject = *early_reject;
    let report = verify(&certificate, &game_spec, &state, *beta, &opts)?;
    match format {
        Format::Json => emit(format, "verify", &report),
        Format::Text => print_verify_text(&report),
    }
    Ok(if report.accept { 0 } else { EXIT_FAIL })
}

fn print_verify_text(r: &VerifierReport) {
    say(&format!(
        "decision: {}",
        if r.accept { "accept" } else { "reject" }
    ));
    say(&format!(
        "value: {} (beta {}, {})",
        r.value,
        r.beta,
        if r.value_ok { "ok" } else { "too low" }
    ));
    say(&format!(
        "identity sums: {}",
        if r.identity_ok { "ok" } else { "violated" }
    ));
    for v in &r.identity_violations {
        say(&format!("  {}", serde_json::to_string(v).expect("json")));
    }
    if !r.positivity_checked {
        say("positivity: not checked");
        return;
    }
    say(&format!(
        "positivity (beta {}, delta {}): {}",
        r.tester_beta,
        r.tester_delta,
        if r.positivity_ok { "ok" } else { "failed" }
    ));
    for e in &r.positivity {
        let party = serde_json::to_value(e.party).expect("json");
        let estimate = e.estimate.map_or("-".to_string(), |v| v.to_string());
        let mode = e.report.as_ref().map_or("-".to_string(), |t| {
            serde_json::to_value(t.mode).expect("json").to_string()
        });
        let mut line = format!(
            "  {} x={} a={} {} estimate={} mode={}",
            party.as_str().unwrap_or("?"),
            e.question,
            e.answer,
            if e.passed { "pass" } else { "FAIL" },
            estimate,
            mode.trim_matches('"')
        );
        if let Some(note) = &e.note {
            line.push_str(&format!(" note={note}"));
        }
        say(&line);
    }
}

#[derive(Serialize)]
struct ProveReport {
    out: String,
    strategy_value: f64,
    certificate_value: f64,
    rho: f64,
    gamma: f64,
    smoothing_degree: usize,
    certificate_degree: usize,
    w: u32,
    allowance: f64,
    suggested_beta: f64,
    entries: usize,
}

fn cmd_prove(format: Format, args: &Command) -> CmdResult {
    let Command::Prove {
        game,
        strategy,
        mes,
        delta,
        width,
        out,
        c_sm,
    } = args
    else {
        unreachable!()
    };
    positive("delta", *delta)?;
    positive("c-sm", *c_sm)?;
    let game_spec = with_context(game, GameSpec::from_json(&read(game)?))?;
    let strat = with_context(strategy, parse_strategy(&read(strategy)?))?;
    let state = load_mes(&mes.parse::<MesSpec>()?)?;
    let strategy_value = brute_force_value(&strat, &game_spec, &state, DenseBudget::from_env())?;
    let (cert, info) = honest_certificate(&strat, &game_spec, &state, *delta, *width, *c_sm)?;
    let certificate_value = game_value(&cert, &game_spec, &state)?;
    std::fs::write(out, cert.to_text())
        .map_err(|e| InputError(format!("cannot write {}: {e}", out.display())))?;
    let entries = cert.table(nga_core::game_verifier::Party::Alice).len()
        + cert.table(nga_core::game_verifier::Party::Bob).len();
    let report = ProveReport {
        out: out.display().to_string(),
        strategy_value,
        certificate_value,
        rho: state.rho(),
        gamma: info.smoothing.gamma,
        smoothing_degree: info.smoothing.degree,
        certificate_degree: info.certificate_degree,
        w: info.w,
        allowance: info.allowance,
        suggested_beta: strategy_value - info.allowance - 1e-6,
        entries,
    };
    emit(format, "prove", &report);
    Ok(0)
}

fn cmd_psd_test(format: Format, args: &Command) -> CmdResult {
    let Command::PsdTest {
        op,
        beta,
        delta,
        degree,
        tau,
        seed_budget,
        c_derand,
    } = args
    else {
        unreachable!()
    };
    let operator = with_context(op, FourierOperator::from_text(&read(op)?))?;
    let basis = build_standard_basis(operator.m())?;
    if operator.basis_tag() != basis.tag() {
        return Err(InputError(format!(
            "{}: basis `{}` is not supported here (expected `{}`)",
            op.display(),
            operator.basis_tag(),
            basis.tag()
        )));
    }
    let mut params = TesterParams::new(*beta, *delta, degree.unwrap_or_else(|| operator.degree()))?;
    if let Some(t) = tau {
        params = params.with_tau(*t)?;
    }
    if let Some(b) = seed_budget {
        params.seed_budget = *b;
    }
    params.constants = TesterConstants {
        c_derand: *c_derand,
    };
    let report = run_tester(&operator, &basis, &params)?;
    emit(format, "psd-test", &report);
    Ok(if report.accept { 0 } else { EXIT_FAIL })
}

fn cmd_params(format: Format, args: &Command) -> CmdResult {
    let Command::Params {
        s,
        t,
        m,
        rho,
        epsilon,
        d_mcc,
        c_sm,
        c_upper,
    } = args
    else {
        unreachable!()
    };
    let constants = VerifierConstants {
        d_mcc: *d_mcc,
        c_sm: *c_sm,
        c_upper: *c_upper,
    };
    let params = derive_params(*s, *t, *m, *rho, *epsilon, constants)?;
    emit(format, "params", &params);
    Ok(0)
}

fn cmd_selftest(format: Format, args: &Command) -> CmdResult {
    let Command::Selftest {
        suite,
        trials,
        seed,
        tolerance,
    } = args
    else {
        unreachable!()
    };
    positive("tolerance", *tolerance)?;
    let config = SelftestConfig {
        trials: *trials,
        seed: *seed,
        constants: ValidationConstants {
            tolerance: *tolerance,
            ..Default::default()
        },
        budget: DenseBudget::from_env(),
    };
    let reports = run_selftest(suite, &config)?;
    let passed = reports.iter().all(|r| r.passed);
    match format {
        Format::Json => {
            let doc = json!({ "schema": "1", "command": "selftest", "passed": passed, "reports": reports });
            say(&serde_json::to_string_pretty(&doc).expect("json"));
        }
        Format::Text => {
            for r in &reports {
                say(&format!(
                    "{} {}: {} cases, {} failures",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.cases,
                    r.failures
                ));
            }
        }
    }
    Ok(if passed { 0 } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        c @ Command::Verify { .. } => cmd_verify(cli.format, c),
        c @ Command::Prove { .. } => cmd_prove(cli.format, c),
        c @ Command::PsdTest { .. } => cmd_psd_test(cli.format, c),
        c @ Command::Params { .. } => cmd_params(cli.format, c),
        c @ Command::Selftest { .. } => cmd_selftest(cli.format, c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
