//! The `qcond` command line.
//!
//! Results go to stdout as versioned JSON documents (or CSV where offered);
//! diagnostics go to stderr. Exit codes: 0 success, 1 a verification check
//! failed, 2 bad usage or invalid input.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::chain::{build_two_step, chain_report, ChainReport};
use crate::channels::{
    computational_pinching, dephasing, depolarizing, partial_trace_channel, pinching, random_channel, unitary_channel,
    QuantumChannel,
};
use crate::conditional::{conditional_probs, max_overlap_pairing, paired_delta_deviation, ConditionalTable};
use crate::error::{Error, Result};
use crate::generalized::{
    generalized_against_decomposition, generalized_qcp, random_decomposition, ConvexDecomposition,
};
use crate::io::{decode, encode, to_document, to_json, Document};
use crate::linalg::{Subsystem, ONE, ZERO};
use crate::measures::{holevo_chi, info_summary, Ensemble, InfoSummary};
use crate::random::{derive_seed, random_unitary, rng_from_seed};
use crate::states::{random_density, von_neumann_entropy, DensityMatrix, LogBase};
use crate::subsystems::{subsystem_conditional, subsystem_report};
use crate::verify::{reproduce, run_suite, TrialConfig, VerificationReport};

/// Seed used when neither `--seed` nor `QCOND_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "qcond",
    version,
    about = "Quantum conditional probabilities and their information measures"
)]
pub struct Cli {
    /// Logarithm base for every entropy: 2 (bits) or e (nats).
    #[arg(long, global = true, default_value = "2")]
    pub base: LogBase,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed; falls back to QCOND_SEED, then 42.
    #[arg(long, env = "QCOND_SEED")]
    pub seed: Option<u64>,
}

impl SeedArg {
    fn get(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a density matrix.
    #[command(subcommand)]
    State(StateCommand),
    /// Generate a channel.
    #[command(subcommand)]
    Channel(ChannelCommand),
    /// Conditional table of a channel acting on a state.
    Condprob {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Entropies, conditional entropy and mutual information of a process.
    Measures {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        state: PathBuf,
    },
    /// Two-step process with the second stage made consistent.
    Chain {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        stage1: PathBuf,
        #[arg(long)]
        stage2: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
        /// Number of sampled trajectories for the empirical tables.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Parent eigenstates conditioned against a reduced state.
    Subsys {
        #[arg(long)]
        state: PathBuf,
        /// Factor dimensions as dA,dB.
        #[arg(long, value_parser = parse_dim_pair)]
        dims: (usize, usize),
        /// Factor that is kept.
        #[arg(long, value_enum, default_value = "a")]
        which: WhichArg,
    },
    /// Conditional quantities between non-orthogonal decompositions.
    Generalized {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Number of members of the random decomposition of the input state.
        #[arg(long)]
        members: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Randomized verification of every identity and inequality.
    Verify(VerifyArgs),
    /// Worked scenarios with fixed parameters.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

#[derive(Debug, Subcommand)]
pub enum StateCommand {
    /// Random state of the given rank (Hilbert-Schmidt measure at full rank).
    Random {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChannelCommand {
    /// Random Stinespring channel.
    Random {
        #[arg(long)]
        dim_in: usize,
        #[arg(long)]
        dim_out: Option<usize>,
        /// Environment dimension (defaults to the smallest admissible one, at least 2).
        #[arg(long)]
        env: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
    Depolarizing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
    },
    Dephasing {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        lambda: f64,
    },
    /// Haar-random unitary conjugation.
    Unitary {
        #[arg(long)]
        dim: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Projective measurement without readout.
    Pinching {
        #[arg(long)]
        dim: usize,
        /// Measure in a Haar-random basis instead of the computational one.
        #[arg(long)]
        random_basis: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    PartialTrace {
        /// Factor dimensions as dA,dB.
        #[arg(long, value_parser = parse_dim_pair)]
        dims: (usize, usize),
        /// Factor that is traced out.
        #[arg(long, value_enum, default_value = "b")]
        traced: WhichArg,
    },
}

fn parse_dim_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let parse = |x: &str| x.parse::<usize>().ok().filter(|d| *d > 0);
            match (parse(a), parse(b)) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(format!("expected two positive integers, got {s:?}")),
            }
        }
        _ => Err(format!("expected dA,dB, got {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    #[value(alias = "A")]
    A,
    #[value(alias = "B")]
    B,
}

impl From<WhichArg> for Subsystem {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::A => Subsystem::A,
            WhichArg::B => Subsystem::B,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON trial configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Emit the detailed trace of one check at one trial seed instead of a report.
    #[arg(long, requires = "trial_seed")]
    pub reproduce: Option<String>,
    #[arg(long, requires = "reproduce")]
    pub trial_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    PureState,
    Unitary,
    Depolarizing,
    Measurement,
    BellSubsystem,
    Holevo,
}

impl std::str::FromStr for DemoName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        <DemoName as ValueEnum>::from_str(s, true).map_err(|_| Error::UnknownDemo(s.to_string()))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, &mut std::io::stdin().lock()) {
        Ok(output) => {
            let _ = out.write_all(output.text.as_bytes());
            if !output.text.ends_with('\n') {
                let _ = out.write_all(b"\n");
            }
            if output.failed {
                let _ = writeln!(err, "verification failed");
                1
            } else {
                0
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub struct Output {
    pub text: String,
    pub failed: bool,
}

impl Output {
    fn json(doc: Value) -> Self {
        Self {
            text: to_json(&doc),
            failed: false,
        }
    }

    fn csv(text: String) -> Self {
        Self { text, failed: false }
    }
}

fn read_input(path: &PathBuf, stdin: &mut dyn Read) -> Result<String> {
    let mut text = String::new();
    let res = if path.as_os_str() == "-" {
        stdin.read_to_string(&mut text).map(|_| ())
    } else {
        fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| Error::SchemaMismatch {
        field: path.display().to_string(),
        message: format!("cannot read input: {e}"),
    })?;
    Ok(text)
}

fn load<T: Document>(path: &PathBuf, stdin: &mut dyn Read) -> Result<T> {
    decode(&read_input(path, stdin)?)
}

fn with_config(mut doc: Value, config: Value) -> Value {
    doc["config"] = config;
    doc
}

/// Runs a parsed command; stdin serves `-` paths.
pub fn execute(cli: &Cli, stdin: &mut dyn Read) -> Result<Output> {
    let base = cli.base;
    match &cli.command {
        Command::State(StateCommand::Random { dim, rank, seed }) => {
            let rank = rank.unwrap_or(*dim);
            let rho = random_density(*dim, rank, seed.get())?;
            let doc = to_document(DensityMatrix::KIND, &rho);
            Ok(Output::json(with_config(
                doc,
                json!({"dim": dim, "rank": rank, "seed": seed.get()}),
            )))
        }
        Command::Channel(cmd) => channel_command(cmd),
        Command::Condprob { channel, state, format } => {
            let channel: QuantumChannel = load(channel, stdin)?;
            let rho: DensityMatrix = load(state, stdin)?;
            let probs = conditional_probs(&channel, &rho)?;
            match format {
                Format::Json => {
                    let mut doc = to_document(ConditionalTable::KIND, &probs.table);
                    doc["basis_q"] = json!(probs.initial_spectrum().vectors);
                    doc["basis_r"] = json!(probs.final_spectrum().vectors);
                    Ok(Output::json(doc))
                }
                Format::Csv => Ok(Output::csv(tables_csv(&[("rq", &probs.table)])?)),
            }
        }
        Command::Measures { channel, state } => {
            let channel: QuantumChannel = load(channel, stdin)?;
            let rho: DensityMatrix = load(state, stdin)?;
            let probs = conditional_probs(&channel, &rho)?;
            let summary = info_summary(&probs.table, base)?;
            Ok(Output::json(to_document("info_summary", &summary)))
        }
        Command::Chain {
            state,
            stage1,
            stage2,
            seed,
            samples,
            format,
        } => {
            let rho: DensityMatrix = load(state, stdin)?;
            let e1: QuantumChannel = load(stage1, stdin)?;
            let e2: QuantumChannel = load(stage2, stdin)?;
            let process = build_two_step(&rho, &e1, &e2)?;
            let report = chain_report(&process, base, samples.map(|n| (n, seed.get())))?;
            match format {
                Format::Json => {
                    let doc = to_document("chain_report", &report);
                    let cfg = json!({"seed": seed.get(), "samples": samples, "base": base});
                    Ok(Output::json(with_config(doc, cfg)))
                }
                Format::Csv => Ok(Output::csv(chain_csv(&report)?)),
            }
        }
        Command::Subsys { state, dims, which } => {
            let rho: DensityMatrix = load(state, stdin)?;
            let pc = subsystem_conditional(&rho, dims.0, dims.1, (*which).into())?;
            let doc = to_document("subsystem_report", &subsystem_report(&pc, base));
            Ok(Output::json(with_config(
                doc,
                json!({"dims": [dims.0, dims.1], "base": base}),
            )))
        }
        Command::Generalized {
            channel,
            state,
            members,
            seed,
        } => {
            let channel: QuantumChannel = load(channel, stdin)?;
            let rho: DensityMatrix = load(state, stdin)?;
            let s = seed.get();
            let dec_q = random_decomposition(&rho, *members, derive_seed(s, &[0]))?;
            let rho_r = channel.apply(&rho)?;
            let resolving = generalized_qcp(&channel, &dec_q, &rho_r.spectral().vectors)?;
            let out_members = (*members).max(rho_r.spectral().rank());
            let dec_r = random_decomposition(&rho_r, out_members, derive_seed(s, &[1]))?;
            let nonorthogonal = generalized_against_decomposition(&channel, &dec_q, &dec_r)?;
            let doc = to_document(
                "generalized_report",
                &json!({
                    "decomposition_q": decomposition_json(&dec_q),
                    "decomposition_r": decomposition_json(&dec_r),
                    "eigenbasis_output": resolving,
                    "decomposed_output": nonorthogonal,
                }),
            );
            Ok(Output::json(with_config(doc, json!({"members": members, "seed": s}))))
        }
        Command::Verify(args) => verify_command(args, base, stdin),
        Command::Demo { name } => Ok(Output::json(demo(*name, base)?)),
    }
}

fn decomposition_json(dec: &ConvexDecomposition) -> Value {
    json!({ "weights": dec.weights(), "vectors": dec.vectors() })
}

fn channel_command(cmd: &ChannelCommand) -> Result<Output> {
    let (channel, config) = match cmd {
        ChannelCommand::Random {
            dim_in,
            dim_out,
            env,
            seed,
        } => {
            let dim_out = dim_out.unwrap_or(*dim_in);
            let env = env.unwrap_or_else(|| dim_in.div_ceil(dim_out.max(1)).max(2));
            let ch = random_channel(*dim_in, dim_out, env, seed.get())?;
            (
                ch,
                json!({"family": "random", "dim_in": dim_in, "dim_out": dim_out, "env": env, "seed": seed.get()}),
            )
        }
        ChannelCommand::Depolarizing { dim, lambda } => (
            depolarizing(*dim, *lambda)?,
            json!({"family": "depolarizing", "dim": dim, "lambda": lambda}),
        ),
        ChannelCommand::Dephasing { dim, lambda } => (
            dephasing(*dim, *lambda)?,
            json!({"family": "dephasing", "dim": dim, "lambda": lambda}),
        ),
        ChannelCommand::Unitary { dim, seed } => {
            let u = random_unitary(&mut rng_from_seed(seed.get()), *dim);
            (
                unitary_channel(&u)?,
                json!({"family": "unitary", "dim": dim, "seed": seed.get()}),
            )
        }
        ChannelCommand::Pinching {
            dim,
            random_basis,
            seed,
        } => {
            if *random_basis {
                let u = random_unitary(&mut rng_from_seed(seed.get()), *dim);
                let basis: Vec<_> = (0..*dim).map(|j| u.column(j)).collect();
                (
                    pinching(&basis)?,
                    json!({"family": "pinching", "dim": dim, "basis": "random", "seed": seed.get()}),
                )
            } else {
                (
                    computational_pinching(*dim),
                    json!({"family": "pinching", "dim": dim, "basis": "computational"}),
                )
            }
        }
        ChannelCommand::PartialTrace { dims, traced } => (
            partial_trace_channel(dims.0, dims.1, (*traced).into()),
            json!({"family": "partial_trace", "dims": [dims.0, dims.1], "traced": Subsystem::from(*traced)}),
        ),
    };
    Ok(Output::json(with_config(
        to_document(QuantumChannel::KIND, &channel),
        config,
    )))
}

fn verify_config(args: &VerifyArgs, base: LogBase, stdin: &mut dyn Read) -> Result<TrialConfig> {
    let mut cfg = match &args.config {
        Some(path) => load::<TrialConfig>(path, stdin)?,
        None => TrialConfig::default(),
    };
    if let Some(n) = args.trials {
        cfg.n_trials = n;
    }
    if let Some(dims) = &args.dims {
        cfg.dims = dims.clone();
    }
    if let Some(seed) = args.seed.seed {
        cfg.master_seed = seed;
    } else if args.config.is_none() {
        cfg.master_seed = DEFAULT_SEED;
    }
    if args.config.is_none() {
        cfg.base = base;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn verify_command(args: &VerifyArgs, base: LogBase, stdin: &mut dyn Read) -> Result<Output> {
    let cfg = verify_config(args, base, stdin)?;
    if let (Some(check), Some(seed)) = (&args.reproduce, args.trial_seed) {
        let trace = reproduce(&cfg, check, seed)?;
        let failed = trace.passed == Some(false);
        let doc = with_config(
            to_document("trace", &trace),
            serde_json::to_value(&cfg).expect("config"),
        );
        return Ok(Output {
            text: to_json(&doc),
            failed,
        });
    }
    let report = run_suite(&cfg)?;
    let text = match args.format {
        Format::Json => encode(&report),
        Format::Csv => report_csv(&report)?,
    };
    Ok(Output {
        text,
        failed: !report.pass,
    })
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::SchemaMismatch {
        field: "csv".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::SchemaMismatch {
        field: "csv".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One row per table entry: `table,row,col,p`.
pub fn tables_csv(tables: &[(&str, &ConditionalTable)]) -> Result<String> {
    let mut rows = Vec::new();
    for (name, t) in tables {
        for (r, row) in t.rows().iter().enumerate() {
            for (q, p) in row.iter().enumerate() {
                rows.push(vec![name.to_string(), r.to_string(), q.to_string(), fmt_f64(*p)]);
            }
        }
    }
    csv_text(&["table", "row", "col", "p"], rows)
}

fn chain_csv(report: &ChainReport) -> Result<String> {
    let t = &report.tables;
    let mut tables = vec![("rq", &t.rq), ("sr", &t.sr), ("sq", &t.sq)];
    if let Some(emp) = &report.empirical {
        tables.push(("rq_empirical", &emp.rq.table));
        tables.push(("sr_empirical", &emp.sr.table));
    }
    tables_csv(&tables)
}

pub fn report_csv(report: &VerificationReport) -> Result<String> {
    let rows = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.anchor.clone(),
                c.trials.to_string(),
                c.failures.to_string(),
                c.worst_slack.map(fmt_f64).unwrap_or_default(),
                c.worst_seed.map(|s| s.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    csv_text(
        &["name", "anchor", "trials", "failures", "worst_slack", "worst_seed"],
        rows,
    )
}

#[derive(Serialize)]
struct Prediction {
    relation: &'static str,
    lhs: f64,
    rhs: f64,
    residual: f64,
    holds: bool,
}

fn equality(relation: &'static str, lhs: f64, rhs: f64, tol: f64) -> Prediction {
    let residual = (lhs - rhs).abs();
    Prediction {
        relation,
        lhs,
        rhs,
        residual,
        holds: residual <= tol,
    }
}

/// `lhs <= rhs`; the residual is the slack `rhs - lhs`.
fn at_most(relation: &'static str, lhs: f64, rhs: f64, tol: f64) -> Prediction {
    Prediction {
        relation,
        lhs,
        rhs,
        residual: rhs - lhs,
        holds: rhs - lhs >= -tol,
    }
}

fn demo_doc(
    name: DemoName,
    description: &str,
    parameters: Value,
    summary: Option<&InfoSummary>,
    extra: Value,
    predictions: Vec<Prediction>,
) -> Value {
    let label = name.to_possible_value().expect("named").get_name().to_string();
    let pass = predictions.iter().all(|p| p.holds);
    to_document(
        "demo_report",
        &json!({
            "demo": label,
            "description": description,
            "parameters": parameters,
            "summary": summary,
            "details": extra,
            "predictions": predictions,
            "pass": pass,
        }),
    )
}

/// Runs a worked scenario with built-in parameters.
pub fn demo(name: DemoName, base: LogBase) -> Result<Value> {
    let tol = 1e-9;
    match name {
        DemoName::PureState => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let psi = [
                ONE * 0.6,
                crate::linalg::C64::new(0.0, 0.8) * s,
                crate::linalg::C64::new(0.8 * s, 0.0),
            ];
            let rho = DensityMatrix::pure(&psi)?;
            let channel = random_channel(3, 3, 3, 7)?;
            let probs = conditional_probs(&channel, &rho)?;
            let sum = info_summary(&probs.table, base)?;
            Ok(demo_doc(
                name,
                "a pure input has a single eigenstate with unit weight, so the output carries no information about it",
                json!({"state": rho, "channel": "random Stinespring 3->3, environment 3, seed 7"}),
                Some(&sum),
                Value::Null,
                vec![
                    equality("I(R:Q) = 0", sum.i, 0.0, tol),
                    equality("J(R|Q) = S(rho_R)", sum.j, sum.s_final, tol),
                ],
            ))
        }
        DemoName::Unitary => {
            let rho = DensityMatrix::diagonal(&[0.5, 0.3, 0.2])?;
            let u = random_unitary(&mut rng_from_seed(11), 3);
            let channel = unitary_channel(&u)?;
            let probs = conditional_probs(&channel, &rho)?;
            let sum = info_summary(&probs.table, base)?;
            let pairing = max_overlap_pairing(&probs.table);
            let delta = paired_delta_deviation(&probs.table, &pairing);
            Ok(demo_doc(
                name,
                "a unitary maps eigenstates to eigenstates, so each one is carried over with certainty",
                json!({"state": rho, "unitary": "Haar random, seed 11"}),
                Some(&sum),
                json!({"table": probs.table, "pairing": pairing}),
                vec![
                    equality("J(R|Q) = 0", sum.j, 0.0, tol),
                    equality("I(R:Q) = S(rho_Q)", sum.i, sum.s_initial, tol),
                    equality("p(r|q) = delta under max-overlap pairing", delta, 0.0, tol),
                ],
            ))
        }
        DemoName::Depolarizing => {
            let rho = DensityMatrix::diagonal(&[0.75, 0.25])?;
            let channel = depolarizing(2, 0.5)?;
            let probs = conditional_probs(&channel, &rho)?;
            let sum = info_summary(&probs.table, base)?;
            let full = conditional_probs(&depolarizing(2, 1.0)?, &rho)?;
            let full_sum = info_summary(&full.table, base)?;
            Ok(demo_doc(
                name,
                "depolarizing noise of strength 0.5 on diag(0.75, 0.25), compared with full depolarization",
                json!({"state": rho, "lambda": 0.5}),
                Some(&sum),
                json!({"table": probs.table, "fully_depolarizing": full_sum}),
                vec![
                    equality("I(R:Q) = S(rho_R) - J(R|Q)", sum.i, sum.s_final - sum.j, tol),
                    at_most("J(R|Q) <= S(rho_R)", sum.j, sum.s_final, tol),
                    equality("fully depolarizing: I(R:Q) = 0", full_sum.i, 0.0, tol),
                ],
            ))
        }
        DemoName::Measurement => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let plus = [ONE * h, ONE * h];
            let minus = [ONE * h, -ONE * h];
            let rho = DensityMatrix::from_spectrum(&[0.8, 0.2], &[plus.to_vec(), minus.to_vec()])?;
            let channel = computational_pinching(2);
            let probs = conditional_probs(&channel, &rho)?;
            let sum = info_summary(&probs.table, base)?;
            Ok(demo_doc(
                name,
                "a projective measurement without readout randomizes the state and cannot lower its entropy",
                json!({"state": rho, "channel": "computational-basis pinching"}),
                Some(&sum),
                json!({"table": probs.table}),
                vec![
                    at_most("S(rho_Q) <= S(rho_R)", sum.s_initial, sum.s_final, 1e-8),
                    equality("p(r|q) doubly stochastic", probs.table.row_sum_deviation(), 0.0, tol),
                ],
            ))
        }
        DemoName::BellSubsystem => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let rho = DensityMatrix::pure(&[ONE * h, ZERO, ZERO, ONE * h])?;
            let pc = subsystem_conditional(&rho, 2, 2, Subsystem::A)?;
            let report = subsystem_report(&pc, base);
            Ok(demo_doc(
                name,
                "conditioning one qubit of a Bell pair on the pair's eigenstate",
                json!({"state": rho, "kept": "A"}),
                None,
                serde_json::to_value(&report).expect("report"),
                vec![
                    at_most("-S(B|A) <= J(A|AB)", -report.s_b_given_a, report.j_a_given_ab, 1e-8),
                    equality(
                        "-S(B|A) = J(A|AB) = 1 bit",
                        report.j_a_given_ab,
                        base.max_entropy(2),
                        tol,
                    ),
                ],
            ))
        }
        DemoName::Holevo => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let zero = DensityMatrix::pure(&[ONE, ZERO])?;
            let plus = DensityMatrix::pure(&[ONE * h, ONE * h])?;
            let ens = Ensemble::new(vec![0.5, 0.5], vec![zero, plus])?;
            let chi = holevo_chi(&ens, base)?;
            let avg = ens.average()?;
            let s_avg = von_neumann_entropy(&avg, base);
            Ok(demo_doc(
                name,
                "Holevo quantity of the equal-weight ensemble of |0> and |+>",
                json!({"weights": [0.5, 0.5], "states": ["|0>", "|+>"]}),
                None,
                json!({"chi": chi, "S_average": s_avg, "average": avg}),
                vec![
                    equality("chi = S(average) for pure members", chi, s_avg, tol),
                    at_most("chi <= H(p)", chi, base.max_entropy(2), tol),
                ],
            ))
        }
    }
}
