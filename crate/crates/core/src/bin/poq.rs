//! Command-line front end: key generation, local protocol runs, the two
//! wire endpoints, score evaluation, and the reference-table report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use poq::cheater::{Cheater, CheaterKind};
use poq::circuits::BuildMode;
use poq::protocol::{
    run_protocol, study_verifier, HonestProver, Mode, ProtocolKind, Prover, PublicInstance,
    RunConfig, RunTally, Verifier, VerifierSetup,
};
use poq::stats::{
    evaluate, interference_weight, normalized_score, quantumness, quantumness_se, reference_rows,
    Counts, Significance,
};
use poq::tcf::{lwe_keygen, lwe_study_instance, rabin_study_keygen};
use poq::wire::{run_prover, serve_verifier, WireError};

const WIRE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Parser)]
#[command(
    name = "poq",
    about = "Interactive proofs of quantumness on a statevector simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a study instance (public part and trapdoor) as JSON.
    Keygen(KeygenArgs),
    /// Run verifier and prover in-process and print a summary.
    Run(RunArgs),
    /// Serve one verifier session over TCP.
    ServeVerifier(ServeArgs),
    /// Connect to a verifier and play the prover side.
    Prove(ProveArgs),
    /// Score explicit accept counts.
    Stats(StatsArgs),
    /// Re-derive scores and significances for the bundled reference runs.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Factoring,
    Lwe,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Factoring => ProtocolKind::Factoring,
            ProtocolArg::Lwe => ProtocolKind::Lwe,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Interactive,
    Delayed,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Interactive => Mode::Interactive,
            ModeArg::Delayed => Mode::Delayed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProverArg {
    Honest,
    KnownPreimage,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BuildArg {
    Compiled,
    Direct,
}

impl From<BuildArg> for BuildMode {
    fn from(b: BuildArg) -> Self {
        match b {
            BuildArg::Compiled => BuildMode::Compiled,
            BuildArg::Direct => BuildMode::Direct,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    /// Which protocol to play.
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    /// Modulus (8, 15, 16, 21) for the squaring protocol; instance id
    /// (0..=3) for LWE.
    #[arg(long)]
    instance: u64,
}

impl InstanceArgs {
    fn verifier(&self) -> Result<Verifier, CliError> {
        let ok = match self.protocol {
            ProtocolArg::Factoring => matches!(self.instance, 8 | 15 | 16 | 21),
            ProtocolArg::Lwe => self.instance <= 3,
        };
        if !ok {
            return Err(CliError::Config(format!(
                "no bundled instance {} for this protocol (squaring: 8, 15, 16, 21; lwe: 0..=3)",
                self.instance
            )));
        }
        Ok(study_verifier(self.protocol.into(), self.instance))
    }
}

#[derive(Args)]
struct RunPlanArgs {
    /// Standard-branch shots (scheduled first).
    #[arg(long, default_value_t = 1000)]
    shots_a: u64,
    /// Interference-branch shots.
    #[arg(long, default_value_t = 1000)]
    shots_b: u64,
    /// Challenge order.
    #[arg(long, value_enum, default_value = "interactive")]
    mode: ModeArg,
    /// Run seed; all randomness on both sides derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write one JSON shot record per line to this file.
    #[arg(long)]
    out: Option<String>,
}

impl RunPlanArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            shots_standard: self.shots_a,
            shots_interference: self.shots_b,
            mode: self.mode.into(),
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct KeygenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Sample a fresh LWE instance instead of loading a bundled one.
    #[arg(long, default_value_t = false)]
    random: bool,
    /// Rows of a random LWE instance.
    #[arg(long, default_value_t = 4)]
    rows: usize,
    /// Secret dimension of a random LWE instance.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Modulus of a random LWE instance (power of two).
    #[arg(long, default_value_t = 4)]
    q: u64,
    /// Error width of a random LWE instance.
    #[arg(long, default_value_t = 0.75)]
    sigma: f64,
    /// Seed for random generation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    plan: RunPlanArgs,
    /// Which prover plays.
    #[arg(long, value_enum, default_value = "honest")]
    prover: ProverArg,
    /// Commit-circuit build used by the honest prover.
    #[arg(long, value_enum, default_value = "direct")]
    build: BuildArg,
}

#[derive(Args)]
struct ServeArgs {
    /// Address to listen on, e.g. 127.0.0.1:7878.
    #[arg(long)]
    listen: String,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    plan: RunPlanArgs,
}

#[derive(Args)]
struct ProveArgs {
    /// Verifier address to connect to.
    #[arg(long)]
    connect: String,
    /// Which prover plays.
    #[arg(long, value_enum, default_value = "honest")]
    prover: ProverArg,
    /// Commit-circuit build used by the honest prover.
    #[arg(long, value_enum, default_value = "direct")]
    build: BuildArg,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    #[arg(long)]
    accepted_a: u64,
    #[arg(long)]
    counted_a: u64,
    #[arg(long)]
    accepted_b: u64,
    #[arg(long)]
    counted_b: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Emit machine-readable JSON instead of the table.
    #[arg(long, default_value_t = false)]
    json: bool,
}

enum CliError {
    Config(String),
    Wire(WireError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Wire(err) => write!(f, "{err}"),
            CliError::Io(err) => write!(f, "{err}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Wire(WireError::Io(_)) | CliError::Io(_) => 4,
            CliError::Wire(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<WireError> for CliError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::Io(io) => CliError::Io(io),
            other => CliError::Wire(other),
        }
    }
}

fn main() {
    // Die quietly on a closed pipe, like other line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Keygen(args) => keygen(args),
        Cmd::Run(args) => run(args),
        Cmd::ServeVerifier(args) => serve(args),
        Cmd::Prove(args) => prove(args),
        Cmd::Stats(args) => stats(args),
        Cmd::Report(args) => report(args),
    }
}

fn keygen(args: KeygenArgs) -> Result<(), CliError> {
    let value = if args.random {
        if args.instance.protocol != ProtocolArg::Lwe {
            return Err(CliError::Config(
                "random generation is available for the lwe protocol only; \
                 squaring instances are fixed by their modulus"
                    .into(),
            ));
        }
        let mut rng = poq::protocol::shot_rng(args.seed, 0, 0);
        let (instance, trapdoor) = lwe_keygen(args.rows, args.dim, args.q, args.sigma, &mut rng);
        json!({
            "public": PublicInstance::Lwe { instance },
            "trapdoor": trapdoor,
        })
    } else {
        match args.instance.protocol {
            ProtocolArg::Factoring => {
                args.instance.verifier()?;
                let (instance, trapdoor) = rabin_study_keygen(args.instance.instance);
                json!({
                    "public": PublicInstance::Factoring { instance },
                    "trapdoor": trapdoor,
                })
            }
            ProtocolArg::Lwe => {
                args.instance.verifier()?;
                let study = lwe_study_instance(args.instance.instance as usize);
                json!({
                    "public": PublicInstance::Lwe { instance: study.instance },
                    "trapdoor": study.trapdoor,
                    "printed_error": study.printed_error,
                    "printed_error_consistent": study.printed_error_consistent,
                })
            }
        }
    };
    println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    Ok(())
}

fn build_prover(
    public: &PublicInstance,
    prover: ProverArg,
    build: BuildArg,
    seed: u64,
) -> Box<dyn Prover> {
    match prover {
        ProverArg::Honest => Box::new(HonestProver::for_instance(public, build.into(), seed)),
        ProverArg::KnownPreimage => {
            Box::new(Cheater::new(public, CheaterKind::KnownPreimage, seed))
        }
        ProverArg::Random => Box::new(Cheater::new(public, CheaterKind::Random, seed)),
    }
}

fn record_sink(path: Option<&str>) -> Result<Option<BufWriter<File>>, CliError> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

fn summary_json(verifier: &Verifier, cfg: &RunConfig, prover: &str, tally: &RunTally) -> serde_json::Value {
    let kind = verifier.kind();
    let weight = interference_weight(kind);
    let counts = Counts::from_tally(tally);
    let score: Option<Significance> = if counts.counted_a > 0 && counts.counted_b > 0 {
        Some(evaluate(kind, &counts))
    } else {
        None
    };
    let partial_q = if counts.counted_a > 0 && counts.counted_b > 0 {
        Some(json!({
            "q": quantumness(weight, counts.p_a(), counts.p_b()),
            "se": quantumness_se(weight, &counts),
        }))
    } else {
        None
    };
    let normalized = normalized_branch_scores(verifier, &counts);
    json!({
        "protocol": kind,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "prover": prover,
        "tally": tally,
        "quantumness": partial_q,
        "significance": score,
        "normalized": normalized,
    })
}

/// Branch rates rescaled so guessing is 0 and the ideal device is 1. The
/// interference ideal for the squaring protocol is the cos^2(pi/8) ceiling.
fn normalized_branch_scores(verifier: &Verifier, counts: &Counts) -> serde_json::Value {
    let (guess_a, ideal_b, guess_b) = match verifier.setup() {
        VerifierSetup::Factoring { instance, .. } => {
            let c = (std::f64::consts::FRAC_PI_8).cos();
            (2.0 / instance.domain_size() as f64, c * c, 0.5)
        }
        VerifierSetup::Lwe { instance, .. } => {
            (2.0 / (1u64 << instance.preimage_bits()) as f64, 1.0, 0.5)
        }
    };
    let a = (counts.counted_a > 0)
        .then(|| normalized_score(counts.p_a(), 1.0, guess_a));
    let b = (counts.counted_b > 0)
        .then(|| normalized_score(counts.p_b(), ideal_b, guess_b));
    json!({ "standard": a, "interference": b })
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let verifier = args.instance.verifier()?;
    let cfg = args.plan.config();
    let public = verifier.public_instance();
    let mut prover = build_prover(&public, args.prover, args.build, cfg.seed);
    let mut sink = record_sink(args.plan.out.as_deref())?;
    let mut write_err: Option<std::io::Error> = None;
    let tally = run_protocol(&verifier, prover.as_mut(), &cfg, |rec| {
        if let (Some(w), None) = (&mut sink, &write_err) {
            let line = serde_json::to_string(rec).expect("serializable");
            if let Err(e) = writeln!(w, "{line}") {
                write_err = Some(e);
            }
        }
    });
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(mut w) = sink {
        w.flush()?;
    }
    let label = prover_label(args.prover);
    println!(
        "{}",
        serde_json::to_string_pretty(&summary_json(&verifier, &cfg, label, &tally))
            .expect("serializable")
    );
    Ok(())
}

fn prover_label(p: ProverArg) -> &'static str {
    match p {
        ProverArg::Honest => "honest",
        ProverArg::KnownPreimage => "known-preimage",
        ProverArg::Random => "random",
    }
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let verifier = args.instance.verifier()?;
    let cfg = args.plan.config();
    let listener = TcpListener::bind(&args.listen)?;
    eprintln!("listening on {}", listener.local_addr()?);
    let (stream, peer) = listener.accept()?;
    eprintln!("session with {peer}");
    stream.set_read_timeout(Some(WIRE_TIMEOUT))?;
    stream.set_write_timeout(Some(WIRE_TIMEOUT))?;
    let mut sink = record_sink(args.plan.out.as_deref())?;
    let mut write_err: Option<std::io::Error> = None;
    let tally = serve_verifier(stream, &verifier, &cfg, |rec| {
        if let (Some(w), None) = (&mut sink, &write_err) {
            let line = serde_json::to_string(rec).expect("serializable");
            if let Err(e) = writeln!(w, "{line}") {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(mut w) = sink {
        w.flush()?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&summary_json(&verifier, &cfg, "remote", &tally))
            .expect("serializable")
    );
    Ok(())
}

fn prove(args: ProveArgs) -> Result<(), CliError> {
    let stream = TcpStream::connect(&args.connect)?;
    stream.set_read_timeout(Some(WIRE_TIMEOUT))?;
    stream.set_write_timeout(Some(WIRE_TIMEOUT))?;
    let tally = run_prover(stream, |public, config| {
        build_prover(public, args.prover, args.build, config.seed)
    })?;
    println!("{}", serde_json::to_string_pretty(&json!({ "tally": tally })).expect("serializable"));
    Ok(())
}

fn stats(args: StatsArgs) -> Result<(), CliError> {
    if args.accepted_a > args.counted_a || args.accepted_b > args.counted_b {
        return Err(CliError::Config("accepted counts exceed counted shots".into()));
    }
    if args.counted_a == 0 || args.counted_b == 0 {
        return Err(CliError::Config("both branches need counted shots".into()));
    }
    let counts = Counts {
        accepted_a: args.accepted_a,
        counted_a: args.counted_a,
        accepted_b: args.accepted_b,
        counted_b: args.counted_b,
    };
    let sig = evaluate(args.protocol.into(), &counts);
    println!("{}", serde_json::to_string_pretty(&sig).expect("serializable"));
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let mut rows_out = Vec::new();
    for row in reference_rows() {
        let sig = evaluate(row.protocol, &row.counts());
        rows_out.push((row, sig));
    }
    if args.json {
        let value: Vec<serde_json::Value> = rows_out
            .iter()
            .map(|(row, sig)| {
                json!({
                    "protocol": row.protocol,
                    "instance": row.label,
                    "mode": row.mode,
                    "p_a": row.p_a,
                    "p_b": row.p_b,
                    "n_a": row.n_a,
                    "n_b": row.n_b,
                    "q": sig.q,
                    "sigma": sig.sigma,
                    "reference_q": row.q,
                    "reference_sigma": row.sigma,
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
        return Ok(());
    }
    println!(
        "{:<9} {:<8} {:<11} {:>6} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>9}",
        "protocol", "instance", "mode", "p_A", "p_B", "N_A", "N_B", "q", "sigma", "q_ref", "sigma_ref"
    );
    for (row, sig) in &rows_out {
        let kind = match row.protocol {
            ProtocolKind::Factoring => "squaring",
            ProtocolKind::Lwe => "lwe",
        };
        let mode = match row.mode {
            Mode::Interactive => "interactive",
            Mode::Delayed => "delayed",
        };
        let sigma_ref = row.sigma.map_or("-".to_string(), |s| format!("{s:.1}"));
        let sigma = if sig.sigma.is_finite() { format!("{:.2}", sig.sigma) } else { "-".into() };
        println!(
            "{:<9} {:<8} {:<11} {:>6.3} {:>6.3} {:>6} {:>6} {:>8.3} {:>8} {:>8.3} {:>9}",
            kind, row.label, mode, row.p_a, row.p_b, row.n_a, row.n_b, sig.q, sigma, row.q, sigma_ref
        );
    }
    Ok(())
}
