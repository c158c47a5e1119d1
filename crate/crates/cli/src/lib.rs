//! `tropnet` command-line driver.
//!
//! Exit codes: 0 success, 1 domain error (e.g. `--engine dp` on a network
//! that is not graded, or `check` on a valid but non-graded network), 2
//! usage, parse or validation error. Evidence of probability zero is not an
//! error: `infer` reports weight `inf` and exits 0.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use tropnet::inference::{InferenceError, Inferencer, DEFAULT_SLICE_CAP};
use tropnet::io::{
    assignment_json, format_significant, format_weight, parse_evidence, parse_network, serialize_network,
};
use tropnet::model::{ModelError, DEFAULT_ENUMERATION_CAP};
use tropnet::netgen::{fixture, gen_graded, random_evidence, Fixture, GenConfig};
use tropnet::{Engine, InferenceOptions, Mode, NetworkModel};

/// Environment variable overriding the default slice cap.
pub const SLICE_CAP_ENV: &str = "BNET_SLICE_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "tropnet",
    version,
    about = "Exact MAP inference for discrete Bayesian networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Dp,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Hmm,
    Star,
    Fan,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a network file and report whether it is graded.
    Check { net: PathBuf },
    /// Print the semi-rank of every variable.
    Rank { net: PathBuf },
    /// Print p_X(x) by enumeration together with the tropical weight w_X(x).
    Marginal {
        net: PathBuf,
        evidence: PathBuf,
        /// Cap on the number of hidden configurations to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Most probable hidden assignment(s) for the evidence.
    Infer {
        net: PathBuf,
        evidence: PathBuf,
        /// Print every optimal assignment instead of one.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
        engine: EngineArg,
        /// Cap on the number of hidden configurations to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Emit a seeded random graded network (or a fixed fixture) as JSON.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of rank slices; defaults to the length of --hidden.
        #[arg(long)]
        ranks: Option<usize>,
        /// Hidden variables per rank, comma separated.
        #[arg(long, value_delimiter = ',')]
        hidden: Vec<usize>,
        /// Observed variables per rank, comma separated.
        #[arg(long, value_delimiter = ',')]
        observed: Vec<usize>,
        /// States per variable.
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 4)]
        max_parents: usize,
        /// Fixture topology instead of a random one: fig1, fig2, fig3, star(n), hmm(n), fan(n).
        #[arg(long)]
        fixture: Option<String>,
        /// Uniform CPTs (fixtures only).
        #[arg(long)]
        uniform: bool,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write random evidence for the network to this file.
        #[arg(long)]
        evidence: Option<PathBuf>,
    },
    /// Time the forward pass on a fixture family; prints CSV.
    Bench {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Timed runs per size; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
}

enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Model(ModelError::StateSpaceTooLarge { .. })
            | InferenceError::NotGraded { .. }
            | InferenceError::SliceTooLarge { .. }
            | InferenceError::StateSpaceTooLarge { .. }
            | InferenceError::NoExplanation
            | InferenceError::UngradedSlice { .. } => Failure::Domain(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Check { net } => check(&net, out),
        Command::Rank { net } => rank(&net, out),
        Command::Marginal { net, evidence, cap } => marginal(&net, &evidence, cap, out),
        Command::Infer {
            net,
            evidence,
            all,
            engine,
            cap,
        } => {
            let opts = InferenceOptions {
                mode: if all { Mode::All } else { Mode::One },
                engine: match engine {
                    EngineArg::Auto => Engine::Auto,
                    EngineArg::Dp => Engine::Dp,
                    EngineArg::Oracle => Engine::Oracle,
                },
                slice_cap: slice_cap()?,
                enumeration_cap: cap,
            };
            infer(&net, &evidence, &opts, out)
        }
        Command::Gen {
            seed,
            ranks,
            hidden,
            observed,
            states,
            density,
            max_parents,
            fixture: name,
            uniform,
            output,
            evidence,
        } => {
            let net = match name {
                Some(name) => {
                    let which: Fixture = name
                        .parse()
                        .map_err(|e: tropnet::GenError| Failure::Usage(e.to_string()))?;
                    let sk = fixture(which)
                        .map_err(|e| Failure::Usage(e.to_string()))?
                        .with_states(states);
                    if uniform {
                        sk.with_uniform_cpts()
                    } else {
                        sk.with_random_cpts(seed)
                    }
                }
                None => {
                    let cfg = gen_config(seed, ranks, hidden, observed, states, density, max_parents)?;
                    gen_graded(&cfg).map_err(|e| Failure::Usage(e.to_string()))?
                }
            };
            let text = serialize_network(&net);
            match output {
                Some(path) => fs::write(path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
            if let Some(path) = evidence {
                let x = random_evidence(&net, seed);
                fs::write(path, assignment_json(&net, &x) + "\n")?;
            }
            Ok(0)
        }
        Command::Bench {
            family,
            sizes,
            states,
            seed,
            repeat,
        } => bench(family, &sizes, states, seed, repeat.max(1), out),
    }
}

fn gen_config(
    seed: u64,
    ranks: Option<usize>,
    mut hidden: Vec<usize>,
    mut observed: Vec<usize>,
    states: usize,
    density: f64,
    max_parents: usize,
) -> Result<GenConfig, Failure> {
    let r = ranks.unwrap_or(hidden.len().max(observed.len()).max(1));
    if hidden.is_empty() {
        hidden = vec![1; r];
    }
    if observed.is_empty() {
        observed = vec![1; r];
    }
    if hidden.len() != r || observed.len() != r {
        return Err(Failure::Usage(format!(
            "--ranks {r} disagrees with --hidden ({} entries) / --observed ({} entries)",
            hidden.len(),
            observed.len()
        )));
    }
    Ok(GenConfig {
        seed,
        hidden_per_rank: hidden,
        observed_per_rank: observed,
        states_per_var: states,
        edge_density: density,
        max_parents,
    })
}

fn slice_cap() -> Result<u64, Failure> {
    match std::env::var(SLICE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SLICE_CAP_ENV}={v:?} is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_SLICE_CAP),
    }
}

fn load(path: &Path) -> Result<NetworkModel, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_network(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_evidence(net: &NetworkModel, path: &Path) -> Result<tropnet::Assignment, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_evidence(net, &bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn check(path: &Path, out: &mut dyn Write) -> Outcome {
    let bytes = fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let net = match parse_network(&bytes) {
        Ok(net) => net,
        Err(e) => {
            writeln!(out, "valid: false")?;
            writeln!(out, "error: {e}")?;
            return Ok(2);
        }
    };
    let inf = Inferencer::new(&net);
    let ranks = inf.ranks();
    let observed = net.observed().count();
    writeln!(
        out,
        "variables: {} ({} observed, {} hidden)",
        net.len(),
        observed,
        net.len() - observed
    )?;
    writeln!(out, "valid: true")?;
    writeln!(out, "rho_max: {}", ranks.rho_max())?;
    writeln!(out, "graded: {}", ranks.graded())?;
    match ranks.witness() {
        None => Ok(0),
        Some(w) => {
            writeln!(
                out,
                "witness: {} (hidden parent {} has rank {}, expected {})",
                net.variable(w.variable).name,
                net.variable(w.parent).name,
                w.parent_rank,
                w.expected_rank
            )?;
            Ok(1)
        }
    }
}

fn rank(path: &Path, out: &mut dyn Write) -> Outcome {
    let net = load(path)?;
    let ranks = tropnet::compute_semi_ranks(&net);
    writeln!(out, "name kind rho")?;
    for v in net.variables() {
        let kind = if v.is_observed() { "observed" } else { "hidden" };
        writeln!(out, "{} {} {}", v.name, kind, ranks.rho(v.id))?;
    }
    writeln!(out, "graded: {}", ranks.graded())?;
    Ok(0)
}

fn marginal(net_path: &Path, ev_path: &Path, cap: u64, out: &mut dyn Write) -> Outcome {
    let net = load(net_path)?;
    let x = load_evidence(&net, ev_path)?;
    let p = net
        .marginal_brute_force(&x, cap)
        .map_err(|e| Failure::from(InferenceError::Model(e)))?;
    let opts = InferenceOptions {
        slice_cap: slice_cap()?,
        enumeration_cap: cap,
        ..Default::default()
    };
    let result = Inferencer::new(&net).infer(&x, &opts)?;
    writeln!(out, "marginal: {p}")?;
    writeln!(out, "neg_log_marginal: {}", format_significant(-p.ln(), 12))?;
    writeln!(out, "weight: {}", format_weight(result.weight))?;
    Ok(0)
}

fn infer(net_path: &Path, ev_path: &Path, opts: &InferenceOptions, out: &mut dyn Write) -> Outcome {
    let net = load(net_path)?;
    let x = load_evidence(&net, ev_path)?;
    let result = Inferencer::new(&net).infer(&x, opts)?;
    let engine = match result.engine {
        Engine::Dp => "dp",
        _ => "oracle",
    };
    writeln!(out, "engine: {engine}")?;
    writeln!(out, "weight: {}", format_weight(result.weight))?;
    if let Some(p) = result.marginal {
        writeln!(out, "marginal: {p}")?;
    }
    writeln!(out, "explanations: {}", result.explanation_count)?;
    if result.explanations.is_empty() {
        writeln!(out, "no explanation")?;
        return Ok(0);
    }
    let mut lines: Vec<String> = result.explanations.iter().map(|y| assignment_json(&net, y)).collect();
    lines.sort();
    for line in lines {
        writeln!(out, "{line}")?;
    }
    Ok(0)
}

fn bench(family: Family, sizes: &[usize], states: usize, seed: u64, repeat: usize, out: &mut dyn Write) -> Outcome {
    let cap = slice_cap()?;
    writeln!(out, "size,runtime_us,cell_updates")?;
    for &n in sizes {
        let which = match family {
            Family::Hmm => Fixture::Hmm(n),
            Family::Star => Fixture::Star(n),
            Family::Fan => Fixture::Fan(n),
        };
        let net = fixture(which)
            .map_err(|e| Failure::Usage(e.to_string()))?
            .with_states(states)
            .with_random_cpts(seed);
        let x = random_evidence(&net, seed);
        let inf = Inferencer::new(&net);
        let mut best = u128::MAX;
        let mut cells = 0;
        for _ in 0..repeat {
            let start = Instant::now();
            let trellis = inf.forward_dp(&x, cap)?;
            best = best.min(start.elapsed().as_micros());
            cells = trellis.cell_updates();
        }
        writeln!(out, "{n},{best},{cells}")?;
    }
    Ok(0)
}
