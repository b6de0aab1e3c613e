use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use streamcert::config::{field_from_env, parse_field, FIELD_ENV};
use streamcert::input::{read_stream, read_text, parse_mask, parse_witness};
use streamcert::report::{render_sweep, Report, ReportFormat, TrialReport};
use streamcert::{
    cost_sweep, run_scheme, soundness_trials, DenseFunction, DisjMode, FkMode, HarnessError, HeavyBackend, RunConfig,
    SchemeOutcome, SchemeParams, StreamInput,
};
use streamcert_core::graphs::WitnessKind;
use streamcert_core::protocol::Strategy;

#[derive(Parser, Debug)]
#[command(name = "streamcert", version, about = "Annotated stream verification: run a scheme over a stream file")]
struct Cli {
    #[command(subcommand)]
    scheme: Scheme,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Stream file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// honest, tamper-proof-polynomial, wrong-answer, false-collision-list,
    /// omitted-heavy-hitter or fake-witness.
    #[arg(long, global = true, default_value = "honest", value_parser = parse_strategy)]
    prover: Strategy,
    /// Repeat with seeds seed, seed+1, … and report how many runs accepted.
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    report: ReportFormat,
    #[arg(long, global = true)]
    ca: Option<u64>,
    #[arg(long, global = true)]
    cv: Option<u64>,
    /// m61, m127 or a decimal prime.
    #[arg(long, global = true, env = FIELD_ENV)]
    field: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Scheme {
    /// Sum-check over a dense layout of the frequency vector.
    Dense {
        #[arg(long, value_enum, default_value = "f2")]
        g: DenseFunction,
    },
    Pointquery {
        #[arg(long)]
        query: u64,
    },
    Selection {
        #[arg(long)]
        rank: u64,
    },
    Heavyhitters {
        #[arg(long)]
        phi: f64,
        #[arg(long, value_enum, default_value = "buckets")]
        backend: HeavyBackend,
    },
    Injection,
    Subinjection {
        /// Bucket weights: `<bucket> [count]` per line.
        #[arg(long)]
        z_file: PathBuf,
    },
    AmaInjection {
        #[arg(long)]
        coins_seed: Option<u64>,
    },
    Fk {
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value = "online")]
        mode: FkMode,
        #[arg(long)]
        coins_seed: Option<u64>,
    },
    Disj {
        #[arg(long, value_enum, default_value = "online")]
        mode: DisjMode,
    },
    Subset,
    Innerproduct,
    Hamming,
    Triangles,
    Matching {
        #[arg(long)]
        witness_file: Option<PathBuf>,
    },
    Connectivity {
        #[arg(long)]
        witness_file: Option<PathBuf>,
    },
    Oddcycle {
        #[arg(long)]
        witness_file: Option<PathBuf>,
    },
    /// Honest F_k runs on generated strict streams over a grid of (m, c_v).
    Sweep {
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, value_enum, default_value = "online")]
        mode: FkMode,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "16")]
        cvs: Vec<u64>,
        #[arg(long, default_value_t = 1 << 20)]
        n: u64,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
        format!("unknown prover `{s}`; expected one of {}", names.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("streamcert: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    let c = cli.common;
    let field = match &c.field {
        Some(s) => Some(parse_field(s)?),
        None => field_from_env()?,
    };
    let mut coins_seed = None;
    let mut z_file = None;
    let mut witness_file = None;
    let scheme = match cli.scheme {
        Scheme::Dense { g } => SchemeParams::Dense { g },
        Scheme::Pointquery { query } => SchemeParams::PointQuery { query },
        Scheme::Selection { rank } => SchemeParams::Selection { rank },
        Scheme::Heavyhitters { phi, backend } => SchemeParams::HeavyHitters { phi, backend },
        Scheme::Injection => SchemeParams::Injection,
        Scheme::Subinjection { z_file: f } => {
            z_file = Some(f);
            SchemeParams::SubInjection { z: Vec::new() }
        }
        Scheme::AmaInjection { coins_seed: s } => {
            coins_seed = s;
            SchemeParams::AmaInjection
        }
        Scheme::Fk { k, mode, coins_seed: s } => {
            coins_seed = s;
            SchemeParams::Fk { k, mode }
        }
        Scheme::Disj { mode } => SchemeParams::Disj { mode },
        Scheme::Subset => SchemeParams::Subset,
        Scheme::Innerproduct => SchemeParams::InnerProduct,
        Scheme::Hamming => SchemeParams::Hamming,
        Scheme::Triangles => SchemeParams::Triangles,
        Scheme::Matching { witness_file: w } => relaxed(WitnessKind::Matching, w, &mut witness_file),
        Scheme::Connectivity { witness_file: w } => relaxed(WitnessKind::Connectivity, w, &mut witness_file),
        Scheme::Oddcycle { witness_file: w } => relaxed(WitnessKind::OddCycle, w, &mut witness_file),
        Scheme::Sweep { k, mode, m, cvs, n } => {
            let template = RunConfig { c_a: c.ca, field, seed: c.seed, coins_seed, ..RunConfig::new(SchemeParams::Fk { k, mode }) };
            let grid: Vec<(u64, u64)> = m.iter().flat_map(|&m| cvs.iter().map(move |&cv| (m, cv))).collect();
            let rows = cost_sweep(&template, n, &grid)?;
            println!("{}", render_sweep(&rows, c.report));
            return Ok(ExitCode::SUCCESS);
        }
    };

    let path = c.input.ok_or_else(|| HarnessError::Usage(format!("{}: --input is required", scheme.name())))?;
    let input = read_stream(scheme.input_kind(), &path)?;
    let scheme = match scheme {
        SchemeParams::SubInjection { .. } => {
            let StreamInput::Bucketed(b) = &input else { unreachable!("subinjection reads bucketed streams") };
            let f = z_file.expect("set with the scheme");
            SchemeParams::SubInjection { z: parse_mask(&read_text(&f)?, b.buckets)? }
        }
        SchemeParams::Relaxed { kind, .. } => match witness_file {
            Some(f) => SchemeParams::Relaxed { kind, witness: Some(parse_witness(kind, &read_text(&f)?)?) },
            None => SchemeParams::Relaxed { kind, witness: None },
        },
        s => s,
    };
    let cfg = RunConfig { c_a: c.ca, c_v: c.cv, field, seed: c.seed, prover: c.prover, coins_seed, scheme };

    if let Some(trials) = c.trials {
        let sum = soundness_trials(&cfg, &input, trials)?;
        println!("{}", TrialReport::new(&cfg, sum).render(c.report));
        let honest_ok = cfg.prover != Strategy::Honest || sum.accepted == sum.trials;
        return Ok(if sum.wrong == 0 && honest_ok { ExitCode::SUCCESS } else { ExitCode::from(2) });
    }
    let res = run_scheme(&cfg, &input)?;
    println!("{}", Report::new(&cfg, &res).render(c.report));
    Ok(match res.outcome {
        SchemeOutcome::Accepted(_) => ExitCode::SUCCESS,
        SchemeOutcome::Rejected(_) => ExitCode::from(2),
    })
}

fn relaxed(kind: WitnessKind, w: Option<PathBuf>, slot: &mut Option<PathBuf>) -> SchemeParams {
    *slot = w;
    SchemeParams::Relaxed { kind, witness: None }
}
