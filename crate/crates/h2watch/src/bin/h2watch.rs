//! Operator entry point: simulate traffic, train databases, detect, run
//! the real-socket victim and generators, and benchmark extraction.
//!
//! Exit codes: 0 success, 2 input error, 3 configuration error.

use std::fs;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use h2watch::bench;
use h2watch::files;
use h2watch::net;
use h2watch::pipeline;
use h2watch::sim::{self, AttackKind, Scenario};
use h2watch_core::detect::DetectorConfig;
use h2watch_core::flow::{AssembleStats, FlowRecord};
use h2watch_core::learn::{DelayDb, LookaheadDb};
use h2watch_core::metrics;

#[derive(Parser)]
#[command(name = "h2watch", about = "Slow HTTP/2 DoS lab and detector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Read packets from a pcap file.
    #[arg(long, conflicts_with = "listen")]
    pcap: Option<PathBuf>,
    /// Accept one live feed connection (length-prefixed packets) here.
    #[arg(long)]
    listen: Option<SocketAddr>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file into a capture, labels, and a victim log.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn the lookahead and delay databases from benign traffic.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score flows against trained databases.
    Detect {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        lookahead: PathBuf,
        #[arg(long)]
        delay: PathBuf,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
        #[arg(long, default_value_t = 10.0)]
        fallback_delay: f64,
        /// Ground-truth labels; enables metrics output.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Directory for verdicts/metrics files; stdout only if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump per-flow score traces.
        #[arg(long)]
        trace: bool,
    },
    /// Serve as the real-socket victim.
    Victim {
        #[arg(long)]
        port: u16,
        #[arg(long, default_value_t = 10)]
        queue: usize,
        /// 𝒯 in seconds.
        #[arg(long, default_value_t = 360.0)]
        wait: f64,
        /// Stop after this many accepted-or-rejected connections.
        #[arg(long)]
        conns: usize,
    },
    /// Drive attack connections against a real victim.
    Attack {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        target: SocketAddr,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 100.0)]
        hold: f64,
        /// Compresses script offsets (virtual µs × scale).
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
    /// Drive benign requests against a real victim.
    Benign {
        #[arg(long)]
        target: SocketAddr,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
    /// Benchmark lookahead-pair extraction time.
    BenchExtract {
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 7, 9])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1000usize])]
        len: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
}

#[derive(Debug)]
enum CliError {
    /// Unreadable or undecodable input data.
    Input(String),
    /// Inconsistent or invalid configuration.
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("h2watch: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_flows(input: &InputArgs) -> Result<(Vec<FlowRecord>, AssembleStats), CliError> {
    if let Some(path) = &input.pcap {
        let bytes = fs::read(path).map_err(input_err)?;
        h2watch_core::flow::assemble_pcap(&bytes).map_err(input_err)
    } else if let Some(addr) = &input.listen {
        let listener = TcpListener::bind(addr).map_err(config_err)?;
        eprintln!("listening for one feed connection on {addr}");
        let (mut stream, peer) = listener.accept().map_err(input_err)?;
        eprintln!("feeding from {peer}");
        net::assemble_feed(&mut stream).map_err(input_err)
    } else {
        Err(CliError::Config("need --pcap or --listen".into()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, out, seed } => {
            let text = fs::read_to_string(&scenario).map_err(input_err)?;
            let mut sc = Scenario::parse(&text).map_err(config_err)?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let sim = sim::run_scenario(&sc).map_err(config_err)?;
            files::atomic_write(&out.join("capture.pcap"), &sim.pcap).map_err(input_err)?;
            files::atomic_write(
                &out.join("labels.csv"),
                files::render_labels(&sim.labels).as_bytes(),
            )
            .map_err(input_err)?;
            files::atomic_write(&out.join("victim.log"), sim.victim_log.as_bytes())
                .map_err(input_err)?;
            println!(
                "simulated {} connections ({} accepted, {} rejected) into {}",
                sim.labels.len(),
                sim.accepted,
                sim.rejected,
                out.display()
            );
            Ok(())
        }
        Command::Train { input, n, out } => {
            if !(2..=16).contains(&n) {
                return Err(CliError::Config(format!("n={n} outside [2, 16]")));
            }
            let (flows, stats) = load_flows(&input)?;
            let model = pipeline::train_from_flows(&flows, n).map_err(input_err)?;
            files::atomic_write(
                &out.join("lookahead.db"),
                model.lookahead.to_text().as_bytes(),
            )
            .map_err(input_err)?;
            files::atomic_write(&out.join("delay.db"), model.delay.to_text().as_bytes())
                .map_err(input_err)?;
            let plateau = model.saturation.last().map_or(0, |(_, c)| *c);
            let seen_half = model
                .saturation
                .iter()
                .position(|(_, c)| *c * 2 >= plateau)
                .unwrap_or(0);
            println!(
                "trained on {} flows ({} packets): {} lookahead pairs (half seen by flow {}), {} delay entries",
                flows.len(),
                stats.packets,
                plateau,
                seen_half + 1,
                model.delay.entries.len()
            );
            Ok(())
        }
        Command::Detect {
            input,
            lookahead,
            delay,
            n,
            threshold,
            fallback_delay,
            labels,
            out,
            trace,
        } => {
            let lookahead_text = fs::read_to_string(&lookahead).map_err(input_err)?;
            let delay_text = fs::read_to_string(&delay).map_err(input_err)?;
            let lookahead = LookaheadDb::parse(&lookahead_text).map_err(input_err)?;
            let delay = DelayDb::parse(&delay_text).map_err(input_err)?;
            if lookahead.n != n {
                return Err(CliError::Config(format!(
                    "database built for n={}, flag says n={n}",
                    lookahead.n
                )));
            }
            let cfg = DetectorConfig::new(lookahead, delay, threshold, fallback_delay)
                .map_err(config_err)?;
            let (flows, _) = load_flows(&input)?;
            let outcome = pipeline::detect_flows(&flows, &cfg);
            let verdict_text = files::render_verdicts(&outcome.verdicts);
            print!("{verdict_text}");
            if outcome.undecided > 0 {
                eprintln!("{} flows never terminated; no verdict", outcome.undecided);
            }
            if let Some(dir) = &out {
                files::atomic_write(&dir.join("verdicts.txt"), verdict_text.as_bytes())
                    .map_err(input_err)?;
                if trace {
                    files::atomic_write(
                        &dir.join("traces.csv"),
                        files::render_traces(&outcome.verdicts).as_bytes(),
                    )
                    .map_err(input_err)?;
                }
            }
            if let Some(label_path) = &labels {
                let label_text = fs::read_to_string(label_path).map_err(input_err)?;
                let truth = files::parse_labels(&label_text).map_err(input_err)?;
                let eval = pipeline::evaluate(&outcome.verdicts, &truth);
                let summary_csv = files::render_summary_csv(&eval.summary);
                println!("{}", eval.summary);
                for (kind, (hit, total)) in &eval.per_kind {
                    println!("kind={kind} detected={hit}/{total}");
                }
                if let Some(dir) = &out {
                    files::atomic_write(&dir.join("metrics.csv"), summary_csv.as_bytes())
                        .map_err(input_err)?;
                    let anomalous: Vec<_> = outcome
                        .verdicts
                        .iter()
                        .filter(|v| v.label == h2watch_core::detect::Label::Anomalous)
                        .cloned()
                        .collect();
                    if !anomalous.is_empty() {
                        let cdf = metrics::latency_cdf(&anomalous);
                        files::atomic_write(
                            &dir.join("latency_cdf.csv"),
                            files::render_latency_cdf(&cdf).as_bytes(),
                        )
                        .map_err(input_err)?;
                    }
                }
            }
            Ok(())
        }
        Command::Victim {
            port,
            queue,
            wait,
            conns,
        } => {
            if queue < 1 || !(wait > 0.0) {
                return Err(CliError::Config("need queue >= 1 and wait > 0".into()));
            }
            let listener =
                TcpListener::bind(("0.0.0.0", port)).map_err(config_err)?;
            let cfg = net::VictimConfig {
                queue_capacity: queue,
                wait: Duration::from_secs_f64(wait),
            };
            let log = net::victim_serve(listener, cfg, conns).map_err(input_err)?;
            print!("{log}");
            Ok(())
        }
        Command::Attack {
            kind,
            target,
            count,
            hold,
            time_scale,
        } => {
            let kind: AttackKind = kind.parse().map_err(config_err)?;
            probe(target)?;
            let rows = net::run_attack(
                kind,
                target,
                count,
                Duration::from_secs_f64(hold),
                time_scale,
            );
            print!("{}", net::render_summaries(&rows));
            Ok(())
        }
        Command::Benign {
            target,
            count,
            seed,
            time_scale,
        } => {
            probe(target)?;
            let rows = net::run_benign(target, count, seed, time_scale);
            print!("{}", net::render_summaries(&rows));
            Ok(())
        }
        Command::BenchExtract { n, len, reps } => {
            let rows = bench::extraction_timing(&n, &len, reps);
            print!("{}", bench::render_rows(&rows));
            Ok(())
        }
    }
}

/// Fails fast with a clear message when the target is unreachable.
fn probe(target: SocketAddr) -> Result<(), CliError> {
    TcpStream::connect_timeout(&target, Duration::from_secs(2))
        .map(drop)
        .map_err(|e| CliError::Input(format!("target {target} unreachable: {e}")))
}
