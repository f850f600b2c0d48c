//! Command-line front end: runs seeded campaigns and the numeric oracles.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beepnet::analysis::amplify::amplification_rounds;
use beepnet::analysis::{bb_exact, bb_montecarlo, twin_coupling_experiment, TwinConfig, TwinProtocol};
use beepnet::campaign::{
    run_entry, write_trace_csv, CampaignEntry, EntrySummary, ProtocolKind, TopologySource,
};
use beepnet::topology::parse_events;
use beepnet::{GraphSpec, Model, SimConfig, Topology, WakeupSchedule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "beepnet", version, about = "Interval coloring in the beeping model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials on a fixed topology.
    Static(RunArgs),
    /// Run trials with topology events and the windowed degree estimate.
    Dynamic(DynamicArgs),
    /// Evaluate a numeric oracle.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Protocol {
    Beepfirst,
    Jitterjump,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "jitterjump")]
    protocol: Protocol,
    /// Edge-list file, or a generator: gnp:N:P, regular:N:D, star:N,
    /// clique:N, blocks:K. Defaults to regular:<n>:<delta>.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Degree bound used to size the period; must cover the graph.
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    eta: f64,
    #[arg(long, default_value_t = 64.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Period length for the continuous model.
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long)]
    max_periods: Option<u64>,
    /// Periods to keep running after everything is good.
    #[arg(long, default_value_t = 5)]
    settle: u64,
    /// simultaneous, uniform:<periods>, stagger:<periods>, or a file of
    /// "node wake" lines.
    #[arg(long, default_value = "simultaneous")]
    wakeup: String,
    /// Use the beep-free radius as the interval (BeepFirst only).
    #[arg(long)]
    adaptive_interval: bool,
    /// Trace CSV; with several trials each goes to <stem>_t<idx>.<ext>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DynamicArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Events file: "period kind args" per line.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Window length; defaults to ceil(log2 n).
    #[arg(long)]
    r: Option<u32>,
}

#[derive(Subcommand)]
enum Oracle {
    /// Occupancy law of m balls in n bins.
    Ballsbins {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        /// Also sample this many throws and compare per bin.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Periods c(q+1)/p·ln n until all n nodes succeed w.p. 1 - n^-q.
    Amplify {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        json: bool,
    },
    /// Twin-state coupling on the cycle-of-blocks graph.
    Lowerbound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        slots: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "coin")]
        protocol: TwinKind,
        /// Give both twins of a pair the same random stream.
        #[arg(long)]
        shared: bool,
        /// Slot count at which surviving pairs are counted; default ceil(log2 k).
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TwinKind {
    Coin,
    Jitterjump,
}

/// Reported as exit 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Static(a) => run(&a, None),
        Command::Dynamic(d) => run(&d.run, Some((&d.events, d.r))),
        Command::Oracle(o) => oracle(o),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_topology(a: &RunArgs) -> Result<TopologySource, Usage> {
    let src = match &a.graph {
        None => {
            let n = a.n.unwrap_or(64);
            TopologySource::Generated(GraphSpec::Regular {
                n,
                d: a.delta.unwrap_or(4),
            })
        }
        Some(g) if Path::new(g).is_file() => {
            TopologySource::Fixed(Topology::parse_edge_list(&fs::read_to_string(g)?)?)
        }
        Some(g) => TopologySource::Generated(g.parse::<GraphSpec>()?),
    };
    // Only node counts that do not depend on randomness can be checked here.
    let n = match &src {
        TopologySource::Fixed(t) => Some(t.node_count()),
        TopologySource::Generated(s) if !s.is_random() => {
            Some(src.build(0)?.node_count())
        }
        TopologySource::Generated(GraphSpec::Gnp { n, .. } | GraphSpec::Regular { n, .. }) => Some(*n),
        TopologySource::Generated(_) => None,
    };
    if let (Some(want), Some(got)) = (a.n, n) {
        if want != got {
            return Err(Usage(format!("--n {want} disagrees with the graph's {got} nodes")));
        }
    }
    Ok(src)
}

fn load_wakeup(s: &str) -> Result<WakeupSchedule, Usage> {
    if Path::new(s).is_file() {
        return Ok(WakeupSchedule::parse_file(&fs::read_to_string(s)?)?);
    }
    Ok(s.parse()?)
}

fn run(a: &RunArgs, dynamic: Option<(&Option<PathBuf>, Option<u32>)>) -> Result<bool, Usage> {
    let topology = load_topology(a)?;
    let events = match dynamic {
        Some((Some(path), _)) => parse_events(&fs::read_to_string(path)?)?,
        _ => Vec::new(),
    };
    let protocol = match a.protocol {
        Protocol::Beepfirst => {
            if dynamic.is_some() {
                return Err(Usage("beepfirst has no dynamic mode".into()));
            }
            ProtocolKind::BeepFirst {
                adaptive_interval: a.adaptive_interval,
            }
        }
        Protocol::Jitterjump => ProtocolKind::JitterJump {
            dynamic: dynamic.is_some(),
        },
    };
    let model = match a.protocol {
        Protocol::Beepfirst => Model::Continuous { period: a.period },
        Protocol::Jitterjump => Model::Discrete {
            slots: a.delta.map(|d| (a.kappa * d.max(1) as f64).ceil() as u32),
        },
    };
    let config = SimConfig {
        model,
        kappa: a.kappa,
        eta: a.eta,
        epsilon: a.epsilon,
        window: dynamic.and_then(|(_, r)| r),
        master_seed: a.seed,
        wakeup: load_wakeup(&a.wakeup)?,
        max_periods: a.max_periods.unwrap_or(match a.protocol {
            Protocol::Beepfirst => 4,
            Protocol::Jitterjump => 1_000,
        }),
    };
    match a.protocol {
        Protocol::Beepfirst => config.validate_beepfirst()?,
        Protocol::Jitterjump => config.validate_jitterjump()?,
    }
    let entry = CampaignEntry {
        config,
        topology,
        protocol,
        repeats: a.trials,
        events,
        settle_periods: a.settle,
        record_trace: a.out.is_some(),
    };
    let summary = run_entry(&entry)?;
    if let Some(delta) = a.delta {
        if let Some(t) = summary.trials.iter().find(|t| t.max_degree > delta) {
            return Err(Usage(format!(
                "--delta {delta} is below the maximum degree {} of trial {}",
                t.max_degree, t.trial
            )));
        }
    }
    if let Some(out) = &a.out {
        write_traces(out, &summary)?;
    }
    report(&summary, a.json)?;
    Ok(summary.passed)
}

fn trace_path(out: &Path, trial: u64, trials: u64) -> PathBuf {
    if trials <= 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_t{trial}.{}", ext.to_string_lossy()),
        None => format!("{stem}_t{trial}"),
    };
    out.with_file_name(name)
}

fn write_traces(out: &Path, s: &EntrySummary) -> io::Result<()> {
    let n = s.trials.len() as u64;
    for t in &s.trials {
        let f = fs::File::create(trace_path(out, t.trial, n))?;
        let mut w = BufWriter::new(f);
        write_trace_csv(&mut w, &t.trace)?;
        w.flush()?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x}"))
}

fn report(s: &EntrySummary, json: bool) -> io::Result<()> {
    let mut out = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, s)?;
        return writeln!(out);
    }
    writeln!(out, "protocol: {:?}", s.protocol)?;
    writeln!(out, "trials: {}", s.trials.len())?;
    writeln!(out, "passed: {}", s.passed)?;
    writeln!(out, "max_convergence: {}", fmt_opt(s.max_convergence))?;
    writeln!(out, "median_convergence: {}", fmt_opt(s.median_convergence))?;
    writeln!(out, "fitted_c: {}", fmt_opt(s.fitted_c))?;
    writeln!(out, "trial,nodes,max_degree,period,convergence,restabilization,tie_collisions,free_slot_shortfalls,resets,failures")?;
    for t in &s.trials {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            t.trial,
            t.nodes,
            t.max_degree,
            t.period,
            fmt_opt(t.convergence),
            fmt_opt(t.restabilization),
            t.tie_collisions,
            t.free_slot_shortfalls,
            t.resets,
            t.failures.join("; "),
        )?;
    }
    Ok(())
}

fn emit<T: Serialize>(value: &T, json: bool, text: impl FnOnce() -> String) -> io::Result<()> {
    let mut out = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)
    } else {
        write!(out, "{}", text())
    }
}

#[derive(Serialize)]
struct BallsReport {
    m: u32,
    n: u32,
    tail_above_quarter: f64,
    mean: f64,
    tail_gate: bool,
    mean_gate: bool,
    montecarlo_trials: Option<u64>,
    max_sigma_deviation: Option<f64>,
    passed: bool,
}

#[derive(Serialize)]
struct TwinReport {
    blocks: usize,
    shared_randomness: bool,
    #[serde(flatten)]
    stats: beepnet::analysis::TwinStats,
    same_action_rate: f64,
    surviving_pair_rate: f64,
    passed: bool,
}

fn oracle(o: Oracle) -> Result<bool, Usage> {
    match o {
        Oracle::Ballsbins { m, n, trials, seed, json } => {
            if n == 0 {
                return Err(Usage("need at least one bin".into()));
            }
            let d = bb_exact(m, n);
            let g = d.quarter_gate();
            let mc = trials.map(|t| bb_montecarlo(m, n, t, seed).max_sigma_deviation(&d));
            let r = BallsReport {
                m,
                n,
                tail_above_quarter: g.tail_prob,
                mean: g.mean,
                tail_gate: g.tail_above_half,
                mean_gate: g.mean_above_half_m,
                montecarlo_trials: trials,
                max_sigma_deviation: mc,
                passed: g.passes() && mc.is_none_or(|s| s <= 4.0),
            };
            emit(&r, json, || {
                let mut s = format!(
                    "P[Z > m/4]: {}\nE[Z]: {}\nP > 1/2: {}\nE > m/2: {}\n",
                    r.tail_above_quarter, r.mean, r.tail_gate, r.mean_gate
                );
                if let Some(x) = r.max_sigma_deviation {
                    s += &format!("max per-bin deviation: {x:.3} sigma\n");
                }
                s + &format!("passed: {}\n", r.passed)
            })?;
            Ok(r.passed)
        }
        Oracle::Amplify { c, p, q, n, json } => {
            let rounds = amplification_rounds(c, p, q, n)?;
            #[derive(Serialize)]
            struct R {
                rounds: f64,
            }
            emit(&R { rounds }, json, || format!("rounds: {rounds}\n"))?;
            Ok(true)
        }
        Oracle::Lowerbound { k, slots, trials, seed, protocol, shared, horizon, json } => {
            if k < 2 || trials == 0 {
                return Err(Usage("need k >= 2 blocks and at least one trial".into()));
            }
            let cfg = TwinConfig {
                blocks: k,
                slots,
                trials,
                seed,
                shared_randomness: shared,
                horizon: horizon.unwrap_or_else(|| TwinConfig::default_horizon(k)),
            };
            let proto = match protocol {
                TwinKind::Coin => TwinProtocol::Coin,
                TwinKind::Jitterjump => TwinProtocol::JitterJump,
            };
            let stats = twin_coupling_experiment(proto, &cfg)?;
            let rate = stats.same_action_rate();
            let sigma_a = (0.25 / stats.same_state_slots.max(1) as f64).sqrt();
            let floor = 1.0 - (-1f64).exp();
            let surv = stats.surviving_pair_rate();
            let sigma_s = (floor * (1.0 - floor) / trials as f64).sqrt();
            let passed = if shared {
                stats.divergences == 0
            } else {
                rate >= 0.5 - 3.0 * sigma_a
                    && (cfg.horizon > slots || surv >= floor - 3.0 * sigma_s)
            };
            let r = TwinReport {
                blocks: k,
                shared_randomness: shared,
                stats,
                same_action_rate: rate,
                surviving_pair_rate: surv,
                passed,
            };
            emit(&r, json, || {
                format!(
                    "blocks: {k}\nslots: {slots}\ntrials: {trials}\nshared: {shared}\n\
                     divergences: {}\nsame_action_rate: {rate}\nhorizon: {}\n\
                     surviving_pair_rate: {surv}\npassed: {passed}\n",
                    r.stats.divergences, r.stats.horizon
                )
            })?;
            Ok(passed)
        }
    }
}
