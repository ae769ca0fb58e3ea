//! Batch command-line front end for the percolation laboratory: every
//! experiment is reproducible from its seed, and identical seeds yield
//! byte-identical payloads for any worker count.

mod output;

use std::fmt;
use std::path::PathBuf;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::{emit, estimate_header, estimate_row, to_json_pretty, Envelope, Format};
use percolab::montecarlo;
use percolab::oracle;
use percolab::pivotal;
use percolab::threshold::{self, WindowBudget};
use percolab::{config, exec, Event, ExecMode, Rect, RngSpec, Vertex};

#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "percolab",
    version,
    about = "Finite bond percolation experiments on rectangles of the square lattice",
    long_about = "Finite bond percolation experiments on rectangles of the square lattice.\n\
                  All randomness is keyed by (seed, sample, edge): rerunning any command \n\
                  with the same seed produces byte-identical payloads, regardless of the \n\
                  worker count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one event probability at a fixed p
    Crossing(CrossingArgs),
    /// Estimate the whole crossing curve over a p-grid from coupled sweeps
    Sweep(SweepArgs),
    /// Measure the threshold window and the max-pivotal companion at p = 1/2
    Window(WindowArgs),
    /// Crossing estimates at p = 1/2 across rectangle sizes, against a floor
    Rsw(RswArgs),
    /// Arm-probability decay over a radius list from common samples
    Arm(ArmArgs),
    /// Supercritical crossing growth across rectangle sizes
    Lemma2(Lemma2Args),
    /// Pivotal edges of one sampled configuration, as CSV rows
    PivotalMap(PivotalMapArgs),
    /// Exact enumeration counts for small rectangles, as JSON
    Oracle(OracleArgs),
}

#[derive(Args, Serialize)]
struct Common {
    /// Base seed of the keyed random stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads: 0 = all cores, 1 = sequential; never changes the numbers.
    /// Recorded in the manifest but kept out of payloads, which must be
    /// byte-identical across worker counts.
    #[arg(long, env = "PERCOLAB_WORKERS", default_value_t = 0)]
    #[serde(skip)]
    workers: usize,
    /// Payload format (the oracle and pivotal-map subcommands have fixed formats)
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the payload here plus a <out>.manifest.json sidecar; stdout when omitted
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl Common {
    fn rng(&self) -> RngSpec {
        RngSpec::new(self.seed)
    }

    fn mode(&self) -> ExecMode {
        match self.workers {
            1 => ExecMode::Sequential,
            0 => ExecMode::Parallel,
            n => {
                exec::configure_threads(n);
                ExecMode::Parallel
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EventKind {
    Crossing,
    DualCrossing,
    Arm,
}

impl EventKind {
    fn build(self, rect: Option<Rect>, radius: Option<u32>) -> anyhow::Result<Event> {
        match self {
            EventKind::Crossing | EventKind::DualCrossing => {
                let rect = rect.ok_or_else(|| usage("--rect is required for this event"))?;
                Ok(match self {
                    EventKind::Crossing => Event::HorizontalCrossing(rect),
                    _ => Event::VerticalDualCrossing(rect),
                })
            }
            EventKind::Arm => {
                let radius = radius.ok_or_else(|| usage("--radius is required for --event arm"))?;
                if radius == 0 {
                    return Err(usage("--radius must be at least 1"));
                }
                Ok(Event::Arm { center: Vertex::new(0, 0), radius })
            }
        }
    }
}

#[derive(Args, Serialize)]
struct CrossingArgs {
    /// Rectangle as KxL or KxL@X,Y
    #[arg(long)]
    rect: Option<Rect>,
    /// Event to estimate
    #[arg(long, value_enum, default_value_t = EventKind::Crossing)]
    event: EventKind,
    /// Arm radius, for --event arm (box centered at the origin)
    #[arg(long)]
    radius: Option<u32>,
    /// Edge-open probability
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// Rectangle as KxL or KxL@X,Y
    #[arg(long)]
    rect: Rect,
    /// p-grid as A:B:STEP, endpoints included
    #[arg(long, default_value = "0:1:0.05")]
    grid: String,
    /// Coupled sweeps shared by all grid points
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct WindowArgs {
    /// Explicit rectangle; alternative to --n/--aspect
    #[arg(long)]
    rect: Option<Rect>,
    /// Rectangle sizes n; each rectangle is (aspect*n) x n
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    /// Width-to-height aspect ratio used with --n
    #[arg(long, default_value_t = 3)]
    aspect: u32,
    /// Window level: locate p with Pr ~ eps and Pr ~ 1-eps
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Sweeps drawn before the first bisection step
    #[arg(long, default_value_t = 4096)]
    sweeps_initial: u64,
    /// Hard cap on the shared sweep pool per rectangle
    #[arg(long, default_value_t = 131_072)]
    sweeps_max: u64,
    /// Samples for the max-pivotal companion measurement at p = 1/2
    #[arg(long, default_value_t = 20_000)]
    pivotal_samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct RswArgs {
    /// Rectangle sizes n; each rectangle is (aspect*n) x n
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    n: Vec<u32>,
    /// Width-to-height aspect ratio
    #[arg(long, default_value_t = 3)]
    aspect: u32,
    /// Monte Carlo sample count per rectangle
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Crossing-probability floor every interval must clear
    #[arg(long, default_value_t = 0.01)]
    floor: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct ArmArgs {
    /// Radii, strictly increasing
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    radii: Vec<u32>,
    /// Edge-open probability
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Common samples shared by all radii
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct Lemma2Args {
    /// Edge-open probability, must exceed 1/2
    #[arg(long, default_value_t = 0.6)]
    p: f64,
    /// Rectangle sizes n; each rectangle is (aspect*n) x n
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    n: Vec<u32>,
    /// Width-to-height aspect ratio
    #[arg(long, default_value_t = 3)]
    aspect: u32,
    /// Monte Carlo sample count per rectangle
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Level the largest rectangle must reach
    #[arg(long, default_value_t = 0.99)]
    target: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct PivotalMapArgs {
    /// Rectangle as KxL or KxL@X,Y
    #[arg(long)]
    rect: Rect,
    /// Edge-open probability of the sampled configuration
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Keyed sample index to draw
    #[arg(long, default_value_t = 0)]
    sample_index: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    /// Rectangle as KxL or KxL@X,Y
    #[arg(long)]
    rect: Option<Rect>,
    /// Event to enumerate
    #[arg(long, value_enum, default_value_t = EventKind::Crossing)]
    event: EventKind,
    /// Arm radius, for --event arm
    #[arg(long)]
    radius: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(usage(format!("grid {spec:?} is not of the form A:B:STEP")));
    };
    let a: f64 = a.parse().map_err(|_| usage("grid start is not a number"))?;
    let b: f64 = b.parse().map_err(|_| usage("grid end is not a number"))?;
    let step: f64 = step.parse().map_err(|_| usage("grid step is not a number"))?;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b || step <= 0.0 {
        return Err(usage(format!("grid {spec:?} must satisfy 0 <= A <= B <= 1 and STEP > 0")));
    }
    let mut grid = Vec::new();
    let mut i = 0u64;
    loop {
        let p = a + i as f64 * step;
        if p > b + 1e-9 {
            break;
        }
        grid.push(p.min(b));
        i += 1;
    }
    Ok(grid)
}

fn size_list(rect: Option<Rect>, ns: &[u32], aspect: u32) -> anyhow::Result<Vec<(Option<u32>, Rect)>> {
    if aspect == 0 {
        return Err(usage("--aspect must be at least 1"));
    }
    match rect {
        Some(r) => Ok(vec![(None, r)]),
        None if ns.is_empty() => Err(usage("give either --rect or --n")),
        None => ns
            .iter()
            .map(|&n| {
                if n == 0 {
                    return Err(usage("--n entries must be at least 1"));
                }
                Ok((Some(n), Rect::at_origin(aspect * n, n)?))
            })
            .collect(),
    }
}

fn run_crossing(args: CrossingArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let event = args.event.build(args.rect, args.radius)?;
    let est = montecarlo::estimate_event(&event, args.p, args.samples, args.common.rng(), args.common.mode())?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            estimate_header(&mut buf, &["rect", "event"]);
            estimate_row(&mut buf, &[event.domain().to_string(), event.kind_name().to_string()], args.p, &est);
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "crossing",
            params: params.clone(),
            rng: args.common.rng(),
            data: serde_json::json!({
                "rect": event.domain(),
                "event": event.kind_name(),
                "p": args.p,
                "estimate": est,
            }),
        })?,
    };
    emit(args.common.out.as_deref(), "crossing", params, args.common.rng(), &payload, started)
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let grid = parse_grid(&args.grid)?;
    let curve = montecarlo::estimate_curve(args.rect, &grid, args.samples, args.common.rng(), args.common.mode())?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            estimate_header(&mut buf, &["rect"]);
            for (p, est) in curve.grid.iter().zip(&curve.points) {
                estimate_row(&mut buf, &[args.rect.to_string()], *p, est);
            }
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "sweep",
            params: params.clone(),
            rng: args.common.rng(),
            data: &curve,
        })?,
    };
    emit(args.common.out.as_deref(), "sweep", params, args.common.rng(), &payload, started)
}

fn run_window(args: WindowArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let rects = size_list(args.rect, &args.n, args.aspect)?;
    let budget = WindowBudget {
        initial_sweeps: args.sweeps_initial,
        max_sweeps: args.sweeps_max,
        pivotal_samples: args.pivotal_samples,
    };
    let reports = rects
        .iter()
        .map(|&(_, rect)| threshold::measure_window(rect, args.eps, args.common.rng(), &budget, args.common.mode()))
        .collect::<Result<Vec<_>, _>>()?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            buf.push_str(
                "rect,epsilon,p_low,p_high,width,max_pivotal,max_pivotal_ci_low,max_pivotal_ci_high,\
                 sweeps_used,pivotal_samples,low_uncertain,high_uncertain,seed\n",
            );
            for r in &reports {
                use std::fmt::Write as _;
                let _ = writeln!(
                    buf,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.rect,
                    r.epsilon,
                    r.p_low,
                    r.p_high,
                    r.width,
                    r.max_pivotal.estimate.p_hat,
                    r.max_pivotal.estimate.ci_low,
                    r.max_pivotal.estimate.ci_high,
                    r.sweeps_used,
                    r.max_pivotal.n,
                    r.low.uncertain,
                    r.high.uncertain,
                    r.seed,
                );
            }
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "window",
            params: params.clone(),
            rng: args.common.rng(),
            data: &reports,
        })?,
    };
    emit(args.common.out.as_deref(), "window", params, args.common.rng(), &payload, started)
}

fn run_rsw(args: RswArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let report = threshold::rsw_floor_check(
        &args.n,
        args.aspect,
        args.samples,
        args.floor,
        args.common.rng(),
        args.common.mode(),
    )?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            estimate_header(&mut buf, &["rect"]);
            for row in &report.rows {
                estimate_row(&mut buf, &[row.rect.to_string()], report.p, &row.estimate);
            }
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "rsw",
            params: params.clone(),
            rng: args.common.rng(),
            data: &report,
        })?,
    };
    emit(args.common.out.as_deref(), "rsw", params, args.common.rng(), &payload, started)
}

fn run_arm(args: ArmArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let report = threshold::arm_decay(args.p, &args.radii, args.samples, args.common.rng(), args.common.mode())?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            estimate_header(&mut buf, &["radius"]);
            for row in &report.rows {
                estimate_row(&mut buf, &[row.radius.to_string()], report.p, &row.estimate);
            }
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "arm",
            params: params.clone(),
            rng: args.common.rng(),
            data: &report,
        })?,
    };
    emit(args.common.out.as_deref(), "arm", params, args.common.rng(), &payload, started)
}

fn run_lemma2(args: Lemma2Args) -> anyhow::Result<()> {
    let started = Utc::now();
    let report = threshold::lemma2_check(
        args.p,
        &args.n,
        args.aspect,
        args.samples,
        args.target,
        args.common.rng(),
        args.common.mode(),
    )?;
    let params = serde_json::to_value(&args)?;
    let payload = match args.common.format {
        Format::Csv => {
            let mut buf = String::new();
            estimate_header(&mut buf, &["rect"]);
            for row in &report.rows {
                estimate_row(&mut buf, &[row.rect.to_string()], report.p, &row.estimate);
            }
            buf
        }
        Format::Json => to_json_pretty(&Envelope {
            command: "lemma2",
            params: params.clone(),
            rng: args.common.rng(),
            data: &report,
        })?,
    };
    emit(args.common.out.as_deref(), "lemma2", params, args.common.rng(), &payload, started)
}

fn run_pivotal_map(args: PivotalMapArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let cfg = config::sample(args.rect, args.p, args.common.rng(), args.sample_index)?;
    let edges = pivotal::pivotal_set(&cfg);
    let params = serde_json::to_value(&args)?;
    let mut buf = String::from("edge,x,y,orientation\n");
    for &e in &edges {
        use std::fmt::Write as _;
        let edge = args.rect.edge_at(e)?;
        let _ = writeln!(buf, "{e},{},{},{}", edge.origin.x, edge.origin.y, edge.orientation.name());
    }
    emit(args.common.out.as_deref(), "pivotal-map", params, args.common.rng(), &buf, started)
}

#[derive(Serialize)]
struct OraclePayload<'a> {
    rect: Rect,
    event: &'static str,
    counts: &'a [u64],
}

fn run_oracle(args: OracleArgs) -> anyhow::Result<()> {
    let started = Utc::now();
    let event = args.event.build(args.rect, args.radius)?;
    let poly = oracle::exact_probability(&event, args.common.mode())?;
    let params = serde_json::to_value(&args)?;
    let mut payload = serde_json::to_string(&OraclePayload {
        rect: poly.rect(),
        event: event.kind_name(),
        counts: poly.counts(),
    })?;
    payload.push('\n');
    emit(args.common.out.as_deref(), "oracle", params, args.common.rng(), &payload, started)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Crossing(args) => run_crossing(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Window(args) => run_window(args),
        Command::Rsw(args) => run_rsw(args),
        Command::Arm(args) => run_arm(args),
        Command::Lemma2(args) => run_lemma2(args),
        Command::PivotalMap(args) => run_pivotal_map(args),
        Command::Oracle(args) => run_oracle(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let code = if err.downcast_ref::<UsageError>().is_some() {
            2
        } else if matches!(
            err.downcast_ref::<percolab::Error>(),
            Some(percolab::Error::EnumerationTooLarge { .. })
        ) {
            3
        } else {
            1
        };
        std::process::exit(code);
    }
}
