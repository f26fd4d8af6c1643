//! `netmark`: simulate, estimate and test function-marked point patterns on
//! linear networks.
//!
//! Exit codes: 0 success, 1 data or validation error, 2 usage error.

mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use netmark::dataio::{self, NetworkFormat, OutputFormat};
use netmark::envel::{self, EnvelopeConfig};
use netmark::estim::{KappaEstimator, RGrid};
use netmark::marks::MarkedPattern;
use netmark::netgeom::{LinearNetwork, DEFAULT_SNAP_TOL};
use netmark::sim::{self, Scenario, SimConfig};
use netmark::testfun::TestFunctionId;

use manifest::Run;

#[derive(Parser, Debug)]
#[command(
    name = "netmark",
    version,
    about = "Mark summary characteristics for function-marked point patterns on linear networks"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "NETMARK_THREADS")]
    threads: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a Poisson pattern with functional marks.
    Simulate(SimulateArgs),
    /// Estimate the pointwise surface and global curve of one statistic.
    Analyze(AnalyzeArgs),
    /// Random-labelling test with a global envelope.
    Envelope(EnvelopeArgs),
    /// Aggregate trip logs into daily station profiles.
    Aggregate(AggregateArgs),
    /// Check a network file and report its structure.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct NetworkArgs {
    /// Network file: CSV `seg_id,x1,y1,x2,y2` or GeoJSON line strings.
    #[arg(long)]
    network: PathBuf,

    /// Network format; guessed from the extension when absent.
    #[arg(long, value_parser = parse_from_str::<NetworkFormat>)]
    network_format: Option<NetworkFormat>,

    /// Endpoint snapping tolerance in network units.
    #[arg(long, default_value_t = DEFAULT_SNAP_TOL)]
    snap_tol: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Points per unit length.
    #[arg(long, default_value_t = 0.0006)]
    lambda: f64,
    #[arg(long, value_parser = parse_from_str::<Scenario>, default_value = "1")]
    scenario: Scenario,
    #[arg(long, default_value_t = sim::DEFAULT_TIMESTAMPS)]
    timestamps: usize,
    /// Neighbourhood radius for scenario 3.
    #[arg(long, default_value_t = sim::DEFAULT_NEIGHBOR_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_points: PathBuf,
    #[arg(long)]
    out_marks: PathBuf,
    /// Manifest path; defaults to `<out-points>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PatternArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Points: `point_id,seg_id,offset` or `point_id,x,y`.
    #[arg(long)]
    pattern: PathBuf,
    /// Marks: `point_id,t_1,...,t_T`.
    #[arg(long)]
    marks: PathBuf,
    #[arg(long, value_parser = parse_stat)]
    stat: TestFunctionId,
    /// Largest r; defaults to a quarter of the largest interpoint distance.
    #[arg(long)]
    rmax: Option<f64>,
    /// Number of r values.
    #[arg(long)]
    nr: Option<usize>,
    /// Kernel half-width; defaults to 0.15 |L| / N.
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: PatternArgs,
    /// Surface output (`.json` for JSON, CSV otherwise).
    #[arg(long)]
    out_surface: PathBuf,
    /// Curve output (`.json` for JSON, CSV otherwise).
    #[arg(long)]
    out_curve: PathBuf,
    /// Manifest path; defaults to `<out-surface>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[command(flatten)]
    input: PatternArgs,
    #[arg(long, default_value_t = envel::DEFAULT_NPERM)]
    nperm: usize,
    #[arg(long, default_value_t = envel::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test the pointwise surface instead of the global curve.
    #[arg(long)]
    surface: bool,
    /// Envelope output (`.json` for JSON, CSV otherwise).
    #[arg(long)]
    out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Trips: `station_id,departure_time,distance_m`.
    #[arg(long)]
    trips: PathBuf,
    /// Month to aggregate, `YYYY-MM`.
    #[arg(long, value_parser = parse_from_str::<dataio::Month>)]
    month: dataio::Month,
    /// Drop unparseable trip rows instead of failing.
    #[arg(long)]
    skip_invalid: bool,
    /// Daily profiles output.
    #[arg(long)]
    out_marks: PathBuf,
    /// JSON summary: monthly totals and per-station counts.
    #[arg(long)]
    out_summary: Option<PathBuf>,
    /// Station coordinates `station_id,x,y`, for snapping to a network.
    #[arg(long, requires_all = ["network", "out_points"])]
    stations: Option<PathBuf>,
    #[arg(long, requires = "stations")]
    network: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<NetworkFormat>)]
    network_format: Option<NetworkFormat>,
    #[arg(long, default_value_t = DEFAULT_SNAP_TOL)]
    snap_tol: f64,
    /// Largest allowed station-to-network distance.
    #[arg(long, default_value_t = dataio::DEFAULT_STATION_SNAP_LIMIT)]
    snap_limit: f64,
    /// Snapped station positions.
    #[arg(long, requires = "stations")]
    out_points: Option<PathBuf>,
    /// Manifest path; defaults to `<out-marks>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// JSON report output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn parse_from_str<T>(s: &str) -> std::result::Result<T, String>
where
    T: std::str::FromStr<Err = netmark::Error>,
{
    s.parse().map_err(|e: netmark::Error| e.to_string())
}

fn parse_stat(s: &str) -> std::result::Result<TestFunctionId, String> {
    parse_from_str(s)
}

fn load_network(run: &mut Run, args: &NetworkArgs) -> Result<LinearNetwork> {
    run.input(&args.network)?;
    let format = args.network_format.unwrap_or_else(|| NetworkFormat::from_path(&args.network));
    run.param("snap_tol", args.snap_tol);
    let net = dataio::load_network(&args.network, format, args.snap_tol)?;
    if net.n_components() > 1 {
        run.warn(format!("network has {} components; distances between them are infinite", net.n_components()));
    }
    Ok(net)
}

fn load_pattern(run: &mut Run, args: &PatternArgs) -> Result<MarkedPattern> {
    let net = Arc::new(load_network(run, &args.net)?);
    run.input(&args.pattern)?;
    run.input(&args.marks)?;
    let pattern = dataio::read_pattern(&args.pattern, &net)?;
    if let Some(d) = &pattern.snap_distances {
        let worst = d.iter().copied().fold(0.0, f64::max);
        log::info!("snapped {} points, largest move {worst:.3}", d.len());
    }
    let marks = dataio::read_marks(&args.marks)?;
    Ok(dataio::assemble_pattern(net, &pattern, &marks)?)
}

fn rgrid_for(
    run: &mut Run,
    args: &PatternArgs,
    p: &MarkedPattern,
    dist: &netmark::netgeom::DistanceMatrix,
) -> Result<RGrid> {
    let rgrid = RGrid::default_for(p, dist, args.rmax, args.nr, args.bandwidth)?;
    run.param("stat", args.stat.name());
    run.param("rmax", rgrid.r_max());
    run.param("nr", rgrid.len());
    run.param("bandwidth", rgrid.bandwidth());
    run.param("n_points", p.len());
    run.param("n_timestamps", p.grid().len());
    Ok(rgrid)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut run = Run::start("simulate");
    let net = Arc::new(load_network(&mut run, &args.net)?);
    let cfg = SimConfig {
        intensity: args.lambda,
        n_timestamps: args.timestamps,
        scenario: args.scenario,
        neighbor_radius: args.radius,
        seed: args.seed,
    };
    run.seed("seed", args.seed);
    run.param("lambda", args.lambda);
    run.param("scenario", args.scenario.to_string());
    run.param("timestamps", args.timestamps);
    run.param("radius", args.radius);
    let p = sim::simulate(net.clone(), &cfg)?;
    run.param("n_points", p.len());
    let ids: Vec<String> = (1..=p.len()).map(|k| k.to_string()).collect();
    run.output(&args.out_points, dataio::render_pattern_csv(&ids, p.points(), &net)?)?;
    run.output(&args.out_marks, dataio::render_marks_csv(&ids, p.grid(), p.marks())?)?;
    println!("simulated {} points (expected {:.1})", p.len(), args.lambda * net.total_length());
    run.finish(args.manifest.as_deref())?;
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let mut run = Run::start("analyze");
    let p = load_pattern(&mut run, &args.input)?;
    if p.len() < 2 {
        return Err(netmark::Error::TooFewPoints(p.len()).into());
    }
    let dist = p.distance_matrix()?;
    let rgrid = rgrid_for(&mut run, &args.input, &p, &dist)?;
    let summary = KappaEstimator::new(&dist, &rgrid)?.summary(p.marks(), p.grid(), args.input.stat)?;
    for w in summary.warnings {
        run.warn(w);
    }
    run.output(
        &args.out_surface,
        dataio::render_surface(&summary.surface, OutputFormat::from_path(&args.out_surface)),
    )?;
    run.output(&args.out_curve, dataio::render_curve(&summary.curve, OutputFormat::from_path(&args.out_curve)))?;
    run.finish(args.manifest.as_deref())?;
    Ok(())
}

fn envelope(args: EnvelopeArgs) -> Result<()> {
    let mut run = Run::start("envelope");
    let p = load_pattern(&mut run, &args.input)?;
    if p.len() < 2 {
        return Err(netmark::Error::TooFewPoints(p.len()).into());
    }
    let dist = p.distance_matrix()?;
    let rgrid = rgrid_for(&mut run, &args.input, &p, &dist)?;
    let cfg = EnvelopeConfig::new(args.nperm, args.alpha, args.seed);
    cfg.validate()?;
    run.seed("seed", args.seed);
    run.param("nperm", args.nperm);
    run.param("alpha", args.alpha);
    run.param("surface", args.surface);
    let format = OutputFormat::from_path(&args.out);
    let (text, p_value) = if args.surface {
        let res = envel::surface_envelope(&p, args.input.stat, &rgrid, &cfg)?;
        (dataio::render_surface_envelope(&res, format), res.p_value)
    } else {
        let est = KappaEstimator::new(&dist, &rgrid)?;
        let mut res = envel::global_envelopes_with(&est, &p, &[args.input.stat], &cfg, dist.checksum())?;
        let res = res.remove(0);
        if res.observed.weight_ok.iter().all(|ok| !ok) {
            run.warn(format!("{}: every r value is masked", args.input.stat));
        }
        (dataio::render_envelope(&res, format), res.p_value)
    };
    run.param("p_value", p_value);
    run.output(&args.out, text)?;
    println!("p_value={}", dataio::fmt_f64(p_value));
    run.finish(args.manifest.as_deref())?;
    Ok(())
}

#[derive(serde::Serialize)]
struct AggregateSummary<'a> {
    month: String,
    totals: &'a dataio::MonthTotals,
    skipped_rows: usize,
    stations: Vec<StationSummary<'a>>,
}

#[derive(serde::Serialize)]
struct StationSummary<'a> {
    station_id: &'a str,
    trips: usize,
    filled_days: Vec<usize>,
    snap_distance: Option<f64>,
}

fn aggregate(args: AggregateArgs) -> Result<()> {
    let mut run = Run::start("aggregate");
    run.input(&args.trips)?;
    run.param("month", args.month.to_string());
    let (trips, skipped) = dataio::read_trips(&args.trips, args.skip_invalid)?;
    if skipped > 0 {
        run.warn(format!("skipped {skipped} invalid trip rows"));
    }
    let table = dataio::aggregate_trips(&trips, args.month)?;
    let profiles = dataio::daily_profiles(&table)?;
    run.output(&args.out_marks, dataio::render_marks_csv(&profiles.station_ids, &profiles.grid, &profiles.marks)?)?;

    let mut snap_distances = None;
    if let (Some(stations), Some(network), Some(out_points)) = (&args.stations, &args.network, &args.out_points) {
        let net_args =
            NetworkArgs { network: network.clone(), network_format: args.network_format, snap_tol: args.snap_tol };
        let net = Arc::new(load_network(&mut run, &net_args)?);
        run.input(stations)?;
        run.param("snap_limit", args.snap_limit);
        let coords = dataio::read_station_coords(stations)?;
        let sp = dataio::profiles_from_aggregate(&table, net.clone(), &coords, args.snap_limit)?;
        run.output(out_points, dataio::render_pattern_csv(&sp.station_ids, sp.pattern.points(), &net)?)?;
        snap_distances = Some(sp.snap_distances);
    }

    let filled_cells: usize = profiles.filled.iter().flatten().filter(|f| **f).count();
    if filled_cells > 0 {
        run.warn(format!("{filled_cells} station-days without trips were filled with the station's month mean"));
    }
    if let Some(path) = &args.out_summary {
        let summary = AggregateSummary {
            month: table.month.to_string(),
            totals: &table.totals,
            skipped_rows: skipped,
            stations: table
                .stations
                .iter()
                .enumerate()
                .map(|(k, s)| StationSummary {
                    station_id: &s.station_id,
                    trips: s.counts.iter().sum(),
                    filled_days: (1..=profiles.filled[k].len()).filter(|d| profiles.filled[k][d - 1]).collect(),
                    snap_distance: snap_distances.as_ref().map(|d| d[k]),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        run.output(path, text)?;
    }
    let t = &table.totals;
    println!(
        "month={} stations={} trips={} mean_distance={:.1}",
        table.month, t.n_stations, t.n_trips, t.mean_distance
    );
    run.finish(args.manifest.as_deref())?;
    Ok(())
}

#[derive(serde::Serialize)]
struct ValidateReport {
    nodes: usize,
    segments: usize,
    components: usize,
    border_nodes: usize,
    total_length: f64,
}

fn validate(args: ValidateArgs) -> Result<()> {
    let mut run = Run::start("validate");
    let net = load_network(&mut run, &args.net)?;
    let report = ValidateReport {
        nodes: net.nodes().len(),
        segments: net.segments().len(),
        components: net.n_components(),
        border_nodes: net.border_nodes().len(),
        total_length: net.total_length(),
    };
    println!(
        "ok: {} nodes, {} segments, {} components, {} border nodes, total length {:.3}",
        report.nodes, report.segments, report.components, report.border_nodes, report.total_length
    );
    if let Some(out) = &args.out {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        run.output(out, text)?;
    }
    run.finish(args.manifest.as_deref())?;
    Ok(())
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Envelope(a) => envelope(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Validate(a) => validate(a),
    }
}

/// 2 for errors caused by the arguments, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<netmark::Error>() {
        Some(netmark::Error::InvalidArgument(_)) | Some(netmark::Error::NoBorder) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = (|| -> Result<()> {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(netmark::Error::InvalidArgument("--threads must be at least 1".into()).into());
            }
            pool = pool.num_threads(n);
        }
        let pool = pool.build().context("starting worker threads")?;
        pool.install(|| dispatch(cli.command))
    })();

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
