use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use clusterxy::dataset::{echo_dataset, write_dataset, Dataset, Format, Metadata, Value};
use clusterxy::geometry::{overlap_scan, quantum_geometric_tensor};
use clusterxy::oracle::oracle_suite;
use clusterxy::quench::{
    default_time_grid, loschmidt_echo, quasiparticle_peak_scan, revival_time_bound, time_grid, QuenchProtocol,
};
use clusterxy::spectrum::{classify_with, gap_minimum, max_group_velocity, mode_table, ClassifyOptions, CriticalSurface};
use clusterxy::sweep::{run_scan, Quantity, ScanPlan};
use clusterxy::{momentum_grid, Axis, CouplingPoint, Error, Flags, ParitySector};

const EXIT_USAGE: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;
const EXIT_ORACLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "clusterxy", version, about = "Exact free-fermion analysis of the cluster-XY chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    lx: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    ly: f64,
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    h: f64,
    /// Chain length (even). Defaults to 100, or 8 for oracle-check.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Parity sector q (0 or 1).
    #[arg(long, global = true, default_value_t = 0)]
    sector: i64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Samples of the dense momentum scan.
    #[arg(long, global = true, default_value_t = 4096)]
    resolution: usize,
    /// Tolerance on critical-surface relations.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    #[arg(long, global = true, allow_hyphen_values = true)]
    lx2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    ly2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    h2: Option<f64>,
    #[arg(long = "t-max", global = true, default_value_t = 100.0)]
    t_max: f64,
    /// Time step; pi / (40 max Delta) when absent.
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScanArgs {
    /// Swept axis as axis:min:max:steps (once or twice).
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// Plan file of key = value lines.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mode table at one point.
    Spectrum,
    /// min_k Delta_k in the thermodynamic limit.
    Gap,
    /// Critical surfaces through the point.
    Classify,
    /// Gap and critical surfaces over a grid.
    PhaseScan(ScanArgs),
    /// F(p, p + delta e) over a grid.
    FidelityScan {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, default_value = "ly")]
        direction: String,
    },
    /// Quantum geometric tensor at one point.
    Qgt,
    /// Fidelity and pair-excitation overlap around the point.
    OverlapScan {
        /// Two axes, e.g. lx,ly.
        #[arg(long, default_value = "lx,ly")]
        plane: String,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
    /// Loschmidt echo after quenching to (lx2, ly2, h2).
    Quench,
    /// Revival times of the echo.
    Revivals {
        /// Also list sub-threshold peaks before the first revival.
        #[arg(long)]
        peaks: bool,
    },
    /// Maximal group velocity.
    Velocity,
    /// Compares closed forms with exact diagonalization.
    OracleCheck,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: EXIT_USAGE, message: e.to_string() }
    }
}

type Outcome = Result<(Dataset, Flags), Failure>;

fn point(c: &Common) -> Result<CouplingPoint, Error> {
    CouplingPoint::new(c.lx, c.ly, c.h)
}

fn second_point(c: &Common) -> Result<CouplingPoint, Error> {
    CouplingPoint::new(c.lx2.unwrap_or(c.lx), c.ly2.unwrap_or(c.ly), c.h2.unwrap_or(c.h))
}

fn sector(c: &Common) -> Result<ParitySector, Error> {
    ParitySector::from_q(c.sector)
}

fn metadata(command: &str, c: &Common) -> Metadata {
    Metadata::now(serde_json::json!({ "command": command, "config": c }))
}

fn schema(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn point_cells(p: &CouplingPoint) -> Vec<Value> {
    vec![p.lambda_x.into(), p.lambda_y.into(), p.h.into()]
}

fn build_plan(quantity: Quantity, args: &ScanArgs, c: &Common) -> Result<ScanPlan, Error> {
    let mut text = format!(
        "quantity = {quantity}\nlx = {}\nly = {}\nh = {}\nN = {}\nsector = {}\nresolution = {}\ntol = {}\nt_max = {}\n",
        c.lx,
        c.ly,
        c.h,
        c.n.unwrap_or(100),
        c.sector,
        c.resolution,
        c.tol,
        c.t_max
    );
    for (key, v) in [("lx2", c.lx2), ("ly2", c.ly2), ("h2", c.h2), ("dt", c.dt)] {
        if let Some(v) = v {
            text.push_str(&format!("{key} = {v}\n"));
        }
    }
    for a in &args.axes {
        text.push_str(&format!("axis = {a}\n"));
    }
    if let Some(path) = &args.plan {
        let body = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
        text.push_str(&body);
        text.push('\n');
    }
    ScanPlan::parse(&text)
}

fn scan(quantity: Quantity, args: &ScanArgs, c: &Common, extra: impl FnOnce(&mut ScanPlan)) -> Outcome {
    let mut plan = build_plan(quantity, args, c)?;
    extra(&mut plan);
    plan.validate()?;
    eprintln!("plan: {}", serde_json::to_string(&plan).unwrap_or_default());
    let ds = run_scan(&plan)?;
    let flags_col = ds.column("flags").expect("scan datasets carry flags");
    let all_degenerate = !ds.rows.is_empty()
        && ds.rows.iter().all(|r| r[flags_col].as_str().and_then(Flags::parse).is_some_and(|f| f.contains(Flags::DEGENERATE)));
    Ok((ds, if all_degenerate { Flags::DEGENERATE } else { Flags::empty() }))
}

fn run(command: &Command, c: &Common) -> Outcome {
    let n = c.n.unwrap_or(100);
    match command {
        Command::Spectrum => {
            let table = mode_table(&momentum_grid(n, sector(c)?)?, &point(c)?);
            let mut ds = Dataset::new(
                schema(&["kind", "k", "epsilon", "delta", "energy", "theta", "occupied", "flags"]),
                metadata("spectrum", c),
            );
            for r in &table.rows {
                let f = if r.gapless { Flags::GAPLESS } else { Flags::empty() };
                ds.push(vec![
                    "paired".into(),
                    r.k.into(),
                    r.epsilon.into(),
                    r.delta.into(),
                    r.energy.into(),
                    r.theta.into(),
                    "".into(),
                    f.to_string().into(),
                ])?;
            }
            for u in &table.unpaired {
                let nan = Value::Float(f64::NAN);
                ds.push(vec![
                    "unpaired".into(),
                    u.k.into(),
                    u.epsilon.into(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    u.occupied.into(),
                    table.flags.to_string().into(),
                ])?;
            }
            Ok((ds, table.flags & Flags::DEGENERATE))
        }
        Command::Gap => {
            let p = point(c)?;
            let (k, g) = gap_minimum(&p, c.resolution);
            let mut ds = Dataset::new(schema(&["lx", "ly", "h", "k", "gap"]), metadata("gap", c));
            ds.push(point_cells(&p).into_iter().chain([k.into(), g.into()]).collect())?;
            Ok((ds, Flags::empty()))
        }
        Command::Classify => {
            let p = point(c)?;
            let opts = ClassifyOptions { tol: c.tol, resolution: c.resolution, ..ClassifyOptions::default() };
            let r = classify_with(&p, &opts);
            let names = r.surfaces.iter().map(|s| s.name()).collect::<Vec<_>>().join("|");
            let multi = r.surfaces.contains(&CriticalSurface::MulticriticalLine);
            let mut ds = Dataset::new(
                schema(&["lx", "ly", "h", "gap", "is_gapless", "surfaces", "multicritical"]),
                metadata("classify", c),
            );
            ds.push(
                point_cells(&p)
                    .into_iter()
                    .chain([r.gap_estimate.into(), r.is_gapless.into(), names.into(), multi.into()])
                    .collect(),
            )?;
            Ok((ds, Flags::empty()))
        }
        Command::PhaseScan(args) => scan(Quantity::Classify, args, c, |_| {}),
        Command::FidelityScan { scan: args, delta, direction } => {
            let direction: Axis = direction.parse()?;
            scan(Quantity::FidelityStep, args, c, |plan| {
                plan.delta = *delta;
                plan.direction = direction;
            })
        }
        Command::Qgt => {
            let t = quantum_geometric_tensor(&point(c)?, &momentum_grid(n, sector(c)?)?);
            let mut ds = Dataset::new(schema(&["axis", "lx", "ly", "h", "flags"]), metadata("qgt", c));
            for a in Axis::ALL {
                let row = t.entries[a.index()];
                ds.push(vec![
                    a.name().into(),
                    row[0].into(),
                    row[1].into(),
                    row[2].into(),
                    t.flags.to_string().into(),
                ])?;
            }
            Ok((ds, Flags::empty()))
        }
        Command::OverlapScan { plane, radius, steps } => {
            let axes: Vec<Axis> = plane.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
            let [a, b] = axes[..] else {
                return Err(Error::InvalidArgument(format!("plane needs two axes, got '{plane}'")).into());
            };
            let rows = overlap_scan(&point(c)?, (a, b), *radius, *steps, &momentum_grid(n, sector(c)?)?)?;
            let mut ds = Dataset::new(
                schema(&["lx", "ly", "h", "fidelity", "pair_overlap", "flags"]),
                metadata("overlap-scan", c),
            );
            for r in &rows {
                ds.push(
                    point_cells(&r.point)
                        .into_iter()
                        .chain([r.fidelity.into(), r.pair_overlap.into(), r.flags.to_string().into()])
                        .collect(),
                )?;
            }
            Ok((ds, Flags::empty()))
        }
        Command::Quench | Command::Revivals { .. } => {
            let protocol = QuenchProtocol::new(point(c)?, second_point(c)?, momentum_grid(n, sector(c)?)?);
            let times = match c.dt {
                Some(dt) => time_grid(c.t_max, dt)?,
                None => default_time_grid(&protocol, c.t_max)?,
            };
            let series = loschmidt_echo(&protocol, &times)?;
            if let Some(s) = series.stats {
                eprintln!(
                    "statistics: mean = {:.6}, std = {:.6}, window = [{:.4}, {:.4}], revivals = {}",
                    s.mean,
                    s.std,
                    s.window.0,
                    s.window.1,
                    series.revivals.len()
                );
            }
            let flags = series.flags & Flags::DEGENERATE;
            if let Command::Revivals { peaks } = command {
                let v = max_group_velocity(&protocol.final_point, c.resolution).velocity;
                if v > 0.0 {
                    eprintln!("revival time bound N/(2 v_max) = {:.4}", revival_time_bound(n, v)?);
                }
                let mut ds = Dataset::new(schema(&["kind", "t", "L"]), metadata("revivals", c));
                for r in &series.revivals {
                    ds.push(vec!["revival".into(), r.time.into(), r.value.into()])?;
                }
                if *peaks {
                    for r in quasiparticle_peak_scan(&protocol, c.t_max)? {
                        ds.push(vec!["peak".into(), r.time.into(), r.value.into()])?;
                    }
                }
                return Ok((ds, flags));
            }
            Ok((echo_dataset(&series, metadata("quench", c)), flags))
        }
        Command::Velocity => {
            let p = point(c)?;
            let v = max_group_velocity(&p, c.resolution);
            let mut ds = Dataset::new(schema(&["lx", "ly", "h", "k", "velocity"]), metadata("velocity", c));
            ds.push(point_cells(&p).into_iter().chain([v.k.into(), v.velocity.into()]).collect())?;
            Ok((ds, Flags::empty()))
        }
        Command::OracleCheck => {
            let n = c.n.unwrap_or(8);
            let report = oracle_suite(n, sector(c)?, &point(c)?, &second_point(c)?)?;
            let mut ds = Dataset::new(
                schema(&["check", "error", "tolerance", "passed", "flags"]),
                Metadata::now(serde_json::to_value(&report).expect("report serializes")),
            );
            for chk in &report.checks {
                ds.push(vec![
                    chk.name.clone().into(),
                    chk.error.into(),
                    chk.tolerance.into(),
                    chk.passed.into(),
                    chk.flags.to_string().into(),
                ])?;
            }
            if !report.passed() {
                emit(&ds, c)?;
                return Err(Failure { code: EXIT_ORACLE, message: "oracle check failed".into() });
            }
            Ok((ds, Flags::empty()))
        }
    }
}

fn emit(ds: &Dataset, c: &Common) -> Result<(), Failure> {
    let format: Format = c.format.parse()?;
    match &c.out {
        Some(path) => write_dataset(ds, format, path)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(ds.encode(format).as_bytes())
                .map_err(|e| Failure { code: EXIT_USAGE, message: format!("stdout: {e}") })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let name = format!("{:?}", cli.command);
    eprintln!(
        "config: command={} {}",
        name.split([' ', '(', '{']).next().unwrap_or(""),
        serde_json::to_string(&cli.common).unwrap_or_default()
    );
    let result = run(&cli.command, &cli.common).and_then(|(ds, flags)| emit(&ds, &cli.common).map(|_| flags));
    match result {
        Ok(flags) if flags.contains(Flags::DEGENERATE) => {
            eprintln!("warning: result flagged degenerate");
            ExitCode::from(EXIT_DEGENERATE)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
