use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qdiscord::bench::{
    fmt12, ghz_w_evolution, psd_interval, random_benchmark, sweep_general, sweep_x_state, write_evolution_csv,
    write_surface_csv, DampTargets, Family, ParamRange, Sweep, TwoQubitCoefficients, TwoQubitParameter, SANDWICH_TOL,
};
use qdiscord::chanext::{extract_map, marginal_spectral, write_map_csv};
use qdiscord::discord::{discord_numerical, discord_upper_bound_with_cutoff, BoundReport, NumericalOptions};
use qdiscord::io::{bipartition_last, load_state};
use qdiscord::tol::RANGE_CUTOFF_REL;
use qdiscord::{DensityMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "qdiscord",
    version,
    about = "Classical correlation and discord bounds for d x 2 states"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed for random ensembles
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Direction grid for the numerical optimizer, as THETAxPHI
    #[arg(long, global = true, default_value = "64x128", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Objective tolerance of the local refinement
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Relative eigenvalue cutoff for the inverse square root of the measured marginal
    #[arg(long, global = true, default_value_t = RANGE_CUTOFF_REL)]
    cutoff: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linear-entropy classical correlation, its measurement, and the discord bound
    Bound {
        /// State spec or density matrix JSON
        state: PathBuf,
        /// Write the extracted map (L and s) as CSV
        #[arg(long)]
        dump_map: Option<PathBuf>,
    },
    /// Discord bound next to the numerically minimized discord
    Discord { state: PathBuf },
    /// Sweep t3 of the X-state family
    SweepX {
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        x3: f64,
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        y3: f64,
        #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
        t1: f64,
        #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
        t2: f64,
        /// START:END:POINTS; defaults to 101 points over the PSD interval
        #[arg(long, allow_hyphen_values = true)]
        range: Option<ParamRange>,
    },
    /// Sweep one coordinate of the general two-qubit family
    SweepGeneral {
        #[arg(long, value_parser = parse_triple, default_value = "0.05,0.1,0.1", allow_hyphen_values = true)]
        x: [f64; 3],
        #[arg(long, value_parser = parse_triple, default_value = "0.15,0.25,0.2", allow_hyphen_values = true)]
        y: [f64; 3],
        #[arg(long, value_parser = parse_triple, default_value = "0.2,0.2,0", allow_hyphen_values = true)]
        t: [f64; 3],
        /// Varied coordinate: x1..x3, y1..y3 or t1..t3
        #[arg(long, default_value = "t3")]
        vary: TwoQubitParameter,
        /// START:END:POINTS; defaults to 101 points over the PSD interval
        #[arg(long, allow_hyphen_values = true)]
        range: Option<ParamRange>,
    },
    /// Deviation histogram over random states
    RandomBench {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// Run one million samples
        #[arg(long, conflicts_with = "count")]
        full: bool,
        /// Dimensions as DAx2
        #[arg(long, default_value = "2x2", value_parser = parse_grid)]
        dims: (usize, usize),
        /// Ginibre rank; full rank when omitted
        #[arg(long)]
        rank: Option<usize>,
    },
    /// GHZ or W states under amplitude damping
    GhzW {
        #[arg(long, default_value = "ghz")]
        family: Family,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// first (all qubits but the measured one) or last
        #[arg(long, default_value = "first")]
        targets: DampTargets,
        /// Damping probabilities as START:END:POINTS
        #[arg(long, default_value = "0:1:11")]
        p: ParamRange,
        /// Also write the theta profile as CSV
        #[arg(long)]
        surface: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected AxB, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad size {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad size {b:?}"))?;
    Ok((a, b))
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected three comma-separated numbers, got {s:?}"))
}

impl Common {
    fn numerical(&self) -> Result<NumericalOptions> {
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {} outside (0, 1)",
                self.cutoff
            )));
        }
        Ok(NumericalOptions {
            objective_tol: self.tol,
            range_cutoff_rel: self.cutoff,
            ..NumericalOptions::with_grid(self.grid.0, self.grid.1)
        })
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.sink()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn emit_csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.sink()?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axis_cells(axis: Option<[f64; 3]>) -> Vec<String> {
    match axis {
        Some(a) => a.iter().map(|&x| fmt12(x)).collect(),
        None => vec![String::new(); 3],
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

fn report_row(r: &BoundReport) -> Vec<String> {
    let mut row = vec![fmt12(r.mutual_info), fmt12(r.i2), fmt12(r.lambda_max)];
    row.extend(axis_cells(r.measurement.axis()));
    row.extend([fmt12(r.q_upper_bound), opt_cell(r.q_numerical), opt_cell(r.delta)]);
    row.push(opt_cell(r.best_direction.map(|d| d.theta)));
    row.push(opt_cell(r.best_direction.map(|d| d.phi)));
    row
}

const REPORT_HEADER: [&str; 11] = [
    "mutual_info",
    "i2",
    "lambda_max",
    "axis_x",
    "axis_y",
    "axis_z",
    "q_upper_bound",
    "q_numerical",
    "delta",
    "best_theta",
    "best_phi",
];

fn emit_report(common: &Common, r: &BoundReport) -> Result<()> {
    match common.format {
        Format::Json => common.emit_json(r),
        Format::Csv => common.emit_csv(&REPORT_HEADER, &[report_row(r)]),
    }
}

fn sandwich(delta: f64, what: &str) -> Result<()> {
    if delta < -SANDWICH_TOL {
        return Err(Error::Invariant(format!(
            "{what}: bound below the numerical discord by {:e}",
            -delta
        )));
    }
    Ok(())
}

fn full_range(base: &TwoQubitCoefficients, p: TwoQubitParameter, range: Option<ParamRange>) -> Result<ParamRange> {
    if let Some(r) = range {
        return Ok(r);
    }
    let (lo, hi) = psd_interval(base, p, -3.0, 3.0)
        .ok_or_else(|| Error::InvalidParameter("no PSD state along the swept coordinate".into()))?;
    ParamRange::new(lo, hi, 101)
}

fn emit_sweep(common: &Common, sweep: &Sweep) -> Result<()> {
    for s in &sweep.skipped {
        eprintln!("skipped {}: {}", s.parameter, s.reason);
    }
    match common.format {
        Format::Json => common.emit_json(sweep)?,
        Format::Csv => sweep.write_csv(common.sink()?)?,
    }
    sweep
        .rows
        .iter()
        .try_for_each(|r| sandwich(r.delta, &format!("parameter {}", r.parameter)))
}

fn load_d_by_2(path: &Path) -> Result<DensityMatrix> {
    let rho = bipartition_last(load_state(path)?)?;
    if rho.dims().len() != 2 || rho.dims()[1] != 2 {
        return Err(Error::DimensionMismatch(format!(
            "measured subsystem must be a qubit, got dims {:?}",
            rho.dims()
        )));
    }
    Ok(rho)
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let opts = common.numerical()?;
    match cli.command {
        Command::Bound { state, dump_map } => {
            let rho = load_d_by_2(&state)?;
            if let Some(path) = dump_map {
                let spec = marginal_spectral(&rho)?;
                let map = extract_map(&rho, &spec)?;
                write_map_csv(&map, BufWriter::new(File::create(path)?))?;
            }
            emit_report(common, &discord_upper_bound_with_cutoff(&rho, common.cutoff)?)
        }
        Command::Discord { state } => {
            let rho = load_d_by_2(&state)?;
            let report = discord_numerical(&rho, &opts)?;
            emit_report(common, &report)?;
            sandwich(report.delta.unwrap_or(0.0), "state")
        }
        Command::SweepX { x3, y3, t1, t2, range } => {
            let base = TwoQubitCoefficients::x_state(x3, y3, t1, t2, 0.0);
            let range = full_range(&base, TwoQubitParameter::T3, range)?;
            emit_sweep(common, &sweep_x_state(x3, y3, t1, t2, &range, &opts)?)
        }
        Command::SweepGeneral { x, y, t, vary, range } => {
            let base = TwoQubitCoefficients { x, y, t };
            let range = full_range(&base, vary, range)?;
            emit_sweep(common, &sweep_general(&base, vary, &range, &opts)?)
        }
        Command::RandomBench {
            count,
            full,
            dims,
            rank,
        } => {
            let count = if full { 1_000_000 } else { count };
            let dims = [dims.0, dims.1];
            let rank = rank.unwrap_or(dims[0] * dims[1]);
            let report = random_benchmark(count, common.seed, &dims, rank, &opts)?;
            match common.format {
                Format::Json => common.emit_json(&report)?,
                Format::Csv => report.write_csv(common.sink()?)?,
            }
            if report.negative_count > 0 {
                return Err(Error::Invariant(format!(
                    "{} samples with the bound below the numerical discord",
                    report.negative_count
                )));
            }
            Ok(())
        }
        Command::GhzW {
            family,
            n,
            targets,
            p,
            surface,
        } => {
            let rows = ghz_w_evolution(family, n, targets, &p.values(), &opts)?;
            if let Some(path) = surface {
                write_surface_csv(&rows, BufWriter::new(File::create(path)?))?;
            }
            match common.format {
                Format::Json => common.emit_json(&rows)?,
                Format::Csv => write_evolution_csv(&rows, common.sink()?)?,
            }
            rows.iter().try_for_each(|r| sandwich(r.delta, &format!("p = {}", r.p)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
