//! Reproduction experiments: parameter sweeps over two-qubit families, the random-state
//! deviation histogram, and GHZ/W dynamics under amplitude damping.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::discord::{direction_grid, discord_numerical, ConditionalEntropy, MeasurementDirection, NumericalOptions};
use crate::error::{Error, Result};
use crate::qmat::{hermitian_eigenvalues, CMatrix, DensityMatrix};
use crate::states::{amplitude_damping, apply_channel_to, ghz, random_density, substream, two_qubit_matrix, w_state};
use crate::tol::STATE_TOL;

/// Sandwich tolerance: a bound below the numerical value by more than this is a violation.
pub const SANDWICH_TOL: f64 = 1e-7;

/// Width of a histogram bin, in units of the deviation.
pub const BIN_WIDTH: f64 = 1e-3;
/// Number of regular bins; deviations at or above `BIN_COUNT * BIN_WIDTH` go to the overflow bin.
pub const BIN_COUNT: usize = 60;

/// Formats a float with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Evenly spaced closed interval `[start, end]` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamRange {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl ParamRange {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if points == 0 || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "invalid range {start}..{end} with {points} points"
            )));
        }
        if points == 1 && start != end {
            return Err(Error::InvalidParameter(
                "a single-point range needs start == end".into(),
            ));
        }
        Ok(Self { start, end, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.end
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// Parses `start:end:points`.
impl FromStr for ParamRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidParameter(format!("expected start:end:points, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let end = parts[1].trim().parse().map_err(|_| bad())?;
        let points = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(start, end, points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub q_upper_bound: f64,
    pub q_numerical: f64,
    pub delta: f64,
}

/// Grid point dropped from a sweep because the state was not PSD.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPoint {
    pub parameter: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedPoint>,
}

impl Sweep {
    pub fn max_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "q_upper_bound", "q_numerical", "delta"])?;
        for r in &self.rows {
            w.write_record([
                fmt12(r.parameter),
                fmt12(r.q_upper_bound),
                fmt12(r.q_numerical),
                fmt12(r.delta),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coordinate of the general two-qubit family `(I I + x.s I + y.I s + sum t_i s_i s_i) / 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoQubitParameter {
    X1,
    X2,
    X3,
    Y1,
    Y2,
    Y3,
    T1,
    T2,
    T3,
}

impl TwoQubitParameter {
    fn slot(self) -> (usize, usize) {
        use TwoQubitParameter::*;
        match self {
            X1 => (0, 0),
            X2 => (0, 1),
            X3 => (0, 2),
            Y1 => (1, 0),
            Y2 => (1, 1),
            Y3 => (1, 2),
            T1 => (2, 0),
            T2 => (2, 1),
            T3 => (2, 2),
        }
    }
}

impl FromStr for TwoQubitParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use TwoQubitParameter::*;
        Ok(match s.to_ascii_lowercase().as_str() {
            "x1" => X1,
            "x2" => X2,
            "x3" => X3,
            "y1" => Y1,
            "y2" => Y2,
            "y3" => Y3,
            "t1" => T1,
            "t2" => T2,
            "t3" => T3,
            _ => return Err(Error::InvalidParameter(format!("unknown parameter {s:?}"))),
        })
    }
}

/// Correlation-tensor coefficients `[x, y, t]` of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoQubitCoefficients {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub t: [f64; 3],
}

impl TwoQubitCoefficients {
    pub fn x_state(x3: f64, y3: f64, t1: f64, t2: f64, t3: f64) -> Self {
        Self {
            x: [0.0, 0.0, x3],
            y: [0.0, 0.0, y3],
            t: [t1, t2, t3],
        }
    }

    pub fn with(mut self, p: TwoQubitParameter, value: f64) -> Self {
        let (row, col) = p.slot();
        match row {
            0 => self.x[col] = value,
            1 => self.y[col] = value,
            _ => self.t[col] = value,
        }
        self
    }

    pub fn matrix(&self) -> CMatrix {
        two_qubit_matrix(&self.x, &self.y, &self.t)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix())[0]
    }
}

/// Closed interval of `p` values inside `[lo, hi]` for which the state is PSD.
///
/// The minimum eigenvalue is concave along an affine family, so the feasible set is an
/// interval; its ends are located by bisection to `1e-13`.
pub fn psd_interval(base: &TwoQubitCoefficients, p: TwoQubitParameter, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let g = |v: f64| base.with(p, v).min_eigenvalue();
    // locate a feasible point by golden-section search on the concave minimum eigenvalue
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-12 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    let peak = 0.5 * (a + b);
    if g(peak) < 0.0 {
        return None;
    }
    let edge = |mut inside: f64, mut outside: f64| {
        if g(outside) >= 0.0 {
            return outside;
        }
        while (outside - inside).abs() > 1e-13 {
            let mid = 0.5 * (inside + outside);
            if g(mid) >= 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Some((edge(peak, lo), edge(peak, hi)))
}

fn sweep_points(
    base: &TwoQubitCoefficients,
    p: TwoQubitParameter,
    range: &ParamRange,
    opts: &NumericalOptions,
) -> Result<Sweep> {
    let values = range.values();
    let results: Vec<std::result::Result<SweepRow, SkippedPoint>> = values
        .par_iter()
        .map(|&v| {
            let skip = |e: Error| SkippedPoint {
                parameter: v,
                reason: e.to_string(),
            };
            let coeffs = base.with(p, v);
            let min_eig = coeffs.min_eigenvalue();
            if min_eig < -STATE_TOL {
                return Err(skip(Error::NotPsd(min_eig)));
            }
            let rho = DensityMatrix::new(coeffs.matrix(), vec![2, 2]).map_err(skip)?;
            let rep = discord_numerical(&rho, opts).map_err(skip)?;
            let q = rep.q_numerical.unwrap_or(f64::NAN);
            Ok(SweepRow {
                parameter: v,
                q_upper_bound: rep.q_upper_bound,
                q_numerical: q,
                delta: rep.delta.unwrap_or(f64::NAN),
            })
        })
        .collect();
    let mut sweep = Sweep {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(row) => sweep.rows.push(row),
            Err(s) => sweep.skipped.push(s),
        }
    }
    if sweep.rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no valid state in {}..{}",
            range.start, range.end
        )));
    }
    Ok(sweep)
}

/// Sweeps `t3` of the X-state family; non-PSD points are skipped and reported.
pub fn sweep_x_state(x3: f64, y3: f64, t1: f64, t2: f64, t3: &ParamRange, opts: &NumericalOptions) -> Result<Sweep> {
    let base = TwoQubitCoefficients::x_state(x3, y3, t1, t2, 0.0);
    sweep_points(&base, TwoQubitParameter::T3, t3, opts)
}

/// Sweeps one coordinate of the general two-qubit family.
pub fn sweep_general(
    base: &TwoQubitCoefficients,
    varying: TwoQubitParameter,
    range: &ParamRange,
    opts: &NumericalOptions,
) -> Result<Sweep> {
    sweep_points(base, varying, range, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramReport {
    pub sample_count: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub rank: usize,
    /// `BIN_COUNT + 1` left edges; the last bin is open-ended.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub frac_le_1e4: f64,
    pub frac_le_1e3: f64,
    pub frac_gt_6e3: f64,
    pub max_delta: f64,
    pub min_delta: f64,
    pub mean_delta: f64,
    /// Samples with `delta < -SANDWICH_TOL`.
    pub negative_count: usize,
}

impl HistogramReport {
    /// Bins deviations; slightly negative values land in the first bin.
    pub fn from_deltas(deltas: &[f64], seed: u64, dims: Vec<usize>, rank: usize) -> Self {
        let n = deltas.len();
        let mut counts = vec![0usize; BIN_COUNT + 1];
        for &d in deltas {
            let bin = if d <= 0.0 {
                0
            } else {
                ((d / BIN_WIDTH) as usize).min(BIN_COUNT)
            };
            counts[bin] += 1;
        }
        let frac = |pred: &dyn Fn(f64) -> bool| deltas.iter().filter(|&&d| pred(d)).count() as f64 / n.max(1) as f64;
        Self {
            sample_count: n,
            seed,
            dims,
            rank,
            bin_edges: (0..=BIN_COUNT).map(|k| k as f64 * BIN_WIDTH).collect(),
            counts,
            frac_le_1e4: frac(&|d| d <= 1e-4),
            frac_le_1e3: frac(&|d| d <= 1e-3),
            frac_gt_6e3: frac(&|d| d > 6e-3),
            max_delta: deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_delta: deltas.iter().copied().fold(f64::INFINITY, f64::min),
            mean_delta: deltas.iter().sum::<f64>() / n.max(1) as f64,
            negative_count: deltas.iter().filter(|&&d| d < -SANDWICH_TOL).count(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_lo", "bin_hi", "count"])?;
        for (k, &c) in self.counts.iter().enumerate() {
            let hi = if k == BIN_COUNT {
                f64::INFINITY
            } else {
                self.bin_edges[k] + BIN_WIDTH
            };
            w.write_record([fmt12(self.bin_edges[k]), fmt12(hi), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deviation `q_upper_bound - q_numerical` for `count` random states; sample `i` is drawn
/// from substream `i` of `seed`, so the result does not depend on scheduling.
pub fn random_deltas(
    count: usize,
    seed: u64,
    dims: &[usize],
    rank: usize,
    opts: &NumericalOptions,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    if dims.len() != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!("expected d x 2 dims, got {dims:?}")));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let rho = random_density(dims, rank, &mut substream(seed, i))?;
            Ok(discord_numerical(&rho, opts)?.delta.unwrap_or(f64::NAN))
        })
        .collect()
}

pub fn random_benchmark(
    count: usize,
    seed: u64,
    dims: &[usize],
    rank: usize,
    opts: &NumericalOptions,
) -> Result<HistogramReport> {
    let deltas = random_deltas(count, seed, dims, rank, opts)?;
    Ok(HistogramReport::from_deltas(&deltas, seed, dims.to_vec(), rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ghz,
    W,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz" => Ok(Family::Ghz),
            "w" => Ok(Family::W),
            _ => Err(Error::InvalidParameter(format!("unknown family {s:?}"))),
        }
    }
}

/// Which qubits are damped. The measured qubit is always the last one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DampTargets {
    /// Qubits `0..n-1`, the unmeasured side.
    AllButLast,
    /// Qubit `n-1`, the measured side.
    Last,
}

impl DampTargets {
    pub fn qubits(self, n: usize) -> Vec<usize> {
        match self {
            DampTargets::AllButLast => (0..n - 1).collect(),
            DampTargets::Last => vec![n - 1],
        }
    }
}

impl FromStr for DampTargets {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "first-n-1" | "all-but-last" => Ok(DampTargets::AllButLast),
            "last" => Ok(DampTargets::Last),
            _ => Err(Error::InvalidParameter(format!("unknown damping target {s:?}"))),
        }
    }
}

/// Damped `n`-qubit family state as a `2^(n-1) x 2` bipartite state.
pub fn damped_family_state(family: Family, n: usize, targets: DampTargets, p: f64) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 qubits, got {n}")));
    }
    let pure = match family {
        Family::Ghz => ghz(n)?,
        Family::W => w_state(n)?,
    };
    let damped = apply_channel_to(&pure, &amplitude_damping(p)?, &targets.qubits(n))?;
    damped.with_dims(vec![1 << (n - 1), 2])
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRow {
    pub p: f64,
    /// `(theta, min over phi of the measured conditional entropy)` on the grid.
    pub theta_profile: Vec<(f64, f64)>,
    /// Grid direction with the smallest measured conditional entropy.
    pub grid_argmin: MeasurementDirection,
    pub q_upper_bound: f64,
    pub q_numerical: f64,
    pub delta: f64,
    /// Axis of the constructed measurement, when it is projective.
    pub bound_axis: Option<[f64; 3]>,
}

pub fn ghz_w_evolution(
    family: Family,
    n: usize,
    targets: DampTargets,
    p_grid: &[f64],
    opts: &NumericalOptions,
) -> Result<Vec<EvolutionRow>> {
    let grid = direction_grid(opts.n_theta, opts.n_phi);
    p_grid
        .par_iter()
        .map(|&p| {
            let rho = damped_family_state(family, n, targets, p)?;
            let objective = ConditionalEntropy::new(&rho)?;
            let mut profile: Vec<(f64, f64)> = Vec::with_capacity(opts.n_theta);
            let mut best = (f64::INFINITY, grid[0]);
            for dir in &grid {
                let v = objective.at(dir);
                match profile.last_mut() {
                    Some(last) if last.0 == dir.theta => last.1 = last.1.min(v),
                    _ => profile.push((dir.theta, v)),
                }
                if v < best.0 {
                    best = (v, *dir);
                }
            }
            let rep = discord_numerical(&rho, opts)?;
            Ok(EvolutionRow {
                p,
                theta_profile: profile,
                grid_argmin: best.1,
                q_upper_bound: rep.q_upper_bound,
                q_numerical: rep.q_numerical.unwrap_or(f64::NAN),
                delta: rep.delta.unwrap_or(f64::NAN),
                bound_axis: rep.measurement.axis(),
            })
        })
        .collect()
}

pub fn write_evolution_csv<W: Write>(rows: &[EvolutionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "argmin_theta",
        "argmin_phi",
        "q_upper_bound",
        "q_numerical",
        "delta",
        "axis_x",
        "axis_y",
        "axis_z",
    ])?;
    for r in rows {
        let axis = r
            .bound_axis
            .map(|a| a.map(fmt12))
            .unwrap_or_else(|| [String::new(), String::new(), String::new()]);
        w.write_record([
            fmt12(r.p),
            fmt12(r.grid_argmin.theta),
            fmt12(r.grid_argmin.phi),
            fmt12(r.q_upper_bound),
            fmt12(r.q_numerical),
            fmt12(r.delta),
            axis[0].clone(),
            axis[1].clone(),
            axis[2].clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format surface: one line per `(p, theta)`.
pub fn write_surface_csv<W: Write>(rows: &[EvolutionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "theta", "cond_entropy"])?;
    for r in rows {
        for &(theta, v) in &r.theta_profile {
            w.write_record([fmt12(r.p), fmt12(theta), fmt12(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}
