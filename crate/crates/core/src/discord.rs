//! Von Neumann discord of `d x 2` states: the upper bound obtained at the optimal
//! linear-entropy measurement, a brute-force numerical minimization over projective
//! measurements, and the derived entanglement-of-formation bound for rank-2 states.

use serde::Serialize;

use crate::chanext::contract_qubit;
use crate::error::{Error, Result};
use crate::lin_corr::{classical_corr_linear, classical_corr_linear_with_cutoff, TwoOutcomeMeasurement};
use crate::qmat::{
    eigenvalues_2x2, herm_eig, hermitian_eigenvalues, partial_trace, paulis, reduced_state, von_neumann_entropy,
    CMatrix, CVector, DensityMatrix, C64,
};
use crate::simplex::{self, SimplexOptions};
use crate::tol::{PROB_FLOOR, RANGE_CUTOFF_REL};

/// Eigenvalues above this count toward the rank in [`eof_upper_bound`].
pub const EOF_RANK_CUTOFF: f64 = 1e-10;

/// Projective measurement direction on the Bloch sphere, `P+- = (I +- n . sigma) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasurementDirection {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "direction angles out of range: theta={theta}, phi={phi}"
            )));
        }
        Ok(Self {
            theta,
            phi: phi.rem_euclid(std::f64::consts::TAU),
        })
    }

    pub fn from_axis(n: &[f64; 3]) -> Self {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let z = (n[2] / norm).clamp(-1.0, 1.0);
        Self {
            theta: z.acos(),
            phi: n[1].atan2(n[0]).rem_euclid(std::f64::consts::TAU),
        }
    }

    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn measurement(&self) -> TwoOutcomeMeasurement {
        TwoOutcomeMeasurement::projective_along(&self.axis())
    }
}

/// Discord bound, optionally paired with the numerical optimum.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub mutual_info: f64,
    pub i2: f64,
    pub lambda_max: f64,
    pub q_upper_bound: f64,
    pub q_numerical: Option<f64>,
    pub delta: Option<f64>,
    pub measurement: TwoOutcomeMeasurement,
    pub best_direction: Option<MeasurementDirection>,
}

/// `p S(C / p)` for an unnormalized conditional state `C` with eigenvalues `mu`, `p = sum mu`.
fn weighted_entropy(mu: &[f64]) -> f64 {
    let p: f64 = mu.iter().sum();
    if p < PROB_FLOOR {
        return 0.0;
    }
    let mut acc = p * p.log2();
    for &m in mu {
        if m > 0.0 {
            acc -= m * m.log2();
        }
    }
    acc.max(0.0)
}

fn weighted_entropy_of(c: &CMatrix) -> f64 {
    if c.nrows() == 2 {
        let [lo, hi] = eigenvalues_2x2(c[(0, 0)].re, c[(1, 1)].re, (c[(0, 1)] + c[(1, 0)].conj()) * 0.5);
        weighted_entropy(&[lo, hi])
    } else {
        weighted_entropy(&hermitian_eigenvalues(c))
    }
}

fn check_d_by_2(rho: &DensityMatrix) -> Result<()> {
    let dims = rho.dims();
    if dims.len() != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a d x 2 state, got dims {dims:?}"
        )));
    }
    Ok(())
}

/// `I = S(A) + S(B) - S(AB)` for a bipartite state.
pub fn mutual_information(rho_ab: &DensityMatrix) -> Result<f64> {
    if rho_ab.dims().len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a bipartite state, got dims {:?}",
            rho_ab.dims()
        )));
    }
    let s_a = von_neumann_entropy(&partial_trace(rho_ab, 0)?);
    let s_b = von_neumann_entropy(&partial_trace(rho_ab, 1)?);
    Ok(s_a + s_b - von_neumann_entropy(rho_ab))
}

/// `sum_i p_i S(rho_A|i)` after the two-outcome measurement `m` on `B`.
pub fn measured_cond_entropy(rho_ab: &DensityMatrix, m: &TwoOutcomeMeasurement) -> Result<f64> {
    check_d_by_2(rho_ab)?;
    Ok(m.operators()
        .iter()
        .map(|op| weighted_entropy_of(&contract_qubit(rho_ab.matrix(), op)))
        .sum())
}

/// Measured conditional entropy as a function of the projective direction, with the
/// partial contractions against `I, sigma_x, sigma_y, sigma_z` precomputed.
#[derive(Debug, Clone)]
pub struct ConditionalEntropy {
    blocks: [CMatrix; 4],
}

impl ConditionalEntropy {
    pub fn new(rho_ab: &DensityMatrix) -> Result<Self> {
        check_d_by_2(rho_ab)?;
        let [sx, sy, sz] = paulis();
        let id = crate::qmat::identity(2);
        let blocks = [id, sx, sy, sz].map(|p| contract_qubit(rho_ab.matrix(), &p) * C64::from(0.5));
        Ok(Self { blocks })
    }

    /// Value at `P+- = (I +- n . sigma) / 2` for a unit vector `n`.
    pub fn at_axis(&self, n: &[f64; 3]) -> f64 {
        let [r0, rx, ry, rz] = &self.blocks;
        let shift = rx * C64::from(n[0]) + ry * C64::from(n[1]) + rz * C64::from(n[2]);
        weighted_entropy_of(&(r0 + &shift)) + weighted_entropy_of(&(r0 - &shift))
    }

    pub fn at(&self, dir: &MeasurementDirection) -> f64 {
        self.at_axis(&dir.axis())
    }
}

/// Grid plus local refinement settings for [`discord_numerical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalOptions {
    pub n_theta: usize,
    pub n_phi: usize,
    pub objective_tol: f64,
    pub angle_tol: f64,
    /// Number of well-separated grid minima refined locally.
    pub starts: usize,
    pub max_iter: usize,
    /// Relative eigenvalue cutoff used when building the bound's measurement.
    pub range_cutoff_rel: f64,
}

impl Default for NumericalOptions {
    fn default() -> Self {
        Self {
            n_theta: 64,
            n_phi: 128,
            objective_tol: 1e-9,
            angle_tol: 1e-6,
            starts: 3,
            max_iter: 2000,
            range_cutoff_rel: RANGE_CUTOFF_REL,
        }
    }
}

impl NumericalOptions {
    pub fn with_grid(n_theta: usize, n_phi: usize) -> Self {
        Self {
            n_theta,
            n_phi,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_theta < 8 || self.n_phi < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid {}x{} is below the 8x8 minimum",
                self.n_theta, self.n_phi
            )));
        }
        if !(self.objective_tol > 0.0 && self.angle_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Polar grid: `theta_i = pi i / (n_theta - 1)`, `phi_j = 2 pi j / n_phi`.
pub fn direction_grid(n_theta: usize, n_phi: usize) -> Vec<MeasurementDirection> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = std::f64::consts::PI * i as f64 / (n_theta - 1) as f64;
        let at_pole = i == 0 || i == n_theta - 1;
        for j in 0..if at_pole { 1 } else { n_phi } {
            let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
            out.push(MeasurementDirection { theta, phi });
        }
    }
    out
}

fn tangent_basis(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    // any vector not parallel to n
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let dot = helper[0] * n[0] + helper[1] * n[1] + helper[2] * n[2];
    let mut e1 = [helper[0] - dot * n[0], helper[1] - dot * n[1], helper[2] - dot * n[2]];
    let norm = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|x| *x /= norm);
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (e1, e2)
}

fn chart_point(n0: &[f64; 3], e1: &[f64; 3], e2: &[f64; 3], uv: &[f64; 2]) -> [f64; 3] {
    let v = [
        n0[0] + uv[0] * e1[0] + uv[1] * e2[0],
        n0[1] + uv[0] * e1[1] + uv[1] * e2[1],
        n0[2] + uv[0] * e1[2] + uv[1] * e2[2],
    ];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / norm, v[1] / norm, v[2] / norm]
}

/// Minimum of the measured conditional entropy over projective measurements on `B`.
/// Deterministic for fixed inputs.
pub fn minimize_conditional_entropy(
    rho_ab: &DensityMatrix,
    opts: &NumericalOptions,
) -> Result<(f64, MeasurementDirection)> {
    opts.validate()?;
    let objective = ConditionalEntropy::new(rho_ab)?;
    let grid = direction_grid(opts.n_theta, opts.n_phi);
    let mut scored: Vec<(f64, [f64; 3])> = grid
        .iter()
        .map(|d| {
            let n = d.axis();
            (objective.at_axis(&n), n)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    // n and -n give the same measurement; starts must differ by a few grid steps
    let step = std::f64::consts::PI / (opts.n_theta - 1) as f64;
    let separation = (3.0 * step).cos();
    let mut starts: Vec<[f64; 3]> = Vec::with_capacity(opts.starts);
    for (_, n) in &scored {
        if starts.len() >= opts.starts.max(1) {
            break;
        }
        let distinct = starts.iter().all(|s| {
            let dot = s[0] * n[0] + s[1] * n[1] + s[2] * n[2];
            dot.abs() < separation
        });
        if distinct {
            starts.push(*n);
        }
    }

    let simplex_opts = SimplexOptions {
        f_tol: opts.objective_tol,
        x_tol: opts.angle_tol,
        max_iter: opts.max_iter,
    };
    let (mut best_f, mut best_n) = scored[0];
    for n0 in &starts {
        let (e1, e2) = tangent_basis(n0);
        let res = simplex::minimize(
            |uv| objective.at_axis(&chart_point(n0, &e1, &e2, uv)),
            [0.0, 0.0],
            step,
            &simplex_opts,
        );
        if res.f < best_f {
            best_f = res.f;
            best_n = chart_point(n0, &e1, &e2, &res.x);
        }
    }
    Ok((best_f, MeasurementDirection::from_axis(&best_n)))
}

/// Upper bound on the discord, evaluated at the optimal linear-entropy measurement.
///
/// Uses `Q <= S(B) - S(AB) + sum_i p_i S(rho_A|i)`, which equals
/// `I(A:B) - [S(A) - sum_i p_i S(rho_A|i)]` without the cancellation.
pub fn discord_upper_bound(rho_ab: &DensityMatrix) -> Result<BoundReport> {
    discord_upper_bound_with_cutoff(rho_ab, RANGE_CUTOFF_REL)
}

pub fn discord_upper_bound_with_cutoff(rho_ab: &DensityMatrix, cutoff_rel: f64) -> Result<BoundReport> {
    check_d_by_2(rho_ab)?;
    let lin = classical_corr_linear_with_cutoff(rho_ab, cutoff_rel)?;
    let s_a = von_neumann_entropy(&partial_trace(rho_ab, 0)?);
    let s_b = von_neumann_entropy(&partial_trace(rho_ab, 1)?);
    let s_ab = von_neumann_entropy(rho_ab);
    let cond = measured_cond_entropy(rho_ab, &lin.measurement)?;
    Ok(BoundReport {
        mutual_info: s_a + s_b - s_ab,
        i2: lin.i2,
        lambda_max: lin.lambda_max,
        q_upper_bound: s_b - s_ab + cond,
        q_numerical: None,
        delta: None,
        measurement: lin.measurement,
        best_direction: None,
    })
}

/// Bound plus the numerically minimized discord and their difference.
pub fn discord_numerical(rho_ab: &DensityMatrix, opts: &NumericalOptions) -> Result<BoundReport> {
    let mut report = discord_upper_bound_with_cutoff(rho_ab, opts.range_cutoff_rel)?;
    let (min_cond, dir) = minimize_conditional_entropy(rho_ab, opts)?;
    let s_b = von_neumann_entropy(&partial_trace(rho_ab, 1)?);
    let s_ab = von_neumann_entropy(rho_ab);
    let q = s_b - s_ab + min_cond;
    report.q_numerical = Some(q);
    report.delta = Some(report.q_upper_bound - q);
    report.best_direction = Some(dir);
    Ok(report)
}

/// Discord of the Bell-diagonal state `(I I + sum c_i s_i s_i) / 4`: the bound expression
/// evaluated at the three Pauli measurements, minimized.
pub fn bell_diagonal_oracle(c: &[f64; 3]) -> Result<f64> {
    let weights = [
        (1.0 - c[0] - c[1] - c[2]) / 4.0,
        (1.0 - c[0] + c[1] + c[2]) / 4.0,
        (1.0 + c[0] - c[1] + c[2]) / 4.0,
        (1.0 + c[0] + c[1] - c[2]) / 4.0,
    ];
    if let Some(&min) = weights.iter().find(|&&w| w < -1e-12) {
        return Err(Error::NotPsd(min));
    }
    let rho = DensityMatrix::from_parts(crate::states::two_qubit_matrix(&[0.0; 3], &[0.0; 3], c), vec![2, 2])?;
    let s_ab = crate::qmat::shannon_bits(weights.iter().copied());
    let s_b = 1.0;
    let mut best = f64::INFINITY;
    for k in 0..3 {
        let mut n = [0.0; 3];
        n[k] = 1.0;
        let cond = measured_cond_entropy(&rho, &TwoOutcomeMeasurement::projective_along(&n))?;
        best = best.min(s_b - s_ab + cond);
    }
    Ok(best)
}

/// Upper bound on the entanglement of formation of a rank <= 2 state on `A (x) C`.
///
/// The state is purified with a single qubit `B`; the complementary classical
/// correlation of `rho_AB`, evaluated at the optimal linear-entropy measurement,
/// bounds `E(rho_AC) = S(A) - C(rho_AB)` from above.
pub fn eof_upper_bound(rho_ac: &DensityMatrix) -> Result<f64> {
    let dims = rho_ac.dims().to_vec();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a bipartite state, got dims {dims:?}"
        )));
    }
    let (values, vectors) = herm_eig(rho_ac.matrix())?;
    let rank = values.iter().filter(|&&v| v > EOF_RANK_CUTOFF).count();
    if rank > 2 {
        return Err(Error::RankTooHigh(rank));
    }
    let d = rho_ac.dim();
    // |Psi> = sum_k sqrt(mu_k) |u_k>_{AC} |k>_B, ordered (A, C, B)
    let mut psi = CVector::zeros(2 * d);
    for (slot, k) in [d - 1, d - 2].into_iter().enumerate() {
        let w = values[k].max(0.0).sqrt();
        for i in 0..d {
            psi[2 * i + slot] = vectors[(i, k)] * w;
        }
    }
    let abc = DensityMatrix::from_pure(&psi, vec![dims[0], dims[1], 2])?;
    let rho_ab = reduced_state(&abc, &[0, 2])?;
    let lin = classical_corr_linear(&rho_ab)?;
    measured_cond_entropy(&rho_ab, &lin.measurement)
}
