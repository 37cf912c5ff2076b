//! Closed-form linear-entropy classical correlation of `d x 2` states and the
//! projective measurement that attains it.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::chanext::{contract_qubit, extract_map, qubit_spectral, QubitSpectralData};
use crate::error::{Error, Result};
use crate::qmat::{
    identity, linear_entropy, partial_trace, pauli_coordinates, projector, qubit_from_bloch, CMatrix, DensityMatrix,
    C64,
};
use crate::tol::{PROB_FLOOR, RANGE_CUTOFF_REL};

/// Eigenvalues of `L^T L` closer than this to the largest one count as degenerate.
const LAMBDA_DEGENERACY: f64 = 1e-9;

/// Two-state decomposition `rho_B = p+ |psi+><psi+| + p- |psi-><psi-|` with Bloch
/// vectors `b_j = r_B + alpha_j n` along a fixed axis `n`. Index 0 is `+`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDecomposition {
    pub probabilities: [f64; 2],
    pub bloch: [[f64; 3]; 2],
    pub alphas: [f64; 2],
}

/// Two positive 2x2 operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoOutcomeMeasurement {
    ops: [CMatrix; 2],
    projective: bool,
}

impl TwoOutcomeMeasurement {
    pub fn new(m0: CMatrix, m1: CMatrix) -> Result<Self> {
        if m0.shape() != (2, 2) || m1.shape() != (2, 2) {
            return Err(Error::DimensionMismatch("measurement operators must be 2x2".into()));
        }
        let sum_err = max_abs(&(&m0 + &m1 - identity(2)));
        if sum_err > 1e-10 {
            return Err(Error::Invariant(format!(
                "measurement operators sum to identity only within {sum_err:e}"
            )));
        }
        for m in [&m0, &m1] {
            let min = crate::qmat::hermitian_eigenvalues(m)[0];
            if crate::qmat::hermitian_residual(m) > 1e-10 || min < -1e-10 {
                return Err(Error::Invariant(format!(
                    "measurement operator is not positive (min eigenvalue {min:e})"
                )));
            }
        }
        let projective = projective_residual(&m0, &m1) < 1e-9;
        Ok(Self {
            ops: [m0, m1],
            projective,
        })
    }

    /// `P+- = (I +- n . sigma) / 2` for a (normalized) direction `n`.
    pub fn projective_along(n: &[f64; 3]) -> Self {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let unit = [n[0] / norm, n[1] / norm, n[2] / norm];
        let plus = qubit_from_bloch(&unit);
        let minus = identity(2) - &plus;
        Self {
            ops: [plus, minus],
            projective: true,
        }
    }

    pub fn operators(&self) -> &[CMatrix; 2] {
        &self.ops
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }

    /// Largest of `|M^2 - M|` and `|M0 M1|`.
    pub fn idempotency_residual(&self) -> f64 {
        projective_residual(&self.ops[0], &self.ops[1])
    }

    /// Bloch direction `n` of `M0 = (I + n . sigma) / 2` for a projective measurement.
    pub fn axis(&self) -> Option<[f64; 3]> {
        self.projective.then(|| pauli_coordinates(&self.ops[0]))
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn projective_residual(m0: &CMatrix, m1: &CMatrix) -> f64 {
    max_abs(&(m0 * m0 - m0))
        .max(max_abs(&(m1 * m1 - m1)))
        .max(max_abs(&(m0 * m1)))
}

impl Serialize for TwoOutcomeMeasurement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let split = |m: &CMatrix| -> [[[f64; 2]; 2]; 2] {
            let mut out = [[[0.0; 2]; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    out[0][i][j] = m[(i, j)].re;
                    out[1][i][j] = m[(i, j)].im;
                }
            }
            out
        };
        let mut st = serializer.serialize_struct("TwoOutcomeMeasurement", 4)?;
        st.serialize_field("projective", &self.projective)?;
        st.serialize_field("axis", &self.axis())?;
        st.serialize_field("m0", &split(&self.ops[0]))?;
        st.serialize_field("m1", &split(&self.ops[1]))?;
        st.end()
    }
}

/// Result of the closed-form linear-entropy classical correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinCorrResult {
    pub i2: f64,
    pub lambda_max: f64,
    /// Eigenvector of `L^T L` for `lambda_max`, in the eigenbasis frame of `rho_B`.
    pub optimal_axis: [f64; 3],
    /// Measurement on `B` in the computational basis.
    pub measurement: TwoOutcomeMeasurement,
}

/// Eigenvector for the largest eigenvalue of a symmetric 3x3 matrix. Within a degenerate
/// top eigenspace the vector with the largest overlap with x, then y, then z is chosen.
pub fn top_eigenvector(m: &Matrix3<f64>) -> (f64, [f64; 3]) {
    let eig = SymmetricEigen::new(*m);
    let top = eig.eigenvalues.max();
    let space: Vec<Vector3<f64>> = (0..3)
        .filter(|&k| top - eig.eigenvalues[k] <= LAMBDA_DEGENERACY)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    for axis in 0..3 {
        let e = Vector3::ith(axis, 1.0);
        let proj: Vector3<f64> = space.iter().map(|v| v * v.dot(&e)).sum();
        if proj.norm() > 1e-8 {
            let v = proj.normalize();
            return (top, [v[0], v[1], v[2]]);
        }
    }
    unreachable!("a non-empty eigenspace overlaps some coordinate axis")
}

/// Decomposition of the qubit state with Bloch vector `r_b` into two pure states
/// displaced from `r_b` along `axis`.
pub fn optimal_decomposition(r_b: &[f64; 3], axis: &[f64; 3]) -> Result<OptimalDecomposition> {
    let r = Vector3::from_column_slice(r_b);
    if r.norm() > 1.0 + 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "Bloch vector norm {} exceeds 1",
            r.norm()
        )));
    }
    let n = Vector3::from_column_slice(axis);
    if n.norm() == 0.0 {
        return Err(Error::InvalidParameter("zero decomposition axis".into()));
    }
    let n = n.normalize();
    let along = n.dot(&r);
    let disc = (along * along + 1.0 - r.norm_squared()).max(0.0).sqrt();
    let alphas = [-along + disc, -along - disc];
    let probabilities = if alphas[0] - alphas[1] > 0.0 {
        let p_plus = -alphas[1] / (alphas[0] - alphas[1]);
        [p_plus, 1.0 - p_plus]
    } else {
        [0.5, 0.5]
    };
    let b = |a: f64| {
        let v = r + n * a;
        [v[0], v[1], v[2]]
    };
    Ok(OptimalDecomposition {
        probabilities,
        bloch: [b(alphas[0]), b(alphas[1])],
        alphas,
    })
}

/// `M_j = rho^{-1/2} p_j |psi_j><psi_j| rho^{-1/2}` with the inverse taken on the range
/// (eigenvalues above `cutoff_rel` times the largest).
pub fn povm_from_decomposition(
    rho_b: &DensityMatrix,
    dec: &OptimalDecomposition,
    cutoff_rel: f64,
) -> Result<TwoOutcomeMeasurement> {
    if rho_b.dim() != 2 {
        return Err(Error::DimensionMismatch("decomposed state must be a qubit".into()));
    }
    let parts: Vec<CMatrix> = (0..2)
        .map(|j| qubit_from_bloch(&dec.bloch[j]) * C64::from(dec.probabilities[j]))
        .collect();
    let residual = max_abs(&(&parts[0] + &parts[1] - rho_b.matrix()));
    if residual > 1e-9 {
        return Err(Error::InconsistentDecomposition(residual));
    }
    let inv = crate::qmat::inv_sqrt_on_range(rho_b.matrix(), cutoff_rel)?;
    let hermitize = |m: CMatrix| (&m + m.adjoint()) * C64::from(0.5);
    let m0 = hermitize(&inv * &parts[0] * &inv);
    let m1 = hermitize(&inv * &parts[1] * &inv);
    TwoOutcomeMeasurement::new(m0, m1)
}

/// Measurement on `B` that steers the purifying qubit into `m`'s effects.
///
/// Steering `B'` of `sum sqrt(l_i) |phi_i>|phi_i>` by an effect `E` on `B` yields
/// `sqrt(D) E~^T sqrt(D)` in the eigenbasis, so `E = U conj(U^H M U) U^H`.
fn mirror_to_measured_side(m: &CMatrix, spec: &QubitSpectralData) -> CMatrix {
    let u = &spec.eigenvectors;
    let in_frame = u.adjoint() * m * u;
    u * in_frame.map(|z| z.conj()) * u.adjoint()
}

/// `I2 = lambda_max(L^T L) S2(rho_B)` and its optimal projective measurement.
pub fn classical_corr_linear(rho_ab: &DensityMatrix) -> Result<LinCorrResult> {
    classical_corr_linear_with_cutoff(rho_ab, RANGE_CUTOFF_REL)
}

/// [`classical_corr_linear`] with an explicit relative eigenvalue cutoff for `rho_B^{-1/2}`.
pub fn classical_corr_linear_with_cutoff(rho_ab: &DensityMatrix, cutoff_rel: f64) -> Result<LinCorrResult> {
    if !(cutoff_rel > 0.0 && cutoff_rel < 1.0) {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff_rel} outside (0, 1)")));
    }
    let dims = rho_ab.dims();
    if dims.len() != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a d x 2 state, got dims {dims:?}"
        )));
    }
    let rho_b = partial_trace(rho_ab, 1)?;
    let spec = qubit_spectral(&rho_b)?;

    if !spec.is_full_rank() {
        // pure marginal: the state is a product and nothing can be learned about A
        let m0 = projector(&spec.eigenvector(0));
        let m1 = projector(&spec.eigenvector(1));
        return Ok(LinCorrResult {
            i2: 0.0,
            lambda_max: 0.0,
            optimal_axis: [0.0, 0.0, 1.0],
            measurement: TwoOutcomeMeasurement::new(m0, m1)?,
        });
    }

    let map = extract_map(rho_ab, &spec)?;
    let (lambda_max, frame_axis) = top_eigenvector(&map.ltl());
    let lambda_max = lambda_max.max(0.0);
    let s2_b = linear_entropy(&rho_b);

    let rotation = spec.frame_rotation();
    let axis = rotation * Vector3::from_column_slice(&frame_axis);
    let r_b = pauli_coordinates(rho_b.matrix());
    let dec = optimal_decomposition(&r_b, &[axis[0], axis[1], axis[2]])?;
    let steering = povm_from_decomposition(&rho_b, &dec, cutoff_rel)?;
    let [s0, s1] = steering.operators();
    let m0 = mirror_to_measured_side(s0, &spec);
    let m1 = mirror_to_measured_side(s1, &spec);

    Ok(LinCorrResult {
        i2: lambda_max * s2_b,
        lambda_max,
        optimal_axis: frame_axis,
        measurement: TwoOutcomeMeasurement::new(m0, m1)?,
    })
}

/// `S2(rho_A) - sum_i p_i S2(rho_A|i)` evaluated directly at a two-outcome measurement on `B`.
pub fn i2_at_measurement(rho_ab: &DensityMatrix, m: &TwoOutcomeMeasurement) -> Result<f64> {
    let dims = rho_ab.dims();
    if dims.len() != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a d x 2 state, got dims {dims:?}"
        )));
    }
    let rho_a = partial_trace(rho_ab, 0)?;
    let mut conditional = 0.0;
    for op in m.operators() {
        let c = contract_qubit(rho_ab.matrix(), op);
        let p = crate::qmat::trace(&c).re;
        if p < PROB_FLOOR {
            continue;
        }
        let purity: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        conditional += 2.0 * (p - purity / p);
    }
    Ok(linear_entropy(&rho_a) - conditional)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{pauli_x, tensor, CVector, ONE, ZERO};
    use crate::states::{haar_unitary, make_state, random_density, substream, StateSpec};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn phi_plus() -> DensityMatrix {
        make_state(&StateSpec::BellDiagonal { c: [1.0, -1.0, 1.0] }).unwrap()
    }

    fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
        loop {
            let v: [f64; 3] = [
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-6 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn maximally_entangled_state() {
        let res = classical_corr_linear(&phi_plus()).unwrap();
        assert_abs_diff_eq!(res.lambda_max, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(res.i2, 1.0, epsilon = 1e-12);
        assert!(res.measurement.is_projective());
        let z = TwoOutcomeMeasurement::projective_along(&[0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(i2_at_measurement(&phi_plus(), &z).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_states_have_no_correlation() {
        let mut rng = substream(1, 0);
        let a = random_density(&[3], 3, &mut rng).unwrap();
        let b = random_density(&[2], 2, &mut rng).unwrap();
        let rho = DensityMatrix::new(tensor(a.matrix(), b.matrix()), vec![3, 2]).unwrap();
        let res = classical_corr_linear(&rho).unwrap();
        assert!(res.i2.abs() < 1e-12);
        for _ in 0..10 {
            let m = TwoOutcomeMeasurement::projective_along(&random_unit(&mut rng));
            assert!(i2_at_measurement(&rho, &m).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pure_marginal_uses_shortcut() {
        let a = random_density(&[3], 2, &mut substream(2, 0)).unwrap();
        let b = projector(&CVector::from_vec(vec![ONE, ZERO]));
        let rho = DensityMatrix::new(tensor(a.matrix(), &b), vec![3, 2]).unwrap();
        let res = classical_corr_linear(&rho).unwrap();
        assert_eq!(res.i2, 0.0);
        assert!(res.measurement.is_projective());
        assert_eq!(res.measurement.axis().unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn bell_diagonal_correlation_and_measurement() {
        for (c, k) in [([0.6, -0.2, 0.1], 0), ([0.1, -0.7, 0.3], 1), ([-0.2, 0.3, -0.5], 2)] {
            let rho = make_state(&StateSpec::BellDiagonal { c }).unwrap();
            let res = classical_corr_linear(&rho).unwrap();
            let cmax = c.iter().map(|x: &f64| x * x).fold(0.0, f64::max);
            assert_abs_diff_eq!(res.i2, cmax, epsilon = 1e-12);
            let axis = res.measurement.axis().unwrap();
            assert_abs_diff_eq!(axis[k].abs(), 1.0, epsilon = 1e-12);
        }
        // c1 dominant: (I +- sigma_x) / 2 exactly
        let rho = make_state(&StateSpec::BellDiagonal { c: [0.6, -0.2, 0.1] }).unwrap();
        let res = classical_corr_linear(&rho).unwrap();
        let plus = (identity(2) + pauli_x()) * C64::from(0.5);
        assert!(max_abs(&(&res.measurement.operators()[0] - &plus)) < 1e-12);
    }

    #[test]
    fn decomposition_examples() {
        let dec = optimal_decomposition(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dec.probabilities, [0.5, 0.5]);
        assert_eq!(dec.bloch, [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]);

        let dec = optimal_decomposition(&[0.0, 0.0, 0.5], &[1.0, 0.0, 0.0]).unwrap();
        let s = 0.75f64.sqrt();
        assert_abs_diff_eq!(dec.probabilities[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.bloch[0][0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.bloch[1][0], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.bloch[0][2], 0.5, epsilon = 1e-15);

        // pure: one displacement vanishes and the weight sits on the state itself
        let dec = optimal_decomposition(&[0.0, 0.6, 0.8], &[0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(dec.alphas[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dec.probabilities[0], 1.0, epsilon = 1e-15);

        assert!(optimal_decomposition(&[0.0, 0.0, 1.1], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn decomposition_invariants_random() {
        for i in 0..200u64 {
            let mut rng = substream(3, i);
            let dir = random_unit(&mut rng);
            let len: f64 = rng.random::<f64>().powf(1.0 / 3.0);
            let r = [dir[0] * len, dir[1] * len, dir[2] * len];
            let axis = random_unit(&mut rng);
            let dec = optimal_decomposition(&r, &axis).unwrap();
            assert_abs_diff_eq!(dec.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            for j in 0..2 {
                let b = dec.bloch[j];
                assert_abs_diff_eq!((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt(), 1.0, epsilon = 1e-10);
            }
            for (k, rk) in r.iter().enumerate() {
                let mix = dec.probabilities[0] * dec.bloch[0][k] + dec.probabilities[1] * dec.bloch[1][k];
                assert_abs_diff_eq!(mix, *rk, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn povm_examples() {
        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        let dec = optimal_decomposition(&[0.0; 3], &[0.0, 0.0, 1.0]).unwrap();
        let m = povm_from_decomposition(&mixed, &dec, RANGE_CUTOFF_REL).unwrap();
        assert!(m.is_projective());
        assert!(max_abs(&(&m.operators()[0] - qubit_from_bloch(&[0.0, 0.0, 1.0]))) < 1e-12);

        let rho = DensityMatrix::new(qubit_from_bloch(&[0.0, 0.0, 0.5]), vec![2]).unwrap();
        let dec = optimal_decomposition(&[0.0, 0.0, 0.5], &[1.0, 0.0, 0.0]).unwrap();
        let m = povm_from_decomposition(&rho, &dec, RANGE_CUTOFF_REL).unwrap();
        assert!(m.is_projective());
        assert!(m.idempotency_residual() < 1e-10);

        let wrong = optimal_decomposition(&[0.0, 0.0, 0.2], &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            povm_from_decomposition(&rho, &wrong, RANGE_CUTOFF_REL),
            Err(Error::InconsistentDecomposition(_))
        ));
    }

    #[test]
    fn measurement_validation() {
        let half = identity(2) * C64::from(0.5);
        let m = TwoOutcomeMeasurement::new(half.clone(), half.clone()).unwrap();
        assert!(!m.is_projective());
        assert!(m.axis().is_none());
        assert!(TwoOutcomeMeasurement::new(half.clone(), identity(2)).is_err());
        let neg = identity(2) * C64::from(-0.5);
        assert!(TwoOutcomeMeasurement::new(neg, identity(2) * C64::from(1.5)).is_err());
    }

    #[test]
    fn formula_matches_direct_evaluation() {
        for d in [2usize, 3, 4] {
            for i in 0..500u64 {
                let rho = random_density(&[d, 2], 2 * d, &mut substream(40 + d as u64, i)).unwrap();
                let res = classical_corr_linear(&rho).unwrap();
                let direct = i2_at_measurement(&rho, &res.measurement).unwrap();
                assert!((direct - res.i2).abs() < 1e-9, "d={d} i={i}: {direct} vs {}", res.i2);
                assert!(res.measurement.idempotency_residual() < 1e-9);
                let s2b = linear_entropy(&partial_trace(&rho, 1).unwrap());
                assert!(res.i2 >= 0.0 && res.i2 <= s2b + 1e-10);
            }
        }
    }

    #[test]
    fn mixed_rank_states_attain_formula() {
        for rank in 1..=3 {
            for i in 0..50u64 {
                let rho = random_density(&[3, 2], rank, &mut substream(60 + rank as u64, i)).unwrap();
                let res = classical_corr_linear(&rho).unwrap();
                let direct = i2_at_measurement(&rho, &res.measurement).unwrap();
                assert!((direct - res.i2).abs() < 1e-9, "rank={rank} i={i}");
            }
        }
    }

    #[test]
    fn degenerate_top_eigenspace_choice_does_not_matter() {
        // Werner-like state: L^T L proportional to identity.
        let rho = make_state(&StateSpec::BellDiagonal { c: [0.4, -0.4, 0.4] }).unwrap();
        let res = classical_corr_linear(&rho).unwrap();
        assert_eq!(res.optimal_axis, [1.0, 0.0, 0.0]);
        for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, 0.8]] {
            let m = TwoOutcomeMeasurement::projective_along(&axis);
            assert_abs_diff_eq!(i2_at_measurement(&rho, &m).unwrap(), res.i2, epsilon = 1e-12);
        }
        let (top, v) = top_eigenvector(&Matrix3::from_diagonal(&Vector3::new(0.2, 0.5, 0.5)));
        assert_eq!(top, 0.5);
        assert_eq!(v, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn local_unitary_invariance() {
        for i in 0..100u64 {
            let mut rng = substream(70, i);
            let rho = random_density(&[3, 2], 6, &mut rng).unwrap();
            let u = tensor(&haar_unitary(3, &mut rng), &haar_unitary(2, &mut rng));
            let a = classical_corr_linear(&rho).unwrap().i2;
            let b = classical_corr_linear(&rho.conjugate_by(&u).unwrap()).unwrap().i2;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn no_random_measurement_beats_formula() {
        for i in 0..40u64 {
            let mut rng = substream(80, i);
            let rho = random_density(&[2, 2], 4, &mut rng).unwrap();
            let best = classical_corr_linear(&rho).unwrap().i2;
            for _ in 0..100 {
                let m = TwoOutcomeMeasurement::projective_along(&random_unit(&mut rng));
                assert!(i2_at_measurement(&rho, &m).unwrap() <= best + 1e-9);
            }
        }
    }
}
