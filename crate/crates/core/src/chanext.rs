//! Purification of the measured qubit and extraction of the qubit-to-qudit map.
//!
//! A `d x 2` state is written as `(Lambda (x) id)(|V><V|)`, where `|V>` is the
//! symmetric purification of the qubit marginal and `Lambda` acts on the purifying
//! qubit. `Lambda` is stored in affine Bloch form: input Pauli coordinates are taken
//! in the eigenbasis of the qubit marginal, output coordinates in the generalized
//! Gell-Mann basis of the qudit.

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Error, Result};
use crate::qmat::{
    herm_eig, identity, partial_trace, pauli_coordinates, CMatrix, CVector, DensityMatrix, GeneratorBasis, C64, I, ZERO,
};
use crate::tol::RANK_CUTOFF;

/// Eigenvalue gap below which the qubit marginal counts as degenerate.
const DEGENERACY_GAP: f64 = 1e-12;

/// Ordered eigensystem of a qubit state, `lambda0 >= lambda1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitSpectralData {
    pub eigenvalues: [f64; 2],
    /// Columns are `|phi0>`, `|phi1>`.
    pub eigenvectors: CMatrix,
}

impl QubitSpectralData {
    pub fn eigenvector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn is_full_rank(&self) -> bool {
        self.eigenvalues[1] > RANK_CUTOFF
    }

    /// 3x3 rotation taking Pauli coordinates in the eigenbasis frame to
    /// computational-basis Pauli coordinates.
    pub fn frame_rotation(&self) -> Matrix3<f64> {
        let u = &self.eigenvectors;
        let mut r = Matrix3::zeros();
        for (k, p) in crate::qmat::paulis().iter().enumerate() {
            let rotated = u * p * u.adjoint();
            let coords = pauli_coordinates(&rotated);
            for j in 0..3 {
                r[(j, k)] = coords[j] / 2.0;
            }
        }
        r
    }
}

/// Fixes the global phase so the largest-magnitude component is real and positive.
fn fix_phase(v: &mut CVector) {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ZERO);
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

pub fn qubit_spectral(rho_b: &DensityMatrix) -> Result<QubitSpectralData> {
    if rho_b.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a qubit state, got dimension {}",
            rho_b.dim()
        )));
    }
    let (values, vectors) = herm_eig(rho_b.matrix())?;
    let (hi, lo) = (values[1], values[0].max(0.0));
    if hi - lo <= DEGENERACY_GAP {
        return Ok(QubitSpectralData {
            eigenvalues: [hi, lo],
            eigenvectors: identity(2),
        });
    }
    let mut phi0 = vectors.column(1).into_owned();
    let mut phi1 = vectors.column(0).into_owned();
    fix_phase(&mut phi0);
    fix_phase(&mut phi1);
    Ok(QubitSpectralData {
        eigenvalues: [hi, lo],
        eigenvectors: CMatrix::from_columns(&[phi0, phi1]),
    })
}

/// `|V> = sum_i sqrt(lambda_i) |phi_i>|phi_i>`, ordered purifier-first.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPurification {
    pub amplitudes: CVector,
}

pub fn symmetric_purify(spec: &QubitSpectralData) -> SymmetricPurification {
    let mut amplitudes = CVector::zeros(4);
    for i in 0..2 {
        let phi = spec.eigenvector(i);
        let w = spec.eigenvalues[i].max(0.0).sqrt();
        amplitudes += phi.kronecker(&phi) * C64::from(w);
    }
    SymmetricPurification { amplitudes }
}

/// `Tr_B[rho (I (x) m)]` for a `d x 2` state.
pub fn contract_qubit(rho: &CMatrix, m: &CMatrix) -> CMatrix {
    let da = rho.nrows() / 2;
    CMatrix::from_fn(da, da, |a, a2| {
        let mut acc = ZERO;
        for b in 0..2 {
            for b2 in 0..2 {
                acc += rho[(2 * a + b, 2 * a2 + b2)] * m[(b2, b)];
            }
        }
        acc
    })
}

/// Affine Bloch form of the qubit-to-qudit map.
///
/// With input Pauli coordinates `r` (eigenbasis frame) and `L_kj = Tr(Lambda(sigma_j) g_k) / 2`:
/// `Lambda((I + r . sigma) / 2) = [I + ((d / 2) L r + s) . g] / d`.
/// This scaling makes `lambda_max(L^T L) S2(rho_B)` the linear-entropy classical
/// correlation for every `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineQubitMap {
    pub l: DMatrix<f64>,
    pub s: Vec<f64>,
    pub basis: GeneratorBasis,
    /// Columns `|phi0>`, `|phi1>` defining the input Pauli axes.
    pub input_frame: CMatrix,
}

impl AffineQubitMap {
    pub fn output_dim(&self) -> usize {
        self.basis.dimension()
    }

    pub fn ltl(&self) -> Matrix3<f64> {
        let m = self.l.tr_mul(&self.l);
        Matrix3::from_fn(|i, j| m[(i, j)])
    }

    /// `Lambda` on an input Bloch vector given in the eigenbasis frame.
    pub fn apply_bloch(&self, r: &[f64; 3]) -> Result<CMatrix> {
        let d = self.output_dim();
        let half_d = d as f64 / 2.0;
        let coeffs: Vec<f64> = (0..self.l.nrows())
            .map(|k| half_d * (0..3).map(|j| self.l[(k, j)] * r[j]).sum::<f64>() + self.s[k])
            .collect();
        Ok((identity(d) + self.basis.combine(&coeffs)?) / C64::from(d as f64))
    }

    /// Linear extension of `Lambda` to any 2x2 operator on the purifying qubit,
    /// given in the computational basis.
    pub fn apply_operator(&self, x: &CMatrix) -> Result<CMatrix> {
        let d = self.output_dim();
        let frame = self.input_frame.adjoint() * x * &self.input_frame;
        let a0 = (frame[(0, 0)] + frame[(1, 1)]) * 0.5;
        let coords = pauli_coordinates(&frame);
        let imag = {
            // pauli_coordinates returns real parts; non-Hermitian inputs need both
            let ih = frame.map(|z| z * -I);
            pauli_coordinates(&ih)
        };
        let mut out = (identity(d) + self.basis.combine(&self.s)?) / C64::from(d as f64) * (a0 * 2.0);
        for j in 0..3 {
            let cj = C64::new(coords[j], imag[j]) * 0.5;
            if cj == ZERO {
                continue;
            }
            let col: Vec<f64> = self.l.column(j).iter().copied().collect();
            out += self.basis.combine(&col)? * cj;
        }
        Ok(out)
    }
}

/// Extracts `Lambda` from a full-rank `d x 2` state.
pub fn extract_map(rho_ab: &DensityMatrix, spec: &QubitSpectralData) -> Result<AffineQubitMap> {
    let dims = rho_ab.dims();
    if dims.len() != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a d x 2 state, got dims {dims:?}"
        )));
    }
    if !spec.is_full_rank() {
        return Err(Error::RankDeficient(spec.eigenvalues[1]));
    }
    let da = dims[0];
    let basis = crate::qmat::gellmann_basis(da)?;
    let lam = spec.eigenvalues;

    // images[i][j] = Lambda(|phi_i><phi_j|)
    let mut images: Vec<Vec<CMatrix>> = Vec::with_capacity(2);
    for i in 0..2 {
        let mut row = Vec::with_capacity(2);
        for j in 0..2 {
            let probe = spec.eigenvector(j) * spec.eigenvector(i).adjoint();
            let k = contract_qubit(rho_ab.matrix(), &probe);
            row.push(k / C64::from((lam[i] * lam[j]).sqrt()));
        }
        images.push(row);
    }
    let half_identity = (&images[0][0] + &images[1][1]) * C64::from(0.5);
    let sx = &images[0][1] + &images[1][0];
    let sy = &images[0][1] * (-I) + &images[1][0] * I;
    let sz = &images[0][0] - &images[1][1];

    let half_d = da as f64 / 2.0;
    let s = basis
        .traces_with(&half_identity)?
        .into_iter()
        .map(|t| half_d * t)
        .collect();
    let mut l = DMatrix::zeros(basis.len(), 3);
    for (j, img) in [sx, sy, sz].iter().enumerate() {
        for (k, t) in basis.traces_with(img)?.into_iter().enumerate() {
            l[(k, j)] = t / 2.0;
        }
    }
    Ok(AffineQubitMap {
        l,
        s,
        basis,
        input_frame: spec.eigenvectors.clone(),
    })
}

/// Applies `map` to a qubit state given in the computational basis of the purifier.
pub fn apply_map(map: &AffineQubitMap, qubit: &DensityMatrix) -> Result<DensityMatrix> {
    if qubit.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "map input must be a qubit, got dimension {}",
            qubit.dim()
        )));
    }
    let out = map.apply_operator(qubit.matrix())?;
    DensityMatrix::from_parts(out, vec![map.output_dim()])
}

/// Reconstructs `(Lambda (x) id)(|V><V|)` on `A (x) B`.
pub fn reconstruct_state(map: &AffineQubitMap, spec: &QubitSpectralData) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(2 * map.output_dim(), 2 * map.output_dim());
    for i in 0..2 {
        for j in 0..2 {
            let w = (spec.eigenvalues[i] * spec.eigenvalues[j]).sqrt();
            let outer = spec.eigenvector(i) * spec.eigenvector(j).adjoint();
            let image = map.apply_operator(&outer)?;
            out += crate::qmat::tensor(&image, &outer) * C64::from(w);
        }
    }
    Ok(out)
}

/// Spectral data of the qubit marginal of a `d x 2` state.
pub fn marginal_spectral(rho_ab: &DensityMatrix) -> Result<QubitSpectralData> {
    qubit_spectral(&partial_trace(rho_ab, 1)?)
}

/// Writes `L` and `s` as CSV rows `k,L_k1,L_k2,L_k3,s_k`.
pub fn write_map_csv<W: std::io::Write>(map: &AffineQubitMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "L_x", "L_y", "L_z", "s"])?;
    for k in 0..map.l.nrows() {
        w.write_record(&[
            k.to_string(),
            format!("{:.11e}", map.l[(k, 0)]),
            format!("{:.11e}", map.l[(k, 1)]),
            format!("{:.11e}", map.l[(k, 2)]),
            format!("{:.11e}", map.s[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{qubit_from_bloch, tensor};
    use crate::states::{haar_unitary, make_state, random_density, substream, StateSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::SymmetricEigen;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn sorted_eigs(m: Matrix3<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn spectral_examples() {
        let rho = DensityMatrix::new(qubit_from_bloch(&[0.0, 0.0, 0.5]), vec![2]).unwrap();
        let spec = qubit_spectral(&rho).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvectors[(0, 0)].re, 1.0, epsilon = 1e-14);

        let mixed = DensityMatrix::maximally_mixed(vec![2]);
        let spec = qubit_spectral(&mixed).unwrap();
        assert_eq!(spec.eigenvalues, [0.5, 0.5]);
        assert_eq!(spec.eigenvectors, identity(2));
    }

    #[test]
    fn spectral_reconstructs_random_qubits() {
        for i in 0..50 {
            let rho = random_density(&[2], 2, &mut substream(3, i)).unwrap();
            let spec = qubit_spectral(&rho).unwrap();
            assert_abs_diff_eq!(spec.eigenvalues[0] + spec.eigenvalues[1], 1.0, epsilon = 1e-10);
            let u = &spec.eigenvectors;
            assert!(max_abs(&(u.adjoint() * u - identity(2))) < 1e-10);
            let mut back = CMatrix::zeros(2, 2);
            for k in 0..2 {
                back += crate::qmat::projector(&spec.eigenvector(k)) * C64::from(spec.eigenvalues[k]);
            }
            assert!(max_abs(&(back - rho.matrix())) < 1e-12);
        }
    }

    #[test]
    fn frame_rotation_is_orthogonal() {
        let rho = random_density(&[2], 2, &mut substream(4, 0)).unwrap();
        let r = qubit_spectral(&rho).unwrap().frame_rotation();
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn purification_examples() {
        let spec = qubit_spectral(&DensityMatrix::maximally_mixed(vec![2])).unwrap();
        let v = symmetric_purify(&spec).amplitudes;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (k, want) in [h, 0.0, 0.0, h].iter().enumerate() {
            assert_abs_diff_eq!(v[k].re, *want, epsilon = 1e-15);
        }

        let pure = DensityMatrix::new(qubit_from_bloch(&[1.0, 0.0, 0.0]), vec![2]).unwrap();
        let spec = qubit_spectral(&pure).unwrap();
        let v = symmetric_purify(&spec).amplitudes;
        let phi = spec.eigenvector(0);
        assert!((v - phi.kronecker(&phi)).norm() < 1e-12);

        for rho_b in [
            DensityMatrix::new(qubit_from_bloch(&[0.0, 0.0, 0.8]), vec![2]).unwrap(),
            random_density(&[2], 2, &mut substream(9, 1)).unwrap(),
        ] {
            let spec = qubit_spectral(&rho_b).unwrap();
            let v = symmetric_purify(&spec);
            assert_abs_diff_eq!(v.amplitudes.norm(), 1.0, epsilon = 1e-12);
            let full = DensityMatrix::from_pure(&v.amplitudes, vec![2, 2]).unwrap();
            for keep in 0..2 {
                let m = partial_trace(&full, keep).unwrap();
                assert!(max_abs(&(m.matrix() - rho_b.matrix())) < 1e-12);
            }
        }
    }

    #[test]
    fn bell_diagonal_ltl_is_squared_correlations() {
        for c in [[0.3, -0.5, 0.1], [-0.8, 0.2, 0.4], [0.1, 0.1, -0.9]] {
            let rho = make_state(&StateSpec::BellDiagonal { c }).unwrap();
            let spec = marginal_spectral(&rho).unwrap();
            let ltl = extract_map(&rho, &spec).unwrap().ltl();
            let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(c[0] * c[0], c[1] * c[1], c[2] * c[2]));
            assert!((ltl - want).abs().max() < 1e-14, "{ltl}");
        }
    }

    #[test]
    fn product_state_has_zero_l() {
        let a = random_density(&[3], 3, &mut substream(1, 0)).unwrap();
        let rho = DensityMatrix::new(tensor(a.matrix(), &(identity(2) * C64::from(0.5))), vec![3, 2]).unwrap();
        let map = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        assert!(map.l.abs().max() < 1e-14);
        let out = map.apply_bloch(&[0.0, 0.0, 0.0]).unwrap();
        assert!(max_abs(&(out - a.matrix())) < 1e-13);
    }

    #[test]
    fn rank_deficient_marginal_is_rejected() {
        let rho = make_state(&StateSpec::Random {
            dims: vec![3, 1],
            rank: 2,
            seed: 1,
        })
        .unwrap();
        let a = rho.into_matrix();
        let b = crate::qmat::projector(&CVector::from_vec(vec![C64::from(1.0), ZERO]));
        let prod = DensityMatrix::new(tensor(&a, &b), vec![3, 2]).unwrap();
        let spec = marginal_spectral(&prod).unwrap();
        assert!(matches!(extract_map(&prod, &spec), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn purification_roundtrip_random_states() {
        for d in [2usize, 3, 4] {
            for i in 0..200u64 {
                let rho = random_density(&[d, 2], 2 * d, &mut substream(100 + d as u64, i)).unwrap();
                let spec = marginal_spectral(&rho).unwrap();
                let map = extract_map(&rho, &spec).unwrap();
                let back = reconstruct_state(&map, &spec).unwrap();
                assert!(max_abs(&(back - rho.matrix())) < 1e-9, "d={d} i={i}");
            }
        }
    }

    #[test]
    fn apply_map_examples() {
        let rho = random_density(&[3, 2], 6, &mut substream(2, 2)).unwrap();
        let map = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        let centre = map.apply_bloch(&[0.0; 3]).unwrap();
        let want = (identity(3) + map.basis.combine(&map.s).unwrap()) / C64::from(3.0);
        assert!(max_abs(&(centre - want)) < 1e-14);

        let zero = AffineQubitMap {
            l: DMatrix::zeros(8, 3),
            s: vec![0.0; 8],
            basis: crate::qmat::gellmann_basis(3).unwrap(),
            input_frame: identity(2),
        };
        let out = apply_map(&zero, &DensityMatrix::maximally_mixed(vec![2])).unwrap();
        assert!(max_abs(&(out.matrix() - identity(3) / C64::from(3.0))) < 1e-15);
    }

    #[test]
    fn apply_map_matches_direct_conditioning() {
        // Bell state: measuring B in |0> leaves A in Lambda(|0><0|) (marginal is I/2).
        let rho = make_state(&StateSpec::BellDiagonal { c: [1.0, -1.0, 1.0] }).unwrap();
        let map = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        let up = DensityMatrix::new(qubit_from_bloch(&[0.0, 0.0, 1.0]), vec![2]).unwrap();
        let out = apply_map(&map, &up).unwrap();
        let direct = contract_qubit(rho.matrix(), up.matrix()) * C64::from(2.0);
        assert!(max_abs(&(out.matrix() - direct)) < 1e-14);

        // General state: Lambda of the steered purifier state equals the conditional state.
        let rho = random_density(&[3, 2], 6, &mut substream(5, 5)).unwrap();
        let spec = marginal_spectral(&rho).unwrap();
        let map = extract_map(&rho, &spec).unwrap();
        let effect = qubit_from_bloch(&[0.3, -0.4, 0.5]);
        let unnorm = contract_qubit(rho.matrix(), &effect);
        let p = crate::qmat::trace(&unnorm).re;
        // purifier state: sum_ij sqrt(l_i l_j) <phi_j|E|phi_i> |phi_i><phi_j|
        let mut steered = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let w = (spec.eigenvalues[i] * spec.eigenvalues[j]).sqrt();
                let amp = (spec.eigenvector(j).adjoint() * &effect * spec.eigenvector(i))[(0, 0)];
                steered += spec.eigenvector(i) * spec.eigenvector(j).adjoint() * (amp * w);
            }
        }
        let out = apply_map(&map, &DensityMatrix::new(steered / C64::from(p), vec![2]).unwrap()).unwrap();
        assert!(max_abs(&(out.matrix() - unnorm / C64::from(p))) < 1e-12);
        assert!(out.eigenvalues()[0] > -1e-9);
    }

    #[test]
    fn ltl_spectrum_is_invariant_under_rotations_of_b() {
        for i in 0..50u64 {
            let mut rng = substream(6, i);
            let rho = random_density(&[3, 2], 6, &mut rng).unwrap();
            let u = tensor(&identity(3), &haar_unitary(2, &mut rng));
            let rotated = rho.conjugate_by(&u).unwrap();
            let a = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
            let b = extract_map(&rotated, &marginal_spectral(&rotated).unwrap()).unwrap();
            let (ea, eb) = (sorted_eigs(a.ltl()), sorted_eigs(b.ltl()));
            for (x, y) in ea.iter().zip(&eb) {
                assert!((x - y).abs() < 1e-9);
                assert!(*x >= -1e-12);
            }
        }
    }

    #[test]
    fn l_changes_by_right_rotation_under_b_unitaries() {
        let mut rng = substream(8, 0);
        let rho = random_density(&[2, 2], 4, &mut rng).unwrap();
        let u = tensor(&identity(2), &haar_unitary(2, &mut rng));
        let rotated = rho.conjugate_by(&u).unwrap();
        let a = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        let b = extract_map(&rotated, &marginal_spectral(&rotated).unwrap()).unwrap();
        // least-squares fit L_b = L_a Q; Q must be orthogonal
        let q = a.l.clone().pseudo_inverse(1e-12).unwrap() * &b.l;
        assert!((&a.l * &q - &b.l).abs().max() < 1e-9);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-9);
    }

    #[test]
    fn map_outputs_unit_trace() {
        let rho = random_density(&[4, 2], 8, &mut substream(10, 0)).unwrap();
        let map = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        for r in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.0, 0.8]] {
            let out = map.apply_bloch(&r).unwrap();
            assert_abs_diff_eq!(crate::qmat::trace(&out).re, 1.0, epsilon = 1e-10);
            assert!(crate::qmat::hermitian_residual(&out) < 1e-12);
        }
    }

    #[test]
    fn map_csv_has_one_row_per_generator() {
        let rho = random_density(&[3, 2], 6, &mut substream(1, 1)).unwrap();
        let map = extract_map(&rho, &marginal_spectral(&rho).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_map_csv(&map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
        assert!(text.starts_with("k,L_x,L_y,L_z,s"));
    }
}
