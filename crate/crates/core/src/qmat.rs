//! Dense complex linear algebra and quantum-state primitives.
//!
//! Everything here works on `nalgebra::DMatrix<Complex64>`. Subsystem ordering
//! is big-endian: the first entry of `dims` is the outermost tensor factor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::{HERMITIAN_HARD_TOL, STATE_TOL};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `(sigma_x, sigma_y, sigma_z)`.
pub fn paulis() -> [CMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// `(I + n . sigma) / 2` for a real 3-vector `n`.
pub fn qubit_from_bloch(n: &[f64; 3]) -> CMatrix {
    let mut m = identity(2);
    for (k, p) in paulis().iter().enumerate() {
        m += p * C64::from(n[k]);
    }
    m * C64::from(0.5)
}

/// Bloch vector `Tr(m sigma_k)` of a 2x2 matrix (no normalization by the trace).
pub fn pauli_coordinates(m: &CMatrix) -> [f64; 3] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    [(b + c).re, (I * (b - c)).re, (a - d).re]
}

/// Kronecker product with `a`'s indices outermost.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn projector(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise modulus of `m - m^H`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A unit-trace positive semidefinite matrix with a tensor-factor annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity at [`STATE_TOL`].
    pub fn new(entries: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let rho = Self::from_parts(entries, dims)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape checks only. Used for matrices that are valid by construction.
    pub(crate) fn from_parts(entries: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if entries.nrows() != entries.ncols() || entries.nrows() != d || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix with dims {:?}",
                entries.nrows(),
                entries.ncols(),
                dims
            )));
        }
        Ok(Self { entries, dims })
    }

    pub fn from_pure(psi: &CVector, dims: Vec<usize>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        Self::from_parts(projector(&(psi / C64::from(norm))), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            entries: identity(d) / C64::from(d as f64),
            dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = hermitian_residual(&self.entries);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace(&self.entries);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min_eig = self.eigenvalues()[0];
        if min_eig < -STATE_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Same entries, new factorization of the dimension.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::from_parts(self.entries, dims)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `U rho U^H`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary {}x{} vs state {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        Self::from_parts(u * &self.entries * u.adjoint(), self.dims.clone())
    }
}

/// Reduced state on the single subsystem `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    if rho.dims.len() < 2 {
        return Err(Error::InvalidSubsystem {
            index: keep,
            count: rho.dims.len(),
        });
    }
    reduced_state(rho, &[keep])
}

/// Reduced state on the (sorted, distinct) subsystems listed in `keep`.
pub fn reduced_state(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.dims.len();
    for (pos, &k) in keep.iter().enumerate() {
        if k >= n || (pos > 0 && keep[pos - 1] >= k) {
            return Err(Error::InvalidSubsystem { index: k, count: n });
        }
    }
    let kept_dims: Vec<usize> = keep.iter().map(|&k| rho.dims[k]).collect();
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| rho.dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // strides of each subsystem in the full index
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * rho.dims[k + 1];
    }
    let offset = |sub: &[usize], sub_dims: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for pos in (0..sub.len()).rev() {
            off += (idx % sub_dims[pos]) * strides[sub[pos]];
            idx /= sub_dims[pos];
        }
        off
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(keep, &kept_dims, i)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|t| offset(&traced, &traced_dims, t)).collect();

    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += rho.entries[(kept_off[i] + t, kept_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::from_parts(out, kept_dims)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns. The input is symmetrized first.
pub fn herm_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            h.nrows(),
            h.ncols()
        )));
    }
    let res = hermitian_residual(h);
    if res > HERMITIAN_HARD_TOL {
        return Err(Error::NotHermitian(res));
    }
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(h.nrows(), h.ncols());
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a (symmetrized) Hermitian matrix, with a closed form for 2x2.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    if h.nrows() == 2 {
        let [lo, hi] = eigenvalues_2x2(h[(0, 0)].re, h[(1, 1)].re, (h[(0, 1)] + h[(1, 0)].conj()) * 0.5);
        return vec![lo, hi];
    }
    if h.nrows() == 1 {
        return vec![h[(0, 0)].re];
    }
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let mut v: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues of `[[a, b], [b*, c]]`, ascending.
#[inline]
pub fn eigenvalues_2x2(a: f64, c: f64, b: C64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let half = 0.5 * (a - c);
    let r = (half * half + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// `-sum p log2 p` over the nonnegative part of `probs`.
pub fn shannon_bits<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// `S(rho) = -Tr rho log2 rho`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_bits(rho.eigenvalues()).max(0.0)
}

/// `S2(rho) = 2 (1 - Tr rho^2)`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    2.0 * (1.0 - rho.purity())
}

/// One generator of the generalized Gell-Mann basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// `E_jk + E_kj`, `j < k`.
    Symmetric(usize, usize),
    /// `-i E_jk + i E_kj`, `j < k`.
    Antisymmetric(usize, usize),
    /// `sqrt(2 / (l (l + 1))) (sum_{j<l} E_jj - l E_ll)`, `1 <= l < d`.
    Diagonal(usize),
}

/// Traceless Hermitian generators of SU(d), normalized to `Tr(g_i g_j) = 2 delta_ij`.
///
/// Order is the symmetric block, then the antisymmetric block (both with `(j, k)`
/// in lexicographic order), then the diagonal block. For `d = 2` this is
/// `(sigma_x, sigma_y, sigma_z)`.
///
/// Generators are stored structurally; dense matrices are built on request.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    dimension: usize,
    generators: Vec<Generator>,
}

pub fn gellmann_basis(d: usize) -> Result<GeneratorBasis> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "generator basis needs d >= 2, got {d}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    let mut generators = Vec::with_capacity(d * d - 1);
    generators.extend(pairs.iter().map(|&(j, k)| Generator::Symmetric(j, k)));
    generators.extend(pairs.iter().map(|&(j, k)| Generator::Antisymmetric(j, k)));
    generators.extend((1..d).map(Generator::Diagonal));
    Ok(GeneratorBasis {
        dimension: d,
        generators,
    })
}

fn diagonal_scale(l: usize) -> f64 {
    (2.0 / (l * (l + 1)) as f64).sqrt()
}

impl GeneratorBasis {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn matrix(&self, k: usize) -> CMatrix {
        let d = self.dimension;
        let mut m = CMatrix::zeros(d, d);
        match self.generators[k] {
            Generator::Symmetric(j, k) => {
                m[(j, k)] = ONE;
                m[(k, j)] = ONE;
            }
            Generator::Antisymmetric(j, k) => {
                m[(j, k)] = -I;
                m[(k, j)] = I;
            }
            Generator::Diagonal(l) => {
                let s = diagonal_scale(l);
                for j in 0..l {
                    m[(j, j)] = C64::from(s);
                }
                m[(l, l)] = C64::from(-(l as f64) * s);
            }
        }
        m
    }

    pub fn matrices(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|k| self.matrix(k)).collect()
    }

    /// `Re Tr(m g_k)` for every generator, in O(d^2).
    pub fn traces_with(&self, m: &CMatrix) -> Result<Vec<f64>> {
        let d = self.dimension;
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix against a d={d} basis",
                m.nrows(),
                m.ncols()
            )));
        }
        // prefix sums of the diagonal for the diagonal block
        let mut prefix = 0.0;
        let mut diag_prefix = Vec::with_capacity(d);
        for j in 0..d {
            diag_prefix.push(prefix);
            prefix += m[(j, j)].re;
        }
        Ok(self
            .generators
            .iter()
            .map(|g| match *g {
                Generator::Symmetric(j, k) => (m[(j, k)] + m[(k, j)]).re,
                Generator::Antisymmetric(j, k) => (I * (m[(j, k)] - m[(k, j)])).re,
                Generator::Diagonal(l) => diagonal_scale(l) * (diag_prefix[l] - l as f64 * m[(l, l)].re),
            })
            .collect())
    }

    /// `sum_k c_k g_k`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<CMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} generators",
                coeffs.len(),
                self.len()
            )));
        }
        let d = self.dimension;
        let mut m = CMatrix::zeros(d, d);
        for (g, &c) in self.generators.iter().zip(coeffs) {
            match *g {
                Generator::Symmetric(j, k) => {
                    m[(j, k)] += c;
                    m[(k, j)] += c;
                }
                Generator::Antisymmetric(j, k) => {
                    m[(j, k)] -= I * c;
                    m[(k, j)] += I * c;
                }
                Generator::Diagonal(l) => {
                    let s = c * diagonal_scale(l);
                    for j in 0..l {
                        m[(j, j)] += s;
                    }
                    m[(l, l)] -= s * l as f64;
                }
            }
        }
        Ok(m)
    }
}

/// Real coordinates `r` with `rho = (I + r . g) / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    pub coordinates: Vec<f64>,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        self.coordinates.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `(I + r . g) / d`.
    pub fn to_matrix(&self, basis: &GeneratorBasis) -> Result<CMatrix> {
        let d = basis.dimension();
        Ok((identity(d) + basis.combine(&self.coordinates)?) / C64::from(d as f64))
    }
}

/// `r_k = (d / 2) Tr(rho g_k)`.
pub fn bloch_vector(rho: &DensityMatrix, basis: &GeneratorBasis) -> Result<BlochVector> {
    let half_d = basis.dimension() as f64 / 2.0;
    let coordinates = basis
        .traces_with(rho.matrix())?
        .into_iter()
        .map(|t| half_d * t)
        .collect();
    Ok(BlochVector { coordinates })
}

/// `rho^{-1/2}` on the range of `rho`: eigenvalues above `cutoff_rel` times the largest
/// eigenvalue are mapped to `lambda^{-1/2}`, the rest to 0.
pub fn inv_sqrt_on_range(rho: &CMatrix, cutoff_rel: f64) -> Result<CMatrix> {
    let (values, vectors) = herm_eig(rho)?;
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = cutoff_rel * top;
    let mut scaled = vectors.clone();
    for (col, &lambda) in values.iter().enumerate() {
        let f = if lambda > threshold && lambda > 0.0 {
            lambda.powf(-0.5)
        } else {
            0.0
        };
        scaled.column_mut(col).scale_mut(f);
    }
    Ok(&scaled * vectors.adjoint())
}

/// Matrix square root of a positive semidefinite Hermitian matrix.
pub fn psd_sqrt(rho: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = herm_eig(rho)?;
    let mut scaled = vectors.clone();
    for (col, &lambda) in values.iter().enumerate() {
        scaled.column_mut(col).scale_mut(lambda.max(0.0).sqrt());
    }
    Ok(&scaled * vectors.adjoint())
}
