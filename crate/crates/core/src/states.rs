//! State factory and single-qubit Kraus channels.
//!
//! Qubit ordering is big-endian: qubit 0 is the outermost tensor factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{identity, paulis, tensor, CMatrix, CVector, DensityMatrix, C64, ONE, ZERO};

/// Largest qubit count accepted for GHZ/W families.
pub const MAX_QUBITS: usize = 12;

/// Parameter record for every state family the tool knows how to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    BellDiagonal {
        c: [f64; 3],
    },
    XState {
        x3: f64,
        y3: f64,
        t1: f64,
        t2: f64,
        t3: f64,
    },
    GeneralTwoQubit {
        x: [f64; 3],
        y: [f64; 3],
        t: [f64; 3],
    },
    Ghz {
        n: usize,
    },
    W {
        n: usize,
    },
    Random {
        dims: Vec<usize>,
        rank: usize,
        seed: u64,
    },
}

pub fn make_state(spec: &StateSpec) -> Result<DensityMatrix> {
    match spec {
        StateSpec::BellDiagonal { c } => general_two_qubit(&[0.0; 3], &[0.0; 3], c),
        StateSpec::XState { x3, y3, t1, t2, t3 } => {
            general_two_qubit(&[0.0, 0.0, *x3], &[0.0, 0.0, *y3], &[*t1, *t2, *t3])
        }
        StateSpec::GeneralTwoQubit { x, y, t } => general_two_qubit(x, y, t),
        StateSpec::Ghz { n } => ghz(*n),
        StateSpec::W { n } => w_state(*n),
        StateSpec::Random { dims, rank, seed } => random_density_seeded(dims, *rank, *seed),
    }
}

/// Unvalidated `(I I + sum x_i s_i I + y_i I s_i + t_i s_i s_i) / 4`.
pub fn two_qubit_matrix(x: &[f64; 3], y: &[f64; 3], t: &[f64; 3]) -> CMatrix {
    let id = identity(2);
    let s = paulis();
    let mut m = identity(4);
    for k in 0..3 {
        m += tensor(&s[k], &id) * C64::from(x[k]);
        m += tensor(&id, &s[k]) * C64::from(y[k]);
        m += tensor(&s[k], &s[k]) * C64::from(t[k]);
    }
    m * C64::from(0.25)
}

/// Two-qubit state from local Bloch vectors and diagonal correlations.
/// Fails with the offending minimum eigenvalue when the parameters are not a state.
pub fn general_two_qubit(x: &[f64; 3], y: &[f64; 3], t: &[f64; 3]) -> Result<DensityMatrix> {
    DensityMatrix::new(two_qubit_matrix(x, y, t), vec![2, 2])
}

fn check_qubit_count(n: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "qubit count must be in 2..={MAX_QUBITS}, got {n}"
        )));
    }
    Ok(())
}

/// `(|0...0> + |1...1>) / sqrt(2)`.
pub fn ghz(n: usize) -> Result<DensityMatrix> {
    check_qubit_count(n)?;
    let d = 1usize << n;
    let mut psi = CVector::zeros(d);
    psi[0] = ONE;
    psi[d - 1] = ONE;
    DensityMatrix::from_pure(&psi, vec![2; n])
}

/// Uniform superposition of the `n` single-excitation basis states.
pub fn w_state(n: usize) -> Result<DensityMatrix> {
    check_qubit_count(n)?;
    let mut psi = CVector::zeros(1usize << n);
    for q in 0..n {
        psi[1usize << q] = ONE;
    }
    DensityMatrix::from_pure(&psi, vec![2; n])
}

/// Matrix of independent standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Hilbert-Schmidt-induced random state `G G^H / Tr(G G^H)` with `G` of shape `d x rank`.
pub fn random_density<R: Rng + ?Sized>(dims: &[usize], rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if dims.is_empty() || d == 0 || rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!("rank {rank} for dims {dims:?}")));
    }
    let g = ginibre(d, rank, rng);
    let gg = &g * g.adjoint();
    let tr = crate::qmat::trace(&gg).re;
    DensityMatrix::from_parts(gg / C64::from(tr), dims.to_vec())
}

pub fn random_density_seeded(dims: &[usize], rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density(dims, rank, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for sample `index` of an ensemble with master seed `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Single-qubit channel in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    /// Checks `sum E^H E = I` within 1e-12.
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        if operators.is_empty() || operators.iter().any(|e| e.shape() != (2, 2)) {
            return Err(Error::InvalidParameter(
                "Kraus operators must be a non-empty list of 2x2 matrices".into(),
            ));
        }
        let sum = operators
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, e| acc + e.adjoint() * e);
        let residual = (sum - identity(2)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual > 1e-12 {
            return Err(Error::Invariant(format!("Kraus completeness violated by {residual:e}")));
        }
        Ok(Self { operators })
    }

    pub fn identity() -> Self {
        Self {
            operators: vec![identity(2)],
        }
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }
}

/// Amplitude damping with decay probability `p`.
pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "damping probability {p} outside [0, 1]"
        )));
    }
    let decay = CMatrix::from_row_slice(2, 2, &[ZERO, C64::from(p.sqrt()), ZERO, ZERO]);
    let keep = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from((1.0 - p).sqrt())]);
    KrausChannel::new(vec![decay, keep])
}

/// `(I (x) op (x) I) rho (I (x) op (x) I)^H` with `op` acting on the factor `target`.
fn sandwich_local(rho: &CMatrix, dims: &[usize], target: usize, op: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let dt = dims[target];
    let right: usize = dims[target + 1..].iter().product();
    let stride = right;
    let block = dt * right;
    let split = |idx: usize| (idx / block, (idx / stride) % dt, idx % right);
    let join = |l: usize, a: usize, r: usize| l * block + a * stride + r;

    let mut left = CMatrix::zeros(d, d);
    for row in 0..d {
        let (l, a, r) = split(row);
        for b in 0..dt {
            let e = op[(a, b)];
            if e == ZERO {
                continue;
            }
            let src = join(l, b, r);
            for col in 0..d {
                left[(row, col)] += e * rho[(src, col)];
            }
        }
    }
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        let (l, a, r) = split(col);
        for b in 0..dt {
            let e = op[(a, b)].conj();
            if e == ZERO {
                continue;
            }
            let src = join(l, b, r);
            for row in 0..d {
                out[(row, col)] += left[(row, src)] * e;
            }
        }
    }
    out
}

/// Applies `ch` to the qubit factor `target` of `rho`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, target: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if target >= dims.len() || dims[target] != 2 {
        return Err(Error::InvalidSubsystem {
            index: target,
            count: dims.len(),
        });
    }
    let d = rho.dim();
    let out = ch.operators().iter().fold(CMatrix::zeros(d, d), |acc, e| {
        acc + sandwich_local(rho.matrix(), dims, target, e)
    });
    DensityMatrix::from_parts(out, dims.to_vec())
}

/// Applies `ch` to each listed qubit in turn.
pub fn apply_channel_to(rho: &DensityMatrix, ch: &KrausChannel, targets: &[usize]) -> Result<DensityMatrix> {
    targets
        .iter()
        .try_fold(rho.clone(), |acc, &t| apply_channel(&acc, ch, t))
}

/// Moves qubit `b_side` of an `n`-qubit state to the last position and
/// relabels the state as `(2^(n-1)) x 2`.
pub fn regroup_bipartition(rho: &DensityMatrix, b_side: usize) -> Result<DensityMatrix> {
    let n = rho.dims().len();
    if n < 2 || rho.dims().iter().any(|&d| d != 2) {
        return Err(Error::DimensionMismatch(format!(
            "expected at least two qubits, got dims {:?}",
            rho.dims()
        )));
    }
    if b_side >= n {
        return Err(Error::InvalidSubsystem {
            index: b_side,
            count: n,
        });
    }
    let d = rho.dim();
    // bit of qubit q sits at position n-1-q
    let perm = |idx: usize| -> usize {
        let bit = (idx >> (n - 1 - b_side)) & 1;
        let high = idx >> (n - b_side);
        let low = idx & ((1usize << (n - 1 - b_side)) - 1);
        let rest = (high << (n - 1 - b_side)) | low;
        (rest << 1) | bit
    };
    let map: Vec<usize> = (0..d).map(perm).collect();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(map[i], map[j])] = rho.matrix()[(i, j)];
        }
    }
    DensityMatrix::from_parts(out, vec![d / 2, 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{partial_trace, projector, reduced_state, von_neumann_entropy};
    use approx::assert_abs_diff_eq;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn bell_diagonal_corner_is_phi_plus() {
        let rho = make_state(&StateSpec::BellDiagonal { c: [1.0, -1.0, 1.0] }).unwrap();
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let phi = projector(&CVector::from_vec(vec![s, ZERO, ZERO, s]));
        assert!(max_abs(&(rho.matrix() - phi)) < 1e-15);
    }

    #[test]
    fn invalid_parameters_report_min_eigenvalue() {
        let err = make_state(&StateSpec::BellDiagonal { c: [1.0, 1.0, 1.0] }).unwrap_err();
        match err {
            Error::NotPsd(min) => assert_abs_diff_eq!(min, -0.5, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn x_state_from_figure_parameters() {
        for t3 in [-0.6, -0.2, 0.0, 0.3, 0.45] {
            let spec = StateSpec::XState {
                x3: 0.1,
                y3: 0.2,
                t1: 0.2,
                t2: 0.3,
                t3,
            };
            assert!(make_state(&spec).is_ok(), "t3={t3}");
        }
        let bad = StateSpec::XState {
            x3: 0.1,
            y3: 0.2,
            t1: 0.2,
            t2: 0.3,
            t3: 0.6,
        };
        assert!(matches!(make_state(&bad), Err(Error::NotPsd(_))));
    }

    #[test]
    fn ghz_and_w_are_pure_with_expected_marginals() {
        let g = ghz(3).unwrap();
        g.validate().unwrap();
        assert!(von_neumann_entropy(&g) < 1e-12);
        for q in 0..3 {
            let m = partial_trace(&g, q).unwrap();
            assert!(max_abs(&(m.matrix() - identity(2) * C64::from(0.5))) < 1e-14);
        }
        let w = w_state(4).unwrap();
        w.validate().unwrap();
        assert!(von_neumann_entropy(&w) < 1e-12);
        let m = partial_trace(&w, 2).unwrap();
        assert_abs_diff_eq!(m.matrix()[(1, 1)].re, 0.25, epsilon = 1e-14);
        assert!(ghz(1).is_err());
        assert!(w_state(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn random_density_is_deterministic_and_valid() {
        let a = random_density_seeded(&[2, 2], 4, 99).unwrap();
        let b = random_density_seeded(&[2, 2], 4, 99).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let pure = random_density_seeded(&[3, 2], 1, 7).unwrap();
        assert!(von_neumann_entropy(&pure) < 1e-9);
        assert!(random_density_seeded(&[2], 3, 1).is_err());
        assert_ne!(substream(5, 0).random::<u64>(), substream(5, 1).random::<u64>());
    }

    #[test]
    fn hs_mean_purity_matches_analytic_value() {
        // E[Tr rho^2] = (d + K) / (d K + 1) for the induced measure with K = rank.
        let (d, k, count) = (4usize, 4usize, 10_000u64);
        let samples: Vec<f64> = (0..count)
            .map(|i| random_density(&[2, 2], k, &mut substream(2024, i)).unwrap().purity())
            .collect();
        let mean = samples.iter().sum::<f64>() / count as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        let se = (var / count as f64).sqrt();
        let expected = (d + k) as f64 / (d * k + 1) as f64;
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(5, &mut rng);
        assert!(max_abs(&(u.adjoint() * &u - identity(5))) < 1e-12);
    }

    #[test]
    fn amplitude_damping_examples() {
        assert!(amplitude_damping(1.5).is_err());
        assert!(amplitude_damping(-0.1).is_err());
        let rho = random_density_seeded(&[2], 2, 3).unwrap();
        let id = apply_channel(&rho, &amplitude_damping(0.0).unwrap(), 0).unwrap();
        assert!(max_abs(&(id.matrix() - rho.matrix())) < 1e-15);
        let dead = apply_channel(&rho, &amplitude_damping(1.0).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(dead.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert!(max_abs(&(dead.matrix() - projector(&CVector::from_vec(vec![ONE, ZERO])))) < 1e-14);
        let excited = DensityMatrix::from_pure(&CVector::from_vec(vec![ZERO, ONE]), vec![2]).unwrap();
        let half = apply_channel(&excited, &amplitude_damping(0.5).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(half.matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(half.matrix()[(1, 1)].re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn identity_channel_leaves_state_unchanged() {
        let rho = random_density_seeded(&[2, 3, 2], 5, 12).unwrap();
        for t in [0, 2] {
            let out = apply_channel(&rho, &KrausChannel::identity(), t).unwrap();
            assert!(max_abs(&(out.matrix() - rho.matrix())) < 1e-15);
        }
        assert!(apply_channel(&rho, &KrausChannel::identity(), 1).is_err());
        assert!(apply_channel(&rho, &KrausChannel::identity(), 3).is_err());
    }

    #[test]
    fn full_damping_of_ghz_gives_product_state() {
        let g = ghz(3).unwrap();
        let out = apply_channel_to(&g, &amplitude_damping(1.0).unwrap(), &[0, 1]).unwrap();
        let mut expected = CMatrix::zeros(8, 8);
        expected[(0, 0)] = C64::from(0.5);
        expected[(1, 1)] = C64::from(0.5);
        assert!(max_abs(&(out.matrix() - expected)) < 1e-14);
    }

    #[test]
    fn damping_matches_explicit_kraus_sum() {
        let g = ghz(3).unwrap();
        let ch = amplitude_damping(0.3).unwrap();
        let out = apply_channel(&g, &ch, 1).unwrap();
        let mut oracle = CMatrix::zeros(8, 8);
        for e in ch.operators() {
            let full = tensor(&tensor(&identity(2), e), &identity(2));
            oracle += &full * g.matrix() * full.adjoint();
        }
        assert!(max_abs(&(out.matrix() - oracle)) < 1e-14);
        out.validate().unwrap();
    }

    #[test]
    fn damping_preserves_trace_and_positivity() {
        for i in 0..500u64 {
            let mut rng = substream(77, i);
            let rho = random_density(&[2, 2], 4, &mut rng).unwrap();
            let p: f64 = rng.random();
            let target = (i % 2) as usize;
            let out = apply_channel(&rho, &amplitude_damping(p).unwrap(), target).unwrap();
            assert_abs_diff_eq!(crate::qmat::trace(out.matrix()).re, 1.0, epsilon = 1e-12);
            assert!(out.eigenvalues()[0] > -1e-10);
        }
    }

    #[test]
    fn regroup_examples() {
        let rho = random_density_seeded(&[2, 2], 4, 4).unwrap();
        let same = regroup_bipartition(&rho, 1).unwrap();
        assert_eq!(same.matrix(), rho.matrix());

        let r3 = random_density_seeded(&[2, 2, 2], 8, 5).unwrap();
        let moved = regroup_bipartition(&r3, 0).unwrap();
        assert_eq!(moved.dims(), &[4, 2]);
        let (a, b) = (r3.eigenvalues(), moved.eigenvalues());
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        // qubit 0 is now the measured side
        let q0 = partial_trace(&r3, 0).unwrap();
        let last = partial_trace(&moved, 1).unwrap();
        assert!(max_abs(&(q0.matrix() - last.matrix())) < 1e-14);
        // remaining qubits keep their order
        let rest = reduced_state(&r3, &[1, 2]).unwrap();
        let a_side = partial_trace(&moved, 0).unwrap();
        assert!(max_abs(&(rest.matrix() - a_side.matrix())) < 1e-14);

        let g4 = ghz(4).unwrap();
        for b in 0..4 {
            let m = partial_trace(&regroup_bipartition(&g4, b).unwrap(), 1).unwrap();
            assert!(max_abs(&(m.matrix() - identity(2) * C64::from(0.5))) < 1e-14);
        }
        assert!(regroup_bipartition(&g4, 4).is_err());
    }

    #[test]
    fn state_spec_json_shape() {
        let spec: StateSpec =
            serde_json::from_str(r#"{"kind":"x_state","x3":0.1,"y3":0.2,"t1":0.2,"t2":0.3,"t3":-0.1}"#).unwrap();
        assert_eq!(
            spec,
            StateSpec::XState {
                x3: 0.1,
                y3: 0.2,
                t1: 0.2,
                t2: 0.3,
                t3: -0.1
            }
        );
        let spec: StateSpec = serde_json::from_str(r#"{"kind":"random","dims":[3,2],"rank":2,"seed":4}"#).unwrap();
        assert_eq!(make_state(&spec).unwrap().dims(), &[3, 2]);
    }
}
