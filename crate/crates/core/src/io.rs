//! JSON file formats for density matrices and state specifications.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{CMatrix, DensityMatrix, C64};
use crate::states::{make_state, StateSpec};

/// On-disk density matrix: row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityMatrixFile {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityMatrixFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let rows = |f: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dims: rho.dims().to_vec(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Checks shapes, then builds and validates the state.
    pub fn into_state(self) -> Result<DensityMatrix> {
        if self.dims.len() != 2 || self.dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "dims must be [dA, dB] with positive entries, got {:?}",
                self.dims
            )));
        }
        let d = self.dims[0] * self.dims[1];
        let shape_ok = |rows: &[Vec<f64>]| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::DimensionMismatch(format!(
                "re and im must both be {d}x{d} for dims {:?}",
                self.dims
            )));
        }
        if self.re.iter().chain(&self.im).flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        let m = CMatrix::from_fn(d, d, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        DensityMatrix::new(m, self.dims)
    }
}

/// Either file kind accepted wherever a state is read.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StateInput {
    Spec(StateSpec),
    Matrix(DensityMatrixFile),
}

impl StateInput {
    pub fn into_state(self) -> Result<DensityMatrix> {
        match self {
            StateInput::Spec(spec) => make_state(&spec),
            StateInput::Matrix(file) => file.into_state(),
        }
    }
}

pub fn read_density_matrix<R: Read>(reader: R) -> Result<DensityMatrix> {
    let file: DensityMatrixFile = serde_json::from_reader(reader)?;
    file.into_state()
}

pub fn write_density_matrix<W: Write>(rho: &DensityMatrix, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &DensityMatrixFile::from_state(rho))?;
    Ok(())
}

/// Parses a state spec or a raw matrix from JSON text.
pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    // dispatch on the tag so that errors name the intended format
    let input = if value.get("kind").is_some() {
        StateInput::Spec(serde_json::from_value(value)?)
    } else {
        StateInput::Matrix(serde_json::from_value(value)?)
    };
    input.into_state()
}

/// Groups all subsystems but the last into `A`, so multi-qubit states read as `[2^(n-1), 2]`.
pub fn bipartition_last(rho: DensityMatrix) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if dims.len() <= 2 {
        return Ok(rho);
    }
    let last = dims[dims.len() - 1];
    let rest = dims[..dims.len() - 1].iter().product();
    rho.with_dims(vec![rest, last])
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    parse_state(&text)
}

pub fn save_state(rho: &DensityMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_density_matrix(rho, &mut w)?;
    w.flush()?;
    Ok(())
}
