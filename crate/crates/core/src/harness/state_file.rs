//! State files: `{"dims": [d1, ...], "cut": [k, ...], "matrix": [[re, im], ...]}`
//! with the matrix flattened row-major. `cut` lists the A-side factors and may
//! be omitted for single-system states.

use std::path::Path;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::states::DensityMatrix;

use super::HarnessError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<Vec<usize>>,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let n = m.nrows();
        let mut matrix = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                matrix.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        Self { dims: rho.dims().to_vec(), cut: rho.cut().map(|c| c.to_vec()), matrix }
    }

    pub fn to_state(&self) -> Result<DensityMatrix, HarnessError> {
        let n: usize = self.dims.iter().product();
        if self.matrix.len() != n * n {
            return Err(HarnessError::Config(format!("{} matrix entries for dimension {n}", self.matrix.len())));
        }
        let m = Mat::from_fn(n, n, |i, j| {
            let [re, im] = self.matrix[i * n + j];
            c64::new(re, im)
        });
        Ok(DensityMatrix::new(m, self.dims.clone(), self.cut.clone())?)
    }
}

pub fn read_state(path: &Path) -> Result<DensityMatrix, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    file.to_state()
}

pub fn write_state(path: &Path, rho: &DensityMatrix) -> Result<(), HarnessError> {
    let text = serde_json::to_string(&StateFile::from_state(rho)).expect("plain data serializes");
    super::write_atomic(path, text.as_bytes())
}
