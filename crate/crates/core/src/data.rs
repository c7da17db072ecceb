use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{center_columns, DenseMatrix};

/// A `D×N` view: features are rows, samples are columns.
///
/// `means` holds the per-feature means that were subtracted, if the data was
/// centered through [`DataMatrix::centered`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    values: DenseMatrix,
    means: Option<Vec<f64>>,
}

impl DataMatrix {
    /// Wraps data as-is, without centering.
    pub fn raw(values: DenseMatrix) -> Self {
        Self {
            values,
            means: None,
        }
    }

    /// Centers each feature and records the subtracted means.
    pub fn centered(values: DenseMatrix) -> Result<Self> {
        let means = values.row_means();
        let values = center_columns(&values)?;
        Ok(Self {
            values,
            means: Some(means),
        })
    }

    /// Builds from a sample-major table (`N` rows of `D` features).
    pub fn from_samples(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::raw(DenseMatrix::from_rows(rows)?.transpose()))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.values
    }

    pub fn means(&self) -> Option<&[f64]> {
        self.means.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.means.is_some()
    }

    /// Number of features.
    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    /// Number of samples.
    pub fn samples(&self) -> usize {
        self.values.cols()
    }

    /// Applies the stored training means to new data of the same dimension.
    pub fn center_like(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if other.rows() != self.dim() {
            return Err(Error::Shape(format!(
                "expected {} features, got {}",
                self.dim(),
                other.rows()
            )));
        }
        let mut out = other.clone();
        if let Some(means) = &self.means {
            for (i, m) in means.iter().enumerate() {
                out.row_mut(i).iter_mut().for_each(|v| *v -= m);
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_paired(x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    if x.samples() != y.samples() {
        return Err(Error::Shape(format!(
            "views have {} and {} samples",
            x.samples(),
            y.samples()
        )));
    }
    if x.samples() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: x.samples(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_records_means() {
        let x = DenseMatrix::from_rows(&[[1.0, 3.0], [2.0, 2.0]]).unwrap();
        let d = DataMatrix::centered(x.clone()).unwrap();
        assert_eq!(d.means().unwrap(), &[2.0, 2.0]);
        assert_eq!(d.center_like(&x).unwrap(), *d.matrix());
        assert!(!DataMatrix::raw(x).is_centered());
    }

    #[test]
    fn from_samples_transposes() {
        let d = DataMatrix::from_samples(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.samples(), 2);
        assert_eq!(d.matrix().row(0), &[1.0, 4.0]);
    }
}
