//! Ground costs, cost matrices, truncation, and the augmented cost.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-cost family. Both kinds satisfy `c(x, x) = 0` and `c ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSpec {
    /// `c(x, y) = ‖x − y‖²` — the default; the semi-discrete gradient
    /// formula is specific to it.
    SquaredEuclidean,
    /// `c(x, y) = ‖x − y‖` — a metric, offered for the continuous-case
    /// equivalence setting.
    Euclidean,
}

impl CostSpec {
    pub fn evaluate(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        let sq: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        match self {
            CostSpec::SquaredEuclidean => sq,
            CostSpec::Euclidean => sq.sqrt(),
        }
    }
}

/// A nonnegative `n×m` cost matrix with its ground-cost provenance and an
/// optional truncation level λ (entries then capped at `2λ`).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    ground: CostSpec,
    truncation: Option<f64>,
}

impl CostMatrix {
    /// Wraps raw values, validating nonnegativity and finiteness.
    pub fn from_values(values: Array2<f64>, ground: CostSpec) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCost);
        }
        Ok(Self {
            values,
            ground,
            truncation: None,
        })
    }

    /// Pairwise cost matrix `values[i][j] = c(x_i, y_j)`.
    pub fn from_points(
        x: ArrayView2<'_, f64>,
        y: ArrayView2<'_, f64>,
        spec: CostSpec,
    ) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::PointDimMismatch {
                left: x.ncols(),
                right: y.ncols(),
            });
        }
        let values =
            Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
                spec.evaluate(x.row(i), y.row(j))
            });
        Self::from_values(values, spec)
    }

    /// Cost over the concatenated support `{x_1..x_n, y_1..y_m}`:
    /// an `(n+m)×(n+m)` matrix with zero diagonal whose top-right block is
    /// [`CostMatrix::from_points`].
    pub fn augmented(
        x: ArrayView2<'_, f64>,
        y: ArrayView2<'_, f64>,
        spec: CostSpec,
    ) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::PointDimMismatch {
                left: x.ncols(),
                right: y.ncols(),
            });
        }
        let n = x.nrows();
        let total = n + y.nrows();
        let row = |k: usize| if k < n { x.row(k) } else { y.row(k - n) };
        let mut values = Array2::zeros((total, total));
        for i in 0..total {
            for j in 0..total {
                if i != j {
                    values[[i, j]] = spec.evaluate(row(i), row(j));
                }
            }
        }
        Self::from_values(values, spec)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn ground(&self) -> CostSpec {
        self.ground
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Elementwise `min{c, 2λ}`. `λ = +∞` is the no-truncation sentinel and
    /// returns the matrix unchanged.
    pub fn truncate(&self, lambda: f64) -> Result<Self> {
        validate_lambda(lambda)?;
        if lambda.is_infinite() {
            return Ok(self.clone());
        }
        let cap = 2.0 * lambda;
        Ok(Self {
            values: self.values.mapv(|v| v.min(cap)),
            ground: self.ground,
            truncation: Some(lambda),
        })
    }

    /// Indices `{(i, j): c_ij > 2λ}` — the entries a truncated-cost optimum
    /// may zero out, strictly above the threshold so boundary ties survive.
    /// Requires an untruncated matrix.
    pub fn outlier_index_set(&self, lambda: f64) -> Result<Vec<(usize, usize)>> {
        validate_lambda(lambda)?;
        if self.truncation.is_some() {
            return Err(Error::AlreadyTruncated);
        }
        let cap = 2.0 * lambda;
        let mut indices = Vec::new();
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > cap {
                indices.push((i, j));
            }
        }
        Ok(indices)
    }
}

pub(crate) fn validate_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}
