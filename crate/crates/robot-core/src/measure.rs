//! Weighted point clouds on ℝ^d.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Tolerance to which constructed weights sum to one.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A discrete probability measure: `n` support points in ℝ^d with
/// nonnegative weights that sum to one.
///
/// Weights are renormalized once at construction; downstream solvers assume
/// exact simplex membership up to [`SIMPLEX_TOL`]. The type is immutable and
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from support points and optional weights.
    ///
    /// Missing weights default to uniform `1/n`; provided weights must be
    /// nonnegative with positive sum and are renormalized to sum to one.
    pub fn new(points: Array2<f64>, weights: Option<Array1<f64>>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::EmptyPointSet);
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("support points"));
        }
        let weights = match weights {
            None => Array1::from_elem(n, 1.0 / n as f64),
            Some(w) => {
                if w.len() != n {
                    return Err(Error::LengthMismatch {
                        left: n,
                        right: w.len(),
                    });
                }
                for (i, &v) in w.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::NegativeWeight { index: i, value: v });
                    }
                }
                let total: f64 = w.sum();
                if total <= 0.0 {
                    return Err(Error::ZeroWeightSum);
                }
                w / total
            }
        };
        Ok(Self { points, weights })
    }

    /// Uniform measure on the given points.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        Self::new(points, None)
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n ≥ 1 by construction
    }

    /// Ambient dimension d.
    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }
}

/// Total-variation distance ½·Σ|a_i − b_i| between two probability vectors
/// on a common support.
pub fn tv_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(0.5 * a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
}
