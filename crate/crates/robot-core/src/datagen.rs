//! Seeded generators for the synthetic experiment families.

use ndarray::{Array2, ArrayView1};
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// How contaminated points are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationMode {
    /// Each point is an outlier independently with probability ε.
    Bernoulli,
    /// Exactly ⌊εn⌋ points are outliers, positions drawn uniformly.
    FixedCount,
}

fn validate(n: usize, d: usize, eps: f64, eta0: ArrayView1<f64>, eta1: ArrayView1<f64>) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::EmptyPointSet);
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if eta0.len() != d || eta1.len() != d {
        return Err(Error::LengthMismatch {
            left: d,
            right: if eta0.len() != d { eta0.len() } else { eta1.len() },
        });
    }
    Ok(())
}

fn contamination_mask(
    rng: &mut ChaCha8Rng,
    n: usize,
    eps: f64,
    mode: ContaminationMode,
) -> Vec<bool> {
    match mode {
        ContaminationMode::Bernoulli => (0..n).map(|_| rng.random_bool(eps)).collect(),
        ContaminationMode::FixedCount => {
            let k = (eps * n as f64).floor() as usize;
            let mut mask = vec![false; n];
            for idx in sample(rng, n, k) {
                mask[idx] = true;
            }
            mask
        }
    }
}

fn mixture<F>(
    n: usize,
    d: usize,
    eps: f64,
    eta0: ArrayView1<f64>,
    eta1: ArrayView1<f64>,
    seed: u64,
    mode: ContaminationMode,
    mut noise: F,
) -> Result<(DiscreteMeasure, Vec<bool>)>
where
    F: FnMut(&mut ChaCha8Rng) -> f64,
{
    validate(n, d, eps, eta0, eta1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = contamination_mask(&mut rng, n, eps, mode);
    let mut points = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        let center = if mask[i] { eta1 } else { eta0 };
        for k in 0..d {
            points[[i, k]] = center[k] + noise(&mut rng);
        }
    }
    Ok((DiscreteMeasure::uniform(points)?, mask))
}

/// Samples `(1−ε)·N(η₀, I_d) + ε·N(η₁, I_d)` with a ground-truth mask.
pub fn gen_huber_gaussian(
    n: usize,
    d: usize,
    eps: f64,
    eta0: ArrayView1<f64>,
    eta1: ArrayView1<f64>,
    seed: u64,
    mode: ContaminationMode,
) -> Result<(DiscreteMeasure, Vec<bool>)> {
    mixture(n, d, eps, eta0, eta1, seed, mode, |rng| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    })
}

/// Cauchy variant with independent standard-Cauchy coordinates shifted by
/// the location vector.
pub fn gen_huber_cauchy(
    n: usize,
    d: usize,
    eps: f64,
    eta0: ArrayView1<f64>,
    eta1: ArrayView1<f64>,
    seed: u64,
    mode: ContaminationMode,
) -> Result<(DiscreteMeasure, Vec<bool>)> {
    let cauchy = Cauchy::new(0.0, 1.0).expect("unit cauchy");
    mixture(n, d, eps, eta0, eta1, seed, mode, move |rng| {
        cauchy.sample(rng)
    })
}

/// Two-cluster detection instance: a clean reference sample from `N(0, I_d)`
/// and a contaminated sample mixing `n_clean` points from `N(0, I_d)` with
/// `n_out` outliers from `N(separation·1_d, I_d)`.
///
/// Returns `(contaminated, clean_reference, mask)` where the mask marks the
/// outlier rows of the contaminated measure.
pub fn gen_cluster_outliers(
    n_clean: usize,
    n_out: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<(DiscreteMeasure, DiscreteMeasure, Vec<bool>)> {
    if n_clean == 0 || d == 0 {
        return Err(Error::EmptyPointSet);
    }
    if !(separation > 0.0) {
        return Err(Error::InvalidConfig(
            "cluster separation must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = move |rng: &mut ChaCha8Rng| -> f64 {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
    };

    let reference = Array2::from_shape_fn((n_clean, d), |_| normal(&mut rng));
    let mut contaminated = Array2::<f64>::zeros((n_clean + n_out, d));
    for i in 0..n_clean + n_out {
        let shift = if i < n_clean { 0.0 } else { separation };
        for k in 0..d {
            contaminated[[i, k]] = shift + normal(&mut rng);
        }
    }
    let mut mask = vec![false; n_clean + n_out];
    for flag in mask.iter_mut().skip(n_clean) {
        *flag = true;
    }
    Ok((
        DiscreteMeasure::uniform(contaminated)?,
        DiscreteMeasure::uniform(reference)?,
        mask,
    ))
}
