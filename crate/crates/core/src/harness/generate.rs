//! Seeded instance generation.
//!
//! The master seed splits into independent streams: one for the design
//! (shared by every trial of an experiment) and one per trial id for beta*,
//! the noise and the optional target perturbation. Streams are
//! counter-based (splitmix-expanded ChaCha keys), so any trial can be
//! regenerated in isolation and parallel execution is deterministic.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::config::{AmplitudeScheme, DesignKind, ExperimentConfig};
use crate::io;
use crate::model::{CoefficientVector, DesignMatrix, RegressionInstance};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 32-byte ChaCha key derived from (master, stream, counter).
fn stream_key(master: u64, stream: u64, counter: u64) -> [u8; 32] {
    let mut state = master ^ stream.rotate_left(17) ^ counter.rotate_left(41);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

const DESIGN_STREAM: u64 = 0xdeb1_57ea;
const TRIAL_STREAM: u64 = 0x7a1a_15ea;

pub fn design_rng(master: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_key(master, DESIGN_STREAM, 0))
}

pub fn trial_rng(master: u64, trial_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_key(master, TRIAL_STREAM, trial_id))
}

/// The u64 recorded in trial records; identifies the trial stream.
pub fn trial_seed(master: u64, trial_id: u64) -> u64 {
    let mut state = master ^ TRIAL_STREAM.rotate_left(17) ^ trial_id.rotate_left(41);
    splitmix64(&mut state)
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    // Row-major fill keeps the stream layout independent of storage order.
    let mut x = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            x[(i, j)] = rng.sample(StandardNormal);
        }
    }
    x
}

fn normalize_columns(x: &mut DMatrix<f64>) -> Result<()> {
    let n = x.nrows() as f64;
    for j in 0..x.ncols() {
        let norm = (x.column(j).norm_squared() / n).sqrt();
        if norm <= 0.0 {
            return Err(Error::invalid(format!(
                "generated column {j} has zero norm"
            )));
        }
        let mut col = x.column_mut(j);
        col /= norm;
    }
    Ok(())
}

/// Builds the experiment design. Depends only on (config, master seed):
/// every trial of a run shares it.
pub fn build_design(config: &ExperimentConfig) -> Result<DesignMatrix> {
    let n = config.n;
    let m = config.m_cols;
    let mut rng = design_rng(config.seed);
    let x = match &config.design {
        DesignKind::Identity => {
            DMatrix::from_fn(n, m, |i, j| if i == j { (n as f64).sqrt() } else { 0.0 })
        }
        DesignKind::GaussianIid => {
            let mut x = standard_normal_matrix(&mut rng, n, m);
            if config.normalize_columns {
                normalize_columns(&mut x)?;
            }
            x
        }
        DesignKind::GaussianOrthonormal => {
            let raw = standard_normal_matrix(&mut rng, n, m);
            let qr = raw.qr();
            let q = qr.q();
            (n as f64).sqrt() * q
        }
        DesignKind::Equicorrelated { rho } | DesignKind::Ar1 { rho } => {
            let sigma = match &config.design {
                DesignKind::Equicorrelated { .. } => DMatrix::from_fn(m, m, |i, j| {
                    if i == j {
                        1.0
                    } else {
                        *rho
                    }
                }),
                _ => DMatrix::from_fn(m, m, |i, j| {
                    rho.powi((i as i32 - j as i32).abs())
                }),
            };
            let chol = sigma.cholesky().ok_or_else(|| {
                Error::invalid(format!("correlation model rho = {rho} is not psd"))
            })?;
            let g = standard_normal_matrix(&mut rng, n, m);
            let mut x = g * chol.l().transpose();
            if config.normalize_columns {
                normalize_columns(&mut x)?;
            }
            x
        }
        DesignKind::CsvFile { path } => {
            let mut x = io::read_matrix_csv(std::path::Path::new(path))?;
            if config.normalize_columns {
                normalize_columns(&mut x)?;
            }
            x
        }
    };
    DesignMatrix::new(x)
}

/// Draws beta* (uniform support of size s, amplitudes per scheme), the
/// Gaussian noise, and the optional target perturbation for one trial.
/// Deterministic given (config.seed, trial_id).
pub fn generate_instance(
    config: &ExperimentConfig,
    design: &DesignMatrix,
    trial_id: u64,
) -> Result<RegressionInstance> {
    let m = design.m();
    let n = design.n();
    let mut rng = trial_rng(config.seed, trial_id);

    let mut support = rand::seq::index::sample(&mut rng, m, config.s).into_vec();
    support.sort_unstable();
    let mut beta = DVector::zeros(m);
    for &j in &support {
        beta[j] = match config.amplitude {
            AmplitudeScheme::Unit => 1.0,
            AmplitudeScheme::RandomSignUniform { lo, hi } => {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * (lo + (hi - lo) * rng.gen::<f64>())
            }
        };
    }
    let beta_star = CoefficientVector::from(beta);

    let noise = DVector::from_fn(n, |_, _| {
        config.sigma * rng.sample::<f64, _>(StandardNormal)
    });

    match config.f_perturbation_norm {
        None => RegressionInstance::linear(design.clone(), beta_star, noise, config.sigma),
        Some(norm) => {
            let mut direction = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let dir_norm = (direction.norm_squared() / n as f64).sqrt();
            if dir_norm > 0.0 {
                direction *= norm / dir_norm;
            }
            let f_true = design.apply(beta_star.vector()) + direction;
            RegressionInstance::nonparametric(
                design.clone(),
                f_true,
                Some(beta_star),
                noise,
                config.sigma,
            )
        }
    }
}
