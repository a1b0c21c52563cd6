//! Maximum-likelihood fitting of the flow at a fixed copula correlation.
//!
//! The dataset is shuffled once and split into train / validation / test.
//! Mini-batch Adam runs over the training split; after every epoch the
//! validation NLL decides whether the current parameters are the best seen.
//! The test split stays sealed until training has returned its parameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copula::{log_density, CopulaParam, NoisePair};
use crate::error::{invalid, Error, Result};
use crate::flow::{FlowHyper, FlowParams, GradWork, DEFAULT_BINS, DEFAULT_HIDDEN};
use crate::optim::{Adam, AdamConfig};

pub const MIN_DATASET: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub rho: CopulaParam,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// `(train, validation, test)` weights; positive, summing to one.
    pub split: [f64; 3],
    pub seed: u64,
    pub bins: usize,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rho: CopulaParam::independent(),
            batch_size: 128,
            learning_rate: 3e-4,
            max_epochs: 200,
            patience: 20,
            split: [0.8, 0.1, 0.1],
            seed: 0,
            bins: DEFAULT_BINS,
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        self.rho = CopulaParam::new(rho)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.rho.non_degenerate()?;
        let sum: f64 = self.split.iter().sum();
        if self.split.iter().any(|&w| w.is_nan() || w <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split weights must be positive and sum to 1, got {:?}",
                self.split
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidParameter(
                "batch_size, max_epochs and patience must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a fit. Parameters are serialised separately through
/// [`FlowParams::save`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(skip)]
    pub final_params: FlowParams,
    pub rho: f64,
    pub train_nll: f64,
    pub val_nll: f64,
    pub test_nll: f64,
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were kept; 0 means the initial
    /// parameters were never beaten.
    pub best_epoch: usize,
    /// Training-split NLL at the end of each epoch.
    pub train_history: Vec<f64>,
    /// Validation NLL after each epoch.
    pub val_history: Vec<f64>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

/// A split that training code cannot read.
struct Sealed(Vec<(f64, f64)>);

impl Sealed {
    fn open(self) -> Vec<(f64, f64)> {
        self.0
    }
}

struct Splits {
    train: Vec<(f64, f64)>,
    val: Vec<(f64, f64)>,
    test: Sealed,
}

fn split_dataset(data: &[(f64, f64)], weights: [f64; 3], rng: &mut ChaCha8Rng) -> Splits {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(rng);
    let n = data.len() as f64;
    let n_train = (weights[0] * n).round() as usize;
    let n_val = (weights[1] * n).round() as usize;
    let take = |r: &[usize]| r.iter().map(|&i| data[i]).collect::<Vec<_>>();
    Splits {
        train: take(&idx[..n_train]),
        val: take(&idx[n_train..n_train + n_val]),
        test: Sealed(take(&idx[n_train + n_val..])),
    }
}

/// Fits the flow to `data` at `config.rho`. Deterministic given the seed.
pub fn fit(data: &[(f64, f64)], config: &TrainConfig) -> Result<FitReport> {
    config.validate()?;
    if data.len() < MIN_DATASET {
        return Err(Error::DatasetTooSmall {
            got: data.len(),
            need: MIN_DATASET,
        });
    }
    if data.iter().any(|(a, y)| !a.is_finite() || !y.is_finite()) {
        return invalid("dataset contains non-finite values");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let Splits { mut train, val, test } = split_dataset(data, config.split, &mut rng);
    if val.is_empty() || train.len() < config.batch_size {
        return Err(Error::InvalidParameter(format!(
            "split leaves {} training rows (batch size {}) and {} validation rows",
            train.len(),
            config.batch_size,
            val.len()
        )));
    }

    let (ta, ty): (Vec<f64>, Vec<f64>) = train.iter().copied().unzip();
    let hyper = FlowHyper::from_data(&ta, &ty, config.bins, &config.hidden)?;
    let mut params = FlowParams::identity(hyper, &mut rng)?;
    let rho = config.rho;

    let mut flat = params.to_flat();
    let mut grad = vec![0.0; flat.len()];
    let mut work = GradWork::new(&params);
    let mut opt = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..Default::default()
        },
        flat.len(),
    );

    let mut best_val = params.mean_nll(&val, rho)?;
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut train_history = Vec::new();
    let mut val_history = Vec::new();
    let mut epochs_run = 0;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        train.shuffle(&mut rng);
        // drop the ragged tail so every step sees a full batch
        for batch in train.chunks_exact(config.batch_size) {
            let loss = params.loss_and_gradient_into(batch, rho, &mut grad, &mut work)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            opt.step(&mut flat, &grad);
            params.set_flat(&flat);
        }
        train_history.push(params.mean_nll(&train, rho)?);

        let val_nll = params.mean_nll(&val, rho)?;
        if !val_nll.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        val_history.push(val_nll);
        if val_nll < best_val {
            best_val = val_nll;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }

    let test = test.open();
    let train_nll = best.mean_nll(&train, rho)?;
    let test_nll = if test.is_empty() { f64::NAN } else { best.mean_nll(&test, rho)? };
    Ok(FitReport {
        final_params: best,
        rho: rho.rho(),
        train_nll,
        val_nll: best_val,
        test_nll,
        epochs_run,
        best_epoch,
        train_history,
        val_history,
        n_train: train.len(),
        n_val: val.len(),
        n_test: test.len(),
    })
}

/// Log-density of one observation: copula log-density at the transformed
/// point plus both log-Jacobians.
pub fn joint_log_density(params: &FlowParams, rho: CopulaParam, a: f64, y: f64) -> Result<f64> {
    let ea = params.forward_a(a)?;
    let ey = params.forward_y(y, a)?;
    let base = log_density(rho, NoisePair { z_a: ea.value, z_y: ey.value })?;
    Ok(base + ea.log_deriv + ey.log_deriv)
}

/// Mean negative log-likelihood over `data`.
pub fn evaluate_nll(params: &FlowParams, rho: CopulaParam, data: &[(f64, f64)]) -> Result<f64> {
    params.mean_nll(data, rho)
}
