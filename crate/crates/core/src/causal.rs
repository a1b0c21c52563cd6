//! Interventional inference on fitted models and the `rho`-curve sweep.
//!
//! `E[Y_a]` is estimated by abduction (draw base noise from the copula),
//! action (fix the treatment to `a`, cutting its dependence on `z_a`) and
//! prediction (push `z_y` through the inverse outcome transform conditioned
//! on `a`). Both arms of an effect estimate reuse the same noise draws.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codec::DequantSpec;
use crate::copula::{rho_from_spearman, sample_pair, spearman_rho, CopulaParam, NoisePair};
use crate::data::ModelSpace;
use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::train::{fit, FitReport, TrainConfig};

pub const DEFAULT_GRID: [f64; 11] = [-0.99, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 0.99];
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// A fitted flow together with the copula correlation it was fitted at.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoGnfModel {
    pub params: FlowParams,
    pub rho: CopulaParam,
    /// Present when the outcome was dequantized; samples are decoded to
    /// class values before averaging.
    pub outcome_codec: Option<DequantSpec>,
}

impl RhoGnfModel {
    pub fn new(params: FlowParams, rho: CopulaParam) -> Self {
        Self { params, rho, outcome_codec: None }
    }

    pub fn with_outcome_codec(mut self, codec: Option<DequantSpec>) -> Self {
        self.outcome_codec = codec;
        self
    }

    /// Abduction: `n` draws from the copula base.
    pub fn abduct<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<NoisePair> {
        (0..n).map(|_| sample_pair(self.rho, rng)).collect()
    }
}

/// Mean of `Y_a` over the given noise draws. Only `z_y` enters: the
/// intervention removes the treatment equation, so `z_a` is unused.
pub fn potential_outcome_mean(model: &RhoGnfModel, a: f64, noise: &[NoisePair]) -> Result<f64> {
    if noise.is_empty() {
        return Err(Error::InvalidInput("no noise draws".into()));
    }
    let transform = model.params.outcome_transform(a)?;
    let mut total = 0.0;
    for pair in noise {
        let y = transform.inverse(pair.z_y)?;
        total += match &model.outcome_codec {
            Some(codec) => codec.decode(y) as f64,
            None => y,
        };
    }
    Ok(total / noise.len() as f64)
}

pub fn expected_potential_outcome<R: Rng + ?Sized>(
    model: &RhoGnfModel,
    a: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    potential_outcome_mean(model, a, &model.abduct(n_samples, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AceEstimate {
    pub ace: f64,
    pub ey1: f64,
    pub ey0: f64,
}

/// `E[Y_{a1}] − E[Y_{a0}]` with common random numbers across the two arms.
pub fn estimate_ace<R: Rng + ?Sized>(
    model: &RhoGnfModel,
    a1: f64,
    a0: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<AceEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    let noise = model.abduct(n_samples, rng);
    let ey1 = potential_outcome_mean(model, a1, &noise)?;
    let ey0 = potential_outcome_mean(model, a0, &noise)?;
    Ok(AceEstimate { ace: ey1 - ey0, ey1, ey0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoCurvePoint {
    pub rho: f64,
    pub ace: f64,
    pub ey1: f64,
    pub ey0: f64,
    pub fit: FitReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoCurve {
    pub points: Vec<RhoCurvePoint>,
    pub grid: Vec<f64>,
    /// `2·sin(π·ρ_S/6)` from the observed Spearman correlation.
    pub rho_value_closed: f64,
    /// Zero crossing of the curve nearest the closed form, if any.
    pub rho_value_intercept: Option<f64>,
    /// Number of zero crossings found; more than one means the curve wobbles.
    pub intercept_count: usize,
    pub bounds: Bounds,
    pub a1: f64,
    pub a0: f64,
    pub n_samples: usize,
}

impl RhoCurve {
    /// `rho,ace,ey1,ey0` rows in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,ace,ey1,ey0\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.rho, p.ace, p.ey1, p.ey0);
        }
        out
    }

    pub fn point_nearest(&self, rho: f64) -> Option<&RhoCurvePoint> {
        self.points
            .iter()
            .min_by(|p, q| (p.rho - rho).abs().total_cmp(&(q.rho - rho).abs()))
    }
}

/// Treatment levels compared by the sweep (in model space).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interventions {
    pub a1: f64,
    pub a0: f64,
}

impl Interventions {
    /// Levels 1 and 0, mapped to mode centres for a dequantized treatment.
    pub fn unit(data: &ModelSpace) -> Self {
        Self {
            a1: data.treatment_value(1.0),
            a0: data.treatment_value(0.0),
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty rho grid".into()));
    }
    if grid.iter().any(|r| r.is_nan() || r.abs() >= 1.0) {
        return Err(Error::InvalidInput("grid values must lie in (-1, 1)".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Fits one model and estimates the effect at a single grid value.
/// Grid index `index` derives the fit seed `config.seed + index`; the Monte
/// Carlo draws use a separate stream of the same seed.
pub fn curve_point(
    data: &ModelSpace,
    rho: f64,
    index: usize,
    config: &TrainConfig,
    n_samples: usize,
    levels: Interventions,
) -> Result<RhoCurvePoint> {
    let wrap = |e: Error| Error::SweepPoint { rho, source: Box::new(e) };
    let seed = config.seed.wrapping_add(index as u64);
    let cfg = TrainConfig { seed, ..config.clone() }.with_rho(rho).map_err(wrap)?;
    let report = fit(&data.pairs, &cfg).map_err(wrap)?;
    let model = RhoGnfModel::new(report.final_params.clone(), cfg.rho).with_outcome_codec(data.outcome);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let est = estimate_ace(&model, levels.a1, levels.a0, n_samples, &mut rng).map_err(wrap)?;
    Ok(RhoCurvePoint { rho, ace: est.ace, ey1: est.ey1, ey0: est.ey0, fit: report })
}

/// Fits a model per grid value (in parallel), estimates the effect at each,
/// and summarises the curve. Results are assembled in grid order and do not
/// depend on thread scheduling.
pub fn sweep_rho_curve(data: &ModelSpace, grid: &[f64], config: &TrainConfig, n_samples: usize) -> Result<RhoCurve> {
    sweep_rho_curve_at(data, grid, config, n_samples, Interventions::unit(data))
}

pub fn sweep_rho_curve_at(
    data: &ModelSpace,
    grid: &[f64],
    config: &TrainConfig,
    n_samples: usize,
    levels: Interventions,
) -> Result<RhoCurve> {
    check_grid(grid)?;
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, &rho)| curve_point(data, rho, i, config, n_samples, levels))
        .collect::<Result<Vec<_>>>()?;
    assemble_curve(data, points, levels, n_samples)
}

/// Builds the curve summary from already-computed points (grid order).
pub fn assemble_curve(
    data: &ModelSpace,
    points: Vec<RhoCurvePoint>,
    levels: Interventions,
    n_samples: usize,
) -> Result<RhoCurve> {
    let grid: Vec<f64> = points.iter().map(|p| p.rho).collect();
    check_grid(&grid)?;
    let rho_value_closed = rho_value_closed_form(&data.pairs)?;
    let crossings = zero_crossings(&points);
    let rho_value_intercept = nearest(&crossings, rho_value_closed);
    let bounds = curve_bounds(&points);
    Ok(RhoCurve {
        intercept_count: crossings.len(),
        points,
        grid,
        rho_value_closed,
        rho_value_intercept,
        bounds,
        a1: levels.a1,
        a0: levels.a0,
        n_samples,
    })
}

pub fn curve_bounds(points: &[RhoCurvePoint]) -> Bounds {
    let (lower, upper) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), p| (l.min(p.ace), u.max(p.ace)));
    Bounds { lower, upper }
}

/// `2·sin(π·ρ_S/6)` where `ρ_S` is the Spearman correlation of the pairs.
pub fn rho_value_closed_form(pairs: &[(f64, f64)]) -> Result<f64> {
    let (a, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    rho_from_spearman(spearman_rho(&a, &y)?)
}

/// Every `rho` where the piecewise-linear curve through the points hits zero.
pub fn zero_crossings(points: &[RhoCurvePoint]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if p.ace == 0.0 {
            out.push(p.rho);
            continue;
        }
        if let Some(q) = points.get(i + 1) {
            if q.ace != 0.0 && p.ace.signum() != q.ace.signum() {
                out.push(p.rho + (q.rho - p.rho) * p.ace / (p.ace - q.ace));
            }
        }
    }
    out
}

/// The zero crossing nearest `reference`, or `None` if the curve keeps one sign.
pub fn rho_value_from_curve(points: &[RhoCurvePoint], reference: f64) -> Option<f64> {
    nearest(&zero_crossings(points), reference)
}

fn nearest(xs: &[f64], reference: f64) -> Option<f64> {
    xs.iter().copied().min_by(|a, b| (a - reference).abs().total_cmp(&(b - reference).abs()))
}
