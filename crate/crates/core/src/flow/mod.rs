//! Learnable strictly increasing transforms for treatment and outcome.
//!
//! The treatment transform `T_A` is an unconditional spline. The outcome
//! transform `T_{Y|A}` is a spline whose raw parameters are produced by a
//! conditioner network fed with the treatment value. Both map data space to
//! the standard-normal noise space of the copula base distribution; sampling
//! runs them backwards.

pub mod conditioner;
pub mod spline;

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::copula::{log_density_unchecked, CopulaParam};
use crate::error::{invalid, Error, Result};

use conditioner::{MlpShape, MlpWork};
pub use spline::{raw_len, Spline, TransformEval, MAX_BINS};

pub const DEFAULT_BINS: usize = 8;
pub const DEFAULT_HIDDEN: [usize; 3] = [20, 15, 10];
pub const ACTIVATION: &str = "tanh";

const PARAM_FORMAT: &str = "rho-gnf-params";
const PARAM_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// `[min − margin·range, max + margin·range]` of the finite values in `xs`.
    pub fn around(xs: &[f64], margin: f64) -> Result<Self> {
        let (min, max) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
        if !(min.is_finite() && max.is_finite()) {
            return invalid("cannot derive a range from empty or non-finite data");
        }
        let range = max - min;
        if range <= 0.0 {
            return invalid("cannot derive a range from a constant column");
        }
        Ok(Self {
            lo: min - margin * range,
            hi: max + margin * range,
        })
    }
}

/// Architecture descriptor shared by both transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowHyper {
    pub bins: usize,
    /// Hidden layer widths of the outcome conditioner.
    pub hidden: Vec<usize>,
    pub activation: String,
    pub a_range: Interval,
    pub y_range: Interval,
    /// The conditioner sees `(a − cond_center) / cond_scale`.
    pub cond_center: f64,
    pub cond_scale: f64,
}

impl FlowHyper {
    /// Derives spline intervals and conditioner input scaling from data.
    pub fn from_data(a: &[f64], y: &[f64], bins: usize, hidden: &[usize]) -> Result<Self> {
        let a_range = Interval::around(a, 0.5)?;
        let y_range = Interval::around(y, 0.5)?;
        let observed = Interval::around(a, 0.0)?;
        let hyper = Self {
            bins,
            hidden: hidden.to_vec(),
            activation: ACTIVATION.to_string(),
            a_range,
            y_range,
            cond_center: 0.5 * (observed.lo + observed.hi),
            cond_scale: 0.5 * (observed.hi - observed.lo),
        };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.bins > MAX_BINS {
            return Err(Error::InvalidParameter(format!(
                "bins must be in 1..={MAX_BINS}, got {}",
                self.bins
            )));
        }
        if self.activation != ACTIVATION {
            return Err(Error::InvalidParameter(format!(
                "unsupported activation {:?}",
                self.activation
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidParameter("zero-width hidden layer".into()));
        }
        for (name, r) in [("a_range", self.a_range), ("y_range", self.y_range)] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite, non-empty interval")));
            }
        }
        if !(self.cond_center.is_finite() && self.cond_scale.is_finite() && self.cond_scale > 0.0) {
            return Err(Error::InvalidParameter("conditioner scaling must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn conditioner_shape(&self) -> MlpShape {
        MlpShape::new(1, &self.hidden, raw_len(self.bins))
    }

    pub fn treatment_len(&self) -> usize {
        raw_len(self.bins)
    }

    pub fn outcome_len(&self) -> usize {
        self.conditioner_shape().param_count()
    }
}

/// Parameters of both transforms: `theta_a` feeds the treatment spline
/// directly, `theta_y` holds the conditioner weights for the outcome spline.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    hyper: FlowHyper,
    shape: MlpShape,
    theta_a: Vec<f64>,
    theta_y: Vec<f64>,
}

impl FlowParams {
    /// Identity transforms: uniform knots, unit derivatives, zero output
    /// layer. The hidden conditioner layers get seeded random weights so the
    /// network can break symmetry once training starts.
    pub fn identity<R: Rng + ?Sized>(hyper: FlowHyper, rng: &mut R) -> Result<Self> {
        hyper.validate()?;
        let shape = hyper.conditioner_shape();
        let theta_y = shape.init(rng);
        Ok(Self {
            theta_a: vec![0.0; hyper.treatment_len()],
            theta_y,
            shape,
            hyper,
        })
    }

    pub fn from_parts(hyper: FlowHyper, theta_a: Vec<f64>, theta_y: Vec<f64>) -> Result<Self> {
        hyper.validate()?;
        let shape = hyper.conditioner_shape();
        if theta_a.len() != hyper.treatment_len() || theta_y.len() != shape.param_count() {
            return Err(Error::InvalidParameter(format!(
                "parameter lengths ({}, {}) do not match architecture ({}, {})",
                theta_a.len(),
                theta_y.len(),
                hyper.treatment_len(),
                shape.param_count()
            )));
        }
        if theta_a.iter().chain(&theta_y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite parameter".into()));
        }
        Ok(Self {
            hyper,
            shape,
            theta_a,
            theta_y,
        })
    }

    /// Adds independent `N(0, scale²)` noise to every parameter.
    pub fn perturbed<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Self {
        let mut out = self.clone();
        for p in out.theta_a.iter_mut().chain(out.theta_y.iter_mut()) {
            let e: f64 = rng.sample(StandardNormal);
            *p += scale * e;
        }
        out
    }

    pub fn hyper(&self) -> &FlowHyper {
        &self.hyper
    }

    pub fn theta_a(&self) -> &[f64] {
        &self.theta_a
    }

    pub fn theta_y(&self) -> &[f64] {
        &self.theta_y
    }

    pub fn len(&self) -> usize {
        self.theta_a.len() + self.theta_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All parameters, treatment first.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.theta_a.clone();
        v.extend_from_slice(&self.theta_y);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.len(), "flat parameter length mismatch");
        let (a, y) = flat.split_at(self.theta_a.len());
        self.theta_a.copy_from_slice(a);
        self.theta_y.copy_from_slice(y);
    }

    pub fn treatment_transform(&self) -> Spline {
        let r = self.hyper.a_range;
        Spline::from_raw(&self.theta_a, r.lo, r.hi)
    }

    /// The outcome transform with its conditioning input fixed at `a_cond`.
    pub fn outcome_transform(&self, a_cond: f64) -> Result<Spline> {
        finite("conditioning value", a_cond)?;
        let mut work = MlpWork::new(&self.shape);
        let mut spline = Spline::new(self.hyper.bins);
        self.outcome_into(a_cond, &mut work, &mut spline);
        Ok(spline)
    }

    fn outcome_into(&self, a_cond: f64, work: &mut MlpWork, spline: &mut Spline) {
        let u = (a_cond - self.hyper.cond_center) / self.hyper.cond_scale;
        conditioner::forward(&self.shape, &self.theta_y, &[u], work);
        let r = self.hyper.y_range;
        spline.rebuild(work.output(), r.lo, r.hi);
    }

    pub fn forward_a(&self, a: f64) -> Result<TransformEval> {
        finite("treatment value", a)?;
        Ok(self.treatment_transform().forward(a))
    }

    pub fn forward_y(&self, y: f64, a_cond: f64) -> Result<TransformEval> {
        finite("outcome value", y)?;
        Ok(self.outcome_transform(a_cond)?.forward(y))
    }

    pub fn inverse_a(&self, z: f64) -> Result<f64> {
        self.treatment_transform().inverse(z)
    }

    pub fn inverse_y(&self, z: f64, a_cond: f64) -> Result<f64> {
        self.outcome_transform(a_cond)?.inverse(z)
    }

    /// Mean negative log-likelihood of `batch` under the copula model at `rho`.
    pub fn mean_nll(&self, batch: &[(f64, f64)], rho: CopulaParam) -> Result<f64> {
        let rho = rho.non_degenerate()?.rho();
        if batch.is_empty() {
            return invalid("empty batch");
        }
        let ta = self.treatment_transform();
        let mut work = MlpWork::new(&self.shape);
        let mut ty = Spline::new(self.hyper.bins);
        let mut total = 0.0;
        for &(a, y) in batch {
            let ea = ta.forward(a);
            self.outcome_into(a, &mut work, &mut ty);
            let ey = ty.forward(y);
            total -= log_density_unchecked(rho, ea.value, ey.value) + ea.log_deriv + ey.log_deriv;
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean negative log-likelihood and its exact gradient with respect to
    /// [`to_flat`](Self::to_flat). Points are accumulated sequentially in
    /// batch order, so the result is deterministic.
    pub fn loss_and_gradient(&self, batch: &[(f64, f64)], rho: CopulaParam) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.len()];
        let mut work = GradWork::new(self);
        let loss = self.loss_and_gradient_into(batch, rho, &mut grad, &mut work)?;
        Ok((loss, grad))
    }

    /// Gradient of the mean negative log-likelihood; see [`loss_and_gradient`](Self::loss_and_gradient).
    pub fn param_gradient(&self, batch: &[(f64, f64)], rho: CopulaParam) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(batch, rho)?.1)
    }

    pub(crate) fn loss_and_gradient_into(
        &self,
        batch: &[(f64, f64)],
        rho: CopulaParam,
        grad: &mut [f64],
        work: &mut GradWork,
    ) -> Result<f64> {
        let rho = rho.non_degenerate()?.rho();
        if batch.is_empty() {
            return invalid("empty batch");
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n_a = self.theta_a.len();
        let (grad_a, grad_y) = grad.split_at_mut(n_a);
        let inv_n = 1.0 / batch.len() as f64;
        let one_m = 1.0 - rho * rho;
        let ta = self.treatment_transform();
        let mut total = 0.0;
        for &(a, y) in batch {
            let ea = ta.forward(a);
            self.outcome_into(a, &mut work.mlp, &mut work.spline);
            let ey = work.spline.forward(y);
            total -= log_density_unchecked(rho, ea.value, ey.value) + ea.log_deriv + ey.log_deriv;

            // ∂(−log φ_ρ)/∂z
            let g_za = (ea.value - rho * ey.value) / one_m * inv_n;
            let g_zy = (ey.value - rho * ea.value) / one_m * inv_n;
            ta.backward(a, g_za, -inv_n, grad_a);
            work.raw_grad.iter_mut().for_each(|g| *g = 0.0);
            work.spline.backward(y, g_zy, -inv_n, &mut work.raw_grad);
            conditioner::backward(&self.shape, &self.theta_y, &work.raw_grad, &mut work.mlp, grad_y);
        }
        Ok(total * inv_n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ParamFile {
            format: PARAM_FORMAT.to_string(),
            version: PARAM_VERSION,
            hyper: self.hyper.clone(),
            theta_a: self.theta_a.clone(),
            theta_y: self.theta_y.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(text)?;
        if file.format != PARAM_FORMAT {
            return Err(Error::InvalidParameter(format!("not a parameter file: format {:?}", file.format)));
        }
        if file.version != PARAM_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported parameter file version {}",
                file.version
            )));
        }
        Self::from_parts(file.hyper, file.theta_a, file.theta_y)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout of a parameter file (JSON).
#[derive(Serialize, Deserialize)]
struct ParamFile {
    format: String,
    version: u32,
    hyper: FlowHyper,
    theta_a: Vec<f64>,
    theta_y: Vec<f64>,
}

/// Scratch buffers for gradient evaluation, reusable across batches.
#[derive(Debug, Clone)]
pub struct GradWork {
    mlp: MlpWork,
    spline: Spline,
    raw_grad: Vec<f64>,
}

impl GradWork {
    pub fn new(params: &FlowParams) -> Self {
        Self {
            mlp: MlpWork::new(&params.shape),
            spline: Spline::new(params.hyper.bins),
            raw_grad: vec![0.0; raw_len(params.hyper.bins)],
        }
    }
}

fn finite(what: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("non-finite {what}: {v}"))
    }
}
