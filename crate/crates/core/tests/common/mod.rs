//! Helpers shared by the gradient test and the acceptance suite.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhognf::copula::CopulaParam;
use rhognf::dgp::LinearScmParams;
use rhognf::flow::{FlowHyper, FlowParams, Interval, ACTIVATION, DEFAULT_BINS, DEFAULT_HIDDEN};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Central difference of the mean NLL along each parameter.
pub fn finite_difference(params: &FlowParams, batch: &[(f64, f64)], rho: CopulaParam, h: f64) -> Vec<f64> {
    let base = params.to_flat();
    let mut probe = params.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_flat(&p);
            let up = probe.mean_nll(batch, rho).unwrap();
            p[i] = base[i] - h;
            probe.set_flat(&p);
            let down = probe.mean_nll(batch, rho).unwrap();
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_config(seed: u64) -> (FlowParams, Vec<(f64, f64)>, CopulaParam) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hyper = FlowHyper {
        bins: DEFAULT_BINS,
        hidden: DEFAULT_HIDDEN.to_vec(),
        activation: ACTIVATION.into(),
        a_range: Interval { lo: -2.5, hi: 2.5 },
        y_range: Interval { lo: -3.0, hi: 3.5 },
        cond_center: 0.1,
        cond_scale: 1.7,
    };
    let params = FlowParams::identity(hyper, &mut rng).unwrap().perturbed(0.2, &mut rng);
    // a few points fall in the linear tails
    let batch = (0..16)
        .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-4.0..4.0)))
        .collect();
    let rho = CopulaParam::new(rng.random_range(-0.9..0.9)).unwrap();
    (params, batch, rho)
}

/// Parameters of configuration `seed` whose analytic gradient disagrees with
/// central differences beyond rtol 1e-4 (plus an absolute floor at the
/// finite-difference noise level).
pub fn gradient_mismatches(seed: u64) -> Vec<String> {
    let (params, batch, rho) = random_config(seed);
    let analytic = params.param_gradient(&batch, rho).unwrap();
    let numeric = finite_difference(&params, &batch, rho, 1e-5);
    analytic
        .iter()
        .zip(&numeric)
        .enumerate()
        .filter(|(_, (g, f))| (*g - *f).abs() > 1e-4 * g.abs().max(f.abs()) + 1e-8)
        .map(|(i, (g, f))| format!("seed {seed} param {i}: analytic {g:e} numeric {f:e}"))
        .collect()
}

/// `E[Y_1 − Y_0]` under a Gaussian-copula model of the linear SCM's observational
/// law, by quadrature over the outcome noise. Each arm maps `z` through the
/// conditional quantile: `y = μ(a) + s·Φ⁻¹(Φ((z − ρ·a)/√(1−ρ²)))`.
pub fn ace_by_quadrature(p: &LinearScmParams, rho: f64) -> f64 {
    let n = Normal::standard();
    let sd_y = (p.alpha * p.alpha + 2.0 * p.alpha * p.beta + p.delta).sqrt();
    let r_obs = (p.alpha + p.beta) / sd_y;
    let s = sd_y * (1.0 - r_obs * r_obs).sqrt();
    let y = |z: f64, a: f64| {
        let x = (z - rho * a) / (1.0 - rho * rho).sqrt();
        // stay in the lower tail, where Φ keeps full relative precision;
        // beyond |x| = 30 Φ underflows and the identity Φ⁻¹(Φ(x)) = x is used
        let q = if x.abs() > 30.0 {
            x
        } else if x > 0.0 {
            -n.inverse_cdf(n.cdf(-x))
        } else {
            n.inverse_cdf(n.cdf(x))
        };
        r_obs * sd_y * a + s * q
    };
    // Simpson on [-12, 12]; the integrand is smooth and negligible beyond.
    let steps = 24_000;
    let h = 24.0 / steps as f64;
    let mut total = 0.0;
    for i in 0..=steps {
        let z = -12.0 + i as f64 * h;
        let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * (y(z, 1.0) - y(z, 0.0)) * n.pdf(z);
    }
    total * h / 3.0
}
