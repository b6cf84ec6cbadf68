//! Stationarity of the stopped hull under the Loewner flow.
//!
//! Growing the configuration for a fixed capacity time `t`, then growing a
//! fresh stopped hull from the evolved marked points, produces a composed
//! map whose coefficients have the same law as those of a hull grown
//! directly to its swallowing time. The composition is
//! `G = g_t + sum_n atilde_n alpha^{n+1} / (g_t - beta)^n`, where
//! `(alpha, beta)` is the affine change of coordinates sending the
//! normalized seed frame onto the evolved marked points.

use crate::loewner::{self, CoefficientState};
use crate::sde::{self, SleParams, StepConfig};
use crate::series;
use crate::stats;
use crate::{density, Error, Result};
use rand::Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

/// Increasing affine map `z -> alpha z + beta`.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub alpha: f64,
    pub beta: f64,
}

impl AffineMap {
    pub fn apply(&self, z: f64) -> f64 {
        self.alpha * z + self.beta
    }
}

/// The unique increasing affine map with `phi(x) = big_x`, `phi(y) = big_y`.
/// Errors when the image pair is flipped or collapsed relative to (x, y).
pub fn phi_from_marked_points(big_x: f64, big_y: f64, x: f64, y: f64) -> Result<AffineMap> {
    let alpha = (big_x - big_y) / (x - y);
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::MarkedPointsCrossed);
    }
    let beta = (big_y * x - big_x * y) / (x - y);
    Ok(AffineMap { alpha, beta })
}

/// Coefficients produced by the flow construction for one replica.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub a: Vec<f64>,
    /// The gap closed before the flow time; the sample is the plain stopped
    /// hull at tau.
    pub hit_before: bool,
}

/// One replica of the flow construction: evolve to `min(t, tau)`; if the
/// hull survived, grow a fresh stopped hull from the evolved marked points
/// and compose. `t = 0` composes directly with the identity flow.
pub fn flow_one_sample<R: Rng>(
    params: &SleParams,
    cfg: &StepConfig,
    t: f64,
    m: usize,
    rng: &mut R,
) -> Result<FlowSample> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams("flow time must be nonnegative".into()));
    }
    let (outer, big_x, big_y) = if t == 0.0 {
        let outer = CoefficientState {
            t: 0.0,
            a: vec![0.0; m],
        };
        (outer, params.x, params.y)
    } else {
        let path = sde::simulate_until(params, cfg, t, rng)?;
        let state = loewner::integrate_coefficients(&path, m)?;
        if path.absorbed {
            return Ok(FlowSample {
                a: state.a,
                hit_before: true,
            });
        }
        if path.final_time() < t {
            return Err(Error::TimeCapReached { t_cap: cfg.t_cap });
        }
        let big_x = *path.x_vals.last().unwrap();
        let big_y = *path.y_vals.last().unwrap();
        (state, big_x, big_y)
    };
    let sigma = if params.x > params.y { 1i8 } else { -1 };
    let inner = SleParams::normalized(params.kappa, params.rho, sigma)?;
    let tilde = loewner::sample_sle_data(&inner, cfg, m, rng)?;
    compose(&outer, &tilde, inner.x, inner.y, big_x, big_y, m)
}

fn compose(
    outer: &CoefficientState,
    inner: &CoefficientState,
    x: f64,
    y: f64,
    big_x: f64,
    big_y: f64,
    m: usize,
) -> Result<FlowSample> {
    let phi = phi_from_marked_points(big_x, big_y, x, y)?;
    let g = outer.to_series();
    let composed = series::assemble_g(&g, &inner.a, &phi.alpha, &phi.beta, m)?;
    Ok(FlowSample {
        a: (1..=m).map(|j| *composed.coeff(j)).collect(),
        hit_before: false,
    })
}

/// Two-sample comparison of one coefficient between the flowed and the
/// direct ensemble.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CoeffComparison {
    /// 1-based coefficient index.
    pub coeff: usize,
    pub ks_stat: f64,
    pub p_value: f64,
}

/// Joint sign balance of the even (mirror-odd) coefficients: largest
/// two-proportion z-score of P(a_k > 0) between the arms, with a
/// Bonferroni-corrected two-sided p-value.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SignDiagnostic {
    pub coeffs: Vec<usize>,
    pub z_max: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct EnsembleReport {
    pub t: f64,
    pub n_flowed: u64,
    pub n_direct: u64,
    /// Fraction of flowed replicas whose gap closed before t.
    pub frac_tau_le_t: f64,
    pub comparisons: Vec<CoeffComparison>,
    pub sign_diagnostic: Option<SignDiagnostic>,
    pub n_failed: u64,
    pub small_sample_warning: bool,
}

fn sign_diagnostic(flowed: &[Vec<f64>], direct: &[Vec<f64>], m: usize) -> Option<SignDiagnostic> {
    let coeffs: Vec<usize> = (2..=m).step_by(2).collect();
    if coeffs.is_empty() {
        return None;
    }
    let mut z_max = 0.0f64;
    for &k in &coeffs {
        let pos = |rows: &[Vec<f64>]| rows.iter().filter(|a| a[k - 1] > 0.0).count() as f64;
        let (n1, n2) = (flowed.len() as f64, direct.len() as f64);
        let (p1, p2) = (pos(flowed) / n1, pos(direct) / n2);
        let pool = (p1 * n1 + p2 * n2) / (n1 + n2);
        let var = pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2);
        let z = if var > 0.0 {
            (p1 - p2).abs() / var.sqrt()
        } else {
            0.0
        };
        z_max = z_max.max(z);
    }
    let p = (coeffs.len() as f64 * erfc(z_max / std::f64::consts::SQRT_2)).min(1.0);
    Some(SignDiagnostic {
        coeffs,
        z_max,
        p_value: p,
    })
}

/// Grow `n` flowed and `n` direct replicas and KS-compare each coefficient.
/// Streams 0..n drive the flowed arm, n..2n the direct arm; replicas that
/// hit the time cap are dropped and counted.
pub fn stationarity_experiment(
    params: &SleParams,
    cfg: &StepConfig,
    t: f64,
    m: usize,
    n: u64,
    master_seed: u64,
) -> Result<EnsembleReport> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams("flow time must be nonnegative".into()));
    }
    params.validate()?;
    let nu = params.bessel_index();
    if !sde::hits_zero(nu) {
        return Err(Error::TauAlmostSurelyInfinite { nu });
    }

    let flowed: Vec<Option<FlowSample>> = (0..n)
        .into_par_iter()
        .map(|replica| {
            let mut rng = sde::replica_rng(master_seed, replica);
            flow_one_sample(params, cfg, t, m, &mut rng).ok()
        })
        .collect();
    let direct: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|replica| {
            let mut rng = sde::replica_rng(master_seed, n + replica);
            loewner::sample_sle_data(params, cfg, m, &mut rng)
                .ok()
                .map(|s| s.a)
        })
        .collect();

    let hits = flowed
        .iter()
        .flatten()
        .filter(|fs| fs.hit_before)
        .count() as u64;
    let flowed_rows: Vec<Vec<f64>> = flowed.into_iter().flatten().map(|fs| fs.a).collect();
    let direct_rows: Vec<Vec<f64>> = direct.into_iter().flatten().collect();
    let (n_flowed, n_direct) = (flowed_rows.len() as u64, direct_rows.len() as u64);
    let n_failed = 2 * n - n_flowed - n_direct;
    if n_flowed == 0 || n_direct == 0 {
        return Err(Error::EmptySample);
    }

    let mut comparisons = Vec::with_capacity(m);
    for j in 0..m {
        let xs: Vec<f64> = flowed_rows.iter().map(|a| a[j]).collect();
        let ys: Vec<f64> = direct_rows.iter().map(|a| a[j]).collect();
        let r = stats::ks_two_sample(&xs, &ys)?;
        comparisons.push(CoeffComparison {
            coeff: j + 1,
            ks_stat: r.statistic,
            p_value: r.p_value,
        });
    }
    Ok(EnsembleReport {
        t,
        n_flowed,
        n_direct,
        frac_tau_le_t: hits as f64 / n_flowed as f64,
        comparisons,
        sign_diagnostic: sign_diagnostic(&flowed_rows, &direct_rows, m),
        n_failed,
        small_sample_warning: n < 100,
    })
}

/// A flow time at which roughly a fraction `p` of replicas are already
/// absorbed: the p-quantile of tau in the normalized frame.
pub fn suggest_flow_time(kappa: f64, rho: f64, p: f64) -> Result<f64> {
    let law = density::capacity_law(kappa, rho)?;
    Ok(law.quantile(p) / 2.0)
}
