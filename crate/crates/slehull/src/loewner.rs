//! Coefficient hierarchy of the Loewner map along a driving path.
//!
//! The time derivatives of the expansion coefficients `a_1, ..., a_M` of
//! `g_t(z) = z + a_1/z + ...` are the tail coefficients of
//! `2 / (g_t(z) - X_t)`, generated from the series algebra rather than
//! hand-coded per index. They are integrated with Heun's rule on the SDE
//! time grid, holding X piecewise-constant per step; the driving path is
//! only Holder-1/2, so higher-order schemes buy nothing.

use crate::moments::MomentIndex;
use crate::sde::{self, DrivingPath, SleParams, StepConfig};
use crate::series::{self, Coeff, TailSeries};
use crate::stats::RunningStats;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// Loewner coefficients a_1..a_M at capacity time t.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CoefficientState {
    pub t: f64,
    pub a: Vec<f64>,
}

impl CoefficientState {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// The map as an affine tail series (for the stationarity flow).
    pub fn to_series(&self) -> TailSeries<f64> {
        TailSeries::affine(self.a.clone())
    }
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > series::MAX_ORDER {
        Err(Error::OrderOutOfRange)
    } else {
        Ok(())
    }
}

/// `(adot_1, ..., adot_M)` = tail coefficients of `2 / (g - X)`.
/// In particular adot_1 = 2, adot_2 = 2X, adot_3 = 2(X^2 - a_1),
/// adot_4 = 2(X^3 - 2 a_1 X - a_2).
pub fn coefficient_rhs_in<T: Coeff>(a: &[T], x: &T) -> Vec<T> {
    let m = a.len();
    let g = TailSeries::affine_with_constant(-x.clone(), a.to_vec());
    let two = T::one() + T::one();
    let recip = series::tail_reciprocal(&g, m).expect("affine input by construction");
    recip.tail().iter().map(|c| c.clone() * two.clone()).collect()
}

pub fn coefficient_rhs(a: &[f64], x: f64) -> Vec<f64> {
    coefficient_rhs_in(a, &x)
}

/// Integrate the hierarchy from a = 0 over the whole path (to tau when the
/// path is absorbed, otherwise to its final time).
pub fn integrate_coefficients(path: &DrivingPath, m: usize) -> Result<CoefficientState> {
    check_order(m)?;
    if path.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = vec![0.0; m];
    let mut pred = vec![0.0; m];
    for i in 1..path.len() {
        let dt = path.times[i] - path.times[i - 1];
        if dt == 0.0 {
            continue;
        }
        let x = path.x_vals[i - 1];
        let k1 = coefficient_rhs(&a, x);
        for j in 0..m {
            pred[j] = a[j] + dt * k1[j];
        }
        let k2 = coefficient_rhs(&pred, x);
        for j in 0..m {
            a[j] += 0.5 * dt * (k1[j] + k2[j]);
        }
    }
    Ok(CoefficientState {
        t: path.final_time(),
        a,
    })
}

/// Simulate to the swallowing time and integrate the coefficients there.
pub fn sample_sle_data<R: Rng>(
    params: &SleParams,
    cfg: &StepConfig,
    m: usize,
    rng: &mut R,
) -> Result<CoefficientState> {
    check_order(m)?;
    let path = sde::simulate_to_hit(params, cfg, rng)?;
    if !path.absorbed {
        return Err(Error::TimeCapReached { t_cap: cfg.t_cap });
    }
    integrate_coefficients(&path, m)
}

/// Per-replica record for JSON-lines output.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ReplicaRecord {
    pub replica: u64,
    pub tau: f64,
    pub a: Vec<f64>,
}

/// Monte Carlo estimate of `E[prod a_i^{k_i}]` for a batch of indices.
#[derive(Clone, Debug, serde::Serialize)]
pub struct McMomentEstimate {
    pub index: String,
    pub n: u64,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Set when kappa >= 8/(2N+1) for the *squared* index, i.e. the
    /// estimator variance does not exist (rho = kappa - 6 heuristic).
    pub tail_warning: bool,
    pub n_failed: u64,
}

/// Estimate moments of the coefficients at tau over `n` replicas, one RNG
/// stream per replica. Replicas that hit the time cap are dropped and
/// counted in `n_failed`.
pub fn estimate_moments(
    params: &SleParams,
    cfg: &StepConfig,
    indices: &[MomentIndex],
    n: u64,
    master_seed: u64,
) -> Result<Vec<McMomentEstimate>> {
    let m = indices
        .iter()
        .map(|i| i.exponents().len())
        .max()
        .ok_or(Error::EmptySample)?
        .max(1);
    check_order(m)?;
    params.validate()?;
    let nu = params.bessel_index();
    if !sde::hits_zero(nu) {
        return Err(Error::TauAlmostSurelyInfinite { nu });
    }

    let per_replica: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|replica| {
            let mut rng = sde::replica_rng(master_seed, replica);
            match sample_sle_data(params, cfg, m, &mut rng) {
                Ok(state) => {
                    let products = indices
                        .iter()
                        .map(|idx| {
                            idx.exponents()
                                .iter()
                                .enumerate()
                                .map(|(i, &k)| state.a[i].powi(k as i32))
                                .product::<f64>()
                        })
                        .collect();
                    Some(products)
                }
                Err(_) => None,
            }
        })
        .collect();

    let mut out = Vec::with_capacity(indices.len());
    for (pos, idx) in indices.iter().enumerate() {
        let mut acc = RunningStats::new();
        let mut failed = 0u64;
        for row in &per_replica {
            match row {
                Some(vals) => acc.push(vals[pos]),
                None => failed += 1,
            }
        }
        let est = acc.estimate()?;
        // Variance exists when kappa < threshold of the doubled index.
        let doubled =
            MomentIndex::new(idx.exponents().iter().map(|&k| 2 * k).collect());
        let tail_warning = params.kappa >= doubled.existence_threshold();
        out.push(McMomentEstimate {
            index: idx.label(),
            n: est.n,
            estimate: est.mean,
            se: est.se,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            tail_warning,
            n_failed: failed,
        });
    }
    Ok(out)
}

/// Sample `n` replicas and emit their records (for the `simulate` command's
/// JSON-lines output and for ensemble building).
pub fn sample_replicas(
    params: &SleParams,
    cfg: &StepConfig,
    m: usize,
    n: u64,
    master_seed: u64,
) -> Result<Vec<Option<ReplicaRecord>>> {
    check_order(m)?;
    let nu = params.bessel_index();
    if !sde::hits_zero(nu) {
        return Err(Error::TauAlmostSurelyInfinite { nu });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|replica| {
            let mut rng = sde::replica_rng(master_seed, replica);
            sample_sle_data(params, cfg, m, &mut rng)
                .ok()
                .map(|state| ReplicaRecord {
                    replica,
                    tau: state.t,
                    a: state.a,
                })
        })
        .collect())
}
