//! Analytic law of the half-plane capacity at the swallowing time.
//!
//! The capacity a_1 = 2*tau has density
//!
//! ```text
//! nu(x) = C x^{-a} exp(-b/x),   a = (3 kappa - 2 rho - 4) / (2 kappa),
//!                               b = 4 / kappa,
//! ```
//!
//! i.e. an inverse-gamma law with shape a-1 and scale b. The density is
//! normalizable iff a > 1 (kappa < 8 when rho = kappa - 6); the
//! normalization has the closed form C = b^{a-1} / Gamma(a-1), cross-checked
//! against quadrature at construction.

use crate::quad;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

#[derive(Clone, Copy, Debug)]
pub struct CapacityLaw {
    pub kappa: f64,
    pub rho: f64,
    /// Power-law exponent: nu(x) ~ C x^{-a} at infinity.
    pub a: f64,
    /// Exponential scale: the e^{-b/x} damping at zero.
    pub b: f64,
    /// ln of the normalization constant.
    ln_c: f64,
}

/// Build the law, verifying normalizability and the closed-form constant.
pub fn capacity_law(kappa: f64, rho: f64) -> Result<CapacityLaw> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParams(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let a = (3.0 * kappa - 2.0 * rho - 4.0) / (2.0 * kappa);
    let b = 4.0 / kappa;
    if !(a > 1.0) {
        return Err(Error::NotNormalizable { a });
    }
    let ln_c = (a - 1.0) * b.ln() - ln_gamma(a - 1.0);
    let law = CapacityLaw {
        kappa,
        rho,
        a,
        b,
        ln_c,
    };
    // Guard the algebra: quadrature of the density must give 1.
    let total = quad::integral_zero_inf(|x| law.pdf(x), 1e-11);
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParams(format!(
            "normalization cross-check failed: integral = {total}"
        )));
    }
    Ok(law)
}

impl CapacityLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let v = (self.ln_c - self.a * x.ln() - self.b / x).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    /// CDF via the regularized upper incomplete gamma of (a-1, b/x).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_ur(self.a - 1.0, self.b / x)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        gamma_lr(self.a - 1.0, self.b / x)
    }

    /// Mean b/(a-2); exists only for a > 2.
    pub fn mean(&self) -> Option<f64> {
        if self.a > 2.0 {
            Some(self.b / (self.a - 2.0))
        } else {
            None
        }
    }

    /// Quantile by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..1.0).contains(&p) && p > 0.0, "p must be in (0,1)");
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.cdf(hi) < p {
            hi *= 2.0;
            assert!(hi.is_finite());
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Exact draw: X = b / G with G ~ Gamma(a-1, rate 1).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.a - 1.0, 1.0).expect("shape > 0 by construction");
        let g: f64 = gamma.sample(rng);
        self.b / g
    }

    pub fn sample_n<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let gamma = Gamma::new(self.a - 1.0, 1.0).expect("shape > 0 by construction");
        (0..n).map(|_| self.b / gamma.sample(rng)).collect()
    }

    /// n-th moment by quadrature; matches the exact moment formulas when
    /// a - 1 > n.
    pub fn moment_quadrature(&self, n: u32) -> f64 {
        quad::integral_zero_inf(|x| x.powi(n as i32) * self.pdf(x), 1e-11)
    }
}

/// Smooth bump supported on [lo, hi], with analytic first and second
/// derivatives: f(s) = exp(-1/(1-s^2)) on s in (-1,1), s affine in x.
#[derive(Clone, Copy, Debug)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
}

impl Bump {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(hi > lo);
        Bump { lo, hi }
    }

    /// (f, f', f'') at x.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let r = 0.5 * (self.hi - self.lo);
        let c = 0.5 * (self.hi + self.lo);
        let s = (x - c) / r;
        if s.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let f = (-1.0 / q).exp();
        let g = -2.0 * s / (q * q); // (ln f)'
        let gp = (-2.0 - 6.0 * s * s) / (q * q * q); // (ln f)''
        let fs = f * g;
        let fss = f * (g * g + gp);
        (f, fs / r, fss / (r * r))
    }
}

/// Residual of the stationarity identity: the integral
/// `int (p f'' + q f') nu dx` with `p(x) = kappa/2 x^2` and
/// `q(x) = 2 + (kappa + 2 rho + 4)/4 x` vanishes for every smooth f with
/// compact support in (0, inf).
pub fn stationary_ode_residual(law: &CapacityLaw, f: &Bump) -> f64 {
    let p = |x: f64| 0.5 * law.kappa * x * x;
    let q = |x: f64| 2.0 + (law.kappa + 2.0 * law.rho + 4.0) / 4.0 * x;
    quad::tanh_sinh(
        |x| {
            let (_, f1, f2) = f.eval(x);
            (p(x) * f2 + q(x) * f1) * law.pdf(x)
        },
        f.lo,
        f.hi,
        1e-12,
    )
}
