//! Truncated tail-series algebra at infinity.
//!
//! A [`TailSeries`] represents an expansion
//!
//! ```text
//! lead * z + c_0 + c_1/z + c_2/z^2 + ... + c_M/z^M
//! ```
//!
//! truncated at order `M`. Affine series (`lead = 1`) house conformal maps
//! normalized as `z + o(1)` at infinity, optionally shifted by a constant
//! (e.g. `g - X`); pure-tail series (`lead = 0`) house their reciprocals.
//! Coefficients beyond the truncation order are dropped, never fabricated:
//! products shrink the retained order when an affine factor would require an
//! unknown coefficient of the other factor.
//!
//! The scalar type is generic so the same algebra runs on `f64` for Monte
//! Carlo and on `BigRational` for the exact cross-checks.

use crate::{Error, Result};
use num_traits::{One, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Hard cap on truncation orders; guards against accidental quadratic blowup.
pub const MAX_ORDER: usize = 64;

/// Scalar requirements for series coefficients.
pub trait Coeff:
    Clone
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + PartialOrd
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailSeries<T> {
    /// Coefficient of `z`; `1` for affine series, `0` for pure tails.
    lead: T,
    /// `coeffs[j]` is the coefficient of `z^{-j}`, `j = 0..=order`.
    coeffs: Vec<T>,
}

impl<T: Coeff> TailSeries<T> {
    /// Affine series `z + tail[0]/z + tail[1]/z^2 + ...`.
    pub fn affine(tail: Vec<T>) -> Self {
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(T::zero());
        coeffs.extend(tail);
        TailSeries {
            lead: T::one(),
            coeffs,
        }
    }

    /// Affine series with a constant term, `z + c0 + tail[0]/z + ...`.
    pub fn affine_with_constant(c0: T, tail: Vec<T>) -> Self {
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(c0);
        coeffs.extend(tail);
        TailSeries {
            lead: T::one(),
            coeffs,
        }
    }

    /// Pure tail `coeffs[0] + coeffs[1]/z + ...`.
    pub fn pure(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "pure series needs at least the constant");
        TailSeries {
            lead: T::zero(),
            coeffs,
        }
    }

    /// The identity map `z` retaining `order` tail coefficients.
    pub fn identity(order: usize) -> Self {
        TailSeries {
            lead: T::one(),
            coeffs: vec![T::zero(); order + 1],
        }
    }

    pub fn zero_series(order: usize) -> Self {
        TailSeries {
            lead: T::zero(),
            coeffs: vec![T::zero(); order + 1],
        }
    }

    /// Truncation order: the largest retained negative power of `z`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_affine(&self) -> bool {
        self.lead == T::one()
    }

    pub fn lead(&self) -> &T {
        &self.lead
    }

    /// Coefficient of `z^{-j}`. Panics beyond the truncation order; unknown
    /// coefficients are never reported as zero.
    pub fn coeff(&self, j: usize) -> &T {
        &self.coeffs[j]
    }

    /// Tail coefficients `c_1..c_M` (the `a_n` of a conformal map).
    pub fn tail(&self) -> &[T] {
        &self.coeffs[1..]
    }

    pub fn truncated(&self, order: usize) -> Self {
        assert!(order <= self.order());
        TailSeries {
            lead: self.lead.clone(),
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// `self - b` (shifts the constant term).
    pub fn sub_constant(&self, b: &T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0].clone() - b.clone();
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        TailSeries {
            lead: self.lead.clone() * s.clone(),
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    /// Sum, truncated to the shorter order.
    pub fn add_series(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|j| self.coeffs[j].clone() + other.coeffs[j].clone())
            .collect();
        TailSeries {
            lead: self.lead.clone() + other.lead.clone(),
            coeffs,
        }
    }

    /// Product with asymptotic truncation semantics. The retained order is
    /// reduced by one for each affine factor, since `z * c_{j+1} z^{-(j+1)}`
    /// needs a coefficient the other factor may not carry.
    ///
    /// Panics if both factors are affine (the product would have a `z^2`
    /// term, which this representation does not house).
    pub fn mul_series(&self, other: &Self) -> Self {
        assert!(
            self.lead.is_zero() || other.lead.is_zero(),
            "product of two affine series is outside the tail algebra"
        );
        let avail_self = if !other.lead.is_zero() {
            self.order().saturating_sub(1)
        } else {
            self.order()
        };
        let avail_other = if !self.lead.is_zero() {
            other.order().saturating_sub(1)
        } else {
            other.order()
        };
        let order = avail_self.min(avail_other);

        let lead = self.lead.clone() * other.coeffs[0].clone()
            + other.lead.clone() * self.coeffs[0].clone();
        let mut coeffs = Vec::with_capacity(order + 1);
        for j in 0..=order {
            let mut c = T::zero();
            if !self.lead.is_zero() {
                c = c + self.lead.clone() * other.coeffs[j + 1].clone();
            }
            if !other.lead.is_zero() {
                c = c + other.lead.clone() * self.coeffs[j + 1].clone();
            }
            for u in 0..=j {
                c = c + self.coeffs[u].clone() * other.coeffs[j - u].clone();
            }
            coeffs.push(c);
        }
        TailSeries { lead, coeffs }
    }
}

/// Reciprocal of an affine series as a pure tail starting at `z^{-1}`.
///
/// Writing `h = z (1 + a_1 w + a_2 w^2 + ...)` in `w = 1/z`, the reciprocal
/// power series `b` satisfies `b_0 = 1`, `b_n = -sum_{k=1..n} a_k b_{n-k}`,
/// and `1/h = b_0/z + b_1/z^2 + ...`.
pub fn tail_reciprocal<T: Coeff>(h: &TailSeries<T>, order: usize) -> Result<TailSeries<T>> {
    if order == 0 {
        return Err(Error::EmptyTruncation);
    }
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange);
    }
    if !h.is_affine() {
        return Err(Error::NotAffine);
    }
    // b_{order-1} consumes h's coefficients up to c_{order-2}.
    if order >= 2 && h.order() < order - 2 {
        return Err(Error::InsufficientOrder {
            have: h.order(),
            need: order - 2,
        });
    }
    let a = |k: usize| -> T {
        // a_k in the w-expansion is c_{k-1} of the tail representation.
        h.coeffs[k - 1].clone()
    };
    let mut b = Vec::with_capacity(order);
    b.push(T::one());
    for n in 1..order {
        let mut acc = T::zero();
        for k in 1..=n {
            acc = acc + a(k) * b[n - k].clone();
        }
        b.push(-acc);
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(T::zero());
    coeffs.extend(b);
    Ok(TailSeries {
        lead: T::zero(),
        coeffs,
    })
}

/// `1/(g - beta)^n` as a pure tail starting at `z^{-n}`, exact to `order`.
pub fn shifted_power_tail<T: Coeff>(
    g: &TailSeries<T>,
    beta: &T,
    n: usize,
    order: usize,
) -> Result<TailSeries<T>> {
    if n == 0 {
        return Err(Error::ZeroPower);
    }
    let base = tail_reciprocal(&g.sub_constant(beta), order)?;
    let mut out = base.clone();
    for _ in 1..n {
        out = out.mul_series(&base);
    }
    Ok(out)
}

/// Tail coefficients of the composed map
/// `G = g + sum_{n>=1} atilde[n-1] * alpha^{n+1} / (g - beta)^n`,
/// truncated to `order`. With `g = z`, `alpha = 1`, `beta = 0` this is the
/// identity on `atilde`.
pub fn assemble_g<T: Coeff>(
    g: &TailSeries<T>,
    atilde: &[T],
    alpha: &T,
    beta: &T,
    order: usize,
) -> Result<TailSeries<T>> {
    if !(*alpha > T::zero()) {
        return Err(Error::DegenerateScaling);
    }
    if atilde.len() < order {
        return Err(Error::InsufficientOrder {
            have: atilde.len(),
            need: order,
        });
    }
    if g.order() < order {
        return Err(Error::InsufficientOrder {
            have: g.order(),
            need: order,
        });
    }
    let base = tail_reciprocal(&g.sub_constant(beta), order)?;
    let mut acc = g.truncated(order);
    let mut cur = base.clone();
    // alpha^{n+1} for n = 1.
    let mut apow = alpha.clone() * alpha.clone();
    for n in 1..=order {
        let w = atilde[n - 1].clone() * apow.clone();
        acc = acc.add_series(&cur.scale(&w));
        if n < order {
            cur = cur.mul_series(&base);
            apow = apow * alpha.clone();
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rats(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&n| rat(n, 1)).collect()
    }

    #[test]
    fn reciprocal_of_identity() {
        let h = TailSeries::<f64>::identity(6);
        let r = tail_reciprocal(&h, 6).unwrap();
        assert_eq!(r.coeff(1), &1.0);
        for j in 2..=6 {
            assert_eq!(r.coeff(j), &0.0);
        }
    }

    #[test]
    fn reciprocal_geometric() {
        // 1/(z - 1) = 1/z + 1/z^2 + 1/z^3 + ...
        let h = TailSeries::affine_with_constant(rat(-1, 1), rats(&[0, 0, 0, 0]));
        let r = tail_reciprocal(&h, 5).unwrap();
        for j in 1..=5 {
            assert_eq!(r.coeff(j), &rat(1, 1));
        }
    }

    #[test]
    fn reciprocal_loewner_numerator() {
        // 2/(g - X) with X=1, a1=2, a2=0:
        // coefficients [2, 2, -2, -6] on z^{-1}..z^{-4}.
        let g = TailSeries::affine(rats(&[2, 0, 0, 0]));
        let h = g.sub_constant(&rat(1, 1));
        let r = tail_reciprocal(&h, 4).unwrap().scale(&rat(2, 1));
        assert_eq!(r.tail(), rats(&[2, 2, -2, -6]).as_slice());
    }

    #[test]
    fn reciprocal_rejects_empty_truncation() {
        let h = TailSeries::<f64>::identity(4);
        assert!(matches!(
            tail_reciprocal(&h, 0),
            Err(Error::EmptyTruncation)
        ));
    }

    #[test]
    fn reciprocal_rejects_pure_tail() {
        let h = TailSeries::pure(vec![1.0, 2.0]);
        assert!(matches!(tail_reciprocal(&h, 2), Err(Error::NotAffine)));
    }

    #[test]
    fn shifted_power_trivial_cases() {
        // g = z, beta = 0, n = 2 -> z^{-2}
        let g = TailSeries::<f64>::identity(5);
        let r = shifted_power_tail(&g, &0.0, 2, 5).unwrap();
        assert_eq!(r.tail(), &[0.0, 1.0, 0.0, 0.0, 0.0]);

        // g = z, beta = 1, n = 1 -> geometric
        let r = shifted_power_tail(&g, &1.0, 1, 5).unwrap();
        assert_eq!(r.tail(), &[1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn shifted_power_binomial() {
        // g = z + 2/z, n = 2: z^{-2} (1 + 2 w^2)^{-2} = z^{-2} - 4 z^{-4} + ...
        let g = TailSeries::affine(rats(&[2, 0, 0, 0, 0, 0]));
        let r = shifted_power_tail(&g, &rat(0, 1), 2, 6).unwrap();
        assert_eq!(
            r.tail(),
            rats(&[0, 1, 0, -4, 0, 12]).as_slice() // (1+u)^{-2} = 1 - 2u + 3u^2, u = 2w^2
        );
    }

    #[test]
    fn shifted_power_rejects_zero_power() {
        let g = TailSeries::<f64>::identity(4);
        assert!(matches!(
            shifted_power_tail(&g, &0.0, 0, 4),
            Err(Error::ZeroPower)
        ));
    }

    #[test]
    fn assemble_identity_flow() {
        // g = z, alpha = 1, beta = 0 -> coefficients = atilde.
        let g = TailSeries::<f64>::identity(5);
        let atilde = [3.0, -1.0, 0.5, 2.0, 7.0];
        let out = assemble_g(&g, &atilde, &1.0, &0.0, 5).unwrap();
        assert_eq!(out.tail(), &atilde);
    }

    #[test]
    fn assemble_zero_atilde_is_g() {
        let g = TailSeries::affine(rats(&[4, -1, 2, 0]));
        let atilde = vec![rat(0, 1); 4];
        let out = assemble_g(&g, &atilde, &rat(1, 1), &rat(0, 1), 4).unwrap();
        assert_eq!(out.tail(), g.tail());
    }

    #[test]
    fn assemble_scaling_covariance() {
        // g = z, alpha = 2, beta = 0 -> a_n = 2^{n+1} atilde_n.
        let g = TailSeries::identity(5);
        let atilde = rats(&[1, 1, 1, 1, 1]);
        let out = assemble_g(&g, &atilde, &rat(2, 1), &rat(0, 1), 5).unwrap();
        for n in 1..=5usize {
            assert_eq!(out.coeff(n), &rat(1 << (n + 1), 1));
        }
    }

    #[test]
    fn assemble_rejects_nonpositive_alpha() {
        let g = TailSeries::<f64>::identity(3);
        let atilde = [1.0, 1.0, 1.0];
        assert!(matches!(
            assemble_g(&g, &atilde, &0.0, &0.0, 3),
            Err(Error::DegenerateScaling)
        ));
        assert!(matches!(
            assemble_g(&g, &atilde, &-1.0, &0.0, 3),
            Err(Error::DegenerateScaling)
        ));
    }

    proptest! {
        /// h * (1/h) = 1 exactly through the computable order, rational mode.
        #[test]
        fn reciprocal_round_trip(tail in proptest::collection::vec(-9i64..=9, 6),
                                 c0 in -9i64..=9) {
            let m = 6usize;
            let h = TailSeries::affine_with_constant(
                rat(c0, 2),
                tail.iter().map(|&n| rat(n, 3)).collect(),
            );
            let r = tail_reciprocal(&h, m + 1).unwrap();
            let p = h.mul_series(&r);
            prop_assert_eq!(p.lead(), &rat(0, 1));
            prop_assert_eq!(p.coeff(0), &rat(1, 1));
            for j in 1..=p.order() {
                prop_assert_eq!(p.coeff(j), &rat(0, 1));
            }
        }

        /// Repeated multiplication of 1/(g-b) agrees with shifted_power_tail.
        #[test]
        fn power_by_repeated_multiplication(tail in proptest::collection::vec(-5i64..=5, 6),
                                            b in -4i64..=4, n in 1usize..=4) {
            let m = 6usize;
            let g = TailSeries::affine(tail.iter().map(|&v| rat(v, 2)).collect());
            let beta = rat(b, 1);
            let direct = shifted_power_tail(&g, &beta, n, m).unwrap();
            let base = shifted_power_tail(&g, &beta, 1, m).unwrap();
            let mut acc = base.clone();
            for _ in 1..n {
                acc = acc.mul_series(&base);
            }
            prop_assert_eq!(direct, acc);
        }

        /// assemble_g(z, atilde, lambda, 0) scales coefficientwise.
        #[test]
        fn assemble_scaling_covariance_prop(atilde in proptest::collection::vec(-7i64..=7, 5),
                                            lam in 1i64..=5) {
            let g = TailSeries::identity(5);
            let at: Vec<BigRational> = atilde.iter().map(|&v| rat(v, 2)).collect();
            let out = assemble_g(&g, &at, &rat(lam, 1), &rat(0, 1), 5).unwrap();
            for n in 1..=5usize {
                let expect = at[n - 1].clone() * rat(lam.pow(n as u32 + 1), 1);
                prop_assert_eq!(out.coeff(n), &expect);
            }
        }
    }
}
