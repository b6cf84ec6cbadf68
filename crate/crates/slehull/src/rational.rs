//! Exact polynomial and rational-function arithmetic in the single variable
//! kappa, with arbitrary-precision rational coefficients.
//!
//! [`RationalFunctionK`] is kept normalized at all times: numerator and
//! denominator coprime (polynomial gcd 1) and the denominator monic.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Dense polynomial in kappa; `coeffs[i]` multiplies `kappa^i`.
/// No trailing zero coefficients; the zero polynomial has an empty vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyK {
    coeffs: Vec<BigRational>,
}

impl PolyK {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        PolyK { coeffs }
    }

    pub fn zero() -> Self {
        PolyK { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        PolyK::new(vec![c])
    }

    pub fn one() -> Self {
        PolyK::constant(BigRational::one())
    }

    /// The variable kappa itself.
    pub fn kappa() -> Self {
        PolyK::new(vec![BigRational::zero(), BigRational::one()])
    }

    /// `a + b*kappa`.
    pub fn linear(a: i64, b: i64) -> Self {
        PolyK::new(vec![
            BigRational::from(BigInt::from(a)),
            BigRational::from(BigInt::from(b)),
        ])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero);
            let b = other
                .coeffs
                .get(i)
                .cloned()
                .unwrap_or_else(BigRational::zero);
            out.push(a + b);
        }
        PolyK::new(out)
    }

    pub fn neg(&self) -> Self {
        PolyK {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return PolyK::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyK::new(out)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        PolyK::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Euclidean division: returns `(q, r)` with `self = q*div + r`,
    /// `deg r < deg div`. Panics on division by the zero polynomial.
    pub fn divrem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero(), "polynomial division by zero");
        let dd = div.degree().unwrap();
        let dlead = div.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (PolyK::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i].clone() / dlead.clone();
            if c.is_zero() {
                continue;
            }
            q[i - dd] = c.clone();
            for (j, b) in div.coeffs.iter().enumerate() {
                rem[i - dd + j] -= &c * b;
            }
        }
        (PolyK::new(q), PolyK::new(rem))
    }

    pub fn divides(&self, other: &Self) -> bool {
        if other.is_zero() {
            return true;
        }
        if self.is_zero() {
            return false;
        }
        other.divrem(self).1.is_zero()
    }

    /// Monic gcd via the Euclidean algorithm.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = BigRational::one() / self.leading();
        self.scale(&inv)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = PolyK::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

}

impl fmt::Display for PolyK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            let show_coeff = i == 0 || !mag.is_one();
            if show_coeff {
                if mag.is_integer() {
                    write!(f, "{}", mag.numer())?;
                } else {
                    write!(f, "{}", mag)?;
                }
                if i > 0 {
                    write!(f, "*")?;
                }
            }
            if i == 1 {
                write!(f, "k")?;
            } else if i > 1 {
                write!(f, "k^{}", i)?;
            }
        }
        Ok(())
    }
}

/// Normalized rational function in kappa.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunctionK {
    num: PolyK,
    den: PolyK,
}

impl RationalFunctionK {
    pub fn new(num: PolyK, den: PolyK) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RationalFunctionK {
                num: PolyK::zero(),
                den: PolyK::one(),
            };
        }
        let g = num.gcd(&den);
        let num = num.divrem(&g).0;
        let den = den.divrem(&g).0;
        let lead_inv = BigRational::one() / den.leading();
        RationalFunctionK {
            num: num.scale(&lead_inv),
            den: den.scale(&lead_inv),
        }
    }

    pub fn zero() -> Self {
        RationalFunctionK {
            num: PolyK::zero(),
            den: PolyK::one(),
        }
    }

    pub fn one() -> Self {
        RationalFunctionK {
            num: PolyK::one(),
            den: PolyK::one(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        RationalFunctionK {
            num: PolyK::constant(c),
            den: PolyK::one(),
        }
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        RationalFunctionK::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn kappa() -> Self {
        RationalFunctionK {
            num: PolyK::kappa(),
            den: PolyK::one(),
        }
    }

    pub fn numerator(&self) -> &PolyK {
        &self.num
    }

    pub fn denominator(&self) -> &PolyK {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        RationalFunctionK::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        RationalFunctionK {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        RationalFunctionK::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero rational function");
        RationalFunctionK::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    /// Evaluate at a rational point; `None` at a pole.
    pub fn eval(&self, x: &BigRational) -> Option<BigRational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        use num_traits::ToPrimitive;
        let horner = |p: &PolyK| {
            let mut acc = 0.0;
            for c in p.coeffs().iter().rev() {
                acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
            }
            acc
        };
        horner(&self.num) / horner(&self.den)
    }

    /// The pair (numerator, denominator) rescaled so that both polynomials
    /// have integer coefficients with joint content 1 and the denominator's
    /// leading coefficient is positive.
    pub fn integer_form(&self) -> (PolyK, PolyK) {
        if self.is_zero() {
            return (PolyK::zero(), PolyK::one());
        }
        let mut lcm = BigUint::one();
        for c in self.num.coeffs().iter().chain(self.den.coeffs()) {
            lcm = num_integer::lcm(lcm, c.denom().magnitude().clone());
        }
        let l = BigRational::from(BigInt::from(lcm));
        let n_ints: Vec<BigInt> = self.num.coeffs().iter().map(|c| (c * &l).to_integer()).collect();
        let d_ints: Vec<BigInt> = self.den.coeffs().iter().map(|c| (c * &l).to_integer()).collect();
        let mut content = BigUint::zero();
        for v in n_ints.iter().chain(&d_ints) {
            content = num_integer::gcd(content, v.magnitude().clone());
        }
        let mut content = BigInt::from(content);
        if d_ints.last().map_or(false, |c| c.is_negative()) {
            content = -content;
        }
        let to_poly = |ints: Vec<BigInt>| {
            PolyK::new(
                ints.into_iter()
                    .map(|v| BigRational::from(v / &content))
                    .collect(),
            )
        };
        (to_poly(n_ints), to_poly(d_ints))
    }

    /// Render as `numerator / denominator` with integer coefficients.
    pub fn display_integer(&self) -> String {
        let (n, d) = self.integer_form();
        if d.degree() == Some(0) && d.leading().is_one() {
            format!("{}", n)
        } else {
            format!("({}) / ({})", n, d)
        }
    }

    /// Factor the denominator over the family `(8 - (2j+1) kappa)`, j >= 1.
    /// Returns `Some((constant_scale, multiplicities))` when the denominator
    /// splits completely; multiplicities[j-1] is the power of the j-th factor.
    pub fn factored_denominator(&self, max_j: usize) -> Option<(BigRational, Vec<u32>)> {
        let mut rem = self.den.clone();
        let mut mults = vec![0u32; max_j];
        for (idx, mult) in mults.iter_mut().enumerate() {
            let j = idx + 1;
            let factor = PolyK::linear(8, -(2 * j as i64 + 1));
            loop {
                let (q, r) = rem.divrem(&factor);
                if r.is_zero() {
                    rem = q;
                    *mult += 1;
                } else {
                    break;
                }
            }
        }
        if rem.degree() == Some(0) || rem.is_zero() {
            Some((rem.leading(), mults))
        } else {
            None
        }
    }
}

impl fmt::Display for RationalFunctionK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_integer())
    }
}
