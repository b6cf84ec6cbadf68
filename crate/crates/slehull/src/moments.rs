//! Exact solver for the moment recursion of the stopped-hull coefficients.
//!
//! A moment is indexed by an exponent vector `(k_1, ..., k_n)` standing for
//! `E[a_1^{k_1} ... a_n^{k_n}]` of the Loewner coefficients at the swallowing
//! time, in the normalized frame `x = sigma`, `y = -sigma`. Demanding that
//! the drift of the product vanishes under the stationarity flow yields a
//! linear recursion over lower-degree moments; the recursion coefficients are
//! rational in kappa once rho = kappa - 6 is substituted, so the solver works
//! in exact rational-function arithmetic.
//!
//! Values are carried as a sigma-graded pair `A + sigma*B`: integer-degree
//! moments live entirely in `A`, half-integer ones in `B`.

use crate::rational::{PolyK, RationalFunctionK};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::sync::Mutex;

/// Exponent vector of a moment `prod a_i^{k_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MomentIndex {
    k: Vec<u32>,
}

impl MomentIndex {
    pub fn new(k: Vec<u32>) -> Self {
        let mut k = k;
        while k.last() == Some(&0) {
            k.pop();
        }
        MomentIndex { k }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Twice the degree, `sum k_i (i+1)`; always an integer.
    pub fn two_n(&self) -> u64 {
        self.k
            .iter()
            .enumerate()
            .map(|(idx, &k)| k as u64 * (idx as u64 + 2))
            .sum()
    }

    /// Twice the numerator-degree bound, `sum k_i (i-1)`.
    pub fn two_n_tilde(&self) -> u64 {
        self.k
            .iter()
            .enumerate()
            .map(|(idx, &k)| k as u64 * idx as u64)
            .sum()
    }

    /// Degree `N = sum k_i (i+1) / 2` and bound `Ntilde = sum k_i (i-1) / 2`.
    pub fn degree(&self) -> (BigRational, BigRational) {
        let half = |v: u64| BigRational::new(BigInt::from(v), BigInt::from(2));
        (half(self.two_n()), half(self.two_n_tilde()))
    }

    /// N is a half-integer exactly when `sum_i k_{2i}` is odd.
    pub fn is_half_integer(&self) -> bool {
        self.two_n() % 2 == 1
    }

    /// Existence threshold `8/(2N+1)` for rho = kappa - 6.
    pub fn existence_threshold(&self) -> f64 {
        8.0 / (self.two_n() as f64 + 1.0)
    }

    /// Render like "a1^2*a2".
    pub fn label(&self) -> String {
        if self.k.is_empty() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        for (idx, &k) in self.k.iter().enumerate() {
            if k == 0 {
                continue;
            }
            if k == 1 {
                parts.push(format!("a{}", idx + 1));
            } else {
                parts.push(format!("a{}^{}", idx + 1, k));
            }
        }
        parts.join("*")
    }
}

/// Field scalar the recursion is generic over: exact rational functions of
/// kappa for the symbolic mode, plain rationals for numeric spot checks.
pub trait MomentScalar: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
}

impl MomentScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }
}

impl MomentScalar for RationalFunctionK {
    fn zero() -> Self {
        RationalFunctionK::zero()
    }
    fn one() -> Self {
        RationalFunctionK::one()
    }
    fn is_zero(&self) -> bool {
        RationalFunctionK::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        RationalFunctionK::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        RationalFunctionK::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        RationalFunctionK::mul(self, o)
    }
    fn div(&self, o: &Self) -> Self {
        RationalFunctionK::div(self, o)
    }
    fn neg(&self) -> Self {
        RationalFunctionK::neg(self)
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        RationalFunctionK::from_ratio(n, d)
    }
}

/// A value of the form `even + sigma * odd`, sigma in {-1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaGraded<R> {
    pub even: R,
    pub odd: R,
}

impl<R: MomentScalar> SigmaGraded<R> {
    pub fn zero() -> Self {
        SigmaGraded {
            even: R::zero(),
            odd: R::zero(),
        }
    }

    pub fn even(v: R) -> Self {
        SigmaGraded {
            even: v,
            odd: R::zero(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        SigmaGraded {
            even: self.even.add(&o.even),
            odd: self.odd.add(&o.odd),
        }
    }

    /// Multiply by a sigma-free scalar.
    pub fn scale(&self, s: &R) -> Self {
        SigmaGraded {
            even: self.even.mul(s),
            odd: self.odd.mul(s),
        }
    }

    /// Multiply by `sigma^p` (swaps the parts when p is odd).
    pub fn sigma_pow(&self, p: u32) -> Self {
        if p % 2 == 0 {
            self.clone()
        } else {
            SigmaGraded {
                even: self.odd.clone(),
                odd: self.even.clone(),
            }
        }
    }

    /// Evaluate at a concrete sigma.
    pub fn at_sigma(&self, sigma: i8) -> R {
        if sigma >= 0 {
            self.even.add(&self.odd)
        } else {
            self.even.sub(&self.odd)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.even.is_zero() && self.odd.is_zero()
    }
}

fn lower(k: &[u32], i: usize) -> Option<Vec<u32>> {
    if i == 0 || i > k.len() || k[i - 1] == 0 {
        return None;
    }
    let mut out = k.to_vec();
    out[i - 1] -= 1;
    Some(out)
}

fn raise(mut k: Vec<u32>, l: usize) -> Vec<u32> {
    // l = 0 raises nothing (the paper's convention that the 0-th slot is
    // the constant 1).
    if l >= 1 {
        if k.len() < l {
            k.resize(l, 0);
        }
        k[l - 1] += 1;
    }
    k
}

/// One stationarity step of the recursion: the drift of `Pi(k)` is
///
/// ```text
/// (N/4) [(2 rho + 4 - kappa) + 2 N kappa] Pi
///   + (sigma/4) [(rho - 2 - kappa) + 2 N kappa] sum_i k_i (i-1) Pi_i^{i-1}
///   + (kappa/8) sum_{i,j} k_i (k_j - d_ij) (i-1)(j-1) Pi_{i,j}^{i-1,j-1}
///   + sum_i k_i sum_{l=1}^{i-2} c_{il} Pi_i^l      (c_{il} as in the
///     coefficient SDE; -2 l sigma^{i-l} except at l = i-2 where the
///     kappa-dependent part (kappa/8)(i-1)(i-2) survives)
///   + 2 sum_i k_i sigma^{i+1} Pi_i
/// ```
///
/// and the expected drift must vanish, which expresses `E[Pi]` through
/// strictly lower-degree moments.
fn solve_rec<R: MomentScalar>(
    k: &[u32],
    kappa: &R,
    rho: &R,
    memo: &mut HashMap<Vec<u32>, SigmaGraded<R>>,
) -> SigmaGraded<R> {
    let key = MomentIndex::new(k.to_vec());
    if key.is_empty() {
        return SigmaGraded::even(R::one());
    }
    if let Some(v) = memo.get(key.exponents()) {
        return v.clone();
    }
    let k = key.exponents();
    let n = k.len();
    let two_n = key.two_n() as i64;
    let big_n = R::from_ratio(two_n, 2);

    // Leading factor (N/4)[(2 rho + 4 - kappa) + 2 N kappa].
    let bracket = R::from_ratio(2, 1)
        .mul(rho)
        .add(&R::from_ratio(4, 1))
        .sub(kappa)
        .add(&R::from_ratio(2, 1).mul(&big_n).mul(kappa));
    let lead = big_n.mul(&R::from_ratio(1, 4)).mul(&bracket);
    assert!(!lead.is_zero(), "vanishing leading factor in moment recursion");

    let mut acc: SigmaGraded<R> = SigmaGraded::zero();

    // sigma * (1/4)[(rho - 2 - kappa) + 2 N kappa] * sum_i k_i (i-1) Pi_i^{i-1}
    let bracket2 = rho
        .sub(&R::from_ratio(2, 1))
        .sub(kappa)
        .add(&R::from_ratio(2, 1).mul(&big_n).mul(kappa));
    let coef2 = R::from_ratio(1, 4).mul(&bracket2);
    for i in 2..=n {
        let weight = k[i - 1] as i64 * (i as i64 - 1);
        if weight == 0 {
            continue;
        }
        if let Some(low) = lower(k, i) {
            let sub = solve_rec(&raise(low, i - 1), kappa, rho, memo);
            acc = acc.add(
                &sub.sigma_pow(1)
                    .scale(&coef2.mul(&R::from_ratio(weight, 1))),
            );
        }
    }

    // (kappa/8) sum_{i,j} k_i (k_j - d_ij) (i-1)(j-1) Pi_{i,j}^{i-1,j-1}
    let coef3 = kappa.mul(&R::from_ratio(1, 8));
    for i in 2..=n {
        for j in 2..=n {
            let delta = if i == j { 1 } else { 0 };
            let weight =
                k[i - 1] as i64 * (k[j - 1] as i64 - delta) * (i as i64 - 1) * (j as i64 - 1);
            if weight == 0 {
                continue;
            }
            let low = match lower(k, i).and_then(|v| lower(&v, j)) {
                Some(v) => v,
                None => continue,
            };
            let raised = raise(raise(low, i - 1), j - 1);
            let sub = solve_rec(&raised, kappa, rho, memo);
            acc = acc.add(&sub.scale(&coef3.mul(&R::from_ratio(weight, 1))));
        }
    }

    // sum_i k_i sum_{l=1}^{i-2} c_{il} sigma-weighted Pi_i^l, where
    // c_{il} = -2 l sigma^{i-l} for l < i-2 and the boundary slot picks up
    // the diffusion-induced correction:
    // c_{i,i-2} = (1/8)(i-2)(kappa (i-1) - 16) = -2(i-2) + (kappa/8)(i-1)(i-2).
    for i in 3..=n {
        if k[i - 1] == 0 {
            continue;
        }
        for l in 1..=(i - 2) {
            let low = lower(k, i).expect("k_i > 0 checked");
            let sub = solve_rec(&raise(low, l), kappa, rho, memo);
            let mut w = R::from_ratio(-2 * k[i - 1] as i64 * l as i64, 1);
            if l == i - 2 {
                let extra = kappa
                    .mul(&R::from_ratio((i as i64 - 1) * (i as i64 - 2), 8))
                    .mul(&R::from_ratio(k[i - 1] as i64, 1));
                w = w.add(&extra);
            }
            acc = acc.add(&sub.sigma_pow((i - l) as u32).scale(&w));
        }
    }

    // +2 sum_i k_i sigma^{i+1} Pi_i
    for i in 1..=n {
        if k[i - 1] == 0 {
            continue;
        }
        let low = lower(k, i).expect("k_i > 0 checked");
        let sub = solve_rec(&low, kappa, rho, memo);
        let w = R::from_ratio(2 * k[i - 1] as i64, 1);
        acc = acc.add(&sub.sigma_pow((i + 1) as u32).scale(&w));
    }

    let value = acc.scale(&R::one().neg().div(&lead));

    // The sigma-grading must match the parity of N.
    if two_n % 2 == 0 {
        assert!(
            value.odd.is_zero(),
            "integer-degree moment acquired a sigma-odd part"
        );
    } else {
        assert!(
            value.even.is_zero(),
            "half-integer-degree moment acquired a sigma-even part"
        );
    }

    memo.insert(key.exponents().to_vec(), value.clone());
    value
}

/// Memoizing solver in the symbolic rho = kappa - 6 mode.
pub struct MomentSolver {
    memo: Mutex<HashMap<Vec<u32>, SigmaGraded<RationalFunctionK>>>,
}

impl Default for MomentSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl MomentSolver {
    pub fn new() -> Self {
        MomentSolver {
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// `E[Pi(k)]` as `A + sigma B`, an exact rational function of kappa,
    /// with rho = kappa - 6 substituted.
    pub fn solve_moment(&self, index: &MomentIndex) -> SigmaGraded<RationalFunctionK> {
        let kappa = RationalFunctionK::kappa();
        let rho = kappa.sub(&RationalFunctionK::from_ratio(6, 1));
        // Work on a snapshot and merge back: concurrent recomputation is
        // idempotent, so lost inserts only cost time.
        let mut local = self.memo.lock().unwrap().clone();
        let value = solve_rec(index.exponents(), &kappa, &rho, &mut local);
        *self.memo.lock().unwrap() = local;
        value
    }
}

/// Numeric-mode evaluation of the same recursion at arbitrary rational
/// (kappa, rho); spot-checks the drift relation in full generality.
pub fn solve_moment_numeric(
    index: &MomentIndex,
    kappa: &BigRational,
    rho: &BigRational,
) -> SigmaGraded<BigRational> {
    let mut memo = HashMap::new();
    solve_rec(index.exponents(), kappa, rho, &mut memo)
}

/// Closed form `E[a_1^n] = 2^n (x-y)^{2n} / prod_{j=1..n} (8 - (2j+1) kappa)`.
pub fn closed_form_a1n(n: u32, x: &BigRational, y: &BigRational) -> RationalFunctionK {
    let diff = x - y;
    let mut num = <BigRational as One>::one();
    for _ in 0..n {
        num *= BigRational::from(BigInt::from(2)) * &diff * &diff;
    }
    let mut den = PolyK::one();
    for j in 1..=n {
        den = den.mul(&PolyK::linear(8, -(2 * j as i64 + 1)));
    }
    RationalFunctionK::new(PolyK::constant(num), den)
}

/// Closed form for `E[a_1^n a_2^m]`, m even, in the normalized frame:
/// `2^{3(n+m)} (kappa/6)^{m/2} m!/(m/2)! / prod_{j=1..n+3m/2} (8-(2j+1)kappa)`.
pub fn closed_form_a1n_a2m(n: u32, m: u32) -> Result<RationalFunctionK> {
    if m % 2 != 0 {
        return Err(Error::OddMoment);
    }
    let half_m = m / 2;
    let mut c = <BigRational as One>::one();
    for _ in 0..(3 * n + 3 * m) {
        c *= BigRational::from(BigInt::from(2));
    }
    for _ in 0..half_m {
        c /= BigRational::from(BigInt::from(6));
    }
    // m! / (m/2)!
    for v in (half_m + 1)..=m {
        c *= BigRational::from(BigInt::from(v));
    }
    let mut num = PolyK::constant(c);
    num = num.mul(&PolyK::kappa().pow(half_m));
    let mut den = PolyK::one();
    for j in 1..=(n + 3 * half_m) {
        den = den.mul(&PolyK::linear(8, -(2 * j as i64 + 1)));
    }
    Ok(RationalFunctionK::new(num, den))
}

/// Scale a normalized-frame moment to general marked points (x, y):
/// multiply by lambda^{2N} with lambda = |x-y|/2 and evaluate the graded
/// value at sigma = sign(x - y).
pub fn moment_general_xy(
    value: &SigmaGraded<RationalFunctionK>,
    index: &MomentIndex,
    x: &BigRational,
    y: &BigRational,
) -> RationalFunctionK {
    let lambda = ((x - y) / BigRational::from(BigInt::from(2))).abs();
    let sigma: i8 = if x >= y { 1 } else { -1 };
    let mut scale = <BigRational as One>::one();
    for _ in 0..index.two_n() {
        scale *= &lambda;
    }
    value
        .at_sigma(sigma)
        .mul(&RationalFunctionK::constant(scale))
}

/// Parity/reversibility report entry for one index.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ParityEntry {
    pub index: String,
    /// 2N, so half-integers stay exact in the report.
    pub two_n: u64,
    pub half_integer: bool,
    pub is_zero: bool,
    /// A nonzero half-integer moment would contradict reversibility.
    pub reversibility_violation: bool,
    /// Rendered value (even part for integer N, odd part otherwise).
    pub value: String,
}

pub fn reversibility_parity_report(
    solver: &MomentSolver,
    indices: &[MomentIndex],
) -> Vec<ParityEntry> {
    indices
        .iter()
        .map(|idx| {
            let v = solver.solve_moment(idx);
            let half = idx.is_half_integer();
            let part = if half { &v.odd } else { &v.even };
            ParityEntry {
                index: idx.label(),
                two_n: idx.two_n(),
                half_integer: half,
                is_zero: v.is_zero(),
                reversibility_violation: half && !v.is_zero(),
                value: part.display_integer(),
            }
        })
        .collect()
}

/// All nonempty indices with degree N <= n_max (2N <= 2*n_max). Exponents of
/// `a_i` with i+1 <= 2N are enumerated exhaustively.
pub fn indices_up_to_degree(two_n_max: u64) -> Vec<MomentIndex> {
    let mut out = Vec::new();
    let max_i = (two_n_max as usize).saturating_sub(1).max(1);
    let mut k = vec![0u32; max_i];
    fn rec(
        k: &mut Vec<u32>,
        pos: usize,
        budget: u64,
        out: &mut Vec<MomentIndex>,
    ) {
        if pos == k.len() {
            let idx = MomentIndex::new(k.clone());
            if !idx.is_empty() {
                out.push(idx);
            }
            return;
        }
        let weight = pos as u64 + 2; // a_{pos+1} contributes (i+1) = pos+2
        let max_k = budget / weight;
        for v in 0..=max_k {
            k[pos] = v as u32;
            rec(k, pos + 1, budget - v * weight, out);
        }
        k[pos] = 0;
    }
    rec(&mut k, 0, two_n_max, &mut out);
    out.sort_by_key(|idx| (idx.two_n(), idx.exponents().to_vec()));
    out
}

/// Ntilde conjecture check: numerator degree of an integer-N moment should
/// not exceed Ntilde. Reported, not asserted.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DegreeBoundEntry {
    pub index: String,
    pub two_n: u64,
    pub two_n_tilde: u64,
    pub numerator_degree: Option<usize>,
    pub within_bound: bool,
}

pub fn numerator_degree_report(
    solver: &MomentSolver,
    indices: &[MomentIndex],
) -> Vec<DegreeBoundEntry> {
    indices
        .iter()
        .filter(|idx| !idx.is_half_integer())
        .map(|idx| {
            let v = solver.solve_moment(idx);
            let (num, _) = v.even.integer_form();
            let deg = num.degree();
            let bound = idx.two_n_tilde() / 2;
            DegreeBoundEntry {
                index: idx.label(),
                two_n: idx.two_n(),
                two_n_tilde: idx.two_n_tilde(),
                numerator_degree: deg,
                within_bound: deg.map_or(true, |d| d as u64 <= bound),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn idx(k: &[u32]) -> MomentIndex {
        MomentIndex::new(k.to_vec())
    }

    #[test]
    fn degrees() {
        assert_eq!(idx(&[1]).degree().0, rat(1, 1));
        assert_eq!(idx(&[1]).degree().1, rat(0, 1));
        assert_eq!(idx(&[0, 1]).degree().0, rat(3, 2));
        assert_eq!(idx(&[0, 1]).degree().1, rat(1, 2));
        assert_eq!(idx(&[2, 2]).degree().0, rat(5, 1));
        assert_eq!(idx(&[2, 2]).degree().1, rat(1, 1));
        assert!(idx(&[0, 1]).is_half_integer());
        assert!(!idx(&[2, 2]).is_half_integer());
    }

    #[test]
    fn existence_thresholds() {
        assert_eq!(idx(&[1]).existence_threshold(), 8.0 / 3.0);
        assert_eq!(idx(&[2]).existence_threshold(), 8.0 / 5.0);
        assert_eq!(idx(&[0, 2]).existence_threshold(), 8.0 / 7.0);
    }

    #[test]
    fn solve_a1() {
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[1]));
        let expect = RationalFunctionK::new(
            PolyK::constant(rat(8, 1)),
            PolyK::linear(8, -3),
        );
        assert_eq!(v.even, expect);
        assert!(v.odd.is_zero());
    }

    #[test]
    fn solve_a1_squared() {
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[2]));
        let expect = RationalFunctionK::new(
            PolyK::constant(rat(64, 1)),
            PolyK::linear(8, -3).mul(&PolyK::linear(8, -5)),
        );
        assert_eq!(v.even, expect);
    }

    #[test]
    fn solve_a2_vanishes() {
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[0, 1]));
        assert!(v.is_zero());
    }

    #[test]
    fn solve_a2_squared() {
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[0, 2]));
        let num = PolyK::kappa().scale(&rat(64, 3));
        let den = PolyK::linear(8, -3)
            .mul(&PolyK::linear(8, -5))
            .mul(&PolyK::linear(8, -7));
        assert_eq!(v.even, RationalFunctionK::new(num, den));
    }

    #[test]
    fn closed_forms_match_solver() {
        let solver = MomentSolver::new();
        let one = rat(1, 1);
        let neg_one = rat(-1, 1);
        for n in 1..=6u32 {
            let mut k = vec![n];
            let v = solver.solve_moment(&MomentIndex::new(k.clone()));
            assert_eq!(v.even, closed_form_a1n(n, &one, &neg_one), "n = {}", n);
            k[0] = 0;
        }
        for n in 0..=2u32 {
            for m in [0u32, 2] {
                let v = solver.solve_moment(&idx(&[n, m]));
                let cf = closed_form_a1n_a2m(n, m).unwrap();
                assert_eq!(v.even, cf, "(n, m) = ({}, {})", n, m);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let one = rat(1, 1);
        let neg_one = rat(-1, 1);
        assert_eq!(
            closed_form_a1n(1, &one, &neg_one),
            RationalFunctionK::new(PolyK::constant(rat(8, 1)), PolyK::linear(8, -3))
        );
        assert_eq!(closed_form_a1n(0, &one, &neg_one), RationalFunctionK::one());
        let den3 = PolyK::linear(8, -3)
            .mul(&PolyK::linear(8, -5))
            .mul(&PolyK::linear(8, -7));
        assert_eq!(
            closed_form_a1n(3, &one, &neg_one),
            RationalFunctionK::new(PolyK::constant(rat(512, 1)), den3.clone())
        );
        assert_eq!(closed_form_a1n_a2m(0, 0).unwrap(), RationalFunctionK::one());
        assert_eq!(
            closed_form_a1n_a2m(1, 0).unwrap(),
            closed_form_a1n(1, &one, &neg_one)
        );
        assert_eq!(
            closed_form_a1n_a2m(0, 2).unwrap(),
            RationalFunctionK::new(PolyK::kappa().scale(&rat(64, 3)), den3)
        );
        assert!(matches!(closed_form_a1n_a2m(1, 1), Err(Error::OddMoment)));
    }

    #[test]
    fn numeric_mode_matches_symbolic() {
        let solver = MomentSolver::new();
        let kappa = rat(1, 2);
        let rho = &kappa - rat(6, 1);
        for k in [vec![1], vec![2], vec![0, 2], vec![1, 2], vec![3, 0, 1]] {
            let index = MomentIndex::new(k);
            let sym = solver.solve_moment(&index);
            let num = solve_moment_numeric(&index, &kappa, &rho);
            assert_eq!(sym.even.eval(&kappa), Some(num.even.clone()), "{:?}", index);
            assert_eq!(sym.odd.eval(&kappa), Some(num.odd.clone()), "{:?}", index);
        }
    }

    #[test]
    fn numeric_general_rho_a1() {
        // At general rho the one-step recursion gives E[a1] = -8/(kappa+2rho+4),
        // which also equals the mean of the capacity law.
        let kappa = rat(2, 1);
        let rho = rat(-4, 1);
        let v = solve_moment_numeric(&idx(&[1]), &kappa, &rho);
        assert_eq!(v.even, rat(4, 1));
        assert!(Zero::is_zero(&v.odd));
    }

    #[test]
    fn parity_report() {
        let solver = MomentSolver::new();
        let report = reversibility_parity_report(
            &solver,
            &[idx(&[0, 1]), idx(&[1]), idx(&[1, 1])],
        );
        assert!(report[0].half_integer && report[0].is_zero);
        assert!(!report[1].half_integer && !report[1].is_zero);
        assert!(report[2].half_integer);
        assert!(!report[2].reversibility_violation, "a1*a2 should vanish");
    }

    #[test]
    fn general_xy_scaling() {
        // E[a1] for (x, y) = (1, -1) equals the normalized value; for
        // (x, y) = (2, -2), lambda = 2 so the mean scales by 4.
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[1]));
        let base = moment_general_xy(&v, &idx(&[1]), &rat(1, 1), &rat(-1, 1));
        let scaled = moment_general_xy(&v, &idx(&[1]), &rat(2, 1), &rat(-2, 1));
        assert_eq!(scaled, base.mul(&RationalFunctionK::from_ratio(4, 1)));
        // Matches the closed form at general (x, y).
        assert_eq!(scaled, closed_form_a1n(1, &rat(2, 1), &rat(-2, 1)));
    }

    #[test]
    fn index_enumeration() {
        let all = indices_up_to_degree(4);
        // a1 (2N=2), a1^2 and a2 (2N=3 for a2), ... all unique, none empty.
        assert!(all.iter().any(|i| i.exponents() == [1]));
        assert!(all.iter().any(|i| i.exponents() == [0, 1]));
        assert!(all.iter().any(|i| i.exponents() == [2]));
        assert!(all.iter().all(|i| i.two_n() <= 4 && !i.is_empty()));
        let mut dedup = all.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
    }

    #[test]
    fn mean_threshold_consistency() {
        // E[a1] denominator vanishes exactly at the existence threshold.
        let solver = MomentSolver::new();
        let v = solver.solve_moment(&idx(&[1]));
        assert_eq!(v.even.eval(&rat(8, 3)), None);
        assert!((idx(&[1]).existence_threshold() - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn to_f64_threshold() {
        assert!(rat(8, 3).to_f64().unwrap() > 2.66);
    }
}
