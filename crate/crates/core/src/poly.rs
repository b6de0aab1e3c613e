use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::field::{FieldElement as Fe, PrimeField};

/// Univariate polynomial, coefficients lowest degree first, no trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DensePolynomial {
    coeffs: Vec<Fe>,
}

impl DensePolynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn from_coefficients(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, field: &PrimeField, x: Fe) -> Fe {
        self.coeffs.iter().rev().fold(field.zero(), |acc, &c| field.add(field.mul(acc, x), c))
    }

    /// Evaluation at a small integer point.
    pub fn eval_small(&self, field: &PrimeField, x: u64) -> Fe {
        self.coeffs.iter().rev().fold(field.zero(), |acc, &c| field.add(field.mul_small(acc, x), c))
    }

    /// Σ_{x < count} p(x).
    pub fn sum_over_range(&self, field: &PrimeField, count: u64) -> Fe {
        (0..count).fold(field.zero(), |acc, x| field.add(acc, self.eval_small(field, x)))
    }
}

/// The unique polynomial of degree < len(points) through the given points.
pub fn interpolate(field: &PrimeField, points: &[(Fe, Fe)]) -> Result<DensePolynomial, Error> {
    for (i, (x, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(p, _)| p == x) {
            return Err(Error::DuplicatePoint);
        }
    }
    if points.len() as u128 > field.modulus() {
        return Err(Error::DuplicatePoint);
    }
    let n = points.len();
    // master = Π (X - x_i)
    let mut master = vec![field.zero(); n + 1];
    master[0] = field.one();
    for (deg, &(xi, _)) in points.iter().enumerate() {
        for k in (0..=deg).rev() {
            let shifted = master[k];
            master[k + 1] = field.add(master[k + 1], shifted);
            master[k] = field.mul(field.neg(xi), shifted);
        }
    }
    let mut out = vec![field.zero(); n];
    let mut quot = vec![field.zero(); n];
    for &(xi, yi) in points {
        // master / (X - xi) by synthetic division
        let mut carry = field.zero();
        for k in (0..n).rev() {
            carry = field.add(master[k + 1], field.mul(carry, xi));
            quot[k] = carry;
        }
        let denom = quot.iter().rev().fold(field.zero(), |acc, &c| field.add(field.mul(acc, xi), c));
        let scale = field.mul(yi, field.inv(denom).expect("distinct points"));
        for (o, &c) in out.iter_mut().zip(&quot) {
            *o = field.add(*o, field.mul(scale, c));
        }
    }
    Ok(DensePolynomial::from_coefficients(out))
}

/// Interpolation through (t, values[t]) for t = 0, 1, .., len-1.
///
/// Newton forward differences followed by a nested expansion; only the
/// expansion needs full multiplications and those are by small integers.
/// Requires len <= q.
pub fn interpolate_consecutive(field: &PrimeField, values: &[Fe]) -> DensePolynomial {
    let n = values.len();
    if n == 0 {
        return DensePolynomial::zero();
    }
    assert!((n as u128) <= field.modulus(), "more nodes than field elements");
    let mut diffs = values.to_vec();
    // diffs[k] becomes Δ^k b(0)
    for k in 1..n {
        for i in (k..n).rev() {
            diffs[i] = field.sub(diffs[i], diffs[i - 1]);
        }
    }
    // b(X) = Σ_k Δ^k b(0) / k! · X(X-1)..(X-k+1)
    let fact = (1..n as u64).fold(field.one(), |acc, k| field.mul_small(acc, k));
    let mut inv_fact = field.inv(fact).expect("n <= q");
    let mut newton = vec![field.zero(); n];
    for k in (0..n).rev() {
        newton[k] = field.mul(diffs[k], inv_fact);
        inv_fact = field.mul_small(inv_fact, k.max(1) as u64);
    }
    // Horner in the Newton basis: acc = newton[k] + (X - k) * acc, from the top.
    let mut acc: Vec<Fe> = vec![newton[n - 1]];
    for k in (0..n - 1).rev() {
        let k64 = k as u64;
        acc.push(field.zero());
        for i in (1..acc.len()).rev() {
            acc[i] = field.sub(acc[i - 1], field.mul_small(acc[i], k64));
        }
        acc[0] = field.sub(newton[k], field.mul_small(acc[0], k64));
    }
    DensePolynomial::from_coefficients(acc)
}
