use std::cmp::Ordering;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{Floor, GenExpSeries};

/// Generalized exponent `Σ ν_α e^{αx} + tail(x)` of a level-1 term.
///
/// Principal scales are strictly decreasing and positive; the tail carries
/// everything below the double-exponential level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransExponent {
    principal: Vec<(Rational, Scalar)>,
    tail: GenExpSeries,
}

impl Default for TransExponent {
    fn default() -> Self {
        Self::zero()
    }
}

impl TransExponent {
    /// Checked constructor. Scales must be strictly decreasing in `(0, 1]`.
    pub fn new(principal: Vec<(Rational, Scalar)>, tail: GenExpSeries) -> Result<Self> {
        for w in principal.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(Error::invariant("principal scales must be strictly decreasing"));
            }
        }
        for (a, nu) in &principal {
            if *a <= 0 || *a > 1 {
                return Err(Error::invariant(format!("principal scale {a} is outside (0, 1]")));
            }
            if nu.is_zero() {
                return Err(Error::invariant(format!("zero principal coefficient at scale {a}")));
            }
        }
        Ok(TransExponent { principal, tail })
    }

    /// Build from unordered entries at arbitrary positive scales; entries are
    /// merged and zeros dropped.
    pub(crate) fn from_entries(entries: Vec<(Rational, Scalar)>, tail: GenExpSeries) -> Self {
        let mut entries = entries;
        entries.sort_by(|a, b| b.0.cmp(&a.0));
        let mut out: Vec<(Rational, Scalar)> = Vec::new();
        for (a, nu) in entries {
            match out.last_mut() {
                Some((s, acc)) if *s == a => *acc = &*acc + &nu,
                _ => out.push((a, nu)),
            }
        }
        out.retain(|(_, nu)| !nu.is_zero());
        TransExponent { principal: out, tail }
    }

    pub fn zero() -> Self {
        TransExponent { principal: Vec::new(), tail: GenExpSeries::zero() }
    }

    /// `ν e^{αx}`.
    pub fn single(alpha: Rational, nu: Scalar) -> Self {
        Self::from_entries(vec![(alpha, nu)], GenExpSeries::zero())
    }

    /// `ν e^{x}` with rational `ν`.
    pub fn unit(nu: impl Into<Rational>) -> Self {
        Self::single(Rational::from(1), Scalar::from(nu.into()))
    }

    pub fn with_tail(mut self, tail: GenExpSeries) -> Self {
        self.tail = tail;
        self
    }

    pub fn principal(&self) -> &[(Rational, Scalar)] {
        &self.principal
    }

    pub fn tail(&self) -> &GenExpSeries {
        &self.tail
    }

    pub fn is_zero(&self) -> bool {
        self.principal.is_empty() && self.tail.is_exact_zero()
    }

    /// `ν_α`, zero when the scale is absent.
    pub fn nu_at(&self, alpha: &Rational) -> Scalar {
        self.principal.iter().find(|(a, _)| a == alpha).map(|(_, n)| n.clone()).unwrap_or_default()
    }

    pub fn top(&self) -> Option<(&Rational, &Scalar)> {
        self.principal.first().map(|(a, n)| (a, n))
    }

    pub fn min_scale(&self) -> Option<&Rational> {
        self.principal.last().map(|(a, _)| a)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut entries = self.principal.clone();
        entries.extend(other.principal.iter().cloned());
        Self::from_entries(entries, self.tail.add(&other.tail))
    }

    pub fn neg(&self) -> Self {
        TransExponent {
            principal: self.principal.iter().map(|(a, n)| (a.clone(), -n)).collect(),
            tail: self.tail.neg(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scaled(&self, k: &Rational) -> Self {
        Self::from_entries(
            self.principal.iter().map(|(a, n)| (a.clone(), n.mul_rational(k))).collect(),
            self.tail.mul_rational(k),
        )
    }

    /// `E(αx)`: scales and tail exponents multiplied by `α`.
    pub fn rescale(&self, alpha: &Rational) -> Self {
        TransExponent {
            principal: self.principal.iter().map(|(a, n)| (Rational::from(a * alpha), n.clone())).collect(),
            tail: self.tail.scale_argument(alpha, &LogLinear::zero()),
        }
    }

    /// `E(x + c)`.
    pub fn shift_argument(&self, c: &LogLinear) -> Self {
        if c.is_zero() {
            return self.clone();
        }
        Self::from_entries(
            self.principal.iter().map(|(a, n)| (a.clone(), n * &c.exp_scaled(a))).collect(),
            self.tail.scale_argument(&Rational::from(1), c),
        )
    }

    /// `Σ ν_α e^{αx} + tail` as a plain series.
    pub fn to_series(&self) -> GenExpSeries {
        let p = GenExpSeries::from_terms(self.principal.clone(), Floor::Exact);
        p.add(&self.tail)
    }

    /// `d/dx`: `Σ αν_α e^{αx} + tail'`, a multiplier rather than an exponent.
    pub fn derivative(&self) -> GenExpSeries {
        self.to_series().derivative()
    }

    /// Large normal form: no tail term at or below exponent 0.
    pub fn is_large(&self) -> bool {
        self.tail.terms().iter().all(|(mu, _)| *mu > 0) && self.tail.floor().value().is_none_or(|f| *f >= 0)
    }

    /// Split the tail into the Large part (`μ > 0`, with terms at or above the
    /// smallest principal scale promoted to principal entries) and the Small
    /// part (`μ ≤ 0`, including the tail's truncation floor).
    pub fn split_large_small(&self) -> (TransExponent, GenExpSeries) {
        let min_scale = self.min_scale().cloned();
        let mut promoted = self.principal.clone();
        let mut large = Vec::new();
        let mut small = Vec::new();
        for (mu, b) in self.tail.terms() {
            if *mu <= 0 {
                small.push((mu.clone(), b.clone()));
            } else if min_scale.as_ref().is_some_and(|m| mu >= m) {
                promoted.push((mu.clone(), b.clone()));
            } else {
                large.push((mu.clone(), b.clone()));
            }
        }
        let large_floor = match self.tail.floor() {
            Floor::At(f) if *f > 0 => Floor::At(f.clone()),
            _ => Floor::Exact,
        };
        let small_floor = match self.tail.floor() {
            Floor::At(f) if *f <= 0 => Floor::At(f.clone()),
            _ => Floor::Exact,
        };
        let large_exp = Self::from_entries(promoted, GenExpSeries::from_terms(large, large_floor));
        (large_exp, GenExpSeries::from_terms(small, small_floor))
    }

    /// Lexicographic comparison of principal data from the largest scale
    /// down, a missing scale counting as `ν = 0`.
    pub fn cmp_principal(&self, other: &Self) -> Ordering {
        let mut scales: Vec<&Rational> = self.principal.iter().chain(other.principal.iter()).map(|(a, _)| a).collect();
        scales.sort_by(|a, b| b.cmp(a));
        scales.dedup();
        for a in scales {
            let c = self.nu_at(a).cmp_value(&other.nu_at(a));
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    }

    pub fn eval(&self, x: &Float) -> Float {
        let prec = x.prec();
        let mut acc = self.tail.eval(x);
        for (a, nu) in self.principal.iter().rev() {
            acc += nu.to_float(prec) * Float::with_val(prec, a * x).exp();
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn e(entries: &[(i64, i64, i64)]) -> TransExponent {
        TransExponent::from_entries(
            entries.iter().map(|&(n, d, nu)| (q(n, d), Scalar::from(q(nu, 1)))).collect(),
            GenExpSeries::zero(),
        )
    }

    #[test]
    fn derivative_rule() {
        let d = e(&[(1, 1, -1)]).derivative();
        assert_eq!(d, GenExpSeries::monomial(q(1, 1), Scalar::from(q(-1, 1))));
        let d = e(&[(1, 2, -2)]).derivative();
        assert_eq!(d, GenExpSeries::monomial(q(1, 2), Scalar::from(q(-1, 1))));
        let d = e(&[(1, 1, -1), (2, 3, -5)]).derivative();
        let want = GenExpSeries::from_terms(
            vec![(q(1, 1), Scalar::from(q(-1, 1))), (q(2, 3), Scalar::from(q(-10, 3)))],
            Floor::Exact,
        );
        assert_eq!(d, want);
    }

    #[test]
    fn lexicographic_principal_order() {
        assert_eq!(e(&[(1, 1, -1)]).cmp_principal(&e(&[(1, 1, -2)])), Ordering::Greater);
        assert_eq!(e(&[(1, 1, -1)]).cmp_principal(&e(&[(1, 2, -1)])), Ordering::Less);
        assert_eq!(e(&[(1, 1, -1), (2, 3, -1)]).cmp_principal(&e(&[(1, 1, -1), (2, 3, -2)])), Ordering::Greater);
    }

    #[test]
    fn split_moves_small_terms() {
        let tail =
            GenExpSeries::from_terms(vec![(q(1, 2), Scalar::from(q(1, 2))), (q(-1, 1), Scalar::one())], Floor::Exact);
        let x = e(&[(1, 1, -1)]).with_tail(tail);
        assert!(!x.is_large());
        let (large, small) = x.split_large_small();
        assert!(large.is_large());
        assert_eq!(small, GenExpSeries::monomial(q(-1, 1), Scalar::one()));
        assert_eq!(large.tail().terms().len(), 1);
    }

    #[test]
    fn shift_by_log_two() {
        let x = e(&[(1, 1, -1)]);
        let c = LogLinear::ln_of(&q(2, 1)).unwrap();
        assert_eq!(x.shift_argument(&c), e(&[(1, 1, -2)]));
    }
}
