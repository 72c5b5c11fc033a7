//! Truncated generalized exponential series `Σ b·e^{μζ}`.

use std::cmp::Ordering;
use std::fmt;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::scalar::{LogLinear, Scalar};

/// Truncation floor of a series.
///
/// `At(Ω)` means every omitted term has exponent `μ ≤ Ω`; stored terms have
/// `μ > Ω`. `Exact` means nothing was omitted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Floor {
    Exact,
    At(Rational),
}

impl Floor {
    pub fn at(r: impl Into<Rational>) -> Self {
        Floor::At(r.into())
    }

    pub fn value(&self) -> Option<&Rational> {
        match self {
            Floor::Exact => None,
            Floor::At(r) => Some(r),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Floor::Exact)
    }

    /// Whether a term with exponent `mu` lies strictly above the floor.
    pub fn admits(&self, mu: &Rational) -> bool {
        match self {
            Floor::Exact => true,
            Floor::At(r) => mu > r,
        }
    }

    pub fn shifted(&self, delta: &Rational) -> Floor {
        match self {
            Floor::Exact => Floor::Exact,
            Floor::At(r) => Floor::At(Rational::from(r + delta)),
        }
    }

    pub fn scaled(&self, alpha: &Rational) -> Floor {
        match self {
            Floor::Exact => Floor::Exact,
            Floor::At(r) => Floor::At(Rational::from(r * alpha)),
        }
    }

    pub fn max(self, other: Floor) -> Floor {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Floor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Floor {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Floor::Exact, Floor::Exact) => Ordering::Equal,
            (Floor::Exact, Floor::At(_)) => Ordering::Less,
            (Floor::At(_), Floor::Exact) => Ordering::Greater,
            (Floor::At(a), Floor::At(b)) => a.cmp(b),
        }
    }
}

/// Finite sum `Σ b·e^{μζ}` with exact coefficients, a truncation floor and
/// a half-plane threshold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GenExpSeries {
    terms: Vec<(Rational, Scalar)>,
    floor: Floor,
    threshold: Rational,
}

impl Default for GenExpSeries {
    fn default() -> Self {
        Self::zero()
    }
}

impl GenExpSeries {
    /// The exact zero series.
    pub fn zero() -> Self {
        GenExpSeries { terms: Vec::new(), floor: Floor::Exact, threshold: Rational::new() }
    }

    /// Zero with a known truncation floor (an `O(e^{Ωζ})` remainder).
    pub fn zero_at(floor: Floor) -> Self {
        GenExpSeries { terms: Vec::new(), floor, threshold: Rational::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::monomial(Rational::new(), c)
    }

    /// Exact single term `c·e^{μζ}`.
    pub fn monomial(mu: Rational, c: Scalar) -> Self {
        Self::from_terms(vec![(mu, c)], Floor::Exact)
    }

    /// Build from unordered terms: like exponents are merged, zeros dropped
    /// and terms at or below the floor discarded.
    pub fn from_terms(terms: Vec<(Rational, Scalar)>, floor: Floor) -> Self {
        let mut terms = terms;
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        let mut merged: Vec<(Rational, Scalar)> = Vec::with_capacity(terms.len());
        for (mu, c) in terms {
            if !floor.admits(&mu) {
                continue;
            }
            match merged.last_mut() {
                Some((m, acc)) if *m == mu => *acc = &*acc + &c,
                _ => merged.push((mu, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        GenExpSeries { terms: merged, floor, threshold: Rational::new() }
    }

    /// Checked constructor: terms must already satisfy every invariant.
    pub fn new(terms: Vec<(Rational, Scalar)>, floor: Floor, threshold: Rational) -> Result<Self> {
        if threshold < 0 {
            return Err(Error::invariant("threshold must be non-negative"));
        }
        for w in terms.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(Error::invariant("exponents must be strictly decreasing"));
            }
        }
        for (mu, c) in &terms {
            if c.is_zero() {
                return Err(Error::invariant(format!("zero coefficient at exponent {mu}")));
            }
            if !floor.admits(mu) {
                return Err(Error::invariant(format!("exponent {mu} is not above the floor")));
            }
        }
        Ok(GenExpSeries { terms, floor, threshold })
    }

    pub fn with_threshold(mut self, a: Rational) -> Self {
        self.threshold = a;
        self
    }

    pub fn terms(&self) -> &[(Rational, Scalar)] {
        &self.terms
    }

    pub fn floor(&self) -> &Floor {
        &self.floor
    }

    pub fn threshold(&self) -> &Rational {
        &self.threshold
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Zero with nothing omitted.
    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.floor.is_exact()
    }

    /// All exponents negative (the class of deviations of `id + FC⁰`).
    pub fn is_fc0(&self) -> bool {
        self.terms.iter().all(|(mu, _)| *mu < 0) && self.floor.value().is_none_or(|f| *f < 0)
    }

    /// Finitely many non-negative exponents; always true for a finite
    /// series but kept as a named predicate for the coefficient class.
    pub fn is_k10(&self) -> bool {
        true
    }

    pub fn leading_term(&self) -> Option<(&Rational, &Scalar)> {
        self.terms.first().map(|(m, c)| (m, c))
    }

    /// Upper bound on the growth exponent: the leading μ, or the floor for a
    /// truncated zero, or `None` for the exact zero.
    pub fn lead_bound(&self) -> Option<Rational> {
        match self.terms.first() {
            Some((m, _)) => Some(m.clone()),
            None => self.floor.value().cloned(),
        }
    }

    pub fn coefficient(&self, mu: &Rational) -> Scalar {
        self.terms.iter().find(|(m, _)| m == mu).map(|(_, c)| c.clone()).unwrap_or_default()
    }

    /// Drop everything at or below `floor` and lower the precision claim.
    pub fn truncate(&self, floor: &Floor) -> Self {
        let f = self.floor.clone().max(floor.clone());
        let mut out = Self::from_terms(self.terms.clone(), f);
        out.threshold = self.threshold.clone();
        out
    }

    pub fn neg(&self) -> Self {
        GenExpSeries {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
            floor: self.floor.clone(),
            threshold: self.threshold.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let floor = self.floor.clone().max(other.floor.clone());
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        let mut out = Self::from_terms(terms, floor);
        out.threshold = self.threshold.clone().max(other.threshold.clone());
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Floor of a product, chosen so no retained term depends on omitted ones.
    fn product_floor(&self, other: &Self) -> Floor {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Floor::Exact;
        }
        let mut f = Floor::Exact;
        if let (Floor::At(o), Some(l)) = (&self.floor, other.lead_bound()) {
            f = f.max(Floor::At(Rational::from(o + &l)));
        }
        if let (Floor::At(o), Some(l)) = (&other.floor, self.lead_bound()) {
            f = f.max(Floor::At(Rational::from(o + &l)));
        }
        f
    }

    pub fn mul(&self, other: &Self) -> Self {
        let floor = self.product_floor(other);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mu = Rational::from(m1 + m2);
                if floor.admits(&mu) {
                    terms.push((mu, c1 * c2));
                }
            }
        }
        let mut out = Self::from_terms(terms, floor);
        out.threshold = self.threshold.clone().max(other.threshold.clone());
        out
    }

    pub fn mul_scalar(&self, k: &Scalar) -> Self {
        if k.is_zero() {
            return Self::zero_at(Floor::Exact);
        }
        let mut out =
            Self::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(), self.floor.clone());
        out.threshold = self.threshold.clone();
        out
    }

    pub fn mul_rational(&self, k: &Rational) -> Self {
        self.mul_scalar(&Scalar::from(k.clone()))
    }

    /// Multiply by `e^{δζ}`.
    pub fn shift_exponents(&self, delta: &Rational) -> Self {
        GenExpSeries {
            terms: self.terms.iter().map(|(m, c)| (Rational::from(m + delta), c.clone())).collect(),
            floor: self.floor.shifted(delta),
            threshold: self.threshold.clone(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(Scalar::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// `d/dζ`: `(μ, b) ↦ (μ, μ·b)`.
    pub fn derivative(&self) -> Self {
        let terms = self.terms.iter().filter(|(m, _)| *m != 0).map(|(m, c)| (m.clone(), c.mul_rational(m))).collect();
        let mut out = Self::from_terms(terms, self.floor.clone());
        out.threshold = self.threshold.clone();
        out
    }

    /// `s(αζ + β)`: `(μ, b) ↦ (αμ, b·e^{μβ})`, floor `αΩ`.
    pub fn scale_argument(&self, alpha: &Rational, beta: &LogLinear) -> Self {
        assert!(*alpha > 0, "scale_argument needs a positive alpha");
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let coeff = if beta.is_zero() { c.clone() } else { c * &beta.exp_scaled(m) };
                (Rational::from(m * alpha), coeff)
            })
            .collect();
        let mut out = Self::from_terms(terms, self.floor.scaled(alpha));
        out.threshold = self.threshold.clone();
        out
    }

    /// `Σ_n a_n·s^n` truncated at `target`, for a series with negative lead.
    ///
    /// The powers stop at the first `n` with `n·lead(s) ≤ target`.
    pub fn power_series(&self, coeff: impl Fn(u32) -> Rational, target: &Rational) -> Self {
        let floor = Floor::At(target.clone());
        let lead = match self.lead_bound() {
            None => return Self::from_terms(vec![(Rational::new(), Scalar::from(coeff(0)))], floor),
            Some(l) => l,
        };
        assert!(lead < 0, "power_series needs a series with negative leading exponent");
        let base = self.truncate(&floor);
        let mut acc = Self::from_terms(vec![(Rational::new(), Scalar::from(coeff(0)))], floor.clone());
        let mut power = Self::constant(Scalar::one());
        let mut n = 1u32;
        loop {
            if Rational::from(&lead * n) <= *target {
                break;
            }
            power = power.mul(&base).truncate(&floor);
            let a = coeff(n);
            if a != 0 {
                acc = acc.add(&power.mul_rational(&a));
            }
            n += 1;
        }
        acc.threshold = self.threshold.clone();
        acc
    }

    /// `e^{s}` for `s` with negative lead, to `target`.
    pub fn exp_small(&self, target: &Rational) -> Self {
        self.power_series(inv_factorial, target)
    }

    /// `e^{s} − 1`.
    pub fn expm1_small(&self, target: &Rational) -> Self {
        self.power_series(|n| if n == 0 { Rational::new() } else { inv_factorial(n) }, target)
    }

    /// `ln(1 + s)`.
    pub fn ln1p(&self, target: &Rational) -> Self {
        self.power_series(
            |n| match n {
                0 => Rational::new(),
                n if n % 2 == 1 => Rational::from((1, n)),
                n => Rational::from((-1, n)),
            },
            target,
        )
    }

    /// `1/(1 + s)`.
    pub fn recip_1p(&self, target: &Rational) -> Self {
        self.power_series(|n| if n % 2 == 0 { Rational::from(1) } else { Rational::from(-1) }, target)
    }

    /// `e^{s}` where `s` may carry a constant term `c = r + Σ q ln p`; the
    /// negative part is expanded and `e^{c}` kept as an exact scalar.
    pub fn exp_general(&self, target: &Rational) -> Result<Self> {
        if self.terms.iter().any(|(m, _)| *m > 0) {
            return Err(Error::Domain("exp of a series with positive exponents".into()));
        }
        let c = self.coefficient(&Rational::new());
        let small = self.sub(&Self::constant(c.clone()));
        let ec = c.exp().ok_or_else(|| Error::NotRepresentable(format!("e^({c}) is not an exact scalar")))?;
        Ok(small.exp_small(target).mul_scalar(&ec))
    }

    /// `self ∘ (id + δ)` by Taylor expansion, for `δ` with negative lead.
    ///
    /// The result floor is the coarsest of `target`, this series' floor and
    /// the floor of `δ` shifted by the leading exponent of `self'`. The
    /// expansion stops at the first order whose contribution lies below it.
    pub fn compose_near_identity(&self, delta: &GenExpSeries, target: &Floor) -> Result<Self> {
        if delta.is_exact_zero() {
            return Ok(self.truncate(target));
        }
        let ld = delta.lead_bound().expect("nonzero delta");
        if ld >= 0 {
            return Err(Error::Domain(format!("shift with leading exponent {ld} is not small")));
        }
        let mut deriv = self.derivative();
        let lds = match deriv.lead_bound() {
            None => return Ok(self.truncate(target)),
            Some(l) => l,
        };
        let mut floor = target.clone().max(self.floor.clone());
        if let Floor::At(od) = delta.floor() {
            floor = floor.max(Floor::At(Rational::from(od + &lds)));
        }
        let f = match &floor {
            Floor::At(f) => f.clone(),
            Floor::Exact => {
                return Err(Error::invariant("exact composition with an infinite expansion needs a floor"));
            }
        };
        let power_floor = Floor::At(Rational::from(&f - &lds));
        let mut acc = self.truncate(&floor);
        let mut power = Self::constant(Scalar::one());
        let mut k = 1u32;
        loop {
            if (&lds + Rational::from(&ld * k)) <= f {
                break;
            }
            power = power.mul(delta).truncate(&power_floor);
            acc = acc.add(&deriv.mul(&power).mul_rational(&inv_factorial(k)).truncate(&floor));
            deriv = deriv.derivative();
            k += 1;
        }
        acc.threshold = self.threshold.clone().max(delta.threshold.clone());
        Ok(acc)
    }

    /// Evaluate `Σ b·e^{μζ}` at the precision of `zeta`.
    pub fn eval(&self, zeta: &Float) -> Float {
        let prec = zeta.prec();
        let mut acc = Float::with_val(prec, 0);
        for (mu, c) in self.terms.iter().rev() {
            let e = Float::with_val(prec, mu * zeta).exp();
            acc += c.to_float(prec) * e;
        }
        acc
    }
}

pub(crate) fn inv_factorial(n: u32) -> Rational {
    let mut f = rug::Integer::from(1);
    for k in 2..=n {
        f *= k;
    }
    Rational::from((rug::Integer::from(1), f))
}

impl fmt::Display for GenExpSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_series(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn s(terms: &[(i64, i64, i64, i64)], floor: Floor) -> GenExpSeries {
        GenExpSeries::from_terms(terms.iter().map(|&(a, b, c, d)| (q(a, b), Scalar::from(q(c, d)))).collect(), floor)
    }

    #[test]
    fn additive_inverse_is_zero() {
        let a = s(&[(-1, 1, 1, 1)], Floor::Exact);
        assert!(a.add(&a.neg()).is_exact_zero());
    }

    #[test]
    fn sum_takes_the_coarser_floor() {
        let a = s(&[(-1, 1, 1, 1), (-2, 1, -1, 2)], Floor::at(-3));
        let b = s(&[(-2, 1, 1, 2)], Floor::at(-4));
        assert_eq!(a.add(&b), s(&[(-1, 1, 1, 1)], Floor::at(-3)));
    }

    #[test]
    fn difference_of_squares() {
        let a = s(&[(0, 1, 1, 1), (-1, 1, 1, 1)], Floor::Exact);
        let b = s(&[(0, 1, 1, 1), (-1, 1, -1, 1)], Floor::Exact);
        assert_eq!(a.mul(&b), s(&[(0, 1, 1, 1), (-2, 1, -1, 1)], Floor::Exact));
        let e1 = s(&[(-1, 1, 1, 1)], Floor::Exact);
        let e2 = s(&[(-2, 1, 1, 1)], Floor::Exact);
        assert_eq!(e1.mul(&e2), s(&[(-3, 1, 1, 1)], Floor::Exact));
    }

    #[test]
    fn geometric_square_matches_convolution() {
        // e^{-ζ}/(1 - e^{-ζ}) as e^{-ζ}·(1/(1 + (-e^{-ζ})))
        let e = s(&[(-1, 1, 1, 1)], Floor::Exact);
        let geo = e.neg().recip_1p(&q(-4, 1)).mul(&e);
        assert_eq!(geo.floor(), &Floor::at(-5));
        assert_eq!(geo.terms().len(), 4);
        let sq = geo.mul(&geo);
        let mut want = Vec::new();
        for k in 2..=5i64 {
            let mut c = 0;
            for i in 1..5 {
                let j = k - i;
                if (1..5).contains(&j) {
                    c += 1;
                }
            }
            want.push((q(-k, 1), Scalar::from(q(c, 1))));
        }
        assert_eq!(sq, GenExpSeries::from_terms(want, Floor::at(-6)));
        assert_eq!(sq.coefficient(&q(-5, 1)), Scalar::from(q(4, 1)));
    }

    #[test]
    fn derivative_rules() {
        let e = s(&[(-1, 1, 1, 1)], Floor::Exact);
        assert_eq!(e.derivative(), s(&[(-1, 1, -1, 1)], Floor::Exact));
        assert!(s(&[(0, 1, 1, 1)], Floor::Exact).derivative().is_exact_zero());
    }

    #[test]
    fn scale_argument_examples() {
        let e = s(&[(-1, 1, 1, 1)], Floor::Exact);
        assert_eq!(e.scale_argument(&q(2, 1), &LogLinear::zero()), s(&[(-2, 1, 1, 1)], Floor::Exact));
        let ln2 = LogLinear::ln_of(&q(2, 1)).unwrap();
        assert_eq!(e.scale_argument(&q(1, 1), &ln2), s(&[(-1, 1, 1, 2)], Floor::Exact));
        let t = s(&[(-1, 1, 1, 1), (-2, 1, -1, 2)], Floor::Exact);
        assert_eq!(t.scale_argument(&q(1, 2), &LogLinear::zero()), s(&[(-1, 2, 1, 1), (-1, 1, -1, 2)], Floor::Exact));
    }

    #[test]
    fn leading_terms() {
        assert!(GenExpSeries::zero().leading_term().is_none());
        let t = s(&[(-1, 1, 1, 1), (-2, 1, -1, 2)], Floor::Exact);
        assert_eq!(t.leading_term(), Some((&q(-1, 1), &Scalar::one())));
    }

    #[test]
    fn exp_and_log_invert_each_other() {
        let x = s(&[(-1, 1, 1, 1), (-3, 2, -2, 3)], Floor::Exact);
        let target = q(-8, 1);
        let y = x.exp_small(&target);
        let back = y.sub(&GenExpSeries::constant(Scalar::one())).ln1p(&target);
        assert_eq!(back, x.truncate(&Floor::At(target)));
    }

    #[test]
    fn eval_at_ln2() {
        let t = s(&[(-1, 1, 1, 1), (-2, 1, -1, 2)], Floor::Exact);
        let z = Float::with_val(256, 2).ln();
        let v = t.eval(&z);
        assert!((v - Float::with_val(256, 0.375)).abs() < 1e-60);
    }
}
