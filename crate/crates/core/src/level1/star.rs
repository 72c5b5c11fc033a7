use std::cmp::Ordering;

use rug::{Float, Rational};

use super::coeff::K1Coefficient;
use super::exponent::TransExponent;
use crate::error::{Error, Result};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{Floor, GenExpSeries};

/// Accuracy claimed by a STAR-series.
///
/// `principal`: every omitted term has scale-1 principal exponent at or below
/// this value. `coefficient`: every coefficient is known up to
/// `O(e^{Ω y})` with `Ω` this value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Accuracy {
    pub principal: Floor,
    pub coefficient: Floor,
}

impl Accuracy {
    pub fn exact() -> Self {
        Accuracy { principal: Floor::Exact, coefficient: Floor::Exact }
    }

    pub fn new(principal: Floor, coefficient: Floor) -> Self {
        Accuracy { principal, coefficient }
    }

    fn coarsest(&self, other: &Self) -> Self {
        Accuracy {
            principal: self.principal.clone().max(other.principal.clone()),
            coefficient: self.coefficient.clone().max(other.coefficient.clone()),
        }
    }
}

/// Symbolic tail of an infinite family: exponents `anchor + n·step` for
/// every `n ≥ 0` continue beyond the stored terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ray {
    pub anchor: TransExponent,
    pub step: TransExponent,
}

impl Ray {
    pub fn rescale(&self, alpha: &Rational) -> Ray {
        Ray { anchor: self.anchor.rescale(alpha), step: self.step.rescale(alpha) }
    }

    fn shift_argument(&self, c: &LogLinear) -> Ray {
        Ray { anchor: self.anchor.shift_argument(c), step: self.step.shift_argument(c) }
    }

    fn offset(&self, e: &TransExponent) -> Ray {
        Ray { anchor: self.anchor.add(e), step: self.step.clone() }
    }
}

/// `k·e^{E}` with `k` a graded coefficient and `E` a generalized exponent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Level1Term {
    coeff: K1Coefficient,
    exponent: TransExponent,
}

impl Level1Term {
    pub fn new(coeff: K1Coefficient, exponent: TransExponent) -> Result<Self> {
        if coeff.is_zero() {
            return Err(Error::invariant("level-1 term with zero coefficient"));
        }
        Ok(Level1Term { coeff, exponent })
    }

    pub fn coeff(&self) -> &K1Coefficient {
        &self.coeff
    }

    pub fn exponent(&self) -> &TransExponent {
        &self.exponent
    }

    /// Scale-1 principal exponent.
    pub fn nu1(&self) -> Scalar {
        self.exponent.nu_at(&Rational::from(1))
    }

    pub fn mul(&self, other: &Self) -> Option<Self> {
        let coeff = self.coeff.mul(&other.coeff);
        (!coeff.is_zero()).then(|| Level1Term { coeff, exponent: self.exponent.add(&other.exponent) })
    }

    /// `(k' + k·E')·e^{E}` in the term's own variable.
    pub fn derivative(&self) -> Option<Self> {
        let coeff = self.coeff.derivative().add(&self.coeff.mul_series(&self.exponent.derivative()));
        (!coeff.is_zero()).then(|| Level1Term { coeff, exponent: self.exponent.clone() })
    }

    pub fn eval(&self, y: &Float) -> Float {
        self.coeff.eval(y) * self.exponent.eval(y).exp()
    }

    pub(crate) fn with_coeff(&self, coeff: K1Coefficient) -> Option<Self> {
        (!coeff.is_zero()).then(|| Level1Term { coeff, exponent: self.exponent.clone() })
    }
}

/// Finite part of a STAR-series `Σ k_q e^{E_q}` evaluated at `σ·t`, where
/// `σ` is the ambient scale and `t` the parent variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StarSeries {
    scale: Rational,
    terms: Vec<Level1Term>,
    accuracy: Accuracy,
    rays: Vec<Ray>,
}

impl StarSeries {
    /// Terms are stably sorted by principal data; terms at or below the
    /// principal floor are dropped.
    pub fn new(scale: Rational, terms: Vec<Level1Term>, accuracy: Accuracy, rays: Vec<Ray>) -> Result<Self> {
        if scale <= 0 {
            return Err(Error::invariant(format!("ambient scale must be positive, got {scale}")));
        }
        Ok(Self::assemble(scale, terms, accuracy, rays))
    }

    fn assemble(scale: Rational, terms: Vec<Level1Term>, accuracy: Accuracy, rays: Vec<Ray>) -> Self {
        let mut terms: Vec<Level1Term> = match &accuracy.principal {
            Floor::Exact => terms,
            Floor::At(f) => {
                let f = Scalar::from(f.clone());
                terms.into_iter().filter(|t| t.nu1().cmp_value(&f) == Ordering::Greater).collect()
            }
        };
        terms.sort_by(|a, b| b.exponent.cmp_principal(&a.exponent));
        let mut uniq: Vec<Ray> = Vec::with_capacity(rays.len());
        for r in rays {
            if !uniq.contains(&r) {
                uniq.push(r);
            }
        }
        StarSeries { scale, terms, accuracy, rays: uniq }
    }

    pub fn zero(scale: Rational) -> Self {
        StarSeries { scale, terms: Vec::new(), accuracy: Accuracy::exact(), rays: Vec::new() }
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn terms(&self) -> &[Level1Term] {
        &self.terms
    }

    pub fn accuracy(&self) -> &Accuracy {
        &self.accuracy
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn level(&self) -> usize {
        self.terms.iter().map(|t| t.coeff.level()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_scale(&self, scale: Rational) -> Self {
        StarSeries { scale, ..self.clone() }
    }

    pub fn with_accuracy(&self, accuracy: Accuracy) -> Self {
        Self::assemble(self.scale.clone(), self.terms.clone(), accuracy, self.rays.clone())
    }

    pub fn with_rays(&self, rays: Vec<Ray>) -> Self {
        Self::assemble(self.scale.clone(), self.terms.clone(), self.accuracy.clone(), rays)
    }

    /// Largest scale-1 principal exponent, as a rational upper bound.
    fn top_bound(&self) -> Option<Rational> {
        match self.terms.first() {
            Some(t) => Some(t.nu1().rational_upper_bound()),
            None => self.accuracy.principal.value().cloned(),
        }
    }

    pub fn lead_exponent(&self) -> Option<&TransExponent> {
        self.terms.first().map(|t| &t.exponent)
    }

    /// Sum at the same ambient scale; identical exponents are merged.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.scale, other.scale, "adding STAR-series at different scales");
        let mut terms = self.terms.clone();
        for t in &other.terms {
            match terms.iter_mut().position(|s| s.exponent == t.exponent) {
                Some(i) => {
                    let c = terms[i].coeff.add(&t.coeff);
                    if c.is_zero() {
                        terms.remove(i);
                    } else {
                        terms[i].coeff = c;
                    }
                }
                None => terms.push(t.clone()),
            }
        }
        let mut rays = self.rays.clone();
        rays.extend(other.rays.iter().cloned());
        Self::assemble(self.scale.clone(), terms, self.accuracy.coarsest(&other.accuracy), rays)
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| Some(c.neg()))
    }

    pub fn mul_scalar(&self, k: &Scalar) -> Self {
        self.map_coeffs(|c| Some(c.mul_scalar(k)))
    }

    pub fn mul_rational(&self, k: &Rational) -> Self {
        self.mul_scalar(&Scalar::from(k.clone()))
    }

    fn map_coeffs(&self, f: impl Fn(&K1Coefficient) -> Option<K1Coefficient>) -> Self {
        let terms = self.terms.iter().filter_map(|t| f(&t.coeff).and_then(|c| t.with_coeff(c))).collect();
        Self::assemble(self.scale.clone(), terms, self.accuracy.clone(), self.rays.clone())
    }

    /// Multiply every coefficient by `k`, given in this series' own variable.
    pub fn mul_own_coeff(&self, k: &K1Coefficient) -> Self {
        self.map_coeffs(|c| Some(c.mul(k)))
    }

    /// Multiply by a series `g(t)` of the parent variable.
    pub fn mul_parent_series(&self, g: &GenExpSeries) -> Self {
        let own = g.scale_argument(&Rational::from(self.scale.recip_ref()), &LogLinear::zero());
        self.map_coeffs(|c| Some(c.mul_series(&own)))
    }

    /// Product at the same ambient scale.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.scale, other.scale, "multiplying STAR-series at different scales");
        let mut principal = Floor::Exact;
        if let (Floor::At(f), Some(t)) = (&self.accuracy.principal, other.top_bound()) {
            principal = principal.max(Floor::At(Rational::from(f + &t)));
        }
        if let (Floor::At(f), Some(t)) = (&other.accuracy.principal, self.top_bound()) {
            principal = principal.max(Floor::At(Rational::from(f + &t)));
        }
        let accuracy = Accuracy {
            principal,
            coefficient: self.accuracy.coefficient.clone().max(other.accuracy.coefficient.clone()),
        };
        let floor = accuracy.principal.value().map(|f| Scalar::from(f.clone()));
        let mut terms: Vec<Level1Term> = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let nu = &a.nu1() + &b.nu1();
                if floor.as_ref().is_some_and(|f| nu.cmp_value(f) != Ordering::Greater) {
                    continue;
                }
                if let Some(t) = a.mul(b) {
                    match terms.iter_mut().position(|s| s.exponent == t.exponent) {
                        Some(i) => terms[i].coeff = terms[i].coeff.add(&t.coeff),
                        None => terms.push(t),
                    }
                }
            }
        }
        terms.retain(|t| !t.coeff.is_zero());
        let mut rays = Vec::new();
        if let Some(e) = other.lead_exponent() {
            rays.extend(self.rays.iter().map(|r| r.offset(e)));
        }
        if let Some(e) = self.lead_exponent() {
            rays.extend(other.rays.iter().map(|r| r.offset(e)));
        }
        let out = Self::assemble(self.scale.clone(), terms, accuracy, rays);
        match &out.accuracy.coefficient {
            Floor::At(_) => out.truncate(&Floor::Exact, &out.accuracy.coefficient.clone()),
            Floor::Exact => out,
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let one = Level1Term::new(K1Coefficient::one(), TransExponent::zero()).expect("nonzero");
        let mut acc = Self::assemble(self.scale.clone(), vec![one], Accuracy::exact(), Vec::new());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Derivative with respect to the parent variable (includes the factor σ).
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| t.derivative())
            .filter_map(|t| {
                let c = t.coeff.mul_rational(&self.scale);
                t.with_coeff(c)
            })
            .collect();
        Self::assemble(self.scale.clone(), terms, self.accuracy.clone(), self.rays.clone())
    }

    /// `S(t + δ(t))` for a small level-0 shift `δ` of the parent variable.
    pub fn compose_shift(&self, delta_parent: &GenExpSeries, cfloor: &Rational) -> Result<Self> {
        if delta_parent.is_exact_zero() {
            return Ok(self.clone());
        }
        let inv = Rational::from(self.scale.recip_ref());
        let delta = delta_parent.scale_argument(&inv, &LogLinear::zero()).mul_rational(&self.scale);
        let target = Floor::At(cfloor.clone());
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let coeff = t.coeff.compose_shift(&delta, cfloor)?;
            let mut shift = GenExpSeries::zero();
            for (a, nu) in t.exponent.principal() {
                let inner = delta.mul_rational(a).expm1_small(&Rational::from(cfloor - a));
                shift = shift.add(&inner.shift_exponents(a).mul_scalar(nu));
            }
            let tail = t.exponent.tail();
            shift = shift.add(&tail.compose_near_identity(&delta, &target)?.sub(tail));
            let pos: Vec<_> = shift.terms().iter().filter(|(m, _)| *m > 0).cloned().collect();
            let nonpos: Vec<_> = shift.terms().iter().filter(|(m, _)| *m <= 0).cloned().collect();
            let exponent =
                t.exponent.add(&TransExponent::zero().with_tail(GenExpSeries::from_terms(pos, Floor::Exact)));
            let small = GenExpSeries::from_terms(nonpos, shift.floor().clone());
            let factor = small.exp_general(cfloor)?;
            let coeff = coeff.mul_series(&factor).truncate(&target);
            if !coeff.is_zero() {
                terms.push(Level1Term::new(coeff, exponent)?);
            }
        }
        let accuracy = Accuracy {
            principal: self.accuracy.principal.clone(),
            coefficient: self.accuracy.coefficient.clone().max(target),
        };
        Ok(Self::assemble(self.scale.clone(), terms, accuracy, self.rays.clone()))
    }

    /// `S(y + c)` in the own variable `y`.
    pub fn shift_own(&self, c: &LogLinear) -> Self {
        if c.is_zero() {
            return self.clone();
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Level1Term { coeff: t.coeff.shift_argument(c), exponent: t.exponent.shift_argument(c) })
            .collect();
        let rays = self.rays.iter().map(|r| r.shift_argument(c)).collect();
        Self::assemble(self.scale.clone(), terms, self.accuracy.clone(), rays)
    }

    /// `S` evaluated at `t + c` of the parent variable.
    pub fn shift_parent(&self, c: &LogLinear) -> Self {
        self.shift_own(&c.scaled(&self.scale))
    }

    /// Drop terms at or below `principal` and coefficient parts at or below
    /// `cfloor`.
    pub fn truncate(&self, principal: &Floor, cfloor: &Floor) -> Self {
        let accuracy = Accuracy {
            principal: self.accuracy.principal.clone().max(principal.clone()),
            coefficient: self.accuracy.coefficient.clone().max(cfloor.clone()),
        };
        let terms = self.terms.iter().filter_map(|t| t.with_coeff(t.coeff.truncate(cfloor))).collect();
        Self::assemble(self.scale.clone(), terms, accuracy, self.rays.clone())
    }

    /// Value at parent variable `t`.
    pub fn eval(&self, t: &Float) -> Float {
        let prec = t.prec();
        let y = Float::with_val(prec, t * &self.scale);
        let mut acc = Float::with_val(prec, 0);
        for term in self.terms.iter().rev() {
            acc += term.eval(&y);
        }
        acc
    }
}
