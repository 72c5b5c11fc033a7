use std::cmp::Ordering;

use rug::{Float, Rational};

use super::star::StarSeries;
use crate::error::{Error, Result};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{Floor, GenExpSeries};

/// Coefficient of a level-1 term: a `K₁,₀` series plus upper parts
/// `ψ ∘ exp ∘ m_α` with `0 < α < 1`, each a STAR-series in its own variable
/// `αx`.
///
/// The grading level is 0 without uppers and otherwise one more than the
/// deepest upper body.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct K1Coefficient {
    base: GenExpSeries,
    uppers: Vec<StarSeries>,
}

impl K1Coefficient {
    pub fn new(base: GenExpSeries, uppers: Vec<StarSeries>) -> Result<Self> {
        for u in &uppers {
            if *u.scale() <= 0 || *u.scale() >= 1 {
                return Err(Error::invariant(format!("upper scale {} is outside (0, 1)", u.scale())));
            }
        }
        Ok(Self::normalized(base, uppers))
    }

    fn normalized(base: GenExpSeries, uppers: Vec<StarSeries>) -> Self {
        let mut uppers = uppers;
        uppers.sort_by(|a, b| b.scale().cmp(a.scale()));
        let mut merged: Vec<StarSeries> = Vec::with_capacity(uppers.len());
        for u in uppers {
            match merged.last_mut() {
                Some(m) if m.scale() == u.scale() => *m = m.add(&u),
                _ => merged.push(u),
            }
        }
        merged.retain(|u| !u.terms().is_empty());
        K1Coefficient { base, uppers: merged }
    }

    pub fn from_series(base: GenExpSeries) -> Self {
        K1Coefficient { base, uppers: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_series(GenExpSeries::constant(c))
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn from_upper(upper: StarSeries) -> Result<Self> {
        Self::new(GenExpSeries::zero(), vec![upper])
    }

    pub fn base(&self) -> &GenExpSeries {
        &self.base
    }

    pub fn uppers(&self) -> &[StarSeries] {
        &self.uppers
    }

    pub fn level(&self) -> usize {
        self.uppers.iter().map(|u| 1 + u.level()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.uppers.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut uppers = self.uppers.clone();
        uppers.extend(other.uppers.iter().cloned());
        Self::normalized(self.base.add(&other.base), uppers)
    }

    pub fn neg(&self) -> Self {
        K1Coefficient { base: self.base.neg(), uppers: self.uppers.iter().map(|u| u.neg()).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul_scalar(&self, k: &Scalar) -> Self {
        Self::normalized(self.base.mul_scalar(k), self.uppers.iter().map(|u| u.mul_scalar(k)).collect())
    }

    pub fn mul_rational(&self, k: &Rational) -> Self {
        self.mul_scalar(&Scalar::from(k.clone()))
    }

    /// Multiply by a `K₁,₀` series in this coefficient's variable.
    pub fn mul_series(&self, g: &GenExpSeries) -> Self {
        Self::normalized(self.base.mul(g), self.uppers.iter().map(|u| u.mul_parent_series(g)).collect())
    }

    /// Product of two coefficients. Uppers at different scales nest the
    /// smaller-scale factor into the larger one, raising the level.
    pub fn mul(&self, other: &Self) -> Self {
        let mut uppers: Vec<StarSeries> = Vec::new();
        if !other.base.is_exact_zero() {
            uppers.extend(self.uppers.iter().map(|u| u.mul_parent_series(&other.base)));
        }
        if !self.base.is_exact_zero() {
            uppers.extend(other.uppers.iter().map(|u| u.mul_parent_series(&self.base)));
        }
        for u in &self.uppers {
            for v in &other.uppers {
                uppers.push(upper_product(u, v));
            }
        }
        Self::normalized(self.base.mul(&other.base), uppers)
    }

    /// `d/dx` in this coefficient's variable.
    pub fn derivative(&self) -> Self {
        Self::normalized(self.base.derivative(), self.uppers.iter().map(|u| u.derivative()).collect())
    }

    /// `k(x + δ(x))` with coefficient precision capped at `cfloor`.
    pub fn compose_shift(&self, delta: &GenExpSeries, cfloor: &Rational) -> Result<Self> {
        let base = self.base.compose_near_identity(delta, &Floor::At(cfloor.clone()))?;
        let uppers = self.uppers.iter().map(|u| u.compose_shift(delta, cfloor)).collect::<Result<Vec<_>>>()?;
        Ok(Self::normalized(base, uppers))
    }

    /// `k(x + c)` for a constant `c`.
    pub fn shift_argument(&self, c: &LogLinear) -> Self {
        let base = self.base.scale_argument(&Rational::from(1), c);
        let uppers = self.uppers.iter().map(|u| u.shift_parent(c)).collect();
        Self::normalized(base, uppers)
    }

    pub fn truncate(&self, cfloor: &Floor) -> Self {
        Self::normalized(
            self.base.truncate(cfloor),
            self.uppers.iter().map(|u| u.truncate(&Floor::Exact, cfloor)).collect(),
        )
    }

    /// Sign of the asymptotically dominant part: the base when nonzero,
    /// otherwise the upper at the smallest scale.
    pub fn leading_sign(&self) -> Ordering {
        if let Some((_, c)) = self.base.leading_term() {
            return c.signum();
        }
        self.uppers.last().and_then(|u| u.terms().first()).map_or(Ordering::Equal, |t| t.coeff().leading_sign())
    }

    pub fn eval(&self, x: &Float) -> Float {
        let mut acc = self.base.eval(x);
        for u in &self.uppers {
            acc += u.eval(x);
        }
        acc
    }
}

fn upper_product(u: &StarSeries, v: &StarSeries) -> StarSeries {
    match u.scale().cmp(v.scale()) {
        Ordering::Equal => u.mul(v),
        Ordering::Greater => nest(u, v),
        Ordering::Less => nest(v, u),
    }
}

/// `host · guest` with `guest` at the smaller scale, carried inside the
/// host's coefficients at relative scale `guest/host`.
fn nest(host: &StarSeries, guest: &StarSeries) -> StarSeries {
    let rel = Rational::from(guest.scale() / host.scale());
    let inner = K1Coefficient::normalized(GenExpSeries::zero(), vec![guest.with_scale(rel)]);
    host.mul_own_coeff(&inner)
}
