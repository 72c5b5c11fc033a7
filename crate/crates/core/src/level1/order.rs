use std::cmp::Ordering;

use rug::Rational;

use super::coeff::K1Coefficient;
use super::exponent::TransExponent;
use super::normal::{compare_terms, TermOrder};
use super::star::{Accuracy, Level1Term, Ray, StarSeries};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponents of a (possibly infinite) family of level-1 terms: the stored
/// exponents plus rays describing how the family continues.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Family {
    pub exponents: Vec<TransExponent>,
    pub rays: Vec<Ray>,
}

impl Family {
    /// `Σ_{q ≥ 1} e^{q·step + offset}` truncated to `n` stored terms.
    pub fn progression(offset: &TransExponent, step: &TransExponent, n: u32) -> Self {
        let exponents = (1..=n).map(|q| offset.add(&step.scaled(&Rational::from(q)))).collect();
        Family { exponents, rays: vec![Ray { anchor: offset.add(step), step: step.clone() }] }
    }

    /// Flatten every upper coefficient into multi-scale exponents.
    pub fn from_star(s: &StarSeries) -> Self {
        let mut fam = Family::default();
        for t in s.terms() {
            let inner = Family::from_coefficient(t.coeff());
            for e in inner.exponents {
                fam.exponents.push(t.exponent().add(&e));
            }
            for r in inner.rays {
                fam.rays.push(Ray { anchor: t.exponent().add(&r.anchor), step: r.step });
            }
        }
        fam.rays.extend(s.rays().iter().cloned());
        fam
    }

    /// Flatten a coefficient: the base contributes the zero exponent, each
    /// upper its own flattened family rescaled to this variable.
    pub fn from_coefficient(k: &K1Coefficient) -> Self {
        let mut fam = Family::default();
        if !k.base().is_zero() {
            fam.exponents.push(TransExponent::zero());
        }
        for u in k.uppers() {
            let inner = Family::from_star(u);
            fam.exponents.extend(inner.exponents.iter().map(|e| e.rescale(u.scale())));
            fam.rays.extend(inner.rays.iter().map(|r| r.rescale(u.scale())));
        }
        fam
    }

    /// Rewrite in the variable `σx`, so scale `σ` becomes scale 1.
    pub fn normalize(&self, sigma: &Rational) -> Self {
        let inv = Rational::from(sigma.recip_ref());
        Family {
            exponents: self.exponents.iter().map(|e| e.rescale(&inv)).collect(),
            rays: self.rays.iter().map(|r| r.rescale(&inv)).collect(),
        }
    }
}

/// Result of a family validity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid {
        /// Principal value at the checked scale that the family fails to push to `−∞`.
        witness: Scalar,
        scale: Rational,
        reason: String,
    },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

/// Valid iff the principal exponent at scale `σ` tends to `−∞` along every
/// ray of the family.
pub fn validity_check(family: &Family, sigma: &Rational) -> Validity {
    let mut worst: Option<(Scalar, String)> = None;
    for r in &family.rays {
        let step = r.step.nu_at(sigma);
        let sign = step.signum();
        if sign == Ordering::Less {
            continue;
        }
        let anchor = r.anchor.nu_at(sigma);
        let reason = if sign == Ordering::Equal {
            format!("principal exponent at scale {sigma} stays at {anchor} (magnitude {})", abs(&anchor))
        } else {
            format!("principal exponent at scale {sigma} grows from {anchor}")
        };
        let replace = match &worst {
            None => true,
            Some((w, _)) => anchor.cmp_value(w) == Ordering::Greater,
        };
        if replace {
            worst = Some((anchor, reason));
        }
    }
    match worst {
        None => Validity::Valid,
        Some((witness, reason)) => Validity::Invalid { witness, scale: sigma.clone(), reason },
    }
}

fn abs(s: &Scalar) -> Scalar {
    if s.signum() == Ordering::Less {
        -s
    } else {
        s.clone()
    }
}

/// Derivative of a single term with its grading bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermDerivative {
    pub series: StarSeries,
    /// Grading level of the input coefficient.
    pub input_level: usize,
    /// Grading level of the derivative's coefficient.
    pub level: usize,
    /// Whether the new coefficient still lies in `K₁,₀`.
    pub in_k10: bool,
}

impl TermDerivative {
    /// Set when the coefficient left `K₁,₀`, i.e. it carries double
    /// exponentials at a smaller scale.
    pub fn escalation_flagged(&self) -> bool {
        !self.in_k10
    }
}

/// `d/dx (k e^{E}) = (k' + k·E') e^{E}` at ambient scale 1.
pub fn term_derivative(t: &Level1Term) -> TermDerivative {
    let terms: Vec<Level1Term> = t.derivative().into_iter().collect();
    let level = terms.first().map_or(0, |d| d.coeff().level());
    let series = StarSeries::new(Rational::from(1), terms, Accuracy::exact(), vec![]).expect("scale 1");
    TermDerivative { series, input_level: t.coeff().level(), level, in_k10: level == 0 }
}

/// Outcome of the divide-and-differentiate lower-bound procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LowerBoundReport {
    /// `|S(ζ)| ≥ e^{−λ e^{σζ}}` for large `ζ`.
    Certified { lambda: Rational, scale: Rational, sign: Ordering, dominant: Level1Term, derivative_steps: usize },
    /// A Wronskian coefficient `k_q'k₁ − k₁'k_q + k_q k₁(E_q' − E₁')` left
    /// the grading level of the input.
    GapDetected {
        witness: K1Coefficient,
        witness_level: usize,
        input_level: usize,
        rewrite: Family,
        rewrite_scale: Rational,
        validity: Validity,
    },
}

impl LowerBoundReport {
    pub fn is_certified(&self) -> bool {
        matches!(self, LowerBoundReport::Certified { .. })
    }
}

/// Lower bound for a finite nonzero STAR-series in Large normal form.
///
/// The dominant term is isolated by principal data. Strict dominance is
/// certified directly. Every term tied with it produces a Wronskian
/// coefficient whose level is checked against the input level; exceeding it
/// is reported as a gap together with the flattened rewrite of the witness
/// and its validity at the witness's largest upper scale.
pub fn ordering_lower_bound(s: &StarSeries, delta: &Rational) -> Result<LowerBoundReport> {
    if s.is_empty() {
        return Err(Error::Degenerate("lower bound of an empty series".into()));
    }
    for t in s.terms() {
        if !t.exponent().is_large() {
            return Err(Error::NotNormalForm("ordering needs Large exponents".into()));
        }
    }
    let mut terms: Vec<&Level1Term> = s.terms().iter().collect();
    terms.sort_by(|a, b| b.exponent().cmp_principal(a.exponent()));
    let first = terms[0];
    let p = s.level();
    let mut tied_coeff = first.coeff().clone();
    let mut steps = 0;
    for t in &terms[1..] {
        if compare_terms(first, t)? != TermOrder::EqualPrincipal {
            continue;
        }
        steps = 1;
        let w = wronskian(first, t);
        let wl = w.level();
        if wl > p {
            let rewrite_scale = w.uppers().first().map(|u| u.scale().clone()).unwrap_or_else(|| Rational::from(1));
            let rewrite = Family::from_coefficient(&w);
            let validity = validity_check(&rewrite, &rewrite_scale);
            return Ok(LowerBoundReport::GapDetected {
                witness: w,
                witness_level: wl,
                input_level: p,
                rewrite,
                rewrite_scale,
                validity,
            });
        }
        tied_coeff = tied_coeff.add(t.coeff());
    }
    if terms.len() > 1 && steps == 0 {
        steps = 1;
    }
    let nu = first.nu1();
    let magnitude = if nu.signum() == Ordering::Less { -&nu } else { nu };
    let lambda = magnitude.rational_upper_bound() + delta;
    Ok(LowerBoundReport::Certified {
        lambda,
        scale: s.scale().clone(),
        sign: tied_coeff.leading_sign(),
        dominant: first.clone(),
        derivative_steps: steps,
    })
}

/// `k_q'k₁ − k₁'k_q + k_q k₁ (E_q' − E₁')`.
pub fn wronskian(t1: &Level1Term, tq: &Level1Term) -> K1Coefficient {
    let k1 = t1.coeff();
    let kq = tq.coeff();
    let de = tq.exponent().derivative().sub(&t1.exponent().derivative());
    kq.derivative().mul(k1).sub(&k1.derivative().mul(kq)).add(&kq.mul(k1).mul_series(&de))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::GenExpSeries;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn e(entries: &[(i64, i64, i64)]) -> TransExponent {
        TransExponent::new(
            entries.iter().map(|&(n, d, nu)| (q(n, d), Scalar::from(nu))).collect(),
            GenExpSeries::zero(),
        )
        .unwrap()
    }

    #[test]
    fn geometric_family_is_valid() {
        let fam = Family::progression(&TransExponent::zero(), &e(&[(1, 1, -1)]), 12);
        assert_eq!(validity_check(&fam, &q(1, 1)), Validity::Valid);
    }

    #[test]
    fn constant_principal_is_invalid() {
        let fam = Family::progression(&e(&[(1, 1, -1)]), &e(&[(2, 3, -1)]), 12);
        match validity_check(&fam, &q(1, 1)) {
            Validity::Invalid { witness, .. } => assert_eq!(witness, Scalar::from(-1)),
            v => panic!("expected Invalid, got {v:?}"),
        }
    }

    #[test]
    fn single_term_certified() {
        let t = Level1Term::new(
            K1Coefficient::from_series(GenExpSeries::monomial(q(-1, 1), Scalar::from(-2))),
            e(&[(1, 1, -1)]),
        )
        .unwrap();
        let s = StarSeries::new(q(1, 1), vec![t], Accuracy::exact(), vec![]).unwrap();
        match ordering_lower_bound(&s, &q(1, 4)).unwrap() {
            LowerBoundReport::Certified { lambda, sign, .. } => {
                assert_eq!(lambda, q(5, 4));
                assert_eq!(sign, Ordering::Less);
            }
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn level_zero_tie_stays_certified() {
        let k = |mu: i64| K1Coefficient::from_series(GenExpSeries::monomial(q(mu, 1), Scalar::one()));
        let big = e(&[(1, 1, -1)]).with_tail(GenExpSeries::monomial(q(1, 2), Scalar::one()));
        let t1 = Level1Term::new(k(-1), big).unwrap();
        let t2 = Level1Term::new(k(-2), e(&[(1, 1, -1)])).unwrap();
        let s = StarSeries::new(q(1, 1), vec![t1, t2], Accuracy::exact(), vec![]).unwrap();
        let r = ordering_lower_bound(&s, &q(1, 4)).unwrap();
        assert!(r.is_certified());
    }

    #[test]
    fn derivative_of_plain_exponential() {
        let t = Level1Term::new(K1Coefficient::one(), e(&[(1, 1, -1)])).unwrap();
        let d = term_derivative(&t);
        assert!(d.in_k10);
        let c = d.series.terms()[0].coeff().base();
        assert_eq!(c, &GenExpSeries::monomial(q(1, 1), Scalar::from(-1)));
    }
}
