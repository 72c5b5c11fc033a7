use std::cmp::Ordering;

use rug::Rational;

use super::coeff::K1Coefficient;
use super::exponent::TransExponent;
use super::normal::normal_form;
use super::order::Family;
use super::star::{Accuracy, Level1Term, Ray, StarSeries};
use crate::error::{Error, Result};
use crate::group::{a_conjugate, DecomposeOrder, Decomposition, LogMap};
use crate::logchart::{compile_polycycle, flowbox_to_log, CompositionWord, FlowBoxMap, PolycycleSpec};
use crate::scalar::{LogLinear, Scalar};

/// Ingredients of the counterexample polycycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub flowbox: FlowBoxMap,
    /// Deviation of `A(f^log)` at scale 1.
    pub psi: StarSeries,
    /// `(A(f^log) − id) ∘ m_½` as a level-1 coefficient.
    pub k1: K1Coefficient,
    /// `(A(f^log) − id) ∘ m_⅓` as a level-1 coefficient.
    pub k2: K1Coefficient,
    pub spec: PolycycleSpec,
    pub word: CompositionWord,
}

pub fn build_counterexample(order: &DecomposeOrder) -> Result<Counterexample> {
    let flowbox = FlowBoxMap::z_plus_z2();
    let (_, dev) = flowbox_to_log(&flowbox, &order.level0_floor)?;
    let psi = a_conjugate(&LogMap::new(dev)?, &order.principal_floor)?;
    let k1 = K1Coefficient::from_upper(psi.with_scale(Rational::from((1, 2))))?;
    let k2 = K1Coefficient::from_upper(psi.with_scale(Rational::from((1, 3))))?;
    let spec = PolycycleSpec::counterexample();
    let word = compile_polycycle(&spec, &order.level0_floor)?;
    Ok(Counterexample { flowbox, psi, k1, k2, spec, word })
}

/// `k₁ = e^{−e^{x/3}} / (1 − e^{−e^{x/3}})` stored to `q` terms plus its
/// ray, and `k₂ = e^{−e^{x/2}}`.
pub fn theoretical_pair(q: u32) -> (K1Coefficient, K1Coefficient) {
    let one = Rational::from(1);
    let terms = (1..=q.max(1))
        .map(|n| Level1Term::new(K1Coefficient::one(), TransExponent::unit(-i64::from(n))).expect("nonzero"))
        .collect();
    let step = TransExponent::unit(-1);
    let geometric = StarSeries::new(one.clone(), terms, Accuracy::exact(), vec![Ray { anchor: step.clone(), step }])
        .expect("positive scale");
    let single = StarSeries::new(
        one,
        vec![Level1Term::new(K1Coefficient::one(), TransExponent::unit(-1)).expect("nonzero")],
        Accuracy::exact(),
        vec![],
    )
    .expect("positive scale");
    let k1 = K1Coefficient::from_upper(geometric.with_scale(Rational::from((1, 3)))).expect("scale in (0, 1)");
    let k2 = K1Coefficient::from_upper(single.with_scale(Rational::from((1, 2)))).expect("scale in (0, 1)");
    (k1, k2)
}

/// Exponents of `k₁k₂` from [`theoretical_pair`], rewritten in the variable
/// `x/2` so the larger scale is 1: `Σ_q e^{−q e^{2x/3} − e^x}`.
pub fn theoretical_family(q: u32) -> Family {
    let (k1, k2) = theoretical_pair(q);
    Family::from_coefficient(&k1.mul(&k2)).normalize(&Rational::from((1, 2)))
}

/// `k₁e^{E} + k₂e^{E}` with the shared exponent `E = −e^x`.
pub fn wronskian_pair(c: &Counterexample) -> Result<StarSeries> {
    let e = TransExponent::unit(-1);
    let terms = vec![Level1Term::new(c.k1.clone(), e.clone())?, Level1Term::new(c.k2.clone(), e)?];
    StarSeries::new(Rational::from(1), terms, Accuracy::exact(), vec![])
}

/// Dominant component of `Δ − id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeadingTerm {
    /// Nothing survives truncation.
    Identity,
    AffineShift(LogLinear),
    Level0 {
        mu: Rational,
        coeff: Scalar,
    },
    Level1(Level1Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeadingTermReport {
    pub leading: LeadingTerm,
    /// Sign of `Δ(ζ) − ζ` for large `ζ`.
    pub sign: Ordering,
}

/// Leading term of a decomposition whose affine part has linear
/// coefficient 1 and whose only level-1 scale is 1.
pub fn scale1_leading_term(d: &Decomposition) -> Result<LeadingTermReport> {
    if *d.affine().alpha() != 1 {
        return Err(Error::OutsideRegime(format!("affine linear part {} is not 1", d.affine().alpha())));
    }
    for s in d.scales() {
        if s != 1 {
            return Err(Error::OutsideRegime(format!("level-1 body at scale {s}")));
        }
    }
    let beta = d.affine().beta();
    if !beta.is_zero() {
        return Ok(LeadingTermReport {
            sign: beta.to_scalar().signum(),
            leading: LeadingTerm::AffineShift(beta.clone()),
        });
    }
    if let Some((mu, c)) = d.level0().leading_term() {
        return Ok(LeadingTermReport {
            sign: c.signum(),
            leading: LeadingTerm::Level0 { mu: mu.clone(), coeff: c.clone() },
        });
    }
    if let Some(body) = d.body(&Rational::from(1)) {
        let nf = normal_form(body)?;
        if let Some(t) = nf.terms().first() {
            return Ok(LeadingTermReport { sign: t.coeff().leading_sign(), leading: LeadingTerm::Level1(t.clone()) });
        }
    }
    Ok(LeadingTermReport { leading: LeadingTerm::Identity, sign: Ordering::Equal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level1::order::{ordering_lower_bound, validity_check, LowerBoundReport, Validity};
    use crate::logchart::AffineMap;
    use crate::series::{Floor, GenExpSeries};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn theoretical_product_is_invalid_at_scale_one() {
        let fam = theoretical_family(12);
        assert_eq!(fam.exponents.len(), 12);
        match validity_check(&fam, &q(1, 1)) {
            Validity::Invalid { witness, .. } => assert_eq!(witness, Scalar::from(-1)),
            v => panic!("expected Invalid, got {v:?}"),
        }
        // the same family written out by hand
        let anchor = TransExponent::unit(-1);
        let step = TransExponent::single(q(2, 3), Scalar::from(-1));
        let by_hand = Family::progression(&anchor, &step, 12);
        assert_eq!(validity_check(&by_hand, &q(1, 1)), validity_check(&fam, &q(1, 1)));
    }

    #[test]
    fn k1_leads_with_minus_half_scale_term() {
        let c = build_counterexample(&DecomposeOrder::default()).unwrap();
        let u = &c.k1.uppers()[0];
        assert_eq!(u.scale(), &q(1, 2));
        let t = &u.terms()[0];
        assert_eq!(t.exponent(), &TransExponent::unit(-1));
        assert_eq!(t.coeff().base().leading_term().unwrap(), (&q(-1, 1), &Scalar::from(-1)));
    }

    #[test]
    fn pair_produces_gap_with_invalid_rewrite() {
        let c = build_counterexample(&DecomposeOrder::default()).unwrap();
        let s = wronskian_pair(&c).unwrap();
        match ordering_lower_bound(&s, &q(1, 4)).unwrap() {
            LowerBoundReport::GapDetected { witness_level, input_level, rewrite_scale, validity, .. } => {
                assert_eq!(input_level, 1);
                assert_eq!(witness_level, 2);
                assert_eq!(rewrite_scale, q(1, 2));
                match validity {
                    Validity::Invalid { witness, .. } => assert_eq!(witness, Scalar::from(-1)),
                    v => panic!("expected Invalid, got {v:?}"),
                }
            }
            r => panic!("expected a gap, got {r:?}"),
        }
    }

    #[test]
    fn leading_term_cases() {
        let order = DecomposeOrder::default();
        let id = Decomposition::new(AffineMap::identity(), GenExpSeries::zero(), vec![], order.clone()).unwrap();
        assert_eq!(scale1_leading_term(&id).unwrap().leading, LeadingTerm::Identity);
        let ln2 = LogLinear::ln_of(&q(2, 1)).unwrap();
        let shifted =
            Decomposition::new(AffineMap::shift(ln2.clone()), GenExpSeries::zero(), vec![], order.clone()).unwrap();
        let r = scale1_leading_term(&shifted).unwrap();
        assert_eq!(r.leading, LeadingTerm::AffineShift(ln2));
        assert_eq!(r.sign, Ordering::Greater);
        let l0 = GenExpSeries::from_terms(vec![(q(-1, 1), Scalar::from(-3))], Floor::at(-2));
        let r = scale1_leading_term(&Decomposition::new(AffineMap::identity(), l0, vec![], order.clone()).unwrap())
            .unwrap();
        assert_eq!(r.sign, Ordering::Less);
        let doubled =
            Decomposition::new(AffineMap::scaling(q(2, 1)).unwrap(), GenExpSeries::zero(), vec![], order).unwrap();
        assert!(matches!(scale1_leading_term(&doubled), Err(Error::OutsideRegime(_))));
    }
}
