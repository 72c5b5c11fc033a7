use std::cmp::Ordering;

use rug::Rational;

use super::star::{Accuracy, Level1Term, StarSeries};
use crate::error::{Error, Result};
use crate::series::Floor;

/// Coefficient floor used when a series carries exact coefficients but the
/// Small part of an exponent has an infinite exponential expansion.
pub const DEFAULT_COEFF_FLOOR: i64 = -12;

/// Outcome of comparing two Large-normal-form terms by principal data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermOrder {
    /// The first term is asymptotically larger.
    Dominates,
    /// The second term is asymptotically larger.
    Dominated,
    /// Identical principal data; coefficient-level comparison is not decided.
    EqualPrincipal,
}

/// Rewrite every exponent in Large form, absorbing the Small part into the
/// coefficient, then merge like exponents and re-sort.
pub fn normal_form(s: &StarSeries) -> Result<StarSeries> {
    let cfloor = match &s.accuracy().coefficient {
        Floor::At(f) => f.clone(),
        Floor::Exact => Rational::from(DEFAULT_COEFF_FLOOR),
    };
    normal_form_to(s, &cfloor)
}

/// [`normal_form`] with an explicit coefficient floor for the absorbed part.
pub fn normal_form_to(s: &StarSeries, cfloor: &Rational) -> Result<StarSeries> {
    let mut out = StarSeries::zero(s.scale().clone()).with_accuracy(s.accuracy().clone());
    let mut absorbed = false;
    for t in s.terms() {
        let (large, small) = t.exponent().split_large_small();
        let coeff = if small.is_exact_zero() {
            t.coeff().clone()
        } else {
            absorbed = true;
            let factor = small.exp_general(cfloor)?;
            t.coeff().mul_series(&factor).truncate(&Floor::At(cfloor.clone()))
        };
        if coeff.is_zero() {
            continue;
        }
        let single =
            StarSeries::new(s.scale().clone(), vec![Level1Term::new(coeff, large)?], Accuracy::exact(), vec![])?;
        out = out.add(&single);
    }
    let mut accuracy = s.accuracy().clone();
    if absorbed {
        accuracy.coefficient = accuracy.coefficient.max(Floor::At(cfloor.clone()));
    }
    Ok(out.with_accuracy(accuracy).with_rays(s.rays().to_vec()))
}

/// Compare principal data lexicographically from the largest scale down.
pub fn compare_terms(t1: &Level1Term, t2: &Level1Term) -> Result<TermOrder> {
    for (i, t) in [t1, t2].iter().enumerate() {
        if !t.exponent().is_large() {
            return Err(Error::NotNormalForm(format!("term {} has a Small exponent part", i + 1)));
        }
    }
    Ok(match t1.exponent().cmp_principal(t2.exponent()) {
        Ordering::Greater => TermOrder::Dominates,
        Ordering::Less => TermOrder::Dominated,
        Ordering::Equal => TermOrder::EqualPrincipal,
    })
}
