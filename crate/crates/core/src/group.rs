//! Group operations on `id + FC⁰` maps, affine and exponential conjugation,
//! and the additive decomposition of composition words.

use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;

use crate::error::{Error, Result};
use crate::level1::{Accuracy, K1Coefficient, Level1Term, Ray, StarSeries, TransExponent};
use crate::logchart::{AffineMap, CompositionWord, Generator};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{inv_factorial, Floor, GenExpSeries};

/// `ζ ↦ ζ + deviation(ζ)` with an exponentially small deviation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LogMap {
    deviation: GenExpSeries,
}

impl LogMap {
    pub fn new(deviation: GenExpSeries) -> Result<Self> {
        if !deviation.is_fc0() {
            return Err(Error::invariant("LogMap deviation must have only negative exponents"));
        }
        Ok(LogMap { deviation })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn deviation(&self) -> &GenExpSeries {
        &self.deviation
    }

    /// Identity up to the deviation's floor.
    pub fn is_identity(&self) -> bool {
        self.deviation.is_zero()
    }
}

/// `f ∘ g`, truncated at the natural floor of the inputs.
pub fn compose_h(f: &LogMap, g: &LogMap) -> Result<LogMap> {
    compose_h_to(f, g, &Floor::Exact)
}

/// `f ∘ g` with the result floor no finer than `floor`.
pub fn compose_h_to(f: &LogMap, g: &LogMap, floor: &Floor) -> Result<LogMap> {
    let outer = f.deviation.compose_near_identity(&g.deviation, floor)?;
    LogMap::new(g.deviation.truncate(floor).add(&outer))
}

/// Inverse to the deviation's own floor.
pub fn invert_h(f: &LogMap) -> Result<LogMap> {
    if f.deviation.is_exact_zero() {
        return Ok(LogMap::identity());
    }
    match f.deviation.floor() {
        Floor::Exact => Err(Error::invariant("inverse of an exact map is infinite; use invert_h_to")),
        fl => invert_h_to(f, &fl.clone()),
    }
}

/// Inverse by the fixed-point iteration `e ← −d ∘ (id + e)`.
///
/// Each pass fixes at least one more exponent level, so the iteration is
/// stationary after `|Ω| / |lead(d)| + 2` passes.
pub fn invert_h_to(f: &LogMap, floor: &Floor) -> Result<LogMap> {
    let d = &f.deviation;
    if d.is_exact_zero() {
        return Ok(LogMap::identity());
    }
    let floor = floor.clone().max(d.floor().clone());
    let lead = d.lead_bound().expect("nonzero deviation");
    let f_val =
        floor.value().cloned().ok_or_else(|| Error::invariant("inverse of an exact map is infinite; give a floor"))?;
    let passes = Rational::from(&f_val / &lead).ceil().numer().to_u32().unwrap_or(0) + 3;
    let mut e = d.neg().truncate(&floor);
    for _ in 0..passes {
        let next = d.compose_near_identity(&e, &floor)?.neg();
        if next == e {
            return LogMap::new(e);
        }
        e = next;
    }
    Err(Error::invariant("inverse iteration did not stabilize"))
}

/// `a ∘ f ∘ a⁻¹`: deviation `α · d((ζ − β)/α)`.
pub fn conj_affine(a: &AffineMap, f: &LogMap) -> LogMap {
    let inv = Rational::from(a.alpha().recip_ref());
    let beta = a.beta().scaled(&Rational::from(-&inv));
    let dev = f.deviation.scale_argument(&inv, &beta).mul_rational(a.alpha());
    LogMap { deviation: dev }
}

/// `a⁻¹ ∘ f ∘ a`: deviation `d(αζ + β)/α`.
pub fn conj_affine_inverse(a: &AffineMap, f: &LogMap) -> LogMap {
    conj_affine(&a.inverse(), f)
}

/// Deviation of `A(f) = ln ∘ f ∘ exp` as a STAR-series at scale 1:
/// `ln(1 + Σ b e^{−x} e^{μ e^x})` expanded by powers, terms with principal
/// exponent at or below `principal_floor` (or the deviation's floor) dropped.
pub fn a_conjugate(f: &LogMap, principal_floor: &Rational) -> Result<StarSeries> {
    let d = &f.deviation;
    let one = Rational::from(1);
    let mut floor = Floor::At(principal_floor.clone());
    floor = floor.max(d.floor().clone());
    let accuracy = Accuracy::new(floor.clone(), Floor::Exact);
    if d.is_zero() {
        return StarSeries::new(one, vec![], accuracy, vec![]);
    }
    let f_val = floor.value().cloned().expect("floor is finite");
    let e_minus = GenExpSeries::monomial(Rational::from(-1), Scalar::one());
    let mut terms = Vec::new();
    for (mu, b) in d.terms() {
        let k = K1Coefficient::from_series(e_minus.mul_scalar(b));
        terms.push(Level1Term::new(k, TransExponent::unit(mu.clone()))?);
    }
    let u = StarSeries::new(one.clone(), terms, accuracy.clone(), vec![])?;
    let lead = d.lead_bound().expect("nonzero");
    let mut acc = StarSeries::zero(one.clone()).with_accuracy(accuracy);
    let mut power = u.clone();
    let mut r = 1u32;
    while Rational::from(&lead * r) > f_val {
        let sign = if r % 2 == 1 { 1 } else { -1 };
        acc = acc.add(&power.mul_rational(&Rational::from((sign, r))));
        power = power.mul(&u);
        r += 1;
    }
    let step = TransExponent::unit(lead);
    Ok(acc.with_rays(vec![Ray { anchor: step.clone(), step }]))
}

/// `a⁻¹ ∘ (id + ψ) ∘ a` for a level-1 deviation `ψ` at scale `σ`: the
/// deviation `ψ(αζ + β)/α`, a STAR-series at scale `ασ`.
pub fn conj_scale_level1(a: &AffineMap, s: &StarSeries) -> StarSeries {
    let shifted = s.shift_own(&a.beta().scaled(s.scale()));
    let inv = Rational::from(a.alpha().recip_ref());
    shifted.mul_rational(&inv).with_scale(Rational::from(s.scale() * a.alpha()))
}

/// Truncation orders for the decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecomposeOrder {
    /// Floor for level-0 series (omitted exponents at or below it).
    pub level0_floor: Rational,
    /// Floor for scale-1 principal exponents of level-1 bodies.
    pub principal_floor: Rational,
    /// Floor for the linear exponents inside level-1 coefficients.
    pub coeff_floor: Rational,
}

impl Default for DecomposeOrder {
    fn default() -> Self {
        DecomposeOrder {
            level0_floor: Rational::from(-6),
            principal_floor: Rational::from((-7, 2)),
            coeff_floor: Rational::from(-6),
        }
    }
}

impl DecomposeOrder {
    /// Orders derived from a single integer `n`: floors `−n` and `−n + ½`.
    pub fn from_order(n: u32) -> Self {
        let n = Rational::from(n);
        DecomposeOrder {
            level0_floor: Rational::from(-&n),
            principal_floor: Rational::from(-&n) + Rational::from((1, 2)),
            coeff_floor: Rational::from(-&n),
        }
    }
}

/// A product that had to carry a whole lower-scale series as a coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Escalation {
    /// Ambient scale of the body receiving the coefficient.
    pub scale: Rational,
    /// Scale of the absorbed series relative to the body.
    pub upper_scale: Rational,
    /// Grading level of the resulting body.
    pub level: usize,
}

/// `Δ(ζ) = affine(ζ) + level0(ζ) + Σ bodies(ζ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    affine: AffineMap,
    level0: GenExpSeries,
    level1: Vec<StarSeries>,
    order: DecomposeOrder,
    escalations: Vec<Escalation>,
}

impl Decomposition {
    pub fn new(
        affine: AffineMap,
        level0: GenExpSeries,
        level1: Vec<StarSeries>,
        order: DecomposeOrder,
    ) -> Result<Self> {
        let mut level1 = level1;
        level1.sort_by(|a, b| a.scale().cmp(b.scale()));
        for w in level1.windows(2) {
            if w[0].scale() == w[1].scale() {
                return Err(Error::invariant(format!("duplicate level-1 scale {}", w[0].scale())));
            }
        }
        if !level0.is_fc0() {
            return Err(Error::invariant("level-0 part must have only negative exponents"));
        }
        Ok(Decomposition { affine, level0, level1, order, escalations: Vec::new() })
    }

    pub fn affine(&self) -> &AffineMap {
        &self.affine
    }

    pub fn level0(&self) -> &GenExpSeries {
        &self.level0
    }

    /// Level-1 bodies by increasing scale.
    pub fn level1(&self) -> &[StarSeries] {
        &self.level1
    }

    pub fn order(&self) -> &DecomposeOrder {
        &self.order
    }

    pub fn escalations(&self) -> &[Escalation] {
        &self.escalations
    }

    pub fn body(&self, scale: &Rational) -> Option<&StarSeries> {
        self.level1.iter().find(|b| b.scale() == scale)
    }

    pub fn scales(&self) -> Vec<Rational> {
        self.level1.iter().map(|b| b.scale().clone()).collect()
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_decomposition(self))
    }
}

/// Running map `a ∘ (id + φ + Σ L_σ)`.
struct State<'o> {
    order: &'o DecomposeOrder,
    a: AffineMap,
    phi: GenExpSeries,
    l: BTreeMap<Rational, StarSeries>,
    escalations: Vec<Escalation>,
}

impl<'o> State<'o> {
    fn new(order: &'o DecomposeOrder) -> Self {
        State {
            order,
            a: AffineMap::identity(),
            phi: GenExpSeries::zero(),
            l: BTreeMap::new(),
            escalations: Vec::new(),
        }
    }

    fn l0_floor(&self) -> Floor {
        Floor::At(self.order.level0_floor.clone())
    }

    fn trim(&self, s: StarSeries) -> StarSeries {
        s.truncate(&Floor::At(self.order.principal_floor.clone()), &Floor::At(self.order.coeff_floor.clone()))
    }

    fn add_body(&mut self, s: StarSeries) {
        if s.is_empty() {
            return;
        }
        let s = self.trim(s);
        let key = s.scale().clone();
        let merged = match self.l.remove(&key) {
            Some(prev) => prev.add(&s),
            None => s,
        };
        if !merged.is_empty() {
            self.l.insert(key, merged);
        }
    }

    /// Product of two bodies; different scales nest the smaller function
    /// (larger scale) as host.
    fn cross(&mut self, u: &StarSeries, v: &StarSeries) -> StarSeries {
        use std::cmp::Ordering::*;
        let out = match u.scale().cmp(v.scale()) {
            Equal => u.mul(v),
            Greater => self.nest(u, v),
            Less => self.nest(v, u),
        };
        self.trim(out)
    }

    fn nest(&mut self, host: &StarSeries, guest: &StarSeries) -> StarSeries {
        let rel = Rational::from(guest.scale() / host.scale());
        let k = K1Coefficient::from_upper(guest.with_scale(rel.clone())).expect("relative scale in (0, 1)");
        let out = host.mul_own_coeff(&k);
        if !out.is_empty() {
            self.escalations.push(Escalation { scale: host.scale().clone(), upper_scale: rel, level: out.level() });
        }
        out
    }

    /// `(Σ L)^s` as a map scale → body.
    fn sum_mul(
        &mut self,
        a: &BTreeMap<Rational, StarSeries>,
        b: &BTreeMap<Rational, StarSeries>,
    ) -> BTreeMap<Rational, StarSeries> {
        let mut out: BTreeMap<Rational, StarSeries> = BTreeMap::new();
        for u in a.values() {
            for v in b.values() {
                let p = self.cross(u, v);
                if p.is_empty() {
                    continue;
                }
                let key = p.scale().clone();
                let merged = match out.remove(&key) {
                    Some(prev) => prev.add(&p),
                    None => p,
                };
                out.insert(key, merged);
            }
        }
        out.retain(|_, s| !s.is_empty());
        out
    }

    /// Apply `id + d` after the current map.
    fn apply_level0(&mut self, d: &GenExpSeries) -> Result<()> {
        if d.is_exact_zero() {
            return Ok(());
        }
        let inv = Rational::from(self.a.alpha().recip_ref());
        let dt = d.scale_argument(self.a.alpha(), self.a.beta()).mul_rational(&inv);
        let floor = self.l0_floor();
        let composed = dt.compose_near_identity(&self.phi, &floor)?;
        let old_l = std::mem::take(&mut self.l);
        let mut contributions = Vec::new();
        if !old_l.is_empty() {
            let mut power = old_l.clone();
            let mut deriv = dt.clone();
            let mut s = 1u32;
            while !power.is_empty() {
                deriv = deriv.derivative();
                if deriv.is_exact_zero() {
                    break;
                }
                let g = deriv.compose_near_identity(&self.phi, &floor)?.mul_rational(&inv_factorial(s));
                for body in power.values() {
                    contributions.push(body.mul_parent_series(&g));
                }
                power = self.sum_mul(&power, &old_l);
                s += 1;
            }
        }
        self.phi = self.phi.add(&composed).truncate(&floor);
        self.l = old_l;
        for c in contributions {
            self.add_body(c);
        }
        Ok(())
    }

    /// Apply `id + ψ` (a level-1 deviation) after the current map.
    fn apply_level1(&mut self, psi: &StarSeries) -> Result<()> {
        if psi.is_empty() {
            return Ok(());
        }
        let cfloor = self.order.coeff_floor.clone();
        let pt = conj_scale_level1(&self.a, psi);
        let old_l = std::mem::take(&mut self.l);
        let mut contributions = vec![pt.compose_shift(&self.phi, &cfloor)?];
        if !old_l.is_empty() {
            let mut power = old_l.clone();
            let mut deriv = pt.clone();
            let mut s = 1u32;
            while !power.is_empty() {
                deriv = self.trim(deriv.derivative());
                if deriv.is_empty() {
                    break;
                }
                let ds = deriv.compose_shift(&self.phi, &cfloor)?.mul_rational(&inv_factorial(s));
                for body in power.values() {
                    contributions.push(self.cross(&ds, body));
                }
                power = self.sum_mul(&power, &old_l);
                s += 1;
            }
        }
        self.l = old_l;
        for c in contributions {
            self.add_body(c);
        }
        Ok(())
    }

    /// Apply `ln ∘ inner ∘ exp` for a level-0 inner word.
    fn apply_block(&mut self, inner: &[Generator]) -> Result<()> {
        let mut sub = State::new(self.order);
        for g in inner {
            match g {
                Generator::Affine(b) => sub.a = sub.a.then(b),
                Generator::HMap(h) => sub.apply_level0(&h.deviation)?,
                _ => return Err(Error::NotSimpleAlternant("nested exp/ln inside a block".into())),
            }
        }
        let psi = a_conjugate(&LogMap::new(sub.phi.clone())?, &self.order.principal_floor)?;
        self.apply_level1(&psi)?;
        let alpha_in = sub.a.alpha().clone();
        let beta_in = sub.a.beta().clone();
        if !beta_in.is_zero() {
            let c = beta_in.to_scalar().mul_rational(&Rational::from(alpha_in.recip_ref()));
            let v = GenExpSeries::monomial(Rational::from(-1), c);
            self.apply_level0(&v.ln1p(&self.order.level0_floor))?;
        }
        let shift = LogLinear::ln_of(&alpha_in).expect("alpha is positive");
        self.a = self.a.then(&AffineMap::shift(shift));
        Ok(())
    }
}

/// Rewrite a balanced word as `Aff + FC⁰ + Σ FC¹ ∘ exp ∘ m_σ`.
///
/// Affine generators are pushed to the far left, each `ln ∘ h ∘ exp` block
/// becomes `id + ψ` at scale 1 before conjugation, and compositions of
/// near-identity maps are expanded by Taylor series. Products across scales
/// carry the smaller-scale body as an upper coefficient, recorded as an
/// escalation.
pub fn additive_decompose(w: &CompositionWord, order: &DecomposeOrder) -> Result<Decomposition> {
    w.check_balance()?;
    let mut st = State::new(order);
    let gens = w.gens();
    let mut i = 0;
    while i < gens.len() {
        match &gens[i] {
            Generator::Affine(g) => st.a = st.a.then(g),
            Generator::HMap(h) => st.apply_level0(&h.deviation)?,
            Generator::Exp => {
                let j = gens[i + 1..]
                    .iter()
                    .position(|g| *g == Generator::Ln)
                    .map(|p| p + i + 1)
                    .ok_or_else(|| Error::NotSimpleAlternant("unterminated exp block".into()))?;
                st.apply_block(&gens[i + 1..j])?;
                i = j;
            }
            Generator::Ln => return Err(Error::NotSimpleAlternant("ln at depth 0".into())),
        }
        i += 1;
    }
    let alpha = st.a.alpha().clone();
    let level0 = st.phi.mul_rational(&alpha);
    let level1 = st.l.into_values().map(|b| b.mul_rational(&alpha)).collect();
    let mut d = Decomposition::new(st.a, level0, level1, order.clone())?;
    d.escalations = st.escalations;
    Ok(d)
}
