//! The logarithmic chart `ζ = −ln z`, flow-box expansions and the compiler
//! from polycycle descriptions to composition words.

use std::fmt;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{Floor, GenExpSeries};

/// `ζ ↦ αζ + β` with `α > 0` rational and `β` an exact log-linear constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineMap {
    alpha: Rational,
    beta: LogLinear,
}

impl AffineMap {
    pub fn new(alpha: Rational, beta: LogLinear) -> Result<Self> {
        if alpha <= 0 {
            return Err(Error::invariant(format!("affine alpha must be positive, got {alpha}")));
        }
        Ok(AffineMap { alpha, beta })
    }

    pub fn identity() -> Self {
        AffineMap { alpha: Rational::from(1), beta: LogLinear::zero() }
    }

    pub fn scaling(alpha: Rational) -> Result<Self> {
        Self::new(alpha, LogLinear::zero())
    }

    pub fn shift(beta: LogLinear) -> Self {
        AffineMap { alpha: Rational::from(1), beta }
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn beta(&self) -> &LogLinear {
        &self.beta
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 1 && self.beta.is_zero()
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            alpha: Rational::from(&self.alpha * &next.alpha),
            beta: &self.beta.scaled(&next.alpha) + &next.beta,
        }
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = Rational::from(self.alpha.recip_ref());
        AffineMap { beta: self.beta.scaled(&Rational::from(-&inv)), alpha: inv }
    }

    pub fn apply(&self, zeta: &Float) -> Float {
        let prec = zeta.prec();
        Float::with_val(prec, zeta * &self.alpha) + self.beta.to_float(prec)
    }
}

/// `f(z) = αz + Σ a_q z^{q+2}`, the transition along a regular orbit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowBoxMap {
    alpha: Rational,
    tail: Vec<Rational>,
    radius_hint: Rational,
}

impl FlowBoxMap {
    pub fn new(alpha: Rational, tail: Vec<Rational>, radius_hint: Rational) -> Result<Self> {
        if alpha <= 0 {
            return Err(Error::invariant(format!("flow-box alpha must be positive, got {alpha}")));
        }
        if radius_hint <= 0 {
            return Err(Error::invariant("radius hint must be positive"));
        }
        Ok(FlowBoxMap { alpha, tail, radius_hint })
    }

    pub fn identity() -> Self {
        FlowBoxMap { alpha: Rational::from(1), tail: Vec::new(), radius_hint: Rational::from(1) }
    }

    /// `z + z²`, the connector used throughout the worked examples.
    pub fn z_plus_z2() -> Self {
        FlowBoxMap { alpha: Rational::from(1), tail: vec![Rational::from(1)], radius_hint: Rational::from(1) }
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn tail(&self) -> &[Rational] {
        &self.tail
    }

    pub fn radius_hint(&self) -> &Rational {
        &self.radius_hint
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 1 && self.tail.iter().all(|a| *a == 0)
    }

    /// `u = Σ (a_q/α) e^{−(q+1)ζ}`, so that `f^log = ζ − ln α − ln(1 + u)`.
    fn inner_series(&self) -> GenExpSeries {
        let terms = self
            .tail
            .iter()
            .enumerate()
            .map(|(q, a)| (Rational::from(-(q as i64) - 1), Scalar::from(Rational::from(a / &self.alpha))))
            .collect();
        GenExpSeries::from_terms(terms, Floor::Exact)
    }

    /// Exact `−ln(1 + Σ (a_q/α) e^{−(q+1)ζ})` at a point.
    pub fn eval_log_deviation(&self, zeta: &Float) -> Float {
        let u = self.inner_series().eval(zeta);
        -u.ln_1p()
    }

    /// `f(z)` in the z-chart.
    pub fn eval_z(&self, z: &Float) -> Float {
        let prec = z.prec();
        let mut acc = Float::with_val(prec, z * &self.alpha);
        let mut zp = Float::with_val(prec, z * z);
        for a in &self.tail {
            acc += Float::with_val(prec, &zp * a);
            zp *= z;
        }
        acc
    }
}

/// A near-identity map `ζ ↦ ζ + deviation(ζ)`, optionally remembering the
/// flow-box map it came from so numerics can use the closed form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HMap {
    pub deviation: GenExpSeries,
    pub source: Option<FlowBox>,
}

/// Flow-box source of an [`HMap`] together with the floor used to expand it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowBox {
    pub map: FlowBoxMap,
    pub order: Rational,
}

impl HMap {
    pub fn from_series(deviation: GenExpSeries) -> Result<Self> {
        if !deviation.is_fc0() {
            return Err(Error::invariant("HMap deviation must have only negative exponents"));
        }
        Ok(HMap { deviation, source: None })
    }

    /// The deviation part of `f^log` with `f` normalized to `α = 1`.
    pub fn from_flowbox(map: FlowBoxMap, order: Rational) -> Result<Self> {
        let (_, deviation) = flowbox_to_log(&map, &order)?;
        Ok(HMap { deviation, source: Some(FlowBox { map, order }) })
    }

    pub fn is_identity(&self) -> bool {
        self.deviation.is_exact_zero() && self.source.as_ref().is_none_or(|s| s.map.is_identity())
    }
}

/// One generator of the Dulac group in the logarithmic chart.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    Affine(AffineMap),
    HMap(HMap),
    Exp,
    Ln,
}

/// Generators in application order (leftmost applied first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CompositionWord {
    gens: Vec<Generator>,
}

impl CompositionWord {
    pub fn new(gens: Vec<Generator>) -> Self {
        CompositionWord { gens }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn gens(&self) -> &[Generator] {
        &self.gens
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn then(mut self, other: &CompositionWord) -> Self {
        self.gens.extend(other.gens.iter().cloned());
        self.fuse()
    }

    /// Check the Exp/Ln balance: depth stays in {0, 1} and ends at 0.
    pub fn check_balance(&self) -> Result<()> {
        let mut depth = 0i32;
        for (i, g) in self.gens.iter().enumerate() {
            match g {
                Generator::Exp => depth += 1,
                Generator::Ln => depth -= 1,
                _ => {}
            }
            if !(0..=1).contains(&depth) {
                return Err(Error::NotSimpleAlternant(format!("exp/ln depth {depth} after generator {i}")));
            }
        }
        if depth != 0 {
            return Err(Error::NotSimpleAlternant(format!("word ends at depth {depth}")));
        }
        Ok(())
    }

    /// Fuse adjacent affine generators and drop identities.
    pub fn fuse(self) -> Self {
        let mut out: Vec<Generator> = Vec::with_capacity(self.gens.len());
        for g in self.gens {
            match g {
                Generator::Affine(a) => {
                    if let Some(Generator::Affine(prev)) = out.last() {
                        let fused = prev.then(&a);
                        out.pop();
                        if !fused.is_identity() {
                            out.push(Generator::Affine(fused));
                        }
                    } else if !a.is_identity() {
                        out.push(Generator::Affine(a));
                    }
                }
                Generator::HMap(h) if h.is_identity() => {}
                g => out.push(g),
            }
        }
        CompositionWord { gens: out }
    }

    /// Fuse and cancel adjacent `exp ; ln` and `ln ; exp` pairs until stable.
    pub fn simplify(&self) -> Self {
        let mut cur = self.clone().fuse();
        loop {
            let mut out: Vec<Generator> = Vec::with_capacity(cur.gens.len());
            let mut changed = false;
            for g in cur.gens {
                let cancels = matches!(
                    (out.last(), &g),
                    (Some(Generator::Exp), Generator::Ln) | (Some(Generator::Ln), Generator::Exp)
                );
                if cancels {
                    out.pop();
                    changed = true;
                } else {
                    out.push(g);
                }
            }
            cur = CompositionWord { gens: out }.fuse();
            if !changed {
                return cur;
            }
        }
    }

    /// The affine summand of the map: top-level affines, plus the shift
    /// `ln α_in` contributed by each `exp ; … ; ln` block whose inner affine
    /// part has linear coefficient `α_in`.
    pub fn affine_part(&self) -> Result<AffineMap> {
        self.check_balance()?;
        let mut a = AffineMap::identity();
        let mut inner: Option<AffineMap> = None;
        for g in &self.gens {
            match (g, inner.as_mut()) {
                (Generator::Exp, None) => inner = Some(AffineMap::identity()),
                (Generator::Ln, Some(_)) => {
                    let alpha_in = inner.take().unwrap().alpha;
                    let shift = LogLinear::ln_of(&alpha_in).expect("alpha is positive");
                    a = a.then(&AffineMap::shift(shift));
                }
                (Generator::Affine(g), Some(acc)) => *acc = acc.then(g),
                (Generator::Affine(g), None) => a = a.then(g),
                (Generator::HMap(_), _) => {}
                _ => return Err(Error::NotSimpleAlternant("unbalanced word".into())),
            }
        }
        Ok(a)
    }
}

/// Transit type of an equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransitKind {
    /// `z ↦ e^{−1/z^k}`
    ExpType,
    /// `z ↦ (1/(−ln z))^{1/k}`
    LogType,
}

/// A simple alternant polycycle: equilibria in forward-time order,
/// `connectors[i]` running from equilibrium `i` to `i+1`, and the index of
/// the connector carrying the base section.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolycycleSpec {
    pub equilibria: Vec<(u32, TransitKind)>,
    pub connectors: Vec<FlowBoxMap>,
    pub base_section: usize,
}

impl PolycycleSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.equilibria.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::NotSimpleAlternant(format!("equilibrium count {n} is not even and positive")));
        }
        if self.connectors.len() != n {
            return Err(Error::NotSimpleAlternant(format!("{} connectors for {n} equilibria", self.connectors.len())));
        }
        if self.base_section >= n {
            return Err(Error::NotSimpleAlternant(format!("base section {} out of range", self.base_section)));
        }
        for (i, (k, _)) in self.equilibria.iter().enumerate() {
            if *k == 0 {
                return Err(Error::NotSimpleAlternant(format!("equilibrium {i} has k = 0")));
            }
        }
        for i in 0..n {
            if self.equilibria[i].1 == self.equilibria[(i + 1) % n].1 {
                return Err(Error::NotSimpleAlternant(format!(
                    "equilibria {i} and {} have the same transit kind",
                    (i + 1) % n
                )));
            }
        }
        let first = (self.base_section + 1) % n;
        if self.equilibria[first].1 != TransitKind::ExpType {
            return Err(Error::NotSimpleAlternant(format!("first traversed equilibrium {first} is not exp-type")));
        }
        Ok(())
    }

    /// The counterexample polycycle: saddles with k = 2, 2, 1, 1 and
    /// connectors `z + z²` after each exp-type transit.
    pub fn counterexample() -> Self {
        PolycycleSpec {
            equilibria: vec![
                (2, TransitKind::ExpType),
                (2, TransitKind::LogType),
                (1, TransitKind::ExpType),
                (1, TransitKind::LogType),
            ],
            connectors: vec![
                FlowBoxMap::z_plus_z2(),
                FlowBoxMap::identity(),
                FlowBoxMap::z_plus_z2(),
                FlowBoxMap::identity(),
            ],
            base_section: 3,
        }
    }

    /// Four saddles with `k = 1` and the given connectors.
    pub fn unit_scale(connectors: Vec<FlowBoxMap>) -> Self {
        PolycycleSpec {
            equilibria: vec![
                (1, TransitKind::ExpType),
                (1, TransitKind::LogType),
                (1, TransitKind::ExpType),
                (1, TransitKind::LogType),
            ],
            connectors,
            base_section: 3,
        }
    }
}

/// Log-chart image of a flow-box map: the affine part `(1, −ln α)` and the
/// deviation `−ln(1 + Σ (a_q/α) e^{−(q+1)ζ})` truncated at `order`.
pub fn flowbox_to_log(f: &FlowBoxMap, order: &Rational) -> Result<(AffineMap, GenExpSeries)> {
    if f.alpha <= 0 {
        return Err(Error::invariant("flow-box alpha must be positive"));
    }
    if *order >= 0 {
        return Err(Error::invariant(format!("expansion order must be negative, got {order}")));
    }
    let ln_alpha = LogLinear::ln_of(&f.alpha).expect("alpha is positive");
    let affine = AffineMap::shift(-&ln_alpha);
    let u = f.inner_series();
    let dev = if u.is_exact_zero() { GenExpSeries::zero() } else { u.ln1p(order).neg() };
    Ok((affine, dev))
}

/// Word fragment for one equilibrium transit.
pub fn transit_generators(k: u32, kind: TransitKind) -> Result<Vec<Generator>> {
    if k == 0 {
        return Err(Error::invariant("transit exponent k must be at least 1"));
    }
    let kk = Rational::from(k);
    Ok(match kind {
        TransitKind::ExpType => {
            CompositionWord::new(vec![Generator::Affine(AffineMap::scaling(kk)?), Generator::Exp]).fuse().gens
        }
        TransitKind::LogType => {
            CompositionWord::new(vec![
                Generator::Ln,
                Generator::Affine(AffineMap::scaling(Rational::from(kk.recip_ref()))?),
            ])
            .fuse()
            .gens
        }
    })
}

/// Word fragment for a connector: `[HMap(dev), Aff(1, −ln α)]`.
pub fn connector_generators(f: &FlowBoxMap, order: &Rational) -> Result<Vec<Generator>> {
    let (affine, _) = flowbox_to_log(f, order)?;
    let h = HMap::from_flowbox(f.clone(), order.clone())?;
    Ok(CompositionWord::new(vec![Generator::HMap(h), Generator::Affine(affine)]).fuse().gens)
}

/// Compile the return map on the base section into a word: the base
/// connector, then equilibria and connectors in forward order, ending with
/// the equilibrium preceding the base connector.
pub fn compile_polycycle(spec: &PolycycleSpec, order: &Rational) -> Result<CompositionWord> {
    spec.validate()?;
    let n = spec.equilibria.len();
    let b = spec.base_section;
    let mut gens = connector_generators(&spec.connectors[b], order)?;
    for step in 1..=n {
        let i = (b + step) % n;
        let (k, kind) = spec.equilibria[i];
        gens.extend(transit_generators(k, kind)?);
        if step < n {
            gens.extend(connector_generators(&spec.connectors[i], order)?);
        }
    }
    let word = CompositionWord::new(gens).fuse();
    word.check_balance()?;
    Ok(word)
}

impl fmt::Display for CompositionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_word(self))
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "aff({}, {})", self.alpha, self.beta)
    }
}
