//! Extended-precision evaluation on the positive real axis of the
//! logarithmic chart, accuracy certification and flatness fits.
//!
//! Every certified value is computed at two precisions `p` and `2p`; when
//! they disagree the precision is doubled, up to [`MAX_PRECISION`].

use std::fmt;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::group::Decomposition;
use crate::level1::StarSeries;
use crate::logchart::{AffineMap, CompositionWord, Generator};
use crate::series::{Floor, GenExpSeries};

pub const DEFAULT_PRECISION: u32 = 256;
pub const MAX_PRECISION: u32 = 4096;

/// Bits two evaluations of a deviation or difference must share.
const DIFFERENCE_BITS: u32 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub precision_bits: u32,
    pub grid: Vec<Rational>,
    /// Slack `ε` in the accuracy bounds.
    pub epsilon: Rational,
}

impl EvalConfig {
    pub fn new(precision_bits: u32, grid: Vec<Rational>, epsilon: Rational) -> Result<Self> {
        if precision_bits < 64 {
            return Err(Error::invariant(format!("precision {precision_bits} is below 64 bits")));
        }
        if epsilon <= 0 {
            return Err(Error::invariant("epsilon must be positive"));
        }
        Ok(EvalConfig { precision_bits, grid, epsilon })
    }

    /// `ζ ∈ {3, 5, …, 39}`, 256 bits, `ε = ½`.
    pub fn level0() -> Self {
        EvalConfig {
            precision_bits: DEFAULT_PRECISION,
            grid: grid_range(&Rational::from(3), &Rational::from(39), &Rational::from(2)),
            epsilon: Rational::from((1, 2)),
        }
    }

    /// `ζ ∈ {1.5, 2, …, 6}`, 256 bits, `ε = ½`.
    pub fn level1() -> Self {
        EvalConfig {
            precision_bits: DEFAULT_PRECISION,
            grid: grid_range(&Rational::from((3, 2)), &Rational::from(6), &Rational::from((1, 2))),
            epsilon: Rational::from((1, 2)),
        }
    }

    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits;
        self
    }

    pub fn with_grid(mut self, grid: Vec<Rational>) -> Self {
        self.grid = grid;
        self
    }
}

/// `from, from + step, …` up to and including `to`.
pub fn grid_range(from: &Rational, to: &Rational, step: &Rational) -> Vec<Rational> {
    assert!(*step > 0, "grid step must be positive");
    let mut out = Vec::new();
    let mut x = from.clone();
    while x <= *to {
        out.push(x.clone());
        x += step;
    }
    out
}

fn agree(a: &Float, b: &Float, bits: u32) -> bool {
    if a == b {
        return true;
    }
    let diff = Float::with_val(b.prec(), a - b).abs();
    let scale = Float::with_val(b.prec(), b.abs_ref()) >> bits;
    diff <= scale
}

/// Evaluate `f` at `p` and `2p` from `start`, doubling until the results
/// share `bits(p)` leading bits. Zero is only accepted at the top precision.
fn certify_value(start: u32, bits: impl Fn(u32) -> u32, f: impl Fn(u32) -> Result<Float>) -> Result<Float> {
    let cap = MAX_PRECISION.max(2 * start);
    let mut p = start.max(64);
    while 2 * p <= cap {
        let a = f(p)?;
        let b = f(2 * p)?;
        let last = 4 * p > cap;
        if a.is_zero() && b.is_zero() {
            if last {
                return Ok(b);
            }
        } else if agree(&a, &b, bits(p)) {
            return Ok(b);
        }
        p *= 2;
    }
    Err(Error::PrecisionInsufficient(format!("no agreement up to {cap} bits")))
}

fn finite(x: Float, what: &str) -> Result<Float> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Range(format!("{what} left the representable range")))
    }
}

/// Apply the generators of `w` to `zeta` at its precision. Flow-box maps use
/// their closed form, other near-identity maps their stored series.
pub fn eval_word_at(w: &CompositionWord, zeta: &Float) -> Result<Float> {
    let prec = zeta.prec();
    let mut x = zeta.clone();
    for g in w.gens() {
        x = match g {
            Generator::Affine(a) => a.apply(&x),
            Generator::HMap(h) => match &h.source {
                Some(fb) => {
                    let z = Float::with_val(prec, -&x).exp();
                    if z > *fb.map.radius_hint() {
                        return Err(Error::Domain(format!(
                            "flow-box argument z = {} exceeds radius {}",
                            z.to_string_radix(10, Some(12)),
                            fb.map.radius_hint()
                        )));
                    }
                    let d = fb.map.eval_log_deviation(&x);
                    if d.is_nan() {
                        return Err(Error::Domain("flow-box map is not positive at this point".into()));
                    }
                    x + d
                }
                None => {
                    let d = h.deviation.eval(&x);
                    x + d
                }
            },
            Generator::Exp => finite(x.exp(), "exp")?,
            Generator::Ln => {
                if x <= 0 {
                    return Err(Error::Domain(format!("ln of non-positive value {}", x.to_string_radix(10, Some(12)))));
                }
                x.ln()
            }
        };
    }
    finite(x, "word value")
}

/// `Δ(ζ)` certified to `p − 8` relative bits.
pub fn eval_exact(w: &CompositionWord, zeta: &Rational, cfg: &EvalConfig) -> Result<Float> {
    certify_value(cfg.precision_bits, |p| p - 8, |p| eval_word_at(w, &Float::with_val(p, zeta)))
}

/// Result of a cancelling difference evaluated at rising precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Difference {
    /// Agreement to 32 bits, clear of the rounding floor.
    Resolved(Float),
    /// Never rose above the rounding floor; the value is that floor, an
    /// upper bound for the magnitude.
    Below(Float),
}

impl Difference {
    pub fn magnitude(&self) -> Float {
        match self {
            Difference::Resolved(x) => Float::with_val(x.prec(), x.abs_ref()),
            Difference::Below(r) => r.clone(),
        }
    }
}

/// Rounding floor of a difference whose operands have magnitude `scale`,
/// with 64 guard bits for error growth along a word.
fn rounding_floor(scale: &Float, p: u32) -> Float {
    let s = Float::with_val(p, scale.abs_ref()).max(&Float::with_val(p, 1));
    s >> (p - 64)
}

/// Certify `f(p) = (difference, operand scale)` by doubling `p`. A value is
/// accepted only when two precisions agree and it lies 32
/// bits above the rounding floor.
fn certify_difference(start: u32, f: impl Fn(u32) -> Result<(Float, Float)>) -> Result<Difference> {
    let cap = MAX_PRECISION.max(2 * start);
    let mut p = start.max(128);
    let mut prev = f(p)?;
    let clear = |(d, s): &(Float, Float), p: u32| {
        !d.is_zero() && Float::with_val(p, d.abs_ref()) > (rounding_floor(s, p) << DIFFERENCE_BITS)
    };
    while 2 * p <= cap {
        let next = f(2 * p)?;
        if clear(&prev, p) && clear(&next, 2 * p) && agree(&prev.0, &next.0, DIFFERENCE_BITS) {
            return Ok(Difference::Resolved(next.0));
        }
        prev = next;
        p *= 2;
    }
    Ok(Difference::Below(rounding_floor(&prev.1, p)))
}

/// `Δ(ζ) − affine(ζ)` certified to 32 relative bits.
pub fn eval_deviation(w: &CompositionWord, zeta: &Rational, affine: &AffineMap, cfg: &EvalConfig) -> Result<Float> {
    if w.simplify().is_empty() && affine.is_identity() {
        return Ok(Float::new(cfg.precision_bits));
    }
    match certify_difference(cfg.precision_bits, |p| {
        let x = Float::with_val(p, zeta);
        let v = eval_word_at(w, &x)?;
        let d = Float::with_val(p, &v - affine.apply(&x));
        Ok((d, v.abs().max(&x.abs())))
    })? {
        Difference::Resolved(d) => Ok(d),
        Difference::Below(r) => Err(Error::PrecisionInsufficient(format!(
            "deviation at ζ = {zeta} stays below the rounding floor {} at {MAX_PRECISION} bits",
            fmt_float(&r)
        ))),
    }
}

pub fn eval_decomposition(d: &Decomposition, zeta: &Float) -> Float {
    let mut acc = d.affine().apply(zeta) + d.level0().eval(zeta);
    for b in d.level1() {
        acc += b.eval(zeta);
    }
    acc
}

/// `level0 + Σ bodies`, the part of a decomposition beyond its affine map.
fn decomposition_deviation(d: &Decomposition, zeta: &Float) -> Float {
    let mut acc = d.level0().eval(zeta);
    for b in d.level1() {
        acc += b.eval(zeta);
    }
    acc
}

/// Series objects with a numeric value.
#[derive(Clone, Copy, Debug)]
pub enum SeriesRef<'a> {
    Gen(&'a GenExpSeries),
    Star(&'a StarSeries),
    Decomposition(&'a Decomposition),
}

pub fn eval_series(obj: SeriesRef<'_>, zeta: &Rational, cfg: &EvalConfig) -> Result<Float> {
    let x = Float::with_val(cfg.precision_bits, zeta);
    let v = match obj {
        SeriesRef::Gen(s) => {
            if zeta < s.threshold() {
                return Err(Error::Domain(format!("ζ = {zeta} is below the threshold {}", s.threshold())));
            }
            s.eval(&x)
        }
        SeriesRef::Star(s) => s.eval(&x),
        SeriesRef::Decomposition(d) => eval_decomposition(d, &x),
    };
    finite(v, "series value")
}

/// Size of what a STAR-series omits at parent variable `t`: the principal
/// floor, the coefficient floor under the leading exponential, and the
/// omissions of every upper coefficient under that same exponential.
fn star_bound(s: &StarSeries, t: &Float) -> Float {
    let prec = t.prec();
    let y = Float::with_val(prec, t * s.scale());
    let ey = Float::with_val(prec, y.exp_ref());
    let mut out = Float::with_val(prec, 0);
    if let Floor::At(f) = &s.accuracy().principal {
        out += Float::with_val(prec, &ey * f).exp();
    }
    let lead = match s.terms().first() {
        Some(t) => Float::with_val(prec, &ey * t.nu1().to_float(prec)).exp(),
        None => return out,
    };
    let mut inner = Float::with_val(prec, 0);
    if let Floor::At(c) = &s.accuracy().coefficient {
        inner += Float::with_val(prec, &y * c).exp();
    }
    for term in s.terms() {
        for u in term.coeff().uppers() {
            inner += star_bound(u, &y);
        }
    }
    out + lead * inner
}

/// Truncation error a decomposition claims at `zeta`.
pub fn decomposition_bound(d: &Decomposition, zeta: &Float) -> Float {
    let prec = zeta.prec();
    let mut out = Float::with_val(prec, 0);
    if let Floor::At(f) = d.level0().floor() {
        out += Float::with_val(prec, zeta * f).exp();
    }
    for b in d.level1() {
        out += star_bound(b, zeta);
    }
    Float::with_val(prec, &out * d.affine().alpha())
}

/// A claimed expansion of a word.
#[derive(Clone, Copy, Debug)]
pub enum Expansion<'a> {
    /// `Δ = affine + series` with accuracy `e^{−(c_N + ε)ζ}`.
    Level0 { affine: &'a AffineMap, series: &'a GenExpSeries },
    /// `Δ = affine + series` with accuracy `e^{−(c_N + ε)e^{σζ}}`.
    Level1 { affine: &'a AffineMap, series: &'a StarSeries },
    /// Accuracy from [`decomposition_bound`].
    Decomposition(&'a Decomposition),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertPoint {
    pub zeta: Rational,
    /// `|Δ(ζ) − claimed(ζ)|`, or its rounding-floor upper bound when not
    /// resolved.
    pub difference: Float,
    pub resolved: bool,
    pub bound: Float,
    /// `ln bound − ln |difference|`; infinite when the difference is zero.
    pub margin: Float,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertReport {
    pub points: Vec<CertPoint>,
    pub precision_bits: u32,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.margin > 0)
    }

    pub fn min_margin(&self) -> Option<&Float> {
        self.points.iter().map(|p| &p.margin).min_by(|a, b| a.partial_cmp(b).expect("margins are not NaN"))
    }
}

impl fmt::Display for CertReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# precision_bits={} columns: zeta |difference| bound margin", self.precision_bits)?;
        for p in &self.points {
            writeln!(
                f,
                "{} {}{} {} {}",
                p.zeta,
                if p.resolved { "" } else { "<=" },
                fmt_float(&p.difference),
                fmt_float(&p.bound),
                fmt_float(&p.margin)
            )?;
        }
        match self.min_margin() {
            Some(m) => writeln!(f, "min_margin {}", fmt_float(m))?,
            None => writeln!(f, "min_margin none")?,
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// 20 significant digits in scientific notation, or `inf`.
pub fn fmt_float(x: &Float) -> String {
    if x.is_infinite() {
        return if x.is_sign_positive() { "inf".into() } else { "-inf".into() };
    }
    if x.is_zero() {
        return "0".into();
    }
    x.to_string_radix(10, Some(20))
}

/// Compare `w` against a claimed expansion at every grid point.
pub fn certify_asymptotics(w: &CompositionWord, exp: &Expansion<'_>, cfg: &EvalConfig) -> Result<CertReport> {
    let eps = &cfg.epsilon;
    let mut points = Vec::with_capacity(cfg.grid.len());
    let exact_zero = w.simplify().is_empty() && expansion_is_zero(exp);
    for zeta in &cfg.grid {
        let diff = if exact_zero {
            Difference::Resolved(Float::new(cfg.precision_bits))
        } else {
            certify_difference(cfg.precision_bits, |p| {
                let x = Float::with_val(p, zeta);
                let v = eval_word_at(w, &x)?;
                let claimed = match exp {
                    Expansion::Level0 { affine, series } => affine.apply(&x) + series.eval(&x),
                    Expansion::Level1 { affine, series } => affine.apply(&x) + series.eval(&x),
                    Expansion::Decomposition(d) => d.affine().apply(&x) + decomposition_deviation(d, &x),
                };
                let scale = Float::with_val(p, v.abs_ref()).max(&x.clone().abs());
                Ok((v - claimed, scale))
            })?
        };
        let resolved = matches!(diff, Difference::Resolved(_));
        let diff = diff.magnitude();
        let prec = diff.prec().max(cfg.precision_bits);
        let x = Float::with_val(prec, zeta);
        let bound = match exp {
            Expansion::Level0 { series, .. } => {
                let c_n = level0_cutoff(series);
                Float::with_val(prec, &x * (-(c_n + eps))).exp()
            }
            Expansion::Level1 { series, .. } => {
                let c_n = level1_cutoff(series);
                let e = Float::with_val(prec, &x * series.scale()).exp();
                Float::with_val(prec, e * (-(c_n + eps))).exp()
            }
            Expansion::Decomposition(d) => decomposition_bound(d, &x),
        };
        let margin = if diff.is_zero() {
            Float::with_val(prec, rug::float::Special::Infinity)
        } else {
            Float::with_val(prec, bound.ln_ref()) - Float::with_val(prec, diff.ln_ref())
        };
        points.push(CertPoint { zeta: zeta.clone(), difference: diff, resolved, bound, margin });
    }
    Ok(CertReport { points, precision_bits: cfg.precision_bits })
}

fn expansion_is_zero(exp: &Expansion<'_>) -> bool {
    match exp {
        Expansion::Level0 { affine, series } => affine.is_identity() && series.is_zero(),
        Expansion::Level1 { affine, series } => affine.is_identity() && series.is_empty(),
        Expansion::Decomposition(d) => {
            d.affine().is_identity() && d.level0().is_zero() && d.level1().iter().all(|b| b.is_empty())
        }
    }
}

/// `c_N = −(smallest stored exponent)`, or `−Ω` for a series with no terms.
fn level0_cutoff(s: &GenExpSeries) -> Rational {
    match s.terms().last() {
        Some((mu, _)) => Rational::from(-mu),
        None => s.floor().value().map_or(Rational::new(), |f| Rational::from(-f)),
    }
}

/// `c_N = −(smallest stored scale-1 principal exponent)`.
fn level1_cutoff(s: &StarSeries) -> Rational {
    s.terms()
        .iter()
        .map(|t| -t.nu1().rational_upper_bound())
        .max()
        .unwrap_or_else(|| s.accuracy().principal.value().map_or(Rational::new(), |f| Rational::from(-f)))
}

/// Least-squares fit of `ln(−ln|Δ(ζ) − affine(ζ)|) ≈ σζ + ln λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessFit {
    pub sigma: f64,
    pub lambda: f64,
    /// `(ζ, ln(−ln|deviation|))` for the points used.
    pub points: Vec<(Rational, f64)>,
}

impl fmt::Display for FlatnessFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# columns: zeta ln(-ln|deviation|) (binary64)")?;
        for (z, v) in &self.points {
            writeln!(f, "{z} {v:.12e}")?;
        }
        writeln!(f, "sigma {:.6} (binary64)", self.sigma)?;
        write!(f, "lambda {:.6} (binary64)", self.lambda)
    }
}

/// Fit the double-exponential flatness scale of `w` over the upper half of
/// the grid.
pub fn fit_flatness(w: &CompositionWord, cfg: &EvalConfig) -> Result<FlatnessFit> {
    let affine = w.affine_part()?;
    let mut grid = cfg.grid.clone();
    grid.sort();
    let used = &grid[grid.len() / 2..];
    if used.len() < 2 {
        return Err(Error::Degenerate("flatness fit needs at least four grid points".into()));
    }
    let mut points = Vec::with_capacity(used.len());
    for zeta in used {
        let dev = eval_deviation(w, zeta, &affine, cfg)?;
        if dev.is_zero() {
            return Err(Error::PrecisionInsufficient(format!(
                "deviation at ζ = {zeta} underflows {MAX_PRECISION} bits"
            )));
        }
        let l = -Float::with_val(dev.prec(), dev.abs_ref()).ln();
        if l <= 0 {
            return Err(Error::Degenerate(format!("deviation at ζ = {zeta} is not small")));
        }
        points.push((zeta.clone(), l.ln().to_f64()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(z, _)| z.to_f64()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sigma = sxy / sxx;
    let lambda = (my - sigma * mx).exp();
    Ok(FlatnessFit { sigma, lambda, points })
}
