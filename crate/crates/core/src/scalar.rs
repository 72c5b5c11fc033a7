//! Exact real scalars used as series coefficients.
//!
//! Affine shifts `ζ ↦ αζ + β` with `β = ln(r)` turn coefficients into
//! products like `r^μ` with rational `μ`, and the exponential conjugate of a
//! shift introduces `ln(r)` itself as a coefficient. A [`Scalar`] is a finite
//! rational combination of monomials
//!
//! ```text
//! e^{c} · Π p^{f_p} · Π (ln p)^{n_p}      c ∈ ℚ, f_p ∈ (0, 1) ∩ ℚ, n_p ∈ ℕ
//! ```
//!
//! where the `p` are prime atoms. Integer parts of `f_p` are folded into the
//! rational coefficient, so two scalars are equal iff their canonical forms
//! are equal.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Trial division bound used when splitting rationals into prime atoms.
const TRIAL_LIMIT: u32 = 1 << 20;

/// Factor a positive integer into (atom, multiplicity) pairs.
///
/// Atoms are primes below the trial bound; a leftover cofactor is kept as a
/// single atom.
pub(crate) fn factor(n: &Integer) -> Vec<(Integer, u32)> {
    assert!(*n > 0, "factor expects a positive integer");
    let mut out = Vec::new();
    let mut rest = n.clone();
    let mut p: u32 = 2;
    while p < TRIAL_LIMIT && Integer::from(p) * p <= rest {
        let mut k = 0;
        while rest.is_divisible_u(p) {
            rest /= p;
            k += 1;
        }
        if k > 0 {
            out.push((Integer::from(p), k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        out.push((rest, 1));
    }
    out
}

/// Exact real number `r + Σ q_p ln p`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogLinear {
    rational: Rational,
    logs: BTreeMap<Integer, Rational>,
}

impl LogLinear {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(r: Rational) -> Self {
        LogLinear { rational: r, logs: BTreeMap::new() }
    }

    /// `ln(r)` for a positive rational `r`.
    pub fn ln_of(r: &Rational) -> Option<Self> {
        if *r <= 0 {
            return None;
        }
        let mut logs: BTreeMap<Integer, Rational> = BTreeMap::new();
        for (p, k) in factor(r.numer()) {
            *logs.entry(p).or_default() += k;
        }
        if *r.denom() != 1 {
            for (p, k) in factor(r.denom()) {
                *logs.entry(p).or_default() -= k;
            }
        }
        logs.retain(|_, q| *q != 0);
        Some(LogLinear { rational: Rational::new(), logs })
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn log_parts(&self) -> impl Iterator<Item = (&Integer, &Rational)> {
        self.logs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.rational == 0 && self.logs.is_empty()
    }

    /// The value as a plain rational, when no logarithm is involved.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.logs.is_empty().then_some(&self.rational)
    }

    pub fn scaled(&self, k: &Rational) -> Self {
        if *k == 0 {
            return Self::zero();
        }
        LogLinear {
            rational: Rational::from(&self.rational * k),
            logs: self.logs.iter().map(|(p, q)| (p.clone(), Rational::from(q * k))).collect(),
        }
    }

    /// `e^{μ·self}` as a single-monomial scalar.
    pub fn exp_scaled(&self, mu: &Rational) -> Scalar {
        let mut coeff = Rational::from(1);
        let mut roots = BTreeMap::new();
        for (p, q) in &self.logs {
            let e = Rational::from(q * mu);
            let whole = e.clone().floor();
            let frac = e - &whole;
            let n = whole.numer().to_i32().expect("exponent of a prime atom fits in i32");
            coeff *= Rational::from(p.clone()).pow(n);
            if frac != 0 {
                roots.insert(p.clone(), frac);
            }
        }
        let mono = Monomial { exp: Rational::from(&self.rational * mu), roots, logs: BTreeMap::new() };
        Scalar::monomial(mono, coeff)
    }

    /// The value as a scalar (a linear combination of `1` and `ln p`).
    pub fn to_scalar(&self) -> Scalar {
        let mut s = Scalar::from(self.rational.clone());
        for (p, q) in &self.logs {
            let mono = Monomial { logs: [(p.clone(), 1)].into_iter().collect(), ..Monomial::one() };
            s = s + Scalar::monomial(mono, q.clone());
        }
        s
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let mut v = Float::with_val(prec, &self.rational);
        for (p, q) in &self.logs {
            v += Float::with_val(prec, p).ln() * Float::with_val(prec, q);
        }
        v
    }
}

impl Add for &LogLinear {
    type Output = LogLinear;
    fn add(self, rhs: &LogLinear) -> LogLinear {
        let mut logs = self.logs.clone();
        for (p, q) in &rhs.logs {
            *logs.entry(p.clone()).or_default() += q;
        }
        logs.retain(|_, q| *q != 0);
        LogLinear { rational: Rational::from(&self.rational + &rhs.rational), logs }
    }
}

impl Neg for &LogLinear {
    type Output = LogLinear;
    fn neg(self) -> LogLinear {
        self.scaled(&Rational::from(-1))
    }
}

impl Sub for &LogLinear {
    type Output = LogLinear;
    fn sub(self, rhs: &LogLinear) -> LogLinear {
        self + &(-rhs)
    }
}

impl fmt::Display for LogLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        if self.rational != 0 {
            parts.push(self.rational.to_string());
        }
        for (p, q) in &self.logs {
            parts.push(format!("{q}*ln({p})"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// `e^{exp} · Π p^{roots[p]} · Π (ln p)^{logs[p]}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    exp: Rational,
    roots: BTreeMap<Integer, Rational>,
    logs: BTreeMap<Integer, u32>,
}

impl Monomial {
    fn one() -> Self {
        Monomial { exp: Rational::new(), roots: BTreeMap::new(), logs: BTreeMap::new() }
    }

    fn is_one(&self) -> bool {
        self.exp == 0 && self.roots.is_empty() && self.logs.is_empty()
    }

    /// Product of two monomials, returning the rational factor split off
    /// from root exponents that reach 1.
    fn mul(&self, rhs: &Monomial) -> (Monomial, Rational) {
        let mut factor = Rational::from(1);
        let mut roots = self.roots.clone();
        for (p, f) in &rhs.roots {
            let e = roots.entry(p.clone()).or_default();
            *e += f;
            if *e >= 1 {
                *e -= 1;
                factor *= p.clone();
            }
        }
        roots.retain(|_, f| *f != 0);
        let mut logs = self.logs.clone();
        for (p, n) in &rhs.logs {
            *logs.entry(p.clone()).or_default() += n;
        }
        let exp = Rational::from(&self.exp + &rhs.exp);
        (Monomial { exp, roots, logs }, factor)
    }

    fn to_float(&self, prec: u32) -> Float {
        let mut v = Float::with_val(prec, &self.exp).exp();
        for (p, f) in &self.roots {
            v *= Float::with_val(prec, p).pow(Float::with_val(prec, f));
        }
        for (p, n) in &self.logs {
            v *= Float::with_val(prec, p).ln().pow(*n);
        }
        v
    }
}

/// Exact scalar: finite rational combination of [`Monomial`]s.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar {
    terms: BTreeMap<Monomial, Rational>,
}

impl Scalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Scalar::from(Rational::from(1))
    }

    fn monomial(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(m, c);
        }
        Scalar { terms }
    }

    /// `c · e^{exp} · Π p^{f} · Π (ln p)^{n}` built from raw parts; prime
    /// atoms are taken as given.
    pub fn from_parts(
        c: Rational,
        exp: Rational,
        roots: impl IntoIterator<Item = (Integer, Rational)>,
        logs: impl IntoIterator<Item = (Integer, u32)>,
    ) -> Self {
        let mut s = Scalar::monomial(Monomial { exp, ..Monomial::one() }, c);
        for (p, f) in roots {
            let ll = LogLinear { rational: Rational::new(), logs: [(p, Rational::from(1))].into_iter().collect() };
            s = &s * &ll.exp_scaled(&f);
        }
        for (p, n) in logs {
            if n > 0 {
                let m = Monomial { logs: [(p, n)].into_iter().collect(), ..Monomial::one() };
                s = &s * &Scalar::monomial(m, Rational::from(1));
            }
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_single_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::new()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Rewrite as `r + Σ q ln p` when the scalar has that shape.
    pub fn to_log_linear(&self) -> Option<LogLinear> {
        let mut out = LogLinear::zero();
        for (m, c) in &self.terms {
            if m.exp != 0 || !m.roots.is_empty() {
                return None;
            }
            match m.logs.len() {
                0 => out.rational += c,
                1 => {
                    let (p, n) = m.logs.iter().next().unwrap();
                    if *n != 1 {
                        return None;
                    }
                    *out.logs.entry(p.clone()).or_default() += c;
                }
                _ => return None,
            }
        }
        out.logs.retain(|_, q| *q != 0);
        Some(out)
    }

    /// `e^{self}` when the exponent is of the form `r + Σ q ln p`.
    pub fn exp(&self) -> Option<Scalar> {
        self.to_log_linear().map(|ll| ll.exp_scaled(&Rational::from(1)))
    }

    pub fn mul_rational(&self, k: &Rational) -> Scalar {
        if *k == 0 {
            return Scalar::zero();
        }
        Scalar { terms: self.terms.iter().map(|(m, c)| (m.clone(), Rational::from(c * k))).collect() }
    }

    pub fn pow(&self, n: u32) -> Scalar {
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplicative inverse, available for single monomials without
    /// logarithm factors.
    pub fn inverse(&self) -> Option<Scalar> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        if !m.logs.is_empty() {
            return None;
        }
        let mut coeff = Rational::from(c.recip_ref());
        let mut roots = BTreeMap::new();
        for (p, f) in &m.roots {
            roots.insert(p.clone(), Rational::from(1) - f);
            coeff /= Rational::from(p.clone());
        }
        Some(Scalar::monomial(Monomial { exp: Rational::from(-&m.exp), roots, logs: BTreeMap::new() }, coeff))
    }

    pub fn to_float(&self, prec: u32) -> Float {
        let mut v = Float::with_val(prec, 0);
        for (m, c) in &self.terms {
            v += m.to_float(prec) * Float::with_val(prec, c);
        }
        v
    }

    /// Sign of the value. Exact for single monomials (every monomial factor
    /// is positive); otherwise decided numerically at rising precision.
    pub fn signum(&self) -> Ordering {
        match self.terms.len() {
            0 => Ordering::Equal,
            1 => self.terms.values().next().unwrap().cmp0(),
            _ => {
                let mut prec = 128;
                loop {
                    let mut v = Float::with_val(prec, 0);
                    let mut mag = Float::with_val(prec, 0);
                    for (m, c) in &self.terms {
                        let t = m.to_float(prec) * Float::with_val(prec, c);
                        mag += t.clone().abs();
                        v += t;
                    }
                    let noise = mag * Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 16));
                    if v.clone().abs() > noise || prec >= 1 << 14 {
                        return v.cmp0().unwrap_or(Ordering::Equal);
                    }
                    prec *= 2;
                }
            }
        }
    }

    /// Numeric comparison of values (exact when equal).
    pub fn cmp_value(&self, other: &Scalar) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        (self - other).signum()
    }

    /// A rational `q ≥ self`, exact when `self` is rational.
    pub fn rational_upper_bound(&self) -> Rational {
        if let Some(r) = self.as_rational() {
            return r;
        }
        let v = self.to_float(256);
        let scaled = Float::with_val(256, &v * 1_048_576u32).ceil();
        let n = scaled.to_integer().expect("finite scalar");
        Rational::from((n + 1, 1_048_576u32))
    }

    pub fn monomials(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::monomial(Monomial::one(), r)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::from(Rational::from(v))
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            let e = terms.entry(m.clone()).or_default();
            *e += c;
            if *e == 0 {
                terms.remove(m);
            }
        }
        Scalar { terms }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { terms: self.terms.iter().map(|(m, c)| (m.clone(), Rational::from(-c))).collect() }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let (m, f) = m1.mul(m2);
                let c = Rational::from(c1 * c2) * f;
                out = out + Scalar::monomial(m, c);
            }
        }
        out
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp != 0 {
            write!(f, "*exp({})", self.exp)?;
        }
        for (p, e) in &self.roots {
            write!(f, "*pow({p},{e})")?;
        }
        for (p, n) in &self.logs {
            if *n == 1 {
                write!(f, "*ln({p})")?;
            } else {
                write!(f, "*ln({p})^{n}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn exp_of_log_half_is_rational() {
        let ln2 = LogLinear::ln_of(&q(2, 1)).unwrap();
        assert_eq!(ln2.exp_scaled(&q(-1, 1)).as_rational(), Some(q(1, 2)));
        assert_eq!(ln2.exp_scaled(&q(3, 1)).as_rational(), Some(q(8, 1)));
    }

    #[test]
    fn square_roots_multiply_back_to_rationals() {
        let ln2 = LogLinear::ln_of(&q(2, 1)).unwrap();
        let r = ln2.exp_scaled(&q(1, 2));
        assert!(r.as_rational().is_none());
        assert_eq!((&r * &r).as_rational(), Some(q(2, 1)));
        let inv = r.inverse().unwrap();
        assert_eq!((&r * &inv).as_rational(), Some(q(1, 1)));
    }

    #[test]
    fn ln_of_rational_factors() {
        let a = LogLinear::ln_of(&q(12, 5)).unwrap();
        let b = &(&LogLinear::ln_of(&q(4, 1)).unwrap() + &LogLinear::ln_of(&q(3, 1)).unwrap())
            - &LogLinear::ln_of(&q(5, 1)).unwrap();
        assert_eq!(a, b);
        let v = a.to_float(128);
        assert!((v - Float::with_val(128, &q(12, 5)).ln()).abs() < 1e-30);
    }

    #[test]
    fn sign_of_mixed_scalar() {
        // ln 2 - 69/100 > 0, ln 2 - 7/10 < 0
        let ln2 = LogLinear::ln_of(&q(2, 1)).unwrap().to_scalar();
        let a = &ln2 - &Scalar::from(q(69, 100));
        assert_eq!(a.signum(), Ordering::Greater);
        let b = &a - &Scalar::from(q(1, 100));
        assert_eq!(b.signum(), Ordering::Less);
    }

    #[test]
    fn to_log_linear_round_trip() {
        let ll = &LogLinear::from_rational(q(1, 3)) + &LogLinear::ln_of(&q(6, 1)).unwrap().scaled(&q(-2, 1));
        assert_eq!(ll.to_scalar().to_log_linear(), Some(ll.clone()));
        let e = ll.to_scalar().exp().unwrap();
        let v = e.to_float(128);
        let want = ll.to_float(128).exp();
        assert!((v - want).abs() < 1e-30);
    }
}
