//! Text forms for series, exponents, coefficients, STAR-series, words and
//! polycycle specs. Every printer has a matching parser with
//! `parse(print(x)) == x`. The grammar is in `docs/grammar.ebnf`.

use std::cmp::Ordering;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::group::Decomposition;
use crate::level1::{Accuracy, K1Coefficient, Level1Term, LowerBoundReport, Ray, StarSeries, TransExponent, Validity};
use crate::logchart::{AffineMap, CompositionWord, FlowBoxMap, Generator, HMap, PolycycleSpec, TransitKind};
use crate::scalar::{LogLinear, Scalar};
use crate::series::{Floor, GenExpSeries};

/// Any value with a text form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expression {
    Series(GenExpSeries),
    Exponent(TransExponent),
    Coefficient(K1Coefficient),
    Star(StarSeries),
    Word(CompositionWord),
    Polycycle(PolycycleSpec),
}

impl Expression {
    pub fn kind(&self) -> &'static str {
        match self {
            Expression::Series(_) => "series",
            Expression::Exponent(_) => "exponent",
            Expression::Coefficient(_) => "coefficient",
            Expression::Star(_) => "star",
            Expression::Word(_) => "word",
            Expression::Polycycle(_) => "polycycle",
        }
    }
}

pub fn print_expression(e: &Expression) -> String {
    match e {
        Expression::Series(s) => print_series(s),
        Expression::Exponent(x) => print_exponent(x),
        Expression::Coefficient(k) => print_coefficient(k),
        Expression::Star(s) => print_star(s),
        Expression::Word(w) => print_word(w),
        Expression::Polycycle(p) => print_polycycle(p),
    }
}

/// Parse any text form, choosing the kind from the leading token.
pub fn parse_expression(text: &str) -> Result<Expression> {
    let head = text.trim_start();
    let word_start = ["aff(", "h(", "flow(", "id"].iter().any(|k| head.starts_with(k))
        || keyword_at(head, "exp")
        || keyword_at(head, "ln");
    if head.starts_with("polycycle") {
        parse_polycycle(text).map(Expression::Polycycle)
    } else if head.starts_with("STAR{") {
        parse_star(text).map(Expression::Star)
    } else if head.starts_with("EE{") {
        parse_exponent(text).map(Expression::Exponent)
    } else if head.starts_with('[') {
        parse_coefficient(text).map(Expression::Coefficient)
    } else if word_start {
        parse_word(text).map(Expression::Word)
    } else {
        parse_series(text).map(Expression::Series)
    }
}

fn keyword_at(s: &str, kw: &str) -> bool {
    s.starts_with(kw) && !s[kw.len()..].starts_with(|c: char| c.is_alphanumeric() || c == '(' || c == '_')
}

// ---------------------------------------------------------------- printers

pub fn print_floor(f: &Floor) -> String {
    match f {
        Floor::Exact => "exact".into(),
        Floor::At(r) => r.to_string(),
    }
}

fn print_scalar_factor(c: &Scalar) -> String {
    if c.is_single_monomial() {
        c.to_string()
    } else {
        format!("({c})")
    }
}

pub fn print_series(s: &GenExpSeries) -> String {
    let body = if s.terms().is_empty() {
        "0".to_string()
    } else {
        s.terms().iter().map(|(mu, c)| format!("{}*E({mu})", print_scalar_factor(c))).collect::<Vec<_>>().join(" + ")
    };
    let mut opts = match s.floor() {
        Floor::Exact => "exact".to_string(),
        Floor::At(f) => format!("floor={f}"),
    };
    if *s.threshold() != 0 {
        opts.push_str(&format!(", threshold={}", s.threshold()));
    }
    format!("{body} | {opts}")
}

pub fn print_exponent(e: &TransExponent) -> String {
    let principal: Vec<String> =
        e.principal().iter().map(|(a, nu)| format!("{}@{a}", print_scalar_factor(nu))).collect();
    let mut out = format!("EE{{{}", principal.join(", "));
    if !e.tail().is_exact_zero() {
        if !principal.is_empty() {
            out.push(' ');
        }
        out.push_str(&format!("| {}", print_series(e.tail())));
    }
    out.push('}');
    out
}

pub fn print_coefficient(k: &K1Coefficient) -> String {
    let mut parts = vec![print_series(k.base())];
    parts.extend(k.uppers().iter().map(print_star));
    format!("[{}]", parts.join(" ; "))
}

pub fn print_term(t: &Level1Term) -> String {
    format!("({})*{}", print_coefficient(t.coeff()), print_exponent(t.exponent()))
}

pub fn print_star(s: &StarSeries) -> String {
    let rays: Vec<String> =
        s.rays().iter().map(|r| format!("{}~{}", print_exponent(&r.anchor), print_exponent(&r.step))).collect();
    let terms = if s.terms().is_empty() {
        "0".to_string()
    } else {
        s.terms().iter().map(print_term).collect::<Vec<_>>().join(" + ")
    };
    format!(
        "STAR{{scale={}, principal={}, coeff={}, rays=[{}]; {terms}}}",
        s.scale(),
        print_floor(&s.accuracy().principal),
        print_floor(&s.accuracy().coefficient),
        rays.join(", ")
    )
}

fn print_rationals(v: &[Rational]) -> String {
    v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn print_generator(g: &Generator) -> String {
    match g {
        Generator::Affine(a) => a.to_string(),
        Generator::HMap(h) => match &h.source {
            Some(fb) => format!(
                "flow(alpha={}, tail=[{}], radius={}, order={})",
                fb.map.alpha(),
                print_rationals(fb.map.tail()),
                fb.map.radius_hint(),
                fb.order
            ),
            None => format!("h({})", print_series(&h.deviation)),
        },
        Generator::Exp => "exp".into(),
        Generator::Ln => "ln".into(),
    }
}

/// Application order, `;`-separated; the empty word prints as `id`.
pub fn print_word(w: &CompositionWord) -> String {
    if w.is_empty() {
        return "id".into();
    }
    w.gens().iter().map(print_generator).collect::<Vec<_>>().join(" ; ")
}

/// Right-to-left composition, as maps are usually written.
pub fn print_word_composition(w: &CompositionWord) -> String {
    if w.is_empty() {
        return "id".into();
    }
    w.gens().iter().rev().map(print_generator).collect::<Vec<_>>().join(" ∘ ")
}

pub fn print_polycycle(p: &PolycycleSpec) -> String {
    let mut out = format!("polycycle {}\n", p.equilibria.len());
    for (i, (k, kind)) in p.equilibria.iter().enumerate() {
        let kind = match kind {
            TransitKind::ExpType => "exp",
            TransitKind::LogType => "log",
        };
        out.push_str(&format!("saddle k={k} kind={kind}\n"));
        if let Some(c) = p.connectors.get(i) {
            let tail = c.tail().iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
            out.push_str(&format!("connector alpha={} tail={tail} radius={}\n", c.alpha(), c.radius_hint()));
        }
    }
    out.push_str(&format!("base={}\n", p.base_section));
    out
}

/// Report form of a decomposition, one component per line.
pub fn print_decomposition(d: &Decomposition) -> String {
    let o = d.order();
    let mut out = format!(
        "order level0={} principal={} coeff={}\naffine {}\nlevel0 {}\n",
        o.level0_floor,
        o.principal_floor,
        o.coeff_floor,
        d.affine(),
        print_series(d.level0())
    );
    for b in d.level1() {
        out.push_str(&format!(
            "body scale={} p={} terms={} {}\n",
            b.scale(),
            b.level(),
            b.terms().len(),
            print_star(b)
        ));
    }
    for e in d.escalations() {
        out.push_str(&format!("escalation scale={} upper_scale={} p={}\n", e.scale, e.upper_scale, e.level));
    }
    out
}

pub fn print_validity(v: &Validity) -> String {
    match v {
        Validity::Valid => "Valid".into(),
        Validity::Invalid { witness, scale, reason } => {
            let magnitude = if witness.signum() == Ordering::Less { -witness } else { witness.clone() };
            format!("Invalid scale={scale} witness={witness} magnitude={magnitude} reason: {reason}")
        }
    }
}

pub fn print_lower_bound(r: &LowerBoundReport) -> String {
    match r {
        LowerBoundReport::Certified { lambda, scale, sign, dominant, derivative_steps } => format!(
            "Certified lambda={lambda} scale={scale} sign={} steps={derivative_steps}\ndominant {}",
            print_sign(*sign),
            print_term(dominant)
        ),
        LowerBoundReport::GapDetected { witness, witness_level, input_level, rewrite, rewrite_scale, validity } => {
            let mut out = format!(
                "GapDetected input_level={input_level} witness_level={witness_level} rewrite_scale={rewrite_scale}\n"
            );
            out.push_str(&format!("witness {}\n", print_coefficient(witness)));
            out.push_str(&format!("rewrite exponents={} rays={}\n", rewrite.exponents.len(), rewrite.rays.len()));
            out.push_str(&format!("validity {}", print_validity(validity)));
            out
        }
    }
}

pub fn print_sign(s: Ordering) -> &'static str {
    match s {
        Ordering::Less => "-",
        Ordering::Equal => "0",
        Ordering::Greater => "+",
    }
}

// ---------------------------------------------------------------- parsers

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.rest().chars().next()
    }

    fn looking_at(&mut self, lit: &str) -> bool {
        self.ws();
        self.rest().starts_with(lit)
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.looking_at(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            let found: String = self.rest().chars().take(12).collect();
            Err(self.err(format!("expected `{lit}`, found `{found}`")))
        }
    }

    fn finish(&mut self) -> Result<()> {
        self.ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    fn digits(&mut self) -> Result<Integer> {
        self.ws();
        let r = self.rest();
        let n = r.bytes().take_while(|b| b.is_ascii_digit()).count();
        if n == 0 {
            return Err(self.err("expected digits"));
        }
        let v = r[..n].parse::<Integer>().map_err(|e| self.err(e.to_string()))?;
        self.pos += n;
        Ok(v)
    }

    fn rational(&mut self) -> Result<Rational> {
        self.ws();
        let neg = if self.rest().starts_with('-') {
            self.pos += 1;
            true
        } else {
            if self.rest().starts_with('+') {
                self.pos += 1;
            }
            false
        };
        let num = self.digits()?;
        let den = if self.rest().starts_with('/') {
            self.pos += 1;
            let d = self.digits()?;
            if d == 0 {
                return Err(self.err("zero denominator"));
            }
            d
        } else {
            Integer::from(1)
        };
        if self.rest().starts_with(['.', 'e']) {
            return Err(self.err("only exact rationals p/q are accepted"));
        }
        let r = Rational::from((num, den));
        Ok(if neg { -r } else { r })
    }

    fn positive_integer(&mut self) -> Result<Integer> {
        let at = self.pos;
        let r = self.rational()?;
        if *r.denom() != 1 || r <= 1 {
            self.pos = at;
            return Err(self.err("expected an integer atom greater than 1"));
        }
        Ok(r.numer().clone())
    }

    /// `c [*exp(r)] [*pow(p,f)]* [*ln(p)[^n]]*`
    fn scalar_factor(&mut self) -> Result<Scalar> {
        let c = self.rational()?;
        let mut s = Scalar::from(c);
        loop {
            if self.eat("*exp(") {
                let r = self.rational()?;
                self.expect(")")?;
                s = &s * &Scalar::from_parts(Rational::from(1), r, [], []);
            } else if self.eat("*pow(") {
                let p = self.positive_integer()?;
                self.expect(",")?;
                let f = self.rational()?;
                self.expect(")")?;
                let ll = LogLinear::ln_of(&Rational::from(p)).expect("positive");
                s = &s * &ll.exp_scaled(&f);
            } else if self.eat("*ln(") {
                let p = self.positive_integer()?;
                self.expect(")")?;
                let n = if self.eat("^") {
                    self.digits()?.to_u32().ok_or_else(|| self.err("power too large"))?
                } else {
                    1
                };
                let ll = LogLinear::ln_of(&Rational::from(p)).expect("positive");
                s = &s * &ll.to_scalar().pow(n);
            } else {
                return Ok(s);
            }
        }
    }

    /// A factor, or a parenthesized sum of factors.
    fn scalar(&mut self) -> Result<Scalar> {
        if self.eat("(") {
            let mut s = self.scalar_factor()?;
            while self.eat("+") {
                s = &s + &self.scalar_factor()?;
            }
            self.expect(")")?;
            Ok(s)
        } else {
            self.scalar_factor()
        }
    }

    fn floor_value(&mut self) -> Result<Floor> {
        if self.eat("exact") {
            Ok(Floor::Exact)
        } else {
            Ok(Floor::At(self.rational()?))
        }
    }

    fn series(&mut self) -> Result<GenExpSeries> {
        let start = self.pos;
        let mut terms: Vec<(Rational, Scalar)> = Vec::new();
        if self.peek() == Some('0') && !self.rest()[1..].trim_start().starts_with(['*', '/']) {
            self.pos += 1;
        } else {
            let mut negate = false;
            loop {
                let c = self.scalar()?;
                self.expect("*E(")?;
                let mu = self.rational()?;
                self.expect(")")?;
                terms.push((mu, if negate { -&c } else { c }));
                if self.eat("+") {
                    negate = false;
                } else if self.eat("-") {
                    negate = true;
                } else {
                    break;
                }
            }
        }
        let mut floor = Floor::Exact;
        let mut threshold = Rational::new();
        if self.eat("|") {
            loop {
                if self.eat("exact") {
                    floor = Floor::Exact;
                } else if self.eat("floor=") {
                    floor = Floor::At(self.rational()?);
                } else if self.eat("threshold=") {
                    threshold = self.rational()?;
                    if threshold < 0 {
                        return Err(Error::invariant("threshold must be non-negative"));
                    }
                } else {
                    return Err(self.err("expected `exact`, `floor=` or `threshold=`"));
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        for (mu, _) in &terms {
            if !floor.admits(mu) {
                return Err(Error::Parse { pos: start, msg: format!("exponent {mu} is not above the floor") });
            }
        }
        Ok(GenExpSeries::from_terms(terms, floor).with_threshold(threshold))
    }

    fn exponent(&mut self) -> Result<TransExponent> {
        self.expect("EE{")?;
        let mut principal = Vec::new();
        if !self.looking_at("|") && !self.looking_at("}") {
            loop {
                let nu = self.scalar()?;
                self.expect("@")?;
                let a = self.rational()?;
                principal.push((a, nu));
                if !self.eat(",") {
                    break;
                }
            }
        }
        let tail = if self.eat("|") { self.series()? } else { GenExpSeries::zero() };
        self.expect("}")?;
        TransExponent::new(principal, tail)
    }

    fn coefficient(&mut self) -> Result<K1Coefficient> {
        self.expect("[")?;
        let base = self.series()?;
        let mut uppers = Vec::new();
        while self.eat(";") {
            uppers.push(self.star()?);
        }
        self.expect("]")?;
        K1Coefficient::new(base, uppers)
    }

    fn star(&mut self) -> Result<StarSeries> {
        self.expect("STAR{")?;
        self.expect("scale=")?;
        let scale = self.rational()?;
        self.expect(",")?;
        self.expect("principal=")?;
        let principal = self.floor_value()?;
        self.expect(",")?;
        self.expect("coeff=")?;
        let coefficient = self.floor_value()?;
        self.expect(",")?;
        self.expect("rays=[")?;
        let mut rays = Vec::new();
        if !self.looking_at("]") {
            loop {
                let anchor = self.exponent()?;
                self.expect("~")?;
                let step = self.exponent()?;
                rays.push(Ray { anchor, step });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("]")?;
        self.expect(";")?;
        let mut terms = Vec::new();
        if !self.eat("0") {
            loop {
                self.expect("(")?;
                let k = self.coefficient()?;
                self.expect(")")?;
                self.expect("*")?;
                let e = self.exponent()?;
                terms.push(Level1Term::new(k, e)?);
                if !self.eat("+") {
                    break;
                }
            }
        }
        self.expect("}")?;
        StarSeries::new(scale, terms, Accuracy::new(principal, coefficient), rays)
    }

    fn log_linear(&mut self) -> Result<LogLinear> {
        let mut out = LogLinear::zero();
        loop {
            let q = self.rational()?;
            if self.eat("*ln(") {
                let p = self.positive_integer()?;
                self.expect(")")?;
                out = &out + &LogLinear::ln_of(&Rational::from(p)).expect("positive").scaled(&q);
            } else {
                out = &out + &LogLinear::from_rational(q);
            }
            if !self.eat("+") {
                return Ok(out);
            }
        }
    }

    fn rational_list(&mut self, close: &str) -> Result<Vec<Rational>> {
        let mut out = Vec::new();
        if self.looking_at(close) {
            return Ok(out);
        }
        loop {
            out.push(self.rational()?);
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn generator(&mut self) -> Result<Option<Generator>> {
        if self.eat("aff(") {
            let a = self.rational()?;
            self.expect(",")?;
            let b = self.log_linear()?;
            self.expect(")")?;
            return Ok(Some(Generator::Affine(AffineMap::new(a, b)?)));
        }
        if self.eat("h(") {
            let s = self.series()?;
            self.expect(")")?;
            return Ok(Some(Generator::HMap(HMap::from_series(s)?)));
        }
        if self.eat("flow(") {
            self.expect("alpha=")?;
            let alpha = self.rational()?;
            self.expect(",")?;
            self.expect("tail=[")?;
            let tail = self.rational_list("]")?;
            self.expect("]")?;
            self.expect(",")?;
            self.expect("radius=")?;
            let radius = self.rational()?;
            self.expect(",")?;
            self.expect("order=")?;
            let order = self.rational()?;
            self.expect(")")?;
            let map = FlowBoxMap::new(alpha, tail, radius)?;
            return Ok(Some(Generator::HMap(HMap::from_flowbox(map, order)?)));
        }
        self.ws();
        for (kw, g) in [("exp", Some(Generator::Exp)), ("ln", Some(Generator::Ln)), ("id", None)] {
            if keyword_at(self.rest(), kw) {
                self.pos += kw.len();
                return Ok(g);
            }
        }
        Err(self.err("expected a generator: aff(..), h(..), flow(..), exp, ln or id"))
    }

    fn word(&mut self) -> Result<CompositionWord> {
        let mut gens = Vec::new();
        loop {
            if let Some(g) = self.generator()? {
                gens.push(g);
            }
            if !self.eat(";") {
                return Ok(CompositionWord::new(gens));
            }
        }
    }
}

fn whole<T>(text: &str, f: impl FnOnce(&mut Parser<'_>) -> Result<T>) -> Result<T> {
    let mut p = Parser::new(text);
    let v = f(&mut p)?;
    p.finish()?;
    Ok(v)
}

pub fn parse_series(text: &str) -> Result<GenExpSeries> {
    whole(text, |p| p.series())
}

pub fn parse_scalar(text: &str) -> Result<Scalar> {
    whole(text, |p| {
        if p.looking_at("(") {
            p.scalar()
        } else {
            let mut s = p.scalar_factor()?;
            while p.eat("+") {
                s = &s + &p.scalar_factor()?;
            }
            Ok(s)
        }
    })
}

pub fn parse_log_linear(text: &str) -> Result<LogLinear> {
    whole(text, |p| p.log_linear())
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    whole(text, |p| p.rational())
}

pub fn parse_exponent(text: &str) -> Result<TransExponent> {
    whole(text, |p| p.exponent())
}

pub fn parse_coefficient(text: &str) -> Result<K1Coefficient> {
    whole(text, |p| p.coefficient())
}

pub fn parse_star(text: &str) -> Result<StarSeries> {
    whole(text, |p| p.star())
}

/// Words are parsed as written; `exp ; ln` is kept as two generators.
pub fn parse_word(text: &str) -> Result<CompositionWord> {
    whole(text, |p| p.word())
}

/// Line-oriented polycycle file: `polycycle N`, then `saddle` lines each
/// followed by its outgoing `connector`, then `base=`. `#` starts a comment.
pub fn parse_polycycle(text: &str) -> Result<PolycycleSpec> {
    let mut equilibria = Vec::new();
    let mut connectors = Vec::new();
    let mut count: Option<usize> = None;
    let mut base: Option<usize> = None;
    let mut offset = 0;
    for raw in text.split_inclusive('\n') {
        let line_start = offset;
        offset += raw.len();
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { pos: line_start, msg };
        if let Some(n) = line.strip_prefix("polycycle") {
            let n = n.trim();
            count = Some(n.parse().map_err(|_| err(format!("bad equilibrium count `{n}`")))?);
            continue;
        }
        if let Some(v) = line.strip_prefix("base=") {
            let v = v.trim();
            base = Some(v.parse().map_err(|_| err(format!("bad base index `{v}`")))?);
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or("");
        let fields: Vec<(&str, &str)> = words
            .map(|w| w.split_once('=').ok_or_else(|| err(format!("expected key=value, found `{w}`"))))
            .collect::<Result<_>>()?;
        let get = |key: &str| fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let need = |key: &str| get(key).ok_or_else(|| err(format!("missing `{key}=`")));
        let rat = |v: &str| parse_rational(v).map_err(|_| err(format!("`{v}` is not an exact rational")));
        match head {
            "saddle" => {
                if count.is_none() {
                    return Err(err("`saddle` before the `polycycle` header".into()));
                }
                let k: u32 = need("k")?.parse().map_err(|_| err("k must be a positive integer".into()))?;
                let kind = match need("kind")? {
                    "exp" => TransitKind::ExpType,
                    "log" => TransitKind::LogType,
                    other => return Err(err(format!("unknown transit kind `{other}`"))),
                };
                equilibria.push((k, kind));
            }
            "connector" => {
                let alpha = rat(need("alpha")?)?;
                let tail = match get("tail") {
                    None | Some("") => Vec::new(),
                    Some(t) => t.split(',').map(rat).collect::<Result<_>>()?,
                };
                let radius = match get("radius") {
                    Some(r) => rat(r)?,
                    None => Rational::from(1),
                };
                connectors.push(FlowBoxMap::new(alpha, tail, radius)?);
            }
            other => return Err(err(format!("unknown line `{other}`"))),
        }
    }
    let n = count.ok_or(Error::Parse { pos: 0, msg: "missing `polycycle N` header".into() })?;
    if equilibria.len() != n {
        return Err(Error::Parse {
            pos: text.len(),
            msg: format!("header says {n} saddles, found {}", equilibria.len()),
        });
    }
    let spec = PolycycleSpec {
        equilibria,
        connectors,
        base_section: base.ok_or(Error::Parse { pos: text.len(), msg: "missing `base=`".into() })?,
    };
    spec.validate()?;
    Ok(spec)
}
