//! Seeded generators for series, maps, level-1 terms and printable values.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};

use dulac_core::group::LogMap;
use dulac_core::level1::{Accuracy, K1Coefficient, Level1Term, Ray, StarSeries, TransExponent};
use dulac_core::logchart::{AffineMap, CompositionWord, FlowBoxMap, Generator, HMap, PolycycleSpec, TransitKind};
use dulac_core::scalar::{LogLinear, Scalar};
use dulac_core::series::{Floor, GenExpSeries};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// Nonzero rational `n/d` with `|n| ≤ max_num` and `d` from `dens`.
pub fn nonzero_rational(r: &mut impl Rng, max_num: i64, dens: &[i64]) -> Rational {
    let mut n = 0;
    while n == 0 {
        n = r.gen_range(-max_num..=max_num);
    }
    q(n, *dens.choose(r).expect("nonempty"))
}

pub fn positive_rational(r: &mut impl Rng, max_num: i64, dens: &[i64]) -> Rational {
    q(r.gen_range(1..=max_num), *dens.choose(r).expect("nonempty"))
}

/// Negative exponents `−k/d` strictly above `floor`, at most `max` of them.
pub fn negative_exponents(r: &mut impl Rng, floor: &Rational, max: usize, dens: &[i64]) -> Vec<Rational> {
    let mut out: Vec<Rational> = Vec::new();
    for _ in 0..max {
        let d = *dens.choose(r).expect("nonempty");
        let lo = Rational::from(floor * d).ceil().numer().to_i64().expect("small") + 1;
        let lo = lo.min(-1);
        let k = r.gen_range(lo..=-1);
        let mu = q(k, d);
        if mu > *floor && !out.contains(&mu) {
            out.push(mu);
        }
    }
    out
}

/// Rational scalar, or with `rich` one decorated with `e^r`, `p^f` and
/// `(ln p)^n` factors and occasionally a sum of two monomials.
pub fn scalar(r: &mut impl Rng, rich: bool) -> Scalar {
    let c = nonzero_rational(r, 9, &[1, 2, 3, 4, 5]);
    if !rich || r.gen_bool(0.4) {
        return Scalar::from(c);
    }
    let primes = [2i64, 3, 5, 7];
    let mono = |r: &mut dyn rand::RngCore| {
        let exp = if r.gen_bool(0.5) { q(r.gen_range(-3..=3), r.gen_range(1..=3)) } else { Rational::new() };
        let roots: Vec<(Integer, Rational)> = if r.gen_bool(0.5) {
            vec![(Integer::from(*primes.choose(r).expect("nonempty")), q(r.gen_range(1..=5), r.gen_range(2..=4)))]
        } else {
            vec![]
        };
        let logs: Vec<(Integer, u32)> = if r.gen_bool(0.4) {
            vec![(Integer::from(*primes.choose(r).expect("nonempty")), r.gen_range(1..=3))]
        } else {
            vec![]
        };
        (exp, roots, logs)
    };
    let (e, ro, lo) = mono(r);
    let mut s = Scalar::from_parts(c, e, ro, lo);
    if r.gen_bool(0.3) {
        let c2 = nonzero_rational(r, 9, &[1, 2, 3]);
        let (e, ro, lo) = mono(r);
        s = &s + &Scalar::from_parts(c2, e, ro, lo);
    }
    if s.is_zero() {
        Scalar::one()
    } else {
        s
    }
}

pub fn log_linear(r: &mut impl Rng) -> LogLinear {
    let mut b = LogLinear::from_rational(q(r.gen_range(-6..=6), r.gen_range(1..=4)));
    if r.gen_bool(0.5) {
        let p = [2i64, 3, 5, 6, 10].choose(r).copied().expect("nonempty");
        let k = nonzero_rational(r, 3, &[1, 2]);
        b = &b + &LogLinear::ln_of(&Rational::from(p)).expect("positive").scaled(&k);
    }
    b
}

/// Floor `−k/d` with `−depth ≤ −k/d ≤ −1`.
pub fn floor_value(r: &mut impl Rng, depth: i64) -> Rational {
    let d = r.gen_range(1..=2);
    q(r.gen_range(-depth * d..=-d), d)
}

/// Series with only negative exponents above a floor in `[−depth, −1]`.
pub fn fc0_series(r: &mut impl Rng, max_terms: usize, depth: i64, rich: bool) -> GenExpSeries {
    let floor = floor_value(r, depth);
    let terms =
        negative_exponents(r, &floor, max_terms, &[1, 2, 3]).into_iter().map(|mu| (mu, scalar(r, rich))).collect();
    GenExpSeries::from_terms(terms, Floor::At(floor))
}

/// Any printable series: exponents of either sign, exact or floored,
/// occasionally a threshold.
pub fn any_series(r: &mut impl Rng) -> GenExpSeries {
    let n = r.gen_range(0..=5);
    let floor = if r.gen_bool(0.3) { Floor::Exact } else { Floor::At(floor_value(r, 8)) };
    let mut terms = Vec::new();
    for _ in 0..n {
        let mu = q(r.gen_range(-12..=4), r.gen_range(1..=3));
        if floor.admits(&mu) {
            terms.push((mu, scalar(r, true)));
        }
    }
    let s = GenExpSeries::from_terms(terms, floor);
    if r.gen_bool(0.2) {
        s.with_threshold(positive_rational(r, 9, &[1, 2]))
    } else {
        s
    }
}

pub fn log_map(r: &mut impl Rng, max_terms: usize, depth: i64) -> LogMap {
    LogMap::new(fc0_series(r, max_terms, depth, false)).expect("negative exponents")
}

pub fn affine(r: &mut impl Rng) -> AffineMap {
    AffineMap::new(positive_rational(r, 7, &[1, 2, 3]), log_linear(r)).expect("positive alpha")
}

/// Exponent with a negative scale-1 coefficient, optionally a smaller
/// scale and a tail.
pub fn exponent(r: &mut impl Rng, rich: bool) -> TransExponent {
    let mut principal = vec![(Rational::from(1), Scalar::from(-positive_rational(r, 4, &[1, 2])))];
    if r.gen_bool(0.4) {
        principal.push((q(1, r.gen_range(2..=3)), scalar(r, false)));
    }
    let tail = if r.gen_bool(0.4) { fc0_series(r, 2, 4, rich) } else { GenExpSeries::zero() };
    TransExponent::new(principal, tail).expect("decreasing scales")
}

/// Level-1 coefficient; with `depth > 0` it may carry an upper at scale ½.
pub fn coefficient(r: &mut impl Rng, depth: u32, rich: bool) -> K1Coefficient {
    let base = if r.gen_bool(0.5) {
        GenExpSeries::constant(scalar(r, rich))
    } else {
        let mut s = fc0_series(r, 3, 6, rich);
        if s.is_zero() {
            s = GenExpSeries::constant(Scalar::one());
        }
        s
    };
    let uppers = if depth > 0 && r.gen_bool(0.4) { vec![star(r, q(1, 2), depth - 1, rich)] } else { vec![] };
    let k = K1Coefficient::new(base, uppers).expect("upper scale in (0, 1)");
    if k.is_zero() {
        K1Coefficient::one()
    } else {
        k
    }
}

pub fn level1_term(r: &mut impl Rng, depth: u32, rich: bool) -> Level1Term {
    Level1Term::new(coefficient(r, depth, rich), exponent(r, rich)).expect("nonzero coefficient")
}

/// Exact level-1 term whose coefficient has positive constant part
/// dominating a small decaying remainder, so its derivative stays away from
/// zero. Nothing is truncated, so it is a finite closed-form function.
pub fn dominant_level1_term(r: &mut impl Rng) -> Level1Term {
    let c = positive_rational(r, 5, &[1, 2]);
    let mut base = GenExpSeries::constant(Scalar::from(c));
    for mu in negative_exponents(r, &q(-4, 1), 2, &[1, 2]) {
        base = base.add(&GenExpSeries::monomial(mu, Scalar::from(nonzero_rational(r, 3, &[2, 4]))));
    }
    let uppers = if r.gen_bool(0.3) {
        let inner = Level1Term::new(
            K1Coefficient::constant(Scalar::from(nonzero_rational(r, 3, &[4]))),
            TransExponent::unit(-r.gen_range(1..=2)),
        )
        .expect("nonzero");
        vec![StarSeries::new(q(1, 2), vec![inner], Accuracy::exact(), vec![]).expect("positive scale")]
    } else {
        vec![]
    };
    let k = K1Coefficient::new(base, uppers).expect("scale ½");
    let e = exponent(r, false);
    let tail = GenExpSeries::from_terms(e.tail().terms().to_vec(), Floor::Exact);
    let e = TransExponent::new(e.principal().to_vec(), tail).expect("same principal part");
    Level1Term::new(k, e).expect("nonzero")
}

fn any_floor(r: &mut impl Rng) -> Floor {
    if r.gen_bool(0.3) {
        Floor::Exact
    } else {
        Floor::At(floor_value(r, 9))
    }
}

pub fn accuracy(r: &mut impl Rng) -> Accuracy {
    let principal = any_floor(r);
    Accuracy::new(principal, any_floor(r))
}

pub fn star(r: &mut impl Rng, scale: Rational, depth: u32, rich: bool) -> StarSeries {
    let n = r.gen_range(0..=3);
    let terms = (0..n).map(|_| level1_term(r, depth, rich)).collect();
    let rays = if r.gen_bool(0.3) {
        vec![Ray { anchor: exponent(r, false), step: TransExponent::unit(-r.gen_range(1..=2)) }]
    } else {
        vec![]
    };
    StarSeries::new(scale, terms, accuracy(r), rays).expect("positive scale")
}

pub fn any_star(r: &mut impl Rng) -> StarSeries {
    let scale = positive_rational(r, 4, &[1, 2, 3]);
    star(r, scale, 1, true)
}

pub fn flowbox(r: &mut impl Rng) -> FlowBoxMap {
    let n = r.gen_range(0..=3);
    let tail = (0..n).map(|_| q(r.gen_range(-3..=3), r.gen_range(1..=3))).collect();
    FlowBoxMap::new(positive_rational(r, 5, &[1, 2]), tail, positive_rational(r, 2, &[1, 2, 4]))
        .expect("positive alpha")
}

pub fn word(r: &mut impl Rng) -> CompositionWord {
    let n = r.gen_range(0..=5);
    let gens = (0..n)
        .map(|_| match r.gen_range(0..5) {
            0 => Generator::Affine(affine(r)),
            1 => Generator::HMap(HMap::from_series(fc0_series(r, 3, 6, true)).expect("negative exponents")),
            2 => {
                let mut fb = flowbox(r);
                if *fb.alpha() != 1 {
                    fb = FlowBoxMap::new(Rational::from(1), fb.tail().to_vec(), fb.radius_hint().clone())
                        .expect("positive alpha");
                }
                Generator::HMap(HMap::from_flowbox(fb, -Rational::from(r.gen_range(2..=6))).expect("negative order"))
            }
            3 => Generator::Exp,
            _ => Generator::Ln,
        })
        .collect();
    CompositionWord::new(gens)
}

/// Alternating polycycle whose base section precedes an exp-type saddle.
pub fn polycycle(r: &mut impl Rng) -> PolycycleSpec {
    let n = 2 * r.gen_range(1..=3);
    let start_exp = r.gen_bool(0.5);
    let equilibria: Vec<(u32, TransitKind)> = (0..n)
        .map(|i| {
            let exp = (i % 2 == 0) == start_exp;
            (r.gen_range(1..=3), if exp { TransitKind::ExpType } else { TransitKind::LogType })
        })
        .collect();
    let exp_positions: Vec<usize> = (0..n).filter(|&i| equilibria[i].1 == TransitKind::ExpType).collect();
    let first = *exp_positions.choose(r).expect("half are exp-type");
    let base_section = (first + n - 1) % n;
    let connectors = (0..n).map(|_| flowbox(r)).collect();
    let spec = PolycycleSpec { equilibria, connectors, base_section };
    spec.validate().expect("generated spec is a simple alternant");
    spec
}
