//! `dulac`: command-line driver for the log-chart series, decomposition and
//! oracle pipelines.
//!
//! Exit status: 0 on success, 1 when a check reports Fail, Invalid or
//! GapDetected, 2 on input errors.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rug::Rational;

use dulac_core::group::{
    a_conjugate, additive_decompose, compose_h_to, conj_affine, invert_h, invert_h_to, DecomposeOrder, LogMap,
};
use dulac_core::level1::{
    build_counterexample, normal_form, ordering_lower_bound, scale1_leading_term, theoretical_family, validity_check,
    wronskian_pair, Family, LeadingTerm, LowerBoundReport, Validity,
};
use dulac_core::logchart::{compile_polycycle, flowbox_to_log, AffineMap, CompositionWord, FlowBoxMap};
use dulac_core::numeric::{certify_asymptotics, fit_flatness, grid_range, EvalConfig, Expansion, DEFAULT_PRECISION};
use dulac_core::series::Floor;
use dulac_core::syntax::{
    parse_log_linear, parse_polycycle, parse_rational, parse_series, parse_star, parse_word, print_decomposition,
    print_lower_bound, print_series, print_sign, print_star, print_term, print_validity,
};
use dulac_core::Error;

#[derive(Parser, Debug)]
#[command(name = "dulac", version, about = "Dulac series, level-1 STAR-series and return-map decompositions")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Log-chart deviation of a flow-box map `αz + Σ a_q z^{q+2}`.
    Expand {
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Comma-separated tail coefficients a_0, a_1, ...
        #[arg(long, default_value = "")]
        tail: String,
        #[command(flatten)]
        order: OrderOpt,
    },
    /// Composition `f ∘ g` of two near-identity maps given by deviations.
    Compose {
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(allow_hyphen_values = true)]
        g: String,
        /// Result floor; defaults to the coarser input floor.
        #[arg(long, allow_hyphen_values = true)]
        floor: Option<String>,
    },
    /// Inverse of a near-identity map.
    Invert {
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        floor: Option<String>,
    },
    /// Conjugate a deviation by `ζ ↦ αζ + β`, or by exp with `--exp`.
    Conjugate {
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        beta: String,
        /// Compute ln ∘ f ∘ exp as a STAR-series instead.
        #[arg(long)]
        exp: bool,
        #[command(flatten)]
        order: OrderOpt,
    },
    /// Additive decomposition of a word or compiled polycycle.
    Decompose {
        #[command(flatten)]
        source: WordSource,
        #[command(flatten)]
        order: OrderOpt,
    },
    /// Large normal form of a STAR-series.
    NormalForm { star: String },
    /// Validity of the exponent family of a STAR-series at a scale.
    CheckValidity {
        /// STAR-series; omit with `--theoretical`.
        star: Option<String>,
        #[arg(long, default_value = "1")]
        scale: String,
        /// Check the family of k₁k₂ for the geometric pair instead.
        #[arg(long)]
        theoretical: bool,
        #[arg(long, default_value_t = 12)]
        terms: u32,
    },
    /// Divide-and-differentiate lower bound of a STAR-series.
    Order {
        star: String,
        #[arg(long, default_value = "1/4")]
        delta: String,
    },
    /// Run the full counterexample pipeline.
    Counterexample {
        #[command(flatten)]
        order: OrderOpt,
        #[command(flatten)]
        numeric: NumericOpt,
    },
    /// Certify a word against its decomposition or a given expansion.
    OracleCheck {
        #[command(flatten)]
        source: WordSource,
        /// Level-0 expansion (deviation series) to check instead.
        #[arg(long, allow_hyphen_values = true)]
        series: Option<String>,
        /// Level-1 expansion (STAR-series) to check instead.
        #[arg(long)]
        star: Option<String>,
        #[command(flatten)]
        order: OrderOpt,
        #[command(flatten)]
        numeric: NumericOpt,
    },
    /// Fit the double-exponential flatness scale of a word.
    Flatness {
        #[command(flatten)]
        source: WordSource,
        #[command(flatten)]
        order: OrderOpt,
        #[command(flatten)]
        numeric: NumericOpt,
    },
}

#[derive(Args, Debug)]
struct WordSource {
    /// Word text or a file containing it.
    #[arg(long)]
    word: Option<String>,
    /// Polycycle spec file or text.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Args, Debug)]
struct OrderOpt {
    /// Truncation order n: level-0 floor −n, principal floor −n + ½.
    #[arg(long, default_value_t = 6)]
    order: u32,
}

#[derive(Args, Debug)]
struct NumericOpt {
    #[arg(long, env = "DULAC_PRECISION", default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    /// `from:to:step` or a comma-separated list of rationals.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "1/2")]
    epsilon: String,
}

/// Outcome of a verb: the report and whether its check passed.
struct Outcome {
    report: String,
    ok: bool,
}

fn passed(report: String) -> Outcome {
    Outcome { report, ok: true }
}

fn read_input(s: &str) -> Result<String, Error> {
    let p = Path::new(s);
    if p.is_file() {
        std::fs::read_to_string(p).map_err(|e| Error::Parse { pos: 0, msg: format!("{}: {e}", p.display()) })
    } else {
        Ok(s.to_string())
    }
}

fn rational(s: &str) -> Result<Rational, Error> {
    parse_rational(s.trim())
}

fn rationals(s: &str) -> Result<Vec<Rational>, Error> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(rational).collect()
}

fn grid(spec: &Option<String>, default: Vec<Rational>) -> Result<Vec<Rational>, Error> {
    match spec {
        None => Ok(default),
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() == 3 {
                let step = rational(parts[2])?;
                if step <= 0 {
                    return Err(Error::Parse { pos: 0, msg: "grid step must be positive".into() });
                }
                Ok(grid_range(&rational(parts[0])?, &rational(parts[1])?, &step))
            } else {
                rationals(s)
            }
        }
    }
}

fn config(n: &NumericOpt, default: EvalConfig) -> Result<EvalConfig, Error> {
    let g = grid(&n.grid, default.grid)?;
    EvalConfig::new(n.precision, g, rational(&n.epsilon)?)
}

fn word_of(src: &WordSource, order: &DecomposeOrder) -> Result<CompositionWord, Error> {
    match (&src.word, &src.spec) {
        (Some(w), None) => parse_word(read_input(w)?.trim()),
        (None, Some(s)) => compile_polycycle(&parse_polycycle(&read_input(s)?)?, &order.level0_floor),
        _ => Err(Error::Parse { pos: 0, msg: "give exactly one of --word or --spec".into() }),
    }
}

fn log_map(s: &str) -> Result<LogMap, Error> {
    LogMap::new(parse_series(read_input(s)?.trim())?)
}

fn floor_opt(s: &Option<String>) -> Result<Option<Floor>, Error> {
    s.as_deref().map(|f| rational(f).map(Floor::At)).transpose()
}

fn run(verb: &Verb) -> Result<Outcome, Error> {
    match verb {
        Verb::Expand { alpha, tail, order } => {
            let f = FlowBoxMap::new(rational(alpha)?, rationals(tail)?, Rational::from(1))?;
            let o = DecomposeOrder::from_order(order.order);
            let (a, d) = flowbox_to_log(&f, &o.level0_floor)?;
            Ok(passed(format!("affine {a}\ndeviation {}", print_series(&d))))
        }
        Verb::Compose { f, g, floor } => {
            let (f, g) = (log_map(f)?, log_map(g)?);
            let target = floor_opt(floor)?.unwrap_or(Floor::Exact);
            let c = compose_h_to(&f, &g, &target)?;
            Ok(passed(print_series(c.deviation())))
        }
        Verb::Invert { f, floor } => {
            let f = log_map(f)?;
            let inv = match floor_opt(floor)? {
                Some(fl) => invert_h_to(&f, &fl)?,
                None => invert_h(&f)?,
            };
            Ok(passed(print_series(inv.deviation())))
        }
        Verb::Conjugate { f, alpha, beta, exp, order } => {
            let f = log_map(f)?;
            if *exp {
                let o = DecomposeOrder::from_order(order.order);
                return Ok(passed(print_star(&a_conjugate(&f, &o.principal_floor)?)));
            }
            let a = AffineMap::new(rational(alpha)?, parse_log_linear(beta)?)?;
            Ok(passed(print_series(conj_affine(&a, &f).deviation())))
        }
        Verb::Decompose { source, order } => {
            let o = DecomposeOrder::from_order(order.order);
            let w = word_of(source, &o)?;
            let d = additive_decompose(&w, &o)?;
            let mut report = print_decomposition(&d);
            let p: Vec<String> = d.level1().iter().map(|b| format!("{}:{}", b.scale(), b.level())).collect();
            report.push_str(&format!("scales {}", if p.is_empty() { "none".into() } else { p.join(" ") }));
            if let Ok(lead) = leading_summary(&d) {
                report.push('\n');
                report.push_str(&lead);
            }
            Ok(passed(report))
        }
        Verb::NormalForm { star } => Ok(passed(print_star(&normal_form(&parse_star(read_input(star)?.trim())?)?))),
        Verb::CheckValidity { star, scale, theoretical, terms } => {
            let sigma = rational(scale)?;
            let fam = match (star, theoretical) {
                (_, true) => theoretical_family(*terms),
                (Some(s), false) => Family::from_star(&parse_star(read_input(s)?.trim())?),
                (None, false) => {
                    return Err(Error::Parse { pos: 0, msg: "give a STAR-series or --theoretical".into() })
                }
            };
            let v = validity_check(&fam, &sigma);
            Ok(Outcome { ok: v.is_valid(), report: print_validity(&v) })
        }
        Verb::Order { star, delta } => {
            let s = parse_star(read_input(star)?.trim())?;
            let r = ordering_lower_bound(&s, &rational(delta)?)?;
            Ok(Outcome { ok: r.is_certified(), report: print_lower_bound(&r) })
        }
        Verb::Counterexample { order, numeric } => counterexample(order, numeric),
        Verb::OracleCheck { source, series, star, order, numeric } => {
            let o = DecomposeOrder::from_order(order.order);
            let w = word_of(source, &o)?;
            let affine = w.affine_part()?;
            let report = match (series, star) {
                (Some(s), None) => {
                    let s = parse_series(read_input(s)?.trim())?;
                    let cfg = config(numeric, EvalConfig::level0())?;
                    certify_asymptotics(&w, &Expansion::Level0 { affine: &affine, series: &s }, &cfg)?
                }
                (None, Some(s)) => {
                    let s = parse_star(read_input(s)?.trim())?;
                    let cfg = config(numeric, EvalConfig::level1())?;
                    certify_asymptotics(&w, &Expansion::Level1 { affine: &affine, series: &s }, &cfg)?
                }
                (None, None) => {
                    let d = additive_decompose(&w, &o)?;
                    let cfg = config(numeric, EvalConfig::level1())?;
                    certify_asymptotics(&w, &Expansion::Decomposition(&d), &cfg)?
                }
                _ => return Err(Error::Parse { pos: 0, msg: "give at most one of --series or --star".into() }),
            };
            Ok(Outcome { ok: report.passed(), report: report.to_string() })
        }
        Verb::Flatness { source, order, numeric } => {
            let o = DecomposeOrder::from_order(order.order);
            let w = word_of(source, &o)?;
            let fit = fit_flatness(&w, &config(numeric, EvalConfig::level1())?)?;
            Ok(passed(fit.to_string()))
        }
    }
}

/// Build, decompose, check the theoretical pair, fit flatness, and run the
/// ordering procedure on the Wronskian pair.
fn counterexample(order: &OrderOpt, numeric: &NumericOpt) -> Result<Outcome, Error> {
    let o = DecomposeOrder::from_order(order.order);
    let c = build_counterexample(&o)?;
    let mut r = String::new();
    r.push_str(&format!("word {}\n", c.word));
    let d = additive_decompose(&c.word, &o)?;
    for b in d.level1() {
        r.push_str(&format!("body scale={} p={} terms={}\n", b.scale(), b.level(), b.terms().len()));
    }
    for e in d.escalations().iter().take(1) {
        r.push_str(&format!(
            "escalation scale={} upper_scale={} p={} (count {})\n",
            e.scale,
            e.upper_scale,
            e.level,
            d.escalations().len()
        ));
    }
    if let Some(t) = c.k1.uppers().first().and_then(|u| u.terms().first()) {
        r.push_str(&format!("k1 scale=1/2 leading {}\n", print_term(t)));
    }
    let fam = theoretical_family(12);
    r.push_str(&format!(
        "theoretical k1*k2 at scale 1: {}\n",
        print_validity(&validity_check(&fam, &Rational::from(1)))
    ));
    let grid_default = grid_range(&Rational::from(2), &Rational::from(5), &Rational::from((1, 2)));
    let cfg = config(numeric, EvalConfig::level1().with_grid(grid_default))?;
    match fit_flatness(&c.word, &cfg) {
        Ok(fit) => r.push_str(&format!("flatness sigma={:.6} lambda={:.6} (binary64)\n", fit.sigma, fit.lambda)),
        Err(e) => r.push_str(&format!("flatness error: {e}\n")),
    }
    let pair = wronskian_pair(&c)?;
    let lb = ordering_lower_bound(&pair, &Rational::from((1, 4)))?;
    for line in print_lower_bound(&lb).lines().filter(|l| !l.starts_with("witness ")) {
        r.push_str(line);
        r.push('\n');
    }
    let gap = matches!(lb, LowerBoundReport::GapDetected { validity: Validity::Invalid { .. }, .. });
    r.push_str(if gap { "result GapDetected" } else { "result Certified" });
    Ok(Outcome { report: r, ok: !gap })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.verb) {
        Ok(out) => {
            println!("{}", out.report);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn leading_summary(d: &dulac_core::group::Decomposition) -> Result<String, Error> {
    let r = scale1_leading_term(d)?;
    let what = match &r.leading {
        LeadingTerm::Identity => "identity to truncation order".to_string(),
        LeadingTerm::AffineShift(b) => format!("affine shift {b}"),
        LeadingTerm::Level0 { mu, coeff } => format!("level 0: {coeff}*E({mu})"),
        LeadingTerm::Level1(t) => format!("level 1: {}", print_term(t)),
    };
    Ok(format!("leading {what} sign={}", print_sign(r.sign)))
}
