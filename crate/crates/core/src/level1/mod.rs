//! Level-1 calculus: generalized exponents, graded coefficients,
//! STAR-series, normal forms and the ordering procedure.

mod coeff;
mod counterexample;
mod exponent;
mod normal;
mod order;
mod star;

pub use coeff::K1Coefficient;
pub use counterexample::{
    build_counterexample, scale1_leading_term, theoretical_family, theoretical_pair, wronskian_pair, Counterexample,
    LeadingTerm, LeadingTermReport,
};
pub use exponent::TransExponent;
pub use normal::{compare_terms, normal_form, normal_form_to, TermOrder, DEFAULT_COEFF_FLOOR};
pub use order::{
    ordering_lower_bound, term_derivative, validity_check, wronskian, Family, LowerBoundReport, TermDerivative,
    Validity,
};
pub use star::{Accuracy, Level1Term, Ray, StarSeries};
