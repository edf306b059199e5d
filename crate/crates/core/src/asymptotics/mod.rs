//! Special functions, singular expansions and the Φ(2+ε) expansion.

pub mod fit;
pub mod lemma42;
pub mod quadrature;
pub mod special;
pub mod expansion;

pub use expansion::{
    fit_mu, fit_mu_basis, i_singular, main_expansion, main_expansion_without_cubic_logs, mu_expansion, paper_b, paper_c, ExpansionCoefficients, FitBasis, FitWeighting, Provenance,
};
pub use lemma42::{lemma42_integral, lemma42_singular};
pub use special::gamma_and_derivative;
