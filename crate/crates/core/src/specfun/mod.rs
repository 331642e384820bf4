//! Special functions and quadrature behind the analytic bounds.

mod mgf;
mod quadrature;
mod tricomi;

pub use mgf::{
    hyp2f0_neg, hyp2f0_neg_asymptotic, hyp2f0_neg_with, mgf_gaussian_keyhole,
    mgf_nakagami_iid, mgf_nakagami_keyhole, MgfQuadrature,
};
pub use quadrature::{laguerre_rule, legendre_rule, QuadratureRule, RuleKind};
pub use tricomi::tricomi_u;

pub(crate) use quadrature::cached as cached_rule;
