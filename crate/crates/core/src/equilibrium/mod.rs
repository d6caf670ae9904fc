//! Per-state equilibrium machinery: best-response sets of marginal Q-rows,
//! bi-matrix Nash solvers and their certification.

pub mod best_response;
pub mod bimatrix;
pub mod lemke_howson;
pub mod selector;
pub mod support_enumeration;

pub use best_response::{best_response_set, BestResponseSet, DEFAULT_TIE_TOL};
pub use bimatrix::{pure_nash_enumeration, verify_bimatrix_nash, BimatrixGame};
pub use lemke_howson::lemke_howson;
pub use selector::{
    nash_q_value, EquilibriumSelector, FirstSupportSelector, LemkeHowsonSelector, NashValue, SelectorKind,
};
pub use support_enumeration::support_enumeration;
