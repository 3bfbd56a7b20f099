//! Exact counting of solution sets for algebraic and differential systems.
//!
//! The crate works in the ring Z[oo, N0], where `oo` stands for the
//! cardinality of an affine line over an algebraically closed field and `N0`
//! for a countably infinite excluded set. On the algebraic side it offers
//!
//! * sparse multivariate polynomials over exact coefficient fields
//!   ([`poly`]), including pseudo-division and subresultants,
//! * simple (weakly triangular) systems with equations, inequations and
//!   cofinite exclusion markers ([`sigma`]),
//! * Thomas decomposition of finite systems into disjoint simple systems
//!   and counting of constructible sets ([`thomas`]),
//! * the counting ring itself with cardinality estimates and a guarded
//!   set-comparison decision ([`counting`]).
//!
//! On the differential side it adds
//!
//! * differential polynomials over Q(x1..xn) with orderly rankings, Ritt
//!   reduction and power series evaluation maps ([`diffalg`]),
//! * Kolchin dimension functions, dimension polynomials and differential
//!   invariants from leader sets ([`dimension`]),
//! * counting sequences and differential counting polynomials for simple
//!   differential systems, stratified counting and truncation cross-checks
//!   ([`diffcount`]),
//! * the text grammar shared by files, the command line front end and the
//!   browser demo ([`textio`]).
//!
//! All arithmetic is exact (big rationals); every operation is
//! deterministic, so rendered output is byte-identical across runs.

pub mod counting;
pub mod diffalg;
pub mod diffcount;
pub mod dimension;
pub mod poly;
pub mod sigma;
pub mod textio;
pub mod thomas;

pub use counting::{CountingPolynomial, CountingSequence, DifferentialCountingPolynomial};
pub use diffalg::{DiffPoly, DiffVar, DifferentialSystem, MultiIndex};
pub use diffcount::{Manifest, SimpleDifferentialSystem};
pub use dimension::LeaderSet;
pub use poly::{Poly, Rat, Var};
pub use sigma::SigmaSystem;
pub use textio::{parse_dsys, parse_lead, parse_manifest, parse_sys, ParseError};
pub use thomas::{count_constructible, decompose, Decomposition};
