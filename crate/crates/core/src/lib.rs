//! torsep: computational machinery for mapping tori of free-group
//! endomorphisms.
//!
//! The crate evaluates free-group endomorphisms as word maps on tuples of
//! 2x2 matrices over truncated local rings Z/p^k (and their unramified
//! extensions GR(p^k, tau)), finds periodic points of those maps, lifts
//! periods across precision levels, and uses the resulting finite wreath
//! product quotients to certify that elements of the mapping torus
//! HNN_phi(F_k) are nontrivial.
//!
//! Module map:
//!
//! * [`freegroup`] — reduced words, endomorphisms, abelianization, and
//!   subgroup membership via folded graphs with preimage recovery.
//! * [`hnn`] — mapping-torus elements and their canonical `t^-m u t^n`
//!   normal forms.
//! * [`localring`] — the rings Z/p^k and GR(p^k, tau) with precision
//!   reduction maps.
//! * [`matgroup`] — 2x2 matrices over those rings or over exact integers;
//!   word evaluation with adjugate-based inverses; the induced self-map of
//!   matrix tuples.
//! * [`dynamics`] — orbit/cycle detection, period towers across precisions,
//!   and periodic-point search.
//! * [`lifting`] — Jacobians of iterated word maps via dual numbers,
//!   divided differences, and the congruence checks that drive period
//!   lifting.
//! * [`wreath`] — wreath-product quotients G wr C_l, the homomorphisms
//!   sending the stable letter to the cyclic shift, and separation
//!   certificates.

pub mod dynamics;
pub mod freegroup;
pub mod hnn;
pub mod lifting;
pub mod localring;
pub mod matgroup;
pub mod wreath;

pub use freegroup::{Endo, Word};
pub use hnn::{HnnLetter, HnnWord, NormalForm};
pub use localring::{Ring, RingElem, RingSpec};
pub use matgroup::{Mat2, MatTuple};
