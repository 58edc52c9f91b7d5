//! Exact computations in quantum Grothendieck rings of quantum loop algebras
//! through quantum cluster algebras.
//!
//! The crate is organised bottom-up:
//!
//! * [`rootdata`] — Cartan data, Weyl group actions and the inverse quantum
//!   Cartan matrix;
//! * [`qtorus`] — quantum tori with exact Laurent coefficients in `t^{1/2}`,
//!   including the quantum torus `Y_t`;
//! * [`qdatum`] — Q-data, adapted sequences and the repetition quiver;
//! * [`qcluster`] — compatible pairs, seeds, mutations, moves and degrees;
//! * [`qgroth`] — KR monomials, truncation and the quantum T-system;
//! * [`klalg`] — Frenkel–Mukhin q-characters, `F_t`, screening membership
//!   and the Kazhdan–Lusztig triangularization producing `L_t(m)`;
//! * [`subst`] — substitution formulas transporting (q,t)-characters between
//!   two quantum loop algebras with the same unfolded diagram;
//! * [`verify`] — the ten self-checking acceptance suites shared by the test
//!   harness and the `qgr verify` command.

pub mod error;
pub mod klalg;
pub mod qdatum;
pub mod qgroth;
pub mod qcluster;
pub mod qtorus;
pub mod rootdata;
pub mod subst;
pub mod verify;

pub use error::{Error, Result};
