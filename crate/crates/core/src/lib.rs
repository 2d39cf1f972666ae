//! Joint replenishment: one shared setup cost `K₀` charged per joint order
//! epoch plus per-commodity EOQ costs `Kᵢ/Tᵢ + Hᵢ·Tᵢ`.
//!
//! [`oracle`] counts joint orders exactly for rational policies. [`relax`]
//! gives the lower bounds every ratio is reported against. The solvers are
//! [`pow2`] (power-of-two and fixed-base), [`evenly`], [`eptas`] and, under
//! resource rows, [`rc`]. [`harness`] dispatches them by name and runs seeded
//! experiments; [`verify`] backs `jrp verify`.

pub mod eptas;
pub mod error;
pub mod evenly;
pub mod harness;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod pow2;
pub mod rc;
pub mod rational;
pub mod relax;
pub mod verify;
