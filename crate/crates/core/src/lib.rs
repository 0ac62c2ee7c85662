//! Renewable-energy-aware placement of user-related baseband functions in a
//! hybrid cloud RAN.
//!
//! Edge clouds (ECs) and a central cloud (CC) each run digital units (DUs)
//! powered by the grid, a solar panel and a battery. Every user's chain of
//! user-related functions (URFs) is split between its own EC and the CC; the
//! goal is to minimise the daily operational expenditure (grid purchases
//! minus sales of surplus solar energy).
//!
//! The crate provides:
//! * [`domain`]: scenario types, energy formulas, the OpEx evaluator and a
//!   full constraint validator.
//! * [`traffic`] and [`supply`]: seeded traffic, solar and tariff inputs.
//! * [`dispatch`]: battery dispatch (reservation-based green use, greedy use,
//!   overflow selling) and an exact min-cost-flow dispatch oracle.
//! * [`heuristic`]: the online placement heuristic and a green-blind baseline.
//! * [`exact`]: MILP construction, LP text export/import, solution
//!   certification and a brute-force oracle for tiny instances.
//! * [`harness`]: configuration, experiment orchestration and figure CSVs.

pub mod dispatch;
pub mod domain;
pub mod error;
pub mod exact;
pub mod flow;
pub mod harness;
pub mod heuristic;
pub mod seed;
pub mod supply;
pub mod traffic;
pub mod validate;

pub use error::{Error, Result};
