//! Delegation-aware security policy engine.
//!
//! [`constraint`] parses and evaluates delegation constraints, [`policy`]
//! holds rules and priorities, [`engine`] processes delegation requests,
//! [`consistency`] detects and resolves conflicts, and [`revocation`]
//! maintains the delegation graph and runs revocation schemes.

pub mod audit;
pub mod consistency;
pub mod constraint;
pub mod engine;
pub mod policy;
pub mod revocation;
