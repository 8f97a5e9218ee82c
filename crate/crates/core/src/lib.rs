//! Lidar navigation with an explainable TD3 policy.
//!
//! The crate bundles a 2D lidar world ([`world`]), a from-scratch MLP actor
//! ([`policy`]), a TD3 trainer ([`td3`]), Vanilla Gradient attribution
//! projected onto scene objects ([`attribution`]) and the ranking-study
//! harness ([`study`]).

pub mod world;
pub mod policy;
pub mod td3;
pub mod attribution;
pub mod study;
