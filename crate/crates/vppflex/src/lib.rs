//! Stochastic power flexibility evaluation for virtual power plants.
//!
//! The library aggregates the capabilities of distributed energy resources
//! (CHP, PV, storage, wind) behind one point of common coupling into three
//! artifacts usable by an upstream dispatcher:
//!
//! * a confidence surface over PCC active/reactive power (the stochastic
//!   power flexibility range, [`pfr`]),
//! * a battery-plus-generator style multi-period envelope (the time-coupling
//!   flexibility, [`tcf`]),
//! * an aggregated piecewise-linear cost curve ([`costagg`]).
//!
//! Uncertainty in renewable output and load is carried by Gaussian mixture
//! models ([`uncert`]); network limits enter through a linearized multiphase
//! load-flow model ([`netmodel`]) and are enforced as chance constraints
//! ([`ccopf`]). A scenario-based Monte-Carlo oracle ([`mcoracle`]) provides
//! ground truth for verification.
//!
//! All quantities are in per-unit of the network's base power/voltage unless
//! a field says otherwise.

pub mod ccopf;
pub mod costagg;
pub mod cpwl;
pub mod derfleet;
pub mod fixtures;
pub mod lpcore;
pub mod mcoracle;
pub mod netmodel;
pub mod pfr;
pub mod tcf;
pub mod uncert;
pub mod vpp;

pub(crate) mod kmeans;
pub(crate) mod par;
