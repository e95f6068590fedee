//! Adiabatic vacuum states of the massive Klein-Gordon field on closed
//! Robertson-Walker spacetimes, built mode by mode on the three-sphere.
//!
//! The modules follow the construction bottom-up: [`jet`] and [`background`]
//! supply exact time derivatives of the geometry, [`adiabatic`] runs the
//! generalized-frequency recursion, [`modes`] integrates the mode equation,
//! [`states`] and [`bogoliubov`] compare quasifree states, [`detector`]
//! computes the response of a comoving detector and [`cli`] drives whole
//! experiment suites from a config file.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod background;
pub mod bogoliubov;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod fit;
pub mod jet;
pub mod modes;
pub mod output;
pub mod states;
pub mod suites;

pub use error::{Error, Result};
