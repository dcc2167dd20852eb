//! Simulation and analysis of polarization-entanglement preserving
//! frequency conversion: conversion model, state and process tomography,
//! CHSH analysis and efficiency budget.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chsh;
pub mod config;
pub mod conversion;
pub mod counts;
pub mod efficiency;
pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod quantum;
pub mod report;
pub mod tomography;

pub use error::{Error, Result};
