//! Core algorithms for multi-view provenance graph threat detection.
//!
//! This crate is `no_std`-compatible (with `alloc`); all file formats, the
//! CLI, and persistence live in the companion `provlens` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classifier;
pub mod cotrain;
pub mod event;
pub mod features;
pub mod fusion;
pub mod gnn;
pub mod graph;
pub mod iforest;
pub mod mathx;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod synth;
