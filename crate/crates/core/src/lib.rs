//! Early rumor detection over tweet streams.
//!
//! The pipeline windows each event on its burst, extracts per-hour feature
//! frames (text, Twitter, user, diffusion-model fits, crowd and credibility
//! ensembles), stacks them into a time-series vector and classifies events
//! as rumor or news with a random forest or an RBF SVM.

#![allow(clippy::needless_range_loop)]

pub mod classifier;
pub mod credibility;
pub mod dsts;
pub mod ensemble;
pub mod epi;
pub mod features;
pub mod ingestion;
pub mod pipeline;
pub mod synth;
pub mod text;
