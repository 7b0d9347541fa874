//! Watermark attack laboratory.
//!
//! Embeds and detects pixel-level invisible watermarks, runs baseline and
//! regeneration attacks against them, and checks empirical detector
//! tradeoffs against the certified-removal bounds in [`theory`].

pub mod attacks;
pub mod cli;
pub mod detection;
pub mod error;
pub mod harness;
pub mod imagecore;
pub mod metrics;
pub mod rng;
pub mod theory;
pub mod transforms;
pub mod watermarks;

pub use error::{Error, Result};
pub use imagecore::{load_image, save_image, Image};
pub use rng::RngState;
