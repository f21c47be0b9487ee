//! Synthesis, gate costing and semantic simulation of GQIR image-preparation
//! circuits.
//!
//! Three preparation schemes are provided: the plain circuit (one
//! location-controlled NOT per set pixel bit), Boolean-expression compression
//! of that circuit ([`bec`]) and a JPEG-based pipeline that prepares quantized
//! DCT coefficients and decodes them in superposition ([`qjpeg`]).

pub mod bec;
#[doc(hidden)]
pub mod cli;
pub mod costmod;
pub mod error;
pub mod fixedq;
pub mod gqir;
pub mod jpeg;
pub mod pixmap;
pub mod qjpeg;
pub mod report;

pub use error::{Error, Result};
pub use gqir::{Circuit, Gate, GateTally, GqirLayout, GqirState};
pub use jpeg::QuantMatrix;
pub use pixmap::{LoadedImage, PixelImage};
pub use report::Warning;
