//! Implementation and cryptanalysis toolkit for a chaotic image cipher built
//! on the 2D Logistic-adjusted-Sine map, whose keystream is seeded from the
//! plain-image's information entropy.
//!
//! The crate has two faces:
//!
//! * the cipher itself ([`lasm`], [`keystream`], [`cipher`]): permutation,
//!   gray-level shift and entropy-driven diffusion, faithful to the published
//!   procedure including its floating-point conversions, and
//! * the analysis side ([`attack`], [`precision`], [`metrics`]): a
//!   chosen-plaintext equivalent-key recovery against the one-round cipher,
//!   functional-graph tooling for the map under reduced precision, and the
//!   usual image-security metrics.
//!
//! All chaotic arithmetic is IEEE-754 binary64; the `ceil(x * 10^k) mod D`
//! conversions are evaluated exactly in integer arithmetic ([`numeric`]).

pub mod attack;
pub mod cipher;
pub mod error;
pub mod image;
pub mod keystream;
pub mod lasm;
pub mod metrics;
pub mod numeric;
pub mod precision;

pub use error::{Error, Result};
pub use image::Image;
pub use keystream::ModulusConvention;
pub use lasm::SecretKey;
