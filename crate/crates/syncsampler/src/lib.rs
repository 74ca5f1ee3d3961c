//! Projection-synchronized diffusion sampling over analytic denoisers.
//!
//! The crate implements a family of reverse-diffusion samplers — plain DDIM
//! with parametric stochasticity, least-squares diffusion synchronization
//! across views, score-distillation updates, stochastic synchronization with
//! multi-step clean-sample solves and alternating non-overlapping views,
//! DDIM inversion, and noise-and-refine editing — all over pluggable
//! denoisers (closed-form Gaussian mixtures or a remote HTTP endpoint) and
//! canonical-space projections (equirectangular panorama, ring, masked
//! image).
//!
//! Everything is deterministic given `(config, seed)`: all randomness flows
//! through keyed counter streams ([`rng`]), so results are byte-identical
//! regardless of thread count.
//!
//! Start with the `examples/` directory: each major capability has a
//! runnable example (`cargo run --example panorama`, `--example inpainting`,
//! ...). The `syncsampler` binary exposes the same tasks behind a small CLI.

pub mod artifact;
pub mod config;
pub mod denoise;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod project;
pub mod remote;
pub mod rng;
pub mod run;
pub mod sample;

pub use denoise::{Denoiser, Gmm, Prediction};
pub use diffusion::{outer_grid, Schedule, SigmaPolicy};
pub use error::{Error, Result};
pub use project::{Projector, View};
