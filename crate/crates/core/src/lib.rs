//! Link-level simulator and analysis library for the K-user single-antenna
//! interference channel with inter-symbol interference.
//!
//! The library covers:
//!
//! * [`numerics`] — IDFT bases, circulant diagonalization, convolution
//!   matrices, and QR/SVD factorization contracts;
//! * [`channel`] — seeded Rayleigh tapped-delay-line sampling and the
//!   effective per-subblock matrices created by cyclic-prefix processing;
//! * [`phy`] — the interference-suppressing multi-carrier transmit/receive
//!   chains, layered zero-forcing rates, water-filling with per-link
//!   transmitter CSI, and the small fold-combiner receiver;
//! * [`dof`] — exact-rational degrees-of-freedom formulas and the slope
//!   estimator that ties them to Monte-Carlo sweeps;
//! * [`sim`] — the seeded, reproducible sweep harness with CSV output and a
//!   built-in validation suite.

pub mod channel;
pub mod dof;
pub mod error;
pub mod numerics;
pub mod phy;
pub mod sim;

pub use channel::{ImpulseResponse, LargeScaleConfig, NetworkChannel, TapLengths};
pub use dof::DofQuery;
pub use error::{Error, Result};
pub use numerics::{CMat, CVec};
pub use phy::{DecodedFrame, FrameConfig, SubcarrierPolicy, SymbolGrid, Waterfill};
pub use sim::{ExperimentConfig, Scheme, SnrGrid, SweepResult, TapProfile};
