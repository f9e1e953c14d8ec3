//! Data-driven ensembles of weighted belief-propagation decoders.
//!
//! The crate covers the whole pipeline: parity-check matrices and Tanner
//! graphs ([`code`]), BPSK/AWGN simulation ([`channel`]), unrolled weighted
//! BP ([`bp`]) and its training ([`training`]), Berlekamp–Massey decoding of
//! BCH codes ([`hdd`]), error-space partitions ([`partition`]), the gated
//! ensemble ([`ensemble`]) and Monte Carlo evaluation ([`eval`]).

pub mod bp;
pub mod builtin;
pub mod channel;
pub mod code;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod hdd;
pub mod partition;
pub mod persist;
pub mod training;

pub use error::{Error, Result};
