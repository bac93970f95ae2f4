//! Interleaved entropy coding.
//!
//! - [`ans`]: generic streaming ANS over any coding-function pair, precursor
//!   sets and b-uniqueness checks.
//! - [`rans`]: rANS over a quantized static order-0 model, with byte-wise and
//!   word-wise renormalization.
//! - [`interleave`]: N independent rANS coders sharing one digit stream, raw
//!   bypass bits, and the `IEC1` container format.
//! - [`lanes`]: a lane-parallel coder whose streams are identical to the
//!   serial interleaved coder in word16 mode.
//! - [`mux`]: merging separately coded streams into one by replaying an
//!   instrumented decoder.

pub mod ans;
pub mod error;
pub mod interleave;
pub mod lanes;
pub mod mux;
pub mod rans;

pub use error::{Error, Result};
pub use interleave::{decode_interleaved, encode_interleaved, StreamContainer};
pub use lanes::{decode_lanes_full, encode_lanes_full};
pub use rans::{RenormVariant, SymbolTable, VariantTag};
