//! Coded packet transport over disjoint paths.
//!
//! `k` data packets are encoded with a non-systematic Reed-Solomon code over
//! GF(2^q) into `n` coded packets, which are split into `l` stripes, one per
//! disjoint path. Any `k` coded packets recover the data, so the loss of a
//! whole path can be survived, while a single tapped path yields fewer than
//! `k` packets and none of them in the clear.
//!
//! - [`galois`]: field arithmetic.
//! - [`rs_code`]: the Vandermonde code and its erasure decoder.
//! - [`transport`]: payload framing, striping and the stripe file format.
//! - [`analysis`]: overhead bounds, failure probabilities, delay model.
//! - [`channel_sim`]: Monte Carlo loss simulation.
//! - [`adversary`]: single-path eavesdropper brute force.
//! - [`cli`]: the `cpt` command-line tool.

pub mod adversary;
pub mod analysis;
pub mod channel_sim;
pub mod cli;
pub mod error;
pub mod galois;
pub mod rs_code;
pub mod transport;

pub use error::{AnalysisError, AttackError, CodeError, FieldError, SimError, TransportError};
pub use galois::{Field, FieldSpec, Symbol};
pub use rs_code::{CodeParams, CodedSet, GeneratorMatrix, PacketSet};
pub use transport::{CptConfig, StripeFile, StripePlan};
