//! Gadget synthesis: derivations of pinning unaries, arity reductions and
//! hardness targets, each recorded as a replayable chain.

pub mod arity;
pub mod chain;
pub mod delta;
pub mod hardness;
pub mod pair;
pub mod series;

pub use chain::{
    ensure_verified, verify_chain, ChainBuilder, ChainReport, GadgetChain, Reg, Step, StepOp,
    StepReport, DEFAULT_M_RANGE,
};
pub use series::{delta_series_from_unary, xor_series, PConvergenceSeries, SeriesCheck};
pub use arity::reduce_arity;
pub use delta::{derive_delta, DeltaDerivation};
pub use hardness::hardness_gadget;
pub use pair::pair_hardness_gadget;
