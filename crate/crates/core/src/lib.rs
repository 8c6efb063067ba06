//! High-precision biorthogonal families to real and complex exponentials,
//! with control-cost estimates for one-dimensional parabolic systems.

pub mod mp_numerics;
pub mod sequence_core;
pub mod example_sequences;
pub mod gram_biorthogonal;
pub mod guichal_bounds;
pub mod paley_wiener;
pub mod control_cost;
