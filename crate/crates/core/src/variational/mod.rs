//! The dimension functional of a Lalley-Gatzouras scheme, its maximization,
//! independent oracles, and the frequency function `L(Q)`.

mod frequency;
mod objective;
mod optimizer;
mod oracles;

pub use frequency::{
    canonical_word, dim_of_frequency_limit, dim_of_rational_frequency, dim_of_word, word_composition,
    FrequencyVector, LimitReport, LimitStop, LimitTraceEntry, RationalForm, DEFAULT_MAX_DENOMINATOR,
    FREQUENCY_TOLERANCE,
};
pub use objective::{lg_gradient, lg_objective, tangent_norm, CellWeights, SIMPLEX_TOLERANCE};
pub use optimizer::{maximize_dimension, DimensionReport, OptimizerOptions};
pub use oracles::{grid_search_oracle, mcmullen_oracle, GRID_ORACLE_MAX_ALPHABET};
