//! Builtin game families.
//!
//! Additive, unanimity and glove games have closed-form Shapley values and
//! serve as oracles. The planted multilingual family gives one additive game
//! per language with designed cross-language structure. The transformer game
//! gates the attention heads of a small untrained model.

pub mod additive;
pub mod dataset;
pub mod external;
pub mod planted;
pub mod simple;
pub mod transformer;

pub use additive::{make_additive_game, AdditiveGameSpec};
pub use dataset::{generate_synthetic_dataset, SyntheticDataset, DEFAULT_SEQ_LEN};
pub use external::{ExternalGame, DEFAULT_TIMEOUT};
pub use planted::{make_planted_family, make_planted_game, PairwiseTerm, PlantedMultilingualSpec};
pub use simple::{make_glove_game, make_unanimity_game};
pub use transformer::{make_transformer_game, transformer_forward, ToyTransformer, ToyTransformerSpec, TransformerGame};
