//! Training-free speculative decoding with phrase pools.
//!
//! The crate is organized bottom-up:
//!
//! * [`lm`]: the model contract and forward accounting,
//! * [`models`]: counter, n-gram and perturbed toy models,
//! * [`pool`]: the phrase pool with eviction and persistence,
//! * [`drafting`]: phrase-level drafting with a lookahead window,
//! * [`verification`]: single-forward verification of a draft plus
//!   lengthening suffixes, harvesting and suffix correction,
//! * [`engines`]: complete generation loops and the speedup model.
//!
//! ```
//! use ouroboros::engines::{generate_ouroboros, generate_vanilla, EngineConfig};
//! use ouroboros::models::CounterModel;
//!
//! let model = CounterModel::new(10);
//! let cfg = EngineConfig { max_new: 12, ..EngineConfig::default() };
//! let mut pool = cfg.new_pool();
//! let fast = generate_ouroboros(&model, &model, &[3], &cfg, &mut pool).unwrap();
//! let slow = generate_vanilla(&model, &[3], &cfg).unwrap();
//! assert_eq!(fast.tokens, slow.tokens);
//! assert!(fast.metrics.target_forwards < slow.metrics.target_forwards);
//! ```

pub mod drafting;
pub mod engines;
pub mod error;
pub mod lm;
pub mod models;
pub mod pool;
pub mod verification;

pub use error::{Error, Result};
pub use lm::{Distribution, LanguageModel, Scorer, Token};
pub use pool::{Phrase, PhrasePool};
