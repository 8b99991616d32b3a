//! Runtime for a three-act misinformation-inoculation game.
//!
//! - [`pack`]: scenario packs (parse, validate, the built-in default pack)
//! - [`engine`]: the deterministic per-session state machine and replay
//! - [`sim`]: spread and platform-profit simulation, with an exact oracle
//! - [`assessment`]: the pre/post knowledge instrument

pub mod assessment;
pub mod engine;
pub mod pack;
pub mod rng;
pub mod sim;
