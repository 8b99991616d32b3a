use std::sync::OnceLock;

use super::{parse_pack, ScenarioPack};

/// The shipped pack document, embedded at build time.
pub const DEFAULT_PACK_JSON: &str = include_str!("../../packs/default_pack.json");

/// The built-in three-act pack. Parsed once and cloned on each call.
pub fn default_pack() -> ScenarioPack {
    static PACK: OnceLock<ScenarioPack> = OnceLock::new();
    PACK.get_or_init(|| {
        parse_pack(DEFAULT_PACK_JSON.as_bytes())
            .unwrap_or_else(|e| panic!("shipped default pack does not parse: {e}"))
    })
    .clone()
}
