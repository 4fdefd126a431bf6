use std::hash::Hasher;

use fnv::FnvHasher;

/// Identifier of the feature hash, recorded in model manifests.
pub const HASH_ID: &str = "fnv1a64";

/// 64-bit FNV-1a over `table ‖ 0x1F ‖ feature`.
pub fn feature_hash(table: &str, feature: &str) -> u64 {
    let mut hasher = FnvHasher::default();
    hasher.write(table.as_bytes());
    hasher.write(&[0x1f]);
    hasher.write(feature.as_bytes());
    hasher.finish()
}
