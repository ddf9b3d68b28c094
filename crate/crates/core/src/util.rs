//! Small shared helpers: stable hashing, seed derivation, numeric formatting.

/// FNV-1a 64-bit; stable across platforms and releases, used for config
/// hashes and seed derivation.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Derive an independent stream seed from a base seed and a tag.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + tag.len());
    bytes.extend_from_slice(&base.to_le_bytes());
    bytes.extend_from_slice(tag.as_bytes());
    fnv1a_64(&bytes)
}

/// Format with 6 significant digits in plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
