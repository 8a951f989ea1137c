// FNV-1a, 64-bit. Stable across platforms and compiler versions, unlike
// std's DefaultHasher, so persisted models stay valid.
const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Hashes each feature string into `[0, dim)`, sorted and deduplicated.
pub(crate) fn hash_features<S: AsRef<str>>(features: &[S], dim: usize) -> Vec<usize> {
    let mut out: Vec<usize> = features
        .iter()
        .map(|f| (fnv1a(f.as_ref().as_bytes()) % dim as u64) as usize)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
