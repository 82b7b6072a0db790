//! Feature hashing.
//!
//! All feature indices are produced by MurmurHash3 (x86, 32-bit variant)
//! seeded with a per-namespace salt, then masked down to the configured
//! table width. The algorithm is fixed: hashed indices must not change
//! across platforms, compiler versions, or releases, or saved models
//! would silently stop matching their inputs.

/// MurmurHash3 x86 32-bit.
pub fn hash_bytes(data: &[u8], seed: u32) -> u32 {
    const C1: u32 = 0xcc9e2d51;
    const C2: u32 = 0x1b873593;

    let mut h = seed;
    let mut chunks = data.chunks_exact(4);
    for chunk in &mut chunks {
        let mut k = u32::from_le_bytes(chunk.try_into().unwrap());
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
        h = h.rotate_left(13).wrapping_mul(5).wrapping_add(0xe6546b64);
    }

    let tail = chunks.remainder();
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, &b) in tail.iter().enumerate() {
            k ^= (b as u32) << (8 * i);
        }
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
    }

    h ^= data.len() as u32;
    h ^= h >> 16;
    h = h.wrapping_mul(0x85ebca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2ae35);
    h ^= h >> 16;
    h
}

/// Hash a numeric raw feature id (little-endian bytes of the id).
pub fn hash_id(raw: u64, seed: u32) -> u32 {
    hash_bytes(&raw.to_le_bytes(), seed)
}

/// Combine two hashed indices into one (for feature interactions).
/// Boost-style hash_combine; order-sensitive by design.
pub fn combine(a: u32, b: u32) -> u32 {
    a ^ b
        .wrapping_mul(0x9e3779b9)
        .wrapping_add(a << 6)
        .wrapping_add(a >> 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen outputs of the published algorithm; computed once with an
    // independent implementation and pinned here.
    #[test]
    fn reference_vectors() {
        assert_eq!(hash_bytes(b"", 0), 0x0000_0000);
        assert_eq!(hash_bytes(b"", 1), 0x514e_28b7);
        assert_eq!(hash_bytes(b"", 0xffff_ffff), 0x81f1_6f39);
        assert_eq!(hash_bytes(b"test", 0), 0xba6b_d213);
        assert_eq!(hash_bytes(b"abc", 0), 0xb3dd_93fa);
        assert_eq!(hash_bytes(b"Hello, world!", 0), 0xc036_3e43);
        assert_eq!(hash_bytes(b"Hello, world!", 0x9747_b28c), 0x2488_4cba);
        assert_eq!(hash_bytes(b"aaaa", 0x9747_b28c), 0x5a97_808a);
        assert_eq!(hash_bytes(b"w=cake", 42), 0x87c3_c540);
    }

    #[test]
    fn tail_lengths_all_covered() {
        // 1-, 2- and 3-byte tails take distinct code paths.
        let outs: Vec<u32> = [&b"a"[..], b"ab", b"abc", b"abcd", b"abcde"]
            .iter()
            .map(|s| hash_bytes(s, 7))
            .collect();
        for i in 0..outs.len() {
            for j in (i + 1)..outs.len() {
                assert_ne!(outs[i], outs[j]);
            }
        }
    }

    #[test]
    fn salt_changes_output() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut same = 0usize;
        let n = 100_000;
        for _ in 0..n {
            let x: u64 = rng.gen();
            if hash_id(x, 0x2d06_aa13) == hash_id(x, 0xa5fc_a2ce) {
                same += 1;
            }
        }
        // distinct salts must disagree on at least 99% of inputs
        assert!(same < n / 100, "salted hashes collided {same} times");
    }

    #[test]
    fn masked_uniformity_chi_square() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        const BUCKETS: usize = 1 << 10;
        let mut counts = [0u32; BUCKETS];
        let n = 1_000_000usize;
        for _ in 0..n {
            let x: u64 = rng.gen();
            counts[(hash_id(x, 0) & (BUCKETS as u32 - 1)) as usize] += 1;
        }
        let expected = n as f64 / BUCKETS as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // upper 0.001 quantile of chi-square with 1023 degrees of freedom
        assert!(stat < 1168.497, "chi-square statistic too large: {stat}");
    }

    #[test]
    fn combine_is_order_sensitive() {
        assert_ne!(combine(1, 2), combine(2, 1));
        assert_eq!(combine(123, 456), combine(123, 456));
    }
}
