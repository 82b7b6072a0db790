//! Randomized invariant checks. Each property here is something the rest
//! of the system silently relies on; none of them depend on a particular
//! corpus or seed, so they are tested over generated inputs.

use l2s::conll::{heads_projective, read_sentences, write_sentences};
use l2s::datagen::{tagging_corpus, treebank};
use l2s::engine::MixtureSchedule;
use l2s::features::FeatureSpace;
use l2s::hash::{hash_bytes, hash_id};
use l2s::tagger::{read_tagged, write_tagged};
use proptest::prelude::*;

proptest! {
    // Saved models only work if the hash is a pure function of its input;
    // masking must never produce an index outside the weight table.
    #[test]
    fn hashing_is_deterministic_and_masked(
        data in proptest::collection::vec(any::<u8>(), 0..64),
        seed in any::<u32>(),
        bits in 1u8..=24,
    ) {
        let h = hash_bytes(&data, seed);
        prop_assert_eq!(h, hash_bytes(&data, seed));
        let mask = (1u32 << bits) - 1;
        prop_assert!(h & mask <= mask);
        prop_assert!((1u64 << bits) > u64::from(h & mask));
    }

    // Uniformity must hold for every namespace salt, not just the ones a
    // fixed test happens to pick: masked ids spread evenly over buckets.
    #[test]
    fn masked_buckets_stay_uniform_for_any_salt(seed in any::<u32>(), base in any::<u64>()) {
        const BUCKETS: usize = 64;
        const SAMPLES: u64 = 4096;
        let mut counts = [0u32; BUCKETS];
        for i in 0..SAMPLES {
            let id = base.wrapping_add(i);
            counts[(hash_id(id, seed) as usize) & (BUCKETS - 1)] += 1;
        }
        let expected = SAMPLES as f64 / BUCKETS as f64;
        let stat: f64 = counts
            .iter()
            .map(|&c| {
                let d = f64::from(c) - expected;
                d * d / expected
            })
            .sum();
        // far beyond the 1e-9 quantile of chi-square with 63 degrees of
        // freedom; a correct hash sits near 63
        prop_assert!(stat < 170.0, "chi-square statistic {stat} for salt {seed}");
    }

    // The quadratic/cubic expansion must agree with its closed-form count
    // and never emit an index past the table mask.
    #[test]
    fn expansion_matches_its_closed_form_count(
        bits in 4u8..=20,
        counts in proptest::collection::vec(0usize..5, 3),
        raws in proptest::collection::vec(any::<u64>(), 15),
    ) {
        let mut space = FeatureSpace::new(bits);
        let a = space.namespace("a");
        let b = space.namespace("b");
        let c = space.namespace("c");
        space.pair("a", "b");
        space.triple("a", "b", "c");

        let mut vector = space.vector();
        let mut next = raws.iter().copied();
        for (ns, &n) in [a, b, c].iter().zip(&counts) {
            for _ in 0..n {
                vector.add_id(&space, *ns, next.next().unwrap());
            }
        }

        let singles: usize = counts.iter().sum();
        let want = singles + counts[0] * counts[1] + counts[0] * counts[1] * counts[2];
        prop_assert_eq!(vector.expanded_count(&space), want);

        let mut seen = 0usize;
        let mask = space.mask();
        vector.for_each_expanded(&space, |idx, value| {
            assert!(idx <= mask, "index {idx} escaped mask {mask}");
            assert_eq!(value, 1.0);
            seen += 1;
        });
        prop_assert_eq!(seen, want);
    }

    // The rollin mixture is a probability for every alpha, decays
    // monotonically, and the flipped form is its exact complement.
    #[test]
    fn mixture_schedule_is_a_monotone_probability(
        alpha in 0.0f64..=1.0,
        steps in proptest::collection::vec(0u64..1_000_000, 1..20),
    ) {
        let plain = MixtureSchedule { alpha, flipped: false };
        let flipped = MixtureSchedule { alpha, flipped: true };
        let mut ordered = steps.clone();
        ordered.sort_unstable();
        let mut last = f64::INFINITY;
        for &t in &ordered {
            let p = plain.reference_probability(t);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= last);
            prop_assert!((p + flipped.reference_probability(t) - 1.0).abs() < 1e-12);
            last = p;
        }
    }

    // Generated treebanks are always projective (the parser's reference
    // policy requires it) and survive a write/read/write cycle unchanged.
    #[test]
    fn treebanks_round_trip_through_conll(seed in any::<u64>(), n in 1usize..20) {
        let bank = treebank(n, seed);
        prop_assert_eq!(bank.len(), n);
        for sentence in &bank {
            prop_assert!(heads_projective(&sentence.heads()));
        }

        let mut first = Vec::new();
        write_sentences(&mut first, &bank).unwrap();
        let back = read_sentences(first.as_slice()).unwrap();
        prop_assert_eq!(back.len(), n);
        let mut second = Vec::new();
        write_sentences(&mut second, &back).unwrap();
        prop_assert_eq!(first, second);
    }

    // Two-column tagging files preserve every token and tag exactly.
    #[test]
    fn tagged_corpora_round_trip_through_two_columns(seed in any::<u64>(), n in 1usize..20) {
        let corpus = tagging_corpus(n, seed);
        let mut bytes = Vec::new();
        write_tagged(&mut bytes, &corpus).unwrap();
        let back = read_tagged(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, corpus);
    }
}
