use std::collections::{BTreeSet, HashMap, HashSet};

use proptest::prelude::*;

use topictrack::corpus::{
    combined_distribution, flatten_tree, parse_topic_slices, truncate_topic, write_topic_slices,
    Topic, TopicSlice, WeightedToken,
};
use topictrack::divergence::{
    js_divergence, score_matrix, semantic_divergence, Method, ScoreMatrix,
};
use topictrack::embedding::{load_vectors, topic_embedding, write_vectors, EmbeddingStore};
use topictrack::tracker::{categorize_overlap, greedy_match};

const VOCAB: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];

fn vocab_store() -> EmbeddingStore {
    let rows = VOCAB.iter().enumerate().map(|(i, t)| {
        let v: Vec<f32> = (0..4)
            .map(|k| {
                (((i * 7 + k * 3) % 11) as f32 - 5.0) / 4.0 + if k == i % 4 { 1.0 } else { 0.0 }
            })
            .collect();
        (*t, v)
    });
    EmbeddingStore::from_rows(4, rows).unwrap()
}

fn arb_tokens(max: usize) -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0..VOCAB.len(), 0.001f64..10.0), 1..max)
}

fn arb_topic(id: &'static str) -> impl Strategy<Value = Topic> {
    (
        arb_tokens(8),
        prop::collection::vec((0..VOCAB.len(), 0.0f64..5.0), 0..4),
    )
        .prop_map(move |(words, ents)| {
            let words = words
                .into_iter()
                .map(|(i, w)| WeightedToken::new(VOCAB[i], w).unwrap())
                .collect();
            let ents = ents
                .into_iter()
                .map(|(i, w)| {
                    WeightedToken::new(format!("{} {}", VOCAB[i], VOCAB[(i + 1) % VOCAB.len()]), w)
                        .unwrap()
                })
                .collect();
            Topic::new(id, 1, words, ents).unwrap()
        })
}

fn arb_tree() -> impl Strategy<Value = TopicSlice> {
    prop::collection::vec((1u32..5, arb_tokens(4)), 1..12).prop_map(|specs| {
        let topics = specs
            .into_iter()
            .enumerate()
            .map(|(i, (level, words))| {
                let words = words
                    .into_iter()
                    .map(|(j, w)| WeightedToken::new(VOCAB[j], w).unwrap())
                    .collect();
                Topic::new(format!("t{i:02}"), level, words, vec![]).unwrap()
            })
            .collect();
        TopicSlice::new("s", topics).unwrap()
    })
}

/// Scores drawn from a coarse grid so ties are common; `None` is incomparable.
fn arb_matrix() -> impl Strategy<Value = ScoreMatrix> {
    (1usize..=8, 1usize..=8)
        .prop_flat_map(|(r, c)| {
            prop::collection::vec(
                prop::collection::vec(
                    prop::option::weighted(0.9, (0u32..12).prop_map(|k| k as f64 * 0.05)),
                    c,
                ),
                r,
            )
        })
        .prop_map(|scores| {
            let rows = (0..scores.len()).map(|i| format!("r{i}")).collect();
            let cols = (0..scores[0].len()).map(|j| format!("c{j}")).collect();
            ScoreMatrix {
                method: Method::Js,
                rows,
                cols,
                scores,
                incomparable_rows: vec![],
                incomparable_cols: vec![],
            }
        })
}

proptest! {
    #[test]
    fn parsed_words_are_non_increasing(slice in arb_tree()) {
        let again = parse_topic_slices(&write_topic_slices(std::slice::from_ref(&slice))).unwrap();
        prop_assert_eq!(&again[0], &slice);
        for t in again[0].topics() {
            for w in t.words().windows(2) {
                prop_assert!(w[0].weight() >= w[1].weight());
            }
        }
    }

    #[test]
    fn truncation_is_idempotent(t in arb_topic("t"), k in 1usize..6, e in 0usize..3) {
        let once = truncate_topic(&t, k, e);
        prop_assert_eq!(truncate_topic(&once, k, e), once.clone());
        prop_assert!(once.words().len() <= k && once.entities().len() <= e);
        prop_assert_eq!(once.words(), &t.words()[..once.words().len()]);
    }

    #[test]
    fn combined_distribution_is_normalized(t in arb_topic("t")) {
        let d = combined_distribution(&t).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        for (_, p) in d.iter() {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn flatten_is_monotone_in_depth(slice in arb_tree(), k in 1u32..5) {
        let shallow: HashSet<String> = flatten_tree(&slice, k).iter().map(|t| t.id().to_string()).collect();
        let deep: HashSet<String> = flatten_tree(&slice, k + 1).iter().map(|t| t.id().to_string()).collect();
        prop_assert!(shallow.is_subset(&deep));
        prop_assert!(flatten_tree(&slice, k).iter().all(|t| t.level() <= k));
    }

    #[test]
    fn embedding_is_linear_in_weights(t in arb_topic("t"), exp in -4i32..5) {
        let store = vocab_store();
        let c = 2f64.powi(exp);
        let (Ok(base), Ok(scaled)) = (topic_embedding(&store, &t), topic_embedding(&store, &t.scale_weights(c))) else {
            return Ok(());
        };
        // Powers of two scale exactly.
        for (x, y) in base.vector.iter().zip(&scaled.vector) {
            prop_assert_eq!(x * c, *y);
        }
    }

    #[test]
    fn embedding_ignores_token_order(t in arb_topic("t")) {
        let store = vocab_store();
        let mut words: Vec<WeightedToken> = t.words().to_vec();
        words.reverse();
        let shuffled = Topic::new("t", 1, words, t.entities().iter().rev().cloned().collect()).unwrap();
        match (topic_embedding(&store, &t), topic_embedding(&store, &shuffled)) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.vector.iter().zip(&b.vector) {
                    prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
                }
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "one order embeds, the other does not"),
        }
    }

    #[test]
    fn lookup_has_store_dimension(token in "[a-j ]{1,12}") {
        let store = vocab_store();
        prop_assume!(!token.trim().is_empty());
        prop_assert_eq!(store.lookup(&token).len(), 4);
    }

    #[test]
    fn js_is_bounded_and_symmetric(t1 in arb_topic("x"), t2 in arb_topic("y")) {
        let a = js_divergence(&t1, &t2).unwrap().value;
        let b = js_divergence(&t2, &t1).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(js_divergence(&t1, &t1).unwrap().value.abs() <= 1e-12);
    }

    #[test]
    fn sd_is_symmetric_and_scale_invariant(t1 in arb_topic("x"), t2 in arb_topic("y"), c in 0.01f64..100.0) {
        let store = vocab_store();
        let (Ok(a), Ok(b)) = (semantic_divergence(&store, &t1, &t2), semantic_divergence(&store, &t2, &t1)) else {
            return Ok(());
        };
        prop_assert!((a.value - b.value).abs() <= 1e-9);
        prop_assert!((0.0..=2.0).contains(&a.value));
        let scaled = semantic_divergence(&store, &t1.scale_weights(c), &t2).unwrap();
        prop_assert!((a.value - scaled.value).abs() <= 1e-9);
        prop_assert!(semantic_divergence(&store, &t1, &t1).unwrap().value <= 1e-9);
    }

    #[test]
    fn score_matrix_transposes(ts in prop::collection::vec(arb_topic("t"), 1..4), us in prop::collection::vec(arb_topic("u"), 1..4)) {
        let store = vocab_store();
        let rename = |v: Vec<Topic>, p: &str| -> Vec<Topic> {
            v.into_iter().enumerate().map(|(i, t)| Topic::new(format!("{p}{i}"), 1, t.words().to_vec(), t.entities().to_vec()).unwrap()).collect()
        };
        let (ts, us) = (rename(ts, "t"), rename(us, "u"));
        for method in [Method::Js, Method::Sd] {
            let ab = score_matrix(&ts, &us, method, Some(&store)).unwrap();
            let ba = score_matrix(&us, &ts, method, Some(&store)).unwrap();
            for i in 0..ts.len() {
                for j in 0..us.len() {
                    prop_assert_eq!(ab.get(i, j), ba.get(j, i));
                }
            }
        }
    }

    #[test]
    fn greedy_is_one_to_one_sound_and_maximal(m in arb_matrix(), threshold in 0.01f64..0.7) {
        let out = greedy_match(&m, threshold);
        let mut seen_a = HashSet::new();
        let mut seen_b = HashSet::new();
        for p in &out.pairs {
            prop_assert!(p.score < threshold);
            prop_assert!(seen_a.insert(p.topic_a.clone()));
            prop_assert!(seen_b.insert(p.topic_b.clone()));
        }
        // Partition of both topic sets.
        prop_assert_eq!(seen_a.len() + out.unmatched_a.len(), m.rows.len());
        prop_assert_eq!(seen_b.len() + out.unmatched_b.len(), m.cols.len());
        // No comparable pair below threshold joins two free topics.
        for (i, j, s) in m.entries() {
            if s < threshold {
                prop_assert!(seen_a.contains(&m.rows[i]) || seen_b.contains(&m.cols[j]));
            }
        }
        prop_assert_eq!(greedy_match(&m, threshold), out);
    }

    #[test]
    fn overlap_partitions_both_matchings(m1 in arb_matrix(), seed in 0u64..1000, threshold in 0.05f64..0.7) {
        // Second matrix over the same ids, perturbed deterministically.
        let mut m2 = m1.clone();
        m2.method = Method::Sd;
        for (k, s) in m2.scores.iter_mut().flatten().enumerate() {
            if let Some(v) = s {
                *v = ((*v * 20.0 + ((seed as usize + k * 7) % 5) as f64) % 12.0) * 0.05;
            }
        }
        let js = greedy_match(&m1, threshold);
        let sd = greedy_match(&m2, threshold);
        let r = categorize_overlap(&js, &sd).unwrap();

        let key = |a: &str, b: &str| (a.to_string(), b.to_string());
        let mut js_seen: HashMap<(String, String), usize> = HashMap::new();
        let mut sd_seen: HashMap<(String, String), usize> = HashMap::new();
        for s in &r.shared {
            *js_seen.entry(key(&s.topic_a, &s.topic_b)).or_default() += 1;
            *sd_seen.entry(key(&s.topic_a, &s.topic_b)).or_default() += 1;
        }
        for c in &r.conflicting {
            let shares_a = c.js.topic_a == c.sd.topic_a;
            let shares_b = c.js.topic_b == c.sd.topic_b;
            prop_assert!(shares_a != shares_b);
            *js_seen.entry(key(&c.js.topic_a, &c.js.topic_b)).or_default() += 1;
            *sd_seen.entry(key(&c.sd.topic_a, &c.sd.topic_b)).or_default() += 1;
        }
        for p in &r.exclusive_js {
            *js_seen.entry(key(&p.topic_a, &p.topic_b)).or_default() += 1;
        }
        for p in &r.exclusive_sd {
            *sd_seen.entry(key(&p.topic_a, &p.topic_b)).or_default() += 1;
        }
        let js_pairs: BTreeSet<_> = js.pairs.iter().map(|p| key(&p.topic_a, &p.topic_b)).collect();
        let sd_pairs: BTreeSet<_> = sd.pairs.iter().map(|p| key(&p.topic_a, &p.topic_b)).collect();
        prop_assert_eq!(js_seen.keys().cloned().collect::<BTreeSet<_>>(), js_pairs);
        prop_assert_eq!(sd_seen.keys().cloned().collect::<BTreeSet<_>>(), sd_pairs);
        prop_assert!(js_seen.values().chain(sd_seen.values()).all(|&n| n == 1));
        let c = r.counts;
        prop_assert_eq!(c.shared + c.conflicting + c.exclusive_js, js.pairs.len());
        prop_assert_eq!(c.shared + c.conflicting + c.exclusive_sd, sd.pairs.len());
    }

    #[test]
    fn vector_files_load_bit_stable(rows in prop::collection::vec(prop::collection::vec(-1e3f32..1e3, 3), 1..20)) {
        let store = EmbeddingStore::from_rows(3, rows.into_iter().enumerate().map(|(i, v)| (format!("w{i}"), v))).unwrap();
        let text = write_vectors(&store);
        prop_assert_eq!(load_vectors(&text).unwrap(), store.clone());
        prop_assert_eq!(load_vectors(&text).unwrap(), load_vectors(&text).unwrap());
    }
}
