use std::collections::HashMap;

use proptest::prelude::*;

use warmth::textfeat::{
    aggregate_chunks, chunk_indices, embed_document, fit_tfidf, preprocess, transform_tfidf,
    ChunkAggregationConfig, EmbeddingTable, TokenStream, TokenVariant,
};

fn doc_strategy() -> impl Strategy<Value = String> {
    "([a-f]{1,4}[ ,.!?]{1,2}){0,25}"
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tfidf_rows_are_unit_or_zero(
        train in proptest::collection::vec(doc_strategy(), 1..8),
        test in doc_strategy(),
    ) {
        for variant in [TokenVariant::Stripped, TokenVariant::WithPunctuation] {
            let docs: Vec<TokenStream> = train.iter().map(|d| preprocess(d, variant)).collect();
            let Ok(model) = fit_tfidf(&docs) else { continue };
            for d in docs.iter().chain(std::iter::once(&preprocess(&test, variant))) {
                let v = transform_tfidf(&model, d);
                prop_assert_eq!(v.len(), model.dim());
                let n = norm(&v);
                prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-12, "norm {}", n);
            }
        }
    }

    #[test]
    fn stripped_variant_keeps_no_punctuation(text in "[a-z ,.;!?'-]{0,60}") {
        let s = preprocess(&text, TokenVariant::Stripped);
        prop_assert!(s.tokens.iter().all(|t| t.chars().any(char::is_alphanumeric)));
        let p = preprocess(&text, TokenVariant::WithPunctuation);
        let words: Vec<&String> =
            p.tokens.iter().filter(|t| t.chars().any(char::is_alphanumeric)).collect();
        prop_assert_eq!(words, s.tokens.iter().collect::<Vec<_>>());
    }

    #[test]
    fn embedding_ignores_order_and_duplication(
        words in proptest::collection::vec("[a-h]", 0..20),
        seed in 0u64..1000,
    ) {
        let table = table(seed);
        let doc = TokenStream { tokens: words.clone(), variant: TokenVariant::Stripped };
        let mut rev = words.clone();
        rev.reverse();
        let rev = TokenStream { tokens: rev, variant: TokenVariant::Stripped };
        let twice = TokenStream { tokens: [words.clone(), words].concat(), variant: TokenVariant::Stripped };
        let e = embed_document(&doc, &table);
        for other in [embed_document(&rev, &table), embed_document(&twice, &table)] {
            for (a, b) in e.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn chunk_aggregation_ignores_chunk_order(
        n_chunks in 1usize..6,
        layers in 1usize..4,
        d in 1usize..5,
        seed in 0u64..1000,
    ) {
        let cfg = ChunkAggregationConfig { chunk_len: 8, overlap: 0.5, layer_count: layers };
        let mut x = seed.wrapping_mul(2654435761) | 1;
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x % 1000) as f64 / 100.0 - 5.0
        };
        let chunks: Vec<Vec<Vec<f64>>> = (0..n_chunks)
            .map(|_| (0..layers).map(|_| (0..d).map(|_| next()).collect()).collect())
            .collect();
        let a = aggregate_chunks(&chunks, &cfg).unwrap();
        let mut rev = chunks.clone();
        rev.reverse();
        let b = aggregate_chunks(&rev, &cfg).unwrap();
        prop_assert_eq!(a.len(), 2 * d);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
        prop_assert!(a[d..].iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn chunks_cover_every_token(
        n in 0usize..3000,
        chunk_len in 1usize..600,
        overlap in 0.0f64..0.95,
    ) {
        let cfg = ChunkAggregationConfig { chunk_len, overlap, layer_count: 3 };
        let w = chunk_indices(n, &cfg);
        if n == 0 {
            prop_assert!(w.is_empty());
            return Ok(());
        }
        prop_assert_eq!(w[0].0, 0);
        prop_assert_eq!(w.last().unwrap().1, n);
        let ov = (chunk_len as f64 * overlap).ceil() as usize;
        for (i, &(s, e)) in w.iter().enumerate() {
            prop_assert!(s < e && e - s <= chunk_len);
            if i + 1 < w.len() {
                // Interior windows are full and overlap their successor.
                prop_assert_eq!(e - s, chunk_len);
                let next = w[i + 1].0;
                prop_assert!(next <= e);
                if ov < chunk_len {
                    prop_assert_eq!(e - next, ov);
                }
            }
        }
    }
}

fn table(seed: u64) -> EmbeddingTable {
    let vectors: HashMap<String, Vec<f64>> = ('a'..='e')
        .enumerate()
        .map(|(i, c)| {
            let base = (seed as f64 + i as f64) * 0.37;
            (c.to_string(), vec![base.sin(), base.cos(), base * 0.01])
        })
        .collect();
    EmbeddingTable {
        dimension: 3,
        vectors,
    }
}

#[test]
fn unknown_words_are_ignored() {
    let t = table(4);
    let known = TokenStream {
        tokens: vec!["a".into(), "c".into()],
        variant: TokenVariant::Stripped,
    };
    let noisy = TokenStream {
        tokens: vec!["zz".into(), "a".into(), "qq".into(), "c".into()],
        variant: TokenVariant::Stripped,
    };
    assert_eq!(embed_document(&known, &t), embed_document(&noisy, &t));
    let none = TokenStream {
        tokens: vec!["zz".into()],
        variant: TokenVariant::Stripped,
    };
    assert_eq!(embed_document(&none, &t), vec![0.0; 3]);
}

#[test]
fn tfidf_uses_training_vocabulary_only() {
    let train: Vec<TokenStream> = ["the cat sat", "the dog ran"]
        .iter()
        .map(|d| preprocess(d, TokenVariant::Stripped))
        .collect();
    let m = fit_tfidf(&train).unwrap();
    let unseen = transform_tfidf(&m, &preprocess("zebra yak", TokenVariant::Stripped));
    assert!(unseen.iter().all(|&v| v == 0.0));
    // "the" appears in every document, so its weight is the smallest.
    let v = transform_tfidf(&m, &preprocess("the cat", TokenVariant::Stripped));
    let the = v[m.vocabulary["the"]];
    let cat = v[m.vocabulary["cat"]];
    assert!(the > 0.0 && the < cat);
}
