use std::sync::Arc;
use std::time::{Duration, Instant};

use causal_ate::corpus::{build_vocabulary, generate_synthetic, Dataset, SynthSpec, Token, TokenizerConfig};
use causal_ate::models::train_word_model;
use causal_ate::perturb::stub::{StubMode, StubServer};
use causal_ate::perturb::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toks(s: &[&str]) -> Vec<Token> {
    s.iter().map(|w| Token::new(w)).collect()
}

fn fixed() -> Vec<(String, f64)> {
    vec![("good".to_string(), 0.7), ("bad".to_string(), 0.3)]
}

fn client(endpoint: String) -> RemoteReplacer {
    RemoteReplacer::new(RemoteConfig {
        endpoint,
        ..RemoteConfig::default()
    })
    .unwrap()
}

#[test]
fn remote_removes_masked_word_and_renormalizes() {
    let server = StubServer::start(StubMode::Fixed(fixed())).unwrap();
    let c = client(server.endpoint()).request(&toks(&["bad", "dog"]), 0, 4).unwrap();
    assert_eq!(c.entries, vec![(Token::new("good"), 1.0)]);
    assert_eq!(c.draws, None);

    let c = client(server.endpoint()).request(&toks(&["nice", "dog"]), 1, 4).unwrap();
    assert!((c.weight("good") - 0.7).abs() < 1e-12);
    assert!((c.weight("bad") - 0.3).abs() < 1e-12);
}

#[test]
fn remote_empty_list_is_protocol_error() {
    let server = StubServer::start(StubMode::Empty).unwrap();
    let err = client(server.endpoint()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    assert!(matches!(err, PerturbError::Protocol { .. }), "{err}");
}

#[test]
fn remote_malformed_body_is_protocol_error() {
    let server = StubServer::start(StubMode::Malformed).unwrap();
    let err = client(server.endpoint()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    assert!(matches!(err, PerturbError::Protocol { .. }), "{err}");
    let server = StubServer::start(StubMode::Status(400)).unwrap();
    let err = client(server.endpoint()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    assert!(err.to_string().contains("stub failure"), "{err}");
}

#[test]
fn remote_timeout_retries_then_reports_attempts() {
    assert_eq!(RemoteConfig::default().timeout_ms, 2000);
    assert_eq!(RemoteConfig::default().attempts, 2);
    let server = StubServer::start(StubMode::Slow(Duration::from_millis(2600), fixed())).unwrap();
    let endpoint = server.endpoint();
    let start = Instant::now();
    let err = client(endpoint.clone()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    let elapsed = start.elapsed();
    match err {
        PerturbError::Network {
            endpoint: e, attempts, ..
        } => {
            assert_eq!(e, endpoint);
            assert_eq!(attempts, 2);
        }
        other => panic!("expected network error, got {other}"),
    }
    assert_eq!(server.hits(), 2);
    assert!(elapsed >= Duration::from_millis(3900), "{elapsed:?}");
}

#[test]
fn remote_server_errors_are_retried() {
    let server = StubServer::start(StubMode::Status(503)).unwrap();
    let err = client(server.endpoint()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    assert!(matches!(err, PerturbError::Network { attempts: 2, .. }), "{err}");
    assert_eq!(server.hits(), 2);
}

#[test]
fn unreachable_endpoint_is_network_error() {
    let endpoint = {
        let s = StubServer::start(StubMode::Empty).unwrap();
        s.endpoint()
    };
    let err = client(endpoint.clone()).request(&toks(&["a", "b"]), 0, 4).unwrap_err();
    assert!(err.to_string().contains(&endpoint), "{err}");
}

#[test]
fn remote_through_filter_and_builder() {
    let server = StubServer::start(StubMode::Fixed(fixed())).unwrap();
    let d = Dataset::from_texts("toy", &[("bad dog", true), ("good dog", false)], &TokenizerConfig::default())
        .unwrap();
    let v = build_vocabulary(&d, 1);
    let wm = Arc::new(train_word_model(&d, 1, 0.0));
    let cfg = ReplacementConfig {
        sampler: SamplerKind::Remote(RemoteConfig {
            endpoint: server.endpoint(),
            ..RemoteConfig::default()
        }),
        ..ReplacementConfig::default()
    };
    let r = build_replacer(&cfg, &v, wm).unwrap();
    assert!(r.name().starts_with("remote("));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // "dog" in [bad, dog]: context score 1; good (0) and bad (1): only good is admissible
    let c = r.candidates(&toks(&["bad", "dog"]), 1, 4, &mut rng).unwrap();
    assert_eq!(c.entries, vec![(Token::new("good"), 1.0)]);
}

fn synth() -> Dataset {
    let spec = SynthSpec {
        n_sentences: 300,
        seed: 11,
        ..SynthSpec::planted(4, 4, 20)
    };
    generate_synthetic(&spec).unwrap()
}

fn check_distribution(c: &Candidates, masked: &str) -> Result<(), TestCaseError> {
    prop_assert!(!c.is_empty());
    prop_assert!(!c.contains(masked), "self replacement {masked}");
    prop_assert!(c.entries.iter().all(|(_, w)| *w > 0.0));
    let total: f64 = c.entries.iter().map(|(_, w)| w).sum();
    prop_assert!((total - 1.0).abs() < 1e-9);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samplers_never_self_replace(row in 0usize..300, pos in 0usize..16, k in 1usize..40, seed: u64, unigram: bool, filtered: bool) {
        let d = synth();
        let v = build_vocabulary(&d, 1);
        let wm = Arc::new(train_word_model(&d, 1, 0.0));
        let cfg = ReplacementConfig {
            sampler: if unigram { SamplerKind::Unigram } else { SamplerKind::Uniform },
            assumption1_filter: filtered,
            ..ReplacementConfig::default()
        };
        let r = build_replacer(&cfg, &v, wm.clone()).unwrap();
        let tokens = &d.examples[row].tokens;
        let i = pos % tokens.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampled = r.candidates(tokens, i, k, &mut rng).unwrap();
        prop_assert!(sampled.len() <= k);
        check_distribution(&sampled, tokens[i].as_str())?;
        let exact = r.enumerate(tokens, i).unwrap();
        check_distribution(&exact, tokens[i].as_str())?;
        if filtered {
            let bound = wm.context_score(tokens, i);
            for c in [&sampled, &exact] {
                if !c.fallback {
                    prop_assert!(c.entries.iter().all(|(w, _)| wm.score(w.as_str()) < bound));
                }
            }
        }
        // every sampled word is in the exact support
        for (w, _) in &sampled.entries {
            prop_assert!(exact.contains(w.as_str()));
        }
    }

    #[test]
    fn sampling_is_deterministic(row in 0usize..300, seed: u64) {
        let d = synth();
        let v = build_vocabulary(&d, 1);
        let s = CorpusSampler::unigram(&v).unwrap();
        let tokens = &d.examples[row].tokens;
        let a = s.sample(tokens, 0, 8, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = s.sample(tokens, 0, 8, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn empirical_frequencies_approach_exact_weights() {
    let d = synth();
    let v = build_vocabulary(&d, 1);
    let s = CorpusSampler::unigram(&v).unwrap();
    let tokens = &d.examples[0].tokens;
    let exact = s.enumerate(tokens, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    let sampled = s.sample(tokens, 0, n, &mut rng).unwrap();
    assert_eq!(sampled.len(), exact.len());
    for (w, p) in &exact.entries {
        let q = sampled.weight(w.as_str());
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((q - p).abs() < 5.0 * sd + 1e-12, "{w}: {q} vs {p}");
    }
}
