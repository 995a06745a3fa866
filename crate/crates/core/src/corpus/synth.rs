//! Synthetic corpora with planted causal and spurious words.
//!
//! Toxic sentences carry exactly one causal word and, with probability
//! `cooccur_rate`, one spurious word. Non-toxic sentences never carry a
//! causal word and carry one spurious word with probability
//! `spurious_in_nontoxic_rate`. Remaining slots are neutral fillers. The
//! label is the presence of a causal word, optionally flipped with
//! probability `label_noise`.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{tokenize, CorpusError, Dataset, LabeledExample, Provenance, Result, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_sentences: usize,
    pub causal_lexicon: Vec<String>,
    pub spurious_lexicon: Vec<String>,
    pub neutral_lexicon: Vec<String>,
    /// Probability that a toxic sentence also carries a spurious word.
    pub cooccur_rate: f64,
    /// Probability that a non-toxic sentence carries a spurious word.
    pub spurious_in_nontoxic_rate: f64,
    pub toxic_fraction: f64,
    /// Inclusive sentence length bounds, in tokens.
    pub length_range: (usize, usize),
    pub label_noise: f64,
    pub seed: u64,
}

fn lexicon(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

impl SynthSpec {
    /// A spec with generated lexicons `tox00..`, `spur00..` and `fill00..`.
    pub fn planted(n_causal: usize, n_spurious: usize, n_neutral: usize) -> Self {
        Self {
            causal_lexicon: lexicon("tox", n_causal),
            spurious_lexicon: lexicon("spur", n_spurious),
            neutral_lexicon: lexicon("fill", n_neutral),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CorpusError::InvalidParameter(m));
        if self.n_sentences == 0 {
            return bad("n_sentences must be positive".into());
        }
        for (name, lex) in [
            ("causal", &self.causal_lexicon),
            ("spurious", &self.spurious_lexicon),
            ("neutral", &self.neutral_lexicon),
        ] {
            if lex.is_empty() {
                return bad(format!("{name} lexicon is empty"));
            }
        }
        let cfg = TokenizerConfig::default();
        let mut seen = HashSet::new();
        for w in self.causal_lexicon.iter().chain(&self.spurious_lexicon).chain(&self.neutral_lexicon) {
            let toks = tokenize(w, &cfg);
            if toks.len() != 1 || toks[0].as_str() != w {
                return bad(format!("lexicon word {w:?} is not a normalized single token"));
            }
            if !seen.insert(w.as_str()) {
                return bad(format!("lexicons overlap on {w:?}"));
            }
        }
        for (name, p) in [
            ("cooccur_rate", self.cooccur_rate),
            ("spurious_in_nontoxic_rate", self.spurious_in_nontoxic_rate),
            ("label_noise", self.label_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.toxic_fraction > 0.0 && self.toxic_fraction < 1.0) {
            return bad(format!("toxic_fraction must lie in (0, 1), got {}", self.toxic_fraction));
        }
        let (lo, hi) = self.length_range;
        if lo < 2 || lo > hi {
            return Err(CorpusError::Infeasible(format!(
                "length_range ({lo}, {hi}) must satisfy 2 <= min <= max to fit one causal and one spurious word"
            )));
        }
        Ok(())
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_sentences: 2000,
            causal_lexicon: lexicon("tox", 10),
            spurious_lexicon: lexicon("spur", 10),
            neutral_lexicon: lexicon("fill", 50),
            cooccur_rate: 0.8,
            spurious_in_nontoxic_rate: 0.3,
            toxic_fraction: 0.2,
            length_range: (4, 10),
            label_noise: 0.0,
            seed: 0,
        }
    }
}

/// The planted-word record written next to a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub spec: SynthSpec,
    pub n_toxic: usize,
}

impl SynthManifest {
    pub fn new(spec: &SynthSpec, dataset: &Dataset) -> Self {
        Self {
            spec: spec.clone(),
            n_toxic: dataset.positives(),
        }
    }

    pub fn causal(&self) -> &[String] {
        &self.spec.causal_lexicon
    }

    pub fn spurious(&self) -> &[String] {
        &self.spec.spurious_lexicon
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_sentences;
    let n_toxic = (spec.toxic_fraction * n as f64).round() as usize;
    let mut toxic: Vec<bool> = (0..n).map(|i| i < n_toxic).collect();
    toxic.shuffle(&mut rng);

    let cfg = TokenizerConfig::default();
    let (lo, hi) = spec.length_range;
    let pick = |lex: &[String], rng: &mut ChaCha8Rng| lex.choose(rng).expect("non-empty lexicon").clone();

    let examples = toxic
        .into_iter()
        .enumerate()
        .map(|(i, is_toxic)| {
            let len = rng.random_range(lo..=hi);
            let mut words = Vec::with_capacity(len);
            if is_toxic {
                words.push(pick(&spec.causal_lexicon, &mut rng));
                if rng.random::<f64>() < spec.cooccur_rate {
                    words.push(pick(&spec.spurious_lexicon, &mut rng));
                }
            } else if rng.random::<f64>() < spec.spurious_in_nontoxic_rate {
                words.push(pick(&spec.spurious_lexicon, &mut rng));
            }
            while words.len() < len {
                words.push(pick(&spec.neutral_lexicon, &mut rng));
            }
            words.shuffle(&mut rng);
            let label = if spec.label_noise > 0.0 && rng.random::<f64>() < spec.label_noise {
                !is_toxic
            } else {
                is_toxic
            };
            LabeledExample::new(format!("synth-{i:06}"), words.join(" "), label, &cfg)
        })
        .collect();

    let provenance = Provenance {
        source: "synthetic".to_string(),
        adapter: "generate_synthetic".to_string(),
        tokenizer: cfg,
        seed: Some(spec.seed),
        skipped_rows: 0,
    };
    Dataset::new(format!("synthetic-{}", spec.seed), examples, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    fn has_any(ex: &LabeledExample, lex: &[String]) -> bool {
        lex.iter().any(|w| ex.contains(w))
    }

    #[test]
    fn full_cooccurrence() {
        let spec = SynthSpec {
            n_sentences: 1000,
            cooccur_rate: 1.0,
            toxic_fraction: 0.5,
            seed: 3,
            ..SynthSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        assert_eq!(d.positives(), 500);
        for ex in &d.examples {
            let n_spur = ex.tokens.iter().filter(|t| spec.spurious_lexicon.iter().any(|w| w == t.as_str())).count();
            if ex.label {
                assert_eq!(n_spur, 1);
                assert!(has_any(ex, &spec.causal_lexicon));
            } else {
                assert!(!has_any(ex, &spec.causal_lexicon));
            }
        }
    }

    #[test]
    fn zero_cooccurrence_gives_zero_attribute_rate() {
        let spec = SynthSpec {
            cooccur_rate: 0.0,
            seed: 5,
            ..SynthSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let v = build_vocabulary(&d, 1);
        for w in &spec.spurious_lexicon {
            assert_eq!(v.attr_freq(w), 0, "{w}");
        }
    }

    #[test]
    fn pooled_spurious_rate_matches_mixture() {
        let spec = SynthSpec {
            n_sentences: 5000,
            cooccur_rate: 0.9,
            spurious_in_nontoxic_rate: 0.1,
            toxic_fraction: 0.5,
            seed: 11,
            ..SynthSpec::default()
        };
        let d = generate_synthetic(&spec).unwrap();
        let k_t = d.positives() as f64;
        let k_n = (d.len() - d.positives()) as f64;
        let expected = 0.9 * k_t / (0.9 * k_t + 0.1 * k_n);
        // Attribute counts pooled over the spurious lexicon (one spurious word per sentence at most)
        let with_spur: Vec<_> = d.examples.iter().filter(|e| has_any(e, &spec.spurious_lexicon)).collect();
        let pooled = with_spur.iter().filter(|e| e.label).count() as f64 / with_spur.len() as f64;
        assert!((pooled - expected).abs() < 0.02, "{pooled} vs {expected}");
        let v = build_vocabulary(&d, 1);
        let num: usize = spec.spurious_lexicon.iter().map(|w| v.attr_freq(w)).sum();
        let den: usize = spec.spurious_lexicon.iter().map(|w| v.doc_freq(w)).sum();
        assert_eq!(num as f64 / den as f64, pooled);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SynthSpec {
            n_sentences: 300,
            seed: 9,
            ..SynthSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn infeasible_lengths_and_bad_lexicons() {
        let spec = SynthSpec {
            length_range: (1, 5),
            ..SynthSpec::default()
        };
        assert!(matches!(generate_synthetic(&spec), Err(CorpusError::Infeasible(_))));
        let spec = SynthSpec {
            length_range: (6, 5),
            ..SynthSpec::default()
        };
        assert!(matches!(generate_synthetic(&spec), Err(CorpusError::Infeasible(_))));
        let mut spec = SynthSpec::default();
        spec.neutral_lexicon.push("tox00".into());
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = SynthSpec::default();
        spec.neutral_lexicon.push("Two Words".into());
        assert!(generate_synthetic(&spec).is_err());
    }

    #[test]
    fn assumption_two_holds_literally() {
        for seed in 0..5 {
            let spec = SynthSpec {
                seed,
                cooccur_rate: 0.7,
                ..SynthSpec::default()
            };
            let d = generate_synthetic(&spec).unwrap();
            let v = build_vocabulary(&d, 1);
            let score = |w: &str| v.attr_freq(w) as f64 / v.doc_freq(w).max(1) as f64;
            for ex in d.examples.iter().filter(|e| e.label && has_any(e, &spec.spurious_lexicon)) {
                assert!(has_any(ex, &spec.causal_lexicon));
            }
            let min_causal = spec.causal_lexicon.iter().map(|w| score(w)).fold(f64::INFINITY, f64::min);
            let max_spur = spec.spurious_lexicon.iter().map(|w| score(w)).fold(0.0, f64::max);
            assert!(min_causal > max_spur);
        }
    }
}
