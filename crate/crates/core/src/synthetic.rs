//! Keyword-separable toy corpora and the small word-vector table bundled
//! with the crate for tests, benchmarks and the desk-scale example config.
//!
//! Every post contains exactly one class keyword among neutral filler words,
//! so the label is a function of the keyword. The target and helper tasks use
//! different label names but the same keyword families, which is what lets a
//! shared encoder carry knowledge from one task to the other.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::embeddings::{CharFallbackConfig, Embedder, EmbeddingTable};
use crate::nn::TaskInfo;
use crate::preprocess::{clean_text, tokenize, CleanPost, RawPost};
use crate::seed;

pub const FIXTURE_DIM: usize = 8;

/// Keyword families, one per class, in label order.
pub const KEYWORDS: [[&str; 6]; 3] = [
    ["vermin", "parasites", "subhuman", "infestation", "filth", "savages"],
    ["idiot", "moron", "stupid", "dumb", "loser", "clown"],
    ["sunny", "coffee", "garden", "music", "weekend", "recipe"],
];

pub const FILLERS: [&str; 29] = [
    "the", "a", "you", "they", "people", "this", "that", "is", "are", "so", "really", "just", "we",
    "all", "today", "going", "about", "what", "think", "know", "my", "your", "with", "for", "out",
    "time", "never", "always", "here",
];

pub const PUNCTUATION: [&str; 3] = [",", "!", "."];

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordTask {
    pub name: String,
    pub labels: Vec<String>,
    /// Relative class frequencies.
    pub weights: Vec<f64>,
}

impl KeywordTask {
    /// Three-class target task with an imbalanced label distribution.
    pub fn target() -> Self {
        Self {
            name: "toy".into(),
            labels: vec!["hate".into(), "offensive".into(), "neither".into()],
            weights: vec![0.2, 0.5, 0.3],
        }
    }

    /// Helper task that shares the keyword cues under other label names.
    pub fn helper() -> Self {
        Self {
            name: "helper".into(),
            labels: vec!["hateful".into(), "abusive".into(), "normal".into()],
            weights: vec![0.3, 0.3, 0.4],
        }
    }

    /// `n` raw posts; class counts follow the weights (largest remainder),
    /// order and wording are drawn from `seed`.
    pub fn generate(&self, n: usize, seed: u64) -> Vec<RawPost> {
        let mut rng = seed::rng(seed, &format!("synthetic/{}", self.name));
        let counts = apportion(n, &self.weights);
        let mut classes: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
            .collect();
        rand::seq::SliceRandom::shuffle(classes.as_mut_slice(), &mut rng);
        classes
            .into_iter()
            .enumerate()
            .map(|(i, c)| RawPost {
                id: format!("{}-{i:04}", self.name),
                text: noisy_post(KEYWORDS[c % KEYWORDS.len()], &mut rng),
                label: self.labels[c].clone(),
                task: self.name.clone(),
            })
            .collect()
    }

    pub fn info(&self) -> TaskInfo {
        TaskInfo {
            name: self.name.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Generated posts, already cleaned and tokenized.
    pub fn generate_clean(&self, n: usize, seed: u64) -> Vec<CleanPost> {
        self.generate(n, seed)
            .into_iter()
            .map(|p| CleanPost {
                id: p.id,
                tokens: tokenize(&clean_text(&p.text)),
                label_id: self.labels.iter().position(|l| *l == p.label).expect("own label"),
                task: p.task,
            })
            .collect()
    }
}

fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let missing = n - counts.iter().sum::<usize>();
    for &c in order.iter().take(missing) {
        counts[c] += 1;
    }
    counts
}

/// One keyword among 3 to 8 fillers, with occasional URLs, emoji and
/// repeated punctuation that preprocessing is expected to remove.
fn noisy_post(keywords: [&str; 6], rng: &mut seed::Rng) -> String {
    let len = rng.random_range(3..=8);
    let mut words: Vec<String> = (0..len)
        .map(|_| FILLERS.choose(rng).expect("fillers").to_string())
        .collect();
    let at = rng.random_range(0..=words.len());
    words.insert(at, keywords.choose(rng).expect("keywords").to_string());
    let mut text = words.join(" ");
    match rng.random_range(0..6) {
        0 => text.push_str(" http://t.co/abc123"),
        1 => text.push_str(" !!!"),
        2 => text.push_str("..."),
        3 => text.push_str(" \u{1F621}"),
        4 => text.insert_str(0, "https://example.com/x?y=1 "),
        _ => {}
    }
    text
}

/// Every token that has a row in the fixture table: keywords, fillers and
/// punctuation, 50 in total.
pub fn fixture_vocabulary() -> Vec<&'static str> {
    KEYWORDS
        .iter()
        .flatten()
        .chain(FILLERS.iter())
        .chain(PUNCTUATION.iter())
        .copied()
        .collect()
}

/// Weight of the class centroid in a keyword's vector.
const CLUSTER_STRENGTH: f64 = 1.5;

/// Seeded vectors for [`fixture_vocabulary`], rounded to six decimals so the
/// text form round-trips exactly.
///
/// Like real pretrained vectors, words of one keyword family lie near a
/// shared direction: each keyword is its class centroid (scaled) plus
/// Gaussian noise, while fillers and punctuation are pure noise.
pub fn fixture_entries() -> Vec<(String, Vec<f64>)> {
    let mut rng = seed::rng(0, "synthetic/fixture-glove");
    let noise: Normal<f64> = Normal::new(0.0, 0.5).expect("valid normal");
    let unit: Normal<f64> = Normal::new(0.0, 1.0).expect("valid normal");
    let centroids: Vec<Vec<f64>> = (0..KEYWORDS.len())
        .map(|_| (0..FIXTURE_DIM).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let family = |tok: &str| KEYWORDS.iter().position(|f| f.contains(&tok));
    fixture_vocabulary()
        .into_iter()
        .map(|tok| {
            let c = family(tok);
            let v = (0..FIXTURE_DIM)
                .map(|k| {
                    let x = noise.sample(&mut rng) + c.map_or(0.0, |c| CLUSTER_STRENGTH * centroids[c][k]);
                    (x * 1e6).round() / 1e6
                })
                .collect();
            (tok.to_string(), v)
        })
        .collect()
}

/// The fixture table in GloVe text format.
pub fn fixture_glove_text() -> String {
    let mut s = String::new();
    for (tok, v) in fixture_entries() {
        s.push_str(&tok);
        for x in v {
            s.push_str(&format!(" {x:.6}"));
        }
        s.push('\n');
    }
    s
}

/// Embedder over the fixture table with the default n-gram fallback.
pub fn fixture_embedder() -> Embedder {
    let table = EmbeddingTable::from_entries(FIXTURE_DIM, fixture_entries())
        .expect("fixture dimensions agree")
        .table;
    Embedder::new(table, CharFallbackConfig::default())
}

/// Raw posts as an `id,text,label` CSV document.
pub fn raw_csv(posts: &[RawPost]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "text", "label"]).expect("in-memory write");
    for p in posts {
        w.write_record([&p.id, &p.text, &p.label]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Bundled target corpus: 200 posts.
pub fn toy_target_csv() -> String {
    raw_csv(&KeywordTask::target().generate(200, 11))
}

/// Bundled helper corpus: 400 posts.
pub fn toy_helper_csv() -> String {
    raw_csv(&KeywordTask::helper().generate(400, 12))
}
