//! Word attribution from pool provenance and the 2-D map of sentence vectors.

pub mod attribution;
pub mod map;
pub mod tsne;

pub use attribution::{render_highlight, word_scores, HighlightReport};
pub use map::{render_map, write_coordinates_csv, MapPoint};
pub use tsne::{kl_divergence, tsne_project, TsneConfig, TsneOutput};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InterpretError {
    #[error("provenance covers {found} dimensions, expected {expected}")]
    ProvenanceDims { expected: usize, found: usize },
    #[error("token count {tokens} does not match provenance (index {winner})")]
    TokenCount { tokens: usize, winner: usize },
    #[error("t-SNE needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} must be in (0, {points})")]
    Perplexity { perplexity: f64, points: usize },
    #[error("all input points are identical")]
    Degenerate,
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("nothing to draw")]
    NoPoints,
}

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}
