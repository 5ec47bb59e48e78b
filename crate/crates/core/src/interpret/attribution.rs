//! Per-word scores from max-pool provenance, rendered as highlighted HTML.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{escape_xml, InterpretError};
use crate::nn::PoolProvenance;

/// Fraction of pooled dimensions won by each token, counting forward and
/// backward wins together.
pub fn word_scores(prov: &PoolProvenance, n_tokens: usize, hidden: usize) -> Result<Vec<f64>, InterpretError> {
    if prov.dims() != hidden {
        return Err(InterpretError::ProvenanceDims {
            expected: hidden,
            found: prov.dims(),
        });
    }
    let mut counts = vec![0usize; n_tokens];
    for w in prov.winners() {
        if w.token >= n_tokens {
            return Err(InterpretError::TokenCount {
                tokens: n_tokens,
                winner: w.token,
            });
        }
        counts[w.token] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / hidden as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightReport {
    pub tokens: Vec<String>,
    pub scores: Vec<f64>,
    pub predicted: String,
    pub gold: String,
    pub task: String,
}

impl HighlightReport {
    pub fn new(
        tokens: Vec<String>,
        scores: Vec<f64>,
        predicted: String,
        gold: String,
        task: String,
    ) -> Result<Self, InterpretError> {
        if tokens.len() != scores.len() {
            return Err(InterpretError::TokenCount {
                tokens: tokens.len(),
                winner: scores.len(),
            });
        }
        Ok(Self {
            tokens,
            scores,
            predicted,
            gold,
            task,
        })
    }
}

/// Highlight color; the score sets the alpha channel.
const HIGHLIGHT_RGB: (u8, u8, u8) = (214, 39, 40);

/// Standalone HTML page with one span per token, background opacity equal
/// to the token's score.
pub fn render_highlight(report: &HighlightReport) -> String {
    let (r, g, b) = HIGHLIGHT_RGB;
    let mut s = String::new();
    s.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(s, "<title>Word selection ({})</title>", escape_xml(&report.task));
    s.push_str("</head>\n<body style=\"font-family: sans-serif; margin: 2em;\">\n");
    let _ = writeln!(
        s,
        "<p class=\"labels\">task: <b>{}</b> &middot; gold: <b>{}</b> &middot; predicted: <b>{}</b></p>",
        escape_xml(&report.task),
        escape_xml(&report.gold),
        escape_xml(&report.predicted)
    );
    s.push_str("<p class=\"post\" style=\"font-size: 1.3em; line-height: 2;\">\n");
    for (tok, &score) in report.tokens.iter().zip(&report.scores) {
        let alpha = score.clamp(0.0, 1.0);
        let _ = writeln!(
            s,
            "<span class=\"token\" title=\"{alpha:.3}\" style=\"background-color: rgba({r}, {g}, {b}, {alpha:.3}); padding: 0.1em 0.25em;\">{}</span>",
            escape_xml(tok)
        );
    }
    s.push_str("</p>\n</body>\n</html>\n");
    s
}
