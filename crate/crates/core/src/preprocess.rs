//! Text normalization for noisy social-media posts.
//!
//! The pipeline applied by [`clean_text`] runs in a fixed order:
//!
//! 1. URLs are removed (see [`URL_PATTERN`]).
//! 2. Emoji and pictographic codepoints are removed (see [`EMOJI_RANGES`]).
//! 3. Runs of two or more identical punctuation marks collapse to one.
//! 4. A single space is inserted before every remaining punctuation mark.
//! 5. Whitespace runs collapse to one space; the ends are trimmed.
//!
//! Case is preserved, nothing is stemmed and no stopwords are removed.
//! `#` and `@` are treated as part of the word they prefix.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// URL matcher: an `http://` or `https://` scheme, or a bare `t.co/` link,
/// up to the next whitespace character.
pub const URL_PATTERN: &str = r"(?i)(?:https?://|\bt\.co/)\S*";

/// Inclusive codepoint ranges stripped as emoji / pictographs.
pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x200D, 0x200D),   // zero width joiner
    (0x20E3, 0x20E3),   // combining enclosing keycap
    (0x2190, 0x21FF),   // arrows
    (0x2300, 0x23FF),   // miscellaneous technical
    (0x24C2, 0x24C2),   // circled M
    (0x25A0, 0x25FF),   // geometric shapes
    (0x2600, 0x26FF),   // miscellaneous symbols
    (0x2700, 0x27BF),   // dingbats
    (0x2900, 0x297F),   // supplemental arrows-B
    (0x2B00, 0x2BFF),   // miscellaneous symbols and arrows
    (0x3030, 0x3030),   // wavy dash
    (0x303D, 0x303D),   // part alternation mark
    (0x3297, 0x3299),   // circled ideographs
    (0xFE00, 0xFE0F),   // variation selectors
    (0x1F000, 0x1F0FF), // mahjong, domino, playing cards
    (0x1F100, 0x1F1FF), // enclosed alphanumeric supplement, regional indicators
    (0x1F200, 0x1F2FF), // enclosed ideographic supplement
    (0x1F300, 0x1F5FF), // miscellaneous symbols and pictographs
    (0x1F600, 0x1F64F), // emoticons
    (0x1F680, 0x1F6FF), // transport and map symbols
    (0x1F700, 0x1F77F), // alchemical symbols
    (0x1F780, 0x1F7FF), // geometric shapes extended
    (0x1F800, 0x1F8FF), // supplemental arrows-C
    (0x1F900, 0x1F9FF), // supplemental symbols and pictographs
    (0x1FA00, 0x1FA6F), // chess symbols
    (0x1FA70, 0x1FAFF), // symbols and pictographs extended-A
    (0xE0020, 0xE007F), // tag characters (flag sequences)
];

/// A labelled post as read from a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    pub label: String,
    pub task: String,
}

/// A tokenized post whose label has been resolved against its task's label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanPost {
    pub id: String,
    pub tokens: Vec<String>,
    pub label_id: usize,
    pub task: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("post {id}: label {label:?} is not in the label set of task {task:?}")]
    UnknownLabel { id: String, label: String, task: String },
    #[error("post has an empty id")]
    EmptyId,
}

impl RawPost {
    /// Cleans and tokenizes the text and resolves the label against `labels`.
    pub fn into_clean(self, labels: &[String]) -> Result<CleanPost, LabelError> {
        if self.id.is_empty() {
            return Err(LabelError::EmptyId);
        }
        let label_id = labels
            .iter()
            .position(|l| *l == self.label)
            .ok_or_else(|| LabelError::UnknownLabel {
                id: self.id.clone(),
                label: self.label.clone(),
                task: self.task.clone(),
            })?;
        Ok(CleanPost {
            tokens: tokenize(&clean_text(&self.text)),
            id: self.id,
            label_id,
            task: self.task,
        })
    }
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(URL_PATTERN).expect("URL pattern compiles"))
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES
        .iter()
        .any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Punctuation marks that get split off as their own tokens.
pub fn is_punctuation(c: char) -> bool {
    if c == '#' || c == '@' {
        return false;
    }
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '“' | '”' | '‘' | '’' | '«' | '»' | '¡' | '¿' | '\u{2013}' | '\u{2014}'
        )
}

pub fn clean_text(raw: &str) -> String {
    let without_urls = url_regex().replace_all(raw, " ");

    let mut out = String::with_capacity(without_urls.len() + 8);
    let mut prev_punct: Option<char> = None;
    let mut pending_space = false;
    for c in without_urls.chars().filter(|&c| !is_emoji(c)) {
        if c.is_whitespace() {
            pending_space = true;
            prev_punct = None;
            continue;
        }
        if is_punctuation(c) {
            if prev_punct == Some(c) {
                continue;
            }
            prev_punct = Some(c);
            pending_space = true;
        } else {
            prev_punct = None;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}

/// Splits text produced by [`clean_text`] on spaces.
///
/// Empty pieces are skipped, so text that was not cleaned first still yields
/// non-empty tokens.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}
