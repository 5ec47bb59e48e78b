//! Byte-exact golden files: preprocessing pairs, map SVG and highlight HTML.
//!
//! The SVG and HTML goldens were generated once and reviewed by eye; set
//! `DEEPHATE_BLESS=1` to regenerate them after an intentional change.

use std::path::PathBuf;

use deephate::interpret::{render_highlight, render_map, HighlightReport, MapPoint};
use deephate::{clean_text, tokenize};
use serde::Deserialize;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_rendered(name: &str, rendered: &str) {
    let path = golden(name);
    if std::env::var_os("DEEPHATE_BLESS").is_some() {
        std::fs::write(&path, rendered).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert!(expected == rendered, "{name} differs from the golden file");
}

#[derive(Deserialize)]
pub struct Pair {
    pub raw: String,
    pub clean: String,
}

#[test]
fn preprocessing_pairs() {
    let pairs: Vec<Pair> = serde_json::from_str(&std::fs::read_to_string(golden("preprocess.json")).unwrap()).unwrap();
    assert_eq!(pairs.len(), 20);
    for p in &pairs {
        let got = clean_text(&p.raw);
        assert_eq!(got, p.clean, "raw {:?}", p.raw);
        assert_eq!(tokenize(&got).join(" "), p.clean);
    }
}

pub fn six_points() -> Vec<MapPoint> {
    let rows = [
        ("p1", -3.0, 1.0, "davidson", "hate", "hate"),
        ("p2", -2.5, 2.0, "davidson", "hate", "offensive"),
        ("p3", 0.0, -1.0, "davidson", "offensive", "offensive"),
        ("p4", 0.5, -2.0, "davidson", "neither", "neither"),
        ("p5", 2.0, 3.0, "waseem", "racism", "racism"),
        ("p6", 3.0, 0.5, "waseem", "sexism", "neither"),
    ];
    rows.iter()
        .map(|&(id, x, y, task, gold, pred)| MapPoint {
            id: id.into(),
            x,
            y,
            task: task.into(),
            gold: gold.into(),
            predicted: pred.into(),
        })
        .collect()
}

#[test]
fn six_point_map() {
    check_rendered("map_six_points.svg", &render_map(&six_points()).unwrap());
}

#[test]
fn three_token_highlight() {
    let report = HighlightReport::new(
        vec!["you".into(), "filthy".into(), "vermin".into()],
        vec![0.125, 0.25, 0.625],
        "hate".into(),
        "hate".into(),
        "davidson".into(),
    )
    .unwrap();
    check_rendered("highlight_three_tokens.html", &render_highlight(&report));
}
