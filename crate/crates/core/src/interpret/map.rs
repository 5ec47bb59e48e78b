//! Static SVG scatter of projected sentence vectors.
//!
//! Markers are colored by (task, gold label); correct predictions are
//! circles and incorrect ones crosses. Every marker element carries the
//! `marker` class.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{escape_xml, InterpretError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub task: String,
    pub gold: String,
    pub predicted: String,
}

impl MapPoint {
    pub fn correct(&self) -> bool {
        self.gold == self.predicted
    }
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 640.0;
const PLOT: f64 = 600.0;
const MARGIN: f64 = 20.0;
const R: f64 = 4.0;

pub fn render_map(points: &[MapPoint]) -> Result<String, InterpretError> {
    if points.is_empty() {
        return Err(InterpretError::NoPoints);
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(InterpretError::NonFinite);
    }
    let keys: BTreeSet<(&str, &str)> = points.iter().map(|p| (p.task.as_str(), p.gold.as_str())).collect();
    let keys: Vec<(&str, &str)> = keys.into_iter().collect();
    let color = |p: &MapPoint| {
        let i = keys
            .iter()
            .position(|k| *k == (p.task.as_str(), p.gold.as_str()))
            .expect("key collected above");
        PALETTE[i % PALETTE.len()]
    };

    let (xmin, xmax) = bounds(points.iter().map(|p| p.x));
    let (ymin, ymax) = bounds(points.iter().map(|p| p.y));
    let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let scale = PLOT / span;
    let sx = |x: f64| MARGIN + (x - xmin) * scale + (PLOT - (xmax - xmin) * scale) / 2.0;
    let sy = |y: f64| MARGIN + (ymax - y) * scale + (PLOT - (ymax - ymin) * scale) / 2.0;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n<g id=\"points\">\n");
    for p in points {
        let (x, y, c) = (sx(p.x), sy(p.y), color(p));
        if p.correct() {
            let _ = writeln!(
                s,
                "<circle class=\"marker correct\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{R}\" fill=\"{c}\" fill-opacity=\"0.75\"/>"
            );
        } else {
            let _ = writeln!(
                s,
                "<path class=\"marker cross\" d=\"M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}\" stroke=\"{c}\" stroke-width=\"1.5\" fill=\"none\"/>",
                x - R, y - R, x + R, y + R, x - R, y + R, x + R, y - R
            );
        }
    }
    s.push_str("</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let lx = PLOT + 2.0 * MARGIN + 10.0;
    for (i, (task, label)) in keys.iter().enumerate() {
        let y = MARGIN + 20.0 * i as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{lx}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{}\" y=\"{}\">{}: {}</text>",
            PALETTE[i % PALETTE.len()],
            lx + 16.0,
            y + 10.0,
            escape_xml(task),
            escape_xml(label)
        );
    }
    let y = MARGIN + 20.0 * keys.len() as f64 + 10.0;
    let _ = writeln!(
        s,
        "<text x=\"{lx}\" y=\"{y}\">&#9679; correct</text><text x=\"{lx}\" y=\"{}\">&#215; incorrect</text>",
        y + 18.0
    );
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// CSV `id,task,gold,pred,x,y`.
pub fn write_coordinates_csv<W: Write>(points: &[MapPoint], w: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["id", "task", "gold", "pred", "x", "y"])?;
    for p in points {
        w.write_record([
            p.id.as_str(),
            p.task.as_str(),
            p.gold.as_str(),
            p.predicted.as_str(),
            &format!("{:.6}", p.x),
            &format!("{:.6}", p.y),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(i: usize, correct: bool) -> MapPoint {
        MapPoint {
            id: i.to_string(),
            x: i as f64,
            y: (i * i) as f64,
            task: "t".into(),
            gold: format!("g{}", i % 2),
            predicted: if correct { format!("g{}", i % 2) } else { "other".into() },
        }
    }

    #[test]
    fn one_marker_per_point() {
        let pts: Vec<MapPoint> = (0..7).map(|i| pt(i, i % 3 != 0)).collect();
        let svg = render_map(&pts).unwrap();
        assert_eq!(svg.matches("class=\"marker").count(), 7);
        assert_eq!(svg.matches("class=\"marker cross\"").count(), 3);
    }

    #[test]
    fn no_crosses_when_all_correct() {
        let pts: Vec<MapPoint> = (0..5).map(|i| pt(i, true)).collect();
        let svg = render_map(&pts).unwrap();
        assert_eq!(svg.matches("class=\"marker cross\"").count(), 0);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn single_point_and_empty() {
        assert!(render_map(&[pt(0, true)]).is_ok());
        assert!(matches!(render_map(&[]), Err(InterpretError::NoPoints)));
    }

    #[test]
    fn coordinates_csv() {
        let mut out = Vec::new();
        write_coordinates_csv(&[pt(2, false)], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "id,task,gold,pred,x,y\n2,t,g0,other,2.000000,4.000000\n"
        );
    }
}
