//! Barycentric export of a risk measure over the three sets `a`, `b`,
//! `(a∪b)ᶜ`, rendered as a static SVG or CSV.

use std::fmt::Write as _;

use num::{One, Signed};
use serde_json::{json, Value};
use thiserror::Error;

use crate::classify::first_chain;
use crate::measure::{Measure, MeasureError, Partition};
use crate::pasting::{rectangle_vertices, PasteError};
use crate::rational::{fmt_q, to_f64, Q};
use crate::risk::RiskMeasure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplexError {
    #[error("sets must be disjoint and nonempty, with a nonempty complement of their union")]
    BadSets,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Paste(#[from] PasteError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenePoint {
    pub label: String,
    /// `(ℙ(a), ℙ(b), ℙ((a∪b)ᶜ))`.
    pub coords: [Q; 3],
    pub role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenePolygon {
    pub label: String,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSegment {
    pub label: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexScene {
    /// The blocks `a`, `b`, `(a∪b)ᶜ`, in that order.
    pub blocks: [Vec<usize>; 3],
    pub points: Vec<ScenePoint>,
    pub polygons: Vec<ScenePolygon>,
    pub segments: Vec<SceneSegment>,
}

impl SimplexScene {
    /// A scene with no points, for an abstract three-block split.
    pub fn empty(a: Vec<usize>, b: Vec<usize>, rest: Vec<usize>) -> Self {
        SimplexScene {
            blocks: [a, b, rest],
            points: Vec::new(),
            polygons: Vec::new(),
            segments: Vec::new(),
        }
    }

    pub fn partition(&self, n: usize) -> Result<Partition, MeasureError> {
        Partition::new(n, self.blocks.to_vec())
    }

    pub fn coords_of(&self, p: &Measure) -> [Q; 3] {
        [p.mass(&self.blocks[0]), p.mass(&self.blocks[1]), p.mass(&self.blocks[2])]
    }

    fn find(&self, c: &[Q; 3]) -> Option<usize> {
        self.points.iter().position(|p| &p.coords == c)
    }

    fn push(&mut self, label: String, coords: [Q; 3], role: Option<String>) -> usize {
        self.points.push(ScenePoint { label, coords, role });
        self.points.len() - 1
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,pA,pB,pRest\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.label, fmt_q(&p.coords[0]), fmt_q(&p.coords[1]), fmt_q(&p.coords[2]));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "blocks": self.blocks,
            "points": self.points.iter().map(|p| json!({
                "label": p.label,
                "coords": p.coords.iter().map(fmt_q).collect::<Vec<_>>(),
                "role": p.role,
            })).collect::<Vec<_>>(),
            "polygons": self.polygons.iter().map(|g| json!({"label": g.label, "points": g.points})).collect::<Vec<_>>(),
            "segments": self.segments.iter().map(|s| json!({"label": s.label, "from": s.from, "to": s.to})).collect::<Vec<_>>(),
        })
    }
}

/// Hull of the projected points in CCW order, using `(pA, pB)` as chart.
fn hull_2d(scene: &SimplexScene, idx: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = Vec::new();
    for &i in idx {
        if !ids.iter().any(|&j| scene.points[j].coords == scene.points[i].coords) {
            ids.push(i);
        }
    }
    let xy = |i: usize| (&scene.points[i].coords[0], &scene.points[i].coords[1]);
    ids.sort_by(|&i, &j| xy(i).cmp(&xy(j)));
    if ids.len() < 3 {
        return ids;
    }
    let cross = |o: usize, a: usize, b: usize| -> Q {
        let (ox, oy) = xy(o);
        let (ax, ay) = xy(a);
        let (bx, by) = xy(b);
        (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &ids {
        while lower.len() >= 2 && !cross(lower[lower.len() - 2], lower[lower.len() - 1], i).is_positive() {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in ids.iter().rev() {
        while upper.len() >= 2 && !cross(upper[upper.len() - 2], upper[upper.len() - 1], i).is_positive() {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Projects generators, the σ(a) rectangle and, when one exists, the
/// contradiction chain for `(a, b)`.
pub fn project(rm: &RiskMeasure, a: &[usize], b: &[usize]) -> Result<SimplexScene, SimplexError> {
    let n = rm.space().len();
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    if a.is_empty() || b.is_empty() || a.iter().chain(&b).any(|&i| i >= n) || a.iter().any(|i| b.contains(i)) {
        return Err(SimplexError::BadSets);
    }
    let rest: Vec<usize> = (0..n).filter(|i| !a.contains(i) && !b.contains(i)).collect();
    if rest.is_empty() {
        return Err(SimplexError::BadSets);
    }
    let mut scene = SimplexScene::empty(a.clone(), b.clone(), rest);

    let mut gen_idx = Vec::new();
    for (k, g) in rm.gens().iter().enumerate() {
        let c = scene.coords_of(g);
        let i = match scene.find(&c) {
            Some(i) => i,
            None => scene.push(format!("g{}", k + 1), c, None),
        };
        gen_idx.push(i);
    }
    let hull = hull_2d(&scene, &gen_idx);
    scene.polygons.push(ScenePolygon { label: "P".into(), points: hull });

    let sigma_a = Partition::from_set(n, &a)?;
    let mut rect_idx = Vec::new();
    for (k, v) in rectangle_vertices(rm, &sigma_a)?.iter().enumerate() {
        let c = scene.coords_of(v);
        let i = match scene.find(&c) {
            Some(i) => i,
            None => scene.push(format!("r{}", k + 1), c, None),
        };
        rect_idx.push(i);
    }
    let hull = hull_2d(&scene, &rect_idx);
    scene.polygons.push(ScenePolygon { label: "rectangle".into(), points: hull });

    if let Some(chain) = first_chain(rm, &a, &b) {
        let base = scene.points.len();
        for (k, (z, role)) in chain.z.iter().zip(chain.roles).enumerate() {
            let c = scene.coords_of(z);
            scene.push(format!("z{}", k + 1), c, Some(role.to_string()));
        }
        scene.segments.push(SceneSegment { label: "z4-z5".into(), from: base + 3, to: base + 4 });
        scene.segments.push(SceneSegment { label: "z5-z6".into(), from: base + 4, to: base + 5 });
    }
    Ok(scene)
}

const CORNER_A: (f64, f64) = (300.0, 35.0);
const CORNER_B: (f64, f64) = (40.0, 485.333);
const CORNER_REST: (f64, f64) = (560.0, 485.333);

/// Canvas position of a barycentric triple.
pub fn to_canvas(c: &[Q; 3]) -> (f64, f64) {
    let (wa, wb, wr) = (to_f64(&c[0]), to_f64(&c[1]), to_f64(&c[2]));
    (
        wa * CORNER_A.0 + wb * CORNER_B.0 + wr * CORNER_REST.0,
        wa * CORNER_A.1 + wb * CORNER_B.1 + wr * CORNER_REST.1,
    )
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn pt(p: (f64, f64)) -> String {
    format!("{:.3},{:.3}", p.0, p.1)
}

pub fn render_svg(scene: &SimplexScene) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<!-- Barycentric simplex. A point (pA, pB, pRest) is drawn at\n");
    s.push_str("     pA*A + pB*B + pRest*R with A=(300,35), B=(40,485.333), R=(560,485.333)\n");
    s.push_str("     on a 600x520 canvas; the triangle is equilateral with side 520. -->\n");
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"600\" height=\"520\" viewBox=\"0 0 600 520\">\n");
    let _ = writeln!(
        s,
        "  <polygon points=\"{} {} {}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>",
        pt(CORNER_A),
        pt(CORNER_B),
        pt(CORNER_REST)
    );
    let _ = writeln!(s, "  <text x=\"300.000\" y=\"25.000\" text-anchor=\"middle\" font-family=\"serif\" font-size=\"16\">A</text>");
    let _ = writeln!(s, "  <text x=\"30.000\" y=\"505.333\" text-anchor=\"middle\" font-family=\"serif\" font-size=\"16\">B</text>");
    let _ = writeln!(s, "  <text x=\"570.000\" y=\"505.333\" text-anchor=\"middle\" font-family=\"serif\" font-size=\"16\">(A&#8746;B)&#7580;</text>");

    for g in &scene.polygons {
        let coords: Vec<String> = g.points.iter().map(|&i| pt(to_canvas(&scene.points[i].coords))).collect();
        let style = if g.label == "P" {
            "fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"#3182bd\" stroke-width=\"1.5\""
        } else {
            "fill=\"none\" stroke=\"#e6550d\" stroke-width=\"1.5\" stroke-dasharray=\"2,3\""
        };
        match coords.len() {
            0 => {}
            1 => {}
            2 => {
                let _ = writeln!(s, "  <polyline class=\"{}\" points=\"{}\" {}/>", esc(&g.label), coords.join(" "), style);
            }
            _ => {
                let _ = writeln!(s, "  <polygon class=\"{}\" points=\"{}\" {}/>", esc(&g.label), coords.join(" "), style);
            }
        }
    }
    for seg in &scene.segments {
        let (x1, y1) = to_canvas(&scene.points[seg.from].coords);
        let (x2, y2) = to_canvas(&scene.points[seg.to].coords);
        let _ = writeln!(
            s,
            "  <line class=\"{}\" x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"#636363\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>",
            esc(&seg.label)
        );
    }
    // coincident points share one marker and a joined label
    let mut groups: Vec<(&[Q; 3], Vec<&str>, bool)> = Vec::new();
    for p in &scene.points {
        match groups.iter_mut().find(|g| g.0 == &p.coords) {
            Some(g) => {
                g.1.push(&p.label);
                g.2 |= p.role.is_some();
            }
            None => groups.push((&p.coords, vec![&p.label], p.role.is_some())),
        }
    }
    for (coords, names, chain) in &groups {
        let (x, y) = to_canvas(coords);
        let fill = if *chain { "#31a354" } else { "black" };
        let _ = writeln!(s, "  <circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"{fill}\"/>");
        let _ = writeln!(
            s,
            "  <text x=\"{:.3}\" y=\"{:.3}\" font-family=\"serif\" font-size=\"12\">{}</text>",
            x + 5.0,
            y - 5.0,
            esc(&names.join(" = "))
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Every projected triple is a probability vector.
pub fn is_valid(scene: &SimplexScene) -> bool {
    scene.points.iter().all(|p| {
        p.coords.iter().all(|c| !c.is_negative()) && p.coords.iter().sum::<Q>() == Q::one()
    }) && scene.polygons.iter().all(|g| g.points.iter().all(|&i| i < scene.points.len()))
        && scene.segments.iter().all(|s| s.from < scene.points.len() && s.to < scene.points.len())
}
