//! Deterministic SVG charts from a small scene model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::skyline::{AccuracyMetric, MetricPoint, SizeMetric, Skyline};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MARKER_RADIUS: f64 = 4.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        stroke: &'static str,
        dashed: bool,
    },
    Polyline {
        points: Vec<(f64, f64)>,
        stroke: &'static str,
        dashed: bool,
        class: &'static str,
    },
    Circle {
        x: f64,
        y: f64,
        r: f64,
        fill: String,
        class: &'static str,
        tagger: String,
    },
    Rect {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        fill: &'static str,
        tagger: String,
        value: usize,
    },
    Text {
        x: f64,
        y: f64,
        text: String,
        anchor: &'static str,
        size: u32,
        rotate: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub shapes: Vec<Shape>,
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Scene {
    fn new(title: &str) -> Self {
        Scene {
            width: WIDTH,
            height: HEIGHT,
            title: title.to_string(),
            shapes: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, "<title>{}</title>", esc(&self.title));
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{:.0}" height="{:.0}" fill="white"/>"#,
            self.width, self.height
        );
        for shape in &self.shapes {
            match shape {
                Shape::Line {
                    x1,
                    y1,
                    x2,
                    y2,
                    stroke,
                    dashed,
                } => {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"{}/>"#,
                        if *dashed {
                            r#" stroke-dasharray="2,3""#
                        } else {
                            ""
                        }
                    );
                }
                Shape::Polyline {
                    points,
                    stroke,
                    dashed,
                    class,
                } => {
                    let coords: Vec<String> = points
                        .iter()
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{}/>"#,
                        coords.join(" "),
                        if *dashed {
                            r#" stroke-dasharray="6,4""#
                        } else {
                            ""
                        }
                    );
                }
                Shape::Circle {
                    x,
                    y,
                    r,
                    fill,
                    class,
                    tagger,
                } => {
                    let _ = writeln!(
                        out,
                        r#"<circle class="{class}" data-tagger="{}" cx="{x:.2}" cy="{y:.2}" r="{r:.1}" fill="{fill}" stroke="black" stroke-width="1"/>"#,
                        esc(tagger)
                    );
                }
                Shape::Rect {
                    x,
                    y,
                    w,
                    h,
                    fill,
                    tagger,
                    value,
                } => {
                    let _ = writeln!(
                        out,
                        r#"<rect class="bar" data-tagger="{}" data-value="{value}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#,
                        esc(tagger)
                    );
                }
                Shape::Text {
                    x,
                    y,
                    text,
                    anchor,
                    size,
                    rotate,
                } => {
                    let transform = if *rotate {
                        format!(r#" transform="rotate(-90 {x:.2} {y:.2})""#)
                    } else {
                        String::new()
                    };
                    let _ = writeln!(
                        out,
                        r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}"{transform}>{}</text>"#,
                        esc(text)
                    );
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn text(x: f64, y: f64, s: impl Into<String>, anchor: &'static str, size: u32) -> Shape {
    Shape::Text {
        x,
        y,
        text: s.into(),
        anchor,
        size,
        rotate: false,
    }
}

fn line(x1: f64, y1: f64, x2: f64, y2: f64) -> Shape {
    Shape::Line {
        x1,
        y1,
        x2,
        y2,
        stroke: "black",
        dashed: false,
    }
}

fn grid(x1: f64, y1: f64, x2: f64, y2: f64) -> Shape {
    Shape::Line {
        x1,
        y1,
        x2,
        y2,
        stroke: "#cccccc",
        dashed: true,
    }
}

/// Whole decades covering `[min, max]`.
fn decade_range(min: f64, max: f64) -> (i32, i32) {
    let lo = min.log10().floor() as i32;
    let mut hi = max.log10().ceil() as i32;
    if hi <= lo {
        hi = lo + 1;
    }
    (lo, hi)
}

/// Accuracy range in steps of 0.1 covering `[min, max]`, within `[0, 1]`.
fn accuracy_range(min: f64, max: f64) -> (f64, f64) {
    let mut lo = ((min * 10.0).floor() / 10.0).max(0.0);
    let mut hi = ((max * 10.0).ceil() / 10.0).min(1.0);
    if hi - lo < 0.1 - 1e-12 {
        if hi < 1.0 {
            hi = (lo + 0.1).min(1.0);
        } else {
            lo = (hi - 0.1).max(0.0);
        }
    }
    (lo, hi)
}

/// Maps data coordinates into the plot area.
struct Axes {
    decades: (i32, i32),
    accuracy: (f64, f64),
}

impl Axes {
    fn x(&self, size: f64) -> f64 {
        let (lo, hi) = self.decades;
        LEFT + (size.log10() - f64::from(lo)) / f64::from(hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, accuracy: f64) -> f64 {
        let (lo, hi) = self.accuracy;
        HEIGHT - BOTTOM - (accuracy - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Scatter of all points on a log-size axis with a dashed step line
/// through the given skyline members.
pub fn skyline_scene(points: &[MetricPoint], skyline: &Skyline) -> Scene {
    let first = points.first().or(skyline.points.first());
    let (language, size_metric, accuracy_metric) = first
        .map(|p| (p.language.as_str(), p.size_metric, p.accuracy_metric))
        .unwrap_or(("", SizeMetric::Memory, AccuracyMetric::Token));
    let mut scene = Scene::new(&format!(
        "{language}: {} vs {}",
        accuracy_metric.label(),
        size_metric.label()
    ));
    if points.is_empty() {
        return scene;
    }
    let sizes = points.iter().map(|p| p.size);
    let accs = points.iter().map(|p| p.accuracy);
    let axes = Axes {
        decades: decade_range(
            sizes.clone().fold(f64::INFINITY, f64::min),
            sizes.fold(0.0, f64::max),
        ),
        accuracy: accuracy_range(
            accs.clone().fold(f64::INFINITY, f64::min),
            accs.fold(0.0, f64::max),
        ),
    };
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);

    for d in axes.decades.0..=axes.decades.1 {
        let x = axes.x(10f64.powi(d));
        scene.shapes.push(grid(x, y0, x, y1));
        scene
            .shapes
            .push(text(x, y0 + 18.0, format!("1e{d}"), "middle", 11));
    }
    let steps = ((axes.accuracy.1 - axes.accuracy.0) * 10.0).round() as i32;
    for k in 0..=steps {
        let a = axes.accuracy.0 + f64::from(k) / 10.0;
        let y = axes.y(a);
        scene.shapes.push(grid(x0, y, x1, y));
        scene.shapes.push(text(
            x0 - 6.0,
            y + 4.0,
            format!("{:.0}", a * 100.0),
            "end",
            11,
        ));
    }
    scene.shapes.push(line(x0, y0, x1, y0));
    scene.shapes.push(line(x0, y0, x0, y1));
    scene.shapes.push(text(
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        format!("{} (log scale)", size_metric.label()),
        "middle",
        12,
    ));
    scene.shapes.push(Shape::Text {
        x: 18.0,
        y: (y0 + y1) / 2.0,
        text: format!("{} (%)", accuracy_metric.label()),
        anchor: "middle",
        size: 12,
        rotate: true,
    });
    scene
        .shapes
        .push(text(WIDTH / 2.0, 22.0, scene.title.clone(), "middle", 14));

    let mut step = Vec::new();
    for (i, p) in skyline.points.iter().enumerate() {
        let (x, y) = (axes.x(p.size), axes.y(p.accuracy));
        if i > 0 {
            let (_, prev_y) = *step.last().expect("non-empty");
            step.push((x, prev_y));
        }
        step.push((x, y));
    }
    step.dedup();
    scene.shapes.push(Shape::Polyline {
        points: step,
        stroke: "#444444",
        dashed: true,
        class: "skyline",
    });

    let mut colors: BTreeMap<&str, &'static str> = BTreeMap::new();
    for p in points {
        let n = colors.len();
        colors
            .entry(p.tagger.as_str())
            .or_insert(PALETTE[n % PALETTE.len()]);
    }
    for p in points {
        let on = skyline.contains(p);
        let (x, y) = (axes.x(p.size), axes.y(p.accuracy));
        scene.shapes.push(Shape::Circle {
            x,
            y,
            r: MARKER_RADIUS,
            fill: if on {
                colors[p.tagger.as_str()].to_string()
            } else {
                "white".to_string()
            },
            class: if on { "point skyline" } else { "point" },
            tagger: p.tagger.clone(),
        });
        scene
            .shapes
            .push(text(x + 6.0, y - 6.0, p.tagger.clone(), "start", 11));
    }
    scene
}

pub fn skyline_svg(points: &[MetricPoint], skyline: &Skyline) -> String {
    skyline_scene(points, skyline).render()
}

/// One bar group per size metric, one bar per tagger, heights 0..=languages.
pub fn counts_scene(
    counts: &BTreeMap<SizeMetric, BTreeMap<String, usize>>,
    languages: usize,
) -> Scene {
    let mut scene = Scene::new("Number of languages on the skyline per tagger");
    let top = languages.max(1);
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let y = |v: usize| y0 - v as f64 / top as f64 * (y0 - y1);
    for v in 0..=top {
        scene.shapes.push(grid(x0, y(v), x1, y(v)));
        scene
            .shapes
            .push(text(x0 - 6.0, y(v) + 4.0, v.to_string(), "end", 11));
    }
    scene.shapes.push(line(x0, y0, x1, y0));
    scene.shapes.push(line(x0, y0, x0, y1));
    scene
        .shapes
        .push(text(WIDTH / 2.0, 22.0, scene.title.clone(), "middle", 14));

    let taggers: Vec<&str> = {
        let mut all: Vec<&str> = counts
            .values()
            .flat_map(|m| m.keys().map(String::as_str))
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let groups = counts.len().max(1);
    let group_width = (x1 - x0) / groups as f64;
    let bar_width = group_width * 0.8 / taggers.len().max(1) as f64;
    for (g, (metric, per_tagger)) in counts.iter().enumerate() {
        let gx = x0 + g as f64 * group_width + group_width * 0.1;
        for (i, tagger) in taggers.iter().enumerate() {
            let value = per_tagger.get(*tagger).copied().unwrap_or(0);
            let bx = gx + i as f64 * bar_width;
            scene.shapes.push(Shape::Rect {
                x: bx,
                y: y(value),
                w: bar_width * 0.9,
                h: y0 - y(value),
                fill: PALETTE[i % PALETTE.len()],
                tagger: tagger.to_string(),
                value,
            });
            scene.shapes.push(text(
                bx + bar_width * 0.45,
                y(value) - 4.0,
                value.to_string(),
                "middle",
                10,
            ));
        }
        scene.shapes.push(text(
            gx + group_width * 0.4,
            y0 + 18.0,
            metric.as_str(),
            "middle",
            12,
        ));
    }
    for (i, tagger) in taggers.iter().enumerate() {
        let lx = x0 + 10.0 + i as f64 * 90.0;
        scene.shapes.push(Shape::Rect {
            x: lx,
            y: HEIGHT - 24.0,
            w: 10.0,
            h: 10.0,
            fill: PALETTE[i % PALETTE.len()],
            tagger: format!("legend:{tagger}"),
            value: 0,
        });
        scene.shapes.push(text(
            lx + 14.0,
            HEIGHT - 15.0,
            tagger.to_string(),
            "start",
            11,
        ));
    }
    scene
}

pub fn counts_svg(
    counts: &BTreeMap<SizeMetric, BTreeMap<String, usize>>,
    languages: usize,
) -> String {
    counts_scene(counts, languages).render()
}
