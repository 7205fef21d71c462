//! Vector drawings of shapes, derived only from attribute values.
//!
//! KIND picks the outline, ORIENT rotates it by quarter turns, DETAIL names
//! the decoration. Outlines are closed polygons in `[-1, 1]²`, listed
//! counter-clockwise before rotation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use refgame::world::{AttributeSchema, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub shape_id: usize,
    /// Attribute label per family, e.g. `{"KIND": "star", ...}` as ordered pairs.
    pub attributes: Vec<(String, String)>,
    pub outline: Vec<[f64; 2]>,
    pub rotation_deg: f64,
    pub decoration: String,
}

fn regular(n: usize, radius: f64, phase: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let a = phase + 2.0 * PI * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

fn star(points: usize, outer: f64, inner: f64) -> Vec<[f64; 2]> {
    (0..2 * points)
        .map(|i| {
            let r = if i % 2 == 0 { outer } else { inner };
            let a = PI / 2.0 + PI * i as f64 / points as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

fn outline(kind: &str, index: usize) -> Vec<[f64; 2]> {
    match kind {
        "circle" => regular(32, 0.9, 0.0),
        "square" => regular(4, 0.9, PI / 4.0),
        "triangle" => regular(3, 0.9, PI / 2.0),
        "star" => star(5, 0.95, 0.4),
        "cross" => vec![
            [-0.3, -0.9], [0.3, -0.9], [0.3, -0.3], [0.9, -0.3], [0.9, 0.3], [0.3, 0.3],
            [0.3, 0.9], [-0.3, 0.9], [-0.3, 0.3], [-0.9, 0.3], [-0.9, -0.3], [-0.3, -0.3],
        ],
        "heart" => (0..32)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 32.0;
                let x = 16.0 * t.sin().powi(3);
                let y = 13.0 * t.cos() - 5.0 * (2.0 * t).cos() - 2.0 * (3.0 * t).cos() - (4.0 * t).cos();
                [x / 18.0, y / 18.0]
            })
            .collect(),
        "moon" => {
            let mut pts: Vec<[f64; 2]> = (0..=16)
                .map(|i| {
                    let a = PI / 2.0 + PI * i as f64 / 16.0;
                    [0.9 * a.cos(), 0.9 * a.sin()]
                })
                .collect();
            pts.extend((0..=16).rev().map(|i| {
                let a = PI / 2.0 + PI * i as f64 / 16.0;
                [0.35 * a.cos(), 0.9 * a.sin()]
            }));
            pts
        }
        "arrow" => vec![[0.0, 0.95], [0.7, 0.2], [0.25, 0.2], [0.25, -0.9], [-0.25, -0.9], [-0.25, 0.2], [-0.7, 0.2]],
        _ => regular(3 + index, 0.9, PI / 2.0),
    }
}

/// The drawing of `shape`. The first family is the outline, the second the
/// rotation, the third the decoration; absent families fall back to defaults.
pub fn glyph(schema: &AttributeSchema, shape: &Shape) -> Glyph {
    let families = schema.families();
    let label = |f: usize| families.get(f).map(|fam| fam.labels[shape.attributes[f]].clone());
    let kind_index = shape.attributes.first().copied().unwrap_or(0);
    let turns = shape.attributes.get(1).copied().unwrap_or(0);
    Glyph {
        shape_id: shape.id,
        attributes: families
            .iter()
            .zip(&shape.attributes)
            .map(|(f, &v)| (f.name.clone(), f.labels[v].clone()))
            .collect(),
        outline: outline(label(0).as_deref().unwrap_or(""), kind_index),
        rotation_deg: 90.0 * turns as f64,
        decoration: label(2).unwrap_or_else(|| "solid".to_string()),
    }
}
