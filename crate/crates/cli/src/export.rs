use std::fmt::Write as _;

use serde_json::{json, Value};

use cellplan::decomp::DecompositionDoc;
use cellplan::geom::Point3;
use cellplan::optimize::PathDoc;

use crate::CliError;

pub enum Exportable {
    Decomposition(DecompositionDoc),
    Path(PathDoc),
}

/// Recognizes a decomposition or path document by its fields.
pub fn parse(text: &str) -> Result<Exportable, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::io(format!("not a JSON document: {e}")))?;
    let bad = |e: serde_json::Error| CliError::io(format!("malformed document: {e}"));
    if v.get("waypoints").is_some() {
        let doc: PathDoc = serde_json::from_value(v).map_err(bad)?;
        doc.validate().map_err(CliError::from)?;
        Ok(Exportable::Path(doc))
    } else if v.get("cells").is_some() && v.get("dims").is_some() {
        let doc: DecompositionDoc = serde_json::from_value(v).map_err(bad)?;
        doc.to_decomposition().map_err(CliError::from)?;
        Ok(Exportable::Decomposition(doc))
    } else {
        Err(CliError::io("document is neither a decomposition nor a path".into()))
    }
}

fn free_boxes(doc: &DecompositionDoc) -> Vec<(usize, Point3, Point3)> {
    let r = doc.resolution;
    doc.cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.obstacle)
        .map(|(i, c)| {
            (
                i,
                std::array::from_fn(|k| (c.lo[k] - 1) as f64 * r),
                std::array::from_fn(|k| c.hi[k] as f64 * r),
            )
        })
        .collect()
}

fn polyline(doc: &PathDoc) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::new();
    for p in &doc.waypoints {
        if out.last() != Some(p) {
            out.push(*p);
        }
    }
    out
}

pub fn to_json(x: &Exportable) -> Value {
    match x {
        Exportable::Decomposition(doc) => json!({
            "kind": "boxes",
            "boxes": free_boxes(doc)
                .into_iter()
                .map(|(cell, lo, hi)| json!({"cell": cell, "min": lo, "max": hi}))
                .collect::<Vec<_>>(),
        }),
        Exportable::Path(doc) => json!({
            "kind": "polyline",
            "planner": doc.planner,
            "length": doc.length,
            "points": polyline(doc),
        }),
    }
}

/// Wavefront OBJ: one closed box mesh per free cell, or one polyline.
pub fn to_obj(x: &Exportable) -> String {
    let mut s = String::new();
    match x {
        Exportable::Decomposition(doc) => {
            let mut base = 1;
            for (cell, lo, hi) in free_boxes(doc) {
                let _ = writeln!(s, "o cell_{cell}");
                for i in 0..8 {
                    let p = [
                        if i & 1 == 0 { lo[0] } else { hi[0] },
                        if i & 2 == 0 { lo[1] } else { hi[1] },
                        if i & 4 == 0 { lo[2] } else { hi[2] },
                    ];
                    let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
                }
                for f in [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]] {
                    let _ = writeln!(s, "f {} {} {} {}", base + f[0], base + f[1], base + f[2], base + f[3]);
                }
                base += 8;
            }
        }
        Exportable::Path(doc) => {
            let pts = polyline(doc);
            let _ = writeln!(s, "o path");
            for p in &pts {
                let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
            }
            if pts.len() >= 2 {
                let ids: Vec<String> = (1..=pts.len()).map(|i| i.to_string()).collect();
                let _ = writeln!(s, "l {}", ids.join(" "));
            }
        }
    }
    s
}
