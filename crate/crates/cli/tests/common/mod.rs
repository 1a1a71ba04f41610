#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn c2po(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_c2po"))
        .args(args)
        .env_remove("C2PO_BACKEND_TIMEOUT_MS")
        .output()
        .expect("binary runs")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Story graph JSON with nodes `0..nodes`; `plot` lists the plot points in
/// order, `edges` are (from, to, weight).
pub fn graph_json(nodes: u32, plot: &[u32], edges: &[(u32, u32, f64)]) -> Value {
    json!({
        "plot_points": plot,
        "nodes": (0..nodes).map(|i| json!({
            "id": i,
            "text": if plot.contains(&i) { format!("Sam acts {i}") } else { format!("to do thing {i}") },
            "origin": if plot.contains(&i) { "plot_point" } else { "forward_inferred" },
            "depth": 0,
            "subject": "Sam",
            "bridge": null,
        })).collect::<Vec<_>>(),
        "edges": edges.iter().map(|&(f, t, w)| json!({"from": f, "to": t, "weight": w, "kind": "forward"})).collect::<Vec<_>>(),
        "params": {"k": 3, "n": 3},
    })
}
