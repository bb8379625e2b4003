//! Canonical serialization of results, verdicts, and trajectories.
//!
//! Output files must be byte-identical across runs and must survive a
//! load/re-serialize round trip unchanged, so floats are written in a fixed
//! scientific format with 17 significant digits (which uniquely identifies
//! an f64), fields appear in a fixed order, and reloaded geometry keeps the
//! file's vertex lists instead of recomputing them. All file writes go
//! through a write-temp-then-rename helper.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{PolyUnion, Polytope};
use crate::matrix::Matrix;
use crate::model::ModelBundle;
use crate::sysreach::{ReachMode, ReachResult, StepSemantics};
use crate::verify::{SafetyStatus, SafetyVerdict, Trajectory};

/// Fixed float format: 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `content` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: impl AsRef<Path>, content: &str) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::write(&tmp, content).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reach run plus the context needed to plot and re-check it.
#[derive(Debug, Clone)]
pub struct ResultDoc {
    pub model: String,
    pub mode: ReachMode,
    pub semantics: StepSemantics,
    pub horizon: usize,
    pub sigma0: usize,
    pub state_dim: usize,
    pub piece_counts: Vec<usize>,
    pub per_step: Vec<PolyUnion>,
    pub cumulative: PolyUnion,
    pub unsafe_label: Option<String>,
    pub unsafe_parts: Vec<Polytope>,
}

impl ResultDoc {
    pub fn from_run(result: &ReachResult, model: &ModelBundle, sigma0: usize) -> Self {
        let (unsafe_label, unsafe_parts) = match &model.unsafe_spec {
            Some(spec) => (
                Some(spec.label.clone()),
                spec.unsafe_region.parts().to_vec(),
            ),
            None => (None, Vec::new()),
        };
        ResultDoc {
            model: model.name.clone(),
            mode: result.mode,
            semantics: result.semantics,
            horizon: result.horizon(),
            sigma0,
            state_dim: model.system.state_dim(),
            piece_counts: result.piece_counts.clone(),
            per_step: result.per_step.clone(),
            cumulative: result.cumulative.clone(),
            unsafe_label,
            unsafe_parts,
        }
    }
}

fn push_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

fn push_matrix(out: &mut String, m: &Matrix) {
    out.push('[');
    for i in 0..m.rows() {
        if i > 0 {
            out.push_str(", ");
        }
        push_f64_array(out, m.row(i));
    }
    out.push(']');
}

fn push_points(out: &mut String, points: &[Vec<f64>]) {
    out.push('[');
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        push_f64_array(out, p);
    }
    out.push(']');
}

fn push_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Part with vertices, indented one step inside a parts array.
fn push_part(out: &mut String, part: &Polytope, indent: &str, with_vertices: bool) -> Result<()> {
    out.push_str(indent);
    out.push_str("{\"H\": ");
    push_matrix(out, part.h());
    out.push_str(", \"b\": ");
    push_f64_array(out, part.b());
    if with_vertices {
        out.push_str(", \"vertices\": ");
        push_points(out, part.vertices()?);
    }
    out.push('}');
    Ok(())
}

fn push_union(
    out: &mut String,
    union: &PolyUnion,
    indent: &str,
    with_vertices: bool,
) -> Result<()> {
    if union.num_parts() == 0 {
        out.push_str("[]");
        return Ok(());
    }
    out.push_str("[\n");
    let inner = format!("{indent}  ");
    for (i, part) in union.parts().iter().enumerate() {
        push_part(out, part, &inner, with_vertices)?;
        if i + 1 < union.num_parts() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
    Ok(())
}

/// Serialize a reach result document in its canonical layout.
pub fn result_to_json(doc: &ResultDoc) -> Result<String> {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str("  \"schema\": \"polyreach-result/v1\",\n");
    out.push_str("  \"model\": ");
    push_json_string(&mut out, &doc.model);
    out.push_str(",\n");
    let _ = writeln!(out, "  \"mode\": \"{}\",", doc.mode.as_str());
    let _ = writeln!(out, "  \"semantics\": \"{}\",", doc.semantics.as_str());
    let _ = writeln!(out, "  \"horizon\": {},", doc.horizon);
    let _ = writeln!(out, "  \"sigma0\": {},", doc.sigma0);
    let _ = writeln!(out, "  \"state_dim\": {},", doc.state_dim);
    out.push_str("  \"piece_counts\": [");
    for (i, c) in doc.piece_counts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{c}");
    }
    out.push_str("],\n");
    out.push_str("  \"per_step\": [\n");
    for (h, step) in doc.per_step.iter().enumerate() {
        let _ = write!(out, "    {{\"step\": {h}, \"parts\": ");
        push_union(&mut out, step, "    ", true)?;
        out.push('}');
        if h + 1 < doc.per_step.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ],\n");
    out.push_str("  \"cumulative\": {\"parts\": ");
    push_union(&mut out, &doc.cumulative, "  ", true)?;
    out.push_str("},\n");
    match (&doc.unsafe_label, doc.unsafe_parts.is_empty()) {
        (Some(label), false) => {
            out.push_str("  \"unsafe\": {\"label\": ");
            push_json_string(&mut out, label);
            out.push_str(", \"parts\": [\n");
            for (i, part) in doc.unsafe_parts.iter().enumerate() {
                push_part(&mut out, part, "    ", false)?;
                if i + 1 < doc.unsafe_parts.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str("  ]}\n");
        }
        _ => out.push_str("  \"unsafe\": null\n"),
    }
    out.push_str("}\n");
    Ok(out)
}

#[derive(Deserialize)]
struct RawResultDoc {
    schema: String,
    model: String,
    mode: String,
    semantics: String,
    horizon: usize,
    sigma0: usize,
    state_dim: usize,
    piece_counts: Vec<usize>,
    per_step: Vec<RawStep>,
    cumulative: RawParts,
    #[serde(rename = "unsafe")]
    unsafe_set: Option<RawUnsafeDoc>,
}

#[derive(Deserialize)]
struct RawStep {
    step: usize,
    parts: Vec<RawDocPart>,
}

#[derive(Deserialize)]
struct RawParts {
    parts: Vec<RawDocPart>,
}

#[derive(Deserialize)]
struct RawUnsafeDoc {
    label: String,
    parts: Vec<RawDocPart>,
}

#[derive(Deserialize)]
struct RawDocPart {
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    b: Vec<f64>,
    vertices: Option<Vec<Vec<f64>>>,
}

fn raw_part_to_polytope(raw: &RawDocPart, dim: usize) -> Result<Polytope> {
    // Keep the file's rows and vertices verbatim so re-serialization is
    // byte-identical.
    let h = Matrix::from_rows(dim, &raw.h)?;
    Polytope::from_trusted_rows(h, raw.b.clone(), raw.vertices.clone())
}

/// Parse a result document, trusting the file's canonical part order and
/// vertex lists.
pub fn result_from_json(text: &str) -> Result<ResultDoc> {
    let raw: RawResultDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<result>".into(),
        message: e.to_string(),
    })?;
    if raw.schema != "polyreach-result/v1" {
        return Err(Error::Parse {
            path: "<result>".into(),
            message: format!("unsupported schema '{}'", raw.schema),
        });
    }
    let dim = raw.state_dim;
    let mut per_step = Vec::with_capacity(raw.per_step.len());
    for (h, step) in raw.per_step.iter().enumerate() {
        if step.step != h {
            return Err(Error::Parse {
                path: "<result>".into(),
                message: format!("per_step[{h}] is labeled step {}", step.step),
            });
        }
        let parts = step
            .parts
            .iter()
            .map(|p| raw_part_to_polytope(p, dim))
            .collect::<Result<Vec<_>>>()?;
        per_step.push(PolyUnion::from_parts_trusted(dim, parts));
    }
    let cumulative = PolyUnion::from_parts_trusted(
        dim,
        raw.cumulative
            .parts
            .iter()
            .map(|p| raw_part_to_polytope(p, dim))
            .collect::<Result<Vec<_>>>()?,
    );
    let (unsafe_label, unsafe_parts) = match &raw.unsafe_set {
        Some(u) => (
            Some(u.label.clone()),
            u.parts
                .iter()
                .map(|p| raw_part_to_polytope(p, dim))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => (None, Vec::new()),
    };
    Ok(ResultDoc {
        model: raw.model,
        mode: raw.mode.parse()?,
        semantics: raw.semantics.parse()?,
        horizon: raw.horizon,
        sigma0: raw.sigma0,
        state_dim: dim,
        piece_counts: raw.piece_counts,
        per_step,
        cumulative,
        unsafe_label,
        unsafe_parts,
    })
}

/// Serialize a safety verdict.
pub fn verdict_to_json(
    verdict: &SafetyVerdict,
    model: &str,
    mode: ReachMode,
    semantics: StepSemantics,
    horizon: usize,
    sigma0: usize,
    label: &str,
) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str("  \"schema\": \"polyreach-verdict/v1\",\n");
    out.push_str("  \"model\": ");
    push_json_string(&mut out, model);
    out.push_str(",\n");
    let _ = writeln!(out, "  \"mode\": \"{}\",", mode.as_str());
    let _ = writeln!(out, "  \"semantics\": \"{}\",", semantics.as_str());
    let _ = writeln!(out, "  \"horizon\": {horizon},");
    let _ = writeln!(out, "  \"sigma0\": {sigma0},");
    out.push_str("  \"label\": ");
    push_json_string(&mut out, label);
    out.push_str(",\n");
    let _ = writeln!(out, "  \"status\": \"{}\",", verdict.status.as_str());
    match verdict.first_violation_step {
        Some(h) => {
            let _ = writeln!(out, "  \"first_violation_step\": {h},");
        }
        None => out.push_str("  \"first_violation_step\": null,\n"),
    }
    match &verdict.witness {
        Some(w) => {
            out.push_str("  \"witness\": ");
            push_f64_array(&mut out, w);
            out.push('\n');
        }
        None => out.push_str("  \"witness\": null\n"),
    }
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
struct RawVerdict {
    schema: String,
    #[allow(dead_code)]
    model: String,
    #[allow(dead_code)]
    mode: String,
    #[allow(dead_code)]
    semantics: String,
    #[allow(dead_code)]
    horizon: usize,
    #[allow(dead_code)]
    sigma0: usize,
    #[allow(dead_code)]
    label: String,
    status: String,
    first_violation_step: Option<usize>,
    witness: Option<Vec<f64>>,
}

pub fn verdict_from_json(text: &str) -> Result<SafetyVerdict> {
    let raw: RawVerdict = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<verdict>".into(),
        message: e.to_string(),
    })?;
    if raw.schema != "polyreach-verdict/v1" {
        return Err(Error::Parse {
            path: "<verdict>".into(),
            message: format!("unsupported schema '{}'", raw.schema),
        });
    }
    let status = match raw.status.as_str() {
        "safe" => SafetyStatus::Safe,
        "uncertain" => SafetyStatus::Uncertain,
        other => {
            return Err(Error::Parse {
                path: "<verdict>".into(),
                message: format!("unknown status '{other}'"),
            })
        }
    };
    Ok(SafetyVerdict {
        status,
        first_violation_step: raw.first_violation_step,
        witness: raw.witness,
    })
}

/// CSV with columns `traj_id,step,x1..x_n`.
pub fn trajectories_to_csv(trajectories: &[Trajectory], state_dim: usize) -> String {
    let mut out = String::from("traj_id,step");
    for i in 1..=state_dim {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for traj in trajectories {
        for (step, state) in traj.states.iter().enumerate() {
            let _ = write!(out, "{},{}", traj.id, step);
            for v in state {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
    }
    out
}

/// Parse the CSV written by [`trajectories_to_csv`].
pub fn trajectories_from_csv(text: &str) -> Result<Vec<Trajectory>> {
    let bad = |msg: String| Error::Parse {
        path: "<csv>".into(),
        message: msg,
    };
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return Err(bad("empty trajectory file".into()));
    };
    if !header.starts_with("traj_id,step") {
        return Err(bad(format!("unexpected header '{header}'")));
    }
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(bad(format!("line {}: too few columns", lineno + 2)));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("line {}: bad traj_id", lineno + 2)))?;
        let state: Vec<f64> = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| bad(format!("line {}: bad float '{f}'", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        match trajectories.last_mut() {
            Some(t) if t.id == id => t.states.push(state),
            _ => trajectories.push(Trajectory {
                id,
                states: vec![state],
            }),
        }
    }
    Ok(trajectories)
}
