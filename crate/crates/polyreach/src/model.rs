//! Model bundle: system, controller, switching signal, initial and unsafe
//! sets, loaded from a JSON file and cross-validated with precise error
//! locations.
//!
//! Top-level schema:
//!
//! ```json
//! {
//!   "metadata": {"name": "...", "description": "..."},
//!   "system":   {"modes": [{"A": [[...]], "B": [[...]]}, ...]},
//!   "switching": {"kind": "periodic", "order": [1, 2], "sigma0": 1},
//!   "network":  {"layers": [{"W": [[...]], "theta": [...], "kind": "relu"}, ...]},
//!   "initial_set": {"parts": [{"H": [[...]], "b": [...]}]},
//!   "unsafe":   {"parts": [{"box": {"center": [4, 4], "radius": 1}}], "label": "..."}
//! }
//! ```
//!
//! Anywhere a polytope part is expected, the sugar
//! `{"box": {"center": [...], "radius": r}}` denotes the infinity-norm ball;
//! `initial_set` and `unsafe` also accept a single top-level `box`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{PolyUnion, Polytope};
use crate::matrix::Matrix;
use crate::nn::{Activation, Layer, ReluNetwork};
use crate::sysreach::{Mode, PwlSystem, SignalKind, SwitchingSignal};
use crate::verify::SafetySpec;

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub name: String,
    pub description: String,
    pub system: PwlSystem,
    pub switching: SwitchingSignal,
    pub network: ReluNetwork,
    pub initial_set: PolyUnion,
    pub unsafe_spec: Option<SafetySpec>,
}

impl ModelBundle {
    /// Switching signal with sigma0 overridden (periodic signals restart at
    /// the first occurrence of that mode).
    pub fn switching_with_sigma0(&self, sigma0: Option<usize>) -> Result<SwitchingSignal> {
        let Some(sigma0) = sigma0 else {
            return Ok(self.switching.clone());
        };
        match self.switching.kind() {
            SignalKind::Periodic(order) => {
                SwitchingSignal::periodic_starting_at(order.clone(), sigma0)
            }
            SignalKind::Explicit(seq) => {
                let first = seq[self.switching.start_index()];
                if first != sigma0 {
                    return Err(Error::Usage(format!(
                        "--sigma0 {sigma0} conflicts with the explicit sequence starting at mode {first}"
                    )));
                }
                Ok(self.switching.clone())
            }
        }
    }

    /// Mode at time 0 under the bundled signal.
    pub fn sigma0(&self) -> usize {
        self.switching.mode_at(0).expect("validated signal")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    metadata: Option<RawMeta>,
    system: RawSystem,
    switching: RawSwitching,
    network: RawNetwork,
    initial_set: RawSet,
    #[serde(rename = "unsafe")]
    unsafe_set: Option<RawUnsafe>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    name: Option<String>,
    description: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    modes: Vec<RawMode>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwitching {
    kind: String,
    order: Option<Vec<usize>>,
    sequence: Option<Vec<usize>>,
    sigma0: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    layers: Vec<RawLayer>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    theta: Vec<f64>,
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    parts: Option<Vec<RawPart>>,
    #[serde(rename = "box")]
    ball: Option<RawBox>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUnsafe {
    parts: Option<Vec<RawPart>>,
    #[serde(rename = "box")]
    ball: Option<RawBox>,
    label: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPart {
    #[serde(rename = "H")]
    h: Option<Vec<Vec<f64>>>,
    b: Option<Vec<f64>>,
    #[serde(rename = "box")]
    ball: Option<RawBox>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    center: Vec<f64>,
    radius: f64,
}

/// Load and validate a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: RawModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    validate(raw)
}

/// Parse and validate a model from a JSON string (used by the bindings).
pub fn parse_model(text: &str) -> Result<ModelBundle> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: "<string>".into(),
        message: e.to_string(),
    })?;
    validate(raw)
}

fn matrix_field(rows: &[Vec<f64>], field: &str) -> Result<Matrix> {
    if rows.is_empty() {
        return Err(Error::Model(format!("{field}: matrix has no rows")));
    }
    let cols = rows[0].len();
    Matrix::from_rows(cols, rows).map_err(|e| Error::Model(format!("{field}: {e}")))
}

fn expect_shape(m: &Matrix, rows: usize, cols: usize, field: &str) -> Result<()> {
    if m.rows() != rows || m.cols() != cols {
        return Err(Error::Model(format!(
            "{field}: expected a {rows}x{cols} matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn part_to_polytope(part: &RawPart, dim: usize, field: &str) -> Result<Polytope> {
    match (&part.h, &part.b, &part.ball) {
        (Some(h), Some(b), None) => {
            let h = matrix_field(h, &format!("{field}.H"))?;
            if h.cols() != dim {
                return Err(Error::Model(format!(
                    "{field}.H: expected {dim} columns, got {}",
                    h.cols()
                )));
            }
            if b.len() != h.rows() {
                return Err(Error::Model(format!(
                    "{field}.b: expected {} entries, got {}",
                    h.rows(),
                    b.len()
                )));
            }
            Polytope::new(h, b.clone()).map_err(|e| Error::Model(format!("{field}: {e}")))
        }
        (None, None, Some(ball)) => box_to_polytope(ball, dim, field),
        _ => Err(Error::Model(format!(
            "{field}: provide either H and b, or a box"
        ))),
    }
}

fn box_to_polytope(ball: &RawBox, dim: usize, field: &str) -> Result<Polytope> {
    if ball.center.len() != dim {
        return Err(Error::Model(format!(
            "{field}.box.center: expected {dim} entries, got {}",
            ball.center.len()
        )));
    }
    if !(ball.radius.is_finite() && ball.radius >= 0.0) {
        return Err(Error::Model(format!(
            "{field}.box.radius: must be finite and >= 0"
        )));
    }
    Polytope::bounding_box_set(&ball.center, ball.radius)
        .map_err(|e| Error::Model(format!("{field}.box: {e}")))
}

fn set_to_union(
    parts: &Option<Vec<RawPart>>,
    ball: &Option<RawBox>,
    dim: usize,
    field: &str,
) -> Result<PolyUnion> {
    let polys: Vec<Polytope> = match (parts, ball) {
        (Some(parts), None) => parts
            .iter()
            .enumerate()
            .map(|(i, p)| part_to_polytope(p, dim, &format!("{field}.parts[{i}]")))
            .collect::<Result<_>>()?,
        (None, Some(ball)) => vec![box_to_polytope(ball, dim, field)?],
        _ => {
            return Err(Error::Model(format!(
                "{field}: provide either parts or a box"
            )))
        }
    };
    PolyUnion::new(dim, polys).map_err(|e| Error::Model(format!("{field}: {e}")))
}

fn validate(raw: RawModel) -> Result<ModelBundle> {
    if raw.system.modes.is_empty() {
        return Err(Error::Model("system.modes: N >= 1 required".into()));
    }

    let first_a = matrix_field(&raw.system.modes[0].a, "system.modes[0].A")?;
    let n_x = first_a.rows();
    if first_a.cols() != n_x {
        return Err(Error::Model(format!(
            "system.modes[0].A: must be square, got {}x{}",
            first_a.rows(),
            first_a.cols()
        )));
    }
    let first_b = matrix_field(&raw.system.modes[0].b, "system.modes[0].B")?;
    if first_b.rows() != n_x {
        return Err(Error::Model(format!(
            "system.modes[0].B: expected {n_x} rows, got {}",
            first_b.rows()
        )));
    }
    let n_u = first_b.cols();

    let mut modes = Vec::with_capacity(raw.system.modes.len());
    for (i, m) in raw.system.modes.iter().enumerate() {
        let a = matrix_field(&m.a, &format!("system.modes[{i}].A"))?;
        expect_shape(&a, n_x, n_x, &format!("system.modes[{i}].A"))?;
        let b = matrix_field(&m.b, &format!("system.modes[{i}].B"))?;
        expect_shape(&b, n_x, n_u, &format!("system.modes[{i}].B"))?;
        modes.push(Mode { a, b });
    }
    let system = PwlSystem::new(modes)?;

    if raw.network.layers.is_empty() {
        return Err(Error::Model("network.layers: at least one layer".into()));
    }
    let mut layers = Vec::with_capacity(raw.network.layers.len());
    let mut prev_width = n_x;
    for (i, l) in raw.network.layers.iter().enumerate() {
        let w = matrix_field(&l.w, &format!("network.layers[{i}].W"))?;
        if w.cols() != prev_width {
            return Err(Error::Model(format!(
                "network.layers[{i}].W: expected {prev_width} columns, got {}",
                w.cols()
            )));
        }
        if l.theta.len() != w.rows() {
            return Err(Error::Model(format!(
                "network.layers[{i}].theta: expected {} entries, got {}",
                w.rows(),
                l.theta.len()
            )));
        }
        let activation = match l.kind.as_str() {
            "relu" => Activation::Relu,
            "linear" => Activation::Linear,
            other => {
                return Err(Error::Model(format!(
                    "network.layers[{i}].kind: unknown activation kind '{other}' (expected relu or linear)"
                )))
            }
        };
        prev_width = w.rows();
        layers.push(Layer::new(w, l.theta.clone(), activation)?);
    }
    if prev_width != n_u {
        return Err(Error::Model(format!(
            "network: output width {prev_width} must equal the control dimension {n_u}"
        )));
    }
    let network = ReluNetwork::new(layers)?;

    let switching = validate_switching(&raw.switching, system.num_modes())?;

    let initial_set = set_to_union(
        &raw.initial_set.parts,
        &raw.initial_set.ball,
        n_x,
        "initial_set",
    )?;
    if initial_set.is_empty_set() {
        return Err(Error::Model(
            "initial_set: empty after dropping infeasible parts".into(),
        ));
    }

    let unsafe_spec = match &raw.unsafe_set {
        None => None,
        Some(u) => {
            let region = set_to_union(&u.parts, &u.ball, n_x, "unsafe")?;
            let label = u.label.clone().unwrap_or_else(|| "unsafe".into());
            Some(SafetySpec::new(region, label))
        }
    };

    let (name, description) = match &raw.metadata {
        Some(m) => (
            m.name.clone().unwrap_or_else(|| "unnamed".into()),
            m.description.clone().unwrap_or_default(),
        ),
        None => ("unnamed".into(), String::new()),
    };

    Ok(ModelBundle {
        name,
        description,
        system,
        switching,
        network,
        initial_set,
        unsafe_spec,
    })
}

fn validate_switching(raw: &RawSwitching, n_modes: usize) -> Result<SwitchingSignal> {
    let signal = match raw.kind.as_str() {
        "periodic" => {
            let Some(order) = &raw.order else {
                return Err(Error::Model(
                    "switching.order: required for periodic switching".into(),
                ));
            };
            if raw.sequence.is_some() {
                return Err(Error::Model(
                    "switching.sequence: not allowed for periodic switching".into(),
                ));
            }
            let sigma0 = raw.sigma0.unwrap_or(order[0]);
            SwitchingSignal::periodic_starting_at(order.clone(), sigma0)
                .map_err(|e| Error::Model(format!("switching: {e}")))?
        }
        "explicit" => {
            let Some(seq) = &raw.sequence else {
                return Err(Error::Model(
                    "switching.sequence: required for explicit switching".into(),
                ));
            };
            if raw.order.is_some() {
                return Err(Error::Model(
                    "switching.order: not allowed for explicit switching".into(),
                ));
            }
            if let Some(s0) = raw.sigma0 {
                if seq.first() != Some(&s0) {
                    return Err(Error::Model(format!(
                        "switching.sigma0: {s0} conflicts with sequence[0]"
                    )));
                }
            }
            SwitchingSignal::new(SignalKind::Explicit(seq.clone()), 0)
                .map_err(|e| Error::Model(format!("switching: {e}")))?
        }
        other => {
            return Err(Error::Model(format!(
                "switching.kind: unknown kind '{other}' (expected periodic or explicit)"
            )))
        }
    };
    signal
        .validate(n_modes, 0)
        .map_err(|e| Error::Model(format!("switching: {e}")))?;
    Ok(signal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_model(mutate: impl Fn(&mut serde_json::Value)) -> Result<ModelBundle> {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        mutate(&mut v);
        parse_model(&v.to_string())
    }

    const BASE: &str = r#"{
      "metadata": {"name": "toy", "description": "test model"},
      "system": {"modes": [
        {"A": [[1.0, 0.0], [0.0, 1.0]], "B": [[1.0, 0.0], [0.0, 1.0]]},
        {"A": [[0.5, 0.0], [0.0, 0.5]], "B": [[1.0, 0.0], [0.0, 1.0]]}
      ]},
      "switching": {"kind": "periodic", "order": [1, 2], "sigma0": 1},
      "network": {"layers": [
        {"W": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]], "theta": [0.0, 0.0, 0.0, 0.0], "kind": "relu"},
        {"W": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]], "theta": [0.0, 0.0], "kind": "linear"}
      ]},
      "initial_set": {"box": {"center": [0.0, 0.0], "radius": 1.0}},
      "unsafe": {"parts": [{"box": {"center": [4.0, 4.0], "radius": 1.0}}], "label": "obstacle"}
    }"#;

    #[test]
    fn base_model_loads() {
        let m = example_model(|_| {}).unwrap();
        assert_eq!(m.name, "toy");
        assert_eq!(m.system.state_dim(), 2);
        assert_eq!(m.system.input_dim(), 2);
        assert_eq!(m.network.input_dim(), 2);
        assert_eq!(m.network.output_dim(), 2);
        assert_eq!(m.sigma0(), 1);
        assert_eq!(m.initial_set.num_parts(), 1);
        assert_eq!(m.unsafe_spec.as_ref().unwrap().label, "obstacle");
    }

    #[test]
    fn empty_modes_is_rejected_with_message() {
        let err = example_model(|v| {
            v["system"]["modes"] = serde_json::json!([]);
        })
        .unwrap_err();
        assert!(err.to_string().contains("N >= 1 required"), "{err}");
    }

    #[test]
    fn wrong_b_shape_names_the_field() {
        let err = example_model(|v| {
            v["system"]["modes"][0]["B"] =
                serde_json::json!([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        })
        .unwrap_err();
        assert!(err.to_string().contains("modes[0].B"), "{err}");
    }

    #[test]
    fn unknown_activation_kind_is_rejected() {
        let err = example_model(|v| {
            v["network"]["layers"][0]["kind"] = serde_json::json!("tanh");
        })
        .unwrap_err();
        assert!(err.to_string().contains("unknown activation kind"), "{err}");
    }

    #[test]
    fn layer_width_chain_is_checked() {
        let err = example_model(|v| {
            v["network"]["layers"][1]["W"] = serde_json::json!([[1.0, 0.0], [0.0, 1.0]]);
        })
        .unwrap_err();
        assert!(err.to_string().contains("layers[1].W"), "{err}");
    }

    #[test]
    fn sigma0_absent_defaults_to_first_order_entry() {
        let m = example_model(|v| {
            v["switching"].as_object_mut().unwrap().remove("sigma0");
        })
        .unwrap();
        assert_eq!(m.sigma0(), 1);
    }

    #[test]
    fn sigma0_override_rotates_periodic_signal() {
        let m = example_model(|_| {}).unwrap();
        let sig = m.switching_with_sigma0(Some(2)).unwrap();
        assert_eq!(sig.mode_at(0).unwrap(), 2);
        assert_eq!(sig.mode_at(1).unwrap(), 1);
        assert!(m.switching_with_sigma0(Some(3)).is_err());
    }

    #[test]
    fn explicit_switching_parses() {
        let m = example_model(|v| {
            v["switching"] = serde_json::json!({
                "kind": "explicit",
                "sequence": [1, 1, 2, 2, 1]
            });
        })
        .unwrap();
        assert_eq!(m.switching.mode_at(2).unwrap(), 2);
    }

    #[test]
    fn unknown_top_level_field_is_a_parse_error() {
        let err = example_model(|v| {
            v["extra"] = serde_json::json!(1);
        })
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn h_rep_part_with_wrong_b_length_is_rejected() {
        let err = example_model(|v| {
            v["initial_set"] = serde_json::json!({
                "parts": [{"H": [[1.0, 0.0], [-1.0, 0.0]], "b": [1.0]}]
            });
        })
        .unwrap_err();
        assert!(err.to_string().contains("initial_set.parts[0].b"), "{err}");
    }

    #[test]
    fn model_without_unsafe_set_loads() {
        let m = example_model(|v| {
            v.as_object_mut().unwrap().remove("unsafe");
        })
        .unwrap();
        assert!(m.unsafe_spec.is_none());
    }
}
