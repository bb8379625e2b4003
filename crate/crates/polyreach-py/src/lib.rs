//! Python bindings: polytopes, ReLU networks, and the closed-loop
//! reach/verify pipeline, mirroring the CLI's operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use polyreach::geometry::{self, PolyUnion};
use polyreach::matrix::Matrix;
use polyreach::model::{self, ModelBundle};
use polyreach::nn::{self, Activation, Layer, ReachOptions};
use polyreach::sysreach::{reach_interval, ReachMode, StepSemantics, SwitchingSignal};
use polyreach::verify::{check_safety, simulate_grid, GridStyle, SafetyStatus};

fn err(e: polyreach::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_py(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err(format!("{what}: no rows")));
    }
    Matrix::from_rows(rows[0].len(), &rows).map_err(err)
}

/// Convex polytope `{x | Hx <= b}` in half-space representation.
#[pyclass(name = "Polytope", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPolytope {
    inner: geometry::Polytope,
}

#[pymethods]
impl PyPolytope {
    #[new]
    fn new(h: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        let h = matrix_from_py(h, "H")?;
        Ok(Self {
            inner: geometry::Polytope::new(h, b).map_err(err)?,
        })
    }

    /// Axis-aligned box `|x - center|_inf <= radius`.
    #[staticmethod]
    #[pyo3(name = "box")]
    fn box_(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Ok(Self {
            inner: geometry::Polytope::bounding_box_set(&center, radius).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn h(&self) -> Vec<Vec<f64>> {
        self.inner.h().to_rows()
    }

    fn b(&self) -> Vec<f64> {
        self.inner.b().to_vec()
    }

    fn vertices(&self) -> PyResult<Vec<Vec<f64>>> {
        self.inner.vertices_owned().map_err(err)
    }

    #[pyo3(signature = (x, tol = 1e-7))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> bool {
        self.inner.contains_point(&x, tol)
    }

    fn is_empty(&self) -> PyResult<bool> {
        self.inner.is_empty().map_err(err)
    }

    fn intersect(&self, other: &PyPolytope) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.intersect(&other.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Polytope(dim={}, rows={})",
            self.inner.dim(),
            self.inner.num_rows()
        )
    }
}

/// Feed-forward network of relu/linear layers.
#[pyclass(name = "ReluNetwork", frozen)]
struct PyReluNetwork {
    inner: nn::ReluNetwork,
}

fn union_from_parts(parts: Vec<PyRef<'_, PyPolytope>>, dim: usize) -> PyResult<PolyUnion> {
    let polys: Vec<geometry::Polytope> = parts.iter().map(|p| p.inner.clone()).collect();
    PolyUnion::new(dim, polys).map_err(err)
}

#[pymethods]
impl PyReluNetwork {
    /// Build from `[(W, theta, kind), ...]` with kind `"relu"` or
    /// `"linear"`.
    #[new]
    fn new(layers: Vec<(Vec<Vec<f64>>, Vec<f64>, String)>) -> PyResult<Self> {
        let mut built = Vec::with_capacity(layers.len());
        for (i, (w, theta, kind)) in layers.into_iter().enumerate() {
            let activation = match kind.as_str() {
                "relu" => Activation::Relu,
                "linear" => Activation::Linear,
                other => {
                    return Err(PyValueError::new_err(format!(
                        "layer {i}: unknown activation kind '{other}'"
                    )))
                }
            };
            let w = matrix_from_py(w, &format!("layer {i} W"))?;
            built.push(Layer::new(w, theta, activation).map_err(err)?);
        }
        Ok(Self {
            inner: nn::ReluNetwork::new(built).map_err(err)?,
        })
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    /// Pointwise forward pass.
    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval(&x).map_err(err)
    }

    /// Affine pieces `(domain, C, d)` covering the input polytopes, with
    /// `net(x) = Cx + d` on each domain.
    #[allow(clippy::type_complexity)]
    fn affine_pieces(
        &self,
        parts: Vec<PyRef<'_, PyPolytope>>,
    ) -> PyResult<Vec<(PyPolytope, Vec<Vec<f64>>, Vec<f64>)>> {
        let input = union_from_parts(parts, self.inner.input_dim())?;
        let pieces = nn::network_reach(&input, &self.inner).map_err(err)?;
        Ok(pieces
            .into_iter()
            .map(|p| {
                (
                    PyPolytope { inner: p.domain },
                    p.linear.to_rows(),
                    p.offset,
                )
            })
            .collect())
    }

    /// Exact output reach set over the input polytopes, as a list of
    /// polytopes whose union is the image.
    fn output_polytopes(&self, parts: Vec<PyRef<'_, PyPolytope>>) -> PyResult<Vec<PyPolytope>> {
        let input = union_from_parts(parts, self.inner.input_dim())?;
        let pieces = nn::network_reach(&input, &self.inner).map_err(err)?;
        let out = nn::output_set(&pieces).map_err(err)?;
        Ok(out
            .parts()
            .iter()
            .map(|p| PyPolytope { inner: p.clone() })
            .collect())
    }
}

/// Per-step reach sets from a closed-loop run.
#[pyclass(name = "ReachResult", frozen)]
struct PyReachResult {
    per_step: Vec<Vec<PyPolytope>>,
    piece_counts: Vec<usize>,
    mode: String,
    semantics: String,
}

#[pymethods]
impl PyReachResult {
    #[getter]
    fn horizon(&self) -> usize {
        self.per_step.len().saturating_sub(1)
    }

    #[getter]
    fn mode(&self) -> &str {
        &self.mode
    }

    #[getter]
    fn semantics(&self) -> &str {
        &self.semantics
    }

    #[getter]
    fn piece_counts(&self) -> Vec<usize> {
        self.piece_counts.clone()
    }

    /// Polytopes of step `h`.
    fn step(&self, h: usize) -> PyResult<Vec<PyPolytope>> {
        self.per_step
            .get(h)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("step {h} out of range")))
    }

    /// True when some polytope of step `h` contains `x`.
    #[pyo3(signature = (h, x, tol = 1e-7))]
    fn contains(&self, h: usize, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        let step = self
            .per_step
            .get(h)
            .ok_or_else(|| PyValueError::new_err(format!("step {h} out of range")))?;
        Ok(step.iter().any(|p| p.inner.contains_point(&x, tol)))
    }
}

/// Safety verdict: `safe`, or `uncertain` with the first violating step and
/// an intersection witness.
#[pyclass(name = "Verdict", frozen)]
struct PyVerdict {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    first_violation_step: Option<usize>,
    #[pyo3(get)]
    witness: Option<Vec<f64>>,
}

#[pymethods]
impl PyVerdict {
    #[getter]
    fn safe(&self) -> bool {
        self.status == "safe"
    }

    fn __repr__(&self) -> String {
        match self.first_violation_step {
            Some(h) => format!("Verdict(status='{}', first_violation_step={h})", self.status),
            None => format!("Verdict(status='{}')", self.status),
        }
    }
}

/// A loaded model bundle: system, controller, switching, initial and unsafe
/// sets.
#[pyclass(name = "Model")]
struct PyModel {
    inner: ModelBundle,
}

struct RunConfig {
    mode: ReachMode,
    semantics: StepSemantics,
    signal: SwitchingSignal,
    opts: ReachOptions,
}

impl PyModel {
    fn run_config(
        &self,
        mode: &str,
        semantics: &str,
        sigma0: Option<usize>,
        piece_cap: Option<usize>,
    ) -> PyResult<RunConfig> {
        let mode: ReachMode = mode.parse().map_err(err)?;
        let semantics: StepSemantics = semantics.parse().map_err(err)?;
        let signal = self.inner.switching_with_sigma0(sigma0).map_err(err)?;
        let mut opts = ReachOptions::default();
        if let Some(cap) = piece_cap {
            opts.piece_cap = cap;
        }
        Ok(RunConfig {
            mode,
            semantics,
            signal,
            opts,
        })
    }
}

#[pymethods]
impl PyModel {
    /// Load a model JSON file.
    #[staticmethod]
    fn load(path: String) -> PyResult<Self> {
        Ok(Self {
            inner: model::load_model(&path).map_err(err)?,
        })
    }

    /// Parse a model from a JSON string.
    #[staticmethod]
    fn loads(text: String) -> PyResult<Self> {
        Ok(Self {
            inner: model::parse_model(&text).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.system.state_dim()
    }

    #[getter]
    fn control_dim(&self) -> usize {
        self.inner.system.input_dim()
    }

    #[getter]
    fn num_modes(&self) -> usize {
        self.inner.system.num_modes()
    }

    #[getter]
    fn sigma0(&self) -> usize {
        self.inner.sigma0()
    }

    /// Evaluate the controller at a state.
    fn controller(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.network.eval(&x).map_err(err)
    }

    /// One closed-loop state update under the given mode.
    fn step(&self, mode_id: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner
            .system
            .step(mode_id, &self.inner.network, &x)
            .map_err(err)
    }

    /// Reach sets over `0..=horizon`.
    #[pyo3(signature = (horizon, mode = "hull", semantics = "coupled", sigma0 = None, piece_cap = None))]
    fn reach(
        &self,
        horizon: usize,
        mode: &str,
        semantics: &str,
        sigma0: Option<usize>,
        piece_cap: Option<usize>,
    ) -> PyResult<PyReachResult> {
        let cfg = self.run_config(mode, semantics, sigma0, piece_cap)?;
        let result = reach_interval(
            &self.inner.system,
            &cfg.signal,
            &self.inner.network,
            &self.inner.initial_set,
            horizon,
            cfg.mode,
            cfg.semantics,
            &cfg.opts,
        )
        .map_err(err)?;
        Ok(PyReachResult {
            per_step: result
                .per_step
                .iter()
                .map(|u| {
                    u.parts()
                        .iter()
                        .map(|p| PyPolytope { inner: p.clone() })
                        .collect()
                })
                .collect(),
            piece_counts: result.piece_counts.clone(),
            mode: result.mode.as_str().to_string(),
            semantics: result.semantics.as_str().to_string(),
        })
    }

    /// Safety verdict over `0..=horizon` against the model's unsafe set.
    #[pyo3(signature = (horizon, mode = "hull", semantics = "coupled", sigma0 = None, piece_cap = None))]
    fn verify(
        &self,
        horizon: usize,
        mode: &str,
        semantics: &str,
        sigma0: Option<usize>,
        piece_cap: Option<usize>,
    ) -> PyResult<PyVerdict> {
        let Some(spec) = &self.inner.unsafe_spec else {
            return Err(PyValueError::new_err(
                "model has no unsafe set; add an 'unsafe' section",
            ));
        };
        let cfg = self.run_config(mode, semantics, sigma0, piece_cap)?;
        let result = reach_interval(
            &self.inner.system,
            &cfg.signal,
            &self.inner.network,
            &self.inner.initial_set,
            horizon,
            cfg.mode,
            cfg.semantics,
            &cfg.opts,
        )
        .map_err(err)?;
        let verdict = check_safety(&result, spec).map_err(err)?;
        Ok(PyVerdict {
            status: match verdict.status {
                SafetyStatus::Safe => "safe".into(),
                SafetyStatus::Uncertain => "uncertain".into(),
            },
            first_violation_step: verdict.first_violation_step,
            witness: verdict.witness,
        })
    }

    /// Grid-sampled trajectories: a list of `horizon+1`-state runs.
    #[pyo3(signature = (horizon, grid, style = "inclusive", sigma0 = None))]
    fn simulate(
        &self,
        horizon: usize,
        grid: f64,
        style: &str,
        sigma0: Option<usize>,
    ) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let style: GridStyle = style.parse().map_err(err)?;
        let signal = self.inner.switching_with_sigma0(sigma0).map_err(err)?;
        let trajectories = simulate_grid(
            &self.inner.system,
            &signal,
            &self.inner.network,
            &self.inner.initial_set,
            grid,
            horizon,
            style,
        )
        .map_err(err)?;
        Ok(trajectories.into_iter().map(|t| t.states).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(name='{}', modes={}, state_dim={})",
            self.inner.name,
            self.inner.system.num_modes(),
            self.inner.system.state_dim()
        )
    }
}

#[pymodule]
fn polyreach_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolytope>()?;
    m.add_class::<PyReluNetwork>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyReachResult>()?;
    m.add_class::<PyVerdict>()?;
    Ok(())
}
