//! Closed-loop reachable-set iteration for switched linear systems under a
//! ReLU network state-feedback controller.
//!
//! One step maps a state union X through `x(k+1) = A x + B g(x)`. The
//! controller is first decomposed into affine pieces `g(x) = Cx + d` over
//! domains partitioning X, so the step is the exact coupled image
//! `(A + B C) x + B d` per piece, not the looser product of independent
//! memberships `x in X, u in g(X)`. Hull mode replaces each step's union by
//! its convex hull, a sound over-approximation with one polytope per step.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hull_of_union, PolyUnion};
use crate::matrix::{Matrix, Vector};
use crate::nn::{network_reach_with, output_set, ReachOptions, ReluNetwork};

/// One mode of the switched dynamics `x(k+1) = A x(k) + B u(k)`.
#[derive(Debug, Clone)]
pub struct Mode {
    pub a: Matrix,
    pub b: Matrix,
}

/// Switched linear system; mode ids are 1-based.
#[derive(Debug, Clone)]
pub struct PwlSystem {
    modes: Vec<Mode>,
}

impl PwlSystem {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        let Some(first) = modes.first() else {
            return Err(Error::Model("N >= 1 required: empty mode list".into()));
        };
        let n_x = first.a.rows();
        let n_u = first.b.cols();
        for (i, m) in modes.iter().enumerate() {
            if m.a.rows() != n_x || m.a.cols() != n_x {
                return Err(Error::DimensionMismatch(format!(
                    "modes[{i}].A must be {n_x}x{n_x}, got {}x{}",
                    m.a.rows(),
                    m.a.cols()
                )));
            }
            if m.b.rows() != n_x || m.b.cols() != n_u {
                return Err(Error::DimensionMismatch(format!(
                    "modes[{i}].B must be {n_x}x{n_u}, got {}x{}",
                    m.b.rows(),
                    m.b.cols()
                )));
            }
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.modes[0].a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.modes[0].b.cols()
    }

    pub fn mode(&self, id: usize) -> Result<&Mode> {
        if id == 0 || id > self.modes.len() {
            return Err(Error::Model(format!(
                "mode id {id} out of range 1..={}",
                self.modes.len()
            )));
        }
        Ok(&self.modes[id - 1])
    }

    /// One closed-loop state update `A x + B g(x)`.
    pub fn step(&self, mode_id: usize, net: &ReluNetwork, x: &[f64]) -> Result<Vector> {
        let mode = self.mode(mode_id)?;
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} entries, expected {}",
                x.len(),
                self.state_dim()
            )));
        }
        let u = net.eval(x)?;
        let mut next = mode.a.matvec(x);
        for (ni, bu) in next.iter_mut().zip(mode.b.matvec(&u)) {
            *ni += bu;
        }
        Ok(next)
    }
}

/// Mode schedule over time. `Periodic` cycles through `order` starting at
/// `start_index`; `Explicit` reads `sequence[start_index + k]` and must be
/// long enough for the horizon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignalKind {
    Periodic(Vec<usize>),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingSignal {
    kind: SignalKind,
    start_index: usize,
}

impl SwitchingSignal {
    pub fn new(kind: SignalKind, start_index: usize) -> Result<Self> {
        let ids = match &kind {
            SignalKind::Periodic(order) => order,
            SignalKind::Explicit(seq) => seq,
        };
        if ids.is_empty() {
            return Err(Error::Model("switching signal has no mode ids".into()));
        }
        if ids.contains(&0) {
            return Err(Error::Model("mode ids are 1-based; found 0".into()));
        }
        if start_index >= ids.len() {
            return Err(Error::Model(format!(
                "switching start index {start_index} out of range for {} entries",
                ids.len()
            )));
        }
        Ok(Self { kind, start_index })
    }

    /// Periodic signal starting at the given mode id (its first occurrence
    /// in `order`).
    pub fn periodic_starting_at(order: Vec<usize>, sigma0: usize) -> Result<Self> {
        let Some(idx) = order.iter().position(|&m| m == sigma0) else {
            return Err(Error::Model(format!(
                "sigma0 = {sigma0} does not occur in the periodic order {order:?}"
            )));
        };
        SwitchingSignal::new(SignalKind::Periodic(order), idx)
    }

    pub fn kind(&self) -> &SignalKind {
        &self.kind
    }

    pub fn start_index(&self) -> usize {
        self.start_index
    }

    pub fn max_mode_id(&self) -> usize {
        let ids = match &self.kind {
            SignalKind::Periodic(order) => order,
            SignalKind::Explicit(seq) => seq,
        };
        *ids.iter().max().expect("non-empty")
    }

    /// Mode active at step `k`.
    pub fn mode_at(&self, k: usize) -> Result<usize> {
        match &self.kind {
            SignalKind::Periodic(order) => Ok(order[(self.start_index + k) % order.len()]),
            SignalKind::Explicit(seq) => {
                seq.get(self.start_index + k).copied().ok_or_else(|| {
                    Error::Model(format!(
                        "explicit switching sequence too short for step {k}"
                    ))
                })
            }
        }
    }

    /// Checks the signal can serve `k` steps and stays within `n_modes`.
    pub fn validate(&self, n_modes: usize, horizon: usize) -> Result<()> {
        let ids = match &self.kind {
            SignalKind::Periodic(order) => order.clone(),
            SignalKind::Explicit(seq) => {
                if self.start_index + horizon > seq.len() {
                    return Err(Error::Model(format!(
                        "explicit switching sequence of length {} cannot cover horizon {horizon}",
                        seq.len()
                    )));
                }
                seq.clone()
            }
        };
        for id in ids {
            if id > n_modes {
                return Err(Error::Model(format!(
                    "switching references mode {id} but the system has {n_modes} modes"
                )));
            }
        }
        Ok(())
    }
}

/// How one closed-loop step combines states with controller outputs.
///
/// `Coupled` composes the controller's affine pieces into the dynamics, so
/// the successor is the exact image `(A + BC)x + Bd` per piece. `Decoupled`
/// first computes the controller's output set and then treats state and
/// control memberships independently, i.e. `{Ax + Bu : x in X, u in g(X)}`.
/// That loses the x-to-g(x) coupling and over-approximates, but it is the
/// step the two-set iteration of the underlying algorithm actually
/// computes, and it yields the correspondingly larger reach envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSemantics {
    Coupled,
    Decoupled,
}

impl StepSemantics {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepSemantics::Coupled => "coupled",
            StepSemantics::Decoupled => "decoupled",
        }
    }
}

impl std::str::FromStr for StepSemantics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(StepSemantics::Coupled),
            "decoupled" => Ok(StepSemantics::Decoupled),
            other => Err(Error::Usage(format!(
                "unknown step semantics '{other}' (expected coupled or decoupled)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachMode {
    Exact,
    Hull,
}

impl ReachMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReachMode::Exact => "exact",
            ReachMode::Hull => "hull",
        }
    }
}

impl std::str::FromStr for ReachMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ReachMode::Exact),
            "hull" => Ok(ReachMode::Hull),
            other => Err(Error::Usage(format!(
                "unknown reach mode '{other}' (expected exact or hull)"
            ))),
        }
    }
}

/// Per-step reach sets `X_0..X_k` plus the cumulative interval set
/// `X_[0,k]`, which keeps per-step part order so that the cumulative list
/// for horizon h is a prefix of the one for h+1.
#[derive(Debug, Clone)]
pub struct ReachResult {
    pub per_step: Vec<PolyUnion>,
    pub mode: ReachMode,
    pub semantics: StepSemantics,
    pub cumulative: PolyUnion,
    pub piece_counts: Vec<usize>,
    pub step_times: Vec<Duration>,
}

impl ReachResult {
    pub fn horizon(&self) -> usize {
        self.per_step.len().saturating_sub(1)
    }
}

/// Image of the union X under one closed-loop step in the given mode.
pub fn closed_loop_step(
    x: &PolyUnion,
    mode_id: usize,
    sys: &PwlSystem,
    net: &ReluNetwork,
    mode: ReachMode,
    semantics: StepSemantics,
    opts: &ReachOptions,
) -> Result<PolyUnion> {
    if x.dim() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state union has dimension {}, system expects {}",
            x.dim(),
            sys.state_dim()
        )));
    }
    if x.is_empty_set() {
        return Ok(PolyUnion::empty(x.dim()));
    }
    let m = sys.mode(mode_id)?;
    let pieces = network_reach_with(x, net, opts)?;
    let mut successors = Vec::new();
    match semantics {
        StepSemantics::Coupled => {
            for piece in &pieces {
                // x(k+1) = A x + B (Cx + d) = (A + B C) x + B d on this domain.
                let map = m.a.add(&m.b.matmul(&piece.linear));
                let shift = m.b.matvec(&piece.offset);
                successors.push(piece.domain.affine_image(&map, &shift)?);
            }
        }
        StepSemantics::Decoupled => {
            // Successor of each (state part, control part) pair is the
            // linear image of their product, i.e. the hull of
            // {A v + B w} over the vertex pairs.
            let control = output_set(&pieces)?;
            for part in x.parts() {
                let pv = part.vertices()?;
                for u_part in control.parts() {
                    let uv = u_part.vertices()?;
                    let mut points = Vec::with_capacity(pv.len() * uv.len());
                    for v in pv {
                        let av = m.a.matvec(v);
                        for w in uv {
                            let mut y = av.clone();
                            for (yi, bw) in y.iter_mut().zip(m.b.matvec(w)) {
                                *yi += bw;
                            }
                            points.push(y);
                        }
                    }
                    successors.push(convex_hull(&points)?);
                    if successors.len() > opts.piece_cap {
                        return Err(Error::PieceCapExceeded {
                            count: successors.len(),
                            cap: opts.piece_cap,
                        });
                    }
                }
            }
        }
    }
    let union = PolyUnion::new(sys.state_dim(), successors)?;
    match mode {
        ReachMode::Exact => Ok(union),
        ReachMode::Hull => PolyUnion::singleton(hull_of_union(&union)?),
    }
}

/// Iterate the reach set over `0..=k` under the switching signal.
#[allow(clippy::too_many_arguments)]
pub fn reach_interval(
    sys: &PwlSystem,
    sig: &SwitchingSignal,
    net: &ReluNetwork,
    x0: &PolyUnion,
    k: usize,
    mode: ReachMode,
    semantics: StepSemantics,
    opts: &ReachOptions,
) -> Result<ReachResult> {
    if net.input_dim() != sys.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "network input dimension {} must equal state dimension {}",
            net.input_dim(),
            sys.state_dim()
        )));
    }
    if net.output_dim() != sys.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "network output dimension {} must equal control dimension {}",
            net.output_dim(),
            sys.input_dim()
        )));
    }
    sig.validate(sys.num_modes(), k)?;

    let start = Instant::now();
    let first = match mode {
        ReachMode::Exact => x0.clone(),
        ReachMode::Hull => {
            if x0.is_empty_set() {
                x0.clone()
            } else {
                PolyUnion::singleton(hull_of_union(x0)?)?
            }
        }
    };
    let mut per_step = vec![first];
    let mut piece_counts = vec![per_step[0].num_parts()];
    let mut step_times = vec![start.elapsed()];

    for h in 0..k {
        let t = Instant::now();
        let mode_id = sig.mode_at(h)?;
        let next = closed_loop_step(&per_step[h], mode_id, sys, net, mode, semantics, opts)?;
        piece_counts.push(next.num_parts());
        step_times.push(t.elapsed());
        per_step.push(next);
    }

    let cumulative = PolyUnion::concat(&per_step)?;
    Ok(ReachResult {
        per_step,
        mode,
        semantics,
        cumulative,
        piece_counts,
        step_times,
    })
}
