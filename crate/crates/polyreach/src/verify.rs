//! Safety verdicts against unsafe regions, plus grid-simulation
//! cross-validation of computed reach sets.
//!
//! A run is `Safe` when every per-step reach polytope has empty intersection
//! with every unsafe polytope. The only other verdict is `Uncertain`: hull
//! mode over-approximates, and even exact mode certifies a single switching
//! signal, so a non-empty intersection never proves a real trajectory
//! violation.

use crate::error::{Error, Result};
use crate::geometry::{PolyUnion, CONTAINMENT_TOL};
use crate::lp::lp_feasible;
use crate::matrix::Vector;
use crate::nn::ReluNetwork;
use crate::sysreach::{PwlSystem, ReachResult, SwitchingSignal};

/// Unsafe region (the negated safety predicate) with a display label.
#[derive(Debug, Clone)]
pub struct SafetySpec {
    pub unsafe_region: PolyUnion,
    pub label: String,
}

impl SafetySpec {
    pub fn new(unsafe_region: PolyUnion, label: impl Into<String>) -> Self {
        Self {
            unsafe_region,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyStatus {
    Safe,
    Uncertain,
}

impl SafetyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SafetyStatus::Safe => "safe",
            SafetyStatus::Uncertain => "uncertain",
        }
    }
}

/// Verdict of a safety check. `Uncertain` carries the earliest step whose
/// reach set meets the unsafe region and an LP witness point inside both.
#[derive(Debug, Clone)]
pub struct SafetyVerdict {
    pub status: SafetyStatus,
    pub first_violation_step: Option<usize>,
    pub witness: Option<Vector>,
}

/// Check every (reach part, unsafe part) pair per step for intersection
/// emptiness. Hull-mode `Safe` is sound; hull-mode `Uncertain` is
/// inconclusive because the hull over-approximates.
pub fn check_safety(result: &ReachResult, spec: &SafetySpec) -> Result<SafetyVerdict> {
    if spec.unsafe_region.dim() != result.cumulative.dim() && !spec.unsafe_region.is_empty_set() {
        return Err(Error::DimensionMismatch(format!(
            "unsafe region has dimension {}, reach sets have {}",
            spec.unsafe_region.dim(),
            result.cumulative.dim()
        )));
    }
    for (h, step) in result.per_step.iter().enumerate() {
        for part in step.parts() {
            for bad in spec.unsafe_region.parts() {
                let joint = part.intersect(bad)?;
                if let Some(witness) = lp_feasible(joint.h(), joint.b())?.witness() {
                    return Ok(SafetyVerdict {
                        status: SafetyStatus::Uncertain,
                        first_violation_step: Some(h),
                        witness: Some(witness.clone()),
                    });
                }
            }
        }
    }
    Ok(SafetyVerdict {
        status: SafetyStatus::Safe,
        first_violation_step: None,
        witness: None,
    })
}

/// How grid points are placed over the bounding box of the initial set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStyle {
    /// Points at `lo, lo+step, ..., hi` (endpoints included).
    InclusiveEndpoints,
    /// Cell centers `lo + (i+1/2)step`, one per step-sized cell.
    CellCentered,
}

impl std::str::FromStr for GridStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inclusive" => Ok(GridStyle::InclusiveEndpoints),
            "centered" => Ok(GridStyle::CellCentered),
            other => Err(Error::Usage(format!(
                "unknown grid style '{other}' (expected inclusive or centered)"
            ))),
        }
    }
}

/// One simulated run: states `x(0..=k)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub id: usize,
    pub states: Vec<Vector>,
}

/// Axis-aligned grid over the bounding box of `x0`, filtered by membership,
/// then simulated `k` steps under the switching signal.
pub fn simulate_grid(
    sys: &PwlSystem,
    sig: &SwitchingSignal,
    net: &ReluNetwork,
    x0: &PolyUnion,
    step: f64,
    k: usize,
    style: GridStyle,
) -> Result<Vec<Trajectory>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Usage("grid step must be positive".into()));
    }
    sig.validate(sys.num_modes(), k)?;
    let n = x0.dim();
    let mut lo = vec![f64::MAX; n];
    let mut hi = vec![f64::MIN; n];
    for part in x0.parts() {
        let (plo, phi) = part.bounds()?;
        for i in 0..n {
            lo[i] = lo[i].min(plo[i]);
            hi[i] = hi[i].max(phi[i]);
        }
    }
    if x0.is_empty_set() {
        return Ok(Vec::new());
    }

    let axes: Vec<Vector> = (0..n)
        .map(|i| axis_points(lo[i], hi[i], step, style))
        .collect();
    let mut trajectories = Vec::new();
    let mut index = vec![0usize; n];
    'outer: loop {
        let point: Vector = (0..n).map(|i| axes[i][index[i]]).collect();
        if x0.contains_point(&point, CONTAINMENT_TOL) {
            let mut states = Vec::with_capacity(k + 1);
            states.push(point.clone());
            let mut x = point;
            for h in 0..k {
                x = sys.step(sig.mode_at(h)?, net, &x)?;
                states.push(x.clone());
            }
            trajectories.push(Trajectory {
                id: trajectories.len(),
                states,
            });
        }
        // Row-major odometer over the grid axes.
        for i in (0..n).rev() {
            index[i] += 1;
            if index[i] < axes[i].len() {
                continue 'outer;
            }
            index[i] = 0;
        }
        break;
    }
    Ok(trajectories)
}

fn axis_points(lo: f64, hi: f64, step: f64, style: GridStyle) -> Vector {
    match style {
        GridStyle::InclusiveEndpoints => {
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| lo + i as f64 * step).collect()
        }
        GridStyle::CellCentered => {
            let cells = (((hi - lo) / step) + 0.5).floor().max(1.0) as usize;
            (0..cells).map(|i| lo + (i as f64 + 0.5) * step).collect()
        }
    }
}

/// Per-step tally of simulated states that escape the reach sets.
#[derive(Debug, Clone)]
pub struct ContainmentReport {
    pub per_step_misses: Vec<usize>,
    pub total_states: usize,
    pub total_misses: usize,
    pub first_miss: Option<(usize, usize)>,
}

impl ContainmentReport {
    pub fn success(&self) -> bool {
        self.total_misses == 0
    }
}

/// Count trajectory states at each step h that lie in no part of
/// `per_step[h]`.
pub fn validate_containment(
    trajectories: &[Trajectory],
    result: &ReachResult,
    tol: f64,
) -> ContainmentReport {
    let horizon = result.per_step.len();
    let mut per_step_misses = vec![0usize; horizon];
    let mut total_states = 0usize;
    let mut first_miss = None;
    for traj in trajectories {
        for (h, state) in traj.states.iter().enumerate().take(horizon) {
            total_states += 1;
            if !result.per_step[h].contains_point(state, tol) {
                per_step_misses[h] += 1;
                if first_miss.is_none() {
                    first_miss = Some((traj.id, h));
                }
            }
        }
    }
    let total_misses = per_step_misses.iter().sum();
    ContainmentReport {
        per_step_misses,
        total_states,
        total_misses,
        first_miss,
    }
}
