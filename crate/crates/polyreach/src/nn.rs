//! Exact output reach sets for ReLU/linear feed-forward networks over
//! polytopic inputs.
//!
//! A ReLU layer maps each incoming region to a union of polytopes, one per
//! feasible activation pattern. Instead of forwarding output-space polytopes
//! from layer to layer, every piece keeps its domain in the *network input*
//! space together with a composed affine map `x -> Cx + d` for the prefix of
//! layers processed so far. The resulting output union is identical (the
//! constraints are the same inequalities pre-composed with the affine map),
//! all geometry stays in the low-dimensional input space, and the final
//! pieces retain the input-output coupling that the closed-loop step needs.

use crate::error::{Error, Result};
use crate::geometry::{ccw_polygon_2d, clip_polygon, sort_points, PolyUnion, Polytope};
use crate::lp::lp_feasible;
use crate::matrix::{euclid_norm, inf_norm, Matrix, Vector};

/// Default cap on the number of affine pieces produced by one reach call.
pub const DEFAULT_PIECE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::DimensionMismatch(format!(
                "layer weight matrix has {} rows but bias has {} entries",
                weights.rows(),
                bias.len()
            )));
        }
        crate::matrix::check_finite(&bias, "layer bias")?;
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Feed-forward network with chained layer dimensions, `L >= 1`.
#[derive(Debug, Clone)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Model("network needs at least one layer".into()));
        }
        for i in 1..layers.len() {
            if layers[i].input_dim() != layers[i - 1].output_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i,
                    layers[i].input_dim(),
                    i - 1,
                    layers[i - 1].output_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("L >= 1").output_dim()
    }

    /// Pointwise forward pass; the reference oracle for every set
    /// computation in this module.
    pub fn eval(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut v = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&v);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            if layer.activation == Activation::Relu {
                for zi in z.iter_mut() {
                    *zi = zi.max(0.0);
                }
            }
            v = z;
        }
        Ok(v)
    }
}

/// Per-layer active/inactive assignment for the ReLU layers processed so
/// far; `true` marks a neuron constrained to non-negative pre-activation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivationPattern {
    per_layer: Vec<Vec<bool>>,
}

impl ActivationPattern {
    pub fn layers(&self) -> &[Vec<bool>] {
        &self.per_layer
    }

    fn extended(&self, layer_bits: Vec<bool>) -> Self {
        let mut per_layer = self.per_layer.clone();
        per_layer.push(layer_bits);
        Self { per_layer }
    }
}

/// A polytopic region of the network input space on which the processed
/// prefix of the network is affine: `prefix(x) = Cx + d` for `x` in
/// `domain`.
#[derive(Debug, Clone)]
pub struct AffinePiece {
    pub domain: Polytope,
    pub linear: Matrix,
    pub offset: Vector,
    pub pattern: ActivationPattern,
}

impl AffinePiece {
    fn identity(domain: Polytope) -> Self {
        let n = domain.dim();
        AffinePiece {
            domain,
            linear: Matrix::identity(n),
            offset: vec![0.0; n],
            pattern: ActivationPattern::default(),
        }
    }

    /// Value of the piece map at `x`.
    pub fn apply(&self, x: &[f64]) -> Vector {
        let mut y = self.linear.matvec(x);
        for (yi, di) in y.iter_mut().zip(&self.offset) {
            *yi += di;
        }
        y
    }
}

/// Options for reach computations.
#[derive(Debug, Clone, Copy)]
pub struct ReachOptions {
    /// Hard cap on pieces produced by a single call.
    pub piece_cap: usize,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self {
            piece_cap: DEFAULT_PIECE_CAP,
        }
    }
}

/// Split every incoming piece across the feasible activation patterns of a
/// ReLU layer.
///
/// For a piece `(R, C, d)` and indicator matrix `Q` the successor domain is
/// `R` intersected with `(I-Q)(W(Cx+d)+theta) <= 0` and
/// `Q(W(Cx+d)+theta) >= 0`, and the successor map is `x -> Q(W(Cx+d)+theta)`.
/// Infeasible patterns are pruned with one emptiness LP per branch of a
/// per-neuron depth-first split (inactive branch first), which is
/// semantically the full `2^n` enumeration without visiting most infeasible
/// patterns.
pub fn layer_reach(pieces: &[AffinePiece], layer: &Layer) -> Result<Vec<AffinePiece>> {
    layer_reach_capped(pieces, layer, usize::MAX)
}

fn layer_reach_capped(
    pieces: &[AffinePiece],
    layer: &Layer,
    cap: usize,
) -> Result<Vec<AffinePiece>> {
    if layer.activation != Activation::Relu {
        return Err(Error::Usage("layer_reach expects a relu layer".into()));
    }
    let mut out = Vec::new();
    for piece in pieces {
        if piece.linear.rows() != layer.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "piece produces {} values but layer expects {}",
                piece.linear.rows(),
                layer.input_dim()
            )));
        }
        split_piece(piece, layer, cap, &mut out)?;
    }
    Ok(out)
}

fn split_piece(
    piece: &AffinePiece,
    layer: &Layer,
    cap: usize,
    out: &mut Vec<AffinePiece>,
) -> Result<()> {
    let n_in = piece.domain.dim();
    let n_neurons = layer.output_dim();
    // Pre-activation of neuron i as a function of x: zmat_i . x + zoff_i.
    let zmat = layer.weights.matmul(&piece.linear);
    let mut zoff = layer.weights.matvec(&piece.offset);
    for (zi, bi) in zoff.iter_mut().zip(&layer.bias) {
        *zi += bi;
    }

    struct Frame {
        neuron: usize,
        rows: Vec<Vector>,
        offs: Vector,
        bits: Vec<bool>,
        // 2D fast path: current domain as a counterclockwise polygon, so
        // branch feasibility is a polygon clip instead of an LP.
        poly: Option<Vec<Vector>>,
    }

    let base_rows: Vec<Vector> = piece.domain.h().to_rows();
    let base_offs: Vector = piece.domain.b().to_vec();
    let mut stack = vec![Frame {
        neuron: 0,
        rows: base_rows,
        offs: base_offs,
        bits: Vec::new(),
        poly: ccw_polygon_2d(&piece.domain, 64),
    }];

    while let Some(frame) = stack.pop() {
        if frame.neuron == n_neurons {
            let domain = match frame.poly {
                Some(poly) => {
                    let h = Matrix::from_rows(n_in, &frame.rows)?;
                    let mut verts = poly;
                    sort_points(&mut verts);
                    Polytope::with_cached_vertices(h, frame.offs, verts)?
                }
                None => Polytope::from_rows(n_in, &frame.rows, &frame.offs)?,
            };
            let mut linear_rows: Vec<Vector> = Vec::with_capacity(n_neurons);
            let mut offset: Vector = Vec::with_capacity(n_neurons);
            for (i, &active) in frame.bits.iter().enumerate() {
                if active {
                    linear_rows.push(zmat.row_vec(i));
                    offset.push(zoff[i]);
                } else {
                    linear_rows.push(vec![0.0; n_in]);
                    offset.push(0.0);
                }
            }
            out.push(AffinePiece {
                domain,
                linear: Matrix::from_rows(n_in, &linear_rows)?,
                offset,
                pattern: piece.pattern.extended(frame.bits),
            });
            if out.len() > cap {
                return Err(Error::PieceCapExceeded {
                    count: out.len(),
                    cap,
                });
            }
            continue;
        }

        let i = frame.neuron;
        let row = zmat.row_vec(i);
        let t = zoff[i];
        if inf_norm(&row) <= 1e-12 {
            // Constant pre-activation: the sign of the offset decides the
            // branch analytically, no LP and no new constraint row.
            let mut bits = frame.bits;
            bits.push(t > 0.0);
            stack.push(Frame {
                neuron: i + 1,
                rows: frame.rows,
                offs: frame.offs,
                bits,
                poly: frame.poly,
            });
            continue;
        }

        // Active branch pushed first so the inactive branch is explored
        // first (LIFO), matching the q=0-first tie-break.
        let scale = euclid_norm(&row);
        for &active in &[true, false] {
            let mut rows = frame.rows.clone();
            let mut offs = frame.offs.clone();
            let (normal, cut): (Vector, f64) = if active {
                (row.iter().map(|v| -v / scale).collect(), t / scale)
            } else {
                (row.iter().map(|v| v / scale).collect(), -t / scale)
            };
            rows.push(normal.clone());
            offs.push(cut);
            let feasible_poly = match &frame.poly {
                Some(poly) => {
                    let clipped = clip_polygon(poly, &normal, cut, 1e-9);
                    if clipped.is_empty() {
                        continue;
                    }
                    Some(clipped)
                }
                None => {
                    let sys = Matrix::from_rows(n_in, &rows)?;
                    if !lp_feasible(&sys, &offs)?.is_feasible() {
                        continue;
                    }
                    None
                }
            };
            let mut bits = frame.bits.clone();
            bits.push(active);
            stack.push(Frame {
                neuron: i + 1,
                rows,
                offs,
                bits,
                poly: feasible_poly,
            });
        }
    }
    Ok(())
}

/// Apply a linear layer to every piece: the domain is unchanged and the map
/// becomes `x -> W(Cx+d) + theta`.
pub fn linear_layer_reach(pieces: &[AffinePiece], layer: &Layer) -> Result<Vec<AffinePiece>> {
    if layer.activation != Activation::Linear {
        return Err(Error::Usage(
            "linear_layer_reach expects a linear layer".into(),
        ));
    }
    pieces
        .iter()
        .map(|piece| {
            if piece.linear.rows() != layer.input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "piece produces {} values but layer expects {}",
                    piece.linear.rows(),
                    layer.input_dim()
                )));
            }
            let linear = layer.weights.matmul(&piece.linear);
            let mut offset = layer.weights.matvec(&piece.offset);
            for (oi, bi) in offset.iter_mut().zip(&layer.bias) {
                *oi += bi;
            }
            Ok(AffinePiece {
                domain: piece.domain.clone(),
                linear,
                offset,
                pattern: piece.pattern.clone(),
            })
        })
        .collect()
}

/// Decompose the network over `input` into affine pieces whose domains
/// cover the input union and satisfy `g(x) = Cx + d` pointwise.
pub fn network_reach(input: &PolyUnion, net: &ReluNetwork) -> Result<Vec<AffinePiece>> {
    network_reach_with(input, net, &ReachOptions::default())
}

pub fn network_reach_with(
    input: &PolyUnion,
    net: &ReluNetwork,
    opts: &ReachOptions,
) -> Result<Vec<AffinePiece>> {
    if input.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input union has dimension {} but network expects {}",
            input.dim(),
            net.input_dim()
        )));
    }
    let mut pieces: Vec<AffinePiece> = input
        .parts()
        .iter()
        .map(|p| AffinePiece::identity(p.clone()))
        .collect();
    for layer in net.layers() {
        pieces = match layer.activation {
            Activation::Relu => layer_reach_capped(&pieces, layer, opts.piece_cap)?,
            Activation::Linear => linear_layer_reach(&pieces, layer)?,
        };
        if pieces.len() > opts.piece_cap {
            return Err(Error::PieceCapExceeded {
                count: pieces.len(),
                cap: opts.piece_cap,
            });
        }
    }
    Ok(pieces)
}

/// Union of the affine images of all piece domains: the network's output
/// reach set.
pub fn output_set(pieces: &[AffinePiece]) -> Result<PolyUnion> {
    let Some(first) = pieces.first() else {
        return Ok(PolyUnion::empty(0));
    };
    let out_dim = first.linear.rows();
    let mut parts = Vec::with_capacity(pieces.len());
    for piece in pieces {
        parts.push(piece.domain.affine_image(&piece.linear, &piece.offset)?);
    }
    PolyUnion::new(out_dim, parts)
}
