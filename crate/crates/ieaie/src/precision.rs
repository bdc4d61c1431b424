//! Reduced-precision dynamics of the map: quantize the unit square onto a toy
//! number format, iterate `quantize(step(.))` and study the resulting
//! functional graph (every node has out-degree 1, so each component is a
//! cycle with trees hanging off it).
//!
//! Short cycles and short tails in these graphs are the finite-precision
//! degradation the full pipeline inherits; the brute-force graphs here make
//! that measurable for formats small enough to enumerate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasm::{lasm_step, ControlParam, StateVector};

/// Cap on the number of grid points (pairs) a graph build will enumerate.
pub const DEFAULT_STATE_CAP: u64 = 1 << 26;

/// A toy number format whose representable values in `[0, 1]` can be listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberFormat {
    /// `bits`-bit fixed point: the values `i / 2^bits` for `i in 0..2^bits`.
    Fixed { bits: u32 },
    /// A miniature binary float: 1 implicit sign (non-negative only),
    /// `exp_bits` exponent bits, `mantissa_bits` stored fraction bits.
    /// Encodings follow the usual pattern: exponent field 0 holds subnormals
    /// (and zero), the all-ones exponent field is excluded rather than spent
    /// on infinities, and `bias` defaults to `2^(exp_bits-1) - 1`.
    Float { exp_bits: u32, mantissa_bits: u32, bias: Option<i32> },
}

impl NumberFormat {
    /// All representable values inside `[0, 1]`, ascending, deduplicated.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            NumberFormat::Fixed { bits } => {
                assert!((1..=30).contains(&bits), "fixed-point width out of range");
                let denom = (1u64 << bits) as f64;
                (0..(1u64 << bits)).map(|i| i as f64 / denom).collect()
            }
            NumberFormat::Float { exp_bits, mantissa_bits, bias } => {
                assert!((1..=8).contains(&exp_bits), "exponent width out of range");
                assert!((1..=23).contains(&mantissa_bits), "mantissa width out of range");
                let bias = bias.unwrap_or((1i32 << (exp_bits - 1)) - 1);
                let mut vals = Vec::new();
                let frac_count = 1u64 << mantissa_bits;
                // exponent field: 0 = subnormal, max field excluded
                for field in 0..(1u64 << exp_bits) - 1 {
                    for frac in 0..frac_count {
                        let f = frac as f64 / frac_count as f64;
                        let v = if field == 0 {
                            // subnormal: 2^(1-bias) * (0 + f)
                            f * (2.0f64).powi(1 - bias)
                        } else {
                            (1.0 + f) * (2.0f64).powi(field as i32 - bias)
                        };
                        if (0.0..=1.0).contains(&v) {
                            vals.push(v);
                        }
                    }
                }
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                vals
            }
        }
    }
}

/// Direction in which an arbitrary real is snapped onto the value set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantizer {
    /// Largest representable value `<= x`.
    Floor,
    /// Nearest representable value, ties away from zero.
    Round,
    /// Smallest representable value `>= x`, clamped to the set maximum.
    Ceil,
}

/// Snap `x` onto the sorted value set; returns the index into `values`.
/// `x` must be at least `values[0]` (the map's outputs never go below zero).
pub fn quantize_index(values: &[f64], q: Quantizer, x: f64) -> usize {
    debug_assert!(!values.is_empty() && x >= values[0]);
    // partition_point: count of values <= x
    let le = values.partition_point(|&v| v <= x);
    let lower = le - 1; // largest index with values[lower] <= x
    if values[lower] == x {
        return lower;
    }
    let upper = le.min(values.len() - 1);
    match q {
        Quantizer::Floor => lower,
        Quantizer::Ceil => upper,
        Quantizer::Round => {
            if upper == lower {
                lower
            } else {
                let below = x - values[lower];
                let above = values[upper] - x;
                // ties away from zero: the larger candidate wins
                if below < above {
                    lower
                } else {
                    upper
                }
            }
        }
    }
}

/// One map iteration followed by componentwise quantization, expressed on
/// value-set indices.
pub fn quantized_step(
    values: &[f64],
    q: Quantizer,
    mu: ControlParam,
    ix: usize,
    iy: usize,
) -> (usize, usize) {
    let s = lasm_step(StateVector { x: values[ix], y: values[iy] }, mu);
    (quantize_index(values, q, s.x), quantize_index(values, q, s.y))
}

/// The full functional graph over the grid `values x values`. Node
/// `ix * values.len() + iy` represents the state `(values[ix], values[iy])`;
/// `successor[node]` is the node its quantized image lands on.
#[derive(Debug, Clone)]
pub struct FunctionalGraph {
    pub side: usize,
    pub successor: Vec<u32>,
}

impl FunctionalGraph {
    pub fn node_of(&self, ix: usize, iy: usize) -> usize {
        ix * self.side + iy
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.side, node % self.side)
    }
}

pub fn build_functional_graph(
    format: NumberFormat,
    q: Quantizer,
    mu: ControlParam,
    cap: u64,
) -> Result<FunctionalGraph> {
    let values = format.values();
    let states = (values.len() as u128) * (values.len() as u128);
    if states > cap as u128 {
        return Err(Error::StateCapExceeded { states, cap });
    }
    let side = values.len();
    let mut successor = Vec::with_capacity(side * side);
    for ix in 0..side {
        for iy in 0..side {
            let (nx, ny) = quantized_step(&values, q, mu, ix, iy);
            successor.push((nx * side + ny) as u32);
        }
    }
    Ok(FunctionalGraph { side, successor })
}

/// Structural decomposition of a functional graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub components: usize,
    /// One entry per component, the length of its unique cycle. Sorted.
    pub cycle_lengths: Vec<usize>,
    /// Longest distance from any node to its component's cycle.
    pub max_tail: usize,
    pub self_loops: usize,
    /// Component sizes, descending.
    pub component_sizes: Vec<usize>,
}

/// Per-node classification produced by [`decompose`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Component id per node.
    pub component: Vec<u32>,
    /// Distance to the component cycle; 0 means the node is on it.
    pub tail_distance: Vec<u32>,
    pub stats: GraphStats,
}

pub fn decompose(g: &FunctionalGraph) -> Decomposition {
    let n = g.successor.len();
    let mut component = vec![u32::MAX; n];
    let mut tail = vec![u32::MAX; n];
    // 0 unvisited, 1 on current path, 2 finished
    let mut color = vec![0u8; n];
    let mut cycle_lengths = Vec::new();
    let mut comp_count = 0u32;

    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        while color[cur] == 0 {
            color[cur] = 1;
            path.push(cur);
            cur = g.successor[cur] as usize;
        }
        if color[cur] == 1 {
            // new cycle discovered inside the current path
            let cycle_start = path.iter().position(|&p| p == cur).unwrap();
            let comp = comp_count;
            comp_count += 1;
            cycle_lengths.push(path.len() - cycle_start);
            for &node in &path[cycle_start..] {
                component[node] = comp;
                tail[node] = 0;
            }
            path.truncate(cycle_start);
        }
        // remaining path nodes are a tail onto a finished node
        let mut dist = tail[cur] ;
        let comp = component[cur];
        for &node in path.iter().rev() {
            dist += 1;
            component[node] = comp;
            tail[node] = dist;
            color[node] = 2;
        }
        // mark the cycle (or re-walked) nodes finished
        let mut c = cur;
        while color[c] == 1 {
            color[c] = 2;
            c = g.successor[c] as usize;
        }
    }

    let mut sizes = vec![0usize; comp_count as usize];
    for &c in &component {
        sizes[c as usize] += 1;
    }
    let mut component_sizes = sizes.clone();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut sorted_cycles = cycle_lengths.clone();
    sorted_cycles.sort_unstable();
    let stats = GraphStats {
        nodes: n,
        components: comp_count as usize,
        cycle_lengths: sorted_cycles,
        max_tail: tail.iter().copied().max().unwrap_or(0) as usize,
        self_loops: (0..n).filter(|&i| g.successor[i] as usize == i).count(),
        component_sizes,
    };
    Decomposition { component, tail_distance: tail, stats }
}

/// Render the graph in Graphviz DOT form. Nodes are labeled with their grid
/// coordinates as `(i, j)`. Output is deterministic.
pub fn export_dot(g: &FunctionalGraph) -> String {
    let mut out = String::from("digraph quantized_map {\n");
    for node in 0..g.successor.len() {
        let (i, j) = g.coords(node);
        out.push_str(&format!("  n{node} [label=\"({i}, {j})\"];\n"));
    }
    for (node, &succ) in g.successor.iter().enumerate() {
        out.push_str(&format!("  n{node} -> n{succ};\n"));
    }
    out.push_str("}\n");
    out
}
