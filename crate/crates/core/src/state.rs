//! Max-Sum message storage on the edge-variable state space.
//!
//! Every edge carries a variable `(d, mu)` with `d` in `-D..=D` and `mu` in
//! `0..=M`, where `d == 0` exactly when `mu == 0`. States are stored in a
//! canonical order: `(0, 0)` first, then by communication and within a
//! communication by depth from `-D` to `D`. All argmax operations break ties
//! towards the lowest index in that order.
//!
//! A message `h_ij` lives on the directed edge `i -> j` and is indexed by the
//! value of `d_ij` (`d_ij > 0` means `j` is the parent of `i`). Edge `e = (u, v)`
//! with `u < v` owns directed slots `2e` (`u -> v`) and `2e + 1` (`v -> u`).
//! Fields are stored oriented `u -> v`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Forbidden-state sentinel. Addition saturates: `NEG_INF + x == NEG_INF`.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Value `(d, mu)` of an edge variable; `comm == 0` means unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeState {
    pub depth: i32,
    pub comm: usize,
}

impl EdgeState {
    pub const UNUSED: EdgeState = EdgeState { depth: 0, comm: 0 };

    pub fn new(depth: i32, comm: usize) -> Self {
        EdgeState { depth, comm }
    }

    pub fn is_unused(self) -> bool {
        self.comm == 0
    }

    /// State seen from the other endpoint.
    pub fn flipped(self) -> Self {
        EdgeState { depth: -self.depth, comm: self.comm }
    }
}

/// Index arithmetic for the `1 + 2 D M` valid states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    depth: usize,
    comms: usize,
}

impl StateSpace {
    pub fn new(depth: usize, comms: usize) -> Self {
        assert!(depth >= 1 && comms >= 1, "state space needs D >= 1 and M >= 1");
        StateSpace { depth, comms }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn comms(&self) -> usize {
        self.comms
    }

    pub fn len(&self) -> usize {
        1 + 2 * self.depth * self.comms
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of `(d, mu)` for `mu >= 1`, `1 <= |d| <= D`. Callers must stay in range.
    #[inline]
    pub fn idx(&self, d: i32, mu: usize) -> usize {
        debug_assert!(mu >= 1 && mu <= self.comms && d != 0 && d.unsigned_abs() as usize <= self.depth);
        let dd = self.depth as i32;
        let off = if d < 0 { d + dd } else { d + dd - 1 };
        1 + (mu - 1) * 2 * self.depth + off as usize
    }

    /// Index of `state`, or `None` if it is not a valid state.
    pub fn index(&self, state: EdgeState) -> Option<usize> {
        if state.comm == 0 {
            return (state.depth == 0).then_some(0);
        }
        if state.comm > self.comms || state.depth == 0 || state.depth.unsigned_abs() as usize > self.depth {
            return None;
        }
        Some(self.idx(state.depth, state.comm))
    }

    pub fn state(&self, idx: usize) -> EdgeState {
        if idx == 0 {
            return EdgeState::UNUSED;
        }
        let k = idx - 1;
        let mu = k / (2 * self.depth) + 1;
        let off = (k % (2 * self.depth)) as i32;
        let dd = self.depth as i32;
        let d = if off < dd { off - dd } else { off - dd + 1 };
        EdgeState { depth: d, comm: mu }
    }

    /// Index of the state with the depth sign reversed.
    #[inline]
    pub fn flip(&self, idx: usize) -> usize {
        if idx == 0 {
            return 0;
        }
        // Negating the depth reverses the order inside a communication block.
        let w = 2 * self.depth;
        let (block, off) = ((idx - 1) / w, (idx - 1) % w);
        1 + block * w + (w - 1 - off)
    }

    /// `h(d, mu)` with out-of-range depths (`|d| > D` or `d == 0`) read as forbidden.
    #[inline]
    pub fn get(&self, msg: &[f64], d: i32, mu: usize) -> f64 {
        if d == 0 || d.unsigned_abs() as usize > self.depth {
            NEG_INF
        } else {
            msg[self.idx(d, mu)]
        }
    }

    pub fn states(&self) -> impl Iterator<Item = EdgeState> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }
}

/// Shifts finite entries so the maximum is exactly 0. Returns the shift.
pub fn normalize(entries: &mut [f64]) -> Result<f64> {
    let max = entries.iter().copied().fold(NEG_INF, f64::max);
    if max == NEG_INF {
        return Err(Error::Contradiction("every state is forbidden".into()));
    }
    debug_assert!(!max.is_nan());
    for x in entries.iter_mut() {
        if *x != NEG_INF {
            *x -= max;
        }
    }
    Ok(max)
}

/// Index of the maximum entry, lowest index on ties.
pub fn argmax(entries: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in entries.iter().enumerate().skip(1) {
        if x > entries[best] {
            best = i;
        }
    }
    best
}

/// `a + g * b` with `g == 0` leaving `a` untouched (so `0 * NEG_INF` never
/// produces NaN).
#[inline]
fn add_scaled(a: f64, g: f64, b: f64) -> f64 {
    if g == 0.0 {
        a
    } else {
        a + g * b
    }
}

/// Messages for every directed edge, `stride = StateSpace::len()` entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageTable {
    space: StateSpace,
    data: Vec<f64>,
}

impl MessageTable {
    pub fn zeros(space: StateSpace, num_edges: usize) -> Self {
        MessageTable { space, data: vec![0.0; 2 * num_edges * space.len()] }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_directed(&self) -> usize {
        self.data.len() / self.space.len()
    }

    pub fn get(&self, dir: usize) -> &[f64] {
        let s = self.space.len();
        &self.data[dir * s..(dir + 1) * s]
    }

    pub fn get_mut(&mut self, dir: usize) -> &mut [f64] {
        let s = self.space.len();
        &mut self.data[dir * s..(dir + 1) * s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Max over states is 0 and no NaN, for every directed edge.
    pub fn is_normalized(&self) -> bool {
        self.data.chunks(self.space.len()).all(|m| {
            !m.iter().any(|x| x.is_nan()) && m.iter().copied().fold(NEG_INF, f64::max) == 0.0
        })
    }
}

/// Directed slot of `from -> to` over edge `edge`.
#[inline]
pub fn directed(inst: &Instance, edge: usize, from: usize) -> usize {
    if inst.edge(edge).u == from {
        2 * edge
    } else {
        2 * edge + 1
    }
}

/// Zero messages plus i.i.d. uniform noise in `[0, noise_eps]`, normalized.
pub fn init_messages(inst: &Instance, space: StateSpace, seed: u64, noise_eps: f64) -> MessageTable {
    let mut table = MessageTable::zeros(space, inst.num_edges());
    if noise_eps > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in table.data.iter_mut() {
            *x = rng.gen::<f64>() * noise_eps;
        }
    }
    let s = space.len();
    for m in table.data.chunks_mut(s) {
        normalize(m).expect("finite initial messages");
        quantize(m);
    }
    table
}

/// Grid on which the solver stores messages, fields and kernel weights.
/// Sums of grid values below 2^23 in magnitude are exact in `f64`, so every
/// kernel produces bit-identical outputs whatever its summation order.
pub const QUANTUM: f64 = 1.0 / (1u64 << 30) as f64;

/// Nearest multiple of [`QUANTUM`] (ties to even); infinities pass through.
#[inline]
pub fn snap(x: f64) -> f64 {
    // Adding and removing 1.5 * 2^22 rounds to the grid in hardware while
    // |x| < 2^21.
    const SHIFT: f64 = 6291456.0;
    if x.abs() < 2097152.0 {
        (x + SHIFT) - SHIFT
    } else if x.is_finite() {
        (x / QUANTUM).round_ties_even() * QUANTUM
    } else {
        x
    }
}

/// Rounds every finite entry to the nearest multiple of [`QUANTUM`].
pub fn quantize(entries: &mut [f64]) {
    for x in entries.iter_mut() {
        *x = snap(*x);
    }
}

/// Normalized fields `H_uv` per undirected edge, with the applied shift `C'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityField {
    space: StateSpace,
    data: Vec<f64>,
    offsets: Vec<f64>,
}

impl CavityField {
    pub fn zeros(space: StateSpace, num_edges: usize) -> Self {
        CavityField { space, data: vec![0.0; num_edges * space.len()], offsets: vec![0.0; num_edges] }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn num_edges(&self) -> usize {
        self.offsets.len()
    }

    /// Field of edge `e` oriented `u -> v`.
    pub fn get(&self, edge: usize) -> &[f64] {
        let s = self.space.len();
        &self.data[edge * s..(edge + 1) * s]
    }

    pub fn get_mut(&mut self, edge: usize) -> &mut [f64] {
        let s = self.space.len();
        &mut self.data[edge * s..(edge + 1) * s]
    }

    pub fn offset(&self, edge: usize) -> f64 {
        self.offsets[edge]
    }

    pub fn set_offset(&mut self, edge: usize, c: f64) {
        self.offsets[edge] = c;
    }

    /// Field value of `state` as seen along the direction `dir` (`2e` or `2e+1`).
    pub fn oriented(&self, dir: usize, idx: usize) -> f64 {
        let f = self.get(dir / 2);
        if dir % 2 == 0 {
            f[idx]
        } else {
            f[self.space.flip(idx)]
        }
    }

    /// Field of `dir / 2` oriented along directed slot `dir`, written to `out`.
    pub fn oriented_into(&self, dir: usize, out: &mut [f64]) {
        let f = self.get(dir / 2);
        if dir % 2 == 0 {
            out.copy_from_slice(f);
        } else {
            for (idx, o) in out.iter_mut().enumerate() {
                *o = f[self.space.flip(idx)];
            }
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.data.chunks(self.space.len()).all(|m| {
            !m.iter().any(|x| x.is_nan()) && m.iter().copied().fold(NEG_INF, f64::max) == 0.0
        })
    }
}

/// `H(s) = h_uv(s) + h_vu(flip s) + gamma * prev(s) - C'`, with `C'` making the
/// maximum 0. `prev` is ignored when `gamma == 0`. Returns `C'`.
pub fn reinforced_field(
    space: &StateSpace,
    h_uv: &[f64],
    h_vu: &[f64],
    gamma: f64,
    prev: &[f64],
    out: &mut [f64],
) -> Result<f64> {
    for (idx, o) in out.iter_mut().enumerate() {
        *o = add_scaled(h_uv[idx] + h_vu[space.flip(idx)], gamma, prev[idx]);
    }
    normalize(out)
}

/// Plain cavity field of one edge: `H(s) = h_uv(s) + h_vu(-s) - C'`.
pub fn cavity_field(space: &StateSpace, h_uv: &[f64], h_vu: &[f64], out: &mut [f64]) -> Result<f64> {
    reinforced_field(space, h_uv, h_vu, 0.0, h_uv, out)
}

/// Reinforcement strength at iteration `t`: `gamma_t = t * gamma0`.
pub fn reinforcement_strength(t: usize, gamma0: f64) -> f64 {
    t as f64 * gamma0
}

/// `h = normalize(fresh + gamma_t * prev_field)` where `prev_field` is the
/// previous field oriented along the message direction.
pub fn apply_reinforcement(fresh: &[f64], prev_field: &[f64], t: usize, gamma0: f64, out: &mut [f64]) -> Result<f64> {
    let g = reinforcement_strength(t, gamma0);
    for ((o, &f), &p) in out.iter_mut().zip(fresh).zip(prev_field) {
        *o = add_scaled(f, g, p);
    }
    normalize(out)
}

/// One line per directed edge: `msg <from> <to> <v0> <v1> ...` with 1-based
/// node ids, states in canonical order and floats in shortest round-trip form.
pub fn dump_messages(inst: &Instance, table: &MessageTable) -> String {
    let mut s = String::new();
    for (e, edge) in inst.edges().iter().enumerate() {
        for (dir, (a, b)) in [(2 * e, (edge.u, edge.v)), (2 * e + 1, (edge.v, edge.u))] {
            let _ = write!(s, "msg {} {}", a + 1, b + 1);
            for x in table.get(dir) {
                let _ = write!(s, " {x}");
            }
            s.push('\n');
        }
    }
    s
}

/// Inverse of [`dump_messages`].
pub fn parse_message_dump(inst: &Instance, space: StateSpace, text: &str) -> Result<MessageTable> {
    let mut table = MessageTable::zeros(space, inst.num_edges());
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None => continue,
            Some("msg") => {}
            Some(other) => {
                return Err(Error::Parse { line: line_no, msg: format!("unexpected key '{other}'") })
            }
        }
        let mut node = || -> Result<usize> {
            toks.next()
                .and_then(|t| t.parse::<usize>().ok())
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| Error::Parse { line: line_no, msg: "bad node id".into() })
        };
        let (a, b) = (node()?, node()?);
        let edge = inst
            .find_edge(a, b)
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("no edge {} {}", a + 1, b + 1) })?;
        let dir = directed(inst, edge, a);
        let vals: Vec<f64> = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: line_no, msg: "bad value".into() })?;
        if vals.len() != space.len() {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {} values, got {}", space.len(), vals.len()),
            });
        }
        table.get_mut(dir).copy_from_slice(&vals);
    }
    Ok(table)
}
