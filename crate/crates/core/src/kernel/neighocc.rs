//! Edge-disjoint node update by recursion over neighbor-occupation subsets.
//!
//! `F^q_X` is the best value of assigning the neighbor set `X` to
//! communications `1..=q` (edges outside every communication count as
//! unused), `B^q_X` the same for communications `q..=M` with no unused edges.
//! `C^mu_Z` combines both around `mu`, so clamping the target edge to a
//! `mu`-state only needs a scan over the `mu`-edges of the remaining neighbors.
//!
//! All subset tables of a node live in one flat buffer indexed by bitmask.

use std::cell::RefCell;

use super::LocalNodeView;
use crate::error::{Error, Result};
use crate::state::NEG_INF;

pub const DEFAULT_DEGREE_CAP: usize = 14;

/// `out[X] = max_{Y subset X} a[X \ Y] + b[Y]`.
fn convolve(a: &[f64], b: &[f64], out: &mut [f64]) {
    for (x, o) in out.iter_mut().enumerate() {
        let mut best = NEG_INF;
        let mut y = x;
        loop {
            let v = a[x ^ y] + b[y];
            if v > best {
                best = v;
            }
            if y == 0 {
                break;
            }
            y = (y - 1) & x;
        }
        *o = best;
    }
}

/// Subset sums of `vals` (saturating on forbidden members).
fn subset_sums(out: &mut [f64], vals: impl Fn(usize) -> f64) {
    out[0] = 0.0;
    for s in 1..out.len() {
        let k = s.trailing_zeros() as usize;
        out[s] = out[s & (s - 1)] + vals(k);
    }
}

#[inline]
fn raise(slot: &mut f64, v: f64) {
    if v > *slot {
        *slot = v;
    }
}

/// Per-communication tables, `size = 2^n` entries each:
/// `t(q, e)[S] = sum_{l in S} h_l(e, q)` for `e in 1..=D+1`,
/// `branch(q, e)[S] = max_{k in S} h_k(-e, q) - w_k + t(q, e+1)[S \ k]` and
/// `g(q)[S]`, the value of the `q`-edges being exactly `S` (prize when empty).
struct Tables {
    size: usize,
    depth: usize,
    t: Vec<f64>,
    branch: Vec<f64>,
    g: Vec<f64>,
}

impl Tables {
    fn t(&self, q: usize, e: usize) -> &[f64] {
        let at = ((q - 1) * (self.depth + 2) + e) * self.size;
        &self.t[at..at + self.size]
    }

    fn branch(&self, q: usize, e: usize) -> &[f64] {
        let at = ((q - 1) * (self.depth + 1) + e) * self.size;
        &self.branch[at..at + self.size]
    }

    fn g(&self, q: usize) -> &[f64] {
        &self.g[(q - 1) * self.size..q * self.size]
    }

    fn build(view: &LocalNodeView<'_>, pool: &mut Pool) -> Self {
        let n = view.degree();
        let size = 1usize << n;
        let (depth, comms) = (view.space.depth(), view.space.comms());
        let mut t = take(&mut pool.t, comms * (depth + 2) * size, 0.0);
        let mut branch = take(&mut pool.branch, comms * (depth + 1) * size, NEG_INF);
        let mut g = take(&mut pool.g, comms * size, NEG_INF);
        let mut par = take(&mut pool.par, n, 0.0);
        for q in 1..=comms {
            let tq = &mut t[(q - 1) * (depth + 2) * size..q * (depth + 2) * size];
            for e in 1..=depth + 1 {
                subset_sums(&mut tq[e * size..(e + 1) * size], |k| view.h(k, e as i32, q));
            }
            let gq = &mut g[(q - 1) * size..q * size];
            if view.is_root(q) {
                gq.copy_from_slice(&tq[size..2 * size]);
                continue;
            }
            gq[0] = view.inactive_penalty(q);
            let bq = &mut branch[(q - 1) * (depth + 1) * size..q * (depth + 1) * size];
            for e in 1..=depth {
                for (k, p) in par.iter_mut().enumerate() {
                    *p = view.h(k, -(e as i32), q) - view.weights[k];
                }
                let next = &tq[(e + 1) * size..(e + 2) * size];
                let b = &mut bq[e * size..(e + 1) * size];
                for s in 1..size {
                    let mut best = NEG_INF;
                    let mut rest = s;
                    while rest != 0 {
                        let k = rest.trailing_zeros() as usize;
                        rest &= rest - 1;
                        let v = par[k] + next[s ^ (1 << k)];
                        if v > best {
                            best = v;
                        }
                    }
                    b[s] = best;
                    raise(&mut gq[s], best);
                }
            }
            if view.flat_ok(q) {
                for k in 0..n {
                    for l in k + 1..n {
                        let s = (1 << k) | (1 << l);
                        let (wk, wl) = (view.weights[k], view.weights[l]);
                        for e in 1..=depth as i32 {
                            let v = (view.h(k, -e, q) - wk + view.h(l, e, q)).max(view.h(l, -e, q) - wl + view.h(k, e, q));
                            raise(&mut gq[s], v);
                        }
                    }
                }
            }
        }
        pool.par = par;
        Tables { size, depth, t, branch, g }
    }

    fn release(self, pool: &mut Pool) {
        pool.t = self.t;
        pool.branch = self.branch;
        pool.g = self.g;
    }
}

/// Reusable buffers, one set per thread.
#[derive(Default)]
struct Pool {
    t: Vec<f64>,
    branch: Vec<f64>,
    g: Vec<f64>,
    par: Vec<f64>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
    ctx: Vec<f64>,
}

thread_local! {
    static POOL: RefCell<Pool> = RefCell::new(Pool::default());
}

fn take(buf: &mut Vec<f64>, len: usize, fill: f64) -> Vec<f64> {
    let mut v = std::mem::take(buf);
    v.clear();
    v.resize(len, fill);
    v
}

/// Unnormalized outgoing messages of an edge-disjoint node, one per neighbor.
pub fn raw_edstp_neighocc(view: &LocalNodeView<'_>, degree_cap: usize) -> Result<Vec<Vec<f64>>> {
    let n = view.degree();
    if n > degree_cap {
        return Err(Error::KernelCapacity(format!(
            "node {} has degree {n}, above the subset-recursion cap {degree_cap}",
            view.node + 1
        )));
    }
    Ok(POOL.with(|pool| outgoing(view, &mut pool.borrow_mut())))
}

fn outgoing(view: &LocalNodeView<'_>, pool: &mut Pool) -> Vec<Vec<f64>> {
    let n = view.degree();
    let sp = view.space;
    let (depth, comms) = (sp.depth() as i32, sp.comms());
    let size = 1usize << n;
    let full = size - 1;
    let tab = Tables::build(view, pool);

    // fwd holds F^q for q in 0..M; bwd holds B^q at slot q - 2 for q in 2..=M.
    let mut fwd = take(&mut pool.fwd, comms * size, 0.0);
    subset_sums(&mut fwd[..size], |k| view.unused(k));
    for q in 1..comms {
        let (done, rest) = fwd.split_at_mut(q * size);
        convolve(&done[(q - 1) * size..], tab.g(q), &mut rest[..size]);
    }
    let mut bwd = take(&mut pool.bwd, comms.saturating_sub(1) * size, 0.0);
    if comms >= 2 {
        bwd[(comms - 2) * size..].copy_from_slice(tab.g(comms));
        for q in (2..comms).rev() {
            let (lo, hi) = bwd.split_at_mut((q - 1) * size);
            convolve(&hi[..size], tab.g(q), &mut lo[(q - 2) * size..]);
        }
    }
    // ctx holds C^mu: every communication but mu, plus unused edges.
    let mut ctx = take(&mut pool.ctx, comms * size, 0.0);
    for mu in 1..=comms {
        let f = &fwd[(mu - 1) * size..mu * size];
        let c = &mut ctx[(mu - 1) * size..mu * size];
        if mu == comms {
            c.copy_from_slice(f);
        } else {
            convolve(f, &bwd[(mu - 1) * size..mu * size], c);
        }
    }

    let mut out = vec![vec![NEG_INF; sp.len()]; n];
    let last = tab.g(comms);
    let prev = &fwd[(comms - 1) * size..];
    for (j, o) in out.iter_mut().enumerate() {
        let r = full ^ (1 << j);
        // Target unused: all communications over the remaining neighbors.
        let mut y = r;
        loop {
            raise(&mut o[0], prev[r ^ y] + last[y]);
            if y == 0 {
                break;
            }
            y = (y - 1) & r;
        }

        let wj = view.weights[j];
        for q in 1..=comms {
            let c = &ctx[(q - 1) * size..q * size];
            if view.is_root(q) {
                let slot = sp.idx(-1, q);
                let t1 = tab.t(q, 1);
                let mut s = r;
                loop {
                    raise(&mut o[slot], t1[s] + c[r ^ s]);
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & r;
                }
                continue;
            }
            let flat = view.flat_ok(q);
            let mut s = r;
            loop {
                let rest = c[r ^ s];
                if rest != NEG_INF {
                    for e in 1..=depth {
                        // j is the parent of i, i sits at depth e.
                        raise(&mut o[sp.idx(e, q)], -wj + tab.t(q, e as usize + 1)[s] + rest);
                        // j is a child at depth e + 1.
                        if e < depth {
                            raise(&mut o[sp.idx(-(e + 1), q)], tab.branch(q, e as usize)[s] + rest);
                        }
                    }
                    if flat && s.count_ones() == 1 {
                        let k = s.trailing_zeros() as usize;
                        for e in 1..=depth {
                            raise(&mut o[sp.idx(e, q)], -wj + view.h(k, e, q) + rest);
                            raise(&mut o[sp.idx(-e, q)], view.h(k, -e, q) - view.weights[k] + rest);
                        }
                    }
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & r;
            }
        }
    }
    tab.release(pool);
    pool.fwd = fwd;
    pool.bwd = bwd;
    pool.ctx = ctx;
    out
}
