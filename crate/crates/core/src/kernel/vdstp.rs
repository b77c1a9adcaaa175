use super::{InfSum, LocalNodeView};
use crate::state::NEG_INF;

/// Answers `max_{k != j} x[k] + sum_{l not in {j, k}} base[l]` for every `j`
/// in O(1) after an O(n) scan, and the pair form with two replaced members.
struct ExclMax<'a> {
    base: &'a [f64],
    sum: InfSum,
    infs: Vec<usize>,
}

impl<'a> ExclMax<'a> {
    fn new(base: &'a [f64]) -> Self {
        let infs = (0..base.len()).filter(|&k| base[k] == NEG_INF).collect();
        ExclMax { base, sum: InfSum::of(base.iter().copied()), infs }
    }

    /// Up to three finite-base indices with the largest `x[k] - base[k]`.
    fn top3(&self, x: &[f64]) -> [usize; 3] {
        let mut top = [usize::MAX; 3];
        let mut keys = [NEG_INF; 3];
        for k in 0..x.len() {
            if self.base[k] == NEG_INF || x[k] == NEG_INF {
                continue;
            }
            let key = x[k] - self.base[k];
            let mut pos = 3;
            while pos > 0 && (top[pos - 1] == usize::MAX || key > keys[pos - 1]) {
                pos -= 1;
            }
            if pos < 3 {
                for q in (pos + 1..3).rev() {
                    top[q] = top[q - 1];
                    keys[q] = keys[q - 1];
                }
                top[pos] = k;
                keys[pos] = key;
            }
        }
        top
    }

    /// Sum of `base` with all of `skip` removed (`skip` entries distinct).
    #[inline]
    fn rest(&self, skip: &[usize]) -> f64 {
        let mut vals = [0.0; 3];
        for (v, &s) in vals.iter_mut().zip(skip) {
            *v = self.base[s];
        }
        self.sum.without(&vals[..skip.len()])
    }

    /// Forbidden-base indices other than `j`: up to three of them, and the
    /// full count.
    #[inline]
    fn others(&self, j: usize) -> ([usize; 3], usize) {
        let mut out = [usize::MAX; 3];
        let mut count = 0;
        for &f in self.infs.iter().filter(|&&f| f != j) {
            if count < 3 {
                out[count] = f;
            }
            count += 1;
        }
        (out, count)
    }

    fn single(&self, j: usize, x: &[f64], top: &[usize; 3]) -> f64 {
        let (others, count) = self.others(j);
        match count {
            0 => {
                let mut best = NEG_INF;
                for &k in top.iter().filter(|&&k| k != usize::MAX && k != j) {
                    best = best.max(x[k] + self.rest(&[j, k]));
                }
                best
            }
            1 => {
                let f = others[0];
                x[f] + self.rest(&[j, f])
            }
            _ => NEG_INF,
        }
    }

    fn pair(&self, j: usize, x: &[f64], tx: &[usize; 3], y: &[f64], ty: &[usize; 3]) -> f64 {
        let (others, count) = self.others(j);
        if count > 2 {
            return NEG_INF;
        }
        let cands = |t: &[usize; 3]| {
            let mut c = [usize::MAX; 5];
            let mut len = 0;
            for &k in others[..count].iter().chain(t.iter().filter(|&&k| k != usize::MAX && k != j)) {
                c[len] = k;
                len += 1;
            }
            (c, len)
        };
        let ((ck, nk), (cl, nl)) = (cands(tx), cands(ty));
        let mut best = NEG_INF;
        for &k in &ck[..nk] {
            for &l in &cl[..nl] {
                if k != l {
                    best = best.max(x[k] + y[l] + self.rest(&[j, k, l]));
                }
            }
        }
        best
    }
}

#[inline]
fn raise(slot: &mut f64, v: f64) {
    if v > *slot {
        *slot = v;
    }
}

/// Unnormalized outgoing messages of a vertex-disjoint node, one per neighbor.
pub fn raw_vdstp(view: &LocalNodeView<'_>) -> Vec<Vec<f64>> {
    let n = view.degree();
    let sp = view.space;
    let (depth, comms) = (sp.depth() as i32, sp.comms());
    let mut out = vec![vec![NEG_INF; sp.len()]; n];
    let unused: Vec<f64> = (0..n).map(|k| view.unused(k)).collect();
    let pen: Vec<f64> = (1..=comms).map(|mu| view.inactive_penalty(mu)).collect();
    let pen_sum = InfSum::of(pen.iter().copied());

    if let Some(rho) = view.root_of {
        // Children at depth 1 or unused; no other communication may touch the root.
        let p = pen_sum.without(&[pen[rho - 1]]);
        let b: Vec<f64> = (0..n).map(|k| view.h(k, 1, rho).max(unused[k])).collect();
        let s = InfSum::of(b.iter().copied());
        for j in 0..n {
            let v = p + s.without(&[b[j]]);
            out[j][0] = v;
            out[j][sp.idx(-1, rho)] = v;
        }
        return out;
    }

    let sa = InfSum::of(unused.iter().copied());
    let p0 = pen_sum.value();
    for j in 0..n {
        out[j][0] = p0 + sa.without(&[unused[j]]);
    }

    let by_unused = ExclMax::new(&unused);
    let mut parent = vec![0.0; n];
    let mut same = vec![0.0; n];
    let mut keep = vec![0.0; n];
    for mu in 1..=comms {
        let pm = pen_sum.without(&[pen[mu - 1]]);
        if pm == NEG_INF {
            continue;
        }
        let flat = view.flat_ok(mu);
        for e in 1..=depth {
            for k in 0..n {
                parent[k] = view.h(k, -e, mu) - view.weights[k];
                keep[k] = view.h(k, e + 1, mu).max(unused[k]);
            }
            let branch = ExclMax::new(&keep);
            let top_parent = branch.top3(&parent);
            let up = sp.idx(e, mu);
            let down = (e < depth).then(|| sp.idx(-(e + 1), mu));
            for j in 0..n {
                raise(&mut out[j][up], -view.weights[j] + pm + branch.sum.without(&[keep[j]]));
                let v = pm + branch.single(j, &parent, &top_parent);
                raise(&mut out[j][0], v);
                if let Some(down) = down {
                    raise(&mut out[j][down], v);
                }
            }
            if flat {
                for k in 0..n {
                    same[k] = view.h(k, e, mu);
                }
                let top_same = by_unused.top3(&same);
                let top_par = by_unused.top3(&parent);
                let flat_down = sp.idx(-e, mu);
                for j in 0..n {
                    raise(&mut out[j][up], -view.weights[j] + pm + by_unused.single(j, &same, &top_same));
                    raise(&mut out[j][flat_down], pm + by_unused.single(j, &parent, &top_par));
                    raise(&mut out[j][0], pm + by_unused.pair(j, &parent, &top_par, &same, &top_same));
                }
            }
        }
    }
    out
}
