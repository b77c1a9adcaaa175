//! Edge-disjoint node update by enumerating the depth vector `s` and solving
//! the parent assignment as a matching.
//!
//! For fixed `s`, each active communication `mu` (`s_mu > 0`) needs one parent
//! neighbor with `d_ki = -s_mu`; every other neighbor picks its best passive
//! role (unused, or a child of an active communication). This is a matching
//! of active columns to distinct rows. Per-target values must exclude the
//! target row, so the matching is solved by a DP over column subsets with
//! prefix and suffix tables, which handles forbidden baselines exactly.

use super::{InfSum, LocalNodeView};
use crate::error::{Error, Result};
use crate::state::NEG_INF;

pub const DEFAULT_ENUM_CAP: usize = 1 << 20;

#[inline]
fn raise(slot: &mut f64, v: f64) {
    if v > *slot {
        *slot = v;
    }
}

/// Row-by-row DP: `table[r][S]` is the best value of rows `r0..r` (prefix) or
/// `r..n` (suffix) with column set `S` matched.
struct RowDp {
    k: usize,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl RowDp {
    fn with_capacity(n: usize, max_k: usize) -> Self {
        let len = (n + 1) << max_k;
        RowDp { k: 0, prefix: vec![NEG_INF; len], suffix: vec![NEG_INF; len] }
    }

    /// Rebuilds both tables for `k` columns; `pay` is row-major `n x k`.
    fn fill(&mut self, base: &[f64], pay: &[f64], k: usize) {
        let n = base.len();
        let size = 1usize << k;
        self.k = k;
        let prefix = &mut self.prefix[..(n + 1) * size];
        let suffix = &mut self.suffix[..(n + 1) * size];
        prefix[..size].fill(NEG_INF);
        prefix[0] = 0.0;
        suffix[n * size..].fill(NEG_INF);
        suffix[n * size] = 0.0;
        for r in 0..n {
            let (done, next) = prefix.split_at_mut((r + 1) * size);
            step(&done[r * size..], &mut next[..size], base[r], &pay[r * k..(r + 1) * k]);
        }
        for r in (0..n).rev() {
            let (head, tail) = suffix.split_at_mut((r + 1) * size);
            step(&tail[..size], &mut head[r * size..], base[r], &pay[r * k..(r + 1) * k]);
        }
    }

    /// Best over all rows except `j` with column set `target` matched.
    fn without(&self, j: usize, target: usize) -> f64 {
        let size = 1usize << self.k;
        let p = &self.prefix[j * size..(j + 1) * size];
        let q = &self.suffix[(j + 1) * size..(j + 2) * size];
        let mut best = NEG_INF;
        let mut a = target;
        loop {
            raise(&mut best, p[a] + q[target ^ a]);
            if a == 0 {
                break;
            }
            a = (a - 1) & target;
        }
        best
    }
}

/// One row transition of the DP.
fn step(prev: &[f64], next: &mut [f64], base: f64, pay: &[f64]) {
    for (s, slot) in next.iter_mut().enumerate() {
        let mut best = prev[s] + base;
        let mut rest = s;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let v = prev[s ^ (1 << c)] + pay[c];
            if v > best {
                best = v;
            }
        }
        *slot = best;
    }
}

/// Unnormalized outgoing messages of an edge-disjoint node (branching only).
pub fn raw_edstp_matching(view: &LocalNodeView<'_>, enum_cap: usize) -> Result<Vec<Vec<f64>>> {
    if view.flat {
        return Err(Error::UnsupportedFormalism("the matching kernel handles the branching formalism only".into()));
    }
    let n = view.degree();
    let sp = view.space;
    let (depth, comms) = (sp.depth(), sp.comms());
    let free: Vec<usize> = (1..=comms).filter(|&mu| !view.is_root(mu)).collect();
    let count = (depth + 1).checked_pow(free.len() as u32).filter(|&c| c <= enum_cap);
    if count.is_none() {
        return Err(Error::KernelCapacity(format!(
            "{} depth vectors exceed the enumeration cap {enum_cap}",
            (depth as f64 + 1.0).powi(free.len() as i32)
        )));
    }

    let mut out = vec![vec![NEG_INF; sp.len()]; n];
    let unused: Vec<f64> = (0..n).map(|k| view.unused(k)).collect();
    let mut s = vec![0usize; free.len()];
    let mut base = vec![0.0; n];
    let mut pay = vec![NEG_INF; n * free.len()];
    let mut active: Vec<(usize, i32)> = Vec::with_capacity(free.len());
    let mut dp = RowDp::with_capacity(n, free.len());
    loop {
        active.clear();
        active.extend(free.iter().zip(&s).filter(|(_, &e)| e > 0).map(|(&mu, &e)| (mu, e as i32)));
        let prize = InfSum::of(free.iter().zip(&s).filter(|(_, &e)| e == 0).map(|(&mu, _)| view.inactive_penalty(mu)))
            .value();
        if prize != NEG_INF {
            let k = active.len();
            for r in 0..n {
                let mut b = unused[r];
                for &(mu, e) in &active {
                    b = b.max(view.h(r, e + 1, mu));
                }
                if let Some(rho) = view.root_of {
                    b = b.max(view.h(r, 1, rho));
                }
                base[r] = b;
                for (c, &(mu, e)) in active.iter().enumerate() {
                    pay[r * k + c] = view.h(r, -e, mu) - view.weights[r];
                }
            }
            dp.fill(&base, &pay[..n * k], k);
            let all = (1usize << k) - 1;
            for (j, o) in out.iter_mut().enumerate() {
                let covered = prize + dp.without(j, all);
                raise(&mut o[0], covered);
                if let Some(rho) = view.root_of {
                    raise(&mut o[sp.idx(-1, rho)], covered);
                }
                for (c, &(mu, e)) in active.iter().enumerate() {
                    if (e as usize) < depth {
                        raise(&mut o[sp.idx(-(e + 1), mu)], covered);
                    }
                    raise(&mut o[sp.idx(e, mu)], -view.weights[j] + prize + dp.without(j, all ^ (1 << c)));
                }
            }
        }
        // Next depth vector in lexicographic order.
        let mut pos = s.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if s[pos] < depth {
                s[pos] += 1;
                break;
            }
            s[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::assignment::{max_weight_matching, MatchingProblem};
    use super::super::neighocc::raw_edstp_neighocc;
    use super::super::testutil::{random_view, rng};
    use super::*;
    use crate::instance::Variant;
    use crate::oracle::local_update_oracle;
    use rand::Rng;

    fn close(a: f64, b: f64) -> bool {
        (a == NEG_INF && b == NEG_INF) || (a - b).abs() < 1e-9
    }

    #[test]
    fn flat_is_rejected() {
        let mut r = rng(2);
        let data = random_view(&mut r, 3, 2, 2, true, false);
        assert!(matches!(raw_edstp_matching(&data.view(), 1000), Err(Error::UnsupportedFormalism(_))));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let mut r = rng(2);
        let mut data = random_view(&mut r, 3, 3, 3, false, false);
        data.root_of = None;
        assert!(matches!(raw_edstp_matching(&data.view(), 63), Err(Error::KernelCapacity(_))));
    }

    #[test]
    fn matches_oracle_on_random_views() {
        let mut r = rng(13);
        for case in 0..300 {
            let deg = 1 + case % 5;
            let depth = 1 + (case / 5) % 3;
            let comms = 1 + (case / 15) % 3;
            let data = random_view(&mut r, deg, depth, comms, false, case % 3 == 0);
            let view = data.view();
            let fast = raw_edstp_matching(&view, DEFAULT_ENUM_CAP).unwrap();
            for j in 0..deg {
                for (idx, s) in view.space.states().enumerate() {
                    let want = local_update_oracle(&view, Variant::EdgeDisjoint, j, s, u64::MAX).unwrap();
                    assert!(close(fast[j][idx], want), "case {case} j {j} {s:?}: {} vs {want}", fast[j][idx]);
                }
            }
        }
    }

    #[test]
    fn agrees_with_subset_recursion() {
        let mut r = rng(14);
        for case in 0..200 {
            let deg = 1 + case % 6;
            let data = random_view(&mut r, deg, 1 + case % 3, 1 + (case / 3) % 3, false, case % 4 == 0);
            let a = raw_edstp_matching(&data.view(), DEFAULT_ENUM_CAP).unwrap();
            let b = raw_edstp_neighocc(&data.view(), 10).unwrap();
            for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
                assert!(close(*x, *y), "case {case}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn row_dp_equals_hungarian() {
        // With finite baselines the DP value is sum(base) plus the best
        // matching of the weights pay - base.
        let mut r = rng(15);
        for case in 0..200 {
            let n = 1 + case % 5;
            let k = case % 4;
            let base: Vec<f64> = (0..n).map(|_| -r.gen::<f64>() * 3.0).collect();
            let pay: Vec<Vec<f64>> =
                (0..n).map(|_| (0..k).map(|_| if r.gen_bool(0.2) { NEG_INF } else { -r.gen::<f64>() * 4.0 }).collect()).collect();
            let flat: Vec<f64> = pay.concat();
            let mut dp = RowDp::with_capacity(n, k);
            dp.fill(&base, &flat, k);
            let j = r.gen_range(0..n);
            let rows: Vec<usize> = (0..n).filter(|&x| x != j).collect();
            let weights = rows.iter().map(|&x| (0..k).map(|c| pay[x][c] - base[x]).collect()).collect();
            let p = MatchingProblem::new(weights, vec![true; k], vec![0.0; k]);
            let got = dp.without(j, (1 << k) - 1);
            match max_weight_matching(&p) {
                Ok(m) => {
                    let want = rows.iter().map(|&x| base[x]).sum::<f64>() + m.value;
                    assert!((got - want).abs() < 1e-9, "case {case}: {got} vs {want}");
                }
                Err(_) => assert_eq!(got, NEG_INF),
            }
        }
    }
}
