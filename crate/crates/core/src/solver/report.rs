use std::fmt::Write as _;

use super::{Energy, Schedule};
use crate::heuristics::Scheme;
use crate::kernel::KernelKind;

/// Summary of one solver run, printable as `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub kernel: KernelKind,
    pub depth: usize,
    pub schedule: Schedule,
    pub converged: bool,
    pub iterations: usize,
    pub contradictions: usize,
    /// Energy of the final decode.
    pub ms_energy: Energy,
    pub best_ms_energy: Energy,
    /// Best energy found by each heuristic scheme.
    pub heuristic_energy: Vec<(Scheme, Energy)>,
    pub best_energy: Energy,
    pub wall_ms_sweeps: f64,
    pub wall_ms_decode: f64,
    pub wall_ms_heuristics: f64,
}

impl RunReport {
    pub fn new(kernel: KernelKind, depth: usize, schedule: Schedule) -> Self {
        RunReport {
            kernel,
            depth,
            schedule,
            converged: false,
            iterations: 0,
            contradictions: 0,
            ms_energy: Energy::Infeasible,
            best_ms_energy: Energy::Infeasible,
            heuristic_energy: Vec::new(),
            best_energy: Energy::Infeasible,
            wall_ms_sweeps: 0.0,
            wall_ms_decode: 0.0,
            wall_ms_heuristics: 0.0,
        }
    }

    pub(crate) fn note_heuristic(&mut self, scheme: Scheme, e: Energy) {
        match self.heuristic_energy.iter_mut().find(|(s, _)| *s == scheme) {
            Some((_, cur)) => {
                if e.better_than(*cur) {
                    *cur = e;
                }
            }
            None => self.heuristic_energy.push((scheme, e)),
        }
    }

    pub fn heuristic(&self, scheme: Scheme) -> Energy {
        self.heuristic_energy.iter().find(|(s, _)| *s == scheme).map_or(Energy::Infeasible, |(_, e)| *e)
    }

    pub fn wall_ms(&self) -> f64 {
        self.wall_ms_sweeps + self.wall_ms_decode + self.wall_ms_heuristics
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kernel={}", self.kernel.name());
        let _ = writeln!(s, "depth={}", self.depth);
        let _ = writeln!(s, "schedule={}", self.schedule.name());
        let _ = writeln!(s, "converged={}", self.converged);
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "contradictions={}", self.contradictions);
        let _ = writeln!(s, "ms_energy={}", self.ms_energy);
        let _ = writeln!(s, "best_ms_energy={}", self.best_ms_energy);
        for (scheme, e) in &self.heuristic_energy {
            let _ = writeln!(s, "{}_energy={}", scheme.name(), e);
        }
        let _ = writeln!(s, "best_energy={}", self.best_energy);
        let _ = writeln!(s, "wall_ms_sweeps={:.3}", self.wall_ms_sweeps);
        let _ = writeln!(s, "wall_ms_decode={:.3}", self.wall_ms_decode);
        let _ = writeln!(s, "wall_ms_heuristics={:.3}", self.wall_ms_heuristics);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_best_is_kept() {
        let mut r = RunReport::new(KernelKind::VDStP, 3, Schedule::SequentialRandomPermutation);
        r.note_heuristic(Scheme::Spt, Energy::Finite(5.0));
        r.note_heuristic(Scheme::Spt, Energy::Finite(7.0));
        r.note_heuristic(Scheme::Spt, Energy::Finite(4.0));
        r.note_heuristic(Scheme::Mst, Energy::Infeasible);
        assert_eq!(r.heuristic(Scheme::Spt), Energy::Finite(4.0));
        assert_eq!(r.heuristic(Scheme::Mst), Energy::Infeasible);
        let kv = r.to_kv();
        assert!(kv.contains("spt_energy=4"));
        assert!(kv.contains("mst_energy=INFEASIBLE"));
        assert!(kv.contains("kernel=vdstp"));
    }
}
