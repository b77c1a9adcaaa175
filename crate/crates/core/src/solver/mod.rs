//! Max-Sum iteration: sweeps, reinforcement, decisions and run bookkeeping.

mod report;
mod solution;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heuristics::{run_heuristic_round, HeuristicConfig};
use crate::instance::{Formalism, Instance};
use crate::kernel::{self, KernelKind, LocalNodeView};
use crate::state::{
    apply_reinforcement, argmax, init_messages, normalize, quantize, reinforced_field, reinforcement_strength, CavityField,
    MessageTable, StateSpace,
};

pub use report::RunReport;
pub use solution::{
    decode, energy, gap, parse_solution, serialize_solution, validate, Energy, Origin, Solution, TreeEdge,
    ValidationReport,
};

/// Order of node updates within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// In place, nodes visited in a fresh seeded permutation every sweep.
    SequentialRandomPermutation,
    /// Every node reads the previous sweep's messages; parallel across nodes.
    SynchronousTwoBuffer,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::SequentialRandomPermutation => "sequential",
            Schedule::SynchronousTwoBuffer => "synchronous",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sequential" => Some(Schedule::SequentialRandomPermutation),
            "synchronous" => Some(Schedule::SynchronousTwoBuffer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// `None` picks the default kernel of the instance's variant.
    pub kernel: Option<KernelKind>,
    /// Overrides the instance's depth bound.
    pub depth: Option<usize>,
    pub gamma0: f64,
    pub max_iters: usize,
    pub conv_window: usize,
    pub seed: u64,
    pub noise_eps: f64,
    pub schedule: Schedule,
    pub heuristics: Option<HeuristicConfig>,
    /// Restart the reinforcement clock every this many sweeps.
    pub reinforcement_reset: Option<usize>,
    pub degree_cap: usize,
    pub enum_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kernel: None,
            depth: None,
            gamma0: 1e-5,
            max_iters: 1000,
            conv_window: 20,
            seed: 0,
            noise_eps: 1e-6,
            schedule: Schedule::SequentialRandomPermutation,
            heuristics: None,
            reinforcement_reset: None,
            degree_cap: kernel::DEFAULT_DEGREE_CAP,
            enum_cap: kernel::DEFAULT_ENUM_CAP,
        }
    }
}

impl SolverConfig {
    pub fn kernel_for(&self, inst: &Instance) -> KernelKind {
        self.kernel.unwrap_or_else(|| KernelKind::default_for(inst.variant))
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.conv_window == 0 {
            return Err(Error::Argument("conv_window must be at least 1".into()));
        }
        if !(self.gamma0 >= 0.0) || !(self.noise_eps >= 0.0) {
            return Err(Error::Argument("gamma0 and noise_eps must be nonnegative".into()));
        }
        if self.depth == Some(0) {
            return Err(Error::Argument("depth bound must be at least 1".into()));
        }
        self.kernel_for(inst).check(inst.variant, inst.formalism)
    }
}

/// Argmax of every edge field, lowest state index on ties.
pub fn extract_decision(fields: &CavityField) -> Vec<usize> {
    (0..fields.num_edges()).map(|e| argmax(fields.get(e))).collect()
}

/// True iff the last `window` decision vectors are identical.
pub fn check_convergence(history: &[Vec<usize>], window: usize) -> bool {
    if window == 0 || history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    tail.iter().all(|d| *d == tail[0])
}

/// Message-passing state of one run.
pub struct Solver<'a> {
    inst: &'a Instance,
    cfg: SolverConfig,
    kernel: KernelKind,
    space: StateSpace,
    flat: bool,
    /// Reinforced messages, read by the kernels.
    h: MessageTable,
    /// Raw kernel outputs, used for the fields.
    hbar: MessageTable,
    field: CavityField,
    t: usize,
    clock: usize,
    rng: ChaCha8Rng,
    contradictions: usize,
    scratch: (Vec<f64>, Vec<f64>),
}

impl<'a> Solver<'a> {
    pub fn new(inst: &'a Instance, cfg: SolverConfig) -> Result<Self> {
        cfg.check(inst)?;
        let depth = match cfg.depth {
            Some(d) => d,
            None => inst.effective_depth()?,
        };
        let space = StateSpace::new(depth, inst.num_comms());
        let h = init_messages(inst, space, cfg.seed, cfg.noise_eps);
        let hbar = h.clone();
        let mut field = CavityField::zeros(space, inst.num_edges());
        let zeros = vec![0.0; space.len()];
        for e in 0..inst.num_edges() {
            let c = reinforced_field(&space, h.get(2 * e), h.get(2 * e + 1), 0.0, &zeros, field.get_mut(e))?;
            quantize(field.get_mut(e));
            field.set_offset(e, c);
        }
        Ok(Solver {
            inst,
            kernel: cfg.kernel_for(inst),
            flat: inst.formalism == Formalism::Flat,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15),
            cfg,
            space,
            h,
            hbar,
            field,
            t: 0,
            clock: 0,
            contradictions: 0,
            scratch: (vec![0.0; space.len()], vec![0.0; space.len()]),
        })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn messages(&self) -> &MessageTable {
        &self.h
    }

    pub fn raw_messages(&self) -> &MessageTable {
        &self.hbar
    }

    pub fn fields(&self) -> &CavityField {
        &self.field
    }

    /// Kernel outputs rejected because every state was forbidden.
    pub fn contradictions(&self) -> usize {
        self.contradictions
    }

    pub fn decisions(&self) -> Vec<usize> {
        extract_decision(&self.field)
    }

    pub fn decode(&self) -> Solution {
        let mut sol = decode(self.inst, &self.space, &self.decisions());
        sol.iteration = Some(self.t);
        sol
    }

    fn outgoing(&self, node: usize) -> Result<Vec<Vec<f64>>> {
        let view = LocalNodeView::from_table(self.inst, &self.h, node, self.flat);
        match self.kernel {
            KernelKind::VDStP => Ok(kernel::raw_vdstp(&view)),
            KernelKind::NeighOcc => kernel::raw_edstp_neighocc(&view, self.cfg.degree_cap),
            KernelKind::Matching => kernel::raw_edstp_matching(&view, self.cfg.enum_cap),
        }
    }

    /// Stores the outputs of `node` computed at reinforcement strength `gamma`.
    fn store(&mut self, node: usize, outputs: Vec<Vec<f64>>, gamma: f64) {
        let inst = self.inst;
        let (prev, buf) = (&mut self.scratch.0, &mut self.scratch.1);
        for (inc, mut fresh) in inst.neighbors(node).iter().zip(outputs) {
            let dir = crate::state::directed(inst, inc.edge, node);
            if normalize(&mut fresh).is_err() {
                self.contradictions += 1;
                continue;
            }
            quantize(&mut fresh);
            if gamma == 0.0 {
                self.h.get_mut(dir).copy_from_slice(&fresh);
            } else {
                self.field.oriented_into(dir, prev);
                if apply_reinforcement(&fresh, prev, self.clock, self.cfg.gamma0, buf).is_err() {
                    self.contradictions += 1;
                    continue;
                }
                quantize(buf);
                self.h.get_mut(dir).copy_from_slice(buf);
            }
            self.hbar.get_mut(dir).copy_from_slice(&fresh);
        }
    }

    /// One sweep: every node recomputes all its outgoing messages once, then
    /// the fields are refreshed.
    pub fn sweep(&mut self) -> Result<()> {
        self.t += 1;
        self.clock += 1;
        if let Some(k) = self.cfg.reinforcement_reset {
            if k > 0 && self.t % k == 1 && self.t > 1 {
                self.clock = 1;
            }
        }
        let gamma = reinforcement_strength(self.clock, self.cfg.gamma0);
        let n = self.inst.num_nodes();
        match self.cfg.schedule {
            Schedule::SequentialRandomPermutation => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut self.rng);
                for node in order {
                    if self.inst.degree(node) == 0 {
                        continue;
                    }
                    let out = self.outgoing(node)?;
                    self.store(node, out, gamma);
                }
            }
            Schedule::SynchronousTwoBuffer => {
                let this = &*self;
                let all: Vec<Result<Vec<Vec<f64>>>> = (0..n).into_par_iter().map(|node| this.outgoing(node)).collect();
                for (node, out) in all.into_iter().enumerate() {
                    self.store(node, out?, gamma);
                }
            }
        }
        let sp = self.space;
        let out = &mut self.scratch.0;
        for e in 0..self.inst.num_edges() {
            let c = reinforced_field(&sp, self.hbar.get(2 * e), self.hbar.get(2 * e + 1), gamma, self.field.get(e), out)
                .map_err(|_| {
                    let ed = self.inst.edge(e);
                    Error::Infeasible(format!("every state of edge {}-{} is forbidden", ed.u + 1, ed.v + 1))
                })?;
            quantize(out);
            self.field.get_mut(e).copy_from_slice(out);
            self.field.set_offset(e, c);
        }
        Ok(())
    }
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Lowest-energy feasible solution seen (Max-Sum decode or heuristic).
    pub best: Option<Solution>,
    /// Decode of the final Max-Sum state.
    pub last: Solution,
    pub best_maxsum: Option<Solution>,
    pub best_heuristic: Option<Solution>,
}

fn keep_best(slot: &mut Option<(Solution, Energy)>, sol: Solution, e: Energy) {
    if e.is_finite() && slot.as_ref().map_or(true, |(_, cur)| e.better_than(*cur)) {
        *slot = Some((sol, e));
    }
}

/// Iterates until the decisions are stable for `conv_window` sweeps or
/// `max_iters` is reached, tracking the best decoded and heuristic solutions.
pub fn run(inst: &Instance, cfg: &SolverConfig) -> Result<RunOutcome> {
    let mut solver = Solver::new(inst, cfg.clone())?;
    let mut report = RunReport::new(solver.kernel(), solver.space().depth(), cfg.schedule);
    let mut history: Vec<Vec<usize>> = Vec::new();
    let mut best_ms: Option<(Solution, Energy)> = None;
    let mut best_heur: Option<(Solution, Energy)> = None;
    let mut heur_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51f1_5eed);
    let mut last = Solution::empty(inst.num_comms(), Origin::MaxSum);

    for _ in 0..cfg.max_iters {
        let t0 = Instant::now();
        solver.sweep()?;
        report.wall_ms_sweeps += t0.elapsed().as_secs_f64() * 1e3;

        let t1 = Instant::now();
        let decisions = solver.decisions();
        last = decode(inst, &solver.space(), &decisions);
        last.iteration = Some(solver.iteration());
        let e = energy(&last, inst);
        keep_best(&mut best_ms, last.clone(), e);
        report.wall_ms_decode += t1.elapsed().as_secs_f64() * 1e3;

        if let Some(hc) = &cfg.heuristics {
            if hc.every > 0 && solver.iteration() % hc.every == 0 {
                let t2 = Instant::now();
                for &scheme in &hc.schemes {
                    let order = hc.order.resolve(inst.num_comms(), &mut heur_rng);
                    if let Ok(mut sol) =
                        run_heuristic_round(inst, solver.fields(), solver.messages(), scheme, &order, hc.prune)
                    {
                        sol.iteration = Some(solver.iteration());
                        let e = energy(&sol, inst);
                        report.note_heuristic(scheme, e);
                        keep_best(&mut best_heur, sol, e);
                    }
                }
                report.wall_ms_heuristics += t2.elapsed().as_secs_f64() * 1e3;
            }
        }

        history.push(decisions);
        if history.len() > cfg.conv_window {
            history.remove(0);
        }
        if check_convergence(&history, cfg.conv_window) {
            report.converged = true;
            break;
        }
    }

    report.iterations = solver.iteration();
    report.contradictions = solver.contradictions();
    report.ms_energy = energy(&last, inst);
    report.best_ms_energy = best_ms.as_ref().map_or(Energy::Infeasible, |(_, e)| *e);
    let best = match (&best_ms, &best_heur) {
        (Some((a, ea)), Some((b, eb))) => Some(if eb.better_than(*ea) { b.clone() } else { a.clone() }),
        (Some((a, _)), None) => Some(a.clone()),
        (None, Some((b, _))) => Some(b.clone()),
        (None, None) => None,
    };
    report.best_energy = best.as_ref().map_or(Energy::Infeasible, |s| energy(s, inst));
    Ok(RunOutcome {
        report,
        best,
        last,
        best_maxsum: best_ms.map(|(s, _)| s),
        best_heuristic: best_heur.map(|(s, _)| s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_complete, gen_regular, Communication, Variant, Weighting};
    use crate::oracle::{exact_pack, OracleLimits};

    #[test]
    fn decision_examples() {
        let sp = StateSpace::new(2, 2);
        let mut f = CavityField::zeros(sp, 3);
        f.get_mut(0).copy_from_slice(&[0.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0]);
        let mut g = vec![-1.0; 9];
        g[sp.idx(2, 1)] = 0.0;
        f.get_mut(1).copy_from_slice(&g);
        let mut h = vec![-1.0; 9];
        h[sp.idx(1, 1)] = 0.0;
        h[sp.idx(1, 2)] = 0.0;
        f.get_mut(2).copy_from_slice(&h);
        let d = extract_decision(&f);
        assert_eq!(d[0], 0);
        assert_eq!(sp.state(d[1]), crate::state::EdgeState::new(2, 1));
        assert_eq!(sp.state(d[2]), crate::state::EdgeState::new(1, 1));
    }

    #[test]
    fn convergence_examples() {
        let same = vec![vec![1, 2]; 20];
        assert!(check_convergence(&same, 20));
        let alt: Vec<Vec<usize>> = (0..20).map(|i| vec![i % 2]).collect();
        assert!(!check_convergence(&alt, 20));
        assert!(check_convergence(&alt[..1], 1));
        assert!(!check_convergence(&same[..5], 20));
    }

    fn tree_instance() -> Instance {
        // A small tree: 0-1, 1-2, 1-3, 3-4, 3-5 with terminals 0, 2, 5.
        Instance::new(
            6,
            vec![(0, 1, 0.4), (1, 2, 0.7), (1, 3, 0.2), (3, 4, 0.9), (3, 5, 0.3)],
            vec![Communication { terminals: vec![0, 2, 5], root: 0 }],
        )
        .unwrap()
    }

    #[test]
    fn tree_reaches_fixed_point_and_optimum() {
        let inst = tree_instance();
        let cfg = SolverConfig { gamma0: 0.0, noise_eps: 0.0, conv_window: 3, ..SolverConfig::default() };
        let mut s = Solver::new(&inst, cfg.clone()).unwrap();
        for _ in 0..6 {
            s.sweep().unwrap();
        }
        let before = s.messages().clone();
        s.sweep().unwrap();
        assert_eq!(*s.messages(), before);
        let out = run(&inst, &cfg).unwrap();
        assert!(out.report.converged);
        let (opt, _) = exact_pack(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(out.report.ms_energy.value().map(|v| (v * 1e9).round()), opt.value().map(|v| (v * 1e9).round()));
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = gen_complete(12, 2, 2, Weighting::Uniform, 4).unwrap().with_depth(Some(3));
        let cfg = SolverConfig { max_iters: 30, seed: 9, ..SolverConfig::default() };
        let mut a = Solver::new(&inst, cfg.clone()).unwrap();
        let mut b = Solver::new(&inst, cfg).unwrap();
        for _ in 0..10 {
            a.sweep().unwrap();
            b.sweep().unwrap();
            assert_eq!(a.messages(), b.messages());
            assert_eq!(a.fields(), b.fields());
        }
    }

    #[test]
    fn zero_gamma_equals_unreinforced() {
        let inst = gen_complete(10, 2, 2, Weighting::Uniform, 6).unwrap().with_depth(Some(2));
        let cfg = SolverConfig { gamma0: 0.0, seed: 3, ..SolverConfig::default() };
        let mut s = Solver::new(&inst, cfg).unwrap();
        for _ in 0..15 {
            s.sweep().unwrap();
            assert_eq!(s.messages(), s.raw_messages());
            assert!(s.messages().is_normalized());
            assert!(s.fields().is_normalized());
        }
    }

    #[test]
    fn synchronous_schedule_runs() {
        let inst = gen_regular(16, 3, 2, 2, 5).unwrap().with_variant(Variant::EdgeDisjoint).with_depth(Some(3));
        let cfg = SolverConfig { schedule: Schedule::SynchronousTwoBuffer, max_iters: 50, ..SolverConfig::default() };
        let a = run(&inst, &cfg).unwrap();
        let b = run(&inst, &cfg).unwrap();
        assert_eq!(a.last, b.last);
    }

    #[test]
    fn incompatible_kernel_is_rejected() {
        let inst = gen_complete(6, 1, 2, Weighting::Uniform, 1).unwrap();
        let cfg = SolverConfig { kernel: Some(KernelKind::Matching), ..SolverConfig::default() };
        assert!(Solver::new(&inst, cfg).is_err());
    }
}
