//! The tree geometry behind a path: the LIFO exploration stack, the height
//! series H, ancestral-interval queries and the per-level component census.
//!
//! Heights are computed through the mass identity
//! H_t = (X_t - I_t - sum of atom masses) / beta, which requires beta > 0.

use crate::error::{Error, Result};
use crate::mechanism::BranchingMechanism;
use crate::rmq::SparseTable;
use crate::sampler::{ExcursionRecord, PathGrid};

/// One layer of the exploration measure, root to tip.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Lebesgue layer of thickness beta over the height interval [lo, hi].
    Continuous { lo: f64, hi: f64 },
    /// Atom at a fixed height. `rho_mass` erodes under erasure while
    /// `kappa_mass` keeps the full jump size.
    Atom { height: f64, rho_mass: f64, kappa_mass: f64, jump_id: usize },
}

/// LIFO stack representation of the exploration measure at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationStack {
    beta: f64,
    layers: Vec<Layer>,
    total_mass: f64,
}

impl ExplorationStack {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(
                "the stack construction needs beta > 0".into(),
            ));
        }
        Ok(ExplorationStack { beta, layers: Vec::new(), total_mass: 0.0 })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Height of the top of the stack (sup of the support).
    pub fn height(&self) -> f64 {
        match self.layers.last() {
            None => 0.0,
            Some(Layer::Continuous { hi, .. }) => *hi,
            Some(Layer::Atom { height, .. }) => *height,
        }
    }

    /// Grow the top continuous layer by `mass`.
    pub fn push_continuous(&mut self, mass: f64) {
        debug_assert!(mass >= 0.0);
        if mass == 0.0 {
            return;
        }
        let h = self.height();
        let extent = mass / self.beta;
        match self.layers.last_mut() {
            Some(Layer::Continuous { hi, .. }) => *hi += extent,
            _ => self.layers.push(Layer::Continuous { lo: h, hi: h + extent }),
        }
        self.total_mass += mass;
    }

    /// Push an atom of the given jump size at the current height.
    pub fn push_jump(&mut self, delta: f64, jump_id: usize) {
        debug_assert!(delta > 0.0);
        self.layers.push(Layer::Atom {
            height: self.height(),
            rho_mass: delta,
            kappa_mass: delta,
            jump_id,
        });
        self.total_mass += delta;
    }

    /// Erase mass `a` backward from the top. Errors without mutating when
    /// `a` exceeds the stack mass.
    pub fn erase(&mut self, a: f64) -> Result<()> {
        if a > self.total_mass + 1e-12 * (1.0 + self.total_mass) {
            return Err(Error::StackUnderflow { requested: a, available: self.total_mass });
        }
        self.erase_clamped(a);
        Ok(())
    }

    /// Erase min(a, total mass); returns the amount actually removed.
    pub fn erase_clamped(&mut self, a: f64) -> f64 {
        let mut left = a.min(self.total_mass);
        let removed = left;
        self.total_mass -= removed;
        while left > 0.0 {
            let Some(top) = self.layers.last_mut() else { break };
            match top {
                Layer::Atom { rho_mass, .. } => {
                    if *rho_mass > left {
                        *rho_mass -= left;
                        left = 0.0;
                    } else {
                        left -= *rho_mass;
                        self.layers.pop();
                    }
                }
                Layer::Continuous { lo, hi } => {
                    let mass = self.beta * (*hi - *lo);
                    if mass > left {
                        *hi -= left / self.beta;
                        left = 0.0;
                    } else {
                        left -= mass;
                        self.layers.pop();
                    }
                }
            }
        }
        if self.layers.is_empty() {
            self.total_mass = 0.0;
        }
        removed
    }
}

/// Apply one grid transition to the stack: continuous increment first (grow
/// or erase), then the step's jumps. A decrement larger than the stack mass
/// erases everything, and the residual (the dip below the excursion floor)
/// erodes each freshly pushed atom in push order until the path value is
/// recovered; the mass identity holds at every grid point.
pub fn evolve_stack(
    stack: &mut ExplorationStack,
    continuous_increment: f64,
    jumps: &[(f64, usize)],
) {
    let mut residual = 0.0;
    if continuous_increment >= 0.0 {
        stack.push_continuous(continuous_increment);
    } else {
        let want = -continuous_increment;
        let got = stack.erase_clamped(want);
        residual = want - got;
    }
    for &(delta, id) in jumps {
        stack.push_jump(delta, id);
        if residual > 0.0 {
            residual -= stack.erase_clamped(residual);
        }
    }
}

/// The height process along one excursion, with an O(1) range-minimum
/// index built lazily on the first ancestral query (the index costs about
/// 17x the height array and the census sweep never needs it).
#[derive(Debug)]
pub struct HeightSeries {
    pub dt: f64,
    pub h: Vec<f64>,
    /// Height of each ledger jump at its push time, aligned with the
    /// excursion's jump list.
    pub jump_heights: Vec<f64>,
    rmq: std::sync::OnceLock<SparseTable>,
    max_h: f64,
}

impl HeightSeries {
    /// One stack sweep over the excursion; O(n + number of jumps).
    pub fn from_excursion(exc: &ExcursionRecord, m: &BranchingMechanism) -> Result<Self> {
        if !(m.beta() > 0.0) {
            return Err(Error::InvalidArgument(
                "height series via the mass identity needs beta > 0".into(),
            ));
        }
        let v = &exc.values;
        assert!(!v.is_empty(), "excursion must be materialized");
        let mut stack = ExplorationStack::new(m.beta())?;
        let mut h = Vec::with_capacity(v.len());
        let mut jump_heights = vec![0.0; exc.jumps.len()];
        h.push(0.0);
        let mut cursor = 0usize;
        for k in 0..v.len() - 1 {
            let mut step_jumps: Vec<(f64, usize)> = Vec::new();
            let mut jump_sum = 0.0;
            while cursor < exc.jumps.len() && exc.jumps[cursor].step == k {
                step_jumps.push((exc.jumps[cursor].size, cursor));
                jump_sum += exc.jumps[cursor].size;
                cursor += 1;
            }
            let continuous = v[k + 1] - v[k] - jump_sum;
            // replay by hand to capture each atom's push height
            let mut residual = 0.0;
            if continuous >= 0.0 {
                stack.push_continuous(continuous);
            } else {
                let got = stack.erase_clamped(-continuous);
                residual = -continuous - got;
            }
            for &(delta, id) in &step_jumps {
                jump_heights[id] = stack.height();
                stack.push_jump(delta, id);
                if residual > 0.0 {
                    residual -= stack.erase_clamped(residual);
                }
            }
            debug_assert!(
                (stack.total_mass() - v[k + 1]).abs() <= 1e-9 * (1.0 + v[k + 1].abs()),
                "mass identity broken at step {k}"
            );
            h.push(stack.height());
        }
        let max_h = h.iter().cloned().fold(0.0, f64::max);
        Ok(HeightSeries { dt: exc.dt, h, jump_heights, rmq: std::sync::OnceLock::new(), max_h })
    }

    /// Build directly from a height array (synthetic trees in tests and the
    /// Brownian excursion sampler).
    pub fn from_heights(h: Vec<f64>, dt: f64) -> Self {
        let max_h = h.iter().cloned().fold(0.0, f64::max);
        HeightSeries { dt, h, jump_heights: vec![], rmq: std::sync::OnceLock::new(), max_h }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn max_height(&self) -> f64 {
        self.max_h
    }

    fn rmq(&self) -> &SparseTable {
        self.rmq.get_or_init(|| SparseTable::new(&self.h))
    }

    /// min H over the inclusive index range.
    pub fn range_min(&self, i: usize, j: usize) -> f64 {
        self.rmq().min(i, j)
    }

    /// Maximal interval around `s` on which H stays >= a, as inclusive grid
    /// indices. Errors when a > H_s.
    pub fn ancestral_interval(&self, s: usize, a: f64) -> Result<(usize, usize)> {
        if a > self.h[s] {
            return Err(Error::AboveThePoint { a, h: self.h[s] });
        }
        // rightmost d with min(s..=d) >= a
        let mut lo = s;
        let mut hi = self.h.len() - 1;
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.rmq().min(s, mid) >= a {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let d = lo;
        let mut lo2 = 0usize;
        let mut hi2 = s;
        while lo2 < hi2 {
            let mid = (lo2 + hi2) / 2;
            if self.rmq().min(mid, s) >= a {
                hi2 = mid;
            } else {
                lo2 = mid + 1;
            }
        }
        Ok((lo2, d))
    }
}

/// Incrementally maintained set of runs (maximal blocks of active indices).
/// Activation is O(1); the active runs are enumerable in arbitrary order.
#[derive(Debug)]
pub(crate) struct RunSet {
    other_end: Vec<u32>,
    active: Vec<bool>,
    /// left endpoints of the active runs
    reg: Vec<u32>,
    reg_pos: Vec<u32>,
}

/// How an activation changed the run set; lengths are in points.
pub(crate) enum RunChange {
    Created { len: u32 },
    Extended { old_len: u32, new_len: u32 },
    Merged { left_len: u32, right_len: u32, new_len: u32 },
}

impl RunSet {
    pub fn new(n: usize) -> Self {
        RunSet {
            other_end: vec![0; n],
            active: vec![false; n],
            reg: Vec::new(),
            reg_pos: vec![u32::MAX; n],
        }
    }

    #[inline]
    pub fn activate(&mut self, i: usize) -> RunChange {
        debug_assert!(!self.active[i]);
        self.active[i] = true;
        let n = self.active.len();
        let left = i > 0 && self.active[i - 1];
        let right = i + 1 < n && self.active[i + 1];
        match (left, right) {
            (false, false) => {
                self.other_end[i] = i as u32;
                self.reg_pos[i] = self.reg.len() as u32;
                self.reg.push(i as u32);
                RunChange::Created { len: 1 }
            }
            (true, false) => {
                let l = self.other_end[i - 1] as usize;
                let old_len = (i - 1 - l + 1) as u32;
                self.other_end[l] = i as u32;
                self.other_end[i] = l as u32;
                RunChange::Extended { old_len, new_len: old_len + 1 }
            }
            (false, true) => {
                let r = self.other_end[i + 1] as usize;
                let old_len = (r - (i + 1) + 1) as u32;
                self.other_end[i] = r as u32;
                self.other_end[r] = i as u32;
                // left endpoint moved from i+1 to i
                let pos = self.reg_pos[i + 1];
                self.reg[pos as usize] = i as u32;
                self.reg_pos[i] = pos;
                self.reg_pos[i + 1] = u32::MAX;
                RunChange::Extended { old_len, new_len: old_len + 1 }
            }
            (true, true) => {
                let l = self.other_end[i - 1] as usize;
                let r = self.other_end[i + 1] as usize;
                let left_len = (i - 1 - l + 1) as u32;
                let right_len = (r - (i + 1) + 1) as u32;
                self.other_end[l] = r as u32;
                self.other_end[r] = l as u32;
                // drop the right run's registry entry
                let pos = self.reg_pos[i + 1] as usize;
                self.reg_pos[i + 1] = u32::MAX;
                let last = self.reg.len() - 1;
                self.reg.swap(pos, last);
                if pos < last {
                    let moved = self.reg[pos];
                    self.reg_pos[moved as usize] = pos as u32;
                }
                self.reg.pop();
                RunChange::Merged { left_len, right_len, new_len: left_len + 1 + right_len }
            }
        }
    }

    /// Active runs as inclusive (left, right) index pairs, arbitrary order.
    pub fn runs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.reg.iter().map(|&l| (l, self.other_end[l as usize]))
    }

    pub fn run_count(&self) -> usize {
        self.reg.len()
    }
}

/// Components of {H > a} on a level grid, with the grid tree length.
#[derive(Debug, Clone)]
pub struct LevelCensus {
    pub da: f64,
    /// rows in increasing level order; components are inclusive index runs
    pub levels: Vec<LevelRow>,
    /// sum over levels of (component count) * da
    pub tree_length: f64,
}

#[derive(Debug, Clone)]
pub struct LevelRow {
    pub a: f64,
    pub comps: Vec<(u32, u32)>,
}

/// Default number of level rows when da is left adaptive.
pub const DEFAULT_LEVELS: usize = 256;

/// Build the census by a single high-to-low activation sweep.
pub fn level_census(hs: &HeightSeries, da: f64) -> LevelCensus {
    assert!(da > 0.0);
    let n = hs.h.len();
    let max_h = hs.max_height();
    let k_max = (max_h / da).ceil() as usize;
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| hs.h[b as usize].total_cmp(&hs.h[a as usize]));
    let mut runs = RunSet::new(n);
    let mut ptr = 0usize;
    let mut rows: Vec<LevelRow> = Vec::new();
    let mut tree_length = 0.0;
    for k in (1..=k_max).rev() {
        let a = k as f64 * da;
        while ptr < n && hs.h[order[ptr] as usize] > a {
            runs.activate(order[ptr] as usize);
            ptr += 1;
        }
        if runs.run_count() == 0 {
            continue;
        }
        let mut comps: Vec<(u32, u32)> = runs.runs().collect();
        comps.sort_unstable();
        tree_length += comps.len() as f64 * da;
        rows.push(LevelRow { a, comps });
    }
    rows.reverse();
    LevelCensus { da, levels: rows, tree_length }
}

/// Census components at one level by a direct linear scan (test oracle).
pub fn level_components_scan(h: &[f64], a: f64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &v) in h.iter().enumerate() {
        if v > a {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push((s as u32, (i - 1) as u32));
        }
    }
    if let Some(s) = start {
        out.push((s as u32, (h.len() - 1) as u32));
    }
    out
}

/// Surviving atom of the exploration measure at a fixed time, recomputed
/// from the ledger by suffix minima.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomView {
    pub height: f64,
    pub rho_mass: f64,
    pub kappa_mass: f64,
    pub jump_id: usize,
}

/// Sub-step minimum per transition: the path dips to the pre-value of the
/// first jump of a step before the jumps lift it to the next grid value.
fn substep_minima(exc: &ExcursionRecord) -> Vec<f64> {
    let mut msub = vec![f64::INFINITY; exc.values.len().saturating_sub(1)];
    for j in &exc.jumps {
        if j.x_before < msub[j.step] {
            msub[j.step] = j.x_before;
        }
    }
    msub
}

/// Infimum of the piecewise path strictly after jump `j` up to the event
/// `until`: a grid point (`PathEvent::GridPoint(t)`) or the pre-value of a
/// later jump (`PathEvent::PreJump(step)`).
enum PathEvent {
    GridPoint(usize),
    PreJump(usize),
}

fn inf_after_jump(
    exc: &ExcursionRecord,
    msub: &[f64],
    jump_id: usize,
    until: &PathEvent,
) -> f64 {
    let j = &exc.jumps[jump_id];
    let mut inf = j.x_before + j.size;
    let v = &exc.values;
    match *until {
        PathEvent::GridPoint(t) => {
            for k in j.step + 1..t {
                inf = inf.min(v[k]).min(msub[k]);
            }
            if t > j.step {
                inf = inf.min(v[t]);
            }
        }
        PathEvent::PreJump(step) => {
            if step == j.step {
                // only later jumps of the same step in between; no dip
                return inf.max(0.0);
            }
            for k in j.step + 1..step {
                inf = inf.min(v[k]).min(msub[k]);
            }
            inf = inf.min(v[step]).min(msub[step]);
        }
    }
    // dips below the excursion floor are truncated at it
    inf.max(0.0)
}

/// From-scratch reconstruction of the exploration measure at grid index
/// `t` of an excursion: atoms at ledger jumps s <= t with x_before < I_t^s,
/// with masses I_t^s - x_before (rho side) and the full jump (kappa side).
/// Minima run over the piecewise path including sub-step dips, matching the
/// LIFO evolution. This is the independent cross-check for the stack.
pub fn exploration_measure_at(
    exc: &ExcursionRecord,
    m: &BranchingMechanism,
    t: usize,
) -> Result<(Vec<AtomView>, f64)> {
    if !(m.beta() > 0.0) {
        return Err(Error::InvalidArgument("needs beta > 0".into()));
    }
    let v = &exc.values;
    assert!(t < v.len());
    let beta = m.beta();
    let msub = substep_minima(exc);
    // surviving atoms in birth order; pre-jump values below the excursion
    // floor are clamped to it, mirroring the stack's truncation
    let mut atoms: Vec<(usize, f64, f64)> = Vec::new(); // (jump_id, floor-clamped x_before, rho_mass)
    for (id, j) in exc.jumps.iter().enumerate() {
        if j.step + 1 > t {
            break;
        }
        let x_before = j.x_before.max(0.0);
        let inf = inf_after_jump(exc, &msub, id, &PathEvent::GridPoint(t));
        if x_before < inf {
            atoms.push((id, x_before, inf - x_before));
        }
    }
    // heights: the continuous mass below an atom at its birth is x_before
    // minus the rho masses (at birth) of the earlier surviving atoms
    let mut views = Vec::with_capacity(atoms.len());
    for (pos, &(id, x_before, rho_mass)) in atoms.iter().enumerate() {
        let mut below = 0.0;
        for &(id2, x_before2, _) in &atoms[..pos] {
            let inf2 = inf_after_jump(exc, &msub, id2, &PathEvent::PreJump(exc.jumps[id].step))
                .min(x_before);
            if x_before2 < inf2 {
                below += inf2 - x_before2;
            }
        }
        views.push(AtomView {
            height: (x_before - below) / beta,
            rho_mass,
            kappa_mass: exc.jumps[id].size,
            jump_id: id,
        });
    }
    // the continuous segments tile [0, H_t], so the height is the total
    // continuous mass over beta
    let atom_total: f64 = views.iter().map(|a| a.rho_mass).sum();
    let h_t = ((v[t] - atom_total) / beta).max(0.0);
    Ok((views, h_t))
}

/// Evolve a fresh stack up to grid index `t` of an excursion (the LIFO
/// route, cross-checked against the suffix-minima reconstruction).
pub fn stack_at(exc: &ExcursionRecord, m: &BranchingMechanism, t: usize) -> Result<ExplorationStack> {
    let mut stack = ExplorationStack::new(m.beta())?;
    let v = &exc.values;
    let mut cursor = 0usize;
    for k in 0..t {
        let mut jumps: Vec<(f64, usize)> = Vec::new();
        let mut jump_sum = 0.0;
        while cursor < exc.jumps.len() && exc.jumps[cursor].step == k {
            jumps.push((exc.jumps[cursor].size, cursor));
            jump_sum += exc.jumps[cursor].size;
            cursor += 1;
        }
        evolve_stack(&mut stack, v[k + 1] - v[k] - jump_sum, &jumps);
    }
    Ok(stack)
}

/// Exploration measure at a grid time of a raw path; `t` must not be a
/// ladder point for atoms to survive.
pub fn exploration_measure_on_path(
    path: &PathGrid,
    m: &BranchingMechanism,
    t: usize,
) -> Result<(Vec<AtomView>, f64)> {
    let (excs, _) = crate::sampler::extract_excursions(path, true);
    for e in excs {
        if t >= e.start && t <= e.end {
            return exploration_measure_at(&e, m, t - e.start);
        }
    }
    // at a ladder point the measure is empty
    Ok((vec![], 0.0))
}
