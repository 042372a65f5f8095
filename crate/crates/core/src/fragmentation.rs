//! Theta-stamped node and skeleton marks, the nested cut intervals they
//! induce on an excursion, and the resulting fragment-mass sequences.
//!
//! Time is accounted in grid slabs: an excursion with `len` grid points owns
//! slabs 1..len (slab i is the interval ((i-1) dt, i dt]), so fragment
//! masses add up to sigma exactly. Cut intervals are half-open slab ranges.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::exploration::{HeightSeries, LevelCensus};
use crate::mechanism::BranchingMechanism;
use crate::sampler::ExcursionRecord;

/// Where a cut came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOrigin {
    Node,
    Skeleton,
}

/// A marked node: the jump, its first-mark time and the subtree interval it
/// severs.
#[derive(Debug, Clone)]
pub struct NodeMark {
    pub jump_id: usize,
    pub delta: f64,
    pub theta_stamp: f64,
    pub level: f64,
    /// half-open slab interval
    pub cut: (usize, usize),
}

/// A skeleton mark: a stamped point on the component of one census level.
#[derive(Debug, Clone)]
pub struct SkeletonMark {
    pub theta_stamp: f64,
    pub level: f64,
    /// half-open slab interval
    pub cut: (usize, usize),
}

/// All marks of one excursion up to `theta_max`, stamped for coupling:
/// the active set at theta <= theta_max is a filter, never a resample.
#[derive(Debug, Clone)]
pub struct MarkSet {
    pub theta_max: f64,
    pub node_marks: Vec<NodeMark>,
    pub skeleton_marks: Vec<SkeletonMark>,
    /// slab universe size: slabs 1..=n_slabs
    pub n_slabs: usize,
    pub dt: f64,
}

/// First grid index after the jump at which the subtree above it is dead:
/// the piecewise path (grid values and sub-step dips before later jumps)
/// has returned to the pre-jump value.
fn subtree_right_end(exc: &ExcursionRecord, jump_id: usize) -> usize {
    let j = &exc.jumps[jump_id];
    let v = &exc.values;
    let mut msub = vec![f64::INFINITY; v.len() - 1];
    for other in &exc.jumps {
        if other.x_before < msub[other.step] {
            msub[other.step] = other.x_before;
        }
    }
    // pre-jump values below the excursion floor are clamped to it, matching
    // the stack truncation
    let x_before = j.x_before.max(0.0);
    let mut u = j.step + 1;
    while u < v.len() {
        let dip = if u >= j.step + 2 { msub[u - 1].max(0.0) } else { f64::INFINITY };
        if dip <= x_before || v[u] <= x_before {
            return u;
        }
        u += 1;
    }
    v.len() - 1
}

/// Exponential first-mark times per node: a jump of size delta is marked by
/// time theta with probability 1 - e^{-delta theta}. Only marks with stamp
/// <= theta_max are kept.
pub fn sample_node_marks<R: Rng>(
    exc: &ExcursionRecord,
    hs: &HeightSeries,
    theta_max: f64,
    rng: &mut R,
) -> Vec<NodeMark> {
    let mut out = Vec::new();
    for (id, j) in exc.jumps.iter().enumerate() {
        let e: f64 = rng.sample(rand_distr::Exp1);
        let stamp = e / j.size;
        if stamp <= theta_max {
            let tau = subtree_right_end(exc, id);
            if j.step + 1 < tau {
                out.push(NodeMark {
                    jump_id: id,
                    delta: j.size,
                    theta_stamp: stamp,
                    level: hs.jump_heights[id],
                    cut: (j.step + 1, tau),
                });
            }
        }
    }
    out
}

/// Poisson marks on the skeleton length measure: K ~ Poisson(2 beta
/// theta_max L), each at a census level with probability N(a) da / L, a
/// uniform component of that level, and a uniform stamp in [0, theta_max].
pub fn sample_skeleton_marks<R: Rng>(
    census: &LevelCensus,
    beta: f64,
    theta_max: f64,
    rng: &mut R,
) -> Vec<SkeletonMark> {
    if beta == 0.0 || theta_max == 0.0 || census.tree_length == 0.0 {
        return Vec::new();
    }
    let mean = 2.0 * beta * theta_max * census.tree_length;
    let k = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let u: f64 = rng.random::<f64>() * census.tree_length;
        // locate the level by cumulative N(a) da
        let mut acc = 0.0;
        let mut row = census.levels.len() - 1;
        for (idx, r) in census.levels.iter().enumerate() {
            acc += r.comps.len() as f64 * census.da;
            if u <= acc {
                row = idx;
                break;
            }
        }
        let r = &census.levels[row];
        let comp = r.comps[rng.random_range(0..r.comps.len())];
        out.push(SkeletonMark {
            theta_stamp: rng.random::<f64>() * theta_max,
            level: r.a,
            cut: (comp.0 as usize, comp.1 as usize + 1),
        });
    }
    out
}

impl MarkSet {
    /// Sample all marks of one excursion (which must be materialized).
    pub fn sample<R: Rng>(
        exc: &ExcursionRecord,
        hs: &HeightSeries,
        census: &LevelCensus,
        m: &BranchingMechanism,
        theta_max: f64,
        rng: &mut R,
    ) -> Self {
        assert!(!exc.values.is_empty(), "marking needs a materialized excursion");
        let node_marks = sample_node_marks(exc, hs, theta_max, rng);
        let skeleton_marks = sample_skeleton_marks(census, m.beta(), theta_max, rng);
        MarkSet {
            theta_max,
            node_marks,
            skeleton_marks,
            n_slabs: exc.values.len() - 1,
            dt: exc.dt,
        }
    }

    /// Empty mark set over a bare excursion (theta = 0 views).
    pub fn empty(exc: &ExcursionRecord, theta_max: f64) -> Self {
        assert!(!exc.values.is_empty(), "marking needs a materialized excursion");
        MarkSet {
            theta_max,
            node_marks: vec![],
            skeleton_marks: vec![],
            n_slabs: exc.values.len() - 1,
            dt: exc.dt,
        }
    }
}

/// One cut in the laminar family.
#[derive(Debug, Clone)]
pub struct Cut {
    pub lo: usize,
    pub hi: usize,
    pub parent: Option<usize>,
    pub origin: CutOrigin,
    pub stamp: f64,
}

impl Cut {
    pub fn slabs(&self) -> usize {
        self.hi - self.lo
    }
}

/// The nested family of active cut intervals at a fixed pruning time.
#[derive(Debug, Clone)]
pub struct CutIntervalSet {
    /// sorted by (lo asc, hi desc); parents precede children
    pub cuts: Vec<Cut>,
    pub n_slabs: usize,
    pub dt: f64,
}

/// Filter the marks active at `theta` and assemble the laminar family.
/// Partial interval overlap is a geometry bug and is rejected.
pub fn active_cuts(marks: &MarkSet, theta: f64) -> Result<CutIntervalSet> {
    if theta > marks.theta_max {
        return Err(Error::BeyondSampledHorizon { theta, theta_max: marks.theta_max });
    }
    let mut raw: Vec<Cut> = Vec::new();
    for nm in &marks.node_marks {
        if nm.theta_stamp <= theta {
            raw.push(Cut {
                lo: nm.cut.0,
                hi: nm.cut.1,
                parent: None,
                origin: CutOrigin::Node,
                stamp: nm.theta_stamp,
            });
        }
    }
    for sm in &marks.skeleton_marks {
        if sm.theta_stamp <= theta {
            raw.push(Cut {
                lo: sm.cut.0,
                hi: sm.cut.1,
                parent: None,
                origin: CutOrigin::Skeleton,
                stamp: sm.theta_stamp,
            });
        }
    }
    build_laminar(raw, marks.n_slabs, marks.dt)
}

/// Sort and nest cut intervals; errors on partial overlap.
pub fn build_laminar(mut raw: Vec<Cut>, n_slabs: usize, dt: f64) -> Result<CutIntervalSet> {
    raw.sort_by(|a, b| {
        a.lo
            .cmp(&b.lo)
            .then(b.hi.cmp(&a.hi))
            .then(a.stamp.total_cmp(&b.stamp))
    });
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..raw.len() {
        while let Some(&top) = stack.last() {
            if raw[top].hi <= raw[i].lo {
                stack.pop();
            } else {
                break;
            }
        }
        if let Some(&top) = stack.last() {
            if raw[i].hi > raw[top].hi {
                return Err(Error::LaminarityViolated(
                    raw[top].lo,
                    raw[top].hi,
                    raw[i].lo,
                    raw[i].hi,
                ));
            }
            raw[i].parent = Some(top);
        }
        stack.push(i);
    }
    Ok(CutIntervalSet { cuts: raw, n_slabs, dt })
}

/// Non-increasing fragment masses with their total.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSequence {
    /// masses, non-increasing
    pub masses: Vec<f64>,
    /// sigma of the underlying excursion
    pub total: f64,
}

impl FragmentSequence {
    pub fn single(total: f64) -> Self {
        FragmentSequence { masses: vec![total], total }
    }

    pub fn sum(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn largest(&self) -> f64 {
        self.masses.first().copied().unwrap_or(0.0)
    }
}

impl CutIntervalSet {
    /// Slab count of each cut minus its children, plus the root remainder.
    fn fragment_slab_counts(&self) -> (usize, Vec<usize>) {
        let mut counts: Vec<usize> = self.cuts.iter().map(Cut::slabs).collect();
        let mut top_total = 0usize;
        for c in &self.cuts {
            match c.parent {
                Some(p) => counts[p] -= c.slabs(),
                None => top_total += c.slabs(),
            }
        }
        // universe is slabs 1..=n_slabs; cuts never reach slab index 0
        let root = self.n_slabs - top_total;
        (root, counts)
    }

    /// Lebesgue masses of the equivalence classes: each class is a cut
    /// interval minus its children, the root class is the remainder.
    pub fn fragment_masses(&self) -> FragmentSequence {
        let (root, counts) = self.fragment_slab_counts();
        let mut masses: Vec<f64> = counts.iter().map(|&c| c as f64 * self.dt).collect();
        masses.push(root as f64 * self.dt);
        masses.sort_unstable_by(|a, b| b.total_cmp(a));
        FragmentSequence { masses, total: self.n_slabs as f64 * self.dt }
    }

    /// Mass of the root fragment (times with an unmarked lineage).
    pub fn root_mass(&self) -> f64 {
        let (root, _) = self.fragment_slab_counts();
        root as f64 * self.dt
    }

    /// Cuts with no active ancestor.
    pub fn top_level(&self) -> impl Iterator<Item = &Cut> {
        self.cuts.iter().filter(|c| c.parent.is_none())
    }

    /// Innermost covering cut per slab; None means the root fragment.
    /// Index 0 of the returned vector corresponds to slab 1.
    pub fn slab_classes(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n_slabs];
        for (i, c) in self.cuts.iter().enumerate() {
            for s in c.lo..c.hi {
                out[s - 1] = Some(i);
            }
        }
        out
    }
}

/// Fragment masses of one excursion at theta, from its sampled marks.
pub fn fragment_masses_at(marks: &MarkSet, theta: f64) -> Result<FragmentSequence> {
    Ok(active_cuts(marks, theta)?.fragment_masses())
}

/// sigma^(theta): the mass of the root fragment.
pub fn pruned_length(marks: &MarkSet, theta: f64) -> Result<f64> {
    Ok(active_cuts(marks, theta)?.root_mass())
}

/// Fragment sequences along an increasing theta grid.
pub fn trajectory(marks: &MarkSet, thetas: &[f64]) -> Result<Vec<FragmentSequence>> {
    let mut out = Vec::with_capacity(thetas.len());
    for &th in thetas {
        out.push(fragment_masses_at(marks, th)?);
    }
    Ok(out)
}

/// Check that the partition at theta2 refines into the one at theta1
/// (every finer class sits inside a single coarser class).
pub fn refines(marks: &MarkSet, theta1: f64, theta2: f64) -> Result<bool> {
    debug_assert!(theta1 <= theta2);
    let coarse = active_cuts(marks, theta1)?.slab_classes();
    let fine = active_cuts(marks, theta2)?.slab_classes();
    let mut seen: std::collections::HashMap<usize, Option<usize>> = Default::default();
    let mut root_class: Option<Option<usize>> = None;
    for (slab, f) in fine.iter().enumerate() {
        match f {
            Some(c) => match seen.entry(*c) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(coarse[slab]);
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    if *e.get() != coarse[slab] {
                        return Ok(false);
                    }
                }
            },
            None => match root_class {
                None => root_class = Some(coarse[slab]),
                Some(rc) => {
                    if rc != coarse[slab] {
                        return Ok(false);
                    }
                }
            },
        }
    }
    Ok(true)
}

/// Remove x_i, merge in the fragments of `s`, reorder non-increasingly.
pub fn merge_dislocation(
    x: &FragmentSequence,
    i: usize,
    s: &FragmentSequence,
) -> Result<FragmentSequence> {
    if i == 0 || i > x.masses.len() {
        return Err(Error::IndexOutOfRange(i));
    }
    if !(x.masses[i - 1] > 0.0) {
        return Err(Error::InvalidArgument(format!("x_{i} must be positive")));
    }
    let mut masses: Vec<f64> = x
        .masses
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i - 1)
        .map(|(_, &v)| v)
        .chain(s.masses.iter().copied())
        .collect();
    masses.sort_unstable_by(|a, b| b.total_cmp(a));
    let total = x.total - x.masses[i - 1] + s.sum();
    Ok(FragmentSequence { masses, total })
}

/// CSV rows "excursion id, theta, rank, mass", no header.
pub fn trajectory_csv(excursion_id: u64, thetas: &[f64], seqs: &[FragmentSequence]) -> String {
    let mut out = String::new();
    for (th, seq) in thetas.iter().zip(seqs) {
        for (rank, mass) in seq.masses.iter().enumerate() {
            out.push_str(&format!("{excursion_id},{th:.6},{},{:.12e}\n", rank + 1, mass));
        }
    }
    out
}
