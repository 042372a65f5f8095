//! Acceptance suite: every check the library must pass, one test per
//! criterion, each printing a single PASS/FAIL line (visible with
//! `cargo test --test acceptance -- --nocapture`, and on failure).
//!
//! All tolerances are pinned here; Monte Carlo checks use fixed seeds and
//! counter-based streams, so reruns are bit-identical.

use rayon::prelude::*;

use crtfrag_core::dislocation::{
    brownian_reference, estimate_nod_mc, estimate_ske_sweep, oracle_nod_moment,
    oracle_ske_closed, oracle_ske_quadrature, LaplaceQuery, NodeFunctional, NodeMcConfig,
    SweepConfig,
};
use crtfrag_core::exploration::{level_census, HeightSeries, LevelCensus};
use crtfrag_core::fragmentation::{active_cuts, refines, trajectory, CutOrigin, MarkSet};
use crtfrag_core::mechanism::{stable_unit_scale, BranchingMechanism, LevyMeasure};
use crtfrag_core::rng::stream;
use crtfrag_core::sampler::{
    first_passage_time, harvest_excursions, ExcursionRecord, Harvest, HarvestTarget,
    SamplerConfig,
};
use crtfrag_core::stats::{poisson_mixture_gof, MeanVar};

fn brownian() -> BranchingMechanism {
    BranchingMechanism::brownian(0.5).unwrap()
}

fn brownian_atoms() -> BranchingMechanism {
    BranchingMechanism::new(0.0, 0.5, LevyMeasure::FiniteAtoms { atoms: vec![(1.0, 1.0)] })
        .unwrap()
}

fn stable() -> BranchingMechanism {
    BranchingMechanism::new(
        0.0,
        0.0,
        LevyMeasure::StablePower { c: stable_unit_scale(1.5), a: 1.5, damping: 0.0 },
    )
    .unwrap()
}

struct Criterion {
    id: u32,
    name: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Self {
        Criterion { id, name, checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.checks.push((msg, ok));
    }

    fn finish(self) {
        let pass = self.checks.iter().all(|c| c.1);
        println!(
            "criterion {:02} ({}): {}",
            self.id,
            self.name,
            if pass { "PASS" } else { "FAIL" }
        );
        for (msg, ok) in &self.checks {
            println!("    [{}] {}", if *ok { "ok" } else { "FAIL" }, msg);
        }
        assert!(pass, "criterion {:02} ({}) failed", self.id, self.name);
    }
}

#[allow(clippy::too_many_arguments)]
/// Ladder-window excursion harvests on independent streams, in parallel.
/// Stopping at a local-time level keeps the window unbiased (the stopping
/// rule is measurable for the ladder process alone); the time cap guards
/// the heavy passage-time tail and fires on well under 2% of windows.
fn ladder_replicates(
    m: &BranchingMechanism,
    dt: f64,
    local_time: f64,
    time_cap: f64,
    replicates: u64,
    materialize: bool,
    seed: u64,
    tag: &'static str,
) -> Vec<Harvest> {
    let cfg = SamplerConfig::for_mechanism(m, dt);
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            harvest_excursions(
                m,
                &cfg,
                HarvestTarget::LocalTimeCapped { l: local_time, max_time: time_cap },
                materialize,
                u64::MAX,
                &mut stream(seed, tag, r),
            )
            .expect("capped harvest cannot exhaust")
        })
        .collect()
}

#[test]
fn a01_mechanism_identities() {
    let mut c = Criterion::new(1, "mechanism identities");
    for (label, m) in [
        ("brownian", brownian()),
        ("brownian+atom", brownian_atoms()),
        ("stable-3/2", stable()),
    ] {
        // inverse round trip on a log grid
        let mut worst: f64 = 0.0;
        let mut lam = 1e-3;
        while lam <= 1e3 {
            let back = m.psi_inverse(m.psi(lam));
            worst = worst.max((back - lam).abs() / (1.0 + lam));
            lam *= 10f64.powf(0.25);
        }
        c.check(worst <= 1e-8, format!("{label}: psi_inverse . psi = id, worst {worst:.2e}"));

        // tilt identity
        let mut worst_t: f64 = 0.0;
        for theta in [0.0, 0.3, 1.0, 3.0] {
            let t = m.tilt(theta);
            for lam in [0.1, 1.0, 10.0] {
                let lhs = t.psi(lam);
                let rhs = m.psi(theta + lam) - m.psi(theta);
                worst_t = worst_t.max((lhs - rhs).abs() / (1.0 + m.psi(theta + lam)));
            }
        }
        c.check(
            worst_t <= 1e-8,
            format!("{label}: tilted psi = psi(theta+.) - psi(theta), worst {worst_t:.2e}"),
        );

        // derivative against central differences
        let h = 1e-5;
        let mut worst_d: f64 = 0.0;
        for lam in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let fd = (m.psi(lam + h) - m.psi(lam - h)) / (2.0 * h);
            worst_d = worst_d.max((m.psi_prime(lam) - fd).abs() / fd.abs());
        }
        c.check(
            worst_d <= 1e-6,
            format!("{label}: psi' matches finite differences, worst {worst_d:.2e}"),
        );
    }
    c.finish();
}

#[test]
fn a02_excursion_length_transform() {
    // (1/L) sum (1 - e^{-lambda sigma}) estimates the inverse exponent
    let mut c = Criterion::new(2, "excursion-measure length transform");
    let m = brownian();
    let harvests = ladder_replicates(&m, 1e-3, 8.0, 1e5, 40, false, 2001, "a02");
    let total_l: f64 = harvests.iter().map(|h| h.local_time).sum();
    c.check(total_l >= 50.0, format!("local-time budget {total_l:.1} >= 50"));
    for lambda in [1.0, 2.0, 4.0] {
        let mut mv = MeanVar::new();
        for h in &harvests {
            let sum: f64 = h
                .excursions
                .iter()
                .map(|e| -(-lambda * e.sigma()).exp_m1())
                .sum();
            mv.push(sum / h.local_time);
        }
        let target = (2.0 * lambda).sqrt();
        let z = (mv.mean() - target) / mv.stderr();
        c.check(
            z.abs() <= 3.0,
            format!("lambda={lambda}: {:.4} vs sqrt(2 lambda)={target:.4}, z={z:+.2}", mv.mean()),
        );
    }
    c.finish();
}

#[test]
fn a03_excursion_length_tail() {
    let mut c = Criterion::new(3, "excursion length tail per unit local time");
    let m = brownian();
    let harvests = ladder_replicates(&m, 1e-3, 8.0, 1e5, 24, false, 2003, "a03");
    let total_l: f64 = harvests.iter().map(|h| h.local_time).sum();
    c.check(total_l >= 50.0, format!("local-time budget {total_l:.1} >= 50"));
    for cc in [0.01, 0.1, 1.0] {
        let mut mv = MeanVar::new();
        for h in &harvests {
            let count = h.excursions.iter().filter(|e| e.sigma() > cc).count();
            mv.push(count as f64 / h.local_time);
        }
        let target = (2.0 / (std::f64::consts::PI * cc)).sqrt();
        let z = (mv.mean() - target) / mv.stderr();
        c.check(
            z.abs() <= 3.0,
            format!("c={cc}: tail {:.4} vs sqrt(2/(pi c))={target:.4}, z={z:+.2}", mv.mean()),
        );
    }
    c.finish();
}

#[test]
fn a04_first_passage_transform() {
    let mut c = Criterion::new(4, "first-passage subordinator transform");
    let m = brownian();
    let cfg = SamplerConfig::for_mechanism(&m, 1e-3);
    let n = 10_000u64;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|r| {
            let s = first_passage_time(&m, &cfg, 1.0, true, 30.0, &mut stream(2004, "a04", r))
                .unwrap();
            match s.time {
                Some(t) => (-t).exp(),
                None => 0.0, // e^{-S} < 1e-13 past the cap
            }
        })
        .collect();
    let mut mv = MeanVar::new();
    values.iter().for_each(|&v| mv.push(v));
    let target = (-(2.0f64).sqrt()).exp();
    let z = (mv.mean() - target) / mv.stderr();
    c.check(
        z.abs() <= 3.0,
        format!("E e^(-S_1) = {:.5} vs e^(-sqrt 2) = {target:.5}, z={z:+.2}", mv.mean()),
    );
    c.finish();
}

/// Height series, census and marks for one excursion.
fn mark_pipeline(
    exc: &ExcursionRecord,
    m: &BranchingMechanism,
    theta_max: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (HeightSeries, LevelCensus, MarkSet) {
    let hs = HeightSeries::from_excursion(exc, m).expect("beta > 0");
    let da = (hs.max_height() / 256.0).max(1e-12);
    let census = level_census(&hs, da);
    let marks = MarkSet::sample(exc, &hs, &census, m, theta_max, rng);
    (hs, census, marks)
}

#[test]
fn a05_pruned_length_transform() {
    // the pruned excursion length sigma^(theta) has the transform of the
    // tilted mechanism: (1/L) sum (1 - e^{-lambda sigma^(theta)}) ->
    // inverse of psi(theta + .) - psi(theta)
    let mut c = Criterion::new(5, "pruned length transform");
    let m = brownian();
    let replicates = 40u64;
    let values: Vec<(f64, Vec<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let cfg = SamplerConfig::for_mechanism(&m, 1e-3);
            let h = harvest_excursions(
                &m,
                &cfg,
                HarvestTarget::LocalTimeCapped { l: 6.0, max_time: 1e4 },
                true,
                u64::MAX,
                &mut stream(2005, "a05-path", r),
            )
            .unwrap();
            let mut rng = stream(2005, "a05-marks", r);
            let mut sums = vec![0.0f64; 4];
            for exc in &h.excursions {
                let (_, _, marks) = mark_pipeline(exc, &m, 1.0, &mut rng);
                for (i, &(theta, lambda)) in
                    [(0.5, 1.0), (0.5, 2.0), (1.0, 1.0), (1.0, 2.0)].iter().enumerate()
                {
                    let st = crtfrag_core::fragmentation::pruned_length(&marks, theta).unwrap();
                    sums[i] += -(-lambda * st).exp_m1();
                }
            }
            (h.local_time, sums)
        })
        .collect();
    for (i, &(theta, lambda)) in [(0.5, 1.0), (0.5, 2.0), (1.0, 1.0), (1.0, 2.0)]
        .iter()
        .enumerate()
    {
        let mut mv = MeanVar::new();
        for (l, sums) in &values {
            if *l > 0.0 {
                mv.push(sums[i] / l);
            }
        }
        let target = m.tilt(theta).psi_inverse(lambda);
        let z = (mv.mean() - target) / mv.stderr();
        c.check(
            z.abs() <= 3.0,
            format!(
                "theta={theta} lambda={lambda}: {:.4} vs tilted inverse {target:.4}, z={z:+.2}",
                mv.mean()
            ),
        );
    }
    c.finish();
}

#[test]
fn a06_fragmentation_properties() {
    let mut c = Criterion::new(6, "fragmentation structure");
    let m = brownian_atoms();
    let thetas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let dt = 1e-3;
    let chunks = 8u64;
    let violations: Vec<(u64, u64, u64, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let cfg = SamplerConfig::for_mechanism(&m, dt);
            let h = harvest_excursions(
                &m,
                &cfg,
                HarvestTarget::Horizon(40.0),
                true,
                u64::MAX,
                &mut stream(2006, "a06-path", chunk),
            )
            .unwrap();
            let mut rng = stream(2006, "a06-marks", chunk);
            let (mut v_mass, mut v_refine, mut v_mono, mut v_couple) = (0u64, 0u64, 0u64, 0u64);
            let n_checked = h.excursions.len() as u64;
            for exc in &h.excursions {
                let (_, _, marks) = mark_pipeline(exc, &m, 1.0, &mut rng);
                let seqs = trajectory(&marks, &thetas).unwrap();
                let n_cuts = marks.node_marks.len() + marks.skeleton_marks.len();
                for seq in &seqs {
                    if (seq.sum() - exc.sigma()).abs() > 2.0 * dt * n_cuts as f64 + 1e-9 {
                        v_mass += 1;
                    }
                }
                for w in seqs.windows(2) {
                    if w[1].largest() > w[0].largest() + 1e-12 {
                        v_mono += 1;
                    }
                }
                for th in thetas.windows(2) {
                    if !refines(&marks, th[0], th[1]).unwrap() {
                        v_refine += 1;
                    }
                    let low = active_cuts(&marks, th[0]).unwrap();
                    let high = active_cuts(&marks, th[1]).unwrap();
                    let nested = low.cuts.iter().all(|cl| {
                        high.cuts
                            .iter()
                            .any(|ch| ch.lo == cl.lo && ch.hi == cl.hi && ch.stamp == cl.stamp)
                    });
                    if !nested {
                        v_couple += 1;
                    }
                }
            }
            (v_mass, v_refine, v_mono, v_couple, n_checked)
        })
        .collect();
    let total = violations.iter().fold((0, 0, 0, 0, 0), |a, b: &(u64, u64, u64, u64, u64)| {
        (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3, a.4 + b.4)
    });
    c.check(
        total.4 >= 1000,
        format!("marked excursions checked: {} >= 1000", total.4),
    );
    c.check(total.0 == 0, format!("mass conservation violations: {}", total.0));
    c.check(total.1 == 0, format!("refinement violations: {}", total.1));
    c.check(total.2 == 0, format!("largest-fragment monotonicity violations: {}", total.2));
    c.check(total.3 == 0, format!("mark-coupling violations: {}", total.3));
    c.finish();
}

/// Top-level cut counts by origin plus the pruned length, per excursion.
fn top_level_counts(
    m: &BranchingMechanism,
    theta: f64,
    chunks: u64,
    threshold: Option<f64>,
    seed: u64,
    tag: &'static str,
) -> Vec<(f64, usize, usize)> {
    (0..chunks)
        .into_par_iter()
        .flat_map(|chunk| {
            let cfg = SamplerConfig::for_mechanism(m, 1e-3);
            let h = harvest_excursions(
                m,
                &cfg,
                HarvestTarget::Horizon(50.0),
                true,
                u64::MAX,
                &mut stream(seed, tag, chunk),
            )
            .unwrap();
            let mut rng = stream(seed.wrapping_add(1), tag, chunk);
            let mut out = Vec::with_capacity(h.excursions.len());
            for exc in &h.excursions {
                let (_, _, marks) = mark_pipeline(exc, m, theta, &mut rng);
                let cuts = active_cuts(&marks, theta).unwrap();
                let sigma_theta = cuts.root_mass();
                let mut node = 0usize;
                let mut ske = 0usize;
                for cut in cuts.top_level() {
                    if let Some(c) = threshold {
                        if cut.slabs() as f64 * exc.dt <= c {
                            continue;
                        }
                    }
                    match cut.origin {
                        CutOrigin::Node => node += 1,
                        CutOrigin::Skeleton => ske += 1,
                    }
                }
                out.push((sigma_theta, node, ske));
            }
            out
        })
        .collect()
}

#[test]
fn a07_first_generation_subtree_counts() {
    // Conditionally on the pruned length, the first-generation cut subtrees
    // attached to the root fragment form a Poisson family. The node-origin
    // count has finite intensity sigma^(theta) int (1 - e^{-theta l}) pi(dl)
    // and passes. The skeleton-origin intensity is an excursion measure
    // with infinite total mass, so the raw count claim
    // Poisson(2 beta theta sigma^(theta)) cannot hold at any grid
    // resolution; this criterion asserts it anyway and is expected to fail.
    // The thresholded variant in `a07_supplement_thresholded_skeleton_counts`
    // is the finite-intensity form of the same property and passes.
    let mut c = Criterion::new(7, "first-generation subtree counts");
    let theta = 1.0;

    // node-origin counts
    let m = brownian_atoms();
    let node_rows = top_level_counts(&m, theta, 80, None, 2007, "a07-node");
    c.check(
        node_rows.len() >= 10_000,
        format!("node sample size {} >= 10000", node_rows.len()),
    );
    let node_rate = -(-theta * 1.0f64).exp_m1(); // (1 - e^{-theta}) for the unit atom
    let counts: Vec<usize> = node_rows.iter().map(|r| r.1).collect();
    let mus: Vec<f64> = node_rows.iter().map(|r| r.0 * node_rate).collect();
    let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
    c.check(
        p > 0.01,
        format!("node-origin counts ~ Poisson(sigma^th (1-e^-th)): chi2={stat:.1} dof={dof} p={p:.4}"),
    );

    // skeleton-origin counts against the literal Poisson(2 beta theta
    // sigma^(theta)) claim
    let mb = brownian();
    let ske_rows = top_level_counts(&mb, theta, 80, None, 2008, "a07-ske");
    c.check(
        ske_rows.len() >= 10_000,
        format!("skeleton sample size {} >= 10000", ske_rows.len()),
    );
    let counts: Vec<usize> = ske_rows.iter().map(|r| r.2).collect();
    let mus: Vec<f64> = ske_rows.iter().map(|r| r.0 * 2.0 * mb.beta() * theta).collect();
    let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
    let observed_mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let claimed_mean = mus.iter().sum::<f64>() / mus.len() as f64;
    c.check(
        p > 0.01,
        format!(
            "skeleton-origin counts ~ Poisson(2 beta theta sigma^th): chi2={stat:.1} dof={dof} \
             p={p:.4} (observed mean {observed_mean:.3} vs claimed {claimed_mean:.3})"
        ),
    );
    c.finish();
}

#[test]
fn a07_supplement_thresholded_skeleton_counts() {
    // Finite-intensity form of the subtree-count property: subtrees longer
    // than c arrive at rate 2 beta theta sigma^(theta) tail(c), with
    // tail(c) = sqrt(2/(pi c)) in the Brownian case.
    let theta = 1.0;
    let cc = 0.1;
    let m = brownian();
    let rows = top_level_counts(&m, theta, 80, Some(cc), 2009, "a07-thr");
    assert!(rows.len() >= 10_000, "sample size {}", rows.len());
    let tail = (2.0 / (std::f64::consts::PI * cc)).sqrt();
    let counts: Vec<usize> = rows.iter().map(|r| r.2).collect();
    let mus: Vec<f64> = rows.iter().map(|r| r.0 * 2.0 * m.beta() * theta * tail).collect();
    let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
    println!(
        "supplement (thresholded skeleton counts, c={cc}): chi2={stat:.1} dof={dof} p={p:.4}"
    );
    assert!(p > 0.01, "thresholded skeleton count GOF failed: p = {p}");
}

#[test]
fn a08_skeleton_oracle_chain() {
    let mut c = Criterion::new(8, "skeleton transform quadrature chain");
    let grid = [0.5, 1.0, 2.0, 4.0, 8.0];
    for (label, m) in [("brownian", brownian()), ("brownian+atom", brownian_atoms())] {
        let mut worst: f64 = 0.0;
        for &l1 in &grid {
            for &l2 in &grid {
                let q = LaplaceQuery::new(l1, l2).unwrap();
                let closed = oracle_ske_closed(&m, &q).unwrap().a2_form;
                let quad = oracle_ske_quadrature(&m, &q).unwrap();
                worst = worst.max((quad - closed).abs() / closed);
            }
        }
        c.check(
            worst <= 1e-8,
            format!("{label}: quadrature matches substituted closed form, worst {worst:.2e}"),
        );
    }
    c.finish();
}

#[test]
fn a09_skeleton_dislocation_monte_carlo() {
    let mut c = Criterion::new(9, "skeleton dislocation Monte Carlo");
    let m = brownian();
    let queries = [
        LaplaceQuery::new(2.0, 2.0).unwrap(),
        LaplaceQuery::new(1.0, 4.0).unwrap(),
        LaplaceQuery::new(4.0, 1.0).unwrap(),
    ];
    let cfg = SweepConfig {
        replicates: 160,
        local_time_per_replicate: 2.0,
        time_cap: 1e4,
        // the level census misses sub-grid components, an O(sqrt(dt))
        // undercount; dt = 1e-4 keeps it well inside the z budget
        dt: 1e-4,
        levels: 256,
        max_excursion_length: 100.0,
    };
    let estimates = estimate_ske_sweep(&m, &queries, &cfg, 2010).unwrap();

    // fit the single global constant at (2, 2) among {1/2, 1, 2}
    let lemma_22 = oracle_ske_closed(&m, &queries[0]).unwrap().lemma_form;
    let ratio = estimates[0].value / lemma_22;
    let c0 = [0.5, 1.0, 2.0]
        .into_iter()
        .min_by(|a, b| (a - ratio).abs().total_cmp(&(b - ratio).abs()))
        .unwrap();
    c.check(
        c0 == 1.0,
        format!("fitted constant c0 = {c0} (raw ratio {ratio:.4}); frozen at 1"),
    );
    // the closed Brownian reference sits at exactly half the substituted
    // form under this normalization
    let mut coherent = true;
    for q in &queries {
        let a2 = oracle_ske_closed(&m, q).unwrap().a2_form;
        if (brownian_reference(q) - 0.5 * a2).abs() > 1e-12 {
            coherent = false;
        }
    }
    c.check(coherent, "reference value = a2/2 at all queries".into());

    for (q, est) in queries.iter().zip(&estimates) {
        let oracle = c0 * oracle_ske_closed(&m, q).unwrap().lemma_form;
        let z = (est.value - oracle) / est.stderr;
        c.check(
            z.abs() <= 3.0,
            format!(
                "({}, {}): {:.5} +- {:.5} vs {oracle:.5}, z={z:+.2}",
                q.lambda1(),
                q.lambda2(),
                est.value,
                est.stderr
            ),
        );
        c.check(
            est.stderr <= 0.05 * oracle,
            format!(
                "({}, {}): stderr {:.2}% of oracle",
                q.lambda1(),
                q.lambda2(),
                100.0 * est.stderr / oracle
            ),
        );
    }
    c.finish();
}

#[test]
fn a10_node_dislocation_monte_carlo() {
    let mut c = Criterion::new(10, "node dislocation Monte Carlo");
    let m = brownian_atoms();
    let cfg = NodeMcConfig {
        replicates: 100_000,
        dt: 1e-3,
        time_cap: 30.0,
        bridge_correction: true,
    };
    for lambda in [1.0, 2.0] {
        let est = estimate_nod_mc(&m, lambda, NodeFunctional::One, &cfg, 2011).unwrap();
        let oracle = oracle_nod_moment(&m, lambda).unwrap();
        let z = est.z.unwrap();
        c.check(
            z.abs() <= 3.0,
            format!(
                "lambda={lambda}: {:.5} +- {:.5} vs {oracle:.5}, z={z:+.2}",
                est.value, est.stderr
            ),
        );
    }
    c.finish();
}

#[test]
fn a11_excursion_count_poisson() {
    let mut c = Criterion::new(11, "excursion counts over a unit of local time");
    // X from 1 down to 0 is the harvest of one unit of local time; count
    // excursions longer than c. Runs are capped in time (passage times are
    // heavy tailed); the cap plus the trailing partial undercounts with
    // probability well under the test resolution.
    let m = brownian();
    let cc = 0.1;
    let n = 10_000u64;
    let counts: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|r| {
            // grid intervals pad and occasionally merge excursions, an
            // O(sqrt(dt)) overcount at the threshold; dt = 2.5e-4 keeps it
            // inside the z budget
            let cfg = SamplerConfig::for_mechanism(&m, 2.5e-4);
            let h = harvest_excursions(
                &m,
                &cfg,
                HarvestTarget::LocalTimeCapped { l: 1.0, max_time: 3e4 },
                false,
                u64::MAX,
                &mut stream(2012, "a11", r),
            )
            .unwrap();
            // the trailing partial counts when already longer than c
            h.excursions
                .iter()
                .map(|e| e.sigma())
                .chain(h.trailing.iter().map(|e| e.sigma()))
                .filter(|&s| s > cc)
                .count()
        })
        .collect();
    let mut mv = MeanVar::new();
    counts.iter().for_each(|&k| mv.push(k as f64));
    let target = (2.0 / (std::f64::consts::PI * cc)).sqrt();
    let z = (mv.mean() - target) / mv.stderr();
    c.check(
        z.abs() <= 3.0,
        format!("mean count {:.4} vs sqrt(2/(pi c)) = {target:.4}, z={z:+.2}", mv.mean()),
    );
    // dispersion sanity for a Poisson count
    let var_ratio = mv.variance() / target;
    c.check(
        (var_ratio - 1.0).abs() < 0.1,
        format!("variance/mean = {var_ratio:.3} (Poisson dispersion)"),
    );
    c.finish();
}
