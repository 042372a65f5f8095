//! Analytic oracles and Monte Carlo estimators for the dislocation
//! transforms: the node part via subordinator first passage, the binary
//! skeleton part via its Laplace transform, and the closed Brownian form.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exploration::{HeightSeries, RunChange, RunSet};
use crate::mechanism::{BranchingMechanism, LevyIntegralKind, LevyMeasure};
use crate::rng::stream;
use crate::sampler::{
    first_passage_time, harvest_excursions, HarvestTarget, SamplerConfig,
};
use crate::stats::{KahanSum, MeanVar};

/// A pair of strictly positive Laplace arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    lambda1: f64,
    lambda2: f64,
}

impl LaplaceQuery {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0) {
            return Err(Error::InvalidArgument(
                "both Laplace arguments must be strictly positive".into(),
            ));
        }
        Ok(LaplaceQuery { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// A Monte Carlo estimate paired with its oracle.
#[derive(Debug, Clone)]
pub struct DislocationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub oracle: Option<f64>,
    pub z: Option<f64>,
}

impl DislocationEstimate {
    pub fn new(value: f64, stderr: f64, replicates: u64, oracle: Option<f64>) -> Self {
        let z = oracle.map(|o| (value - o) / stderr);
        DislocationEstimate { value, stderr, replicates, oracle, z }
    }
}

/// The two closed forms of the skeleton transform: the symmetric form
/// 2 beta / (psi' psi^{-1}(l1) psi' psi^{-1}(l2)) and the substituted form
/// with l1 + l2 in the first slot.
#[derive(Debug, Clone, Copy)]
pub struct SkeletonOracle {
    pub lemma_form: f64,
    pub a2_form: f64,
}

/// Closed-form skeleton transform values.
pub fn oracle_ske_closed(m: &BranchingMechanism, q: &LaplaceQuery) -> Result<SkeletonOracle> {
    if m.beta() == 0.0 {
        return Err(Error::NoSkeletonPart);
    }
    let p1 = m.psi_prime_of_inverse(q.lambda1)?;
    let p2 = m.psi_prime_of_inverse(q.lambda2)?;
    let p12 = m.psi_prime_of_inverse(q.lambda1 + q.lambda2)?;
    let two_beta = 2.0 * m.beta();
    Ok(SkeletonOracle {
        lemma_form: two_beta / (p1 * p2),
        a2_form: two_beta / (p2 * p12),
    })
}

/// The substituted form recomputed as the double integral
/// 2 beta int_0^inf db int_0^b da e^{-(b-a) P - a Q} with
/// P = psi' psi^{-1}(l1 + l2), Q = psi' psi^{-1}(l2); the inner integral is
/// done analytically and the outer one by adaptive quadrature.
pub fn oracle_ske_quadrature(m: &BranchingMechanism, q: &LaplaceQuery) -> Result<f64> {
    if m.beta() == 0.0 {
        return Err(Error::NoSkeletonPart);
    }
    let p = m.psi_prime_of_inverse(q.lambda1 + q.lambda2)?;
    let qq = m.psi_prime_of_inverse(q.lambda2)?;
    // inner integral: (e^{-bQ} - e^{-bP}) / (P - Q), written as
    // b e^{-bQ} phi(b (P - Q)) with phi(x) = (1 - e^{-x})/x for stability
    let phi = |x: f64| {
        if x.abs() < 1e-6 {
            1.0 - x / 2.0 + x * x / 6.0
        } else {
            -(-x).exp_m1() / x
        }
    };
    let d = p - qq;
    let integrand = |b: f64| b * (-b * qq).exp() * phi(b * d);
    let cutoff = 60.0 / qq.min(p);
    let head = crate::quad::integrate(integrand, 0.0, cutoff, 1e-10);
    // analytic tail of int_B^inf (e^{-bQ} - e^{-bP})/(P-Q) db
    let tail = if d.abs() > 1e-12 * p {
        ((-cutoff * qq).exp() / qq - (-cutoff * p).exp() / p) / d
    } else {
        (-cutoff * p).exp() * (cutoff / p + 1.0 / (p * p))
    };
    Ok(2.0 * m.beta() * (head + tail))
}

/// 2 beta psi^{-1}(lambda1) psi^{-1}(lambda2), the integrated transform of
/// the binary skeleton dislocation.
pub fn oracle_nu_ske_laplace(m: &BranchingMechanism, q: &LaplaceQuery) -> Result<f64> {
    if m.beta() == 0.0 {
        return Err(Error::NoSkeletonPart);
    }
    Ok(2.0 * m.beta() * m.psi_inverse(q.lambda1) * m.psi_inverse(q.lambda2))
}

/// Node transform at F = 1:
/// int pi(dv) E[S_v e^{-lambda S_v}] = (psi^{-1})'(lambda)
/// int v e^{-v psi^{-1}(lambda)} pi(dv).
pub fn oracle_nod_moment(m: &BranchingMechanism, lambda: f64) -> Result<f64> {
    if m.levy().is_zero() {
        return Err(Error::NoNodePart);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let u = m.psi_inverse(lambda);
    let weighted = m.levy_integral(LevyIntegralKind::ExpWeightedFirstMoment(u))?;
    Ok(weighted / m.psi_prime(u))
}

/// Closed Brownian reference value 1 / (4 sqrt(lambda2 (lambda1 + lambda2))).
pub fn brownian_reference(q: &LaplaceQuery) -> f64 {
    0.25 / (q.lambda2 * (q.lambda1 + q.lambda2)).sqrt()
}

/// Configuration of the skeleton level-sweep estimator.
///
/// Each replicate harvests the excursions of one ladder window: the path
/// runs until the local time reaches `local_time_per_replicate` (a stopping
/// level of the ladder process, so the window is unbiased), with a time cap
/// against the heavy passage-time tail. The functional of an excursion
/// decays exponentially in its length, so capped windows lose nothing
/// measurable.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub replicates: u64,
    pub local_time_per_replicate: f64,
    /// per-replicate time cap
    pub time_cap: f64,
    pub dt: f64,
    /// level rows per excursion (da = max H / levels)
    pub levels: usize,
    /// excursions longer than this are skipped: every component term
    /// carries e^{-min(l1, l2) sigma}, so the functional of an excursion of
    /// length 80/min(l1,l2) is below 1e-30 of the target scale
    pub max_excursion_length: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            replicates: 160,
            local_time_per_replicate: 2.0,
            time_cap: 1e4,
            dt: 1e-3,
            levels: 256,
            max_excursion_length: 100.0,
        }
    }
}

/// Deterministic per-excursion level-sweep functional, one value per query:
/// 2 beta sum_levels da sum_{components e of {H > a}} |e| e^{-l1 |e| - l2 (sigma - |e|)}.
/// The run set is maintained incrementally while descending through levels.
pub fn sweep_functional(
    hs: &HeightSeries,
    beta: f64,
    queries: &[LaplaceQuery],
    levels: usize,
) -> Vec<f64> {
    let sigma = (hs.len() - 1) as f64 * hs.dt;
    let nq = queries.len();
    let max_h = hs.max_height();
    if max_h <= 0.0 {
        return vec![0.0; nq];
    }
    let da = max_h / levels as f64;
    let n = hs.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| hs.h[b as usize].total_cmp(&hs.h[a as usize]));
    let f = |len_pts: u32, qi: usize| -> f64 {
        let x = len_pts as f64 * hs.dt;
        let q = &queries[qi];
        x * (-q.lambda1 * x - q.lambda2 * (sigma - x)).exp()
    };
    let mut runs = RunSet::new(n);
    let mut current = vec![0.0f64; nq];
    let mut acc = vec![KahanSum::new(); nq];
    let mut ptr = 0usize;
    for k in (1..=levels).rev() {
        let a = k as f64 * da;
        while ptr < n && hs.h[order[ptr] as usize] > a {
            let change = runs.activate(order[ptr] as usize);
            for (qi, cur) in current.iter_mut().enumerate() {
                match change {
                    RunChange::Created { len } => *cur += f(len, qi),
                    RunChange::Extended { old_len, new_len } => {
                        *cur += f(new_len, qi) - f(old_len, qi)
                    }
                    RunChange::Merged { left_len, right_len, new_len } => {
                        *cur += f(new_len, qi) - f(left_len, qi) - f(right_len, qi)
                    }
                }
            }
            ptr += 1;
        }
        for qi in 0..nq {
            acc[qi].add(current[qi] * da);
        }
    }
    acc.iter().map(|k| 2.0 * beta * k.value()).collect()
}

/// Brute-force evaluation of the same functional by per-level linear scans
/// (cross-check for the incremental sweep).
pub fn sweep_functional_scan(
    hs: &HeightSeries,
    beta: f64,
    queries: &[LaplaceQuery],
    levels: usize,
) -> Vec<f64> {
    let sigma = (hs.len() - 1) as f64 * hs.dt;
    let max_h = hs.max_height();
    if max_h <= 0.0 {
        return vec![0.0; queries.len()];
    }
    let da = max_h / levels as f64;
    let mut out = vec![0.0f64; queries.len()];
    for k in 1..=levels {
        let a = k as f64 * da;
        for comp in crate::exploration::level_components_scan(&hs.h, a) {
            let x = (comp.1 - comp.0 + 1) as f64 * hs.dt;
            for (qi, q) in queries.iter().enumerate() {
                out[qi] += da * x * (-q.lambda1 * x - q.lambda2 * (sigma - x)).exp();
            }
        }
    }
    out.iter().map(|v| 2.0 * beta * v).collect()
}

/// Monte Carlo estimate of the skeleton transform by harvesting excursions
/// per unit local time and evaluating the level sweep on each. Targets the
/// symmetric closed form (`lemma_form`).
pub fn estimate_ske_sweep(
    m: &BranchingMechanism,
    queries: &[LaplaceQuery],
    cfg: &SweepConfig,
    seed: u64,
) -> Result<Vec<DislocationEstimate>> {
    if m.beta() == 0.0 {
        return Err(Error::NoSkeletonPart);
    }
    let sampler_cfg = SamplerConfig::for_mechanism(m, cfg.dt);
    let per_replicate: Vec<Result<Vec<f64>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, "ske-sweep", r);
            let harvest = harvest_excursions(
                m,
                &sampler_cfg,
                HarvestTarget::LocalTimeCapped {
                    l: cfg.local_time_per_replicate,
                    max_time: cfg.time_cap,
                },
                true,
                u64::MAX,
                &mut rng,
            )?;
            let mut sums = vec![KahanSum::new(); queries.len()];
            for exc in &harvest.excursions {
                if exc.sigma() > cfg.max_excursion_length {
                    continue;
                }
                let hs = HeightSeries::from_excursion(exc, m)?;
                for (qi, v) in sweep_functional(&hs, m.beta(), queries, cfg.levels)
                    .into_iter()
                    .enumerate()
                {
                    sums[qi].add(v);
                }
            }
            let l = harvest.local_time.max(f64::MIN_POSITIVE);
            Ok(sums.iter().map(|s| s.value() / l).collect())
        })
        .collect();
    let mut stats = vec![MeanVar::new(); queries.len()];
    for rep in per_replicate {
        for (qi, v) in rep?.into_iter().enumerate() {
            stats[qi].push(v);
        }
    }
    queries
        .iter()
        .zip(stats)
        .map(|(q, mv)| {
            let oracle = oracle_ske_closed(m, q)?.lemma_form;
            Ok(DislocationEstimate::new(
                mv.mean(),
                mv.stderr(),
                mv.count(),
                Some(oracle),
            ))
        })
        .collect()
}

/// Bounded functionals of the jump sequence for the node estimator.
#[derive(Debug, Clone, Copy)]
pub enum NodeFunctional {
    One,
    /// indicator that every straddled excursion length is at most c
    MaxJumpAtMost(f64),
}

impl NodeFunctional {
    fn eval(&self, jumps: &[f64]) -> f64 {
        match self {
            NodeFunctional::One => 1.0,
            NodeFunctional::MaxJumpAtMost(c) => {
                if jumps.iter().all(|&j| j <= *c) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Configuration of the node Monte Carlo estimator.
#[derive(Debug, Clone, Copy)]
pub struct NodeMcConfig {
    pub replicates: u64,
    pub dt: f64,
    /// abandon a walk above this time; the integrand S e^{-lambda S} is
    /// negligible there for the lambdas in use
    pub time_cap: f64,
    pub bridge_correction: bool,
}

impl Default for NodeMcConfig {
    fn default() -> Self {
        NodeMcConfig { replicates: 100_000, dt: 1e-3, time_cap: 30.0, bridge_correction: true }
    }
}

/// Node dislocation moment by Monte Carlo: draw v from the normalized jump
/// measure, simulate first passage to -v, average w S_v e^{-lambda S_v} F.
pub fn estimate_nod_mc(
    m: &BranchingMechanism,
    lambda: f64,
    functional: NodeFunctional,
    cfg: &NodeMcConfig,
    seed: u64,
) -> Result<DislocationEstimate> {
    if m.levy().is_zero() {
        return Err(Error::NoNodePart);
    }
    let Some(total_rate) = m.levy().finite_activity_rate() else {
        return Err(Error::UnsupportedForMc(
            "node Monte Carlo needs a finite-activity jump measure".into(),
        ));
    };
    let sampler_cfg = SamplerConfig::for_mechanism(m, cfg.dt);
    let draw_v = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match m.levy() {
            LevyMeasure::FiniteAtoms { atoms } => {
                let u: f64 = rng.random::<f64>() * total_rate;
                let mut acc = 0.0;
                for &(l, w) in atoms {
                    acc += w;
                    if u <= acc {
                        return l;
                    }
                }
                atoms.last().unwrap().0
            }
            LevyMeasure::ExpDensity { gamma, .. } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                e / gamma
            }
            _ => unreachable!("guarded by finite_activity_rate"),
        }
    };
    let chunk = 2048u64;
    let n_chunks = cfg.replicates.div_ceil(chunk);
    let partials: Vec<Result<MeanVar>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut mv = MeanVar::new();
            let lo = ci * chunk;
            let hi = ((ci + 1) * chunk).min(cfg.replicates);
            for r in lo..hi {
                let mut rng = stream(seed, "nod-mc", r);
                let v = draw_v(&mut rng);
                let sample = first_passage_time(
                    m,
                    &sampler_cfg,
                    v,
                    cfg.bridge_correction,
                    cfg.time_cap,
                    &mut rng,
                )?;
                let value = match sample.time {
                    Some(s) => {
                        total_rate * s * (-lambda * s).exp() * functional.eval(&sample.jumps)
                    }
                    None => 0.0,
                };
                mv.push(value);
            }
            Ok(mv)
        })
        .collect();
    let mut mv = MeanVar::new();
    for p in partials {
        mv.merge(&p?);
    }
    let oracle = match functional {
        NodeFunctional::One => Some(oracle_nod_moment(m, lambda)?),
        NodeFunctional::MaxJumpAtMost(_) => None,
    };
    Ok(DislocationEstimate::new(mv.mean(), mv.stderr(), mv.count(), oracle))
}
