//! Discretized spectrally positive Lévy paths, excursion harvesting,
//! first-passage subordinators and Brownian excursions.
//!
//! Paths follow an Euler scheme: per step a Gaussian increment with drift
//! -alpha - int_{l>eps} l pi(dl) and variance 2 beta dt, plus compound
//! Poisson jumps of size > eps. Within a step the continuous part is applied
//! first and jumps last; the ledger keeps one entry per jump with the path
//! value just before it.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::mechanism::{BranchingMechanism, LevyMeasure};

/// Sampler knobs. `epsilon` is the jump truncation level (folding smaller
/// jumps into the drift compensation and, optionally, a Gaussian variance
/// correction).
#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub dt: f64,
    pub epsilon: f64,
    pub gaussian_small_jump_correction: bool,
}

impl SamplerConfig {
    /// Default truncation: 1e-3 for the stable density, 0 for finite
    /// activity measures.
    pub fn for_mechanism(m: &BranchingMechanism, dt: f64) -> Self {
        let epsilon = match m.levy() {
            LevyMeasure::StablePower { .. } => 1e-3,
            _ => 0.0,
        };
        SamplerConfig { dt, epsilon, gaussian_small_jump_correction: false }
    }
}

/// One ledger entry: the step whose transition contains the jump, the jump
/// size, and the path value immediately before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub step: usize,
    pub size: f64,
    pub x_before: f64,
}

/// Discretized path with jump ledger and running infimum.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub dt: f64,
    pub values: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
    pub infimum: Vec<f64>,
}

impl PathGrid {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Excursion of X - I above 0: global indices, the local slice restarted at
/// zero (when materialized) and the local jump sub-ledger.
#[derive(Debug, Clone)]
pub struct ExcursionRecord {
    pub start: usize,
    pub end: usize,
    pub dt: f64,
    /// X - I along the excursion; first and last entries are zero.
    /// Empty when the harvest did not materialize values.
    pub values: Vec<f64>,
    /// Jumps with step indices local to `values`.
    pub jumps: Vec<JumpRecord>,
    sigma: f64,
}

impl ExcursionRecord {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Assemble an excursion from explicit parts (synthetic trees, tests).
    /// The ledger must be consistent with the values under the
    /// continuous-then-jumps step convention.
    pub fn from_parts(
        start: usize,
        end: usize,
        dt: f64,
        values: Vec<f64>,
        jumps: Vec<JumpRecord>,
    ) -> Self {
        assert!(end > start);
        if !values.is_empty() {
            assert_eq!(values.len(), end - start + 1);
            let mut cursor = 0usize;
            for k in 0..values.len() - 1 {
                let mut landing: Option<f64> = None;
                while cursor < jumps.len() && jumps[cursor].step == k {
                    let j = &jumps[cursor];
                    if let Some(prev) = landing {
                        assert!(
                            (j.x_before - prev).abs() < 1e-9,
                            "consecutive jumps in one step must chain"
                        );
                    }
                    landing = Some(j.x_before + j.size);
                    cursor += 1;
                }
                if let Some(l) = landing {
                    assert!(
                        (l - values[k + 1]).abs() < 1e-9,
                        "last landing of step {k} must equal the next value"
                    );
                }
            }
        }
        ExcursionRecord { start, end, dt, values, jumps, sigma: (end - start) as f64 * dt }
    }
}

enum JumpKind {
    None,
    Stable { eps: f64, inv_a: f64, damping: f64 },
    Atoms { cum: Vec<(f64, f64)> },
    Expo { eps: f64, gamma: f64 },
}

/// Per-step increment machinery shared by all path samplers.
struct StepCore {
    drift_dt: f64,
    sig_dt: f64,
    rate_dt: f64,
    poisson: Option<Poisson<f64>>,
    kind: JumpKind,
}

impl StepCore {
    fn new(m: &BranchingMechanism, cfg: &SamplerConfig) -> Result<Self> {
        if !(cfg.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        let eps = cfg.epsilon;
        let kind = match m.levy() {
            LevyMeasure::Zero => JumpKind::None,
            LevyMeasure::StablePower { a, damping, .. } => {
                if !(eps > 0.0) {
                    return Err(Error::InvalidArgument(
                        "stable jump part requires a positive truncation epsilon".into(),
                    ));
                }
                JumpKind::Stable { eps, inv_a: 1.0 / a, damping: *damping }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                let mut cum = Vec::with_capacity(atoms.len());
                let mut acc = 0.0;
                for &(l, w) in atoms {
                    if l > eps {
                        acc += w;
                        cum.push((acc, l));
                    }
                }
                JumpKind::Atoms { cum }
            }
            LevyMeasure::ExpDensity { gamma, .. } => JumpKind::Expo { eps, gamma: *gamma },
        };
        let rate = m.levy().tail_rate(eps.max(0.0));
        let drift = -m.alpha() - m.levy().tail_mean(eps.max(0.0));
        let mut var = 2.0 * m.beta();
        if cfg.gaussian_small_jump_correction {
            var += m.levy().small_jump_variance(eps);
        }
        let rate_dt = rate * cfg.dt;
        let poisson = if rate_dt > 0.0 {
            Some(Poisson::new(rate_dt).map_err(|e| Error::InvalidArgument(e.to_string()))?)
        } else {
            None
        };
        Ok(StepCore {
            drift_dt: drift * cfg.dt,
            sig_dt: (var * cfg.dt).sqrt(),
            rate_dt,
            poisson,
            kind,
        })
    }

    #[inline]
    fn continuous_increment<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.drift_dt + self.sig_dt * z
    }

    #[inline]
    fn jump_count<R: Rng>(&self, rng: &mut R) -> usize {
        match &self.poisson {
            None => 0,
            Some(p) => {
                if self.rate_dt < 1e-8 {
                    // direct Bernoulli thinning for very small rates
                    if rng.random::<f64>() < self.rate_dt {
                        1
                    } else {
                        0
                    }
                } else {
                    p.sample(rng) as usize
                }
            }
        }
    }

    #[inline]
    fn jump_size<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            JumpKind::None => unreachable!("no jump part"),
            JumpKind::Stable { eps, inv_a, damping } => loop {
                let u: f64 = rng.random();
                let l = eps * u.powf(-inv_a);
                if *damping == 0.0 || rng.random::<f64>() < (-damping * l).exp() {
                    return l;
                }
            },
            JumpKind::Atoms { cum } => {
                let total = cum.last().map(|&(c, _)| c).unwrap_or(0.0);
                let u: f64 = rng.random::<f64>() * total;
                for &(c, l) in cum {
                    if u <= c {
                        return l;
                    }
                }
                cum.last().unwrap().1
            }
            JumpKind::Expo { eps, gamma } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                eps + e / gamma
            }
        }
    }
}

/// Euler-scheme path over [0, horizon].
pub fn sample_path<R: Rng>(
    m: &BranchingMechanism,
    cfg: &SamplerConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<PathGrid> {
    if !(horizon >= cfg.dt) {
        return Err(Error::InvalidArgument("horizon must be at least dt".into()));
    }
    let core = StepCore::new(m, cfg)?;
    let n = (horizon / cfg.dt).round() as usize;
    let mut values = Vec::with_capacity(n + 1);
    let mut infimum = Vec::with_capacity(n + 1);
    let mut jumps = Vec::new();
    let mut x = 0.0f64;
    let mut inf = 0.0f64;
    values.push(x);
    infimum.push(inf);
    for step in 0..n {
        x += core.continuous_increment(rng);
        for _ in 0..core.jump_count(rng) {
            let size = core.jump_size(rng);
            jumps.push(JumpRecord { step, size, x_before: x });
            x += size;
        }
        inf = inf.min(x);
        values.push(x);
        infimum.push(inf);
    }
    Ok(PathGrid { dt: cfg.dt, values, jumps, infimum })
}

fn close_excursion(
    dt: f64,
    start: usize,
    end: usize,
    values: Option<Vec<f64>>,
    jumps: Vec<JumpRecord>,
) -> ExcursionRecord {
    let mut values = values.unwrap_or_default();
    if !values.is_empty() {
        // terminal point is clamped to the boundary; the remaining descent
        // belongs to the local time
        *values.last_mut().unwrap() = 0.0;
    }
    ExcursionRecord { start, end, dt, values, jumps, sigma: (end - start) as f64 * dt }
}

/// Maximal intervals where X - I > 0, plus the local-time budget -I at the
/// horizon. The trailing incomplete excursion is discarded.
pub fn extract_excursions(path: &PathGrid, materialize: bool) -> (Vec<ExcursionRecord>, f64) {
    let n = path.values.len();
    let mut out = Vec::new();
    let mut inf = 0.0f64;
    let mut min_idx = 0usize;
    let mut jump_cursor = 0usize;
    for i in 1..n {
        let x = path.values[i];
        if x <= inf {
            if i > min_idx + 1 {
                // an excursion ran from min_idx to i
                let values = materialize.then(|| {
                    let base = path.values[min_idx];
                    path.values[min_idx..=i].iter().map(|v| v - base).collect::<Vec<_>>()
                });
                let base = path.values[min_idx];
                let mut local_jumps = Vec::new();
                while jump_cursor < path.jumps.len() && path.jumps[jump_cursor].step < i {
                    let j = path.jumps[jump_cursor];
                    if j.step >= min_idx && j.step + 1 < i {
                        local_jumps.push(JumpRecord {
                            step: j.step - min_idx,
                            size: j.size,
                            x_before: j.x_before - base,
                        });
                    }
                    jump_cursor += 1;
                }
                out.push(close_excursion(path.dt, min_idx, i, values, local_jumps));
            } else {
                while jump_cursor < path.jumps.len() && path.jumps[jump_cursor].step < i {
                    jump_cursor += 1;
                }
            }
            inf = x;
            min_idx = i;
        }
    }
    (out, -inf)
}

/// What a harvest should run until.
///
/// Passage times of the local time are heavy tailed (no finite mean), so
/// bulk estimation uses `Horizon` replicates and normalizes by the realized
/// local time; `LocalTime` and `Excursions` stop at a ladder point and are
/// guarded by `max_steps`.
#[derive(Debug, Clone, Copy)]
pub enum HarvestTarget {
    /// Run for a fixed time horizon; the open excursion at the horizon is
    /// reported separately as the trailing partial.
    Horizon(f64),
    /// Run until the local time -I reaches this value.
    LocalTime(f64),
    /// Run until the local time reaches `l` or the time cap, whichever
    /// comes first (passage times of the local time are heavy tailed).
    LocalTimeCapped { l: f64, max_time: f64 },
    /// Run until this many excursions have been closed.
    Excursions(usize),
}

/// A harvested excursion sample with its exact local-time budget.
#[derive(Debug)]
pub struct Harvest {
    pub excursions: Vec<ExcursionRecord>,
    /// The excursion still open when a horizon or cap fired, clamped at its
    /// last grid point. Estimators of monotone functionals fold it in to
    /// shrink the censoring error; it never appears for ladder-stopped
    /// targets.
    pub trailing: Option<ExcursionRecord>,
    pub local_time: f64,
    pub steps: u64,
}

/// Stream a path until the target is met, collecting completed excursions.
/// Memory stays proportional to the current excursion, not the whole path.
pub fn harvest_excursions<R: Rng>(
    m: &BranchingMechanism,
    cfg: &SamplerConfig,
    target: HarvestTarget,
    materialize: bool,
    max_steps: u64,
    rng: &mut R,
) -> Result<Harvest> {
    let core = StepCore::new(m, cfg)?;
    let cap_steps = match target {
        HarvestTarget::Horizon(t) => Some((t / cfg.dt).round() as u64),
        HarvestTarget::LocalTimeCapped { max_time, .. } => {
            Some((max_time / cfg.dt).round() as u64)
        }
        _ => None,
    };
    let mut excursions = Vec::new();
    let mut x = 0.0f64;
    let mut inf = 0.0f64;
    let mut min_idx = 0usize;
    let mut cur_values: Vec<f64> = if materialize { vec![0.0] } else { Vec::new() };
    let mut cur_jumps: Vec<JumpRecord> = Vec::new();
    let mut step = 0usize;
    loop {
        if let Some(h) = cap_steps {
            if step as u64 >= h {
                // clamp the open excursion at the current point
                let trailing = if step > min_idx {
                    if materialize {
                        cur_values.push(0.0);
                    }
                    cur_jumps.retain(|j| j.step + min_idx + 1 < step + 1);
                    Some(close_excursion(
                        cfg.dt,
                        min_idx,
                        step + 1,
                        materialize.then(|| std::mem::take(&mut cur_values)),
                        std::mem::take(&mut cur_jumps),
                    ))
                } else {
                    None
                };
                return Ok(Harvest { excursions, trailing, local_time: -inf, steps: step as u64 });
            }
        }
        if step as u64 >= max_steps {
            return Err(Error::HorizonExhausted { steps: step as u64 });
        }
        let base = inf;
        x += core.continuous_increment(rng);
        for _ in 0..core.jump_count(rng) {
            let size = core.jump_size(rng);
            cur_jumps.push(JumpRecord { step: step - min_idx, size, x_before: x - base });
            x += size;
        }
        step += 1;
        if materialize {
            cur_values.push(x - base);
        }
        if x <= inf {
            if step > min_idx + 1 {
                // drop jumps in the closing transition: their subtrees have
                // no time extent on this grid
                cur_jumps.retain(|j| j.step + min_idx + 1 < step);
                let values = materialize.then(|| std::mem::take(&mut cur_values));
                excursions.push(close_excursion(
                    cfg.dt,
                    min_idx,
                    step,
                    values,
                    std::mem::take(&mut cur_jumps),
                ));
            }
            inf = x;
            min_idx = step;
            cur_jumps.clear();
            if materialize {
                cur_values.clear();
                cur_values.push(0.0);
            }
            let done = match target {
                HarvestTarget::Horizon(_) => false,
                HarvestTarget::LocalTime(l) => -inf >= l,
                HarvestTarget::LocalTimeCapped { l, .. } => -inf >= l,
                HarvestTarget::Excursions(k) => excursions.len() >= k,
            };
            if done {
                return Ok(Harvest {
                    excursions,
                    trailing: None,
                    local_time: -inf,
                    steps: step as u64,
                });
            }
        }
    }
}

/// First-passage subordinator path: ladder levels, passage times and the
/// jump list (one jump per excursion straddled).
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    pub levels: Vec<f64>,
    pub passage_times: Vec<f64>,
    /// (ladder position u, jump size Delta S)
    pub jumps: Vec<(f64, f64)>,
}

/// Simulate X and record S_v = first time X <= -v on a ladder grid of
/// `ladder_points` levels up to v_max. Errors when `max_steps` runs out
/// before -v_max is reached.
pub fn first_passage_subordinator<R: Rng>(
    m: &BranchingMechanism,
    cfg: &SamplerConfig,
    v_max: f64,
    ladder_points: usize,
    max_steps: u64,
    rng: &mut R,
) -> Result<SubordinatorPath> {
    if v_max < 0.0 {
        return Err(Error::InvalidArgument("v_max must be nonnegative".into()));
    }
    let levels: Vec<f64> = (1..=ladder_points.max(1))
        .map(|j| v_max * j as f64 / ladder_points.max(1) as f64)
        .collect();
    if v_max == 0.0 {
        return Ok(SubordinatorPath { levels: vec![0.0], passage_times: vec![0.0], jumps: vec![] });
    }
    let core = StepCore::new(m, cfg)?;
    let mut passage_times = vec![f64::NAN; levels.len()];
    let mut next_level = 0usize;
    let mut x = 0.0f64;
    let mut inf = 0.0f64;
    let mut min_step = 0usize;
    let mut jumps = Vec::new();
    let mut step = 0usize;
    while next_level < levels.len() {
        if step as u64 >= max_steps {
            return Err(Error::HorizonExhausted { steps: step as u64 });
        }
        x += core.continuous_increment(rng);
        for _ in 0..core.jump_count(rng) {
            x += core.jump_size(rng);
        }
        step += 1;
        if x <= inf {
            if step > min_step + 1 {
                jumps.push((-inf, (step - min_step) as f64 * cfg.dt));
            }
            inf = x;
            min_step = step;
            while next_level < levels.len() && -inf >= levels[next_level] {
                passage_times[next_level] = step as f64 * cfg.dt;
                next_level += 1;
            }
        }
    }
    Ok(SubordinatorPath { levels, passage_times, jumps })
}

/// Outcome of a single first-passage simulation.
#[derive(Debug, Clone)]
pub struct PassageSample {
    /// First time X <= -v, None if the path stayed above past the time cap.
    pub time: Option<f64>,
    /// Excursion lengths straddled before passage.
    pub jumps: Vec<f64>,
}

/// First passage of X to -v with an optional diffusion-bridge sub-step
/// crossing test (removes the O(sqrt(dt)) late-detection bias). The walk is
/// abandoned at `time_cap` (for integrands that vanish at large S).
pub fn first_passage_time<R: Rng>(
    m: &BranchingMechanism,
    cfg: &SamplerConfig,
    v: f64,
    bridge_correction: bool,
    time_cap: f64,
    rng: &mut R,
) -> Result<PassageSample> {
    if v <= 0.0 {
        return Ok(PassageSample { time: Some(0.0), jumps: vec![] });
    }
    let core = StepCore::new(m, cfg)?;
    let target = -v;
    let two_beta_dt = 2.0 * m.beta() * cfg.dt;
    let mut x = 0.0f64;
    let mut inf = 0.0f64;
    let mut min_step = 0usize;
    let mut jumps = Vec::new();
    let max_steps = (time_cap / cfg.dt).ceil() as usize;
    for step in 0..max_steps {
        let x_prev = x;
        x += core.continuous_increment(rng);
        let x_cont = x;
        for _ in 0..core.jump_count(rng) {
            x += core.jump_size(rng);
        }
        if x_cont <= target || x <= target {
            return Ok(PassageSample { time: Some((step + 1) as f64 * cfg.dt), jumps });
        }
        if bridge_correction && two_beta_dt > 0.0 {
            // crossing probability of a Brownian bridge between consecutive
            // grid values, both above the barrier
            let d0 = x_prev - target;
            let d1 = x_cont - target;
            let expo = -2.0 * d0 * d1 / two_beta_dt;
            if expo > -40.0 && rng.random::<f64>() < expo.exp() {
                return Ok(PassageSample {
                    time: Some((step as f64 + 0.5) * cfg.dt),
                    jumps,
                });
            }
        }
        if x <= inf {
            if step + 1 > min_step + 1 {
                jumps.push((step + 1 - min_step) as f64 * cfg.dt);
            }
            inf = x;
            min_step = step + 1;
        }
    }
    Ok(PassageSample { time: None, jumps })
}

/// Ladder view of an already-sampled path: S_v on the realized minima, with
/// jumps equal to the excursion lengths straddled.
pub fn subordinator_from_path(path: &PathGrid) -> SubordinatorPath {
    let mut levels = vec![0.0];
    let mut passage_times = vec![0.0];
    let mut jumps = Vec::new();
    let mut inf = 0.0f64;
    let mut min_idx = 0usize;
    for i in 1..path.values.len() {
        let x = path.values[i];
        if x <= inf {
            if i > min_idx + 1 {
                jumps.push((-inf, (i - min_idx) as f64 * path.dt));
            }
            inf = x;
            min_idx = i;
            levels.push(-inf);
            passage_times.push(i as f64 * path.dt);
        }
    }
    SubordinatorPath { levels, passage_times, jumps }
}

/// Normalized Brownian excursion via the Vervaat transform of a Brownian
/// bridge, scaled to the requested length (space scale sqrt(length)).
pub fn brownian_excursion<R: Rng>(
    sigma_target: f64,
    dt: f64,
    rng: &mut R,
) -> Result<ExcursionRecord> {
    if !(sigma_target > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument("sigma_target and dt must be positive".into()));
    }
    let m = ((sigma_target / dt).round() as usize).max(2);
    let step_sd = (1.0 / m as f64).sqrt();
    // random walk to a bridge
    let mut w = Vec::with_capacity(m + 1);
    w.push(0.0f64);
    let mut acc = 0.0;
    for _ in 0..m {
        let z: f64 = rng.sample(StandardNormal);
        acc += step_sd * z;
        w.push(acc);
    }
    let w_end = *w.last().unwrap();
    let mut bridge: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, &v)| v - w_end * k as f64 / m as f64)
        .collect();
    // rotate at the argmin
    let (rho, min_val) = bridge
        .iter()
        .cloned()
        .enumerate()
        .take(m)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let scale = sigma_target.sqrt();
    let mut values = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let idx = (rho + k) % m;
        values.push((bridge[idx] - min_val) * scale);
    }
    values[0] = 0.0;
    values[m] = 0.0;
    bridge.clear();
    Ok(ExcursionRecord {
        start: 0,
        end: m,
        dt: sigma_target / m as f64,
        values,
        jumps: vec![],
        sigma: sigma_target,
    })
}
