//! The five report suites. Each consumes a validated config and produces a
//! deterministic `Report`; suite/mechanism mismatches surface as
//! `Incompatible` before any sampling starts.

use rayon::prelude::*;

use crtfrag_core::dislocation::{
    estimate_nod_mc, estimate_ske_sweep, oracle_nod_moment, oracle_ske_closed,
    oracle_ske_quadrature, LaplaceQuery, NodeFunctional, NodeMcConfig, SweepConfig,
};
use crtfrag_core::exploration::{level_census, HeightSeries};
use crtfrag_core::fragmentation::{
    active_cuts, refines, trajectory, trajectory_csv, CutOrigin, MarkSet,
};
use crtfrag_core::mechanism::{BranchingMechanism, SubordinatorModel};
use crtfrag_core::rng::stream;
use crtfrag_core::sampler::{harvest_excursions, ExcursionRecord, HarvestTarget, SamplerConfig};
use crtfrag_core::stats::poisson_mixture_gof;

use crate::config::ExperimentConfig;
use crate::report::{Report, ReportRow};

#[derive(Debug)]
pub enum SuiteError {
    /// The suite cannot run against this mechanism (exit code 2).
    Incompatible(String),
}

impl std::fmt::Display for SuiteError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuiteError::Incompatible(msg) => write!(f, "incompatible suite: {msg}"),
        }
    }
}

pub const SUITES: [&str; 5] = [
    "mechanism-check",
    "fragmentation",
    "dislocation-ske",
    "dislocation-nod",
    "special-markov",
];

/// Extra files emitted next to the report (name, content).
pub type ExtraFiles = Vec<(String, String)>;

pub fn run_suite(
    name: &str,
    cfg: &ExperimentConfig,
) -> Result<(Report, ExtraFiles), SuiteError> {
    match name {
        "mechanism-check" => Ok((mechanism_check(cfg), vec![])),
        "fragmentation" => fragmentation_suite(cfg),
        "dislocation-ske" => dislocation_ske(cfg).map(|r| (r, vec![])),
        "dislocation-nod" => dislocation_nod(cfg).map(|r| (r, vec![])),
        "special-markov" => special_markov(cfg).map(|r| (r, vec![])),
        other => Err(SuiteError::Incompatible(format!("unknown suite `{other}`"))),
    }
}

fn sampler_config(cfg: &ExperimentConfig) -> SamplerConfig {
    let mut sc = SamplerConfig::for_mechanism(&cfg.mechanism, cfg.dt);
    if let Some(eps) = cfg.epsilon {
        sc.epsilon = eps;
    }
    sc
}

fn mechanism_check(cfg: &ExperimentConfig) -> Report {
    let m = &cfg.mechanism;
    let mut rows = Vec::new();
    // inverse round trip
    let mut worst = 0.0f64;
    let mut lam = 1e-3;
    while lam <= 1e3 {
        let back = m.psi_inverse(m.psi(lam));
        worst = worst.max((back - lam).abs() / (1.0 + lam));
        lam *= 10f64.powf(0.25);
    }
    rows.push(
        ReportRow::new(vec![("tolerance", 1e-8)], worst, 0.0, None)
            .with_pass(worst <= 1e-8, "inverse round trip"),
    );
    // tilt identity
    let mut worst_t = 0.0f64;
    for theta in [0.0, 0.3, 1.0, 3.0] {
        let t = m.tilt(theta);
        for lam in [0.1, 1.0, 10.0] {
            let lhs = t.psi(lam);
            let rhs = m.psi(theta + lam) - m.psi(theta);
            worst_t = worst_t.max((lhs - rhs).abs() / (1.0 + m.psi(theta + lam)));
        }
    }
    rows.push(
        ReportRow::new(vec![("tolerance", 1e-8)], worst_t, 0.0, None)
            .with_pass(worst_t <= 1e-8, "tilt identity"),
    );
    // derivative vs central differences
    let h = 1e-5;
    let mut worst_d = 0.0f64;
    for lam in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let fd = (m.psi(lam + h) - m.psi(lam - h)) / (2.0 * h);
        worst_d = worst_d.max((m.psi_prime(lam) - fd).abs() / fd.abs());
    }
    rows.push(
        ReportRow::new(vec![("tolerance", 1e-6)], worst_d, 0.0, None)
            .with_pass(worst_d <= 1e-6, "derivative vs finite differences"),
    );
    // convexity
    let mut worst_c = 0.0f64;
    let hh = 1e-3;
    let mut lam = 0.01;
    while lam <= 100.0 {
        let second = m.psi(lam + hh) - 2.0 * m.psi(lam) + m.psi(lam - hh.min(lam));
        worst_c = worst_c.min(second);
        lam *= 1.6;
    }
    rows.push(
        ReportRow::new(vec![("tolerance", 1e-8)], worst_c, 0.0, None)
            .with_pass(worst_c >= -1e-8, "convexity of psi"),
    );
    let mut rep = Report::new("mechanism-check", cfg.seed);
    rep.table("identities", rows);
    rep
}

/// Height series, census and marks for one excursion.
fn mark_pipeline(
    exc: &ExcursionRecord,
    cfg: &ExperimentConfig,
    rng: &mut crtfrag_core::rng::ChaCha8Rng,
) -> (HeightSeries, MarkSet) {
    let hs = HeightSeries::from_excursion(exc, &cfg.mechanism).expect("beta > 0");
    let da = cfg.da.unwrap_or((hs.max_height() / 256.0).max(1e-12));
    let census = level_census(&hs, da);
    let marks = MarkSet::sample(exc, &hs, &census, &cfg.mechanism, cfg.theta_max, rng);
    (hs, marks)
}

fn fragmentation_suite(cfg: &ExperimentConfig) -> Result<(Report, ExtraFiles), SuiteError> {
    if cfg.mechanism.beta() == 0.0 {
        return Err(SuiteError::Incompatible(
            "fragmentation needs beta > 0 for the height process".into(),
        ));
    }
    let chunks = ((cfg.n as f64 / 150.0).ceil() as u64).max(1);
    let results: Vec<(u64, u64, u64, u64, u64, String)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let sc = sampler_config(cfg);
            let h = harvest_excursions(
                &cfg.mechanism,
                &sc,
                HarvestTarget::Horizon(cfg.horizon.min(50.0)),
                true,
                u64::MAX,
                &mut stream(cfg.seed, "fragmentation-path", chunk),
            )
            .expect("horizon harvest");
            let mut rng = stream(cfg.seed, "fragmentation-marks", chunk);
            let (mut v_mass, mut v_refine, mut v_mono, mut v_couple) = (0u64, 0, 0, 0);
            let mut csv = String::new();
            for (i, exc) in h.excursions.iter().enumerate() {
                let (_, marks) = mark_pipeline(exc, cfg, &mut rng);
                let seqs = trajectory(&marks, &cfg.theta_grid).unwrap();
                let n_cuts = marks.node_marks.len() + marks.skeleton_marks.len();
                for seq in &seqs {
                    if (seq.sum() - exc.sigma()).abs() > 2.0 * cfg.dt * n_cuts as f64 + 1e-9 {
                        v_mass += 1;
                    }
                }
                for w in seqs.windows(2) {
                    if w[1].largest() > w[0].largest() + 1e-12 {
                        v_mono += 1;
                    }
                }
                for th in cfg.theta_grid.windows(2) {
                    if !refines(&marks, th[0], th[1]).unwrap() {
                        v_refine += 1;
                    }
                }
                // coupling of active mark sets along the grid
                for th in cfg.theta_grid.windows(2) {
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
                csv.push_str(&trajectory_csv(
                    chunk * 1_000_000 + i as u64,
                    &cfg.theta_grid,
                    &seqs,
                ));
            }
            (v_mass, v_refine, v_mono, v_couple, h.excursions.len() as u64, csv)
        })
        .collect();
    let mut totals = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut csv = String::from("excursion,theta,rank,mass\n");
    for r in &results {
        totals = (
            totals.0 + r.0,
            totals.1 + r.1,
            totals.2 + r.2,
            totals.3 + r.3,
            totals.4 + r.4,
        );
        csv.push_str(&r.5);
    }
    let mut rep = Report::new("fragmentation", cfg.seed);
    let mk = |count: u64, note: &str| {
        ReportRow::new(vec![("excursions", totals.4 as f64)], count as f64, 0.0, None)
            .with_pass(count == 0, note)
    };
    rep.table(
        "structure",
        vec![
            mk(totals.0, "mass conservation violations"),
            mk(totals.1, "refinement violations"),
            mk(totals.2, "largest-fragment monotonicity violations"),
            mk(totals.3, "mark coupling violations"),
        ],
    );
    Ok((rep, vec![("fragmentation_trajectories.csv".into(), csv)]))
}

fn dislocation_ske(cfg: &ExperimentConfig) -> Result<Report, SuiteError> {
    let m = &cfg.mechanism;
    if m.beta() == 0.0 {
        return Err(SuiteError::Incompatible(
            "skeleton dislocation needs beta > 0".into(),
        ));
    }
    let mut rep = Report::new("dislocation-ske", cfg.seed);
    // closed form vs quadrature over the lambda grid
    let mut chain_rows = Vec::new();
    for &l1 in &cfg.lambdas {
        for &l2 in &cfg.lambdas {
            let q = LaplaceQuery::new(l1, l2).unwrap();
            let closed = oracle_ske_closed(m, &q).unwrap();
            let quad = oracle_ske_quadrature(m, &q).unwrap();
            let rel = (quad - closed.a2_form).abs() / closed.a2_form;
            chain_rows.push(
                ReportRow::new(
                    vec![("lambda1", l1), ("lambda2", l2)],
                    quad,
                    0.0,
                    Some(closed.a2_form),
                )
                .with_pass(rel <= 1e-8, "quadrature vs substituted closed form"),
            );
        }
    }
    rep.table("oracle_chain", chain_rows);
    // Monte Carlo sweep against the symmetric closed form
    let queries: Vec<LaplaceQuery> = cfg
        .lambdas
        .iter()
        .flat_map(|&l1| cfg.lambdas.iter().map(move |&l2| LaplaceQuery::new(l1, l2).unwrap()))
        .collect();
    let sweep_cfg = SweepConfig {
        replicates: (cfg.n / 50).clamp(16, 1000),
        local_time_per_replicate: 2.0,
        time_cap: 1e4,
        dt: cfg.dt,
        levels: 256,
        max_excursion_length: 80.0 / queries.iter().map(|q| q.lambda1().min(q.lambda2())).fold(f64::INFINITY, f64::min).min(1.0),
    };
    let estimates = estimate_ske_sweep(m, &queries, &sweep_cfg, cfg.seed).unwrap();
    let sweep_rows = queries
        .iter()
        .zip(&estimates)
        .map(|(q, e)| {
            ReportRow::new(
                vec![("lambda1", q.lambda1()), ("lambda2", q.lambda2())],
                e.value,
                e.stderr,
                e.oracle,
            )
        })
        .collect();
    rep.table("sweep", sweep_rows);
    Ok(rep)
}

fn dislocation_nod(cfg: &ExperimentConfig) -> Result<Report, SuiteError> {
    let m = &cfg.mechanism;
    if m.levy().is_zero() {
        return Err(SuiteError::Incompatible("node dislocation needs a jump part".into()));
    }
    if m.levy().finite_activity_rate().is_none() {
        return Err(SuiteError::Incompatible(
            "node Monte Carlo needs a finite-activity jump measure".into(),
        ));
    }
    let mc = NodeMcConfig {
        replicates: cfg.n,
        dt: cfg.dt,
        time_cap: 30.0,
        bridge_correction: true,
    };
    let mut rows = Vec::new();
    for &lambda in &cfg.lambdas {
        let est = estimate_nod_mc(m, lambda, NodeFunctional::One, &mc, cfg.seed).unwrap();
        let oracle = oracle_nod_moment(m, lambda).unwrap();
        rows.push(ReportRow::new(
            vec![("lambda", lambda)],
            est.value,
            est.stderr,
            Some(oracle),
        ));
    }
    let mut rep = Report::new("dislocation-nod", cfg.seed);
    rep.table("node_moment", rows);
    Ok(rep)
}

fn special_markov(cfg: &ExperimentConfig) -> Result<Report, SuiteError> {
    let m = &cfg.mechanism;
    if m.beta() == 0.0 {
        return Err(SuiteError::Incompatible(
            "the count suite needs beta > 0 for the height process".into(),
        ));
    }
    let theta = cfg.theta_max;
    let chunks = ((cfg.n as f64 / 150.0).ceil() as u64).max(1);
    let rows: Vec<(f64, usize, usize, usize)> = (0..chunks)
        .into_par_iter()
        .flat_map(|chunk| {
            let sc = sampler_config(cfg);
            let h = harvest_excursions(
                m,
                &sc,
                HarvestTarget::Horizon(cfg.horizon.min(50.0)),
                true,
                u64::MAX,
                &mut stream(cfg.seed, "special-markov-path", chunk),
            )
            .expect("horizon harvest");
            let mut rng = stream(cfg.seed, "special-markov-marks", chunk);
            let mut out = Vec::with_capacity(h.excursions.len());
            for exc in &h.excursions {
                let (_, marks) = mark_pipeline(exc, cfg, &mut rng);
                let cuts = active_cuts(&marks, theta).unwrap();
                let sigma_theta = cuts.root_mass();
                let mut node = 0usize;
                let mut ske = 0usize;
                let mut ske_thr = 0usize;
                for cut in cuts.top_level() {
                    match cut.origin {
                        CutOrigin::Node => node += 1,
                        CutOrigin::Skeleton => {
                            ske += 1;
                            if cut.slabs() as f64 * exc.dt > 0.1 {
                                ske_thr += 1;
                            }
                        }
                    }
                }
                out.push((sigma_theta, node, ske, ske_thr));
            }
            out
        })
        .collect();
    let mut rep = Report::new("special-markov", cfg.seed);
    let mut gof_rows = Vec::new();
    // int (1 - e^{-theta l}) pi(dl) = total rate minus the damped total
    // rate; defined for finite-activity jump parts only
    let node_rate = match m.levy().finite_activity_rate() {
        Some(total) if total > 0.0 => total - tilted_total_rate(m, theta),
        _ => 0.0,
    };
    if node_rate > 0.0 {
        let counts: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let mus: Vec<f64> = rows.iter().map(|r| r.0 * node_rate).collect();
        let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
        gof_rows.push(
            ReportRow::new(vec![("theta", theta), ("dof", dof as f64)], p, 0.0, None)
                .with_pass(p > 0.01, format!("node-origin counts, chi2 = {stat:.2}")),
        );
    }
    {
        let counts: Vec<usize> = rows.iter().map(|r| r.2).collect();
        let mus: Vec<f64> = rows.iter().map(|r| r.0 * 2.0 * m.beta() * theta).collect();
        let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
        gof_rows.push(
            ReportRow::new(vec![("theta", theta), ("dof", dof as f64)], p, 0.0, None).with_pass(
                p > 0.01,
                format!(
                    "skeleton-origin counts vs Poisson(2 beta theta sigma); chi2 = {stat:.2}; \
                     the skeleton intensity has infinite total mass, so this raw count claim \
                     is expected to fail at any resolution"
                ),
            ),
        );
    }
    // thresholded skeleton counts where the excursion-length tail is known
    if let Some(tail) = SubordinatorModel::new(m.clone()).pi_star_tail(0.1) {
        let counts: Vec<usize> = rows.iter().map(|r| r.3).collect();
        let mus: Vec<f64> = rows.iter().map(|r| r.0 * 2.0 * m.beta() * theta * tail).collect();
        let (stat, dof, p) = poisson_mixture_gof(&counts, &mus, 5.0);
        gof_rows.push(
            ReportRow::new(vec![("theta", theta), ("dof", dof as f64)], p, 0.0, None)
                .with_pass(p > 0.01, format!("skeleton counts above length 0.1, chi2 = {stat:.2}")),
        );
    }
    rep.table("counts", gof_rows);
    Ok(rep)
}

/// Total rate of the theta-damped measure (finite-activity variants).
fn tilted_total_rate(m: &BranchingMechanism, theta: f64) -> f64 {
    m.tilt(theta)
        .levy()
        .finite_activity_rate()
        .expect("damping preserves finite activity")
}
