//! Branching mechanisms
//! psi(lambda) = alpha lambda + beta lambda^2 + int (e^{-lambda l} - 1 + lambda l) pi(dl),
//! together with the inverse exponent, Esscher tilting and the
//! Lévy-measure integrals everything else is built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::rootfind;
use crate::stats::ln_gamma;

fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Jump measure pi on (0, infinity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum LevyMeasure {
    /// pi = 0.
    #[serde(rename = "zero")]
    Zero,
    /// Density c * e^{-damping l} * l^{-1-a} on (0, inf), a in (1, 2).
    /// `damping = 0` is the plain power law; tilting accumulates damping.
    #[serde(rename = "stable")]
    StablePower {
        c: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "is_zero_f64")]
        damping: f64,
    },
    /// Finitely many atoms (size l_i, rate w_i).
    #[serde(rename = "atoms")]
    FiniteAtoms { atoms: Vec<(f64, f64)> },
    /// Density c * e^{-gamma l} on (0, inf).
    #[serde(rename = "exp")]
    ExpDensity { c: f64, gamma: f64 },
}

fn is_zero_f64(x: &f64) -> bool {
    *x == 0.0
}

/// Compensated exponential e^{-x} - 1 + x, stable near zero.
#[inline]
pub(crate) fn exp_compensated(x: f64) -> f64 {
    if x < 1e-4 {
        // series to 4th order; the integrand is O(x^2) there
        let x2 = x * x;
        x2 * 0.5 - x2 * x / 6.0 + x2 * x2 / 24.0
    } else {
        (-x).exp() - 1.0 + x
    }
}

/// 1 - e^{-x}, stable near zero.
#[inline]
pub(crate) fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

impl LevyMeasure {
    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidMechanism(msg.to_string()));
        match self {
            LevyMeasure::Zero => Ok(()),
            LevyMeasure::StablePower { c, a, damping } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return fail("stable scale c must be positive and finite");
                }
                if !(*a > 1.0 && *a < 2.0) {
                    return fail("stable index a must lie strictly inside (1, 2)");
                }
                if !(*damping >= 0.0) || !damping.is_finite() {
                    return fail("stable damping must be nonnegative and finite");
                }
                Ok(())
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                for &(l, w) in atoms {
                    if !(l > 0.0) || !l.is_finite() {
                        return fail("atom sizes must be positive and finite");
                    }
                    if !(w > 0.0) || !w.is_finite() {
                        return fail("atom rates must be positive and finite");
                    }
                }
                Ok(())
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return fail("exp density scale c must be positive and finite");
                }
                if !(*gamma > 0.0) || !gamma.is_finite() {
                    return fail("exp density rate gamma must be positive and finite");
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Zero => true,
            LevyMeasure::FiniteAtoms { atoms } => atoms.is_empty(),
            _ => false,
        }
    }

    /// Undamped stable primitive g(u) = int (e^{-ul} - 1 + ul) c l^{-1-a} dl.
    fn stable_g(c: f64, a: f64, u: f64) -> f64 {
        c * gamma_fn(2.0 - a) / (a * (a - 1.0)) * u.powf(a)
    }

    /// g'(u) = int l (1 - e^{-ul}) c l^{-1-a} dl.
    fn stable_g_prime(c: f64, a: f64, u: f64) -> f64 {
        c * gamma_fn(2.0 - a) / (a - 1.0) * u.powf(a - 1.0)
    }

    /// int (e^{-lambda l} - 1 + lambda l) pi(dl), closed form per variant.
    pub(crate) fn compensated_exp_integral(&self, lambda: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                if *damping == 0.0 {
                    Self::stable_g(*c, *a, lambda)
                } else {
                    Self::stable_g(*c, *a, damping + lambda)
                        - Self::stable_g(*c, *a, *damping)
                        - lambda * Self::stable_g_prime(*c, *a, *damping)
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                atoms.iter().map(|&(l, w)| w * exp_compensated(lambda * l)).sum()
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                c * lambda * lambda / (gamma * gamma * (gamma + lambda))
            }
        }
    }

    /// int l (1 - e^{-lambda l}) pi(dl), closed form per variant.
    pub(crate) fn damped_first_moment(&self, lambda: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                if *damping == 0.0 {
                    Self::stable_g_prime(*c, *a, lambda)
                } else {
                    Self::stable_g_prime(*c, *a, damping + lambda)
                        - Self::stable_g_prime(*c, *a, *damping)
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                atoms.iter().map(|&(l, w)| w * l * one_minus_exp(lambda * l)).sum()
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                let gl = gamma + lambda;
                c * (1.0 / (gamma * gamma) - 1.0 / (gl * gl))
            }
        }
    }

    /// int (l ^ l^2) pi(dl) (l wedge l squared).
    pub(crate) fn l_min_l2(&self) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                if *damping == 0.0 {
                    c * (1.0 / (2.0 - a) + 1.0 / (a - 1.0))
                } else {
                    let (c, a, th) = (*c, *a, *damping);
                    quad::integrate(
                        |u| {
                            let l = u * u * u * u;
                            l * l * (-th * l).exp() * c * l.powf(-1.0 - a) * 4.0 * u * u * u
                        },
                        0.0,
                        1.0,
                        1e-10,
                    ) + quad::integrate_to_inf(
                        |l| l * (-th * l).exp() * c * l.powf(-1.0 - a),
                        1.0,
                        1e-10,
                    )
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                atoms.iter().map(|&(l, w)| w * l.min(l * l)).sum()
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                let g = gamma;
                let i2 = (2.0 - (-g).exp() * (g * g + 2.0 * g + 2.0)) / (g * g * g);
                let i1 = (-g).exp() * (g + 1.0) / (g * g);
                c * (i2 + i1)
            }
        }
    }

    /// int l e^{-ul} pi(dl); diverges for the stable variant.
    pub(crate) fn exp_weighted_first_moment(&self, u: f64) -> Result<f64> {
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::StablePower { .. } => Err(Error::DivergentIntegral(
                "int l e^{-ul} pi(dl) diverges near 0 for the stable density".into(),
            )),
            LevyMeasure::FiniteAtoms { atoms } => {
                Ok(atoms.iter().map(|&(l, w)| w * l * (-u * l).exp()).sum())
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                let gu = gamma + u;
                Ok(c / (gu * gu))
            }
        }
    }

    /// pi((eps, inf)); infinite only in the limit eps -> 0 for stable.
    pub(crate) fn tail_rate(&self, eps: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                assert!(eps > 0.0, "stable jump part needs a positive truncation level");
                if *damping == 0.0 {
                    c / a * eps.powf(-a)
                } else {
                    let (c, a, th) = (*c, *a, *damping);
                    quad::integrate_to_inf(|l| c * (-th * l).exp() * l.powf(-1.0 - a), eps, 1e-10)
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                atoms.iter().filter(|&&(l, _)| l > eps).map(|&(_, w)| w).sum()
            }
            LevyMeasure::ExpDensity { c, gamma } => c * (-gamma * eps).exp() / gamma,
        }
    }

    /// int_{l > eps} l pi(dl).
    pub(crate) fn tail_mean(&self, eps: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                assert!(eps > 0.0);
                if *damping == 0.0 {
                    c / (a - 1.0) * eps.powf(1.0 - a)
                } else {
                    let (c, a, th) = (*c, *a, *damping);
                    quad::integrate_to_inf(
                        |l| c * l * (-th * l).exp() * l.powf(-1.0 - a),
                        eps,
                        1e-10,
                    )
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => {
                atoms.iter().filter(|&&(l, _)| l > eps).map(|&(l, w)| w * l).sum()
            }
            LevyMeasure::ExpDensity { c, gamma } => {
                c * (-gamma * eps).exp() * (eps + 1.0 / gamma) / gamma
            }
        }
    }

    /// int_{l <= eps} l^2 pi(dl), the small-jump variance.
    pub(crate) fn small_jump_variance(&self, eps: f64) -> f64 {
        if eps <= 0.0 {
            return 0.0;
        }
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::StablePower { c, a, damping } => {
                if *damping == 0.0 {
                    c * eps.powf(2.0 - a) / (2.0 - a)
                } else {
                    let (c, a, th) = (*c, *a, *damping);
                    quad::integrate(
                        |u| {
                            let l = eps * u * u;
                            l * l * (-th * l).exp() * c * l.powf(-1.0 - a) * 2.0 * eps * u
                        },
                        0.0,
                        1.0,
                        1e-10,
                    )
                }
            }
            LevyMeasure::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|&&(l, _)| l <= eps)
                .map(|&(l, w)| w * l * l)
                .sum(),
            LevyMeasure::ExpDensity { c, gamma } => {
                let g = gamma;
                let ge = g * eps;
                c * (2.0 - (-ge).exp() * (ge * ge + 2.0 * ge + 2.0)) / (g * g * g)
            }
        }
    }

    /// Total rate when the measure is finite, None for the stable density.
    pub fn finite_activity_rate(&self) -> Option<f64> {
        match self {
            LevyMeasure::Zero => Some(0.0),
            LevyMeasure::StablePower { .. } => None,
            LevyMeasure::FiniteAtoms { atoms } => Some(atoms.iter().map(|&(_, w)| w).sum()),
            LevyMeasure::ExpDensity { c, gamma } => Some(c / gamma),
        }
    }

    fn damp(&self, theta: f64) -> LevyMeasure {
        match self {
            LevyMeasure::Zero => LevyMeasure::Zero,
            LevyMeasure::StablePower { c, a, damping } => LevyMeasure::StablePower {
                c: *c,
                a: *a,
                damping: damping + theta,
            },
            LevyMeasure::FiniteAtoms { atoms } => LevyMeasure::FiniteAtoms {
                atoms: atoms
                    .iter()
                    .map(|&(l, w)| (l, w * (-theta * l).exp()))
                    .collect(),
            },
            LevyMeasure::ExpDensity { c, gamma } => LevyMeasure::ExpDensity {
                c: *c,
                gamma: gamma + theta,
            },
        }
    }

    /// Density value at l, for the quadrature cross-checks.
    pub(crate) fn density(&self, l: f64) -> Option<f64> {
        match self {
            LevyMeasure::Zero => Some(0.0),
            LevyMeasure::StablePower { c, a, damping } => {
                Some(c * (-damping * l).exp() * l.powf(-1.0 - a))
            }
            LevyMeasure::FiniteAtoms { .. } => None,
            LevyMeasure::ExpDensity { c, gamma } => Some(c * (-gamma * l).exp()),
        }
    }
}

/// The named Lévy-measure integrals exposed by `levy_integral`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyIntegralKind {
    /// int (l ^ l^2) pi(dl)
    LMinL2,
    /// int (1 - e^{-theta l}) l pi(dl)
    OneMinusExpTimesL(f64),
    /// int l (1 - e^{-lambda l}) pi(dl); same integral, lambda-flavoured
    LTimesOneMinusExp(f64),
    /// int l e^{-ul} pi(dl); divergent for the stable density
    ExpWeightedFirstMoment(f64),
}

/// Branching mechanism triplet (alpha, beta, pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingMechanism {
    alpha: f64,
    beta: f64,
    #[serde(default = "default_levy")]
    levy: LevyMeasure,
}

fn default_levy() -> LevyMeasure {
    LevyMeasure::Zero
}

impl BranchingMechanism {
    /// Build and validate a mechanism. Invariant violations are rejected
    /// here so the per-call operations never have to re-check.
    pub fn new(alpha: f64, beta: f64, levy: LevyMeasure) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidMechanism("alpha must be >= 0 and finite".into()));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidMechanism("beta must be >= 0 and finite".into()));
        }
        levy.validate()?;
        if beta == 0.0 && !matches!(levy, LevyMeasure::StablePower { .. }) {
            return Err(Error::InfiniteVariationViolated);
        }
        let m = BranchingMechanism { alpha, beta, levy };
        if beta > 0.0 {
            // lambda / psi(lambda) must vanish; probe at lambda = 1e6
            let lam = 1e6;
            let ratio = lam / m.psi(lam);
            if !(ratio < 1e-2 / beta) {
                return Err(Error::InvalidMechanism(format!(
                    "lambda/psi(lambda) = {ratio:.3e} at lambda = 1e6 is not small"
                )));
            }
        }
        Ok(m)
    }

    /// Brownian mechanism psi(lambda) = beta lambda^2.
    pub fn brownian(beta: f64) -> Result<Self> {
        Self::new(0.0, beta, LevyMeasure::Zero)
    }

    /// Parse the JSON object {"alpha": .., "beta": .., "levy": {...}}.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: BranchingMechanism = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMechanism(e.to_string()))?;
        Self::new(raw.alpha, raw.beta, raw.levy)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn levy(&self) -> &LevyMeasure {
        &self.levy
    }

    /// psi(lambda) = alpha lambda + beta lambda^2 + int (e^{-ll}-1+ll) pi.
    pub fn psi(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        self.alpha * lambda
            + self.beta * lambda * lambda
            + self.levy.compensated_exp_integral(lambda)
    }

    /// psi'(lambda) = alpha + 2 beta lambda + int l (1 - e^{-ll}) pi.
    pub fn psi_prime(&self, lambda: f64) -> f64 {
        debug_assert!(lambda >= 0.0);
        self.alpha + 2.0 * self.beta * lambda + self.levy.damped_first_moment(lambda)
    }

    /// The unique lambda >= 0 with psi(lambda) = v.
    pub fn psi_inverse(&self, v: f64) -> f64 {
        debug_assert!(v >= 0.0);
        if v == 0.0 {
            return 0.0;
        }
        // psi is unbounded, so doubling from 1 always brackets
        let hi = rootfind::double_until(|x| self.psi(x), 1.0, v);
        rootfind::newton_bisect(
            |x| self.psi(x) - v,
            |x| self.psi_prime(x),
            0.0,
            hi,
            0.0,
            1e-12,
        )
    }

    /// Esscher tilt: (alpha^(theta), beta, e^{-theta l} pi(dl)) with
    /// alpha^(theta) = psi'(theta), so that
    /// psi_tilted(lambda) = psi(theta + lambda) - psi(theta).
    pub fn tilt(&self, theta: f64) -> Self {
        debug_assert!(theta >= 0.0);
        if theta == 0.0 {
            return self.clone();
        }
        BranchingMechanism {
            alpha: self.psi_prime(theta),
            beta: self.beta,
            levy: self.levy.damp(theta),
        }
    }

    /// Named integrals against pi, closed form per variant.
    pub fn levy_integral(&self, kind: LevyIntegralKind) -> Result<f64> {
        match kind {
            LevyIntegralKind::LMinL2 => Ok(self.levy.l_min_l2()),
            LevyIntegralKind::OneMinusExpTimesL(theta) => {
                debug_assert!(theta >= 0.0);
                Ok(self.levy.damped_first_moment(theta))
            }
            LevyIntegralKind::LTimesOneMinusExp(lambda) => {
                debug_assert!(lambda >= 0.0);
                Ok(self.levy.damped_first_moment(lambda))
            }
            LevyIntegralKind::ExpWeightedFirstMoment(u) => {
                self.levy.exp_weighted_first_moment(u)
            }
        }
    }

    /// psi'(psi^{-1}(lambda)), the denominator factor of the skeleton
    /// dislocation transform; errors at lambda = 0 when alpha = 0.
    pub fn psi_prime_of_inverse(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 && self.alpha == 0.0 {
            return Err(Error::DegenerateAtZero);
        }
        Ok(self.psi_prime(self.psi_inverse(lambda)))
    }

    /// (psi^{-1})'(lambda) = 1 / psi'(psi^{-1}(lambda)).
    pub fn psi_inverse_prime(&self, lambda: f64) -> Result<f64> {
        Ok(1.0 / self.psi_prime_of_inverse(lambda)?)
    }
}

/// The psi^{-1} subordinator view of a mechanism, with the closed-form
/// Lévy-measure tail where one is known.
#[derive(Debug, Clone)]
pub struct SubordinatorModel {
    mechanism: BranchingMechanism,
}

impl SubordinatorModel {
    pub fn new(mechanism: BranchingMechanism) -> Self {
        SubordinatorModel { mechanism }
    }

    pub fn mechanism(&self) -> &BranchingMechanism {
        &self.mechanism
    }

    /// Laplace exponent of the first-passage subordinator.
    pub fn exponent(&self, lambda: f64) -> f64 {
        self.mechanism.psi_inverse(lambda)
    }

    /// pi_*((c, inf)) when a closed form is known (pure Brownian, stable).
    pub fn pi_star_tail(&self, c: f64) -> Option<f64> {
        debug_assert!(c > 0.0);
        let m = &self.mechanism;
        match m.levy() {
            LevyMeasure::Zero if m.alpha() == 0.0 && m.beta() > 0.0 => {
                Some(1.0 / (std::f64::consts::PI * m.beta() * c).sqrt())
            }
            LevyMeasure::StablePower { a, damping, .. }
                if m.alpha() == 0.0 && m.beta() == 0.0 && *damping == 0.0 =>
            {
                // psi = C lambda^a gives an inverse exponent C^{-1/a} lambda^{1/a}
                let big_c = m.psi(1.0);
                let rho = 1.0 / a;
                Some(big_c.powf(-rho) / gamma_fn(1.0 - rho) * c.powf(-rho))
            }
            _ => None,
        }
    }
}

/// Integrate `f` against a density variant of pi, splitting at l = 1.
/// The head uses l = u^4 to tame the origin singularity of the stable
/// density and the tail uses l = w^{-2} to tame the power-law decay; both
/// substitutions keep the rule nodes away from the NaN corners. The tiny
/// truncated slivers (l < 1e-32, l > 1e16) carry negligible mass for the
/// integrands in use.
fn density_quad<F: Fn(f64) -> f64>(levy: &LevyMeasure, f: F) -> f64 {
    let head = quad::integrate(
        |u| {
            let l = u * u * u * u;
            f(l) * levy.density(l).unwrap() * 4.0 * u * u * u
        },
        1e-8,
        1.0,
        1e-10,
    );
    let tail = quad::integrate(
        |w| {
            let l = 1.0 / (w * w);
            f(l) * levy.density(l).unwrap() * 2.0 / (w * w * w)
        },
        1e-8,
        1.0,
        1e-10,
    );
    head + tail
}

/// Evaluate a Lévy integral by adaptive quadrature against the density.
/// This is the independent cross-check for the closed forms; atoms are
/// summed directly.
pub fn levy_integral_quadrature(m: &BranchingMechanism, kind: LevyIntegralKind) -> Result<f64> {
    let levy = m.levy();
    let integrand: Box<dyn Fn(f64) -> f64> = match kind {
        LevyIntegralKind::LMinL2 => Box::new(|l: f64| l.min(l * l)),
        LevyIntegralKind::OneMinusExpTimesL(t) | LevyIntegralKind::LTimesOneMinusExp(t) => {
            Box::new(move |l: f64| l * one_minus_exp(t * l))
        }
        LevyIntegralKind::ExpWeightedFirstMoment(u) => {
            if matches!(levy, LevyMeasure::StablePower { .. }) {
                return Err(Error::DivergentIntegral(
                    "int l e^{-ul} pi(dl) diverges near 0 for the stable density".into(),
                ));
            }
            Box::new(move |l: f64| l * (-u * l).exp())
        }
    };
    match levy {
        LevyMeasure::Zero => Ok(0.0),
        LevyMeasure::FiniteAtoms { atoms } => {
            Ok(atoms.iter().map(|&(l, w)| w * integrand(l)).sum())
        }
        _ => Ok(density_quad(levy, &integrand)),
    }
}

/// Quadrature evaluation of int (e^{-lambda l} - 1 + lambda l) pi(dl),
/// the cross-check for `psi`.
pub fn compensated_integral_quadrature(m: &BranchingMechanism, lambda: f64) -> Result<f64> {
    let levy = m.levy();
    match levy {
        LevyMeasure::Zero => Ok(0.0),
        LevyMeasure::FiniteAtoms { atoms } => Ok(atoms
            .iter()
            .map(|&(l, w)| w * exp_compensated(lambda * l))
            .sum()),
        _ => Ok(density_quad(levy, |l| exp_compensated(lambda * l))),
    }
}

/// The stable scale that normalizes psi to lambda^a: c = a(a-1)/Gamma(2-a).
pub fn stable_unit_scale(a: f64) -> f64 {
    a * (a - 1.0) / gamma_fn(2.0 - a)
}
