//! Gaussian beliefs over mediator value added, updated case by case.
//!
//! After observing outcome `Y` of a case with baseline probability `p`, the
//! posterior over VA `mu` is proportional to
//! `(p + mu)^Y * (1 - p - mu)^(1 - Y) * N(mu; m, s^2)`.
//! Moment matching keeps the belief Gaussian. With `d = m + p` (for `Y = 1`)
//! or `d = 1 - p - m` (for `Y = 0`), Gaussian moment identities give the
//! closed form `mean' = m +/- s^2 / d`, `var' = s^2 (1 - s^2 / d^2)`. Near
//! `d = 0` the linear likelihood goes negative inside the prior's mass and
//! the closed form degrades, so the update falls back to numerical
//! integration truncated to the range where the likelihood is a valid
//! probability.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::CaseRecord;
use crate::error::{Error, Result};
use crate::va::{self, ShrinkageConfig};

/// Posterior variances are floored here to keep beliefs proper.
pub const VAR_FLOOR: f64 = 1e-10;
/// Below this |d| the closed-form update is unreliable and quadrature is used.
pub const CLOSED_FORM_D_MIN: f64 = 0.05;
/// Relative tolerance for the adaptive quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

/// A Gaussian belief `N(mean, var)` over one mediator's VA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    pub mean: f64,
    pub var: f64,
}

impl GaussianBelief {
    pub fn new(mean: f64, var: f64) -> Self {
        GaussianBelief {
            mean,
            var: var.max(VAR_FLOOR),
        }
    }

    /// Blank-slate prior `N(0, sigma_mu^2)`.
    pub fn prior(sigma_mu: f64) -> Self {
        GaussianBelief::new(0.0, sigma_mu * sigma_mu)
    }
}

/// Moment-matched Bayesian update after one observed outcome.
///
/// Uses the closed form when it is accurate (`|d| > 0.05` and the updated
/// variance stays above the floor), otherwise truncated quadrature. If even
/// quadrature cannot normalize the posterior (the prior sits essentially
/// outside the valid likelihood range), the belief is returned unchanged
/// rather than propagating a failure into a running simulation.
pub fn posterior_update(belief: GaussianBelief, p: f64, outcome: bool) -> Result<GaussianBelief> {
    check_probability(p)?;
    let (m, s2) = (belief.mean, belief.var);
    let d = if outcome { m + p } else { 1.0 - p - m };
    if d.abs() > CLOSED_FORM_D_MIN {
        let mean = if outcome { m + s2 / d } else { m - s2 / d };
        let var = s2 * (1.0 - s2 / (d * d));
        if var > VAR_FLOOR {
            return Ok(GaussianBelief { mean, var });
        }
    }
    match quadrature_posterior_moments(belief, p, outcome) {
        Ok((mean, var)) => Ok(GaussianBelief::new(mean, var)),
        Err(Error::QuadratureFailure { .. }) => Ok(GaussianBelief::new(m, s2)),
        Err(e) => Err(e),
    }
}

/// Posterior mean and variance by adaptive quadrature over `[-p, 1 - p]`,
/// the range where `p + mu` is a valid probability. Independent oracle for
/// [`posterior_update`] and its fallback path.
pub fn quadrature_posterior_moments(
    belief: GaussianBelief,
    p: f64,
    outcome: bool,
) -> Result<(f64, f64)> {
    check_probability(p)?;
    quadrature_moments_on(belief, p, outcome, -p, 1.0 - p)
}

/// Posterior moments integrated over an explicit interval.
///
/// With bounds wide enough to capture the full prior mass (say `m +/- 40 s`)
/// this computes exactly the signed-likelihood integral that the closed form
/// solves, which is what equivalence tests compare against.
pub fn quadrature_moments_on(
    belief: GaussianBelief,
    p: f64,
    outcome: bool,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    check_probability(p)?;
    if !(lo < hi) {
        return Err(Error::Value(format!("empty integration interval [{lo}, {hi}]")));
    }
    let m = belief.mean;
    let s = belief.var.sqrt();
    // Scaled integrand: likelihood times exp(-(mu - m)^2 / (2 s^2)). The
    // Gaussian normalizer cancels in the moment ratios and scaling this way
    // avoids underflow for sharp priors.
    let f = |mu: f64| -> [f64; 3] {
        let l = if outcome { p + mu } else { 1.0 - p - mu };
        let z = (mu - m) / s;
        let g = l * (-0.5 * z * z).exp();
        [g, mu * g, mu * mu * g]
    };

    // Split at the prior peak and a few widths around it so a sharp peak
    // cannot slip between coarse initial samples.
    let mut knots = vec![lo, hi];
    for k in [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        for sign in [-1.0, 1.0] {
            let x = m + sign * k * s;
            if x > lo && x < hi {
                knots.push(x);
            }
        }
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();

    // First pass: coarse Simpson estimate per segment. The knots at
    // m +/- k s make these accurate where the mass actually is, so their
    // largest component is a sound scale for an absolute error budget.
    // Sizing the budget per segment instead would let a segment whose
    // initial samples miss its mass (e.g. a likelihood root at a knot)
    // demand absurd absolute accuracy and stall the refinement.
    let mut segments = Vec::with_capacity(knots.len());
    let mut global_scale = 0.0f64;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(mid), f(b));
        let whole = simpson(a, b, &fa, &fm, &fb);
        for v in &whole {
            global_scale = global_scale.max(v.abs());
        }
        segments.push((a, mid, b, fa, fm, fb, whole));
    }
    if global_scale < 1e-300 {
        return Err(Error::QuadratureFailure {
            reason: "posterior mass underflow across the whole interval".into(),
        });
    }
    let tol = QUADRATURE_REL_TOL * global_scale;
    let mut integrals = [0.0f64; 3];
    for (a, mid, b, fa, fm, fb, whole) in &segments {
        let part = refine(&f, *a, *mid, *b, fa, fm, fb, whole, tol, 40);
        for i in 0..3 {
            integrals[i] += part[i];
        }
    }
    let [i0, i1, i2] = integrals;
    if !i0.is_finite() || i0.abs() < 1e-300 {
        return Err(Error::QuadratureFailure {
            reason: format!("posterior mass underflow (normalizer {i0:e})"),
        });
    }
    let mean = i1 / i0;
    let var = i2 / i0 - mean * mean;
    Ok((mean, var.max(VAR_FLOOR)))
}

/// Draws one VA sample from the belief.
pub fn sample_va<R: Rng + ?Sized>(belief: GaussianBelief, rng: &mut R) -> f64 {
    Normal::new(belief.mean, belief.var.sqrt())
        .expect("belief variance is positive")
        .sample(rng)
}

/// Result of a periodic recalibration pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recalibration {
    /// Beliefs were replaced from a fresh VA estimation.
    Applied,
    /// Too little data to estimate; beliefs left unchanged.
    Skipped,
}

/// Re-estimates VA from the concluded-case history and resets every belief.
///
/// Mediators with 2+ concluded cases get `N(mu_hat, posterior_var)` from the
/// shrinkage estimator; all others get the freshly estimated cross-sectional
/// prior `N(0, sigma_mu_hat^2)`. An empty history resets everyone to the
/// configured default prior. A non-empty history that still has too few
/// qualifying mediators leaves beliefs unchanged.
pub fn recalibrate(
    beliefs: &mut BTreeMap<String, GaussianBelief>,
    history: &[CaseRecord],
    config: &ShrinkageConfig,
) -> Result<Recalibration> {
    let concluded: Vec<&CaseRecord> = history
        .iter()
        .filter(|c| c.outcome.is_some() && c.assigned_mediator.is_some())
        .collect();
    if concluded.is_empty() {
        let prior = GaussianBelief::prior(config.default_sigma_mu);
        for b in beliefs.values_mut() {
            *b = prior;
        }
        return Ok(Recalibration::Applied);
    }
    match va::estimate_va_from_refs(&concluded, config) {
        Ok(table) => {
            let prior = GaussianBelief::new(0.0, table.components.sigma_mu_sq);
            for (id, b) in beliefs.iter_mut() {
                *b = match table.estimates.get(id) {
                    Some(est) => GaussianBelief::new(est.mu_hat, est.posterior_var),
                    None => prior,
                };
            }
            Ok(Recalibration::Applied)
        }
        Err(Error::InsufficientData { .. }) => Ok(Recalibration::Skipped),
        Err(e) => Err(e),
    }
}

/// One step of a single-mediator replay; all three trackers have seen the
/// same `step + 1` outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    /// Shrinkage estimate recomputed from the full outcome prefix.
    pub explicit_va: f64,
    /// Sequential moment-matched updates, never recalibrated.
    pub posterior_mean: f64,
    /// Sequential updates, reset to the shrinkage estimate every period.
    pub recalibrated_mean: f64,
}

/// Fixed variance components for single-mediator replays, where the
/// cross-sectional estimator has nothing to estimate from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayComponents {
    pub sigma_mu_sq: f64,
    pub sigma_theta_sq: f64,
    pub sigma_eps_sq: f64,
}

impl Default for ReplayComponents {
    /// `sigma_mu = 0.11`, no transitory component, Bernoulli-scale noise.
    fn default() -> Self {
        ReplayComponents {
            sigma_mu_sq: 0.0121,
            sigma_theta_sq: 0.0,
            sigma_eps_sq: 0.25,
        }
    }
}

/// Replays one mediator's outcome sequence three ways to expose drift
/// between sequential belief updating and the explicit shrinkage estimator.
///
/// Residuals are `y_i - p_i`; the explicit estimate after `n` outcomes is
/// the shrinkage factor `sigma_mu^2 / (sigma_mu^2 + h_n)` applied to their
/// mean, with `h_n = (sigma_theta^2 + sigma_eps^2 / (0.5 n)) / 2`.
/// Recalibration (every `period` steps) resets the tracked belief to the
/// explicit estimate and its shrinkage posterior variance.
pub fn replay_belief_trajectory(
    ps: &[f64],
    outcomes: &[bool],
    period: usize,
    comps: &ReplayComponents,
) -> Result<Vec<TrajectoryPoint>> {
    if ps.len() != outcomes.len() {
        return Err(Error::Value(format!(
            "replay lengths differ: {} probabilities, {} outcomes",
            ps.len(),
            outcomes.len()
        )));
    }
    if period == 0 {
        return Err(Error::Value("recalibration period must be >= 1".into()));
    }
    let prior = GaussianBelief::new(0.0, comps.sigma_mu_sq);
    let mut posterior_only = prior;
    let mut recalibrated = prior;
    let mut residual_sum = 0.0;
    let mut out = Vec::with_capacity(ps.len());
    for (i, (&p, &y)) in ps.iter().zip(outcomes).enumerate() {
        check_probability(p)?;
        residual_sum += if y { 1.0 - p } else { -p };
        let n = (i + 1) as f64;
        let h = 0.5 * (comps.sigma_theta_sq + comps.sigma_eps_sq / (0.5 * n));
        let shrink = comps.sigma_mu_sq / (comps.sigma_mu_sq + h);
        let explicit = shrink * residual_sum / n;

        posterior_only = posterior_update(posterior_only, p, y)?;
        recalibrated = posterior_update(recalibrated, p, y)?;
        if (i + 1) % period == 0 {
            let posterior_var = comps.sigma_mu_sq * h / (comps.sigma_mu_sq + h);
            recalibrated = GaussianBelief::new(explicit, posterior_var);
        }
        out.push(TrajectoryPoint {
            step: i,
            explicit_va: explicit,
            posterior_mean: posterior_only.mean,
            recalibrated_mean: recalibrated.mean,
        });
    }
    Ok(out)
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::InvalidProbability(p));
    }
    Ok(())
}

fn simpson(a: f64, b: f64, fa: &[f64; 3], fm: &[f64; 3], fb: &[f64; 3]) -> [f64; 3] {
    let h = (b - a) / 6.0;
    [
        h * (fa[0] + 4.0 * fm[0] + fb[0]),
        h * (fa[1] + 4.0 * fm[1] + fb[1]),
        h * (fa[2] + 4.0 * fm[2] + fb[2]),
    ]
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> [f64; 3],
    a: f64,
    m: f64,
    b: f64,
    fa: &[f64; 3],
    fm: &[f64; 3],
    fb: &[f64; 3],
    whole: &[f64; 3],
    tol: f64,
    depth: u32,
) -> [f64; 3] {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, &flm, fm);
    let right = simpson(m, b, fm, &frm, fb);
    let mut err = 0.0f64;
    let mut refined = [0.0f64; 3];
    for i in 0..3 {
        refined[i] = left[i] + right[i];
        err = err.max((refined[i] - whole[i]).abs());
    }
    if depth == 0 || err < 15.0 * tol {
        // Richardson extrapolation of the two half-interval estimates.
        for i in 0..3 {
            refined[i] += (refined[i] - whole[i]) / 15.0;
        }
        return refined;
    }
    let l = refine(f, a, lm, m, fa, &flm, fm, &left, 0.5 * tol, depth - 1);
    let r = refine(f, m, rm, b, fm, &frm, fb, &right, 0.5 * tol, depth - 1);
    [l[0] + r[0], l[1] + r[1], l[2] + r[2]]
}
