//! Value-added estimation from concluded cases.
//!
//! A linear probability model regresses outcomes on case controls (case
//! type, station, period, referral mode) plus one indicator per mediator, so
//! mediator quality cannot contaminate the control coefficients. The
//! mediator indicators are then folded out: their unweighted mean moves into
//! the intercept (normalizing the average mediator to zero) and residuals
//! `y - X beta` therefore carry each mediator's deviation from the average
//! plus noise. Variance components split each mediator's residual series in
//! half chronologically; the covariance of the half-means across mediators
//! identifies the persistent VA variance. Per-mediator means are shrunk
//! toward zero in proportion to their noise.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::CaseRecord;
use crate::error::{Error, Result};

/// Variance components and floors used across estimation and recalibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageConfig {
    /// Prior VA standard deviation used when nothing can be estimated.
    pub default_sigma_mu: f64,
    /// Floor applied to every estimated variance component.
    pub variance_floor: f64,
}

impl Default for ShrinkageConfig {
    fn default() -> Self {
        ShrinkageConfig {
            default_sigma_mu: 0.11,
            variance_floor: 1e-8,
        }
    }
}

/// Fitted control coefficients of the outcome regression. Mediator effects
/// are already folded out; `predict` gives the expected outcome of a case
/// under the average mediator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub case_type: BTreeMap<u32, f64>,
    pub station: BTreeMap<u32, f64>,
    pub period: BTreeMap<u32, f64>,
    pub referral_mode: BTreeMap<u32, f64>,
    /// Set when outcomes are constant or the design loses more rank than the
    /// one expected intercept/mediator overlap. The fit is still usable.
    pub degenerate: bool,
}

impl RegressionFit {
    pub fn predict(&self, case: &CaseRecord) -> f64 {
        self.intercept
            + self.case_type.get(&case.cell.case_type).copied().unwrap_or(0.0)
            + self.station.get(&case.cell.station).copied().unwrap_or(0.0)
            + self.period.get(&case.period).copied().unwrap_or(0.0)
            + self
                .referral_mode
                .get(&case.referral_mode)
                .copied()
                .unwrap_or(0.0)
    }
}

/// Estimated spread of persistent VA, transitory mediator noise, and
/// case-level noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma_mu_sq: f64,
    pub sigma_theta_sq: f64,
    pub sigma_eps_sq: f64,
}

/// Shrunk VA estimate for one mediator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaEstimate {
    pub n_cases: usize,
    pub raw_mean: f64,
    pub shrink_factor: f64,
    pub mu_hat: f64,
    pub posterior_var: f64,
}

/// Full estimation output: per-mediator estimates (only mediators with 2+
/// concluded cases appear), the variance components, and the control fit.
#[derive(Debug, Clone, PartialEq)]
pub struct VaTable {
    pub estimates: BTreeMap<String, VaEstimate>,
    pub components: VarianceComponents,
    pub fit: RegressionFit,
}

/// Runs the whole pipeline (fit, residualize, components, shrink) on the
/// concluded cases in `cases`.
pub fn estimate_va(cases: &[CaseRecord], config: &ShrinkageConfig) -> Result<VaTable> {
    let refs: Vec<&CaseRecord> = cases.iter().collect();
    estimate_va_from_refs(&refs, config)
}

/// [`estimate_va`] over borrowed records, for callers that filter first.
pub fn estimate_va_from_refs(cases: &[&CaseRecord], config: &ShrinkageConfig) -> Result<VaTable> {
    let concluded: Vec<&CaseRecord> = cases
        .iter()
        .copied()
        .filter(|c| c.outcome.is_some() && c.assigned_mediator.is_some())
        .collect();
    let fit = fit_fixed_effects(&concluded)?;
    let residuals = residualize(&concluded, &fit);
    let components = estimate_variance_components(&residuals, config)?;
    let estimates = shrink_va(&residuals, &components);
    Ok(VaTable {
        estimates,
        components,
        fit,
    })
}

/// Fits the linear probability model by least squares.
///
/// Dummy coding drops the first level of each control dimension; every
/// assigned mediator gets an indicator. The normal equations carry a tiny
/// Tikhonov term so the expected intercept/mediator rank overlap solves
/// cleanly; after re-centering (see module docs) the returned coefficients
/// are invariant to which least-squares solution that picks.
pub fn fit_fixed_effects(cases: &[&CaseRecord]) -> Result<RegressionFit> {
    if cases.is_empty() {
        return Err(Error::Value("cannot fit regression on zero concluded cases".into()));
    }
    for c in cases {
        c.validate()?;
        if c.outcome.is_none() || c.assigned_mediator.is_none() {
            return Err(Error::Value(format!(
                "case {} lacks an outcome or assigned mediator",
                c.id
            )));
        }
    }

    let types: Vec<u32> = collect_levels(cases, |c| c.cell.case_type);
    let stations: Vec<u32> = collect_levels(cases, |c| c.cell.station);
    let periods: Vec<u32> = collect_levels(cases, |c| c.period);
    let modes: Vec<u32> = collect_levels(cases, |c| c.referral_mode);
    let mediators: Vec<&str> = {
        let set: BTreeSet<&str> = cases
            .iter()
            .map(|c| c.assigned_mediator.as_deref().unwrap())
            .collect();
        set.into_iter().collect()
    };

    // Column layout: intercept, then non-reference levels of each control,
    // then one column per mediator.
    let mut offset = 1usize;
    let type_cols = index_map(&types, &mut offset);
    let station_cols = index_map(&stations, &mut offset);
    let period_cols = index_map(&periods, &mut offset);
    let mode_cols = index_map(&modes, &mut offset);
    let mediator_base = offset;
    let k = offset + mediators.len();
    let mediator_cols: BTreeMap<&str, usize> = mediators
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, mediator_base + i))
        .collect();

    // Each row has at most six ones; accumulate X'X and X'y sparsely.
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    let mut cols: Vec<usize> = Vec::with_capacity(6);
    for c in cases {
        cols.clear();
        cols.push(0);
        if let Some(&j) = type_cols.get(&c.cell.case_type) {
            cols.push(j);
        }
        if let Some(&j) = station_cols.get(&c.cell.station) {
            cols.push(j);
        }
        if let Some(&j) = period_cols.get(&c.period) {
            cols.push(j);
        }
        if let Some(&j) = mode_cols.get(&c.referral_mode) {
            cols.push(j);
        }
        cols.push(mediator_cols[c.assigned_mediator.as_deref().unwrap()]);
        let y = f64::from(u8::from(c.outcome.unwrap()));
        for &a in &cols {
            xty[a] += y;
            for &b in &cols {
                xtx[(a, b)] += 1.0;
            }
        }
    }

    let scale = xtx.diagonal().mean().max(1.0);
    let mut beta = None;
    let mut deficiency = 0usize;
    for ridge_rel in [1e-10, 1e-8] {
        let mut reg = xtx.clone();
        let ridge = ridge_rel * scale;
        for i in 0..k {
            reg[(i, i)] += ridge;
        }
        if let Some(chol) = Cholesky::new(reg) {
            // Near-zero pivots beyond the one expected overlap mean extra
            // collinearity in the data.
            let l = chol.l();
            deficiency = (0..k).filter(|&i| l[(i, i)].powi(2) < 1e-6 * scale).count();
            beta = Some(chol.solve(&xty));
            break;
        }
    }
    let beta = beta.ok_or_else(|| Error::Value("normal equations not positive definite".into()))?;

    // Fold the average mediator effect into the intercept.
    let mediator_mean = if mediators.is_empty() {
        0.0
    } else {
        (0..mediators.len()).map(|i| beta[mediator_base + i]).sum::<f64>() / mediators.len() as f64
    };
    let first = cases[0].outcome.unwrap();
    let constant_outcomes = cases.iter().all(|c| c.outcome.unwrap() == first);

    let pick = |levels: &[u32], cols: &BTreeMap<u32, usize>| -> BTreeMap<u32, f64> {
        levels
            .iter()
            .map(|&lvl| (lvl, cols.get(&lvl).map_or(0.0, |&j| beta[j])))
            .collect()
    };
    Ok(RegressionFit {
        intercept: beta[0] + mediator_mean,
        case_type: pick(&types, &type_cols),
        station: pick(&stations, &station_cols),
        period: pick(&periods, &period_cols),
        referral_mode: pick(&modes, &mode_cols),
        degenerate: constant_outcomes || deficiency > 1,
    })
}

/// Residuals `y - X beta` grouped by mediator, ordered by conclusion time
/// (ties keep input order).
pub fn residualize(cases: &[&CaseRecord], fit: &RegressionFit) -> BTreeMap<String, Vec<f64>> {
    let mut ordered: Vec<&&CaseRecord> = cases
        .iter()
        .filter(|c| c.outcome.is_some() && c.assigned_mediator.is_some())
        .collect();
    ordered.sort_by(|a, b| {
        let ta = a.conclusion_time.unwrap_or(a.arrival_time);
        let tb = b.conclusion_time.unwrap_or(b.arrival_time);
        ta.partial_cmp(&tb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for c in ordered {
        let y = f64::from(u8::from(c.outcome.unwrap()));
        out.entry(c.assigned_mediator.clone().unwrap())
            .or_default()
            .push(y - fit.predict(c));
    }
    out
}

/// Estimates the three variance components from per-mediator residual
/// series. Needs at least two mediators with two or more residuals.
pub fn estimate_variance_components(
    residuals: &BTreeMap<String, Vec<f64>>,
    config: &ShrinkageConfig,
) -> Result<VarianceComponents> {
    let floor = config.variance_floor;
    let mut half_means: Vec<(f64, f64)> = Vec::new();
    let mut within_ss = 0.0;
    let mut within_df = 0.0;
    for series in residuals.values() {
        let n = series.len();
        if n < 2 {
            continue;
        }
        let split = n.div_ceil(2);
        let (g1, g2) = series.split_at(split);
        half_means.push((mean(g1), mean(g2)));
        for g in [g1, g2] {
            if g.len() > 1 {
                let m = mean(g);
                within_ss += g.iter().map(|r| (r - m) * (r - m)).sum::<f64>();
                within_df += (g.len() - 1) as f64;
            }
        }
    }
    if half_means.len() < 2 {
        return Err(Error::InsufficientData {
            qualifying: half_means.len(),
        });
    }

    let j = half_means.len() as f64;
    let m1 = half_means.iter().map(|h| h.0).sum::<f64>() / j;
    let m2 = half_means.iter().map(|h| h.1).sum::<f64>() / j;
    let cov = half_means
        .iter()
        .map(|h| (h.0 - m1) * (h.1 - m2))
        .sum::<f64>()
        / (j - 1.0);
    let sigma_mu_sq = cov.max(floor);

    let sigma_eps_sq = if within_df > 0.0 {
        (within_ss / within_df).max(floor)
    } else {
        floor
    };

    let all: Vec<f64> = residuals.values().flatten().copied().collect();
    let total_var = if all.len() > 1 {
        let m = mean(&all);
        all.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (all.len() - 1) as f64
    } else {
        0.0
    };
    let sigma_theta_sq = (total_var - sigma_mu_sq - sigma_eps_sq).max(floor);

    Ok(VarianceComponents {
        sigma_mu_sq,
        sigma_theta_sq,
        sigma_eps_sq,
    })
}

/// Shrinks each qualifying mediator's raw residual mean toward zero.
///
/// The noise variance of a mediator's mean residual is approximated by
/// `h = (sigma_theta^2 + sigma_eps^2 / (n / 2)) / 2`; the shrinkage factor
/// is `sigma_mu^2 / (sigma_mu^2 + h)`.
pub fn shrink_va(
    residuals: &BTreeMap<String, Vec<f64>>,
    components: &VarianceComponents,
) -> BTreeMap<String, VaEstimate> {
    let mut out = BTreeMap::new();
    for (mediator, series) in residuals {
        let n = series.len();
        if n < 2 {
            continue;
        }
        let raw_mean = mean(series);
        let h = 0.5 * (components.sigma_theta_sq + components.sigma_eps_sq / (0.5 * n as f64));
        let shrink_factor = components.sigma_mu_sq / (components.sigma_mu_sq + h);
        out.insert(
            mediator.clone(),
            VaEstimate {
                n_cases: n,
                raw_mean,
                shrink_factor,
                mu_hat: shrink_factor * raw_mean,
                posterior_var: components.sigma_mu_sq * h / (components.sigma_mu_sq + h),
            },
        );
    }
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn collect_levels<F: Fn(&CaseRecord) -> u32>(cases: &[&CaseRecord], f: F) -> Vec<u32> {
    let set: BTreeSet<u32> = cases.iter().map(|c| f(c)).collect();
    set.into_iter().collect()
}

/// Maps each non-reference level to its column index.
fn index_map(levels: &[u32], offset: &mut usize) -> BTreeMap<u32, usize> {
    let mut out = BTreeMap::new();
    for &lvl in levels.iter().skip(1) {
        out.insert(lvl, *offset);
        *offset += 1;
    }
    out
}
