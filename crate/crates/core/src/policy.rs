//! Assignment policies: the QP-based policy in its three VA-knowledge modes
//! plus the load-based, greedy, and oracle baselines.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::belief::{sample_va, GaussianBelief};
use crate::domain::{build_state_graph, CaseRecord, MediatorProfile};
use crate::error::{Error, Result};
use crate::qp::{self, PenaltyKind, SolveStatus};
use crate::sim::ArrivalModel;

/// Where the QP policy takes its VA values from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VaMode {
    /// True VAs (gold-standard variant).
    Known,
    /// Posterior belief means.
    MeanBelief,
    /// One fresh belief sample per mediator per decision.
    SampledBelief,
}

/// A benchmarkable assignment policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicySpec {
    /// Accredited mediator with the lowest load; random ties.
    LeastLoad,
    /// Highest belief mean within the least-overloaded tier.
    GreedyStar,
    /// Highest belief sample within the least-overloaded tier.
    ThompsonStar,
    /// Highest true VA, ignoring load; an upper bound on agreement.
    UpperBound,
    /// Soft-capacity QP over the arriving case and sampled shadow cases.
    Smart {
        mode: VaMode,
        lambda: f64,
        penalty: PenaltyKind,
    },
}

impl PolicySpec {
    /// Stable label used in tables and grouping.
    pub fn label(&self) -> String {
        match self {
            PolicySpec::LeastLoad => "least_load".into(),
            PolicySpec::GreedyStar => "greedy_star".into(),
            PolicySpec::ThompsonStar => "thompson_star".into(),
            PolicySpec::UpperBound => "upper_bound".into(),
            PolicySpec::Smart { mode, .. } => match mode {
                VaMode::Known => "smart-known".into(),
                VaMode::MeanBelief => "smart-mean".into(),
                VaMode::SampledBelief => "smart-sampled".into(),
            },
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            PolicySpec::Smart { lambda, .. } => Some(*lambda),
            _ => None,
        }
    }

    /// Whether the policy reads beliefs (and so benefits from updates and
    /// recalibration).
    pub fn uses_beliefs(&self) -> bool {
        matches!(
            self,
            PolicySpec::GreedyStar
                | PolicySpec::ThompsonStar
                | PolicySpec::Smart {
                    mode: VaMode::MeanBelief | VaMode::SampledBelief,
                    ..
                }
        )
    }
}

/// Shared read-only state for one assignment decision.
pub struct DecisionInputs<'a> {
    pub roster: &'a [MediatorProfile],
    pub beliefs: &'a BTreeMap<String, GaussianBelief>,
    pub arrivals: &'a ArrivalModel,
    /// Shadow-case horizon in days.
    pub horizon: u32,
    pub solver_tol: f64,
}

/// Outcome of one assignment decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub mediator: String,
    /// QP assignment weights over the arriving case's edges, when available.
    pub fractional: Option<Vec<(String, f64)>>,
    /// Per-mediator shadow prices from the QP solve, when available.
    pub shadow_prices: Option<Vec<(String, f64)>>,
}

/// Dispatches a decision to the policy implementation.
pub fn decide<R: Rng>(
    policy: &PolicySpec,
    case: &CaseRecord,
    inputs: &DecisionInputs,
    rng: &mut R,
) -> Result<PolicyDecision> {
    match policy {
        PolicySpec::LeastLoad => least_load_assign(case, inputs.roster, rng),
        PolicySpec::GreedyStar => greedy_star_assign(case, inputs.roster, inputs.beliefs, rng),
        PolicySpec::ThompsonStar => {
            thompson_star_assign(case, inputs.roster, inputs.beliefs, rng)
        }
        PolicySpec::UpperBound => upper_bound_assign(case, inputs.roster),
        PolicySpec::Smart {
            mode,
            lambda,
            penalty,
        } => smart_assign(case, inputs, *mode, *lambda, *penalty, rng),
    }
}

fn accredited_indices(case: &CaseRecord, roster: &[MediatorProfile]) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..roster.len())
        .filter(|&i| roster[i].is_accredited(case.cell))
        .collect();
    if idx.is_empty() {
        return Err(Error::AccreditationGap {
            case: case.id.clone(),
        });
    }
    Ok(idx)
}

fn pick(id: &str) -> PolicyDecision {
    PolicyDecision {
        mediator: id.to_string(),
        fractional: None,
        shadow_prices: None,
    }
}

/// Lowest current load among accredited mediators, uniform over ties.
pub fn least_load_assign<R: Rng>(
    case: &CaseRecord,
    roster: &[MediatorProfile],
    rng: &mut R,
) -> Result<PolicyDecision> {
    let candidates = accredited_indices(case, roster)?;
    let min = candidates.iter().map(|&i| roster[i].load).min().unwrap();
    let tied: Vec<usize> = candidates
        .into_iter()
        .filter(|&i| roster[i].load == min)
        .collect();
    let chosen = *tied.choose(rng).unwrap();
    Ok(pick(&roster[chosen].id))
}

/// Overload tier: 0 below capacity, 1 at capacity, 2 one over, and so on.
fn tier(m: &MediatorProfile) -> i64 {
    (i64::from(m.load) - i64::from(m.capacity)).max(-1) + 1
}

fn best_in_lowest_tier<R: Rng, F: Fn(usize) -> f64>(
    candidates: &[usize],
    roster: &[MediatorProfile],
    score: F,
    rng: &mut R,
) -> usize {
    let lowest = candidates.iter().map(|&i| tier(&roster[i])).min().unwrap();
    let in_tier: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| tier(&roster[i]) == lowest)
        .collect();
    let best = in_tier
        .iter()
        .map(|&i| score(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = in_tier
        .into_iter()
        .filter(|&i| score(i) >= best - 1e-12)
        .collect();
    let min_load = tied.iter().map(|&i| roster[i].load).min().unwrap();
    let final_tied: Vec<usize> = tied
        .into_iter()
        .filter(|&i| roster[i].load == min_load)
        .collect();
    *final_tied.choose(rng).unwrap()
}

/// Highest belief mean within the least-overloaded accredited tier; ties by
/// lower load, then at random. Mediators at capacity are set aside until no
/// accredited mediator sits in a lower tier.
pub fn greedy_star_assign<R: Rng>(
    case: &CaseRecord,
    roster: &[MediatorProfile],
    beliefs: &BTreeMap<String, GaussianBelief>,
    rng: &mut R,
) -> Result<PolicyDecision> {
    let candidates = accredited_indices(case, roster)?;
    let chosen = best_in_lowest_tier(
        &candidates,
        roster,
        |i| beliefs.get(&roster[i].id).map_or(0.0, |b| b.mean),
        rng,
    );
    Ok(pick(&roster[chosen].id))
}

/// Like [`greedy_star_assign`] but scoring by one fresh VA sample per
/// accredited mediator (drawn in roster order).
pub fn thompson_star_assign<R: Rng>(
    case: &CaseRecord,
    roster: &[MediatorProfile],
    beliefs: &BTreeMap<String, GaussianBelief>,
    rng: &mut R,
) -> Result<PolicyDecision> {
    let candidates = accredited_indices(case, roster)?;
    let samples: BTreeMap<usize, f64> = candidates
        .iter()
        .map(|&i| {
            let belief = beliefs
                .get(&roster[i].id)
                .copied()
                .unwrap_or(GaussianBelief::prior(0.0));
            (i, sample_va(belief, rng))
        })
        .collect();
    let chosen = best_in_lowest_tier(&candidates, roster, |i| samples[&i], rng);
    Ok(pick(&roster[chosen].id))
}

/// Highest true VA regardless of load; ties broken by lowest id. Requires a
/// synthetic roster with known VAs.
pub fn upper_bound_assign(case: &CaseRecord, roster: &[MediatorProfile]) -> Result<PolicyDecision> {
    let candidates = accredited_indices(case, roster)?;
    let mut best: Option<(usize, f64)> = None;
    for &i in &candidates {
        let va = roster[i].true_va.ok_or_else(|| {
            Error::Value(format!("mediator {} lacks a true VA", roster[i].id))
        })?;
        if best.is_none_or(|(_, b)| va > b) {
            best = Some((i, va));
        }
    }
    let (chosen, _) = best.unwrap();
    Ok(pick(&roster[chosen].id))
}

/// Samples hypothetical future arrivals over `(0, horizon]` days: per cell a
/// Poisson count at `rate * horizon`, each with an integer arrival day
/// uniform in `1..=horizon` and the cell's mean baseline probability.
pub fn sample_shadow_cases<R: Rng>(
    arrivals: &ArrivalModel,
    horizon: u32,
    rng: &mut R,
) -> Result<Vec<CaseRecord>> {
    if horizon < 1 {
        return Err(Error::InvalidHorizon(horizon));
    }
    let mut shadows = Vec::new();
    for (cell, params) in &arrivals.cells {
        let expected = params.rate * f64::from(horizon);
        if expected <= 0.0 {
            continue;
        }
        let count = Poisson::new(expected)
            .map_err(|e| Error::Value(format!("invalid arrival rate for {cell}: {e}")))?
            .sample(rng) as u64;
        let mut times: Vec<f64> = (0..count)
            .map(|_| rng.gen_range(0.0..f64::from(horizon)).floor() + 1.0)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, t) in times.into_iter().enumerate() {
            shadows.push(CaseRecord {
                id: format!("shadow:{cell}:{i}"),
                cell: *cell,
                p: params.base_p,
                arrival_time: t,
                referral_mode: 0,
                period: 0,
                assigned_mediator: None,
                outcome: None,
                conclusion_time: None,
                is_shadow: true,
            });
        }
    }
    Ok(shadows)
}

/// QP policy: resolve VAs per `mode`, sample shadow competition, solve the
/// soft-capacity program, and route the arriving case to the mediator with
/// the largest assignment weight (ties by lower load, then at random).
pub fn smart_assign<R: Rng>(
    case: &CaseRecord,
    inputs: &DecisionInputs,
    mode: VaMode,
    lambda: f64,
    penalty: PenaltyKind,
    rng: &mut R,
) -> Result<PolicyDecision> {
    let roster = inputs.roster;
    // Shadow sampling first so the rng stream does not depend on `mode`.
    let shadows = sample_shadow_cases(inputs.arrivals, inputs.horizon, rng)?;

    let mut real = case.clone();
    real.arrival_time = 0.0;
    real.is_shadow = false;

    // Mediators that can appear in the graph, in sorted-id order.
    let mut involved: Vec<&MediatorProfile> = roster
        .iter()
        .filter(|m| {
            m.is_accredited(case.cell) || shadows.iter().any(|s| m.is_accredited(s.cell))
        })
        .collect();
    involved.sort_by(|a, b| a.id.cmp(&b.id));

    let mut vas: BTreeMap<String, f64> = BTreeMap::new();
    for m in &involved {
        let va = match mode {
            VaMode::Known => m.true_va.ok_or_else(|| {
                Error::Value(format!("mediator {} lacks a true VA", m.id))
            })?,
            VaMode::MeanBelief => inputs.beliefs.get(&m.id).map_or(0.0, |b| b.mean),
            VaMode::SampledBelief => {
                let belief = inputs
                    .beliefs
                    .get(&m.id)
                    .copied()
                    .unwrap_or(GaussianBelief::prior(0.0));
                sample_va(belief, rng)
            }
        };
        vas.insert(m.id.clone(), va);
    }

    let graph = build_state_graph(std::slice::from_ref(&real), &shadows, roster, &vas)?;
    let instance = qp::build_qp(&graph, lambda, inputs.horizon, penalty)?;
    let solution = qp::solve(&instance, inputs.solver_tol)?;
    if solution.status != SolveStatus::Optimal {
        if let Some(dir) = std::env::var_os("MEDASSIGN_DUMP_QP") {
            let path = std::path::Path::new(&dir).join("failing.qp");
            let _ = std::fs::write(path, qp::write_qp_text(&instance));
        }
        return Err(Error::SolverFailure {
            status: "max-iterations".into(),
            detail: format!("KKT residual {:.3e} above {:.3e}", solution.kkt.max(), inputs.solver_tol),
        });
    }

    let real_edges = graph.case_edges(0);
    let rule = std::env::var("MEDASSIGN_TIE_RULE").unwrap_or_default();
    let best = real_edges
        .iter()
        .map(|&e| solution.x[e])
        .fold(f64::NEG_INFINITY, f64::max);
    let tie_tol = match rule.as_str() {
        "argmax" => 1e-9,
        "face" => 0.02,
        _ => f64::NAN, // reduced-cost rule below
    };
    let mut tied: Vec<usize> = if tie_tol.is_nan() {
        let alpha = solution
            .duals_c1
            .iter()
            .find(|&&(c, _)| c == 0)
            .map_or(0.0, |&(_, v)| v);
        let reduced = |e: usize| -> f64 {
            let u = graph.edges[e].mediator;
            alpha + solution.dual_c3(u, instance.horizon) - graph.edges[e].weight
        };
        real_edges
            .iter()
            .copied()
            .filter(|&e| reduced(e).abs() <= inputs.solver_tol)
            .collect()
    } else {
        real_edges
            .iter()
            .copied()
            .filter(|&e| solution.x[e] >= best - tie_tol)
            .collect()
    };
    if tied.is_empty() {
        tied = real_edges
            .iter()
            .copied()
            .filter(|&e| solution.x[e] >= best - 1e-9)
            .collect();
    }
    let min_load = tied
        .iter()
        .map(|&e| graph.loads[graph.edges[e].mediator])
        .min()
        .unwrap();
    let final_tied: Vec<usize> = tied
        .into_iter()
        .filter(|&e| graph.loads[graph.edges[e].mediator] == min_load)
        .collect();
    let edge = *final_tied.choose(rng).unwrap();

    let prices = qp::extract_shadow_prices(&instance, &solution);
    Ok(PolicyDecision {
        mediator: graph.mediators[graph.edges[edge].mediator].clone(),
        fractional: Some(
            real_edges
                .iter()
                .map(|&e| {
                    (
                        graph.mediators[graph.edges[e].mediator].clone(),
                        solution.x[e],
                    )
                })
                .collect(),
        ),
        shadow_prices: Some(
            graph
                .mediators
                .iter()
                .cloned()
                .zip(prices.iter().copied())
                .collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Cell;
    use crate::sim::CellParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn mediator(id: &str, cells: &[(u32, u32)], cap: u32, load: u32, va: f64) -> MediatorProfile {
        MediatorProfile {
            id: id.to_string(),
            accredited_cells: cells.iter().map(|&(t, s)| Cell::new(t, s)).collect(),
            capacity: cap,
            load,
            true_va: Some(va),
        }
    }

    fn arriving(cell: (u32, u32)) -> CaseRecord {
        CaseRecord {
            id: "r1".into(),
            cell: Cell::new(cell.0, cell.1),
            p: 0.5,
            arrival_time: 12.0,
            referral_mode: 1,
            period: 1,
            assigned_mediator: None,
            outcome: None,
            conclusion_time: None,
            is_shadow: false,
        }
    }

    fn beliefs_from(roster: &[MediatorProfile], var: f64) -> BTreeMap<String, GaussianBelief> {
        roster
            .iter()
            .map(|m| {
                (
                    m.id.clone(),
                    GaussianBelief::new(m.true_va.unwrap_or(0.0), var),
                )
            })
            .collect()
    }

    fn empty_arrivals() -> ArrivalModel {
        ArrivalModel {
            cells: BTreeMap::new(),
        }
    }

    fn two_cell_arrivals(rate: f64) -> ArrivalModel {
        ArrivalModel {
            cells: [
                (Cell::new(1, 1), CellParams { rate, base_p: 0.5 }),
                (Cell::new(1, 2), CellParams { rate, base_p: 0.5 }),
            ]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn least_load_prefers_idle_and_respects_accreditation() {
        let roster = vec![
            mediator("m1", &[(1, 1)], 3, 2, 0.1),
            mediator("m2", &[(1, 1)], 3, 0, 0.0),
            mediator("m3", &[(2, 2)], 3, 0, 0.3),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = least_load_assign(&arriving((1, 1)), &roster, &mut rng).unwrap();
        assert_eq!(d.mediator, "m2");
        let err = least_load_assign(&arriving((9, 9)), &roster, &mut rng).unwrap_err();
        assert!(matches!(err, Error::AccreditationGap { .. }));
    }

    #[test]
    fn least_load_ties_are_uniformly_random() {
        let roster = vec![
            mediator("m1", &[(1, 1)], 3, 1, 0.0),
            mediator("m2", &[(1, 1)], 3, 1, 0.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = BTreeSet::new();
        for _ in 0..50 {
            seen.insert(
                least_load_assign(&arriving((1, 1)), &roster, &mut rng)
                    .unwrap()
                    .mediator,
            );
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn greedy_sets_aside_mediators_at_capacity() {
        // m1 has the best mean but sits at capacity; m2 is below capacity.
        let roster = vec![
            mediator("m1", &[(1, 1)], 3, 3, 0.1),
            mediator("m2", &[(1, 1)], 3, 2, 0.02),
        ];
        let beliefs = beliefs_from(&roster, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = greedy_star_assign(&arriving((1, 1)), &roster, &beliefs, &mut rng).unwrap();
        assert_eq!(d.mediator, "m2");

        // Once everyone is at capacity, the best mean wins again.
        let roster2 = vec![
            mediator("m1", &[(1, 1)], 3, 3, 0.1),
            mediator("m2", &[(1, 1)], 3, 3, 0.02),
        ];
        let d = greedy_star_assign(&arriving((1, 1)), &roster2, &beliefs, &mut rng).unwrap();
        assert_eq!(d.mediator, "m1");

        // Overload tiers are graded: two-over loses to one-over.
        let roster3 = vec![
            mediator("m1", &[(1, 1)], 3, 5, 0.1),
            mediator("m2", &[(1, 1)], 3, 4, 0.02),
        ];
        let d = greedy_star_assign(&arriving((1, 1)), &roster3, &beliefs, &mut rng).unwrap();
        assert_eq!(d.mediator, "m2");
    }

    #[test]
    fn thompson_explores_uncertain_mediators() {
        let roster = vec![
            mediator("m1", &[(1, 1)], 3, 0, 0.05),
            mediator("m2", &[(1, 1)], 3, 0, 0.0),
        ];
        // Wide beliefs with equal means: both should get picked sometimes.
        let beliefs: BTreeMap<String, GaussianBelief> = roster
            .iter()
            .map(|m| (m.id.clone(), GaussianBelief::new(0.0, 0.0121)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = BTreeSet::new();
        for _ in 0..50 {
            seen.insert(
                thompson_star_assign(&arriving((1, 1)), &roster, &beliefs, &mut rng)
                    .unwrap()
                    .mediator,
            );
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn upper_bound_ignores_load_and_breaks_ties_by_id() {
        let roster = vec![
            mediator("m1", &[(1, 1)], 3, 9, 0.1),
            mediator("m2", &[(1, 1)], 3, 0, 0.1),
            mediator("m3", &[(1, 1)], 3, 0, 0.05),
        ];
        let d = upper_bound_assign(&arriving((1, 1)), &roster).unwrap();
        assert_eq!(d.mediator, "m1");
        let no_va = vec![MediatorProfile {
            true_va: None,
            ..mediator("m1", &[(1, 1)], 3, 0, 0.0)
        }];
        assert!(upper_bound_assign(&arriving((1, 1)), &no_va).is_err());
    }

    #[test]
    fn shadow_sampling_is_deterministic_and_in_range() {
        let arrivals = two_cell_arrivals(0.5);
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        let s1 = sample_shadow_cases(&arrivals, 10, &mut a).unwrap();
        let s2 = sample_shadow_cases(&arrivals, 10, &mut b).unwrap();
        assert_eq!(s1, s2);
        assert!(!s1.is_empty());
        for s in &s1 {
            assert!(s.is_shadow);
            assert!(s.arrival_time >= 1.0 && s.arrival_time <= 10.0);
            assert_eq!(s.arrival_time.fract(), 0.0);
        }
        // Expected count is rate * horizon per cell.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let total: usize = (0..200)
            .map(|_| sample_shadow_cases(&arrivals, 10, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 10.0).abs() < 1.0, "mean shadow count {mean}");
    }

    #[test]
    fn smart_known_balances_va_against_overload() {
        let roster = vec![
            mediator("m1", &[(1, 1), (1, 2)], 3, 3, 0.1),
            mediator("m2", &[(1, 1)], 3, 0, 0.0),
        ];
        let beliefs = beliefs_from(&roster, 1e-6);
        let arrivals = empty_arrivals(); // no shadow competition
        let inputs = DecisionInputs {
            roster: &roster,
            beliefs: &beliefs,
            arrivals: &arrivals,
            horizon: 10,
            solver_tol: 1e-6,
        };
        let case = arriving((1, 1));
        // Strong penalty: avoid overloading m1 despite its higher VA.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = smart_assign(&case, &inputs, VaMode::Known, 1.0, PenaltyKind::Quadratic, &mut rng)
            .unwrap();
        assert_eq!(d.mediator, "m2");
        // Negligible penalty: chase the VA.
        let d = smart_assign(
            &case,
            &inputs,
            VaMode::Known,
            1e-4,
            PenaltyKind::Quadratic,
            &mut rng,
        )
        .unwrap();
        assert_eq!(d.mediator, "m1");
        let frac = d.fractional.unwrap();
        let total: f64 = frac.iter().map(|(_, x)| x).sum();
        assert!((total - 1.0).abs() < 1e-6);
        for (_, price) in d.shadow_prices.unwrap() {
            assert!(price >= -1e-8);
        }
    }

    #[test]
    fn smart_mean_with_point_beliefs_matches_known_mode() {
        let roster = vec![
            mediator("m1", &[(1, 1), (1, 2)], 3, 1, 0.1),
            mediator("m2", &[(1, 1)], 3, 0, 0.05),
            mediator("m3", &[(1, 2)], 3, 2, -0.1),
        ];
        let beliefs = beliefs_from(&roster, 1e-12);
        let arrivals = two_cell_arrivals(0.4);
        let inputs = DecisionInputs {
            roster: &roster,
            beliefs: &beliefs,
            arrivals: &arrivals,
            horizon: 10,
            solver_tol: 1e-6,
        };
        for seed in 0..10u64 {
            let case = arriving((1, 1));
            let mut rng_a = ChaCha8Rng::seed_from_u64(seed);
            let mut rng_b = ChaCha8Rng::seed_from_u64(seed);
            let a = smart_assign(
                &case,
                &inputs,
                VaMode::Known,
                0.05,
                PenaltyKind::Quadratic,
                &mut rng_a,
            )
            .unwrap();
            let b = smart_assign(
                &case,
                &inputs,
                VaMode::MeanBelief,
                0.05,
                PenaltyKind::Quadratic,
                &mut rng_b,
            )
            .unwrap();
            assert_eq!(a.mediator, b.mediator, "diverged at seed {seed}");
        }
    }

    #[test]
    fn policies_always_pick_accredited_mediators() {
        let roster = vec![
            mediator("m1", &[(1, 1), (1, 2)], 2, 1, 0.1),
            mediator("m2", &[(1, 2)], 2, 0, 0.2),
            mediator("m3", &[(1, 1)], 1, 5, -0.05),
        ];
        let beliefs = beliefs_from(&roster, 0.0121);
        let arrivals = two_cell_arrivals(0.3);
        let inputs = DecisionInputs {
            roster: &roster,
            beliefs: &beliefs,
            arrivals: &arrivals,
            horizon: 10,
            solver_tol: 1e-6,
        };
        let case = arriving((1, 1));
        let allowed: BTreeSet<&str> = ["m1", "m3"].into();
        let policies = [
            PolicySpec::LeastLoad,
            PolicySpec::GreedyStar,
            PolicySpec::ThompsonStar,
            PolicySpec::UpperBound,
            PolicySpec::Smart {
                mode: VaMode::SampledBelief,
                lambda: 0.05,
                penalty: PenaltyKind::Quadratic,
            },
            PolicySpec::Smart {
                mode: VaMode::MeanBelief,
                lambda: 0.5,
                penalty: PenaltyKind::Linear,
            },
        ];
        for (i, policy) in policies.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            for _ in 0..5 {
                let d = decide(policy, &case, &inputs, &mut rng).unwrap();
                assert!(allowed.contains(d.mediator.as_str()), "{policy:?} chose {}", d.mediator);
            }
        }
    }

    #[test]
    fn labels_are_stable() {
        assert_eq!(PolicySpec::LeastLoad.label(), "least_load");
        let smart = PolicySpec::Smart {
            mode: VaMode::SampledBelief,
            lambda: 0.1,
            penalty: PenaltyKind::Quadratic,
        };
        assert_eq!(smart.label(), "smart-sampled");
        assert_eq!(smart.lambda(), Some(0.1));
        assert!(smart.uses_beliefs());
        assert!(!PolicySpec::UpperBound.uses_beliefs());
    }
}
