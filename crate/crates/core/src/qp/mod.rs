//! Soft-capacity assignment QP.
//!
//! Over the bipartite state graph, fractional assignment weights `x_e` and
//! per-mediator overload slacks `xi_u` solve
//!
//! ```text
//! maximize   sum_e x_e (va_u + p_v)  -  lambda * sum_u xi_u^2
//! s.t.  C1   sum_{e in E(v)} x_e  = 1          for every real case v
//!       C2   sum_{e in E(v)} x_e <= 1          for every shadow case v
//!       C3   L(u) + sum_{e in E(u), ta(v) <= t} x_e <= C(u) + xi_u
//!                                              for every u, t in 1..=T
//!       C4   0 <= x_e <= 1
//!       C5   0 <= xi_u <= L(u) + 1
//! ```
//!
//! The linear variant replaces the quadratic penalty with
//! `lambda * sum_u xi_u * L(u)`. Arrival indicators are cumulative in `t`,
//! so C3 rows with identical edge patterns collapse into one class, and the
//! class containing `t = T` implies every other row of the same mediator
//! (all `x_e >= 0`); the backend therefore solves one C3 row per mediator
//! while feasibility and KKT checks run against the full materialized set.

mod solve;
mod text;

pub use solve::solve;
pub use text::{parse_qp_text, write_qp_text};

use serde::{Deserialize, Serialize};

use crate::domain::StateGraph;
use crate::error::{Error, Result};

/// Overload penalty form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyKind {
    /// `lambda * sum_u xi_u^2`.
    Quadratic,
    /// `lambda * sum_u xi_u * L(u)`: linear surrogate whose per-unit cost
    /// grows with the load the mediator already carries.
    Linear,
}

/// One deduplicated C3 constraint class: every timestep in `timesteps`
/// shares the same cumulative-arrival edge pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C3Class {
    pub mediator: usize,
    /// Edge indices with arrival time inside the class's window, ascending.
    pub edges: Vec<usize>,
    /// Timesteps (ascending) whose pattern equals `edges`.
    pub timesteps: Vec<u32>,
}

/// A fully materialized assignment program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpInstance {
    pub graph: StateGraph,
    pub lambda: f64,
    pub horizon: u32,
    pub penalty: PenaltyKind,
    /// C3 classes grouped per mediator, mediators ascending.
    pub c3: Vec<C3Class>,
}

/// Builds the program for a state graph.
pub fn build_qp(
    graph: &StateGraph,
    lambda: f64,
    horizon: u32,
    penalty: PenaltyKind,
) -> Result<QpInstance> {
    if horizon < 1 {
        return Err(Error::InvalidHorizon(horizon));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Value(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    for (ci, &shadow) in graph.case_is_shadow.iter().enumerate() {
        let t = graph.case_arrivals[ci];
        let ok = if shadow {
            t > 0.0 && t <= f64::from(horizon)
        } else {
            (0.0..=f64::from(horizon)).contains(&t)
        };
        if !ok {
            return Err(Error::Value(format!(
                "case {} arrival {t} outside the {horizon}-day horizon",
                graph.cases[ci]
            )));
        }
        if !shadow && !graph.edges.iter().any(|e| e.case == ci) {
            return Err(Error::Infeasible {
                case: graph.cases[ci].clone(),
            });
        }
    }

    let mut c3 = Vec::new();
    for u in 0..graph.mediators.len() {
        let incident = graph.mediator_edges(u);
        let mut classes: Vec<C3Class> = Vec::new();
        for t in 1..=horizon {
            let pattern: Vec<usize> = incident
                .iter()
                .copied()
                .filter(|&e| graph.case_arrivals[graph.edges[e].case] <= f64::from(t))
                .collect();
            match classes.last_mut() {
                Some(last) if last.edges == pattern => last.timesteps.push(t),
                _ => classes.push(C3Class {
                    mediator: u,
                    edges: pattern,
                    timesteps: vec![t],
                }),
            }
        }
        c3.extend(classes);
    }

    Ok(QpInstance {
        graph: graph.clone(),
        lambda,
        horizon,
        penalty,
        c3,
    })
}

impl QpInstance {
    pub fn n_edges(&self) -> usize {
        self.graph.edges.len()
    }

    pub fn n_mediators(&self) -> usize {
        self.graph.mediators.len()
    }

    /// Count of materialized `(mediator, t)` C3 rows before deduplication.
    pub fn c3_row_count(&self) -> usize {
        self.c3.iter().map(|c| c.timesteps.len()).sum()
    }

    /// Count of deduplicated C3 classes.
    pub fn c3_class_count(&self) -> usize {
        self.c3.len()
    }

    /// Objective in maximize form at a candidate point.
    pub fn objective(&self, x: &[f64], xi: &[f64]) -> f64 {
        let reward: f64 = self
            .graph
            .edges
            .iter()
            .zip(x)
            .map(|(e, &v)| e.weight * v)
            .sum();
        let penalty: f64 = match self.penalty {
            PenaltyKind::Quadratic => xi.iter().map(|&s| s * s).sum(),
            PenaltyKind::Linear => xi
                .iter()
                .enumerate()
                .map(|(u, &s)| s * f64::from(self.graph.loads[u]))
                .sum(),
        };
        reward - self.lambda * penalty
    }

    /// For each mediator, the class containing the final timestep; its edge
    /// pattern spans all incident edges and dominates the other rows.
    fn maximal_class(&self, mediator: usize) -> Option<&C3Class> {
        self.c3
            .iter()
            .find(|c| c.mediator == mediator && c.timesteps.last() == Some(&self.horizon))
    }
}

/// Status reported by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// KKT residuals verified within the requested tolerance.
    Optimal,
    /// Backend stopped early; the returned iterate is its best point.
    MaxIterations,
}

/// Dual value attributed to one materialized C3 row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C3Dual {
    pub mediator: usize,
    pub timestep: u32,
    pub value: f64,
}

/// Primal and dual solution of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// Assignment weights per graph edge.
    pub x: Vec<f64>,
    /// Overload slacks per graph mediator.
    pub xi: Vec<f64>,
    /// Maximize-form objective value.
    pub objective: f64,
    /// Equality duals per real case `(case index, value)`.
    pub duals_c1: Vec<(usize, f64)>,
    /// Inequality duals per shadow case `(case index, value >= 0)`.
    pub duals_c2: Vec<(usize, f64)>,
    /// Nonzero C3 duals; rows not listed carry zero.
    pub duals_c3: Vec<C3Dual>,
    pub status: SolveStatus,
    pub kkt: KktReport,
}

impl QpSolution {
    /// Dual of the `(mediator, timestep)` C3 row; zero when unlisted.
    pub fn dual_c3(&self, mediator: usize, timestep: u32) -> f64 {
        self.duals_c3
            .iter()
            .find(|d| d.mediator == mediator && d.timestep == timestep)
            .map_or(0.0, |d| d.value)
    }
}

/// Per-mediator shadow price: the summed duals of the mediator's C3 rows,
/// aligned with `instance.graph.mediators`.
pub fn extract_shadow_prices(instance: &QpInstance, solution: &QpSolution) -> Vec<f64> {
    let mut prices = vec![0.0; instance.n_mediators()];
    for d in &solution.duals_c3 {
        prices[d.mediator] += d.value;
    }
    prices
}

/// Max-norm KKT residuals of a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Projected-gradient residual; box multipliers are implicit.
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementarity)
    }
}

/// Checks a candidate solution against the full materialized constraint set.
pub fn verify_kkt(instance: &QpInstance, solution: &QpSolution) -> KktReport {
    let g = &instance.graph;
    let ne = g.edges.len();
    let nu = g.mediators.len();
    assert_eq!(solution.x.len(), ne, "x length mismatch");
    assert_eq!(solution.xi.len(), nu, "xi length mismatch");

    // Gradient of the minimize-form Lagrangian, excluding box multipliers.
    let mut grad_x = vec![0.0f64; ne];
    let mut grad_xi = vec![0.0f64; nu];
    for (e, edge) in g.edges.iter().enumerate() {
        grad_x[e] = -edge.weight;
    }
    for u in 0..nu {
        grad_xi[u] = match instance.penalty {
            PenaltyKind::Quadratic => 2.0 * instance.lambda * solution.xi[u],
            PenaltyKind::Linear => instance.lambda * f64::from(g.loads[u]),
        };
    }
    for &(case, dual) in solution.duals_c1.iter().chain(&solution.duals_c2) {
        for (e, edge) in g.edges.iter().enumerate() {
            if edge.case == case {
                grad_x[e] += dual;
            }
        }
    }
    for d in &solution.duals_c3 {
        grad_xi[d.mediator] -= d.value;
        if let Some(class) = instance
            .c3
            .iter()
            .find(|c| c.mediator == d.mediator && c.timesteps.contains(&d.timestep))
        {
            for &e in &class.edges {
                grad_x[e] += d.value;
            }
        }
    }

    let mut stationarity = 0.0f64;
    for e in 0..ne {
        // x is projected onto [0, inf) only: the unit cap is already carried
        // by the edge's case row, and clamping at 1 as well would let the
        // implicit box multiplier absorb a reward the case dual must claim.
        let z = solution.x[e];
        stationarity = stationarity.max((z - (z - grad_x[e]).max(0.0)).abs());
    }
    for u in 0..nu {
        let z = solution.xi[u];
        let hi = f64::from(g.loads[u]) + 1.0;
        stationarity = stationarity.max((z - (z - grad_xi[u]).clamp(0.0, hi)).abs());
    }

    let mut primal = 0.0f64;
    let mut dual = 0.0f64;
    let mut comp = 0.0f64;
    let case_sums: Vec<f64> = (0..g.cases.len())
        .map(|c| {
            g.edges
                .iter()
                .zip(&solution.x)
                .filter(|(e, _)| e.case == c)
                .map(|(_, &v)| v)
                .sum()
        })
        .collect();
    for &(case, dual_v) in &solution.duals_c1 {
        primal = primal.max((case_sums[case] - 1.0).abs());
        let _ = dual_v; // equality duals are sign-free
    }
    for &(case, dual_v) in &solution.duals_c2 {
        let slack = 1.0 - case_sums[case];
        primal = primal.max(-slack);
        dual = dual.max(-dual_v);
        comp = comp.max((dual_v * slack).abs());
    }
    for class in &instance.c3 {
        let u = class.mediator;
        let lhs: f64 = f64::from(g.loads[u]) + class.edges.iter().map(|&e| solution.x[e]).sum::<f64>();
        let rhs = f64::from(g.capacities[u]) + solution.xi[u];
        primal = primal.max(lhs - rhs);
        for &t in &class.timesteps {
            let y = solution.dual_c3(u, t);
            dual = dual.max(-y);
            comp = comp.max((y * (rhs - lhs)).abs());
        }
    }
    for &xv in &solution.x {
        primal = primal.max(-xv).max(xv - 1.0);
    }
    for (u, &s) in solution.xi.iter().enumerate() {
        primal = primal.max(-s).max(s - (f64::from(g.loads[u]) + 1.0));
    }

    KktReport {
        stationarity,
        primal_feasibility: primal.max(0.0),
        dual_feasibility: dual.max(0.0),
        complementarity: comp,
    }
}

/// Deterministic feasible point for single-real-case instances.
///
/// Routes the real case fully onto its first incident edge and sets each
/// slack to exactly the overload that forces: `(L + 1 - C)+` for the
/// receiving mediator, `(L - C)+` for everyone else (mediators can already
/// be overloaded before the solve).
pub fn feasible_point(instance: &QpInstance) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = &instance.graph;
    let real: Vec<usize> = (0..g.cases.len()).filter(|&c| !g.case_is_shadow[c]).collect();
    if real.len() != 1 {
        return Err(Error::Value(format!(
            "feasible point construction needs exactly one real case, got {}",
            real.len()
        )));
    }
    let e_star = g
        .edges
        .iter()
        .position(|e| e.case == real[0])
        .ok_or_else(|| Error::Infeasible {
            case: g.cases[real[0]].clone(),
        })?;
    let u_star = g.edges[e_star].mediator;
    let mut x = vec![0.0; g.edges.len()];
    x[e_star] = 1.0;
    let mut xi = vec![0.0; g.mediators.len()];
    for u in 0..g.mediators.len() {
        let extra = u32::from(u == u_star);
        xi[u] = f64::from((g.loads[u] + extra).saturating_sub(g.capacities[u]));
    }
    Ok((x, xi))
}

/// Exhaustive optimum over integral assignments (`x_e` in `{0, 1}`), the
/// oracle that [`solve`] must weakly dominate. Slacks take their minimal
/// feasible value; assignments needing a slack above `L + 1` are skipped.
pub struct BruteForceResult {
    pub objective: f64,
    /// Chosen edge per case; `None` for unassigned shadow cases.
    pub assignment: Vec<Option<usize>>,
}

pub fn brute_force_integral_optimum(instance: &QpInstance) -> Result<BruteForceResult> {
    const LIMIT: f64 = 2e6;
    let g = &instance.graph;
    let mut options: Vec<Vec<Option<usize>>> = Vec::new();
    for c in 0..g.cases.len() {
        let edges = g.case_edges(c);
        let mut opts: Vec<Option<usize>> = Vec::new();
        if g.case_is_shadow[c] {
            opts.push(None);
        } else if edges.is_empty() {
            return Err(Error::Infeasible {
                case: g.cases[c].clone(),
            });
        }
        opts.extend(edges.into_iter().map(Some));
        options.push(opts);
    }
    let combos: f64 = options.iter().map(|o| o.len() as f64).product();
    if combos > LIMIT {
        return Err(Error::TooLarge {
            combinations: combos,
            limit: LIMIT,
        });
    }

    let mut best: Option<BruteForceResult> = None;
    let mut choice = vec![0usize; options.len()];
    loop {
        let assignment: Vec<Option<usize>> =
            choice.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        if let Some(obj) = integral_objective(instance, &assignment) {
            if best.as_ref().is_none_or(|b| obj > b.objective + 1e-15) {
                best = Some(BruteForceResult {
                    objective: obj,
                    assignment,
                });
            }
        }
        // Odometer increment over the per-case option lists.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                let best = best.ok_or_else(|| Error::Value(
                    "no integral assignment satisfies the slack bound".into(),
                ))?;
                return Ok(best);
            }
            choice[pos] += 1;
            if choice[pos] < options[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Objective of an integral assignment with minimal slacks, or `None` if a
/// mediator would need slack above its `L + 1` cap.
fn integral_objective(instance: &QpInstance, assignment: &[Option<usize>]) -> Option<f64> {
    let g = &instance.graph;
    let mut counts = vec![0u32; g.mediators.len()];
    let mut reward = 0.0;
    for &edge in assignment.iter().flatten() {
        counts[g.edges[edge].mediator] += 1;
        reward += g.edges[edge].weight;
    }
    let mut penalty = 0.0;
    for (u, &n) in counts.iter().enumerate() {
        let xi = f64::from((g.loads[u] + n).saturating_sub(g.capacities[u]));
        if xi > f64::from(g.loads[u]) + 1.0 {
            return None;
        }
        penalty += match instance.penalty {
            PenaltyKind::Quadratic => xi * xi,
            PenaltyKind::Linear => xi * f64::from(g.loads[u]),
        };
    }
    Some(reward - instance.lambda * penalty)
}

#[cfg(test)]
pub(crate) mod test_support;

#[cfg(test)]
mod tests {
    use super::test_support::{micro_graph, single_case_graph};
    use super::*;

    #[test]
    fn single_pair_instance_counts_rows() {
        let g = single_case_graph(0.1, 0.5, 0, 3);
        let inst = build_qp(&g, 1.0, 10, PenaltyKind::Quadratic).unwrap();
        assert_eq!(inst.n_edges(), 1);
        assert_eq!(inst.c3_row_count(), 10);
        assert_eq!(inst.c3_class_count(), 1);
        assert_eq!(inst.c3[0].timesteps, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn shadow_arrivals_split_c3_classes() {
        // Real case at 0 and one shadow at day 4 sharing the mediator:
        // patterns {real} for t in 1..=3 and {real, shadow} for t in 4..=10.
        let g = micro_graph();
        let inst = build_qp(&g, 0.5, 10, PenaltyKind::Quadratic).unwrap();
        let m0: Vec<&C3Class> = inst.c3.iter().filter(|c| c.mediator == 0).collect();
        assert_eq!(m0.len(), 2);
        assert_eq!(m0[0].timesteps, vec![1, 2, 3]);
        assert_eq!(m0[1].timesteps, (4..=10).collect::<Vec<_>>());
        assert!(m0[0].edges.len() < m0[1].edges.len());
        assert_eq!(inst.c3_row_count(), 10 * g.mediators.len());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let g = single_case_graph(0.1, 0.5, 0, 3);
        assert!(matches!(
            build_qp(&g, 1.0, 0, PenaltyKind::Quadratic),
            Err(Error::InvalidHorizon(0))
        ));
        assert!(build_qp(&g, -0.5, 10, PenaltyKind::Quadratic).is_err());
        assert!(build_qp(&g, f64::NAN, 10, PenaltyKind::Quadratic).is_err());
    }

    #[test]
    fn real_case_without_edge_is_infeasible() {
        let mut g = single_case_graph(0.1, 0.5, 0, 3);
        g.edges.clear();
        let err = build_qp(&g, 1.0, 10, PenaltyKind::Quadratic).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn feasible_point_routes_first_edge_and_covers_overload() {
        let mut g = micro_graph();
        g.loads = vec![5, 2, 0];
        g.capacities = vec![3, 2, 1];
        let inst = build_qp(&g, 0.1, 10, PenaltyKind::Quadratic).unwrap();
        let (x, xi) = feasible_point(&inst).unwrap();
        assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(x[0], 1.0);
        let u_star = inst.graph.edges[0].mediator;
        for u in 0..g.mediators.len() {
            let extra = u32::from(u == u_star);
            let expect = f64::from((g.loads[u] + extra).saturating_sub(g.capacities[u]));
            assert_eq!(xi[u], expect);
            assert!(xi[u] <= f64::from(g.loads[u]) + 1.0);
        }
        // All constraint classes hold exactly.
        for class in &inst.c3 {
            let u = class.mediator;
            let lhs =
                f64::from(g.loads[u]) + class.edges.iter().map(|&e| x[e]).sum::<f64>();
            assert!(lhs <= f64::from(g.capacities[u]) + xi[u] + 1e-15);
        }
    }

    #[test]
    fn brute_force_picks_best_mediator() {
        // One real case, two mediators: va 0.1 at load 3/cap 3 versus va
        // 0.0 at load 0/cap 3. With lambda = 1 the overload penalty (1.0)
        // dwarfs the va edge (0.1), so the idle mediator wins.
        let mut g = micro_graph();
        g.loads = vec![3, 0, 0];
        let inst = build_qp(&g, 1.0, 10, PenaltyKind::Quadratic).unwrap();
        let res = brute_force_integral_optimum(&inst).unwrap();
        let chosen = res.assignment[0].map(|e| inst.graph.edges[e].mediator);
        assert_eq!(chosen, Some(1));
    }

    #[test]
    fn brute_force_respects_slack_cap() {
        // Capacity 0 at load 0: slack cap is 1, so the mediator can absorb
        // only one of the two cases; the real one must be it.
        let g = crate::qp::test_support::tight_capacity_graph();
        let inst = build_qp(&g, 0.0, 10, PenaltyKind::Quadratic).unwrap();
        let res = brute_force_integral_optimum(&inst).unwrap();
        assert_eq!(res.assignment[0], Some(0));
        assert_eq!(res.assignment[1], None);
    }

    #[test]
    fn kkt_flags_perturbed_primal() {
        let g = single_case_graph(0.1, 0.5, 0, 3);
        let inst = build_qp(&g, 1.0, 10, PenaltyKind::Quadratic).unwrap();
        // Hand-constructed optimum: x = 1, xi = 0, C1 dual 0.6 absorbs the
        // whole edge reward; all residuals vanish.
        let sol = QpSolution {
            x: vec![1.0],
            xi: vec![0.0],
            objective: 0.6,
            duals_c1: vec![(0, 0.6)],
            duals_c2: vec![],
            duals_c3: vec![],
            status: SolveStatus::Optimal,
            kkt: KktReport {
                stationarity: 0.0,
                primal_feasibility: 0.0,
                dual_feasibility: 0.0,
                complementarity: 0.0,
            },
        };
        let clean = verify_kkt(&inst, &sol);
        assert_eq!(clean.max(), 0.0);

        let mut bumped = sol.clone();
        bumped.x[0] = 1.1;
        let report = verify_kkt(&inst, &bumped);
        assert!((report.primal_feasibility - 0.1).abs() < 1e-12);

        // A feasible but non-optimal point shows a stationarity residual.
        let mut idle = sol;
        idle.x[0] = 1.0;
        idle.duals_c1 = vec![(0, 0.0)];
        let report = verify_kkt(&inst, &idle);
        assert!(report.stationarity > 0.1);
    }
}
