//! Core entities: cells, mediators, case records, and the bipartite state
//! graph connecting an arriving case (plus sampled future cases) to the
//! mediators accredited to take them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (case type, station) pair. Every case belongs to exactly one cell and
/// every mediator is accredited for a set of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub case_type: u32,
    pub station: u32,
}

impl Cell {
    pub fn new(case_type: u32, station: u32) -> Self {
        Cell { case_type, station }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}s{}", self.case_type, self.station)
    }
}

/// A mediator: accreditation set, soft capacity, current open-case load, and
/// (for synthetic data) the true value added used to sample outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorProfile {
    pub id: String,
    pub accredited_cells: BTreeSet<Cell>,
    pub capacity: u32,
    pub load: u32,
    /// Known only in synthetic corpora; `None` for real rosters.
    pub true_va: Option<f64>,
}

impl MediatorProfile {
    pub fn is_accredited(&self, cell: Cell) -> bool {
        self.accredited_cells.contains(&cell)
    }
}

/// One mediation case. Shadow cases are hypothetical future arrivals sampled
/// by the assignment policy; they never carry outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub cell: Cell,
    /// Baseline resolution probability for an average mediator.
    pub p: f64,
    /// Arrival time in days. Relative to the solve for shadow cases.
    pub arrival_time: f64,
    pub referral_mode: u32,
    pub period: u32,
    pub assigned_mediator: Option<String>,
    pub outcome: Option<bool>,
    pub conclusion_time: Option<f64>,
    pub is_shadow: bool,
}

impl CaseRecord {
    /// Checks the record's internal consistency (probability range, time order).
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || !self.p.is_finite() {
            return Err(Error::InvalidProbability(self.p));
        }
        if let Some(c) = self.conclusion_time {
            if c < self.arrival_time {
                return Err(Error::Value(format!(
                    "case {}: conclusion time {c} precedes arrival {}",
                    self.id, self.arrival_time
                )));
            }
        }
        if self.is_shadow && (self.outcome.is_some() || self.conclusion_time.is_some()) {
            return Err(Error::Value(format!(
                "shadow case {} cannot carry an outcome or conclusion",
                self.id
            )));
        }
        Ok(())
    }
}

/// Ids of roster mediators accredited for the case's cell, in roster order.
pub fn accredited_mediators<'a>(case: &CaseRecord, roster: &'a [MediatorProfile]) -> Vec<&'a str> {
    roster
        .iter()
        .filter(|m| m.is_accredited(case.cell))
        .map(|m| m.id.as_str())
        .collect()
}

/// An edge `(mediator, case)` of the state graph, indexed into
/// [`StateGraph::mediators`] and [`StateGraph::cases`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub mediator: usize,
    pub case: usize,
    /// `va(mediator) + p(case)`: expected resolution probability of the pair.
    pub weight: f64,
}

/// Bipartite graph over one or more real cases, sampled shadow cases, and
/// every mediator accredited for at least one of them. Also snapshots the
/// per-mediator load, capacity, and VA used to weight edges, so an instance
/// is self-contained for the QP builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGraph {
    /// Mediator ids, sorted; only mediators with at least one edge appear.
    pub mediators: Vec<String>,
    pub loads: Vec<u32>,
    pub capacities: Vec<u32>,
    pub vas: Vec<f64>,
    /// Real cases first (input order), then shadow cases (input order).
    pub cases: Vec<String>,
    pub case_cells: Vec<Cell>,
    pub case_ps: Vec<f64>,
    /// Arrival offsets in days relative to the solve; 0 for real cases.
    pub case_arrivals: Vec<f64>,
    pub case_is_shadow: Vec<bool>,
    /// Sorted by `(case, mediator)`.
    pub edges: Vec<GraphEdge>,
}

impl StateGraph {
    pub fn mediator_index(&self, id: &str) -> Option<usize> {
        self.mediators.binary_search_by(|m| m.as_str().cmp(id)).ok()
    }

    /// Edge indices incident to a case, ascending.
    pub fn case_edges(&self, case: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].case == case)
            .collect()
    }

    /// Edge indices incident to a mediator, ascending.
    pub fn mediator_edges(&self, mediator: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].mediator == mediator)
            .collect()
    }

    pub fn n_real_cases(&self) -> usize {
        self.case_is_shadow.iter().filter(|&&s| !s).count()
    }
}

/// Builds the state graph for one assignment decision.
///
/// `vas` supplies the resolved VA per mediator id (true value, belief mean,
/// or belief sample depending on the caller); mediators missing from `vas`
/// are treated as VA 0. Real cases must each have at least one accredited
/// mediator; shadow cases without mediators are kept edgeless, since they
/// may legally go unassigned.
pub fn build_state_graph(
    real_cases: &[CaseRecord],
    shadow_cases: &[CaseRecord],
    roster: &[MediatorProfile],
    vas: &BTreeMap<String, f64>,
) -> Result<StateGraph> {
    for case in real_cases.iter().chain(shadow_cases) {
        case.validate()?;
    }

    // Mediators accredited for at least one included case, sorted by id.
    let mut used: BTreeMap<&str, &MediatorProfile> = BTreeMap::new();
    for m in roster {
        if real_cases
            .iter()
            .chain(shadow_cases)
            .any(|c| m.is_accredited(c.cell))
        {
            used.insert(m.id.as_str(), m);
        }
    }
    let mediators: Vec<String> = used.keys().map(|s| s.to_string()).collect();
    let profiles: Vec<&MediatorProfile> = used.values().copied().collect();

    let mut graph = StateGraph {
        loads: profiles.iter().map(|m| m.load).collect(),
        capacities: profiles.iter().map(|m| m.capacity).collect(),
        vas: mediators
            .iter()
            .map(|id| vas.get(id).copied().unwrap_or(0.0))
            .collect(),
        mediators,
        cases: Vec::new(),
        case_cells: Vec::new(),
        case_ps: Vec::new(),
        case_arrivals: Vec::new(),
        case_is_shadow: Vec::new(),
        edges: Vec::new(),
    };

    for (ci, case) in real_cases.iter().chain(shadow_cases).enumerate() {
        graph.cases.push(case.id.clone());
        graph.case_cells.push(case.cell);
        graph.case_ps.push(case.p);
        graph.case_arrivals.push(case.arrival_time);
        graph.case_is_shadow.push(case.is_shadow);
        let mut incident = 0usize;
        for (mi, profile) in profiles.iter().enumerate() {
            if profile.is_accredited(case.cell) {
                graph.edges.push(GraphEdge {
                    mediator: mi,
                    case: ci,
                    weight: graph.vas[mi] + case.p,
                });
                incident += 1;
            }
        }
        if !case.is_shadow && incident == 0 {
            return Err(Error::AccreditationGap {
                case: case.id.clone(),
            });
        }
    }
    // Construction order is (case, mediator) ascending already.
    debug_assert!(graph
        .edges
        .windows(2)
        .all(|w| (w[0].case, w[0].mediator) < (w[1].case, w[1].mediator)));
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mediator(id: &str, cells: &[(u32, u32)], capacity: u32, load: u32) -> MediatorProfile {
        MediatorProfile {
            id: id.to_string(),
            accredited_cells: cells.iter().map(|&(t, s)| Cell::new(t, s)).collect(),
            capacity,
            load,
            true_va: None,
        }
    }

    fn case(id: &str, cell: (u32, u32), p: f64, shadow: bool, arrival: f64) -> CaseRecord {
        CaseRecord {
            id: id.to_string(),
            cell: Cell::new(cell.0, cell.1),
            p,
            arrival_time: arrival,
            referral_mode: 1,
            period: 1,
            assigned_mediator: None,
            outcome: None,
            conclusion_time: None,
            is_shadow: shadow,
        }
    }

    #[test]
    fn accreditation_filters_roster() {
        let roster = vec![
            mediator("m1", &[(1, 1), (1, 2)], 3, 0),
            mediator("m2", &[(1, 1)], 3, 0),
            mediator("m3", &[(2, 1)], 3, 0),
        ];
        let c = case("c1", (1, 1), 0.5, false, 0.0);
        assert_eq!(accredited_mediators(&c, &roster), vec!["m1", "m2"]);
        let c2 = case("c2", (3, 3), 0.5, false, 0.0);
        assert!(accredited_mediators(&c2, &roster).is_empty());
    }

    #[test]
    fn graph_edges_follow_accreditation() {
        let roster = vec![
            mediator("m1", &[(1, 1), (1, 2)], 3, 1),
            mediator("m2", &[(1, 1)], 2, 0),
            mediator("m3", &[(2, 9)], 3, 0),
        ];
        let vas: BTreeMap<String, f64> =
            [("m1".into(), 0.1), ("m2".into(), -0.05)].into_iter().collect();
        let real = [case("r", (1, 1), 0.5, false, 0.0)];
        let shadows = [case("s1", (1, 2), 0.4, true, 3.0)];
        let g = build_state_graph(&real, &shadows, &roster, &vas).unwrap();

        // m3 covers no included case and must be absent.
        assert_eq!(g.mediators, vec!["m1".to_string(), "m2".to_string()]);
        assert_eq!(g.cases.len(), 2);
        let pairs: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.case, e.mediator)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0)]);
        // Weight is va + p.
        assert!((g.edges[0].weight - 0.6).abs() < 1e-12);
        assert!((g.edges[1].weight - 0.45).abs() < 1e-12);
        assert!((g.edges[2].weight - 0.5).abs() < 1e-12);
        assert_eq!(g.loads, vec![1, 0]);
        assert_eq!(g.capacities, vec![3, 2]);
        assert_eq!(g.n_real_cases(), 1);
    }

    #[test]
    fn real_case_without_mediator_is_an_error() {
        let roster = vec![mediator("m1", &[(1, 1)], 3, 0)];
        let real = [case("r", (5, 5), 0.5, false, 0.0)];
        let err = build_state_graph(&real, &[], &roster, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::AccreditationGap { .. }));
    }

    #[test]
    fn shadow_case_without_mediator_is_kept_edgeless() {
        let roster = vec![mediator("m1", &[(1, 1)], 3, 0)];
        let real = [case("r", (1, 1), 0.5, false, 0.0)];
        let shadows = [case("s", (9, 9), 0.5, true, 2.0)];
        let g = build_state_graph(&real, &shadows, &roster, &BTreeMap::new()).unwrap();
        assert_eq!(g.cases.len(), 2);
        assert!(g.case_edges(1).is_empty());
    }

    #[test]
    fn invalid_probability_rejected() {
        let roster = vec![mediator("m1", &[(1, 1)], 3, 0)];
        let real = [case("r", (1, 1), 1.5, false, 0.0)];
        let err = build_state_graph(&real, &[], &roster, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability(_)));
    }

    #[test]
    fn shadow_with_outcome_rejected() {
        let mut s = case("s", (1, 1), 0.5, true, 1.0);
        s.outcome = Some(true);
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_va_defaults_to_zero() {
        let roster = vec![mediator("m1", &[(1, 1)], 3, 0)];
        let real = [case("r", (1, 1), 0.37, false, 0.0)];
        let g = build_state_graph(&real, &[], &roster, &BTreeMap::new()).unwrap();
        assert_eq!(g.vas, vec![0.0]);
        assert!((g.edges[0].weight - 0.37).abs() < 1e-12);
    }
}
