//! Hand-built state graphs shared by the QP tests.

use rand::Rng;

use crate::domain::{Cell, GraphEdge, StateGraph};

/// One mediator (`u0`), one real case (`r0`) arriving at 0.
pub(crate) fn single_case_graph(va: f64, p: f64, load: u32, cap: u32) -> StateGraph {
    StateGraph {
        mediators: vec!["u0".into()],
        loads: vec![load],
        capacities: vec![cap],
        vas: vec![va],
        cases: vec!["r0".into()],
        case_cells: vec![Cell::new(1, 1)],
        case_ps: vec![p],
        case_arrivals: vec![0.0],
        case_is_shadow: vec![false],
        edges: vec![GraphEdge {
            mediator: 0,
            case: 0,
            weight: va + p,
        }],
    }
}

/// Three mediators, one real case (incident to `u0`, `u1`) and one shadow
/// arriving on day 4 (incident to `u0`, `u2`), so `u0` and `u2` get split
/// C3 classes while `u1` keeps a single one.
pub(crate) fn micro_graph() -> StateGraph {
    let vas = [0.1, 0.0, -0.05];
    StateGraph {
        mediators: vec!["u0".into(), "u1".into(), "u2".into()],
        loads: vec![0, 0, 0],
        capacities: vec![3, 3, 3],
        vas: vas.to_vec(),
        cases: vec!["r".into(), "s".into()],
        case_cells: vec![Cell::new(1, 1), Cell::new(1, 2)],
        case_ps: vec![0.5, 0.4],
        case_arrivals: vec![0.0, 4.0],
        case_is_shadow: vec![false, true],
        edges: vec![
            GraphEdge { mediator: 0, case: 0, weight: vas[0] + 0.5 },
            GraphEdge { mediator: 1, case: 0, weight: vas[1] + 0.5 },
            GraphEdge { mediator: 0, case: 1, weight: vas[0] + 0.4 },
            GraphEdge { mediator: 2, case: 1, weight: vas[2] + 0.4 },
        ],
    }
}

/// A single capacity-0 mediator facing one real and one shadow case: the
/// slack cap `L + 1 = 1` admits only the real case.
pub(crate) fn tight_capacity_graph() -> StateGraph {
    StateGraph {
        mediators: vec!["u0".into()],
        loads: vec![0],
        capacities: vec![0],
        vas: vec![0.2],
        cases: vec!["r0".into(), "s0".into()],
        case_cells: vec![Cell::new(1, 1), Cell::new(1, 1)],
        case_ps: vec![0.5, 0.5],
        case_arrivals: vec![0.0, 2.0],
        case_is_shadow: vec![false, true],
        edges: vec![
            GraphEdge { mediator: 0, case: 0, weight: 0.7 },
            GraphEdge { mediator: 0, case: 1, weight: 0.7 },
        ],
    }
}

/// Random 3-mediator graph with one real case and up to two shadows, small
/// enough for the brute-force oracle.
pub(crate) fn random_micro_graph<R: Rng>(rng: &mut R) -> StateGraph {
    let nu = 3usize;
    let vas: Vec<f64> = (0..nu).map(|_| rng.gen_range(-0.15..0.15)).collect();
    let loads: Vec<u32> = (0..nu).map(|_| rng.gen_range(0..=4)).collect();
    let capacities: Vec<u32> = (0..nu).map(|_| rng.gen_range(1..=3)).collect();
    let n_shadow = rng.gen_range(0..=2);

    let mut cases = vec!["r0".to_string()];
    let mut case_ps = vec![rng.gen_range(0.3..0.7)];
    let mut case_arrivals = vec![0.0];
    let mut case_is_shadow = vec![false];
    for s in 0..n_shadow {
        cases.push(format!("s{s}"));
        case_ps.push(rng.gen_range(0.3..0.7));
        case_arrivals.push(f64::from(rng.gen_range(1..=10u32)));
        case_is_shadow.push(true);
    }

    let mut edges = Vec::new();
    for c in 0..cases.len() {
        let mut incident: Vec<usize> = (0..nu).filter(|_| rng.gen_bool(0.6)).collect();
        if !case_is_shadow[c] && incident.is_empty() {
            incident.push(rng.gen_range(0..nu));
        }
        for u in incident {
            edges.push(GraphEdge {
                mediator: u,
                case: c,
                weight: vas[u] + case_ps[c],
            });
        }
    }

    StateGraph {
        mediators: (0..nu).map(|u| format!("u{u}")).collect(),
        loads,
        capacities,
        vas,
        case_cells: vec![Cell::new(1, 1); cases.len()],
        cases,
        case_ps,
        case_arrivals,
        case_is_shadow,
        edges,
    }
}
