//! Detailed dump of one QP instance per (state, draw, lambda): per-edge x,
//! per-mediator xi, and objective, to see how the penalty weight moves the
//! arriving case.

use medassign_core::corpus::scenario_inputs;
use medassign_core::domain::{CaseRecord, Cell};
use medassign_core::domain::build_state_graph;
use medassign_core::policy::sample_shadow_cases;
use medassign_core::qp::{build_qp, solve, PenaltyKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn main() {
    let inputs = scenario_inputs(1).unwrap();
    let case = CaseRecord {
        id: "real".into(),
        cell: Cell::new(1, 1),
        p: 0.5,
        arrival_time: 0.0,
        referral_mode: 1,
        period: 0,
        assigned_mediator: None,
        outcome: None,
        conclusion_time: None,
        is_shadow: false,
    };
    for draw in [1000u64, 1001, 1002] {
        let mut rng = ChaCha8Rng::seed_from_u64(draw);
        let shadows = sample_shadow_cases(&inputs.arrivals, 10, &mut rng).unwrap();
        let n_a = shadows.iter().filter(|s| s.cell == Cell::new(1, 1)).count();
        let n_b = shadows.len() - n_a;
        println!("=== draw {draw}: {n_a} A-shadows, {n_b} B-shadows ===");
        for lam in [0.1f64, 0.5] {
            let mut roster = inputs.roster.clone();
            roster[0].load = 0;
            roster[1].load = 1;
            roster[2].load = 1;
            let mut vas = BTreeMap::new();
            for m in &roster {
                vas.insert(m.id.clone(), m.true_va.unwrap());
            }
            let graph =
                build_state_graph(std::slice::from_ref(&case), &shadows, &roster, &vas).unwrap();
            let instance = build_qp(&graph, lam, 10, PenaltyKind::Quadratic).unwrap();
            let sol = solve(&instance, 1e-6).unwrap();
            let real_x: Vec<String> = graph
                .case_edges(0)
                .iter()
                .map(|&e| {
                    format!(
                        "{}={:.3}",
                        graph.mediators[graph.edges[e].mediator], sol.x[e]
                    )
                })
                .collect();
            // total assigned mass per mediator (real + shadow)
            let mut mass = vec![0.0f64; graph.mediators.len()];
            let mut shadow_drop = 0.0;
            for (e, edge) in graph.edges.iter().enumerate() {
                mass[edge.mediator] += sol.x[e];
            }
            for c in 1..graph.cases.len() {
                let assigned: f64 = graph.case_edges(c).iter().map(|&e| sol.x[e]).sum();
                shadow_drop += 1.0 - assigned;
            }
            println!(
                "  lam={lam:<4} real x: [{}]  xi: [{:.3} {:.3} {:.3}]  mass: [{:.2} {:.2} {:.2}]  dropped shadows: {:.2}",
                real_x.join(" "),
                sol.xi[0],
                sol.xi[1],
                sol.xi[2],
                mass[0],
                mass[1],
                mass[2],
                shadow_drop
            );
        }
    }
}
