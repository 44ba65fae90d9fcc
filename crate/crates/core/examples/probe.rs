//! Decision probe: for a grid of load states in the three-mediator demo
//! world, tally which mediator the QP policy picks at two penalty weights
//! across many shadow draws, and print the states where the tallies differ.

use medassign_core::corpus::scenario_inputs;
use medassign_core::domain::CaseRecord;
use medassign_core::policy::{decide, DecisionInputs, PolicySpec, VaMode};
use medassign_core::qp::PenaltyKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn main() {
    let inputs = scenario_inputs(1).unwrap();
    let lambdas = [0.1f64, 0.5f64];
    let draws = 60u64;
    let case = CaseRecord {
        id: "probe".into(),
        cell: medassign_core::domain::Cell::new(1, 1),
        p: 0.5,
        arrival_time: 0.0,
        referral_mode: 1,
        period: 0,
        assigned_mediator: None,
        outcome: None,
        conclusion_time: None,
        is_shadow: false,
    };
    println!("state      lambda=0.1 (m1/m2/m3)   lambda=0.5 (m1/m2/m3)");
    for l1 in 0..=6u32 {
        for l2 in 0..=5u32 {
            for l3 in 0..=5u32 {
                let mut tallies: Vec<[u32; 3]> = Vec::new();
                for &lam in &lambdas {
                    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
                    for d in 0..draws {
                        let mut roster = inputs.roster.clone();
                        roster[0].load = l1;
                        roster[1].load = l2;
                        roster[2].load = l3;
                        let mut rng = ChaCha8Rng::seed_from_u64(1000 + d);
                        let spec = PolicySpec::Smart {
                            mode: VaMode::Known,
                            lambda: lam,
                            penalty: PenaltyKind::Quadratic,
                        };
                        let beliefs = BTreeMap::new();
                        let dec = decide(
                            &spec,
                            &case,
                            &DecisionInputs {
                                roster: &roster,
                                beliefs: &beliefs,
                                arrivals: &inputs.arrivals,
                                horizon: 10,
                                solver_tol: 1e-6,
                            },
                            &mut rng,
                        )
                        .unwrap();
                        *counts.entry(dec.mediator).or_insert(0) += 1;
                    }
                    tallies.push([
                        counts.get("m1").copied().unwrap_or(0),
                        counts.get("m2").copied().unwrap_or(0),
                        counts.get("m3").copied().unwrap_or(0),
                    ]);
                }
                let (a, b) = (tallies[0], tallies[1]);
                if b[0] > a[0] + 5 {
                    println!(
                        "({l1},{l2},{l3})   {:>3}/{:>3}/{:>3}          {:>3}/{:>3}/{:>3}   <-- m1 gains at high lambda",
                        a[0], a[1], a[2], b[0], b[1], b[2]
                    );
                } else if a[0] > b[0] + 5 {
                    println!(
                        "({l1},{l2},{l3})   {:>3}/{:>3}/{:>3}          {:>3}/{:>3}/{:>3}   <-- m1 LOSES at high lambda",
                        a[0], a[1], a[2], b[0], b[1], b[2]
                    );
                }
            }
        }
    }
}
