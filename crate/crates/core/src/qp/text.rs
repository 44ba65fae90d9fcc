//! Line-oriented text format for assignment programs, for inspection and
//! the CLI `solve` subcommand.
//!
//! ```text
//! # assignment-qp v1
//! penalty quadratic
//! lambda 0.5
//! horizon 10
//! mediator u0 load 3 cap 3 va 0.1
//! case r0 real cell 1 1 p 0.5 arrival 0
//! case s0 shadow cell 1 2 p 0.4 arrival 4
//! edge u0 r0
//! ```
//!
//! `#` starts a comment; the writer appends a commented dump of the derived
//! variables and constraint rows. Floats use the shortest representation
//! that round-trips exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{build_qp, PenaltyKind, QpInstance};
use crate::domain::{Cell, GraphEdge, StateGraph};
use crate::error::{Error, Result};

/// Required first line of every instance file.
pub const FORMAT_HEADER: &str = "# assignment-qp v1";

/// Serializes an instance, including a commented row dump.
pub fn write_qp_text(instance: &QpInstance) -> String {
    let g = &instance.graph;
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    let kind = match instance.penalty {
        PenaltyKind::Quadratic => "quadratic",
        PenaltyKind::Linear => "linear",
    };
    let _ = writeln!(out, "penalty {kind}");
    let _ = writeln!(out, "lambda {}", instance.lambda);
    let _ = writeln!(out, "horizon {}", instance.horizon);
    for (u, id) in g.mediators.iter().enumerate() {
        let _ = writeln!(
            out,
            "mediator {id} load {} cap {} va {}",
            g.loads[u], g.capacities[u], g.vas[u]
        );
    }
    for (c, id) in g.cases.iter().enumerate() {
        let _ = writeln!(
            out,
            "case {id} {} cell {} {} p {} arrival {}",
            if g.case_is_shadow[c] { "shadow" } else { "real" },
            g.case_cells[c].case_type,
            g.case_cells[c].station,
            g.case_ps[c],
            g.case_arrivals[c]
        );
    }
    for e in &g.edges {
        let _ = writeln!(out, "edge {} {}", g.mediators[e.mediator], g.cases[e.case]);
    }

    out.push_str("#\n# derived program\n");
    let obj = match instance.penalty {
        PenaltyKind::Quadratic => format!("{} * sum_u xi_u^2", instance.lambda),
        PenaltyKind::Linear => format!("{} * sum_u load_u xi_u", instance.lambda),
    };
    let _ = writeln!(out, "# objective: maximize sum_e w_e x_e - {obj}");
    for (i, e) in g.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "# var x{i} = ({} -> {}) w {}",
            g.mediators[e.mediator], g.cases[e.case], e.weight
        );
    }
    for (u, id) in g.mediators.iter().enumerate() {
        let _ = writeln!(out, "# var xi{u} = {id} in [0, {}]", g.loads[u] + 1);
    }
    for (c, id) in g.cases.iter().enumerate() {
        let terms: Vec<String> = (0..g.edges.len())
            .filter(|&e| g.edges[e].case == c)
            .map(|e| format!("x{e}"))
            .collect();
        let rel = if g.case_is_shadow[c] { "<=" } else { "=" };
        let _ = writeln!(out, "# row case {id}: {} {rel} 1", terms.join(" + "));
    }
    for class in &instance.c3 {
        let u = class.mediator;
        let terms: Vec<String> = class.edges.iter().map(|&e| format!("x{e}")).collect();
        let lhs = if terms.is_empty() {
            g.loads[u].to_string()
        } else {
            format!("{} + {}", g.loads[u], terms.join(" + "))
        };
        let _ = writeln!(
            out,
            "# row cap {} t {}..{}: {lhs} <= {} + xi{u}",
            g.mediators[u],
            class.timesteps.first().unwrap(),
            class.timesteps.last().unwrap(),
            g.capacities[u]
        );
    }
    out
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Value(format!("line {line_no}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, what: &str, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| bad(line_no, format!("invalid {what} `{tok}`")))
}

struct MediatorLine {
    id: String,
    load: u32,
    cap: u32,
    va: f64,
}

struct CaseLine {
    id: String,
    shadow: bool,
    cell: Cell,
    p: f64,
    arrival: f64,
}

/// Parses the text format back into a validated instance.
pub fn parse_qp_text(text: &str) -> Result<QpInstance> {
    match text.lines().next().map(str::trim) {
        Some(first) if first == FORMAT_HEADER => {}
        Some(first) if first.starts_with("# assignment-qp") => {
            return Err(Error::Value(format!(
                "unsupported instance format `{first}` (this build reads `{FORMAT_HEADER}`)"
            )));
        }
        _ => {
            return Err(Error::Value(format!(
                "missing `{FORMAT_HEADER}` header line"
            )));
        }
    }

    let mut penalty: Option<PenaltyKind> = None;
    let mut lambda: Option<f64> = None;
    let mut horizon: Option<u32> = None;
    let mut mediators: Vec<MediatorLine> = Vec::new();
    let mut cases: Vec<CaseLine> = Vec::new();
    let mut edge_ids: Vec<(usize, String, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate().skip(1) {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "penalty" => {
                penalty = Some(match tok.get(1) {
                    Some(&"quadratic") => PenaltyKind::Quadratic,
                    Some(&"linear") => PenaltyKind::Linear,
                    other => return Err(bad(line_no, format!("unknown penalty {other:?}"))),
                });
            }
            "lambda" => {
                let v = tok.get(1).ok_or_else(|| bad(line_no, "lambda needs a value"))?;
                lambda = Some(parse_num(line_no, "lambda", v)?);
            }
            "horizon" => {
                let v = tok.get(1).ok_or_else(|| bad(line_no, "horizon needs a value"))?;
                horizon = Some(parse_num(line_no, "horizon", v)?);
            }
            "mediator" => {
                if tok.len() != 8 || tok[2] != "load" || tok[4] != "cap" || tok[6] != "va" {
                    return Err(bad(line_no, "expected `mediator <id> load <n> cap <n> va <f>`"));
                }
                mediators.push(MediatorLine {
                    id: tok[1].to_string(),
                    load: parse_num(line_no, "load", tok[3])?,
                    cap: parse_num(line_no, "cap", tok[5])?,
                    va: parse_num(line_no, "va", tok[7])?,
                });
            }
            "case" => {
                if tok.len() != 10 || tok[3] != "cell" || tok[6] != "p" || tok[8] != "arrival" {
                    return Err(bad(
                        line_no,
                        "expected `case <id> real|shadow cell <t> <s> p <f> arrival <f>`",
                    ));
                }
                let shadow = match tok[2] {
                    "real" => false,
                    "shadow" => true,
                    other => return Err(bad(line_no, format!("unknown case kind `{other}`"))),
                };
                cases.push(CaseLine {
                    id: tok[1].to_string(),
                    shadow,
                    cell: Cell::new(
                        parse_num(line_no, "cell type", tok[4])?,
                        parse_num(line_no, "cell station", tok[5])?,
                    ),
                    p: parse_num(line_no, "p", tok[7])?,
                    arrival: parse_num(line_no, "arrival", tok[9])?,
                });
            }
            "edge" => {
                if tok.len() != 3 {
                    return Err(bad(line_no, "expected `edge <mediator-id> <case-id>`"));
                }
                edge_ids.push((line_no, tok[1].to_string(), tok[2].to_string()));
            }
            other => return Err(bad(line_no, format!("unknown directive `{other}`"))),
        }
    }

    let penalty = penalty.ok_or_else(|| Error::Value("missing `penalty` line".into()))?;
    let lambda = lambda.ok_or_else(|| Error::Value("missing `lambda` line".into()))?;
    let horizon = horizon.ok_or_else(|| Error::Value("missing `horizon` line".into()))?;

    mediators.sort_by(|a, b| a.id.cmp(&b.id));
    for w in mediators.windows(2) {
        if w[0].id == w[1].id {
            return Err(Error::Value(format!("duplicate mediator id `{}`", w[0].id)));
        }
    }
    // Real cases first, shadows after, both in file order.
    let (reals, shadows): (Vec<&CaseLine>, Vec<&CaseLine>) =
        cases.iter().partition(|c| !c.shadow);
    let ordered: Vec<&CaseLine> = reals.into_iter().chain(shadows).collect();
    let mut case_index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, c) in ordered.iter().enumerate() {
        if case_index.insert(c.id.as_str(), i).is_some() {
            return Err(Error::Value(format!("duplicate case id `{}`", c.id)));
        }
    }
    let mediator_index: BTreeMap<&str, usize> = mediators
        .iter()
        .enumerate()
        .map(|(i, m)| (m.id.as_str(), i))
        .collect();

    let mut edges: Vec<GraphEdge> = Vec::new();
    for (line_no, mid, cid) in &edge_ids {
        let &u = mediator_index
            .get(mid.as_str())
            .ok_or_else(|| bad(*line_no, format!("edge names unknown mediator `{mid}`")))?;
        let &c = case_index
            .get(cid.as_str())
            .ok_or_else(|| bad(*line_no, format!("edge names unknown case `{cid}`")))?;
        edges.push(GraphEdge {
            mediator: u,
            case: c,
            weight: mediators[u].va + ordered[c].p,
        });
    }
    edges.sort_by_key(|e| (e.case, e.mediator));
    for w in edges.windows(2) {
        if (w[0].case, w[0].mediator) == (w[1].case, w[1].mediator) {
            return Err(Error::Value(format!(
                "duplicate edge ({}, {})",
                mediators[w[0].mediator].id, ordered[w[0].case].id
            )));
        }
    }

    let graph = StateGraph {
        mediators: mediators.iter().map(|m| m.id.clone()).collect(),
        loads: mediators.iter().map(|m| m.load).collect(),
        capacities: mediators.iter().map(|m| m.cap).collect(),
        vas: mediators.iter().map(|m| m.va).collect(),
        cases: ordered.iter().map(|c| c.id.clone()).collect(),
        case_cells: ordered.iter().map(|c| c.cell).collect(),
        case_ps: ordered.iter().map(|c| c.p).collect(),
        case_arrivals: ordered.iter().map(|c| c.arrival).collect(),
        case_is_shadow: ordered.iter().map(|c| c.shadow).collect(),
        edges,
    };
    build_qp(&graph, lambda, horizon, penalty)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::micro_graph;
    use super::*;

    #[test]
    fn roundtrip_preserves_the_instance() {
        let inst = build_qp(&micro_graph(), 0.37, 10, PenaltyKind::Quadratic).unwrap();
        let text = write_qp_text(&inst);
        let back = parse_qp_text(&text).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn roundtrip_handles_awkward_floats() {
        let mut g = micro_graph();
        g.vas = vec![0.1 + 0.2, -1e-9, 1.0 / 3.0];
        for e in &mut g.edges {
            e.weight = g.vas[e.mediator] + g.case_ps[e.case];
        }
        let inst = build_qp(&g, 1e-7, 10, PenaltyKind::Linear).unwrap();
        let back = parse_qp_text(&write_qp_text(&inst)).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn parses_a_hand_written_program() {
        let text = "\
# assignment-qp v1
# comment
penalty linear
lambda 0.25
horizon 5

mediator a load 1 cap 2 va 0.05
case c1 real cell 1 1 p 0.5 arrival 0
edge a c1
";
        let inst = parse_qp_text(text).unwrap();
        assert_eq!(inst.lambda, 0.25);
        assert_eq!(inst.horizon, 5);
        assert_eq!(inst.penalty, PenaltyKind::Linear);
        assert_eq!(inst.n_edges(), 1);
        assert!((inst.graph.edges[0].weight - 0.55).abs() < 1e-12);
    }

    #[test]
    fn requires_the_format_header() {
        let headless = "penalty quadratic\nlambda 0.5\nhorizon 10\n\
mediator a load 0 cap 1 va 0\ncase c real cell 1 1 p 0.5 arrival 0\nedge a c\n";
        let err = parse_qp_text(headless).unwrap_err();
        assert!(err.to_string().contains("assignment-qp"), "{err}");

        let future = format!("# assignment-qp v2\n{headless}");
        let err = parse_qp_text(&future).unwrap_err();
        assert!(err.to_string().contains("unsupported"), "{err}");
    }

    #[test]
    fn reports_line_numbers_for_bad_input() {
        let text = "# assignment-qp v1\npenalty quadratic\nlambda 0.5\nhorizon 10\nbogus directive\n";
        let err = parse_qp_text(text).unwrap_err();
        assert!(err.to_string().contains("line 5"), "{err}");

        let missing = "# assignment-qp v1\npenalty quadratic\nhorizon 10\n";
        let err = parse_qp_text(missing).unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");

        let dup = "# assignment-qp v1\npenalty quadratic\nlambda 1\nhorizon 10\n\
mediator a load 0 cap 1 va 0\nmediator a load 0 cap 1 va 0\n\
case c real cell 1 1 p 0.5 arrival 0\nedge a c\n";
        assert!(parse_qp_text(dup).is_err());

        let unknown_edge = "# assignment-qp v1\npenalty quadratic\nlambda 1\nhorizon 10\n\
mediator a load 0 cap 1 va 0\ncase c real cell 1 1 p 0.5 arrival 0\nedge zz c\n";
        let err = parse_qp_text(unknown_edge).unwrap_err();
        assert!(err.to_string().contains("unknown mediator"), "{err}");
    }
}
