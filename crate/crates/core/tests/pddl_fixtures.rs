//! Fixture-driven checks over the bundled domain files: the two fragment
//! files parse into the expected constructs, the bundled corridor domains
//! reprint byte-for-byte (run with `REGEN_GOLDEN=1` to rewrite them after an
//! intentional printer change), every single-token corruption is reported on
//! the line it was injected at, and grounding over a serialized graph yields
//! exactly two motion actions per undirected edge.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use navplan_core::pddlplus::{
    ground, parse_domain, parse_problem, print_domain, AttachmentOutcome, AttachmentRegistry,
};
use navplan_core::sampler::WaypointGraph;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn registry_with_belief_update() -> AttachmentRegistry {
    let mut reg = AttachmentRegistry::new();
    reg.register(
        "belief_update",
        Arc::new(|call| {
            Ok(AttachmentOutcome { belief: call.belief.clone(), values: vec![0.0] })
        }),
    )
    .unwrap();
    reg
}

#[test]
fn motion_fragment_parses_with_named_constructs() {
    let d = parse_domain(&read(&fixture("odometry-fragment.pddl"))).unwrap();
    assert_eq!(d.name, "robot-navigation-fragment");
    assert_eq!(d.actions.len(), 1);
    assert_eq!(d.actions[0].name, "goto_waypoint");
    assert_eq!(d.processes.len(), 1);
    assert_eq!(d.processes[0].name, "odometry");
    assert_eq!(d.events.len(), 1);
    assert_eq!(d.events[0].name, "belief_update");
}

#[test]
fn battery_fragment_parses_with_named_constructs() {
    let d = parse_domain(&read(&fixture("battery-fragment.pddl"))).unwrap();
    assert_eq!(d.name, "battery-fragment");
    assert!(d.actions.is_empty());
    assert_eq!(d.processes.len(), 1);
    assert_eq!(d.processes[0].name, "discharge");
    assert_eq!(d.events.len(), 1);
    assert_eq!(d.events[0].name, "battery_status");
}

fn assert_reprint_is_golden(path: &Path) {
    let text = read(path);
    let model = parse_domain(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let printed = print_domain(&model);
    if std::env::var_os("REGEN_GOLDEN").is_some() {
        fs::write(path, &printed).unwrap();
    }
    assert_eq!(
        printed,
        read(path),
        "{} is not in canonical form; rerun with REGEN_GOLDEN=1 after an intentional printer change",
        path.display()
    );
}

#[test]
fn bundled_corridor_domain_reprints_byte_identically() {
    assert_reprint_is_golden(&bundled("nav-domain.pddl"));
}

#[test]
fn bundled_battery_domain_reprints_byte_identically() {
    assert_reprint_is_golden(&bundled("nav-battery-domain.pddl"));
}

/// Byte spans of the individual tokens on one line: parens stand alone,
/// anything else groups until whitespace or a paren.
fn token_spans(line: &str) -> Vec<(usize, usize)> {
    let bytes = line.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' || c == ')' {
            spans.push((i, 1));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let c = bytes[i] as char;
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                i += 1;
            }
            spans.push((start, i - start));
        }
    }
    spans
}

#[test]
fn corrupting_any_single_token_reports_its_line() {
    let text = read(&bundled("nav-domain.pddl"));
    let lines: Vec<&str> = text.lines().collect();
    let mut corruptions = 0;
    for (li, line) in lines.iter().enumerate() {
        for (start, len) in token_spans(line) {
            let mut mutated_line = String::new();
            mutated_line.push_str(&line[..start]);
            mutated_line.push('%');
            mutated_line.push_str(&line[start + len..]);
            let mut mutated: Vec<&str> = lines.clone();
            mutated[li] = &mutated_line;
            let corrupted = mutated.join("\n");
            let err = parse_domain(&corrupted).expect_err("corruption must not parse");
            assert_eq!(
                err.line(),
                Some(li + 1),
                "corruption at line {} col {} reported elsewhere: {err}",
                li + 1,
                start + 1
            );
            corruptions += 1;
        }
    }
    assert!(corruptions > 100, "expected a substantial corruption sweep, ran {corruptions}");
}

#[test]
fn fragment_grounds_two_actions_per_directed_edge() {
    let graph = WaypointGraph::parse(&read(&fixture("forty.graph"))).unwrap();
    assert_eq!(graph.waypoints.len(), 40);
    let domain = parse_domain(&read(&fixture("odometry-fragment.pddl"))).unwrap();
    let problem = parse_problem(
        r#"(define (problem ring)
  (:domain robot-navigation-fragment)
  (:objects wp_start wp_goal - waypoint)
  (:init (robot_at wp_start) (idle))
  (:goal (and (robot_at wp_goal))))"#,
        &domain,
    )
    .unwrap();
    let model = ground(&domain, &problem, &graph, &registry_with_belief_update()).unwrap();
    assert_eq!(model.actions.len(), 2 * graph.edges.len());
    assert_eq!(model.processes.len(), 2 * graph.edges.len());
    assert_eq!(model.events.len(), 1);

    // soundness: every compiled condition and effect evaluates on the
    // initial vectors without tripping an index
    let fluents = model.init_fluents.clone();
    let statics = model.static_values.clone();
    let truth = |lit: usize| model.init_literals.contains(&lit);
    for action in &model.actions {
        for c in &action.pre {
            let _ = c.holds(&truth, &fluents, &statics);
        }
    }
    for process in &model.processes {
        for c in &process.pre {
            let _ = c.holds(&truth, &fluents, &statics);
        }
        for r in &process.rates {
            assert!(r.slot < fluents.len());
            let _ = r.rate.eval(&fluents, &statics);
        }
    }
    for c in &model.goal {
        let _ = c.holds(&truth, &fluents, &statics);
    }
}
