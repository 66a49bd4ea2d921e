//! Waypoint graph sampling: RRT growth biased by landmark potential fields,
//! then radius-based neighbor connection.
//!
//! Landmarks that still need coverage attract new samples, saturated ones
//! repel them, so the graph ends up with poses from which landmarks can be
//! observed without flooding any single region.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::world::{GridMap, Landmark, Pose};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("start pose in collision")]
    StartInCollision,
    #[error("goal pose in collision")]
    GoalInCollision,
    #[error("disconnected start/goal")]
    DisconnectedStartGoal,
    #[error("invalid sampler parameters: {0}")]
    BadParams(String),
    #[error("graph parse error at line {line}: {msg}")]
    GraphParse { line: usize, msg: String },
    #[error("invalid graph: {0}")]
    BadGraph(String),
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub id: usize,
    pub pose: Pose,
}

/// Undirected edge; `a < b` is kept canonical so serialization is stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct WaypointGraph {
    pub waypoints: Vec<Waypoint>,
    pub edges: Vec<Edge>,
    pub start_id: usize,
    pub goal_id: usize,
}

#[derive(Debug, Clone)]
pub struct SamplerParams {
    pub max_nodes: usize,
    pub steer_step: f64,
    pub attraction_radius: f64,
    pub quota_per_landmark: usize,
    pub connect_radius: f64,
    pub rng_seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            max_nodes: 40,
            steer_step: 1.5,
            attraction_radius: 1.5,
            quota_per_landmark: 3,
            connect_radius: 3.0,
            rng_seed: 0,
        }
    }
}

impl SamplerParams {
    fn validate(&self) -> Result<(), SamplerError> {
        if self.max_nodes < 2 {
            return Err(SamplerError::BadParams("max_nodes must be at least 2".into()));
        }
        if self.steer_step <= 0.0 {
            return Err(SamplerError::BadParams("steer_step must be > 0".into()));
        }
        if self.attraction_radius <= 0.0 {
            return Err(SamplerError::BadParams("attraction_radius must be > 0".into()));
        }
        if self.quota_per_landmark < 1 {
            return Err(SamplerError::BadParams("quota_per_landmark must be >= 1".into()));
        }
        if self.connect_radius <= 0.0 {
            return Err(SamplerError::BadParams("connect_radius must be > 0".into()));
        }
        Ok(())
    }
}

/// Closest waypoint to `point` in the plane; ties go to the lower id.
pub fn nearest(waypoints: &[Waypoint], point: (f64, f64)) -> Option<&Waypoint> {
    waypoints.iter().min_by(|a, b| {
        let da = (a.pose.x - point.0).powi(2) + (a.pose.y - point.1).powi(2);
        let db = (b.pose.x - point.0).powi(2) + (b.pose.y - point.1).powi(2);
        da.total_cmp(&db).then(a.id.cmp(&b.id))
    })
}

/// RRT steering with landmark potential fields layered on top.
///
/// The base step moves at most `steer_step` from `from` toward `toward`.
/// Each landmark within `attraction_radius` of the stepped point adds a
/// force of magnitude `0.5 * steer_step * (1 - d / attraction_radius)`,
/// attracting while its coverage quota is unfilled (`fill[i] <
/// quota_per_landmark`) and repelling once saturated. The displaced motion
/// is re-capped at `steer_step`, so a landmark straight ahead leaves the
/// pure steer unchanged. The output heading points along the motion.
pub fn steer(
    from: &Pose,
    toward: (f64, f64),
    landmarks: &[Landmark],
    params: &SamplerParams,
    fill: &[usize],
) -> Pose {
    let dx = toward.0 - from.x;
    let dy = toward.1 - from.y;
    let dist = dx.hypot(dy);
    let (mut px, mut py) = if dist <= params.steer_step || dist == 0.0 {
        (toward.0, toward.1)
    } else {
        (
            from.x + dx / dist * params.steer_step,
            from.y + dy / dist * params.steer_step,
        )
    };

    let gain = 0.5 * params.steer_step;
    for (i, lm) in landmarks.iter().enumerate() {
        let lx = px - lm.x;
        let ly = py - lm.y;
        let d = lx.hypot(ly);
        if d >= params.attraction_radius || d <= 1e-12 {
            continue;
        }
        let magnitude = gain * (1.0 - d / params.attraction_radius);
        let filled = fill.get(i).copied().unwrap_or(0) >= params.quota_per_landmark;
        // unit vector away from the landmark; attraction flips it
        let (ux, uy) = (lx / d, ly / d);
        if filled {
            px += magnitude * ux;
            py += magnitude * uy;
        } else {
            px -= magnitude * ux;
            py -= magnitude * uy;
        }
    }

    // keep the total motion within one steer step
    let mx = px - from.x;
    let my = py - from.y;
    let m = mx.hypot(my);
    let (nx, ny) = if m > params.steer_step {
        (
            from.x + mx / m * params.steer_step,
            from.y + my / m * params.steer_step,
        )
    } else {
        (px, py)
    };
    let theta = if m <= 1e-12 { from.theta } else { (ny - from.y).atan2(nx - from.x) };
    Pose::new(nx, ny, theta)
}

fn count_fill(fill: &mut [usize], landmarks: &[Landmark], pose: &Pose, radius: f64) {
    for (i, lm) in landmarks.iter().enumerate() {
        if (lm.x - pose.x).hypot(lm.y - pose.y) <= radius {
            fill[i] += 1;
        }
    }
}

/// Add an edge between every waypoint pair within `connect_radius` whose
/// straight segment is collision-free. Existing edges are kept.
pub fn connect_neighbors(
    graph: &WaypointGraph,
    map: &GridMap,
    params: &SamplerParams,
    robot_radius: f64,
) -> Result<WaypointGraph, SamplerError> {
    let mut seen: BTreeSet<(usize, usize)> = graph
        .edges
        .iter()
        .map(|e| (e.a.min(e.b), e.a.max(e.b)))
        .collect();
    let mut edges = graph.edges.clone();
    for i in 0..graph.waypoints.len() {
        for j in (i + 1)..graph.waypoints.len() {
            let wa = &graph.waypoints[i];
            let wb = &graph.waypoints[j];
            let len = wa.pose.distance_xy(&wb.pose);
            if len <= 1e-9 || len > params.connect_radius {
                continue;
            }
            if seen.contains(&(wa.id.min(wb.id), wa.id.max(wb.id))) {
                continue;
            }
            if map.segment_free(&wa.pose, &wb.pose, robot_radius)? {
                seen.insert((wa.id.min(wb.id), wa.id.max(wb.id)));
                edges.push(Edge { a: wa.id.min(wb.id), b: wa.id.max(wb.id), length: len });
            }
        }
    }
    edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    Ok(WaypointGraph {
        waypoints: graph.waypoints.clone(),
        edges,
        start_id: graph.start_id,
        goal_id: graph.goal_id,
    })
}

/// Grow a waypoint graph between `start` and `goal`.
///
/// The start is waypoint 0 and the goal waypoint 1; growth draws targets
/// from a mix of uniform samples, the goal, and discs around landmarks whose
/// quota is still unfilled. Deterministic for a fixed `rng_seed`.
pub fn sample_graph(
    map: &GridMap,
    landmarks: &[Landmark],
    start: Pose,
    goal: Pose,
    params: &SamplerParams,
    robot_radius: f64,
) -> Result<WaypointGraph, SamplerError> {
    params.validate()?;
    if !map.is_free(&start, robot_radius)? {
        return Err(SamplerError::StartInCollision);
    }
    if !map.is_free(&goal, robot_radius)? {
        return Err(SamplerError::GoalInCollision);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut waypoints = vec![Waypoint { id: 0, pose: start }, Waypoint { id: 1, pose: goal }];
    let mut tree_edges: Vec<Edge> = Vec::new();
    let mut fill = vec![0usize; landmarks.len()];
    for wp in &waypoints {
        count_fill(&mut fill, landmarks, &wp.pose, params.attraction_radius);
    }

    let mut attempts = 0usize;
    let attempt_budget = params.max_nodes.saturating_mul(200);
    while waypoints.len() < params.max_nodes && attempts < attempt_budget {
        attempts += 1;
        let roll: f64 = rng.gen();
        let unfilled: Vec<usize> = fill
            .iter()
            .enumerate()
            .filter(|(_, &c)| c < params.quota_per_landmark)
            .map(|(i, _)| i)
            .collect();
        let target = if roll < 0.05 {
            goal.xy()
        } else if roll < 0.25 && !unfilled.is_empty() {
            // aim into the attraction disc of a landmark that needs coverage
            let lm = &landmarks[unfilled[rng.gen_range(0..unfilled.len())]];
            let ang = rng.gen_range(0.0..std::f64::consts::TAU);
            let rad = params.attraction_radius * rng.gen_range(0.0..1.0f64).sqrt();
            (lm.x + rad * ang.cos(), lm.y + rad * ang.sin())
        } else {
            (
                rng.gen_range(map.min_x()..map.max_x()),
                rng.gen_range(map.min_y()..map.max_y()),
            )
        };

        let base = *nearest(&waypoints, target).expect("graph has nodes");
        let candidate = steer(&base.pose, target, landmarks, params, &fill);
        if candidate.distance_xy(&base.pose) <= 1e-6 {
            continue;
        }
        if !map.contains(candidate.x, candidate.y) {
            continue;
        }
        if !map.is_free(&candidate, robot_radius)? {
            continue;
        }
        if !map.segment_free(&base.pose, &candidate, robot_radius)? {
            continue;
        }
        let id = waypoints.len();
        waypoints.push(Waypoint { id, pose: candidate });
        tree_edges.push(Edge {
            a: base.id.min(id),
            b: base.id.max(id),
            length: base.pose.distance_xy(&candidate),
        });
        count_fill(&mut fill, landmarks, &candidate, params.attraction_radius);
    }

    let grown = WaypointGraph { waypoints, edges: tree_edges, start_id: 0, goal_id: 1 };
    let graph = connect_neighbors(&grown, map, params, robot_radius)?;
    if !graph.connects_start_goal() {
        return Err(SamplerError::DisconnectedStartGoal);
    }
    Ok(graph)
}

impl WaypointGraph {
    /// Adjacency list as `(neighbor, edge length)` per waypoint.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.waypoints.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.length));
            adj[e.b].push((e.a, e.length));
        }
        adj
    }

    pub fn connects_start_goal(&self) -> bool {
        if self.start_id == self.goal_id {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.waypoints.len()];
        let mut stack = vec![self.start_id];
        seen[self.start_id] = true;
        while let Some(v) = stack.pop() {
            if v == self.goal_id {
                return true;
            }
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Serialize to the versioned text format; identical graphs produce
    /// identical bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("waypoint-graph 1\n");
        let _ = writeln!(out, "start {}", self.start_id);
        let _ = writeln!(out, "goal {}", self.goal_id);
        for wp in &self.waypoints {
            let _ = writeln!(out, "w {} {} {} {}", wp.id, wp.pose.x, wp.pose.y, wp.pose.theta);
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.a, e.b, e.length);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SamplerError> {
        let err = |line: usize, msg: String| SamplerError::GraphParse { line, msg };
        let mut start_id: Option<usize> = None;
        let mut goal_id: Option<usize> = None;
        let mut waypoints: Vec<Waypoint> = Vec::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut saw_magic = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_magic {
                if line != "waypoint-graph 1" {
                    return Err(err(ln, format!("expected 'waypoint-graph 1', found '{line}'")));
                }
                saw_magic = true;
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| err(ln, format!("bad integer '{s}'")));
            let parse_f64 = |s: &str| s.parse::<f64>().map_err(|_| err(ln, format!("bad number '{s}'")));
            match parts[0] {
                "config" => {} // provenance stamp, ignored on load
                "start" if parts.len() == 2 => start_id = Some(parse_usize(parts[1])?),
                "goal" if parts.len() == 2 => goal_id = Some(parse_usize(parts[1])?),
                "w" if parts.len() == 5 => {
                    let id = parse_usize(parts[1])?;
                    if id != waypoints.len() {
                        return Err(err(ln, format!("waypoint id {id} out of order")));
                    }
                    waypoints.push(Waypoint {
                        id,
                        pose: Pose::new(parse_f64(parts[2])?, parse_f64(parts[3])?, parse_f64(parts[4])?),
                    });
                }
                "e" if parts.len() == 4 => {
                    let a = parse_usize(parts[1])?;
                    let b = parse_usize(parts[2])?;
                    let length = parse_f64(parts[3])?;
                    if length <= 0.0 {
                        return Err(err(ln, format!("edge length {length} must be > 0")));
                    }
                    edges.push(Edge { a: a.min(b), b: a.max(b), length });
                }
                other => return Err(err(ln, format!("unrecognized record '{other}'"))),
            }
        }
        if !saw_magic {
            return Err(err(0, "empty graph file".into()));
        }
        let start_id = start_id.ok_or_else(|| err(0, "missing start record".into()))?;
        let goal_id = goal_id.ok_or_else(|| err(0, "missing goal record".into()))?;
        let g = WaypointGraph { waypoints, edges, start_id, goal_id };
        g.check_indices()?;
        Ok(g)
    }

    fn check_indices(&self) -> Result<(), SamplerError> {
        let n = self.waypoints.len();
        if self.start_id >= n || self.goal_id >= n {
            return Err(SamplerError::BadGraph("start/goal id out of range".into()));
        }
        for e in &self.edges {
            if e.a >= n || e.b >= n {
                return Err(SamplerError::BadGraph(format!("edge {}-{} out of range", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(SamplerError::BadGraph(format!("self edge at {}", e.a)));
            }
        }
        Ok(())
    }

    /// Re-check the geometric invariants against a map: waypoints collision
    /// free, edges segment-free, stored lengths consistent.
    pub fn validate(&self, map: &GridMap, robot_radius: f64) -> Result<(), SamplerError> {
        self.check_indices()?;
        for wp in &self.waypoints {
            if !map.is_free(&wp.pose, robot_radius)? {
                return Err(SamplerError::BadGraph(format!("waypoint {} in collision", wp.id)));
            }
        }
        for e in &self.edges {
            let pa = &self.waypoints[e.a].pose;
            let pb = &self.waypoints[e.b].pose;
            let len = pa.distance_xy(pb);
            if (len - e.length).abs() > 1e-6 {
                return Err(SamplerError::BadGraph(format!(
                    "edge {}-{} stored length {} but geometry says {len}",
                    e.a, e.b, e.length
                )));
            }
            if !map.segment_free(pa, pb, robot_radius)? {
                return Err(SamplerError::BadGraph(format!("edge {}-{} crosses an obstacle", e.a, e.b)));
            }
        }
        if !self.connects_start_goal() {
            return Err(SamplerError::DisconnectedStartGoal);
        }
        Ok(())
    }
}
