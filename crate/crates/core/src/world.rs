//! Geometric ground truth: occupancy grid map, point landmarks, robot poses,
//! and the collision / visibility queries everything else is built on.
//!
//! Conventions: world coordinates in meters, angles in radians normalized to
//! `(-pi, pi]`, the robot is a disc. Unknown cells block the robot (collision
//! checks treat them as occupied) but not the sensor (line of sight passes
//! through them).

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("pose outside map: ({x:.3}, {y:.3})")]
    PoseOutsideMap { x: f64, y: f64 },
    #[error("map parse error at line {line}: {msg}")]
    MapParse { line: usize, msg: String },
    #[error("landmark parse error at line {line}: {msg}")]
    LandmarkParse { line: usize, msg: String },
    #[error("duplicate landmark id {0}")]
    DuplicateLandmark(i64),
    #[error("landmark {id} at ({x:.3}, {y:.3}) outside map bounds")]
    LandmarkOutsideMap { id: i64, x: f64, y: f64 },
    #[error("invalid map geometry: {0}")]
    BadGeometry(String),
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Robot pose. `theta` is kept normalized to `(-pi, pi]` by every operation
/// in this crate; use [`Pose::new`] rather than building the struct directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: wrap_angle(theta) }
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// Euclidean distance in the plane, ignoring heading.
    pub fn distance_xy(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A point landmark the range-bearing sensor can observe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: i64,
    pub x: f64,
    pub y: f64,
}

/// Relative odometry command: rotate by `delta_rot1`, translate `delta_trans`
/// along the new heading, rotate by `delta_rot2`. `delta_trans` must be >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    pub delta_rot1: f64,
    pub delta_trans: f64,
    pub delta_rot2: f64,
}

impl Control {
    pub fn new(delta_rot1: f64, delta_trans: f64, delta_rot2: f64) -> Self {
        debug_assert!(delta_trans >= 0.0, "negative translation in control");
        Control { delta_rot1, delta_trans, delta_rot2 }
    }
}

/// Noise-free odometry motion model.
pub fn apply_control(p: &Pose, u: &Control) -> Pose {
    let heading = p.theta + u.delta_rot1;
    Pose::new(
        p.x + u.delta_trans * heading.cos(),
        p.y + u.delta_trans * heading.sin(),
        p.theta + u.delta_rot1 + u.delta_rot2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

impl Cell {
    fn to_char(self) -> char {
        match self {
            Cell::Free => '.',
            Cell::Occupied => '#',
            Cell::Unknown => '?',
        }
    }
}

/// Axis-aligned occupancy grid. Cell `(col, row)` covers the square
/// `[origin + col*res, origin + (col+1)*res) x [... row ...)`; the cells
/// vector is row-major with row 0 at the bottom (lowest y).
#[derive(Debug, Clone)]
pub struct GridMap {
    resolution: f64,
    width: usize,
    height: usize,
    origin: (f64, f64),
    cells: Vec<Cell>,
}

impl GridMap {
    pub fn new(
        resolution: f64,
        width: usize,
        height: usize,
        origin: (f64, f64),
        cells: Vec<Cell>,
    ) -> Result<Self, WorldError> {
        if resolution <= 0.0 || !resolution.is_finite() {
            return Err(WorldError::BadGeometry(format!("resolution {resolution} must be > 0")));
        }
        if width == 0 || height == 0 {
            return Err(WorldError::BadGeometry("zero-sized map".into()));
        }
        if cells.len() != width * height {
            return Err(WorldError::BadGeometry(format!(
                "cell count {} does not match {width}x{height}",
                cells.len()
            )));
        }
        Ok(GridMap { resolution, width, height, origin, cells })
    }

    /// A map filled with a single cell kind, handy for tests and synthetic
    /// scenarios.
    pub fn uniform(
        resolution: f64,
        width: usize,
        height: usize,
        origin: (f64, f64),
        fill: Cell,
    ) -> Self {
        GridMap::new(resolution, width, height, origin, vec![fill; width * height])
            .expect("uniform map geometry")
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn min_x(&self) -> f64 {
        self.origin.0
    }

    pub fn min_y(&self) -> f64 {
        self.origin.1
    }

    pub fn max_x(&self) -> f64 {
        self.origin.0 + self.width as f64 * self.resolution
    }

    pub fn max_y(&self) -> f64 {
        self.origin.1 + self.height as f64 * self.resolution
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x() && x <= self.max_x() && y >= self.min_y() && y <= self.max_y()
    }

    pub fn cell(&self, col: usize, row: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    pub fn set_cell(&mut self, col: usize, row: usize, cell: Cell) {
        self.cells[row * self.width + col] = cell;
    }

    /// Cell indices of a world point; points exactly on the upper edges clamp
    /// into the last cell so the whole closed rectangle is addressable.
    pub fn cell_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !self.contains(x, y) {
            return None;
        }
        let col = (((x - self.origin.0) / self.resolution) as usize).min(self.width - 1);
        let row = (((y - self.origin.1) / self.resolution) as usize).min(self.height - 1);
        Some((col, row))
    }

    fn blocked(cell: Cell, unknown_blocks: bool) -> bool {
        match cell {
            Cell::Free => false,
            Cell::Occupied => true,
            Cell::Unknown => unknown_blocks,
        }
    }

    /// True when the disc of `radius` around `(x, y)` overlaps a blocked cell
    /// or pokes past the map boundary. The point itself must be in bounds.
    fn disc_blocked(&self, x: f64, y: f64, radius: f64, unknown_blocks: bool) -> bool {
        if radius <= 0.0 {
            let (col, row) = self.cell_index(x, y).expect("point checked in bounds");
            return Self::blocked(self.cell(col, row), unknown_blocks);
        }
        if x - radius < self.min_x()
            || x + radius > self.max_x()
            || y - radius < self.min_y()
            || y + radius > self.max_y()
        {
            return true;
        }
        let r2 = radius * radius;
        let col_lo = (((x - radius - self.origin.0) / self.resolution).floor() as isize).max(0) as usize;
        let col_hi =
            ((((x + radius - self.origin.0) / self.resolution).floor() as isize) as usize).min(self.width - 1);
        let row_lo = (((y - radius - self.origin.1) / self.resolution).floor() as isize).max(0) as usize;
        let row_hi =
            ((((y + radius - self.origin.1) / self.resolution).floor() as isize) as usize).min(self.height - 1);
        for row in row_lo..=row_hi {
            for col in col_lo..=col_hi {
                let cell = self.cell(col, row);
                if !Self::blocked(cell, unknown_blocks) {
                    continue;
                }
                // distance from the point to the closest point of the cell
                let cx0 = self.origin.0 + col as f64 * self.resolution;
                let cy0 = self.origin.1 + row as f64 * self.resolution;
                let nx = x.clamp(cx0, cx0 + self.resolution);
                let ny = y.clamp(cy0, cy0 + self.resolution);
                let dx = x - nx;
                let dy = y - ny;
                if dx * dx + dy * dy <= r2 {
                    return true;
                }
            }
        }
        false
    }

    /// Whether a disc robot of `robot_radius` can stand at `p` without
    /// touching an occupied or unknown cell.
    pub fn is_free(&self, p: &Pose, robot_radius: f64) -> Result<bool, WorldError> {
        if !self.contains(p.x, p.y) {
            return Err(WorldError::PoseOutsideMap { x: p.x, y: p.y });
        }
        Ok(!self.disc_blocked(p.x, p.y, robot_radius, true))
    }

    fn segment_clear(
        &self,
        a: (f64, f64),
        b: (f64, f64),
        radius: f64,
        unknown_blocks: bool,
    ) -> Result<bool, WorldError> {
        for &(x, y) in &[a, b] {
            if !self.contains(x, y) {
                return Err(WorldError::PoseOutsideMap { x, y });
            }
        }
        let dist = (b.0 - a.0).hypot(b.1 - a.1);
        // interpolation step of at most half a cell so no blocked cell on the
        // segment can be stepped over
        let n = (dist / (self.resolution * 0.5)).ceil() as usize;
        let n = n.max(1);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let x = a.0 + t * (b.0 - a.0);
            let y = a.1 + t * (b.1 - a.1);
            if self.disc_blocked(x, y, radius, unknown_blocks) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the robot can slide along the straight segment from `a` to `b`.
    pub fn segment_free(&self, a: &Pose, b: &Pose, robot_radius: f64) -> Result<bool, WorldError> {
        self.segment_clear(a.xy(), b.xy(), robot_radius, true)
    }

    /// Render to the plain-text map format (header plus one ASCII row per
    /// grid row, top row first).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("occupancy-map 1\n");
        let _ = writeln!(out, "resolution {}", self.resolution);
        let _ = writeln!(out, "width {}", self.width);
        let _ = writeln!(out, "height {}", self.height);
        let _ = writeln!(out, "origin {} {}", self.origin.0, self.origin.1);
        for row in (0..self.height).rev() {
            for col in 0..self.width {
                out.push(self.cell(col, row).to_char());
            }
            out.push('\n');
        }
        out
    }

    /// Parse the plain-text map format produced by [`GridMap::to_text`].
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let err = |line: usize, msg: String| WorldError::MapParse { line, msg };
        let mut lines = text.lines().enumerate();
        let mut header_field = |name: &str| -> Result<(usize, String), WorldError> {
            loop {
                let (i, raw) = lines
                    .next()
                    .ok_or_else(|| err(0, format!("missing header field '{name}'")))?;
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                return Ok((i + 1, line.to_string()));
            }
        };

        let (ln, magic) = header_field("occupancy-map")?;
        if magic != "occupancy-map 1" {
            return Err(err(ln, format!("expected 'occupancy-map 1', found '{magic}'")));
        }
        let mut take = |name: &str| -> Result<(usize, Vec<String>), WorldError> {
            let (ln, line) = header_field(name)?;
            let mut parts = line.split_whitespace().map(str::to_string);
            let key = parts.next().unwrap_or_default();
            if key != name {
                return Err(err(ln, format!("expected '{name}', found '{key}'")));
            }
            Ok((ln, parts.collect()))
        };
        let parse_f64 = |ln: usize, s: &str| {
            s.parse::<f64>().map_err(|_| err(ln, format!("bad number '{s}'")))
        };
        let parse_usize = |ln: usize, s: &str| {
            s.parse::<usize>().map_err(|_| err(ln, format!("bad integer '{s}'")))
        };

        let (ln, v) = take("resolution")?;
        let resolution = parse_f64(ln, v.first().ok_or_else(|| err(ln, "missing value".into()))?)?;
        let (ln, v) = take("width")?;
        let width = parse_usize(ln, v.first().ok_or_else(|| err(ln, "missing value".into()))?)?;
        let (ln, v) = take("height")?;
        let height = parse_usize(ln, v.first().ok_or_else(|| err(ln, "missing value".into()))?)?;
        let (ln, v) = take("origin")?;
        if v.len() != 2 {
            return Err(err(ln, "origin needs two values".into()));
        }
        let origin = (parse_f64(ln, &v[0])?, parse_f64(ln, &v[1])?);

        let mut rows: Vec<Vec<Cell>> = Vec::with_capacity(height);
        for (i, raw) in lines {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(width);
            for c in line.chars() {
                row.push(match c {
                    '.' => Cell::Free,
                    '#' => Cell::Occupied,
                    '?' => Cell::Unknown,
                    other => return Err(err(i + 1, format!("bad cell character '{other}'"))),
                });
            }
            if row.len() != width {
                return Err(err(i + 1, format!("row has {} cells, expected {width}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != height {
            return Err(err(0, format!("found {} rows, expected {height}", rows.len())));
        }
        let mut cells = vec![Cell::Free; width * height];
        for (k, row) in rows.iter().enumerate() {
            let row_idx = height - 1 - k; // file lists the top row first
            cells[row_idx * width..(row_idx + 1) * width].copy_from_slice(row);
        }
        GridMap::new(resolution, width, height, origin, cells)
    }
}

/// Landmarks within `sensor_range` of `p` that have an unobstructed straight
/// line of sight (occupied cells block, unknown cells do not).
pub fn visible_landmarks(
    map: &GridMap,
    p: &Pose,
    landmarks: &[Landmark],
    sensor_range: f64,
) -> Vec<Landmark> {
    debug_assert!(sensor_range > 0.0);
    if !map.contains(p.x, p.y) {
        return Vec::new();
    }
    landmarks
        .iter()
        .filter(|lm| {
            let d = (lm.x - p.x).hypot(lm.y - p.y);
            d <= sensor_range
                && map
                    .segment_clear(p.xy(), (lm.x, lm.y), 0.0, false)
                    .unwrap_or(false)
        })
        .copied()
        .collect()
}

/// Parse a landmark file: one `id x y` triple per line, `#` comments allowed.
/// Ids must be unique and positions inside the map.
pub fn parse_landmarks(text: &str, map: &GridMap) -> Result<Vec<Landmark>, WorldError> {
    let mut out: Vec<Landmark> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(WorldError::LandmarkParse {
                line: i + 1,
                msg: format!("expected 'id x y', found '{line}'"),
            });
        }
        let id = parts[0].parse::<i64>().map_err(|_| WorldError::LandmarkParse {
            line: i + 1,
            msg: format!("bad id '{}'", parts[0]),
        })?;
        let x = parts[1].parse::<f64>().map_err(|_| WorldError::LandmarkParse {
            line: i + 1,
            msg: format!("bad x '{}'", parts[1]),
        })?;
        let y = parts[2].parse::<f64>().map_err(|_| WorldError::LandmarkParse {
            line: i + 1,
            msg: format!("bad y '{}'", parts[2]),
        })?;
        if out.iter().any(|lm| lm.id == id) {
            return Err(WorldError::DuplicateLandmark(id));
        }
        if !map.contains(x, y) {
            return Err(WorldError::LandmarkOutsideMap { id, x, y });
        }
        out.push(Landmark { id, x, y });
    }
    Ok(out)
}

/// Map plus landmarks, the static environment a scenario runs in.
#[derive(Debug, Clone)]
pub struct WorldModel {
    pub map: GridMap,
    pub landmarks: Vec<Landmark>,
}
