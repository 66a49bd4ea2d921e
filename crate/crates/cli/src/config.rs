//! Flat key-value scenario configuration.
//!
//! One `key value` pair per line, `#` comments and blank lines allowed.
//! Numeric keys carry their unit in the name (`sensor_range_m`,
//! `delta_s`, `sigma0_theta_rad2`) so files are self-describing and
//! trivially diffable. File-path values are resolved relative to the
//! directory containing the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use navplan_core::belief::{
    BeliefConfig, GaussianBelief, MeasurementNoise, MotionNoise, ObservationMode,
};
use navplan_core::engine::SearchParams;
use navplan_core::sampler::SamplerParams;
use navplan_core::world::Pose;
use nalgebra::{Matrix3, Vector3};

/// A parsed scenario: everything needed to run the pipeline end to end.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub map: PathBuf,
    pub landmarks: PathBuf,
    pub domain: PathBuf,
    pub problem: PathBuf,
    /// Pre-built waypoint graph; when absent one is sampled from the map.
    pub graph: Option<PathBuf>,
    pub start: Pose,
    pub goal: Pose,
    pub robot_radius: f64,
    pub sampler: SamplerParams,
    pub search: SearchParams,
    pub belief: BeliefConfig,
    pub sigma0: Matrix3<f64>,
    pub initial_charge: Option<f64>,
    /// First 16 hex digits of the SHA-256 of the config file bytes; stamped
    /// into every artifact so outputs name the inputs that produced them.
    pub tag: String,
}

impl ScenarioConfig {
    /// Initial belief at the configured start pose.
    pub fn initial_belief(&self) -> Result<GaussianBelief> {
        GaussianBelief::new(self.start, self.sigma0)
            .map_err(|e| anyhow!("initial belief: {e}"))
    }

    /// Read and parse a config file; paths come back resolved against the
    /// file's directory and `tag` fingerprints the raw bytes.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
            .with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<ScenarioConfig> {
        let mut pairs: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| anyhow!("line {}: expected 'key value', found '{line}'", i + 1))?;
            let value = value.trim();
            if value.is_empty() {
                bail!("line {}: key '{key}' has no value", i + 1);
            }
            if let Some((prev, _)) = pairs.insert(key, (i + 1, value)) {
                bail!("line {}: key '{key}' already set on line {prev}", i + 1);
            }
        }

        fn take<'a>(pairs: &mut BTreeMap<&'a str, (usize, &'a str)>, key: &str) -> Option<&'a str> {
            pairs.remove(key).map(|(_, v)| v)
        }
        fn need<'a>(
            pairs: &mut BTreeMap<&'a str, (usize, &'a str)>,
            key: &str,
        ) -> Result<&'a str> {
            take(pairs, key).ok_or_else(|| anyhow!("missing required key '{key}'"))
        }
        macro_rules! num {
            ($key:expr, $ty:ty) => {
                need(&mut pairs, $key)?
                    .parse::<$ty>()
                    .map_err(|_| anyhow!("key '{}' is not a valid number", $key))?
            };
        }
        macro_rules! opt_num {
            ($key:expr, $ty:ty) => {
                match take(&mut pairs, $key) {
                    Some(v) => Some(v.parse::<$ty>().map_err(|_| {
                        anyhow!("key '{}' is not a valid number", $key)
                    })?),
                    None => None,
                }
            };
        }

        let map = base.join(need(&mut pairs, "map")?);
        let landmarks = base.join(need(&mut pairs, "landmarks")?);
        let domain = base.join(need(&mut pairs, "domain")?);
        let problem = base.join(need(&mut pairs, "problem")?);
        let graph = take(&mut pairs, "graph").map(|v| base.join(v));

        let start = Pose::new(
            num!("start_x_m", f64),
            num!("start_y_m", f64),
            num!("start_theta_rad", f64),
        );
        let goal = Pose::new(
            num!("goal_x_m", f64),
            num!("goal_y_m", f64),
            num!("goal_theta_rad", f64),
        );
        let robot_radius = num!("robot_radius_m", f64);

        let sigma0 = Matrix3::from_diagonal(&Vector3::new(
            num!("sigma0_x_m2", f64),
            num!("sigma0_y_m2", f64),
            num!("sigma0_theta_rad2", f64),
        ));
        let motion_noise = MotionNoise::diagonal(
            num!("motion_noise_x_m2", f64),
            num!("motion_noise_y_m2", f64),
            num!("motion_noise_theta_rad2", f64),
        )
        .map_err(|e| anyhow!("motion noise: {e}"))?;
        let measurement_noise = MeasurementNoise::diagonal(
            num!("meas_noise_range_m2", f64),
            num!("meas_noise_bearing_rad2", f64),
        )
        .map_err(|e| anyhow!("measurement noise: {e}"))?;
        let mode = match take(&mut pairs, "obs_mode").unwrap_or("nominal") {
            "nominal" => ObservationMode::Nominal,
            "sampled" => ObservationMode::Sampled,
            other => bail!("obs_mode must be 'nominal' or 'sampled', found '{other}'"),
        };
        let belief = BeliefConfig {
            motion_noise,
            measurement_noise,
            sensor_range: num!("sensor_range_m", f64),
            mode,
            rng_seed: opt_num!("obs_seed", u64).unwrap_or(0),
        };

        let sampler = SamplerParams {
            max_nodes: num!("max_nodes", usize),
            steer_step: num!("steer_step_m", f64),
            attraction_radius: num!("attraction_radius_m", f64),
            quota_per_landmark: num!("quota_per_landmark", usize),
            connect_radius: num!("connect_radius_m", f64),
            rng_seed: num!("sampler_seed", u64),
        };

        let search = SearchParams {
            delta: num!("delta_s", f64),
            d_factor: num!("d_factor", f64),
            horizon: num!("horizon_s", f64),
            weight: num!("weight", f64),
            alpha: num!("alpha", f64),
            beta: num!("beta", f64),
            eta: opt_num!("eta", f64),
            max_expanded: num!("max_expanded", usize),
        };
        let initial_charge = opt_num!("initial_charge", f64);

        if let Some((line, _)) = pairs.values().next() {
            let key = pairs.keys().next().unwrap();
            bail!("line {line}: unknown key '{key}'");
        }

        let tag = fingerprint(text.as_bytes());
        Ok(ScenarioConfig {
            map,
            landmarks,
            domain,
            problem,
            graph,
            start,
            goal,
            robot_radius,
            sampler,
            search,
            belief,
            sigma0,
            initial_charge,
            tag,
        })
    }
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
