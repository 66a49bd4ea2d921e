//! Gaussian belief over the robot pose and the EKF that propagates it:
//! prediction through the odometry motion model and correction from
//! range-bearing landmark observations.
//!
//! Covariances are kept symmetric by construction (`(C + C^T) / 2` after
//! every product) and bearings are wrapped before they enter an innovation.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::world::{apply_control, wrap_angle, Control, Landmark, Pose};

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("degenerate range: landmark {0} coincides with the pose estimate")]
    DegenerateRange(i64),
    #[error("singular innovation covariance for landmark {0}")]
    SingularInnovation(i64),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("invalid noise matrix: {0}")]
    InvalidNoise(String),
}

const SYMMETRY_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = -1e-10;

fn max_asymmetry3(m: &Matrix3<f64>) -> f64 {
    let d = m - m.transpose();
    d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn symmetrize3(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Gaussian belief N(mean, cov) over (x, y, theta).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Pose,
    pub cov: Matrix3<f64>,
}

impl GaussianBelief {
    /// Build a belief, checking that the covariance is symmetric and has no
    /// eigenvalue below the numerical tolerance.
    pub fn new(mean: Pose, cov: Matrix3<f64>) -> Result<Self, BeliefError> {
        let b = GaussianBelief { mean, cov };
        b.validate()?;
        Ok(b)
    }

    /// Full covariance check; operations only debug-assert the cheap parts,
    /// tests call this after every step.
    pub fn validate(&self) -> Result<(), BeliefError> {
        if !self.cov.iter().all(|v| v.is_finite()) {
            return Err(BeliefError::InvalidCovariance("non-finite entry".into()));
        }
        let asym = max_asymmetry3(&self.cov);
        if asym > SYMMETRY_TOL {
            return Err(BeliefError::InvalidCovariance(format!("asymmetry {asym:.3e}")));
        }
        let eig = self.cov.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < EIGEN_TOL {
            return Err(BeliefError::InvalidCovariance(format!("eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Additive process noise for one prediction step (per tick).
#[derive(Debug, Clone, PartialEq)]
pub struct MotionNoise(pub Matrix3<f64>);

impl MotionNoise {
    pub fn new(r: Matrix3<f64>) -> Result<Self, BeliefError> {
        if max_asymmetry3(&r) > SYMMETRY_TOL {
            return Err(BeliefError::InvalidNoise("motion noise not symmetric".into()));
        }
        let min = r.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min < EIGEN_TOL {
            return Err(BeliefError::InvalidNoise(format!(
                "motion noise eigenvalue {min:.3e} below zero"
            )));
        }
        Ok(MotionNoise(r))
    }

    pub fn diagonal(xx: f64, yy: f64, tt: f64) -> Result<Self, BeliefError> {
        MotionNoise::new(Matrix3::from_diagonal(&Vector3::new(xx, yy, tt)))
    }

    /// Scale the whole matrix, used when re-simulating at a finer tick.
    pub fn scaled(&self, factor: f64) -> MotionNoise {
        MotionNoise(self.0 * factor)
    }
}

/// Range-bearing sensor noise, strictly positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementNoise(pub Matrix2<f64>);

impl MeasurementNoise {
    pub fn new(q: Matrix2<f64>) -> Result<Self, BeliefError> {
        let d = q - q.transpose();
        if d.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) > SYMMETRY_TOL {
            return Err(BeliefError::InvalidNoise("measurement noise not symmetric".into()));
        }
        if q.cholesky().is_none() {
            return Err(BeliefError::InvalidNoise(
                "measurement noise not positive definite".into(),
            ));
        }
        Ok(MeasurementNoise(q))
    }

    pub fn diagonal(rr: f64, bb: f64) -> Result<Self, BeliefError> {
        MeasurementNoise::new(Matrix2::from_diagonal(&Vector2::new(rr, bb)))
    }
}

/// One range-bearing observation of a known landmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub range: f64,
    pub bearing: f64,
    pub landmark_id: i64,
}

/// Whether observations are the nominal noise-free prediction (deterministic
/// planning) or sampled with measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationMode {
    Nominal,
    Sampled,
}

/// Everything the engine needs to run the filter: noise models, sensor range
/// and the observation mode.
#[derive(Debug, Clone)]
pub struct BeliefConfig {
    pub motion_noise: MotionNoise,
    pub measurement_noise: MeasurementNoise,
    pub sensor_range: f64,
    pub mode: ObservationMode,
    pub rng_seed: u64,
}

/// Jacobian of the motion model with respect to the state, evaluated at
/// `mean` for control `u`.
pub fn motion_jacobian(mean: &Pose, u: &Control) -> Matrix3<f64> {
    let heading = mean.theta + u.delta_rot1;
    let mut f = Matrix3::identity();
    f[(0, 2)] = -u.delta_trans * heading.sin();
    f[(1, 2)] = u.delta_trans * heading.cos();
    f
}

/// EKF prediction: push the belief through the motion model and inflate the
/// covariance by the linearized propagation plus process noise.
pub fn predict(b: &GaussianBelief, u: &Control, noise: &MotionNoise) -> GaussianBelief {
    let f = motion_jacobian(&b.mean, u);
    let mean = apply_control(&b.mean, u);
    let cov = symmetrize3(&(f * b.cov * f.transpose() + noise.0));
    debug_assert!(cov.iter().all(|v| v.is_finite()));
    GaussianBelief { mean, cov }
}

/// Jacobian of the range-bearing measurement with respect to the state.
pub fn measurement_jacobian(mean: &Pose, lm: &Landmark) -> Result<Matrix2x3<f64>, BeliefError> {
    let dx = lm.x - mean.x;
    let dy = lm.y - mean.y;
    let r2 = dx * dx + dy * dy;
    let r = r2.sqrt();
    if r <= 1e-9 {
        return Err(BeliefError::DegenerateRange(lm.id));
    }
    Ok(Matrix2x3::new(
        -dx / r,
        -dy / r,
        0.0,
        dy / r2,
        -dx / r2,
        -1.0,
    ))
}

/// Expected observation of `lm` from the pose `mean`.
pub fn predict_measurement(mean: &Pose, lm: &Landmark) -> Result<Measurement, BeliefError> {
    let dx = lm.x - mean.x;
    let dy = lm.y - mean.y;
    let r = dx.hypot(dy);
    if r <= 1e-9 {
        return Err(BeliefError::DegenerateRange(lm.id));
    }
    Ok(Measurement {
        range: r,
        bearing: wrap_angle(dy.atan2(dx) - mean.theta),
        landmark_id: lm.id,
    })
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps the dependency surface small and the draw order fixed
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draw an observation of `lm` from the propagated belief: the nominal
/// prediction at the belief mean corrupted with noise from `q`. The seed is
/// passed explicitly so repeated expansions of the same state draw the same
/// observation.
pub fn simulate_observation(
    b: &GaussianBelief,
    lm: &Landmark,
    q: &MeasurementNoise,
    rng_seed: u64,
) -> Result<Measurement, BeliefError> {
    let nominal = predict_measurement(&b.mean, lm)?;
    let chol = q
        .0
        .cholesky()
        .ok_or_else(|| BeliefError::InvalidNoise("measurement noise not positive definite".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = Vector2::new(standard_normal(&mut rng), standard_normal(&mut rng));
    let noise = chol.l() * n;
    Ok(Measurement {
        range: (nominal.range + noise[0]).max(1e-9),
        bearing: wrap_angle(nominal.bearing + noise[1]),
        landmark_id: lm.id,
    })
}

/// EKF correction with one landmark observation. The innovation bearing is
/// wrapped; the posterior covariance `(I - K H) Sigma` is re-symmetrized.
pub fn update(
    b: &GaussianBelief,
    z: &Measurement,
    lm: &Landmark,
    q: &MeasurementNoise,
) -> Result<GaussianBelief, BeliefError> {
    let h = measurement_jacobian(&b.mean, lm)?;
    let zhat = predict_measurement(&b.mean, lm)?;
    let s = h * b.cov * h.transpose() + q.0;
    let s_inv = s
        .try_inverse()
        .ok_or(BeliefError::SingularInnovation(lm.id))?;
    let k = b.cov * h.transpose() * s_inv;
    let innovation = Vector2::new(z.range - zhat.range, wrap_angle(z.bearing - zhat.bearing));
    let delta = k * innovation;
    let mean = Pose::new(
        b.mean.x + delta[0],
        b.mean.y + delta[1],
        b.mean.theta + delta[2],
    );
    let cov = symmetrize3(&((Matrix3::identity() - k * h) * b.cov));
    debug_assert!(cov.iter().all(|v| v.is_finite()));
    Ok(GaussianBelief { mean, cov })
}

/// Total pose uncertainty, the scalar the planner optimizes against.
pub fn trace_of(b: &GaussianBelief) -> f64 {
    b.cov.trace()
}
