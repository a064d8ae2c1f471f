use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Pose2, Vec2};
use crate::sensors::ImuSample;

pub const STATE_DIM: usize = 5;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum StateIndex {
    X = 0,
    Y = 1,
    Yaw = 2,
    V = 3,
    YawRate = 4,
}

/// Filter tuning. Process noise is a spectral density: `Q·dt` is added per
/// prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EkfConfig {
    pub process_noise: [f64; STATE_DIM],
    pub initial_sigma_v: f64,
    pub initial_sigma_yaw_rate: f64,
    /// Floor applied to measurement variances so noiseless runs stay
    /// well-conditioned.
    pub min_measurement_variance: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            process_noise: [1e-4, 1e-4, 1e-4, 4e-3, 0.5],
            initial_sigma_v: 0.1,
            initial_sigma_yaw_rate: 0.1,
            min_measurement_variance: 1e-8,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self, errors: &mut Vec<String>, prefix: &str) {
        if self
            .process_noise
            .iter()
            .any(|q| !(*q > 0.0 && q.is_finite()))
        {
            errors.push(format!("{prefix}.process_noise: every entry must be > 0"));
        }
        if !(self.initial_sigma_v >= 0.0 && self.initial_sigma_yaw_rate >= 0.0) {
            errors.push(format!("{prefix}.initial_sigma: must be >= 0"));
        }
        if !(self.min_measurement_variance > 0.0) {
            errors.push(format!("{prefix}.min_measurement_variance: must be > 0"));
        }
    }

    pub fn q(&self) -> StateMatrix {
        StateMatrix::from_diagonal(&StateVector::from(self.process_noise))
    }
}

/// Mean `[x, y, yaw, v, yaw_rate]` and covariance in the odom frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkfState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
    pub timestamp: f64,
}

/// Measurement residual and its normalised squared magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Innovation {
    pub residual: Vec<f64>,
    pub nis: f64,
}

impl EkfState {
    pub fn new(mean: [f64; STATE_DIM], variances: [f64; STATE_DIM], timestamp: f64) -> Self {
        Self {
            mean: StateVector::from(mean),
            covariance: StateMatrix::from_diagonal(&StateVector::from(variances)),
            timestamp,
        }
    }

    pub fn get(&self, i: StateIndex) -> f64 {
        self.mean[i as usize]
    }

    pub fn pose(&self) -> Pose2 {
        Pose2::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.mean[0], self.mean[1])
    }

    pub fn covariance_diagonal(&self) -> [f64; STATE_DIM] {
        std::array::from_fn(|i| self.covariance[(i, i)])
    }

    /// Symmetric within 1e-9 and all eigenvalues ≥ -1e-9.
    pub fn check_covariance(&self) -> Result<()> {
        check_psd(&self.covariance)
    }
}

fn check_psd(p: &StateMatrix) -> Result<()> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    let asym = (p - p.transpose()).abs().max();
    if asym > 1e-9 {
        return Err(Error::NotPsd(-asym));
    }
    let min_eig = p.symmetric_eigenvalues().min();
    if min_eig < -1e-9 {
        return Err(Error::NotPsd(min_eig));
    }
    Ok(())
}

fn symmetrize(p: StateMatrix) -> StateMatrix {
    (p + p.transpose()) * 0.5
}

/// Constant-velocity, constant-turn-rate prediction. `accel` is the measured
/// longitudinal acceleration, applied to `v` as a control input.
pub fn ekf_predict(state: &EkfState, dt: f64, accel: f64, cfg: &EkfConfig) -> Result<EkfState> {
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "predict dt {dt} outside (0, 0.5]"
        )));
    }
    if !accel.is_finite() {
        return Err(Error::NonFinite("accel"));
    }
    check_psd(&state.covariance)?;
    let m = &state.mean;
    let (yaw, v, rate) = (m[2], m[3], m[4]);
    let (s, c) = yaw.sin_cos();
    let mut mean = *m;
    mean[0] += v * c * dt;
    mean[1] += v * s * dt;
    mean[2] = normalize_angle(yaw + rate * dt);
    mean[3] += accel * dt;

    let mut f = StateMatrix::identity();
    f[(0, 2)] = -v * s * dt;
    f[(0, 3)] = c * dt;
    f[(1, 2)] = v * c * dt;
    f[(1, 3)] = s * dt;
    f[(2, 4)] = dt;
    let covariance = symmetrize(f * state.covariance * f.transpose() + cfg.q() * dt);
    Ok(EkfState {
        mean,
        covariance,
        timestamp: state.timestamp + dt,
    })
}

type Meas = SVector<f64, 2>;
type MeasCov = SMatrix<f64, 2, 2>;

fn update(
    state: &EkfState,
    h: SMatrix<f64, 2, STATE_DIM>,
    residual: Meas,
    r: MeasCov,
) -> Result<(EkfState, Innovation)> {
    let p = &state.covariance;
    let s = h * p * h.transpose() + r;
    if s.determinant().abs() < 1e-300 {
        return Err(Error::SingularInnovation);
    }
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let k = p * h.transpose() * s_inv;
    let mut mean = state.mean + k * residual;
    mean[2] = normalize_angle(mean[2]);
    // Joseph form keeps the posterior symmetric PSD
    let i_kh = StateMatrix::identity() - k * h;
    let covariance = symmetrize(i_kh * p * i_kh.transpose() + k * r * k.transpose());
    let nis = (residual.transpose() * s_inv * residual)[(0, 0)];
    Ok((
        EkfState {
            mean,
            covariance,
            timestamp: state.timestamp,
        },
        Innovation {
            residual: residual.iter().copied().collect(),
            nis,
        },
    ))
}

fn check_pd(r: &MeasCov) -> Result<()> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement covariance"));
    }
    if (r - r.transpose()).abs().max() > 1e-12 || r.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::InvalidArgument(
            "measurement covariance must be positive definite".into(),
        ));
    }
    Ok(())
}

/// Position update with `h(x) = (x, y)`.
pub fn ekf_update_gnss(
    state: &EkfState,
    z: Vec2,
    r_gnss: &SMatrix<f64, 2, 2>,
) -> Result<(EkfState, Innovation)> {
    check_pd(r_gnss)?;
    check_psd(&state.covariance)?;
    let mut h = SMatrix::<f64, 2, STATE_DIM>::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    let residual = Meas::new(z.x - state.mean[0], z.y - state.mean[1]);
    update(state, h, residual, *r_gnss)
}

/// Heading and turn-rate update with `h(x) = (yaw, yaw_rate)`; the yaw
/// residual is wrapped into (-π, π].
pub fn ekf_update_imu(
    state: &EkfState,
    z: &ImuSample,
    r_imu: &SMatrix<f64, 2, 2>,
) -> Result<(EkfState, Innovation)> {
    check_pd(r_imu)?;
    check_psd(&state.covariance)?;
    let mut h = SMatrix::<f64, 2, STATE_DIM>::zeros();
    h[(0, 2)] = 1.0;
    h[(1, 4)] = 1.0;
    let residual = Meas::new(
        normalize_angle(z.yaw - state.mean[2]),
        z.yaw_rate - state.mean[4],
    );
    update(state, h, residual, *r_imu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn diag2(a: f64, b: f64) -> SMatrix<f64, 2, 2> {
        SMatrix::<f64, 2, 2>::new(a, 0.0, 0.0, b)
    }

    fn imu(yaw: f64, rate: f64) -> ImuSample {
        ImuSample {
            timestamp: 0.0,
            yaw,
            yaw_rate: rate,
            accel: 0.0,
        }
    }

    #[test]
    fn stationary_predict_grows_by_q_dt() {
        let cfg = EkfConfig::default();
        // no velocity or turn-rate uncertainty, so F adds nothing beyond Q·dt
        let s = EkfState::new([1.0, 2.0, 0.3, 0.0, 0.0], [0.1, 0.1, 0.1, 0.0, 0.0], 0.0);
        let n = ekf_predict(&s, 0.1, 0.0, &cfg).unwrap();
        assert_eq!(n.mean, s.mean);
        let p0 = s.covariance_diagonal();
        let p1 = n.covariance_diagonal();
        for i in 0..STATE_DIM {
            assert!(
                (p1[i] - p0[i] - cfg.process_noise[i] * 0.1).abs() < 1e-12,
                "{i}"
            );
        }
    }

    #[test]
    fn straight_motion() {
        let s = EkfState::new([0.0, 0.0, 0.0, 1.0, 0.0], [0.01; 5], 0.0);
        let n = ekf_predict(&s, 0.5, 0.0, &EkfConfig::default()).unwrap();
        let n = ekf_predict(&n, 0.5, 0.0, &EkfConfig::default()).unwrap();
        assert!((n.mean[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_rejects_non_psd() {
        let mut s = EkfState::new([0.0; 5], [0.01; 5], 0.0);
        s.covariance[(0, 0)] = -1.0;
        assert!(matches!(
            ekf_predict(&s, 0.1, 0.0, &EkfConfig::default()),
            Err(Error::NotPsd(_))
        ));
        assert!(ekf_predict(
            &EkfState::new([0.0; 5], [0.01; 5], 0.0),
            0.0,
            0.0,
            &EkfConfig::default()
        )
        .is_err());
    }

    #[test]
    fn zero_innovation_keeps_mean_and_shrinks_covariance() {
        let s = EkfState::new([3.0, -1.0, 0.2, 1.0, 0.0], [1.0; 5], 0.0);
        let (n, inn) = ekf_update_gnss(&s, Vec2::new(3.0, -1.0), &diag2(0.09, 0.09)).unwrap();
        assert_eq!(n.position(), s.position());
        assert!(n.covariance[(0, 0)] < s.covariance[(0, 0)]);
        assert!(n.covariance[(1, 1)] < s.covariance[(1, 1)]);
        assert_eq!(inn.nis, 0.0);
    }

    #[test]
    fn large_prior_snaps_to_measurement() {
        let s = EkfState::new([0.0; 5], [1e6, 1e6, 0.1, 0.1, 0.1], 0.0);
        let (n, _) = ekf_update_gnss(&s, Vec2::new(5.0, 7.0), &diag2(0.01, 0.01)).unwrap();
        assert!(n.position().dist(Vec2::new(5.0, 7.0)) < 1e-6);
    }

    #[test]
    fn repeated_updates_converge_monotonically() {
        let z = Vec2::new(2.0, -3.0);
        let mut s = EkfState::new([0.0; 5], [4.0, 4.0, 0.1, 0.1, 0.1], 0.0);
        let mut last = s.position().dist(z);
        for _ in 0..20 {
            s = ekf_update_gnss(&s, z, &diag2(0.09, 0.09)).unwrap().0;
            let d = s.position().dist(z);
            assert!(d < last);
            last = d;
        }
        assert!(last < 0.1);
    }

    #[test]
    fn singular_measurement_covariance_rejected() {
        let s = EkfState::new([0.0; 5], [0.0; 5], 0.0);
        assert!(ekf_update_gnss(&s, Vec2::ZERO, &diag2(0.0, 0.0)).is_err());
    }

    #[test]
    fn imu_update_behaviour() {
        let s = EkfState::new([0.0, 0.0, 0.5, 1.0, 0.0], [0.1; 5], 0.0);
        let r = diag2(1e-4, 1e-4);
        let (n, _) = ekf_update_imu(&s, &imu(0.5, 0.0), &r).unwrap();
        assert_eq!(n.mean[2], 0.5);
        assert!(n.covariance[(2, 2)] < s.covariance[(2, 2)]);

        let s = EkfState::new([0.0, 0.0, 3.1, 1.0, 0.0], [0.1; 5], 0.0);
        let (_, inn) = ekf_update_imu(&s, &imu(-3.1, 0.0), &r).unwrap();
        let expected = 2.0 * std::f64::consts::PI - 6.2;
        assert!((inn.residual[0] - expected).abs() < 1e-12);
        assert!((inn.residual[0] - 0.083).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn predict_increases_trace(x in -10.0..10.0f64, yaw in -3.0..3.0f64, v in 0.0..5.0f64,
                                   rate in -1.0..1.0f64, p in 0.0..1.0f64, dt in 0.001..0.5f64) {
            let s = EkfState::new([x, 0.0, yaw, v, rate], [p; 5], 0.0);
            let n = ekf_predict(&s, dt, 0.0, &EkfConfig::default()).unwrap();
            prop_assert!(n.covariance.trace() > s.covariance.trace());
            prop_assert!(n.check_covariance().is_ok());
        }

        #[test]
        fn updates_stay_psd(zx in -5.0..5.0f64, zy in -5.0..5.0f64, yaw in -3.1..3.1f64, p in 1e-6..10.0f64) {
            let s = EkfState::new([0.0, 0.0, 0.0, 1.0, 0.0], [p; 5], 0.0);
            let (a, _) = ekf_update_gnss(&s, Vec2::new(zx, zy), &diag2(0.09, 0.09)).unwrap();
            prop_assert!(a.check_covariance().is_ok());
            let (b, _) = ekf_update_imu(&a, &imu(yaw, 0.1), &diag2(1e-4, 1e-5)).unwrap();
            prop_assert!(b.check_covariance().is_ok());
            prop_assert!(b.covariance[(2, 2)] <= a.covariance[(2, 2)]);
        }
    }
}
