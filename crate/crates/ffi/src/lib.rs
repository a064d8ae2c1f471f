//! C ABI over `fsd-core`.
//!
//! Every fallible call returns an [`FsdStatus`]; on failure the message is
//! available from [`fsd_last_error_message`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `_free` function. Strings returned through out-parameters are released
//! with [`fsd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fsd_core::fusion::{fuse_position, FusionMatch, FusionParams};
use fsd_core::harness::{ScenarioConfig, Simulation};
use fsd_core::perception::{
    dbscan_labels, filter_near_ground, ClusterParams, ConeObservation, GroundFilterParams, Source,
};
use fsd_core::planning::{lookahead_distance, steering_for_alpha, PursuitParams};
use fsd_core::sensors::{LidarPoint, LidarScan};
use fsd_core::world::{generate_track, ConeColor, TrackSpec, VehicleState};
use fsd_core::{Error, Vec2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    NotReady = 5,
    Io = 6,
    Panic = 7,
}

/// Scenario configuration handle.
pub struct FsdScenario {
    config: ScenarioConfig,
}

/// Running closed-loop simulation handle.
pub struct FsdSimulation {
    sim: Option<Simulation>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FsdVec2 {
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FsdPoint3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FsdVehicleState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub v: f64,
    pub yaw_rate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> FsdStatus {
    match e {
        Error::Config(_) | Error::Json(_) => FsdStatus::Config,
        Error::Runtime { .. } => FsdStatus::Runtime,
        Error::Io(_) | Error::Csv(_) => FsdStatus::Io,
        _ => FsdStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (FsdStatus, String)>) -> FsdStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside fsd-ffi");
            FsdStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (FsdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FsdStatus, String) {
    (FsdStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (FsdStatus, String) {
    (FsdStatus::InvalidArgument, msg.into())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (FsdStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (FsdStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

fn to_ffi_state(s: &VehicleState) -> FsdVehicleState {
    FsdVehicleState {
        x: s.x,
        y: s.y,
        yaw: s.yaw,
        v: s.v,
        yaw_rate: s.yaw_rate,
    }
}

/// Message for the last failed call on this thread. Empty after a
/// successful call. Valid until the next fsd call on this thread.
#[no_mangle]
pub extern "C" fn fsd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fsd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fsd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scenario with every parameter at its default.
#[no_mangle]
pub extern "C" fn fsd_scenario_default() -> *mut FsdScenario {
    Box::into_raw(Box::new(FsdScenario {
        config: ScenarioConfig::default(),
    }))
}

/// Parses and validates a scenario JSON document. Missing fields take
/// their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_scenario_from_json(
    json: *const c_char,
    out: *mut *mut FsdScenario,
) -> FsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let config = ScenarioConfig::from_json(text).map_err(core_err)?;
        config.validate().map_err(core_err)?;
        *out = Box::into_raw(Box::new(FsdScenario { config }));
        Ok(())
    })
}

/// Canonical JSON form of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_scenario_to_json(
    scenario: *const FsdScenario,
    out: *mut *mut c_char,
) -> FsdStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        write_string(out, s.config.to_canonical_json())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsd_scenario_set_seed(scenario: *mut FsdScenario, seed: u64) -> FsdStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        s.config.seed = seed;
        Ok(())
    })
}

/// Stops the run after `ticks` ticks instead of a lap count. Zero restores
/// the lap limit from the scenario defaults.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsd_scenario_set_tick_limit(
    scenario: *mut FsdScenario,
    ticks: u64,
) -> FsdStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        if ticks == 0 {
            s.config.limits = ScenarioConfig::default().limits;
        } else {
            s.config.limits.ticks = Some(ticks);
            s.config.limits.laps = None;
        }
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fsd_scenario_free(scenario: *mut FsdScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Builds a simulation from a copy of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_new(
    scenario: *const FsdScenario,
    out: *mut *mut FsdSimulation,
) -> FsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let sim = Simulation::new(s.config.clone()).map_err(core_err)?;
        *out = Box::into_raw(Box::new(FsdSimulation { sim: Some(sim) }));
        Ok(())
    })
}

fn live(sim: &mut FsdSimulation) -> Result<&mut Simulation, (FsdStatus, String)> {
    sim.sim
        .as_mut()
        .ok_or_else(|| invalid("simulation is unusable after a runtime error"))
}

/// Advances one tick. `running` receives false once the run is over.
/// A runtime error leaves the handle unusable except for `_free`.
///
/// # Safety
/// `sim` must be a live handle; `running` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_step(
    sim: *mut FsdSimulation,
    running: *mut bool,
) -> FsdStatus {
    guard(|| {
        let handle = sim.as_mut().ok_or_else(|| null("sim"))?;
        match live(handle)?.step() {
            Ok(r) => {
                if !running.is_null() {
                    *running = r;
                }
                Ok(())
            }
            Err(e) => {
                handle.sim = None;
                Err(core_err(e))
            }
        }
    })
}

/// Steps until the run ends. `ticks` receives the total tick count.
///
/// # Safety
/// `sim` must be a live handle; `ticks` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_run(sim: *mut FsdSimulation, ticks: *mut u64) -> FsdStatus {
    guard(|| {
        let handle = sim.as_mut().ok_or_else(|| null("sim"))?;
        let s = live(handle)?;
        loop {
            match s.step() {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    handle.sim = None;
                    return Err(core_err(e));
                }
            }
        }
        if !ticks.is_null() {
            *ticks = s.tick();
        }
        Ok(())
    })
}

/// Ground-truth vehicle state.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_truth(
    sim: *mut FsdSimulation,
    out: *mut FsdVehicleState,
) -> FsdStatus {
    guard(|| {
        let s = live(sim.as_mut().ok_or_else(|| null("sim"))?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = to_ffi_state(s.truth());
        Ok(())
    })
}

/// Filtered state estimate. Returns `NOT_READY` before the first GNSS fix.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_estimate(
    sim: *mut FsdSimulation,
    out: *mut FsdVehicleState,
) -> FsdStatus {
    guard(|| {
        let s = live(sim.as_mut().ok_or_else(|| null("sim"))?)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = s
            .localizer()
            .state()
            .ok_or((FsdStatus::NotReady, "no GNSS fix yet".to_string()))?;
        *out = FsdVehicleState {
            x: e.mean[0],
            y: e.mean[1],
            yaw: e.mean[2],
            v: e.mean[3],
            yaw_rate: e.mean[4],
        };
        Ok(())
    })
}

/// Ticks completed so far, or 0 for a null or unusable handle.
///
/// # Safety
/// `sim` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_tick(sim: *const FsdSimulation) -> u64 {
    sim.as_ref()
        .and_then(|h| h.sim.as_ref())
        .map_or(0, |s| s.tick())
}

/// Metrics of the run so far as a JSON document.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_metrics_json(
    sim: *mut FsdSimulation,
    out: *mut *mut c_char,
) -> FsdStatus {
    guard(|| {
        let s = live(sim.as_mut().ok_or_else(|| null("sim"))?)?;
        let m = s.current_metrics().map_err(core_err)?;
        write_string(
            out,
            serde_json::to_string_pretty(&m).map_err(|e| invalid(e.to_string()))?,
        )
    })
}

/// Exported cone map as `{"cones": [...]}`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_map_json(
    sim: *mut FsdSimulation,
    out: *mut *mut c_char,
) -> FsdStatus {
    guard(|| {
        let s = live(sim.as_mut().ok_or_else(|| null("sim"))?)?;
        let map = fsd_core::harness::ConeMapExport {
            cones: s.map().export(),
        };
        write_string(
            out,
            serde_json::to_string(&map).map_err(|e| invalid(e.to_string()))?,
        )
    })
}

/// # Safety
/// `sim` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fsd_simulation_free(sim: *mut FsdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Track layout JSON for a track spec (null for the default spec).
///
/// # Safety
/// `spec_json` must be NUL-terminated or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_generate_track_json(
    spec_json: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> FsdStatus {
    guard(|| {
        let spec: TrackSpec = if spec_json.is_null() {
            TrackSpec::default()
        } else {
            serde_json::from_str(read_str(spec_json, "spec_json")?)
                .map_err(|e| (FsdStatus::Config, e.to_string()))?
        };
        let layout = generate_track(&spec, seed).map_err(core_err)?;
        write_string(
            out,
            serde_json::to_string(&layout).map_err(|e| invalid(e.to_string()))?,
        )
    })
}

/// Speed-scheduled lookahead `clamp(k_ld·v + l_fc, l_min, l_max)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_lookahead_distance(
    v: f64,
    k_ld: f64,
    l_fc: f64,
    l_min: f64,
    l_max: f64,
    out: *mut f64,
) -> FsdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = PursuitParams {
            k_ld,
            l_fc,
            l_min,
            l_max,
        };
        let mut errors = Vec::new();
        params.validate(&mut errors, "pursuit");
        if !v.is_finite() {
            errors.push("v must be finite".into());
        }
        if !errors.is_empty() {
            return Err(invalid(errors.join("; ")));
        }
        *out = lookahead_distance(v, &params);
        Ok(())
    })
}

/// Pure Pursuit steering `atan(2L·sin α / L_d)`, unclamped.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_pure_pursuit_steer(
    alpha: f64,
    wheelbase: f64,
    lookahead: f64,
    out: *mut f64,
) -> FsdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(alpha.is_finite() && wheelbase > 0.0 && lookahead > 0.0) {
            return Err(invalid(
                "need finite alpha and positive wheelbase and lookahead",
            ));
        }
        *out = steering_for_alpha(alpha, wheelbase, lookahead);
        Ok(())
    })
}

/// Weighted average of a matched camera/LiDAR pair. Weights need not be
/// normalised but must be non-negative with a positive sum.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsd_fuse_position(
    camera: FsdVec2,
    lidar: FsdVec2,
    w_camera: f64,
    w_lidar: f64,
    out: *mut FsdVec2,
) -> FsdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let obs = |p: FsdVec2, source| ConeObservation {
            position: Vec2::new(p.x, p.y),
            color: ConeColor::Unknown,
            confidence: 0.5,
            source,
            point_count: 0,
        };
        let m = FusionMatch {
            lidar_index: 0,
            camera_index: 0,
            lidar_obs: obs(lidar, Source::Lidar),
            camera_det: obs(camera, Source::Camera),
            distance_score: 0.0,
            cost: 0.0,
        };
        let f =
            fuse_position(&m, (w_camera, w_lidar), &FusionParams::default()).map_err(core_err)?;
        *out = FsdVec2 {
            x: f.position.x,
            y: f.position.y,
        };
        Ok(())
    })
}

/// Copies the points with `h_ground < z < h_ground + band` into `out`,
/// which must hold `count` points, and writes how many were kept.
///
/// # Safety
/// `points` and `out` must each hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn fsd_filter_near_ground(
    points: *const FsdPoint3,
    count: usize,
    h_ground: f64,
    band: f64,
    out: *mut FsdPoint3,
    kept: *mut usize,
) -> FsdStatus {
    guard(|| {
        let kept = kept.as_mut().ok_or_else(|| null("kept"))?;
        if count > 0 && (points.is_null() || out.is_null()) {
            return Err(null("points or out"));
        }
        if band.is_nan() || band <= 0.0 {
            return Err(invalid("band must be positive"));
        }
        let input = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(points, count)
        };
        let scan = LidarScan {
            timestamp: 0.0,
            points: input
                .iter()
                .map(|p| LidarPoint {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                })
                .collect(),
        };
        let near = filter_near_ground(&scan, &GroundFilterParams { h_ground, band });
        for (i, p) in near.iter().enumerate() {
            ptr::write(
                out.add(i),
                FsdPoint3 {
                    x: p.x,
                    y: p.y,
                    z: p.z,
                },
            );
        }
        *kept = near.len();
        Ok(())
    })
}

/// DBSCAN over planar points. `labels` receives a cluster index per point,
/// or -1 for noise.
///
/// # Safety
/// `points` and `labels` must each hold `count` elements.
#[no_mangle]
pub unsafe extern "C" fn fsd_dbscan(
    points: *const FsdVec2,
    count: usize,
    eps: f64,
    min_samples: usize,
    labels: *mut i64,
) -> FsdStatus {
    guard(|| {
        if count > 0 && (points.is_null() || labels.is_null()) {
            return Err(null("points or labels"));
        }
        let params = ClusterParams { eps, min_samples };
        let mut errors = Vec::new();
        params.validate(&mut errors, "cluster");
        if !errors.is_empty() {
            return Err(invalid(errors.join("; ")));
        }
        if count == 0 {
            return Ok(());
        }
        let pts: Vec<Vec2> = std::slice::from_raw_parts(points, count)
            .iter()
            .map(|p| Vec2::new(p.x, p.y))
            .collect();
        let out = std::slice::from_raw_parts_mut(labels, count);
        for (o, l) in out.iter_mut().zip(dbscan_labels(&pts, &params)) {
            *o = l.map_or(-1, |c| c as i64);
        }
        Ok(())
    })
}
