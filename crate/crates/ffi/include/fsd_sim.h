#ifndef FSD_SIM_H
#define FSD_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FsdStatus {
  FSD_STATUS_OK = 0,
  FSD_STATUS_NULL_POINTER = 1,
  FSD_STATUS_INVALID_ARGUMENT = 2,
  FSD_STATUS_CONFIG = 3,
  FSD_STATUS_RUNTIME = 4,
  FSD_STATUS_NOT_READY = 5,
  FSD_STATUS_IO = 6,
  FSD_STATUS_PANIC = 7,
} FsdStatus;

/**
 * Scenario configuration handle.
 */
typedef struct FsdScenario FsdScenario;

/**
 * Running closed-loop simulation handle.
 */
typedef struct FsdSimulation FsdSimulation;

typedef struct FsdVehicleState {
  double x;
  double y;
  double yaw;
  double v;
  double yaw_rate;
} FsdVehicleState;

typedef struct FsdVec2 {
  double x;
  double y;
} FsdVec2;

typedef struct FsdPoint3 {
  double x;
  double y;
  double z;
} FsdPoint3;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Empty after a
 * successful call. Valid until the next fsd call on this thread.
 */
const char *fsd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fsd_version(void);

/**
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void fsd_string_free(char *s);

/**
 * Scenario with every parameter at its default.
 */
struct FsdScenario *fsd_scenario_default(void);

/**
 * Parses and validates a scenario JSON document. Missing fields take
 * their defaults.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FsdStatus fsd_scenario_from_json(const char *json, struct FsdScenario **out);

/**
 * Canonical JSON form of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_scenario_to_json(const struct FsdScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum FsdStatus fsd_scenario_set_seed(struct FsdScenario *scenario, uint64_t seed);

/**
 * Stops the run after `ticks` ticks instead of a lap count. Zero restores
 * the lap limit from the scenario defaults.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum FsdStatus fsd_scenario_set_tick_limit(struct FsdScenario *scenario, uint64_t ticks);

/**
 * # Safety
 * `scenario` must come from this library or be null.
 */
void fsd_scenario_free(struct FsdScenario *scenario);

/**
 * Builds a simulation from a copy of the scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_simulation_new(const struct FsdScenario *scenario, struct FsdSimulation **out);

/**
 * Advances one tick. `running` receives false once the run is over.
 * A runtime error leaves the handle unusable except for `_free`.
 *
 * # Safety
 * `sim` must be a live handle; `running` must be writable or null.
 */
enum FsdStatus fsd_simulation_step(struct FsdSimulation *sim, bool *running);

/**
 * Steps until the run ends. `ticks` receives the total tick count.
 *
 * # Safety
 * `sim` must be a live handle; `ticks` must be writable or null.
 */
enum FsdStatus fsd_simulation_run(struct FsdSimulation *sim, uint64_t *ticks);

/**
 * Ground-truth vehicle state.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_simulation_truth(struct FsdSimulation *sim, struct FsdVehicleState *out);

/**
 * Filtered state estimate. Returns `NOT_READY` before the first GNSS fix.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_simulation_estimate(struct FsdSimulation *sim, struct FsdVehicleState *out);

/**
 * Ticks completed so far, or 0 for a null or unusable handle.
 *
 * # Safety
 * `sim` must be a live handle or null.
 */
uint64_t fsd_simulation_tick(const struct FsdSimulation *sim);

/**
 * Metrics of the run so far as a JSON document.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_simulation_metrics_json(struct FsdSimulation *sim, char **out);

/**
 * Exported cone map as `{"cones": [...]}`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum FsdStatus fsd_simulation_map_json(struct FsdSimulation *sim, char **out);

/**
 * # Safety
 * `sim` must come from this library or be null.
 */
void fsd_simulation_free(struct FsdSimulation *sim);

/**
 * Track layout JSON for a track spec (null for the default spec).
 *
 * # Safety
 * `spec_json` must be NUL-terminated or null; `out` must be writable.
 */
enum FsdStatus fsd_generate_track_json(const char *spec_json, uint64_t seed, char **out);

/**
 * Speed-scheduled lookahead `clamp(k_ld·v + l_fc, l_min, l_max)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsdStatus fsd_lookahead_distance(double v,
                                      double k_ld,
                                      double l_fc,
                                      double l_min,
                                      double l_max,
                                      double *out);

/**
 * Pure Pursuit steering `atan(2L·sin α / L_d)`, unclamped.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsdStatus fsd_pure_pursuit_steer(double alpha,
                                      double wheelbase,
                                      double lookahead,
                                      double *out);

/**
 * Weighted average of a matched camera/LiDAR pair. Weights need not be
 * normalised but must be non-negative with a positive sum.
 *
 * # Safety
 * `out` must be writable.
 */
enum FsdStatus fsd_fuse_position(struct FsdVec2 camera,
                                 struct FsdVec2 lidar,
                                 double w_camera,
                                 double w_lidar,
                                 struct FsdVec2 *out);

/**
 * Copies the points with `h_ground < z < h_ground + band` into `out`,
 * which must hold `count` points, and writes how many were kept.
 *
 * # Safety
 * `points` and `out` must each hold `count` elements.
 */
enum FsdStatus fsd_filter_near_ground(const struct FsdPoint3 *points,
                                      size_t count,
                                      double h_ground,
                                      double band,
                                      struct FsdPoint3 *out,
                                      size_t *kept);

/**
 * DBSCAN over planar points. `labels` receives a cluster index per point,
 * or -1 for noise.
 *
 * # Safety
 * `points` and `labels` must each hold `count` elements.
 */
enum FsdStatus fsd_dbscan(const struct FsdVec2 *points,
                          size_t count,
                          double eps,
                          size_t min_samples,
                          int64_t *labels);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSD_SIM_H */
