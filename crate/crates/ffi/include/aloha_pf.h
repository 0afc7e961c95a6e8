#ifndef ALOHA_PF_H
#define ALOHA_PF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApfStatus {
  APF_STATUS_OK = 0,
  APF_STATUS_NULL_POINTER = 1,
  APF_STATUS_INVALID_ARGUMENT = 2,
  APF_STATUS_DOMAIN = 3,
  APF_STATUS_NO_CONVERGENCE = 4,
  APF_STATUS_UNSUPPORTED = 5,
  APF_STATUS_OUT_OF_RANGE = 6,
  APF_STATUS_INTERNAL = 7,
} ApfStatus;

typedef enum ApfChannel {
  APF_CHANNEL_NAKAGAMI = 0,
  APF_CHANNEL_STATIC = 1,
} ApfChannel;

typedef enum ApfScheme {
  APF_SCHEME_PROPOSED = 0,
  APF_SCHEME_BENCHMARK = 1,
  APF_SCHEME_STATIC = 2,
} ApfScheme;

typedef enum ApfCase {
  /**
   * The scheme has no case split.
   */
  APF_CASE_NONE = 0,
  APF_CASE_INTERIOR = 1,
  APF_CASE_CLAMPED = 2,
} ApfCase;

typedef enum ApfBattery {
  APF_BATTERY_IDEAL = 0,
  APF_BATTERY_TRACKED = 1,
} ApfBattery;

/**
 * Two-ring network with its ring radii.
 */
typedef struct ApfNetwork ApfNetwork;

/**
 * A solved allocation together with the network it is evaluated on.
 */
typedef struct ApfPolicy ApfPolicy;

typedef struct ApfReport ApfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string
 * after a successful one. Valid until the next `apf_*` call on the thread.
 */
const char *apf_last_error_message(void);

/**
 * Builds a network with `k / 2` users at `r1` and the rest at `r2`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum ApfStatus apf_network_two_ring(size_t k,
                                    double r1,
                                    double r2,
                                    double m,
                                    double eta,
                                    double p_max,
                                    double p_avg,
                                    double n0,
                                    enum ApfChannel channel,
                                    struct ApfNetwork **out);

/**
 * Network with the default parameters and `k` users on rings `r1`, `r2`.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum ApfStatus apf_network_default(size_t k, double r1, double r2, struct ApfNetwork **out);

/**
 * # Safety
 * `network` is null or a live handle from a network constructor.
 */
size_t apf_network_k(const struct ApfNetwork *network);

/**
 * # Safety
 * `network` is null or a live handle; it must not be used afterwards.
 */
void apf_network_free(struct ApfNetwork *network);

/**
 * Solves `scheme` on `network`.
 *
 * # Safety
 * `network` is a live handle and `out` is valid for writing one pointer.
 */
enum ApfStatus apf_solve(const struct ApfNetwork *network,
                         enum ApfScheme scheme,
                         struct ApfPolicy **out);

/**
 * # Safety
 * `policy` is null or a live handle; it must not be used afterwards.
 */
void apf_policy_free(struct ApfPolicy *policy);

/**
 * # Safety
 * `policy` is null or a live handle.
 */
size_t apf_policy_k(const struct ApfPolicy *policy);

/**
 * EH fraction and BS power.
 *
 * # Safety
 * `policy` is a live handle; outputs are valid for writes.
 */
enum ApfStatus apf_policy_globals(const struct ApfPolicy *policy, double *tau0, double *p0);

/**
 * Access probability, rate and transmit power of user `index`.
 *
 * # Safety
 * `policy` is a live handle; outputs are valid for writes.
 */
enum ApfStatus apf_policy_user(const struct ApfPolicy *policy,
                               size_t index,
                               double *q,
                               double *rate,
                               double *p_tx);

/**
 * Case taken by the fixed-point solver and its residual norm (NaN for
 * schemes without diagnostics).
 *
 * # Safety
 * `policy` is a live handle; outputs are valid for writes.
 */
enum ApfStatus apf_policy_diagnostics(const struct ApfPolicy *policy,
                                      enum ApfCase *case_taken,
                                      double *residual_norm);

/**
 * Closed-form throughput report of a solved policy.
 *
 * # Safety
 * `policy` is a live handle and `out` is valid for writing one pointer.
 */
enum ApfStatus apf_analyze(const struct ApfPolicy *policy, struct ApfReport **out);

/**
 * Monte-Carlo report over `slots` slots, starting from empty batteries.
 *
 * # Safety
 * `policy` is a live handle and `out` is valid for writing one pointer.
 */
enum ApfStatus apf_simulate(const struct ApfPolicy *policy,
                            uint64_t slots,
                            uint64_t seed,
                            enum ApfBattery battery,
                            struct ApfReport **out);

/**
 * # Safety
 * `report` is null or a live handle; it must not be used afterwards.
 */
void apf_report_free(struct ApfReport *report);

/**
 * Sum throughput and Jain index (NaN when every throughput is zero).
 *
 * # Safety
 * `report` is a live handle; outputs are valid for writes.
 */
enum ApfStatus apf_report_summary(const struct ApfReport *report,
                                  double *sum_throughput,
                                  double *jain);

/**
 * Throughput of user `index`.
 *
 * # Safety
 * `report` is a live handle; `out` is valid for writes.
 */
enum ApfStatus apf_report_user_throughput(const struct ApfReport *report,
                                          size_t index,
                                          double *out);

/**
 * Principal branch of the Lambert W function.
 *
 * # Safety
 * `out` is valid for writes.
 */
enum ApfStatus apf_lambert_w0(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALOHA_PF_H */
