/* C interface for the antibunch beam-correlation library.
 *
 * Generated from crates/ffi/src/lib.rs (cbindgen layout); keep in sync when
 * exported signatures change. All quantities are in natural units hbar = 1,
 * mass = 1, lengths in units of the lateral source window w.
 */

#ifndef ANTIBUNCH_H
#define ANTIBUNCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible entry point. */
typedef enum AbStatus {
  AB_OK = 0,
  AB_NULL_POINTER = 1,
  AB_INVALID_PARAM = 2,
  AB_DOMAIN_ERROR = 3,
  AB_CONVERGENCE = 4,
  AB_FAR_FIELD = 5,
  AB_VALIDATION = 6,
} AbStatus;

/* Opaque collinear measurement handle. */
typedef struct AbSetup AbSetup;

/* Statistics codes: 0 fermion, 1 boson, 2 classical.
 * Method codes: 0 analytic, 1 gaussian reduction, 2 full numeric. */

/* Message describing the most recent error on this thread. The pointer is
 * valid until the next failing call on the same thread. */
const char *ab_last_error_message(void);

/* Library version string (static storage). */
const char *ab_version(void);

/* Create a collinear setup; writes the handle to `out` on AB_OK. */
AbStatus ab_setup_new_collinear(double w,
                                double w_z,
                                double beta,
                                double mu,
                                double mass,
                                int statistics,
                                double coupling,
                                double k0,
                                double dk_perp,
                                double dk_z,
                                double a,
                                double d,
                                double z1,
                                double z2,
                                AbSetup **out);

/* Destroy a setup handle. Accepts NULL. */
void ab_setup_free(AbSetup *setup);

/* Move the detectors of an existing setup. */
AbStatus ab_setup_set_z(AbSetup *setup, double z1, double z2);

/* Closed-form normalized two-particle distribution. */
AbStatus ab_c_analytic(const AbSetup *setup, double *out);

/* Normalized two-particle distribution by the chosen method.
 * rel_tol <= 0 selects the default (1e-6). abs_error may be NULL. */
AbStatus ab_c_normalized(const AbSetup *setup,
                         int method,
                         double rel_tol,
                         double *value,
                         double *abs_error);

/* Single-particle distribution at distance zbar (scales with coupling^2). */
AbStatus ab_rho1(const AbSetup *setup,
                 double zbar,
                 int method,
                 double rel_tol,
                 double *value,
                 double *abs_error);

/* Interference term (scales with coupling^4). */
AbStatus ab_interference(const AbSetup *setup,
                         int method,
                         double rel_tol,
                         double *value,
                         double *abs_error);

/* Dip depth 1 - C at zero separation (closed form). */
AbStatus ab_dip_depth_analytic(const AbSetup *setup, double *out);

/* Lateral and longitudinal coherence lengths of the setup. */
AbStatus ab_coherence_lengths(const AbSetup *setup,
                              double *lateral,
                              double *longitudinal);

/* Closed-form off-axis C for detectors at polar angle theta_d on opposite
 * sides of the beam axis, radii r1 and r2. */
AbStatus ab_c_offaxis(double theta_d,
                      double r1,
                      double r2,
                      double w,
                      double w_z,
                      double k0,
                      double dk_perp,
                      double dk_z,
                      double a,
                      double d,
                      int statistics,
                      double *out);

/* Closed-form C for the mirror pair r1 = (x, y, z), r2 = (-x, -y, z). */
AbStatus ab_c_symmetric_pair(double x,
                             double y,
                             double z,
                             double w,
                             double w_z,
                             double k0,
                             double dk_perp,
                             double dk_z,
                             double a,
                             double d,
                             int statistics,
                             double *out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ANTIBUNCH_H */
