/* C interface to the monopolist laboratory.
 *
 * Every function returns a status code; outputs are written through
 * pointers. On any nonzero return, mono_last_error() describes what went
 * wrong (thread-local, valid until the next call on the same thread).
 */
#ifndef MONOPOLIST_H
#define MONOPOLIST_H

#ifdef __cplusplus
extern "C" {
#endif

enum {
    MONO_OK = 0,
    MONO_ERR_INVALID = 1, /* bad arguments or malformed config */
    MONO_ERR_SOLVER = 2,  /* solver failed to converge */
    MONO_ERR_VERIFY = 3,  /* verification checks failed */
    MONO_ERR_IO = 4       /* missing or unwritable artifacts */
};

typedef struct mono_field mono_field;
typedef struct mono_summary mono_summary;

const char* mono_last_error(void);
void mono_string_free(char* s);

/* ---- fields ------------------------------------------------------------ */

int mono_field_read(const char* path, mono_field** out);
int mono_field_write(const mono_field* f, const char* path);
int mono_field_shape(const mono_field* f, int* n, double* a);
/* Row-major n*n values, owned by the field. */
int mono_field_values(const mono_field* f, const double** data);
void mono_field_free(mono_field* f);

/* ---- pipeline ----------------------------------------------------------
 * config_json uses the same schema as the CLI config file; NULL or ""
 * means all defaults. Artifacts land in the config's "out" directory.
 */

int mono_run_solve(const char* config_json, mono_summary** out);

int mono_summary_regime(const mono_summary* s, char* regime);
int mono_summary_areas(const mono_summary* s, double areas[3]);
int mono_summary_scalars(const mono_summary* s, double* mass_balance,
                         double* neumann_min, double* energy);
void mono_summary_free(mono_summary* s);

/* Table of per-a records plus the B->C bracket, as a JSON string the
 * caller releases with mono_string_free. */
int mono_run_scan(double a_min, double a_max, int steps,
                  const char* config_json, char** table_json);

/* Returns MONO_ERR_VERIFY when checks fail, MONO_ERR_IO when the
 * directory has no artifacts; the report JSON is written into dir. */
int mono_run_verify(const char* dir, const char* config_json);

int mono_export_field(const char* input, const char* format,
                      const char* output);

/* Leaf ODE profile written as CSV (theta,m,mprime,h,b,R). h0 <= 0 picks
 * a + 0.5. */
int mono_run_ode(double a, double theta0, double h0, double r0, double step,
                 const char* csv_path);

/* Free-boundary fit; writes the candidate bundle into out_dir and reports
 * the fitted residual objective. */
int mono_run_assemble(const char* config_json, double* objective);

#ifdef __cplusplus
}
#endif

#endif /* MONOPOLIST_H */
