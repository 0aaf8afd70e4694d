#ifndef I3KIT_H
#define I3KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum I3kitFormat {
  I3KIT_FORMAT_CSV = 0,
  I3KIT_FORMAT_JSONL = 1,
} I3kitFormat;

typedef enum I3kitGroupBy {
  I3KIT_GROUP_BY_JOURNAL = 0,
  I3KIT_GROUP_BY_COUNTRY = 1,
  I3KIT_GROUP_BY_BOTH = 2,
} I3kitGroupBy;

typedef enum I3kitStatus {
  I3KIT_STATUS_OK = 0,
  I3KIT_STATUS_NULL_POINTER = 1,
  I3KIT_STATUS_INVALID_UTF8 = 2,
  I3KIT_STATUS_INVALID_INPUT = 3,
  I3KIT_STATUS_INVALID_CONFIG = 4,
  I3KIT_STATUS_DOMAIN = 5,
  I3KIT_STATUS_IO = 6,
  I3KIT_STATUS_OUT_OF_RANGE = 7,
  I3KIT_STATUS_PANIC = 8,
} I3kitStatus;

typedef enum I3kitTiePolicy {
  I3KIT_TIE_POLICY_HIGHEST = 0,
  I3KIT_TIE_POLICY_STRICT_LOWER = 1,
} I3kitTiePolicy;

/**
 * Percentile assignments of every citable paper, sorted by id.
 */
typedef struct I3kitAssignments I3kitAssignments;

/**
 * Grouping and test configuration.
 */
typedef struct I3kitConfig I3kitConfig;

/**
 * Parsed, validated corpus.
 */
typedef struct I3kitCorpus I3kitCorpus;

/**
 * One assignment. The percentile is exact as `percentile_num / percentile_den`.
 */
typedef struct I3kitAssignment {
  int64_t percentile_num;
  int64_t percentile_den;
  double percentile;
  uint32_t class_weight;
  uint64_t citations;
} I3kitAssignment;

typedef struct I3kitKruskalWallis {
  double h;
  size_t df;
  double p;
} I3kitKruskalWallis;

typedef struct I3kitMannWhitney {
  double u;
  double u_a;
  double u_b;
  double z;
  double p;
  bool significant;
} I3kitMannWhitney;

/**
 * Library version as a static NUL-terminated string.
 */
const char *i3kit_version(void);

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call on this thread.
 */
const char *i3kit_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void i3kit_string_free(char *s);

/**
 * Parses `len` bytes of CSV or JSONL records.
 */
enum I3kitStatus i3kit_corpus_load(const uint8_t *data,
                                   size_t len,
                                   enum I3kitFormat format,
                                   struct I3kitCorpus **out_corpus);

/**
 * Number of records, citable or not.
 */
enum I3kitStatus i3kit_corpus_len(const struct I3kitCorpus *corpus, size_t *out_len);

void i3kit_corpus_free(struct I3kitCorpus *corpus);

enum I3kitStatus i3kit_config_default(struct I3kitConfig **out_config);

/**
 * Parses a JSON grouping configuration.
 */
enum I3kitStatus i3kit_config_from_json(const char *json, struct I3kitConfig **out_config);

void i3kit_config_free(struct I3kitConfig *config);

/**
 * Assigns a percentile and rank class to every citable paper.
 */
enum I3kitStatus i3kit_assign(const struct I3kitCorpus *corpus,
                              const struct I3kitConfig *config,
                              struct I3kitAssignments **out_assignments);

enum I3kitStatus i3kit_assignments_len(const struct I3kitAssignments *assignments, size_t *out_len);

enum I3kitStatus i3kit_assignments_get(const struct I3kitAssignments *assignments,
                                       size_t index,
                                       struct I3kitAssignment *out_assignment);

/**
 * Paper id of one assignment; free with [`i3kit_string_free`].
 */
enum I3kitStatus i3kit_assignments_paper_id(const struct I3kitAssignments *assignments,
                                            size_t index,
                                            char **out_id);

/**
 * Sum of all percentiles: `out_value` approximates it, `out_exact`
 * (optional) receives it as `"num/den"` or `"num"`.
 */
enum I3kitStatus i3kit_assignments_i3(const struct I3kitAssignments *assignments,
                                      double *out_value,
                                      char **out_exact);

/**
 * Assignments as CSV; free with [`i3kit_string_free`].
 */
enum I3kitStatus i3kit_assignments_csv(const struct I3kitAssignments *assignments, char **out_csv);

void i3kit_assignments_free(struct I3kitAssignments *assignments);

/**
 * Percentile of `citations` within `refset` (which must contain it), with
 * adjustment `adj_num / adj_den`. The result is `*out_num / *out_den`.
 */
enum I3kitStatus i3kit_percentile_of(uint64_t citations,
                                     const uint64_t *refset,
                                     size_t refset_len,
                                     enum I3kitTiePolicy policy,
                                     int64_t adj_num,
                                     int64_t adj_den,
                                     int64_t *out_num,
                                     int64_t *out_den);

/**
 * `100 * value / total` for finite non-negative inputs.
 */
enum I3kitStatus i3kit_share_of_total(double value, double total, double *out_percent);

double i3kit_normal_cdf(double z);

enum I3kitStatus i3kit_normal_quantile(double p, double *out_z);

enum I3kitStatus i3kit_t_two_sided_p(double t, double df, double *out_p);

enum I3kitStatus i3kit_chi_square_sf(double x, double df, double *out_p);

/**
 * Kruskal-Wallis over `group_count` groups stored back to back in
 * `values`; `group_sizes[i]` is the length of group `i`.
 */
enum I3kitStatus i3kit_kruskal_wallis(const double *values,
                                      const size_t *group_sizes,
                                      size_t group_count,
                                      struct I3kitKruskalWallis *out_result);

enum I3kitStatus i3kit_mann_whitney(const double *a,
                                    size_t a_len,
                                    const double *b,
                                    size_t b_len,
                                    double alpha,
                                    struct I3kitMannWhitney *out_result);

/**
 * Runs the full report pipeline and writes every artifact into `out_dir`.
 * `config` may be null for defaults.
 */
enum I3kitStatus i3kit_report_run(const struct I3kitCorpus *corpus,
                                  const struct I3kitConfig *config,
                                  enum I3kitGroupBy group_by,
                                  uint64_t seed,
                                  size_t threads,
                                  const char *out_dir);

#endif  /* I3KIT_H */
