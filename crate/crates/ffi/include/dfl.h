#ifndef DFL_H
#define DFL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DflStatus {
  DFL_STATUS_OK = 0,
  DFL_STATUS_INVALID_ARGUMENT = 1,
  DFL_STATUS_PARSE = 2,
  DFL_STATUS_SEMANTIC = 3,
  DFL_STATUS_RESOURCE_CAP = 4,
  DFL_STATUS_NULL_POINTER = 5,
  DFL_STATUS_PANIC = 6,
} DflStatus;

/**
 * A parsed grounding table.
 */
typedef struct DflGrounding DflGrounding;

/**
 * A parsed knowledge base.
 */
typedef struct DflKb DflKb;

/**
 * An operator configuration.
 */
typedef struct DflOps DflOps;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dfl_version(void);

/**
 * Message of the last failing call on this thread; empty if none.
 */
const char *dfl_last_error(void);

/**
 * Parses `.dfl` text into a new knowledge base handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DflStatus dfl_kb_parse(const char *text, struct DflKb **out);

/**
 * Number of formulas in `kb`, or 0 for a null handle.
 *
 * # Safety
 * `kb` must be null or a live handle from [`dfl_kb_parse`].
 */
size_t dfl_kb_len(const struct DflKb *kb);

/**
 * # Safety
 * `kb` must be null or a handle from [`dfl_kb_parse`] not yet freed.
 */
void dfl_kb_free(struct DflKb *kb);

/**
 * Parses grounding text (`pred(o1,o2)=0.9` lines) into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DflStatus dfl_grounding_parse(const char *text, struct DflGrounding **out);

/**
 * # Safety
 * `g` must be null or a handle from [`dfl_grounding_parse`] not yet freed.
 */
void dfl_grounding_free(struct DflGrounding *g);

/**
 * Creates an operator configuration from a preset name (`product`,
 * `dpfl`, `godel`, `lukasiewicz`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DflStatus dfl_ops_preset(const char *name, struct DflOps **out);

/**
 * Sets `tnorm`, `tconorm`, `implication`, `aggregator` or `preset`.
 *
 * # Safety
 * `ops` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum DflStatus dfl_ops_set(struct DflOps *ops, const char *key, const char *value);

/**
 * # Safety
 * `ops` must be null or a handle from [`dfl_ops_preset`] not yet freed.
 */
void dfl_ops_free(struct DflOps *ops);

/**
 * Valuates `kb` over every object of `g`. Writes the weighted total
 * valuation and the loss (its negation).
 *
 * # Safety
 * Handles must be live; `valuation` and `loss` writable.
 */
enum DflStatus dfl_eval(const struct DflKb *kb,
                        const struct DflGrounding *g,
                        const struct DflOps *ops,
                        double *valuation,
                        double *loss);

/**
 * Loss derivative with respect to one ground atom, written like
 * `partOf(o2,o1)`.
 *
 * # Safety
 * Handles must be live; `atom` NUL-terminated; `d_loss` writable.
 */
enum DflStatus dfl_atom_gradient(const struct DflKb *kb,
                                 const struct DflGrounding *g,
                                 const struct DflOps *ops,
                                 const char *atom,
                                 double *d_loss);

/**
 * Evaluates a single operator named in the operator grammar (for example
 * `yager_tnorm:p=2` or `reichenbach`) on `n` inputs. `partials` must hold
 * `n` values. Implications take `(a, c)` and report `(dI/da, dI/dc)`.
 *
 * # Safety
 * `spec` NUL-terminated; `inputs` and `partials` valid for `n` doubles;
 * `value` writable.
 */
enum DflStatus dfl_operator_eval(const char *spec,
                                 const double *inputs,
                                 size_t n,
                                 double *value,
                                 double *partials);

/**
 * Exact Semantic Loss probability against the DPFL valuation, both as
 * probabilities, over every object of `g`.
 *
 * # Safety
 * Handles must be live; output pointers writable.
 */
enum DflStatus dfl_semantic_compare(const struct DflKb *kb,
                                    const struct DflGrounding *g,
                                    double *exact,
                                    double *dpfl,
                                    bool *single_occurrence);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFL_H */
