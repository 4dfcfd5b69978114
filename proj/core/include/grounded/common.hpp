#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace grounded {

// Malformed or inconsistent input data (CSV contents, schema, dataset invariants).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Propensity score outside [margin, 1 - margin]; the signed re-weighting
// identity breaks down at the boundary, so this is a hard error, not a clip.
struct OverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Correction design matrix is numerically rank-deficient: the confounding
// parameters cannot be identified from the unconfounded sample.
struct IdentifiabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Condition number above this is treated as singular.
inline constexpr double kSingularityThreshold = 1e10;

// Derives an independent child seed from (seed, stream). splitmix64 finalizer;
// used for per-tree, per-fold, per-sweep-cell streams so results do not depend
// on execution order or thread count.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Round half away from zero. Fixed rule for split sizes so row counts are
// reproducible across platforms and languages.
std::int64_t round_half_away(double v) noexcept;

// Warnings (constant-propensity fallback, unseen categorical levels, ...)
// go to stderr; set_warning_handler replaces the sink (nullptr restores).
void log_warn(const std::string& msg);
void set_warning_handler(std::function<void(const std::string&)> handler);

// Thread count resolution: the GROUNDED_CATE_THREADS environment variable
// wins, then `requested` (0 means "use fallback"), then `fallback`
// (0 means all hardware threads).
int resolve_threads(int requested, int fallback = 1);

// Runs fn(i) for i in [0, n) on up to `threads` threads. Callers must write
// results into pre-allocated per-index slots; the schedule is unspecified but
// outputs are then identical for any thread count.
void parallel_for(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace grounded
