#pragma once

#include <utility>
#include <vector>

#include "sca/trace.hpp"

namespace sca::align {

/// Monotone warp path z(k) = (x(k), y(k)), 1-based, k = 1..K, with
///   x(1) = y(1) = 1, x(K) = len(X), y(K) = len(Y),
///   each step advancing x and/or y by one.
/// cost is the normalized accumulated distance
///   L = (1 / (len(X) + len(Y))) * sum_k |X(x(k)) - Y(y(k))| * c(k)
/// with c(k) the number of indices advanced at step k and c(1) = 2, which
/// for equal lengths T is the 1/(2T) form.
struct WarpPath {
  std::vector<std::pair<int, int>> pairs;
  double cost = 0.0;

  size_t length() const { return pairs.size(); }
};

/// Optimal warp path between two equal-length traces under the c(k)
/// accounting above. Unequal lengths are rejected; the realignment loop
/// below relaxes that internally where a stretched reference makes the
/// lengths drift apart.
WarpPath dtw(const Trace& x, const Trace& y);

/// Unequal-length matcher used by the realignment loop: same step and
/// boundary constraints, but the search weighs every pairing equally, so
/// any extra pairing strictly adds cost and the path cannot wander on
/// per-sample noise (the c(k) accounting is length-neutral, which under
/// iterated realignment snowballs noise wiggles into runaway reference
/// growth). The reported cost is still the normalized c(k) form of the
/// returned path.
WarpPath dtw_unequal(const Vec& x, const Vec& y);

struct AlignmentResult {
  TraceMatrix aligned;       // M x W_M
  Trace modified_reference;  // length W_M
};

/// Iterative whole-set realignment: warps each row against the current
/// (progressively stretched) reference, re-expanding all previously
/// aligned rows through the reference-side index vector whenever the
/// reference grows. Output rows and the modified reference share the
/// final width W_M. Sequential by contract.
AlignmentResult realign_set(const TraceMatrix& misaligned, const Trace& reference);

/// Warp one trace onto a frozen reference's timeline (no further
/// reference stretching): output[w] is the trace sample the optimal path
/// pairs with reference index w, so the result always has the
/// reference's length and is column-comparable with rows realigned
/// against that reference. Used for attack traces against a persisted
/// modified reference.
Trace warp_to_reference(const Trace& t, const Trace& reference);

/// Linear-interpolation resampling onto L uniformly spaced points;
/// endpoints preserved (L = 1 keeps the first sample).
Trace resample_to_length(const Trace& t, int L);
TraceMatrix resample_to_length(const TraceMatrix& set, int L);

}  // namespace sca::align
