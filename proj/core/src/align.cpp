#include "sca/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace sca::align {

namespace {

// Predecessor directions in the DP grid.
enum : uint8_t { kDiag = 0, kUpX = 1, kLeftY = 2 };

// How accumulated distance weighs each move while searching for a path.
//
// Symmetric: diagonal moves weigh 2, axis moves 1 (and the boundary pair
// weighs 2) — the c(k) accounting behind the published cost L. It is
// length-neutral: a vertical+horizontal staircase costs the same as the
// diagonal it replaces, so per-sample noise lets paths wander and, under
// iterated realignment, every wander permanently stretches the
// reference.
//
// Uniform: every pairing weighs 1, so any extra pairing strictly adds
// cost and paths stay tight unless the content genuinely mismatches.
// Realignment matches with this one.
enum class StepWeights { Symmetric, Uniform };

WarpPath dtw_impl(const double* x, Eigen::Index nx, const double* y, Eigen::Index ny,
                  StepWeights weights) {
  if (nx == 0 || ny == 0) throw EmptyInputError("dtw: empty input sequence");

  const double diag_w = weights == StepWeights::Symmetric ? 2.0 : 1.0;
  std::vector<uint8_t> back(static_cast<size_t>(nx) * static_cast<size_t>(ny));
  std::vector<double> prev(static_cast<size_t>(ny)), cur(static_cast<size_t>(ny));

  auto d = [&](Eigen::Index i, Eigen::Index j) { return std::abs(x[i] - y[j]); };

  prev[0] = diag_w * d(0, 0);
  for (Eigen::Index j = 1; j < ny; ++j) {
    prev[static_cast<size_t>(j)] = prev[static_cast<size_t>(j - 1)] + d(0, j);
    back[static_cast<size_t>(j)] = kLeftY;
  }

  for (Eigen::Index i = 1; i < nx; ++i) {
    uint8_t* brow = back.data() + static_cast<size_t>(i) * static_cast<size_t>(ny);
    cur[0] = prev[0] + d(i, 0);
    brow[0] = kUpX;
    for (Eigen::Index j = 1; j < ny; ++j) {
      const double dist = d(i, j);
      double best = prev[static_cast<size_t>(j - 1)] + diag_w * dist;
      uint8_t dir = kDiag;
      const double up = prev[static_cast<size_t>(j)] + dist;
      if (up < best) {
        best = up;
        dir = kUpX;
      }
      const double left = cur[static_cast<size_t>(j - 1)] + dist;
      if (left < best) {
        best = left;
        dir = kLeftY;
      }
      cur[static_cast<size_t>(j)] = best;
      brow[static_cast<size_t>(j)] = dir;
    }
    std::swap(prev, cur);
  }

  WarpPath path;

  Eigen::Index i = nx - 1, j = ny - 1;
  while (true) {
    path.pairs.emplace_back(static_cast<int>(i) + 1, static_cast<int>(j) + 1);
    if (i == 0 && j == 0) break;
    switch (back[static_cast<size_t>(i) * static_cast<size_t>(ny) + static_cast<size_t>(j)]) {
      case kDiag: --i; --j; break;
      case kUpX: --i; break;
      default: --j; break;
    }
  }
  std::reverse(path.pairs.begin(), path.pairs.end());

  // The reported cost is always the published normalized form, evaluated
  // on the returned path: sum of |X(x) - Y(y)| * c over pairs, c the
  // number of indices advanced (2 at the boundary pair), over nx + ny.
  double acc = 0.0;
  int px = 0, py = 0;
  for (const auto& [xi, yi] : path.pairs) {
    acc += d(xi - 1, yi - 1) * static_cast<double>((xi - px) + (yi - py));
    px = xi;
    py = yi;
  }
  path.cost = acc / static_cast<double>(nx + ny);
  return path;
}

}  // namespace

WarpPath dtw(const Trace& x, const Trace& y) {
  if (x.size() != y.size()) {
    throw DimensionError("dtw: inputs must have equal length (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
  return dtw_impl(x.samples().data(), x.size(), y.samples().data(), y.size(),
                  StepWeights::Symmetric);
}

WarpPath dtw_unequal(const Vec& x, const Vec& y) {
  return dtw_impl(x.data(), x.size(), y.data(), y.size(), StepWeights::Uniform);
}

AlignmentResult realign_set(const TraceMatrix& misaligned, const Trace& reference) {
  if (reference.size() != misaligned.cols()) {
    throw DimensionError("realign_set: reference length " + std::to_string(reference.size()) +
                         " does not match trace length " + std::to_string(misaligned.cols()));
  }

  const Eigen::Index m = misaligned.rows();
  Vec ref = reference.samples();
  Mat aligned(m, ref.size());
  Eigen::Index width = ref.size();

  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec row = misaligned.samples().row(i).transpose();
    const WarpPath path = dtw_unequal(row, ref);
    const auto k = static_cast<Eigen::Index>(path.length());

    if (k > width) {
      // The reference got stretched: re-expand every earlier row and the
      // reference itself through the y-index vector. k == width implies
      // the y-indices are the identity, so nothing to do then.
      Mat grown(m, k);
      for (Eigen::Index r = 0; r < i; ++r) {
        for (Eigen::Index p = 0; p < k; ++p) {
          grown(r, p) = aligned(r, path.pairs[static_cast<size_t>(p)].second - 1);
        }
      }
      Vec ref_grown(k);
      for (Eigen::Index p = 0; p < k; ++p) {
        ref_grown[p] = ref[path.pairs[static_cast<size_t>(p)].second - 1];
      }
      aligned = std::move(grown);
      ref = std::move(ref_grown);
      width = k;
    }

    for (Eigen::Index p = 0; p < k; ++p) {
      aligned(i, p) = row[path.pairs[static_cast<size_t>(p)].first - 1];
    }
  }

  return AlignmentResult{TraceMatrix(std::move(aligned), misaligned.labels()),
                         Trace(std::move(ref))};
}

Trace warp_to_reference(const Trace& t, const Trace& reference) {
  const WarpPath path = dtw_unequal(t.samples(), reference.samples());
  Vec out(reference.size());
  // First trace sample paired with each reference index; a repeated y in
  // the path only refines the same slot once.
  Eigen::Index next = 0;
  for (const auto& [xi, yi] : path.pairs) {
    if (yi - 1 == next) {
      out[next] = t[xi - 1];
      ++next;
    }
  }
  return Trace(std::move(out));
}

Trace resample_to_length(const Trace& t, int L) {
  if (L < 1) throw RangeError("resample_to_length: L must be >= 1");
  const Eigen::Index n = t.size();
  if (L == n) return t;

  Vec out(L);
  if (L == 1) {
    out[0] = t[0];
  } else {
    const double step = static_cast<double>(n - 1) / static_cast<double>(L - 1);
    for (int i = 0; i < L; ++i) {
      const double pos = step * static_cast<double>(i);
      const auto lo = static_cast<Eigen::Index>(std::floor(pos));
      if (lo >= n - 1) {
        out[i] = t[n - 1];
      } else {
        const double frac = pos - static_cast<double>(lo);
        out[i] = (1.0 - frac) * t[lo] + frac * t[lo + 1];
      }
    }
  }
  return Trace(std::move(out));
}

TraceMatrix resample_to_length(const TraceMatrix& set, int L) {
  if (L < 1) throw RangeError("resample_to_length: L must be >= 1");
  Mat out(set.rows(), L);
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    out.row(i) = resample_to_length(set.trace(i), L).samples().transpose();
  }
  return TraceMatrix(std::move(out), set.labels());
}

}  // namespace sca::align
