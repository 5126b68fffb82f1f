#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "sca/errors.hpp"

namespace sca {

/// Row-major so each trace occupies a contiguous block of memory.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// One power trace: a fixed-length series of amplitudes in arbitrary units.
class Trace {
 public:
  explicit Trace(Vec samples);

  const Vec& samples() const { return samples_; }
  Eigen::Index size() const { return samples_.size(); }
  double operator[](Eigen::Index i) const { return samples_[i]; }

 private:
  Vec samples_;
};

/// Per-trace metadata. device_id is kept even though classifiers never see
/// it: cross-device evaluation matrices are grouped by it.
struct TraceLabel {
  int key_byte = 0;        // 0..255
  int plaintext_byte = 0;  // 0..255
  int device_id = 1;       // >= 1

  friend bool operator==(const TraceLabel&, const TraceLabel&) = default;
};

/// M traces of identical length N plus M labels. Immutable after
/// construction; safe to share across threads read-only.
class TraceMatrix {
 public:
  TraceMatrix(Mat samples, std::vector<TraceLabel> labels);

  const Mat& samples() const { return samples_; }
  const std::vector<TraceLabel>& labels() const { return labels_; }
  const TraceLabel& label(Eigen::Index i) const { return labels_[static_cast<size_t>(i)]; }

  Eigen::Index rows() const { return samples_.rows(); }
  Eigen::Index cols() const { return samples_.cols(); }

  Trace trace(Eigen::Index i) const { return Trace(samples_.row(i).transpose()); }

 private:
  Mat samples_;
  std::vector<TraceLabel> labels_;
};

struct SplitSpec {
  double train_fraction = 0.8;  // strictly in (0,1)
  uint64_t seed = 0;
};

/// Concatenate trace sets row-wise. All inputs must share the sample
/// length; label provenance and input order are preserved.
TraceMatrix merge(const std::vector<TraceMatrix>& sets);

/// Deterministic stratified train/test split. Per key-byte class the train
/// count is within +-1 of class_count * train_fraction (largest-remainder
/// allocation), so a balanced input stays balanced.
std::pair<TraceMatrix, TraceMatrix> split(const TraceMatrix& set, const SplitSpec& spec);

/// Rows whose label carries the given device id, original order.
TraceMatrix filter_by_device(const TraceMatrix& set, int device_id);

/// Device ids present, ascending, deduplicated.
std::vector<int> device_ids(const TraceMatrix& set);

/// Seeded Fisher-Yates row permutation.
TraceMatrix shuffle_rows(const TraceMatrix& set, uint64_t seed);

}  // namespace sca
