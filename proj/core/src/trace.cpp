#include "sca/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace sca {

namespace {

void check_label(const TraceLabel& label, Eigen::Index row) {
  if (label.key_byte < 0 || label.key_byte > 255 || label.plaintext_byte < 0 ||
      label.plaintext_byte > 255) {
    throw RangeError("trace label " + std::to_string(row) + ": byte fields must be in [0,255]");
  }
  if (label.device_id < 1) {
    throw RangeError("trace label " + std::to_string(row) + ": device_id must be >= 1");
  }
}

}  // namespace

Trace::Trace(Vec samples) : samples_(std::move(samples)) {
  if (samples_.size() == 0) throw EmptyInputError("trace must have at least one sample");
  if (!samples_.allFinite()) throw RangeError("trace contains non-finite samples");
}

TraceMatrix::TraceMatrix(Mat samples, std::vector<TraceLabel> labels)
    : samples_(std::move(samples)), labels_(std::move(labels)) {
  if (samples_.rows() == 0 || samples_.cols() == 0) {
    throw EmptyInputError("trace matrix must be non-empty");
  }
  if (static_cast<Eigen::Index>(labels_.size()) != samples_.rows()) {
    throw DimensionError("label count " + std::to_string(labels_.size()) +
                         " does not match row count " + std::to_string(samples_.rows()));
  }
  if (!samples_.allFinite()) throw RangeError("trace matrix contains non-finite samples");
  for (Eigen::Index i = 0; i < samples_.rows(); ++i) check_label(labels_[static_cast<size_t>(i)], i);
}

TraceMatrix merge(const std::vector<TraceMatrix>& sets) {
  if (sets.empty()) throw EmptyInputError("merge: no input sets");
  const Eigen::Index n = sets.front().cols();
  Eigen::Index total = 0;
  for (const auto& s : sets) {
    if (s.cols() != n) {
      throw DimensionError("merge: sample length mismatch (" + std::to_string(s.cols()) +
                           " vs " + std::to_string(n) + ")");
    }
    total += s.rows();
  }

  Mat samples(total, n);
  std::vector<TraceLabel> labels;
  labels.reserve(static_cast<size_t>(total));
  Eigen::Index at = 0;
  for (const auto& s : sets) {
    samples.middleRows(at, s.rows()) = s.samples();
    labels.insert(labels.end(), s.labels().begin(), s.labels().end());
    at += s.rows();
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

std::pair<TraceMatrix, TraceMatrix> split(const TraceMatrix& set, const SplitSpec& spec) {
  if (set.rows() == 0) throw EmptyInputError("split: empty input set");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw RangeError("split: train_fraction must be strictly between 0 and 1");
  }

  // Group row indices by key byte.
  std::array<std::vector<Eigen::Index>, 256> by_class;
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    by_class[static_cast<size_t>(set.label(i).key_byte)].push_back(i);
  }

  // Largest-remainder allocation: per-class floor(n_c * f), then hand out
  // the remaining train slots by descending fractional part.
  const auto total_train =
      static_cast<Eigen::Index>(std::llround(static_cast<double>(set.rows()) * spec.train_fraction));
  std::vector<Eigen::Index> take(256, 0);
  std::vector<std::pair<double, int>> remainders;
  Eigen::Index allotted = 0;
  for (int c = 0; c < 256; ++c) {
    const double want = static_cast<double>(by_class[static_cast<size_t>(c)].size()) * spec.train_fraction;
    take[static_cast<size_t>(c)] = static_cast<Eigen::Index>(std::floor(want));
    allotted += take[static_cast<size_t>(c)];
    remainders.emplace_back(want - std::floor(want), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t i = 0; allotted < total_train && i < remainders.size(); ++i) {
    const int c = remainders[i].second;
    if (take[static_cast<size_t>(c)] <
        static_cast<Eigen::Index>(by_class[static_cast<size_t>(c)].size())) {
      ++take[static_cast<size_t>(c)];
      ++allotted;
    }
  }

  std::vector<Eigen::Index> train_idx, test_idx;
  std::mt19937_64 rng(spec.seed);
  for (int c = 0; c < 256; ++c) {
    auto& rows = by_class[static_cast<size_t>(c)];
    std::shuffle(rows.begin(), rows.end(), rng);
    for (size_t i = 0; i < rows.size(); ++i) {
      (static_cast<Eigen::Index>(i) < take[static_cast<size_t>(c)] ? train_idx : test_idx)
          .push_back(rows[i]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto gather = [&set](const std::vector<Eigen::Index>& idx) {
    Mat samples(static_cast<Eigen::Index>(idx.size()), set.cols());
    std::vector<TraceLabel> labels;
    labels.reserve(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      samples.row(static_cast<Eigen::Index>(i)) = set.samples().row(idx[i]);
      labels.push_back(set.label(idx[i]));
    }
    return TraceMatrix(std::move(samples), std::move(labels));
  };
  return {gather(train_idx), gather(test_idx)};
}

TraceMatrix filter_by_device(const TraceMatrix& set, int device_id) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    if (set.label(i).device_id == device_id) idx.push_back(i);
  }
  if (idx.empty()) {
    throw EmptyInputError("filter_by_device: no traces for device " + std::to_string(device_id));
  }
  Mat samples(static_cast<Eigen::Index>(idx.size()), set.cols());
  std::vector<TraceLabel> labels;
  labels.reserve(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    samples.row(static_cast<Eigen::Index>(i)) = set.samples().row(idx[i]);
    labels.push_back(set.label(idx[i]));
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

std::vector<int> device_ids(const TraceMatrix& set) {
  std::vector<int> ids;
  for (const auto& l : set.labels()) ids.push_back(l.device_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

TraceMatrix shuffle_rows(const TraceMatrix& set, uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<size_t>(set.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  Mat samples(set.rows(), set.cols());
  std::vector<TraceLabel> labels;
  labels.reserve(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    samples.row(static_cast<Eigen::Index>(i)) = set.samples().row(idx[i]);
    labels.push_back(set.label(idx[i]));
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

}  // namespace sca
