#include "sca/attacks.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "sca/synth.hpp"

namespace sca::attacks {

namespace {

constexpr int kClasses = 256;

// Class means over all samples; empty classes flagged by count 0.
struct ClassMeans {
  Mat means = Mat();                 // one row per present class
  std::vector<int> present;          // class ids, ascending
};

ClassMeans class_means(const TraceMatrix& set) {
  std::array<Eigen::Index, kClasses> count{};
  for (const auto& l : set.labels()) ++count[static_cast<size_t>(l.key_byte)];

  ClassMeans cm;
  std::array<int, kClasses> slot{};
  slot.fill(-1);
  for (int c = 0; c < kClasses; ++c) {
    if (count[static_cast<size_t>(c)] > 0) {
      slot[static_cast<size_t>(c)] = static_cast<int>(cm.present.size());
      cm.present.push_back(c);
    }
  }
  cm.means = Mat::Zero(static_cast<Eigen::Index>(cm.present.size()), set.cols());
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    cm.means.row(slot[static_cast<size_t>(set.label(i).key_byte)]) += set.samples().row(i);
  }
  for (size_t s = 0; s < cm.present.size(); ++s) {
    cm.means.row(static_cast<Eigen::Index>(s)) /=
        static_cast<double>(count[static_cast<size_t>(cm.present[s])]);
  }
  return cm;
}

}  // namespace

PoiSet dom_poi(const TraceMatrix& set, int n_poi) {
  if (n_poi < 1) throw RangeError("dom_poi: n_poi must be >= 1");
  if (n_poi > set.cols()) throw RangeError("dom_poi: n_poi exceeds trace length");
  const ClassMeans cm = class_means(set);
  if (cm.present.size() < 2) {
    throw InsufficientDataError("dom_poi: need at least 2 distinct key classes");
  }

  Vec score = Vec::Zero(set.cols());
  const auto k = static_cast<Eigen::Index>(cm.present.size());
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      score += (cm.means.row(a) - cm.means.row(b)).cwiseAbs().transpose();
    }
  }

  std::vector<int> order(static_cast<size_t>(set.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&score](int a, int b) { return score[a] > score[b]; });

  PoiSet pois;
  pois.indices.assign(order.begin(), order.begin() + n_poi);
  for (int idx : pois.indices) pois.scores.push_back(score[idx]);
  return pois;
}

TemplateSet fit_templates(const TraceMatrix& set, const PoiSet& pois) {
  const auto k_vars = static_cast<Eigen::Index>(pois.indices.size());
  if (k_vars < 1) throw RangeError("fit_templates: need at least one POI");
  for (int idx : pois.indices) {
    if (idx < 0 || idx >= set.cols()) throw RangeError("fit_templates: POI index out of range");
  }

  // POI submatrix plus per-class row lists.
  Mat poi_cols(set.rows(), k_vars);
  for (Eigen::Index v = 0; v < k_vars; ++v) {
    poi_cols.col(v) = set.samples().col(pois.indices[static_cast<size_t>(v)]);
  }
  std::array<std::vector<Eigen::Index>, kClasses> rows;
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    rows[static_cast<size_t>(set.label(i).key_byte)].push_back(i);
  }

  TemplateSet out;
  out.poi_indices = pois.indices;
  out.regularization = 1e-9 * poi_cols.array().square().mean();

  for (int c = 0; c < kClasses; ++c) {
    const auto& idx = rows[static_cast<size_t>(c)];
    if (idx.empty()) continue;
    if (static_cast<Eigen::Index>(idx.size()) < k_vars + 1) {
      throw InsufficientDataError("fit_templates: class " + std::to_string(c) + " has " +
                                  std::to_string(idx.size()) + " traces, needs at least " +
                                  std::to_string(k_vars + 1));
    }
    GaussianTemplate t;
    t.mean = Vec::Zero(k_vars);
    for (Eigen::Index i : idx) t.mean += poi_cols.row(i).transpose();
    t.mean /= static_cast<double>(idx.size());

    t.covariance = Mat::Zero(k_vars, k_vars);
    for (Eigen::Index i : idx) {
      const Vec d = poi_cols.row(i).transpose() - t.mean;
      t.covariance += d * d.transpose();
    }
    t.covariance /= static_cast<double>(idx.size() - 1);
    t.covariance.diagonal().array() += out.regularization;
    out.classes[static_cast<size_t>(c)] = std::move(t);
  }
  return out;
}

double template_log_density(const GaussianTemplate& tmpl, const Vec& x) {
  const auto k = tmpl.mean.size();
  if (x.size() != k) throw DimensionError("template_log_density: dimension mismatch");
  Eigen::LLT<Mat> llt(tmpl.covariance);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("template_log_density: covariance not positive definite");
  }
  const Vec d = x - tmpl.mean;
  const Vec z = llt.matrixL().solve(d);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (z.squaredNorm() + log_det + static_cast<double>(k) * std::log(2.0 * std::numbers::pi));
}

int template_classify(const TemplateSet& templates, const Vec& poi_vector) {
  int best_class = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < kClasses; ++c) {
    const auto& t = templates.classes[static_cast<size_t>(c)];
    if (!t) continue;
    const double ld = template_log_density(*t, poi_vector);
    if (ld > best) {
      best = ld;
      best_class = c;
    }
  }
  if (best_class < 0) throw InsufficientDataError("template_classify: no fitted classes");
  return best_class;
}

double template_accuracy(const TemplateSet& templates, const TraceMatrix& test) {
  const auto k_vars = static_cast<Eigen::Index>(templates.poi_indices.size());
  Eigen::Index correct = 0;
  Vec x(k_vars);
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    for (Eigen::Index v = 0; v < k_vars; ++v) {
      x[v] = test.samples()(i, templates.poi_indices[static_cast<size_t>(v)]);
    }
    if (template_classify(templates, x) == test.label(i).key_byte) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

std::vector<CpaResult> cpa(const TraceMatrix& set) {
  const Eigen::Index m = set.rows();
  const Eigen::Index n = set.cols();
  if (m < 2) throw InsufficientDataError("cpa: need at least 2 traces");

  // Per-column first and second moments.
  const Vec t_mean = set.samples().colwise().mean().transpose();
  Mat centered = set.samples().rowwise() - t_mean.transpose();
  const Vec t_ss = centered.array().square().colwise().sum().transpose();

  std::vector<CpaResult> results(kClasses);
  Vec h(m);
  for (int g = 0; g < kClasses; ++g) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& l = set.label(i);
      h[i] = static_cast<double>(synth::hamming_weight(
          synth::sbox_lookup(static_cast<uint8_t>(l.plaintext_byte ^ g))));
    }
    const double h_mean = h.mean();
    h.array() -= h_mean;
    const double h_ss = h.squaredNorm();

    CpaResult r;
    r.guess = g;
    if (h_ss > 0.0) {
      const Vec cross = centered.transpose() * h;  // per-column covariance numerator
      for (Eigen::Index j = 0; j < n; ++j) {
        if (t_ss[j] <= 0.0) continue;
        const double rho = std::abs(cross[j] / std::sqrt(h_ss * t_ss[j]));
        if (rho > r.score) {
          r.score = rho;
          r.best_sample = static_cast<int>(j);
        }
      }
    }
    results[static_cast<size_t>(g)] = r;
  }

  std::stable_sort(results.begin(), results.end(), [](const CpaResult& a, const CpaResult& b) {
    return a.score > b.score;
  });
  return results;
}

std::vector<DeviceGroup> form_groups(int j, int n_devices) {
  if (j < 1 || j > n_devices) throw RangeError("form_groups: j must be in [1, n_devices]");
  std::vector<DeviceGroup> groups;
  for (int i = 1;; ++i) {
    const int k = (i - 1) * j + 1;
    if (k + j - 1 > n_devices) break;
    DeviceGroup g;
    g.index = i;
    for (int d = k; d <= k + j - 1; ++d) g.members.push_back(d);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::pair<Mat, std::vector<int>> device_mean_traces(const TraceMatrix& set) {
  const std::vector<int> ids = device_ids(set);
  Mat means = Mat::Zero(static_cast<Eigen::Index>(ids.size()), set.cols());
  std::vector<Eigen::Index> counts(ids.size(), 0);
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), set.label(i).device_id);
    const auto d = static_cast<Eigen::Index>(it - ids.begin());
    means.row(d) += set.samples().row(i);
    ++counts[static_cast<size_t>(d)];
  }
  for (Eigen::Index d = 0; d < means.rows(); ++d) {
    means.row(d) /= static_cast<double>(counts[static_cast<size_t>(d)]);
  }
  return {std::move(means), ids};
}

std::vector<int> outlier_count(const Mat& per_device_means) {
  const Eigen::Index d = per_device_means.rows();
  const Eigen::Index n = per_device_means.cols();
  if (d < 3) throw InsufficientDataError("outlier_count: need at least 3 devices");

  const Vec mu = per_device_means.colwise().mean().transpose();
  Vec sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ss = (per_device_means.col(j).array() - mu[j]).square().sum();
    sigma[j] = std::sqrt(ss / static_cast<double>(d - 1));
  }

  std::vector<int> counts(static_cast<size_t>(d), 0);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = per_device_means(i, j);
      if (v < mu[j] - 3.0 * sigma[j] || v > mu[j] + 3.0 * sigma[j]) {
        ++counts[static_cast<size_t>(i)];
      }
    }
  }
  return counts;
}

}  // namespace sca::attacks
