#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sca/trace.hpp"

namespace sca::attacks {

/// Point-of-interest selection result: sample indices ordered by
/// descending difference-of-means score.
struct PoiSet {
  std::vector<int> indices;
  std::vector<double> scores;  // nonincreasing, matches indices
};

/// Per-class multivariate Gaussian over the POI columns.
struct GaussianTemplate {
  Vec mean;
  Mat covariance;  // regularized, positive definite
};

struct TemplateSet {
  std::vector<int> poi_indices;
  std::array<std::optional<GaussianTemplate>, 256> classes;
  double regularization = 0.0;  // delta added to covariance diagonals
};

/// Consecutive block of device ids used as one training group.
struct DeviceGroup {
  int index = 1;             // i in G_j(i), 1-based
  std::vector<int> members;  // device ids, consecutive
};

/// Difference-of-Means POI scores: per sample, the sum over unordered
/// key-class pairs of |mean_a - mean_b|. Returns the n_poi highest
/// positions, ties resolved toward the lower index.
PoiSet dom_poi(const TraceMatrix& set, int n_poi);

/// Per-class sample mean and unbiased covariance over the POI columns,
/// with + delta*I regularization so noiseless (constant) classes stay
/// invertible. delta = 1e-9 * mean-square amplitude of the POI columns.
TemplateSet fit_templates(const TraceMatrix& set, const PoiSet& pois);

/// Maximum-log-likelihood class for one POI vector; ties break toward the
/// lowest class index.
int template_classify(const TemplateSet& templates, const Vec& poi_vector);

/// Log of the multivariate normal density for one class template.
double template_log_density(const GaussianTemplate& tmpl, const Vec& x);

/// Fraction of traces whose key byte the templates recover.
double template_accuracy(const TemplateSet& templates, const TraceMatrix& test);

/// One key guess with its best-sample |Pearson correlation|.
struct CpaResult {
  int guess = 0;
  double score = 0.0;      // max over samples of |rho|
  int best_sample = -1;
};

/// Correlation power analysis over all 256 guesses of the first key byte:
/// hypothesis HW(SBox(p_i ^ g)) against every sample column, ranked by
/// descending max-|rho|. Zero-variance columns or hypotheses score 0.
std::vector<CpaResult> cpa(const TraceMatrix& set);

/// Consecutive disjoint groups of j devices: G_j(i) = {D(k)..D(k+j-1)},
/// k = (i-1)j + 1, while k+j-1 <= n_devices.
std::vector<DeviceGroup> form_groups(int j, int n_devices);

/// Per-device mean trace (device-averaged rows), with the device ids.
std::pair<Mat, std::vector<int>> device_mean_traces(const TraceMatrix& set);

/// The 3-sigma outlier diagnostic: per sample position, mean and standard
/// deviation across the device-averaged traces; per device, how many of
/// its samples fall outside [mu - 3 sigma, mu + 3 sigma].
std::vector<int> outlier_count(const Mat& per_device_means);

}  // namespace sca::attacks
