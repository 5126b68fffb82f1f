#pragma once

#include <string>

#include "sca/trace.hpp"

namespace sca::pca {

/// Principal subspace of a trace set: per-dimension means, unit
/// eigenvectors of the covariance matrix (columns, descending
/// eigenvalue), and the retained eigenvalues.
struct PcaModel {
  Vec mean;             // length N
  Mat components;       // N x p, orthonormal columns
  Vec eigenvalues;      // length p, nonincreasing, >= 0 numerically
  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index retained() const { return components.cols(); }
};

/// Subtract each column's mean. Returns the centered set and the mean
/// vector.
std::pair<TraceMatrix, Vec> mean_adjust(const TraceMatrix& set);

/// Fit the principal subspace, keeping the first p components.
///
/// Computed through the thin SVD of the mean-adjusted matrix
/// (singular_value^2 / (M - 1) = eigenvalue), which is the same
/// decomposition as the covariance eigenproblem but stable for long
/// traces. Eigenvector signs follow a fixed convention: the entry of
/// largest magnitude is positive.
PcaModel fit(const TraceMatrix& set, Eigen::Index p);

/// Project onto the retained components: (V_m' * X_adj')' = X_adj * V_m,
/// centering with the model's stored (training) mean.
TraceMatrix project(const PcaModel& model, const TraceMatrix& set);

struct ExplainedVariance {
  Vec fractions;        // length p, nonincreasing
  bool of_total;        // true iff p == N so fractions sum to 1
};

/// Per-component share of variance. Fractions are of the total variance
/// when the model retains all N components, otherwise of the retained
/// variance only (flagged).
ExplainedVariance explained_variance(const PcaModel& model);

/// Model file: "SCAP" | N u32 | p u32 | mean | eigenvalues | components
/// (row-major), all float64 little-endian.
void save_model(const std::string& path, const PcaModel& model);
PcaModel load_model(const std::string& path);

}  // namespace sca::pca
