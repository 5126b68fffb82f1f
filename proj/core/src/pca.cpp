#include "sca/pca.hpp"

#include <Eigen/SVD>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace sca::pca {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model I/O assumes a little-endian host");

void fix_signs(Mat& components) {
  for (Eigen::Index c = 0; c < components.cols(); ++c) {
    Eigen::Index at = 0;
    components.col(c).cwiseAbs().maxCoeff(&at);
    if (components(at, c) < 0.0) components.col(c) = -components.col(c);
  }
}

}  // namespace

std::pair<TraceMatrix, Vec> mean_adjust(const TraceMatrix& set) {
  if (set.rows() < 2) throw InsufficientDataError("mean_adjust: need at least 2 traces");
  Vec mean = set.samples().colwise().mean().transpose();
  Mat centered = set.samples().rowwise() - mean.transpose();
  return {TraceMatrix(std::move(centered), set.labels()), std::move(mean)};
}

PcaModel fit(const TraceMatrix& set, Eigen::Index p) {
  const Eigen::Index n = set.cols();
  if (p < 1 || p > n) throw RangeError("pca::fit: p must be in [1, N]");
  if (set.rows() < 2) throw InsufficientDataError("pca::fit: need at least 2 traces");

  auto [centered, mean] = mean_adjust(set);

  // Thin V suffices while p fits inside min(M, N); a rank-deficient
  // request (p beyond it) needs the full orthonormal basis, where the
  // trailing columns span the null space with eigenvalue 0.
  const bool need_full = p > std::min(set.rows(), n);
  Eigen::BDCSVD<Mat> svd(centered.samples(),
                         need_full ? Eigen::ComputeFullV : Eigen::ComputeThinV);

  const Vec& sigma = svd.singularValues();
  Vec eigenvalues = Vec::Zero(p);
  const Eigen::Index available = std::min<Eigen::Index>(sigma.size(), p);
  for (Eigen::Index i = 0; i < available; ++i) {
    eigenvalues[i] = sigma[i] * sigma[i] / static_cast<double>(set.rows() - 1);
  }

  Mat components = svd.matrixV().leftCols(p);
  fix_signs(components);

  return PcaModel{std::move(mean), std::move(components), std::move(eigenvalues)};
}

TraceMatrix project(const PcaModel& model, const TraceMatrix& set) {
  if (set.cols() != model.input_dim()) {
    throw DimensionError("pca::project: set has " + std::to_string(set.cols()) +
                         " samples per trace, model expects " +
                         std::to_string(model.input_dim()));
  }
  Mat projected = (set.samples().rowwise() - model.mean.transpose()) * model.components;
  return TraceMatrix(std::move(projected), set.labels());
}

ExplainedVariance explained_variance(const PcaModel& model) {
  const double total = model.eigenvalues.sum();
  ExplainedVariance ev;
  ev.of_total = model.retained() == model.input_dim();
  ev.fractions = total > 0.0 ? Vec(model.eigenvalues / total) : Vec(Vec::Zero(model.retained()));
  return ev;
}

void save_model(const std::string& path, const PcaModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write("SCAP", 4);
  const auto n = static_cast<uint32_t>(model.input_dim());
  const auto p = static_cast<uint32_t>(model.retained());
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&p), 4);
  os.write(reinterpret_cast<const char*>(model.mean.data()), sizeof(double) * n);
  os.write(reinterpret_cast<const char*>(model.eigenvalues.data()), sizeof(double) * p);
  os.write(reinterpret_cast<const char*>(model.components.data()),
           static_cast<std::streamsize>(sizeof(double)) * n * p);
  if (!os) throw IoError("write failed: " + path);
}

PcaModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SCAP", 4) != 0) throw IoError("not a PCA model file: " + path);
  uint32_t n = 0, p = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&p), 4);
  if (!is || n == 0 || p == 0 || p > n) throw IoError("corrupt PCA model file: " + path);

  PcaModel m;
  m.mean.resize(n);
  m.eigenvalues.resize(p);
  m.components.resize(n, p);
  is.read(reinterpret_cast<char*>(m.mean.data()), sizeof(double) * n);
  is.read(reinterpret_cast<char*>(m.eigenvalues.data()), sizeof(double) * p);
  is.read(reinterpret_cast<char*>(m.components.data()),
          static_cast<std::streamsize>(sizeof(double)) * n * p);
  if (!is) throw IoError("truncated PCA model file: " + path);
  return m;
}

}  // namespace sca::pca
