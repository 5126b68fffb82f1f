#include "sca/nn.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace sca::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model I/O assumes a little-endian host");

double he_limit(Eigen::Index fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

void fill_uniform(double* data, Eigen::Index n, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < n; ++i) data[i] = dist(rng);
}

void write_raw(std::ostream& os, const double* data, Eigen::Index n) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(sizeof(double)) * n);
}

void read_raw(std::istream& is, double* data, Eigen::Index n) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(sizeof(double)) * n);
  if (!is) throw IoError("truncated model file");
}

Mat softmax(Mat logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
  return logits;
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(Eigen::Index in, Eigen::Index out, std::mt19937_64& init_rng)
    : w(in, out), b(Vec::Zero(out)), grad_w(Mat::Zero(in, out)), grad_b(Vec::Zero(out)) {
  fill_uniform(w.data(), in * out, he_limit(in), init_rng);
}

Mat Dense::forward(const Mat& x, std::mt19937_64&) {
  x_cache_ = x;
  return infer(x);
}

Mat Dense::infer(const Mat& x) const { return (x * w).rowwise() + b.transpose(); }

Mat Dense::backward(const Mat& grad_out) {
  grad_w = x_cache_.transpose() * grad_out;
  grad_b = grad_out.colwise().sum().transpose();
  return grad_out * w.transpose();
}

void Dense::collect(std::vector<ParamView>& out) {
  out.push_back({"dense.w", w.data(), grad_w.data(), w.size(), true});
  out.push_back({"dense.b", b.data(), grad_b.data(), b.size(), false});
}

void Dense::save(std::ostream& os) const {
  write_raw(os, w.data(), w.size());
  write_raw(os, b.data(), b.size());
}

void Dense::load(std::istream& is) {
  read_raw(is, w.data(), w.size());
  read_raw(is, b.data(), b.size());
}

// ------------------------------------------------------------ BatchNorm

BatchNorm::BatchNorm(Eigen::Index features)
    : gamma(Vec::Ones(features)),
      beta(Vec::Zero(features)),
      running_mean(Vec::Zero(features)),
      running_var(Vec::Ones(features)),
      grad_gamma(Vec::Zero(features)),
      grad_beta(Vec::Zero(features)) {}

Mat BatchNorm::forward(const Mat& x, std::mt19937_64&) {
  const Vec mean = x.colwise().mean().transpose();
  Mat centered = x.rowwise() - mean.transpose();
  const Vec var = centered.cwiseProduct(centered).colwise().mean().transpose();
  inv_std_ = (var.array() + epsilon).rsqrt().matrix();

  x_hat_ = centered * inv_std_.asDiagonal();
  Mat out = x_hat_ * gamma.asDiagonal();
  out.rowwise() += beta.transpose();

  running_mean = momentum * running_mean + (1.0 - momentum) * mean;
  running_var = momentum * running_var + (1.0 - momentum) * var;
  return out;
}

Mat BatchNorm::infer(const Mat& x) const {
  const Vec inv = (running_var.array() + epsilon).rsqrt().matrix();
  Mat out = (x.rowwise() - running_mean.transpose()) * inv.asDiagonal() * gamma.asDiagonal();
  out.rowwise() += beta.transpose();
  return out;
}

Mat BatchNorm::backward(const Mat& grad_out) {
  const auto batch = static_cast<double>(grad_out.rows());
  grad_gamma = grad_out.cwiseProduct(x_hat_).colwise().sum().transpose();
  grad_beta = grad_out.colwise().sum().transpose();

  Mat dxhat = grad_out * gamma.asDiagonal();
  const Vec sum_dxhat = dxhat.colwise().sum().transpose();
  const Vec sum_dxhat_xhat = dxhat.cwiseProduct(x_hat_).colwise().sum().transpose();

  Mat dx = batch * dxhat;
  dx.rowwise() -= sum_dxhat.transpose();
  dx -= x_hat_ * sum_dxhat_xhat.asDiagonal();
  dx *= (1.0 / batch);
  dx = dx * inv_std_.asDiagonal();
  return dx;
}

void BatchNorm::collect(std::vector<ParamView>& out) {
  out.push_back({"bn.gamma", gamma.data(), grad_gamma.data(), gamma.size(), false});
  out.push_back({"bn.beta", beta.data(), grad_beta.data(), beta.size(), false});
}

void BatchNorm::save(std::ostream& os) const {
  write_raw(os, gamma.data(), gamma.size());
  write_raw(os, beta.data(), beta.size());
  write_raw(os, running_mean.data(), running_mean.size());
  write_raw(os, running_var.data(), running_var.size());
}

void BatchNorm::load(std::istream& is) {
  read_raw(is, gamma.data(), gamma.size());
  read_raw(is, beta.data(), beta.size());
  read_raw(is, running_mean.data(), running_mean.size());
  read_raw(is, running_var.data(), running_var.size());
}

// ----------------------------------------------------------------- Relu

Mat Relu::forward(const Mat& x, std::mt19937_64&) {
  mask_ = (x.array() > 0.0).cast<double>().matrix();
  return x.cwiseProduct(mask_);
}

Mat Relu::infer(const Mat& x) const { return x.cwiseMax(0.0); }

Mat Relu::backward(const Mat& grad_out) { return grad_out.cwiseProduct(mask_); }

// -------------------------------------------------------------- Dropout

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw RangeError("dropout rate must be in [0, 1)");
}

Mat Dropout::forward(const Mat& x, std::mt19937_64& rng) {
  if (rate_ == 0.0) {
    mask_ = Mat::Ones(x.rows(), x.cols());
    return x;
  }
  if (!frozen_ || mask_.rows() != x.rows() || mask_.cols() != x.cols()) {
    const double keep = 1.0 - rate_;
    std::bernoulli_distribution survive(keep);
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        mask_(i, j) = survive(rng) ? 1.0 / keep : 0.0;
      }
    }
  }
  return x.cwiseProduct(mask_);
}

Mat Dropout::infer(const Mat& x) const { return x; }

Mat Dropout::backward(const Mat& grad_out) { return grad_out.cwiseProduct(mask_); }

// --------------------------------------------------------------- Conv1d

Conv1d::Conv1d(int in_ch, int in_len, int out_ch, int ksize, std::mt19937_64& init_rng)
    : in_channels(in_ch),
      in_length(in_len),
      out_channels(out_ch),
      kernel_size(ksize),
      out_length(in_len - ksize + 1),
      w(out_ch, in_ch * ksize),
      b(Vec::Zero(out_ch)),
      grad_w(Mat::Zero(out_ch, in_ch * ksize)),
      grad_b(Vec::Zero(out_ch)) {
  if (out_length < 1) {
    throw ConfigError("conv1d: input length " + std::to_string(in_len) +
                      " shorter than kernel " + std::to_string(ksize));
  }
  fill_uniform(w.data(), w.size(), he_limit(in_ch * ksize), init_rng);
}

Mat Conv1d::run(const Mat& x) const {
  Mat out(x.rows(), static_cast<Eigen::Index>(out_channels) * out_length);
  Mat col(static_cast<Eigen::Index>(in_channels) * kernel_size, out_length);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < in_channels; ++c) {
      const double* src = x.row(r).data() + static_cast<Eigen::Index>(c) * in_length;
      for (int k = 0; k < kernel_size; ++k) {
        col.row(static_cast<Eigen::Index>(c) * kernel_size + k) =
            Eigen::Map<const Eigen::RowVectorXd>(src + k, out_length);
      }
    }
    Mat block = w * col;
    block.colwise() += b;
    std::memcpy(out.row(r).data(), block.data(),
                sizeof(double) * static_cast<size_t>(block.size()));
  }
  return out;
}

Mat Conv1d::forward(const Mat& x, std::mt19937_64&) {
  x_cache_ = x;
  return run(x);
}

Mat Conv1d::infer(const Mat& x) const { return run(x); }

Mat Conv1d::backward(const Mat& grad_out) {
  grad_w.setZero();
  grad_b.setZero();
  Mat dx = Mat::Zero(x_cache_.rows(), x_cache_.cols());
  Mat col(static_cast<Eigen::Index>(in_channels) * kernel_size, out_length);

  for (Eigen::Index r = 0; r < x_cache_.rows(); ++r) {
    for (int c = 0; c < in_channels; ++c) {
      const double* src = x_cache_.row(r).data() + static_cast<Eigen::Index>(c) * in_length;
      for (int k = 0; k < kernel_size; ++k) {
        col.row(static_cast<Eigen::Index>(c) * kernel_size + k) =
            Eigen::Map<const Eigen::RowVectorXd>(src + k, out_length);
      }
    }
    const Eigen::Map<const Mat> dy_block(grad_out.row(r).data(), out_channels, out_length);
    grad_w += dy_block * col.transpose();
    grad_b += dy_block.rowwise().sum();

    const Mat dcol = w.transpose() * dy_block;  // (in_ch*ksize) x out_length
    double* dst = dx.row(r).data();
    for (int c = 0; c < in_channels; ++c) {
      for (int k = 0; k < kernel_size; ++k) {
        const auto crow = dcol.row(static_cast<Eigen::Index>(c) * kernel_size + k);
        double* d = dst + static_cast<Eigen::Index>(c) * in_length + k;
        for (int t = 0; t < out_length; ++t) d[t] += crow[t];
      }
    }
  }
  return dx;
}

void Conv1d::collect(std::vector<ParamView>& out) {
  out.push_back({"conv.w", w.data(), grad_w.data(), w.size(), true});
  out.push_back({"conv.b", b.data(), grad_b.data(), b.size(), false});
}

void Conv1d::save(std::ostream& os) const {
  write_raw(os, w.data(), w.size());
  write_raw(os, b.data(), b.size());
}

void Conv1d::load(std::istream& is) {
  read_raw(is, w.data(), w.size());
  read_raw(is, b.data(), b.size());
}

// ------------------------------------------------------------ MaxPool1d

MaxPool1d::MaxPool1d(int ch, int in_len, int p)
    : channels(ch), in_length(in_len), pool(p), out_length(in_len / p) {
  if (pool < 1) throw RangeError("maxpool: pool size must be >= 1");
  if (out_length < 1) throw ConfigError("maxpool: input length shorter than pool size");
}

Mat MaxPool1d::run(const Mat& x) const {
  Mat out(x.rows(), static_cast<Eigen::Index>(channels) * out_length);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < channels; ++c) {
      const double* src = x.row(r).data() + static_cast<Eigen::Index>(c) * in_length;
      double* dst = out.row(r).data() + static_cast<Eigen::Index>(c) * out_length;
      for (int t = 0; t < out_length; ++t) {
        const double* win = src + static_cast<Eigen::Index>(t) * pool;
        double best = win[0];
        for (int k = 1; k < pool; ++k) best = std::max(best, win[k]);
        dst[t] = best;
      }
    }
  }
  return out;
}

Mat MaxPool1d::forward(const Mat& x, std::mt19937_64&) {
  in_cols_ = x.cols();
  argmax_.resize(x.rows(), static_cast<Eigen::Index>(channels) * out_length);
  Mat out(x.rows(), static_cast<Eigen::Index>(channels) * out_length);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < channels; ++c) {
      const Eigen::Index base = static_cast<Eigen::Index>(c) * in_length;
      const double* src = x.row(r).data() + base;
      for (int t = 0; t < out_length; ++t) {
        const Eigen::Index w0 = static_cast<Eigen::Index>(t) * pool;
        Eigen::Index best_k = 0;
        double best = src[w0];
        for (int k = 1; k < pool; ++k) {
          if (src[w0 + k] > best) {
            best = src[w0 + k];
            best_k = k;
          }
        }
        const Eigen::Index oc = static_cast<Eigen::Index>(c) * out_length + t;
        out(r, oc) = best;
        argmax_(r, oc) = base + w0 + best_k;
      }
    }
  }
  return out;
}

Mat MaxPool1d::infer(const Mat& x) const { return run(x); }

Mat MaxPool1d::backward(const Mat& grad_out) {
  Mat dx = Mat::Zero(grad_out.rows(), in_cols_);
  for (Eigen::Index r = 0; r < grad_out.rows(); ++r) {
    for (Eigen::Index j = 0; j < grad_out.cols(); ++j) {
      dx(r, argmax_(r, j)) += grad_out(r, j);
    }
  }
  return dx;
}

// -------------------------------------------------------------- Network

Network::Network(Arch arch, Eigen::Index input_dim) : arch_(arch), input_dim_(input_dim) {
  if (input_dim < 1) throw RangeError("network input dimension must be >= 1");
}

Mat Network::forward(const Mat& x) {
  if (x.cols() != input_dim_) {
    throw DimensionError("network forward: batch width " + std::to_string(x.cols()) +
                         " does not match input dimension " + std::to_string(input_dim_));
  }
  Mat h = x;
  for (auto& layer : layers_) h = layer->forward(h, rng_);
  return softmax(std::move(h));
}

Mat Network::infer(const Mat& x) const {
  if (x.cols() != input_dim_) {
    throw DimensionError("network infer: batch width " + std::to_string(x.cols()) +
                         " does not match input dimension " + std::to_string(input_dim_));
  }
  Mat h = x;
  for (const auto& layer : layers_) h = layer->infer(h);
  return softmax(std::move(h));
}

void Network::backward(const Mat& probs, std::span<const int> labels, double l2_lambda) {
  const auto batch = probs.rows();
  Mat g = probs;
  for (Eigen::Index i = 0; i < batch; ++i) g(i, labels[static_cast<size_t>(i)]) -= 1.0;
  g /= static_cast<double>(batch);

  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);

  if (l2_lambda != 0.0) {
    for (auto& p : params()) {
      if (!p.weight_decay) continue;
      Eigen::Map<Eigen::ArrayXd> grad(p.grad, p.size);
      Eigen::Map<const Eigen::ArrayXd> value(p.value, p.size);
      grad += 2.0 * l2_lambda * value;
    }
  }
}

std::vector<ParamView> Network::params() {
  std::vector<ParamView> out;
  for (auto& layer : layers_) layer->collect(out);
  return out;
}

void Network::set_dropout_frozen(bool frozen) {
  for (auto& layer : layers_) {
    if (auto* d = dynamic_cast<Dropout*>(layer.get())) d->freeze(frozen);
  }
}

Network make_mlp(Eigen::Index input_dim, uint64_t seed) {
  std::mt19937_64 init_rng(seed);
  Network net(Arch::Mlp, input_dim);
  net.add(std::make_unique<Dense>(input_dim, 100, init_rng));
  net.add(std::make_unique<BatchNorm>(100));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Dropout>(0.10));
  net.add(std::make_unique<Dense>(100, 100, init_rng));
  net.add(std::make_unique<BatchNorm>(100));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Dense>(100, kClasses, init_rng));
  net.seed_rng(seed + 1);
  return net;
}

Network make_cnn(Eigen::Index input_len, uint64_t seed) {
  constexpr int kFilters = 70, kKernel = 60, kPool = 3, kHidden = 150;
  if (input_len < 121) {
    throw ConfigError("cnn: input length must be >= 121 (two kernel-60 convolutions plus pool)");
  }
  std::mt19937_64 init_rng(seed);
  Network net(Arch::Cnn, input_len);
  const int len1 = static_cast<int>(input_len) - kKernel + 1;
  const int len2 = len1 - kKernel + 1;
  const int pooled = len2 / kPool;
  net.add(std::make_unique<Conv1d>(1, static_cast<int>(input_len), kFilters, kKernel, init_rng));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv1d>(kFilters, len1, kFilters, kKernel, init_rng));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<MaxPool1d>(kFilters, len2, kPool));
  net.add(std::make_unique<Dropout>(0.20));
  net.add(std::make_unique<Dense>(static_cast<Eigen::Index>(kFilters) * pooled, kHidden, init_rng));
  net.add(std::make_unique<BatchNorm>(kHidden));
  net.add(std::make_unique<Dropout>(0.10));
  net.add(std::make_unique<Dense>(kHidden, kClasses, init_rng));
  net.seed_rng(seed + 1);
  return net;
}

double cross_entropy(const Mat& probs, std::span<const int> labels) {
  if (probs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DimensionError("cross_entropy: label count does not match batch size");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double p = std::max(probs(i, labels[static_cast<size_t>(i)]), 1e-12);
    total -= std::log(p);
  }
  return total / static_cast<double>(probs.rows());
}

// -------------------------------------------------------------- training

namespace {

std::vector<int> label_vector(const TraceMatrix& set) {
  std::vector<int> labels(static_cast<size_t>(set.rows()));
  for (Eigen::Index i = 0; i < set.rows(); ++i) labels[static_cast<size_t>(i)] = set.label(i).key_byte;
  return labels;
}

}  // namespace

TrainReport train(Network& net, const TraceMatrix& train_set, const TraceMatrix* val_set,
                  const TrainConfig& cfg) {
  if (train_set.cols() != net.input_dim()) {
    throw DimensionError("train: set width does not match network input dimension");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw ConfigError("train: batch_size and epochs must be >= 1");
  if (cfg.l2_lambda < 0.0) throw ConfigError("train: l2_lambda must be >= 0");

  const auto t_start = std::chrono::steady_clock::now();
  const Eigen::Index m = train_set.rows();
  const std::vector<int> labels = label_vector(train_set);

  TrainReport report;
  {
    const Mat probs = net.infer(train_set.samples());
    report.initial_loss = cross_entropy(probs, labels);
  }

  std::mt19937_64 shuffle_rng(cfg.seed);
  net.seed_rng(cfg.seed ^ 0x64726f70ULL);

  auto views = net.params();
  std::vector<Vec> adam_m, adam_v;
  for (const auto& p : views) {
    adam_m.push_back(Vec::Zero(p.size));
    adam_v.push_back(Vec::Zero(p.size));
  }
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    for (Eigen::Index start = 0; start < m; start += cfg.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, m - start);
      Mat batch(bs, train_set.cols());
      std::vector<int> batch_labels(static_cast<size_t>(bs));
      for (Eigen::Index i = 0; i < bs; ++i) {
        batch.row(i) = train_set.samples().row(order[static_cast<size_t>(start + i)]);
        batch_labels[static_cast<size_t>(i)] =
            labels[static_cast<size_t>(order[static_cast<size_t>(start + i)])];
      }

      const Mat probs = net.forward(batch);
      const double ce = cross_entropy(probs, batch_labels);
      if (!std::isfinite(ce)) {
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch + 1));
      }
      epoch_loss += ce * static_cast<double>(bs);
      seen += bs;

      net.backward(probs, batch_labels, cfg.l2_lambda);

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (size_t p = 0; p < views.size(); ++p) {
        Eigen::Map<Eigen::ArrayXd> value(views[p].value, views[p].size);
        Eigen::Map<const Eigen::ArrayXd> grad(views[p].grad, views[p].size);
        adam_m[p].array() = cfg.beta1 * adam_m[p].array() + (1.0 - cfg.beta1) * grad;
        adam_v[p].array() = cfg.beta2 * adam_v[p].array() + (1.0 - cfg.beta2) * grad.square();
        value -= cfg.learning_rate * (adam_m[p].array() / bc1) /
                 ((adam_v[p].array() / bc2).sqrt() + cfg.adam_epsilon);
      }
    }

    report.train_loss.push_back(epoch_loss / static_cast<double>(seen));
    report.train_accuracy.push_back(accuracy(net, train_set));
    if (val_set != nullptr) report.val_accuracy.push_back(accuracy(net, *val_set));

    if (cfg.verbose) {
      std::string line = "epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
                         "  loss " + std::to_string(report.train_loss.back()) + "  train_acc " +
                         std::to_string(report.train_accuracy.back());
      if (val_set != nullptr) line += "  val_acc " + std::to_string(report.val_accuracy.back());
      std::fputs((line + "\n").c_str(), stdout);
    }
  }

  report.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

std::vector<int> predict(const Network& net, const TraceMatrix& set) {
  constexpr Eigen::Index kChunk = 1024;
  std::vector<int> out(static_cast<size_t>(set.rows()));
  for (Eigen::Index start = 0; start < set.rows(); start += kChunk) {
    const Eigen::Index bs = std::min<Eigen::Index>(kChunk, set.rows() - start);
    const Mat probs = net.infer(set.samples().middleRows(start, bs));
    for (Eigen::Index i = 0; i < bs; ++i) {
      int best = 0;
      double best_p = probs(i, 0);
      for (int c = 1; c < kClasses; ++c) {
        if (probs(i, c) > best_p) {
          best_p = probs(i, c);
          best = c;
        }
      }
      out[static_cast<size_t>(start + i)] = best;
    }
  }
  return out;
}

double accuracy(const Network& net, const TraceMatrix& set) {
  const std::vector<int> pred = predict(net, set);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    if (pred[static_cast<size_t>(i)] == set.label(i).key_byte) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.rows());
}

// ---------------------------------------------------------------- model IO

void save_model(const std::string& path, const AttackModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);

  os.write("SCAN", 4);
  const uint16_t version = 1;
  os.write(reinterpret_cast<const char*>(&version), 2);
  const uint8_t arch = model.net.arch() == Arch::Mlp ? 0 : 1;
  os.write(reinterpret_cast<const char*>(&arch), 1);
  const auto dim = static_cast<uint32_t>(model.net.input_dim());
  os.write(reinterpret_cast<const char*>(&dim), 4);
  const uint8_t flags = (model.pca_model ? 1 : 0) | (model.dtw_reference ? 2 : 0) |
                        (model.resample_length > 0 ? 4 : 0);
  os.write(reinterpret_cast<const char*>(&flags), 1);

  for (const auto& layer : model.net.layers()) layer->save(os);

  if (model.pca_model) {
    const auto& p = *model.pca_model;
    const auto n = static_cast<uint32_t>(p.input_dim());
    const auto k = static_cast<uint32_t>(p.retained());
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&k), 4);
    write_raw(os, p.mean.data(), p.mean.size());
    write_raw(os, p.eigenvalues.data(), p.eigenvalues.size());
    write_raw(os, p.components.data(), p.components.size());
  }
  if (model.dtw_reference) {
    const auto len = static_cast<uint32_t>(model.dtw_reference->size());
    os.write(reinterpret_cast<const char*>(&len), 4);
    write_raw(os, model.dtw_reference->data(), model.dtw_reference->size());
  }
  if (model.resample_length > 0) {
    const auto len = static_cast<uint32_t>(model.resample_length);
    os.write(reinterpret_cast<const char*>(&len), 4);
  }
  if (!os) throw IoError("write failed: " + path);
}

AttackModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SCAN", 4) != 0) throw IoError("not a model file: " + path);
  uint16_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 2);
  if (version != 1) throw IoError("unsupported model file version: " + path);
  uint8_t arch = 0;
  is.read(reinterpret_cast<char*>(&arch), 1);
  uint32_t dim = 0;
  is.read(reinterpret_cast<char*>(&dim), 4);
  uint8_t flags = 0;
  is.read(reinterpret_cast<char*>(&flags), 1);
  if (!is || dim == 0) throw IoError("corrupt model file: " + path);

  AttackModel model{arch == 0 ? make_mlp(dim, 0) : make_cnn(dim, 0), std::nullopt, std::nullopt, 0};
  for (const auto& layer : model.net.layers()) layer->load(is);

  if (flags & 1) {
    uint32_t n = 0, k = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&k), 4);
    if (!is || n == 0 || k == 0 || k > n) throw IoError("corrupt embedded PCA model: " + path);
    pca::PcaModel p;
    p.mean.resize(n);
    p.eigenvalues.resize(k);
    p.components.resize(n, k);
    read_raw(is, p.mean.data(), p.mean.size());
    read_raw(is, p.eigenvalues.data(), p.eigenvalues.size());
    read_raw(is, p.components.data(), p.components.size());
    model.pca_model = std::move(p);
  }
  if (flags & 2) {
    uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 4);
    if (!is || len == 0) throw IoError("corrupt embedded reference trace: " + path);
    Vec ref(len);
    read_raw(is, ref.data(), ref.size());
    model.dtw_reference = std::move(ref);
  }
  if (flags & 4) {
    uint32_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 4);
    if (!is || len == 0) throw IoError("corrupt resample length: " + path);
    model.resample_length = static_cast<int>(len);
  }
  return model;
}

}  // namespace sca::nn
