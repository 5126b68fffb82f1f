#pragma once

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sca/pca.hpp"
#include "sca/trace.hpp"

namespace sca::nn {

constexpr int kClasses = 256;

/// View over one parameter tensor and its gradient buffer. weight_decay
/// marks tensors the L2 penalty applies to (weights only; biases and
/// batch-norm parameters are exempt).
struct ParamView {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  Eigen::Index size = 0;
  bool weight_decay = false;
};

/// One differentiable stage. forward() runs in training mode and caches
/// whatever backward() needs; infer() is the pure evaluation path
/// (batch-norm running statistics, no dropout) and is safe to call
/// concurrently on a frozen model.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Mat forward(const Mat& x, std::mt19937_64& rng) = 0;
  virtual Mat infer(const Mat& x) const = 0;
  virtual Mat backward(const Mat& grad_out) = 0;
  virtual void collect(std::vector<ParamView>& out) {}
  virtual void save(std::ostream& os) const {}
  virtual void load(std::istream& is) {}
};

class Dense : public Layer {
 public:
  Dense(Eigen::Index in, Eigen::Index out, std::mt19937_64& init_rng);
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;
  void collect(std::vector<ParamView>& out) override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;

  Mat w;  // in x out
  Vec b;
  Mat grad_w;
  Vec grad_b;

 private:
  Mat x_cache_;
};

/// Feature-wise batch normalization (epsilon 1e-5, running-stat momentum
/// 0.9, biased batch variance).
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(Eigen::Index features);
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;
  void collect(std::vector<ParamView>& out) override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;

  Vec gamma, beta;
  Vec running_mean, running_var;
  Vec grad_gamma, grad_beta;
  double epsilon = 1e-5;
  double momentum = 0.9;

 private:
  Mat x_hat_;
  Vec inv_std_;
};

class Relu : public Layer {
 public:
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;

 private:
  Mat mask_;
};

/// Inverted dropout: surviving activations are scaled by 1/(1-rate) at
/// training time so inference needs no rescaling. freeze() pins the
/// current mask, which gradient checks need.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate);
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;

  void freeze(bool frozen) { frozen_ = frozen; }
  double rate() const { return rate_; }

 private:
  double rate_;
  bool frozen_ = false;
  Mat mask_;
};

/// 1-D valid cross-correlation, stride 1. Rows are channel-major:
/// element (c, t) of a trace sits at column c * length + t.
class Conv1d : public Layer {
 public:
  Conv1d(int in_channels, int in_length, int out_channels, int kernel_size,
         std::mt19937_64& init_rng);
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;
  void collect(std::vector<ParamView>& out) override;
  void save(std::ostream& os) const override;
  void load(std::istream& is) override;

  int in_channels, in_length, out_channels, kernel_size;
  int out_length;          // in_length - kernel_size + 1
  Mat w;                   // out_channels x (in_channels * kernel_size)
  Vec b;
  Mat grad_w;
  Vec grad_b;

 private:
  Mat run(const Mat& x) const;
  Mat x_cache_;
};

/// Per-channel max pooling; the remainder at the tail is dropped.
class MaxPool1d : public Layer {
 public:
  MaxPool1d(int channels, int in_length, int pool);
  Mat forward(const Mat& x, std::mt19937_64& rng) override;
  Mat infer(const Mat& x) const override;
  Mat backward(const Mat& grad_out) override;

  int channels, in_length, pool, out_length;

 private:
  Mat run(const Mat& x) const;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmax_;
  Eigen::Index in_cols_ = 0;
};

enum class Arch { Mlp, Cnn };

/// A classifier network ending in softmax over 256 classes. Training-mode
/// calls are exclusive to one thread; infer() is const and thread-safe.
class Network {
 public:
  Network(Arch arch, Eigen::Index input_dim);

  /// Training-mode forward: returns row-stochastic class probabilities.
  Mat forward(const Mat& x);
  /// Evaluation-mode forward (running stats, no dropout).
  Mat infer(const Mat& x) const;
  /// Backpropagate softmax cross-entropy. Overwrites gradient buffers;
  /// adds the L2 term 2*lambda*w on weight tensors.
  void backward(const Mat& probs, std::span<const int> labels, double l2_lambda);

  std::vector<ParamView> params();
  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  void set_dropout_frozen(bool frozen);

  Arch arch() const { return arch_; }
  Eigen::Index input_dim() const { return input_dim_; }
  std::mt19937_64& rng() { return rng_; }
  void seed_rng(uint64_t seed) { rng_.seed(seed); }

 private:
  Arch arch_;
  Eigen::Index input_dim_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::mt19937_64 rng_{0};
};

/// Stock architectures. Deterministic given the seed: fan-in-scaled
/// uniform weights (He limit sqrt(6/fan_in)), zero biases, batch-norm
/// scale 1 / shift 0 / running stats (0, 1).
///
/// MLP: in -> FC 100 -> BN -> ReLU -> dropout 0.1 -> FC 100 -> BN -> ReLU
///      -> FC 256 -> softmax.
Network make_mlp(Eigen::Index input_dim, uint64_t seed);

/// CNN: in -> conv(70 filters, kernel 60) -> ReLU -> conv(70, 60) -> ReLU
///      -> maxpool 3 -> flatten -> dropout 0.2 -> FC 150 -> BN
///      -> dropout 0.1 -> FC 256 -> softmax. Needs input length >= 121.
Network make_cnn(Eigen::Index input_len, uint64_t seed);

/// Mean over the batch of -ln p[label], probabilities clamped at 1e-12.
double cross_entropy(const Mat& probs, std::span<const int> labels);

struct TrainConfig {
  int batch_size = 256;
  int epochs = 100;
  double l2_lambda = 1e-4;
  double learning_rate = 1e-3;   // adaptive-moment step size
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  uint64_t seed = 0;
  bool shuffle = true;
  bool verbose = false;
};

struct TrainReport {
  double initial_loss = 0.0;            // eval-mode CE before any update
  std::vector<double> train_loss;       // per-epoch mean batch CE
  std::vector<double> train_accuracy;   // eval-mode, measured after each epoch
  std::vector<double> val_accuracy;     // empty when no validation set
  double train_seconds = 0.0;

  double final_train_accuracy() const {
    return train_accuracy.empty() ? 0.0 : train_accuracy.back();
  }
};

/// Mini-batch training with the adaptive-moment optimizer. The last
/// incomplete batch is used. Deterministic given cfg.seed (shuffling,
/// dropout, and the model's own init are all seeded). Throws if the loss
/// goes non-finite.
TrainReport train(Network& net, const TraceMatrix& train_set, const TraceMatrix* val_set,
                  const TrainConfig& cfg);

std::vector<int> predict(const Network& net, const TraceMatrix& set);
double accuracy(const Network& net, const TraceMatrix& set);

/// A self-contained attack model: the classifier plus the frozen
/// preprocessing it was trained behind, so raw captured traces can be
/// classified directly.
struct AttackModel {
  Network net;
  std::optional<pca::PcaModel> pca_model;
  std::optional<Vec> dtw_reference;  // persisted modified reference
  int resample_length = 0;           // 0 = no resampling stage
};

/// Model file: "SCAN" | version u16 | arch u8 | input_dim u32 | flags u8
/// | layer parameter blobs (including batch-norm running stats) |
/// optional attachments per flags.
void save_model(const std::string& path, const AttackModel& model);
AttackModel load_model(const std::string& path);

}  // namespace sca::nn
