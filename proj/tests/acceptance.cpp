// Acceptance suite: every criterion prints one [PASS]/[FAIL] line with
// its measured runtime, and the binary exits nonzero if any checked
// criterion failed. Run all with no arguments or one with
// `--criterion N`.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sca/align.hpp"
#include "sca/attacks.hpp"
#include "sca/nn.hpp"
#include "sca/pca.hpp"
#include "sca/pipeline.hpp"
#include "sca/synth.hpp"
#include "sca/trace_io.hpp"

using namespace sca;

namespace {

struct Check {
  std::vector<std::string> failures;

  void require(bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  }
  template <typename T>
  void equal(const T& got, const T& want, const std::string& what) {
    if (!(got == want)) {
      std::ostringstream ss;
      ss << what << " (got " << got << ", want " << want << ")";
      failures.push_back(ss.str());
    }
  }
  void close(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream ss;
      ss << what << " (got " << got << ", want " << want << " +- " << tol << ")";
      failures.push_back(ss.str());
    }
  }
};

// ------------------------------------------------------------------ 1, 2

void criterion_dtw_oracle(Check& c) {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  std::uniform_int_distribution<int> len(2, 8);
  for (int rep = 0; rep < 200; ++rep) {
    const int t = len(rng);
    std::vector<double> xv(static_cast<size_t>(t)), yv(static_cast<size_t>(t));
    Vec x(t), y(t);
    for (int i = 0; i < t; ++i) {
      xv[static_cast<size_t>(i)] = x[i] = dist(rng);
      yv[static_cast<size_t>(i)] = y[i] = dist(rng);
    }
    const align::WarpPath p = align::dtw(Trace(x), Trace(y));
    const double brute = oracles::dtw_brute_force(xv, yv);
    c.require(std::abs(p.cost - brute) <= 1e-12,
              "pair " + std::to_string(rep) + ": dp cost " + std::to_string(p.cost) +
                  " != brute force " + std::to_string(brute));
  }
}

void criterion_warp_invariants(Check& c) {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::uniform_int_distribution<int> len(2, 64);
  for (int rep = 0; rep < 1000; ++rep) {
    const int t = len(rng);
    Vec x(t), y(t);
    for (int i = 0; i < t; ++i) {
      x[i] = dist(rng);
      y[i] = dist(rng);
    }
    const align::WarpPath p = align::dtw(Trace(x), Trace(y));
    const std::string tag = "pair " + std::to_string(rep) + ": ";
    c.require(p.pairs.front() == std::pair<int, int>{1, 1}, tag + "boundary start");
    c.require(p.pairs.back() == std::pair<int, int>{t, t}, tag + "boundary end");
    c.require(p.length() >= static_cast<size_t>(t) && p.length() < static_cast<size_t>(2 * t),
              tag + "length bound T <= K < 2T");
    for (size_t k = 1; k < p.pairs.size(); ++k) {
      const int dx = p.pairs[k].first - p.pairs[k - 1].first;
      const int dy = p.pairs[k].second - p.pairs[k - 1].second;
      if (dx < 0 || dx > 1 || dy < 0 || dy > 1 || dx + dy < 1) {
        c.require(false, tag + "step constraint at k=" + std::to_string(k));
        break;
      }
    }
    c.require(p.cost >= 0.0, tag + "nonnegative cost");
  }
}

// --------------------------------------------------------------------- 3

void criterion_pca_oracle(Check& c) {
  std::mt19937_64 rng(1003);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> ncols(2, 10);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = ncols(rng);
    const Eigen::Index m = n + 5 + (rep % 6);  // full column rank, M <= 20
    Mat x(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) x(i, j) = dist(rng);
    }
    const TraceMatrix set(x, std::vector<TraceLabel>(static_cast<size_t>(m), TraceLabel{0, 0, 1}));
    const pca::PcaModel model = pca::fit(set, n);

    // Covariance-route oracle.
    Mat centered = x.rowwise() - x.colwise().mean();
    Mat cov = centered.transpose() * centered / static_cast<double>(m - 1);
    std::vector<std::vector<double>> a(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) a[static_cast<size_t>(i)][static_cast<size_t>(j)] = cov(i, j);
    }
    const auto oracle = oracles::jacobi_eigen(std::move(a));

    const std::string tag = "matrix " + std::to_string(rep) + ": ";
    for (Eigen::Index k = 0; k < n; ++k) {
      c.require(std::abs(model.eigenvalues[k] - oracle.values[static_cast<size_t>(k)]) <=
                    1e-8 * std::max(1.0, std::abs(oracle.values[0])),
                tag + "eigenvalue " + std::to_string(k));
      for (Eigen::Index i = 0; i < n; ++i) {
        c.require(std::abs(model.components(i, k) -
                           oracle.vectors[static_cast<size_t>(k)][static_cast<size_t>(i)]) <= 1e-8,
                  tag + "eigenvector " + std::to_string(k) + " entry " + std::to_string(i));
      }
    }

    const Mat vtv = model.components.transpose() * model.components;
    c.require((vtv - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8, tag + "V'V = I");

    const TraceMatrix proj = pca::project(model, set);
    for (Eigen::Index r = 1; r < m; ++r) {
      const double before = (x.row(r) - x.row(0)).norm();
      const double after = (proj.samples().row(r) - proj.samples().row(0)).norm();
      c.require(std::abs(before - after) <= 1e-8 * std::max(1.0, before),
                tag + "distance preservation row " + std::to_string(r));
    }
  }
}

// --------------------------------------------------------------------- 4

double acceptance_loss(nn::Network& net, const Mat& x, const std::vector<int>& labels, double l2) {
  const Mat probs = net.forward(x);
  double loss = nn::cross_entropy(probs, labels);
  if (l2 != 0.0) {
    for (const auto& p : net.params()) {
      if (!p.weight_decay) continue;
      Eigen::Map<const Eigen::ArrayXd> w(p.value, p.size);
      loss += l2 * w.square().sum();
    }
  }
  return loss;
}

double acceptance_grad_check(nn::Network& net, const Mat& x, const std::vector<int>& labels,
                             double l2) {
  net.set_dropout_frozen(true);
  (void)acceptance_loss(net, x, labels, l2);
  const Mat probs = net.forward(x);
  net.backward(probs, labels, l2);
  auto views = net.params();
  std::vector<Vec> analytic;
  for (const auto& p : views) analytic.emplace_back(Eigen::Map<const Vec>(p.grad, p.size));

  const double h = 1e-5;
  double worst = 0.0;
  for (size_t t = 0; t < views.size(); ++t) {
    for (Eigen::Index i = 0; i < views[t].size; ++i) {
      const double saved = views[t].value[i];
      views[t].value[i] = saved + h;
      const double lp = acceptance_loss(net, x, labels, l2);
      views[t].value[i] = saved - h;
      const double lm = acceptance_loss(net, x, labels, l2);
      views[t].value[i] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double rel = std::abs(fd - analytic[t][i]) /
                         std::max({std::abs(fd), std::abs(analytic[t][i]), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

Mat gaussian_batch(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = dist(rng);
  }
  return x;
}

void criterion_gradients(Check& c) {
  const std::vector<int> labels = {0, 2, 3};
  {
    std::mt19937_64 rng(41);
    nn::Network net(nn::Arch::Mlp, 6);
    net.add(std::make_unique<nn::Dense>(6, 5, rng));
    net.add(std::make_unique<nn::Dense>(5, 4, rng));
    c.require(acceptance_grad_check(net, gaussian_batch(3, 6, 201), labels, 0.0) < 1e-4, "dense layer");
  }
  {
    std::mt19937_64 rng(42);
    nn::Network net(nn::Arch::Mlp, 6);
    net.add(std::make_unique<nn::Dense>(6, 5, rng));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Dense>(5, 4, rng));
    c.require(acceptance_grad_check(net, gaussian_batch(3, 6, 202), labels, 0.0) < 1e-4, "relu layer");
  }
  {
    std::mt19937_64 rng(43);
    nn::Network net(nn::Arch::Mlp, 6);
    net.add(std::make_unique<nn::Dense>(6, 5, rng));
    net.add(std::make_unique<nn::BatchNorm>(5));
    net.add(std::make_unique<nn::Dense>(5, 4, rng));
    c.require(acceptance_grad_check(net, gaussian_batch(3, 6, 203), labels, 0.0) < 1e-4,
              "batch-norm layer (train mode)");
  }
  {
    std::mt19937_64 rng(44);
    nn::Network net(nn::Arch::Mlp, 6);
    net.add(std::make_unique<nn::Dense>(6, 8, rng));
    net.add(std::make_unique<nn::Dropout>(0.25));
    net.add(std::make_unique<nn::Dense>(8, 4, rng));
    net.seed_rng(7);
    c.require(acceptance_grad_check(net, gaussian_batch(3, 6, 204), labels, 0.0) < 1e-4,
              "dropout layer (fixed mask)");
  }
  {
    std::mt19937_64 rng(45);
    nn::Network net(nn::Arch::Cnn, 16);
    net.add(std::make_unique<nn::Conv1d>(1, 16, 2, 5, rng));
    net.add(std::make_unique<nn::Dense>(24, 4, rng));
    c.require(acceptance_grad_check(net, gaussian_batch(3, 16, 205), labels, 0.0) < 1e-4, "conv1d layer");
  }
  {
    std::mt19937_64 rng(46);
    nn::Network net(nn::Arch::Cnn, 16);
    net.add(std::make_unique<nn::Conv1d>(1, 16, 2, 5, rng));
    net.add(std::make_unique<nn::MaxPool1d>(2, 12, 3));
    net.add(std::make_unique<nn::Dense>(8, 4, rng));
    c.require(acceptance_grad_check(net, gaussian_batch(3, 16, 206), labels, 0.0) < 1e-4,
              "max-pool layer");
  }
  {
    // Whole model: input 8, hidden 5, 4 classes, batch 3, with L2.
    std::mt19937_64 rng(47);
    nn::Network net(nn::Arch::Mlp, 8);
    net.add(std::make_unique<nn::Dense>(8, 5, rng));
    net.add(std::make_unique<nn::BatchNorm>(5));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Dropout>(0.10));
    net.add(std::make_unique<nn::Dense>(5, 5, rng));
    net.add(std::make_unique<nn::BatchNorm>(5));
    net.add(std::make_unique<nn::Relu>());
    net.add(std::make_unique<nn::Dense>(5, 4, rng));
    net.seed_rng(8);
    c.require(acceptance_grad_check(net, gaussian_batch(3, 8, 207), {1, 3, 0}, 1e-3) < 1e-4,
              "whole-model gradient (8-5-4, batch 3)");
  }
}

// --------------------------------------------------------------------- 5

TraceMatrix one_per_class_corpus(uint64_t seed) {
  synth::SynthConfig cfg;
  cfg.trace_length = 64;
  cfg.n_traces_per_device = 256;
  cfg.background_scale = 0.05;
  cfg.leak_model = synth::LeakModel::Bits;
  cfg.seed = seed;
  synth::DeviceProfile p;
  p.leak_positions = {4, 11, 18, 25, 32, 39, 46, 53};
  p.leak_strength = 0.2;
  cfg.devices = {p};
  return synth::synth_dataset(cfg);
}

void criterion_loss_sanity(Check& c) {
  const TraceMatrix set = one_per_class_corpus(501);

  nn::Network net = nn::make_mlp(64, 9);
  std::vector<int> labels;
  for (const auto& l : set.labels()) labels.push_back(l.key_byte);
  const double fresh = nn::cross_entropy(net.infer(set.samples()), labels);
  c.close(fresh, std::log(256.0), 0.01, "fresh balanced-data loss vs ln 256");

  nn::TrainConfig tc;
  tc.epochs = 100;
  tc.batch_size = 32;
  tc.learning_rate = 2e-3;
  tc.seed = 3;
  const nn::TrainReport report = nn::train(net, set, nullptr, tc);
  bool reached = false;
  for (double a : report.train_accuracy) {
    if (a == 1.0) {
      reached = true;
      break;
    }
  }
  c.require(reached, "memorization of 256 one-per-class traces within 100 epochs (final " +
                         std::to_string(report.final_train_accuracy()) + ")");
}

// --------------------------------------------------------------------- 6

void criterion_cpa(Check& c) {
  auto base_cfg = [](uint64_t seed, double noise, int n) {
    synth::SynthConfig cfg;
    cfg.trace_length = 512;
    cfg.n_traces_per_device = n;
    cfg.background_scale = 1.0;
    cfg.seed = seed;
    cfg.key_mode = synth::ByteMode::Fixed;
    cfg.fixed_key_byte = 0x5A;
    cfg.plaintext_mode = synth::ByteMode::Cycle;
    synth::DeviceProfile p;
    p.leak_positions = {96, 148};
    p.leak_strength = 1.0;
    p.noise_sigma = noise;
    cfg.devices = {p};
    return cfg;
  };

  const auto clean = synth::synth_dataset(base_cfg(601, 0.0, 1024));
  const auto ranked = attacks::cpa(clean);
  c.equal(ranked.front().guess, 0x5A, "noiseless CPA rank-1 guess");
  c.close(ranked.front().score, 1.0, 1e-9, "noiseless CPA |rho| at the correct key");

  int wins = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto noisy = synth::synth_dataset(base_cfg(700 + seed, 0.5, 1000));
    if (attacks::cpa(noisy).front().guess == 0x5A) ++wins;
  }
  c.require(wins >= 19, "noisy CPA rank-1 in >= 19/20 seeded runs (got " + std::to_string(wins) + ")");
}

// ------------------------------------------------------------------ 7, 8

// Desk-scale corpus: 5 devices x 2560 traces x 512 samples, per-bit
// leakage, two offset batches and gain spread strong enough to break a
// raw-trace classifier trained on one device.
TraceMatrix desk_corpus(uint64_t seed, double gain_spread, double offset_spread) {
  synth::SynthConfig cfg;
  cfg.trace_length = 512;
  cfg.n_traces_per_device = 2560;
  cfg.background_scale = 1.0;
  cfg.leak_model = synth::LeakModel::Bits;
  cfg.seed = seed;
  cfg.devices = synth::make_device_profiles(5, {16, 70, 130, 190, 250, 310, 370, 430}, 1.0, 0.05,
                                            gain_spread, offset_spread, seed);
  return synth::synth_dataset(cfg);
}

pipeline::PipelineConfig desk_config(pipeline::Method method, int j, uint64_t seed) {
  pipeline::PipelineConfig cfg;
  cfg.method = method;
  cfg.group_j = j;
  cfg.train.epochs = 30;
  cfg.train.batch_size = 256;
  cfg.seed = seed;
  return cfg;
}

void criterion_cross_device_ordering(Check& c) {
  const TraceMatrix data = desk_corpus(801, 0.20, 0.60);

  const auto mlp_j1 = pipeline::cross_matrix(desk_config(pipeline::Method::Mlp, 1, 11), data);
  const auto pca_j1 = pipeline::cross_matrix(desk_config(pipeline::Method::PcaMlp, 1, 11), data);
  const auto mlp_j4 = pipeline::cross_matrix(desk_config(pipeline::Method::Mlp, 4, 11), data);
  const auto pca_j4 = pipeline::cross_matrix(desk_config(pipeline::Method::PcaMlp, 4, 11), data);

  std::cout << "    avg: MLP(j=1) " << mlp_j1.cross_avg << "  PCA-MLP(j=1) " << pca_j1.cross_avg
            << "  PCA-MLP(j=4) " << pca_j4.cross_avg << "\n"
            << "    min: MLP(j=4) " << mlp_j4.cross_min << "  PCA-MLP(j=4) " << pca_j4.cross_min
            << "\n";

  c.require(pca_j4.cross_avg >= pca_j1.cross_avg,
            "avg PCA-MLP(j=4) >= avg PCA-MLP(j=1): " + std::to_string(pca_j4.cross_avg) + " vs " +
                std::to_string(pca_j1.cross_avg));
  c.require(pca_j1.cross_avg >= mlp_j1.cross_avg,
            "avg PCA-MLP(j=1) >= avg MLP(j=1): " + std::to_string(pca_j1.cross_avg) + " vs " +
                std::to_string(mlp_j1.cross_avg));
  c.require(pca_j4.cross_min > mlp_j4.cross_min,
            "min PCA-MLP(j=4) > min MLP(j=4): " + std::to_string(pca_j4.cross_min) + " vs " +
                std::to_string(mlp_j4.cross_min));
}

void criterion_dtw_rescue(Check& c) {
  const TraceMatrix data = desk_corpus(802, 0.10, 0.30);
  const double chance = 1.0 / 256.0;

  // Aligned baseline.
  const auto aligned_pca = pipeline::run(desk_config(pipeline::Method::PcaMlp, 4, 21), data);

  // 50-sample misalignment for everything else.
  auto misaligned_cfg = [&](pipeline::Method m) {
    auto cfg = desk_config(m, 4, 21);
    cfg.misalign_max_shift = 50;
    return cfg;
  };
  const auto mlp_mis = pipeline::run(misaligned_cfg(pipeline::Method::Mlp), data);
  const auto pca_mis = pipeline::run(misaligned_cfg(pipeline::Method::PcaMlp), data);
  auto dtw_cfg = misaligned_cfg(pipeline::Method::DtwPcaMlp);
  dtw_cfg.resample_length = 512;
  const auto dtw_mis = pipeline::run(dtw_cfg, data);

  std::cout << "    aligned PCA-MLP " << aligned_pca.cross_avg << "  misaligned MLP "
            << mlp_mis.cross_avg << "  misaligned PCA-MLP " << pca_mis.cross_avg
            << "  DTW-PCA-MLP " << dtw_mis.cross_avg << "\n";

  c.require(mlp_mis.cross_avg < 5.0 * chance,
            "misaligned MLP collapses toward chance (got " + std::to_string(mlp_mis.cross_avg) + ")");
  c.require(pca_mis.cross_avg < 5.0 * chance,
            "misaligned PCA-MLP collapses toward chance (got " + std::to_string(pca_mis.cross_avg) + ")");
  c.require(dtw_mis.cross_avg >= aligned_pca.cross_avg - 0.02,
            "DTW-PCA-MLP within 2 points of the aligned PCA-MLP run (got " +
                std::to_string(dtw_mis.cross_avg) + " vs aligned " +
                std::to_string(aligned_pca.cross_avg) + ")");
}

// --------------------------------------------------------------------- 9

void criterion_dom_ground_truth(Check& c) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    synth::SynthConfig cfg;
    cfg.trace_length = 512;
    cfg.n_traces_per_device = 2560;
    cfg.background_scale = 1.0;
    cfg.seed = 900 + seed;
    synth::DeviceProfile p;
    p.leak_positions = {16, 25};  // the full-scale positions, desk-scaled
    p.leak_strength = 1.0;
    p.noise_sigma = 0.2;
    cfg.devices = {p};
    const auto set = synth::synth_dataset(cfg);
    const auto pois = attacks::dom_poi(set, 2);
    const std::set<int> top(pois.indices.begin(), pois.indices.end());
    c.require(top == std::set<int>{16, 25},
              "seed " + std::to_string(seed) + ": top-2 DOM POIs equal the leak positions");
  }
}

// -------------------------------------------------------------------- 10

void criterion_template_confusion(Check& c) {
  synth::SynthConfig cfg;
  cfg.trace_length = 256;
  cfg.n_traces_per_device = 2560;
  cfg.background_scale = 1.0;
  cfg.seed = 1000;
  synth::DeviceProfile p;
  p.leak_positions = {96, 148};
  p.leak_strength = 1.0;
  p.noise_sigma = 0.0;
  cfg.devices = {p};
  const auto set = synth::synth_dataset(cfg);

  const auto pois = attacks::dom_poi(set, 2);
  const auto templates = attacks::fit_templates(set, pois);

  for (int k = 0; k < 256; ++k) {
    const int hw = synth::hamming_weight(synth::sbox_lookup(static_cast<uint8_t>(k)));
    Vec poi_vec(2);
    bool found = false;
    for (Eigen::Index i = 0; i < set.rows() && !found; ++i) {
      if (set.label(i).key_byte == k) {
        poi_vec << set.samples()(i, templates.poi_indices[0]),
            set.samples()(i, templates.poi_indices[1]);
        found = true;
      }
    }
    const int predicted = attacks::template_classify(templates, poi_vec);
    const int hw_pred = synth::hamming_weight(synth::sbox_lookup(static_cast<uint8_t>(predicted)));
    c.require(hw_pred == hw, "class " + std::to_string(k) + " confused outside its HW group");
    const bool hw_unique = (hw == 0 || hw == 8);
    if (hw_unique) {
      c.equal(predicted, k, "distinct-HW class " + std::to_string(k) + " classified exactly");
    }
  }
}

// -------------------------------------------------------------------- 11

void criterion_determinism(Check& c) {
  synth::SynthConfig scfg;
  scfg.trace_length = 160;
  scfg.n_traces_per_device = 512;
  scfg.background_scale = 1.0;
  scfg.leak_model = synth::LeakModel::Bits;
  scfg.seed = 1100;
  scfg.devices = synth::make_device_profiles(2, {8, 28, 48, 68, 88, 108, 128, 148}, 1.0, 0.02,
                                             0.05, 0.1, 1100);
  const auto data = synth::synth_dataset(scfg);

  pipeline::PipelineConfig cfg;
  cfg.method = pipeline::Method::DtwPcaMlp;
  cfg.group_j = 1;
  cfg.group_index = 1;
  cfg.misalign_max_shift = 12;
  cfg.resample_length = 160;
  cfg.pca_components = 40;
  cfg.train.epochs = 6;
  cfg.train.batch_size = 128;
  cfg.seed = 7;
  cfg.deterministic = true;
  cfg.save_model = true;

  const auto base = std::filesystem::temp_directory_path() / "scaforge_acceptance_det";
  std::filesystem::remove_all(base);
  std::vector<std::string> names;
  for (int runidx = 0; runidx < 2; ++runidx) {
    auto rcfg = cfg;
    rcfg.out_dir = (base / ("run" + std::to_string(runidx))).string();
    const auto report = pipeline::run(rcfg, data);
    pipeline::report_emit(report, rcfg.out_dir, rcfg.deterministic);
  }
  for (const auto& entry : std::filesystem::directory_iterator(base / "run0")) {
    names.push_back(entry.path().filename().string());
  }
  c.require(!names.empty(), "first run produced output files");
  for (const auto& name : names) {
    std::ifstream a(base / "run0" / name, std::ios::binary);
    std::ifstream b(base / "run1" / name, std::ios::binary);
    std::ostringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    c.require(b.good() || std::filesystem::exists(base / "run1" / name),
              name + " exists in both runs");
    c.require(sa.str() == sb.str(), name + " byte-identical across runs");
  }
  std::filesystem::remove_all(base);
}

// -------------------------------------------------------------------- 12

void criterion_group_formula(Check& c) {
  const auto groups = attacks::form_groups(4, 30);
  c.equal(groups.size(), static_cast<size_t>(7), "form_groups(4, 30) yields 7 groups");
  for (int i = 0; i < static_cast<int>(groups.size()); ++i) {
    const int k = i * 4 + 1;
    const std::vector<int> want = {k, k + 1, k + 2, k + 3};
    c.require(groups[static_cast<size_t>(i)].members == want,
              "group " + std::to_string(i + 1) + " is the consecutive quadruple from D" +
                  std::to_string(k));
  }
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Check&)> fn;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "DTW cost equals exhaustive enumeration (200 pairs, T <= 8)", 10.0, criterion_dtw_oracle},
      {2, "warp-path invariants hold (1000 pairs, T <= 64)", 30.0, criterion_warp_invariants},
      {3, "PCA eigenpairs match the small-matrix oracle (50 matrices)", 60.0, criterion_pca_oracle},
      {4, "gradient checks pass for every layer type and the whole model", 60.0, criterion_gradients},
      {5, "loss sanity: ln 256 start and one-per-class memorization", 240.0, criterion_loss_sanity},
      {6, "CPA recovers the key: exact rho noiseless, rank 1 under noise", 120.0, criterion_cpa},
      {7, "cross-device ordering: PCA-MLP(4) >= PCA-MLP(1) >= MLP(1), min(4) ordering", 900.0,
       criterion_cross_device_ordering},
      {8, "DTW rescue: misaligned MLP/PCA-MLP collapse, DTW-PCA-MLP recovers", 1200.0,
       criterion_dtw_rescue},
      {9, "DOM top-2 POIs equal the configured leak positions (20/20 runs)", 300.0,
       criterion_dom_ground_truth},
      {10, "noiseless templates confuse only equal-HW classes", 300.0, criterion_template_confusion},
      {11, "two identical pipeline runs emit byte-identical reports", 300.0, criterion_determinism},
      {12, "form_groups(4, 30) yields the 7 consecutive quadruples", 10.0, criterion_group_formula},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const auto& crit : criteria()) {
    if (only != 0 && crit.id != only) continue;

    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    crit.fn(check);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > crit.budget_seconds) {
      check.failures.push_back("runtime " + std::to_string(seconds) + " s exceeds budget " +
                               std::to_string(crit.budget_seconds) + " s");
    }

    char line[512];
    std::snprintf(line, sizeof(line), "[%s] criterion %2d: %s (%.1f s / %.0f s budget)",
                  check.failures.empty() ? "PASS" : "FAIL", crit.id, crit.name.c_str(), seconds,
                  crit.budget_seconds);
    std::cout << line << "\n";
    if (!check.failures.empty()) {
      ++failures;
      size_t shown = 0;
      for (const auto& f : check.failures) {
        std::cout << "        - " << f << "\n";
        if (++shown >= 10) {
          std::cout << "        - (" << (check.failures.size() - shown) << " more)\n";
          break;
        }
      }
    }
  }
  return failures == 0 ? 0 : 1;
}
