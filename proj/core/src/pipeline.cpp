#include "sca/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "sca/align.hpp"
#include "sca/pca.hpp"
#include "sca/synth.hpp"
#include "sca/trace_io.hpp"

namespace sca::pipeline {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Method method_from_string(const std::string& name) {
  std::string up;
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "MLP") return Method::Mlp;
  if (up == "PCA-MLP") return Method::PcaMlp;
  if (up == "CNN") return Method::Cnn;
  if (up == "DTW-CNN") return Method::DtwCnn;
  if (up == "DTW-PCA-CNN") return Method::DtwPcaCnn;
  if (up == "DTW-PCA-MLP") return Method::DtwPcaMlp;
  throw ConfigError("unknown method: " + name);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Mlp: return "MLP";
    case Method::PcaMlp: return "PCA-MLP";
    case Method::Cnn: return "CNN";
    case Method::DtwCnn: return "DTW-CNN";
    case Method::DtwPcaCnn: return "DTW-PCA-CNN";
    case Method::DtwPcaMlp: return "DTW-PCA-MLP";
  }
  return "?";
}

bool method_uses_dtw(Method m) {
  return m == Method::DtwCnn || m == Method::DtwPcaCnn || m == Method::DtwPcaMlp;
}
bool method_uses_pca(Method m) {
  return m == Method::PcaMlp || m == Method::DtwPcaCnn || m == Method::DtwPcaMlp;
}
bool method_uses_cnn(Method m) {
  return m == Method::Cnn || m == Method::DtwCnn || m == Method::DtwPcaCnn;
}

double AttackReport::cell(int group_row, int device_id) const {
  const auto it = std::find(devices.begin(), devices.end(), device_id);
  if (it == devices.end()) throw RangeError("report: unknown device id");
  return accuracy(group_row, static_cast<Eigen::Index>(it - devices.begin()));
}

void validate(const PipelineConfig& cfg) {
  if (cfg.group_j < 1) throw ConfigError("pipeline: group_j must be >= 1");
  if (cfg.group_index < 1) throw ConfigError("pipeline: group_index must be >= 1");
  if (!(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0)) {
    throw ConfigError("pipeline: holdout_fraction must be in (0,1)");
  }
  if (cfg.misalign_max_shift < 0) throw ConfigError("pipeline: misalign_max_shift must be >= 0");
  if (cfg.resample_length < 0) throw ConfigError("pipeline: resample_length must be >= 0");
  if (cfg.pca_components < 0) throw ConfigError("pipeline: pca_components must be >= 0");
  if (cfg.dtw_reference_index < 0) throw ConfigError("pipeline: dtw_reference_index must be >= 0");
  if (!method_uses_dtw(cfg.method) && cfg.dtw_reference_index != 0) {
    throw ConfigError("pipeline: dtw_reference_index set but method has no DTW stage");
  }
  if (!method_uses_pca(cfg.method) && cfg.pca_components != 0) {
    throw ConfigError("pipeline: pca_components set but method has no PCA stage");
  }
  if (cfg.train.batch_size < 1 || cfg.train.epochs < 1) {
    throw ConfigError("pipeline: batch_size and epochs must be >= 1");
  }
  if (cfg.augment_to < 0 || cfg.augment_sigma < 0.0) {
    throw ConfigError("pipeline: augmentation parameters must be >= 0");
  }
}

namespace {

struct GroupOutcome {
  std::vector<double> per_device_accuracy;  // column order
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
};

// Train one group and evaluate every device. Preprocessing (DTW
// reference, PCA basis) is fit on the merged training portions of the
// group's devices only, then applied frozen everywhere else.
GroupOutcome run_group(const PipelineConfig& cfg, const TraceMatrix& data,
                       const std::vector<int>& members, const std::vector<int>& all_devices,
                       uint64_t group_seed) {
  std::map<int, TraceMatrix> holdout;
  std::vector<TraceMatrix> train_parts;
  for (int d : members) {
    const TraceMatrix dev = filter_by_device(data, d);
    SplitSpec split_spec{1.0 - cfg.holdout_fraction, mix64(group_seed ^ (0x5eedULL + static_cast<uint64_t>(d)))};
    auto [tr, ho] = split(dev, split_spec);
    train_parts.push_back(std::move(tr));
    holdout.emplace(d, std::move(ho));
  }
  TraceMatrix train = merge(train_parts);

  // Evaluation sets, pre-preprocessing: held-out split for training
  // devices, the full set otherwise.
  std::vector<TraceMatrix> eval_sets;
  for (int d : all_devices) {
    const bool member = std::find(members.begin(), members.end(), d) != members.end();
    eval_sets.push_back(member ? holdout.at(d) : filter_by_device(data, d));
  }

  std::optional<Vec> dtw_ref;
  int resample_len = 0;
  if (method_uses_dtw(cfg.method)) {
    const TraceMatrix& first_dev = train_parts.front();
    if (cfg.dtw_reference_index >= first_dev.rows()) {
      throw ConfigError("pipeline: dtw_reference_index beyond the first training device's traces");
    }
    const Trace reference = first_dev.trace(cfg.dtw_reference_index);
    align::AlignmentResult aligned = align::realign_set(train, reference);
    dtw_ref = aligned.modified_reference.samples();
    resample_len = cfg.resample_length > 0 ? cfg.resample_length : static_cast<int>(data.cols());
    train = align::resample_to_length(aligned.aligned, resample_len);

    for (auto& es : eval_sets) {
      Mat warped(es.rows(), resample_len);
      for (Eigen::Index i = 0; i < es.rows(); ++i) {
        const Trace w = align::warp_to_reference(es.trace(i), aligned.modified_reference);
        warped.row(i) = align::resample_to_length(w, resample_len).samples().transpose();
      }
      es = TraceMatrix(std::move(warped), es.labels());
    }
  }

  std::optional<pca::PcaModel> pca_model;
  if (method_uses_pca(cfg.method)) {
    const Eigen::Index p = cfg.pca_components > 0
                               ? std::min<Eigen::Index>(cfg.pca_components, train.cols())
                               : train.cols();
    pca_model = pca::fit(train, p);
    train = pca::project(*pca_model, train);
    for (auto& es : eval_sets) es = pca::project(*pca_model, es);
  }

  if (cfg.augment_to > train.rows()) {
    train = synth::augment_with_noise(train, cfg.augment_to, cfg.augment_sigma,
                                      mix64(group_seed ^ 0x617567ULL));
  }

  const Eigen::Index width = train.cols();
  nn::Network net = method_uses_cnn(cfg.method) ? nn::make_cnn(width, mix64(group_seed ^ 0x1417ULL))
                                                : nn::make_mlp(width, mix64(group_seed ^ 0x1417ULL));

  // Validation set for the per-epoch report: merged same-device holdouts.
  std::vector<TraceMatrix> val_parts;
  for (size_t i = 0; i < all_devices.size(); ++i) {
    if (std::find(members.begin(), members.end(), all_devices[i]) != members.end()) {
      val_parts.push_back(eval_sets[i]);
    }
  }
  const TraceMatrix val = merge(val_parts);

  nn::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = mix64(group_seed ^ 0x7261696eULL);
  const nn::TrainReport train_report = nn::train(net, train, &val, train_cfg);

  GroupOutcome out;
  out.train_seconds = train_report.train_seconds;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& es : eval_sets) out.per_device_accuracy.push_back(nn::accuracy(net, es));
  out.predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (cfg.save_model && !cfg.out_dir.empty()) {
    nn::AttackModel model{std::move(net), std::move(pca_model), std::move(dtw_ref), resample_len};
    std::filesystem::create_directories(cfg.out_dir);
    nn::save_model(cfg.out_dir + "/model_group" + std::to_string(members.front()) + "-" +
                       std::to_string(members.back()) + ".scan",
                   model);
  }
  return out;
}

AttackReport assemble(const PipelineConfig& cfg, const TraceMatrix& data,
                      const std::vector<std::vector<int>>& groups) {
  const std::vector<int> all_devices = device_ids(data);
  for (const auto& members : groups) {
    for (int d : members) {
      if (std::find(all_devices.begin(), all_devices.end(), d) == all_devices.end()) {
        throw ConfigError("pipeline: training device " + std::to_string(d) +
                          " not present in the dataset");
      }
    }
  }

  // Misalignment is injected on the whole set, as a capture artifact
  // would be, before any stage sees the data.
  TraceMatrix working = cfg.misalign_max_shift > 0
                            ? synth::inject_misalignment(data, cfg.misalign_max_shift,
                                                         mix64(cfg.seed ^ 0x736869667453ULL))
                            : data;

  AttackReport report;
  report.method = cfg.method;
  report.devices = all_devices;
  report.group_members = groups;
  report.accuracy = Mat::Zero(static_cast<Eigen::Index>(groups.size()),
                              static_cast<Eigen::Index>(all_devices.size()));
  report.excluded.assign(groups.size(), std::vector<bool>(all_devices.size(), false));

  double cross_sum = 0.0;
  Eigen::Index cross_count = 0;
  report.cross_max = -std::numeric_limits<double>::infinity();
  report.cross_min = std::numeric_limits<double>::infinity();

  for (size_t g = 0; g < groups.size(); ++g) {
    const uint64_t group_seed = mix64(cfg.seed ^ (0x67726f7570ULL + static_cast<uint64_t>(g)));
    const GroupOutcome outcome = run_group(cfg, working, groups[g], all_devices, group_seed);
    report.train_seconds += outcome.train_seconds;
    report.predict_seconds += outcome.predict_seconds;

    for (size_t d = 0; d < all_devices.size(); ++d) {
      const double acc = outcome.per_device_accuracy[d];
      report.accuracy(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(d)) = acc;
      const bool member = std::find(groups[g].begin(), groups[g].end(), all_devices[d]) !=
                          groups[g].end();
      report.excluded[g][d] = member;
      if (!member) {
        cross_sum += acc;
        ++cross_count;
        report.cross_max = std::max(report.cross_max, acc);
        report.cross_min = std::min(report.cross_min, acc);
      }
    }
  }
  if (cross_count > 0) {
    report.cross_avg = cross_sum / static_cast<double>(cross_count);
  } else {
    report.cross_avg = 0.0;
    report.cross_max = 0.0;
    report.cross_min = 0.0;
  }
  return report;
}

}  // namespace

AttackReport run(const PipelineConfig& cfg, const TraceMatrix& data) {
  validate(cfg);
  std::vector<int> members = cfg.explicit_devices;
  if (members.empty()) {
    const auto groups = attacks::form_groups(cfg.group_j, static_cast<int>(device_ids(data).size()));
    if (cfg.group_index > static_cast<int>(groups.size())) {
      throw ConfigError("pipeline: group_index " + std::to_string(cfg.group_index) +
                        " exceeds the " + std::to_string(groups.size()) + " available groups");
    }
    members = groups[static_cast<size_t>(cfg.group_index - 1)].members;
  }
  return assemble(cfg, data, {members});
}

AttackReport run(const PipelineConfig& cfg) { return run(cfg, read_traces(cfg.data_path)); }

AttackReport cross_matrix(const PipelineConfig& cfg, const TraceMatrix& data) {
  validate(cfg);
  const auto formed = attacks::form_groups(cfg.group_j, static_cast<int>(device_ids(data).size()));
  std::vector<std::vector<int>> groups;
  for (const auto& g : formed) groups.push_back(g.members);
  return assemble(cfg, data, groups);
}

AttackReport cross_matrix(const PipelineConfig& cfg) {
  return cross_matrix(cfg, read_traces(cfg.data_path));
}

std::vector<std::string> report_emit(const AttackReport& report, const std::string& out_dir,
                                     bool deterministic) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir + " (" + ec.message() + ")");

  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string path = out_dir + "/" + name;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    written.push_back(path);
    return os;
  };

  {
    auto os = open("matrix.csv");
    os << "group";
    for (int d : report.devices) os << ",device_" << d;
    os << "\n";
    for (Eigen::Index g = 0; g < report.accuracy.rows(); ++g) {
      os << (g + 1);
      for (Eigen::Index d = 0; d < report.accuracy.cols(); ++d) {
        os << ",";
        if (!report.excluded[static_cast<size_t>(g)][static_cast<size_t>(d)]) {
          os << format_double(report.accuracy(g, d));
        }
      }
      os << "\n";
    }
  }
  {
    auto os = open("summary.csv");
    os << "method,n_train_devices,avg,max,min\n";
    const size_t n_train = report.group_members.empty() ? 0 : report.group_members.front().size();
    os << to_string(report.method) << "," << n_train << "," << format_double(report.cross_avg)
       << "," << format_double(report.cross_max) << "," << format_double(report.cross_min) << "\n";
  }
  {
    auto os = open("plot.csv");
    os << "group,device,accuracy\n";
    for (Eigen::Index g = 0; g < report.accuracy.rows(); ++g) {
      for (Eigen::Index d = 0; d < report.accuracy.cols(); ++d) {
        os << (g + 1) << "," << report.devices[static_cast<size_t>(d)] << ","
           << format_double(report.accuracy(g, d)) << "\n";
      }
    }
  }
  if (!deterministic) {
    auto os = open("timing.csv");
    os << "phase,seconds\n";
    os << "train," << format_double(report.train_seconds) << "\n";
    os << "predict," << format_double(report.predict_seconds) << "\n";
  }
  return written;
}

std::vector<int> attack_predict(const nn::AttackModel& model, const TraceMatrix& raw) {
  const TraceMatrix* current = &raw;
  TraceMatrix staged = raw;
  if (model.dtw_reference) {
    const Trace ref(*model.dtw_reference);
    const int target = model.resample_length > 0 ? model.resample_length
                                                 : static_cast<int>(raw.cols());
    Mat warped(raw.rows(), target);
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const Trace w = align::warp_to_reference(raw.trace(i), ref);
      warped.row(i) = align::resample_to_length(w, target).samples().transpose();
    }
    staged = TraceMatrix(std::move(warped), raw.labels());
    current = &staged;
  }
  if (model.pca_model) {
    staged = pca::project(*model.pca_model, *current);
    current = &staged;
  }
  return nn::predict(model.net, *current);
}

double attack_accuracy(const nn::AttackModel& model, const TraceMatrix& raw) {
  const auto pred = attack_predict(model, raw);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    if (pred[static_cast<size_t>(i)] == raw.label(i).key_byte) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(raw.rows());
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    try {
      if (key == "method") cfg.method = method_from_string(value);
      else if (key == "data") cfg.data_path = value;
      else if (key == "j" || key == "group_j") cfg.group_j = std::stoi(value);
      else if (key == "group_index") cfg.group_index = std::stoi(value);
      else if (key == "devices") {
        cfg.explicit_devices.clear();
        std::istringstream ds(value);
        std::string tok;
        while (std::getline(ds, tok, ',')) cfg.explicit_devices.push_back(std::stoi(trim(tok)));
      } else if (key == "pca_components") cfg.pca_components = std::stol(value);
      else if (key == "dtw_reference_index") cfg.dtw_reference_index = std::stoi(value);
      else if (key == "resample_length") cfg.resample_length = std::stoi(value);
      else if (key == "misalign_max_shift") cfg.misalign_max_shift = std::stoi(value);
      else if (key == "holdout_fraction") cfg.holdout_fraction = std::stod(value);
      else if (key == "epochs") cfg.train.epochs = std::stoi(value);
      else if (key == "batch_size") cfg.train.batch_size = std::stoi(value);
      else if (key == "l2_lambda") cfg.train.l2_lambda = std::stod(value);
      else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
      else if (key == "verbose") cfg.train.verbose = std::stoi(value) != 0;
      else if (key == "augment_to") cfg.augment_to = std::stol(value);
      else if (key == "augment_sigma") cfg.augment_sigma = std::stod(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "deterministic") cfg.deterministic = std::stoi(value) != 0;
      else if (key == "save_model") cfg.save_model = std::stoi(value) != 0;
      else if (key == "out_dir") cfg.out_dir = value;
      else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace sca::pipeline
