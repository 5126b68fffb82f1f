#pragma once

#include <string>
#include <vector>

#include "sca/attacks.hpp"
#include "sca/nn.hpp"
#include "sca/trace.hpp"

namespace sca::pipeline {

/// Stage chains built from DTW realignment, PCA projection, and the two
/// classifiers.
enum class Method { Mlp, PcaMlp, Cnn, DtwCnn, DtwPcaCnn, DtwPcaMlp };

Method method_from_string(const std::string& name);
std::string to_string(Method m);
bool method_uses_dtw(Method m);
bool method_uses_pca(Method m);
bool method_uses_cnn(Method m);

/// One experiment: train on a device group, evaluate on every device.
/// All randomness (misalignment injection, splits, init, shuffling,
/// dropout) derives from `seed`; the seed inside `train` is ignored.
struct PipelineConfig {
  Method method = Method::PcaMlp;
  std::string data_path;

  int group_j = 1;                    // devices per training group
  int group_index = 1;                // which group G_j(i) to run
  std::vector<int> explicit_devices;  // overrides the group formula if non-empty

  Eigen::Index pca_components = 0;  // 0 = keep all retained dimensions
  int dtw_reference_index = 0;      // trace index within the first training device
  int resample_length = 0;          // 0 = resample realigned traces back to N
  int misalign_max_shift = 0;       // injected on the whole set before any stage

  double holdout_fraction = 0.2;  // per training device, held out for same-device eval
  nn::TrainConfig train;
  Eigen::Index augment_to = 0;
  double augment_sigma = 0.0;

  uint64_t seed = 0;
  bool deterministic = true;  // zero wall-clock fields in emitted files
  bool save_model = false;
  std::string out_dir;
};

/// Cross-device evaluation matrix. Cells on training devices hold the
/// held-out same-device accuracy and are excluded from the summary.
struct AttackReport {
  Method method = Method::Mlp;
  std::vector<int> devices;                     // column order
  std::vector<std::vector<int>> group_members;  // one row per group
  Mat accuracy;                                 // groups x devices
  std::vector<std::vector<bool>> excluded;      // true where device is in the row's group

  double cross_avg = 0.0;
  double cross_max = 0.0;
  double cross_min = 0.0;

  double train_seconds = 0.0;
  double predict_seconds = 0.0;

  double cell(int group_row, int device_id) const;
};

/// Validate configuration consistency without touching data.
void validate(const PipelineConfig& cfg);

/// Execute one group: [DTW realign -> resample] -> [PCA fit on merged
/// training data, project] -> train classifier -> evaluate per device.
/// Preprocessing is fit on training devices only and frozen for the rest.
AttackReport run(const PipelineConfig& cfg, const TraceMatrix& data);
AttackReport run(const PipelineConfig& cfg);  // loads cfg.data_path

/// One training run per group G_j(i), every device evaluated; summary
/// excludes training-device cells.
AttackReport cross_matrix(const PipelineConfig& cfg, const TraceMatrix& data);
AttackReport cross_matrix(const PipelineConfig& cfg);

/// Write matrix.csv (cross cells; training cells empty), summary.csv
/// (method,n_train_devices,avg,max,min), plot.csv (group,device,accuracy
/// in long form), and timing.csv unless the config is deterministic.
/// Returns the paths written.
std::vector<std::string> report_emit(const AttackReport& report, const std::string& out_dir,
                                     bool deterministic = true);

/// Classify raw traces with a self-contained attack model, applying its
/// embedded preprocessing (DTW warp against the stored reference,
/// resampling, PCA projection) before the network.
std::vector<int> attack_predict(const nn::AttackModel& model, const TraceMatrix& raw);
double attack_accuracy(const nn::AttackModel& model, const TraceMatrix& raw);

/// Flat key=value config file (one pair per line, '#' comments).
PipelineConfig parse_config_file(const std::string& path);
PipelineConfig parse_config_text(const std::string& text);

}  // namespace sca::pipeline
