#include "sca/synth.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <string>

namespace sca::synth {

namespace {

// clang-format off
constexpr uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
};
// clang-format on

// splitmix64; decouples counter-based substreams from the master seed.
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void validate_profile(const DeviceProfile& p, int trace_length) {
  if (p.gain <= 0.0) throw ConfigError("device profile: gain must be > 0");
  if (p.noise_sigma < 0.0) throw ConfigError("device profile: noise_sigma must be >= 0");
  if (p.response_sigma < 0.0) throw ConfigError("device profile: response_sigma must be >= 0");
  if (p.leak_strength <= 0.0) throw ConfigError("device profile: leak_strength must be > 0");
  for (int pos : p.leak_positions) {
    if (pos < 0 || pos >= trace_length) {
      throw ConfigError("device profile: leak position " + std::to_string(pos) +
                        " outside trace length " + std::to_string(trace_length));
    }
  }
}

double leak_amplitude(LeakModel model, uint8_t sbox_out, size_t position_rank, double strength) {
  switch (model) {
    case LeakModel::Hw:
      return strength * static_cast<double>(hamming_weight(sbox_out));
    case LeakModel::Bits:
      return strength * static_cast<double>((sbox_out >> position_rank) & 1u);
  }
  return 0.0;
}

}  // namespace

uint8_t sbox_lookup(uint8_t b) { return kSbox[b]; }

int hamming_weight(uint8_t b) { return std::popcount(b); }

Vec background_waveform(const SynthConfig& cfg) {
  std::mt19937_64 rng(mix(cfg.seed ^ 0x6267726f756e64ULL));
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec bg(cfg.trace_length);
  for (int j = 0; j < cfg.trace_length; ++j) bg[j] = cfg.background_scale * dist(rng);
  return bg;
}

Vec device_response(const DeviceProfile& profile, const SynthConfig& cfg) {
  Vec r = Vec::Ones(cfg.trace_length);
  if (profile.response_sigma > 0.0) {
    std::mt19937_64 rng(mix(cfg.seed ^ mix(0x72657370ULL + static_cast<uint64_t>(profile.device_id))));
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int j = 0; j < cfg.trace_length; ++j) r[j] += profile.response_sigma * dist(rng);
  }
  return r;
}

Trace synth_trace(uint8_t key_byte, uint8_t plaintext_byte, const DeviceProfile& profile,
                  const SynthConfig& cfg, uint64_t rng_token) {
  validate_profile(profile, cfg.trace_length);
  if (cfg.leak_model == LeakModel::Bits && profile.leak_positions.size() != 8) {
    throw ConfigError("bits leak model needs exactly 8 leak positions");
  }

  const Vec bg = background_waveform(cfg);
  const Vec response = device_response(profile, cfg);
  const uint8_t sbox_out = sbox_lookup(static_cast<uint8_t>(plaintext_byte ^ key_byte));

  Vec s = bg;
  for (size_t q = 0; q < profile.leak_positions.size(); ++q) {
    s[profile.leak_positions[q]] +=
        leak_amplitude(cfg.leak_model, sbox_out, q, profile.leak_strength);
  }
  s = profile.gain * s.cwiseProduct(response);
  s.array() += profile.offset;

  if (profile.noise_sigma > 0.0) {
    std::mt19937_64 rng(mix(cfg.seed ^ mix(rng_token)));
    std::normal_distribution<double> noise(0.0, profile.noise_sigma);
    for (int j = 0; j < cfg.trace_length; ++j) s[j] += noise(rng);
  }
  return Trace(std::move(s));
}

TraceMatrix synth_dataset(const SynthConfig& cfg) {
  if (cfg.devices.empty()) throw ConfigError("synth_dataset: no device profiles");
  if (cfg.n_traces_per_device < 1) throw ConfigError("synth_dataset: need at least one trace per device");
  if (cfg.trace_length < 1) throw ConfigError("synth_dataset: trace_length must be >= 1");
  for (const auto& d : cfg.devices) {
    validate_profile(d, cfg.trace_length);
    if (cfg.leak_model == LeakModel::Bits && d.leak_positions.size() != 8) {
      throw ConfigError("bits leak model needs exactly 8 leak positions");
    }
  }

  const Vec bg = background_waveform(cfg);
  const Eigen::Index per_device = cfg.n_traces_per_device;
  const Eigen::Index total = per_device * static_cast<Eigen::Index>(cfg.devices.size());

  Mat samples(total, cfg.trace_length);
  std::vector<TraceLabel> labels(static_cast<size_t>(total));

  Eigen::Index row = 0;
  for (const auto& dev : cfg.devices) {
    const Vec response = device_response(dev, cfg);
    for (Eigen::Index t = 0; t < per_device; ++t, ++row) {
      const uint8_t key = cfg.key_mode == ByteMode::Cycle
                              ? static_cast<uint8_t>(t % 256)
                              : static_cast<uint8_t>(cfg.fixed_key_byte);
      const uint8_t pt = cfg.plaintext_mode == ByteMode::Cycle
                             ? static_cast<uint8_t>(t % 256)
                             : static_cast<uint8_t>(cfg.fixed_plaintext_byte);
      const uint8_t sbox_out = sbox_lookup(static_cast<uint8_t>(pt ^ key));

      auto r = samples.row(row);
      for (int j = 0; j < cfg.trace_length; ++j) r[j] = bg[j];
      for (size_t q = 0; q < dev.leak_positions.size(); ++q) {
        r[dev.leak_positions[q]] +=
            leak_amplitude(cfg.leak_model, sbox_out, q, dev.leak_strength);
      }
      for (int j = 0; j < cfg.trace_length; ++j) r[j] = dev.gain * response[j] * r[j];
      r.array() += dev.offset;
      if (dev.noise_sigma > 0.0) {
        const uint64_t token =
            (static_cast<uint64_t>(dev.device_id) << 32) | static_cast<uint64_t>(t);
        std::mt19937_64 rng(mix(cfg.seed ^ mix(token)));
        std::normal_distribution<double> noise(0.0, dev.noise_sigma);
        for (int j = 0; j < cfg.trace_length; ++j) r[j] += noise(rng);
      }
      labels[static_cast<size_t>(row)] = TraceLabel{key, pt, dev.device_id};
    }
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

TraceMatrix inject_misalignment(const TraceMatrix& set, int max_shift, uint64_t seed) {
  std::vector<int> shifts;
  return inject_misalignment(set, max_shift, seed, shifts);
}

TraceMatrix inject_misalignment(const TraceMatrix& set, int max_shift, uint64_t seed,
                                std::vector<int>& shifts_out) {
  if (max_shift < 0 || max_shift >= set.cols()) {
    throw RangeError("inject_misalignment: max_shift must be in [0, N)");
  }
  shifts_out.assign(static_cast<size_t>(set.rows()), 0);
  if (max_shift == 0) return set;

  std::mt19937_64 rng(mix(seed ^ 0x6d697361ULL));
  std::uniform_int_distribution<int> draw(0, max_shift);

  Mat out(set.rows(), set.cols());
  for (Eigen::Index i = 0; i < set.rows(); ++i) {
    const int s = draw(rng);
    shifts_out[static_cast<size_t>(i)] = s;
    const auto src = set.samples().row(i);
    auto dst = out.row(i);
    for (Eigen::Index j = 0; j < s; ++j) dst[j] = src[0];
    for (Eigen::Index j = s; j < set.cols(); ++j) dst[j] = src[j - s];
  }
  return TraceMatrix(std::move(out), set.labels());
}

TraceMatrix augment_with_noise(const TraceMatrix& set, Eigen::Index target_count, double sigma,
                               uint64_t seed) {
  if (sigma < 0.0) throw RangeError("augment_with_noise: sigma must be >= 0");
  if (target_count <= set.rows()) return set;

  Mat samples(target_count, set.cols());
  samples.topRows(set.rows()) = set.samples();
  std::vector<TraceLabel> labels = set.labels();
  labels.reserve(static_cast<size_t>(target_count));

  std::mt19937_64 rng(mix(seed ^ 0x617567ULL));
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = set.rows(); i < target_count; ++i) {
    const Eigen::Index src = (i - set.rows()) % set.rows();
    auto dst = samples.row(i);
    dst = set.samples().row(src);
    if (sigma > 0.0) {
      for (Eigen::Index j = 0; j < set.cols(); ++j) dst[j] += noise(rng);
    }
    labels.push_back(set.label(src));
  }
  return TraceMatrix(std::move(samples), std::move(labels));
}

std::vector<DeviceProfile> make_device_profiles(int n_devices, const std::vector<int>& leak_positions,
                                                double leak_strength, double noise_sigma,
                                                double gain_spread, double offset_spread,
                                                uint64_t seed, double response_sigma) {
  if (n_devices < 1) throw ConfigError("make_device_profiles: need at least one device");
  std::vector<DeviceProfile> devs;
  devs.reserve(static_cast<size_t>(n_devices));
  std::mt19937_64 rng(mix(seed ^ 0x64657673ULL));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Two batches with distinct baseline offsets plus per-device jitter,
  // echoing the two date/lot codes the 30-device corpus came from.
  const int batch1 = (n_devices + 1) / 2;
  for (int d = 1; d <= n_devices; ++d) {
    DeviceProfile p;
    p.device_id = d;
    p.batch_id = d <= batch1 ? 1 : 2;
    p.gain = 1.0 + gain_spread * unit(rng);
    const double batch_offset = (p.batch_id == 1 ? -0.5 : 0.5) * offset_spread;
    p.offset = batch_offset + 0.5 * offset_spread * unit(rng);
    p.noise_sigma = noise_sigma;
    p.response_sigma = response_sigma;
    p.leak_positions = leak_positions;
    p.leak_strength = leak_strength;
    devs.push_back(std::move(p));
  }
  return devs;
}

}  // namespace sca::synth
