#pragma once

#include <cstdint>
#include <vector>

#include "sca/trace.hpp"

namespace sca::synth {

/// AES-128 forward SBox (FIPS-197).
uint8_t sbox_lookup(uint8_t b);

/// Population count of a byte, in [0,8].
int hamming_weight(uint8_t b);

/// How key-dependent leakage is injected at the leak positions.
///   Hw:   every position carries leak_strength * HW(SBox(p ^ k)).
///   Bits: position q carries leak_strength * bit_q(SBox(p ^ k)); needs
///         exactly 8 positions. Makes all 256 classes separable, the way
///         per-bit bus leakage does on 8-bit targets.
enum class LeakModel { Hw, Bits };

/// Per-device manufacturing/packaging variation: multiplicative gain,
/// additive baseline offset, noise level, a per-sample response ripple,
/// and where the leakage lands.
///
/// The response ripple models how two "identical" boards differ sample
/// by sample, not just by one scalar: device d applies
/// r_d[j] = 1 + response_sigma * s_d[j] (s_d a per-device unit speckle
/// drawn from the device id) multiplicatively on top of gain. A
/// classifier trained on other devices has never seen the test device's
/// ripple.
struct DeviceProfile {
  int device_id = 1;
  double gain = 1.0;         // > 0
  double offset = 0.0;
  double noise_sigma = 0.0;  // >= 0
  double response_sigma = 0.0;  // >= 0, per-sample gain ripple
  std::vector<int> leak_positions;
  double leak_strength = 1.0;  // > 0
  int batch_id = 1;
};

enum class ByteMode { Cycle, Fixed };

struct SynthConfig {
  int n_traces_per_device = 2560;
  int trace_length = 3000;
  std::vector<DeviceProfile> devices;
  LeakModel leak_model = LeakModel::Hw;

  // Key bytes cycle 0..255 by default (uniform coverage); plaintext is the
  // fixed chosen value. CPA scenarios invert this: fixed key, cycling
  // plaintext.
  ByteMode key_mode = ByteMode::Cycle;
  int fixed_key_byte = 0x00;
  ByteMode plaintext_mode = ByteMode::Fixed;
  int fixed_plaintext_byte = 0x00;

  // Key-independent waveform shared by every trace of the dataset, drawn
  // once from N(0, background_scale^2) with its own seed.
  double background_scale = 1.0;
  uint64_t seed = 0;
};

/// The deterministic background waveform for a config.
Vec background_waveform(const SynthConfig& cfg);

/// The deterministic per-sample response ripple for a profile,
/// r[j] = 1 + response_sigma * s[j].
Vec device_response(const DeviceProfile& profile, const SynthConfig& cfg);

/// One synthetic trace:
///   sample[j] = gain * r[j] * (bg[j] + leak(j)) + offset + N(0, noise_sigma^2)
/// where leak(j) is nonzero only at the profile's leak positions and r
/// is the device's response ripple. rng_token selects a counter-based
/// noise substream, so generation is order-independent.
Trace synth_trace(uint8_t key_byte, uint8_t plaintext_byte, const DeviceProfile& profile,
                  const SynthConfig& cfg, uint64_t rng_token);

/// Full dataset: per device, n_traces_per_device traces with uniform key
/// coverage (cycling), labels filled, deterministic given cfg.seed.
TraceMatrix synth_dataset(const SynthConfig& cfg);

/// Right-shift every trace by an independent uniform draw from
/// {0..max_shift}; vacated leading samples replicate the first original
/// sample. Models faulty oscilloscope triggering.
TraceMatrix inject_misalignment(const TraceMatrix& set, int max_shift, uint64_t seed);

/// Same, but also reports the shift drawn for each trace.
TraceMatrix inject_misalignment(const TraceMatrix& set, int max_shift, uint64_t seed,
                                std::vector<int>& shifts_out);

/// K device profiles with seeded gain/offset/batch variation around the
/// given spreads; leak positions, strength, noise, and response ripple
/// magnitude shared across devices (each device still draws its own
/// ripple from its id).
std::vector<DeviceProfile> make_device_profiles(int n_devices, const std::vector<int>& leak_positions,
                                                double leak_strength, double noise_sigma,
                                                double gain_spread, double offset_spread,
                                                uint64_t seed, double response_sigma = 0.0);

/// Grow a training set to target_count rows by appending Gaussian-noise
/// copies of cycled originals (labels preserved). No-op when the set is
/// already large enough.
TraceMatrix augment_with_noise(const TraceMatrix& set, Eigen::Index target_count, double sigma,
                               uint64_t seed);

}  // namespace sca::synth
