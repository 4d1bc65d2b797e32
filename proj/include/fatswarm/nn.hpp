#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fatswarm/rng.hpp"

namespace fatswarm {

/// Dense feed-forward network parameters. Hidden layers use tanh, the output
/// layer is linear.
///
/// All parameters live in one flat buffer: every layer's weight matrix
/// (row-major, out x in) in layer order, followed by every layer's bias
/// vector. The checkpoint format writes this buffer verbatim.
class MlpParams {
 public:
  MlpParams() = default;
  /// Zero-initialized parameters for the given layer widths (input first).
  explicit MlpParams(std::vector<std::size_t> dims);

  /// Uniform Glorot initialization, zero biases.
  static MlpParams glorot(std::vector<std::size_t> dims, Rng& rng);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.empty() ? 0 : dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void set_zero();
  bool same_shape(const MlpParams& other) const { return dims_ == other.dims_; }
  friend bool operator==(const MlpParams&, const MlpParams&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
  std::vector<std::size_t> w_offset_;
  std::vector<std::size_t> b_offset_;
};

/// Activations recorded by a forward pass; consumed by mlp_backward.
struct MlpTape {
  std::vector<std::vector<double>> activations;  // [0] = input, [l + 1] = output of layer l
  bool recorded() const { return !activations.empty(); }
};

std::vector<double> mlp_forward(const MlpParams& net, std::span<const double> input, MlpTape* tape = nullptr);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
/// Optionally writes d(loss)/d(input). Throws NoForwardRecorded on an empty tape.
void mlp_backward(const MlpParams& net, const MlpTape& tape, std::span<const double> upstream, MlpParams& grads,
                  std::span<double> input_grad = {});

/// Log density of a diagonal Gaussian.
double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);

struct PolicyGrads {
  MlpParams net;
  std::vector<double> log_std;

  void set_zero();
};

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

/// Diagonal Gaussian over actions: mean from an MLP, state-independent std.
struct GaussianPolicy {
  MlpParams mean_net;
  std::vector<double> log_std;

  static GaussianPolicy create(std::size_t obs_dim, std::size_t act_dim, const std::vector<std::size_t>& hidden,
                               double initial_std, Rng& rng);

  std::size_t obs_dim() const { return mean_net.input_dim(); }
  std::size_t act_dim() const { return mean_net.output_dim(); }

  std::vector<double> mean(std::span<const double> obs) const;
  ActionSample sample(std::span<const double> obs, Rng& rng) const;
  double log_prob(std::span<const double> obs, std::span<const double> action) const;
  /// log_prob that also records the mean network's forward pass.
  double log_prob(std::span<const double> obs, std::span<const double> action, MlpTape& tape) const;
  /// Adds scale * grad(log_prob) to `grads` using a tape from the overload above.
  void backward_log_prob(const MlpTape& tape, std::span<const double> action, double scale, PolicyGrads& grads) const;

  /// Adds scale * grad(log_prob) to `grads` and returns log_prob.
  double accumulate_log_prob_grad(std::span<const double> obs, std::span<const double> action, double scale,
                                  PolicyGrads& grads) const;

  PolicyGrads zero_grads() const;
  friend bool operator==(const GaussianPolicy&, const GaussianPolicy&) = default;
};

struct ValueNet {
  MlpParams net;

  static ValueNet create(std::size_t obs_dim, const std::vector<std::size_t>& hidden, Rng& rng);
  double predict(std::span<const double> obs) const;
  friend bool operator==(const ValueNet&, const ValueNet&) = default;
};

std::vector<double> forward_policy(const GaussianPolicy& policy, std::span<const double> obs);
ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> obs, Rng& rng);
double log_prob(const GaussianPolicy& policy, std::span<const double> obs, std::span<const double> action);
double forward_value(const ValueNet& value, std::span<const double> obs);

/// Adam with bias correction.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

enum class Direction { Ascent, Descent };

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                 Direction dir);

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (all integers and floats little-endian):
//   char[8]  magic "FSWARMNN"
//   u32      format version (1)
//   u32      kind (0 = value network, 1 = Gaussian policy)
//   u32      number of layer widths D
//   u64[D]   layer widths, input first
//   u32      flags (bit 0: log_std present, bit 1: optimizer moments present)
//   f64[...] weights row-major layer by layer, then biases layer by layer
//   f64[A]   log_std (A = output width), if flagged
//   moments, if flagged: u64 step count, f64 m[net], f64 v[net],
//            then f64 m[log_std], f64 v[log_std] when log_std is present
// ---------------------------------------------------------------------------

enum class NetworkKind : std::uint32_t { Value = 0, Policy = 1 };

struct OptimizerMoments {
  AdamState net;
  std::optional<AdamState> log_std;
  friend bool operator==(const OptimizerMoments&, const OptimizerMoments&) = default;
};

struct Checkpoint {
  NetworkKind kind = NetworkKind::Value;
  MlpParams net;
  std::optional<std::vector<double>> log_std;
  std::optional<OptimizerMoments> moments;

  static Checkpoint of(const GaussianPolicy& policy);
  static Checkpoint of(const ValueNet& value);
  GaussianPolicy policy() const;
  ValueNet value() const;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fatswarm
