#include "fatswarm/nn.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <cmath>
#include <numbers>
#include <string>

#include "fatswarm/error.hpp"

namespace fatswarm {

MlpParams::MlpParams(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw Error(ErrorCode::ShapeMismatch, "MlpParams: need at least input and output widths");
  for (std::size_t d : dims_)
    if (d == 0) throw Error(ErrorCode::ShapeMismatch, "MlpParams: zero layer width");
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    w_offset_.push_back(offset);
    offset += dims_[l] * dims_[l + 1];
  }
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    b_offset_.push_back(offset);
    offset += dims_[l + 1];
  }
  data_.assign(offset, 0.0);
}

MlpParams MlpParams::glorot(std::vector<std::size_t> dims, Rng& rng) {
  MlpParams p(std::move(dims));
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(p.dims_[l] + p.dims_[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : p.weights(l)) w = u(rng);
  }
  return p;
}

std::span<double> MlpParams::weights(std::size_t l) {
  return {data_.data() + w_offset_[l], dims_[l] * dims_[l + 1]};
}
std::span<const double> MlpParams::weights(std::size_t l) const {
  return {data_.data() + w_offset_[l], dims_[l] * dims_[l + 1]};
}
std::span<double> MlpParams::biases(std::size_t l) { return {data_.data() + b_offset_[l], dims_[l + 1]}; }
std::span<const double> MlpParams::biases(std::size_t l) const {
  return {data_.data() + b_offset_[l], dims_[l + 1]};
}

void MlpParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

std::vector<double> mlp_forward(const MlpParams& net, std::span<const double> input, MlpTape* tape) {
  if (net.num_layers() == 0) throw Error(ErrorCode::ShapeMismatch, "mlp_forward: empty network");
  if (input.size() != net.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "mlp_forward: input has " + std::to_string(input.size()) +
                                                  " entries, network expects " + std::to_string(net.input_dim()));
  const auto& dims = net.dims();
  if (tape) {
    tape->activations.resize(dims.size());
    tape->activations[0].assign(input.begin(), input.end());
  }
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> y;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    auto w = net.weights(l);
    auto b = net.biases(l);
    y.assign(b.begin(), b.end());
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.data() + o * in;
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t i = 0;
      for (; i + 4 <= in; i += 4)
        for (std::size_t k = 0; k < 4; ++k) acc[k] += row[i + k] * x[i + k];
      for (; i < in; ++i) acc[0] += row[i] * x[i];
      y[o] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
    }
    if (l + 1 < net.num_layers())
      for (double& v : y) v = std::tanh(v);
    if (tape) tape->activations[l + 1] = y;
    std::swap(x, y);
  }
  return x;
}

void mlp_backward(const MlpParams& net, const MlpTape& tape, std::span<const double> upstream, MlpParams& grads,
                  std::span<double> input_grad) {
  if (!tape.recorded() || tape.activations.size() != net.dims().size())
    throw Error(ErrorCode::NoForwardRecorded, "mlp_backward: no forward pass recorded for this network");
  if (!grads.same_shape(net)) throw Error(ErrorCode::ShapeMismatch, "mlp_backward: gradient shape mismatch");
  if (upstream.size() != net.output_dim())
    throw Error(ErrorCode::DimensionMismatch, "mlp_backward: upstream gradient has wrong length");

  const auto& dims = net.dims();
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const std::size_t in = dims[l];
    const std::size_t out = dims[l + 1];
    if (l + 1 < net.num_layers()) {
      const auto& a = tape.activations[l + 1];
      for (std::size_t o = 0; o < out; ++o) delta[o] *= 1.0 - a[o] * a[o];
    }
    const auto& x = tape.activations[l];
    auto w = net.weights(l);
    auto gw = grads.weights(l);
    auto gb = grads.biases(l);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
    }
    if (l == 0 && input_grad.empty()) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    std::swap(delta, prev);
  }
  if (!input_grad.empty()) {
    if (input_grad.size() != net.input_dim())
      throw Error(ErrorCode::DimensionMismatch, "mlp_backward: input gradient has wrong length");
    std::copy(delta.begin(), delta.end(), input_grad.begin());
  }
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw Error(ErrorCode::DimensionMismatch, "gaussian_log_prob: dimension mismatch");
  constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)
  double lp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double z = (action[d] - mean[d]) * std::exp(-log_std[d]);
    lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return lp;
}

void PolicyGrads::set_zero() {
  net.set_zero();
  std::fill(log_std.begin(), log_std.end(), 0.0);
}

GaussianPolicy GaussianPolicy::create(std::size_t obs_dim, std::size_t act_dim,
                                      const std::vector<std::size_t>& hidden, double initial_std, Rng& rng) {
  std::vector<std::size_t> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(act_dim);
  GaussianPolicy p;
  p.mean_net = MlpParams::glorot(std::move(dims), rng);
  p.log_std.assign(act_dim, std::log(initial_std));
  return p;
}

std::vector<double> GaussianPolicy::mean(std::span<const double> obs) const { return mlp_forward(mean_net, obs); }

ActionSample GaussianPolicy::sample(std::span<const double> obs, Rng& rng) const {
  std::vector<double> mu = mean(obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  s.action.resize(mu.size());
  for (std::size_t d = 0; d < mu.size(); ++d) s.action[d] = mu[d] + std::exp(log_std[d]) * normal(rng);
  s.log_prob = gaussian_log_prob(mu, log_std, s.action);
  return s;
}

double GaussianPolicy::log_prob(std::span<const double> obs, std::span<const double> action) const {
  if (action.size() != act_dim()) throw Error(ErrorCode::DimensionMismatch, "log_prob: action has wrong length");
  return gaussian_log_prob(mean(obs), log_std, action);
}

double GaussianPolicy::log_prob(std::span<const double> obs, std::span<const double> action, MlpTape& tape) const {
  if (action.size() != act_dim()) throw Error(ErrorCode::DimensionMismatch, "log_prob: action has wrong length");
  return gaussian_log_prob(mlp_forward(mean_net, obs, &tape), log_std, action);
}

void GaussianPolicy::backward_log_prob(const MlpTape& tape, std::span<const double> action, double scale,
                                       PolicyGrads& grads) const {
  if (!tape.recorded()) throw Error(ErrorCode::NoForwardRecorded, "backward_log_prob: no forward pass recorded");
  if (action.size() != act_dim()) throw Error(ErrorCode::DimensionMismatch, "log_prob: action has wrong length");
  const std::vector<double>& mu = tape.activations.back();
  std::vector<double> upstream(mu.size());
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double inv_var = std::exp(-2.0 * log_std[d]);
    const double diff = action[d] - mu[d];
    upstream[d] = scale * diff * inv_var;
    grads.log_std[d] += scale * (diff * diff * inv_var - 1.0);
  }
  mlp_backward(mean_net, tape, upstream, grads.net);
}

double GaussianPolicy::accumulate_log_prob_grad(std::span<const double> obs, std::span<const double> action,
                                                double scale, PolicyGrads& grads) const {
  MlpTape tape;
  const double lp = log_prob(obs, action, tape);
  backward_log_prob(tape, action, scale, grads);
  return lp;
}

PolicyGrads GaussianPolicy::zero_grads() const {
  return PolicyGrads{MlpParams(mean_net.dims()), std::vector<double>(log_std.size(), 0.0)};
}

ValueNet ValueNet::create(std::size_t obs_dim, const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<std::size_t> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return ValueNet{MlpParams::glorot(std::move(dims), rng)};
}

double ValueNet::predict(std::span<const double> obs) const { return mlp_forward(net, obs)[0]; }

std::vector<double> forward_policy(const GaussianPolicy& policy, std::span<const double> obs) {
  return policy.mean(obs);
}
ActionSample sample_action(const GaussianPolicy& policy, std::span<const double> obs, Rng& rng) {
  return policy.sample(obs, rng);
}
double log_prob(const GaussianPolicy& policy, std::span<const double> obs, std::span<const double> action) {
  return policy.log_prob(obs, action);
}
double forward_value(const ValueNet& value, std::span<const double> obs) { return value.predict(obs); }

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
                 Direction dir) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "adam_update: parameter, gradient and moment sizes differ");
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double sign = dir == Direction::Ascent ? 1.0 : -1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] += sign * lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

// ---------------------------------------------------------------------------
// Checkpoint encoding

namespace {

constexpr char kMagic[8] = {'F', 'S', 'W', 'A', 'R', 'M', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagLogStd = 1u << 0;
constexpr std::uint32_t kFlagMoments = 1u << 1;

class ByteWriter {
 public:
  template <typename U>
  void put_uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void put_f64(double d) { put_uint(std::bit_cast<std::uint64_t>(d)); }
  void put_f64s(std::span<const double> ds) {
    for (double d : ds) put_f64(d);
  }
  void put_raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename U>
  U get_uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get_uint<std::uint64_t>()); }
  void get_f64s(std::span<double> out) {
    for (double& d : out) d = get_f64();
  }
  bool match(const char* p, std::size_t n) {
    need(n);
    bool ok = std::equal(p, p + n, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ += n;
    return ok;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::ParseFailure, "checkpoint: truncated data");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_adam(ByteWriter& w, const AdamState& s) {
  w.put_uint<std::uint64_t>(s.t);
  w.put_f64s(s.m);
  w.put_f64s(s.v);
}

AdamState get_adam(ByteReader& r, std::size_t n) {
  AdamState s(n);
  s.t = r.get_uint<std::uint64_t>();
  r.get_f64s(s.m);
  r.get_f64s(s.v);
  return s;
}

}  // namespace

Checkpoint Checkpoint::of(const GaussianPolicy& policy) {
  return Checkpoint{NetworkKind::Policy, policy.mean_net, policy.log_std, std::nullopt};
}

Checkpoint Checkpoint::of(const ValueNet& value) {
  return Checkpoint{NetworkKind::Value, value.net, std::nullopt, std::nullopt};
}

GaussianPolicy Checkpoint::policy() const {
  if (kind != NetworkKind::Policy || !log_std)
    throw Error(ErrorCode::ParseFailure, "checkpoint does not hold a policy");
  return GaussianPolicy{net, *log_std};
}

ValueNet Checkpoint::value() const {
  if (kind != NetworkKind::Value) throw Error(ErrorCode::ParseFailure, "checkpoint does not hold a value network");
  return ValueNet{net};
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.log_std && ckpt.log_std->size() != ckpt.net.output_dim())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint: log_std length differs from output width");
  ByteWriter w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put_uint<std::uint32_t>(kVersion);
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.kind));
  w.put_uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.net.dims().size()));
  for (std::size_t d : ckpt.net.dims()) w.put_uint<std::uint64_t>(d);
  std::uint32_t flags = (ckpt.log_std ? kFlagLogStd : 0u) | (ckpt.moments ? kFlagMoments : 0u);
  w.put_uint<std::uint32_t>(flags);
  w.put_f64s(ckpt.net.values());
  if (ckpt.log_std) w.put_f64s(*ckpt.log_std);
  if (ckpt.moments) {
    const auto& mo = *ckpt.moments;
    if (mo.net.m.size() != ckpt.net.size() || (ckpt.log_std.has_value() != mo.log_std.has_value()))
      throw Error(ErrorCode::ShapeMismatch, "checkpoint: optimizer moments do not match the network");
    put_adam(w, mo.net);
    if (mo.log_std) put_adam(w, *mo.log_std);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (!r.match(kMagic, sizeof(kMagic))) throw Error(ErrorCode::ParseFailure, "checkpoint: bad magic");
  if (r.get_uint<std::uint32_t>() != kVersion) throw Error(ErrorCode::ParseFailure, "checkpoint: unsupported version");
  Checkpoint ckpt;
  const auto kind = r.get_uint<std::uint32_t>();
  if (kind > 1) throw Error(ErrorCode::ParseFailure, "checkpoint: unknown network kind");
  ckpt.kind = static_cast<NetworkKind>(kind);
  const auto ndims = r.get_uint<std::uint32_t>();
  if (ndims < 2 || ndims > 64) throw Error(ErrorCode::ParseFailure, "checkpoint: implausible layer count");
  std::vector<std::size_t> dims(ndims);
  for (auto& d : dims) {
    d = r.get_uint<std::uint64_t>();
    if (d == 0 || d > (1u << 20)) throw Error(ErrorCode::ParseFailure, "checkpoint: implausible layer width");
  }
  const auto flags = r.get_uint<std::uint32_t>();
  ckpt.net = MlpParams(dims);
  r.get_f64s(ckpt.net.values());
  if (flags & kFlagLogStd) {
    ckpt.log_std.emplace(ckpt.net.output_dim());
    r.get_f64s(*ckpt.log_std);
  }
  if (flags & kFlagMoments) {
    OptimizerMoments mo;
    mo.net = get_adam(r, ckpt.net.size());
    if (ckpt.log_std) mo.log_std = get_adam(r, ckpt.log_std->size());
    ckpt.moments = std::move(mo);
  }
  if (!r.done()) throw Error(ErrorCode::ParseFailure, "checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingCheckpoint, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fatswarm
