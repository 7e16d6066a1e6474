#ifndef GRIDFORM_QNET_HPP
#define GRIDFORM_QNET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gridform/mdp_env.hpp"

namespace gridform {

/// conv(c1) -> relu -> conv(c2) -> relu -> flatten -> fc(w), both convs
/// zero-padded stride-1 over the 5 x l input.
struct QNetShape {
  int height = 5;
  int width = 0;  // l
  int outputs = 0; // w switches
  int k1 = 3, c1 = 12;
  int k2 = 3, c2 = 24;

  bool operator==(const QNetShape&) const = default;

  int conv1_weights() const { return c1 * 1 * k1 * k1; }
  int conv2_weights() const { return c2 * c1 * k2 * k2; }
  int flat_dim() const { return c2 * height * width; }
  int fc_weights() const { return flat_dim() * outputs; }
  int total() const {
    return conv1_weights() + c1 + conv2_weights() + c2 + fc_weights() + outputs;
  }
};

/// One flat parameter vector; layout [W1, b1, W2, b2, Wfc, bfc]. Value
/// semantics: copying a params object snapshots the network.
struct QNetworkParams {
  QNetShape shape;
  std::uint64_t seed = 0;
  std::vector<double> theta;

  bool operator==(const QNetworkParams&) const = default;
};

/// Zero biases, fan-in-scaled uniform weights.
QNetworkParams init_params(const QNetShape& shape, std::uint64_t seed);

struct ForwardCache {
  std::vector<double> input; // 5*l, row-major
  std::vector<double> z1, a1; // c1*5*l
  std::vector<double> z2, a2; // c2*5*l
  std::vector<double> raw;    // w, pre-normalization fc output
  std::vector<double> v;      // w, min-max normalized
  int i_min = 0, i_max = 0;
  bool degenerate = false;    // all raw scores equal -> v all 0.5
};

/// Normalized switch scores in [0, 1]; fills cache when given.
std::vector<double> forward(const QNetworkParams& params, const InputTensor& in,
                            ForwardCache* cache = nullptr);

/// Close the k highest-scoring switches, ties broken by lowest index.
SwitchConfig decode_action(const std::vector<double>& v, int k);

/// Mean of the k largest entries of v.
double q_value(const std::vector<double>& v, int k);

double td_target(double reward, bool done, const QNetworkParams& target_params,
                 const InputTensor& next_input, int k, double gamma);

/// Exact reverse-mode gradient of (td_target - q_value)^2 w.r.t. the flat
/// parameter vector, through the mean-of-top-k head and the min-max output
/// normalization (selected min/max treated as subgradient pass-through).
std::vector<double> backward(const QNetworkParams& params, const ForwardCache& cache,
                             int k, double td_target_value);

struct AdamState {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int t = 0;
  std::vector<double> m, v;
};

/// One adaptive-moment step in place; throws "diverged" on non-finite grads.
void apply_update(QNetworkParams& params, const std::vector<double>& grad, AdamState& opt);

struct GradCheckResult {
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

/// Central finite-difference check of backward at random parameters and a
/// random input; forward-only, so it is independent of the reverse path.
GradCheckResult gradient_check(const QNetShape& shape, std::uint64_t seed, int coords);

/// Versioned "gridform-qnet-v1" checkpoint; round-trips exactly.
std::string save_checkpoint(const QNetworkParams& params);
QNetworkParams load_checkpoint(const std::string& text);
QNetworkParams load_checkpoint_file(const std::string& path);

} // namespace gridform

#endif
