#include "gridform/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridform {

namespace {

// Parameter block offsets within the flat vector.
struct Offsets {
  int w1, b1, w2, b2, wfc, bfc;
  explicit Offsets(const QNetShape& s) {
    w1 = 0;
    b1 = w1 + s.conv1_weights();
    w2 = b1 + s.c1;
    b2 = w2 + s.conv2_weights();
    wfc = b2 + s.c2;
    bfc = wfc + s.fc_weights();
  }
};

// Zero-padded same-size convolution. in: cin*H*L, out: cout*H*L.
void conv_forward(const double* W, const double* b, const double* in, double* out,
                  int cin, int cout, int H, int L, int k) {
  const int pad = k / 2;
  for (int co = 0; co < cout; ++co) {
    for (int r = 0; r < H; ++r) {
      for (int col = 0; col < L; ++col) {
        double acc = b[co];
        for (int ci = 0; ci < cin; ++ci) {
          const double* Wc = W + ((co * cin + ci) * k) * k;
          const double* inc = in + ci * H * L;
          for (int dr = 0; dr < k; ++dr) {
            int rr = r + dr - pad;
            if (rr < 0 || rr >= H) continue;
            for (int dc = 0; dc < k; ++dc) {
              int cc = col + dc - pad;
              if (cc < 0 || cc >= L) continue;
              acc += Wc[dr * k + dc] * inc[rr * L + cc];
            }
          }
        }
        out[(co * H + r) * L + col] = acc;
      }
    }
  }
}

// Accumulates gradients for W, b and (when g_in != nullptr) the layer input.
void conv_backward(const double* W, const double* in, const double* g_out,
                   double* gW, double* gb, double* g_in,
                   int cin, int cout, int H, int L, int k) {
  const int pad = k / 2;
  for (int co = 0; co < cout; ++co) {
    for (int r = 0; r < H; ++r) {
      for (int col = 0; col < L; ++col) {
        double g = g_out[(co * H + r) * L + col];
        if (g == 0.0) continue;
        gb[co] += g;
        for (int ci = 0; ci < cin; ++ci) {
          const double* Wc = W + ((co * cin + ci) * k) * k;
          double* gWc = gW + ((co * cin + ci) * k) * k;
          const double* inc = in + ci * H * L;
          double* ginc = g_in ? g_in + ci * H * L : nullptr;
          for (int dr = 0; dr < k; ++dr) {
            int rr = r + dr - pad;
            if (rr < 0 || rr >= H) continue;
            for (int dc = 0; dc < k; ++dc) {
              int cc = col + dc - pad;
              if (cc < 0 || cc >= L) continue;
              gWc[dr * k + dc] += g * inc[rr * L + cc];
              if (ginc) ginc[rr * L + cc] += g * Wc[dr * k + dc];
            }
          }
        }
      }
    }
  }
}

std::vector<int> topk_indices(const std::vector<double>& v, int k) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

} // namespace

QNetworkParams init_params(const QNetShape& shape, std::uint64_t seed) {
  QNetworkParams p;
  p.shape = shape;
  p.seed = seed;
  p.theta.assign(shape.total(), 0.0);
  Offsets off(shape);
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](int begin, int count, int fan_in) {
    double s = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> uni(-s, s);
    for (int i = 0; i < count; ++i) p.theta[begin + i] = uni(rng);
  };
  fill_uniform(off.w1, shape.conv1_weights(), shape.k1 * shape.k1);
  fill_uniform(off.w2, shape.conv2_weights(), shape.c1 * shape.k2 * shape.k2);
  fill_uniform(off.wfc, shape.fc_weights(), shape.flat_dim());
  return p;
}

std::vector<double> forward(const QNetworkParams& params, const InputTensor& in,
                            ForwardCache* cache) {
  const QNetShape& s = params.shape;
  if (in.width != s.width)
    throw std::runtime_error("forward: input width mismatch");
  Offsets off(s);
  const int H = s.height, L = s.width;

  std::vector<double> x(H * L);
  for (int r = 0; r < H; ++r)
    for (int col = 0; col < L; ++col) x[r * L + col] = in.rows[r][col];

  std::vector<double> z1(s.c1 * H * L), a1, z2(s.c2 * H * L), a2;
  conv_forward(params.theta.data() + off.w1, params.theta.data() + off.b1,
               x.data(), z1.data(), 1, s.c1, H, L, s.k1);
  a1 = z1;
  for (double& v : a1) v = std::max(0.0, v);
  conv_forward(params.theta.data() + off.w2, params.theta.data() + off.b2,
               a1.data(), z2.data(), s.c1, s.c2, H, L, s.k2);
  a2 = z2;
  for (double& v : a2) v = std::max(0.0, v);

  std::vector<double> raw(s.outputs);
  const double* Wfc = params.theta.data() + off.wfc;
  const double* bfc = params.theta.data() + off.bfc;
  const int F = s.flat_dim();
  for (int o = 0; o < s.outputs; ++o) raw[o] = bfc[o];
  for (int f = 0; f < F; ++f) {
    double af = a2[f];
    if (af == 0.0) continue;
    const double* Wrow = Wfc + (size_t)f * s.outputs;
    for (int o = 0; o < s.outputs; ++o) raw[o] += af * Wrow[o];
  }

  int i_min = 0, i_max = 0;
  for (int o = 1; o < s.outputs; ++o) {
    if (raw[o] < raw[i_min]) i_min = o;
    if (raw[o] > raw[i_max]) i_max = o;
  }
  std::vector<double> v(s.outputs);
  double d = raw[i_max] - raw[i_min];
  bool degenerate = d <= 0.0;
  for (int o = 0; o < s.outputs; ++o)
    v[o] = degenerate ? 0.5 : (raw[o] - raw[i_min]) / d;

  if (cache) {
    cache->input = std::move(x);
    cache->z1 = std::move(z1);
    cache->a1 = std::move(a1);
    cache->z2 = std::move(z2);
    cache->a2 = std::move(a2);
    cache->raw = raw;
    cache->v = v;
    cache->i_min = i_min;
    cache->i_max = i_max;
    cache->degenerate = degenerate;
  }
  return v;
}

SwitchConfig decode_action(const std::vector<double>& v, int k) {
  SwitchConfig cfg;
  cfg.alpha.assign(v.size(), 0);
  for (int i : topk_indices(v, k)) cfg.alpha[i] = 1;
  return cfg;
}

double q_value(const std::vector<double>& v, int k) {
  double acc = 0.0;
  for (int i : topk_indices(v, k)) acc += v[i];
  return acc / k;
}

double td_target(double reward, bool done, const QNetworkParams& target_params,
                 const InputTensor& next_input, int k, double gamma) {
  if (done) return reward;
  std::vector<double> v = forward(target_params, next_input);
  return reward + gamma * q_value(v, k);
}

std::vector<double> backward(const QNetworkParams& params, const ForwardCache& cache,
                             int k, double td_target_value) {
  const QNetShape& s = params.shape;
  Offsets off(s);
  const int H = s.height, L = s.width;
  std::vector<double> grad(s.total(), 0.0);

  double q = q_value(cache.v, k);
  double dLdq = 2.0 * (q - td_target_value);

  // Through the mean-of-top-k head.
  std::vector<double> g_v(s.outputs, 0.0);
  for (int i : topk_indices(cache.v, k)) g_v[i] = dLdq / k;

  // Through the min-max normalization (selected min/max as pass-through).
  std::vector<double> g_raw(s.outputs, 0.0);
  if (!cache.degenerate) {
    double d = cache.raw[cache.i_max] - cache.raw[cache.i_min];
    double s0 = 0.0, s1 = 0.0;
    for (int o = 0; o < s.outputs; ++o) {
      s0 += g_v[o];
      s1 += g_v[o] * cache.v[o];
    }
    for (int o = 0; o < s.outputs; ++o) g_raw[o] = g_v[o] / d;
    g_raw[cache.i_min] += (s1 - s0) / d;
    g_raw[cache.i_max] -= s1 / d;
  }

  // Fully-connected layer.
  const int F = s.flat_dim();
  const double* Wfc = params.theta.data() + off.wfc;
  double* gWfc = grad.data() + off.wfc;
  double* gbfc = grad.data() + off.bfc;
  std::vector<double> g_a2(F, 0.0);
  for (int o = 0; o < s.outputs; ++o) gbfc[o] = g_raw[o];
  for (int f = 0; f < F; ++f) {
    const double* Wrow = Wfc + (size_t)f * s.outputs;
    double* gWrow = gWfc + (size_t)f * s.outputs;
    double af = cache.a2[f];
    double acc = 0.0;
    for (int o = 0; o < s.outputs; ++o) {
      gWrow[o] = af * g_raw[o];
      acc += Wrow[o] * g_raw[o];
    }
    g_a2[f] = acc;
  }

  // Rectifier masks, then the two convolutions.
  for (int f = 0; f < F; ++f)
    if (cache.z2[f] <= 0.0) g_a2[f] = 0.0;
  std::vector<double> g_a1(s.c1 * H * L, 0.0);
  conv_backward(params.theta.data() + off.w2, cache.a1.data(), g_a2.data(),
                grad.data() + off.w2, grad.data() + off.b2, g_a1.data(),
                s.c1, s.c2, H, L, s.k2);
  for (int f = 0; f < s.c1 * H * L; ++f)
    if (cache.z1[f] <= 0.0) g_a1[f] = 0.0;
  conv_backward(params.theta.data() + off.w1, cache.input.data(), g_a1.data(),
                grad.data() + off.w1, grad.data() + off.b1, nullptr,
                1, s.c1, H, L, s.k1);
  return grad;
}

void apply_update(QNetworkParams& params, const std::vector<double>& grad, AdamState& opt) {
  if (grad.size() != params.theta.size())
    throw std::runtime_error("apply_update: gradient size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("diverged");
  if (opt.m.size() != grad.size()) {
    opt.m.assign(grad.size(), 0.0);
    opt.v.assign(grad.size(), 0.0);
  }
  ++opt.t;
  double c1 = 1.0 - std::pow(opt.beta1, opt.t);
  double c2 = 1.0 - std::pow(opt.beta2, opt.t);
  for (size_t i = 0; i < grad.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    double mhat = opt.m[i] / c1;
    double vhat = opt.v[i] / c2;
    params.theta[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

GradCheckResult gradient_check(const QNetShape& shape, std::uint64_t seed, int coords) {
  QNetworkParams params = init_params(shape, seed);
  std::mt19937_64 rng(seed ^ 0x517cc1b727220a95ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // Jitter every coordinate off the freshly-initialized point: with zero
  // biases many pre-activations sit exactly on the rectifier kink, where
  // finite differences straddle the non-differentiability.
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (double& t : params.theta) t += jitter(rng);

  InputTensor in;
  in.width = shape.width;
  for (auto& row : in.rows) {
    row.resize(shape.width);
    for (double& v : row) v = uni(rng);
  }
  const int k = std::max(1, shape.outputs / 2);
  const double td = uni(rng) * 1.5;

  ForwardCache cache;
  forward(params, in, &cache);
  std::vector<double> grad = backward(params, cache, k, td);

  auto loss_at = [&](int i, double delta) {
    QNetworkParams p = params;
    p.theta[i] += delta;
    double q = q_value(forward(p, in), k);
    return (td - q) * (td - q);
  };

  GradCheckResult res;
  res.coords_checked = coords;
  std::uniform_int_distribution<int> pick(0, shape.total() - 1);
  for (int c = 0; c < coords; ++c) {
    int i = pick(rng);
    double h = 1e-6 * std::max(1.0, std::abs(params.theta[i]));
    double fd = (loss_at(i, h) - loss_at(i, -h)) / (2.0 * h);
    double rel = std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
    res.max_rel_err = std::max(res.max_rel_err, rel);
  }
  return res;
}

std::string save_checkpoint(const QNetworkParams& params) {
  nlohmann::ordered_json j;
  j["schema"] = "gridform-qnet-v1";
  j["seed"] = params.seed;
  j["shape"] = {{"height", params.shape.height}, {"width", params.shape.width},
                {"outputs", params.shape.outputs},
                {"k1", params.shape.k1}, {"c1", params.shape.c1},
                {"k2", params.shape.k2}, {"c2", params.shape.c2}};
  j["theta"] = params.theta;
  return j.dump();
}

QNetworkParams load_checkpoint(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("schema", "") != "gridform-qnet-v1")
    throw std::runtime_error("checkpoint schema: expected \"gridform-qnet-v1\"");
  QNetworkParams p;
  p.seed = j.at("seed").get<std::uint64_t>();
  const auto& js = j.at("shape");
  p.shape.height = js.at("height");
  p.shape.width = js.at("width");
  p.shape.outputs = js.at("outputs");
  p.shape.k1 = js.at("k1");
  p.shape.c1 = js.at("c1");
  p.shape.k2 = js.at("k2");
  p.shape.c2 = js.at("c2");
  p.theta = j.at("theta").get<std::vector<double>>();
  if ((int)p.theta.size() != p.shape.total())
    throw std::runtime_error("checkpoint theta size inconsistent with shape");
  return p;
}

QNetworkParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_checkpoint(ss.str());
}

} // namespace gridform
