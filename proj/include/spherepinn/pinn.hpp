#pragma once

// Physics-informed sinusoidal MLP with Rowdy activations: two parallel
// networks map unit-sphere positions to per-frequency real/imaginary
// pressures and are trained with a data + Helmholtz-residual loss.
//
// The differentiation engine is purpose-built. The forward pass propagates,
// per input coordinate d, the channels (a, da/dx_d, d2a/dx_d^2) through each
// layer using sigma, sigma', sigma''; the input-space Laplacian is the sum
// of the second-derivative channels and is exact to machine precision.
// Parameter gradients run reverse accumulation over that extended pass
// (which requires sigma''' for the second-derivative channel adjoints).
//
// Coordinates are normalized: network inputs are positions divided by the
// sphere radius, so the Helmholtz residual uses the scaled wavenumber
// kappa = k * coord_scale and reads lap_u(p) + kappa^2 p.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spherepinn/common.hpp"
#include "spherepinn/linalg.hpp"
#include "spherepinn/sh_transform.hpp"

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && \
    defined(__AVX2__) && defined(__GLIBC__)
// Re-declare libm's sin/cos with the simd attribute so the vectorizer can
// emit libmvec calls in the hot activation loops (glibc only advertises the
// vector variants under -ffast-math, which is not acceptable globally).
// The trig-heavy loops below are written as separate sin and cos passes;
// a fused sin+cos expression would be folded into a scalar sincos call.
extern "C" {
double sin(double) __attribute__((__simd__("notinbranch")));
double cos(double) __attribute__((__simd__("notinbranch")));
}
#endif

namespace spherepinn::pinn {

using linalg::Mat;

// sigma(x) = sin(omega0 x) + sum_w n_w sin(alpha_w x)
struct RowdyActivationParams {
  double omega0 = 1.0;
  std::vector<double> n;      // scaling factors
  std::vector<double> alpha;  // frequency factors
};

// order: 0 -> sigma, 1 -> sigma', 2 -> sigma'', 3 -> sigma''' (internal).
inline double rowdy_eval(double x, const RowdyActivationParams& p, int order) {
  if (p.n.size() != p.alpha.size())
    throw std::invalid_argument("rowdy params n/alpha length mismatch");
  const double w0 = p.omega0;
  double acc;
  switch (order) {
    case 0: acc = std::sin(w0 * x); break;
    case 1: acc = w0 * std::cos(w0 * x); break;
    case 2: acc = -w0 * w0 * std::sin(w0 * x); break;
    case 3: acc = -w0 * w0 * w0 * std::cos(w0 * x); break;
    default: throw std::invalid_argument("rowdy_eval order must be 0..3");
  }
  for (size_t w = 0; w < p.n.size(); ++w) {
    const double a = p.alpha[w], nw = p.n[w];
    switch (order) {
      case 0: acc += nw * std::sin(a * x); break;
      case 1: acc += nw * a * std::cos(a * x); break;
      case 2: acc += -nw * a * a * std::sin(a * x); break;
      case 3: acc += -nw * a * a * a * std::cos(a * x); break;
    }
  }
  return acc;
}

struct MlpLayer {
  Mat weights;                 // out x in, row-major
  std::vector<double> biases;  // out
  bool sinusoidal = true;      // false: identity read-out
  RowdyActivationParams act;
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  int input_dim() const { return layers.front().weights.cols; }
  int output_dim() const { return layers.back().weights.rows; }
};

enum class CollocationMode { FixedFibonacci, ResampledUniform };

struct TrainConfig {
  long iterations = 10000;
  double lr0 = 1e-4;
  double lr_min = 0.0;
  double lambda_pde = 1e-12;
  int collocation_count = 512;
  CollocationMode collocation_mode = CollocationMode::FixedFibonacci;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden_layers = 4;  // sinusoidal hidden layers after the first layer
  int hidden_width = 512;
  double omega0_first = 1.0;
  double omega0_hidden = 5.0;
  int rowdy_terms = 6;  // W; 0 reduces to a plain sinusoidal network
  double rowdy_n_init = 1.0;
};

struct PinnModel {
  MlpParams real_net, imag_net;
  std::vector<double> wavenumbers;
  double radius = 0.042;
  double coord_scale = 0.042;   // physical meters per normalized input unit
  double pressure_scale = 1.0;  // physical pressure per unit network output
  TrainConfig config;           // provenance echo
};

struct ObservationSet {
  std::vector<std::array<double, 3>> positions;  // unit directions
  std::vector<cplx> pressures;                   // Q x K row-major
  std::vector<double> wavenumbers;
  double radius = 0.042;

  int count() const { return static_cast<int>(positions.size()); }
  int bins() const { return static_cast<int>(wavenumbers.size()); }
  const cplx& at(int q, int j) const {
    return pressures[static_cast<size_t>(q) * wavenumbers.size() + j];
  }
};

inline void validate_observations(const ObservationSet& obs) {
  if (obs.positions.empty() || obs.wavenumbers.empty())
    throw ConfigError("observation set needs Q >= 1 and K >= 1");
  if (obs.pressures.size() != obs.positions.size() * obs.wavenumbers.size())
    throw ShapeMismatchError("observation pressures are not Q x K");
  for (const auto& p : obs.positions) {
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (std::fabs(r - 1.0) > 1e-9)
      throw ConfigError("observation positions must be unit vectors");
  }
  for (const auto& v : obs.pressures)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ConfigError("non-finite observation pressure");
}

// Fixed near-uniform unit directions (golden-angle spiral).
inline std::vector<std::array<double, 3>> fibonacci_directions(int count) {
  std::vector<std::array<double, 3>> out(count);
  const double ga = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = std::fmod(ga * i, kTwoPi);
    out[i] = {r * std::cos(phi), r * std::sin(phi), z};
  }
  return out;
}

namespace detail {

// Portable deterministic uniform in [-1, 1).
inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

inline void check_unit(const std::array<double, 3>& p) {
  const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  if (std::fabs(r - 1.0) > 1e-9)
    throw std::domain_error("position must be a unit vector");
}

}  // namespace detail

// Sinusoidal-network initialization: first layer uniform in (-1/3, 1/3)
// (1/input_dim with input_dim = 3), deeper layers uniform in
// +-sqrt(6/fan_in)/omega0_hidden, biases zero, n_w = rowdy_n_init,
// alpha_w = w. Both nets are drawn from one seeded stream (real first).
inline PinnModel init_params(const TrainConfig& cfg,
                             const std::vector<double>& wavenumbers,
                             double radius) {
  if (wavenumbers.empty()) throw ConfigError("init_params needs K >= 1");
  if (cfg.hidden_width < 1 || cfg.hidden_layers < 0 || cfg.rowdy_terms < 0)
    throw ConfigError("invalid network architecture");
  const int K = static_cast<int>(wavenumbers.size());
  const int H = cfg.hidden_width;
  std::mt19937_64 rng(cfg.seed);

  auto make_rowdy = [&cfg](double omega0) {
    RowdyActivationParams act;
    act.omega0 = omega0;
    act.n.assign(cfg.rowdy_terms, cfg.rowdy_n_init);
    act.alpha.resize(cfg.rowdy_terms);
    for (int w = 0; w < cfg.rowdy_terms; ++w) act.alpha[w] = w + 1.0;
    return act;
  };

  auto make_net = [&]() {
    MlpParams net;
    auto add_layer = [&](int out, int in, double bound, bool sinusoidal,
                         double omega0) {
      MlpLayer l;
      l.weights = Mat(out, in);
      for (auto& w : l.weights.a) w = bound * detail::uniform_pm1(rng);
      l.biases.assign(out, 0.0);
      l.sinusoidal = sinusoidal;
      if (sinusoidal) l.act = make_rowdy(omega0);
      return l;
    };
    net.layers.push_back(add_layer(H, 3, 1.0 / 3.0, true, cfg.omega0_first));
    const double hidden_bound =
        std::sqrt(6.0 / H) / cfg.omega0_hidden;
    for (int l = 0; l < cfg.hidden_layers; ++l)
      net.layers.push_back(add_layer(H, H, hidden_bound, true, cfg.omega0_hidden));
    net.layers.push_back(add_layer(K, H, hidden_bound, false, 0.0));
    return net;
  };

  PinnModel model;
  model.real_net = make_net();
  model.imag_net = make_net();
  model.wavenumbers = wavenumbers;
  model.radius = radius;
  model.coord_scale = radius;
  model.pressure_scale = 1.0;
  model.config = cfg;
  return model;
}

namespace detail {

inline double vec_sin(double x) { return ::sin(x); }
inline double vec_cos(double x) { return ::cos(x); }

// Extended batch over P points with B channel blocks stacked row-wise:
// block 0 holds values, blocks 1..3 per-coordinate first derivatives,
// blocks 4..6 per-coordinate second derivatives (B is 1 or 7).
struct LayerCache {
  Mat pre;                      // (B*P) x out, pre-activation channels
  Mat act;                      // (B*P) x out, activated output channels
  Mat s0, s1, s2, s3;           // P x out: sigma..sigma''' at u
  std::vector<Mat> sin_a, cos_a;  // per rowdy term, P x out
};

struct NetCache {
  int points = 0, blocks = 1;
  Mat input;  // (B*P) x 3 input channels
  std::vector<LayerCache> layers;
  Mat adj_a, adj_b, adj_c;  // backward scratch
};

struct LayerGrads {
  Mat weights;
  std::vector<double> biases;
  std::vector<double> n, alpha;
};

struct NetGrads {
  std::vector<LayerGrads> layers;
};

inline NetGrads make_grads(const MlpParams& net) {
  NetGrads g;
  for (const auto& l : net.layers) {
    LayerGrads lg;
    lg.weights = Mat(l.weights.rows, l.weights.cols);
    lg.biases.assign(l.biases.size(), 0.0);
    if (l.sinusoidal) {
      lg.n.assign(l.act.n.size(), 0.0);
      lg.alpha.assign(l.act.alpha.size(), 0.0);
    }
    g.layers.push_back(std::move(lg));
  }
  return g;
}

inline void zero_grads(NetGrads* g) {
  for (auto& l : g->layers) {
    l.weights.zero();
    std::fill(l.biases.begin(), l.biases.end(), 0.0);
    std::fill(l.n.begin(), l.n.end(), 0.0);
    std::fill(l.alpha.begin(), l.alpha.end(), 0.0);
  }
}

// Forward pass over P points. positions: P x 3. When blocks == 7 the
// derivative channels are propagated; when keep_trig is set the per-term
// sin/cos caches needed by the backward pass are stored.
inline void forward_net(const MlpParams& net, const Mat& positions, int blocks,
                        bool keep_trig, NetCache* cache) {
  const int P = positions.rows;
  const int BP = blocks * P;
  cache->points = P;
  cache->blocks = blocks;
  cache->layers.resize(net.layers.size());

  linalg::ensure_shape(&cache->input, BP, 3);
  cache->input.zero();
  for (int p = 0; p < P; ++p)
    for (int c = 0; c < 3; ++c) cache->input.at(p, c) = positions.at(p, c);
  if (blocks == 7)
    for (int d = 0; d < 3; ++d)
      for (int p = 0; p < P; ++p) cache->input.at((1 + d) * P + p, d) = 1.0;
  // second-derivative input channels are zero

  const Mat* cur = &cache->input;
  for (size_t li = 0; li < net.layers.size(); ++li) {
    const MlpLayer& layer = net.layers[li];
    LayerCache& lc = cache->layers[li];
    linalg::matmul_abt(*cur, layer.weights, &lc.pre);
    const int out = layer.weights.rows;
    for (int p = 0; p < P; ++p) {
      double* row = lc.pre.row(p);
      for (int o = 0; o < out; ++o) row[o] += layer.biases[o];
    }
    if (!layer.sinusoidal) {
      lc.act = lc.pre;
      cur = &lc.act;
      continue;
    }

    const auto& act = layer.act;
    const int W = static_cast<int>(act.n.size());
    linalg::ensure_shape(&lc.s0, P, out);
    linalg::ensure_shape(&lc.s1, P, out);
    linalg::ensure_shape(&lc.s2, P, out);
    const bool want_s3 = blocks == 7 && keep_trig;
    if (want_s3)
      linalg::ensure_shape(&lc.s3, P, out);
    else
      lc.s3 = Mat();
    if (keep_trig) {
      lc.sin_a.resize(W);
      lc.cos_a.resize(W);
      for (int w = 0; w < W; ++w) {
        linalg::ensure_shape(&lc.sin_a[w], P, out);
        linalg::ensure_shape(&lc.cos_a[w], P, out);
      }
    }
    // value rows are the contiguous prefix of lc.pre; operate on flat spans
    // in branch-free loops (vectorizable trig)
    const int n_val = P * out;
    const double w0 = act.omega0;
    linalg::parallel_for(n_val, static_cast<size_t>(n_val) * (W + 1) * 12,
                         [&](int i0, int i1) {
      const double* __restrict__ u = lc.pre.a.data();
      double* __restrict__ v0 = lc.s0.a.data();
      double* __restrict__ v1 = lc.s1.a.data();
      double* __restrict__ v2 = lc.s2.a.data();
      double* __restrict__ v3 = want_s3 ? lc.s3.a.data() : nullptr;
      // sin and cos run in separate passes so each loop vectorizes
      for (int i = i0; i < i1; ++i) {
        const double su = vec_sin(w0 * u[i]);
        v0[i] = su;
        v2[i] = -w0 * w0 * su;
      }
      if (v3) {
        for (int i = i0; i < i1; ++i) {
          const double cu = vec_cos(w0 * u[i]);
          v1[i] = w0 * cu;
          v3[i] = -w0 * w0 * w0 * cu;
        }
      } else {
        for (int i = i0; i < i1; ++i) v1[i] = w0 * vec_cos(w0 * u[i]);
      }
      for (int w = 0; w < W; ++w) {
        const double a = act.alpha[w], nw = act.n[w];
        if (keep_trig) {
          double* __restrict__ sa = lc.sin_a[w].a.data();
          double* __restrict__ ca = lc.cos_a[w].a.data();
          for (int i = i0; i < i1; ++i) sa[i] = vec_sin(a * u[i]);
          for (int i = i0; i < i1; ++i) ca[i] = vec_cos(a * u[i]);
          for (int i = i0; i < i1; ++i) {
            v0[i] += nw * sa[i];
            v1[i] += nw * a * ca[i];
            v2[i] += -nw * a * a * sa[i];
          }
          if (v3)
            for (int i = i0; i < i1; ++i) v3[i] += -nw * a * a * a * ca[i];
        } else {
          for (int i = i0; i < i1; ++i) {
            const double sv = vec_sin(a * u[i]);
            v0[i] += nw * sv;
            v2[i] += -nw * a * a * sv;
          }
          for (int i = i0; i < i1; ++i) v1[i] += nw * a * vec_cos(a * u[i]);
        }
      }
    });

    linalg::ensure_shape(&lc.act, BP, out);
    for (int p = 0; p < P; ++p) {
      const double* v0 = lc.s0.row(p);
      double* arow = lc.act.row(p);
      for (int o = 0; o < out; ++o) arow[o] = v0[o];
    }
    if (blocks == 7) {
      for (int d = 0; d < 3; ++d) {
        const int gb = (1 + d) * P, hb = (4 + d) * P;
        linalg::parallel_for(P, static_cast<size_t>(P) * out * 6,
                             [&](int p0, int p1) {
          for (int p = p0; p < p1; ++p) {
            const double* s1 = lc.s1.row(p);
            const double* s2 = lc.s2.row(p);
            const double* du = lc.pre.row(gb + p);
            const double* d2u = lc.pre.row(hb + p);
            double* g = lc.act.row(gb + p);
            double* h = lc.act.row(hb + p);
            for (int o = 0; o < out; ++o) {
              g[o] = s1[o] * du[o];
              h[o] = s2[o] * du[o] * du[o] + s1[o] * d2u[o];
            }
          }
        });
      }
    }
    cur = &lc.act;
  }
}

inline const Mat& net_output(const NetCache& cache) {
  return cache.layers.back().act;
}

// Reverse accumulation through the extended forward pass. adj holds the
// adjoints of the output channels ((B*P) x K) and is consumed.
inline void backward_net(const MlpParams& net, NetCache& cache,
                         const Mat& adj_top, NetGrads* grads) {
  const int P = cache.points;
  const int B = cache.blocks;
  linalg::ensure_shape(&cache.adj_a, adj_top.rows, adj_top.cols);
  cache.adj_a.a = adj_top.a;
  // buffer roles: bufs[0] incoming adjoint, bufs[1] activation scratch,
  // bufs[2] matmul output; all three stay distinct
  Mat* bufs[3] = {&cache.adj_a, &cache.adj_b, &cache.adj_c};
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const MlpLayer& layer = net.layers[li];
    LayerCache& lc = cache.layers[li];
    const int out = layer.weights.rows;

    Mat* adj_pre_ptr;
    if (!layer.sinusoidal) {
      adj_pre_ptr = bufs[0];
    } else {
      linalg::ensure_shape(bufs[1], B * P, out);
      Mat& adj_pre = *bufs[1];
      const Mat& adj = *bufs[0];
      const auto& act = layer.act;
      const int W = static_cast<int>(act.n.size());
      // value-channel adjoint: through sigma, plus sigma'/sigma'' terms from
      // the derivative channels
      linalg::parallel_for(P, static_cast<size_t>(P) * out * B * 6,
                           [&](int p0, int p1) {
        for (int p = p0; p < p1; ++p) {
          const double* s1 = lc.s1.row(p);
          const double* s2 = lc.s2.row(p);
          double* apv = adj_pre.row(p);
          const double* av = adj.row(p);
          for (int o = 0; o < out; ++o) apv[o] = av[o] * s1[o];
          if (B == 7) {
            const double* s3 = lc.s3.row(p);
            for (int d = 0; d < 3; ++d) {
              const int gb = (1 + d) * P, hb = (4 + d) * P;
              const double* ag = adj.row(gb + p);
              const double* ah = adj.row(hb + p);
              const double* du = lc.pre.row(gb + p);
              const double* d2u = lc.pre.row(hb + p);
              double* apg = adj_pre.row(gb + p);
              double* aph = adj_pre.row(hb + p);
              for (int o = 0; o < out; ++o) {
                apv[o] += ag[o] * s2[o] * du[o] +
                          ah[o] * (s3[o] * du[o] * du[o] + s2[o] * d2u[o]);
                apg[o] = ag[o] * s1[o] + ah[o] * 2.0 * s2[o] * du[o];
                aph[o] = ah[o] * s1[o];
              }
            }
          }
        }
      });

      adj_pre_ptr = bufs[1];
      // trainable activation parameters
      if (W > 0) {
        auto& lg = grads->layers[li];
        linalg::parallel_for(W, static_cast<size_t>(W) * P * out * 10,
                             [&](int w0, int w1) {
          for (int w = w0; w < w1; ++w) {
            const double a = act.alpha[w], nw = act.n[w];
            double acc_n = 0.0, acc_a = 0.0;
            for (int p = 0; p < P; ++p) {
              const double* u = lc.pre.row(p);
              const double* sa = lc.sin_a[w].row(p);
              const double* ca = lc.cos_a[w].row(p);
              const double* av = adj.row(p);
              for (int o = 0; o < out; ++o) {
                acc_n += av[o] * sa[o];
                acc_a += av[o] * nw * u[o] * ca[o];
              }
              if (B == 7) {
                for (int d = 0; d < 3; ++d) {
                  const int gb = (1 + d) * P, hb = (4 + d) * P;
                  const double* ag = adj.row(gb + p);
                  const double* ah = adj.row(hb + p);
                  const double* du = lc.pre.row(gb + p);
                  const double* d2u = lc.pre.row(hb + p);
                  for (int o = 0; o < out; ++o) {
                    const double ds1_dn = a * ca[o];
                    const double ds2_dn = -a * a * sa[o];
                    const double ds1_da = nw * (ca[o] - a * u[o] * sa[o]);
                    const double ds2_da =
                        -nw * a * (2.0 * sa[o] + a * u[o] * ca[o]);
                    acc_n += ag[o] * ds1_dn * du[o] +
                             ah[o] * (ds2_dn * du[o] * du[o] + ds1_dn * d2u[o]);
                    acc_a += ag[o] * ds1_da * du[o] +
                             ah[o] * (ds2_da * du[o] * du[o] + ds1_da * d2u[o]);
                  }
                }
              }
            }
            lg.n[w] += acc_n;
            lg.alpha[w] += acc_a;
          }
        });
      }
    }

    // linear part: weight/bias gradients and input adjoint
    const Mat& in = li == 0 ? cache.input : cache.layers[li - 1].act;
    linalg::accum_atb(*adj_pre_ptr, in, &grads->layers[li].weights);
    for (int p = 0; p < P; ++p) {
      const double* row = adj_pre_ptr->row(p);
      for (int o = 0; o < out; ++o) grads->layers[li].biases[o] += row[o];
    }
    if (li > 0) {
      linalg::matmul_ab(*adj_pre_ptr, layer.weights, bufs[2]);
      std::swap(bufs[0], bufs[2]);  // bufs[1], bufs[2] free again
    }
  }
}

}  // namespace detail

struct LossBreakdown {
  double total = 0.0;
  double data = 0.0;
  double pde = 0.0;
};

struct PinnGrads {
  detail::NetGrads real_net, imag_net;
};

namespace detail {

struct LossWork {
  NetCache data_re, data_im, pde_re, pde_im;
  Mat adj, res_re, res_im;
};

// Shared loss/gradient core. Targets are Q x K (real/imag); out_scale
// multiplies the raw network output before comparison (the model's
// pressure_scale for physical-space evaluation, 1 for scaled training).
inline LossBreakdown loss_core(const PinnModel& model, const Mat& obs_pos,
                               const Mat& t_re, const Mat& t_im,
                               const Mat& colloc, double lambda,
                               double out_scale, PinnGrads* grads,
                               LossWork* work) {
  const int Q = obs_pos.rows;
  const int S = colloc.rows;
  const int K = static_cast<int>(model.wavenumbers.size());
  const bool want_grads = grads != nullptr;
  const bool want_pde = S > 0 && lambda != 0.0;

  if (want_grads) {
    zero_grads(&grads->real_net);
    zero_grads(&grads->imag_net);
  }

  LossBreakdown out;

  // data term
  forward_net(model.real_net, obs_pos, 1, want_grads, &work->data_re);
  forward_net(model.imag_net, obs_pos, 1, want_grads, &work->data_im);
  const Mat& vre = net_output(work->data_re);
  const Mat& vim = net_output(work->data_im);
  const double data_norm = 1.0 / (static_cast<double>(Q) * K);
  double data_acc = 0.0;
  for (int q = 0; q < Q; ++q)
    for (int j = 0; j < K; ++j) {
      const double er = out_scale * vre.at(q, j) - t_re.at(q, j);
      const double ei = out_scale * vim.at(q, j) - t_im.at(q, j);
      data_acc += er * er + ei * ei;
    }
  out.data = data_acc * data_norm;

  if (want_grads) {
    Mat& adj = work->adj;
    linalg::ensure_shape(&adj, Q, K);
    for (int q = 0; q < Q; ++q)
      for (int j = 0; j < K; ++j)
        adj.at(q, j) = 2.0 * data_norm * out_scale *
                       (out_scale * vre.at(q, j) - t_re.at(q, j));
    backward_net(model.real_net, work->data_re, adj, &grads->real_net);
    for (int q = 0; q < Q; ++q)
      for (int j = 0; j < K; ++j)
        adj.at(q, j) = 2.0 * data_norm * out_scale *
                       (out_scale * vim.at(q, j) - t_im.at(q, j));
    backward_net(model.imag_net, work->data_im, adj, &grads->imag_net);
  }

  // PDE term: |lap_u p + (k * coord_scale)^2 p|^2 over collocation points
  if (want_pde || (S > 0 && !want_grads)) {
    forward_net(model.real_net, colloc, 7, want_grads && want_pde,
                &work->pde_re);
    forward_net(model.imag_net, colloc, 7, want_grads && want_pde,
                &work->pde_im);
    const Mat& ore = net_output(work->pde_re);
    const Mat& oim = net_output(work->pde_im);
    std::vector<double> kappa2(K);
    for (int j = 0; j < K; ++j) {
      const double kap = model.wavenumbers[j] * model.coord_scale;
      kappa2[j] = kap * kap;
    }
    const double pde_norm = 1.0 / (static_cast<double>(S) * K);
    double pde_acc = 0.0;
    Mat& res_re = work->res_re;
    Mat& res_im = work->res_im;
    linalg::ensure_shape(&res_re, S, K);
    linalg::ensure_shape(&res_im, S, K);
    for (int s = 0; s < S; ++s)
      for (int j = 0; j < K; ++j) {
        double lap_re = 0.0, lap_im = 0.0;
        for (int d = 0; d < 3; ++d) {
          lap_re += ore.at((4 + d) * S + s, j);
          lap_im += oim.at((4 + d) * S + s, j);
        }
        const double rr = out_scale * (lap_re + kappa2[j] * ore.at(s, j));
        const double ri = out_scale * (lap_im + kappa2[j] * oim.at(s, j));
        res_re.at(s, j) = rr;
        res_im.at(s, j) = ri;
        pde_acc += rr * rr + ri * ri;
      }
    out.pde = pde_acc * pde_norm;

    if (want_grads && want_pde) {
      auto run = [&](const MlpParams& net, NetCache& cache, const Mat& res,
                     NetGrads* g) {
        Mat& adj = work->adj;
        linalg::ensure_shape(&adj, 7 * S, K);
        adj.zero();
        for (int s = 0; s < S; ++s)
          for (int j = 0; j < K; ++j) {
            const double a =
                2.0 * lambda * pde_norm * out_scale * res.at(s, j);
            adj.at(s, j) = a * kappa2[j];
            for (int d = 0; d < 3; ++d) adj.at((4 + d) * S + s, j) = a;
          }
        backward_net(net, cache, adj, g);
      };
      run(model.real_net, work->pde_re, res_re, &grads->real_net);
      run(model.imag_net, work->pde_im, res_im, &grads->imag_net);
    }
  }

  out.total = out.data + lambda * out.pde;
  return out;
}

inline Mat positions_matrix(const std::vector<std::array<double, 3>>& pos) {
  Mat m(static_cast<int>(pos.size()), 3);
  for (size_t i = 0; i < pos.size(); ++i)
    for (int c = 0; c < 3; ++c) m.at(static_cast<int>(i), c) = pos[i][c];
  return m;
}

// Enumerates parameter storage in the fixed flattening order
// (per net: per layer: weights row-major, biases, n, alpha).
template <typename F>
inline void for_each_param(MlpParams& net, F&& f) {
  for (auto& l : net.layers) {
    for (auto& w : l.weights.a) f(w);
    for (auto& b : l.biases) f(b);
    if (l.sinusoidal) {
      for (auto& n : l.act.n) f(n);
      for (auto& a : l.act.alpha) f(a);
    }
  }
}

template <typename F>
inline void for_each_grad(NetGrads& g, F&& f) {
  for (auto& l : g.layers) {
    for (auto& w : l.weights.a) f(w);
    for (auto& b : l.biases) f(b);
    for (auto& n : l.n) f(n);
    for (auto& a : l.alpha) f(a);
  }
}

}  // namespace detail

// p_hat at a unit-sphere position: (real K-vector, imag K-vector), physical
// scale (pressure_scale applied).
inline std::pair<std::vector<double>, std::vector<double>> forward(
    const PinnModel& model, const std::array<double, 3>& position) {
  detail::check_unit(position);
  detail::NetCache cr, ci;
  Mat pos(1, 3);
  for (int c = 0; c < 3; ++c) pos.at(0, c) = position[c];
  detail::forward_net(model.real_net, pos, 1, false, &cr);
  detail::forward_net(model.imag_net, pos, 1, false, &ci);
  const int K = static_cast<int>(model.wavenumbers.size());
  std::vector<double> re(K), im(K);
  for (int j = 0; j < K; ++j) {
    re[j] = model.pressure_scale * detail::net_output(cr).at(0, j);
    im[j] = model.pressure_scale * detail::net_output(ci).at(0, j);
  }
  return {re, im};
}

// Value and Laplacian (w.r.t. the normalized input coordinates) at a
// unit-sphere position, exact to machine precision.
inline void laplacian(const PinnModel& model,
                      const std::array<double, 3>& position,
                      std::vector<cplx>* value, std::vector<cplx>* lap) {
  detail::check_unit(position);
  detail::NetCache cr, ci;
  Mat pos(1, 3);
  for (int c = 0; c < 3; ++c) pos.at(0, c) = position[c];
  detail::forward_net(model.real_net, pos, 7, false, &cr);
  detail::forward_net(model.imag_net, pos, 7, false, &ci);
  const int K = static_cast<int>(model.wavenumbers.size());
  value->resize(K);
  lap->resize(K);
  const Mat& ore = detail::net_output(cr);
  const Mat& oim = detail::net_output(ci);
  for (int j = 0; j < K; ++j) {
    (*value)[j] = model.pressure_scale * cplx(ore.at(0, j), oim.at(0, j));
    double lr = 0.0, li = 0.0;
    for (int d = 0; d < 3; ++d) {
      lr += ore.at(4 + d, j);
      li += oim.at(4 + d, j);
    }
    (*lap)[j] = model.pressure_scale * cplx(lr, li);
  }
}

// Loss over physical-space observations.
inline LossBreakdown loss(const PinnModel& model, const ObservationSet& obs,
                          const std::vector<std::array<double, 3>>& colloc,
                          double lambda_pde) {
  validate_observations(obs);
  if (obs.wavenumbers.size() != model.wavenumbers.size())
    throw ShapeMismatchError("observation bins do not match model bins");
  const int Q = obs.count(), K = obs.bins();
  Mat t_re(Q, K), t_im(Q, K);
  for (int q = 0; q < Q; ++q)
    for (int j = 0; j < K; ++j) {
      t_re.at(q, j) = obs.at(q, j).real();
      t_im.at(q, j) = obs.at(q, j).imag();
    }
  detail::LossWork work;
  const Mat pos = detail::positions_matrix(obs.positions);
  const Mat col = detail::positions_matrix(colloc);
  // evaluate the PDE term even when lambda is 0 (reported unweighted)
  LossBreakdown b = detail::loss_core(model, pos, t_re, t_im, col, lambda_pde,
                                      model.pressure_scale, nullptr, &work);
  return b;
}

// Loss gradient for every parameter (weights, biases, n_w, alpha_w).
inline LossBreakdown loss_grad(const PinnModel& model,
                               const ObservationSet& obs,
                               const std::vector<std::array<double, 3>>& colloc,
                               double lambda_pde, PinnGrads* grads) {
  validate_observations(obs);
  const int Q = obs.count(), K = obs.bins();
  Mat t_re(Q, K), t_im(Q, K);
  for (int q = 0; q < Q; ++q)
    for (int j = 0; j < K; ++j) {
      t_re.at(q, j) = obs.at(q, j).real();
      t_im.at(q, j) = obs.at(q, j).imag();
    }
  grads->real_net = detail::make_grads(model.real_net);
  grads->imag_net = detail::make_grads(model.imag_net);
  detail::LossWork work;
  const Mat pos = detail::positions_matrix(obs.positions);
  const Mat col = detail::positions_matrix(colloc);
  return detail::loss_core(model, pos, t_re, t_im, col, lambda_pde,
                           model.pressure_scale, grads, &work);
}

// Cosine annealing: lr(0) = lr0, lr(iterations) = lr_min.
inline double cosine_lr(long t, const TrainConfig& cfg) {
  if (t < 0 || t > cfg.iterations)
    throw std::domain_error("cosine_lr: t outside [0, iterations]");
  if (cfg.iterations == 0) return cfg.lr0;
  const double frac = static_cast<double>(t) / static_cast<double>(cfg.iterations);
  return cfg.lr_min +
         0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(kPi * frac));
}

struct TraceRow {
  long iteration;
  double total, data, pde, lr;
};

struct TrainResult {
  PinnModel model;
  std::vector<TraceRow> trace;
};

// Full-batch Adam over all parameters (weights, biases, n_w, alpha_w).
// Observations are normalized to max |p| = 1 before training; the scale is
// restored through model.pressure_scale. Deterministic given seed and
// thread count. Throws NonFiniteLossError if the loss leaves the reals.
inline TrainResult train(const ObservationSet& obs, const TrainConfig& cfg) {
  validate_observations(obs);
  if (cfg.iterations < 0 || cfg.collocation_count < 1)
    throw ConfigError("train: iterations must be >= 0 and S >= 1");
  const int Q = obs.count(), K = obs.bins();

  double scale = 0.0;
  for (const auto& p : obs.pressures) scale = std::max(scale, std::abs(p));
  if (scale == 0.0) scale = 1.0;

  Mat t_re(Q, K), t_im(Q, K);
  for (int q = 0; q < Q; ++q)
    for (int j = 0; j < K; ++j) {
      t_re.at(q, j) = obs.at(q, j).real() / scale;
      t_im.at(q, j) = obs.at(q, j).imag() / scale;
    }

  TrainResult result;
  result.model = init_params(cfg, obs.wavenumbers, obs.radius);
  PinnModel& model = result.model;

  const Mat pos = detail::positions_matrix(obs.positions);
  Mat colloc =
      detail::positions_matrix(fibonacci_directions(cfg.collocation_count));
  std::mt19937_64 colloc_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  auto resample_colloc = [&]() {
    for (int s = 0; s < colloc.rows; ++s) {
      const double z = detail::uniform_pm1(colloc_rng);
      const double phi = kPi * (detail::uniform_pm1(colloc_rng) + 1.0);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      colloc.at(s, 0) = r * std::cos(phi);
      colloc.at(s, 1) = r * std::sin(phi);
      colloc.at(s, 2) = z;
    }
  };

  PinnGrads grads;
  grads.real_net = detail::make_grads(model.real_net);
  grads.imag_net = detail::make_grads(model.imag_net);

  // parameter/gradient pointer tables in the fixed flattening order
  std::vector<double*> params, gptrs;
  detail::for_each_param(model.real_net, [&](double& v) { params.push_back(&v); });
  detail::for_each_param(model.imag_net, [&](double& v) { params.push_back(&v); });
  detail::for_each_grad(grads.real_net, [&](double& v) { gptrs.push_back(&v); });
  detail::for_each_grad(grads.imag_net, [&](double& v) { gptrs.push_back(&v); });
  if (params.size() != gptrs.size())
    throw std::logic_error("parameter/gradient layout mismatch");

  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  detail::LossWork work;
  result.trace.reserve(cfg.iterations);

  double b1t = 1.0, b2t = 1.0;
  for (long t = 0; t < cfg.iterations; ++t) {
    if (cfg.collocation_mode == CollocationMode::ResampledUniform)
      resample_colloc();
    const LossBreakdown b =
        detail::loss_core(model, pos, t_re, t_im, colloc, cfg.lambda_pde, 1.0,
                          &grads, &work);
    if (!std::isfinite(b.total)) throw NonFiniteLossError(t);
    const double lr = cosine_lr(t, cfg);
    result.trace.push_back({t, b.total, b.data, b.pde, lr});

    b1t *= cfg.adam_beta1;
    b2t *= cfg.adam_beta2;
    const double corr1 = 1.0 - b1t, corr2 = 1.0 - b2t;
    for (size_t i = 0; i < params.size(); ++i) {
      const double g = *gptrs[i];
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
      const double mhat = m[i] / corr1;
      const double vhat = v[i] / corr2;
      *params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
    if (cfg.iterations >= 10 && t % std::max(1l, cfg.iterations / 10) == 0)
      log_debug("train iter " + std::to_string(t) + " loss " +
                std::to_string(b.total));
  }
  model.pressure_scale = scale;
  return result;
}

// Upsampled complex field at target directions, pressure_scale undone.
inline sma::ComplexPressureField predict(
    const PinnModel& model, const std::vector<sma::CapsuleDir>& targets) {
  sma::ComplexPressureField field;
  field.geometry.radius = model.radius;
  field.geometry.enclosure = specfun::Enclosure::Open;
  field.geometry.capsules = targets;
  const int T = static_cast<int>(targets.size());
  field.geometry.weights.assign(T, T > 0 ? kFourPi / T : 0.0);
  field.wavenumbers = model.wavenumbers;
  const int K = static_cast<int>(model.wavenumbers.size());
  field.pressures.assign(static_cast<size_t>(T) * K, cplx{});
  if (T == 0) return field;

  Mat pos(T, 3);
  for (int t = 0; t < T; ++t) {
    const auto u = sma::unit_vector(targets[t].theta, targets[t].phi);
    for (int c = 0; c < 3; ++c) pos.at(t, c) = u[c];
  }
  detail::NetCache cr, ci;
  detail::forward_net(model.real_net, pos, 1, false, &cr);
  detail::forward_net(model.imag_net, pos, 1, false, &ci);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < K; ++j)
      field.at(t, j) = model.pressure_scale *
                       cplx(detail::net_output(cr).at(t, j),
                            detail::net_output(ci).at(t, j));
  return field;
}

}  // namespace spherepinn::pinn
