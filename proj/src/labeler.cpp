#include "chordbench/labeler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "chordbench/error.h"
#include "chordbench/rng.h"

namespace chordbench {

namespace {

constexpr double kLayerNormEpsilon = 1e-5;

struct LayerIndex {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln1_g, ln1_b;
  std::size_t w1, b1, w2, b2;
  std::size_t ln2_g, ln2_b;
};

struct ParamIndex {
  std::size_t w_in, b_in;
  std::vector<LayerIndex> layers;
  std::size_t w_out, b_out;
  std::size_t total;
};

ParamIndex build_index(const LabelerConfig& c, std::vector<TensorSlot>* slots) {
  std::size_t next = 0;
  auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    if (slots) slots->push_back({name, rows, cols, next});
    const std::size_t at = next;
    next += rows * cols;
    return at;
  };
  const std::size_t d = c.model_dim;
  ParamIndex idx{};
  idx.w_in = add("input.weight", c.input_dim, d);
  idx.b_in = add("input.bias", 1, d);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.wq = add(p + "attn.query.weight", d, d);
    li.bq = add(p + "attn.query.bias", 1, d);
    li.wk = add(p + "attn.key.weight", d, d);
    li.bk = add(p + "attn.key.bias", 1, d);
    li.wv = add(p + "attn.value.weight", d, d);
    li.bv = add(p + "attn.value.bias", 1, d);
    li.wo = add(p + "attn.output.weight", d, d);
    li.bo = add(p + "attn.output.bias", 1, d);
    li.ln1_g = add(p + "norm1.gain", 1, d);
    li.ln1_b = add(p + "norm1.bias", 1, d);
    li.w1 = add(p + "ff.hidden.weight", d, c.ff_dim);
    li.b1 = add(p + "ff.hidden.bias", 1, c.ff_dim);
    li.w2 = add(p + "ff.output.weight", c.ff_dim, d);
    li.b2 = add(p + "ff.output.bias", 1, d);
    li.ln2_g = add(p + "norm2.gain", 1, d);
    li.ln2_b = add(p + "norm2.bias", 1, d);
    idx.layers.push_back(li);
  }
  idx.w_out = add("classifier.weight", d, c.n_classes);
  idx.b_out = add("classifier.bias", 1, c.n_classes);
  idx.total = next;
  return idx;
}

// Dense kernels over row-major buffers ------------------------------------------

// c (n x m) = a (n x k) * b (k x m) + bias
template <typename T>
void matmul_bias(const T* a, const T* b, const T* bias, T* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    T* ci = c + i * m;
    for (std::size_t j = 0; j < m; ++j) ci[j] = bias ? bias[j] : T(0);
    const T* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// w (k x m) += a^T (k x n) * d (n x m);  bias_grad += column sums of d
template <typename T>
void accumulate_weight_grad(const T* a, const T* d, T* w, T* bias_grad, std::size_t n, std::size_t k,
                            std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* ai = a + i * k;
    const T* di = d + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      T* wp = w + p * m;
      for (std::size_t j = 0; j < m; ++j) wp[j] += av * di[j];
    }
    if (bias_grad) {
      for (std::size_t j = 0; j < m; ++j) bias_grad[j] += di[j];
    }
  }
}

// out (n x k) (+)= d (n x m) * b^T, with b (k x m)
template <typename T>
void matmul_bt(const T* d, const T* b, T* out, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* di = d + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T* bp = b + p * m;
      T s = 0;
      for (std::size_t j = 0; j < m; ++j) s += di[j] * bp[j];
      out[i * k + p] = accumulate ? out[i * k + p] + s : s;
    }
  }
}

template <typename T>
T gelu(T x) {
  const T c = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <typename T>
T gelu_derivative(T x) {
  const T c = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T t = std::tanh(c * (x + T(0.044715) * x * x * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3 * 0.044715) * x * x);
}

// Per-layer activations kept for the backward pass.
template <typename T>
struct LayerCache {
  std::vector<T> x_in, q, k, v, attn, o, xhat1, rstd1, h1, z1, g, xhat2, rstd2, out;
};

template <typename T>
struct ForwardCache {
  std::size_t n = 0;
  std::size_t valid = 0;
  std::vector<T> input;
  std::vector<T> h0;
  std::vector<LayerCache<T>> layers;
  std::vector<T> logits;
};

template <typename T>
void layer_norm(const T* x, const T* gain, const T* bias, T* xhat, T* rstd, T* y, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x + i * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<T>(d);
    const T r = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEpsilon));
    rstd[i] = r;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (xi[j] - mean) * r;
      y[i * d + j] = xhat[i * d + j] * gain[j] + bias[j];
    }
  }
}

// Given dy, accumulates gain/bias grads and writes dx.
template <typename T>
void layer_norm_backward(const T* dy, const T* xhat, const T* rstd, const T* gain, T* dgain, T* dbias, T* dx,
                         std::size_t n, std::size_t d) {
  std::vector<T> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* dyi = dy + i * d;
    const T* xi = xhat + i * d;
    T mean_dxhat = 0;
    T mean_dxhat_xhat = 0;
    for (std::size_t j = 0; j < d; ++j) {
      dgain[j] += dyi[j] * xi[j];
      dbias[j] += dyi[j];
      dxhat[j] = dyi[j] * gain[j];
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xi[j];
    }
    mean_dxhat /= static_cast<T>(d);
    mean_dxhat_xhat /= static_cast<T>(d);
    for (std::size_t j = 0; j < d; ++j) {
      dx[i * d + j] = rstd[i] * (dxhat[j] - mean_dxhat - xi[j] * mean_dxhat_xhat);
    }
  }
}

template <typename T>
ForwardCache<T> forward_cached(const LabelerParams<T>& params, const ParamIndex& idx, const FeatureMatrix& input,
                               std::size_t valid_frames) {
  const LabelerConfig& c = params.config;
  if (input.bins != c.input_dim) {
    throw InvalidArgument("labeler: input has " + std::to_string(input.bins) + " dims, model expects " +
                          std::to_string(c.input_dim));
  }
  if (input.frames == 0) throw InvalidArgument("labeler: empty input sequence");
  if (valid_frames == 0 || valid_frames > input.frames) throw InvalidArgument("labeler: bad valid frame count");

  const T* w = params.values.data();
  const std::size_t n = input.frames;
  const std::size_t d = c.model_dim;
  const std::size_t heads = c.n_heads;
  const std::size_t dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  ForwardCache<T> cache;
  cache.n = n;
  cache.valid = valid_frames;
  cache.input.assign(input.values.begin(), input.values.end());
  cache.h0.resize(n * d);
  matmul_bias(cache.input.data(), w + idx.w_in, w + idx.b_in, cache.h0.data(), n, c.input_dim, d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; j += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
      cache.h0[t * d + j] += static_cast<T>(std::sin(t * freq));
      if (j + 1 < d) cache.h0[t * d + j + 1] += static_cast<T>(std::cos(t * freq));
    }
  }

  const std::vector<T>* x = &cache.h0;
  cache.layers.resize(c.n_layers);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const LayerIndex& li = idx.layers[l];
    LayerCache<T>& lc = cache.layers[l];
    lc.x_in = *x;
    lc.q.resize(n * d);
    lc.k.resize(n * d);
    lc.v.resize(n * d);
    matmul_bias(lc.x_in.data(), w + li.wq, w + li.bq, lc.q.data(), n, d, d);
    matmul_bias(lc.x_in.data(), w + li.wk, w + li.bk, lc.k.data(), n, d, d);
    matmul_bias(lc.x_in.data(), w + li.wv, w + li.bv, lc.v.data(), n, d, d);

    lc.attn.assign(heads * n * n, T(0));
    lc.o.assign(n * d, T(0));
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        T* a = lc.attn.data() + (h * n + i) * n;
        T max_s = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < valid_frames; ++j) {
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += lc.q[i * d + col + e] * lc.k[j * d + col + e];
          a[j] = s * scale;
          max_s = std::max(max_s, a[j]);
        }
        T sum = 0;
        for (std::size_t j = 0; j < valid_frames; ++j) {
          a[j] = std::exp(a[j] - max_s);
          sum += a[j];
        }
        for (std::size_t j = 0; j < valid_frames; ++j) a[j] /= sum;
        for (std::size_t j = 0; j < valid_frames; ++j) {
          const T aj = a[j];
          for (std::size_t e = 0; e < dh; ++e) lc.o[i * d + col + e] += aj * lc.v[j * d + col + e];
        }
      }
    }

    std::vector<T> r1(n * d);
    matmul_bias(lc.o.data(), w + li.wo, w + li.bo, r1.data(), n, d, d);
    for (std::size_t i = 0; i < n * d; ++i) r1[i] += lc.x_in[i];
    lc.xhat1.resize(n * d);
    lc.rstd1.resize(n);
    lc.h1.resize(n * d);
    layer_norm(r1.data(), w + li.ln1_g, w + li.ln1_b, lc.xhat1.data(), lc.rstd1.data(), lc.h1.data(), n, d);

    lc.z1.resize(n * c.ff_dim);
    lc.g.resize(n * c.ff_dim);
    matmul_bias(lc.h1.data(), w + li.w1, w + li.b1, lc.z1.data(), n, d, c.ff_dim);
    for (std::size_t i = 0; i < lc.z1.size(); ++i) lc.g[i] = gelu(lc.z1[i]);
    std::vector<T> r2(n * d);
    matmul_bias(lc.g.data(), w + li.w2, w + li.b2, r2.data(), n, c.ff_dim, d);
    for (std::size_t i = 0; i < n * d; ++i) r2[i] += lc.h1[i];
    lc.xhat2.resize(n * d);
    lc.rstd2.resize(n);
    lc.out.resize(n * d);
    layer_norm(r2.data(), w + li.ln2_g, w + li.ln2_b, lc.xhat2.data(), lc.rstd2.data(), lc.out.data(), n, d);
    x = &lc.out;
  }

  cache.logits.resize(n * c.n_classes);
  matmul_bias(x->data(), w + idx.w_out, w + idx.b_out, cache.logits.data(), n, d, c.n_classes);
  return cache;
}

template <typename T>
void backward(const LabelerParams<T>& params, const ParamIndex& idx, const ForwardCache<T>& cache,
              const std::vector<T>& dlogits, std::vector<T>& grad) {
  const LabelerConfig& c = params.config;
  const T* w = params.values.data();
  T* gw = grad.data();
  const std::size_t n = cache.n;
  const std::size_t d = c.model_dim;
  const std::size_t heads = c.n_heads;
  const std::size_t dh = d / heads;
  const std::size_t valid = cache.valid;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  const std::vector<T>& top = c.n_layers ? cache.layers.back().out : cache.h0;
  accumulate_weight_grad(top.data(), dlogits.data(), gw + idx.w_out, gw + idx.b_out, n, d, c.n_classes);
  std::vector<T> dh_cur(n * d);
  matmul_bt(dlogits.data(), w + idx.w_out, dh_cur.data(), n, d, c.n_classes, false);

  std::vector<T> dr(n * d), dtmp(n * d), dff(n * c.ff_dim), dq(n * d), dk(n * d), dv(n * d), da(n);
  for (std::size_t l = c.n_layers; l-- > 0;) {
    const LayerIndex& li = idx.layers[l];
    const LayerCache<T>& lc = cache.layers[l];

    // Second layer norm, then the feed-forward residual branch.
    layer_norm_backward(dh_cur.data(), lc.xhat2.data(), lc.rstd2.data(), w + li.ln2_g, gw + li.ln2_g,
                        gw + li.ln2_b, dr.data(), n, d);
    accumulate_weight_grad(lc.g.data(), dr.data(), gw + li.w2, gw + li.b2, n, c.ff_dim, d);
    matmul_bt(dr.data(), w + li.w2, dff.data(), n, c.ff_dim, d, false);
    for (std::size_t i = 0; i < dff.size(); ++i) dff[i] *= gelu_derivative(lc.z1[i]);
    accumulate_weight_grad(lc.h1.data(), dff.data(), gw + li.w1, gw + li.b1, n, d, c.ff_dim);
    dtmp = dr;
    matmul_bt(dff.data(), w + li.w1, dtmp.data(), n, d, c.ff_dim, true);

    // First layer norm, then the attention residual branch.
    layer_norm_backward(dtmp.data(), lc.xhat1.data(), lc.rstd1.data(), w + li.ln1_g, gw + li.ln1_g,
                        gw + li.ln1_b, dr.data(), n, d);
    accumulate_weight_grad(lc.o.data(), dr.data(), gw + li.wo, gw + li.bo, n, d, d);
    std::vector<T> d_o(n * d);
    matmul_bt(dr.data(), w + li.wo, d_o.data(), n, d, d, false);

    std::fill(dq.begin(), dq.end(), T(0));
    std::fill(dk.begin(), dk.end(), T(0));
    std::fill(dv.begin(), dv.end(), T(0));
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const T* a = lc.attn.data() + (h * n + i) * n;
        T row_dot = 0;
        for (std::size_t j = 0; j < valid; ++j) {
          T s = 0;
          for (std::size_t e = 0; e < dh; ++e) s += d_o[i * d + col + e] * lc.v[j * d + col + e];
          da[j] = s;
          row_dot += s * a[j];
          for (std::size_t e = 0; e < dh; ++e) dv[j * d + col + e] += a[j] * d_o[i * d + col + e];
        }
        for (std::size_t j = 0; j < valid; ++j) {
          const T ds = a[j] * (da[j] - row_dot) * scale;
          if (ds == T(0)) continue;
          for (std::size_t e = 0; e < dh; ++e) {
            dq[i * d + col + e] += ds * lc.k[j * d + col + e];
            dk[j * d + col + e] += ds * lc.q[i * d + col + e];
          }
        }
      }
    }
    accumulate_weight_grad(lc.x_in.data(), dq.data(), gw + li.wq, gw + li.bq, n, d, d);
    accumulate_weight_grad(lc.x_in.data(), dk.data(), gw + li.wk, gw + li.bk, n, d, d);
    accumulate_weight_grad(lc.x_in.data(), dv.data(), gw + li.wv, gw + li.bv, n, d, d);
    dh_cur = dr;
    matmul_bt(dq.data(), w + li.wq, dh_cur.data(), n, d, d, true);
    matmul_bt(dk.data(), w + li.wk, dh_cur.data(), n, d, d, true);
    matmul_bt(dv.data(), w + li.wv, dh_cur.data(), n, d, d, true);
  }
  accumulate_weight_grad(cache.input.data(), dh_cur.data(), gw + idx.w_in, gw + idx.b_in, n, c.input_dim, d);
}

bool class_active(const ClassMask& mask, std::size_t c) { return mask.empty() || mask[c]; }

// Adds -log softmax(target) for counted frames; optionally writes d loss / d logits
// scaled by `grad_scale`. Returns (loss sum, counted frames, correct frames).
template <typename T>
std::tuple<double, std::size_t, std::size_t> cross_entropy(const T* logits, std::size_t n, std::size_t classes,
                                                           std::span<const int> labels, std::size_t valid,
                                                           const ClassMask& mask, T* dlogits, T grad_scale) {
  double total = 0.0;
  std::size_t counted = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < std::min(n, valid); ++i) {
    const int y = labels[i];
    if (y < 0 || !class_active(mask, static_cast<std::size_t>(y))) continue;
    const T* z = logits + i * classes;
    T max_z = -std::numeric_limits<T>::infinity();
    std::size_t arg = classes;
    for (std::size_t k = 0; k < classes; ++k) {
      if (!class_active(mask, k)) continue;
      if (z[k] > max_z) {
        max_z = z[k];
        arg = k;
      }
    }
    T sum = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      if (class_active(mask, k)) sum += std::exp(z[k] - max_z);
    }
    const T lse = max_z + std::log(sum);
    total += static_cast<double>(lse - z[y]);
    ++counted;
    if (arg == static_cast<std::size_t>(y)) ++correct;
    if (dlogits) {
      for (std::size_t k = 0; k < classes; ++k) {
        if (!class_active(mask, k)) continue;
        const T p = std::exp(z[k] - lse);
        dlogits[i * classes + k] = (p - (k == static_cast<std::size_t>(y) ? T(1) : T(0))) * grad_scale;
      }
    }
  }
  return {total, counted, correct};
}

template <typename T>
std::size_t counted_frames(const LabeledSequence& s, const ClassMask& mask) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < std::min(s.valid_frames, s.labels.size()); ++i) {
    if (s.labels[i] >= 0 && class_active(mask, static_cast<std::size_t>(s.labels[i]))) ++count;
  }
  return count;
}

void check_sequence(const LabeledSequence& s) {
  if (s.labels.size() != s.features.frames) {
    throw InvalidArgument("labeler: label count " + std::to_string(s.labels.size()) + " does not match " +
                          std::to_string(s.features.frames) + " frames");
  }
}

}  // namespace

void LabelerConfig::validate() const {
  if (input_dim == 0 || model_dim == 0 || n_heads == 0 || ff_dim == 0 || context_frames == 0 || n_classes == 0) {
    throw InvalidArgument("LabelerConfig: all dimensions must be at least 1");
  }
  if (model_dim % n_heads != 0) throw InvalidArgument("LabelerConfig: model_dim must be divisible by n_heads");
}

std::vector<TensorSlot> parameter_layout(const LabelerConfig& config) {
  std::vector<TensorSlot> slots;
  build_index(config, &slots);
  return slots;
}

std::size_t parameter_count(const LabelerConfig& config) { return build_index(config, nullptr).total; }

template <typename T>
LabelerParams<T> LabelerParams<T>::zeros(const LabelerConfig& config) {
  config.validate();
  LabelerParams<T> p;
  p.config = config;
  p.values.assign(parameter_count(config), T(0));
  return p;
}

template <typename T>
LabelerParams<T> LabelerParams<T>::initialize(const LabelerConfig& config) {
  LabelerParams<T> p = zeros(config);
  Rng rng(derive_seed(config.seed, 0x1417));
  for (const auto& slot : parameter_layout(config)) {
    const bool is_gain = slot.name.ends_with(".gain");
    const bool is_bias = slot.name.ends_with(".bias");
    for (std::size_t i = 0; i < slot.size(); ++i) {
      T& v = p.values[slot.offset + i];
      if (is_gain) {
        v = T(1);
      } else if (is_bias) {
        v = T(0);
      } else {
        const double limit = std::sqrt(6.0 / static_cast<double>(slot.rows + slot.cols));
        v = static_cast<T>(rng.uniform(-limit, limit));
      }
    }
  }
  return p;
}

template <typename T>
std::span<T> LabelerParams<T>::tensor(const std::string& name) {
  for (const auto& slot : parameter_layout(config)) {
    if (slot.name == name) return {values.data() + slot.offset, slot.size()};
  }
  throw InvalidArgument("no tensor named '" + name + "'");
}

template <typename T>
std::span<const T> LabelerParams<T>::tensor(const std::string& name) const {
  return const_cast<LabelerParams<T>*>(this)->tensor(name);
}

LabeledSequence make_sequence(const FeatureWindow& window, const FrameLabels& labels) {
  LabeledSequence s;
  s.features = window.features;
  s.valid_frames = window.valid_frames;
  s.labels.assign(window.features.frames, -1);
  for (std::size_t i = 0; i < window.valid_frames; ++i) {
    const std::size_t src = window.start_frame + i;
    if (src < labels.classes.size()) s.labels[i] = labels.classes[src].index();
  }
  return s;
}

template <typename T>
ScoreMatrix<T> forward(const LabelerParams<T>& params, const FeatureMatrix& input, std::size_t valid_frames) {
  const ParamIndex idx = build_index(params.config, nullptr);
  auto cache = forward_cached(params, idx, input, valid_frames);
  return {input.frames, params.config.n_classes, std::move(cache.logits)};
}

template <typename T>
std::vector<T> attention_weights(const LabelerParams<T>& params, const FeatureMatrix& input,
                                 std::size_t valid_frames, std::size_t layer, std::size_t head) {
  if (layer >= params.config.n_layers || head >= params.config.n_heads) {
    throw InvalidArgument("attention_weights: layer or head out of range");
  }
  const ParamIndex idx = build_index(params.config, nullptr);
  auto cache = forward_cached(params, idx, input, valid_frames);
  const std::size_t n = input.frames;
  const auto& attn = cache.layers[layer].attn;
  return std::vector<T>(attn.begin() + static_cast<std::ptrdiff_t>(head * n * n),
                        attn.begin() + static_cast<std::ptrdiff_t>((head + 1) * n * n));
}

template <typename T>
ScoreMatrix<T> softmax(const ScoreMatrix<T>& scores, const ClassMask& mask) {
  ScoreMatrix<T> out = scores;
  for (std::size_t i = 0; i < scores.frames; ++i) {
    T* z = out.values.data() + i * scores.classes;
    T max_z = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < scores.classes; ++k) {
      if (class_active(mask, k)) max_z = std::max(max_z, z[k]);
    }
    T sum = 0;
    for (std::size_t k = 0; k < scores.classes; ++k) {
      z[k] = class_active(mask, k) ? std::exp(z[k] - max_z) : T(0);
      sum += z[k];
    }
    for (std::size_t k = 0; k < scores.classes; ++k) z[k] /= sum;
  }
  return out;
}

template <typename T>
T loss(const ScoreMatrix<T>& scores, std::span<const int> labels, std::size_t valid_frames, const ClassMask& mask) {
  if (labels.size() != scores.frames) {
    throw InvalidArgument("loss: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(scores.frames) + " frames");
  }
  auto [total, counted, correct] = cross_entropy<T>(scores.values.data(), scores.frames, scores.classes, labels,
                                                    valid_frames, mask, nullptr, T(0));
  (void)correct;
  if (counted == 0) throw InvalidArgument("loss: no frames to score");
  return static_cast<T>(total / static_cast<double>(counted));
}

template <typename T>
LossAndGrad<T> loss_and_grad(const LabelerParams<T>& params, std::span<const LabeledSequence> batch,
                             const ClassMask& mask) {
  const ParamIndex idx = build_index(params.config, nullptr);
  std::size_t total_frames = 0;
  for (const auto& s : batch) {
    check_sequence(s);
    total_frames += counted_frames<T>(s, mask);
  }
  if (total_frames == 0) throw InvalidArgument("loss_and_grad: batch has no labeled frames");

  LossAndGrad<T> out;
  out.grad.assign(params.values.size(), T(0));
  const T scale = T(1) / static_cast<T>(total_frames);
  double total = 0.0;
  for (const auto& s : batch) {
    auto cache = forward_cached(params, idx, s.features, s.valid_frames);
    std::vector<T> dlogits(cache.logits.size(), T(0));
    auto [sum, counted, correct] = cross_entropy<T>(cache.logits.data(), cache.n, params.config.n_classes,
                                                    s.labels, s.valid_frames, mask, dlogits.data(), scale);
    total += sum;
    out.correct += correct;
    if (counted == 0) continue;
    backward(params, idx, cache, dlogits, out.grad);
  }
  out.frames = total_frames;
  out.loss = static_cast<T>(total / static_cast<double>(total_frames));
  if (!std::isfinite(static_cast<double>(out.loss))) throw NumericError("loss_and_grad: non-finite loss");
  return out;
}

template <typename T>
LossAndGrad<T> evaluate(const LabelerParams<T>& params, std::span<const LabeledSequence> data, const ClassMask& mask) {
  const ParamIndex idx = build_index(params.config, nullptr);
  LossAndGrad<T> out;
  double total = 0.0;
  for (const auto& s : data) {
    check_sequence(s);
    auto cache = forward_cached(params, idx, s.features, s.valid_frames);
    auto [sum, counted, correct] = cross_entropy<T>(cache.logits.data(), cache.n, params.config.n_classes,
                                                    s.labels, s.valid_frames, mask, nullptr, T(0));
    total += sum;
    out.frames += counted;
    out.correct += correct;
  }
  out.loss = out.frames ? static_cast<T>(total / static_cast<double>(out.frames)) : T(0);
  return out;
}

template <typename T>
TrainResult<T> train(const LabelerConfig& config, const LabelerDataset& data, const TrainHyperparams& hyper) {
  config.validate();
  if (data.train.empty()) throw InvalidArgument("train: empty training set");
  if (hyper.batch_size == 0 || hyper.max_epochs == 0) throw InvalidArgument("train: batch size and epochs must be positive");

  TrainResult<T> result{LabelerParams<T>::initialize(config), {}};
  LabelerParams<T>& params = result.params;
  LabelerParams<T> best = params;
  std::vector<T> m(params.values.size(), T(0));
  std::vector<T> v(params.values.size(), T(0));
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;

  std::vector<std::size_t> order(data.train.size());
  std::vector<LabeledSequence> batch;
  TrainReport& report = result.report;
  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t frames = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + hyper.batch_size); ++i) {
        batch.push_back(data.train[order[i]]);
      }
      LossAndGrad<T> lg;
      try {
        lg = loss_and_grad(params, std::span<const LabeledSequence>(batch), data.mask);
      } catch (const NumericError&) {
        throw NumericError("train: loss diverged in epoch " + std::to_string(epoch));
      }
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(lg.frames);
      frames += lg.frames;
      correct += lg.correct;

      ++step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      const T b1 = static_cast<T>(hyper.beta1);
      const T b2 = static_cast<T>(hyper.beta2);
      const T lr = static_cast<T>(hyper.learning_rate);
      const T eps = static_cast<T>(hyper.adam_epsilon);
      for (std::size_t i = 0; i < params.values.size(); ++i) {
        const T g = lg.grad[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        const T mhat = m[i] / static_cast<T>(bc1);
        const T vhat = v[i] / static_cast<T>(bc2);
        params.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }

    const double train_loss = loss_sum / static_cast<double>(frames);
    const double train_acc = static_cast<double>(correct) / static_cast<double>(frames);
    double val_loss = train_loss;
    double val_acc = train_acc;
    if (!data.validation.empty()) {
      const auto ev = evaluate(params, std::span<const LabeledSequence>(data.validation), data.mask);
      if (ev.frames > 0) {
        val_loss = static_cast<double>(ev.loss);
        val_acc = static_cast<double>(ev.correct) / static_cast<double>(ev.frames);
      }
    }
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("train: loss diverged in epoch " + std::to_string(epoch));
    }
    report.train_loss.push_back(train_loss);
    report.validation_loss.push_back(val_loss);
    report.train_accuracy.push_back(train_acc);
    report.validation_accuracy.push_back(val_acc);
    report.epochs_run = epoch;

    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > hyper.patience) {
      break;
    }
    if (hyper.target_accuracy < 1.0 && train_acc >= hyper.target_accuracy) break;
  }
  result.params = std::move(best);
  return result;
}

template <typename T>
FrameLabels predict_frames(const LabelerParams<T>& params, const FeatureMatrix& features) {
  const LabelerConfig& c = params.config;
  const std::size_t classes = c.n_classes;
  std::vector<double> sum(features.frames * classes, 0.0);
  std::vector<std::size_t> hits(features.frames, 0);
  const std::size_t stride = std::max<std::size_t>(1, c.context_frames / 2);
  for (const auto& w : window_slices(features, c.context_frames, stride)) {
    const auto scores = forward(params, w.features, w.valid_frames);
    for (std::size_t i = 0; i < w.valid_frames; ++i) {
      const std::size_t f = w.start_frame + i;
      ++hits[f];
      for (std::size_t k = 0; k < classes; ++k) sum[f * classes + k] += static_cast<double>(scores.at(i, k));
    }
  }
  FrameLabels out;
  out.classes.reserve(features.frames);
  for (std::size_t f = 0; f < features.frames; ++f) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (sum[f * classes + k] > sum[f * classes + best]) best = k;
    }
    out.classes.emplace_back(static_cast<int>(std::min<std::size_t>(best, MajMinClass::kNoChord)));
  }
  return out;
}

#define CHORDBENCH_INSTANTIATE(T)                                                                              \
  template struct LabelerParams<T>;                                                                           \
  template ScoreMatrix<T> forward(const LabelerParams<T>&, const FeatureMatrix&, std::size_t);                \
  template std::vector<T> attention_weights(const LabelerParams<T>&, const FeatureMatrix&, std::size_t,       \
                                            std::size_t, std::size_t);                                        \
  template ScoreMatrix<T> softmax(const ScoreMatrix<T>&, const ClassMask&);                                   \
  template T loss(const ScoreMatrix<T>&, std::span<const int>, std::size_t, const ClassMask&);                \
  template LossAndGrad<T> loss_and_grad(const LabelerParams<T>&, std::span<const LabeledSequence>,            \
                                        const ClassMask&);                                                    \
  template LossAndGrad<T> evaluate(const LabelerParams<T>&, std::span<const LabeledSequence>, const ClassMask&); \
  template TrainResult<T> train(const LabelerConfig&, const LabelerDataset&, const TrainHyperparams&);        \
  template FrameLabels predict_frames(const LabelerParams<T>&, const FeatureMatrix&);

CHORDBENCH_INSTANTIATE(float)
CHORDBENCH_INSTANTIATE(double)

#undef CHORDBENCH_INSTANTIATE

}  // namespace chordbench
