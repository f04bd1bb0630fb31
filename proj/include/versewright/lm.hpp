#ifndef VERSEWRIGHT_LM_HPP_
#define VERSEWRIGHT_LM_HPP_

// <resolv.h> (pulled in by httplib) defines _res, an Eigen parameter name.
#pragma push_macro("_res")
#undef _res
#include <Eigen/Core>
#pragma pop_macro("_res")

#include <cblas.h>

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "versewright/bpe.hpp"
#include "versewright/errors.hpp"
#include "versewright/io.hpp"
#include "versewright/rng.hpp"

// Decoder-only transformer: learned token + position embeddings, pre-norm
// blocks (layer norm at the input of attention and of the MLP), causal
// multi-head self-attention, GELU MLP, final layer norm, output projection
// tied to the token embedding.
namespace versewright::lm {

using bpe::TokenId;
using bpe::TokenSequence;

enum class Precision { kFloat32, kFloat64 };

template <class T>
inline constexpr Precision precision_of =
    std::is_same_v<T, double> ? Precision::kFloat64 : Precision::kFloat32;

inline std::string_view to_string(Precision p) {
  return p == Precision::kFloat64 ? "float64" : "float32";
}

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_model = 128;
  std::size_t context_len = 256;
  std::size_t vocab_size = bpe::kDefaultVocabSize;
  std::size_t ffn_mult = 4;
  Precision precision = Precision::kFloat32;

  std::size_t head_dim() const { return d_model / n_heads; }
  std::size_t ffn_dim() const { return ffn_mult * d_model; }

  void validate() const {
    if (n_layers == 0) throw ValidationError("n_layers must be >= 1");
    if (n_heads == 0 || d_model == 0 || d_model % n_heads != 0) {
      throw ValidationError("d_model must be a positive multiple of n_heads");
    }
    if (context_len < 2) throw ValidationError("context_len must be >= 2");
    if (vocab_size < bpe::kMinVocabSize) {
      throw ValidationError("vocab_size must be >= 257");
    }
    if (ffn_mult == 0) throw ValidationError("ffn_mult must be >= 1");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers},       {"n_heads", c.n_heads},
                     {"d_model", c.d_model},         {"context_len", c.context_len},
                     {"vocab_size", c.vocab_size},   {"ffn_mult", c.ffn_mult},
                     {"precision", std::string(to_string(c.precision))}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.n_layers = j.value("n_layers", d.n_layers);
  c.n_heads = j.value("n_heads", d.n_heads);
  c.d_model = j.value("d_model", d.d_model);
  c.context_len = j.value("context_len", d.context_len);
  c.vocab_size = j.value("vocab_size", d.vocab_size);
  c.ffn_mult = j.value("ffn_mult", d.ffn_mult);
  const std::string p = j.value("precision", std::string("float32"));
  if (p == "float32") {
    c.precision = Precision::kFloat32;
  } else if (p == "float64") {
    c.precision = Precision::kFloat64;
  } else {
    throw ValidationError("unknown precision '" + p + "'");
  }
}

// Offsets of every tensor in the flat parameter vector. This order is also
// the on-disk order of checkpoint weights:
//   wte [V,d], wpe [C,d],
//   per layer: ln1_g [d], ln1_b [d], w_qkv [d,3d], b_qkv [3d], w_proj [d,d],
//              b_proj [d], ln2_g [d], ln2_b [d], w_fc [d,F], b_fc [F],
//              w_out [F,d], b_out [d],
//   lnf_g [d], lnf_b [d].
// Weight matrices are row-major [in, out]; y = x W + b.
struct ParamLayout {
  struct Layer {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_proj, b_proj;
    std::size_t ln2_g, ln2_b, w_fc, b_fc, w_out, b_out;
  };
  std::size_t wte = 0, wpe = 0;
  std::vector<Layer> layers;
  std::size_t lnf_g = 0, lnf_b = 0;
  std::size_t total = 0;

  explicit ParamLayout(const ModelConfig& c) {
    const std::size_t d = c.d_model, f = c.ffn_dim();
    std::size_t at = 0;
    auto take = [&](std::size_t n) {
      const std::size_t o = at;
      at += n;
      return o;
    };
    wte = take(c.vocab_size * d);
    wpe = take(c.context_len * d);
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      Layer L{};
      L.ln1_g = take(d);
      L.ln1_b = take(d);
      L.w_qkv = take(d * 3 * d);
      L.b_qkv = take(3 * d);
      L.w_proj = take(d * d);
      L.b_proj = take(d);
      L.ln2_g = take(d);
      L.ln2_b = take(d);
      L.w_fc = take(d * f);
      L.b_fc = take(f);
      L.w_out = take(f * d);
      L.b_out = take(d);
      layers.push_back(L);
    }
    lnf_g = take(d);
    lnf_b = take(d);
    total = at;
  }
};

inline std::size_t parameter_count(const ModelConfig& c) { return ParamLayout(c).total; }

template <class T>
struct Model {
  ModelConfig config;
  std::vector<T> params;

  ParamLayout layout() const { return ParamLayout(config); }
  friend bool operator==(const Model&, const Model&) = default;
};

// N(0, 0.02) for embeddings and weight matrices, zero biases, unit
// layer-norm gains.
template <class T>
Model<T> init_model(ModelConfig config, std::uint64_t seed) {
  config.precision = precision_of<T>;
  config.validate();
  const ParamLayout L(config);
  Model<T> m{config, std::vector<T>(L.total, T(0))};
  Rng rng(seed);
  auto normal = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      m.params[off + i] = static_cast<T>(0.02 * rng.normal());
    }
  };
  auto fill = [&](std::size_t off, std::size_t n, T v) {
    std::fill_n(m.params.begin() + static_cast<std::ptrdiff_t>(off), n, v);
  };
  const std::size_t d = config.d_model, f = config.ffn_dim();
  normal(L.wte, config.vocab_size * d);
  normal(L.wpe, config.context_len * d);
  for (const auto& l : L.layers) {
    fill(l.ln1_g, d, T(1));
    normal(l.w_qkv, d * 3 * d);
    normal(l.w_proj, d * d);
    fill(l.ln2_g, d, T(1));
    normal(l.w_fc, d * f);
    normal(l.w_out, f * d);
  }
  fill(L.lnf_g, d, T(1));
  return m;
}

namespace detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <class T>
using CMap = Eigen::Map<const Mat<T>>;
template <class T>
using MMap = Eigen::Map<Mat<T>>;
template <class T>
using CVMap = Eigen::Map<const Vec<T>>;
template <class T>
using MVMap = Eigen::Map<Vec<T>>;

inline constexpr double kLnEps = 1e-5;

// C = alpha * op(A) * op(B) + beta * C, beta in {0, 1}. Operands are
// row-major Eigen matrices, maps or blocks. float goes through CBLAS with the
// outer strides as leading dimensions; double stays on Eigen's own kernels,
// the reference path for the float64 oracle tests.
template <class T, class A, class B, class C>
void gemm(const A& a, bool ta, const B& b, bool tb, C&& c, T alpha = T(1), T beta = T(0)) {
  const auto m = ta ? a.cols() : a.rows();
  const auto k = ta ? a.rows() : a.cols();
  const auto n = tb ? b.rows() : b.cols();
  VW_CHECK(c.rows() == m && c.cols() == n && (tb ? b.cols() : b.rows()) == k,
           "gemm shape mismatch");
  VW_CHECK(beta == T(0) || beta == T(1), "gemm supports beta 0 or 1");
  if (m == 0 || n == 0) return;
  if constexpr (std::is_same_v<T, float>) {
    const auto i = [](Eigen::Index v) { return static_cast<blasint>(v); };
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
                tb ? CblasTrans : CblasNoTrans, i(m), i(n), i(k), alpha, a.data(),
                i(a.outerStride()), b.data(), i(b.outerStride()), beta, c.data(),
                i(c.outerStride()));
  } else {
    auto run = [&](const auto& x, const auto& y) {
      if (beta == T(0)) {
        c.noalias() = alpha * (x * y);
      } else {
        c.noalias() += alpha * (x * y);
      }
    };
    if (ta && tb) {
      run(a.transpose(), b.transpose());
    } else if (ta) {
      run(a.transpose(), b);
    } else if (tb) {
      run(a, b.transpose());
    } else {
      run(a, b);
    }
  }
}

template <class T>
struct LnCache {
  Mat<T> xhat;
  std::vector<T> rstd;
};

template <class T>
Mat<T> layer_norm(const Mat<T>& x, const T* g, const T* b, LnCache<T>* cache) {
  const auto rows = x.rows(), cols = x.cols();
  Mat<T> y(rows, cols);
  if (cache) {
    cache->xhat.resize(rows, cols);
    cache->rstd.resize(static_cast<std::size_t>(rows));
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    T mean = 0;
    for (Eigen::Index c = 0; c < cols; ++c) mean += x(r, c);
    mean /= static_cast<T>(cols);
    T var = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const T dv = x(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<T>(cols);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const T xh = (x(r, c) - mean) * rstd;
      if (cache) cache->xhat(r, c) = xh;
      y(r, c) = xh * g[c] + b[c];
    }
    if (cache) cache->rstd[static_cast<std::size_t>(r)] = rstd;
  }
  return y;
}

// Returns dx; accumulates dg, db.
template <class T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const LnCache<T>& cache, const T* g,
                           T* dg, T* db) {
  const auto rows = dy.rows(), cols = dy.cols();
  Mat<T> dx(rows, cols);
  std::vector<T> dxhat(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    T sum = 0, sum_xh = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const T xh = cache.xhat(r, c);
      dg[c] += dy(r, c) * xh;
      db[c] += dy(r, c);
      const T d = dy(r, c) * g[c];
      dxhat[static_cast<std::size_t>(c)] = d;
      sum += d;
      sum_xh += d * xh;
    }
    const T inv_n = T(1) / static_cast<T>(cols);
    const T rstd = cache.rstd[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c) {
      dx(r, c) = rstd * (dxhat[static_cast<std::size_t>(c)] - sum * inv_n -
                         cache.xhat(r, c) * sum_xh * inv_n);
    }
  }
  return dx;
}

template <class T>
inline T gelu(T x) {
  constexpr T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  return T(0.5) * x * (T(1) + std::tanh(k * (x + T(0.044715) * x * x * x)));
}

template <class T>
inline T gelu_grad(T x) {
  constexpr T k = static_cast<T>(0.7978845608028654);
  const T u = k * (x + T(0.044715) * x * x * x);
  const T th = std::tanh(u);
  const T du = k * (T(1) + T(3) * T(0.044715) * x * x);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * du;
}

template <class T>
struct LayerCache {
  Mat<T> x_in;
  LnCache<T> ln1;
  Mat<T> a_in;
  Mat<T> qkv;
  std::vector<Mat<T>> probs;  // per head, [T, T], zero above the diagonal
  Mat<T> att;
  Mat<T> x_mid;
  LnCache<T> ln2;
  Mat<T> f_in;
  Mat<T> pre_act;
  Mat<T> act;
};

template <class T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
  Mat<T> x_final;
  LnCache<T> lnf;
  Mat<T> h_final;
};

template <class T>
void check_tokens(const ModelConfig& c, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ValidationError("empty token sequence");
  if (tokens.size() > c.context_len) {
    throw ValidationError("sequence of " + std::to_string(tokens.size()) +
                          " tokens exceeds context length " +
                          std::to_string(c.context_len));
  }
  for (TokenId t : tokens) {
    if (t >= c.vocab_size) {
      throw ValidationError("token id " + std::to_string(t) + " out of vocabulary");
    }
  }
}

// Causal attention for one head. q, k, v are [T, hd] column slices of qkv.
template <class T>
void attend(const Mat<T>& qkv, std::size_t d, std::size_t head, std::size_t hd,
            Mat<T>& att, Mat<T>& probs) {
  const auto n = qkv.rows();
  const auto off = static_cast<Eigen::Index>(head * hd);
  const auto h = static_cast<Eigen::Index>(hd);
  const auto dd = static_cast<Eigen::Index>(d);
  const auto q = qkv.block(0, off, n, h);
  const auto k = qkv.block(0, dd + off, n, h);
  const auto v = qkv.block(0, 2 * dd + off, n, h);
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  Mat<T> s(n, n);
  gemm<T>(q, false, k, true, s, scale);
  probs.setZero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    T mx = s(t, 0);
    for (Eigen::Index j = 1; j <= t; ++j) mx = std::max(mx, s(t, j));
    T sum = 0;
    for (Eigen::Index j = 0; j <= t; ++j) {
      const T e = std::exp(s(t, j) - mx);
      probs(t, j) = e;
      sum += e;
    }
    const T inv = T(1) / sum;
    for (Eigen::Index j = 0; j <= t; ++j) probs(t, j) *= inv;
  }
  gemm<T>(probs, false, v, false, att.block(0, off, n, h));
}

template <class T>
Mat<T> forward_impl(const Model<T>& m, std::span<const TokenId> tokens,
                    ForwardCache<T>* cache, bool last_only = false) {
  const ModelConfig& c = m.config;
  check_tokens<T>(c, tokens);
  const ParamLayout L(c);
  const std::size_t d = c.d_model, f = c.ffn_dim(), hd = c.head_dim();
  const auto n = static_cast<Eigen::Index>(tokens.size());
  const auto D = static_cast<Eigen::Index>(d);
  const T* p = m.params.data();

  Mat<T> x(n, D);
  for (Eigen::Index t = 0; t < n; ++t) {
    const T* te = p + L.wte + tokens[static_cast<std::size_t>(t)] * d;
    const T* pe = p + L.wpe + static_cast<std::size_t>(t) * d;
    for (Eigen::Index i = 0; i < D; ++i) x(t, i) = te[i] + pe[i];
  }
  if (cache) cache->layers.resize(c.n_layers);

  for (std::size_t li = 0; li < c.n_layers; ++li) {
    const auto& l = L.layers[li];
    LayerCache<T> local;
    LayerCache<T>& lc = cache ? cache->layers[li] : local;
    if (cache) lc.x_in = x;
    lc.a_in = layer_norm<T>(x, p + l.ln1_g, p + l.ln1_b, cache ? &lc.ln1 : nullptr);
    lc.qkv.resize(n, 3 * D);
    gemm<T>(lc.a_in, false, CMap<T>(p + l.w_qkv, D, 3 * D), false, lc.qkv);
    lc.qkv.rowwise() += CVMap<T>(p + l.b_qkv, 3 * D);
    lc.att.resize(n, D);
    lc.probs.resize(c.n_heads);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      attend<T>(lc.qkv, d, h, hd, lc.att, lc.probs[h]);
    }
    Mat<T> y(n, D);
    gemm<T>(lc.att, false, CMap<T>(p + l.w_proj, D, D), false, y);
    y.rowwise() += CVMap<T>(p + l.b_proj, D);
    x += y;
    if (cache) lc.x_mid = x;
    lc.f_in = layer_norm<T>(x, p + l.ln2_g, p + l.ln2_b, cache ? &lc.ln2 : nullptr);
    const auto F = static_cast<Eigen::Index>(f);
    lc.pre_act.resize(n, F);
    gemm<T>(lc.f_in, false, CMap<T>(p + l.w_fc, D, F), false, lc.pre_act);
    lc.pre_act.rowwise() += CVMap<T>(p + l.b_fc, F);
    lc.act = lc.pre_act.unaryExpr([](T v) { return gelu<T>(v); });
    Mat<T> z(n, D);
    gemm<T>(lc.act, false, CMap<T>(p + l.w_out, F, D), false, z);
    z.rowwise() += CVMap<T>(p + l.b_out, D);
    x += z;
  }
  Mat<T> hf;
  if (cache) {
    cache->x_final = x;
    cache->h_final = layer_norm<T>(x, p + L.lnf_g, p + L.lnf_b, &cache->lnf);
    hf = cache->h_final;
  } else {
    hf = layer_norm<T>(x, p + L.lnf_g, p + L.lnf_b, nullptr);
  }
  const auto V = static_cast<Eigen::Index>(c.vocab_size);
  const CMap<T> wte(p + L.wte, V, D);
  if (last_only) {
    Mat<T> out(1, V);
    gemm<T>(hf.bottomRows(1), false, wte, true, out);
    return out;
  }
  Mat<T> out(n, V);
  gemm<T>(hf, false, wte, true, out);
  return out;
}

// Backpropagates dlogits through a cached forward pass, accumulating into
// grad (same layout as params).
template <class T>
void backward_impl(const Model<T>& m, std::span<const TokenId> tokens,
                   const ForwardCache<T>& cache, const Mat<T>& dlogits, T* grad) {
  const ModelConfig& c = m.config;
  const ParamLayout L(c);
  const std::size_t d = c.d_model, f = c.ffn_dim(), hd = c.head_dim();
  const auto n = static_cast<Eigen::Index>(tokens.size());
  const auto D = static_cast<Eigen::Index>(d);
  const auto F = static_cast<Eigen::Index>(f);
  const auto V = static_cast<Eigen::Index>(c.vocab_size);
  const T* p = m.params.data();

  // logits = h_final * wte^T
  gemm<T>(dlogits, true, cache.h_final, false, MMap<T>(grad + L.wte, V, D), 1, 1);
  Mat<T> dh(n, D);
  gemm<T>(dlogits, false, CMap<T>(p + L.wte, V, D), false, dh);
  Mat<T> dx = layer_norm_backward<T>(dh, cache.lnf, p + L.lnf_g, grad + L.lnf_g,
                                     grad + L.lnf_b);

  for (std::size_t li = c.n_layers; li-- > 0;) {
    const auto& l = L.layers[li];
    const LayerCache<T>& lc = cache.layers[li];

    // MLP branch: x = x_mid + act * w_out + b_out
    MVMap<T>(grad + l.b_out, D) += dx.colwise().sum();
    gemm<T>(lc.act, true, dx, false, MMap<T>(grad + l.w_out, F, D), 1, 1);
    Mat<T> dact(n, F);
    gemm<T>(dx, false, CMap<T>(p + l.w_out, F, D), true, dact);
    Mat<T> dpre = dact.cwiseProduct(
        lc.pre_act.unaryExpr([](T v) { return gelu_grad<T>(v); }));
    MVMap<T>(grad + l.b_fc, F) += dpre.colwise().sum();
    gemm<T>(lc.f_in, true, dpre, false, MMap<T>(grad + l.w_fc, D, F), 1, 1);
    Mat<T> df_in(n, D);
    gemm<T>(dpre, false, CMap<T>(p + l.w_fc, D, F), true, df_in);
    dx += layer_norm_backward<T>(df_in, lc.ln2, p + l.ln2_g, grad + l.ln2_g,
                                 grad + l.ln2_b);

    // Attention branch: x_mid = x_in + att * w_proj + b_proj
    MVMap<T>(grad + l.b_proj, D) += dx.colwise().sum();
    gemm<T>(lc.att, true, dx, false, MMap<T>(grad + l.w_proj, D, D), 1, 1);
    Mat<T> datt(n, D);
    gemm<T>(dx, false, CMap<T>(p + l.w_proj, D, D), true, datt);
    Mat<T> dqkv = Mat<T>::Zero(n, 3 * D);
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    const auto H = static_cast<Eigen::Index>(hd);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h * hd);
      const auto q = lc.qkv.block(0, off, n, H);
      const auto k = lc.qkv.block(0, D + off, n, H);
      const auto v = lc.qkv.block(0, 2 * D + off, n, H);
      const Mat<T>& P = lc.probs[h];
      const auto dout = std::as_const(datt).block(0, off, n, H);
      Mat<T> dP(n, n);
      gemm<T>(dout, false, v, true, dP);
      gemm<T>(P, true, dout, false, dqkv.block(0, 2 * D + off, n, H), 1, 1);
      Mat<T> dS(n, n);
      for (Eigen::Index t = 0; t < n; ++t) {
        T dot = 0;
        for (Eigen::Index j = 0; j <= t; ++j) dot += P(t, j) * dP(t, j);
        for (Eigen::Index j = 0; j < n; ++j) {
          dS(t, j) = j <= t ? P(t, j) * (dP(t, j) - dot) * scale : T(0);
        }
      }
      gemm<T>(dS, false, k, false, dqkv.block(0, off, n, H), 1, 1);
      gemm<T>(dS, true, q, false, dqkv.block(0, D + off, n, H), 1, 1);
    }
    MVMap<T>(grad + l.b_qkv, 3 * D) += dqkv.colwise().sum();
    gemm<T>(lc.a_in, true, dqkv, false, MMap<T>(grad + l.w_qkv, D, 3 * D), 1, 1);
    Mat<T> da_in(n, D);
    gemm<T>(dqkv, false, CMap<T>(p + l.w_qkv, D, 3 * D), true, da_in);
    dx += layer_norm_backward<T>(da_in, lc.ln1, p + l.ln1_g, grad + l.ln1_g,
                                 grad + l.ln1_b);
  }

  for (Eigen::Index t = 0; t < n; ++t) {
    T* ge = grad + L.wte + tokens[static_cast<std::size_t>(t)] * d;
    T* gp = grad + L.wpe + static_cast<std::size_t>(t) * d;
    for (Eigen::Index i = 0; i < D; ++i) {
      ge[i] += dx(t, i);
      gp[i] += dx(t, i);
    }
  }
}

}  // namespace detail

template <class T>
using Logits = detail::Mat<T>;

// Logits [len, vocab_size]; row t depends on tokens[0..t] only.
template <class T>
Logits<T> forward(const Model<T>& m, std::span<const TokenId> tokens) {
  return detail::forward_impl<T>(m, tokens, nullptr);
}

// Logits of the final position only, [vocab_size].
template <class T>
std::vector<double> forward_last(const Model<T>& m, std::span<const TokenId> tokens) {
  const detail::Mat<T> row = detail::forward_impl<T>(m, tokens, nullptr, true);
  return std::vector<double>(row.data(), row.data() + row.size());
}

// Softmax rows of every attention head of every layer ([layer][head]),
// exposed for inspection and tests.
template <class T>
std::vector<std::vector<detail::Mat<T>>> attention_weights(
    const Model<T>& m, std::span<const TokenId> tokens) {
  detail::ForwardCache<T> cache;
  detail::forward_impl<T>(m, tokens, &cache);
  std::vector<std::vector<detail::Mat<T>>> out;
  for (auto& l : cache.layers) out.push_back(l.probs);
  return out;
}

namespace detail {

// Sum over positions of -log p(next token); optionally accumulates the
// gradient of (sum / norm) into grad.
template <class T>
double sequence_nll(const Model<T>& m, std::span<const TokenId> seq, T* grad,
                    double norm) {
  const std::span<const TokenId> inputs = seq.first(seq.size() - 1);
  ForwardCache<T> cache;
  Mat<T> logits = forward_impl<T>(m, inputs, grad ? &cache : nullptr);
  double total = 0;
  const auto V = logits.cols();
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const TokenId target = seq[static_cast<std::size_t>(t) + 1];
    const T target_logit = logits(t, target);
    T mx = logits.row(t).maxCoeff();
    T sum = 0;
    for (Eigen::Index v = 0; v < V; ++v) {
      const T e = std::exp(logits(t, v) - mx);
      logits(t, v) = e;  // reused below as the softmax numerator
      sum += e;
    }
    const T log_sum = std::log(sum) + mx;
    const double lp = static_cast<double>(target_logit - log_sum);
    total -= lp;
    if (grad) {
      const T inv = T(1) / sum;
      const T scale = static_cast<T>(1.0 / norm);
      for (Eigen::Index v = 0; v < V; ++v) logits(t, v) *= inv * scale;
      logits(t, target) -= scale;
    }
  }
  if (grad) backward_impl<T>(m, inputs, cache, logits, grad);
  return total;
}

template <class Batch>
std::size_t count_targets(const Batch& batch) {
  std::size_t n = 0;
  for (const auto& s : batch) {
    if (s.size() < 2) throw ValidationError("loss needs sequences of length >= 2");
    n += s.size() - 1;
  }
  return n;
}

}  // namespace detail

// Mean cross-entropy in nats per predicted token over every position of
// every sequence in the batch.
template <class T, class Batch>
double loss(const Model<T>& m, const Batch& batch) {
  const std::size_t n = detail::count_targets(batch);
  if (n == 0) throw ValidationError("empty batch");
  double total = 0;
  for (const auto& s : batch) {
    total += detail::sequence_nll<T>(m, std::span<const TokenId>(s), nullptr, 1.0);
  }
  return total / static_cast<double>(n);
}

// Loss plus its gradient w.r.t. every parameter (flat, same layout).
template <class T, class Batch>
double loss_and_grad(const Model<T>& m, const Batch& batch, std::vector<T>& grad) {
  const std::size_t n = detail::count_targets(batch);
  if (n == 0) throw ValidationError("empty batch");
  grad.assign(m.params.size(), T(0));
  double total = 0;
  for (const auto& s : batch) {
    total += detail::sequence_nll<T>(m, std::span<const TokenId>(s), grad.data(),
                                     static_cast<double>(n));
  }
  return total / static_cast<double>(n);
}

// Adam without schedule or weight decay.
struct TrainConfig {
  std::size_t steps = 12000;
  double learning_rate = 1e-4;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && eps > 0)) {
      throw ValidationError("invalid Adam hyperparameters");
    }
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"steps", c.steps}, {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size}, {"seed", c.seed},
                     {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.steps = j.value("steps", d.steps);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.eps = j.value("eps", d.eps);
}

struct TrainResult {
  std::vector<double> losses;  // one per step, measured before the update
};

// Windows of min(context_len + 1, stream size) tokens are drawn uniformly
// from the stream, batch_size per step.
template <class T>
TrainResult train(Model<T>& m, std::span<const TokenId> stream, const TrainConfig& cfg) {
  cfg.validate();
  if (stream.size() < 2) throw ValidationError("training corpus has fewer than 2 tokens");
  for (TokenId t : stream) {
    if (t >= m.config.vocab_size) {
      throw ValidationError("corpus token " + std::to_string(t) + " outside model vocab");
    }
  }
  const std::size_t window = std::min(m.config.context_len + 1, stream.size());
  const std::size_t starts = stream.size() - window + 1;
  Rng rng(cfg.seed);
  std::vector<T> grad, m1(m.params.size(), T(0)), m2(m.params.size(), T(0));
  std::vector<std::span<const TokenId>> batch(cfg.batch_size);
  TrainResult result;
  result.losses.reserve(cfg.steps);
  double b1t = 1, b2t = 1;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (auto& s : batch) s = stream.subspan(rng.below(starts), window);
    const double l = loss_and_grad<T>(m, batch, grad);
    result.losses.push_back(l);
    b1t *= cfg.beta1;
    b2t *= cfg.beta2;
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T lr_t = static_cast<T>(cfg.learning_rate * std::sqrt(1 - b2t) / (1 - b1t));
    const T eps = static_cast<T>(cfg.eps * std::sqrt(1 - b2t));
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      const T g = grad[i];
      m1[i] = b1 * m1[i] + (T(1) - b1) * g;
      m2[i] = b2 * m2[i] + (T(1) - b2) * g * g;
      m.params[i] -= lr_t * m1[i] / (std::sqrt(m2[i]) + eps);
    }
    for (T v : m.params) {
      if (!std::isfinite(v)) {
        throw InvariantError("non-finite parameter after step " + std::to_string(step));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

struct Stage {
  std::string name;
  std::string corpus;
  std::size_t steps = 0;
  double final_loss = 0;
  friend bool operator==(const Stage&, const Stage&) = default;
};

inline void to_json(nlohmann::json& j, const Stage& s) {
  j = nlohmann::json{{"name", s.name}, {"corpus", s.corpus}, {"steps", s.steps},
                     {"final_loss", s.final_loss}};
}

inline void from_json(const nlohmann::json& j, Stage& s) {
  s.name = j.at("name").get<std::string>();
  s.corpus = j.at("corpus").get<std::string>();
  s.steps = j.at("steps").get<std::size_t>();
  s.final_loss = j.at("final_loss").get<double>();
}

template <class T>
struct Checkpoint {
  Model<T> model;
  std::vector<Stage> stage_chain;
  std::string vocab_hash;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline double final_mean_loss(const std::vector<double>& losses) {
  if (losses.empty()) return 0;
  const std::size_t tail = std::min<std::size_t>(50, losses.size());
  double s = 0;
  for (std::size_t i = losses.size() - tail; i < losses.size(); ++i) s += losses[i];
  return s / static_cast<double>(tail);
}

// Continues training from the checkpoint's weights and appends a stage.
// The optimizer starts fresh; with steps == 0 the weights are untouched.
template <class T>
Checkpoint<T> finetune(const Checkpoint<T>& ckpt, std::span<const TokenId> stream,
                       const TrainConfig& cfg, const std::string& stage_name,
                       const std::string& corpus_id,
                       const std::string& tokenizer_hash,
                       std::vector<double>* losses = nullptr) {
  if (ckpt.vocab_hash != tokenizer_hash) {
    throw ValidationError("checkpoint was trained with a different tokenizer (" +
                          ckpt.vocab_hash.substr(0, 12) + " vs " +
                          tokenizer_hash.substr(0, 12) + ")");
  }
  Checkpoint<T> out = ckpt;
  TrainResult r = train<T>(out.model, stream, cfg);
  out.stage_chain.push_back({stage_name, corpus_id, cfg.steps, final_mean_loss(r.losses)});
  if (losses) *losses = std::move(r.losses);
  return out;
}

class CheckpointError : public ValidationError {
 public:
  enum class Kind { kCorrupt, kVersion, kTruncated };
  CheckpointError(Kind kind, const std::string& what)
      : ValidationError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kCheckpointMagic[8] = {'V', 'W', 'C', 'K', 'P', 'T', '\r', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), 8);
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::string_view take(std::size_t n) {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::kTruncated, "checkpoint is truncated");
    }
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8).data(), 8);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// magic(8) | version u32 | config json (u32 len + bytes) | stage chain json
// (u32 len + bytes) | parameter count u64 | raw little-endian parameters in
// ParamLayout order | crc32 of everything before it (u32).
template <class T>
std::string serialize_checkpoint(const Checkpoint<T>& ckpt) {
  nlohmann::json config = ckpt.model.config;
  config["vocab_hash"] = ckpt.vocab_hash;
  const std::string config_s = config.dump();
  const std::string chain_s = nlohmann::json(ckpt.stage_chain).dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(config_s.size()));
  out += config_s;
  detail::put_u32(out, static_cast<std::uint32_t>(chain_s.size()));
  out += chain_s;
  detail::put_u64(out, ckpt.model.params.size());
  out.append(reinterpret_cast<const char*>(ckpt.model.params.data()),
             ckpt.model.params.size() * sizeof(T));
  detail::put_u32(out, io::crc32_of(out));
  return out;
}

inline Precision checkpoint_precision(std::string_view data);

template <class T>
Checkpoint<T> parse_checkpoint(std::string_view data) {
  using K = CheckpointError::Kind;
  detail::Reader r(data);
  if (data.size() < sizeof kCheckpointMagic) {
    throw CheckpointError(K::kTruncated, "checkpoint is truncated");
  }
  if (r.take(sizeof kCheckpointMagic) !=
      std::string_view(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw CheckpointError(K::kCorrupt, "not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError(K::kVersion, "unsupported checkpoint version " +
                                           std::to_string(version));
  }
  nlohmann::json config_j, chain_j;
  try {
    config_j = nlohmann::json::parse(r.take(r.u32()));
    chain_j = nlohmann::json::parse(r.take(r.u32()));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(K::kCorrupt, std::string("bad checkpoint header: ") + e.what());
  }
  const std::uint64_t count = r.u64();
  if (count > (data.size() - r.pos()) / sizeof(T)) {
    throw CheckpointError(K::kTruncated, "checkpoint is truncated");
  }
  std::string_view raw = r.take(static_cast<std::size_t>(count) * sizeof(T));
  const std::size_t body_end = r.pos();
  const std::uint32_t crc = r.u32();
  if (r.pos() != data.size()) {
    throw CheckpointError(K::kCorrupt, "trailing bytes after checkpoint");
  }
  if (crc != io::crc32_of(data.substr(0, body_end))) {
    throw CheckpointError(K::kCorrupt, "checkpoint checksum mismatch");
  }
  Checkpoint<T> ckpt;
  try {
    ckpt.model.config = config_j.get<ModelConfig>();
    ckpt.vocab_hash = config_j.at("vocab_hash").get<std::string>();
    ckpt.stage_chain = chain_j.get<std::vector<Stage>>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(K::kCorrupt, std::string("bad checkpoint header: ") + e.what());
  }
  if (ckpt.model.config.precision != precision_of<T>) {
    throw ValidationError("checkpoint holds " +
                          std::string(to_string(ckpt.model.config.precision)) +
                          " weights");
  }
  ckpt.model.config.validate();
  if (count != parameter_count(ckpt.model.config)) {
    throw CheckpointError(K::kCorrupt, "parameter count does not match config");
  }
  ckpt.model.params.resize(static_cast<std::size_t>(count));
  std::memcpy(ckpt.model.params.data(), raw.data(), raw.size());
  return ckpt;
}

inline Precision checkpoint_precision(std::string_view data) {
  detail::Reader r(data);
  r.take(sizeof kCheckpointMagic);
  r.u32();
  try {
    auto j = nlohmann::json::parse(r.take(r.u32()));
    return j.get<ModelConfig>().precision;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt, e.what());
  }
}

template <class T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_checkpoint(ckpt));
}

template <class T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint<T>(io::read_file(path));
}

}  // namespace versewright::lm

#endif  // VERSEWRIGHT_LM_HPP_
