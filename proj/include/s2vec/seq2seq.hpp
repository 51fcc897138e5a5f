#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tokenizer.hpp"

namespace s2vec {

struct ModelShape {
  std::size_t vocab = 1;
  std::size_t d_emb = 64;
  std::size_t hidden = 128;
  bool projection_bias = true;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Read-only view of one LSTM's parameters. Gate rows are stacked [input, forget, candidate, output].
struct LstmWeights {
  std::span<const double> wx;  // 4n x input
  std::span<const double> wh;  // 4n x n
  std::span<const double> b;   // 4n
  std::size_t input = 0;
  std::size_t hidden = 0;
};

struct LstmGradView {
  std::span<double> wx, wh, b;
};

struct LstmState {
  std::vector<double> hidden;
  std::vector<double> cell;

  static LstmState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
  friend bool operator==(const LstmState&, const LstmState&) = default;
};

// All trainable tensors in one contiguous buffer, so gradients, SGD, clipping
// and checkpoints operate on a flat array. Gradients use the same type.
class ModelParams {
 public:
  struct TensorInfo {
    const char* name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
  };

  ModelParams() = default;
  explicit ModelParams(const ModelShape& shape) : shape_(shape) {
    if (shape.vocab < 1 || shape.d_emb < 1 || shape.hidden < 1) throw ConfigError("model sizes must be >= 1");
    const std::size_t v = shape.vocab, d = shape.d_emb, n = shape.hidden;
    std::size_t off = 0;
    auto add = [&](const char* name, std::size_t r, std::size_t c) {
      tensors_.push_back({name, off, r, c});
      off += r * c;
    };
    add("token_embeddings", v, d);
    add("bos_embedding", 1, d);
    add("encoder_wx", 4 * n, d);
    add("encoder_wh", 4 * n, n);
    add("encoder_b", 1, 4 * n);
    add("decoder_wx", 4 * n, d);
    add("decoder_wh", 4 * n, n);
    add("decoder_b", 1, 4 * n);
    add("projection_w", v, n);
    add("projection_b", 1, v);
    data_.assign(off, 0.0);
  }

  const ModelShape& shape() const noexcept { return shape_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::size_t parameter_count() const noexcept { return data_.size(); }
  const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }

  enum Index : std::size_t {
    kEmbeddings, kBos, kEncWx, kEncWh, kEncB, kDecWx, kDecWh, kDecB, kProjW, kProjB
  };

  std::span<double> tensor(Index i) { return {data_.data() + tensors_[i].offset, size_of(i)}; }
  std::span<const double> tensor(Index i) const { return {data_.data() + tensors_[i].offset, size_of(i)}; }

  std::span<const double> embedding(Token t) const {
    return tensor(kEmbeddings).subspan(static_cast<std::size_t>(t) * shape_.d_emb, shape_.d_emb);
  }

  LstmWeights encoder() const { return lstm(kEncWx); }
  LstmWeights decoder() const { return lstm(kDecWx); }
  LstmGradView encoder_grad() { return lstm_grad(kEncWx); }
  LstmGradView decoder_grad() { return lstm_grad(kDecWx); }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    std::fill(z.data_.begin(), z.data_.end(), 0.0);
    return z;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t size_of(Index i) const { return tensors_[i].rows * tensors_[i].cols; }

  LstmWeights lstm(Index wx) const {
    return {tensor(wx), tensor(static_cast<Index>(wx + 1)), tensor(static_cast<Index>(wx + 2)), shape_.d_emb,
            shape_.hidden};
  }
  LstmGradView lstm_grad(Index wx) {
    return {tensor(wx), tensor(static_cast<Index>(wx + 1)), tensor(static_cast<Index>(wx + 2))};
  }

  ModelShape shape_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> data_;
};

// Uniform(-r, r) with r = 1/sqrt(hidden); LSTM biases zero except forget gates at 1.
inline ModelParams init_params(const ModelShape& shape, std::uint64_t seed) {
  ModelParams p(shape);
  Rng rng = substream(seed, "init");
  const double r = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  std::uniform_real_distribution<double> u(-r, r);
  for (auto idx : {ModelParams::kEmbeddings, ModelParams::kBos, ModelParams::kEncWx, ModelParams::kEncWh,
                   ModelParams::kDecWx, ModelParams::kDecWh, ModelParams::kProjW})
    for (double& x : p.tensor(idx)) x = u(rng);
  const std::size_t n = shape.hidden;
  for (auto idx : {ModelParams::kEncB, ModelParams::kDecB}) {
    auto b = p.tensor(idx);
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(n), b.begin() + static_cast<std::ptrdiff_t>(2 * n), 1.0);
  }
  return p;
}

// ---------------------------------------------------------------------------
// LSTM cell

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Writes activated gates [i, f, g, o] (4n) and the new cell/hidden into the outputs.
inline void lstm_forward(const LstmWeights& w, std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev, std::span<double> gates, std::span<double> c_out,
                         std::span<double> tanh_c_out, std::span<double> h_out) {
  const std::size_t n = w.hidden, in = w.input;
  for (std::size_t r = 0; r < 4 * n; ++r) {
    double z = w.b[r];
    const double* wx = w.wx.data() + r * in;
    for (std::size_t k = 0; k < in; ++k) z += wx[k] * x[k];
    const double* wh = w.wh.data() + r * n;
    for (std::size_t k = 0; k < n; ++k) z += wh[k] * h_prev[k];
    gates[r] = (r >= 2 * n && r < 3 * n) ? std::tanh(z) : sigmoid(z);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double i = gates[j], f = gates[n + j], g = gates[2 * n + j], o = gates[3 * n + j];
    c_out[j] = f * c_prev[j] + i * g;
    tanh_c_out[j] = std::tanh(c_out[j]);
    h_out[j] = o * tanh_c_out[j];
  }
}

}  // namespace detail

inline LstmState lstm_step(const LstmWeights& w, std::span<const double> input, const LstmState& state) {
  if (input.size() != w.input || state.hidden.size() != w.hidden || state.cell.size() != w.hidden)
    throw DomainError("lstm_step dimension mismatch");
  std::vector<double> gates(4 * w.hidden), tanh_c(w.hidden);
  LstmState next = LstmState::zeros(w.hidden);
  detail::lstm_forward(w, input, state.hidden, state.cell, gates, next.cell, tanh_c, next.hidden);
  return next;
}

// Per-timestep activations of one LSTM run; input token -1 marks the BOS vector.
struct LstmTrace {
  std::size_t hidden = 0;
  std::vector<int> inputs;
  std::vector<double> gates;   // T x 4n
  std::vector<double> cells;   // T x n
  std::vector<double> tanh_c;  // T x n
  std::vector<double> hiddens; // T x n
  std::vector<double> h0, c0;

  std::size_t steps() const noexcept { return inputs.size(); }
  std::span<const double> h(std::size_t t) const { return {hiddens.data() + t * hidden, hidden}; }
  std::span<const double> c(std::size_t t) const { return {cells.data() + t * hidden, hidden}; }
  std::span<const double> h_prev(std::size_t t) const { return t == 0 ? std::span<const double>(h0) : h(t - 1); }
  std::span<const double> c_prev(std::size_t t) const { return t == 0 ? std::span<const double>(c0) : c(t - 1); }
};

namespace detail {

inline std::span<const double> input_vector(const ModelParams& p, int token) {
  return token < 0 ? p.tensor(ModelParams::kBos) : p.embedding(static_cast<Token>(token));
}

inline LstmTrace run_lstm(const ModelParams& p, const LstmWeights& w, const std::vector<int>& inputs,
                          std::vector<double> h0, std::vector<double> c0) {
  const std::size_t n = w.hidden, T = inputs.size();
  LstmTrace tr;
  tr.hidden = n;
  tr.inputs = inputs;
  tr.gates.resize(T * 4 * n);
  tr.cells.resize(T * n);
  tr.tanh_c.resize(T * n);
  tr.hiddens.resize(T * n);
  tr.h0 = std::move(h0);
  tr.c0 = std::move(c0);
  for (std::size_t t = 0; t < T; ++t) {
    auto h_prev = tr.h_prev(t);
    auto c_prev = tr.c_prev(t);
    lstm_forward(w, input_vector(p, inputs[t]), h_prev, c_prev, {tr.gates.data() + t * 4 * n, 4 * n},
                 {tr.cells.data() + t * n, n}, {tr.tanh_c.data() + t * n, n}, {tr.hiddens.data() + t * n, n});
  }
  return tr;
}

inline std::vector<int> as_inputs(const TokenSequence& s) {
  return {s.tokens.begin(), s.tokens.end()};
}

}  // namespace detail

struct EncodeResult {
  LstmState final;
  std::vector<LstmState> per_step;
};

// Encoder over the token embeddings, starting from the zero state.
inline EncodeResult encode(const ModelParams& p, const TokenSequence& tokens) {
  if (tokens.tokens.empty()) throw DomainError("cannot encode an empty sequence");
  const std::size_t n = p.shape().hidden;
  for (Token t : tokens.tokens)
    if (t >= p.shape().vocab) throw DomainError("token out of vocabulary range");
  auto tr = detail::run_lstm(p, p.encoder(), detail::as_inputs(tokens), std::vector<double>(n, 0.0),
                             std::vector<double>(n, 0.0));
  EncodeResult out;
  for (std::size_t t = 0; t < tr.steps(); ++t) {
    auto h = tr.h(t), c = tr.c(t);
    out.per_step.push_back({{h.begin(), h.end()}, {c.begin(), c.end()}});
  }
  out.final = out.per_step.back();
  return out;
}

// Everything backward() needs: both LSTM runs, the decoder hidden states and
// d(loss)/d(logits) = softmax - target weights at every step.
struct ForwardTrace {
  LstmTrace encoder;
  LstmTrace decoder;
  std::vector<double> dlogits;  // T x |C|
  std::size_t vocab = 0;
};

struct ForwardResult {
  double loss = 0.0;
  ForwardTrace trace;
};

// Denoising reconstruction loss for one pair: the encoder reads `corrupted`,
// the decoder starts from the encoder's final state and is teacher-forced on
// `clean` (BOS first). L = -sum_t sum_u w(u | s_t) log softmax_u(W h_t + b).
inline ForwardResult forward_loss(const ModelParams& p, const TokenSequence& corrupted, const TokenSequence& clean,
                                  const ProximityWeights& weights) {
  if (corrupted.size() != clean.size()) throw DomainError("corrupted and clean sequences differ in length");
  if (clean.tokens.empty()) throw DomainError("empty sequence");
  const std::size_t V = p.shape().vocab, n = p.shape().hidden, T = clean.size();
  if (weights.size() != V) throw DomainError("weight provider size does not match vocabulary");
  for (std::size_t t = 0; t < T; ++t)
    if (clean.tokens[t] >= V || corrupted.tokens[t] >= V) throw DomainError("token out of vocabulary range");

  ForwardResult out;
  auto& tr = out.trace;
  tr.vocab = V;
  tr.encoder = detail::run_lstm(p, p.encoder(), detail::as_inputs(corrupted), std::vector<double>(n, 0.0),
                                std::vector<double>(n, 0.0));
  std::vector<int> dec_inputs(T);
  dec_inputs[0] = -1;
  for (std::size_t t = 1; t < T; ++t) dec_inputs[t] = static_cast<int>(clean.tokens[t - 1]);
  auto hT = tr.encoder.h(T - 1), cT = tr.encoder.c(T - 1);
  tr.decoder = detail::run_lstm(p, p.decoder(), dec_inputs, {hT.begin(), hT.end()}, {cT.begin(), cT.end()});

  const auto W = p.tensor(ModelParams::kProjW);
  const auto b = p.tensor(ModelParams::kProjB);
  const bool use_bias = p.shape().projection_bias;
  tr.dlogits.assign(T * V, 0.0);
  std::vector<double> logits(V), w(V);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    auto h = tr.decoder.h(t);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < V; ++u) {
      double z = use_bias ? b[u] : 0.0;
      const double* wu = W.data() + u * n;
      for (std::size_t k = 0; k < n; ++k) z += wu[k] * h[k];
      logits[u] = z;
      max_logit = std::max(max_logit, z);
    }
    double sum = 0.0;
    for (std::size_t u = 0; u < V; ++u) sum += std::exp(logits[u] - max_logit);
    const double log_z = max_logit + std::log(sum);
    weights.row(clean.tokens[t], w);
    double* d = tr.dlogits.data() + t * V;
    for (std::size_t u = 0; u < V; ++u) {
      const double log_p = logits[u] - log_z;
      if (w[u] != 0.0) loss -= w[u] * log_p;
      d[u] = std::exp(log_p) - w[u];
    }
  }
  out.loss = loss;
  return out;
}

namespace detail {

// BPTT through one LSTM. dh_out holds per-step gradients w.r.t. h_t (may be
// empty); dh_next / dc_next carry in the gradient on the final state and come
// back as the gradient on the initial state.
inline void lstm_backward(const ModelParams& p, const LstmWeights& w, LstmGradView g, std::span<double> emb_grad,
                          std::span<double> bos_grad, const LstmTrace& tr, const std::vector<double>& dh_out,
                          std::vector<double>& dh_next, std::vector<double>& dc_next) {
  const std::size_t n = w.hidden, in = w.input;
  std::vector<double> dz(4 * n), dh(n), dh_prev(n);
  for (std::size_t t = tr.steps(); t-- > 0;) {
    const double* gates = tr.gates.data() + t * 4 * n;
    const double* tc = tr.tanh_c.data() + t * n;
    auto c_prev = tr.c_prev(t);
    for (std::size_t j = 0; j < n; ++j) {
      dh[j] = dh_next[j] + (dh_out.empty() ? 0.0 : dh_out[t * n + j]);
      const double i = gates[j], f = gates[n + j], gg = gates[2 * n + j], o = gates[3 * n + j];
      const double dc = dc_next[j] + dh[j] * o * (1.0 - tc[j] * tc[j]);
      dz[j] = dc * gg * i * (1.0 - i);
      dz[n + j] = dc * c_prev[j] * f * (1.0 - f);
      dz[2 * n + j] = dc * i * (1.0 - gg * gg);
      dz[3 * n + j] = dh[j] * tc[j] * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    auto x = input_vector(p, tr.inputs[t]);
    auto h_prev = tr.h_prev(t);
    std::span<double> dx = tr.inputs[t] < 0 ? bos_grad
                                            : emb_grad.subspan(static_cast<std::size_t>(tr.inputs[t]) * in, in);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    for (std::size_t r = 0; r < 4 * n; ++r) {
      const double d = dz[r];
      if (d == 0.0) continue;
      g.b[r] += d;
      double* gwx = g.wx.data() + r * in;
      const double* wx = w.wx.data() + r * in;
      for (std::size_t k = 0; k < in; ++k) {
        gwx[k] += d * x[k];
        dx[k] += d * wx[k];
      }
      double* gwh = g.wh.data() + r * n;
      const double* wh = w.wh.data() + r * n;
      for (std::size_t k = 0; k < n; ++k) {
        gwh[k] += d * h_prev[k];
        dh_prev[k] += d * wh[k];
      }
    }
    dh_next = dh_prev;
  }
}

}  // namespace detail

// Reverse-mode gradient of forward_loss, accumulated (added) into `grads`.
inline void backward(const ForwardTrace& tr, const ModelParams& p, ModelParams& grads) {
  const std::size_t V = tr.vocab, n = p.shape().hidden, T = tr.decoder.steps();
  auto W = p.tensor(ModelParams::kProjW);
  auto gW = grads.tensor(ModelParams::kProjW);
  auto gb = grads.tensor(ModelParams::kProjB);
  const bool use_bias = p.shape().projection_bias;
  std::vector<double> dh_out(T * n, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double* d = tr.dlogits.data() + t * V;
    auto h = tr.decoder.h(t);
    double* dh = dh_out.data() + t * n;
    for (std::size_t u = 0; u < V; ++u) {
      const double du = d[u];
      if (use_bias) gb[u] += du;
      double* gwu = gW.data() + u * n;
      const double* wu = W.data() + u * n;
      for (std::size_t k = 0; k < n; ++k) {
        gwu[k] += du * h[k];
        dh[k] += du * wu[k];
      }
    }
  }
  auto emb = grads.tensor(ModelParams::kEmbeddings);
  auto bos = grads.tensor(ModelParams::kBos);
  std::vector<double> dh_next(n, 0.0), dc_next(n, 0.0);
  detail::lstm_backward(p, p.decoder(), grads.decoder_grad(), emb, bos, tr.decoder, dh_out, dh_next, dc_next);
  // The decoder's initial state is the encoder's final state.
  detail::lstm_backward(p, p.encoder(), grads.encoder_grad(), emb, bos, tr.encoder, {}, dh_next, dc_next);
}

inline ModelParams backward(const ForwardTrace& tr, const ModelParams& p) {
  ModelParams g = p.zeros_like();
  backward(tr, p, g);
  return g;
}

inline double global_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// theta <- theta - alpha * g, with g rescaled to clip_norm when its global norm
// exceeds it (clip_norm <= 0 disables clipping). Throws NumericError on
// non-finite gradients. Returns the pre-clipping norm.
inline double sgd_step_inplace(ModelParams& params, const ModelParams& grads, double alpha, double clip_norm) {
  if (!(alpha > 0.0)) throw ConfigError("learning rate must be positive");
  const double norm = global_norm(grads.data());
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient");
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  auto theta = params.data();
  auto g = grads.data();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= alpha * (scale * g[i]);
  return norm;
}

inline ModelParams sgd_step(const ModelParams& params, const ModelParams& grads, double alpha, double clip_norm) {
  ModelParams next = params;
  sgd_step_inplace(next, grads, alpha, clip_norm);
  return next;
}

// ---------------------------------------------------------------------------
// Batches

struct SequencePair {
  const TokenSequence* corrupted = nullptr;
  const TokenSequence* clean = nullptr;
};

// Mean loss over the batch, and (when `grads` is non-null) the batch-mean
// gradient. Each pair's gradient is computed on its own and then summed in
// index order, so the result is the same for any thread count.
inline double batch_loss(const ModelParams& p, std::span<const SequencePair> batch, const ProximityWeights& weights,
                         ModelParams* grads, unsigned threads = 1) {
  if (batch.empty()) throw DomainError("empty batch");
  if (grads) *grads = p.zeros_like();
  std::vector<double> losses(batch.size());
  const std::size_t wave = std::max(1u, threads);
  std::vector<ModelParams> slots(grads ? std::min(wave, batch.size()) : 0, p.zeros_like());
  for (std::size_t start = 0; start < batch.size(); start += wave) {
    const std::size_t count = std::min(wave, batch.size() - start);
    parallel_for(count, threads, [&](std::size_t k) {
      const auto& pair = batch[start + k];
      auto fr = forward_loss(p, *pair.corrupted, *pair.clean, weights);
      losses[start + k] = fr.loss;
      if (grads) {
        std::fill(slots[k].data().begin(), slots[k].data().end(), 0.0);
        backward(fr.trace, p, slots[k]);
      }
    });
    if (grads)
      for (std::size_t k = 0; k < count; ++k) {
        auto dst = grads->data();
        auto src = slots[k].data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
  }
  double total = 0.0;
  for (double l : losses) total += l;
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grads)
    for (double& g : grads->data()) g *= inv;
  return total * inv;
}

// ---------------------------------------------------------------------------
// Checkpoint: text dump with shape headers, 17 significant digits per value.

inline std::string write_checkpoint(const ModelParams& p) {
  const auto& s = p.shape();
  std::string out = "s2vec-checkpoint 1\n";
  out += "shape " + std::to_string(s.vocab) + " " + std::to_string(s.d_emb) + " " + std::to_string(s.hidden) + " " +
         (s.projection_bias ? "1" : "0") + "\n";
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    const auto& t = p.tensors()[i];
    out += std::string("tensor ") + t.name + " " + std::to_string(t.rows) + " " + std::to_string(t.cols) + "\n";
    auto values = p.tensor(static_cast<ModelParams::Index>(i));
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        if (c) out += '\t';
        out += io::format_exact(values[r * t.cols + c]);
      }
      out += '\n';
    }
  }
  return out;
}

inline ModelParams read_checkpoint(std::string_view text) {
  auto all = io::lines(text);
  std::size_t ln = 0;
  auto next = [&]() -> std::string_view {
    if (ln >= all.size()) throw ParseError("checkpoint truncated", ln);
    return all[ln++];
  };
  if (next() != "s2vec-checkpoint 1") throw ParseError("not a version-1 checkpoint", 1);
  auto sh = io::split_ws(next());
  ModelShape shape;
  int bias = 1;
  if (sh.size() != 5 || sh[0] != "shape" || !io::parse_int(sh[1], shape.vocab) || !io::parse_int(sh[2], shape.d_emb) ||
      !io::parse_int(sh[3], shape.hidden) || !io::parse_int(sh[4], bias))
    throw ParseError("malformed shape line", 2);
  shape.projection_bias = bias != 0;
  ModelParams p(shape);
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    const auto& t = p.tensors()[i];
    auto head = io::split_ws(next());
    std::size_t rows = 0, cols = 0;
    if (head.size() != 4 || head[0] != "tensor" || head[1] != t.name || !io::parse_int(head[2], rows) ||
        !io::parse_int(head[3], cols) || rows != t.rows || cols != t.cols)
      throw ParseError(std::string("expected tensor ") + t.name, ln);
    auto values = p.tensor(static_cast<ModelParams::Index>(i));
    for (std::size_t r = 0; r < rows; ++r) {
      auto cells = io::split_tab(next());
      if (cells.size() != cols) throw ParseError("tensor row has wrong width", ln);
      for (std::size_t c = 0; c < cols; ++c)
        if (!io::parse_double(cells[c], values[r * cols + c])) throw ParseError("bad tensor value", ln);
    }
  }
  return p;
}

}  // namespace s2vec
