// SPDX-License-Identifier: Apache-2.0
#include "slr/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slr/error.hpp"
#include "slr/kernels.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace {

constexpr double kProbFloor = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> transposed(const Tensor& w) {
  std::vector<double> out(w.size());
  kernels::transpose(w.rows(), w.cols(), w.data, out);
  return out;
}

void require_finite(std::span<const double> values, const char* name) {
  for (double v : values)
    if (!std::isfinite(v))
      throw Error(ErrorKind::non_finite, std::string("non-finite value in ") + name);
}

}  // namespace

void validate(const Dims& dims) {
  if (dims.input == 0 || dims.mlp_hidden == 0 || dims.gru_hidden == 0 ||
      dims.num_classes == 0)
    throw Error(ErrorKind::dimension, "model dimensions must all be >= 1");
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  data.assign(n, 0.0);
}

std::array<std::vector<std::size_t>, 13> tensor_shapes(const Dims& d) {
  const std::size_t in = d.input, m = d.mlp_hidden, g = d.gru_hidden, k = d.num_classes;
  return {{{m, in}, {m}, {g, m}, {g, m}, {g, m}, {g, g}, {g, g}, {g, g},
           {g}, {g}, {g}, {k, g}, {k}}};
}

std::array<Tensor*, 13> TensorBundle::tensors() {
  return {&w1, &b1, &wz, &wr, &wn, &uz, &ur, &un, &bz, &br, &bn, &wo, &bo};
}

std::array<const Tensor*, 13> TensorBundle::tensors() const {
  return {&w1, &b1, &wz, &wr, &wn, &uz, &ur, &un, &bz, &br, &bn, &wo, &bo};
}

std::size_t TensorBundle::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

void TensorBundle::allocate(const Dims& d) {
  validate(d);
  dims = d;
  const auto shapes = tensor_shapes(d);
  auto ts = tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) *ts[i] = Tensor(shapes[i]);
}

bool TensorBundle::tensors_equal(const TensorBundle& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(*a[i] == *b[i])) return false;
  return true;
}

ModelParams ModelParams::zeros(const Dims& dims) {
  ModelParams p;
  p.allocate(dims);
  return p;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.allocate(params.dims);
  return g;
}

ModelParams init_params(const Dims& dims, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(dims);
  Rng rng(seed);
  for (Tensor* t : p.tensors()) {
    if (t->shape.size() != 2) continue;  // biases stay zero
    const double fan_out = static_cast<double>(t->rows());
    const double fan_in = static_cast<double>(t->cols());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t->data) v = rng.uniform(-limit, limit);
  }
  return p;
}

void check_finite(const TensorBundle& bundle) {
  const auto ts = bundle.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i)
    require_finite(ts[i]->data, std::string(kTensorNames[i]).c_str());
}

std::vector<double> relu(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(),
                 [](double x) { return x > 0.0 ? x : 0.0; });
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

SequenceBatch make_batch(std::span<const std::span<const double>> sequences,
                         std::span<const std::size_t> lengths, std::size_t width) {
  if (sequences.empty()) throw Error(ErrorKind::invalid_argument, "empty batch");
  if (sequences.size() != lengths.size())
    throw Error(ErrorKind::invalid_argument, "sequence/length count mismatch");
  SequenceBatch out;
  out.batch = sequences.size();
  out.width = width;
  out.lengths.assign(lengths.begin(), lengths.end());
  for (std::size_t b = 0; b < out.batch; ++b) {
    if (lengths[b] == 0)
      throw Error(ErrorKind::invalid_argument, "sequence with zero frames");
    if (sequences[b].size() != lengths[b] * width)
      throw Error(ErrorKind::frame_width, "sequence size is not length x width");
    out.max_length = std::max(out.max_length, lengths[b]);
  }
  out.frames.assign(out.max_length * out.batch * width, 0.0);
  for (std::size_t b = 0; b < out.batch; ++b)
    for (std::size_t t = 0; t < lengths[b]; ++t)
      std::copy_n(sequences[b].data() + t * width, width,
                  out.frames.data() + (t * out.batch + b) * width);
  return out;
}

std::span<const double> ForwardCache::logits_row(std::size_t b) const {
  return std::span<const double>(logits).subspan(b * dims.num_classes, dims.num_classes);
}

std::span<const double> ForwardCache::probs_row(std::size_t b) const {
  return std::span<const double>(probs).subspan(b * dims.num_classes, dims.num_classes);
}

std::span<const double> ForwardCache::hidden_row(std::size_t t, std::size_t b) const {
  const std::size_t g = dims.gru_hidden;
  return std::span<const double>(hidden).subspan((t * batch + b) * g, g);
}

ForwardCache forward_batch(const ModelParams& params, const SequenceBatch& batch) {
  const Dims& d = params.dims;
  if (batch.width != d.input)
    throw Error(ErrorKind::frame_width,
                "frame width " + std::to_string(batch.width) + " does not match model input " +
                    std::to_string(d.input));
  if (batch.batch == 0 || batch.max_length == 0)
    throw Error(ErrorKind::invalid_argument, "empty batch");

  ForwardCache c;
  c.dims = d;
  c.params = &params;
  c.revision = params.revision;
  c.batch = batch.batch;
  c.steps = batch.max_length;
  c.lengths = batch.lengths;
  c.input = batch.frames;
  require_finite(c.input, "input");

  const std::size_t B = c.batch, S = c.steps, N = S * B;
  const std::size_t M = d.mlp_hidden, G = d.gru_hidden, K = d.num_classes;

  c.mlp_pre.resize(N * M);
  kernels::broadcast_rows(N, M, params.b1.data, c.mlp_pre);
  kernels::gemm_nn_acc(N, d.input, M, c.input, transposed(params.w1), c.mlp_pre);
  c.mlp_out = relu(c.mlp_pre);
  require_finite(c.mlp_out, "mlp_activation");

  // Input halves of all three gates for every step at once.
  c.update.resize(N * G);
  c.reset.resize(N * G);
  c.candidate.resize(N * G);
  kernels::broadcast_rows(N, G, params.bz.data, c.update);
  kernels::broadcast_rows(N, G, params.br.data, c.reset);
  kernels::broadcast_rows(N, G, params.bn.data, c.candidate);
  kernels::gemm_nn_acc(N, M, G, c.mlp_out, transposed(params.wz), c.update);
  kernels::gemm_nn_acc(N, M, G, c.mlp_out, transposed(params.wr), c.reset);
  kernels::gemm_nn_acc(N, M, G, c.mlp_out, transposed(params.wn), c.candidate);

  const auto uz_t = transposed(params.uz);
  const auto ur_t = transposed(params.ur);
  const auto un_t = transposed(params.un);

  c.gated_prev.assign(N * G, 0.0);
  c.hidden.assign((S + 1) * B * G, 0.0);
  std::span<double> hidden(c.hidden);

  for (std::size_t t = 0; t < S; ++t) {
    const std::size_t off = t * B * G;
    auto h_prev = hidden.subspan(off, B * G);
    auto h_next = hidden.subspan(off + B * G, B * G);
    auto z = std::span<double>(c.update).subspan(off, B * G);
    auto r = std::span<double>(c.reset).subspan(off, B * G);
    auto n = std::span<double>(c.candidate).subspan(off, B * G);
    auto rh = std::span<double>(c.gated_prev).subspan(off, B * G);

    kernels::gemm_nn_acc(B, G, G, h_prev, uz_t, z);
    kernels::gemm_nn_acc(B, G, G, h_prev, ur_t, r);
    for (std::size_t i = 0; i < B * G; ++i) {
      z[i] = sigmoid(z[i]);
      r[i] = sigmoid(r[i]);
      rh[i] = r[i] * h_prev[i];
    }
    kernels::gemm_nn_acc(B, G, G, rh, un_t, n);
    for (std::size_t b = 0; b < B; ++b) {
      const bool valid = t < c.lengths[b];
      for (std::size_t j = b * G; j < (b + 1) * G; ++j) {
        n[j] = std::tanh(n[j]);
        h_next[j] = valid ? (1.0 - z[j]) * n[j] + z[j] * h_prev[j] : h_prev[j];
      }
    }
  }
  require_finite(c.hidden, "gru_hidden");

  const auto h_last = std::span<const double>(c.hidden).subspan(S * B * G, B * G);
  c.logits.resize(B * K);
  kernels::broadcast_rows(B, K, params.bo.data, c.logits);
  kernels::gemm_nn_acc(B, G, K, h_last, transposed(params.wo), c.logits);
  require_finite(c.logits, "logits");

  c.probs.resize(B * K);
  for (std::size_t b = 0; b < B; ++b) {
    const auto p = softmax(std::span<const double>(c.logits).subspan(b * K, K));
    std::copy(p.begin(), p.end(), c.probs.begin() + static_cast<std::ptrdiff_t>(b * K));
  }
  return c;
}

ForwardCache forward(const ModelParams& params, std::span<const double> frames,
                     std::size_t valid_length) {
  if (valid_length == 0)
    throw Error(ErrorKind::invalid_argument, "sequence must have at least one frame");
  if (frames.size() < valid_length * params.dims.input)
    throw Error(ErrorKind::frame_width, "frame buffer shorter than valid_length x input");
  const std::array<std::span<const double>, 1> seqs{
      frames.first(valid_length * params.dims.input)};
  const std::array<std::size_t, 1> lens{valid_length};
  return forward_batch(params, make_batch(seqs, lens, params.dims.input));
}

double cross_entropy_loss(std::span<const double> probs, std::span<const double> one_hot,
                          std::size_t classes) {
  if (classes == 0 || probs.size() != one_hot.size() || probs.size() % classes != 0 ||
      probs.empty())
    throw Error(ErrorKind::dimension, "probabilities and targets differ in shape");
  const std::size_t rows = probs.size() / classes;
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < classes; ++j) {
      const double y = one_hot[i * classes + j];
      if (y != 0.0) total -= y * std::log(std::max(probs[i * classes + j], kProbFloor));
    }
  return total / static_cast<double>(rows);
}

double cross_entropy_loss(const ForwardCache& cache, std::span<const std::size_t> targets) {
  if (targets.size() != cache.batch)
    throw Error(ErrorKind::dimension, "target count does not match batch");
  const std::size_t K = cache.dims.num_classes;
  double total = 0.0;
  for (std::size_t b = 0; b < cache.batch; ++b) {
    if (targets[b] >= K) throw Error(ErrorKind::label, "target class out of range");
    total -= std::log(std::max(cache.probs[b * K + targets[b]], kProbFloor));
  }
  return total / static_cast<double>(cache.batch);
}

Gradients backward(const ModelParams& params, const ForwardCache& c,
                   std::span<const std::size_t> targets) {
  if (c.params != &params || c.revision != params.revision || !(c.dims == params.dims))
    throw Error(ErrorKind::invalid_argument, "forward cache does not match parameters");
  if (targets.size() != c.batch)
    throw Error(ErrorKind::dimension, "target count does not match batch");

  const Dims& d = params.dims;
  const std::size_t B = c.batch, S = c.steps, N = S * B;
  const std::size_t M = d.mlp_hidden, G = d.gru_hidden, K = d.num_classes;
  Gradients g = Gradients::zeros_like(params);

  std::vector<double> dlogits(c.probs);
  const double scale = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (targets[b] >= K) throw Error(ErrorKind::label, "target class out of range");
    dlogits[b * K + targets[b]] -= 1.0;
  }
  for (double& v : dlogits) v *= scale;

  const auto hidden = std::span<const double>(c.hidden);
  kernels::gemm_tn_acc(K, B, G, dlogits, hidden.subspan(S * B * G, B * G), g.wo.data);
  kernels::column_sums_acc(B, K, dlogits, g.bo.data);

  std::vector<double> dh(B * G, 0.0);
  kernels::gemm_nn_acc(B, K, G, dlogits, params.wo.data, dh);

  std::vector<double> da_z(N * G, 0.0), da_r(N * G, 0.0), da_n(N * G, 0.0);
  std::vector<double> dh_prev(B * G), drh(B * G);

  for (std::size_t step = S; step-- > 0;) {
    const std::size_t off = step * B * G;
    const auto h_prev = hidden.subspan(off, B * G);
    const double* z = c.update.data() + off;
    const double* r = c.reset.data() + off;
    const double* n = c.candidate.data() + off;
    double* az = da_z.data() + off;
    double* ar = da_r.data() + off;
    double* an = da_n.data() + off;

    for (std::size_t b = 0; b < B; ++b) {
      const bool valid = step < c.lengths[b];
      for (std::size_t j = b * G; j < (b + 1) * G; ++j) {
        if (!valid) {
          dh_prev[j] = dh[j];
          continue;
        }
        const double dn = dh[j] * (1.0 - z[j]);
        const double dz = dh[j] * (h_prev[j] - n[j]);
        dh_prev[j] = dh[j] * z[j];
        an[j] = dn * (1.0 - n[j] * n[j]);
        az[j] = dz * z[j] * (1.0 - z[j]);
      }
    }

    std::fill(drh.begin(), drh.end(), 0.0);
    kernels::gemm_nn_acc(B, G, G, std::span<const double>(an, B * G), params.un.data, drh);
    for (std::size_t b = 0; b < B; ++b) {
      if (step >= c.lengths[b]) continue;
      for (std::size_t j = b * G; j < (b + 1) * G; ++j) {
        dh_prev[j] += drh[j] * r[j];
        ar[j] = drh[j] * h_prev[j] * r[j] * (1.0 - r[j]);
      }
    }

    kernels::gemm_nn_acc(B, G, G, std::span<const double>(az, B * G), params.uz.data, dh_prev);
    kernels::gemm_nn_acc(B, G, G, std::span<const double>(ar, B * G), params.ur.data, dh_prev);

    kernels::gemm_tn_acc(G, B, G, std::span<const double>(az, B * G), h_prev, g.uz.data);
    kernels::gemm_tn_acc(G, B, G, std::span<const double>(ar, B * G), h_prev, g.ur.data);
    kernels::gemm_tn_acc(G, B, G, std::span<const double>(an, B * G),
                         std::span<const double>(c.gated_prev).subspan(off, B * G), g.un.data);
    dh.swap(dh_prev);
  }

  kernels::gemm_tn_acc(G, N, M, da_z, c.mlp_out, g.wz.data);
  kernels::gemm_tn_acc(G, N, M, da_r, c.mlp_out, g.wr.data);
  kernels::gemm_tn_acc(G, N, M, da_n, c.mlp_out, g.wn.data);
  kernels::column_sums_acc(N, G, da_z, g.bz.data);
  kernels::column_sums_acc(N, G, da_r, g.br.data);
  kernels::column_sums_acc(N, G, da_n, g.bn.data);

  std::vector<double> dm(N * M, 0.0);
  kernels::gemm_nn_acc(N, G, M, da_z, params.wz.data, dm);
  kernels::gemm_nn_acc(N, G, M, da_r, params.wr.data, dm);
  kernels::gemm_nn_acc(N, G, M, da_n, params.wn.data, dm);
  for (std::size_t i = 0; i < N * M; ++i)
    if (c.mlp_pre[i] <= 0.0) dm[i] = 0.0;

  kernels::gemm_tn_acc(M, N, d.input, dm, c.input, g.w1.data);
  kernels::column_sums_acc(N, M, dm, g.b1.data);
  return g;
}

AdamState AdamState::for_params(const ModelParams& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const Tensor* t : params.tensors()) {
    s.first_moment.emplace_back(t->size(), 0.0);
    s.second_moment.emplace_back(t->size(), 0.0);
  }
  return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state) {
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  if (!(params.dims == grads.dims) || state.first_moment.size() != ps.size())
    throw Error(ErrorKind::dimension, "gradients/optimizer state do not match parameters");
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i]->size() != gs[i]->size() || state.first_moment[i].size() != ps[i]->size())
      throw Error(ErrorKind::dimension,
                  "shape mismatch on " + std::string(kTensorNames[i]));
  check_finite(grads);

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, lr = state.learning_rate,
               eps = state.epsilon;

  for (std::size_t i = 0; i < ps.size(); ++i) {
    double* p = ps[i]->data.data();
    const double* g = gs[i]->data.data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    const auto n = static_cast<std::ptrdiff_t>(ps[i]->size());
#pragma omp parallel for simd schedule(static) if (n > 65536)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      p[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
  check_finite(params);
  params.revision += 1;
}

}  // namespace slr
