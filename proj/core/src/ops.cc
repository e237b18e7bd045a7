// Copyright 2026 The ssdec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssdec/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Core>

#include "ssdec/error.h"

namespace ssdec {
namespace {

template <typename T>
using StoragePtr = std::shared_ptr<TensorStorage<T>>;

template <typename T>
Tensor<T> Empty(Shape shape) {
  auto s = std::make_shared<TensorStorage<T>>();
  s->value.resize(static_cast<std::size_t>(NumElements(shape)));
  s->shape = std::move(shape);
  return Tensor<T>(std::move(s));
}

// Gradient buffer of an input, or nullptr when it does not need one.
template <typename T>
T* GradOf(const StoragePtr<T>& s) {
  return s->requires_grad ? s->EnsureGrad().data() : nullptr;
}

template <typename T>
void Record(const Tensor<T>& out, std::vector<const Tensor<T>*> inputs,
            const char* op, std::function<void()> fn) {
  Tape<T>::Active()->Record(out, inputs, op, std::move(fn));
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-major C = op(A) * op(B) + beta * C, beta in {0, 1}.
template <typename T>
void BlasGemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k,
              const T* a, const T* b, T beta, T* c) {
  using Map = Eigen::Map<const RowMatrix<T>>;
  Eigen::Map<RowMatrix<T>> cm(c, m, n);
  if (beta == T(0)) cm.setZero();
  const Map am(a, trans_a ? k : m, trans_a ? m : k);
  const Map bm(b, trans_b ? n : k, trans_b ? k : n);
  if (trans_a && trans_b) {
    cm.noalias() += am.transpose() * bm.transpose();
  } else if (trans_a) {
    cm.noalias() += am.transpose() * bm;
  } else if (trans_b) {
    cm.noalias() += am * bm.transpose();
  } else {
    cm.noalias() += am * bm;
  }
}

// Decides how b broadcasts against a: 0 = same shape, otherwise the period
// of b (b's shape is a trailing suffix of a's).
template <typename T>
std::int64_t BroadcastPeriod(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return 0;
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() <= as.size() &&
      std::equal(bs.begin(), bs.end(), as.end() - static_cast<std::ptrdiff_t>(bs.size()))) {
    return b.size();
  }
  throw ShapeError(std::string(op) + ": cannot broadcast " + ShapeToString(bs) +
                   " onto " + ShapeToString(as));
}

struct AxisSplit {
  std::int64_t outer = 1;
  std::int64_t len = 1;
  std::int64_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  const int r = static_cast<int>(shape.size());
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis out of range for " + ShapeToString(shape));
  }
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (int i = axis + 1; i < r; ++i) s.inner *= shape[i];
  return s;
}

int NormalizeAxis(int axis, int rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw ShapeError("axis out of range");
  return axis;
}

}  // namespace

template <typename T>
void Gemm(std::int64_t m, std::int64_t n, std::int64_t k, const T* a, const T* b, T* c,
          bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c, c + m * n, T(0));
    return;
  }
  BlasGemm(false, false, m, n, k, a, b, accumulate ? T(1) : T(0), c);
}

template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul needs rank >= 2 operands, got " + ShapeToString(a.shape()) +
                     " and " + ShapeToString(b.shape()));
  }
  const std::int64_t m = a.dim(-2);
  const std::int64_t k = a.dim(-1);
  const std::int64_t bk = transpose_b ? b.dim(-1) : b.dim(-2);
  const std::int64_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  const bool shared_b = b.rank() == 2;
  Shape batch(a.shape().begin(), a.shape().end() - 2);
  if (bk != k ||
      (!shared_b && Shape(b.shape().begin(), b.shape().end() - 2) != batch)) {
    throw ShapeError("matmul shape mismatch: " + ShapeToString(a.shape()) + " x " +
                     ShapeToString(b.shape()) + (transpose_b ? "^T" : ""));
  }
  const std::int64_t nb = NumElements(batch);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<T> out = Empty<T>(out_shape);

  // A shared b treats every batch row block of a as one tall matrix.
  const std::int64_t batches = shared_b ? 1 : nb;
  const std::int64_t rows = shared_b ? nb * m : m;
  for (std::int64_t i = 0; i < batches; ++i) {
    BlasGemm(false, transpose_b, rows, n, k, a.data() + i * rows * k, b.data() + i * k * n,
             T(0), out.data() + i * rows * n);
  }

  if (ShouldRecord<T>({&a, &b})) {
    auto as = a.storage(), bs = b.storage(), os = out.storage();
    Record<T>(out, {&a, &b}, "matmul", [as, bs, os, n, k, batches, rows, transpose_b] {
      const T* dc = os->grad.data();
      T* da = GradOf(as);
      T* db = GradOf(bs);
      for (std::int64_t i = 0; i < batches; ++i) {
        const T* a_i = as->value.data() + i * rows * k;
        const T* b_i = bs->value.data() + i * k * n;
        const T* dc_i = dc + i * rows * n;
        // dA = dC * B^T (B stored [K,N]) or dC * B (B stored [N,K]).
        if (da) BlasGemm(false, !transpose_b, rows, k, n, dc_i, b_i, T(1), da + i * rows * k);
        if (db) {
          if (!transpose_b) {
            BlasGemm(true, false, k, n, rows, a_i, dc_i, T(1), db + i * k * n);  // A^T dC
          } else {
            BlasGemm(true, false, n, k, rows, dc_i, a_i, T(1), db + i * k * n);  // dC^T A
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b) {
  const std::int64_t period = BroadcastPeriod(a, b, "add");
  Tensor<T> out = Empty<T>(a.shape());
  const std::int64_t total = a.size();
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  if (period == 0) {
    for (std::int64_t i = 0; i < total; ++i) ov[i] = av[i] + bv[i];
  } else {
    for (std::int64_t i = 0; i < total; i += period) {
      for (std::int64_t j = 0; j < period; ++j) ov[i + j] = av[i + j] + bv[j];
    }
  }
  if (ShouldRecord<T>({&a, &b})) {
    auto as = a.storage(), bs = b.storage(), os = out.storage();
    Record<T>(out, {&a, &b}, "add", [as, bs, os, period, total] {
      const T* g = os->grad.data();
      if (T* da = GradOf(as)) {
        for (std::int64_t i = 0; i < total; ++i) da[i] += g[i];
      }
      if (T* db = GradOf(bs)) {
        if (period == 0) {
          for (std::int64_t i = 0; i < total; ++i) db[i] += g[i];
        } else {
          for (std::int64_t i = 0; i < total; i += period) {
            for (std::int64_t j = 0; j < period; ++j) db[j] += g[i + j];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b) {
  const std::int64_t period = BroadcastPeriod(a, b, "mul");
  Tensor<T> out = Empty<T>(a.shape());
  const std::int64_t total = a.size();
  const T* av = a.data();
  const T* bv = b.data();
  T* ov = out.data();
  const std::int64_t p = period == 0 ? total : period;
  for (std::int64_t i = 0; i < total; i += p) {
    for (std::int64_t j = 0; j < p; ++j) ov[i + j] = av[i + j] * bv[j + (period == 0 ? i : 0)];
  }
  if (ShouldRecord<T>({&a, &b})) {
    auto as = a.storage(), bs = b.storage(), os = out.storage();
    Record<T>(out, {&a, &b}, "mul", [as, bs, os, period, total] {
      const T* g = os->grad.data();
      const T* av = as->value.data();
      const T* bv = bs->value.data();
      const std::int64_t p = period == 0 ? total : period;
      if (T* da = GradOf(as)) {
        for (std::int64_t i = 0; i < total; i += p) {
          for (std::int64_t j = 0; j < p; ++j) {
            da[i + j] += g[i + j] * bv[j + (period == 0 ? i : 0)];
          }
        }
      }
      if (T* db = GradOf(bs)) {
        for (std::int64_t i = 0; i < total; i += p) {
          for (std::int64_t j = 0; j < p; ++j) {
            db[j + (period == 0 ? i : 0)] += g[i + j] * av[i + j];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Scale(const Tensor<T>& a, T factor) {
  Tensor<T> out = Empty<T>(a.shape());
  const std::int64_t total = a.size();
  for (std::int64_t i = 0; i < total; ++i) out.data()[i] = a.data()[i] * factor;
  if (ShouldRecord<T>({&a})) {
    auto as = a.storage(), os = out.storage();
    Record<T>(out, {&a}, "scale", [as, os, factor, total] {
      T* da = as->EnsureGrad().data();
      const T* g = os->grad.data();
      for (std::int64_t i = 0; i < total; ++i) da[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> Relu(const Tensor<T>& a) {
  Tensor<T> out = Empty<T>(a.shape());
  const std::int64_t total = a.size();
  for (std::int64_t i = 0; i < total; ++i) {
    out.data()[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
  }
  if (ShouldRecord<T>({&a})) {
    auto as = a.storage(), os = out.storage();
    Record<T>(out, {&a}, "relu", [as, os, total] {
      T* da = as->EnsureGrad().data();
      const T* g = os->grad.data();
      const T* x = as->value.data();
      for (std::int64_t i = 0; i < total; ++i) {
        if (x[i] > T(0)) da[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Softmax(const Tensor<T>& x, int axis) {
  const AxisSplit sp = SplitAt(x.shape(), axis);
  Tensor<T> out = Empty<T>(x.shape());
  const T* xv = x.data();
  T* yv = out.data();
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    for (std::int64_t in = 0; in < sp.inner; ++in) {
      const std::int64_t base = o * sp.len * sp.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::int64_t l = 0; l < sp.len; ++l) {
        const T v = xv[base + l * sp.inner];
        if (!std::isfinite(v)) throw NumericError("softmax input is not finite");
        mx = std::max(mx, v);
      }
      T sum = 0;
      for (std::int64_t l = 0; l < sp.len; ++l) {
        const T e = std::exp(xv[base + l * sp.inner] - mx);
        yv[base + l * sp.inner] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (std::int64_t l = 0; l < sp.len; ++l) yv[base + l * sp.inner] *= inv;
    }
  }
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "softmax", [xs, os, sp] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      const T* y = os->value.data();
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        for (std::int64_t in = 0; in < sp.inner; ++in) {
          const std::int64_t base = o * sp.len * sp.inner + in;
          T dot = 0;
          for (std::int64_t l = 0; l < sp.len; ++l) {
            const auto idx = base + l * sp.inner;
            dot += g[idx] * y[idx];
          }
          for (std::int64_t l = 0; l < sp.len; ++l) {
            const auto idx = base + l * sp.inner;
            dx[idx] += y[idx] * (g[idx] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> MaskedSoftmax(const Tensor<T>& scores, const AttentionMask& mask) {
  if (scores.rank() != 4) {
    throw ShapeError("masked softmax expects [B,heads,queries,keys], got " +
                     ShapeToString(scores.shape()));
  }
  const std::int64_t nb = scores.dim(0), nh = scores.dim(1), nq = scores.dim(2),
                     nk = scores.dim(3);
  if (!mask.key_keep.empty() &&
      (mask.batch != nb || mask.keys != nk ||
       static_cast<std::int64_t>(mask.key_keep.size()) != nb * nk)) {
    throw ShapeError("attention mask does not match scores " + ShapeToString(scores.shape()));
  }
  Tensor<T> out = Empty<T>(scores.shape());
  const T* xv = scores.data();
  T* yv = out.data();
  for (std::int64_t b = 0; b < nb; ++b) {
    const std::uint8_t* keep = mask.key_keep.empty() ? nullptr : mask.key_keep.data() + b * nk;
    for (std::int64_t h = 0; h < nh; ++h) {
      for (std::int64_t q = 0; q < nq; ++q) {
        const std::int64_t row = ((b * nh + h) * nq + q) * nk;
        const std::int64_t limit = mask.causal ? std::min(nk, q + 1) : nk;
        T mx = -std::numeric_limits<T>::infinity();
        bool any = false;
        for (std::int64_t k = 0; k < limit; ++k) {
          if (keep && !keep[k]) continue;
          const T v = xv[row + k];
          if (!std::isfinite(v)) throw NumericError("attention scores are not finite");
          mx = std::max(mx, v);
          any = true;
        }
        if (!any) {
          std::fill(yv + row, yv + row + nk, T(0));
          continue;
        }
        T sum = 0;
        for (std::int64_t k = 0; k < nk; ++k) {
          if (k >= limit || (keep && !keep[k])) {
            yv[row + k] = T(0);
          } else {
            const T e = std::exp(xv[row + k] - mx);
            yv[row + k] = e;
            sum += e;
          }
        }
        const T inv = T(1) / sum;
        for (std::int64_t k = 0; k < limit; ++k) yv[row + k] *= inv;
      }
    }
  }
  if (ShouldRecord<T>({&scores})) {
    auto xs = scores.storage(), os = out.storage();
    const std::int64_t rows = nb * nh * nq;
    Record<T>(out, {&scores}, "masked_softmax", [xs, os, rows, nk] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      const T* y = os->value.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t base = r * nk;
        T dot = 0;
        for (std::int64_t k = 0; k < nk; ++k) dot += g[base + k] * y[base + k];
        for (std::int64_t k = 0; k < nk; ++k) dx[base + k] += y[base + k] * (g[base + k] - dot);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                    double eps) {
  const std::int64_t h = x.dim(-1);
  if (gain.size() != h || bias.size() != h) {
    throw ShapeError("layer norm parameters must have size " + std::to_string(h));
  }
  const std::int64_t rows = x.size() / h;
  Tensor<T> out = Empty<T>(x.shape());
  auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(x.size()));
  auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
  const T* xv = x.data();
  const T* gv = gain.data();
  const T* bv = bias.data();
  T* yv = out.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = xv + r * h;
    T mean = 0;
    for (std::int64_t j = 0; j < h; ++j) mean += xr[j];
    mean /= static_cast<T>(h);
    T var = 0;
    for (std::int64_t j = 0; j < h; ++j) {
      const T d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(h);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
    (*rstd)[r] = inv;
    for (std::int64_t j = 0; j < h; ++j) {
      const T xh = (xr[j] - mean) * inv;
      (*xhat)[r * h + j] = xh;
      yv[r * h + j] = xh * gv[j] + bv[j];
    }
  }
  if (ShouldRecord<T>({&x, &gain, &bias})) {
    auto xs = x.storage(), gs = gain.storage(), bs = bias.storage(), os = out.storage();
    Record<T>(out, {&x, &gain, &bias}, "layer_norm", [xs, gs, bs, os, xhat, rstd, rows, h] {
      const T* g = os->grad.data();
      const T* gv = gs->value.data();
      T* dx = GradOf(xs);
      T* dgain = GradOf(gs);
      T* dbias = GradOf(bs);
      std::vector<T> dxh(static_cast<std::size_t>(h));
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* gr = g + r * h;
        const T* xh = xhat->data() + r * h;
        if (dgain) {
          for (std::int64_t j = 0; j < h; ++j) dgain[j] += gr[j] * xh[j];
        }
        if (dbias) {
          for (std::int64_t j = 0; j < h; ++j) dbias[j] += gr[j];
        }
        if (dx) {
          T mean_d = 0, mean_dx = 0;
          for (std::int64_t j = 0; j < h; ++j) {
            dxh[j] = gr[j] * gv[j];
            mean_d += dxh[j];
            mean_dx += dxh[j] * xh[j];
          }
          mean_d /= static_cast<T>(h);
          mean_dx /= static_cast<T>(h);
          const T inv = (*rstd)[r];
          for (std::int64_t j = 0; j < h; ++j) {
            dx[r * h + j] += inv * (dxh[j] - mean_d - xh[j] * mean_dx);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> EmbeddingLookup(const Tensor<T>& table, std::span<const std::int32_t> ids,
                          const Shape& ids_shape) {
  if (table.rank() != 2) throw ShapeError("embedding table must be [V, H]");
  if (NumElements(ids_shape) != static_cast<std::int64_t>(ids.size())) {
    throw ShapeError("id count does not match " + ShapeToString(ids_shape));
  }
  const std::int64_t v = table.dim(0), h = table.dim(1);
  for (auto id : ids) {
    if (id < 0 || id >= v) {
      throw ContractError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(v));
    }
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(h);
  Tensor<T> out = Empty<T>(out_shape);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(table.data() + ids[i] * h, h, out.data() + static_cast<std::int64_t>(i) * h);
  }
  if (ShouldRecord<T>({&table})) {
    auto ts = table.storage(), os = out.storage();
    auto id_copy = std::make_shared<std::vector<std::int32_t>>(ids.begin(), ids.end());
    Record<T>(out, {&table}, "embedding_lookup", [ts, os, id_copy, h] {
      T* dt = ts->EnsureGrad().data();
      const T* g = os->grad.data();
      for (std::size_t i = 0; i < id_copy->size(); ++i) {
        T* row = dt + (*id_copy)[i] * h;
        const T* gr = g + static_cast<std::int64_t>(i) * h;
        for (std::int64_t j = 0; j < h; ++j) row[j] += gr[j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> WeightedEmbeddingMix(const Tensor<T>& probs, const Tensor<T>& table) {
  if (table.rank() != 2 || probs.dim(-1) != table.dim(0)) {
    throw ShapeError("weighted embedding mix: " + ShapeToString(probs.shape()) + " x " +
                     ShapeToString(table.shape()));
  }
  if (probs.rank() == 1) {
    return Reshape(MatMul(Reshape(probs, {1, probs.dim(0)}), table), {table.dim(1)});
  }
  return MatMul(probs, table);
}

template <typename T>
Tensor<T> CrossEntropyLabelSmoothed(const Tensor<T>& logits,
                                   std::span<const std::int32_t> targets,
                                   std::span<const std::uint8_t> keep, double smoothing) {
  if (logits.rank() != 2) throw ShapeError("cross entropy expects logits [N, V]");
  const std::int64_t n = logits.dim(0), v = logits.dim(1);
  if (static_cast<std::int64_t>(targets.size()) != n ||
      (!keep.empty() && static_cast<std::int64_t>(keep.size()) != n)) {
    throw ShapeError("cross entropy: target/mask length does not match logits rows");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ConfigError("label smoothing must lie in [0, 1)");
  }
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (keep.empty() || keep[i]) {
      if (targets[i] < 0 || targets[i] >= v) {
        throw ContractError("target id " + std::to_string(targets[i]) + " outside vocabulary");
      }
      ++count;
    }
  }
  if (count == 0) throw ContractError("cross entropy over zero positions has no mean");

  const double confidence = 1.0 - smoothing;
  const double spread = smoothing / static_cast<double>(v);
  auto probs = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n * v), T(0));
  double total = 0.0;
  const T* x = logits.data();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!(keep.empty() || keep[i])) continue;
    const T* row = x + i * v;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::int64_t j = 0; j < v; ++j) {
      if (!std::isfinite(row[j])) throw NumericError("logits are not finite");
      mx = std::max(mx, row[j]);
    }
    double sum = 0.0;
    for (std::int64_t j = 0; j < v; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
    const double log_z = static_cast<double>(mx) + std::log(sum);
    double sum_logp = 0.0;
    for (std::int64_t j = 0; j < v; ++j) {
      const double lp = static_cast<double>(row[j]) - log_z;
      sum_logp += lp;
      (*probs)[i * v + j] = static_cast<T>(std::exp(lp));
    }
    const double target_lp = static_cast<double>(row[targets[i]]) - log_z;
    total += -(confidence * target_lp + spread * sum_logp);
  }
  Tensor<T> out = Tensor<T>::Scalar(static_cast<T>(total / static_cast<double>(count)));
  if (ShouldRecord<T>({&logits})) {
    auto ls = logits.storage(), os = out.storage();
    auto tgt = std::make_shared<std::vector<std::int32_t>>(targets.begin(), targets.end());
    auto kp = std::make_shared<std::vector<std::uint8_t>>(keep.begin(), keep.end());
    Record<T>(out, {&logits}, "cross_entropy", [ls, os, probs, tgt, kp, n, v, count, confidence,
                                                spread] {
      T* dx = ls->EnsureGrad().data();
      const double scale = static_cast<double>(os->grad[0]) / static_cast<double>(count);
      for (std::int64_t i = 0; i < n; ++i) {
        if (!(kp->empty() || (*kp)[i])) continue;
        const std::int32_t y = (*tgt)[i];
        for (std::int64_t j = 0; j < v; ++j) {
          double target = spread + (j == y ? confidence : 0.0);
          dx[i * v + j] +=
              static_cast<T>(scale * (static_cast<double>((*probs)[i * v + j]) - target));
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, double rate, Rng* rng, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  if (rng == nullptr) throw ContractError("training-mode dropout needs an RNG stream");
  const std::int64_t total = x.size();
  auto mask = std::make_shared<std::vector<T>>(static_cast<std::size_t>(total));
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::int64_t i = 0; i < total; ++i) {
    (*mask)[i] = rng->Uniform() < rate ? T(0) : keep_scale;
  }
  Tensor<T> out = Empty<T>(x.shape());
  for (std::int64_t i = 0; i < total; ++i) out.data()[i] = x.data()[i] * (*mask)[i];
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "dropout", [xs, os, mask, total] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      for (std::int64_t i = 0; i < total; ++i) dx[i] += g[i] * (*mask)[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> Reshape(const Tensor<T>& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    throw ShapeError("cannot reshape " + ShapeToString(x.shape()) + " to " + ShapeToString(shape));
  }
  Tensor<T> out = Tensor<T>::FromValues(std::move(shape),
                                        std::vector<T>(x.values().begin(), x.values().end()));
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "reshape", [xs, os] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      const std::size_t total = os->grad.size();
      for (std::size_t i = 0; i < total; ++i) dx[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> Permute(const Tensor<T>& x, const std::vector<int>& perm) {
  const int r = x.rank();
  if (static_cast<int>(perm.size()) != r) throw ShapeError("permutation rank mismatch");
  std::vector<int> seen(perm);
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < r; ++i) {
    if (seen[i] != i) throw ShapeError("invalid permutation");
  }
  Shape out_shape(r);
  for (int i = 0; i < r; ++i) out_shape[i] = x.shape()[perm[i]];
  // Strides of the input, reordered to follow the output axes.
  std::vector<std::int64_t> in_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * x.shape()[i + 1];
  auto src_stride = std::make_shared<std::vector<std::int64_t>>(r);
  for (int i = 0; i < r; ++i) (*src_stride)[i] = in_strides[perm[i]];
  Tensor<T> out = Empty<T>(out_shape);

  // Walks the output in row-major order, one innermost run at a time, and
  // maps each element to its source offset.
  auto for_each = [out_shape, src_stride, r](auto&& fn) {
    const std::int64_t total = NumElements(out_shape);
    if (total == 0) return;
    const std::int64_t inner = r == 0 ? 1 : out_shape[r - 1];
    const std::int64_t inner_stride = r == 0 ? 0 : (*src_stride)[r - 1];
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t src = 0;
    for (std::int64_t o = 0; o < total; o += inner) {
      fn(o, src, inner, inner_stride);
      for (int d = r - 2; d >= 0; --d) {
        ++idx[d];
        src += (*src_stride)[d];
        if (idx[d] < out_shape[d]) break;
        src -= (*src_stride)[d] * out_shape[d];
        idx[d] = 0;
      }
    }
  };
  const T* xv = x.data();
  T* ov = out.data();
  for_each([&](std::int64_t o, std::int64_t s, std::int64_t len, std::int64_t st) {
    for (std::int64_t j = 0; j < len; ++j) ov[o + j] = xv[s + j * st];
  });
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "permute", [xs, os, for_each] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      for_each([&](std::int64_t o, std::int64_t s, std::int64_t len, std::int64_t st) {
        for (std::int64_t j = 0; j < len; ++j) dx[s + j * st] += g[o + j];
      });
    });
  }
  return out;
}

template <typename T>
Tensor<T> Transpose(const Tensor<T>& x, int axis0, int axis1) {
  std::vector<int> perm(x.rank());
  std::iota(perm.begin(), perm.end(), 0);
  axis0 = NormalizeAxis(axis0, x.rank());
  axis1 = NormalizeAxis(axis1, x.rank());
  std::swap(perm[axis0], perm[axis1]);
  return Permute(x, perm);
}

template <typename T>
Tensor<T> Concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const int r = parts[0].rank();
  axis = NormalizeAxis(axis, r);
  Shape out_shape = parts[0].shape();
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.rank() != r) throw ShapeError("concat rank mismatch");
    for (int d = 0; d < r; ++d) {
      if (d != axis && p.shape()[d] != parts[0].shape()[d]) {
        throw ShapeError("concat shape mismatch: " + ShapeToString(p.shape()) + " vs " +
                         ShapeToString(parts[0].shape()));
      }
    }
    out_shape[axis] += p.shape()[axis];
  }
  const AxisSplit sp = SplitAt(out_shape, axis);
  Tensor<T> out = Empty<T>(out_shape);
  std::vector<std::int64_t> offsets;
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::int64_t len = p.shape()[axis];
    for (std::int64_t o = 0; o < sp.outer; ++o) {
      std::copy_n(p.data() + o * len * sp.inner, len * sp.inner,
                  out.data() + (o * sp.len + offset) * sp.inner);
    }
    offset += len;
  }
  std::vector<const Tensor<T>*> inputs;
  bool record = Tape<T>::Active() != nullptr && std::any_of(parts.begin(), parts.end(),
                                                            [](const Tensor<T>& p) {
                                                              return p.requires_grad();
                                                            });
  if (record) {
    std::vector<StoragePtr<T>> stores;
    for (const auto& p : parts) {
      inputs.push_back(&p);
      stores.push_back(p.storage());
    }
    auto os = out.storage();
    Record<T>(out, inputs, "concat", [stores, os, offsets, sp, axis] {
      const T* g = os->grad.data();
      for (std::size_t pi = 0; pi < stores.size(); ++pi) {
        T* dp = GradOf(stores[pi]);
        if (!dp) continue;
        const std::int64_t len = stores[pi]->shape[axis];
        for (std::int64_t o = 0; o < sp.outer; ++o) {
          const T* src = g + (o * sp.len + offsets[pi]) * sp.inner;
          T* dst = dp + o * len * sp.inner;
          for (std::int64_t j = 0; j < len * sp.inner; ++j) dst[j] += src[j];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Slice(const Tensor<T>& x, int axis, std::int64_t begin, std::int64_t end) {
  axis = NormalizeAxis(axis, x.rank());
  const AxisSplit sp = SplitAt(x.shape(), axis);
  if (begin < 0 || end > sp.len || begin >= end) {
    throw ShapeError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of range for " + ShapeToString(x.shape()));
  }
  Shape out_shape = x.shape();
  const std::int64_t len = end - begin;
  out_shape[axis] = len;
  Tensor<T> out = Empty<T>(out_shape);
  for (std::int64_t o = 0; o < sp.outer; ++o) {
    std::copy_n(x.data() + (o * sp.len + begin) * sp.inner, len * sp.inner,
                out.data() + o * len * sp.inner);
  }
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "slice", [xs, os, sp, begin, len] {
      T* dx = xs->EnsureGrad().data();
      const T* g = os->grad.data();
      for (std::int64_t o = 0; o < sp.outer; ++o) {
        T* dst = dx + (o * sp.len + begin) * sp.inner;
        const T* src = g + o * len * sp.inner;
        for (std::int64_t j = 0; j < len * sp.inner; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> Sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.values()) total += v;
  Tensor<T> out = Tensor<T>::Scalar(total);
  if (ShouldRecord<T>({&x})) {
    auto xs = x.storage(), os = out.storage();
    Record<T>(out, {&x}, "sum", [xs, os] {
      T* dx = xs->EnsureGrad().data();
      const T g = os->grad[0];
      for (std::size_t i = 0; i < xs->value.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

#define SSDEC_INSTANTIATE_OPS(T)                                                         \
  template void Gemm<T>(std::int64_t, std::int64_t, std::int64_t, const T*, const T*, T*, \
                        bool);                                                           \
  template Tensor<T> MatMul<T>(const Tensor<T>&, const Tensor<T>&, bool);                \
  template Tensor<T> Add<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> Mul<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> Scale<T>(const Tensor<T>&, T);                                      \
  template Tensor<T> Relu<T>(const Tensor<T>&);                                          \
  template Tensor<T> Softmax<T>(const Tensor<T>&, int);                                  \
  template Tensor<T> MaskedSoftmax<T>(const Tensor<T>&, const AttentionMask&);           \
  template Tensor<T> LayerNorm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                  double);                                               \
  template Tensor<T> EmbeddingLookup<T>(const Tensor<T>&, std::span<const std::int32_t>, \
                                        const Shape&);                                   \
  template Tensor<T> WeightedEmbeddingMix<T>(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> CrossEntropyLabelSmoothed<T>(const Tensor<T>&,                      \
                                                  std::span<const std::int32_t>,         \
                                                  std::span<const std::uint8_t>, double); \
  template Tensor<T> Dropout<T>(const Tensor<T>&, double, Rng*, bool);                   \
  template Tensor<T> Reshape<T>(const Tensor<T>&, Shape);                                \
  template Tensor<T> Permute<T>(const Tensor<T>&, const std::vector<int>&);              \
  template Tensor<T> Transpose<T>(const Tensor<T>&, int, int);                           \
  template Tensor<T> Concat<T>(const std::vector<Tensor<T>>&, int);                      \
  template Tensor<T> Slice<T>(const Tensor<T>&, int, std::int64_t, std::int64_t);        \
  template Tensor<T> Sum<T>(const Tensor<T>&);

SSDEC_INSTANTIATE_OPS(float)
SSDEC_INSTANTIATE_OPS(double)

#undef SSDEC_INSTANTIATE_OPS

}  // namespace ssdec
