#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "firebench/raster.hpp"
#include "firebench/rng.hpp"

// Minimal NCHW tensor type and tape-based reverse-mode differentiation,
// with exactly the operator vocabulary the burnt-area model needs. The
// scalar type is a template parameter: double for verification (gradient
// checks, bit-reproducible sums), float for training and inference.
//
// Reductions accumulate in a fixed row-major order and matrix products
// accumulate each output element over ascending k, so re-running a forward
// pass with equal inputs produces bit-identical values regardless of
// threading.
namespace firebench::nn {

struct Shape {
  int n = 1, c = 1, h = 1, w = 1;

  bool operator==(const Shape&) const = default;
  std::int64_t count() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0))
      : shape(s), data(static_cast<size_t>(s.count()), fill) {}

  T& at(int n, int c, int y, int x) {
    return data[((static_cast<size_t>(n) * shape.c + c) * shape.h + y) *
                    shape.w +
                x];
  }
  T at(int n, int c, int y, int x) const {
    return data[((static_cast<size_t>(n) * shape.c + c) * shape.h + y) *
                    shape.w +
                x];
  }
  T* plane(int n, int c) {
    return data.data() +
           (static_cast<size_t>(n) * shape.c + c) * shape.h * shape.w;
  }
  const T* plane(int n, int c) const {
    return data.data() +
           (static_cast<size_t>(n) * shape.c + c) * shape.h * shape.w;
  }
};

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily, zero-filled
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.data.empty()) grad = Tensor<T>(value.shape);
  }
  void zero_grad() {
    std::fill(grad.data.begin(), grad.data.end(), T(0));
  }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

enum class Padding { Same, Valid };
enum class BnMode { Train, Eval };

// ---------------------------------------------------------------------------
// Shape arithmetic (shared with the symbolic shape planner).

inline int conv_out_size(int in, int kernel, int stride, Padding pad) {
  if (pad == Padding::Same) return (in + stride - 1) / stride;
  return (in - kernel) / stride + 1;
}

inline int same_pad_begin(int in, int kernel, int stride) {
  int out = conv_out_size(in, kernel, stride, Padding::Same);
  int total = std::max((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

// ---------------------------------------------------------------------------
// Deterministic matrix products. Row-major, each output element accumulates
// over ascending k; parallel rows do not change per-element order.

// C (MxN) [+]= A (MxK) * B (KxN)
template <class T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C,
             bool accumulate) {
  constexpr int JB = 1024;  // column block; keeps the B panel cache-resident
  const int n_blocks = (N + JB - 1) / JB;
#pragma omp parallel for schedule(static) if (static_cast<long long>(M) * N * K > 65536)
  for (int jb = 0; jb < n_blocks; ++jb) {
    const int j0 = jb * JB, j1 = std::min(j0 + JB, N);
    for (int i = 0; i < M; ++i) {
      T* ci = C + static_cast<size_t>(i) * N;
      if (!accumulate) std::fill(ci + j0, ci + j1, T(0));
      const T* ai = A + static_cast<size_t>(i) * K;
      for (int k = 0; k < K; ++k) {
        T aik = ai[k];
        const T* bk = B + static_cast<size_t>(k) * N;
        for (int j = j0; j < j1; ++j) ci[j] += aik * bk[j];
      }
    }
  }
}

// C (MxN) [+]= A (MxK) * B(NxK)^T. Typical use has small M and N with a
// long shared K axis; the j-outer order streams each B row once while the
// A panel stays cached. The float path reduces over a fixed 8-lane block
// (vectorizable, still bit-deterministic run to run); the double path keeps
// the strict sequential order required of the verification mode.
template <class T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C,
             bool accumulate) {
#pragma omp parallel for schedule(static) if (static_cast<long long>(M) * N * K > 65536)
  for (int j = 0; j < N; ++j) {
    const T* bj = B + static_cast<size_t>(j) * K;
    for (int i = 0; i < M; ++i) {
      const T* ai = A + static_cast<size_t>(i) * K;
      T acc = accumulate ? C[static_cast<size_t>(i) * N + j] : T(0);
      if constexpr (std::is_same_v<T, float>) {
        float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
        int k = 0;
        for (; k + 8 <= K; k += 8)
          for (int l = 0; l < 8; ++l) lanes[l] += ai[k + l] * bj[k + l];
        float tail = 0;
        for (; k < K; ++k) tail += ai[k] * bj[k];
        acc += ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
               ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
      } else {
        for (int k = 0; k < K; ++k) acc += ai[k] * bj[k];
      }
      C[static_cast<size_t>(i) * N + j] = acc;
    }
  }
}

// C (MxN) [+]= A (KxM)^T * B (KxN)
template <class T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C,
             bool accumulate) {
  constexpr int JB = 1024;
  const int n_blocks = (N + JB - 1) / JB;
#pragma omp parallel for schedule(static) if (static_cast<long long>(M) * N * K > 65536)
  for (int jb = 0; jb < n_blocks; ++jb) {
    const int j0 = jb * JB, j1 = std::min(j0 + JB, N);
    for (int i = 0; i < M; ++i) {
      T* ci = C + static_cast<size_t>(i) * N;
      if (!accumulate) std::fill(ci + j0, ci + j1, T(0));
      for (int k = 0; k < K; ++k) {
        T aki = A[static_cast<size_t>(k) * M + i];
        const T* bk = B + static_cast<size_t>(k) * N;
        for (int j = j0; j < j1; ++j) ci[j] += aki * bk[j];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Raw kernels.

// Reusable per-thread conv workspaces; a tape is thread-confined, so
// thread_local scratch never races.
template <class T>
std::vector<T>& scratch_buffer(int which, size_t count) {
  thread_local std::vector<T> bufs[4];
  auto& b = bufs[which];
  if (b.size() < count) b.resize(count);
  return b;
}

// Patch matrix layout: row (c, ky, kx), column (sample offset + oy*OW+ox).
// col_stride is the full row length when several samples share one matrix.
template <class T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride,
            int pad_top, int pad_left, int OH, int OW, T* cols,
            std::int64_t col_stride, std::int64_t col_offset) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        T* row = cols +
                 ((static_cast<std::int64_t>(c) * kh + ky) * kw + kx) *
                     col_stride +
                 col_offset;
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad_top + ky;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad_left + kx;
            row[oy * OW + ox] =
                (iy >= 0 && iy < H && ix >= 0 && ix < W)
                    ? x[(static_cast<size_t>(c) * H + iy) * W + ix]
                    : T(0);
          }
        }
      }
}

template <class T>
void col2im_add(const T* cols, int C, int H, int W, int kh, int kw, int stride,
                int pad_top, int pad_left, int OH, int OW, T* x,
                std::int64_t col_stride, std::int64_t col_offset) {
  for (int c = 0; c < C; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = cols +
                       ((static_cast<std::int64_t>(c) * kh + ky) * kw + kx) *
                           col_stride +
                       col_offset;
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            x[(static_cast<size_t>(c) * H + iy) * W + ix] += row[oy * OW + ox];
          }
        }
      }
}

template <class T>
T stable_sigmoid(T z) {
  if (z >= T(0)) {
    T e = std::exp(-z);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(z);
  return e / (T(1) + e);
}

// ---------------------------------------------------------------------------
// Batch-norm parameter bundle. gamma/beta are learnable; the running
// statistics are buffers updated only by Train-mode forwards:
// running = momentum * running + (1 - momentum) * batch.
template <class T>
struct BatchNormParams {
  Var<T> gamma;
  Var<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.9);
  T epsilon = T(1e-5);
};

// ---------------------------------------------------------------------------
// Tape: eager forward evaluation plus a recorded list of backward closures.
// A tape is confined to one thread. backward() consumes the recorded graph;
// calling it again without a new forward is an error. With recording
// disabled the same ops serve as the plain inference path.
template <class T>
class Tape {
 public:
  void set_recording(bool r) { recording_ = r; }
  bool recording() const { return recording_; }
  size_t recorded_ops() const { return ops_.size(); }

  Var<T> leaf(Tensor<T> value, bool requires_grad) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return node;
  }

  // Cross-correlation with optional bias. Weight layout (OC, IC, KH, KW).
  Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, int stride, Padding pad) {
    const Shape& xs = x->value.shape;
    const Shape& ws = w->value.shape;
    if (ws.c != xs.c)
      throw Error("conv2d: input has " + std::to_string(xs.c) +
                  " channels, kernel expects " + std::to_string(ws.c));
    if (stride < 1) throw Error("conv2d: stride must be >= 1");
    if (b && b->value.shape.count() != ws.n)
      throw Error("conv2d: bias size must equal out_channels");

    const int OC = ws.n, IC = ws.c, KH = ws.h, KW = ws.w;
    const int OH = conv_out_size(xs.h, KH, stride, pad);
    const int OW = conv_out_size(xs.w, KW, stride, pad);
    const int pt = pad == Padding::Same ? same_pad_begin(xs.h, KH, stride) : 0;
    const int pl = pad == Padding::Same ? same_pad_begin(xs.w, KW, stride) : 0;
    const int K = IC * KH * KW, P = OH * OW, N = xs.n;
    const std::int64_t BP = static_cast<std::int64_t>(N) * P;

    // One patch matrix spans the whole batch.
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({N, OC, OH, OW});
    {
      auto& cols = scratch_buffer<T>(0, static_cast<size_t>(K) * BP);
      for (int n = 0; n < N; ++n)
        im2col(x->value.plane(n, 0), IC, xs.h, xs.w, KH, KW, stride, pt, pl,
               OH, OW, cols.data(), BP, static_cast<std::int64_t>(n) * P);
      auto& ybuf = scratch_buffer<T>(1, static_cast<size_t>(OC) * BP);
      gemm_nn(OC, static_cast<int>(BP), K, w->value.data.data(), cols.data(),
              ybuf.data(), false);
      for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < OC; ++oc) {
          const T* src = ybuf.data() + static_cast<std::int64_t>(oc) * BP +
                         static_cast<std::int64_t>(n) * P;
          T* dst = out->value.plane(n, oc);
          T bias = b ? b->value.data[oc] : T(0);
          for (int p = 0; p < P; ++p) dst[p] = src[p] + bias;
        }
    }

    out->requires_grad =
        x->requires_grad || w->requires_grad || (b && b->requires_grad);
    if (recording_ && out->requires_grad) {
      int H = xs.h, W = xs.w;
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        if (w->requires_grad) w->ensure_grad();
        if (x->requires_grad) x->ensure_grad();
        if (b && b->requires_grad) b->ensure_grad();

        auto& dybuf = scratch_buffer<T>(1, static_cast<size_t>(OC) * BP);
        for (int n = 0; n < N; ++n)
          for (int oc = 0; oc < OC; ++oc) {
            const T* src = out->grad.plane(n, oc);
            T* dst = dybuf.data() + static_cast<std::int64_t>(oc) * BP +
                     static_cast<std::int64_t>(n) * P;
            for (int p = 0; p < P; ++p) dst[p] = src[p];
          }

        if (b && b->requires_grad)
          for (int oc = 0; oc < OC; ++oc) {
            const T* row = dybuf.data() + static_cast<std::int64_t>(oc) * BP;
            T acc = T(0);
            for (std::int64_t p = 0; p < BP; ++p) acc += row[p];
            b->grad.data[oc] += acc;
          }

        if (w->requires_grad) {
          auto& bcols = scratch_buffer<T>(0, static_cast<size_t>(K) * BP);
          for (int n = 0; n < N; ++n)
            im2col(x->value.plane(n, 0), IC, H, W, KH, KW, stride, pt, pl, OH,
                   OW, bcols.data(), BP, static_cast<std::int64_t>(n) * P);
          gemm_nt(OC, K, static_cast<int>(BP), dybuf.data(), bcols.data(),
                  w->grad.data.data(), true);
        }
        if (x->requires_grad) {
          auto& bdcols = scratch_buffer<T>(2, static_cast<size_t>(K) * BP);
          gemm_tn(K, static_cast<int>(BP), OC, w->value.data.data(),
                  dybuf.data(), bdcols.data(), false);
          for (int n = 0; n < N; ++n)
            col2im_add(bdcols.data(), IC, H, W, KH, KW, stride, pt, pl, OH, OW,
                       x->grad.plane(n, 0), BP,
                       static_cast<std::int64_t>(n) * P);
        }
      });
    }
        return out;
  }

  // Transposed convolution, fixed kernel 2 / stride 2 (the only
  // configuration the decoder uses): each input pixel scatters
  // value * kernel into a disjoint 2x2 output block. Weight layout
  // (OC, IC, 2, 2).
  Var<T> transposed_conv2d(Var<T> x, Var<T> w) {
    const Shape& xs = x->value.shape;
    const Shape& ws = w->value.shape;
    if (ws.h != 2 || ws.w != 2)
      throw Error("transposed_conv2d: only kernel 2 / stride 2 is supported");
    if (ws.c != xs.c) throw Error("transposed_conv2d: channel mismatch");
    const int OC = ws.n, IC = ws.c, H = xs.h, W = xs.w, N = xs.n;

    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({N, OC, 2 * H, 2 * W});
    for (int n = 0; n < N; ++n)
      for (int oc = 0; oc < OC; ++oc) {
        T* y = out->value.plane(n, oc);
        for (int ic = 0; ic < IC; ++ic) {
          const T* xi = x->value.plane(n, ic);
          const T* k = &w->value.at(oc, ic, 0, 0);
          for (int i = 0; i < H; ++i) {
            T* y0 = y + (2 * i) * (2 * W);
            T* y1 = y0 + 2 * W;
            for (int j = 0; j < W; ++j) {
              T v = xi[i * W + j];
              y0[2 * j] += v * k[0];
              y0[2 * j + 1] += v * k[1];
              y1[2 * j] += v * k[2];
              y1[2 * j + 1] += v * k[3];
            }
          }
        }
      }

    out->requires_grad = x->requires_grad || w->requires_grad;
    if (recording_ && out->requires_grad) {
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        if (x->requires_grad) x->ensure_grad();
        if (w->requires_grad) w->ensure_grad();
        for (int n = 0; n < N; ++n)
          for (int oc = 0; oc < OC; ++oc) {
            const T* dy = out->grad.plane(n, oc);
            for (int ic = 0; ic < IC; ++ic) {
              const T* k = &w->value.at(oc, ic, 0, 0);
              const T* xi = x->value.plane(n, ic);
              T* dxi = x->requires_grad ? x->grad.plane(n, ic) : nullptr;
              T* dk = w->requires_grad ? &w->grad.at(oc, ic, 0, 0) : nullptr;
              for (int i = 0; i < H; ++i) {
                const T* d0 = dy + (2 * i) * (2 * W);
                const T* d1 = d0 + 2 * W;
                for (int j = 0; j < W; ++j) {
                  T g0 = d0[2 * j], g1 = d0[2 * j + 1];
                  T g2 = d1[2 * j], g3 = d1[2 * j + 1];
                  if (dxi)
                    dxi[i * W + j] +=
                        g0 * k[0] + g1 * k[1] + g2 * k[2] + g3 * k[3];
                  if (dk) {
                    T v = xi[i * W + j];
                    dk[0] += v * g0;
                    dk[1] += v * g1;
                    dk[2] += v * g2;
                    dk[3] += v * g3;
                  }
                }
              }
            }
          }
      });
    }
    return out;
  }

  Var<T> batch_norm(Var<T> x, BatchNormParams<T>& bn, BnMode mode) {
    const Shape& xs = x->value.shape;
    const int C = xs.c;
    if (bn.gamma->value.shape.count() != C ||
        bn.running_mean.shape.count() != C)
      throw Error("batch_norm: channel mismatch");

    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>(xs);
    const std::int64_t plane = static_cast<std::int64_t>(xs.h) * xs.w;
    const std::int64_t m = static_cast<std::int64_t>(xs.n) * plane;

    std::vector<T> mean(C), var(C), inv_std(C);
    if (mode == BnMode::Train) {
      for (int c = 0; c < C; ++c) {
        T acc = T(0);
        for (int n = 0; n < xs.n; ++n) {
          const T* p = x->value.plane(n, c);
          for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
        }
        mean[c] = acc / static_cast<T>(m);
        T vacc = T(0);
        for (int n = 0; n < xs.n; ++n) {
          const T* p = x->value.plane(n, c);
          for (std::int64_t i = 0; i < plane; ++i) {
            T d = p[i] - mean[c];
            vacc += d * d;
          }
        }
        var[c] = vacc / static_cast<T>(m);  // population variance
        bn.running_mean.data[c] =
            bn.momentum * bn.running_mean.data[c] + (T(1) - bn.momentum) * mean[c];
        bn.running_var.data[c] =
            bn.momentum * bn.running_var.data[c] + (T(1) - bn.momentum) * var[c];
      }
    } else {
      for (int c = 0; c < C; ++c) {
        mean[c] = bn.running_mean.data[c];
        var[c] = bn.running_var.data[c];
      }
    }
    for (int c = 0; c < C; ++c)
      inv_std[c] = T(1) / std::sqrt(var[c] + bn.epsilon);

    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < C; ++c) {
        const T* p = x->value.plane(n, c);
        T* y = out->value.plane(n, c);
        T g = bn.gamma->value.data[c], b = bn.beta->value.data[c];
        for (std::int64_t i = 0; i < plane; ++i)
          y[i] = g * (p[i] - mean[c]) * inv_std[c] + b;
      }

    out->requires_grad = x->requires_grad || bn.gamma->requires_grad ||
                         bn.beta->requires_grad;
    if (recording_ && out->requires_grad) {
      Var<T> gamma = bn.gamma, beta = bn.beta;
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        const Shape s = x->value.shape;
        if (x->requires_grad) x->ensure_grad();
        if (gamma->requires_grad) gamma->ensure_grad();
        if (beta->requires_grad) beta->ensure_grad();
        for (int c = 0; c < C; ++c) {
          T sum_dy = T(0), sum_dy_xhat = T(0);
          for (int n = 0; n < s.n; ++n) {
            const T* dy = out->grad.plane(n, c);
            const T* p = x->value.plane(n, c);
            for (std::int64_t i = 0; i < plane; ++i) {
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * (p[i] - mean[c]) * inv_std[c];
            }
          }
          if (beta->requires_grad) beta->grad.data[c] += sum_dy;
          if (gamma->requires_grad) gamma->grad.data[c] += sum_dy_xhat;
          if (!x->requires_grad) continue;
          T g = gamma->value.data[c];
          if (mode == BnMode::Train) {
            // Full train-mode gradient through the batch statistics.
            for (int n = 0; n < s.n; ++n) {
              const T* dy = out->grad.plane(n, c);
              const T* p = x->value.plane(n, c);
              T* dx = x->grad.plane(n, c);
              for (std::int64_t i = 0; i < plane; ++i) {
                T xhat = (p[i] - mean[c]) * inv_std[c];
                dx[i] += g * inv_std[c] *
                         (dy[i] - sum_dy / static_cast<T>(m) -
                          xhat * sum_dy_xhat / static_cast<T>(m));
              }
            }
          } else {
            for (int n = 0; n < s.n; ++n) {
              const T* dy = out->grad.plane(n, c);
              T* dx = x->grad.plane(n, c);
              for (std::int64_t i = 0; i < plane; ++i)
                dx[i] += g * inv_std[c] * dy[i];
            }
          }
        }
      });
    }
    return out;
  }

  Var<T> relu(Var<T> x) {
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>(x->value.shape);
    for (size_t i = 0; i < x->value.data.size(); ++i)
      out->value.data[i] = std::max(x->value.data[i], T(0));
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        for (size_t i = 0; i < x->value.data.size(); ++i)
          if (x->value.data[i] > T(0)) x->grad.data[i] += out->grad.data[i];
      });
    return out;
  }

  Var<T> sigmoid(Var<T> x) {
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>(x->value.shape);
    for (size_t i = 0; i < x->value.data.size(); ++i)
      out->value.data[i] = stable_sigmoid(x->value.data[i]);
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        for (size_t i = 0; i < x->value.data.size(); ++i) {
          T y = out->value.data[i];
          x->grad.data[i] += out->grad.data[i] * y * (T(1) - y);
        }
      });
    return out;
  }

  Var<T> avg_pool2(Var<T> x) {
    const Shape& xs = x->value.shape;
    if (xs.h % 2 != 0 || xs.w % 2 != 0)
      throw Error("avg_pool2: spatial dims must be even, got " + xs.str());
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({xs.n, xs.c, xs.h / 2, xs.w / 2});
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const T* p = x->value.plane(n, c);
        T* y = out->value.plane(n, c);
        for (int i = 0; i < xs.h / 2; ++i)
          for (int j = 0; j < xs.w / 2; ++j) {
            const T* r0 = p + (2 * i) * xs.w + 2 * j;
            const T* r1 = r0 + xs.w;
            y[i * (xs.w / 2) + j] =
                (r0[0] + r0[1] + r1[0] + r1[1]) / T(4);
          }
      }
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        for (int n = 0; n < xs.n; ++n)
          for (int c = 0; c < xs.c; ++c) {
            T* dx = x->grad.plane(n, c);
            const T* dy = out->grad.plane(n, c);
            for (int i = 0; i < xs.h / 2; ++i)
              for (int j = 0; j < xs.w / 2; ++j) {
                T g = dy[i * (xs.w / 2) + j] / T(4);
                T* r0 = dx + (2 * i) * xs.w + 2 * j;
                T* r1 = r0 + xs.w;
                r0[0] += g;
                r0[1] += g;
                r1[0] += g;
                r1[1] += g;
              }
          }
      });
    return out;
  }

  Var<T> concat_channels(const std::vector<Var<T>>& xs) {
    if (xs.empty()) throw Error("concat_channels: empty input list");
    const Shape& s0 = xs[0]->value.shape;
    int total_c = 0;
    for (const auto& x : xs) {
      const Shape& s = x->value.shape;
      if (s.n != s0.n || s.h != s0.h || s.w != s0.w)
        throw Error("concat_channels: batch/spatial dims differ");
      total_c += s.c;
    }
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({s0.n, total_c, s0.h, s0.w});
    for (int n = 0; n < s0.n; ++n) {
      int off = 0;
      for (const auto& x : xs) {
        const Shape& s = x->value.shape;
        std::copy(x->value.plane(n, 0),
                  x->value.plane(n, 0) +
                      static_cast<size_t>(s.c) * s.h * s.w,
                  out->value.plane(n, off));
        off += s.c;
      }
    }
    bool rg = false;
    for (const auto& x : xs) rg = rg || x->requires_grad;
    out->requires_grad = rg;
    if (recording_ && rg)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        for (int n = 0; n < s0.n; ++n) {
          int off = 0;
          for (const auto& x : xs) {
            const Shape& s = x->value.shape;
            if (x->requires_grad) {
              x->ensure_grad();
              const T* dy = out->grad.plane(n, off);
              T* dx = x->grad.plane(n, 0);
              size_t count = static_cast<size_t>(s.c) * s.h * s.w;
              for (size_t i = 0; i < count; ++i) dx[i] += dy[i];
            }
            off += s.c;
          }
        }
      });
    return out;
  }

  Var<T> sum(Var<T> x) {
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({1, 1, 1, 1});
    T acc = T(0);
    for (T v : x->value.data) acc += v;
    out->value.data[0] = acc;
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        T g = out->grad.data[0];
        for (size_t i = 0; i < x->grad.data.size(); ++i) x->grad.data[i] += g;
      });
    return out;
  }

  Var<T> square(Var<T> x) {
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>(x->value.shape);
    for (size_t i = 0; i < x->value.data.size(); ++i)
      out->value.data[i] = x->value.data[i] * x->value.data[i];
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        for (size_t i = 0; i < x->value.data.size(); ++i)
          x->grad.data[i] += T(2) * x->value.data[i] * out->grad.data[i];
      });
    return out;
  }

  Var<T> scale(Var<T> x, T s) {
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>(x->value.shape);
    for (size_t i = 0; i < x->value.data.size(); ++i)
      out->value.data[i] = s * x->value.data[i];
    out->requires_grad = x->requires_grad;
    if (recording_ && out->requires_grad)
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        x->ensure_grad();
        for (size_t i = 0; i < x->value.data.size(); ++i)
          x->grad.data[i] += s * out->grad.data[i];
      });
    return out;
  }

  // Mean binary cross-entropy of sigmoid(logits) against targets. The loss
  // value clamps probabilities to [1e-7, 1 - 1e-7] like the metric; the
  // gradient uses the fused form (sigmoid(z) - t) / count, which is exact
  // wherever the clamp is inactive and numerically sound where it is.
  Var<T> bce_with_logits(Var<T> logits, const Tensor<T>& target) {
    if (!(logits->value.shape == target.shape))
      throw Error("bce_with_logits: shape mismatch");
    const T eps = T(1e-7);
    auto out = std::make_shared<Node<T>>();
    out->value = Tensor<T>({1, 1, 1, 1});
    const size_t count = logits->value.data.size();
    T acc = T(0);
    for (size_t i = 0; i < count; ++i) {
      T p = std::clamp(stable_sigmoid(logits->value.data[i]), eps, T(1) - eps);
      T t = target.data[i];
      acc += t * std::log(p) + (T(1) - t) * std::log(T(1) - p);
    }
    out->value.data[0] = -acc / static_cast<T>(count);
    out->requires_grad = logits->requires_grad;
    if (recording_ && out->requires_grad) {
      Tensor<T> tgt = target;
      ops_.push_back([=]() {
        if (out->grad.data.empty()) return;
        logits->ensure_grad();
        T g = out->grad.data[0] / static_cast<T>(count);
        for (size_t i = 0; i < count; ++i)
          logits->grad.data[i] +=
              g * (stable_sigmoid(logits->value.data[i]) - tgt.data[i]);
      });
    }
    return out;
  }

  // Reverse pass from a scalar loss. Seeds d(loss)/d(loss) = 1, runs the
  // recorded closures in reverse and clears the graph.
  void backward(Var<T> loss) {
    if (ops_.empty())
      throw Error("backward: no recorded forward graph");
    if (loss->value.shape.count() != 1)
      throw Error("backward: loss must be a scalar");
    loss->ensure_grad();
    loss->grad.data[0] = T(1);
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    ops_.clear();
  }

  void clear() { ops_.clear(); }

 private:
  std::vector<std::function<void()>> ops_;
  bool recording_ = true;
};

// ---------------------------------------------------------------------------
// Adaptive-moment optimizer.

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam(std::vector<Var<T>> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p->value.data.size(), T(0));
      v_.emplace_back(p->value.data.size(), T(0));
    }
  }

  void zero_grad() {
    for (auto& p : params_) {
      p->ensure_grad();
      p->zero_grad();
    }
  }

  void set_lr(double lr) { cfg_.lr = lr; }

  void step() {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, t_));
    const T corr2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, t_));
    const T lr = static_cast<T>(cfg_.lr), eps = static_cast<T>(cfg_.eps);
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (p->grad.data.empty()) continue;
      for (size_t i = 0; i < p->value.data.size(); ++i) {
        T g = p->grad.data[i];
        m_[k][i] = b1 * m_[k][i] + (T(1) - b1) * g;
        v_[k][i] = b2 * v_[k][i] + (T(1) - b2) * g * g;
        T mhat = m_[k][i] / corr1;
        T vhat = v_[k][i] / corr2;
        p->value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  std::vector<Var<T>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_, v_;
  int t_ = 0;
};

}  // namespace firebench::nn
