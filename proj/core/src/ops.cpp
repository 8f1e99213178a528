// Copyright (C) 2026 The STRIDE Authors
// SPDX-License-Identifier: Apache-2.0

#include "stride/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stride {

namespace {

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  check(s.size() == rank, ErrorCode::kShape,
        std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  require_rank(x.shape(), 3, "conv2d input");
  require_rank(w.shape(), 4, "conv2d kernel");
  const std::size_t H = x.dim(0), W = x.dim(1), Cin = x.dim(2);
  const std::size_t kh = w.dim(0), kw = w.dim(1), Cout = w.dim(3);
  check(w.dim(2) == Cin, ErrorCode::kShape,
        "conv2d: input has " + std::to_string(Cin) + " channels, kernel expects " + std::to_string(w.dim(2)));
  check(kh % 2 == 1 && kw % 2 == 1, ErrorCode::kShape, "conv2d: kernel extents must be odd");
  check(b.rank() == 1 && b.dim(0) == Cout, ErrorCode::kShape, "conv2d: bias must have Cout entries");

  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  BasicTensor<T> y({H, W, Cout});
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      T* yp = &y.at(i, j, 0);
      std::copy(b.data(), b.data() + Cout, yp);
      for (std::size_t di = 0; di < kh; ++di) {
        const long ii = static_cast<long>(i + di) - ph;
        if (ii < 0 || ii >= static_cast<long>(H)) continue;
        for (std::size_t dj = 0; dj < kw; ++dj) {
          const long jj = static_cast<long>(j + dj) - pw;
          if (jj < 0 || jj >= static_cast<long>(W)) continue;
          const T* xp = &x.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), 0);
          const T* wp = w.data() + (di * kw + dj) * Cin * Cout;
          for (std::size_t c = 0; c < Cin; ++c) {
            const T xv = xp[c];
            if (xv == T(0)) continue;
            const T* wr = wp + c * Cout;
            for (std::size_t o = 0; o < Cout; ++o) yp[o] += xv * wr[o];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy) {
  const std::size_t H = x.dim(0), W = x.dim(1), Cin = x.dim(2);
  const std::size_t kh = w.dim(0), kw = w.dim(1), Cout = w.dim(3);
  check(dy.shape() == Shape{H, W, Cout}, ErrorCode::kShape, "conv2d_backward: upstream " + shape_str(dy.shape()));

  const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
  Conv2dGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(w.shape()), BasicTensor<T>({Cout})};
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      const T* gp = &dy.at(i, j, 0);
      for (std::size_t o = 0; o < Cout; ++o) g.db[o] += gp[o];
      for (std::size_t di = 0; di < kh; ++di) {
        const long ii = static_cast<long>(i + di) - ph;
        if (ii < 0 || ii >= static_cast<long>(H)) continue;
        for (std::size_t dj = 0; dj < kw; ++dj) {
          const long jj = static_cast<long>(j + dj) - pw;
          if (jj < 0 || jj >= static_cast<long>(W)) continue;
          const std::size_t xoff = (static_cast<std::size_t>(ii) * W + static_cast<std::size_t>(jj)) * Cin;
          const T* xp = x.data() + xoff;
          T* dxp = g.dx.data() + xoff;
          const T* wp = w.data() + (di * kw + dj) * Cin * Cout;
          T* dwp = g.dw.data() + (di * kw + dj) * Cin * Cout;
          for (std::size_t c = 0; c < Cin; ++c) {
            const T* wr = wp + c * Cout;
            T acc = 0;
            for (std::size_t o = 0; o < Cout; ++o) acc += gp[o] * wr[o];
            dxp[c] += acc;
            const T xv = xp[c];
            if (xv == T(0)) continue;
            T* dwr = dwp + c * Cout;
            for (std::size_t o = 0; o < Cout; ++o) dwr[o] += xv * gp[o];
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> maxpool_h(const BasicTensor<T>& x) {
  require_rank(x.shape(), 3, "maxpool_h");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(H % 2 == 0, ErrorCode::kShape, "maxpool_h: odd height " + std::to_string(H));
  BasicTensor<T> y({H / 2, W, C});
  const std::size_t row = W * C;
  for (std::size_t i = 0; i < H / 2; ++i) {
    const T* a = x.data() + 2 * i * row;
    const T* b = a + row;
    T* out = y.data() + i * row;
    for (std::size_t k = 0; k < row; ++k) out[k] = b[k] > a[k] ? b[k] : a[k];
  }
  return y;
}

template <typename T>
BasicTensor<T> maxpool_h_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(dy.shape() == Shape{H / 2, W, C}, ErrorCode::kShape, "maxpool_h_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x.shape());
  const std::size_t row = W * C;
  for (std::size_t i = 0; i < H / 2; ++i) {
    const T* a = x.data() + 2 * i * row;
    const T* b = a + row;
    const T* g = dy.data() + i * row;
    T* da = dx.data() + 2 * i * row;
    T* db = da + row;
    for (std::size_t k = 0; k < row; ++k) {
      if (b[k] > a[k]) {
        db[k] = g[k];
      } else {
        da[k] = g[k];
      }
    }
  }
  return dx;
}

template <typename T>
BasicTensor<T> avgpool_w(const BasicTensor<T>& x) {
  require_rank(x.shape(), 3, "avgpool_w");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(W % 2 == 0, ErrorCode::kShape, "avgpool_w: odd width " + std::to_string(W));
  BasicTensor<T> y({H, W / 2, C});
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W / 2; ++j)
      for (std::size_t c = 0; c < C; ++c) y.at(i, j, c) = (x.at(i, 2 * j, c) + x.at(i, 2 * j + 1, c)) / T(2);
  return y;
}

template <typename T>
BasicTensor<T> avgpool_w_backward(const BasicTensor<T>& dy) {
  require_rank(dy.shape(), 3, "avgpool_w_backward");
  const std::size_t H = dy.dim(0), W2 = dy.dim(1), C = dy.dim(2);
  BasicTensor<T> dx({H, 2 * W2, C});
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W2; ++j)
      for (std::size_t c = 0; c < C; ++c) {
        const T g = dy.at(i, j, c) / T(2);
        dx.at(i, 2 * j, c) = g;
        dx.at(i, 2 * j + 1, c) = g;
      }
  return dx;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  check(x.rank() >= 1 && w.rank() == 2 && b.rank() == 1, ErrorCode::kShape, "dense: bad ranks");
  const std::size_t N = x.shape().back(), M = w.dim(1);
  check(w.dim(0) == N && b.dim(0) == M, ErrorCode::kShape,
        "dense: x " + shape_str(x.shape()) + " w " + shape_str(w.shape()) + " b " + shape_str(b.shape()));
  Shape out_shape = x.shape();
  out_shape.back() = M;
  BasicTensor<T> y(out_shape);
  const std::size_t rows = N == 0 ? 0 : x.size() / N;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * N;
    T* yr = y.data() + r * M;
    std::copy(b.data(), b.data() + M, yr);
    for (std::size_t n = 0; n < N; ++n) {
      const T xv = xr[n];
      if (xv == T(0)) continue;
      const T* wr = w.data() + n * M;
      for (std::size_t m = 0; m < M; ++m) yr[m] += xv * wr[m];
    }
  }
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy) {
  const std::size_t N = w.dim(0), M = w.dim(1);
  check(dy.shape().back() == M && dy.size() / M == x.size() / N, ErrorCode::kShape,
        "dense_backward: upstream " + shape_str(dy.shape()));
  DenseGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(w.shape()), BasicTensor<T>({M})};
  const std::size_t rows = x.size() / N;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * N;
    const T* gr = dy.data() + r * M;
    T* dxr = g.dx.data() + r * N;
    for (std::size_t m = 0; m < M; ++m) g.db[m] += gr[m];
    for (std::size_t n = 0; n < N; ++n) {
      const T* wr = w.data() + n * M;
      T* dwr = g.dw.data() + n * M;
      const T xv = xr[n];
      T acc = 0;
      for (std::size_t m = 0; m < M; ++m) {
        acc += gr[m] * wr[m];
        dwr[m] += xv * gr[m];
      }
      dxr[n] = acc;
    }
  }
  return g;
}

template <typename T>
T activate(T v, Activation kind) {
  switch (kind) {
    case Activation::kSigmoid:
      return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
    case Activation::kRelu:
      return v > T(0) ? v : T(0);
    case Activation::kTanh:
      return std::tanh(v);
  }
  return v;
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& x, Activation kind) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = activate(x[i], kind);
  return y;
}

template <typename T>
BasicTensor<T> activation_backward(const BasicTensor<T>& x, const BasicTensor<T>& y, const BasicTensor<T>& dy,
                                   Activation kind) {
  check(dy.shape() == x.shape(), ErrorCode::kShape, "activation_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (kind) {
      case Activation::kSigmoid:
        dx[i] = dy[i] * y[i] * (T(1) - y[i]);
        break;
      case Activation::kRelu:
        dx[i] = x[i] > T(0) ? dy[i] : T(0);
        break;
      case Activation::kTanh:
        dx[i] = dy[i] * (T(1) - y[i] * y[i]);
        break;
    }
  }
  return dx;
}

template <typename T>
BasicTensor<T> log_softmax_lastdim(const BasicTensor<T>& x) {
  check(x.rank() >= 1, ErrorCode::kShape, "log_softmax: scalar input");
  const std::size_t K = x.shape().back();
  BasicTensor<T> y(x.shape());
  for (std::size_t r = 0; K && r < x.size() / K; ++r) {
    const T* xr = x.data() + r * K;
    T* yr = y.data() + r * K;
    const T mx = *std::max_element(xr, xr + K);
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(xr[k] - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t k = 0; k < K; ++k) yr[k] = xr[k] - lse;
  }
  return y;
}

template <typename T>
BasicTensor<T> softmax_lastdim(const BasicTensor<T>& x) {
  check(x.rank() >= 1, ErrorCode::kShape, "softmax: scalar input");
  const std::size_t K = x.shape().back();
  BasicTensor<T> y(x.shape());
  for (std::size_t r = 0; K && r < x.size() / K; ++r) {
    const T* xr = x.data() + r * K;
    T* yr = y.data() + r * K;
    const T mx = *std::max_element(xr, xr + K);
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) {
      yr[k] = std::exp(xr[k] - mx);
      sum += yr[k];
    }
    for (std::size_t k = 0; k < K; ++k) yr[k] /= sum;
  }
  return y;
}

template <typename T>
BasicTensor<T> softmax_lastdim_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy) {
  check(dy.shape() == y.shape(), ErrorCode::kShape, "softmax_backward: upstream " + shape_str(dy.shape()));
  const std::size_t K = y.shape().back();
  BasicTensor<T> dx(y.shape());
  for (std::size_t r = 0; K && r < y.size() / K; ++r) {
    const T* yr = y.data() + r * K;
    const T* gr = dy.data() + r * K;
    T dot = 0;
    for (std::size_t k = 0; k < K; ++k) dot += yr[k] * gr[k];
    for (std::size_t k = 0; k < K; ++k) dx[r * K + k] = yr[k] * (gr[k] - dot);
  }
  return dx;
}

template <typename T>
BasicTensor<T> log_softmax_lastdim_backward(const BasicTensor<T>& logy, const BasicTensor<T>& dy) {
  check(dy.shape() == logy.shape(), ErrorCode::kShape, "log_softmax_backward: upstream " + shape_str(dy.shape()));
  const std::size_t K = logy.shape().back();
  BasicTensor<T> dx(logy.shape());
  for (std::size_t r = 0; K && r < logy.size() / K; ++r) {
    const T* lr = logy.data() + r * K;
    const T* gr = dy.data() + r * K;
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += gr[k];
    for (std::size_t k = 0; k < K; ++k) dx[r * K + k] = gr[k] - std::exp(lr[k]) * sum;
  }
  return dx;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  check(a.rank() == b.rank() && a.rank() >= 1, ErrorCode::kShape, "concat: rank mismatch");
  for (std::size_t i = 0; i + 1 < a.rank(); ++i)
    check(a.dim(i) == b.dim(i), ErrorCode::kShape,
          "concat: leading extents differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  Shape s = a.shape();
  s.back() = ca + cb;
  BasicTensor<T> y(s);
  const std::size_t rows = shape_numel(Shape(a.shape().begin(), a.shape().end() - 1));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(a.data() + r * ca, a.data() + (r + 1) * ca, y.data() + r * (ca + cb));
    std::copy(b.data() + r * cb, b.data() + (r + 1) * cb, y.data() + r * (ca + cb) + ca);
  }
  return y;
}

template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::size_t begin, std::size_t count) {
  check(x.rank() >= 1, ErrorCode::kShape, "slice: scalar input");
  const std::size_t C = x.shape().back();
  check(begin + count <= C, ErrorCode::kShape, "slice: range exceeds " + std::to_string(C) + " channels");
  Shape s = x.shape();
  s.back() = count;
  BasicTensor<T> y(s);
  const std::size_t rows = shape_numel(Shape(x.shape().begin(), x.shape().end() - 1));
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(x.data() + r * C + begin, x.data() + r * C + begin + count, y.data() + r * count);
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  require_rank(x.shape(), 3, "global_avg_pool");
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  BasicTensor<T> y({C});
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) y[c] += x[p * C + c];
  for (std::size_t c = 0; c < C; ++c) y[c] /= static_cast<T>(HW);
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& x_shape, const BasicTensor<T>& dy) {
  const std::size_t HW = x_shape.at(0) * x_shape.at(1), C = x_shape.at(2);
  check(dy.shape() == Shape{C}, ErrorCode::kShape, "global_avg_pool_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x_shape);
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) dx[p * C + c] = dy[c] / static_cast<T>(HW);
  return dx;
}

template <typename T>
BasicTensor<T> global_max_pool(const BasicTensor<T>& x) {
  require_rank(x.shape(), 3, "global_max_pool");
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  BasicTensor<T> y({C}, -std::numeric_limits<T>::infinity());
  for (std::size_t p = 0; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c) y[c] = std::max(y[c], x[p * C + c]);
  return y;
}

template <typename T>
BasicTensor<T> global_max_pool_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy) {
  const std::size_t HW = x.dim(0) * x.dim(1), C = x.dim(2);
  check(dy.shape() == Shape{C}, ErrorCode::kShape, "global_max_pool_backward: upstream " + shape_str(dy.shape()));
  std::vector<std::size_t> arg(C, 0);
  for (std::size_t p = 1; p < HW; ++p)
    for (std::size_t c = 0; c < C; ++c)
      if (x[p * C + c] > x[arg[c] * C + c]) arg[c] = p;
  BasicTensor<T> dx(x.shape());
  for (std::size_t c = 0; c < C; ++c) dx[arg[c] * C + c] = dy[c];
  return dx;
}

template <typename T>
BasicTensor<T> channel_mean_max(const BasicTensor<T>& x) {
  require_rank(x.shape(), 3, "channel_mean_max");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  BasicTensor<T> y({H, W, 2});
  for (std::size_t p = 0; p < H * W; ++p) {
    const T* xp = x.data() + p * C;
    T sum = 0;
    T mx = xp[0];
    for (std::size_t c = 0; c < C; ++c) {
      sum += xp[c];
      mx = std::max(mx, xp[c]);
    }
    y[2 * p] = sum / static_cast<T>(C);
    y[2 * p + 1] = mx;
  }
  return y;
}

template <typename T>
BasicTensor<T> channel_mean_max_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(dy.shape() == Shape{H, W, 2}, ErrorCode::kShape, "channel_mean_max_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x.shape());
  for (std::size_t p = 0; p < H * W; ++p) {
    const T* xp = x.data() + p * C;
    T* dxp = dx.data() + p * C;
    const T gm = dy[2 * p] / static_cast<T>(C);
    std::size_t arg = 0;
    for (std::size_t c = 0; c < C; ++c) {
      dxp[c] = gm;
      if (xp[c] > xp[arg]) arg = c;
    }
    dxp[arg] += dy[2 * p + 1];
  }
  return dx;
}

template <typename T>
BasicTensor<T> scale_channels(const BasicTensor<T>& x, const BasicTensor<T>& g) {
  require_rank(x.shape(), 3, "scale_channels");
  const std::size_t C = x.dim(2);
  check(g.shape() == Shape{C}, ErrorCode::kShape, "scale_channels: gate " + shape_str(g.shape()));
  BasicTensor<T> y(x.shape());
  for (std::size_t p = 0; p < x.dim(0) * x.dim(1); ++p)
    for (std::size_t c = 0; c < C; ++c) y[p * C + c] = g[c] * x[p * C + c];
  return y;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> scale_channels_backward(const BasicTensor<T>& x, const BasicTensor<T>& g,
                                                                  const BasicTensor<T>& dy) {
  const std::size_t C = x.dim(2);
  check(dy.shape() == x.shape(), ErrorCode::kShape, "scale_channels_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x.shape()), dg({C});
  for (std::size_t p = 0; p < x.dim(0) * x.dim(1); ++p)
    for (std::size_t c = 0; c < C; ++c) {
      dx[p * C + c] = g[c] * dy[p * C + c];
      dg[c] += x[p * C + c] * dy[p * C + c];
    }
  return {std::move(dx), std::move(dg)};
}

template <typename T>
BasicTensor<T> scale_spatial(const BasicTensor<T>& x, const BasicTensor<T>& g) {
  require_rank(x.shape(), 3, "scale_spatial");
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(g.shape() == Shape{H, W, 1}, ErrorCode::kShape, "scale_spatial: gate " + shape_str(g.shape()));
  BasicTensor<T> y(x.shape());
  for (std::size_t p = 0; p < H * W; ++p)
    for (std::size_t c = 0; c < C; ++c) y[p * C + c] = g[p] * x[p * C + c];
  return y;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> scale_spatial_backward(const BasicTensor<T>& x, const BasicTensor<T>& g,
                                                                 const BasicTensor<T>& dy) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  check(dy.shape() == x.shape(), ErrorCode::kShape, "scale_spatial_backward: upstream " + shape_str(dy.shape()));
  BasicTensor<T> dx(x.shape()), dg(g.shape());
  for (std::size_t p = 0; p < H * W; ++p)
    for (std::size_t c = 0; c < C; ++c) {
      dx[p * C + c] = g[p] * dy[p * C + c];
      dg[p] += x[p * C + c] * dy[p * C + c];
    }
  return {std::move(dx), std::move(dg)};
}

#define STRIDE_INSTANTIATE_OPS(T)                                                                                   \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);              \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> maxpool_h(const BasicTensor<T>&);                                                          \
  template BasicTensor<T> maxpool_h_backward(const BasicTensor<T>&, const BasicTensor<T>&);                          \
  template BasicTensor<T> avgpool_w(const BasicTensor<T>&);                                                          \
  template BasicTensor<T> avgpool_w_backward(const BasicTensor<T>&);                                                 \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);               \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);       \
  template T activate(T, Activation);                                                                                \
  template BasicTensor<T> activation(const BasicTensor<T>&, Activation);                                             \
  template BasicTensor<T> activation_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                              Activation);                                                           \
  template BasicTensor<T> softmax_lastdim(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> softmax_lastdim_backward(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> log_softmax_lastdim(const BasicTensor<T>&);                                                \
  template BasicTensor<T> log_softmax_lastdim_backward(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);                             \
  template BasicTensor<T> slice_channels(const BasicTensor<T>&, std::size_t, std::size_t);                           \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> global_avg_pool_backward(const Shape&, const BasicTensor<T>&);                             \
  template BasicTensor<T> global_max_pool(const BasicTensor<T>&);                                                    \
  template BasicTensor<T> global_max_pool_backward(const BasicTensor<T>&, const BasicTensor<T>&);                    \
  template BasicTensor<T> channel_mean_max(const BasicTensor<T>&);                                                   \
  template BasicTensor<T> channel_mean_max_backward(const BasicTensor<T>&, const BasicTensor<T>&);                   \
  template BasicTensor<T> scale_channels(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template std::pair<BasicTensor<T>, BasicTensor<T>> scale_channels_backward(                                       \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                                          \
  template BasicTensor<T> scale_spatial(const BasicTensor<T>&, const BasicTensor<T>&);                               \
  template std::pair<BasicTensor<T>, BasicTensor<T>> scale_spatial_backward(                                        \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);

STRIDE_INSTANTIATE_OPS(float)
STRIDE_INSTANTIATE_OPS(double)

}  // namespace stride
