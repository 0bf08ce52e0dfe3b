// Copyright 2026 The dmda Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmda/grad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "dmda/error.hpp"
#include "dmda/grad/tape.hpp"

namespace dmda::grad {
namespace {

constexpr double kEps = 1e-12;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const std::string& op, const std::string& detail) {
  fail(ErrorCode::kShape, op + ": " + detail);
}

void expect_rank(const std::string& op, const std::string& name, const Tensor& t,
                 std::size_t rank) {
  if (t.rank() != rank) {
    shape_error(op, name + " must have rank " + std::to_string(rank) + ", got " +
                        shape_str(t.shape()));
  }
}

bool tracking(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void record(const std::string& op, std::vector<Tensor> inputs, Tensor& output,
            std::function<void()> backward) {
  output.set_requires_grad(true);
  active_tape()->record({op, std::move(inputs), output, std::move(backward)});
}

// Batch im2col: row r = c * 9 + tap of `col` is [b * h * w] long, holding the
// shifted input plane of every sample back to back.
void im2col(const double* x, std::size_t b, std::size_t cin, std::size_t h, std::size_t w,
            double* col) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < cin; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = col + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * b * hw;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? w - 1 : w;
        for (std::size_t n = 0; n < b; ++n) {
          const double* plane = x + (n * cin + c) * hw;
          double* dst_plane = row + n * hw;
          for (std::size_t y = 0; y < h; ++y) {
            double* dst = dst_plane + y * w;
            const long sy = static_cast<long>(y) + ky - 1;
            if (sy < 0 || sy >= static_cast<long>(h)) {
              std::fill(dst, dst + w, 0.0);
              continue;
            }
            const double* src = plane + static_cast<std::size_t>(sy) * w + kx - 1;
            if (x0 == 1) dst[0] = 0.0;
            if (x1 != w) dst[w - 1] = 0.0;
            std::copy(src + x0, src + x1, dst + x0);
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, std::size_t b, std::size_t cin, std::size_t h,
                std::size_t w, double* dx) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < cin; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* row = col + (c * 9 + static_cast<std::size_t>(ky * 3 + kx)) * b * hw;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? w - 1 : w;
        for (std::size_t n = 0; n < b; ++n) {
          double* plane = dx + (n * cin + c) * hw;
          const double* src_plane = row + n * hw;
          for (std::size_t y = 0; y < h; ++y) {
            const long sy = static_cast<long>(y) + ky - 1;
            if (sy < 0 || sy >= static_cast<long>(h)) continue;
            double* dst = plane + static_cast<std::size_t>(sy) * w + kx - 1;
            const double* src = src_plane + y * w;
            for (std::size_t xx = x0; xx < x1; ++xx) dst[xx] += src[xx];
          }
        }
      }
    }
  }
}

// Scratch for chunked im2col convolution. Samples are processed in groups
// small enough that the column buffer stays cache resident.
struct ConvChunks {
  std::size_t hw, k, cout, size;
  Buffer col;
  Buffer out;

  ConvChunks(std::size_t b, std::size_t cin, std::size_t cout_, std::size_t h, std::size_t w)
      : hw(h * w), k(cin * 9), cout(cout_) {
    constexpr std::size_t kTargetDoubles = 64 * 1024;
    size = std::clamp<std::size_t>(kTargetDoubles / (k * hw), 1, b);
    col.resize(k * size * hw);
    out.resize(cout * size * hw);
  }

  MapMat out_block(std::size_t nb) {
    return MapMat(out.data(), static_cast<long>(cout), static_cast<long>(nb * hw));
  }
};

}  // namespace

Tensor conv2d_3x3(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const std::string op = "conv2d_3x3";
  expect_rank(op, "input", x, 4);
  expect_rank(op, "weight", weight, 4);
  expect_rank(op, "bias", bias, 1);
  const auto b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto cout = weight.dim(0);
  if (weight.dim(1) != cin || weight.dim(2) != 3 || weight.dim(3) != 3) {
    shape_error(op, "weight " + shape_str(weight.shape()) + " incompatible with input " +
                        shape_str(x.shape()));
  }
  if (bias.dim(0) != cout) {
    shape_error(op, "bias " + shape_str(bias.shape()) + " does not match " +
                        std::to_string(cout) + " output channels");
  }
  Tensor out = Tensor::empty({b, cout, h, w});
  {
    ConvChunks chunks(b, cin, cout, h, w);
    ConstMapMat wmat(weight.data().data(), static_cast<long>(cout), static_cast<long>(chunks.k));
    const auto bs = bias.data();
    auto os = out.data();
    for (std::size_t n0 = 0; n0 < b; n0 += chunks.size) {
      const std::size_t nb = std::min(chunks.size, b - n0);
      const auto cols = static_cast<long>(nb * chunks.hw);
      im2col(x.data().data() + n0 * cin * chunks.hw, nb, cin, h, w, chunks.col.data());
      auto prod = chunks.out_block(nb);
      prod.noalias() = wmat * ConstMapMat(chunks.col.data(), static_cast<long>(chunks.k), cols);
      for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t n = 0; n < nb; ++n) {
          const double* src = prod.data() + co * nb * chunks.hw + n * chunks.hw;
          double* dst = os.data() + ((n0 + n) * cout + co) * chunks.hw;
          for (std::size_t i = 0; i < chunks.hw; ++i) dst[i] = src[i] + bs[co];
        }
      }
    }
  }
  if (tracking({&x, &weight, &bias})) {
    record(op, {x, weight, bias}, out,
           [x = Tensor(x), weight = Tensor(weight), bias = Tensor(bias), out]() mutable {
      const auto b = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
      const auto cout = weight.dim(0);
      ConvChunks chunks(b, cin, cout, h, w);
      const std::size_t hw = chunks.hw, k = chunks.k;
      const auto gout = std::as_const(out).grad();
      ConstMapMat wmat(weight.data().data(), static_cast<long>(cout), static_cast<long>(k));
      RowMat dcol;
      for (std::size_t n0 = 0; n0 < b; n0 += chunks.size) {
        const std::size_t nb = std::min(chunks.size, b - n0);
        const auto cols = static_cast<long>(nb * hw);
        auto go = chunks.out_block(nb);
        for (std::size_t co = 0; co < cout; ++co) {
          for (std::size_t n = 0; n < nb; ++n) {
            std::copy_n(gout.data() + ((n0 + n) * cout + co) * hw, hw,
                        go.data() + co * nb * hw + n * hw);
          }
        }
        if (bias.requires_grad()) {
          Eigen::Map<Eigen::VectorXd> gb(bias.grad().data(), static_cast<long>(cout));
          gb += go.rowwise().sum();
        }
        if (weight.requires_grad()) {
          im2col(x.data().data() + n0 * cin * hw, nb, cin, h, w, chunks.col.data());
          MapMat gw(weight.grad().data(), static_cast<long>(cout), static_cast<long>(k));
          gw.noalias() +=
              go * ConstMapMat(chunks.col.data(), static_cast<long>(k), cols).transpose();
        }
        if (x.requires_grad()) {
          dcol.resize(static_cast<long>(k), cols);
          dcol.noalias() = wmat.transpose() * go;
          col2im_add(dcol.data(), nb, cin, h, w, x.grad().data() + n0 * cin * hw);
        }
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::empty(x.shape());
  auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] > 0.0 ? xs[i] : 0.0;
  if (tracking({&x})) {
    record("relu", {x}, out, [x = Tensor(x), out]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      const auto xs = x.data();
      double* g = gx.data();
      const double* u = go.data();
      const double* v = xs.data();
      for (std::size_t i = 0; i < gx.size(); ++i) g[i] += v[i] > 0.0 ? u[i] : 0.0;
    });
  }
  return out;
}

BatchNorm BatchNorm::make(std::size_t channels, double momentum) {
  BatchNorm bn;
  bn.gamma = Tensor::full({channels}, 1.0, true);
  bn.beta = Tensor::zeros({channels}, true);
  bn.running_mean = Tensor::zeros({channels});
  bn.running_var = Tensor::full({channels}, 1.0);
  bn.momentum = momentum;
  return bn;
}

Tensor batchnorm2d(const Tensor& x, BatchNorm& bn, bool training) {
  const std::string op = "batchnorm2d";
  if (x.rank() != 4 && x.rank() != 2) {
    shape_error(op, "input must be [B, C, H, W] or [B, C], got " + shape_str(x.shape()));
  }
  const auto b = x.dim(0), c = x.dim(1);
  const std::size_t hw = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  if (bn.gamma.numel() != c || bn.beta.numel() != c || bn.running_mean.numel() != c ||
      bn.running_var.numel() != c) {
    shape_error(op, "parameters sized " + std::to_string(bn.gamma.numel()) +
                        " do not match " + std::to_string(c) + " channels");
  }
  if (training && b < 2) {
    shape_error(op, "train mode needs a batch of at least 2, got " + std::to_string(b));
  }
  const double count = static_cast<double>(b * hw);
  Tensor out = Tensor::empty(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(c);
  const auto xs = x.data();
  auto os = out.data();
  const auto gamma = bn.gamma.data();
  const auto beta = bn.beta.data();
  auto rm = bn.running_mean.data();
  auto rv = bn.running_var.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mu, var;
    if (training) {
      double sum = 0.0;
      for (std::size_t n = 0; n < b; ++n) {
        const double* p = xs.data() + (n * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      mu = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < b; ++n) {
        const double* p = xs.data() + (n * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      var = sq / count;
      rm[ch] = bn.momentum * rm[ch] + (1.0 - bn.momentum) * mu;
      rv[ch] = bn.momentum * rv[ch] + (1.0 - bn.momentum) * var;
    } else {
      mu = rm[ch];
      var = rv[ch];
    }
    const double is = 1.0 / std::sqrt(var + bn.eps);
    (*inv_std)[ch] = is;
    for (std::size_t n = 0; n < b; ++n) {
      const std::size_t off = (n * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const double xh = (xs[off + i] - mu) * is;
        (*xhat)[off + i] = xh;
        os[off + i] = gamma[ch] * xh + beta[ch];
      }
    }
  }
  Tensor g = bn.gamma, be = bn.beta;
  if (tracking({&x, &g, &be})) {
    record(op, {x, g, be}, out, [x = Tensor(x), g, be, out, xhat, inv_std, training, b, c, hw]() mutable {
      const auto go = std::as_const(out).grad();
      const double count = static_cast<double>(b * hw);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < b; ++n) {
          const std::size_t off = (n * c + ch) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            sum_dy += go[off + i];
            sum_dy_xhat += go[off + i] * (*xhat)[off + i];
          }
        }
        if (g.requires_grad()) g.grad()[ch] += sum_dy_xhat;
        if (be.requires_grad()) be.grad()[ch] += sum_dy;
        if (!x.requires_grad()) continue;
        auto gx = x.grad();
        const double scale = g.data()[ch] * (*inv_std)[ch];
        for (std::size_t n = 0; n < b; ++n) {
          const std::size_t off = (n * c + ch) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            if (training) {
              gx[off + i] += scale * (go[off + i] - sum_dy / count -
                                      (*xhat)[off + i] * sum_dy_xhat / count);
            } else {
              gx[off + i] += scale * go[off + i];
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor maxpool_2x2(const Tensor& x) {
  const std::string op = "maxpool_2x2";
  expect_rank(op, "input", x, 4);
  const auto b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    shape_error(op, "spatial size must be even, got " + shape_str(x.shape()));
  }
  const auto oh = h / 2, ow = w / 2;
  Tensor out = Tensor::empty({b, c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t p = 0; p < b * c; ++p) {
    const std::size_t in_off = p * h * w, out_off = p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        std::size_t best = in_off + (2 * y) * w + 2 * xx;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_off + (2 * y + dy) * w + 2 * xx + dx;
            if (xs[idx] > xs[best]) best = idx;
          }
        }
        os[out_off + y * ow + xx] = xs[best];
        (*argmax)[out_off + y * ow + xx] = best;
      }
    }
  }
  if (tracking({&x})) {
    record(op, {x}, out, [x = Tensor(x), out, argmax]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[(*argmax)[i]] += go[i];
    });
  }
  return out;
}

Tensor global_max_pool(const Tensor& x) {
  const std::string op = "global_max_pool";
  expect_rank(op, "input", x, 4);
  const auto b = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor out = Tensor::empty({b, c});
  auto argmax = std::make_shared<std::vector<std::size_t>>(b * c);
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t p = 0; p < b * c; ++p) {
    std::size_t best = p * hw;
    for (std::size_t i = 1; i < hw; ++i) {
      if (xs[p * hw + i] > xs[best]) best = p * hw + i;
    }
    os[p] = xs[best];
    (*argmax)[p] = best;
  }
  if (tracking({&x})) {
    record(op, {x}, out, [x = Tensor(x), out, argmax]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[(*argmax)[i]] += go[i];
    });
  }
  return out;
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const std::string op = "dense";
  expect_rank(op, "input", x, 2);
  expect_rank(op, "weight", weight, 2);
  expect_rank(op, "bias", bias, 1);
  const auto b = x.dim(0), in = x.dim(1), outd = weight.dim(0);
  if (weight.dim(1) != in) {
    shape_error(op, "weight " + shape_str(weight.shape()) + " incompatible with input " +
                        shape_str(x.shape()));
  }
  if (bias.dim(0) != outd) {
    shape_error(op, "bias " + shape_str(bias.shape()) + " does not match " +
                        std::to_string(outd) + " outputs");
  }
  Tensor out = Tensor::empty({b, outd});
  ConstMapMat xm(x.data().data(), static_cast<long>(b), static_cast<long>(in));
  ConstMapMat wm(weight.data().data(), static_cast<long>(outd), static_cast<long>(in));
  Eigen::Map<const Eigen::RowVectorXd> bv(bias.data().data(), static_cast<long>(outd));
  MapMat om(out.data().data(), static_cast<long>(b), static_cast<long>(outd));
  om.noalias() = xm * wm.transpose();
  om.rowwise() += bv;
  if (tracking({&x, &weight, &bias})) {
    record(op, {x, weight, bias}, out, [x = Tensor(x), weight = Tensor(weight), bias = Tensor(bias), out]() mutable {
      const auto b = x.dim(0), in = x.dim(1), outd = weight.dim(0);
      ConstMapMat go(std::as_const(out).grad().data(), static_cast<long>(b),
                     static_cast<long>(outd));
      if (x.requires_grad()) {
        ConstMapMat wm(weight.data().data(), static_cast<long>(outd), static_cast<long>(in));
        MapMat gx(x.grad().data(), static_cast<long>(b), static_cast<long>(in));
        gx.noalias() += go * wm;
      }
      if (weight.requires_grad()) {
        ConstMapMat xm(x.data().data(), static_cast<long>(b), static_cast<long>(in));
        MapMat gw(weight.grad().data(), static_cast<long>(outd), static_cast<long>(in));
        gw.noalias() += go.transpose() * xm;
      }
      if (bias.requires_grad()) {
        Eigen::Map<Eigen::RowVectorXd> gb(bias.grad().data(), static_cast<long>(outd));
        gb += go.colwise().sum();
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::empty(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = xs[i];
    if (v >= 0.0) {
      os[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      os[i] = e / (1.0 + e);
    }
  }
  if (tracking({&x})) {
    record("sigmoid", {x}, out, [x = Tensor(x), out]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      const auto os = out.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * os[i] * (1.0 - os[i]);
    });
  }
  return out;
}

Tensor binary_cross_entropy(const Tensor& p, const Tensor& y) {
  if (p.numel() != y.numel()) {
    shape_error("binary_cross_entropy", "prediction " + shape_str(p.shape()) +
                                            " and target " + shape_str(y.shape()) +
                                            " differ in size");
  }
  const auto ps = p.data();
  const auto ys = y.data();
  const double n = static_cast<double>(ps.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double q = std::clamp(ps[i], kEps, 1.0 - kEps);
    loss -= ys[i] * std::log(q) + (1.0 - ys[i]) * std::log(1.0 - q);
  }
  Tensor out = Tensor::scalar(loss / n);
  if (tracking({&p, &y})) {
    record("binary_cross_entropy", {p, y}, out, [p = Tensor(p), y = Tensor(y), out, n]() mutable {
      const double g = std::as_const(out).grad()[0] / n;
      const auto ps = p.data();
      const auto ys = y.data();
      if (p.requires_grad()) {
        auto gp = p.grad();
        for (std::size_t i = 0; i < gp.size(); ++i) {
          const double q = std::clamp(ps[i], kEps, 1.0 - kEps);
          gp[i] += g * (-ys[i] / q + (1.0 - ys[i]) / (1.0 - q));
        }
      }
      if (y.requires_grad()) {
        auto gy = y.grad();
        for (std::size_t i = 0; i < gy.size(); ++i) {
          const double q = std::clamp(ps[i], kEps, 1.0 - kEps);
          gy[i] += g * (std::log(1.0 - q) - std::log(q));
        }
      }
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  const auto xs = x.data();
  double s = 0.0;
  for (double v : xs) s += v;
  const double n = static_cast<double>(xs.size());
  Tensor out = Tensor::scalar(s / n);
  if (tracking({&x})) {
    record("mean", {x}, out, [x = Tensor(x), out, n]() mutable {
      const double g = std::as_const(out).grad()[0] / n;
      for (auto& v : x.grad()) v += g;
    });
  }
  return out;
}

namespace {

Tensor add_scaled(const std::string& op, const Tensor& a, const Tensor& b, double sign) {
  const bool broadcast = b.numel() == 1 && a.numel() != 1;
  if (!broadcast && a.shape() != b.shape()) {
    shape_error(op, "shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                        " differ");
  }
  Tensor out = Tensor::empty(a.shape());
  const auto as = a.data();
  const auto bs = b.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) {
    os[i] = as[i] + sign * bs[broadcast ? 0 : i];
  }
  if (tracking({&a, &b})) {
    record(op, {a, b}, out, [a = Tensor(a), b = Tensor(b), out, sign, broadcast]() mutable {
      const auto go = std::as_const(out).grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[broadcast ? 0 : i] += sign * go[i];
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled("add", a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled("sub", a, b, -1.0); }

Tensor scalar_mul(const Tensor& x, double s) {
  Tensor out = Tensor::empty(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = s * xs[i];
  if (tracking({&x})) {
    record("scalar_mul", {x}, out, [x = Tensor(x), out, s]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * go[i];
    });
  }
  return out;
}

Tensor clip(const Tensor& x, double lo, double hi) {
  require(lo <= hi, ErrorCode::kInvalidArgument, "clip: lower bound exceeds upper bound");
  Tensor out = Tensor::empty(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = std::clamp(xs[i], lo, hi);
  if (tracking({&x})) {
    record("clip", {x}, out, [x = Tensor(x), out, lo, hi]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      const auto xs = x.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (xs[i] > lo && xs[i] < hi) gx[i] += go[i];
      }
    });
  }
  return out;
}

Tensor grad_reverse(const Tensor& x, double lambda) {
  require(lambda >= 0.0, ErrorCode::kInvalidArgument,
          "grad_reverse: lambda must be >= 0, got " + std::to_string(lambda));
  Tensor out = Tensor::from(x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
  if (tracking({&x})) {
    record("grad_reverse", {x}, out, [x = Tensor(x), out, lambda]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += -lambda * go[i];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() < 1 || begin >= end || end > x.dim(0)) {
    shape_error("slice_rows", "range [" + std::to_string(begin) + ", " +
                                  std::to_string(end) + ") invalid for " +
                                  shape_str(x.shape()));
  }
  Shape shape = x.shape();
  const std::size_t row = x.numel() / shape[0];
  shape[0] = end - begin;
  const auto xs = x.data();
  Tensor out = Tensor::from(shape, std::vector<double>(xs.begin() + begin * row,
                                                       xs.begin() + end * row));
  if (tracking({&x})) {
    record("slice_rows", {x}, out, [x = Tensor(x), out, begin, row]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < go.size(); ++i) gx[begin * row + i] += go[i];
    });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    shape_error("concat_rows", "trailing dimensions of " + shape_str(a.shape()) + " and " +
                                   shape_str(b.shape()) + " differ");
  }
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  std::vector<double> values(a.data().begin(), a.data().end());
  values.insert(values.end(), b.data().begin(), b.data().end());
  Tensor out = Tensor::from(shape, std::move(values));
  if (tracking({&a, &b})) {
    record("concat_rows", {a, b}, out, [a = Tensor(a), b = Tensor(b), out]() mutable {
      const auto go = std::as_const(out).grad();
      const std::size_t na = a.numel();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < na; ++i) ga[i] += go[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[na + i];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    shape_error("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Tensor out = Tensor::from(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (tracking({&x})) {
    record("reshape", {x}, out, [x = Tensor(x), out]() mutable {
      auto gx = x.grad();
      const auto go = std::as_const(out).grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
    });
  }
  return out;
}

}  // namespace dmda::grad
