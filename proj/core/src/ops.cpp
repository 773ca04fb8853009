#include "grasens/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grasens/errors.hpp"

namespace grasens {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ConfigError(std::string(what) + " expects rank " + std::to_string(rank) + ", got shape " +
                      to_string(t.shape()));
  }
}

// Output positions o in [lo, hi) whose input index o*stride + offset lands in [0, n_in).
struct Span {
  std::size_t lo;
  std::size_t hi;
};

Span valid_outputs(std::size_t n_out, std::size_t n_in, std::size_t stride, std::ptrdiff_t offset) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + s - 1) / s;
  const std::ptrdiff_t last_in = static_cast<std::ptrdiff_t>(n_in) - 1 - offset;
  std::ptrdiff_t hi = last_in < 0 ? 0 : last_in / s + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n_out));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

enum class Broadcast { kSame, kChannel, kPlane };

// Returns which operand is the full (C,H,W) one and how the other maps onto it.
struct BroadcastPlan {
  bool a_is_full = true;
  Broadcast kind = Broadcast::kSame;
};

BroadcastPlan plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return {};
  auto fail = [&] {
    throw ConfigError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                      " are not broadcast-compatible (supported: equal, (C,1,1), (1,H,W))");
  };
  if (a.rank() != 3 || b.rank() != 3) fail();
  auto classify = [](const Shape& full, const Shape& small) -> int {
    if (small[0] == full[0] && small[1] == 1 && small[2] == 1) return 1;
    if (small[0] == 1 && small[1] == full[1] && small[2] == full[2]) return 2;
    return 0;
  };
  BroadcastPlan plan;
  int k = classify(a.shape(), b.shape());
  if (k == 0) {
    k = classify(b.shape(), a.shape());
    plan.a_is_full = false;
  }
  if (k == 0) fail();
  plan.kind = k == 1 ? Broadcast::kChannel : Broadcast::kPlane;
  return plan;
}

// Index into the small operand for full-tensor flat index (c, hw).
inline std::size_t small_index(Broadcast kind, std::size_t c, std::size_t hw, std::size_t flat) {
  switch (kind) {
    case Broadcast::kChannel:
      return c;
    case Broadcast::kPlane:
      return hw;
    default:
      return flat;
  }
}

template <typename Fwd, typename Bwd>
Tensor binary_broadcast(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, Bwd bwd) {
  const BroadcastPlan plan = plan_broadcast(a, b, op);
  const Tensor& full = plan.a_is_full ? a : b;
  const Tensor& small = plan.a_is_full ? b : a;
  const Shape out_shape = full.shape();
  const std::size_t n = full.numel();
  std::size_t plane = 1;
  if (plan.kind != Broadcast::kSame) plane = out_shape[1] * out_shape[2];

  std::vector<double> out(n);
  auto fd = full.data();
  auto sd = small.data();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = small_index(plan.kind, i / plane, i % plane, i);
    out[i] = plan.a_is_full ? fwd(fd[i], sd[j]) : fwd(sd[j], fd[i]);
  }
  return make_result(op, out_shape, std::move(out), {a, b}, [plan, plane, bwd](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    auto& full_node = plan.a_is_full ? pa : pb;
    auto& small_node = plan.a_is_full ? pb : pa;
    const std::size_t count = self.data.size();
    double* gf = full_node.requires_grad ? full_node.ensure_grad().data() : nullptr;
    double* gs = small_node.requires_grad ? small_node.ensure_grad().data() : nullptr;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = small_index(plan.kind, i / plane, i % plane, i);
      const double g = self.grad[i];
      const double av = plan.a_is_full ? full_node.data[i] : small_node.data[j];
      const double bv = plan.a_is_full ? small_node.data[j] : full_node.data[i];
      const auto [da, db] = bwd(av, bv, g);
      if (plan.a_is_full) {
        if (gf) gf[i] += da;
        if (gs) gs[j] += db;
      } else {
        if (gs) gs[j] += da;
        if (gf) gf[i] += db;
      }
    }
  });
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, const char* op, Fwd fwd, Deriv deriv) {
  auto xd = x.data();
  std::vector<double> out(xd.size());
  std::transform(xd.begin(), xd.end(), out.begin(), fwd);
  return make_result(op, x.shape(), std::move(out), {x}, [deriv](detail::Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(p.data[i], self.data[i]);
  });
}

}  // namespace

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t stride, std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t ci = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t co = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != ci) {
    throw ConfigError("conv2d: input has " + std::to_string(ci) + " channels but kernels expect " +
                      std::to_string(kernels.dim(1)));
  }
  if (kernels.dim(3) != k) throw ConfigError("conv2d: kernels must be square, got " + to_string(kernels.shape()));
  if (k > h + 2 * padding || k > w + 2 * padding) {
    throw ConfigError("conv2d: kernel " + std::to_string(k) + " exceeds padded input " + to_string(input.shape()));
  }
  const std::size_t ho = (h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (w + 2 * padding - k) / stride + 1;
  const auto pad = static_cast<std::ptrdiff_t>(padding);

  std::vector<double> out(co * ho * wo, 0.0);
  const double* in = input.data().data();
  const double* kd = kernels.data().data();
  for (std::size_t o = 0; o < co; ++o) {
    double* op = out.data() + o * ho * wo;
    for (std::size_t c = 0; c < ci; ++c) {
      const double* ip = in + c * h * w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span ys = valid_outputs(ho, h, stride, static_cast<std::ptrdiff_t>(ky) - pad);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double wv = kd[((o * ci + c) * k + ky) * k + kx];
          const std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(kx) - pad;
          const Span xs = valid_outputs(wo, w, stride, xoff);
          for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
            const std::size_t iy = oy * stride + ky - padding;
            const double* row = ip + iy * w;
            double* orow = op + oy * wo;
            for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) {
              orow[ox] += wv * row[static_cast<std::ptrdiff_t>(ox * stride) + xoff];
            }
          }
        }
      }
    }
  }

  return make_result("conv2d", {co, ho, wo}, std::move(out), {input, kernels},
                     [=](detail::Node& self) {
                       auto& in_node = *self.parents[0];
                       auto& k_node = *self.parents[1];
                       double* gin = in_node.requires_grad ? in_node.ensure_grad().data() : nullptr;
                       double* gk = k_node.requires_grad ? k_node.ensure_grad().data() : nullptr;
                       const double* ind = in_node.data.data();
                       const double* kdat = k_node.data.data();
                       for (std::size_t o = 0; o < co; ++o) {
                         const double* gop = self.grad.data() + o * ho * wo;
                         for (std::size_t c = 0; c < ci; ++c) {
                           for (std::size_t ky = 0; ky < k; ++ky) {
                             const Span ys = valid_outputs(ho, h, stride, static_cast<std::ptrdiff_t>(ky) - pad);
                             for (std::size_t kx = 0; kx < k; ++kx) {
                               const std::size_t kidx = ((o * ci + c) * k + ky) * k + kx;
                               const double wv = kdat[kidx];
                               const std::ptrdiff_t xoff = static_cast<std::ptrdiff_t>(kx) - pad;
                               const Span xs = valid_outputs(wo, w, stride, xoff);
                               double acc = 0.0;
                               for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
                                 const std::size_t base = c * h * w + (oy * stride + ky - padding) * w;
                                 const double* grow = gop + oy * wo;
                                 const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(base) + xoff;
                                 for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) {
                                   acc += ind[shift + static_cast<std::ptrdiff_t>(ox * stride)] * grow[ox];
                                 }
                                 if (gin) {
                                   for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) {
                                     gin[shift + static_cast<std::ptrdiff_t>(ox * stride)] += wv * grow[ox];
                                   }
                                 }
                               }
                               if (gk) gk[kidx] += acc;
                             }
                           }
                         }
                       }
                     });
}

Tensor deconv2d(const Tensor& input, const Tensor& kernels, std::size_t stride) {
  require_rank(input, 3, "deconv2d input");
  require_rank(kernels, 4, "deconv2d kernels");
  if (stride == 0) throw ConfigError("deconv2d: stride must be positive");
  const std::size_t ci = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t co = kernels.dim(1), k = kernels.dim(2);
  if (kernels.dim(0) != ci) {
    throw ConfigError("deconv2d: input has " + std::to_string(ci) + " channels but kernels expect " +
                      std::to_string(kernels.dim(0)));
  }
  if (k != 2 * stride || kernels.dim(3) != k) {
    throw ConfigError("deconv2d: kernel must be " + std::to_string(2 * stride) + "x" + std::to_string(2 * stride) +
                      " for stride " + std::to_string(stride) + ", got " + to_string(kernels.shape()));
  }
  const std::size_t ho = h * stride, wo = w * stride;
  const auto crop = static_cast<std::ptrdiff_t>(stride / 2);

  auto scatter = [=](const double* in, const double* kd, double* out) {
    for (std::size_t c = 0; c < ci; ++c) {
      for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double wv = kd[((c * co + o) * k + ky) * k + kx];
            for (std::size_t iy = 0; iy < h; ++iy) {
              const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * stride + ky) - crop;
              if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(ho)) continue;
              for (std::size_t ix = 0; ix < w; ++ix) {
                const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * stride + kx) - crop;
                if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(wo)) continue;
                out[(o * ho + static_cast<std::size_t>(oy)) * wo + static_cast<std::size_t>(ox)] +=
                    wv * in[(c * h + iy) * w + ix];
              }
            }
          }
        }
      }
    }
  };

  std::vector<double> out(co * ho * wo, 0.0);
  scatter(input.data().data(), kernels.data().data(), out.data());

  return make_result("deconv2d", {co, ho, wo}, std::move(out), {input, kernels}, [=](detail::Node& self) {
    auto& in_node = *self.parents[0];
    auto& k_node = *self.parents[1];
    double* gin = in_node.requires_grad ? in_node.ensure_grad().data() : nullptr;
    double* gk = k_node.requires_grad ? k_node.ensure_grad().data() : nullptr;
    for (std::size_t c = 0; c < ci; ++c) {
      for (std::size_t o = 0; o < co; ++o) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t kidx = ((c * co + o) * k + ky) * k + kx;
            const double wv = k_node.data[kidx];
            double acc = 0.0;
            for (std::size_t iy = 0; iy < h; ++iy) {
              const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * stride + ky) - crop;
              if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(ho)) continue;
              for (std::size_t ix = 0; ix < w; ++ix) {
                const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * stride + kx) - crop;
                if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(wo)) continue;
                const double g =
                    self.grad[(o * ho + static_cast<std::size_t>(oy)) * wo + static_cast<std::size_t>(ox)];
                const std::size_t ii = (c * h + iy) * w + ix;
                acc += in_node.data[ii] * g;
                if (gin) gin[ii] += wv * g;
              }
            }
            if (gk) gk[kidx] += acc;
          }
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_broadcast(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g) { return std::pair{g, g}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_broadcast(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g) { return std::pair{g * y, g * x}; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result("sum", {}, {s}, {x}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ConfigError("concat_channels: spatial extents differ: " + to_string(a.shape()) + " vs " +
                      to_string(b.shape()));
  }
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t na = a.numel();
  return make_result("concat_channels", {a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(out), {a, b},
                     [na](detail::Node& self) {
                       auto& pa = *self.parents[0];
                       auto& pb = *self.parents[1];
                       if (pa.requires_grad) {
                         auto& g = pa.ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                       }
                       if (pb.requires_grad) {
                         auto& g = pb.ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
                       }
                     });
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank(x, 3, "slice_channels");
  if (begin + count > x.dim(0) || count == 0) {
    throw ConfigError("slice_channels: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                      ") outside " + to_string(x.shape()));
  }
  const std::size_t plane = x.dim(1) * x.dim(2);
  auto xd = x.data();
  std::vector<double> out(xd.begin() + static_cast<std::ptrdiff_t>(begin * plane),
                          xd.begin() + static_cast<std::ptrdiff_t>((begin + count) * plane));
  return make_result("slice_channels", {count, x.dim(1), x.dim(2)}, std::move(out), {x},
                     [offset = begin * plane](detail::Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
                     });
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 1, "linear input");
  require_rank(weights, 2, "linear weights");
  require_rank(bias, 1, "linear bias");
  const std::size_t n = input.dim(0), m = weights.dim(0);
  if (weights.dim(1) != n || bias.dim(0) != m) {
    throw ConfigError("linear: shapes " + to_string(input.shape()) + ", " + to_string(weights.shape()) + ", " +
                      to_string(bias.shape()) + " do not compose");
  }
  std::vector<double> out(bias.data().begin(), bias.data().end());
  auto x = input.data();
  auto wd = weights.data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wd[i * n + j] * x[j];
    out[i] += acc;
  }
  return make_result("linear", {m}, std::move(out), {input, weights, bias}, [n, m](detail::Node& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    if (px.requires_grad) {
      auto& g = px.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += pw.data[i * n + j] * self.grad[i];
      }
    }
    if (pw.requires_grad) {
      auto& g = pw.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i] * px.data[j];
      }
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) g[i] += self.grad[i];
    }
  });
}

Tensor stop_gradient(const Tensor& x) {
  return make_result("stop_gradient", x.shape(), std::vector<double>(x.data().begin(), x.data().end()), {}, {});
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ConfigError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  return make_result("reshape", std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {x},
                     [](detail::Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                     });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  std::vector<double> out(c, 0.0);
  auto xd = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += xd[ch * plane + i];
    out[ch] = s / static_cast<double>(plane);
  }
  return make_result("global_avg_pool", {c}, std::move(out), {x}, [c, plane](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < plane; ++i) g[ch * plane + i] += self.grad[ch] * inv;
    }
  });
}

Tensor pad_reflect(const Tensor& x, std::size_t pad) {
  require_rank(x, 3, "pad_reflect");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t hp = h + 2 * pad, wp = w + 2 * pad;
  // Source flat index for every padded element.
  std::vector<std::size_t> src(c * hp * wp);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < hp; ++y) {
      const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(pad), h);
      for (std::size_t xx = 0; xx < wp; ++xx) {
        const std::size_t sx =
            reflect_index(static_cast<std::ptrdiff_t>(xx) - static_cast<std::ptrdiff_t>(pad), w);
        src[(ch * hp + y) * wp + xx] = (ch * h + sy) * w + sx;
      }
    }
  }
  auto xd = x.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = xd[src[i]];
  return make_result("pad_reflect", {c, hp, wp}, std::move(out), {x},
                     [src = std::move(src)](detail::Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
                     });
}

Tensor depthwise_filter(const Tensor& x, std::span<const double> kernel, std::size_t k) {
  require_rank(x, 3, "depthwise_filter");
  if (kernel.size() != k * k) throw ConfigError("depthwise_filter: kernel size mismatch");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (k > h || k > w) throw ConfigError("depthwise_filter: kernel larger than input " + to_string(x.shape()));
  const std::size_t ho = h - k + 1, wo = w - k + 1;
  std::vector<double> kv(kernel.begin(), kernel.end());
  std::vector<double> out(c * ho * wo, 0.0);
  auto xd = x.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double wv = kv[ky * k + kx];
        for (std::size_t y = 0; y < ho; ++y) {
          const double* row = xd.data() + (ch * h + y + ky) * w + kx;
          double* orow = out.data() + (ch * ho + y) * wo;
          for (std::size_t xx = 0; xx < wo; ++xx) orow[xx] += wv * row[xx];
        }
      }
    }
  }
  return make_result("depthwise_filter", {c, ho, wo}, std::move(out), {x},
                     [kv = std::move(kv), c, h, w, k, ho, wo](detail::Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         for (std::size_t ky = 0; ky < k; ++ky) {
                           for (std::size_t kx = 0; kx < k; ++kx) {
                             const double wv = kv[ky * k + kx];
                             for (std::size_t y = 0; y < ho; ++y) {
                               double* grow = g.data() + (ch * h + y + ky) * w + kx;
                               const double* orow = self.grad.data() + (ch * ho + y) * wo;
                               for (std::size_t xx = 0; xx < wo; ++xx) grow[xx] += wv * orow[xx];
                             }
                           }
                         }
                       }
                     });
}

Tensor subsample(const Tensor& x, std::size_t stride) {
  require_rank(x, 3, "subsample");
  if (stride == 0) throw ConfigError("subsample: stride must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t ho = (h + stride - 1) / stride, wo = (w + stride - 1) / stride;
  std::vector<std::size_t> src(c * ho * wo);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t xx = 0; xx < wo; ++xx) src[(ch * ho + y) * wo + xx] = (ch * h + y * stride) * w + xx * stride;
    }
  }
  auto xd = x.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = xd[src[i]];
  return make_result("subsample", {c, ho, wo}, std::move(out), {x}, [src = std::move(src)](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
  });
}

Tensor softmax_groups(const Tensor& x, std::size_t group_size) {
  require_rank(x, 3, "softmax_groups");
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  if (group_size == 0 || c % group_size != 0) {
    throw ConfigError("softmax_groups: " + std::to_string(c) + " channels not divisible into groups of " +
                      std::to_string(group_size));
  }
  const std::size_t groups = c / group_size;
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < plane; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < group_size; ++m) mx = std::max(mx, xd[(g * group_size + m) * plane + i]);
      double z = 0.0;
      for (std::size_t m = 0; m < group_size; ++m) {
        const std::size_t idx = (g * group_size + m) * plane + i;
        out[idx] = std::exp(xd[idx] - mx);
        z += out[idx];
      }
      for (std::size_t m = 0; m < group_size; ++m) out[(g * group_size + m) * plane + i] /= z;
    }
  }
  return make_result("softmax_groups", x.shape(), std::move(out), {x},
                     [groups, group_size, plane](detail::Node& self) {
                       auto& gx = self.parents[0]->ensure_grad();
                       for (std::size_t g = 0; g < groups; ++g) {
                         for (std::size_t i = 0; i < plane; ++i) {
                           double dot = 0.0;
                           for (std::size_t m = 0; m < group_size; ++m) {
                             const std::size_t idx = (g * group_size + m) * plane + i;
                             dot += self.grad[idx] * self.data[idx];
                           }
                           for (std::size_t m = 0; m < group_size; ++m) {
                             const std::size_t idx = (g * group_size + m) * plane + i;
                             gx[idx] += self.data[idx] * (self.grad[idx] - dot);
                           }
                         }
                       }
                     });
}

Tensor local_filter(const Tensor& padded, const Tensor& filters, std::size_t k, std::size_t groups) {
  require_rank(padded, 3, "local_filter input");
  require_rank(filters, 3, "local_filter filters");
  const std::size_t c = padded.dim(0);
  const std::size_t half = k / 2;
  if (k % 2 == 0 || padded.dim(1) < 2 * half + 1 || padded.dim(2) < 2 * half + 1) {
    throw ConfigError("local_filter: needs odd k and an input padded by k/2");
  }
  const std::size_t hp = padded.dim(1), wp = padded.dim(2);
  const std::size_t h = hp - 2 * half, w = wp - 2 * half;
  if (groups == 0 || c % groups != 0 || filters.dim(0) != groups * k * k || filters.dim(1) != h ||
      filters.dim(2) != w) {
    throw ConfigError("local_filter: filters " + to_string(filters.shape()) + " incompatible with input " +
                      to_string(padded.shape()) + " and " + std::to_string(groups) + " groups");
  }
  const std::size_t per_group = c / groups;
  auto xd = padded.data();
  auto fd = filters.data();
  std::vector<double> out(c * h * w, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const std::size_t g = ch / per_group;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = 0; q < k; ++q) {
        const double* frow0 = fd.data() + (g * k * k + p * k + q) * h * w;
        for (std::size_t i = 0; i < h; ++i) {
          const double* xrow = xd.data() + (ch * hp + i + p) * wp + q;
          const double* frow = frow0 + i * w;
          double* orow = out.data() + (ch * h + i) * w;
          for (std::size_t j = 0; j < w; ++j) orow[j] += frow[j] * xrow[j];
        }
      }
    }
  }
  return make_result("local_filter", {c, h, w}, std::move(out), {padded, filters},
                     [=](detail::Node& self) {
                       auto& px = *self.parents[0];
                       auto& pf = *self.parents[1];
                       double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
                       double* gf = pf.requires_grad ? pf.ensure_grad().data() : nullptr;
                       for (std::size_t ch = 0; ch < c; ++ch) {
                         const std::size_t g = ch / per_group;
                         for (std::size_t p = 0; p < k; ++p) {
                           for (std::size_t q = 0; q < k; ++q) {
                             const std::size_t fbase = (g * k * k + p * k + q) * h * w;
                             for (std::size_t i = 0; i < h; ++i) {
                               const std::size_t xbase = (ch * hp + i + p) * wp + q;
                               const double* orow = self.grad.data() + (ch * h + i) * w;
                               for (std::size_t j = 0; j < w; ++j) {
                                 if (gx) gx[xbase + j] += pf.data[fbase + i * w + j] * orow[j];
                                 if (gf) gf[fbase + i * w + j] += px.data[xbase + j] * orow[j];
                               }
                             }
                           }
                         }
                       }
                     });
}

Tensor smooth1d(const Tensor& x, std::span<const double> taps) {
  require_rank(x, 1, "smooth1d");
  if (taps.size() % 2 == 0) throw ConfigError("smooth1d: taps must have odd length");
  const std::size_t n = x.dim(0);
  const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  std::vector<double> tv(taps.begin(), taps.end());
  auto clamp_idx = [n](std::ptrdiff_t i) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  auto xd = x.data();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t m = 0; m < tv.size(); ++m) {
      out[j] += tv[m] * xd[clamp_idx(static_cast<std::ptrdiff_t>(j + m) - half)];
    }
  }
  return make_result("smooth1d", {n}, std::move(out), {x}, [tv = std::move(tv), n, half, clamp_idx](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < tv.size(); ++m) {
        g[clamp_idx(static_cast<std::ptrdiff_t>(j + m) - half)] += tv[m] * self.grad[j];
      }
    }
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  require_rank(logits, 1, "softmax_cross_entropy");
  const std::size_t j = logits.dim(0);
  if (label >= j) {
    throw UsageError("softmax_cross_entropy: label " + std::to_string(label) + " outside " + std::to_string(j) +
                     " classes");
  }
  auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - mx);
  const double log_z = mx + std::log(total);
  std::vector<double> probs(j);
  for (std::size_t i = 0; i < j; ++i) probs[i] = std::exp(z[i] - log_z);
  const double loss = log_z - z[label];
  return make_result("softmax_cross_entropy", {}, {loss}, {logits},
                     [probs = std::move(probs), label](detail::Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         g[i] += self.grad[0] * (probs[i] - (i == label ? 1.0 : 0.0));
                       }
                     });
}

}  // namespace grasens
