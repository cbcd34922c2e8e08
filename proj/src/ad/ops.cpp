#include "phantom/ad/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "phantom/kernels/kernels.hpp"
#include "phantom/util/error.hpp"

namespace phantom::ad {
namespace {

struct BroadcastShape {
  std::size_t rows;
  std::size_t cols;
};

BroadcastShape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  auto dim = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw InvalidArgument(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                          b.shape_string());
  };
  return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

inline std::size_t bindex(const Tensor& t, std::size_t r, std::size_t c) {
  return (t.rows() == 1 ? 0 : r) * t.cols() + (t.cols() == 1 ? 0 : c);
}

// f(x, y) -> value; da(x, y, out, g) and db(...) -> partial contributions.
template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, const char* op, F f, DA da, DB db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto shape = broadcast_shape(av, bv, op);
  Tensor out(shape.rows, shape.cols);
  if (av.same_shape(bv)) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  } else {
    for (std::size_t r = 0; r < shape.rows; ++r)
      for (std::size_t c = 0; c < shape.cols; ++c)
        out(r, c) = f(av[bindex(av, r, c)], bv[bindex(bv, r, c)]);
  }
  return make_node(std::move(out), {a, b}, [da, db](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    const Tensor& g = n.grad;
    const Tensor& out = n.value;
    const Tensor& x = pa.value;
    const Tensor& y = pb.value;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) {
        const std::size_t ia = bindex(x, r, c);
        const std::size_t ib = bindex(y, r, c);
        const double gv = g(r, c);
        if (pa.requires_grad) pa.grad_buffer()[ia] += da(x[ia], y[ib], out(r, c), gv);
        if (pb.requires_grad) pb.grad_buffer()[ib] += db(x[ia], y[ib], out(r, c), gv);
      }
    }
  });
}

// f(x) -> y; df(x, y) -> dy/dx.
template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_node(std::move(out), {a}, [df](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t i = 0; i < n.value.size(); ++i) pg[i] += n.grad[i] * df(p.value[i], n.value[i]);
  });
}

double log_softplus(double x) { return x < -30.0 ? x : std::log(softplus(x)); }

double log_factorial(long k) {
  static const std::array<double, 1024> table = [] {
    std::array<double, 1024> t{};
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (k < static_cast<long>(table.size())) return table[static_cast<std::size_t>(k)];
  return std::lgamma(static_cast<double>(k) + 1.0);
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

double activity_logit_bound() {
  static const double bound = std::log((1.0 - 1e-7) / 1e-7);
  return bound;
}

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double, double g) { return g; },
      [](double, double, double, double g) { return g; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double, double g) { return g; },
      [](double, double, double, double g) { return -g; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double, double g) { return g * y; },
      [](double x, double, double, double g) { return g * x; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double, double g) { return g / y; },
      [](double, double y, double out, double g) { return -g * out / y; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double c) {
  return unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows())
    throw InvalidArgument("matmul: shape mismatch " + av.shape_string() + " * " +
                          bv.shape_string());
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out(m, n);
  kernels::active().gemm_nn(m, n, k, av.data(), bv.data(), out.data());
  return make_node(std::move(out), {a, b}, [m, k, n](Node& node) {
    Node& pa = *node.parents[0];
    Node& pb = *node.parents[1];
    const auto& kt = kernels::active();
    if (pa.requires_grad) kt.gemm_nt(m, k, n, node.grad.data(), pb.value.data(), pa.grad_buffer().data());
    if (pb.requires_grad) kt.gemm_tn(k, n, m, pa.value.data(), node.grad.data(), pb.grad_buffer().data());
  });
}

Var sigmoid(const Var& a) {
  return unary(
      a, [](double x) { return sigmoid(x); }, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return softplus(x); }, [](double x, double) { return sigmoid(x); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var logaddexp(const Var& a, const Var& b) {
  return binary(
      a, b, "logaddexp",
      [](double x, double y) {
        const double m = std::max(x, y);
        if (m == -std::numeric_limits<double>::infinity()) return m;
        return m + std::log1p(std::exp(-std::abs(x - y)));
      },
      [](double x, double, double out, double g) { return g * std::exp(x - out); },
      [](double, double y, double out, double g) { return g * std::exp(y - out); });
}

Var logsumexp_rows(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < av.cols(); ++c) m = std::max(m, av(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += std::exp(av(r, c) - m);
    out(r, 0) = m + std::log(s);
  }
  return make_node(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t r = 0; r < p.value.rows(); ++r)
      for (std::size_t c = 0; c < p.value.cols(); ++c)
        pg(r, c) += n.grad(r, 0) * std::exp(p.value(r, c) - n.value(r, 0));
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  return make_node(Tensor::scalar(s), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    const double g = n.grad[0];
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g;
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_cols(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) s += av(r, c);
    out(r, 0) = s;
  }
  return make_node(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t r = 0; r < pg.rows(); ++r)
      for (std::size_t c = 0; c < pg.cols(); ++c) pg(r, c) += n.grad(r, 0);
  });
}

Var sum_rows(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
  return make_node(std::move(out), {a}, [](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t r = 0; r < pg.rows(); ++r)
      for (std::size_t c = 0; c < pg.cols(); ++c) pg(r, c) += n.grad(0, c);
  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require(begin <= end && end <= av.cols(), "slice_cols: range [" + std::to_string(begin) + ", " +
                                                std::to_string(end) + ") out of " +
                                                av.shape_string());
  const std::size_t w = end - begin;
  Tensor out(av.rows(), w);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < w; ++c) out(r, c) = av(r, begin + c);
  return make_node(std::move(out), {a}, [begin, w](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t r = 0; r < pg.rows(); ++r)
      for (std::size_t c = 0; c < w; ++c) pg(r, begin + c) += n.grad(r, c);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    total += p.cols();
  }
  Tensor out(rows, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p.value()(r, c);
    off += p.cols();
  }
  return make_node(std::move(out), parts, [](Node& n) {
    std::size_t off = 0;
    for (auto& pp : n.parents) {
      const std::size_t w = pp->value.cols();
      if (pp->requires_grad) {
        Tensor& pg = pp->grad_buffer();
        for (std::size_t r = 0; r < pg.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) pg(r, c) += n.grad(r, off + c);
      }
      off += w;
    }
  });
}

Var gather_cols(const Var& a, const std::vector<std::size_t>& index, std::size_t rows,
                std::size_t cols) {
  const Tensor& av = a.value();
  require(index.size() == rows * cols, "gather_cols: index table size mismatch");
  require(av.rows() == rows || av.rows() == 1, "gather_cols: row mismatch");
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t src = av.rows() == 1 ? 0 : r;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t j = index[r * cols + c];
      require(j < av.cols(), "gather_cols: index out of range");
      out(r, c) = av(src, j);
    }
  }
  return make_node(std::move(out), {a}, [index, rows, cols](Node& n) {
    Node& p = *n.parents[0];
    Tensor& pg = p.grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t src = pg.rows() == 1 ? 0 : r;
      for (std::size_t c = 0; c < cols; ++c) pg(src, index[r * cols + c]) += n.grad(r, c);
    }
  });
}

Var zip_log_prob(const Var& logit_alpha, const Var& pre_lambda, const Tensor& counts) {
  const Tensor& la = logit_alpha.value();
  const Tensor& pl = pre_lambda.value();
  require(la.same_shape(pl) && la.same_shape(counts),
          "zip_log_prob: shapes " + la.shape_string() + ", " + pl.shape_string() + ", " +
              counts.shape_string() + " differ");
  const double bound = activity_logit_bound();
  Tensor out(la.rows(), la.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = std::clamp(la[i], -bound, bound);
    const double lambda = softplus(pl[i]);
    const double k = counts[i];
    if (k > 0.0) {
      out[i] = log_sigmoid(a) + k * log_softplus(pl[i]) - lambda -
               log_factorial(static_cast<long>(k));
    } else {
      const double x = log_sigmoid(-a);
      const double y = log_sigmoid(a) - lambda;
      const double m = std::max(x, y);
      out[i] = m + std::log1p(std::exp(-std::abs(x - y)));
    }
  }
  return make_node(std::move(out), {logit_alpha, pre_lambda}, [counts, bound](Node& n) {
    Node& pa = *n.parents[0];
    Node& pl = *n.parents[1];
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      const double raw = pa.value[i];
      const bool clipped = raw < -bound || raw > bound;
      const double a = std::clamp(raw, -bound, bound);
      const double s = sigmoid(a);
      const double r = pl.value[i];
      const double lambda = softplus(r);
      const double k = counts[i];
      // d lambda / d r = sigmoid(r); sigmoid(r) / lambda -> 1 as r -> -inf.
      const double link = sigmoid(r);
      const double link_over_lambda = r < -30.0 ? 1.0 : link / lambda;
      double d_a, d_r;
      if (k > 0.0) {
        d_a = 1.0 - s;
        d_r = k * link_over_lambda - link;
      } else {
        const double w = std::exp(log_sigmoid(a) - lambda - n.value[i]);
        d_a = w - s;
        d_r = -w * link;
      }
      const double g = n.grad[i];
      if (pa.requires_grad && !clipped) pa.grad_buffer()[i] += g * d_a;
      if (pl.requires_grad) pl.grad_buffer()[i] += g * d_r;
    }
  });
}

}  // namespace phantom::ad
