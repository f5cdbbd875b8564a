#pragma once

// Reverse-mode automatic differentiation over dense double tensors.
// Ops build a dynamic graph of shared nodes; backward() walks it once in
// reverse topological order. The op set is exactly what the network and
// losses need -- this is not a general-purpose autodiff.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "gmva/tensor.hpp"

namespace gmva {

namespace detail {

struct ValueNode {
  Tensor value;
  Tensor grad;  // lazily allocated, same shape as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<ValueNode>> parents;
  // Pulls this node's grad into the parents' grads.
  std::function<void(ValueNode&)> backprop;

  Tensor& ensure_grad() {
    if (grad.data.size() != value.data.size()) grad = Tensor(value.shape);
    return grad;
  }
};

}  // namespace detail

class Value {
 public:
  Value() = default;
  explicit Value(Tensor t, bool requires_grad = false) {
    node_ = std::make_shared<detail::ValueNode>();
    node_->value = std::move(t);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& tensor() const { return node_->value; }
  Tensor& tensor() { return node_->value; }
  const Tensor& grad() const { return node_->ensure_grad(); }
  bool requires_grad() const { return node_->requires_grad; }

  int rows() const { return tensor().rows(); }
  int cols() const { return tensor().cols(); }
  double item() const {
    if (tensor().numel() != 1) throw std::logic_error("Value::item: not a scalar");
    return tensor().data[0];
  }

  std::shared_ptr<detail::ValueNode> node() const { return node_; }

  static Value constant(Tensor t) { return Value(std::move(t), false); }
  static Value param(Tensor t) { return Value(std::move(t), true); }

 private:
  std::shared_ptr<detail::ValueNode> node_;
};

namespace detail {

inline Value make_node(Tensor value, std::vector<Value> parents,
                       std::function<void(ValueNode&)> backprop) {
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  Value out(std::move(value), needs);
  if (needs) {
    auto n = out.node();
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
  }
  return out;
}

// C = A(^T) * B(^T)
inline Tensor mm(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  const int am = a.rows(), an = a.cols();
  const int bm = b.rows(), bn = b.cols();
  const int m = ta ? an : am;
  const int k = ta ? am : an;
  const int k2 = tb ? bn : bm;
  const int n = tb ? bm : bn;
  if (k != k2)
    throw std::invalid_argument("matmul: inner dimensions disagree: " + a.shape_str() + " vs " +
                                b.shape_str());
  Tensor c(m, n);
  const double* ad = a.data.data();
  const double* bd = b.data.data();
  double* cd = c.data.data();
  if (!ta && !tb) {
    for (int i = 0; i < m; ++i) {
      const double* arow = ad + static_cast<std::size_t>(i) * k;
      double* crow = cd + static_cast<std::size_t>(i) * n;
      for (int p = 0; p < k; ++p) {
        const double av = arow[p];
        if (av == 0.0) continue;
        const double* brow = bd + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (ta && !tb) {
    for (int p = 0; p < k; ++p) {
      const double* arow = ad + static_cast<std::size_t>(p) * m;
      const double* brow = bd + static_cast<std::size_t>(p) * n;
      for (int i = 0; i < m; ++i) {
        const double av = arow[i];
        if (av == 0.0) continue;
        double* crow = cd + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else if (!ta && tb) {
    for (int i = 0; i < m; ++i) {
      const double* arow = ad + static_cast<std::size_t>(i) * k;
      double* crow = cd + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* brow = bd + static_cast<std::size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
        crow[j] = acc;
      }
    }
  } else {
    for (int i = 0; i < m; ++i) {
      double* crow = cd + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* brow = bd + static_cast<std::size_t>(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += ad[static_cast<std::size_t>(p) * m + i] * brow[p];
        crow[j] = acc;
      }
    }
  }
  return c;
}

inline void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace detail

// ---- elementwise and structural ops ----

inline Value add(const Value& a, const Value& b) {
  if (!a.tensor().same_shape(b.tensor()))
    throw std::invalid_argument("add: shape mismatch " + a.tensor().shape_str() + " vs " +
                                b.tensor().shape_str());
  Tensor out = a.tensor();
  detail::add_into(out, b.tensor());
  return detail::make_node(std::move(out), {a, b}, [](detail::ValueNode& n) {
    for (auto& p : n.parents)
      if (p->requires_grad) detail::add_into(p->ensure_grad(), n.grad);
  });
}

inline Value sub(const Value& a, const Value& b) {
  if (!a.tensor().same_shape(b.tensor()))
    throw std::invalid_argument("sub: shape mismatch");
  Tensor out = a.tensor();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.tensor().data[i];
  return detail::make_node(std::move(out), {a, b}, [](detail::ValueNode& n) {
    if (n.parents[0]->requires_grad) detail::add_into(n.parents[0]->ensure_grad(), n.grad);
    if (n.parents[1]->requires_grad) {
      Tensor& g = n.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] -= n.grad.data[i];
    }
  });
}

inline Value mul(const Value& a, const Value& b) {
  if (!a.tensor().same_shape(b.tensor()))
    throw std::invalid_argument("mul: shape mismatch");
  Tensor out = a.tensor();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.tensor().data[i];
  return detail::make_node(std::move(out), {a, b}, [](detail::ValueNode& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor& g = n.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] * bv.data[i];
    }
    if (n.parents[1]->requires_grad) {
      Tensor& g = n.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] * av.data[i];
    }
  });
}

inline Value scale(const Value& a, double c) {
  Tensor out = a.tensor();
  for (double& v : out.data) v *= c;
  return detail::make_node(std::move(out), {a}, [c](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += c * n.grad.data[i];
  });
}

inline Value add_const(const Value& a, double c) {
  Tensor out = a.tensor();
  for (double& v : out.data) v += c;
  return detail::make_node(std::move(out), {a}, [](detail::ValueNode& n) {
    if (n.parents[0]->requires_grad) detail::add_into(n.parents[0]->ensure_grad(), n.grad);
  });
}

inline Value matmul(const Value& a, const Value& b) {
  Tensor out = detail::mm(a.tensor(), b.tensor(), false, false);
  return detail::make_node(std::move(out), {a, b}, [](detail::ValueNode& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad)
      detail::add_into(n.parents[0]->ensure_grad(), detail::mm(n.grad, bv, false, true));
    if (n.parents[1]->requires_grad)
      detail::add_into(n.parents[1]->ensure_grad(), detail::mm(av, n.grad, true, false));
  });
}

inline Value transpose(const Value& a) {
  const int m = a.rows(), n = a.cols();
  Tensor out(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.tensor().at(i, j);
  return detail::make_node(std::move(out), {a}, [m, n](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) g.at(i, j) += nd.grad.at(j, i);
  });
}

// x: (m x n), bias: (1 x n), broadcast over rows
inline Value add_rowvec(const Value& x, const Value& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols())
    throw std::invalid_argument("add_rowvec: bias must be (1 x cols)");
  Tensor out = x.tensor();
  const int m = x.rows(), n = x.cols();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(i, j) += bias.tensor().at(0, j);
  return detail::make_node(std::move(out), {x, bias}, [m, n](detail::ValueNode& nd) {
    if (nd.parents[0]->requires_grad) detail::add_into(nd.parents[0]->ensure_grad(), nd.grad);
    if (nd.parents[1]->requires_grad) {
      Tensor& g = nd.parents[1]->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g.at(0, j) += nd.grad.at(i, j);
    }
  });
}

inline Value relu(const Value& a) {
  Tensor out = a.tensor();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return detail::make_node(std::move(out), {a}, [](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i)
      if (x.data[i] > 0.0) g.data[i] += n.grad.data[i];
  });
}

inline double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline Value sigmoid(const Value& a) {
  Tensor out = a.tensor();
  for (double& v : out.data) v = sigmoid_scalar(v);
  return detail::make_node(std::move(out), {a}, [](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) {
      double s = n.value.data[i];
      g.data[i] += n.grad.data[i] * s * (1.0 - s);
    }
  });
}

inline Value exp_(const Value& a) {
  Tensor out = a.tensor();
  for (double& v : out.data) v = std::exp(v);
  return detail::make_node(std::move(out), {a}, [](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] * n.value.data[i];
  });
}

inline Value log_(const Value& a) {
  Tensor out = a.tensor();
  for (double& v : out.data) {
    if (v <= 0.0) throw std::domain_error("log: non-positive input");
    v = std::log(v);
  }
  return detail::make_node(std::move(out), {a}, [](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += n.grad.data[i] / x.data[i];
  });
}

// Gradient passes through the interior, zero outside [lo, hi].
inline Value clamp(const Value& a, double lo, double hi) {
  Tensor out = a.tensor();
  for (double& v : out.data) v = std::min(hi, std::max(lo, v));
  return detail::make_node(std::move(out), {a}, [lo, hi](detail::ValueNode& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor& g = n.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i)
      if (x.data[i] >= lo && x.data[i] <= hi) g.data[i] += n.grad.data[i];
  });
}

inline Value softmax_rows(const Value& a) {
  const int m = a.rows(), n = a.cols();
  if (n < 1) throw std::invalid_argument("softmax_rows: empty rows");
  Tensor out(m, n);
  for (int i = 0; i < m; ++i) {
    double mx = a.tensor().at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, a.tensor().at(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(a.tensor().at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= sum;
  }
  return detail::make_node(std::move(out), {a}, [m, n](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += nd.grad.at(i, j) * nd.value.at(i, j);
      for (int j = 0; j < n; ++j)
        g.at(i, j) += nd.value.at(i, j) * (nd.grad.at(i, j) - dot);
    }
  });
}

// Row-wise softmax restricted to mask-true entries; rows with no allowed
// entry come out all-zero. mask is structural (not differentiated).
inline Value masked_softmax_rows(const Value& a, const std::vector<std::uint8_t>& mask) {
  const int m = a.rows(), n = a.cols();
  if (mask.size() != static_cast<std::size_t>(m) * n)
    throw std::invalid_argument("masked_softmax_rows: mask size mismatch");
  Tensor out(m, n);
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(i) * n + j]) mx = std::max(mx, a.tensor().at(i, j));
    if (!std::isfinite(mx)) continue;  // empty row
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!mask[static_cast<std::size_t>(i) * n + j]) continue;
      double e = std::exp(a.tensor().at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j)
      if (mask[static_cast<std::size_t>(i) * n + j]) out.at(i, j) /= sum;
  }
  return detail::make_node(std::move(out), {a}, [m, n, mask](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j)
        if (mask[static_cast<std::size_t>(i) * n + j]) dot += nd.grad.at(i, j) * nd.value.at(i, j);
      for (int j = 0; j < n; ++j)
        if (mask[static_cast<std::size_t>(i) * n + j])
          g.at(i, j) += nd.value.at(i, j) * (nd.grad.at(i, j) - dot);
    }
  });
}

// Normalizes each row to zero mean / unit variance, then applies gain and
// bias (both 1 x n).
inline Value layer_norm(const Value& x, const Value& gain, const Value& bias,
                        double eps = 1e-5) {
  const int m = x.rows(), n = x.cols();
  if (gain.cols() != n || bias.cols() != n || gain.rows() != 1 || bias.rows() != 1)
    throw std::invalid_argument("layer_norm: gain/bias must be (1 x cols)");
  Tensor out(m, n);
  Tensor xhat(m, n);
  std::vector<double> inv_std(m);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += x.tensor().at(i, j);
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = x.tensor().at(i, j) - mean;
      var += d * d;
    }
    var /= n;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (int j = 0; j < n; ++j) {
      double xh = (x.tensor().at(i, j) - mean) * is;
      xhat.at(i, j) = xh;
      out.at(i, j) = gain.tensor().at(0, j) * xh + bias.tensor().at(0, j);
    }
  }
  return detail::make_node(
      std::move(out), {x, gain, bias},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::ValueNode& nd) {
        const Tensor& gainv = nd.parents[1]->value;
        if (nd.parents[1]->requires_grad) {
          Tensor& gg = nd.parents[1]->ensure_grad();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) gg.at(0, j) += nd.grad.at(i, j) * xhat.at(i, j);
        }
        if (nd.parents[2]->requires_grad) {
          Tensor& gb = nd.parents[2]->ensure_grad();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) gb.at(0, j) += nd.grad.at(i, j);
        }
        if (nd.parents[0]->requires_grad) {
          Tensor& gx = nd.parents[0]->ensure_grad();
          for (int i = 0; i < m; ++i) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (int j = 0; j < n; ++j) {
              double dxh = nd.grad.at(i, j) * gainv.at(0, j);
              mean_dxhat += dxh;
              mean_dxhat_xhat += dxh * xhat.at(i, j);
            }
            mean_dxhat /= n;
            mean_dxhat_xhat /= n;
            for (int j = 0; j < n; ++j) {
              double dxh = nd.grad.at(i, j) * gainv.at(0, j);
              gx.at(i, j) += inv_std[i] * (dxh - mean_dxhat - xhat.at(i, j) * mean_dxhat_xhat);
            }
          }
        }
      });
}

// Concatenate along the last (column) dimension; all inputs share the row count.
inline Value concat_last(const std::vector<Value>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_last: no inputs");
  const int m = xs[0].rows();
  int total = 0;
  for (const auto& x : xs) {
    if (x.rows() != m) throw std::invalid_argument("concat_last: row count mismatch");
    total += x.cols();
  }
  Tensor out(m, total);
  int off = 0;
  std::vector<int> offsets;
  for (const auto& x : xs) {
    offsets.push_back(off);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < x.cols(); ++j) out.at(i, off + j) = x.tensor().at(i, j);
    off += x.cols();
  }
  return detail::make_node(std::move(out), xs, [m, offsets](detail::ValueNode& nd) {
    for (std::size_t p = 0; p < nd.parents.size(); ++p) {
      if (!nd.parents[p]->requires_grad) continue;
      Tensor& g = nd.parents[p]->ensure_grad();
      const int w = g.cols();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j) g.at(i, j) += nd.grad.at(i, offsets[p] + j);
    }
  });
}

// Stack vertically; all inputs share the column count.
inline Value concat_rows(const std::vector<Value>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int n = xs[0].cols();
  int total = 0;
  for (const auto& x : xs) {
    if (x.cols() != n) throw std::invalid_argument("concat_rows: column count mismatch");
    total += x.rows();
  }
  Tensor out(total, n);
  int off = 0;
  std::vector<int> offsets;
  for (const auto& x : xs) {
    offsets.push_back(off);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < n; ++j) out.at(off + i, j) = x.tensor().at(i, j);
    off += x.rows();
  }
  return detail::make_node(std::move(out), xs, [n, offsets](detail::ValueNode& nd) {
    for (std::size_t p = 0; p < nd.parents.size(); ++p) {
      if (!nd.parents[p]->requires_grad) continue;
      Tensor& g = nd.parents[p]->ensure_grad();
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < n; ++j) g.at(i, j) += nd.grad.at(offsets[p] + i, j);
    }
  });
}

inline Value gather_rows(const Value& x, const std::vector<int>& idx) {
  const int n = x.cols();
  Tensor out(static_cast<int>(idx.size()), n);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= x.rows()) throw std::out_of_range("gather_rows: index");
    for (int j = 0; j < n; ++j) out.at(static_cast<int>(i), j) = x.tensor().at(idx[i], j);
  }
  return detail::make_node(std::move(out), {x}, [idx, n](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < n; ++j) g.at(idx[i], j) += nd.grad.at(static_cast<int>(i), j);
  });
}

// Zero out rows where keep[i] is false.
inline Value mask_rows(const Value& x, const std::vector<std::uint8_t>& keep) {
  const int m = x.rows(), n = x.cols();
  if (keep.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("mask_rows: mask length mismatch");
  Tensor out = x.tensor();
  for (int i = 0; i < m; ++i)
    if (!keep[i])
      for (int j = 0; j < n; ++j) out.at(i, j) = 0.0;
  return detail::make_node(std::move(out), {x}, [keep, n](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i])
        for (int j = 0; j < n; ++j) g.at(static_cast<int>(i), j) += nd.grad.at(static_cast<int>(i), j);
  });
}

// Mean over the rows selected by mask; output is (1 x cols).
inline Value mean_rows(const Value& x, const std::vector<std::uint8_t>& mask) {
  const int m = x.rows(), n = x.cols();
  if (mask.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("mean_rows: mask length mismatch");
  int count = 0;
  for (auto b : mask) count += b ? 1 : 0;
  if (count == 0) throw std::invalid_argument("mean_rows: no selected rows");
  Tensor out(1, n);
  for (int i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    for (int j = 0; j < n; ++j) out.at(0, j) += x.tensor().at(i, j);
  }
  for (int j = 0; j < n; ++j) out.at(0, j) /= count;
  return detail::make_node(std::move(out), {x}, [mask, n, count](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i])
        for (int j = 0; j < n; ++j)
          g.at(static_cast<int>(i), j) += nd.grad.at(0, j) / count;
  });
}

inline Value sum_all(const Value& x) {
  double s = 0.0;
  for (double v : x.tensor().data) s += v;
  return detail::make_node(Tensor::scalar(s), {x}, [](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    const double gd = nd.grad.data[0];
    for (double& v : g.data) v += gd;
  });
}

inline Value reshape(const Value& x, std::vector<int> shape) {
  if (Tensor::numel_of(shape) != x.tensor().numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out;
  out.shape = std::move(shape);
  out.data = x.tensor().data;
  return detail::make_node(std::move(out), {x}, [](detail::ValueNode& nd) {
    if (!nd.parents[0]->requires_grad) return;
    Tensor& g = nd.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += nd.grad.data[i];
  });
}

// Additive attention scores: s_ij = v . tanh(q_i + k_j).
// q, k: (n x d); v: (d x 1); output (n x n).
inline Value additive_scores(const Value& q, const Value& k, const Value& v) {
  const int nq = q.rows(), nk = k.rows(), d = q.cols();
  if (k.cols() != d || v.rows() != d || v.cols() != 1)
    throw std::invalid_argument("additive_scores: shape mismatch");
  Tensor out(nq, nk);
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nk; ++j) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c)
        acc += v.tensor().at(c, 0) * std::tanh(q.tensor().at(i, c) + k.tensor().at(j, c));
      out.at(i, j) = acc;
    }
  return detail::make_node(std::move(out), {q, k, v}, [nq, nk, d](detail::ValueNode& nd) {
    const Tensor& qv = nd.parents[0]->value;
    const Tensor& kv = nd.parents[1]->value;
    const Tensor& vv = nd.parents[2]->value;
    Tensor* gq = nd.parents[0]->requires_grad ? &nd.parents[0]->ensure_grad() : nullptr;
    Tensor* gk = nd.parents[1]->requires_grad ? &nd.parents[1]->ensure_grad() : nullptr;
    Tensor* gv = nd.parents[2]->requires_grad ? &nd.parents[2]->ensure_grad() : nullptr;
    for (int i = 0; i < nq; ++i)
      for (int j = 0; j < nk; ++j) {
        const double go = nd.grad.at(i, j);
        if (go == 0.0) continue;
        for (int c = 0; c < d; ++c) {
          double t = std::tanh(qv.at(i, c) + kv.at(j, c));
          double dtanh = 1.0 - t * t;
          if (gq) gq->at(i, c) += go * vv.at(c, 0) * dtanh;
          if (gk) gk->at(j, c) += go * vv.at(c, 0) * dtanh;
          if (gv) gv->at(c, 0) += go * t;
        }
      }
  });
}

inline Value make_custom_op(Tensor value, std::vector<Value> parents,
                            std::function<void(detail::ValueNode&)> backprop) {
  return detail::make_node(std::move(value), std::move(parents), std::move(backprop));
}

// Accumulates gradients into every reachable requires_grad node. Leaf
// gradients accumulate across repeated calls; interior gradients are
// recomputed fresh each call.
inline void backward(const Value& loss) {
  if (loss.tensor().numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + loss.tensor().shape_str());
  if (!loss.requires_grad()) return;

  std::vector<detail::ValueNode*> order;
  std::unordered_set<detail::ValueNode*> seen;
  std::vector<std::pair<detail::ValueNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::ValueNode* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // order is now topological (parents before children); walk it backwards
  for (detail::ValueNode* n : order)
    if (!n->parents.empty()) n->ensure_grad().fill(0.0);
  loss.node()->ensure_grad().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::ValueNode* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace gmva
