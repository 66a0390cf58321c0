#pragma once

// Dense float64 tensors with reverse-mode autodiff over the op set the model
// needs. Operations execute eagerly; when an operand sits on a Tape the op
// also appends a backward record, and Tape::backward walks the records in
// reverse (creation order is topological by construction). Tensors attached
// to a tape are never mutated in place; parameter updates happen on detached
// tensors between steps.
//
// A tape is single-threaded. Distinct tapes may live on distinct threads;
// tensors without a tape are immutable values and safe to share.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tyfo/errors.hpp"

namespace tyfo {

using Shape = std::vector<int>;

class Tape;

namespace detail {

struct TapeNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Tape* tape = nullptr;
    std::vector<std::shared_ptr<TapeNode>> inputs;
    std::function<void(TapeNode&)> backward;

    int64_t size() const { return static_cast<int64_t>(value.size()); }
};

inline int64_t shape_size(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

}  // namespace detail

class Tensor {
  public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<double> data) : node_(std::make_shared<detail::TapeNode>()) {
        for (int d : shape)
            if (d <= 0) throw ShapeMismatch("tensor", detail::shape_str(shape));
        if (detail::shape_size(shape) != static_cast<int64_t>(data.size()))
            throw ShapeMismatch("tensor", detail::shape_str(shape) + " vs " + std::to_string(data.size()) + " values");
        node_->shape = std::move(shape);
        node_->value = std::move(data);
    }

    static Tensor zeros(Shape shape) {
        std::vector<double> d(static_cast<size_t>(detail::shape_size(shape)), 0.0);
        return Tensor(std::move(shape), std::move(d));
    }

    static Tensor full(Shape shape, double v) {
        std::vector<double> d(static_cast<size_t>(detail::shape_size(shape)), v);
        return Tensor(std::move(shape), std::move(d));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor row(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Tensor({1, n}, std::move(v));
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t size() const { return node_->size(); }
    int rows() const { return node_->shape.size() == 2 ? node_->shape[0] : 1; }
    int cols() const { return node_->shape.back(); }
    int ndim() const { return static_cast<int>(node_->shape.size()); }

    const std::vector<double>& data() const { return node_->value; }

    // Writable view; forbidden once the tensor participates in a tape.
    std::vector<double>& mutable_data() {
        if (node_->tape) throw Error("tensor is attached to a tape; in-place mutation is forbidden");
        return node_->value;
    }

    double item() const {
        if (size() != 1) throw ShapeMismatch("item", detail::shape_str(shape()));
        return node_->value[0];
    }

    double at(int r, int c) const { return node_->value[static_cast<size_t>(r) * cols() + c]; }

    const std::vector<double>& grad() const {
        if (node_->grad.empty()) throw Error("no gradient recorded; call Tape::backward first");
        return node_->grad;
    }

    bool on_tape() const { return node_->tape != nullptr; }

    Tensor detached() const { return Tensor(shape(), data()); }

    std::shared_ptr<detail::TapeNode> node_;  // internal; ops and Tape use this directly
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Copies `value` onto this tape as a differentiable leaf.
    Tensor var(const Tensor& value) {
        Tensor leaf(value.shape(), value.data());
        leaf.node_->tape = this;
        records_.push_back(leaf.node_);
        return leaf;
    }

    void record(std::shared_ptr<detail::TapeNode> n) { records_.push_back(std::move(n)); }

    size_t size() const { return records_.size(); }

    void backward(const Tensor& loss) {
        if (!loss.defined() || loss.node_->tape != this) throw Error("loss is not on this tape");
        if (loss.size() != 1) throw NotScalarLoss();
        for (auto& n : records_) n->grad.assign(n->value.size(), 0.0);
        loss.node_->grad[0] = 1.0;
        for (auto it = records_.rbegin(); it != records_.rend(); ++it)
            if ((*it)->backward) (*it)->backward(**it);
    }

  private:
    std::vector<std::shared_ptr<detail::TapeNode>> records_;
};

namespace detail {

inline Tape* common_tape(const std::vector<Tensor>& inputs, const char* op) {
    Tape* t = nullptr;
    for (const auto& in : inputs) {
        if (!in.node_->tape) continue;
        if (t && t != in.node_->tape) throw Error(std::string(op) + ": operands belong to different tapes");
        t = in.node_->tape;
    }
    return t;
}

inline Tensor make_op(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                      std::function<void(TapeNode&)> bw) {
    Tensor out(std::move(shape), std::move(value));
    Tape* tape = common_tape(inputs, op);
    if (tape) {
        out.node_->tape = tape;
        out.node_->inputs.reserve(inputs.size());
        for (auto& in : inputs) out.node_->inputs.push_back(in.node_);
        out.node_->backward = std::move(bw);
        tape->record(out.node_);
    }
    return out;
}

// Gradients flow only into nodes that live on a tape.
inline void acc(TapeNode& n, size_t i, double v) {
    if (n.tape) n.grad[i] += v;
}

inline bool wants_grad(const TapeNode& n) { return n.tape != nullptr; }

}  // namespace detail

// ---- elementwise -----------------------------------------------------------

inline Tensor sigmoid(const Tensor& x) {
    std::vector<double> v(x.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
    return detail::make_op("sigmoid", x.shape(), std::move(v), {x}, [](detail::TapeNode& self) {
        auto& xin = *self.inputs[0];
        for (size_t i = 0; i < self.value.size(); ++i) {
            double y = self.value[i];
            detail::acc(xin, i, self.grad[i] * y * (1.0 - y));
        }
    });
}

inline Tensor tanh(const Tensor& x) {
    std::vector<double> v(x.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(x.data()[i]);
    return detail::make_op("tanh", x.shape(), std::move(v), {x}, [](detail::TapeNode& self) {
        auto& xin = *self.inputs[0];
        for (size_t i = 0; i < self.value.size(); ++i) {
            double y = self.value[i];
            detail::acc(xin, i, self.grad[i] * (1.0 - y * y));
        }
    });
}

inline Tensor relu(const Tensor& x) {
    std::vector<double> v(x.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    return detail::make_op("relu", x.shape(), std::move(v), {x}, [](detail::TapeNode& self) {
        auto& xin = *self.inputs[0];
        for (size_t i = 0; i < self.value.size(); ++i)
            if (xin.value[i] > 0.0) detail::acc(xin, i, self.grad[i]);
    });
}

inline Tensor scale(const Tensor& x, double c) {
    std::vector<double> v(x.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = c * x.data()[i];
    return detail::make_op("scale", x.shape(), std::move(v), {x}, [c](detail::TapeNode& self) {
        auto& xin = *self.inputs[0];
        for (size_t i = 0; i < self.value.size(); ++i) detail::acc(xin, i, c * self.grad[i]);
    });
}

// ---- arithmetic -------------------------------------------------------------

// b must either match a's shape or be a suffix of it (e.g. bias {d} against
// {T,d}); the broadcast gradient sums over the leading axes.
inline Tensor add(const Tensor& a, const Tensor& b) {
    bool same = a.shape() == b.shape();
    bool suffix = !same && b.ndim() < a.ndim() &&
                  std::equal(b.shape().begin(), b.shape().end(), a.shape().end() - b.ndim());
    if (!same && !suffix)
        throw ShapeMismatch("add", detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
    size_t bn = b.data().size();
    std::vector<double> v(a.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] + b.data()[i % bn];
    return detail::make_op("add", a.shape(), std::move(v), {a, b}, [bn](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        auto& bnn = *self.inputs[1];
        for (size_t i = 0; i < self.value.size(); ++i) {
            detail::acc(an, i, self.grad[i]);
            detail::acc(bnn, i % bn, self.grad[i]);
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeMismatch("sub", detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
    std::vector<double> v(a.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] - b.data()[i];
    return detail::make_op("sub", a.shape(), std::move(v), {a, b}, [](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        auto& bn = *self.inputs[1];
        for (size_t i = 0; i < self.value.size(); ++i) {
            detail::acc(an, i, self.grad[i]);
            detail::acc(bn, i, -self.grad[i]);
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeMismatch("mul", detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
    std::vector<double> v(a.data().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.data()[i] * b.data()[i];
    return detail::make_op("mul", a.shape(), std::move(v), {a, b}, [](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        auto& bn = *self.inputs[1];
        for (size_t i = 0; i < self.value.size(); ++i) {
            detail::acc(an, i, self.grad[i] * bn.value[i]);
            detail::acc(bn, i, self.grad[i] * an.value[i]);
        }
    });
}

// ---- linear algebra ---------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeMismatch("matmul", detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
    int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> v(static_cast<size_t>(m) * n, 0.0);
    const auto& ad = a.data();
    const auto& bd = b.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double aip = ad[static_cast<size_t>(i) * k + p];
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j) v[static_cast<size_t>(i) * n + j] += aip * bd[static_cast<size_t>(p) * n + j];
        }
    return detail::make_op("matmul", {m, n}, std::move(v), {a, b}, [m, k, n](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        auto& bn = *self.inputs[1];
        // dA = dC . B^T, dB = A^T . dC
        if (detail::wants_grad(an))
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (int j = 0; j < n; ++j)
                        s += self.grad[static_cast<size_t>(i) * n + j] * bn.value[static_cast<size_t>(p) * n + j];
                    an.grad[static_cast<size_t>(i) * k + p] += s;
                }
        if (detail::wants_grad(bn))
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int i = 0; i < m; ++i)
                        s += an.value[static_cast<size_t>(i) * k + p] * self.grad[static_cast<size_t>(i) * n + j];
                    bn.grad[static_cast<size_t>(p) * n + j] += s;
                }
    });
}

inline Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw ShapeMismatch("transpose", detail::shape_str(a.shape()));
    int m = a.shape()[0], n = a.shape()[1];
    std::vector<double> v(a.data().size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) v[static_cast<size_t>(j) * m + i] = a.data()[static_cast<size_t>(i) * n + j];
    return detail::make_op("transpose", {n, m}, std::move(v), {a}, [m, n](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                detail::acc(an, static_cast<size_t>(i) * n + j, self.grad[static_cast<size_t>(j) * m + i]);
    });
}

// ---- shaping ----------------------------------------------------------------

inline Tensor concat(const Tensor& a, const Tensor& b) {  // last axis
    if (a.ndim() != b.ndim()) throw ShapeMismatch("concat", "rank mismatch");
    if (a.ndim() == 1) {
        std::vector<double> v(a.data());
        v.insert(v.end(), b.data().begin(), b.data().end());
        int p = a.shape()[0];
        return detail::make_op("concat", {p + b.shape()[0]}, std::move(v), {a, b}, [p](detail::TapeNode& self) {
            auto& an = *self.inputs[0];
            auto& bn = *self.inputs[1];
            for (size_t i = 0; i < self.value.size(); ++i) {
                if (static_cast<int>(i) < p)
                    detail::acc(an, i, self.grad[i]);
                else
                    detail::acc(bn, i - p, self.grad[i]);
            }
        });
    }
    if (a.ndim() != 2 || a.shape()[0] != b.shape()[0])
        throw ShapeMismatch("concat", detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
    int m = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
    std::vector<double> v(static_cast<size_t>(m) * (p + q));
    for (int i = 0; i < m; ++i) {
        std::copy_n(a.data().begin() + static_cast<size_t>(i) * p, p, v.begin() + static_cast<size_t>(i) * (p + q));
        std::copy_n(b.data().begin() + static_cast<size_t>(i) * q, q,
                    v.begin() + static_cast<size_t>(i) * (p + q) + p);
    }
    return detail::make_op("concat", {m, p + q}, std::move(v), {a, b}, [m, p, q](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        auto& bn = *self.inputs[1];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < p + q; ++j) {
                double g = self.grad[static_cast<size_t>(i) * (p + q) + j];
                if (j < p)
                    detail::acc(an, static_cast<size_t>(i) * p + j, g);
                else
                    detail::acc(bn, static_cast<size_t>(i) * q + (j - p), g);
            }
    });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {  // axis 0
    if (parts.empty()) throw ShapeMismatch("concat_rows", "no inputs");
    int n = parts[0].cols();
    int rows = 0;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.cols() != n) throw ShapeMismatch("concat_rows", detail::shape_str(p.shape()));
        rows += p.shape()[0];
    }
    std::vector<double> v;
    v.reserve(static_cast<size_t>(rows) * n);
    for (const auto& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
    std::vector<int> block_rows;
    for (const auto& p : parts) block_rows.push_back(p.shape()[0]);
    return detail::make_op("concat_rows", {rows, n}, std::move(v), parts, [block_rows, n](detail::TapeNode& self) {
        size_t off = 0;
        for (size_t b = 0; b < block_rows.size(); ++b) {
            auto& in = *self.inputs[b];
            size_t cnt = static_cast<size_t>(block_rows[b]) * n;
            for (size_t i = 0; i < cnt; ++i) detail::acc(in, i, self.grad[off + i]);
            off += cnt;
        }
    });
}

inline Tensor slice_rows(const Tensor& a, int r0, int r1) {
    if (a.ndim() != 2 || r0 < 0 || r1 > a.shape()[0] || r0 >= r1)
        throw ShapeMismatch("slice_rows", detail::shape_str(a.shape()));
    int n = a.shape()[1];
    std::vector<double> v(a.data().begin() + static_cast<size_t>(r0) * n, a.data().begin() + static_cast<size_t>(r1) * n);
    return detail::make_op("slice_rows", {r1 - r0, n}, std::move(v), {a}, [r0, n](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (size_t i = 0; i < self.value.size(); ++i) detail::acc(an, static_cast<size_t>(r0) * n + i, self.grad[i]);
    });
}

inline Tensor slice_cols(const Tensor& a, int c0, int c1) {
    if (a.ndim() != 2 || c0 < 0 || c1 > a.shape()[1] || c0 >= c1)
        throw ShapeMismatch("slice_cols", detail::shape_str(a.shape()));
    int m = a.shape()[0], n = a.shape()[1], w = c1 - c0;
    std::vector<double> v(static_cast<size_t>(m) * w);
    for (int i = 0; i < m; ++i)
        std::copy_n(a.data().begin() + static_cast<size_t>(i) * n + c0, w, v.begin() + static_cast<size_t>(i) * w);
    return detail::make_op("slice_cols", {m, w}, std::move(v), {a}, [m, n, c0, w](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
                detail::acc(an, static_cast<size_t>(i) * n + c0 + j, self.grad[static_cast<size_t>(i) * w + j]);
    });
}

inline Tensor tile_rows(const Tensor& a, int t) {  // {1,d} or {d} -> {t,d}
    if (!((a.ndim() == 2 && a.shape()[0] == 1) || a.ndim() == 1) || t < 1)
        throw ShapeMismatch("tile_rows", detail::shape_str(a.shape()));
    int d = a.cols();
    std::vector<double> v(static_cast<size_t>(t) * d);
    for (int i = 0; i < t; ++i) std::copy_n(a.data().begin(), d, v.begin() + static_cast<size_t>(i) * d);
    return detail::make_op("tile_rows", {t, d}, std::move(v), {a}, [t, d](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (int i = 0; i < t; ++i)
            for (int j = 0; j < d; ++j) detail::acc(an, j, self.grad[static_cast<size_t>(i) * d + j]);
    });
}

// ---- reductions and normalization -------------------------------------------

inline Tensor mean(const Tensor& a, int axis) {
    if (a.ndim() != 2 || (axis != 0 && axis != 1)) throw ShapeMismatch("mean", detail::shape_str(a.shape()));
    int m = a.shape()[0], n = a.shape()[1];
    if (axis == 0) {
        std::vector<double> v(n, 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) v[j] += a.data()[static_cast<size_t>(i) * n + j];
        for (double& x : v) x /= m;
        return detail::make_op("mean", {n}, std::move(v), {a}, [m, n](detail::TapeNode& self) {
            auto& an = *self.inputs[0];
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) detail::acc(an, static_cast<size_t>(i) * n + j, self.grad[j] / m);
        });
    }
    std::vector<double> v(m, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) v[i] += a.data()[static_cast<size_t>(i) * n + j];
        v[i] /= n;
    }
    return detail::make_op("mean", {m}, std::move(v), {a}, [m, n](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) detail::acc(an, static_cast<size_t>(i) * n + j, self.grad[i] / n);
    });
}

inline Tensor softmax(const Tensor& a) {  // last axis, numerically stable
    int n = a.cols();
    int m = static_cast<int>(a.size()) / n;
    std::vector<double> v(a.data().size());
    for (int i = 0; i < m; ++i) {
        const double* row = a.data().data() + static_cast<size_t>(i) * n;
        double mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            v[static_cast<size_t>(i) * n + j] = std::exp(row[j] - mx);
            sum += v[static_cast<size_t>(i) * n + j];
        }
        for (int j = 0; j < n; ++j) v[static_cast<size_t>(i) * n + j] /= sum;
    }
    return detail::make_op("softmax", a.shape(), std::move(v), {a}, [m, n](detail::TapeNode& self) {
        auto& an = *self.inputs[0];
        for (int i = 0; i < m; ++i) {
            const double* y = self.value.data() + static_cast<size_t>(i) * n;
            const double* dy = self.grad.data() + static_cast<size_t>(i) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += dy[j] * y[j];
            for (int j = 0; j < n; ++j) detail::acc(an, static_cast<size_t>(i) * n + j, y[j] * (dy[j] - dot));
        }
    });
}

// Normalizes each row (population variance + eps), then applies gamma/beta.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    int n = x.cols();
    int m = static_cast<int>(x.size()) / n;
    if (gamma.size() != n || beta.size() != n)
        throw ShapeMismatch("layer_norm", detail::shape_str(x.shape()) + " vs " + detail::shape_str(gamma.shape()));
    std::vector<double> v(x.data().size());
    std::vector<double> mu(m), inv_std(m);
    for (int i = 0; i < m; ++i) {
        const double* row = x.data().data() + static_cast<size_t>(i) * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j];
        mu[i] = s / n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            double d = row[j] - mu[i];
            var += d * d;
        }
        var /= n;
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) {
            double xhat = (row[j] - mu[i]) * inv_std[i];
            v[static_cast<size_t>(i) * n + j] = gamma.data()[j] * xhat + beta.data()[j];
        }
    }
    return detail::make_op("layer_norm", x.shape(), std::move(v), {x, gamma, beta},
                           [m, n, mu, inv_std](detail::TapeNode& self) {
                               auto& xn = *self.inputs[0];
                               auto& gn = *self.inputs[1];
                               auto& bn = *self.inputs[2];
                               for (int i = 0; i < m; ++i) {
                                   const double* xrow = xn.value.data() + static_cast<size_t>(i) * n;
                                   const double* dy = self.grad.data() + static_cast<size_t>(i) * n;
                                   double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                                   for (int j = 0; j < n; ++j) {
                                       double xhat = (xrow[j] - mu[i]) * inv_std[i];
                                       double dxhat = dy[j] * gn.value[j];
                                       sum_dxhat += dxhat;
                                       sum_dxhat_xhat += dxhat * xhat;
                                       detail::acc(gn, j, dy[j] * xhat);
                                       detail::acc(bn, j, dy[j]);
                                   }
                                   if (detail::wants_grad(xn))
                                       for (int j = 0; j < n; ++j) {
                                           double xhat = (xrow[j] - mu[i]) * inv_std[i];
                                           double dxhat = dy[j] * gn.value[j];
                                           xn.grad[static_cast<size_t>(i) * n + j] +=
                                               inv_std[i] * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
                                       }
                               }
                           });
}

inline Tensor mse(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeMismatch("mse", detail::shape_str(pred.shape()) + " vs " + detail::shape_str(target.shape()));
    double s = 0.0;
    size_t n = pred.data().size();
    for (size_t i = 0; i < n; ++i) {
        double d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    std::vector<double> v{s / static_cast<double>(n)};
    return detail::make_op("mse", {1}, std::move(v), {pred, target}, [n](detail::TapeNode& self) {
        auto& pn = *self.inputs[0];
        auto& tn = *self.inputs[1];
        double g = self.grad[0] * 2.0 / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            double d = pn.value[i] - tn.value[i];
            detail::acc(pn, i, g * d);
            detail::acc(tn, i, -g * d);
        }
    });
}

// ---- gradient verification ---------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
    bool pass = false;
};

// Central finite differences against reverse-mode gradients. Relative error
// uses max(|analytic|, |numeric|, 1e-4) as denominator so near-zero entries
// compare absolutely at 1e-4 * tol.
inline GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h,
                                  double tol) {
    Tape tape;
    Tensor leaf = tape.var(x);
    Tensor loss = f(leaf);
    tape.backward(loss);
    std::vector<double> analytic = leaf.grad();

    GradCheckReport report;
    for (size_t i = 0; i < x.data().size(); ++i) {
        Tensor hi = x.detached();
        Tensor lo = x.detached();
        hi.mutable_data()[i] += h;
        lo.mutable_data()[i] -= h;
        double fd = (f(hi).item() - f(lo).item()) / (2.0 * h);
        double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-4});
        double rel = std::abs(analytic[i] - fd) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_index = static_cast<int64_t>(i);
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace tyfo
