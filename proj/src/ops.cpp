#include "graphtts/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphtts::ops {
namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                      " and " + shape_str(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch(op, a, b);
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("operation on an unbound Var");
  return *a.tape();
}

template <typename F>
Var unary(Var a, F&& f, Tape::BackwardFn fn) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(std::move(y), {a}, std::move(fn));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) mismatch("matmul", A, B);
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      for (std::size_t j = 0; j < n; ++j) C.at(i, j) += av * B.at(p, j);
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(C), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& dC = *t.grad_buffer(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* dA = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += dC.at(i, j) * B.at(p, j);
          dA->at(i, p) += s;
        }
    }
    if (Tensor* dB = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.at(i, p);
          for (std::size_t j = 0; j < n; ++j) dB->at(p, j) += av * dC.at(i, j);
        }
    }
  });
}

namespace {

Var linear_impl(Var x, Var w, const Var* b) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (W.rank() != 2 || X.rank() > 2 || X.cols() != W.dim(1)) mismatch("linear", X, W);
  const std::size_t n = X.rows(), in = W.dim(1), out = W.dim(0);
  if (b && b->value().size() != out) mismatch("linear(bias)", W, b->value());
  Tensor Y(X.rank() == 1 ? Shape{out} : Shape{n, out});
  for (std::size_t i = 0; i < n; ++i) {
    auto xr = X.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      auto wr = W.row(o);
      double s = b ? b->value()[o] : 0.0;
      for (std::size_t k = 0; k < in; ++k) s += xr[k] * wr[k];
      Y[i * out + o] = s;
    }
  }
  const std::size_t ix = x.id(), iw = w.id();
  const bool has_b = b != nullptr;
  const std::size_t ib = has_b ? b->id() : 0;
  std::vector<Var> inputs{x, w};
  if (has_b) inputs.push_back(*b);
  return tape_of(x).record(std::move(Y), inputs, [=](Tape& t, std::size_t self) {
    const Tensor& dY = *t.grad_buffer(self);
    const Tensor& X = t.value(ix);
    const Tensor& W = t.value(iw);
    if (Tensor* dX = t.grad_buffer(ix)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o) {
          const double g = dY[i * out + o];
          if (g == 0.0) continue;
          auto wr = W.row(o);
          for (std::size_t k = 0; k < in; ++k) (*dX)[i * in + k] += g * wr[k];
        }
    }
    if (Tensor* dW = t.grad_buffer(iw)) {
      for (std::size_t i = 0; i < n; ++i) {
        auto xr = X.row(i);
        for (std::size_t o = 0; o < out; ++o) {
          const double g = dY[i * out + o];
          if (g == 0.0) continue;
          auto wr = dW->row(o);
          for (std::size_t k = 0; k < in; ++k) wr[k] += g * xr[k];
        }
      }
    }
    if (has_b) {
      if (Tensor* dB = t.grad_buffer(ib)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t o = 0; o < out; ++o) (*dB)[o] += dY[i * out + o];
      }
    }
  });
}

}  // namespace

Var linear(Var x, Var w) { return linear_impl(x, w, nullptr); }
Var linear(Var x, Var w, Var b) { return linear_impl(x, w, &b); }

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t ia = a.id(), ib = b.id();
  if (A.shape() == B.shape()) {
    Tensor C(A.shape());
    for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] + B[i];
    return tape_of(a).record(std::move(C), {a, b}, [=](Tape& t, std::size_t self) {
      const Tensor& dC = *t.grad_buffer(self);
      for (std::size_t id : {ia, ib}) {
        if (Tensor* d = t.grad_buffer(id))
          for (std::size_t i = 0; i < dC.size(); ++i) (*d)[i] += dC[i];
      }
    });
  }
  const bool row_like = B.rank() == 1 || (B.rank() == 2 && B.dim(0) == 1);
  if (A.rank() != 2 || !row_like || B.size() != A.dim(1)) mismatch("add", A, B);
  const std::size_t m = A.dim(0), n = A.dim(1);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C.at(i, j) = A.at(i, j) + B[j];
  return tape_of(a).record(std::move(C), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& dC = *t.grad_buffer(self);
    if (Tensor* dA = t.grad_buffer(ia))
      for (std::size_t i = 0; i < dC.size(); ++i) (*dA)[i] += dC[i];
    if (Tensor* dB = t.grad_buffer(ib))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*dB)[j] += dC.at(i, j);
  });
}

Var sub(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_same("sub", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] - B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(C), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& dC = *t.grad_buffer(self);
    if (Tensor* dA = t.grad_buffer(ia))
      for (std::size_t i = 0; i < dC.size(); ++i) (*dA)[i] += dC[i];
    if (Tensor* dB = t.grad_buffer(ib))
      for (std::size_t i = 0; i < dC.size(); ++i) (*dB)[i] -= dC[i];
  });
}

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_same("mul", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) C[i] = A[i] * B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(C), {a, b}, [=](Tape& t, std::size_t self) {
    const Tensor& dC = *t.grad_buffer(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (Tensor* dA = t.grad_buffer(ia))
      for (std::size_t i = 0; i < dC.size(); ++i) (*dA)[i] += dC[i] * B[i];
    if (Tensor* dB = t.grad_buffer(ib))
      for (std::size_t i = 0; i < dC.size(); ++i) (*dB)[i] += dC[i] * A[i];
  });
}

Var scale(Var a, double factor) {
  const std::size_t ia = a.id();
  return unary(a, [factor](double x) { return factor * x; },
               [=](Tape& t, std::size_t self) {
                 const Tensor& dY = *t.grad_buffer(self);
                 if (Tensor* dA = t.grad_buffer(ia))
                   for (std::size_t i = 0; i < dY.size(); ++i) (*dA)[i] += factor * dY[i];
               });
}

Var row_scale(Var a, std::vector<double> factors) {
  const Tensor& A = a.value();
  if (factors.size() != A.rows()) {
    throw ShapeMismatch("row_scale: " + std::to_string(factors.size()) + " factors for shape " +
                        shape_str(A.shape()));
  }
  const std::size_t cols = A.cols();
  Tensor C(A.shape());
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) C[r * cols + c] = factors[r] * A[r * cols + c];
  const std::size_t ia = a.id();
  return tape_of(a).record(std::move(C), {a},
                           [=, f = std::move(factors)](Tape& t, std::size_t self) {
                             const Tensor& dC = *t.grad_buffer(self);
                             if (Tensor* dA = t.grad_buffer(ia))
                               for (std::size_t r = 0; r < f.size(); ++r)
                                 for (std::size_t c = 0; c < cols; ++c)
                                   (*dA)[r * cols + c] += f[r] * dC[r * cols + c];
                           });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
  const Tensor& first = parts.front().value();
  const std::size_t rank = first.rank();
  if (rank > 2 || axis >= rank) {
    throw ShapeMismatch("concat: axis " + std::to_string(axis) + " invalid for shape " +
                        shape_str(first.shape()));
  }
  // View everything as [outer x inner] blocks along the concat axis.
  const std::size_t other = (rank == 2) ? first.dim(1 - axis) : 1;
  std::size_t total = 0;
  std::vector<std::size_t> extents;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (t.rank() != rank || (rank == 2 && t.dim(1 - axis) != other)) {
      mismatch("concat", first, t);
    }
    extents.push_back(t.dim(axis));
    total += t.dim(axis);
  }
  Shape shape = first.shape();
  shape[axis] = total;
  Tensor out(shape);
  const std::size_t out_cols = out.cols();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    const std::size_t tc = t.cols();
    for (std::size_t r = 0; r < t.rows(); ++r)
      for (std::size_t c = 0; c < tc; ++c) {
        const std::size_t orow = (axis == 0 && rank == 2) ? r + offset : r;
        const std::size_t ocol = (axis == 0 && rank == 2) ? c : c + offset;
        out[orow * out_cols + ocol] = t[r * tc + c];
      }
    offset += extents[k];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return tape_of(parts.front()).record(std::move(out), parts, [=](Tape& t, std::size_t self) {
    const Tensor& dOut = *t.grad_buffer(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (Tensor* d = t.grad_buffer(ids[k])) {
        const std::size_t tc = d->cols();
        for (std::size_t r = 0; r < d->rows(); ++r)
          for (std::size_t c = 0; c < tc; ++c) {
            const std::size_t orow = (axis == 0 && rank == 2) ? r + offset : r;
            const std::size_t ocol = (axis == 0 && rank == 2) ? c : c + offset;
            (*d)[r * tc + c] += dOut[orow * out_cols + ocol];
          }
      }
      offset += extents[k];
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& A = a.value();
  if (A.rank() > 2 || axis >= A.rank() || begin >= end || end > A.dim(axis)) {
    throw ShapeMismatch("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                        ") on axis " + std::to_string(axis) + " invalid for shape " +
                        shape_str(A.shape()));
  }
  const bool rows_axis = A.rank() == 2 && axis == 0;
  Shape shape = A.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  const std::size_t in_cols = A.cols(), oc = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < oc; ++c) {
      const std::size_t ir = rows_axis ? r + begin : r;
      const std::size_t ic = rows_axis ? c : c + begin;
      out[r * oc + c] = A[ir * in_cols + ic];
    }
  const std::size_t ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& dOut = *t.grad_buffer(self);
    if (Tensor* dA = t.grad_buffer(ia)) {
      const std::size_t orows = dOut.rows();
      for (std::size_t r = 0; r < orows; ++r)
        for (std::size_t c = 0; c < oc; ++c) {
          const std::size_t ir = rows_axis ? r + begin : r;
          const std::size_t ic = rows_axis ? c : c + begin;
          (*dA)[ir * in_cols + ic] += dOut[r * oc + c];
        }
    }
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  if (A.rank() != 2) throw ShapeMismatch("transpose needs rank 2, got " + shape_str(A.shape()));
  const std::size_t m = A.dim(0), n = A.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = A.at(i, j);
  const std::size_t ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& dOut = *t.grad_buffer(self);
    if (Tensor* dA = t.grad_buffer(ia))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dA->at(i, j) += dOut.at(j, i);
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& dOut = *t.grad_buffer(self);
    if (Tensor* dA = t.grad_buffer(ia))
      for (std::size_t i = 0; i < dOut.size(); ++i) (*dA)[i] += dOut[i];
  });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [=](Tape& t, std::size_t self) {
        const Tensor& dY = *t.grad_buffer(self);
        const Tensor& Y = t.value(self);
        if (Tensor* dA = t.grad_buffer(ia))
          for (std::size_t i = 0; i < dY.size(); ++i) (*dA)[i] += dY[i] * Y[i] * (1.0 - Y[i]);
      });
}

Var tanh(Var a) {
  const std::size_t ia = a.id();
  return unary(
      a, [](double x) { return std::tanh(x); },
      [=](Tape& t, std::size_t self) {
        const Tensor& dY = *t.grad_buffer(self);
        const Tensor& Y = t.value(self);
        if (Tensor* dA = t.grad_buffer(ia))
          for (std::size_t i = 0; i < dY.size(); ++i) (*dA)[i] += dY[i] * (1.0 - Y[i] * Y[i]);
      });
}

Var relu(Var a) {
  const std::size_t ia = a.id();
  for (double x : a.value().data()) tape_of(a).note_kink_distance(std::abs(x));
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [=](Tape& t, std::size_t self) {
        const Tensor& dY = *t.grad_buffer(self);
        const Tensor& X = t.value(ia);
        if (Tensor* dA = t.grad_buffer(ia))
          for (std::size_t i = 0; i < dY.size(); ++i)
            if (X[i] > 0.0) (*dA)[i] += dY[i];
      });
}

Var softmax(Var a, std::size_t axis) {
  const Tensor& A = a.value();
  if (A.rank() > 2 || axis >= A.rank()) {
    throw ShapeMismatch("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                        shape_str(A.shape()));
  }
  // Groups are rows (axis 1 / rank 1) or columns (axis 0 of a matrix).
  const bool by_column = A.rank() == 2 && axis == 0;
  const std::size_t cols = A.cols();
  const std::size_t groups = by_column ? cols : A.rows();
  const std::size_t len = by_column ? A.rows() : cols;
  const std::size_t stride = by_column ? cols : 1;
  auto base = [=](std::size_t g) { return by_column ? g : g * cols; };

  Tensor Y(A.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, A[base(g) + k * stride]);
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(A[base(g) + k * stride] - mx);
      Y[base(g) + k * stride] = e;
      s += e;
    }
    for (std::size_t k = 0; k < len; ++k) Y[base(g) + k * stride] /= s;
  }
  const std::size_t ia = a.id();
  return tape_of(a).record(std::move(Y), {a}, [=](Tape& t, std::size_t self) {
    const Tensor& dY = *t.grad_buffer(self);
    const Tensor& Y = t.value(self);
    if (Tensor* dA = t.grad_buffer(ia)) {
      for (std::size_t g = 0; g < groups; ++g) {
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = base(g) + k * stride;
          dot += dY[i] * Y[i];
        }
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = base(g) + k * stride;
          (*dA)[i] += Y[i] * (dY[i] - dot);
        }
      }
    }
  });
}

Var sum(Var a) {
  const Tensor& A = a.value();
  double s = 0.0;
  for (double v : A.data()) s += v;
  const std::size_t ia = a.id();
  return tape_of(a).record(Tensor({1}, {s}), {a}, [=](Tape& t, std::size_t self) {
    const double g = (*t.grad_buffer(self))[0];
    if (Tensor* dA = t.grad_buffer(ia))
      for (auto& v : dA->data()) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var l1_loss(Var pred, Var target) {
  const Tensor& P = pred.value();
  const Tensor& T = target.value();
  require_same("l1_loss", P, T);
  const double n = static_cast<double>(P.size());
  double s = 0.0;
  Tape& tape = tape_of(pred);
  for (std::size_t i = 0; i < P.size(); ++i) {
    s += std::abs(P[i] - T[i]);
    tape.note_kink_distance(std::abs(P[i] - T[i]));
  }
  const std::size_t ip = pred.id(), it = target.id();
  return tape.record(Tensor({1}, {s / n}), {pred, target},
                              [=](Tape& t, std::size_t self) {
                                const double g = (*t.grad_buffer(self))[0] / n;
                                const Tensor& P = t.value(ip);
                                const Tensor& T = t.value(it);
                                auto sign = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
                                if (Tensor* dP = t.grad_buffer(ip))
                                  for (std::size_t i = 0; i < P.size(); ++i)
                                    (*dP)[i] += g * sign(P[i] - T[i]);
                                if (Tensor* dT = t.grad_buffer(it))
                                  for (std::size_t i = 0; i < P.size(); ++i)
                                    (*dT)[i] -= g * sign(P[i] - T[i]);
                              });
}

Var bce_loss(Var logits, Var targets) {
  const Tensor& X = logits.value();
  const Tensor& T = targets.value();
  require_same("bce_loss", X, T);
  const double n = static_cast<double>(X.size());
  double s = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double softplus = std::max(X[i], 0.0) + std::log1p(std::exp(-std::abs(X[i])));
    s += softplus - T[i] * X[i];
  }
  const std::size_t ix = logits.id(), it = targets.id();
  return tape_of(logits).record(Tensor({1}, {s / n}), {logits, targets},
                                [=](Tape& t, std::size_t self) {
                                  const double g = (*t.grad_buffer(self))[0] / n;
                                  const Tensor& X = t.value(ix);
                                  const Tensor& T = t.value(it);
                                  if (Tensor* dX = t.grad_buffer(ix))
                                    for (std::size_t i = 0; i < X.size(); ++i) {
                                      const double p = 1.0 / (1.0 + std::exp(-X[i]));
                                      (*dX)[i] += g * (p - T[i]);
                                    }
                                  if (Tensor* dT = t.grad_buffer(it))
                                    for (std::size_t i = 0; i < X.size(); ++i) (*dT)[i] -= g * X[i];
                                });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& W = table.value();
  if (W.rank() != 2) throw ShapeMismatch("gather_rows needs a rank-2 table, got " + shape_str(W.shape()));
  if (indices.empty()) throw ShapeMismatch("gather_rows with no indices");
  const std::size_t d = W.dim(1);
  Tensor out({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= W.dim(0)) {
      throw std::out_of_range("gather_rows: index " + std::to_string(indices[i]) +
                              " >= table rows " + std::to_string(W.dim(0)));
    }
    std::copy_n(W.row(indices[i]).begin(), d, out.row(i).begin());
  }
  const std::size_t iw = table.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return tape_of(table).record(std::move(out), {table},
                               [=, idx = std::move(idx)](Tape& t, std::size_t self) {
                                 const Tensor& dOut = *t.grad_buffer(self);
                                 if (Tensor* dW = t.grad_buffer(iw))
                                   for (std::size_t i = 0; i < idx.size(); ++i) {
                                     auto dst = dW->row(idx[i]);
                                     auto src = dOut.row(i);
                                     for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                                   }
                               });
}

Var edge_scatter(Var src, std::span<const std::size_t> sources,
                 std::span<const std::size_t> targets, std::size_t rows) {
  const Tensor& S = src.value();
  if (S.rank() != 2) throw ShapeMismatch("edge_scatter needs rank 2, got " + shape_str(S.shape()));
  if (sources.size() != targets.size()) {
    throw ShapeMismatch("edge_scatter: " + std::to_string(sources.size()) + " sources vs " +
                        std::to_string(targets.size()) + " targets");
  }
  const std::size_t d = S.dim(1);
  Tensor out({rows, d});
  for (std::size_t e = 0; e < sources.size(); ++e) {
    if (sources[e] >= S.dim(0) || targets[e] >= rows) {
      throw std::out_of_range("edge_scatter: edge " + std::to_string(e) + " out of range");
    }
    auto dst = out.row(targets[e]);
    auto s = S.row(sources[e]);
    for (std::size_t c = 0; c < d; ++c) dst[c] += s[c];
  }
  const std::size_t is = src.id();
  std::vector<std::size_t> srcs(sources.begin(), sources.end());
  std::vector<std::size_t> tgts(targets.begin(), targets.end());
  return tape_of(src).record(
      std::move(out), {src},
      [=, srcs = std::move(srcs), tgts = std::move(tgts)](Tape& t, std::size_t self) {
        const Tensor& dOut = *t.grad_buffer(self);
        if (Tensor* dS = t.grad_buffer(is))
          for (std::size_t e = 0; e < srcs.size(); ++e) {
            auto dst = dS->row(srcs[e]);
            auto g = dOut.row(tgts[e]);
            for (std::size_t c = 0; c < d; ++c) dst[c] += g[c];
          }
      });
}

}  // namespace graphtts::ops
