#include "toxdet/autodiff.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "toxdet/error.hpp"

namespace toxdet::ad {

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

std::vector<size_t> Rng::permutation(size_t n) {
  std::vector<size_t> p(n);
  for (size_t i = 0; i < n; ++i) p[i] = i;
  for (size_t i = n; i > 1; --i) {
    size_t j = static_cast<size_t>(bits() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

Matrix glorotUniform(long rows, long cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      m(i, j) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

Matrix gaussianMatrix(long rows, long cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      m(i, j) = stddev * rng.gaussian();
    }
  }
  return m;
}

int Tape::emplace(Matrix value, bool needs_grad) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::setBackward(int id, std::function<void(Tape&)> backward) {
  nodes_[static_cast<size_t>(id)].backward = std::move(backward);
}

const Matrix& Tape::grad(int id) {
  Node& node = nodes_[static_cast<size_t>(id)];
  if (!node.grad_live) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.grad_live = true;
  }
  return node.grad;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& node = nodes_[static_cast<size_t>(id)];
  if (!node.needs_grad) return;
  if (node.value.rows() != g.rows() || node.value.cols() != g.cols()) {
    throw TrainingError("accumulate: gradient shape mismatch");
  }
  if (!node.grad_live) {
    node.grad = g;
    node.grad_live = true;
  } else {
    node.grad += g;
  }
}

void Tape::backward(int loss) {
  Node& loss_node = nodes_[static_cast<size_t>(loss)];
  if (loss_node.value.rows() != 1 || loss_node.value.cols() != 1) {
    throw TrainingError("backward: loss node must be 1x1");
  }
  accumulate(loss, Matrix::Ones(1, 1));
  for (int id = loss; id >= 0; --id) {
    Node& node = nodes_[static_cast<size_t>(id)];
    if (node.needs_grad && node.grad_live && node.backward) {
      node.backward(*this);
    }
  }
}

// ---- leaves ---------------------------------------------------------------

Var constant(Tape& t, Matrix value) {
  return {&t, t.emplace(std::move(value), false)};
}

namespace {

void addToParamGrad(Param& p, const Matrix& g) {
  if (p.grad.size() == 0) {
    p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  }
  p.grad += g;
}

}  // namespace

Var leaf(Tape& t, Param& p) {
  int id = t.emplace(p.value, true);
  Param* param = &p;
  t.setBackward(id, [param, id](Tape& tape) {
    addToParamGrad(*param, tape.grad(id));
  });
  return {&t, id};
}

Var embedRows(Tape& t, Param& table, std::vector<int> ids) {
  Matrix out(static_cast<long>(ids.size()), table.value.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<long>(i)) = table.value.row(ids[i]);
  }
  int id = t.emplace(std::move(out), true);
  Param* param = &table;
  auto idx = std::make_shared<const std::vector<int>>(std::move(ids));
  t.setBackward(id, [param, idx, id](Tape& tape) {
    const Matrix& g = tape.grad(id);
    if (param->grad.size() == 0) {
      param->grad = Matrix::Zero(param->value.rows(), param->value.cols());
    }
    for (size_t i = 0; i < idx->size(); ++i) {
      param->grad.row((*idx)[i]) += g.row(static_cast<long>(i));
    }
  });
  return {&t, id};
}

Var paramSquaredNorm(Tape& t, Param& p) {
  Matrix v(1, 1);
  v(0, 0) = p.value.squaredNorm();
  int id = t.emplace(std::move(v), true);
  Param* param = &p;
  t.setBackward(id, [param, id](Tape& tape) {
    addToParamGrad(*param, 2.0 * tape.grad(id)(0, 0) * param->value);
  });
  return {&t, id};
}

// ---- elementwise and linear ops -------------------------------------------

namespace {

bool anyGrad(Var a) { return a.tape->needsGrad(a.id); }
bool anyGrad(Var a, Var b) {
  return a.tape->needsGrad(a.id) || b.tape->needsGrad(b.id);
}

void requireSameShape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw TrainingError(std::string(op) + ": shape mismatch " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  if (a.cols() != b.rows()) {
    throw TrainingError("matmul: inner dimension mismatch");
  }
  const bool ng = anyGrad(a, b);
  int id = t.emplace(a.value() * b.value(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      if (tape.needsGrad(ida)) tape.accumulate(ida, g * tape.value(idb).transpose());
      if (tape.needsGrad(idb)) tape.accumulate(idb, tape.value(ida).transpose() * g);
    });
  }
  return {&t, id};
}

Var transposed(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().transpose(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      tape.accumulate(ida, tape.grad(id).transpose());
    });
  }
  return {&t, id};
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  requireSameShape(a, b, "add");
  const bool ng = anyGrad(a, b);
  int id = t.emplace(a.value() + b.value(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      tape.accumulate(ida, g);
      tape.accumulate(idb, g);
    });
  }
  return {&t, id};
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  requireSameShape(a, b, "sub");
  const bool ng = anyGrad(a, b);
  int id = t.emplace(a.value() - b.value(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      tape.accumulate(ida, g);
      tape.accumulate(idb, -g);
    });
  }
  return {&t, id};
}

Var addRowBroadcast(Var m, Var row) {
  Tape& t = *m.tape;
  if (row.rows() != 1 || row.cols() != m.cols()) {
    throw TrainingError("addRowBroadcast: bias must be 1 x cols");
  }
  const bool ng = anyGrad(m, row);
  Matrix out = m.value();
  out.rowwise() += row.value().row(0);
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [idm = m.id, idr = row.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      tape.accumulate(idm, g);
      if (tape.needsGrad(idr)) tape.accumulate(idr, g.colwise().sum());
    });
  }
  return {&t, id};
}

Var scale(Var a, double c) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  int id = t.emplace(c * a.value(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, c, id](Tape& tape) {
      tape.accumulate(ida, c * tape.grad(id));
    });
  }
  return {&t, id};
}

Var hadamard(Var a, Var b) {
  Tape& t = *a.tape;
  requireSameShape(a, b, "hadamard");
  const bool ng = anyGrad(a, b);
  int id = t.emplace(a.value().cwiseProduct(b.value()), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      if (tape.needsGrad(ida)) tape.accumulate(ida, g.cwiseProduct(tape.value(idb)));
      if (tape.needsGrad(idb)) tape.accumulate(idb, g.cwiseProduct(tape.value(ida)));
    });
  }
  return {&t, id};
}

Var oneMinus(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  int id = t.emplace((1.0 - a.value().array()).matrix(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      tape.accumulate(ida, -tape.grad(id));
    });
  }
  return {&t, id};
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  // 1/(1+exp(-x)) through exp of the negative magnitude, stable both ways
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0.0) {
      return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      const Matrix& y = tape.value(id);
      Matrix d = y.array() * (1.0 - y.array());
      tape.accumulate(ida, tape.grad(id).cwiseProduct(d));
    });
  }
  return {&t, id};
}

Var tanhOp(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().array().tanh().matrix(), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      const Matrix& y = tape.value(id);
      Matrix d = 1.0 - y.array().square();
      tape.accumulate(ida, tape.grad(id).cwiseProduct(d));
    });
  }
  return {&t, id};
}

Var relu(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().cwiseMax(0.0), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      const Matrix& x = tape.value(ida);
      Matrix d = (x.array() > 0.0).cast<double>();
      tape.accumulate(ida, tape.grad(id).cwiseProduct(d));
    });
  }
  return {&t, id};
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Var gelu(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  Matrix out = a.value().unaryExpr([](double x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  });
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      Matrix d = tape.value(ida).unaryExpr([](double x) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
               x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
      tape.accumulate(ida, tape.grad(id).cwiseProduct(d));
    });
  }
  return {&t, id};
}

Var softmaxRows(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  Matrix out = a.value();
  for (long r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      const Matrix& y = tape.value(id);
      const Matrix& g = tape.grad(id);
      Matrix d(y.rows(), y.cols());
      for (long r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).dot(y.row(r));
        d.row(r) = y.row(r).array() * (g.row(r).array() - dot);
      }
      tape.accumulate(ida, d);
    });
  }
  return {&t, id};
}

Var layerNormRows(Var x, Var gain, Var bias, double eps) {
  Tape& t = *x.tape;
  const long d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 ||
      bias.cols() != d) {
    throw TrainingError("layerNormRows: gain/bias must be 1 x d");
  }
  const bool ng = anyGrad(x, gain) || anyGrad(bias);
  auto xhat = std::make_shared<Matrix>(x.rows(), d);
  auto inv_std = std::make_shared<Vector>(x.rows());
  Matrix out(x.rows(), d);
  for (long r = 0; r < x.rows(); ++r) {
    const auto row = x.value().row(r);
    const double mu = row.mean();
    const double var = (row.array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    xhat->row(r) = (row.array() - mu) * inv;
    out.row(r) =
        xhat->row(r).cwiseProduct(gain.value().row(0)) + bias.value().row(0);
  }
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [idx = x.id, idg = gain.id, idb = bias.id, xhat, inv_std,
                       id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      const long dcols = g.cols();
      if (tape.needsGrad(idg)) {
        tape.accumulate(idg, g.cwiseProduct(*xhat).colwise().sum());
      }
      if (tape.needsGrad(idb)) {
        tape.accumulate(idb, g.colwise().sum());
      }
      if (tape.needsGrad(idx)) {
        Matrix dx(g.rows(), dcols);
        const auto& gain_row = tape.value(idg).row(0);
        for (long r = 0; r < g.rows(); ++r) {
          Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gain_row);
          const double mean_dxhat = dxhat.mean();
          const double mean_dxhat_xhat = dxhat.cwiseProduct(xhat->row(r)).mean();
          dx.row(r) = (*inv_std)[r] * (dxhat.array() - mean_dxhat -
                                       xhat->row(r).array() * mean_dxhat_xhat);
        }
        tape.accumulate(idx, dx);
      }
    });
  }
  return {&t, id};
}

// ---- structural ops --------------------------------------------------------

Var concatCols(Var a, Var b) {
  Tape& t = *a.tape;
  if (a.rows() != b.rows()) {
    throw TrainingError("concatCols: row count mismatch");
  }
  const bool ng = anyGrad(a, b);
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, na = a.cols(), nb = b.cols(),
                       id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      tape.accumulate(ida, g.leftCols(na));
      tape.accumulate(idb, g.rightCols(nb));
    });
  }
  return {&t, id};
}

Var concatRows(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw TrainingError("concatRows: empty part list");
  }
  Tape& t = *parts.front().tape;
  long rows = 0;
  bool ng = false;
  const long cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw TrainingError("concatRows: column count mismatch");
    }
    rows += p.rows();
    ng = ng || t.needsGrad(p.id);
  }
  Matrix out(rows, cols);
  long off = 0;
  std::vector<std::pair<int, long>> layout;  // (id, row count)
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    layout.emplace_back(p.id, p.rows());
    off += p.rows();
  }
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [layout = std::move(layout), id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      long offset = 0;
      for (const auto& [pid, n] : layout) {
        tape.accumulate(pid, g.middleRows(offset, n));
        offset += n;
      }
    });
  }
  return {&t, id};
}

Var sliceCols(Var a, long start, long n) {
  Tape& t = *a.tape;
  if (start < 0 || n < 0 || start + n > a.cols()) {
    throw TrainingError("sliceCols: range out of bounds");
  }
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().middleCols(start, n), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, start, n, id](Tape& tape) {
      Matrix full = Matrix::Zero(tape.value(ida).rows(), tape.value(ida).cols());
      full.middleCols(start, n) = tape.grad(id);
      tape.accumulate(ida, full);
    });
  }
  return {&t, id};
}

Var sliceRows(Var a, long start, long n) {
  Tape& t = *a.tape;
  if (start < 0 || n < 0 || start + n > a.rows()) {
    throw TrainingError("sliceRows: range out of bounds");
  }
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().middleRows(start, n), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, start, n, id](Tape& tape) {
      Matrix full = Matrix::Zero(tape.value(ida).rows(), tape.value(ida).cols());
      full.middleRows(start, n) = tape.grad(id);
      tape.accumulate(ida, full);
    });
  }
  return {&t, id};
}

Var sumAll(Var a) {
  Tape& t = *a.tape;
  const bool ng = anyGrad(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, id](Tape& tape) {
      const double g = tape.grad(id)(0, 0);
      tape.accumulate(ida, Matrix::Constant(tape.value(ida).rows(),
                                            tape.value(ida).cols(), g));
    });
  }
  return {&t, id};
}

Var colwiseMax(Var a) {
  Tape& t = *a.tape;
  if (a.rows() == 0) {
    throw TrainingError("colwiseMax: empty input");
  }
  const bool ng = anyGrad(a);
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  auto argmax = std::make_shared<std::vector<long>>(static_cast<size_t>(x.cols()));
  for (long c = 0; c < x.cols(); ++c) {
    long best = 0;
    for (long r = 1; r < x.rows(); ++r) {
      if (x(r, c) > x(best, c)) best = r;
    }
    (*argmax)[static_cast<size_t>(c)] = best;
    out(0, c) = x(best, c);
  }
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, argmax, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      Matrix full = Matrix::Zero(tape.value(ida).rows(), tape.value(ida).cols());
      for (long c = 0; c < g.cols(); ++c) {
        full((*argmax)[static_cast<size_t>(c)], c) += g(0, c);
      }
      tape.accumulate(ida, full);
    });
  }
  return {&t, id};
}

Var maxPair(Var a, Var b) {
  Tape& t = *a.tape;
  requireSameShape(a, b, "maxPair");
  const bool ng = anyGrad(a, b);
  int id = t.emplace(a.value().cwiseMax(b.value()), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, idb = b.id, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      Matrix take_a =
          (tape.value(ida).array() >= tape.value(idb).array()).cast<double>();
      if (tape.needsGrad(ida)) tape.accumulate(ida, g.cwiseProduct(take_a));
      if (tape.needsGrad(idb)) {
        tape.accumulate(idb, g.cwiseProduct((1.0 - take_a.array()).matrix()));
      }
    });
  }
  return {&t, id};
}

Var lerpRows(Var fresh, Var stale, Vector mask) {
  Tape& t = *fresh.tape;
  requireSameShape(fresh, stale, "lerpRows");
  if (mask.size() != fresh.rows()) {
    throw TrainingError("lerpRows: mask length must equal row count");
  }
  const bool ng = anyGrad(fresh, stale);
  Matrix out = fresh.value().array().colwise() * mask.array();
  out.array() += stale.value().array().colwise() * (1.0 - mask.array());
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    auto m = std::make_shared<Vector>(std::move(mask));
    t.setBackward(id, [idf = fresh.id, ids = stale.id, m, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      if (tape.needsGrad(idf)) {
        tape.accumulate(idf, (g.array().colwise() * m->array()).matrix());
      }
      if (tape.needsGrad(ids)) {
        tape.accumulate(ids,
                        (g.array().colwise() * (1.0 - m->array())).matrix());
      }
    });
  }
  return {&t, id};
}

Var im2row(Var x, int k) {
  Tape& t = *x.tape;
  const long rows = x.rows();
  const long d = x.cols();
  if (k < 1 || rows < k) {
    throw TrainingError("im2row: need at least k rows");
  }
  const bool ng = anyGrad(x);
  const long windows = rows - k + 1;
  Matrix out(windows, static_cast<long>(k) * d);
  for (long w = 0; w < windows; ++w) {
    for (int j = 0; j < k; ++j) {
      out.row(w).segment(static_cast<long>(j) * d, d) = x.value().row(w + j);
    }
  }
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [idx = x.id, k, d, id](Tape& tape) {
      const Matrix& g = tape.grad(id);
      Matrix full = Matrix::Zero(tape.value(idx).rows(), d);
      for (long w = 0; w < g.rows(); ++w) {
        for (int j = 0; j < k; ++j) {
          full.row(w + j) += g.row(w).segment(static_cast<long>(j) * d, d);
        }
      }
      tape.accumulate(idx, full);
    });
  }
  return {&t, id};
}

Var padRowsTo(Var x, long min_rows) {
  Tape& t = *x.tape;
  const long rows = x.rows();
  if (rows >= min_rows) return x;
  const bool ng = anyGrad(x);
  Matrix out = Matrix::Zero(min_rows, x.cols());
  out.topRows(rows) = x.value();
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    t.setBackward(id, [idx = x.id, rows, id](Tape& tape) {
      tape.accumulate(idx, tape.grad(id).topRows(rows));
    });
  }
  return {&t, id};
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) {
    throw TrainingError("dropout: rate must be < 1");
  }
  Tape& t = *a.tape;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<Matrix>(a.rows(), a.cols());
  for (long i = 0; i < a.rows(); ++i) {
    for (long j = 0; j < a.cols(); ++j) {
      (*mask)(i, j) = rng.uniform() >= rate ? keep_scale : 0.0;
    }
  }
  const bool ng = anyGrad(a);
  int id = t.emplace(a.value().cwiseProduct(*mask), ng);
  if (ng) {
    t.setBackward(id, [ida = a.id, mask, id](Tape& tape) {
      tape.accumulate(ida, tape.grad(id).cwiseProduct(*mask));
    });
  }
  return {&t, id};
}

// ---- losses ----------------------------------------------------------------

Var bceWithLogitsLoss(Var logits, Vector targets) {
  Tape& t = *logits.tape;
  if (logits.cols() != 1 || logits.rows() != targets.size()) {
    throw TrainingError("bceWithLogitsLoss: logits must be n x 1 matching targets");
  }
  const long n = logits.rows();
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const double z = logits.value()(i, 0);
    const double y = targets[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  const bool ng = anyGrad(logits);
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    auto y = std::make_shared<Vector>(std::move(targets));
    t.setBackward(id, [idl = logits.id, y, n, id](Tape& tape) {
      const double gscale = tape.grad(id)(0, 0) / static_cast<double>(n);
      Matrix d(n, 1);
      for (long i = 0; i < n; ++i) {
        const double z = tape.value(idl)(i, 0);
        const double s =
            z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                     : std::exp(z) / (1.0 + std::exp(z));
        d(i, 0) = gscale * (s - (*y)[i]);
      }
      tape.accumulate(idl, d);
    });
  }
  return {&t, id};
}

Var mseLoss(Var preds, Vector targets) {
  Tape& t = *preds.tape;
  if (preds.cols() != 1 || preds.rows() != targets.size()) {
    throw TrainingError("mseLoss: preds must be n x 1 matching targets");
  }
  const long n = preds.rows();
  Matrix out(1, 1);
  out(0, 0) = (preds.value().col(0) - targets).squaredNorm() /
              static_cast<double>(n);
  const bool ng = anyGrad(preds);
  int id = t.emplace(std::move(out), ng);
  if (ng) {
    auto y = std::make_shared<Vector>(std::move(targets));
    t.setBackward(id, [idp = preds.id, y, n, id](Tape& tape) {
      const double gscale = 2.0 * tape.grad(id)(0, 0) / static_cast<double>(n);
      Matrix d = gscale * (tape.value(idp).col(0) - *y);
      tape.accumulate(idp, d);
    });
  }
  return {&t, id};
}

void AdamOptimizer::step(const std::vector<Param*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    if (p->grad.size() == 0) {
      p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    if (p->adam_m.size() == 0) {
      p->adam_m = Matrix::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    p->adam_m = config_.beta1 * p->adam_m + (1.0 - config_.beta1) * p->grad;
    p->adam_v = config_.beta2 * p->adam_v.array() +
                (1.0 - config_.beta2) * p->grad.array().square();
    const auto m_hat = p->adam_m.array() / bc1;
    const auto v_hat = p->adam_v.array() / bc2;
    p->value.array() -=
        config_.learning_rate * m_hat / (v_hat.sqrt() + config_.epsilon);
  }
}

}  // namespace toxdet::ad
