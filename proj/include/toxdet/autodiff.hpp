#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace toxdet::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Trainable tensor with optimizer state. Lives outside any tape.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Param() = default;
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {}

  void zeroGrad() { grad = Matrix::Zero(value.rows(), value.cols()); }
  long count() const { return value.size(); }
};

// Deterministic RNG built on raw mt19937_64 bits so results do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian();  // Box-Muller
  uint64_t bits() { return engine_(); }
  // Fisher-Yates over [0, n)
  std::vector<size_t> permutation(size_t n);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

Matrix glorotUniform(long rows, long cols, Rng& rng);
Matrix gaussianMatrix(long rows, long cols, double stddev, Rng& rng);

// Reverse-mode tape over dense matrices. Nodes are created in forward order;
// backward() replays closures in reverse. One tape = one forward/backward.
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool grad_live = false;  // grad matrix allocated and accumulated into
    std::function<void(Tape&)> backward;
  };

  int emplace(Matrix value, bool needs_grad);
  // Installed after emplace so the closure can capture its own node id.
  void setBackward(int id, std::function<void(Tape&)> backward);
  const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool needsGrad(int id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }
  // Gradient of the loss w.r.t. node id (zero matrix if untouched).
  const Matrix& grad(int id);
  void accumulate(int id, const Matrix& g);

  // Seeds d(loss)/d(loss) = 1 and runs every reachable closure. `loss` must
  // be 1x1. Leaf closures push gradients out into their Params.
  void backward(int loss);

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// Handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const { return tape->value(id); }
  long rows() const { return value().rows(); }
  long cols() const { return value().cols(); }
};

// ---- graph construction -------------------------------------------------

Var constant(Tape& t, Matrix value);
// Node mirroring a Param; after backward the node gradient is added into
// param.grad.
Var leaf(Tape& t, Param& p);
// Rows of a parameter matrix selected by index; backward scatter-adds.
// Avoids materializing large embedding tables on the tape.
Var embedRows(Tape& t, Param& table, std::vector<int> ids);
// 1x1 node holding sum(p.value^2); used for the L2 penalty.
Var paramSquaredNorm(Tape& t, Param& p);

Var matmul(Var a, Var b);
Var transposed(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// m + row broadcast over every row of m (bias add); row is 1 x cols.
Var addRowBroadcast(Var m, Var row);
Var scale(Var a, double c);
Var hadamard(Var a, Var b);
Var oneMinus(Var a);  // 1 - a, elementwise

Var sigmoid(Var a);
Var tanhOp(Var a);
Var relu(Var a);
Var gelu(Var a);
Var softmaxRows(Var a);
// Per-row layer normalization with learnable gain/bias (both 1 x d).
Var layerNormRows(Var x, Var gain, Var bias, double eps = 1e-5);

Var concatCols(Var a, Var b);
Var concatRows(const std::vector<Var>& parts);
Var sliceCols(Var a, long start, long n);
Var sliceRows(Var a, long start, long n);

// Sum of all entries -> 1 x 1.
Var sumAll(Var a);
// Columnwise max over rows -> 1 x cols (global max pooling over time).
Var colwiseMax(Var a);
// Elementwise max; ties route the gradient to `a`.
Var maxPair(Var a, Var b);
// Rowwise select between two same-shape matrices: rows where mask is 1 come
// from `fresh`, rows where mask is 0 from `stale`. Backbone of sequence
// masking in batched recurrent steps.
Var lerpRows(Var fresh, Var stale, Vector mask);

// Sliding windows: x is T x d, result is (T-k+1) x (k*d); row t concatenates
// x rows t..t+k-1.
Var im2row(Var x, int k);
// Appends zero rows until the row count reaches at least min_rows.
Var padRowsTo(Var x, long min_rows);

// Inverted dropout; scales kept entries by 1/(1-rate). Identity when
// rate <= 0.
Var dropout(Var a, double rate, Rng& rng);

// Mean binary cross-entropy computed from logits (numerically stable).
// logits is n x 1, targets has n entries in [0,1].
Var bceWithLogitsLoss(Var logits, Vector targets);
// Mean squared error; preds is n x 1.
Var mseLoss(Var preds, Vector targets);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config) : config_(config) {}
  void step(const std::vector<Param*>& params);
  long stepsTaken() const { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
};

}  // namespace toxdet::ad
