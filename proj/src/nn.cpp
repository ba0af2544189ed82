#include "toxdet/nn.hpp"

#include "toxdet/error.hpp"

namespace toxdet::nn {

using ad::Matrix;
using ad::Vector;

void DenseLayer::init(const std::string& name, long in, long out, Rng& rng) {
  weight = Param(name + ".weight", ad::glorotUniform(in, out, rng));
  bias = Param(name + ".bias", Matrix::Zero(1, out));
}

Var DenseLayer::apply(Tape& t, Var x, bool with_grad) {
  Var w = paramVar(t, weight, with_grad);
  Var b = paramVar(t, bias, with_grad);
  return ad::addRowBroadcast(ad::matmul(x, w), b);
}

void DenseLayer::collect(std::vector<Param*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void Conv1dLayer::init(const std::string& name, int kernel_size, long in,
                       long channels, Rng& rng) {
  kernel = kernel_size;
  weight = Param(name + ".weight",
                 ad::glorotUniform(static_cast<long>(kernel_size) * in, channels, rng));
  bias = Param(name + ".bias", Matrix::Zero(1, channels));
}

Var Conv1dLayer::apply(Tape& t, Var x, bool with_grad) {
  Var w = paramVar(t, weight, with_grad);
  Var b = paramVar(t, bias, with_grad);
  return ad::addRowBroadcast(ad::matmul(ad::im2row(x, kernel), w), b);
}

void Conv1dLayer::collect(std::vector<Param*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

void LstmCell::init(const std::string& name, long in, long units_, Rng& rng) {
  units = units_;
  wx = Param(name + ".wx", ad::glorotUniform(in, 4 * units, rng));
  wh = Param(name + ".wh", ad::glorotUniform(units, 4 * units, rng));
  Matrix b = Matrix::Zero(1, 4 * units);
  b.middleCols(units, units).setOnes();  // forget gate bias starts open
  bias = Param(name + ".bias", std::move(b));
}

LstmCell::Vars LstmCell::materialize(Tape& t, bool with_grad) {
  return {paramVar(t, wx, with_grad), paramVar(t, wh, with_grad),
          paramVar(t, bias, with_grad)};
}

std::pair<Var, Var> LstmCell::step(const Vars& w, Var x_t, Var h,
                                   Var c) const {
  Var gates = ad::addRowBroadcast(
      ad::add(ad::matmul(x_t, w.wx), ad::matmul(h, w.wh)), w.bias);
  Var i = ad::sigmoid(ad::sliceCols(gates, 0, units));
  Var f = ad::sigmoid(ad::sliceCols(gates, units, units));
  Var g = ad::tanhOp(ad::sliceCols(gates, 2 * units, units));
  Var o = ad::sigmoid(ad::sliceCols(gates, 3 * units, units));
  Var c_next = ad::add(ad::hadamard(f, c), ad::hadamard(i, g));
  Var h_next = ad::hadamard(o, ad::tanhOp(c_next));
  return {h_next, c_next};
}

void LstmCell::collect(std::vector<Param*>& out) {
  out.push_back(&wx);
  out.push_back(&wh);
  out.push_back(&bias);
}

void GruCell::init(const std::string& name, long in, long units_, Rng& rng) {
  units = units_;
  wx = Param(name + ".wx", ad::glorotUniform(in, 3 * units, rng));
  wh = Param(name + ".wh", ad::glorotUniform(units, 3 * units, rng));
  bias = Param(name + ".bias", Matrix::Zero(1, 3 * units));
}

GruCell::Vars GruCell::materialize(Tape& t, bool with_grad) {
  return {paramVar(t, wx, with_grad), paramVar(t, wh, with_grad),
          paramVar(t, bias, with_grad)};
}

Var GruCell::step(const Vars& w, Var x_t, Var h) const {
  Var xw = ad::matmul(x_t, w.wx);
  Var hw = ad::matmul(h, w.wh);
  // update and reset gates share the x/h projections; the candidate applies
  // the reset gate to the recurrent projection (the usual v3 formulation)
  Var zr_x = ad::sliceCols(xw, 0, 2 * units);
  Var zr_h = ad::sliceCols(hw, 0, 2 * units);
  Var zr_b = ad::sliceCols(w.bias, 0, 2 * units);
  Var zr = ad::sigmoid(ad::addRowBroadcast(ad::add(zr_x, zr_h), zr_b));
  Var z = ad::sliceCols(zr, 0, units);
  Var r = ad::sliceCols(zr, units, units);
  Var cand_x = ad::sliceCols(xw, 2 * units, units);
  Var cand_h = ad::sliceCols(hw, 2 * units, units);
  Var cand_b = ad::sliceCols(w.bias, 2 * units, units);
  Var cand = ad::tanhOp(ad::addRowBroadcast(
      ad::add(cand_x, ad::hadamard(r, cand_h)), cand_b));
  // h' = (1-z) * h + z * cand
  Var h_next = ad::add(ad::hadamard(ad::oneMinus(z), h), ad::hadamard(z, cand));
  return h_next;
}

void GruCell::collect(std::vector<Param*>& out) {
  out.push_back(&wx);
  out.push_back(&wh);
  out.push_back(&bias);
}

namespace {

// Shared driver for both cell kinds. StepFn: (Var x_t, direction) -> Var h.
template <typename RunDirection>
BidirectionalResult runBothDirections(Tape& /*t*/, std::span<const Var> xs,
                                      long batch, long units,
                                      RunDirection run) {
  const long T = static_cast<long>(xs.size());
  std::vector<Var> fwd(static_cast<size_t>(T));
  std::vector<Var> bwd(static_cast<size_t>(T));
  Var fwd_final = run(/*reverse=*/false, fwd);
  Var bwd_final = run(/*reverse=*/true, bwd);

  BidirectionalResult result;
  result.step_outputs.reserve(static_cast<size_t>(T));
  for (long step = 0; step < T; ++step) {
    result.step_outputs.push_back(ad::concatCols(fwd[static_cast<size_t>(step)],
                                                 bwd[static_cast<size_t>(step)]));
  }
  result.summary = ad::concatCols(fwd_final, bwd_final);
  (void)batch;
  (void)units;
  return result;
}

}  // namespace

BidirectionalResult runBidirectional(Tape& t, BidirectionalLayer<LstmCell>& layer,
                                     std::span<const Var> xs,
                                     std::span<const Vector> masks, long batch,
                                     bool with_grad) {
  const long units = layer.forward_cell.units;
  const long T = static_cast<long>(xs.size());
  auto run = [&](bool reverse, std::vector<Var>& outputs) -> Var {
    LstmCell& cell = reverse ? layer.backward_cell : layer.forward_cell;
    auto w = cell.materialize(t, with_grad);
    Var h = ad::constant(t, Matrix::Zero(batch, units));
    Var c = ad::constant(t, Matrix::Zero(batch, units));
    for (long step = 0; step < T; ++step) {
      const long idx = reverse ? T - 1 - step : step;
      auto [h_new, c_new] = cell.step(w, xs[static_cast<size_t>(idx)], h, c);
      h = ad::lerpRows(h_new, h, masks[static_cast<size_t>(idx)]);
      c = ad::lerpRows(c_new, c, masks[static_cast<size_t>(idx)]);
      outputs[static_cast<size_t>(idx)] = h;
    }
    return h;
  };
  return runBothDirections(t, xs, batch, units, run);
}

BidirectionalResult runBidirectional(Tape& t, BidirectionalLayer<GruCell>& layer,
                                     std::span<const Var> xs,
                                     std::span<const Vector> masks, long batch,
                                     bool with_grad) {
  const long units = layer.forward_cell.units;
  const long T = static_cast<long>(xs.size());
  auto run = [&](bool reverse, std::vector<Var>& outputs) -> Var {
    GruCell& cell = reverse ? layer.backward_cell : layer.forward_cell;
    auto w = cell.materialize(t, with_grad);
    Var h = ad::constant(t, Matrix::Zero(batch, units));
    for (long step = 0; step < T; ++step) {
      const long idx = reverse ? T - 1 - step : step;
      Var h_new = cell.step(w, xs[static_cast<size_t>(idx)], h);
      h = ad::lerpRows(h_new, h, masks[static_cast<size_t>(idx)]);
      outputs[static_cast<size_t>(idx)] = h;
    }
    return h;
  };
  return runBothDirections(t, xs, batch, units, run);
}

Var maskedMaxOverSteps(Tape& t, std::span<const Var> steps,
                       std::span<const Vector> masks, long batch, long width) {
  // Start below any reachable activation so the first live step wins the max.
  Var acc = ad::constant(t, Matrix::Constant(batch, width, -1e300));
  Vector any_live = Vector::Zero(batch);
  for (size_t i = 0; i < steps.size(); ++i) {
    acc = ad::lerpRows(ad::maxPair(acc, steps[i]), acc, masks[i]);
    any_live = any_live.cwiseMax(masks[i]);
  }
  // Examples with no live step summarize to zero.
  return ad::lerpRows(acc, ad::constant(t, Matrix::Zero(batch, width)),
                      any_live);
}

}  // namespace toxdet::nn
