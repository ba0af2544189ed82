#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toxdet/autodiff.hpp"

namespace toxdet::nn {

using ad::Param;
using ad::Rng;
using ad::Tape;
using ad::Var;

// Creates a tape node for a parameter: a gradient-carrying leaf while
// training, a plain constant for inference.
inline Var paramVar(Tape& t, Param& p, bool with_grad) {
  return with_grad ? ad::leaf(t, p) : ad::constant(t, p.value);
}

struct DenseLayer {
  Param weight;  // in x out
  Param bias;    // 1 x out

  void init(const std::string& name, long in, long out, Rng& rng);
  // Pre-activation x*W + b for x of shape B x in.
  Var apply(Tape& t, Var x, bool with_grad);
  void collect(std::vector<Param*>& out);
};

struct Conv1dLayer {
  int kernel = 3;
  Param weight;  // (kernel*in) x channels
  Param bias;    // 1 x channels

  void init(const std::string& name, int kernel_size, long in, long channels,
            Rng& rng);
  // Valid windows of x (T x in) -> (T-kernel+1) x channels, pre-activation.
  // x must have at least `kernel` rows; pad beforehand.
  Var apply(Tape& t, Var x, bool with_grad);
  void collect(std::vector<Param*>& out);
};

struct LstmCell {
  long units = 0;
  Param wx;    // in x 4u, gate order [input, forget, cell, output]
  Param wh;    // u x 4u
  Param bias;  // 1 x 4u, forget slice initialized to 1

  struct Vars {
    Var wx, wh, bias;
  };
  void init(const std::string& name, long in, long units_, Rng& rng);
  Vars materialize(Tape& t, bool with_grad);
  // One batched step; x_t is B x in, h and c are B x u.
  std::pair<Var, Var> step(const Vars& w, Var x_t, Var h, Var c) const;
  void collect(std::vector<Param*>& out);
};

struct GruCell {
  long units = 0;
  Param wx;    // in x 3u, gate order [update, reset, candidate]
  Param wh;    // u x 3u
  Param bias;  // 1 x 3u

  struct Vars {
    Var wx, wh, bias;
  };
  void init(const std::string& name, long in, long units_, Rng& rng);
  Vars materialize(Tape& t, bool with_grad);
  Var step(const Vars& w, Var x_t, Var h) const;
  void collect(std::vector<Param*>& out);
};

// Per-step outputs and final states of one bidirectional recurrent layer run
// over a masked batch. xs[t] is B x in; masks[t] flags the live rows.
struct BidirectionalResult {
  std::vector<Var> step_outputs;  // T entries, each B x 2u
  Var summary;                    // B x 2u: [forward final, backward final]
};

template <typename Cell>
struct BidirectionalLayer {
  Cell forward_cell;
  Cell backward_cell;

  void init(const std::string& name, long in, long units, Rng& rng) {
    forward_cell.init(name + ".fwd", in, units, rng);
    backward_cell.init(name + ".bwd", in, units, rng);
  }
  void collect(std::vector<Param*>& out) {
    forward_cell.collect(out);
    backward_cell.collect(out);
  }
};

BidirectionalResult runBidirectional(Tape& t, BidirectionalLayer<LstmCell>& layer,
                                     std::span<const Var> xs,
                                     std::span<const ad::Vector> masks,
                                     long batch, bool with_grad);
BidirectionalResult runBidirectional(Tape& t, BidirectionalLayer<GruCell>& layer,
                                     std::span<const Var> xs,
                                     std::span<const ad::Vector> masks,
                                     long batch, bool with_grad);

// Running masked elementwise max over per-step outputs; rows of padded steps
// never contribute. Zero rows result for all-padding examples.
Var maskedMaxOverSteps(Tape& t, std::span<const Var> steps,
                       std::span<const ad::Vector> masks, long batch, long width);

}  // namespace toxdet::nn
