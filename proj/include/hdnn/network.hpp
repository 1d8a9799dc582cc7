// Copyright 2026 The hdnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hdnn/error.hpp"
#include "hdnn/matrix.hpp"
#include "hdnn/rng.hpp"

namespace hdnn {

struct HighwayConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t num_layers = 0;
  std::size_t output_dim = 0;
  bool gate_bias = false;

  void validate() const {
    if (input_dim < 1 || hidden_dim < 1 || num_layers < 1 || output_dim < 1) {
      throw ArgumentError("HighwayConfig: all dimensions must be >= 1");
    }
  }
};

/// Selects which parameter groups an optimizer step may modify:
/// hidden-layer weights, the tied gates, and the softmax classifier.
struct ParamGroupMask {
  bool hidden = true;
  bool gates = true;
  bool classifier = true;

  static ParamGroupMask all() { return {true, true, true}; }
  static ParamGroupMask none() { return {false, false, false}; }
  static ParamGroupMask gates_only() { return {false, true, false}; }
  bool any() const { return hidden || gates || classifier; }

  /// Accepts subsets of the letters h, g, c, with or without commas: "g", "h,g,c", "gc".
  static ParamGroupMask parse(const std::string& s) {
    ParamGroupMask m = none();
    for (char ch : s) {
      switch (ch) {
        case 'h': m.hidden = true; break;
        case 'g': m.gates = true; break;
        case 'c': m.classifier = true; break;
        case ',': break;
        default:
          throw ArgumentError(std::string("ParamGroupMask: unknown group '") + ch + "'");
      }
    }
    return m;
  }
  std::string str() const {
    std::string s;
    if (hidden) s += 'h';
    if (gates) s += 'g';
    if (classifier) s += 'c';
    return s;
  }
};

/// Feedforward stack of num_layers hidden layers. Layer 1 is a plain
/// input_dim -> H sigmoid layer; layers 2..L are highway layers whose
/// transform/carry gates share the single pair (w_t, w_c) across depth:
///
///   h_l = sigmoid(h_{l-1} W_l + b_l) o T(h_{l-1}) + h_{l-1} o C(h_{l-1})
///
/// with T = sigmoid(h W_t [+ b_t]) and C = sigmoid(h W_c [+ b_c]). Gates
/// carry no bias unless config.gate_bias. Activations are row vectors, so
/// every weight matrix is stored input-rows x output-cols.
struct HighwayNetwork {
  HighwayConfig config;
  // theta_h
  std::vector<Matrix> w;  // w[0]: input_dim x H, w[1..L-1]: H x H
  std::vector<Vector> b;  // each H
  // theta_g (tied across layers)
  Matrix w_t, w_c;    // H x H
  Vector b_t, b_c;    // empty unless gate_bias
  // theta_c
  Matrix w_out;  // H x output_dim
  Vector b_out;  // output_dim
};

/// Weights ~ U[-0.5, 0.5); biases start at zero. Draw order is fixed
/// (W1..WL, WT, WC, WO) so a seed fully determines the model.
inline HighwayNetwork init_network(const HighwayConfig& config, Rng& rng) {
  config.validate();
  const std::size_t h = config.hidden_dim;
  HighwayNetwork net;
  net.config = config;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t in = (l == 0) ? config.input_dim : h;
    net.w.push_back(uniform_init(rng, in, h, -0.5, 0.5));
    net.b.emplace_back(h, 0.0);
  }
  net.w_t = uniform_init(rng, h, h, -0.5, 0.5);
  net.w_c = uniform_init(rng, h, h, -0.5, 0.5);
  if (config.gate_bias) {
    net.b_t.assign(h, 0.0);
    net.b_c.assign(h, 0.0);
  }
  net.w_out = uniform_init(rng, h, config.output_dim, -0.5, 0.5);
  net.b_out.assign(config.output_dim, 0.0);
  return net;
}

inline std::size_t parameter_count(const HighwayNetwork& net,
                                   const ParamGroupMask& mask = ParamGroupMask::all()) {
  std::size_t n = 0;
  if (mask.hidden) {
    for (const Matrix& m : net.w) n += m.rows() * m.cols();
    for (const Vector& v : net.b) n += v.size();
  }
  if (mask.gates) {
    n += net.w_t.rows() * net.w_t.cols();
    n += net.w_c.rows() * net.w_c.cols();
    n += net.b_t.size() + net.b_c.size();
  }
  if (mask.classifier) {
    n += net.w_out.rows() * net.w_out.cols() + net.b_out.size();
  }
  return n;
}

/// Everything the backward pass needs from one frame's forward pass.
/// Index l is the layer (0-based); gate_t[0]/gate_c[0] stay empty because
/// the first layer has no gates.
struct ForwardTrace {
  std::vector<Vector> h;       // h[0] = input, h[l+1] = layer l output; size L+1
  std::vector<Vector> pre;     // body pre-activations, size L
  std::vector<Vector> body;    // sigmoid(pre), size L
  std::vector<Vector> gate_t;  // transform gate outputs, size L, [0] empty
  std::vector<Vector> gate_c;  // carry gate outputs, size L, [0] empty
  Vector logits;
  Vector posterior;  // softmax(logits), sums to 1
};

/// Gradient storage shaped exactly like HighwayNetwork's parameters.
/// Gate gradients accumulate contributions from every layer (tying).
struct Gradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;
  Matrix w_t, w_c;
  Vector b_t, b_c;
  Matrix w_out;
  Vector b_out;

  static Gradients zeros_like(const HighwayNetwork& net) {
    Gradients g;
    for (const Matrix& m : net.w) g.w.emplace_back(m.rows(), m.cols());
    for (const Vector& v : net.b) g.b.emplace_back(v.size(), 0.0);
    g.w_t = Matrix(net.w_t.rows(), net.w_t.cols());
    g.w_c = Matrix(net.w_c.rows(), net.w_c.cols());
    g.b_t.assign(net.b_t.size(), 0.0);
    g.b_c.assign(net.b_c.size(), 0.0);
    g.w_out = Matrix(net.w_out.rows(), net.w_out.cols());
    g.b_out.assign(net.b_out.size(), 0.0);
    return g;
  }

  /// this += alpha * o
  void add(const Gradients& o, double alpha = 1.0) {
    auto addm = [alpha](Matrix& a, const Matrix& x) {
      if (a.rows() != x.rows() || a.cols() != x.cols()) {
        throw ShapeError("Gradients::add: shape mismatch");
      }
      for (std::size_t i = 0; i < a.data().size(); ++i) a.data()[i] += alpha * x.data()[i];
    };
    auto addv = [alpha](Vector& a, const Vector& x) {
      if (a.size() != x.size()) throw ShapeError("Gradients::add: shape mismatch");
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * x[i];
    };
    if (w.size() != o.w.size()) throw ShapeError("Gradients::add: layer count mismatch");
    for (std::size_t l = 0; l < w.size(); ++l) addm(w[l], o.w[l]);
    for (std::size_t l = 0; l < b.size(); ++l) addv(b[l], o.b[l]);
    addm(w_t, o.w_t);
    addm(w_c, o.w_c);
    addv(b_t, o.b_t);
    addv(b_c, o.b_c);
    addm(w_out, o.w_out);
    addv(b_out, o.b_out);
  }

  void scale_all(double s) {
    for (Matrix& m : w) scale(m.data(), s);
    for (Vector& v : b) scale(v, s);
    scale(w_t.data(), s);
    scale(w_c.data(), s);
    scale(b_t, s);
    scale(b_c, s);
    scale(w_out.data(), s);
    scale(b_out, s);
  }
};

namespace detail {

inline Vector affine(const Vector& x, const Matrix& w, const Vector& b) {
  Vector y = vecmat(x, w);
  if (!b.empty()) axpy(1.0, b, y);
  return y;
}

}  // namespace detail

inline ForwardTrace forward(const HighwayNetwork& net, const Vector& x) {
  const HighwayConfig& cfg = net.config;
  if (x.size() != cfg.input_dim) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) +
                     " != input_dim " + std::to_string(cfg.input_dim));
  }
  const std::size_t layers = cfg.num_layers;
  ForwardTrace t;
  t.h.resize(layers + 1);
  t.pre.resize(layers);
  t.body.resize(layers);
  t.gate_t.resize(layers);
  t.gate_c.resize(layers);
  t.h[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const Vector& hin = t.h[l];
    t.pre[l] = detail::affine(hin, net.w[l], net.b[l]);
    t.body[l] = sigmoid(t.pre[l]);
    if (l == 0) {
      t.h[1] = t.body[0];
      continue;
    }
    t.gate_t[l] = sigmoid(detail::affine(hin, net.w_t, net.b_t));
    t.gate_c[l] = sigmoid(detail::affine(hin, net.w_c, net.b_c));
    Vector out(cfg.hidden_dim);
    for (std::size_t i = 0; i < cfg.hidden_dim; ++i) {
      out[i] = t.body[l][i] * t.gate_t[l][i] + hin[i] * t.gate_c[l][i];
    }
    t.h[l + 1] = std::move(out);
  }
  t.logits = detail::affine(t.h[layers], net.w_out, net.b_out);
  check_finite(std::span<const double>(t.logits), "forward logits");
  t.posterior = softmax(t.logits);
  return t;
}

/// Batched forward pass that evaluates each highway layer through a single
/// product with the packed matrix [W_l | W_t | W_c], equivalent to forward()
/// element by element.
inline std::vector<ForwardTrace> forward_packed(const HighwayNetwork& net,
                                                const std::vector<Vector>& batch) {
  const HighwayConfig& cfg = net.config;
  const std::size_t layers = cfg.num_layers;
  const std::size_t hd = cfg.hidden_dim;
  std::vector<ForwardTrace> traces(batch.size());
  if (batch.empty()) return traces;
  for (const Vector& x : batch) {
    if (x.size() != cfg.input_dim) {
      throw ShapeError("forward_packed: input length mismatch");
    }
  }
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = traces[i];
    t.h.resize(layers + 1);
    t.pre.resize(layers);
    t.body.resize(layers);
    t.gate_t.resize(layers);
    t.gate_c.resize(layers);
    t.h[0] = batch[i];
  }

  // Layer 0 is plain, so only W_0 applies.
  {
    Matrix xin(n, cfg.input_dim);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(batch[i].begin(), batch[i].end(), xin.row(i).begin());
    }
    Matrix z = matmul(xin, net.w[0]);
    for (std::size_t i = 0; i < n; ++i) {
      Vector pre(hd);
      for (std::size_t j = 0; j < hd; ++j) pre[j] = z(i, j) + net.b[0][j];
      traces[i].pre[0] = pre;
      traces[i].body[0] = sigmoid(pre);
      traces[i].h[1] = traces[i].body[0];
    }
  }

  for (std::size_t l = 1; l < layers; ++l) {
    const Matrix packed = hstack(std::vector<Matrix>{net.w[l], net.w_t, net.w_c});
    Matrix hin(n, hd);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(traces[i].h[l].begin(), traces[i].h[l].end(), hin.row(i).begin());
    }
    const Matrix z = matmul(hin, packed);  // n x 3H, one product per layer
    for (std::size_t i = 0; i < n; ++i) {
      auto& t = traces[i];
      Vector pre(hd), gt(hd), gc(hd);
      for (std::size_t j = 0; j < hd; ++j) {
        pre[j] = z(i, j) + net.b[l][j];
        double zt = z(i, hd + j);
        double zc = z(i, 2 * hd + j);
        if (!net.b_t.empty()) zt += net.b_t[j];
        if (!net.b_c.empty()) zc += net.b_c[j];
        gt[j] = sigmoid(zt);
        gc[j] = sigmoid(zc);
      }
      t.pre[l] = std::move(pre);
      t.body[l] = sigmoid(t.pre[l]);
      t.gate_t[l] = std::move(gt);
      t.gate_c[l] = std::move(gc);
      Vector out(hd);
      for (std::size_t j = 0; j < hd; ++j) {
        out[j] = t.body[l][j] * t.gate_t[l][j] + t.h[l][j] * t.gate_c[l][j];
      }
      t.h[l + 1] = std::move(out);
    }
  }

  for (auto& t : traces) {
    t.logits = detail::affine(t.h[layers], net.w_out, net.b_out);
    check_finite(std::span<const double>(t.logits), "forward_packed logits");
    t.posterior = softmax(t.logits);
  }
  return traces;
}

/// Backpropagation for one frame. output_grad is the loss derivative with
/// respect to the pre-softmax logits, which lets CE and sequence criteria
/// share this routine. The gradient through h_{l-1} follows all four paths:
/// the sigmoid body, the transform gate, the carried input, and the carry
/// gate. Gate gradients sum over layers because the gates are tied.
inline Gradients backward(const HighwayNetwork& net, const ForwardTrace& t,
                          const Vector& output_grad) {
  const HighwayConfig& cfg = net.config;
  const std::size_t layers = cfg.num_layers;
  const std::size_t hd = cfg.hidden_dim;
  if (t.h.size() != layers + 1 || t.body.size() != layers ||
      t.h[0].size() != cfg.input_dim || t.logits.size() != cfg.output_dim) {
    throw StateError("backward: trace does not match network");
  }
  if (output_grad.size() != cfg.output_dim) {
    throw ShapeError("backward: output_grad length mismatch");
  }

  Gradients g = Gradients::zeros_like(net);
  g.w_out = outer(t.h[layers], output_grad);
  g.b_out = output_grad;
  Vector dh = matvec(net.w_out, output_grad);

  for (std::size_t l = layers - 1; l >= 1; --l) {
    const Vector& hin = t.h[l];
    const Vector& body = t.body[l];
    const Vector& gt = t.gate_t[l];
    const Vector& gc = t.gate_c[l];
    Vector da(hd), dg(hd), dr(hd);
    for (std::size_t i = 0; i < hd; ++i) {
      const double ds = dh[i] * gt[i];
      const double dt = dh[i] * body[i];
      const double dc = dh[i] * hin[i];
      da[i] = ds * body[i] * (1.0 - body[i]);
      dg[i] = dt * gt[i] * (1.0 - gt[i]);
      dr[i] = dc * gc[i] * (1.0 - gc[i]);
    }
    g.w[l].data() = outer(hin, da).data();
    g.b[l] = da;
    g.w_t.data() = [&] {
      Matrix acc = std::move(g.w_t);
      const Matrix contrib = outer(hin, dg);
      for (std::size_t i = 0; i < acc.data().size(); ++i) acc.data()[i] += contrib.data()[i];
      return std::move(acc.data());
    }();
    {
      const Matrix contrib = outer(hin, dr);
      for (std::size_t i = 0; i < g.w_c.data().size(); ++i) {
        g.w_c.data()[i] += contrib.data()[i];
      }
    }
    if (!g.b_t.empty()) axpy(1.0, dg, g.b_t);
    if (!g.b_c.empty()) axpy(1.0, dr, g.b_c);

    Vector next(hd);
    const Vector via_body = matvec(net.w[l], da);
    const Vector via_t = matvec(net.w_t, dg);
    const Vector via_c = matvec(net.w_c, dr);
    for (std::size_t i = 0; i < hd; ++i) {
      next[i] = dh[i] * gc[i] + via_body[i] + via_t[i] + via_c[i];
    }
    dh = std::move(next);
  }

  // Plain first layer.
  Vector da0(hd);
  for (std::size_t i = 0; i < hd; ++i) {
    da0[i] = dh[i] * t.body[0][i] * (1.0 - t.body[0][i]);
  }
  g.w[0] = outer(t.h[0], da0);
  g.b[0] = da0;
  return g;
}

/// Zeroes the gradient blocks of deselected groups; selected blocks pass
/// through untouched.
inline Gradients apply_mask(Gradients g, const ParamGroupMask& mask) {
  if (!mask.hidden) {
    for (Matrix& m : g.w) std::fill(m.data().begin(), m.data().end(), 0.0);
    for (Vector& v : g.b) std::fill(v.begin(), v.end(), 0.0);
  }
  if (!mask.gates) {
    std::fill(g.w_t.data().begin(), g.w_t.data().end(), 0.0);
    std::fill(g.w_c.data().begin(), g.w_c.data().end(), 0.0);
    std::fill(g.b_t.begin(), g.b_t.end(), 0.0);
    std::fill(g.b_c.begin(), g.b_c.end(), 0.0);
  }
  if (!mask.classifier) {
    std::fill(g.w_out.data().begin(), g.w_out.data().end(), 0.0);
    std::fill(g.b_out.begin(), g.b_out.end(), 0.0);
  }
  return g;
}

}  // namespace hdnn
