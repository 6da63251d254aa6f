// Input-derivative propagation and parameter backpropagation for the two
// network architectures.
//
// A batch of N points is carried through the network as a matrix with one
// column block per channel: block 0 holds values, the remaining blocks hold
// first derivatives (d/dx, d/dt, d/dy) and pure second derivatives (d2/dx2,
// d2/dy2) of the layer activations with respect to the inputs. For a dense
// layer z = W a + b every channel maps through W; the bias only enters block 0.
// Through an activation s = act(z):
//   s_v  = act'(z) z_v
//   s_vv = act''(z) z_v^2 + act'(z) z_vv
// The reverse pass differentiates these forward rules, which is where the
// third derivative of the activation appears.

#include "heatpinn/autodiff.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "heatpinn/errors.hpp"
#include "heatpinn/loss.hpp"

namespace heatpinn {

DerivativeRequest DerivativeRequest::from_labels(std::span<const std::string_view> labels) {
  DerivativeRequest r;
  for (auto l : labels) {
    if (l == "d_dx") r.d_dx = true;
    else if (l == "d_dt") r.d_dt = true;
    else if (l == "d2_dx2") r.d2_dx2 = true;
    else if (l == "d_dy") r.d_dy = true;
    else if (l == "d2_dy2") r.d2_dy2 = true;
    else throw RequestError("unknown derivative label '" + std::string(l) + "'");
  }
  return r;
}

namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using MapConstMatrix = Eigen::Map<const MatrixXd>;
using MapMatrix = Eigen::Map<MatrixXd>;

enum Channel { kDx = 0, kDt, kDy, kDxx, kDyy, kChannelCount };

constexpr int base_of(Channel c) { return c == kDxx ? kDx : (c == kDyy ? kDy : -1); }

// Which derivative channels a group carries and in which column block. Base
// channels always precede the second derivatives built on them.
struct ChannelSet {
  std::array<int, kChannelCount> block{-1, -1, -1, -1, -1};
  std::vector<Channel> order;

  static ChannelSet from(const DerivativeRequest& r) {
    ChannelSet s;
    const bool dx = r.d_dx || r.d2_dx2;
    const bool dy = r.d_dy || r.d2_dy2;
    if (dx) s.add(kDx);
    if (r.d_dt) s.add(kDt);
    if (dy) s.add(kDy);
    if (r.d2_dx2) s.add(kDxx);
    if (r.d2_dy2) s.add(kDyy);
    return s;
  }

  void add(Channel c) {
    block[c] = static_cast<int>(order.size()) + 1;
    order.push_back(c);
  }
  int blocks() const { return static_cast<int>(order.size()) + 1; }
  bool has(Channel c) const { return block[c] >= 0; }
};

// First and second derivative of the activation at each pre-activation.
struct ActivationDerivs {
  ArrayXXd d1, d2;
};

ActivationDerivs activate(Activation kind, const ArrayXXd& z, ArrayXXd& value) {
  ActivationDerivs a;
  switch (kind) {
    case Activation::elu: {
      const ArrayXXd e = z.min(0.0).exp();
      const auto pos = (z >= 0.0);
      value = pos.select(z, e - 1.0);
      a.d1 = pos.select(ArrayXXd::Ones(z.rows(), z.cols()), e);
      a.d2 = pos.select(ArrayXXd::Zero(z.rows(), z.cols()), e);
      break;
    }
    case Activation::relu: {
      const auto pos = (z > 0.0);
      value = pos.select(z, 0.0);
      a.d1 = pos.select(ArrayXXd::Ones(z.rows(), z.cols()), 0.0);
      a.d2 = ArrayXXd::Zero(z.rows(), z.cols());
      break;
    }
    case Activation::tanh: {
      value = z.tanh();
      a.d1 = 1.0 - value.square();
      a.d2 = -2.0 * value * a.d1;
      break;
    }
  }
  return a;
}

template <class Value>
ArrayXXd third_derivative(Activation kind, const ActivationDerivs& a, const Value& value) {
  switch (kind) {
    case Activation::elu: return a.d2;
    case Activation::relu: return ArrayXXd::Zero(a.d1.rows(), a.d1.cols());
    case Activation::tanh: return a.d1 * (6.0 * value.square() - 2.0);
  }
  return a.d2;
}

struct Layer {
  const ParamSlot* weight;
  const ParamSlot* bias;
};

// Every epoch allocates and frees the same few hundred-kilobyte buffers. With
// glibc defaults those go through mmap or get trimmed back to the kernel each
// time, and the resulting page faults cost more than the arithmetic.
void keep_buffers_on_heap() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
  });
#endif
}

struct Engine {
  const NetworkSpec& spec;
  const ParamStore& params;
  // Aligned copy: Eigen's vectorized reductions peel by pointer alignment, so
  // mapping the caller's buffer would make results depend on its address.
  Eigen::VectorXd values;
  std::vector<Layer> hidden;
  Layer output;
  bool engineered;
  bool two_d;
  int features = 0;

  Engine(const NetworkSpec& s, const ParamStore& p)
      : spec(s), params(p), engineered(s.architecture == Architecture::engineered),
        two_d(s.dimensionality() == 2) {
    keep_buffers_on_heap();
    spec.validate();
    if (p.size() != parameter_count(spec)) {
      throw ContractError("parameter store has " + std::to_string(p.size()) +
                          " values but the network needs " +
                          std::to_string(parameter_count(spec)));
    }
    values = Eigen::Map<const Eigen::VectorXd>(p.values().data(), static_cast<Eigen::Index>(p.size()));
    for (int l = 0; l < spec.hidden_layers; ++l) {
      const std::string n = "dense" + std::to_string(l);
      hidden.push_back({&p.slot(n + ".weight"), &p.slot(n + ".bias")});
    }
    output = {&p.slot("output.weight"), &p.slot("output.bias")};
    if (engineered) features = spec.engineered_feature_count;
  }

  MapConstMatrix mat(const ParamSlot& s) const {
    return MapConstMatrix(values.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                          static_cast<Eigen::Index>(s.cols));
  }
  Eigen::Map<const Eigen::VectorXd> vec(std::string_view name) const {
    const auto& s = params.slot(name);
    return Eigen::Map<const Eigen::VectorXd>(values.data() + s.offset,
                                             static_cast<Eigen::Index>(s.size()));
  }
};

// Intermediate values kept for the reverse pass.
struct Tape {
  ChannelSet ch;
  Eigen::Index n = 0;
  // Engineered factors, features x points: E(t), S(x), Y(y) and derivatives.
  ArrayXXd e, et, s, sx, sxx, cu, y, yy, yyy, cw;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clamped;
  Eigen::ArrayXd x, t, y_in;  // point coordinates
  std::vector<MatrixXd> acts;  // input of hidden layer l, acts[H] feeds the output layer
  std::vector<MatrixXd> pre;   // pre-activation of hidden layer l
  std::vector<ActivationDerivs> dact;
  Eigen::RowVectorXd out;
  std::size_t clamp_hits = 0;
};

double label_value(const InputPoint& p, InputLabel l) {
  switch (l) {
    case InputLabel::x: return p.x;
    case InputLabel::y: return p.y;
    case InputLabel::t: return p.t;
    case InputLabel::h1: return p.h1;
    case InputLabel::h2: return p.h2;
  }
  return 0;
}

MatrixXd input_block(const Engine& eng, std::span<const InputPoint> pts, Tape& tape) {
  const Eigen::Index n = tape.n;
  const int blocks = tape.ch.blocks();
  const auto& spec = eng.spec;
  if (!eng.engineered) {
    MatrixXd a = MatrixXd::Zero(spec.dense_input_width(), blocks * n);
    for (std::size_t r = 0; r < spec.input_labels.size(); ++r) {
      const InputLabel l = spec.input_labels[r];
      for (Eigen::Index p = 0; p < n; ++p) a(r, p) = label_value(pts[p], l);
      const int blk = l == InputLabel::x   ? tape.ch.block[kDx]
                      : l == InputLabel::t ? tape.ch.block[kDt]
                      : l == InputLabel::y ? tape.ch.block[kDy]
                                           : -1;
      if (blk >= 0) a.block(r, blk * n, 1, n).setOnes();
    }
    return a;
  }

  const Eigen::Index f = eng.features;
  const auto wa = eng.vec("pre_t.weight");
  const auto ba = eng.vec("pre_t.bias");
  const auto wb = eng.vec("pre_x.weight");
  const auto bb = eng.vec("pre_x.bias");
  tape.x.resize(n);
  tape.t.resize(n);
  tape.y_in.resize(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    tape.x[p] = pts[p].x;
    tape.t[p] = pts[p].t;
    tape.y_in[p] = pts[p].y;
  }
  const ArrayXXd arg = (wa * tape.t.matrix().transpose()).array().colwise() + ba.array();
  tape.clamped = arg > kExpArgClamp;
  tape.clamp_hits += static_cast<std::size_t>(tape.clamped.count());
  tape.e = arg.min(kExpArgClamp).exp();
  tape.et = tape.clamped.select(0.0, tape.e.colwise() * wa.array());
  tape.s.resize(f, n);
  tape.cu.resize(f, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < f; ++i) {
      const double u = wb[i] * tape.x[p] + bb[i];
      tape.s(i, p) = std::sin(u);
      tape.cu(i, p) = std::cos(u);
    }
  }
  tape.sx = tape.cu.colwise() * wb.array();
  tape.sxx = tape.s.colwise() * (-wb.array().square());
  if (eng.two_d) {
    const auto wc = eng.vec("pre_y.weight");
    const auto bc = eng.vec("pre_y.bias");
    tape.y.resize(f, n);
    tape.cw.resize(f, n);
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index i = 0; i < f; ++i) {
        const double w = wc[i] * tape.y_in[p] + bc[i];
        tape.y(i, p) = std::sin(w);
        tape.cw(i, p) = std::cos(w);
      }
    }
    tape.yy = tape.cw.colwise() * wc.array();
    tape.yyy = tape.y.colwise() * (-wc.array().square());
  } else {
    tape.y.setOnes(f, n);
    tape.yy.setZero(f, n);
    tape.yyy.setZero(f, n);
    tape.cw.setZero(f, n);
  }

  const auto bypass = eng.spec.bypass_inputs();
  MatrixXd a(spec.dense_input_width(), blocks * n);
  auto put = [&](int blk, const ArrayXXd& v) {
    if (blk >= 0) a.block(0, blk * n, f, n) = v.matrix();
  };
  put(0, tape.e * tape.s * tape.y);
  put(tape.ch.block[kDx], tape.e * tape.sx * tape.y);
  put(tape.ch.block[kDt], tape.et * tape.s * tape.y);
  put(tape.ch.block[kDy], tape.e * tape.s * tape.yy);
  put(tape.ch.block[kDxx], tape.e * tape.sxx * tape.y);
  put(tape.ch.block[kDyy], tape.e * tape.s * tape.yyy);
  if (!bypass.empty()) {
    // h inputs carry no input derivatives.
    a.bottomRows(static_cast<Eigen::Index>(bypass.size())).setZero();
    for (std::size_t k = 0; k < bypass.size(); ++k) {
      for (Eigen::Index p = 0; p < n; ++p) a(f + k, p) = label_value(pts[p], bypass[k]);
    }
  }
  return a;
}

// Names the first layer whose output went non-finite.
[[noreturn]] void report_non_finite(const Engine& eng, const Tape& tape) {
  std::string slot = "output.weight";
  if (!tape.acts.front().allFinite()) {
    slot = eng.engineered ? "pre_t.weight" : "input";
  } else {
    for (std::size_t l = 1; l < tape.acts.size(); ++l) {
      if (!tape.acts[l].allFinite()) {
        slot = eng.hidden[l - 1].weight->name;
        break;
      }
    }
  }
  throw NumericError("non-finite intermediate value after layer '" + slot + "'");
}

Tape forward_group(const Engine& eng, std::span<const InputPoint> pts, const ChannelSet& ch) {
  Tape tape;
  tape.ch = ch;
  tape.n = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index n = tape.n;
  tape.acts.reserve(eng.hidden.size() + 1);
  tape.pre.reserve(eng.hidden.size());
  tape.dact.reserve(eng.hidden.size());
  tape.acts.push_back(input_block(eng, pts, tape));
  for (const auto& layer : eng.hidden) {
    const auto w = eng.mat(*layer.weight);
    const auto b = eng.mat(*layer.bias);
    MatrixXd z;
    z.noalias() = w * tape.acts.back();
    z.leftCols(n).colwise() += b.col(0);
    ArrayXXd val;
    auto act = activate(eng.spec.activation, z.leftCols(n).array(), val);
    MatrixXd s(z.rows(), z.cols());
    s.leftCols(n) = val.matrix();
    for (Channel c : ch.order) {
      const int blk = ch.block[c];
      const auto zc = z.middleCols(blk * n, n).array();
      if (base_of(c) < 0) {
        s.middleCols(blk * n, n) = (act.d1 * zc).matrix();
      } else {
        const auto zb = z.middleCols(ch.block[base_of(c)] * n, n).array();
        s.middleCols(blk * n, n) = (act.d2 * zb.square() + act.d1 * zc).matrix();
      }
    }
    tape.pre.push_back(std::move(z));
    tape.acts.push_back(std::move(s));
    tape.dact.push_back(std::move(act));
  }
  const auto wo = eng.mat(*eng.output.weight);
  tape.out.noalias() = wo * tape.acts.back();
  tape.out.head(n).array() += eng.params.values()[eng.output.bias->offset];
  if (!tape.out.allFinite()) report_non_finite(eng, tape);
  return tape;
}

// Reverse pass. `out_adj` holds dL/d(output channel) for every block; the
// parameter gradient is accumulated into `grad`.
void backward_group(const Engine& eng, const Tape& tape, const Eigen::RowVectorXd& out_adj,
                    std::span<double> grad) {
  const Eigen::Index n = tape.n;
  const auto& ch = tape.ch;
  auto gmat = [&](const ParamSlot& s) {
    return MapMatrix(grad.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                     static_cast<Eigen::Index>(s.cols));
  };

  gmat(*eng.output.weight).noalias() += out_adj * tape.acts.back().transpose();
  grad[eng.output.bias->offset] += out_adj.head(n).sum();
  MatrixXd adj;
  adj.noalias() = eng.mat(*eng.output.weight).transpose() * out_adj;
  MatrixXd zadj;

  for (std::size_t l = eng.hidden.size(); l-- > 0;) {
    const MatrixXd& z = tape.pre[l];
    const auto& act = tape.dact[l];
    const ArrayXXd d3 =
        third_derivative(eng.spec.activation, act, tape.acts[l + 1].leftCols(n).array());
    zadj.resize(z.rows(), z.cols());
    ArrayXXd z0adj = adj.leftCols(n).array() * act.d1;
    for (Channel c : ch.order) {
      const int blk = ch.block[c];
      const auto sadj = adj.middleCols(blk * n, n).array();
      const auto zc = z.middleCols(blk * n, n).array();
      zadj.middleCols(blk * n, n).array() = sadj * act.d1;
      if (base_of(c) < 0) {
        z0adj += sadj * act.d2 * zc;
      } else {
        const int base = ch.block[base_of(c)];
        const auto zb = z.middleCols(base * n, n).array();
        z0adj += sadj * (d3 * zb.square() + act.d2 * zc);
        zadj.middleCols(base * n, n).array() += 2.0 * sadj * act.d2 * zb;
      }
    }
    zadj.leftCols(n) = z0adj.matrix();
    const auto& layer = eng.hidden[l];
    gmat(*layer.weight).noalias() += zadj * tape.acts[l].transpose();
    gmat(*layer.bias).col(0) += zadj.leftCols(n).rowwise().sum();
    if (l > 0 || eng.engineered) adj.noalias() = eng.mat(*layer.weight).transpose() * zadj;
  }
  if (!eng.engineered) return;

  const Eigen::Index f = eng.features;
  auto block_adj = [&](int blk) -> ArrayXXd {
    if (blk < 0) return ArrayXXd::Zero(f, n);
    return adj.block(0, blk * n, f, n).array();
  };
  const ArrayXXd pv = block_adj(0);
  const ArrayXXd px = block_adj(ch.block[kDx]);
  const ArrayXXd pt = block_adj(ch.block[kDt]);
  const ArrayXXd py = block_adj(ch.block[kDy]);
  const ArrayXXd pxx = block_adj(ch.block[kDxx]);
  const ArrayXXd pyy = block_adj(ch.block[kDyy]);
  const ArrayXXd& e = tape.e;
  const ArrayXXd& et = tape.et;
  const ArrayXXd& s = tape.s;
  const ArrayXXd& y = tape.y;

  // Adjoints of the factor values.
  const ArrayXXd e_adj = pv * s * y + px * tape.sx * y + py * s * tape.yy + pxx * tape.sxx * y +
                         pyy * s * tape.yyy;
  const ArrayXXd et_adj = pt * s * y;
  const ArrayXXd s_adj = pv * e * y + pt * et * y + py * e * tape.yy + pyy * e * tape.yyy;
  const ArrayXXd sx_adj = px * e * y;
  const ArrayXXd sxx_adj = pxx * e * y;

  // Points broadcast along the feature rows.
  const auto tb = tape.t.transpose().replicate(f, 1);
  const auto xb = tape.x.transpose().replicate(f, 1);

  // E = exp(a t + a0), E_t = a E (both constant in a, a0 where clamped).
  const ArrayXXd live = (!tape.clamped).cast<double>();
  const ArrayXXd ga0 = live * (e_adj * e + et_adj * et);
  const ArrayXXd ga = live * (e_adj * tb * e + et_adj * (e + tb * et));

  // S = sin(b x + b0), S_x = b cos, S_xx = -b^2 sin.
  const auto wb = eng.vec("pre_x.weight").array();
  const ArrayXXd b = wb.replicate(1, n);
  const ArrayXXd& cu = tape.cu;
  const ArrayXXd gb0 = s_adj * cu - sx_adj * b * s - sxx_adj * b.square() * cu;
  const ArrayXXd gb = s_adj * xb * cu + sx_adj * (cu - b * xb * s) -
                      sxx_adj * (2.0 * b * s + b.square() * xb * cu);

  auto acc = [&](std::string_view name, const ArrayXXd& g) {
    const auto& slot = eng.params.slot(name);
    Eigen::Map<Eigen::VectorXd>(grad.data() + slot.offset, f) += g.rowwise().sum().matrix();
  };
  acc("pre_t.weight", ga);
  acc("pre_t.bias", ga0);
  acc("pre_x.weight", gb);
  acc("pre_x.bias", gb0);

  if (eng.two_d) {
    const ArrayXXd y_adj = pv * e * s + pt * et * s + px * e * tape.sx + pxx * e * tape.sxx;
    const ArrayXXd yy_adj = py * e * s;
    const ArrayXXd yyy_adj = pyy * e * s;
    const auto yb = tape.y_in.transpose().replicate(f, 1);
    const ArrayXXd c = eng.vec("pre_y.weight").array().replicate(1, n);
    const ArrayXXd& cw = tape.cw;
    const ArrayXXd gc0 = y_adj * cw - yy_adj * c * y - yyy_adj * c.square() * cw;
    const ArrayXXd gc = y_adj * yb * cw + yy_adj * (cw - c * yb * y) -
                        yyy_adj * (2.0 * c * y + c.square() * yb * cw);
    acc("pre_y.weight", gc);
    acc("pre_y.bias", gc0);
  }
}

EvalResult result_at(const Tape& tape, Eigen::Index p) {
  EvalResult r;
  const Eigen::Index n = tape.n;
  r.value = tape.out[p];
  auto get = [&](Channel c) -> std::optional<double> {
    if (tape.ch.block[c] < 0) return std::nullopt;
    return tape.out[tape.ch.block[c] * n + p];
  };
  r.d_dx = get(kDx);
  r.d_dt = get(kDt);
  r.d_dy = get(kDy);
  r.d2_dx2 = get(kDxx);
  r.d2_dy2 = get(kDyy);
  return r;
}

void check_request(const NetworkSpec& spec, const DerivativeRequest& req) {
  if ((req.d_dy || req.d2_dy2) && spec.dimensionality() != 2) {
    throw RequestError("y derivatives requested from a 1D network");
  }
}

// Channels an affine residual reads.
DerivativeRequest channels_for(const AffineResidual& form) {
  DerivativeRequest r;
  r.d_dx = form.d_dx != 0;
  r.d_dt = form.d_dt != 0;
  r.d2_dx2 = form.d2_dx2 != 0;
  r.d_dy = form.d_dy != 0;
  r.d2_dy2 = form.d2_dy2 != 0;
  return r;
}

DerivativeRequest merge(DerivativeRequest a, const DerivativeRequest& b) {
  a.d_dx |= b.d_dx;
  a.d_dt |= b.d_dt;
  a.d2_dx2 |= b.d2_dx2;
  a.d_dy |= b.d_dy;
  a.d2_dy2 |= b.d2_dy2;
  return a;
}

int request_key(const DerivativeRequest& r) {
  return r.d_dx | r.d_dt << 1 | r.d2_dx2 << 2 | r.d_dy << 3 | r.d2_dy2 << 4;
}

// One residual term: its points, the affine form at each point, and where its
// points sit inside the shared pass of its channel group.
struct Term {
  std::span<const InputPoint> points;
  std::vector<AffineResidual> forms;
  DerivativeRequest request;
  double lambda = 1;
  std::size_t group = 0;
  Eigen::Index offset = 0;
  std::vector<double> residuals;
};

// Terms needing the same channels share one forward and backward pass.
struct Group {
  DerivativeRequest request;
  std::vector<InputPoint> points;
  std::vector<std::size_t> terms;
  Tape tape;
};

Eigen::RowVectorXd output_adjoint(const Group& group, const std::vector<Term>& terms) {
  const Eigen::Index n = group.tape.n;
  const auto& ch = group.tape.ch;
  Eigen::RowVectorXd adj = Eigen::RowVectorXd::Zero(ch.blocks() * n);
  for (std::size_t k : group.terms) {
    const Term& term = terms[k];
    const double scale = 2.0 * term.lambda / static_cast<double>(term.points.size());
    for (std::size_t i = 0; i < term.points.size(); ++i) {
      const Eigen::Index p = term.offset + static_cast<Eigen::Index>(i);
      const auto& f = term.forms[i];
      const double g = scale * term.residuals[i];
      adj[p] = g * f.value;
      auto put = [&](Channel c, double coeff) {
        if (coeff != 0) adj[ch.block[c] * n + p] = g * coeff;
      };
      put(kDx, f.d_dx);
      put(kDt, f.d_dt);
      put(kDxx, f.d2_dx2);
      put(kDy, f.d_dy);
      put(kDyy, f.d2_dy2);
    }
  }
  return adj;
}

LossGradient run_loss(const NetworkSpec& spec, const ParamStore& params,
                      const CollocationBatch& batch, const LossDefinition& def, bool backward) {
  const Engine eng(spec, params);
  if (batch.boundaries.size() != def.boundaries.size()) {
    throw ContractError("batch has " + std::to_string(batch.boundaries.size()) +
                        " boundary lists but the loss defines " +
                        std::to_string(def.boundaries.size()));
  }
  if (def.lambdas.size() != def.term_count()) {
    throw ContractError("loss definition needs one lambda per term");
  }
  const auto names = def.term_names();
  std::vector<Term> terms(def.term_count());
  auto build = [&](std::size_t k, std::span<const InputPoint> pts, auto&& form_at) {
    if (pts.empty()) throw ContractError("loss term '" + names[k] + "' has no points");
    Term& term = terms[k];
    term.points = pts;
    term.lambda = def.lambdas[k];
    term.forms.reserve(pts.size());
    for (const auto& p : pts) {
      term.forms.push_back(form_at(p));
      term.request = merge(term.request, channels_for(term.forms.back()));
    }
  };
  const AffineResidual pde = pde_form(def.pde);
  build(0, batch.interior, [&](const InputPoint&) { return pde; });
  const AffineResidual ic = ic_form(def.initial_temp_hat);
  build(1, batch.initial, [&](const InputPoint&) { return ic; });
  for (std::size_t b = 0; b < def.boundaries.size(); ++b) {
    const auto& bc = def.boundaries[b];
    build(2 + b, batch.boundaries[b], [&](const InputPoint& p) {
      if (bc.insulated) return insulated_form(bc.edge);
      return bc_form(bc.edge, def.air_temp_hat(p.t), bc.h_hat(p), bc.conduction_factor);
    });
  }

  std::vector<Group> groups;
  std::map<int, std::size_t> group_of;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const int key = request_key(terms[k].request);
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.push_back({terms[k].request, {}, {}, {}});
    Group& g = groups[it->second];
    terms[k].group = it->second;
    terms[k].offset = static_cast<Eigen::Index>(g.points.size());
    g.points.insert(g.points.end(), terms[k].points.begin(), terms[k].points.end());
    g.terms.push_back(k);
  }
  for (auto& g : groups) {
    g.tape = forward_group(eng, g.points, ChannelSet::from(g.request));
  }

  LossGradient out;
  bool finite = true;
  for (auto& term : terms) {
    const Tape& tape = groups[term.group].tape;
    term.residuals.resize(term.points.size());
    double sum = 0;
    for (std::size_t i = 0; i < term.points.size(); ++i) {
      const double r =
          term.forms[i].apply(result_at(tape, term.offset + static_cast<Eigen::Index>(i)));
      term.residuals[i] = r;
      sum += r * r;
    }
    const double loss = sum / static_cast<double>(term.points.size());
    out.losses.push_back(loss);
    out.composite += term.lambda * loss;
    finite = finite && std::isfinite(loss);
  }
  for (const auto& g : groups) out.clamp_hits += g.tape.clamp_hits;
  if (!finite || !std::isfinite(out.composite)) {
    std::ostringstream msg;
    msg << "non-finite loss:";
    for (std::size_t k = 0; k < names.size(); ++k) msg << ' ' << names[k] << '=' << out.losses[k];
    throw NumericError(msg.str());
  }
  if (!backward) return out;

  // Accumulate in an aligned buffer so the result does not depend on where
  // the caller's vector happens to live.
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  for (const auto& g : groups) {
    backward_group(eng, g.tape, output_adjoint(g, terms), {grad.data(), params.size()});
  }
  out.gradient.assign(grad.data(), grad.data() + grad.size());
  return out;
}

}  // namespace

EvalResult evaluate(const NetworkSpec& spec, const ParamStore& params, const InputPoint& point,
                    const DerivativeRequest& request) {
  return evaluate_batch(spec, params, std::span<const InputPoint>(&point, 1), request).front();
}

std::vector<EvalResult> evaluate_batch(const NetworkSpec& spec, const ParamStore& params,
                                       std::span<const InputPoint> points,
                                       const DerivativeRequest& request) {
  check_request(spec, request);
  if (points.empty()) return {};
  const Engine eng(spec, params);
  const Tape tape = forward_group(eng, points, ChannelSet::from(request));
  std::vector<EvalResult> out;
  out.reserve(points.size());
  for (Eigen::Index p = 0; p < tape.n; ++p) {
    out.push_back(result_at(tape, p));
  }
  return out;
}

LossGradient loss_gradient(const NetworkSpec& spec, const ParamStore& params,
                           const CollocationBatch& batch, const LossDefinition& loss_def) {
  return run_loss(spec, params, batch, loss_def, true);
}

LossGradient loss_values(const NetworkSpec& spec, const ParamStore& params,
                         const CollocationBatch& batch, const LossDefinition& loss_def) {
  return run_loss(spec, params, batch, loss_def, false);
}

}  // namespace heatpinn
