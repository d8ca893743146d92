#include "loglo/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "gelu_kernel.hpp"
#include "loglo/fft.hpp"
#include "loglo/patching.hpp"

namespace loglo::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

const RealTensor& R(const Value& v) { return std::get<RealTensor>(v); }
const ComplexTensor& C(const Value& v) { return std::get<ComplexTensor>(v); }
RealTensor&& take_real(Value& v) { return std::move(std::get<RealTensor>(v)); }
ComplexTensor&& take_complex(Value& v) { return std::move(std::get<ComplexTensor>(v)); }

const Shape& value_shape(const Value& v) {
  return std::visit([](const auto& t) -> const Shape& { return t.shape(); }, v);
}

void require_real(const Var& v, const char* where) {
  if (v.is_complex()) throw ShapeError(std::string(where) + ": expected a real tensor");
}

void require_complex(const Var& v, const char* where) {
  if (!v.is_complex()) throw ShapeError(std::string(where) + ": expected a complex tensor");
}

}  // namespace

// ---- Var --------------------------------------------------------------------

bool Var::is_complex() const { return std::holds_alternative<ComplexTensor>(tape_->value(id_)); }
const RealTensor& Var::real() const { return R(tape_->value(id_)); }
const ComplexTensor& Var::complex() const { return C(tape_->value(id_)); }
const Shape& Var::shape() const { return value_shape(tape_->value(id_)); }

double Var::item() const {
  const RealTensor& t = real();
  if (t.size() != 1) throw ShapeError("item() on a tensor of shape " + shape_string(t.shape()));
  return t[0];
}

// ---- Tape -------------------------------------------------------------------

Var Tape::constant(RealTensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, false, false, "constant", {}});
  return Var(this, size() - 1);
}

Var Tape::constant(ComplexTensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, false, false, "constant", {}});
  return Var(this, size() - 1);
}

Var Tape::variable(RealTensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, true, false, "variable", {}});
  return Var(this, size() - 1);
}

Var Tape::record(Value value, std::string op, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (!in.valid()) continue;
    if (&in.tape() != this) throw InvalidInput(op + ": input belongs to a different tape");
    needs = needs || requires_grad(in);
  }
  Node node{std::move(value), std::nullopt, needs, true, std::move(op), {}};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, size() - 1);
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw InvalidInput("backward: loss belongs to a different tape");
  if (loss.is_complex() || loss.real().size() != 1) {
    throw ShapeError("backward needs a real scalar loss, got shape " + shape_string(loss.shape()));
  }
  for (Node& n : nodes_) n.grad.reset();
  visited_ = 0;
  nodes_[static_cast<std::size_t>(loss.id())].grad =
      RealTensor::constant(loss.shape(), 1.0);
  for (Index i = loss.id(); i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    if (!node.grad || !node.requires_grad || !node.has_inputs) continue;
    if (!node.backward) throw UnsupportedOp("no adjoint rule for op '" + node.op + "'");
    ++visited_;
    node.backward(*this, *node.grad);
    node.grad.reset();  // interior adjoints are not needed once propagated
  }
}

RealTensor Tape::grad(const Var& v) const {
  const Node& node = nodes_[static_cast<std::size_t>(v.id())];
  if (node.grad) return R(*node.grad);
  return RealTensor(v.shape());
}

ComplexTensor Tape::complex_grad(const Var& v) const {
  const Node& node = nodes_[static_cast<std::size_t>(v.id())];
  if (node.grad) return C(*node.grad);
  return ComplexTensor(v.shape());
}

void Tape::accumulate(const Var& v, RealTensor g) {
  if (!v.valid() || !requires_grad(v)) return;
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  require_same_shape(value_shape(node.value), g.shape(), "accumulate");
  if (!node.grad) {
    node.grad = std::move(g);
  } else {
    std::get<RealTensor>(*node.grad).array() += g.array();
  }
}

void Tape::accumulate(const Var& v, ComplexTensor g) {
  if (!v.valid() || !requires_grad(v)) return;
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  require_same_shape(value_shape(node.value), g.shape(), "accumulate");
  if (!node.grad) {
    node.grad = std::move(g);
  } else {
    std::get<ComplexTensor>(*node.grad).array() += g.array();
  }
}

void Tape::accumulate_copy(const Var& v, const RealTensor& g) {
  if (!v.valid() || !requires_grad(v)) return;
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  require_same_shape(value_shape(node.value), g.shape(), "accumulate");
  if (!node.grad) {
    node.grad = g;
  } else {
    std::get<RealTensor>(*node.grad).array() += g.array();
  }
}

void Tape::accumulate_copy(const Var& v, const ComplexTensor& g) {
  if (!v.valid() || !requires_grad(v)) return;
  Node& node = nodes_[static_cast<std::size_t>(v.id())];
  require_same_shape(value_shape(node.value), g.shape(), "accumulate");
  if (!node.grad) {
    node.grad = g;
  } else {
    std::get<ComplexTensor>(*node.grad).array() += g.array();
  }
}

// ---- elementwise --------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  if (a.is_complex() != b.is_complex()) throw ShapeError("add: mixed real/complex operands");
  require_same_shape(a.shape(), b.shape(), "add");
  if (a.is_complex()) {
    ComplexTensor out(a.shape(), a.complex().array() + b.complex().array());
    return a.tape().record(std::move(out), "add", {a, b}, [a, b](Tape& t, Value& g) {
      t.accumulate_copy(a, C(g));
      t.accumulate(b, take_complex(g));
    });
  }
  RealTensor out(a.shape(), a.real().array() + b.real().array());
  return a.tape().record(std::move(out), "add", {a, b}, [a, b](Tape& t, Value& g) {
    t.accumulate_copy(a, R(g));
    t.accumulate(b, take_real(g));
  });
}

Var sub(const Var& a, const Var& b) {
  require_real(a, "sub");
  require_real(b, "sub");
  require_same_shape(a.shape(), b.shape(), "sub");
  RealTensor out(a.shape(), a.real().array() - b.real().array());
  return a.tape().record(std::move(out), "sub", {a, b}, [a, b](Tape& t, Value& g) {
    t.accumulate_copy(a, R(g));
    RealTensor gb = take_real(g);
    gb.array() = -gb.array();
    t.accumulate(b, std::move(gb));
  });
}

Var mul(const Var& a, const Var& b) {
  require_real(a, "mul");
  require_real(b, "mul");
  require_same_shape(a.shape(), b.shape(), "mul");
  RealTensor out(a.shape(), a.real().array() * b.real().array());
  return a.tape().record(std::move(out), "mul", {a, b}, [a, b](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor(a.shape(), R(g).array() * b.real().array()));
    t.accumulate(b, RealTensor(b.shape(), R(g).array() * a.real().array()));
  });
}

Var scale(const Var& a, double s) {
  if (a.is_complex()) {
    ComplexTensor out(a.shape(), a.complex().array() * s);
    return a.tape().record(std::move(out), "scale", {a}, [a, s](Tape& t, const Value& g) {
      t.accumulate(a, ComplexTensor(a.shape(), C(g).array() * s));
    });
  }
  RealTensor out(a.shape(), a.real().array() * s);
  return a.tape().record(std::move(out), "scale", {a}, [a, s](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor(a.shape(), R(g).array() * s));
  });
}

Var square(const Var& a) {
  require_real(a, "square");
  RealTensor out(a.shape(), a.real().array().square());
  return a.tape().record(std::move(out), "square", {a}, [a](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor(a.shape(), 2.0 * a.real().array() * R(g).array()));
  });
}

Var sqrt(const Var& a) {
  require_real(a, "sqrt");
  Eigen::ArrayXd y = a.real().array().sqrt();
  Eigen::ArrayXd dy = (y > 0.0).select(0.5 / y, 0.0);
  return a.tape().record(RealTensor(a.shape(), std::move(y)), "sqrt", {a},
                         [a, dy = std::move(dy)](Tape& t, const Value& g) {
                           t.accumulate(a, RealTensor(a.shape(), R(g).array() * dy));
                         });
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 * 0.5)); }

Var gelu(const Var& a) {
  require_real(a, "gelu");
  const Index n = a.real().size();
  Tape& tape = a.tape();
  Eigen::ArrayXd y(n);
  Eigen::ArrayXd dy;
  if (tape.requires_grad(a)) dy.resize(n);
  detail::gelu_kernel(a.real().data(), y.data(), dy.size() ? dy.data() : nullptr, n);
  return tape.record(RealTensor(a.shape(), std::move(y)), "gelu", {a},
                     [a, dy = std::move(dy)](Tape& t, Value& g) {
                       RealTensor ga = take_real(g);
                       ga.array() *= dy;
                       t.accumulate(a, std::move(ga));
                     });
}

Var sum(const Var& a) {
  require_real(a, "sum");
  RealTensor out(Shape{}, Eigen::ArrayXd::Constant(1, a.real().array().sum()));
  return a.tape().record(std::move(out), "sum", {a}, [a](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor::constant(a.shape(), R(g)[0]));
  });
}

Var mean(const Var& a) {
  require_real(a, "mean");
  const double n = static_cast<double>(a.real().size());
  RealTensor out(Shape{}, Eigen::ArrayXd::Constant(1, a.real().array().sum() / n));
  return a.tape().record(std::move(out), "mean", {a}, [a, n](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor::constant(a.shape(), R(g)[0] / n));
  });
}

Var max(const Var& a) {
  require_real(a, "max");
  const Eigen::ArrayXd& x = a.real().array();
  if (x.size() == 0) throw ShapeError("max of an empty tensor");
  Index arg = 0;
  for (Index i = 1; i < x.size(); ++i) {
    if (x[i] > x[arg]) arg = i;
  }
  RealTensor out(Shape{}, Eigen::ArrayXd::Constant(1, x[arg]));
  return a.tape().record(std::move(out), "max", {a}, [a, arg](Tape& t, const Value& g) {
    RealTensor gx(a.shape());
    gx[arg] = R(g)[0];
    t.accumulate(a, std::move(gx));
  });
}

Var mean_axis0(const Var& a) {
  require_real(a, "mean_axis0");
  const Shape& s = a.shape();
  if (s.empty()) throw ShapeError("mean_axis0 of a scalar");
  const Index n = s[0];
  const Index inner = a.real().size() / n;
  Shape out_shape(s.begin() + 1, s.end());
  RealTensor out(out_shape);
  for (Index b = 0; b < n; ++b) out.array() += a.real().array().segment(b * inner, inner);
  out.array() /= static_cast<double>(n);
  return a.tape().record(std::move(out), "mean_axis0", {a}, [a, n, inner](Tape& t, const Value& g) {
    RealTensor gx(a.shape());
    for (Index b = 0; b < n; ++b) gx.array().segment(b * inner, inner) = R(g).array() / static_cast<double>(n);
    t.accumulate(a, std::move(gx));
  });
}

Var dot_const(const Var& a, const RealTensor& w) {
  require_real(a, "dot_const");
  if (w.size() != a.real().size()) throw ShapeError("dot_const: weight size mismatch");
  RealTensor out(Shape{}, Eigen::ArrayXd::Constant(1, (a.real().array() * w.array()).sum()));
  return a.tape().record(std::move(out), "dot_const", {a}, [a, w](Tape& t, const Value& g) {
    t.accumulate(a, RealTensor(a.shape(), w.array() * R(g)[0]));
  });
}

Var reshape(const Var& a, Shape shape) {
  require_real(a, "reshape");
  RealTensor out = a.real().reshaped(std::move(shape));
  return a.tape().record(std::move(out), "reshape", {a}, [a](Tape& t, const Value& g) {
    t.accumulate(a, R(g).reshaped(a.shape()));
  });
}

// ---- channel mixing -----------------------------------------------------------

Var channel_linear(const Var& x, const Var& w, const Var& bias) {
  require_real(x, "channel_linear");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.size() < 2 || ws.size() != 2 || ws[1] != xs[1]) {
    throw ShapeError("channel_linear: input " + shape_string(xs) + " vs weight " +
                     shape_string(ws));
  }
  if (bias.valid() && (bias.shape().size() != 1 || bias.shape()[0] != ws[0])) {
    throw ShapeError("channel_linear: bias shape " + shape_string(bias.shape()));
  }
  const Index batch = xs[0], cin = xs[1], cout = ws[0];
  const Index inner = x.real().size() / (batch * cin);
  Shape out_shape = xs;
  out_shape[1] = cout;
  RealTensor out(out_shape, uninitialized);
  Eigen::Map<const RowMat> wm(w.real().data(), cout, cin);
  for (Index b = 0; b < batch; ++b) {
    Eigen::Map<const RowMat> xm(x.real().data() + b * cin * inner, cin, inner);
    Eigen::Map<RowMat> ym(out.data() + b * cout * inner, cout, inner);
    if (bias.valid()) {
      ym.colwise() = Eigen::Map<const Eigen::VectorXd>(bias.real().data(), cout);
      ym.noalias() += wm * xm;
    } else {
      ym.noalias() = wm * xm;
    }
  }
  return x.tape().record(
      std::move(out), "channel_linear", {x, w, bias},
      [x, w, bias, batch, cin, cout, inner](Tape& t, const Value& g) {
        const RealTensor& gy = R(g);
        Eigen::Map<const RowMat> wm(w.real().data(), cout, cin);
        if (t.requires_grad(x)) {
          RealTensor gx(x.shape(), uninitialized);
          for (Index b = 0; b < batch; ++b) {
            Eigen::Map<const RowMat> gym(gy.data() + b * cout * inner, cout, inner);
            Eigen::Map<RowMat>(gx.data() + b * cin * inner, cin, inner).noalias() =
                wm.transpose() * gym;
          }
          t.accumulate(x, std::move(gx));
        }
        if (t.requires_grad(w)) {
          RealTensor gw(w.shape());
          Eigen::Map<RowMat> gwm(gw.data(), cout, cin);
          for (Index b = 0; b < batch; ++b) {
            Eigen::Map<const RowMat> gym(gy.data() + b * cout * inner, cout, inner);
            Eigen::Map<const RowMat> xm(x.real().data() + b * cin * inner, cin, inner);
            gwm.noalias() += gym * xm.transpose();
          }
          t.accumulate(w, std::move(gw));
        }
        if (bias.valid() && t.requires_grad(bias)) {
          RealTensor gb(bias.shape());
          Eigen::Map<Eigen::VectorXd> gbv(gb.data(), cout);
          for (Index b = 0; b < batch; ++b) {
            gbv += Eigen::Map<const RowMat>(gy.data() + b * cout * inner, cout, inner).rowwise().sum();
          }
          t.accumulate(bias, std::move(gb));
        }
      });
}

Var soft_gate(const Var& x, const Var& scale_v, const Var& bias) {
  require_real(x, "soft_gate");
  const Shape& xs = x.shape();
  if (xs.size() < 2 || scale_v.shape() != Shape{xs[1]} || bias.shape() != Shape{xs[1]}) {
    throw ShapeError("soft_gate: parameter shapes do not match channels of " + shape_string(xs));
  }
  const Index batch = xs[0], ch = xs[1];
  const Index inner = x.real().size() / (batch * ch);
  RealTensor out(xs, uninitialized);
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < ch; ++c) {
      const Index off = (b * ch + c) * inner;
      out.array().segment(off, inner) =
          scale_v.real()[c] * x.real().array().segment(off, inner) + bias.real()[c];
    }
  }
  return x.tape().record(
      std::move(out), "soft_gate", {x, scale_v, bias},
      [x, scale_v, bias, batch, ch, inner](Tape& t, const Value& g) {
        const RealTensor& gy = R(g);
        RealTensor gx(x.shape(), uninitialized);
        RealTensor gs(scale_v.shape());
        RealTensor gb(bias.shape());
        for (Index b = 0; b < batch; ++b) {
          for (Index c = 0; c < ch; ++c) {
            const Index off = (b * ch + c) * inner;
            const auto gseg = gy.array().segment(off, inner);
            gx.array().segment(off, inner) = scale_v.real()[c] * gseg;
            gs[c] += (gseg * x.real().array().segment(off, inner)).sum();
            gb[c] += gseg.sum();
          }
        }
        t.accumulate(x, std::move(gx));
        t.accumulate(scale_v, std::move(gs));
        t.accumulate(bias, std::move(gb));
      });
}

// ---- spectral -------------------------------------------------------------------

namespace {

double norm_factor(FftNorm norm, Index n) {
  return norm == FftNorm::ortho ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
}

// Multiplies the last axis of a [..., nk] array by w(ky) (or divides).
template <typename T>
void apply_half_weights(Tensor<T>& t, Index ny, bool divide) {
  const Index nk = t.dim(-1);
  const Index rows = t.size() / nk;
  for (Index r = 0; r < rows; ++r) {
    for (Index k = 0; k < nk; ++k) {
      const double w = half_spectrum_weight(k, ny);
      if (w == 1.0) continue;
      t[r * nk + k] = divide ? t[r * nk + k] / w : t[r * nk + k] * w;
    }
  }
}

}  // namespace

Var rfft2(const Var& x, FftNorm norm) {
  require_real(x, "rfft2");
  ComplexTensor out = loglo::rfft2(x.real(), norm);
  const Index nx = x.shape()[x.shape().size() - 2];
  const Index ny = x.shape().back();
  return x.tape().record(std::move(out), "rfft2", {x}, [x, nx, ny, norm](Tape& t, const Value& g) {
    ComplexTensor h = C(g);
    apply_half_weights(h, ny, true);
    RealTensor gx = loglo::irfft2(h, ny, FftNorm::backward);
    gx.array() *= norm_factor(norm, nx * ny) * static_cast<double>(nx * ny);
    t.accumulate(x, std::move(gx));
  });
}

Var irfft2(const Var& x, Index ny, FftNorm norm) {
  require_complex(x, "irfft2");
  RealTensor out = loglo::irfft2(x.complex(), ny, norm);
  const Index nx = x.shape()[x.shape().size() - 2];
  return x.tape().record(std::move(out), "irfft2", {x}, [x, nx, ny, norm](Tape& t, const Value& g) {
    ComplexTensor gx = loglo::rfft2(R(g), FftNorm::backward);
    apply_half_weights(gx, ny, false);
    const double n = static_cast<double>(nx * ny);
    gx.array() *= norm == FftNorm::ortho ? 1.0 / std::sqrt(n) : 1.0 / n;
    t.accumulate(x, std::move(gx));
  });
}

Var rdft2_modes(const Var& x, ModeWindow window, FftNorm norm) {
  require_real(x, "rdft2_modes");
  if (x.shape().size() < 2) throw ShapeError("rdft2_modes needs at least 2 axes");
  const Index nx = x.shape()[x.shape().size() - 2];
  const Index ny = x.shape().back();
  const double s = norm_factor(norm, nx * ny);
  ComplexTensor out = detail::dft2_analysis(x.real(), window.kx_modes, window.ky_modes, s, false);
  return x.tape().record(std::move(out), "rdft2_modes", {x}, [x, nx, ny, s](Tape& t, const Value& g) {
    t.accumulate(x, detail::dft2_synthesis(C(g), nx, ny, s, false));
  });
}

Var irdft2_modes(const Var& x, Index nx, Index ny, FftNorm norm) {
  require_complex(x, "irdft2_modes");
  if (x.shape().size() < 2) throw ShapeError("irdft2_modes needs at least 2 axes");
  const double n = static_cast<double>(nx * ny);
  const double s = norm == FftNorm::ortho ? 1.0 / std::sqrt(n) : 1.0 / n;
  RealTensor out = detail::dft2_synthesis(x.complex(), nx, ny, s, true);
  const Index kx_modes = x.shape()[x.shape().size() - 2];
  const Index ky_modes = x.shape().back();
  return x.tape().record(std::move(out), "irdft2_modes", {x},
                         [x, kx_modes, ky_modes, s](Tape& t, const Value& g) {
                           t.accumulate(x, detail::dft2_analysis(R(g), kx_modes, ky_modes, s, true));
                         });
}

Var as_complex(const Var& x) {
  require_real(x, "as_complex");
  const Shape& s = x.shape();
  if (s.empty() || s.back() != 2) throw ShapeError("as_complex needs a trailing axis of 2");
  Shape out_shape(s.begin(), s.end() - 1);
  ComplexTensor out(out_shape);
  const double* d = x.real().data();
  for (Index i = 0; i < out.size(); ++i) out[i] = {d[2 * i], d[2 * i + 1]};
  return x.tape().record(std::move(out), "as_complex", {x}, [x](Tape& t, const Value& g) {
    const ComplexTensor& gc = C(g);
    RealTensor gx(x.shape());
    for (Index i = 0; i < gc.size(); ++i) {
      gx[2 * i] = gc[i].real();
      gx[2 * i + 1] = gc[i].imag();
    }
    t.accumulate(x, std::move(gx));
  });
}

Var abs2(const Var& x) {
  require_complex(x, "abs2");
  RealTensor out(x.shape(), x.complex().array().abs2());
  return x.tape().record(std::move(out), "abs2", {x}, [x](Tape& t, const Value& g) {
    ComplexTensor gx(x.shape(), 2.0 * x.complex().array() * R(g).array().cast<cplx>());
    t.accumulate(x, std::move(gx));
  });
}

Var spectral_contract(const Var& xhat, const Var& weights, ModeWindow window) {
  require_complex(xhat, "spectral_contract");
  require_complex(weights, "spectral_contract");
  const Shape& xs = xhat.shape();
  const Shape& ws = weights.shape();
  if (xs.size() < 4 || ws.size() != 4 || ws[3] != xs[1] || ws[0] != window.kx_modes ||
      ws[1] != window.ky_modes) {
    throw ShapeError("spectral_contract: spectrum " + shape_string(xs) + " vs weights " +
                     shape_string(ws));
  }
  const Index batch = xs[0], cin = xs[1], cout = ws[2];
  const Index nx = xs[xs.size() - 2], nk = xs.back();
  if (window.kx_modes > nx || window.ky_modes > nk) {
    throw ShapeError("spectral_contract: modes (" + std::to_string(window.kx_modes) + ", " +
                     std::to_string(window.ky_modes) + ") exceed spectrum " + std::to_string(nx) +
                     "x" + std::to_string(nk));
  }
  const Index groups = xhat.complex().size() / (batch * cin * nx * nk);
  const Index cols = batch * groups;
  const Index modes = window.kx_modes * window.ky_modes;
  Shape out_shape = xs;
  out_shape[1] = cout;

  // Mode-major staging: for mode q, a column-major [channels, batch*groups] block.
  auto gather = [=](const cplx* src, Index channels) {
    Eigen::VectorXcd buf(modes * channels * cols);
    for (Index b = 0; b < batch; ++b) {
      for (Index c = 0; c < channels; ++c) {
        for (Index m = 0; m < groups; ++m) {
          const Index col = b * groups + m;
          const cplx* base = src + ((b * channels + c) * groups + m) * nx * nk;
          for (Index i = 0; i < window.kx_modes; ++i) {
            const cplx* row = base + window.kx_index(i, nx) * nk;
            for (Index j = 0; j < window.ky_modes; ++j) {
              buf[((i * window.ky_modes + j) * cols + col) * channels + c] = row[j];
            }
          }
        }
      }
    }
    return buf;
  };
  auto scatter = [=](const Eigen::VectorXcd& buf, Index channels, cplx* dst) {
    for (Index b = 0; b < batch; ++b) {
      for (Index c = 0; c < channels; ++c) {
        for (Index m = 0; m < groups; ++m) {
          const Index col = b * groups + m;
          cplx* base = dst + ((b * channels + c) * groups + m) * nx * nk;
          for (Index i = 0; i < window.kx_modes; ++i) {
            cplx* row = base + window.kx_index(i, nx) * nk;
            for (Index j = 0; j < window.ky_modes; ++j) {
              row[j] = buf[((i * window.ky_modes + j) * cols + col) * channels + c];
            }
          }
        }
      }
    }
  };
  using ColBlock = Eigen::Map<Eigen::MatrixXcd>;
  using ConstColBlock = Eigen::Map<const Eigen::MatrixXcd>;

  const bool dense = window.kx_modes == nx && window.ky_modes == nk;
  const Eigen::VectorXcd xt = gather(xhat.complex().data(), cin);
  Eigen::VectorXcd yt(modes * cout * cols);
  for (Index q = 0; q < modes; ++q) {
    Eigen::Map<const RowMatC> wm(weights.complex().data() + q * cout * cin, cout, cin);
    ColBlock(yt.data() + q * cout * cols, cout, cols).noalias() =
        wm * ConstColBlock(xt.data() + q * cin * cols, cin, cols);
  }
  ComplexTensor out = dense ? ComplexTensor(out_shape, uninitialized) : ComplexTensor(out_shape);
  scatter(yt, cout, out.data());

  return xhat.tape().record(
      std::move(out), "spectral_contract", {xhat, weights},
      [=](Tape& t, const Value& g) {
        const bool need_x = t.requires_grad(xhat);
        const bool need_w = t.requires_grad(weights);
        const Eigen::VectorXcd gyt = gather(C(g).data(), cout);
        if (need_w) {
          const Eigen::VectorXcd xt = gather(xhat.complex().data(), cin);
          ComplexTensor gw(weights.shape());
          for (Index q = 0; q < modes; ++q) {
            Eigen::Map<RowMatC>(gw.data() + q * cout * cin, cout, cin).noalias() =
                ConstColBlock(gyt.data() + q * cout * cols, cout, cols) *
                ConstColBlock(xt.data() + q * cin * cols, cin, cols).adjoint();
          }
          t.accumulate(weights, std::move(gw));
        }
        if (need_x) {
          Eigen::VectorXcd gxt(modes * cin * cols);
          for (Index q = 0; q < modes; ++q) {
            Eigen::Map<const RowMatC> wm(weights.complex().data() + q * cout * cin, cout, cin);
            ColBlock(gxt.data() + q * cin * cols, cin, cols).noalias() =
                wm.adjoint() * ConstColBlock(gyt.data() + q * cout * cols, cout, cols);
          }
          ComplexTensor gx = dense ? ComplexTensor(xhat.shape(), uninitialized) : ComplexTensor(xhat.shape());
          scatter(gxt, cin, gx.data());
          t.accumulate(xhat, std::move(gx));
        }
      });
}

// ---- resampling / patching ------------------------------------------------------

Var avg_pool2(const Var& x, Index kernel, Index stride) {
  require_real(x, "avg_pool2");
  RealTensor out = loglo::avg_pool2(x.real(), kernel, stride);
  const Index nx = x.shape()[x.shape().size() - 2];
  const Index ny = x.shape().back();
  return x.tape().record(std::move(out), "avg_pool2", {x},
                         [x, nx, ny, kernel, stride](Tape& t, const Value& g) {
                           t.accumulate(x, avg_pool2_adjoint(R(g), nx, ny, kernel, stride));
                         });
}

Var interpolate2(const Var& x, Index out_nx, Index out_ny, InterpMode mode) {
  require_real(x, "interpolate2");
  RealTensor out = loglo::interpolate2(x.real(), out_nx, out_ny, mode);
  const Index nx = x.shape()[x.shape().size() - 2];
  const Index ny = x.shape().back();
  return x.tape().record(std::move(out), "interpolate2", {x}, [x, nx, ny, mode](Tape& t, const Value& g) {
    t.accumulate(x, interpolate2_adjoint(R(g), nx, ny, mode));
  });
}

Var extract_patches(const Var& x, Index patch) {
  require_real(x, "extract_patches");
  RealTensor out = loglo::extract_patches(x.real(), patch);
  const Index gx = x.shape()[2] / patch;
  const Index gy = x.shape()[3] / patch;
  return x.tape().record(std::move(out), "extract_patches", {x}, [x, gx, gy](Tape& t, const Value& g) {
    t.accumulate(x, loglo::reassemble_patches(R(g), gx, gy));
  });
}

Var reassemble_patches(const Var& x, Index grid_x, Index grid_y) {
  require_real(x, "reassemble_patches");
  RealTensor out = loglo::reassemble_patches(x.real(), grid_x, grid_y);
  const Index patch = x.shape()[3];
  return x.tape().record(std::move(out), "reassemble_patches", {x}, [x, patch](Tape& t, const Value& g) {
    t.accumulate(x, loglo::extract_patches(R(g), patch));
  });
}

// ---- radial binning ---------------------------------------------------------------

Var bin_quadrant(const Var& half_spectrum, const RadialSpec& spec) {
  require_real(half_spectrum, "bin_quadrant");
  RealTensor out = loglo::bin_quadrant(half_spectrum.real(), spec);
  return half_spectrum.tape().record(std::move(out), "bin_quadrant", {half_spectrum},
                                     [half_spectrum, spec](Tape& t, const Value& g) {
                                       t.accumulate(half_spectrum, bin_quadrant_adjoint(R(g), spec));
                                     });
}

Var band_means(const Var& binned, const RadialSpec& spec) {
  require_real(binned, "band_means");
  RealTensor out = loglo::band_means(binned.real(), spec);
  return binned.tape().record(std::move(out), "band_means", {binned}, [binned, spec](Tape& t, const Value& g) {
    t.accumulate(binned, band_means_adjoint(R(g), spec));
  });
}

Var opaque(const Var& x, const std::function<RealTensor(const RealTensor&)>& fn, std::string name) {
  require_real(x, "opaque");
  return x.tape().record(fn(x.real()), std::move(name), {x}, {});
}

GradResult grad(const std::function<Var(Tape&, std::span<const Var>)>& loss_fn,
                std::span<const RealTensor> params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const RealTensor& p : params) leaves.push_back(tape.variable(p));
  const Var loss = loss_fn(tape, leaves);
  tape.backward(loss);
  GradResult out;
  out.loss = loss.item();
  for (const Var& v : leaves) out.grads.push_back(tape.grad(v));
  return out;
}

}  // namespace loglo::ad
