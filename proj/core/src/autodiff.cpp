// Copyright 2026 The vbt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vbt/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "vbt/error.hpp"

namespace vbt {
namespace {

constexpr double kBceClamp = 1e-7;

template <typename T>
void require_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (a.shape != b.shape) throw ValidationError(std::string(what) + ": shape mismatch");
}

template <typename T>
void check_finite(const TensorT<T>& t, Op op) {
  for (T v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw ComputeError(std::string("non-finite value in forward of ") + op_name(op));
    }
  }
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddRowVec: return "add_rowvec";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kTranspose: return "transpose";
    case Op::kConv1d: return "conv1d";
    case Op::kAdaptiveMeanPoolTime: return "adaptive_mean_pool_time";
    case Op::kUpsampleTimeNearest: return "upsample_time_nearest";
    case Op::kReshape: return "reshape";
    case Op::kGruCellStep: return "gru_cell_step";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSquare: return "square";
    case Op::kReduceMean: return "reduce_mean";
    case Op::kMseLoss: return "mse_loss";
    case Op::kGaussianKl: return "gaussian_kl";
    case Op::kBceLoss: return "bce_loss";
  }
  return "?";
}

template <typename T>
int TapeT<T>::push(Node n) {
  for (int ref : n.in) {
    if (cnode(ref).needs_grad) n.needs_grad = true;
  }
  check_finite(n.val, n.op);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
int TapeT<T>::leaf(TensorT<T> value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.val = std::move(value);
  n.needs_grad = requires_grad;
  check_finite(n.val, n.op);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
int TapeT<T>::matmul(int a, int b) {
  const TensorT<T>& va = cnode(a).val;
  const TensorT<T>& vb = cnode(b).val;
  if (va.shape.size() != 2 || vb.shape.size() != 2 || va.shape[1] != vb.shape[0]) {
    throw ValidationError("matmul: incompatible shapes");
  }
  const int n = va.shape[0], k = va.shape[1], m = vb.shape[1];
  Node out;
  out.op = Op::kMatmul;
  out.in = {a, b};
  out.val = TensorT<T>({n, m});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += static_cast<double>(va.at(i, p)) * static_cast<double>(vb.at(p, j));
      }
      out.val.at(i, j) = static_cast<T>(acc);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::add(int a, int b) {
  const TensorT<T>& va = cnode(a).val;
  const TensorT<T>& vb = cnode(b).val;
  require_shape(va, vb, "add");
  Node out;
  out.op = Op::kAdd;
  out.in = {a, b};
  out.val = va;
  for (std::size_t i = 0; i < out.val.data.size(); ++i) out.val.data[i] += vb.data[i];
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::mul(int a, int b) {
  const TensorT<T>& va = cnode(a).val;
  const TensorT<T>& vb = cnode(b).val;
  require_shape(va, vb, "mul");
  Node out;
  out.op = Op::kMul;
  out.in = {a, b};
  out.val = va;
  for (std::size_t i = 0; i < out.val.data.size(); ++i) out.val.data[i] *= vb.data[i];
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::scale(int a, double c) {
  Node out;
  out.op = Op::kScale;
  out.in = {a};
  out.d0 = c;
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = static_cast<T>(v * c);
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::add_rowvec(int a, int row) {
  const TensorT<T>& va = cnode(a).val;
  const TensorT<T>& vr = cnode(row).val;
  if (va.shape.size() != 2 || vr.shape.size() != 2 || vr.shape[0] != 1 ||
      vr.shape[1] != va.shape[1]) {
    throw ValidationError("add_rowvec: need [N,M] + [1,M]");
  }
  Node out;
  out.op = Op::kAddRowVec;
  out.in = {a, row};
  out.val = va;
  for (int i = 0; i < va.shape[0]; ++i) {
    for (int j = 0; j < va.shape[1]; ++j) out.val.at(i, j) += vr.at(0, j);
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::concat(int a, int b, int axis) {
  const TensorT<T>& va = cnode(a).val;
  const TensorT<T>& vb = cnode(b).val;
  if (va.shape.size() != 2 || vb.shape.size() != 2 || axis < 0 || axis > 1) {
    throw ValidationError("concat: rank-2 tensors, axis 0 or 1");
  }
  Node out;
  out.op = Op::kConcat;
  out.in = {a, b};
  out.i0 = axis;
  if (axis == 0) {
    if (va.shape[1] != vb.shape[1]) throw ValidationError("concat: column mismatch");
    out.val = TensorT<T>({va.shape[0] + vb.shape[0], va.shape[1]});
    std::copy(va.data.begin(), va.data.end(), out.val.data.begin());
    std::copy(vb.data.begin(), vb.data.end(), out.val.data.begin() + va.numel());
  } else {
    if (va.shape[0] != vb.shape[0]) throw ValidationError("concat: row mismatch");
    out.val = TensorT<T>({va.shape[0], va.shape[1] + vb.shape[1]});
    for (int i = 0; i < va.shape[0]; ++i) {
      for (int j = 0; j < va.shape[1]; ++j) out.val.at(i, j) = va.at(i, j);
      for (int j = 0; j < vb.shape[1]; ++j) out.val.at(i, va.shape[1] + j) = vb.at(i, j);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::slice(int a, int axis, int start, int len) {
  const TensorT<T>& va = cnode(a).val;
  if (va.shape.size() != 2 || axis < 0 || axis > 1) {
    throw ValidationError("slice: rank-2 tensors, axis 0 or 1");
  }
  if (start < 0 || len <= 0 || start + len > va.shape[static_cast<std::size_t>(axis)]) {
    throw ValidationError("slice: out of range");
  }
  Node out;
  out.op = Op::kSlice;
  out.in = {a};
  out.i0 = axis;
  out.i1 = start;
  out.i2 = len;
  if (axis == 0) {
    out.val = TensorT<T>({len, va.shape[1]});
    for (int i = 0; i < len; ++i) {
      for (int j = 0; j < va.shape[1]; ++j) out.val.at(i, j) = va.at(start + i, j);
    }
  } else {
    out.val = TensorT<T>({va.shape[0], len});
    for (int i = 0; i < va.shape[0]; ++i) {
      for (int j = 0; j < len; ++j) out.val.at(i, j) = va.at(i, start + j);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::transpose(int a) {
  const TensorT<T>& va = cnode(a).val;
  if (va.shape.size() != 2) throw ValidationError("transpose: rank-2 only");
  Node out;
  out.op = Op::kTranspose;
  out.in = {a};
  out.val = TensorT<T>({va.shape[1], va.shape[0]});
  for (int i = 0; i < va.shape[0]; ++i) {
    for (int j = 0; j < va.shape[1]; ++j) out.val.at(j, i) = va.at(i, j);
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::conv1d(int x, int w, int bias, int stride, int pad) {
  const TensorT<T>& vx = cnode(x).val;
  const TensorT<T>& vw = cnode(w).val;
  if (vx.shape.size() != 2 || vw.shape.size() != 3 || vw.shape[1] != vx.shape[1]) {
    throw ValidationError("conv1d: need x [T,Cin], w [Cout,Cin,K]");
  }
  if (stride <= 0 || pad < 0) throw ValidationError("conv1d: bad stride/pad");
  const int t_in = vx.shape[0], c_in = vx.shape[1];
  const int c_out = vw.shape[0], k = vw.shape[2];
  const int t_out = (t_in + 2 * pad - k) / stride + 1;
  if (t_out <= 0) throw ValidationError("conv1d: output would be empty");
  if (bias >= 0) {
    const TensorT<T>& vb = cnode(bias).val;
    if (vb.shape.size() != 2 || vb.shape[0] != 1 || vb.shape[1] != c_out) {
      throw ValidationError("conv1d: bias must be [1,Cout]");
    }
  }
  Node out;
  out.op = Op::kConv1d;
  out.in = bias >= 0 ? std::vector<int>{x, w, bias} : std::vector<int>{x, w};
  out.i0 = stride;
  out.i1 = pad;
  out.val = TensorT<T>({t_out, c_out});
  for (int t = 0; t < t_out; ++t) {
    for (int co = 0; co < c_out; ++co) {
      double acc = bias >= 0 ? static_cast<double>(cnode(bias).val.at(0, co)) : 0.0;
      for (int kk = 0; kk < k; ++kk) {
        const int ti = t * stride + kk - pad;
        if (ti < 0 || ti >= t_in) continue;
        for (int ci = 0; ci < c_in; ++ci) {
          acc += static_cast<double>(vw.at3(co, ci, kk)) * static_cast<double>(vx.at(ti, ci));
        }
      }
      out.val.at(t, co) = static_cast<T>(acc);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::adaptive_mean_pool_time(int x, int out_len) {
  const TensorT<T>& vx = cnode(x).val;
  if (vx.shape.size() != 2) throw ValidationError("adaptive_mean_pool_time: rank-2 only");
  if (out_len <= 0 || out_len > vx.shape[0]) {
    throw ValidationError("adaptive_mean_pool_time: bad output length");
  }
  const int t_in = vx.shape[0], c = vx.shape[1];
  Node out;
  out.op = Op::kAdaptiveMeanPoolTime;
  out.in = {x};
  out.i0 = out_len;
  out.val = TensorT<T>({out_len, c});
  for (int m = 0; m < out_len; ++m) {
    const int lo = m * t_in / out_len;
    const int hi = (m + 1) * t_in / out_len;
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int t = lo; t < hi; ++t) acc += static_cast<double>(vx.at(t, j));
      out.val.at(m, j) = static_cast<T>(acc * inv);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::upsample_time_nearest(int x, int factor) {
  const TensorT<T>& vx = cnode(x).val;
  if (vx.shape.size() != 2) throw ValidationError("upsample_time_nearest: rank-2 only");
  if (factor <= 0) throw ValidationError("upsample_time_nearest: factor must be positive");
  const int t_in = vx.shape[0], c = vx.shape[1];
  Node out;
  out.op = Op::kUpsampleTimeNearest;
  out.in = {x};
  out.i0 = factor;
  out.val = TensorT<T>({t_in * factor, c});
  for (int t = 0; t < t_in; ++t) {
    for (int f = 0; f < factor; ++f) {
      for (int j = 0; j < c; ++j) out.val.at(t * factor + f, j) = vx.at(t, j);
    }
  }
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::reshape(int a, int rows, int cols) {
  const TensorT<T>& va = cnode(a).val;
  if (static_cast<long>(rows) * cols != va.numel()) {
    throw ValidationError("reshape: element count mismatch");
  }
  Node out;
  out.op = Op::kReshape;
  out.in = {a};
  out.val = va;
  out.val.shape = {rows, cols};
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::gru_cell_step(int x, int h, int wz, int wr, int wn, int uz, int ur, int un,
                            int bz, int br, int bn) {
  const TensorT<T>& vx = cnode(x).val;
  const TensorT<T>& vh = cnode(h).val;
  if (vx.shape.size() != 2 || vx.shape[0] != 1 || vh.shape.size() != 2 || vh.shape[0] != 1) {
    throw ValidationError("gru_cell_step: x and h must be [1,*]");
  }
  const int in_dim = vx.shape[1];
  const int hid = vh.shape[1];
  auto check_mat = [&](int ref, int r, int c, const char* what) {
    const TensorT<T>& v = cnode(ref).val;
    if (v.shape.size() != 2 || v.shape[0] != r || v.shape[1] != c) {
      throw ValidationError(std::string("gru_cell_step: bad shape for ") + what);
    }
  };
  check_mat(wz, in_dim, hid, "Wz");
  check_mat(wr, in_dim, hid, "Wr");
  check_mat(wn, in_dim, hid, "Wn");
  check_mat(uz, hid, hid, "Uz");
  check_mat(ur, hid, hid, "Ur");
  check_mat(un, hid, hid, "Un");
  check_mat(bz, 1, hid, "bz");
  check_mat(br, 1, hid, "br");
  check_mat(bn, 1, hid, "bn");

  auto affine = [&](int w_ref, int u_ref, int b_ref, const TensorT<T>& rh) {
    const TensorT<T>& w_ = cnode(w_ref).val;
    const TensorT<T>& u_ = cnode(u_ref).val;
    const TensorT<T>& b_ = cnode(b_ref).val;
    TensorT<T> out({1, hid});
    for (int j = 0; j < hid; ++j) {
      double acc = static_cast<double>(b_.at(0, j));
      for (int i = 0; i < in_dim; ++i) {
        acc += static_cast<double>(vx.at(0, i)) * static_cast<double>(w_.at(i, j));
      }
      for (int i = 0; i < hid; ++i) {
        acc += static_cast<double>(rh.at(0, i)) * static_cast<double>(u_.at(i, j));
      }
      out.at(0, j) = static_cast<T>(acc);
    }
    return out;
  };

  TensorT<T> z({1, hid}), r({1, hid}), n_gate({1, hid}), rh({1, hid});
  {
    const TensorT<T> az = affine(wz, uz, bz, vh);
    const TensorT<T> ar = affine(wr, ur, br, vh);
    for (int j = 0; j < hid; ++j) {
      z.at(0, j) = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(az.at(0, j)))));
      r.at(0, j) = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(ar.at(0, j)))));
      rh.at(0, j) = r.at(0, j) * vh.at(0, j);
    }
    const TensorT<T> an = affine(wn, un, bn, rh);
    for (int j = 0; j < hid; ++j) {
      n_gate.at(0, j) = static_cast<T>(std::tanh(static_cast<double>(an.at(0, j))));
    }
  }

  Node out;
  out.op = Op::kGruCellStep;
  out.in = {x, h, wz, wr, wn, uz, ur, un, bz, br, bn};
  out.val = TensorT<T>({1, hid});
  for (int j = 0; j < hid; ++j) {
    out.val.at(0, j) = (T(1) - z.at(0, j)) * n_gate.at(0, j) + z.at(0, j) * vh.at(0, j);
  }
  out.saved = {std::move(z), std::move(r), std::move(n_gate)};
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::sigmoid(int a) {
  Node out;
  out.op = Op::kSigmoid;
  out.in = {a};
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::tanh_(int a) {
  Node out;
  out.op = Op::kTanh;
  out.in = {a};
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = static_cast<T>(std::tanh(static_cast<double>(v)));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::exp_(int a) {
  Node out;
  out.op = Op::kExp;
  out.in = {a};
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = static_cast<T>(std::exp(static_cast<double>(v)));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::log_(int a) {
  Node out;
  out.op = Op::kLog;
  out.in = {a};
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = static_cast<T>(std::log(static_cast<double>(v)));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::square(int a) {
  Node out;
  out.op = Op::kSquare;
  out.in = {a};
  out.val = cnode(a).val;
  for (T& v : out.val.data) v = v * v;
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::reduce_mean(int a) {
  const TensorT<T>& va = cnode(a).val;
  if (va.numel() == 0) throw ValidationError("reduce_mean: empty tensor");
  Node out;
  out.op = Op::kReduceMean;
  out.in = {a};
  out.val = TensorT<T>({1});
  double acc = 0.0;
  for (T v : va.data) acc += static_cast<double>(v);
  out.val.data[0] = static_cast<T>(acc / static_cast<double>(va.numel()));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::mse_loss(int pred, int target) {
  const TensorT<T>& vp = cnode(pred).val;
  const TensorT<T>& vt = cnode(target).val;
  require_shape(vp, vt, "mse_loss");
  Node out;
  out.op = Op::kMseLoss;
  out.in = {pred, target};
  out.val = TensorT<T>({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < vp.data.size(); ++i) {
    const double d = static_cast<double>(vp.data[i]) - static_cast<double>(vt.data[i]);
    acc += d * d;
  }
  out.val.data[0] = static_cast<T>(acc / static_cast<double>(vp.numel()));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::gaussian_kl(int mu, int log_var) {
  const TensorT<T>& vm = cnode(mu).val;
  const TensorT<T>& vl = cnode(log_var).val;
  require_shape(vm, vl, "gaussian_kl");
  Node out;
  out.op = Op::kGaussianKl;
  out.in = {mu, log_var};
  out.val = TensorT<T>({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < vm.data.size(); ++i) {
    const double m = vm.data[i];
    const double lv = vl.data[i];
    acc += m * m + std::exp(lv) - lv - 1.0;
  }
  out.val.data[0] = static_cast<T>(acc / static_cast<double>(vm.numel()));
  return push(std::move(out));
}

template <typename T>
int TapeT<T>::bce_loss(int y_hat, int y) {
  const TensorT<T>& vp = cnode(y_hat).val;
  const TensorT<T>& vy = cnode(y).val;
  require_shape(vp, vy, "bce_loss");
  Node out;
  out.op = Op::kBceLoss;
  out.in = {y_hat, y};
  out.val = TensorT<T>({1});
  double acc = 0.0;
  for (std::size_t i = 0; i < vp.data.size(); ++i) {
    const double c = std::clamp(static_cast<double>(vp.data[i]), kBceClamp, 1.0 - kBceClamp);
    const double label = vy.data[i];
    acc -= label * std::log(c) + (1.0 - label) * std::log(1.0 - c);
  }
  out.val.data[0] = static_cast<T>(acc / static_cast<double>(vp.numel()));
  return push(std::move(out));
}

template <typename T>
void TapeT<T>::accumulate(int ref, const TensorT<T>& g) {
  Node& n = node(ref);
  if (!n.needs_grad) return;
  if (n.grad.data.empty()) n.grad = TensorT<T>(n.val.shape);
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
}

template <typename T>
void TapeT<T>::backward(int loss) {
  Node& ln = node(loss);
  if (ln.val.numel() != 1) throw ValidationError("backward: loss must be a scalar");
  if (!ln.needs_grad) return;
  ln.grad = TensorT<T>(ln.val.shape, T(1));
  for (int ref = loss; ref >= 0; --ref) backward_one(ref);
}

template <typename T>
void TapeT<T>::backward_one(int ref) {
  Node& n = node(ref);
  if (!n.needs_grad || n.grad.data.empty() || n.op == Op::kLeaf) return;
  const TensorT<T>& g = n.grad;

  switch (n.op) {
    case Op::kMatmul: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      const TensorT<T>& b = cnode(n.in[1]).val;
      const int nn = a.shape[0], k = a.shape[1], m = b.shape[1];
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> da({nn, k});
        for (int i = 0; i < nn; ++i) {
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j) {
              acc += static_cast<double>(g.at(i, j)) * static_cast<double>(b.at(p, j));
            }
            da.at(i, p) = static_cast<T>(acc);
          }
        }
        accumulate(n.in[0], da);
      }
      if (cnode(n.in[1]).needs_grad) {
        TensorT<T> db({k, m});
        for (int p = 0; p < k; ++p) {
          for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < nn; ++i) {
              acc += static_cast<double>(a.at(i, p)) * static_cast<double>(g.at(i, j));
            }
            db.at(p, j) = static_cast<T>(acc);
          }
        }
        accumulate(n.in[1], db);
      }
      break;
    }
    case Op::kAdd:
      accumulate(n.in[0], g);
      accumulate(n.in[1], g);
      break;
    case Op::kMul: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      const TensorT<T>& b = cnode(n.in[1]).val;
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> da = g;
        for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= b.data[i];
        accumulate(n.in[0], da);
      }
      if (cnode(n.in[1]).needs_grad) {
        TensorT<T> db = g;
        for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] *= a.data[i];
        accumulate(n.in[1], db);
      }
      break;
    }
    case Op::kScale: {
      TensorT<T> da = g;
      for (T& v : da.data) v = static_cast<T>(v * n.d0);
      accumulate(n.in[0], da);
      break;
    }
    case Op::kAddRowVec: {
      accumulate(n.in[0], g);
      if (cnode(n.in[1]).needs_grad) {
        const int rows = g.shape[0], cols = g.shape[1];
        TensorT<T> dr({1, cols});
        for (int j = 0; j < cols; ++j) {
          double acc = 0.0;
          for (int i = 0; i < rows; ++i) acc += static_cast<double>(g.at(i, j));
          dr.at(0, j) = static_cast<T>(acc);
        }
        accumulate(n.in[1], dr);
      }
      break;
    }
    case Op::kConcat: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      const TensorT<T>& b = cnode(n.in[1]).val;
      TensorT<T> da(a.shape), db(b.shape);
      if (n.i0 == 0) {
        std::copy(g.data.begin(), g.data.begin() + a.numel(), da.data.begin());
        std::copy(g.data.begin() + a.numel(), g.data.end(), db.data.begin());
      } else {
        for (int i = 0; i < a.shape[0]; ++i) {
          for (int j = 0; j < a.shape[1]; ++j) da.at(i, j) = g.at(i, j);
          for (int j = 0; j < b.shape[1]; ++j) db.at(i, j) = g.at(i, a.shape[1] + j);
        }
      }
      accumulate(n.in[0], da);
      accumulate(n.in[1], db);
      break;
    }
    case Op::kSlice: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      TensorT<T> da(a.shape);
      if (n.i0 == 0) {
        for (int i = 0; i < n.i2; ++i) {
          for (int j = 0; j < a.shape[1]; ++j) da.at(n.i1 + i, j) = g.at(i, j);
        }
      } else {
        for (int i = 0; i < a.shape[0]; ++i) {
          for (int j = 0; j < n.i2; ++j) da.at(i, n.i1 + j) = g.at(i, j);
        }
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kTranspose: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      TensorT<T> da(a.shape);
      for (int i = 0; i < a.shape[0]; ++i) {
        for (int j = 0; j < a.shape[1]; ++j) da.at(i, j) = g.at(j, i);
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kConv1d: {
      const TensorT<T>& x = cnode(n.in[0]).val;
      const TensorT<T>& w = cnode(n.in[1]).val;
      const int stride = n.i0, pad = n.i1;
      const int t_in = x.shape[0], c_in = x.shape[1];
      const int c_out = w.shape[0], k = w.shape[2];
      const int t_out = n.val.shape[0];
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> dx(x.shape);
        for (int t = 0; t < t_out; ++t) {
          for (int kk = 0; kk < k; ++kk) {
            const int ti = t * stride + kk - pad;
            if (ti < 0 || ti >= t_in) continue;
            for (int co = 0; co < c_out; ++co) {
              const double gv = g.at(t, co);
              for (int ci = 0; ci < c_in; ++ci) {
                dx.at(ti, ci) += static_cast<T>(gv * static_cast<double>(w.at3(co, ci, kk)));
              }
            }
          }
        }
        accumulate(n.in[0], dx);
      }
      if (cnode(n.in[1]).needs_grad) {
        TensorT<T> dw(w.shape);
        for (int t = 0; t < t_out; ++t) {
          for (int kk = 0; kk < k; ++kk) {
            const int ti = t * stride + kk - pad;
            if (ti < 0 || ti >= t_in) continue;
            for (int co = 0; co < c_out; ++co) {
              const double gv = g.at(t, co);
              for (int ci = 0; ci < c_in; ++ci) {
                dw.at3(co, ci, kk) += static_cast<T>(gv * static_cast<double>(x.at(ti, ci)));
              }
            }
          }
        }
        accumulate(n.in[1], dw);
      }
      if (n.in.size() == 3 && cnode(n.in[2]).needs_grad) {
        TensorT<T> db({1, c_out});
        for (int co = 0; co < c_out; ++co) {
          double acc = 0.0;
          for (int t = 0; t < t_out; ++t) acc += static_cast<double>(g.at(t, co));
          db.at(0, co) = static_cast<T>(acc);
        }
        accumulate(n.in[2], db);
      }
      break;
    }
    case Op::kAdaptiveMeanPoolTime: {
      const TensorT<T>& x = cnode(n.in[0]).val;
      const int t_in = x.shape[0], c = x.shape[1], out_len = n.i0;
      TensorT<T> dx(x.shape);
      for (int m = 0; m < out_len; ++m) {
        const int lo = m * t_in / out_len;
        const int hi = (m + 1) * t_in / out_len;
        const T inv = static_cast<T>(1.0 / static_cast<double>(hi - lo));
        for (int j = 0; j < c; ++j) {
          for (int t = lo; t < hi; ++t) dx.at(t, j) += g.at(m, j) * inv;
        }
      }
      accumulate(n.in[0], dx);
      break;
    }
    case Op::kUpsampleTimeNearest: {
      const TensorT<T>& x = cnode(n.in[0]).val;
      const int t_in = x.shape[0], c = x.shape[1], factor = n.i0;
      TensorT<T> dx(x.shape);
      for (int t = 0; t < t_in; ++t) {
        for (int f = 0; f < factor; ++f) {
          for (int j = 0; j < c; ++j) dx.at(t, j) += g.at(t * factor + f, j);
        }
      }
      accumulate(n.in[0], dx);
      break;
    }
    case Op::kReshape: {
      TensorT<T> da = g;
      da.shape = cnode(n.in[0]).val.shape;
      accumulate(n.in[0], da);
      break;
    }
    case Op::kGruCellStep: {
      const TensorT<T>& x = cnode(n.in[0]).val;
      const TensorT<T>& h = cnode(n.in[1]).val;
      const TensorT<T>& wz = cnode(n.in[2]).val;
      const TensorT<T>& wr = cnode(n.in[3]).val;
      const TensorT<T>& wn = cnode(n.in[4]).val;
      const TensorT<T>& uz = cnode(n.in[5]).val;
      const TensorT<T>& ur = cnode(n.in[6]).val;
      const TensorT<T>& un = cnode(n.in[7]).val;
      const TensorT<T>& z = n.saved[0];
      const TensorT<T>& r = n.saved[1];
      const TensorT<T>& ng = n.saved[2];
      const int in_dim = x.shape[1], hid = h.shape[1];

      TensorT<T> da_z({1, hid}), da_r({1, hid}), da_n({1, hid});
      TensorT<T> dh({1, hid}), d_rh({1, hid});

      for (int j = 0; j < hid; ++j) {
        const double gv = g.at(0, j);
        const double zj = z.at(0, j), nj = ng.at(0, j), hj = h.at(0, j);
        const double dn = gv * (1.0 - zj);
        const double dz = gv * (hj - nj);
        dh.at(0, j) = static_cast<T>(gv * zj);
        da_n.at(0, j) = static_cast<T>(dn * (1.0 - nj * nj));
        da_z.at(0, j) = static_cast<T>(dz * zj * (1.0 - zj));
      }
      // through the candidate gate: d(r*h) = da_n @ Un^T
      for (int i = 0; i < hid; ++i) {
        double acc = 0.0;
        for (int j = 0; j < hid; ++j) {
          acc += static_cast<double>(da_n.at(0, j)) * static_cast<double>(un.at(i, j));
        }
        d_rh.at(0, i) = static_cast<T>(acc);
      }
      for (int i = 0; i < hid; ++i) {
        const double ri = r.at(0, i), hi_v = h.at(0, i);
        const double dr = static_cast<double>(d_rh.at(0, i)) * hi_v;
        dh.at(0, i) += static_cast<T>(static_cast<double>(d_rh.at(0, i)) * ri);
        da_r.at(0, i) = static_cast<T>(dr * ri * (1.0 - ri));
      }

      auto matvec_T = [&](const TensorT<T>& mat, const TensorT<T>& vec, int rows_out) {
        // vec [1,H] times mat^T where mat is [rows_out, H]
        TensorT<T> out_v({1, rows_out});
        for (int i = 0; i < rows_out; ++i) {
          double acc = 0.0;
          for (int j = 0; j < mat.shape[1]; ++j) {
            acc += static_cast<double>(vec.at(0, j)) * static_cast<double>(mat.at(i, j));
          }
          out_v.at(0, i) = static_cast<T>(acc);
        }
        return out_v;
      };
      auto outer = [&](const TensorT<T>& lhs, const TensorT<T>& vec) {
        TensorT<T> out_m({lhs.shape[1], vec.shape[1]});
        for (int i = 0; i < lhs.shape[1]; ++i) {
          for (int j = 0; j < vec.shape[1]; ++j) {
            out_m.at(i, j) = lhs.at(0, i) * vec.at(0, j);
          }
        }
        return out_m;
      };

      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> dx({1, in_dim});
        const TensorT<T> t1 = matvec_T(wz, da_z, in_dim);
        const TensorT<T> t2 = matvec_T(wr, da_r, in_dim);
        const TensorT<T> t3 = matvec_T(wn, da_n, in_dim);
        for (int i = 0; i < in_dim; ++i) {
          dx.at(0, i) = t1.at(0, i) + t2.at(0, i) + t3.at(0, i);
        }
        accumulate(n.in[0], dx);
      }
      if (cnode(n.in[1]).needs_grad) {
        const TensorT<T> t1 = matvec_T(uz, da_z, hid);
        const TensorT<T> t2 = matvec_T(ur, da_r, hid);
        for (int i = 0; i < hid; ++i) dh.at(0, i) += t1.at(0, i) + t2.at(0, i);
        accumulate(n.in[1], dh);
      }
      TensorT<T> rh({1, hid});
      for (int i = 0; i < hid; ++i) rh.at(0, i) = r.at(0, i) * h.at(0, i);
      if (cnode(n.in[2]).needs_grad) accumulate(n.in[2], outer(x, da_z));
      if (cnode(n.in[3]).needs_grad) accumulate(n.in[3], outer(x, da_r));
      if (cnode(n.in[4]).needs_grad) accumulate(n.in[4], outer(x, da_n));
      if (cnode(n.in[5]).needs_grad) accumulate(n.in[5], outer(h, da_z));
      if (cnode(n.in[6]).needs_grad) accumulate(n.in[6], outer(h, da_r));
      if (cnode(n.in[7]).needs_grad) accumulate(n.in[7], outer(rh, da_n));
      if (cnode(n.in[8]).needs_grad) accumulate(n.in[8], da_z);
      if (cnode(n.in[9]).needs_grad) accumulate(n.in[9], da_r);
      if (cnode(n.in[10]).needs_grad) accumulate(n.in[10], da_n);
      break;
    }
    case Op::kSigmoid: {
      TensorT<T> da = g;
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        const double y = n.val.data[i];
        da.data[i] = static_cast<T>(da.data[i] * y * (1.0 - y));
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kTanh: {
      TensorT<T> da = g;
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        const double y = n.val.data[i];
        da.data[i] = static_cast<T>(da.data[i] * (1.0 - y * y));
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kExp: {
      TensorT<T> da = g;
      for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] *= n.val.data[i];
      accumulate(n.in[0], da);
      break;
    }
    case Op::kLog: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      TensorT<T> da = g;
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        da.data[i] = static_cast<T>(da.data[i] / static_cast<double>(a.data[i]));
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kSquare: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      TensorT<T> da = g;
      for (std::size_t i = 0; i < da.data.size(); ++i) {
        da.data[i] = static_cast<T>(da.data[i] * 2.0 * static_cast<double>(a.data[i]));
      }
      accumulate(n.in[0], da);
      break;
    }
    case Op::kReduceMean: {
      const TensorT<T>& a = cnode(n.in[0]).val;
      TensorT<T> da(a.shape, static_cast<T>(static_cast<double>(g.data[0]) /
                                            static_cast<double>(a.numel())));
      accumulate(n.in[0], da);
      break;
    }
    case Op::kMseLoss: {
      const TensorT<T>& p = cnode(n.in[0]).val;
      const TensorT<T>& t = cnode(n.in[1]).val;
      const double scale = 2.0 * static_cast<double>(g.data[0]) / static_cast<double>(p.numel());
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> dp(p.shape);
        for (std::size_t i = 0; i < dp.data.size(); ++i) {
          dp.data[i] = static_cast<T>(scale * (static_cast<double>(p.data[i]) -
                                               static_cast<double>(t.data[i])));
        }
        accumulate(n.in[0], dp);
      }
      if (cnode(n.in[1]).needs_grad) {
        TensorT<T> dt(t.shape);
        for (std::size_t i = 0; i < dt.data.size(); ++i) {
          dt.data[i] = static_cast<T>(-scale * (static_cast<double>(p.data[i]) -
                                                static_cast<double>(t.data[i])));
        }
        accumulate(n.in[1], dt);
      }
      break;
    }
    case Op::kGaussianKl: {
      const TensorT<T>& mu = cnode(n.in[0]).val;
      const TensorT<T>& lv = cnode(n.in[1]).val;
      const double scale = static_cast<double>(g.data[0]) / static_cast<double>(mu.numel());
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> dm(mu.shape);
        for (std::size_t i = 0; i < dm.data.size(); ++i) {
          dm.data[i] = static_cast<T>(scale * 2.0 * static_cast<double>(mu.data[i]));
        }
        accumulate(n.in[0], dm);
      }
      if (cnode(n.in[1]).needs_grad) {
        TensorT<T> dl(lv.shape);
        for (std::size_t i = 0; i < dl.data.size(); ++i) {
          dl.data[i] = static_cast<T>(scale * (std::exp(static_cast<double>(lv.data[i])) - 1.0));
        }
        accumulate(n.in[1], dl);
      }
      break;
    }
    case Op::kBceLoss: {
      const TensorT<T>& p = cnode(n.in[0]).val;
      const TensorT<T>& y = cnode(n.in[1]).val;
      const double scale = static_cast<double>(g.data[0]) / static_cast<double>(p.numel());
      if (cnode(n.in[0]).needs_grad) {
        TensorT<T> dp(p.shape);
        for (std::size_t i = 0; i < dp.data.size(); ++i) {
          const double raw = p.data[i];
          if (raw <= kBceClamp || raw >= 1.0 - kBceClamp) {
            dp.data[i] = T(0);  // clamped region
          } else {
            const double label = y.data[i];
            dp.data[i] = static_cast<T>(scale * (raw - label) / (raw * (1.0 - raw)));
          }
        }
        accumulate(n.in[0], dp);
      }
      break;
    }
    case Op::kLeaf:
      break;
  }
}

template <typename T>
void AdamStateT<T>::init(const std::vector<TensorT<T>>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.data.size(), T(0));
    v.emplace_back(p.data.size(), T(0));
  }
}

template <typename T>
void adam_step(std::vector<TensorT<T>>& params, const std::vector<TensorT<T>>& grads,
               AdamStateT<T>& state) {
  if (state.m.size() != params.size()) state.init(params);
  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads[p].data.empty()) continue;
    auto& mp = state.m[p];
    auto& vp = state.v[p];
    for (std::size_t i = 0; i < params[p].data.size(); ++i) {
      double gi = grads[p].data[i];
      if (c.weight_decay > 0.0) gi += c.weight_decay * static_cast<double>(params[p].data[i]);
      const double m_new = c.beta1 * static_cast<double>(mp[i]) + (1.0 - c.beta1) * gi;
      const double v_new = c.beta2 * static_cast<double>(vp[i]) + (1.0 - c.beta2) * gi * gi;
      mp[i] = static_cast<T>(m_new);
      vp[i] = static_cast<T>(v_new);
      const double m_hat = m_new / bc1;
      const double v_hat = v_new / bc2;
      params[p].data[i] =
          static_cast<T>(static_cast<double>(params[p].data[i]) -
                         c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

namespace {

std::vector<TensorT<double>> tape_backward_grads(const std::vector<TensorT<double>>& params,
                                                 const GradCheckBuildFn& build) {
  TapeT<double> tape;
  std::vector<int> refs;
  refs.reserve(params.size());
  for (const auto& p : params) refs.push_back(tape.leaf(p, true));
  const int loss = build(tape, refs);
  tape.backward(loss);
  std::vector<TensorT<double>> grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads.push_back(tape.has_grad(refs[i]) ? tape.grad(refs[i])
                                           : TensorT<double>(params[i].shape));
  }
  return grads;
}

double eval_loss(const std::vector<TensorT<double>>& params, const GradCheckBuildFn& build) {
  TapeT<double> tape;
  std::vector<int> refs;
  refs.reserve(params.size());
  for (const auto& p : params) refs.push_back(tape.leaf(p, true));
  const int loss = build(tape, refs);
  return tape.value(loss).data[0];
}

GradCheckReport compare_fd(const std::vector<TensorT<double>>& params,
                           const std::vector<TensorT<double>>& analytic,
                           const GradCheckBuildFn& build, double h) {
  GradCheckReport report;
  std::vector<TensorT<double>> work = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].data.size(); ++i) {
      const double orig = work[p].data[i];
      work[p].data[i] = orig + h;
      const double up = eval_loss(work, build);
      work[p].data[i] = orig - h;
      const double down = eval_loss(work, build);
      work[p].data[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[p].data[i];
      const double abs_err = std::abs(an - fd);
      const double rel = abs_err / std::max({std::abs(an), std::abs(fd), 1e-3});
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = "param " + std::to_string(p) + "[" + std::to_string(i) + "]";
      }
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
    }
  }
  return report;
}

}  // namespace

GradCheckReport grad_check(const std::vector<TensorT<double>>& params,
                           const GradCheckBuildFn& build, double h) {
  return compare_fd(params, tape_backward_grads(params, build), build, h);
}

GradCheckReport grad_check_against(const std::vector<TensorT<double>>& params,
                                   const std::vector<TensorT<double>>& analytic_grads,
                                   const GradCheckBuildFn& build, double h) {
  return compare_fd(params, analytic_grads, build, h);
}

template class TapeT<float>;
template class TapeT<double>;
template struct AdamStateT<float>;
template struct AdamStateT<double>;
template void adam_step<float>(std::vector<TensorT<float>>&, const std::vector<TensorT<float>>&,
                               AdamStateT<float>&);
template void adam_step<double>(std::vector<TensorT<double>>&,
                                const std::vector<TensorT<double>>&, AdamStateT<double>&);

}  // namespace vbt
