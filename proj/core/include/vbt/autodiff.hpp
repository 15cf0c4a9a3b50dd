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
//
// Minimal reverse-mode differentiation over dense tensors: the op set needed
// by the sequential encoder and the FNN baseline, plus losses, Adam, and
// finite-difference gradient checking. Training storage is float32; the
// double instantiation exists for gradient checks and small numerics.

#ifndef VBT_AUTODIFF_HPP_
#define VBT_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace vbt {

template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  TensorT(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel_of(shape)), fill);
  }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int d : s) n *= d;
    return n;
  }
  long numel() const { return static_cast<long>(data.size()); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  T at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }
  // rank-3 accessor: [d0][d1][d2]
  T& at3(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  T at3(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;

enum class Op {
  kLeaf,
  kMatmul,
  kAdd,
  kMul,
  kScale,
  kAddRowVec,
  kConcat,
  kSlice,
  kTranspose,
  kConv1d,
  kAdaptiveMeanPoolTime,
  kUpsampleTimeNearest,
  kReshape,
  kGruCellStep,
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kSquare,
  kReduceMean,
  kMseLoss,
  kGaussianKl,
  kBceLoss,
};

const char* op_name(Op op);

// Dynamic tape: ops execute eagerly and record themselves; backward walks the
// record in reverse. One tape per training step; not thread-safe, confine a
// tape (and its tensors) to a single worker.
template <typename T>
class TapeT {
 public:
  int leaf(TensorT<T> value, bool requires_grad = false);

  int matmul(int a, int b);
  int add(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int add_rowvec(int a, int row);            // [N,M] + [1,M]
  int concat(int a, int b, int axis);        // rank-2, axis 0 or 1
  int slice(int a, int axis, int start, int len);
  int transpose(int a);
  // x: [T, Cin]; w: [Cout, Cin, K]; bias: [1, Cout] or -1
  int conv1d(int x, int w, int bias, int stride, int pad);
  int adaptive_mean_pool_time(int x, int out_len);
  int upsample_time_nearest(int x, int factor);  // rows repeated `factor` times
  int reshape(int a, int rows, int cols);        // numel-preserving view copy
  // x: [1, I]; h: [1, H]; weights [I,H] / [H,H]; biases [1, H]
  int gru_cell_step(int x, int h, int wz, int wr, int wn, int uz, int ur, int un,
                    int bz, int br, int bn);
  int sigmoid(int a);
  int tanh_(int a);
  int exp_(int a);
  int log_(int a);
  int square(int a);
  int reduce_mean(int a);  // -> [1]

  int mse_loss(int pred, int target);        // mean of squared differences
  int gaussian_kl(int mu, int log_var);      // mean of mu^2 + s^2 - log s^2 - 1
  int bce_loss(int y_hat, int y);            // y_hat clamped to [1e-7, 1-1e-7]

  void backward(int loss);

  const TensorT<T>& value(int ref) const { return nodes_[static_cast<std::size_t>(ref)].val; }
  const TensorT<T>& grad(int ref) const { return nodes_[static_cast<std::size_t>(ref)].grad; }
  bool has_grad(int ref) const { return !nodes_[static_cast<std::size_t>(ref)].grad.data.empty(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> in;
    TensorT<T> val;
    TensorT<T> grad;
    bool needs_grad = false;
    int i0 = 0, i1 = 0, i2 = 0;
    double d0 = 0.0;
    std::vector<TensorT<T>> saved;
  };

  int push(Node n);
  Node& node(int ref) { return nodes_[static_cast<std::size_t>(ref)]; }
  const Node& cnode(int ref) const { return nodes_[static_cast<std::size_t>(ref)]; }
  void backward_one(int ref);
  void accumulate(int ref, const TensorT<T>& g);

  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient
};

template <typename T>
struct AdamStateT {
  AdamConfig config;
  long step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void init(const std::vector<TensorT<T>>& params);
};

using AdamState = AdamStateT<float>;

// Bias-corrected Adam update, applied in place. `grads[i]` may be empty when
// a parameter did not participate in the step.
template <typename T>
void adam_step(std::vector<TensorT<T>>& params, const std::vector<TensorT<T>>& grads,
               AdamStateT<T>& state);

// --- gradient checking -------------------------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::string worst_param;
  bool passed(double tol) const { return max_rel_err < tol; }
};

// Builds the loss with `build(tape, param_refs)` where param_refs[i] is a
// grad-requiring leaf for params[i]; compares backward gradients against
// central finite differences. Runs in double regardless of training storage.
using GradCheckBuildFn = std::function<int(TapeT<double>&, const std::vector<int>&)>;

GradCheckReport grad_check(const std::vector<TensorT<double>>& params,
                           const GradCheckBuildFn& build, double h = 1e-4);

// Same comparison against caller-supplied "analytic" gradients; lets the test
// suite confirm the checker rejects a corrupted backward.
GradCheckReport grad_check_against(const std::vector<TensorT<double>>& params,
                                   const std::vector<TensorT<double>>& analytic_grads,
                                   const GradCheckBuildFn& build, double h = 1e-4);

}  // namespace vbt

#endif  // VBT_AUTODIFF_HPP_
