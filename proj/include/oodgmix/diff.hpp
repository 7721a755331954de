#pragma once

// Dense reverse-mode differentiation and Adam.
//
// A Tape records one forward computation. Nodes are appended in evaluation
// order, so the tape is already topologically sorted and backward() walks it
// in reverse. Model parameters live outside the tape in a ParamStore; a tape
// leaf created with Tape::param() adds its gradient into Parameter::grad.
// Parameter gradients accumulate across backward() calls until zero_grad().

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace oodgmix::diff {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
};

class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grad();
  std::size_t scalar_count() const;

  // Ordered by name, so iteration order is deterministic.
  std::map<std::string, Parameter>& params() { return params_; }
  const std::map<std::string, Parameter>& params() const { return params_; }

  using Snapshot = std::map<std::string, Matrix>;
  Snapshot snapshot() const;
  void restore(const Snapshot& snap);

  std::int64_t adam_steps() const { return adam_steps_; }

 private:
  friend void adam_step(ParamStore&, double, double, double, double);
  std::map<std::string, Parameter> params_;
  std::int64_t adam_steps_ = 0;
};

/// Bias-corrected Adam over every parameter in the store, then zeroes the
/// gradients. The step counter is shared by the whole store.
void adam_step(ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Var constant(Matrix value);
  Var param(Parameter& p);

  // Appends a derived node; it requires grad if any parent does.
  Var record(Matrix value, std::vector<int> parents, BackwardFn backward);

  const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  int parent(int id, int k) const {
    return nodes_[static_cast<size_t>(id)].parents[static_cast<size_t>(k)];
  }
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Adds g into the gradient of node `id` if it requires grad.
  void accumulate(int id, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

  /// Backpropagates from a 1x1 output. Throws ContractError otherwise.
  void backward(const Var& output);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_leaf_;
};

/// Resolves named parameters to leaves of one tape. Bound to a mutable
/// store the leaves carry gradients; bound to a const store they are
/// constants, which gives a gradient-free forward pass over the same code.
class Binder {
 public:
  Binder(Tape& tape, ParamStore& store) : tape_(tape), store_(store), mutable_(&store) {}
  Binder(Tape& tape, const ParamStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }
  bool tracks_gradients() const { return mutable_ != nullptr; }

 private:
  Tape& tape_;
  const ParamStore& store_;
  ParamStore* mutable_ = nullptr;
  std::map<std::string, Var> constants_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

inline void backward(const Var& output) { output.tape()->backward(output); }

// --- primitives ---------------------------------------------------------

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double s);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var rsqrt(const Var& a);  // elementwise 1/sqrt(x)
Var transpose(const Var& a);
Var sum(const Var& a);        // 1x1
Var mean_rows(const Var& a);  // r x c -> 1 x c, mean over rows
Var row_sum(const Var& a);    // r x c -> r x 1
Var col_max(const Var& a);    // r x c -> 1 x c; gradient routed to the first maximum
Var log_sum_exp(const Var& a);  // 1x1, max-shifted
Var element(const Var& a, Eigen::Index i, Eigen::Index j);  // 1x1
Var add_row(const Var& a, const Var& row);  // a + 1*row, row is 1 x c
Var mul_row(const Var& a, const Var& row);  // a .* (1*row)
Var mul_col(const Var& a, const Var& col);  // a .* (col*1'), col is r x 1

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// --- gradient checking --------------------------------------------------

using LossFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients of `loss` with central differences at
/// `probes` random parameter coordinates. The error of a coordinate is
/// |a-n|/|a|, or |a-n| when |a| < 1e-6. Parameter values are restored and
/// gradients zeroed on return.
GradCheckResult finite_diff_check(const LossFn& loss, ParamStore& store, int probes, double h,
                                  std::uint64_t seed = 0);

}  // namespace oodgmix::diff
