#include "oodgmix/diff.hpp"

#include "oodgmix/errors.hpp"

#include <cmath>
#include <random>

namespace oodgmix::diff {

Parameter& ParamStore::add(const std::string& name, Matrix init) {
  if (params_.count(name) > 0) throw ContractError("parameter '" + name + "' already exists");
  Parameter p;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.adam_m = Matrix::Zero(init.rows(), init.cols());
  p.adam_v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

ParamStore::Snapshot ParamStore::snapshot() const {
  Snapshot s;
  for (const auto& [name, p] : params_) s.emplace(name, p.value);
  return s;
}

void ParamStore::restore(const Snapshot& snap) {
  for (const auto& [name, value] : snap) at(name).value = value;
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps) {
  ++store.adam_steps_;
  const double t = static_cast<double>(store.adam_steps_);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (auto& [name, p] : store.params_) {
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * p.grad;
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (p.adam_m.array() / c1) / ((p.adam_v.array() / c2).sqrt() + eps);
    p.grad.setZero();
  }
}

// --- tape ---------------------------------------------------------------

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_leaf_.find(&p); it != param_leaf_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_leaf_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::vector<int> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) n.requires_grad = n.requires_grad || requires_grad(p);
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix& g) {
  auto& n = nodes_[static_cast<size_t>(id)];
  if (n.requires_grad) n.grad += g;
}

void Tape::backward(const Var& output) {
  if (output.tape() != this) throw ContractError("backward: variable belongs to another tape");
  if (output.rows() != 1 || output.cols() != 1) {
    throw ContractError("backward: output must be 1x1, got " + std::to_string(output.rows()) +
                        "x" + std::to_string(output.cols()));
  }
  const int out = output.id();
  if (!nodes_[static_cast<size_t>(out)].requires_grad) return;
  for (int i = 0; i <= out; ++i) {
    auto& n = nodes_[static_cast<size_t>(i)];
    if (n.requires_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  nodes_[static_cast<size_t>(out)].grad(0, 0) = 1.0;
  for (int i = out; i >= 0; --i) {
    auto& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad) continue;
    if (n.param != nullptr) {
      n.param->grad += n.grad;
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

Var Binder::operator()(const std::string& name) {
  if (mutable_ != nullptr) return tape_.param(mutable_->at(name));
  if (auto it = constants_.find(name); it != constants_.end()) return it->second;
  Var v = tape_.constant(store_.at(name).value);
  constants_.emplace(name, v);
  return v;
}

// --- primitives ---------------------------------------------------------

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ContractError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                        std::to_string(b.rows()) + " differ");
  }
  return a.tape()->record(a.value() * b.value(), {a.id(), b.id()}, [](Tape& t, int self) {
    const int pa = t.parent(self, 0);
    const int pb = t.parent(self, 1);
    const Matrix& g = t.grad(self);
    if (t.requires_grad(pa)) t.accumulate(pa, g * t.value(pb).transpose());
    if (t.requires_grad(pb)) t.accumulate(pb, t.value(pa).transpose() * g);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), {a.id(), b.id()}, [](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), t.grad(self));
    t.accumulate(t.parent(self, 1), t.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a.id(), b.id()}, [](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), t.grad(self));
    t.accumulate(t.parent(self, 1), -t.grad(self));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a.id(), b.id()},
                          [](Tape& t, int self) {
                            const int pa = t.parent(self, 0);
                            const int pb = t.parent(self, 1);
                            t.accumulate(pa, t.grad(self).cwiseProduct(t.value(pb)));
                            t.accumulate(pb, t.grad(self).cwiseProduct(t.value(pa)));
                          });
}

Var scale(const Var& a, double s) {
  return a.tape()->record(s * a.value(), {a.id()}, [s](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), s * t.grad(self));
  });
}

Var sigmoid(const Var& a) {
  Matrix y = a.value().unaryExpr([](double x) {
    // split by sign so exp never overflows
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape()->record(std::move(y), {a.id()}, [](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.accumulate(t.parent(self, 0),
                 t.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var relu(const Var& a) {
  return a.tape()->record(a.value().cwiseMax(0.0), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    t.accumulate(t.parent(self, 0),
                 (x.array() > 0.0).select(t.grad(self), Matrix::Zero(x.rows(), x.cols())));
  });
}

Var exp(const Var& a) {
  return a.tape()->record(a.value().array().exp().matrix(), {a.id()}, [](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), t.grad(self).cwiseProduct(t.value(self)));
  });
}

Var log(const Var& a) {
  return a.tape()->record(a.value().array().log().matrix(), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    t.accumulate(t.parent(self, 0), t.grad(self).cwiseQuotient(x));
  });
}

Var square(const Var& a) {
  return a.tape()->record(a.value().cwiseAbs2(), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    t.accumulate(t.parent(self, 0), 2.0 * t.grad(self).cwiseProduct(x));
  });
}

Var rsqrt(const Var& a) {
  return a.tape()->record(a.value().array().rsqrt().matrix(), {a.id()}, [](Tape& t, int self) {
    // d/dx x^{-1/2} = -0.5 x^{-3/2} = -0.5 y^3
    const Matrix& y = t.value(self);
    t.accumulate(t.parent(self, 0), (-0.5 * t.grad(self).array() * y.array().cube()).matrix());
  });
}

Var transpose(const Var& a) {
  return a.tape()->record(a.value().transpose(), {a.id()}, [](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), t.grad(self).transpose());
  });
}

Var sum(const Var& a) {
  Matrix s(1, 1);
  s(0, 0) = a.value().sum();
  return a.tape()->record(std::move(s), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    t.accumulate(t.parent(self, 0), Matrix::Constant(x.rows(), x.cols(), t.grad(self)(0, 0)));
  });
}

Var mean_rows(const Var& a) {
  if (a.rows() == 0) throw ContractError("mean_rows: empty matrix");
  return a.tape()->record(a.value().colwise().mean(), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    const double inv = 1.0 / static_cast<double>(x.rows());
    t.accumulate(t.parent(self, 0), (inv * t.grad(self)).replicate(x.rows(), 1));
  });
}

Var row_sum(const Var& a) {
  return a.tape()->record(a.value().rowwise().sum(), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    t.accumulate(t.parent(self, 0), t.grad(self).replicate(1, x.cols()));
  });
}

Var col_max(const Var& a) {
  if (a.rows() == 0) throw ContractError("col_max: empty matrix");
  const Matrix& x = a.value();
  std::vector<Eigen::Index> arg(static_cast<size_t>(x.cols()));
  Matrix y(1, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Eigen::Index r = 0;
    y(0, c) = x.col(c).maxCoeff(&r);
    arg[static_cast<size_t>(c)] = r;
  }
  return a.tape()->record(std::move(y), {a.id()}, [arg](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) g(arg[static_cast<size_t>(c)], c) = t.grad(self)(0, c);
    t.accumulate(t.parent(self, 0), g);
  });
}

Var log_sum_exp(const Var& a) {
  const double m = a.value().maxCoeff();
  Matrix y(1, 1);
  y(0, 0) = m + std::log((a.value().array() - m).exp().sum());
  return a.tape()->record(std::move(y), {a.id()}, [](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    const double lse = t.value(self)(0, 0);
    t.accumulate(t.parent(self, 0), (t.grad(self)(0, 0) * (x.array() - lse).exp()).matrix());
  });
}

Var element(const Var& a, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= a.rows() || j >= a.cols()) {
    throw ContractError("element: index out of range");
  }
  Matrix y(1, 1);
  y(0, 0) = a.value()(i, j);
  return a.tape()->record(std::move(y), {a.id()}, [i, j](Tape& t, int self) {
    const Matrix& x = t.value(t.parent(self, 0));
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    g(i, j) = t.grad(self)(0, 0);
    t.accumulate(t.parent(self, 0), g);
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ContractError("add_row: shape mismatch");
  Matrix y = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(y), {a.id(), row.id()}, [](Tape& t, int self) {
    t.accumulate(t.parent(self, 0), t.grad(self));
    t.accumulate(t.parent(self, 1), t.grad(self).colwise().sum());
  });
}

Var mul_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ContractError("mul_row: shape mismatch");
  Matrix y = a.value().array().rowwise() * row.value().row(0).array();
  return a.tape()->record(std::move(y), {a.id(), row.id()}, [](Tape& t, int self) {
    const int pa = t.parent(self, 0);
    const int pr = t.parent(self, 1);
    const Matrix& g = t.grad(self);
    if (t.requires_grad(pa)) {
      t.accumulate(pa, (g.array().rowwise() * t.value(pr).row(0).array()).matrix());
    }
    if (t.requires_grad(pr)) t.accumulate(pr, g.cwiseProduct(t.value(pa)).colwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw ContractError("mul_col: shape mismatch");
  Matrix y = a.value().array().colwise() * col.value().col(0).array();
  return a.tape()->record(std::move(y), {a.id(), col.id()}, [](Tape& t, int self) {
    const int pa = t.parent(self, 0);
    const int pc = t.parent(self, 1);
    const Matrix& g = t.grad(self);
    if (t.requires_grad(pa)) {
      t.accumulate(pa, (g.array().colwise() * t.value(pc).col(0).array()).matrix());
    }
    if (t.requires_grad(pc)) t.accumulate(pc, g.cwiseProduct(t.value(pa)).rowwise().sum());
  });
}

// --- gradient check -----------------------------------------------------

GradCheckResult finite_diff_check(const LossFn& loss, ParamStore& store, int probes, double h,
                                  std::uint64_t seed) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: step must be positive");
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<std::pair<std::string, Parameter*>> flat;
  std::vector<double> weights;
  for (auto& [name, p] : store.params()) {
    flat.emplace_back(name, &p);
    weights.push_back(static_cast<double>(p.value.size()));
  }
  GradCheckResult result;
  if (flat.empty()) return result;

  auto eval = [&] {
    Tape tape;
    return loss(tape).scalar();
  };

  std::mt19937_64 rng(seed);
  std::discrete_distribution<size_t> pick_param(weights.begin(), weights.end());
  for (int k = 0; k < probes; ++k) {
    auto& [name, p] = flat[pick_param(rng)];
    std::uniform_int_distribution<Eigen::Index> pick_coord(0, p->value.size() - 1);
    const Eigen::Index idx = pick_coord(rng);
    double& theta = p->value.data()[idx];
    const double saved = theta;
    theta = saved + h;
    const double up = eval();
    theta = saved - h;
    const double down = eval();
    theta = saved;

    const double numeric = (up - down) / (2.0 * h);
    const double analytic = p->grad.data()[idx];
    const double abs_err = std::abs(analytic - numeric);
    const double err = std::abs(analytic) < 1e-6 ? abs_err : abs_err / std::abs(analytic);
    if (err >= result.max_error) {
      result.max_error = err;
      result.worst_param = name;
      result.worst_index = idx;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace oodgmix::diff
