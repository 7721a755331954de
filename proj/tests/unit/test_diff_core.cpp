#include "support.hpp"

#include "oodgmix/diff.hpp"
#include "oodgmix/errors.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace oodgmix;
using namespace oodgmix::diff;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -2.0,
                     double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Reduces any primitive's output to a scalar through a fixed random
// projection, so each primitive is checked on its full Jacobian.
using Unary = std::function<Var(const Var&)>;
using Binary = std::function<Var(const Var&, const Var&)>;

// Compares the analytic directional derivative <grad, v> with the central
// difference of the projected output along v.
double jvp_error(const std::vector<Matrix>& inputs, const std::function<Var(std::vector<Var>&)>& f,
                 std::mt19937_64& rng) {
  ParamStore store;
  for (size_t k = 0; k < inputs.size(); ++k) store.add("x" + std::to_string(k), inputs[k]);

  Matrix proj;
  auto loss = [&](Tape& tape, ParamStore& s) {
    std::vector<Var> xs;
    for (size_t k = 0; k < inputs.size(); ++k) xs.push_back(tape.param(s.at("x" + std::to_string(k))));
    Var y = f(xs);
    if (proj.size() == 0) proj = random_matrix(y.rows(), y.cols(), rng, -1.0, 1.0);
    return sum(mul(y, tape.constant(proj)));
  };

  {
    Tape tape;
    backward(loss(tape, store));
  }
  std::vector<Matrix> dirs;
  double analytic = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    dirs.push_back(random_matrix(inputs[k].rows(), inputs[k].cols(), rng, -1.0, 1.0));
    analytic += (store.at("x" + std::to_string(k)).grad.array() * dirs[k].array()).sum();
  }
  const double h = 1e-6;
  auto shifted = [&](double t) {
    ParamStore s;
    for (size_t k = 0; k < inputs.size(); ++k) s.add("x" + std::to_string(k), inputs[k] + t * dirs[k]);
    Tape tape;
    return loss(tape, s).scalar();
  };
  const double numeric = (shifted(h) - shifted(-h)) / (2 * h);
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

TEST_CASE("scalar gradients") {
  ParamStore store;
  store.add("x", scalar(3.0));
  store.add("y", scalar(2.0));
  {
    Tape t;
    Var x = t.param(store.at("x"));
    backward(sum(square(x)));
  }
  CHECK(store.at("x").grad(0, 0) == 6.0);
  store.zero_grad();
  {
    Tape t;
    backward(mul(t.param(store.at("x")), t.param(store.at("y"))));
  }
  CHECK(store.at("x").grad(0, 0) == 2.0);
  CHECK(store.at("y").grad(0, 0) == 3.0);
  store.zero_grad();
  store.at("x").value(0, 0) = 0.0;
  {
    Tape t;
    backward(sigmoid(t.param(store.at("x"))));
  }
  CHECK(store.at("x").grad(0, 0) == 0.25);
}

TEST_CASE("x*y at (2,5)") {
  ParamStore store;
  store.add("x", scalar(2.0));
  store.add("y", scalar(5.0));
  Tape t;
  backward(mul(t.param(store.at("x")), t.param(store.at("y"))));
  CHECK(store.at("x").grad(0, 0) == 5.0);
  CHECK(store.at("y").grad(0, 0) == 2.0);
}

TEST_CASE("backward requires a 1x1 output") {
  ParamStore store;
  store.add("x", Matrix::Ones(2, 2));
  Tape t;
  Var x = t.param(store.at("x"));
  CHECK_THROWS_AS(backward(x), ContractError);
}

TEST_CASE("gradients accumulate until zero_grad") {
  ParamStore store;
  store.add("x", scalar(3.0));
  for (int rep = 0; rep < 3; ++rep) {
    Tape t;
    backward(sum(square(t.param(store.at("x")))));
  }
  CHECK(store.at("x").grad(0, 0) == 18.0);
  store.zero_grad();
  CHECK(store.at("x").grad(0, 0) == 0.0);
}

TEST_CASE("shared subexpression (diamond)") {
  // f = a*b + a, a = x^2, b = exp(x)  => f' = 2x e^x + x^2 e^x + 2x
  ParamStore store;
  const double x0 = 0.7;
  store.add("x", scalar(x0));
  Tape t;
  Var x = t.param(store.at("x"));
  Var a = square(x);
  Var b = exp(x);
  backward(sum(mul(a, b) + a));
  const double expect = 2 * x0 * std::exp(x0) + x0 * x0 * std::exp(x0) + 2 * x0;
  CHECK(store.at("x").grad(0, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("the same parameter bound twice on one tape shares a leaf") {
  ParamStore store;
  store.add("x", scalar(1.5));
  Tape t;
  Binder bind(t, store);
  Var a = bind("x");
  Var b = bind("x");
  backward(mul(a, b));
  CHECK(store.at("x").grad(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("const binder gives constants") {
  ParamStore store;
  store.add("x", scalar(2.0));
  const ParamStore& cs = store;
  Tape t;
  Binder bind(t, cs);
  CHECK_FALSE(bind.tracks_gradients());
  backward(sum(square(bind("x"))));
  CHECK(store.at("x").grad(0, 0) == 0.0);
}

TEST_CASE("primitive Jacobians against central differences") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(3, 4, rng);
    const Matrix c = random_matrix(4, 2, rng);
    const Matrix pos = random_matrix(3, 4, rng, 0.2, 2.0);
    const Matrix row = random_matrix(1, 4, rng);
    const Matrix col = random_matrix(3, 1, rng);

    auto check1 = [&](const char* name, const Matrix& x, const Unary& f) {
      INFO(name);
      CHECK(jvp_error({x}, [&](std::vector<Var>& v) { return f(v[0]); }, rng) < 1e-6);
    };
    auto check2 = [&](const char* name, const Matrix& x, const Matrix& y, const Binary& f) {
      INFO(name);
      CHECK(jvp_error({x, y}, [&](std::vector<Var>& v) { return f(v[0], v[1]); }, rng) < 1e-6);
    };

    check2("matmul", a, c, [](const Var& x, const Var& y) { return matmul(x, y); });
    check2("add", a, b, [](const Var& x, const Var& y) { return add(x, y); });
    check2("sub", a, b, [](const Var& x, const Var& y) { return sub(x, y); });
    check2("mul", a, b, [](const Var& x, const Var& y) { return mul(x, y); });
    check2("add_row", a, row, [](const Var& x, const Var& y) { return add_row(x, y); });
    check2("mul_row", a, row, [](const Var& x, const Var& y) { return mul_row(x, y); });
    check2("mul_col", a, col, [](const Var& x, const Var& y) { return mul_col(x, y); });
    check1("scale", a, [](const Var& x) { return scale(x, -1.7); });
    check1("sigmoid", a, [](const Var& x) { return sigmoid(x); });
    check1("relu", a, [](const Var& x) { return relu(x); });
    check1("exp", a, [](const Var& x) { return exp(x); });
    check1("log", pos, [](const Var& x) { return log(x); });
    check1("square", a, [](const Var& x) { return square(x); });
    check1("rsqrt", pos, [](const Var& x) { return rsqrt(x); });
    check1("transpose", a, [](const Var& x) { return transpose(x); });
    check1("sum", a, [](const Var& x) { return sum(x); });
    check1("mean_rows", a, [](const Var& x) { return mean_rows(x); });
    check1("row_sum", a, [](const Var& x) { return row_sum(x); });
    check1("col_max", a, [](const Var& x) { return col_max(x); });
    check1("log_sum_exp", a, [](const Var& x) { return log_sum_exp(x); });
    check1("element", a, [](const Var& x) { return element(x, 1, 2); });
  }
}

TEST_CASE("log_sum_exp is stable for large inputs") {
  ParamStore store;
  Matrix x(1, 2);
  x << 1000.0, 1001.0;
  store.add("x", x);
  Tape t;
  Var y = log_sum_exp(t.param(store.at("x")));
  CHECK(y.scalar() == doctest::Approx(1001.0 + std::log1p(std::exp(-1.0))).epsilon(1e-15));
  backward(y);
  CHECK(store.at("x").grad(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore store;
  store.add("w", scalar(1.25));
  adam_step(store, 0.1);
  CHECK(store.at("w").value(0, 0) == 1.25);
}

TEST_CASE("adam: first step moves by lr against the gradient sign") {
  ParamStore store;
  store.add("w", scalar(0.0));
  store.at("w").grad(0, 0) = 3.0;
  adam_step(store, 0.001);
  CHECK(store.at("w").value(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(store.at("w").grad(0, 0) == 0.0);
}

TEST_CASE("adam: matches a scalar reference over several steps") {
  ParamStore store;
  store.add("w", scalar(0.5));
  double w = 0.5, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[] = {1.0, 1.0, 1.0, -0.3, 2.5};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    store.at("w").grad(0, 0) = g;
    adam_step(store, lr, b1, b2, eps);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(std::abs(store.at("w").value(0, 0) - w) < 1e-12);
  }
  CHECK(store.adam_steps() == 5);
}

TEST_CASE("adam: zero learning rate is the identity") {
  ParamStore store;
  std::mt19937_64 rng(1);
  const Matrix init = random_matrix(3, 3, rng);
  store.add("w", init);
  store.at("w").grad = random_matrix(3, 3, rng);
  adam_step(store, 0.0);
  CHECK(store.at("w").value == init);
}

TEST_CASE("finite_diff_check: quadratic") {
  ParamStore store;
  std::mt19937_64 rng(5);
  store.add("a", random_matrix(3, 2, rng));
  store.add("b", random_matrix(2, 2, rng));
  const Matrix before_a = store.at("a").value;
  LossFn loss = [&](Tape& t) {
    Var a = t.param(store.at("a"));
    Var b = t.param(store.at("b"));
    return sum(square(matmul(a, b)));
  };
  const auto r = finite_diff_check(loss, store, 10, 1e-4, 3);
  CHECK(r.max_error < 1e-9);
  CHECK(store.at("a").value == before_a);
  CHECK(store.at("a").grad.isZero());
}

TEST_CASE("finite_diff_check: parameter the loss ignores uses the absolute error") {
  ParamStore store;
  store.add("used", scalar(2.0));
  store.add("unused", scalar(1.0));
  LossFn loss = [&](Tape& t) { return sum(square(t.param(store.at("used")))); };
  const auto r = finite_diff_check(loss, store, 2, 1e-4);
  CHECK(r.max_error < 1e-8);
}

TEST_CASE("finite_diff_check detects a wrong gradient") {
  ParamStore store;
  store.add("x", scalar(1.3));
  LossFn loss = [&](Tape& t) {
    Var x = t.param(store.at("x"));
    // value x^2, gradient reported as x
    return t.record(x.value().array().square().matrix(), {x.id()},
                    [](Tape& tape, int self) {
                      const int p = tape.parent(self, 0);
                      tape.accumulate(p, tape.grad(self).array() * tape.value(p).array());
                    });
  };
  CHECK(finite_diff_check(loss, store, 1, 1e-5).max_error > 0.4);
}
