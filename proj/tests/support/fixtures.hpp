#pragma once

#include "cemas/model.hpp"
#include "cemas/types.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace cemas::testing {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) M(r, c++) = v;
    ++r;
  }
  return M;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

inline AgentSpec scalar_agent(double a, double b, double q, double r, double h, double x0) {
  return make_agent(scalar(a), scalar(b), scalar(q), scalar(r), scalar(h), Vector::Constant(1, x0));
}

/// Two identical scalar agents, one step, supply (1, 0). The clearing
/// price solves 2 (2 / (1.1 + lambda))^2 = 1.
inline Scenario two_agent_closed_form() {
  Scenario s;
  s.agents = {scalar_agent(1, 1, 1, 0.1, 1, 2), scalar_agent(1, 1, 1, 0.1, 1, 2)};
  s.supply = mat({{1}, {0}});
  return s;
}

inline std::vector<Matrix> shared_inputs() {
  return {mat({{4, 5}, {2, 1}, {3, 5}}), mat({{1, 4}, {2, 5}, {6, 3}}), mat({{2, 3}, {1, 2}, {5, 4}})};
}

inline std::vector<Matrix> shared_consumption() {
  return {mat({{2, 3}, {3, 6}}), mat({{1, -2}, {-2, 5}}), mat({{4, 1}, {1, 3}})};
}

inline std::vector<Vector> large_initial_states() { return {vec({25, 35, 75}), vec({40, 50, 70}), vec({50, 80, 90})}; }

/// Three-agent, six-step benchmark with sinusoidal supply and threshold 20.
inline Scenario benchmark_finite(double q = 0.00018) {
  const std::vector<Matrix> A = {mat({{.4, -.1, .2}, {.2, .3, .1}, {.3, -.1, -.2}}),
                                 mat({{-.1, .2, -.3}, {.3, .4, -.1}, {-.1, .2, -.7}}),
                                 mat({{.5, -.2, .6}, {-.4, .9, .3}, {.5, .3, -.8}})};
  const auto B = shared_inputs();
  const auto H = shared_consumption();
  const auto x0 = large_initial_states();
  Scenario s;
  for (int i = 0; i < 3; ++i) {
    s.agents.push_back(make_agent(A[i], B[i], q * Matrix::Identity(3, 3), 0.3 * Matrix::Identity(2, 2), H[i], x0[i]));
  }
  const int N = 6;
  s.supply.resize(3, N);
  for (int t = 0; t < N; ++t) {
    const double wave = std::sin(std::numbers::pi * t / 6.0);
    s.supply(0, t) = -wave + 1.2;
    s.supply(1, t) = -2.0 * wave + 2.2;
    s.supply(2, t) = 0.0;
  }
  s.threshold = 20.0;
  return s;
}

/// Three open-loop unstable agents with constant supply (1, 1.8, 0).
inline Scenario benchmark_infinite(const std::vector<Vector>& x0, int horizon = 60) {
  const std::vector<Matrix> A = {mat({{1.1, -.5, 1.8}, {-.4, .6, .7}, {-.3, .7, -.6}}),
                                 mat({{.4, 1.2, -.1}, {-.8, -1.3, .6}, {.1, .7, .5}}),
                                 mat({{.6, -1.2, .9}, {-1.4, .7, .3}, {-1.5, .7, .1}})};
  const auto B = shared_inputs();
  const auto H = shared_consumption();
  Scenario s;
  for (int i = 0; i < 3; ++i) {
    s.agents.push_back(
        make_agent(A[i], B[i], 0.005 * Matrix::Identity(3, 3), 0.3 * Matrix::Identity(2, 2), H[i], x0[i]));
  }
  s.supply.resize(3, horizon);
  s.supply.row(0).setConstant(1.0);
  s.supply.row(1).setConstant(1.8);
  s.supply.row(2).setZero();
  return s;
}

inline std::vector<Vector> small_initial_states() {
  return {vec({.2, .1, .08}), vec({.1, .06, .3}), vec({.5, .2, .1})};
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(std::mt19937& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> e(lo, hi);
  Matrix M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = u(rng);
  const Eigen::HouseholderQR<Matrix> qr(M);
  const Matrix V = qr.householderQ();
  Vector w(dim);
  for (int i = 0; i < dim; ++i) w[i] = e(rng);
  Matrix S = V * w.asDiagonal() * V.transpose();
  return 0.5 * (S + S.transpose());
}

inline Matrix random_matrix(std::mt19937& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = u(rng);
  return M;
}

struct RandomShape {
  int max_agents = 3;
  int max_state = 3;
  int max_input = 2;
  int max_horizon = 5;
};

/// Random valid scenario. Initial states are large enough that the budget
/// usually binds at some steps.
inline Scenario random_scenario(std::mt19937& rng, const RandomShape& shape = {}) {
  std::uniform_int_distribution<int> pick_n(1, shape.max_agents);
  std::uniform_int_distribution<int> pick_d(1, shape.max_state);
  std::uniform_int_distribution<int> pick_m(1, shape.max_input);
  std::uniform_int_distribution<int> pick_N(1, shape.max_horizon);
  std::uniform_real_distribution<double> supply(0.0, 1.0);
  const int n = pick_n(rng);
  const int d = pick_d(rng);
  const int m = pick_m(rng);
  const int N = pick_N(rng);

  Scenario s;
  for (int i = 0; i < n; ++i) {
    s.agents.push_back(make_agent(random_matrix(rng, d, d, 0.8), random_matrix(rng, d, m, 1.0),
                                  random_spd(rng, d, 0.1, 2.0), random_spd(rng, m, 0.1, 1.0),
                                  random_spd(rng, m, 0.5, 2.0), random_matrix(rng, d, 1, 3.0)));
  }
  s.supply.resize(n, N);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < N; ++t) s.supply(i, t) = supply(rng);
  s.supply.row(0).array() += 0.1;
  return s;
}

}  // namespace cemas::testing
