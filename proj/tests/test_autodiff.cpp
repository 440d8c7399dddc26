// Copyright 2026 The posegroup Authors
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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "posegroup/autodiff.hpp"
#include "posegroup/errors.hpp"
#include "posegroup/rng.hpp"

using namespace posegroup;

namespace {

Tensor random_tensor(const std::vector<int>& shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.values) v = rng.normal() * scale;
  return t;
}

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }
std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

/// Central finite differences over every entry of every parameter, against
/// the analytic gradient. `run` rebuilds the graph from the given parameter
/// values, returns the scalar loss, and fills analytic gradients on demand.
void check_gradients(std::vector<Tensor>& params,
                     const std::function<double(const std::vector<Tensor>&,
                                                std::vector<Tensor>*)>& run,
                     double rel_tol = 1e-4, double abs_tol = 1e-6,
                     double step = 1e-5) {
  std::vector<Tensor> analytic;
  run(params, &analytic);
  REQUIRE(analytic.size() == params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    REQUIRE(analytic[p].numel() == params[p].numel());
    for (std::size_t i = 0; i < params[p].numel(); ++i) {
      const double saved = params[p].values[i];
      params[p].values[i] = saved + step;
      const double up = run(params, nullptr);
      params[p].values[i] = saved - step;
      const double down = run(params, nullptr);
      params[p].values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = analytic[p].values[i];
      const double err = std::abs(fd - an);
      const double tol = std::max(abs_tol, rel_tol * std::max(std::abs(fd),
                                                              std::abs(an)));
      INFO("param ", p, " entry ", i, " fd ", fd, " analytic ", an);
      CHECK(err <= tol);
    }
  }
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.numel() == 6);
  t.at(1, 2) = 5.0;
  CHECK(t.values[5] == 5.0);

  const Tensor v = Tensor::make({3}, {1.0, 2.0, 3.0});
  CHECK(v.rows() == 3);
  CHECK(v.cols() == 1);
  CHECK_THROWS_AS(Tensor::make({2, 2}, {1.0}), ContractViolation);
  CHECK_THROWS_AS(Tensor::zeros({-1, 2}), ContractViolation);
}

TEST_CASE("linear gradients") {
  Rng rng(1);
  std::vector<Tensor> params = {random_tensor({4, 3}, rng),   // x
                                random_tensor({5, 3}, rng),   // w
                                random_tensor({5}, rng)};     // b
  auto run = [](const std::vector<Tensor>& p, std::vector<Tensor>* grads) {
    Tape tape;
    auto x = tape.leaf(p[0], true);
    auto w = tape.leaf(p[1], true);
    auto b = tape.leaf(p[2], true);
    auto s = tape.sigmoid(tape.linear(x, w, b));
    auto loss = tape.bce_mean(s, ones(20));
    const double value = tape.value(loss).values[0];
    if (grads) {
      tape.backward(loss);
      *grads = {tape.grad(x), tape.grad(w), tape.grad(b)};
    }
    return value;
  };
  check_gradients(params, run);
}

TEST_CASE("linear shape validation") {
  Tape tape;
  auto x = tape.leaf(Tensor::zeros({2, 3}), false);
  auto w = tape.leaf(Tensor::zeros({4, 5}), false);
  auto b = tape.leaf(Tensor::zeros({4}), false);
  CHECK_THROWS_AS(tape.linear(x, w, b), ContractViolation);
}

TEST_CASE("relu routes gradients through positive entries") {
  Rng rng(2);
  // keep entries away from the kink so finite differences are clean
  Tensor x = random_tensor({3, 4}, rng);
  for (auto& v : x.values) {
    if (std::abs(v) < 0.2) v = v < 0 ? v - 0.3 : v + 0.3;
  }
  std::vector<Tensor> params = {x};
  auto run = [](const std::vector<Tensor>& p, std::vector<Tensor>* grads) {
    Tape tape;
    auto xv = tape.leaf(p[0], true);
    auto s = tape.sigmoid(tape.relu(xv));
    auto loss = tape.bce_mean(s, zeros(12));
    const double value = tape.value(loss).values[0];
    if (grads) {
      tape.backward(loss);
      *grads = {tape.grad(xv)};
    }
    return value;
  };
  check_gradients(params, run);
}

TEST_CASE("gather, max, mean, concat, add, scale gradients") {
  Rng rng(3);
  std::vector<Tensor> params = {random_tensor({5, 4}, rng)};
  const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}, {4, 0}, {1, 2}};
  const std::vector<std::vector<int>> groups = {{0, 3}, {1}, {2}, {}, {0, 1, 2}};

  auto run = [&](const std::vector<Tensor>& p, std::vector<Tensor>* grads) {
    Tape tape;
    auto x = tape.leaf(p[0], true);
    auto cat = tape.gather_concat_pairs(x, pairs);       // [4 x 8]
    auto mx = tape.max_rows(cat, groups);                // [5 x 8]
    auto mn = tape.mean_rows(cat, groups);               // [5 x 8]
    auto half = tape.scale(mx, 0.25);
    auto sum = tape.add(half, mn);
    auto both = tape.concat_rows({sum, mn});             // [10 x 8]
    auto s = tape.sigmoid(both);
    auto loss = tape.bce_mean(s, ones(80));
    const double value = tape.value(loss).values[0];
    if (grads) {
      tape.backward(loss);
      *grads = {tape.grad(x)};
    }
    return value;
  };
  check_gradients(params, run);
}

TEST_CASE("max_rows picks the first attaining row on ties") {
  Tape tape;
  auto xv = tape.leaf(Tensor::make({3, 2}, {5.0, 1.0, 5.0, 2.0, 4.0, 3.0}), true);
  auto mx = tape.max_rows(xv, {{0, 1, 2}});
  const Tensor& val = tape.value(mx);
  CHECK(val.at(0, 0) == 5.0);
  CHECK(val.at(0, 1) == 3.0);
  auto loss = tape.bce_mean(tape.sigmoid(mx), ones(2));
  tape.backward(loss);
  const Tensor& g = tape.grad(xv);
  // column 0 ties between rows 0 and 1: the gradient lands on row 0 only
  CHECK(g.at(0, 0) != 0.0);
  CHECK(g.at(1, 0) == 0.0);
  CHECK(g.at(2, 0) == 0.0);
  // column 1 max is row 2
  CHECK(g.at(0, 1) == 0.0);
  CHECK(g.at(1, 1) == 0.0);
  CHECK(g.at(2, 1) != 0.0);
}

TEST_CASE("empty max group yields zeros") {
  Tape tape;
  auto x = tape.leaf(Tensor::make({2, 2}, {1.0, 2.0, 3.0, 4.0}), true);
  auto mx = tape.max_rows(x, {{}, {0, 1}});
  const Tensor& val = tape.value(mx);
  CHECK(val.at(0, 0) == 0.0);
  CHECK(val.at(0, 1) == 0.0);
  CHECK(val.at(1, 0) == 3.0);
  CHECK(val.at(1, 1) == 4.0);
}

TEST_CASE("shape and index validation across ops") {
  Tape tape;
  auto x = tape.leaf(Tensor::zeros({2, 2}), false);
  CHECK_THROWS_AS(tape.gather_concat_pairs(x, {{0, 2}}), ContractViolation);
  CHECK_THROWS_AS(tape.max_rows(x, {{2}}), ContractViolation);
  CHECK_THROWS_AS(tape.mean_rows(x, {{-1}}), ContractViolation);
  auto y = tape.leaf(Tensor::zeros({2, 3}), false);
  CHECK_THROWS_AS(tape.concat_rows({x, y}), ContractViolation);
  CHECK_THROWS_AS(tape.add(x, y), ContractViolation);
}

TEST_CASE("dropout") {
  Rng rng(7);
  Tensor x = Tensor::zeros({50, 4});
  for (auto& v : x.values) v = 1.0;

  SUBCASE("masks and rescales") {
    Tape tape;
    auto xv = tape.leaf(x, false);
    auto y = tape.dropout(xv, 0.5, rng);
    const Tensor& val = tape.value(y);
    int dropped = 0;
    for (double v : val.values) {
      if (v == 0.0) {
        ++dropped;
      } else {
        CHECK(v == doctest::Approx(2.0));
      }
    }
    CHECK(dropped > 40);
    CHECK(dropped < 160);
  }

  SUBCASE("rate zero is identity") {
    Tape tape;
    auto xv = tape.leaf(x, false);
    auto y = tape.dropout(xv, 0.0, rng);
    CHECK(tape.value(y).values == x.values);
  }

  SUBCASE("invalid rate") {
    Tape tape;
    auto xv = tape.leaf(x, false);
    CHECK_THROWS_AS(tape.dropout(xv, 1.0, rng), ContractViolation);
    CHECK_THROWS_AS(tape.dropout(xv, -0.1, rng), ContractViolation);
  }

  SUBCASE("finite differences with a frozen mask") {
    std::vector<Tensor> params;
    {
      Rng init(11);
      params = {random_tensor({4, 3}, init)};
    }
    auto run = [](const std::vector<Tensor>& p, std::vector<Tensor>* grads) {
      Tape tape;
      Rng mask_rng(123);  // same mask on every rebuild
      auto x = tape.leaf(p[0], true);
      auto s = tape.sigmoid(tape.dropout(x, 0.4, mask_rng));
      auto loss = tape.bce_mean(s, ones(12));
      const double value = tape.value(loss).values[0];
      if (grads) {
        tape.backward(loss);
        *grads = {tape.grad(x)};
      }
      return value;
    };
    check_gradients(params, run);
  }
}

TEST_CASE("binary cross entropy fixtures") {
  Tape tape;
  auto p = tape.leaf(Tensor::make({1}, {0.5}), false);
  auto loss = tape.bce_mean(p, {1.0});
  CHECK(tape.value(loss).values[0] ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));

  Tape tape2;
  auto p2 = tape2.leaf(Tensor::make({1}, {0.9}), false);
  auto loss2 = tape2.bce_mean(p2, {1.0});
  CHECK(tape2.value(loss2).values[0] ==
        doctest::Approx(0.10536051565782628).epsilon(1e-9));

  // mean over mixed labels
  Tape tape3;
  auto p3 = tape3.leaf(Tensor::make({2}, {0.5, 0.5}), false);
  auto loss3 = tape3.bce_mean(p3, {1.0, 0.0});
  CHECK(tape3.value(loss3).values[0] ==
        doctest::Approx(0.6931471805599453).epsilon(1e-12));
}

TEST_CASE("bce clamps extreme predictions and zeroes their gradient") {
  Tape tape;
  auto p = tape.leaf(Tensor::make({2}, {0.0, 1.0}), true);
  auto loss = tape.bce_mean(p, {1.0, 0.0});
  const double v = tape.value(loss).values[0];
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
  tape.backward(loss);
  const Tensor& g = tape.grad(p);
  CHECK(g.values[0] == 0.0);
  CHECK(g.values[1] == 0.0);
}

TEST_CASE("bce input validation") {
  Tape tape;
  auto p = tape.leaf(Tensor::make({2}, {0.5, 0.5}), false);
  CHECK_THROWS_AS(tape.bce_mean(p, {0.5, 1.0}), ContractViolation);
  CHECK_THROWS_AS(tape.bce_mean(p, {1.0}), ContractViolation);
  auto empty = tape.leaf(Tensor::zeros({0}), false);
  CHECK_THROWS_AS(tape.bce_mean(empty, {}), ContractViolation);
}

TEST_CASE("backward misuse") {
  Tape tape;
  auto x = tape.leaf(Tensor::make({2}, {0.3, 0.7}), true);
  auto loss = tape.bce_mean(x, {0.0, 1.0});
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), ContractViolation);

  Tape tape2;
  auto y = tape2.leaf(Tensor::make({2}, {0.3, 0.7}), true);
  auto s = tape2.sigmoid(y);
  CHECK_THROWS_AS(tape2.backward(s), ContractViolation);  // not a scalar
}

TEST_CASE("sigmoid gradient uses the stored output") {
  Rng rng(5);
  std::vector<Tensor> params = {random_tensor({3, 3}, rng, 2.0)};
  auto run = [](const std::vector<Tensor>& p, std::vector<Tensor>* grads) {
    Tape tape;
    auto x = tape.leaf(p[0], true);
    auto s = tape.sigmoid(x);
    auto loss = tape.bce_mean(s, zeros(9));
    const double value = tape.value(loss).values[0];
    if (grads) {
      tape.backward(loss);
      *grads = {tape.grad(x)};
    }
    return value;
  };
  check_gradients(params, run);
}
