#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "gda/params.hpp"
#include "gda/tensor.hpp"
#include "oracles.hpp"

using namespace gda;

namespace {

constexpr double kGradTol = 1e-4;

/// Gradient-check scaffold: build_loss maps leaf node ids to a scalar loss
/// node; the analytic gradient of every leaf must match central differences.
void gradcheck(const std::vector<Tensor<double>>& inputs,
               const std::function<int(ad::Tape<double>&, const std::vector<int>&)>& build_loss) {
  // analytic
  ad::Tape<double> tp;
  std::vector<int> ids;
  for (const auto& t : inputs) ids.push_back(tp.leaf(t, /*requires_grad=*/true));
  const int loss = build_loss(tp, ids);
  tp.backward(loss);
  std::vector<double> analytic;
  for (int id : ids)
    for (double g : tp.grad(id).data) analytic.push_back(g);

  // numeric, one flat vector over all inputs
  std::vector<double> flat;
  for (const auto& t : inputs) flat.insert(flat.end(), t.data.begin(), t.data.end());
  auto f = [&](const std::vector<double>& x) {
    ad::Tape<double> tp2;
    std::vector<int> ids2;
    size_t off = 0;
    for (const auto& t : inputs) {
      Tensor<double> copy = t;
      std::copy(x.begin() + off, x.begin() + off + t.data.size(), copy.data.begin());
      off += t.data.size();
      ids2.push_back(tp2.leaf(copy));
    }
    return tp2.value(build_loss(tp2, ids2)).data[0];
  };
  std::vector<double> numeric = oracle::finite_diff(flat, f);
  CHECK(oracle::max_rel_err(analytic, numeric) <= kGradTol);
}

Tensor<double> rand_t(long r, long c, uint64_t seed) {
  Rng rng(seed);
  return oracle::random_tensor<double>(r, c, rng);
}

}  // namespace

TEST_CASE("forward values: matmul, transpose, add, mul agree with oracles") {
  ad::Tape<double> tp;
  Tensor<double> a = rand_t(5, 4, 1), b = rand_t(4, 6, 2);
  int c = tp.matmul(tp.leaf(a), tp.leaf(b));
  Tensor<double> expect = oracle::matmul(a, b);
  for (size_t i = 0; i < expect.data.size(); ++i)
    CHECK(tp.value(c).data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));

  int t = tp.transpose(tp.leaf(a));
  CHECK(tp.value(t).rows() == 4);
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 4; ++j) CHECK(tp.value(t)(j, i) == a(i, j));
}

TEST_CASE("gradcheck: matmul") {
  gradcheck({rand_t(3, 4, 5), rand_t(4, 2, 6)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.matmul(in[0], in[1]));
  });
}

TEST_CASE("gradcheck: transpose chained into matmul") {
  gradcheck({rand_t(4, 3, 7), rand_t(4, 2, 8)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.matmul(tp.transpose(in[0]), in[1]));
  });
}

TEST_CASE("gradcheck: add with row broadcast (bias)") {
  gradcheck({rand_t(5, 3, 9), rand_t(1, 3, 10)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.add(in[0], in[1]));
  });
  gradcheck({rand_t(4, 3, 11), rand_t(4, 3, 12)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.add(in[0], in[1]));
  });
}

TEST_CASE("gradcheck: sub, scalar_mul, elementwise mul") {
  gradcheck({rand_t(4, 4, 13), rand_t(4, 4, 14)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.mul(tp.sub(in[0], in[1]), tp.scalar_mul(in[0], 1.7)));
  });
}

TEST_CASE("gradcheck: concat along both axes") {
  gradcheck({rand_t(3, 4, 15), rand_t(2, 4, 16)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.mul(tp.concat(in[0], in[1], 0), tp.concat(in[0], in[1], 0)));
  });
  gradcheck({rand_t(3, 2, 17), rand_t(3, 5, 18)}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.mul(tp.concat(in[0], in[1], 1), tp.concat(in[0], in[1], 1)));
  });
}

TEST_CASE("gradcheck: gather_rows accumulates into repeated sources") {
  const std::vector<int> idx{2, 0, 2, 1, 2};
  gradcheck({rand_t(3, 4, 19)}, [&idx](ad::Tape<double>& tp, const std::vector<int>& in) {
    const int g = tp.gather_rows(in[0], idx);
    return tp.sum(tp.mul(g, g));
  });
}

TEST_CASE("gradcheck: relu away from the kink") {
  Tensor<double> x = rand_t(6, 5, 20);
  for (auto& v : x.data)
    if (std::fabs(v) < 0.05) v += 0.1;  // keep finite differences honest
  gradcheck({x}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.sum(tp.relu(in[0]));
  });
}

TEST_CASE("gradcheck: group_max routes gradient to the winning element") {
  Tensor<double> x = rand_t(12, 3, 21);  // 4 groups of 3
  gradcheck({x}, [](ad::Tape<double>& tp, const std::vector<int>& in) {
    const int m = tp.group_max(in[0], 3);
    return tp.sum(tp.mul(m, m));
  });
}

TEST_CASE("gradcheck: softmax and log_softmax") {
  gradcheck({rand_t(4, 5, 22), rand_t(4, 5, 23)},
            [](ad::Tape<double>& tp, const std::vector<int>& in) {
              return tp.sum(tp.mul(tp.softmax(in[0]), in[1]));
            });
  gradcheck({rand_t(4, 5, 24), rand_t(4, 5, 25)},
            [](ad::Tape<double>& tp, const std::vector<int>& in) {
              return tp.sum(tp.mul(tp.log_softmax(in[0]), in[1]));
            });
}

TEST_CASE("gradcheck: cross entropy") {
  const std::vector<int> labels{2, 0, 4, 1};
  gradcheck({rand_t(4, 5, 26)}, [&labels](ad::Tape<double>& tp, const std::vector<int>& in) {
    return tp.cross_entropy(in[0], labels);
  });
}

TEST_CASE("gradcheck: mean and nested composition") {
  gradcheck({rand_t(3, 3, 27), rand_t(3, 3, 28)},
            [](ad::Tape<double>& tp, const std::vector<int>& in) {
              const int h = tp.relu(tp.matmul(in[0], in[1]));
              return tp.mean(tp.mul(h, h));
            });
}

TEST_CASE("gradcheck: two-layer mlp_forward") {
  gradcheck({rand_t(6, 3, 29), rand_t(3, 4, 30), rand_t(1, 4, 31), rand_t(4, 2, 32),
             rand_t(1, 2, 33)},
            [](ad::Tape<double>& tp, const std::vector<int>& in) {
              const std::vector<std::pair<int, int>> layers{{in[1], in[2]}, {in[3], in[4]}};
              return tp.sum(ad::mlp_forward(tp, in[0], layers));
            });
}

TEST_CASE("cross entropy matches a direct log-softmax computation") {
  Tensor<double> logits = rand_t(3, 4, 34);
  const std::vector<int> labels{1, 3, 0};
  ad::Tape<double> tp;
  const int loss = tp.cross_entropy(tp.leaf(logits), labels);

  double expect = 0;
  for (long i = 0; i < 3; ++i) {
    double mx = logits(i, 0);
    for (long j = 1; j < 4; ++j) mx = std::max(mx, logits(i, j));
    double lse = 0;
    for (long j = 0; j < 4; ++j) lse += std::exp(logits(i, j) - mx);
    expect += mx + std::log(lse) - logits(i, labels[i]);
  }
  expect /= 3;
  CHECK(tp.value(loss).data[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  ad::Tape<double> tp;
  const int x = tp.leaf(rand_t(2, 3, 35));
  CHECK_THROWS_AS(tp.cross_entropy(x, {0, 3}), InvalidInputError);
  CHECK_THROWS_AS(tp.cross_entropy(x, {-1, 0}), InvalidInputError);
  CHECK_THROWS_AS(tp.cross_entropy(x, {0}), ShapeError);
}

TEST_CASE("backward requires a scalar and zero-fills untouched gradients") {
  ad::Tape<double> tp;
  const int x = tp.leaf(rand_t(2, 2, 36), true);
  CHECK_THROWS_AS(tp.backward(x), ShapeError);  // not a scalar

  const int loss = tp.sum(x);
  tp.backward(loss);
  for (double g : tp.grad(x).data) CHECK(g == 1.0);
}

TEST_CASE("shape mismatches are rejected with ShapeError") {
  ad::Tape<double> tp;
  const int a = tp.leaf(rand_t(2, 3, 37));
  const int b = tp.leaf(rand_t(4, 2, 38));
  CHECK_THROWS_AS(tp.matmul(a, b), ShapeError);
  CHECK_THROWS_AS(tp.add(a, b), ShapeError);
  CHECK_THROWS_AS(tp.concat(a, b, 0), ShapeError);
  CHECK_THROWS_AS(tp.group_max(a, 4), ShapeError);
}

TEST_CASE("kaiming init is deterministic and bounded by its fan-in") {
  Tensor<double> w1 = ad::init_params<double>({30, 20}, ad::Init::KaimingUniform, 5);
  Tensor<double> w2 = ad::init_params<double>({30, 20}, ad::Init::KaimingUniform, 5);
  for (size_t i = 0; i < w1.data.size(); ++i) CHECK(w1.data[i] == w2.data[i]);
  const double bound = std::sqrt(6.0 / 30.0);
  for (double v : w1.data) CHECK(std::fabs(v) <= bound);
  Tensor<double> z = ad::init_params<double>({3, 3}, ad::Init::Zeros, 1);
  for (double v : z.data) CHECK(v == 0.0);
}

TEST_CASE("param store: ordering, duplicates, lookup failures") {
  ad::ParamStore<double> store;
  store.add("b", Tensor<double>(2, 2));
  store.add("a", Tensor<double>(1, 3));
  CHECK(store.order == std::vector<std::string>{"b", "a"});
  CHECK(store.count_params() == 7);
  CHECK_THROWS_AS(store.add("a", Tensor<double>(1, 1)), ConfigError);
  CHECK_THROWS_AS(store.at("missing"), ConfigError);
}

TEST_CASE("binding caches leaves so a parameter appears once per tape") {
  ad::ParamStore<double> store;
  store.add("w", rand_t(2, 2, 40));
  ad::Tape<double> tp;
  ad::Binding<double> bind(tp, store);
  const int id1 = bind.bind("w");
  const int id2 = bind.bind("w");
  CHECK(id1 == id2);
  const int loss = tp.sum(tp.add(id1, id2));  // w used twice → gradient 2
  tp.backward(loss);
  for (double g : bind.grad("w").data) CHECK(g == 2.0);
}
