#include <doctest.h>

#include <cmath>
#include <numeric>

#include "slimnet/errors.hpp"
#include "slimnet/reg/regularizer.hpp"
#include "test_support.hpp"

using namespace slimnet;

namespace {

RegularizerSpec spec_of(RegKind kind, double alpha = 0.0) {
  RegularizerSpec s;
  s.kind = kind;
  s.lambda = 1.0;
  s.alpha = alpha;
  return s;
}

NetworkParams single_layer(Matrix w) {
  Layer l;
  l.activation = Activation::identity;
  l.bias = Vector(w.cols(), 0.0);
  l.weights = std::move(w);
  return NetworkParams{{l}};
}

NeuronMaskSet all_ones(const NetworkParams& p) { return build_masks(p, Rational{0, 1}, MaskPlacement::prefix, 0); }

}  // namespace

TEST_SUITE("regularizer") {

TEST_CASE("group norms") {
  CHECK(group_norms(Matrix{{3, 4}}) == Vector{5});
  CHECK(group_norms(Matrix(3, 2)) == Vector{0, 0, 0});
  CHECK(group_norms(Matrix{{-2}}) == Vector{2});
}

TEST_CASE("group lasso on one group [3, 4]") {
  // One column: the group weight sqrt(cols) is 1.
  const NetworkParams p = single_layer(Matrix{{3}, {4}});
  RegularizerSpec s = spec_of(RegKind::group_lasso);
  s.group_weights = {1.0};
  s.smoothing_eps = 0.0;
  const NetworkParams q = single_layer(Matrix{{3, 4}});
  CHECK(reg_value(q, s, {}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(reg_value(p, s, {}) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("group lasso subgradient is the unit direction") {
  const NetworkParams p = single_layer(Matrix{{3, 4}, {0, 0}});
  RegularizerSpec s = spec_of(RegKind::group_lasso);
  s.group_weights = {1.0};
  const GradientSet g = reg_subgrad(p, s, {});
  CHECK(g.layers[0].weights(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g.layers[0].weights(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(g.layers[0].weights(1, 0) == 0.0);
  CHECK(g.layers[0].weights(1, 1) == 0.0);
  CHECK(reg_value(single_layer(Matrix(2, 3)), s, {}) == 0.0);
}

TEST_CASE("L1 and L2 values") {
  const NetworkParams p = single_layer(Matrix{{1, -2}, {0, 3}});
  CHECK(reg_value(p, spec_of(RegKind::l1), {}) == 6.0);
  CHECK(reg_value(p, spec_of(RegKind::l2), {}) == 14.0);
  CHECK(reg_value(p, spec_of(RegKind::none), {}) == 0.0);
  const GradientSet g = reg_subgrad(p, spec_of(RegKind::l1), {});
  CHECK(g.layers[0].weights == Matrix{{1, -1}, {0, 1}});
  const GradientSet g2 = reg_subgrad(p, spec_of(RegKind::l2), {});
  CHECK(g2.layers[0].weights == Matrix{{2, -4}, {0, 6}});
}

TEST_CASE("biases and batch-norm parameters are not penalized") {
  NetworkParams p = testing::random_network({3, 4, 2}, true, 3);
  const RegularizerSpec s = spec_of(RegKind::sparse_group_lasso, 0.3);
  const double before = reg_value(p, s, {});
  for (auto& l : p.layers) {
    for (auto& b : l.bias) b += 5.0;
    for (auto& b : l.bn_scale) b += 5.0;
    for (auto& b : l.bn_shift) b += 5.0;
  }
  CHECK(reg_value(p, s, {}) == before);
  const GradientSet g = reg_subgrad(p, s, {});
  for (const auto& l : g.layers) {
    for (double v : l.bias) CHECK(v == 0.0);
    for (double v : l.bn_scale) CHECK(v == 0.0);
    for (double v : l.bn_shift) CHECK(v == 0.0);
  }
}

TEST_CASE("SGL with alpha 0 equals GL and the mixing identity holds") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NetworkParams p = testing::random_network({5, 7, 4, 3}, seed % 2 == 0, seed);
    const double gl = reg_value(p, spec_of(RegKind::group_lasso), {});
    const double l1 = reg_value(p, spec_of(RegKind::l1), {});
    CHECK(reg_value(p, spec_of(RegKind::sparse_group_lasso, 0.0), {}) == gl);
    for (double a : {0.0, 0.1, 0.5, 1.0}) {
      const double sgl = reg_value(p, spec_of(RegKind::sparse_group_lasso, a), {});
      CHECK(testing::rel_diff(sgl, (1 - a) * gl + a * l1) <= 1e-15);
    }
  }
}

TEST_CASE("partial kinds with an all-ones mask equal the full kinds") {
  const NetworkParams p = testing::random_network({6, 8, 5, 2}, true, 12);
  const auto ones = all_ones(p);
  CHECK(testing::rel_diff(reg_value(p, spec_of(RegKind::partial_gl), ones),
                          reg_value(p, spec_of(RegKind::group_lasso), {})) <= 1e-15);
  CHECK(testing::rel_diff(reg_value(p, spec_of(RegKind::partial_sgl, 0.2), ones),
                          reg_value(p, spec_of(RegKind::sparse_group_lasso, 0.2), {})) <= 1e-15);
  CHECK(reg_subgrad(p, spec_of(RegKind::partial_gl), ones) == reg_subgrad(p, spec_of(RegKind::group_lasso), {}));
}

TEST_CASE("masking one group drops its weighted norm") {
  const NetworkParams p = testing::random_network({4, 6, 3}, false, 13);
  NeuronMaskSet masks = all_ones(p);
  RegularizerSpec s = spec_of(RegKind::partial_gl);
  s.smoothing_eps = 0.0;
  const double full = reg_value(p, s, masks);
  masks[1].bits[2] = 0;
  const double partial = reg_value(p, s, masks);
  const auto row = p.layers[1].weights.row(2);
  double ss = 0.0;
  for (double v : row) ss += v * v;
  const double expected = std::sqrt(3.0) * std::sqrt(ss);
  CHECK(full - partial == doctest::Approx(expected).epsilon(1e-12));
  CHECK(partial <= full);
}

TEST_CASE("masked rows get exactly zero subgradient") {
  const NetworkParams p = testing::random_network({6, 8, 5, 2}, true, 14);
  const NeuronMaskSet masks = build_masks(p, Rational{1, 2}, MaskPlacement::seeded_random, 77);
  for (RegKind k : {RegKind::partial_gl, RegKind::partial_sgl}) {
    const GradientSet g = reg_subgrad(p, spec_of(k, 0.3), masks);
    for (std::size_t l = 0; l < p.depth(); ++l) {
      for (std::size_t r = 0; r < masks[l].bits.size(); ++r) {
        if (masks[l].bits[r]) continue;
        for (double v : g.layers[l].weights.row(r)) CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("weighted kinds scale each layer term") {
  const NetworkParams p = testing::random_network({4, 5, 3, 2}, false, 15);
  CHECK(default_layer_weights(3) == std::vector<double>{1, 10, 10});
  CHECK(default_layer_weights(4) == std::vector<double>{1, 1, 10, 10});
  RegularizerSpec w = spec_of(RegKind::weighted_gl);
  w.layer_weights = {1, 1, 1};
  CHECK(reg_value(p, w, {}) == reg_value(p, spec_of(RegKind::group_lasso), {}));
  w.layer_weights = {2, 3, 5};
  double expected = 0.0;
  for (std::size_t l = 0; l < 3; ++l) {
    NetworkParams one{{p.layers[l]}};
    expected += w.layer_weights[l] * reg_value(one, spec_of(RegKind::group_lasso), {});
  }
  CHECK(reg_value(p, w, {}) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("homogeneity of the GL and L1 parts") {
  const NetworkParams p = testing::random_network({5, 6, 4}, false, 16);
  for (RegKind k : {RegKind::group_lasso, RegKind::l1}) {
    RegularizerSpec s = spec_of(k);
    s.smoothing_eps = 1e-12;
    for (double c : {-3.0, 0.5, 2.0}) {
      NetworkParams q = p;
      for (auto& l : q.layers)
        for (auto& v : l.weights.values()) v *= c;
      CHECK(reg_value(q, s, {}) == doctest::Approx(std::abs(c) * reg_value(p, s, {})).epsilon(1e-9));
    }
  }
}

TEST_CASE("mask-placement invariance under conjugate permutation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const NetworkParams p = testing::random_network({5, 8, 6, 3}, true, seed);
    const NeuronMaskSet m = build_masks(p, Rational{1, 4}, MaskPlacement::seeded_random, seed);
    RngStream rng(seed);
    const auto perm = shuffled_indices(rng, 8);
    const NetworkParams q = permute_hidden(p, 1, perm);
    const NeuronMaskSet mq = permute_masks(m, 1, perm);
    const RegularizerSpec s = spec_of(RegKind::partial_sgl, 0.3);
    CHECK(testing::rel_diff(reg_value(p, s, m), reg_value(q, s, mq)) <= 1e-15);
  }
}

TEST_CASE("mask construction") {
  SUBCASE("40 groups at 1/8") {
    const LayerMask m = build_mask(40, Rational{1, 8}, MaskPlacement::prefix, 0);
    CHECK(m.zero_count() == 5);
    CHECK(m.kept_rows().size() == 35);
  }
  SUBCASE("ratio 0 keeps all") {
    const LayerMask m = build_mask(17, Rational{0, 1}, MaskPlacement::seeded_random, 3);
    CHECK(m.zero_count() == 0);
  }
  SUBCASE("10 groups at 1/4, prefix") {
    const LayerMask m = build_mask(10, Rational{1, 4}, MaskPlacement::prefix, 0);
    CHECK(m.bits == std::vector<std::uint8_t>{0, 0, 1, 1, 1, 1, 1, 1, 1, 1});
  }
  SUBCASE("seeded placement is deterministic with the exact count") {
    const LayerMask a = build_mask(100, Rational{3, 4}, MaskPlacement::seeded_random, 9);
    const LayerMask b = build_mask(100, Rational{3, 4}, MaskPlacement::seeded_random, 9);
    CHECK(a.bits == b.bits);
    CHECK(a.zero_count() == 75);
  }
  SUBCASE("ratio above 1") {
    CHECK_THROWS_AS(build_mask(10, Rational{5, 4}, MaskPlacement::prefix, 0), ConfigError);
  }
}

TEST_CASE("partial kinds require masks") {
  const NetworkParams p = testing::random_network({3, 4, 2}, false, 1);
  CHECK_THROWS_AS(reg_value(p, spec_of(RegKind::partial_gl), {}), ConfigError);
  CHECK_THROWS_AS(reg_value(p, spec_of(RegKind::group_lasso), all_ones(p)), ConfigError);
  NeuronMaskSet bad = all_ones(p);
  bad[0].bits.push_back(1);
  CHECK_THROWS_AS(reg_value(p, spec_of(RegKind::partial_gl), bad), ShapeError);
}

TEST_CASE("regularized parameter counts") {
  const NetworkParams p = init_network(mlp_specs(std::vector<std::size_t>{13, 40, 30, 1}, true), 1);
  CHECK(regularized_param_count(p, spec_of(RegKind::group_lasso), {}) == 1750);
  const NeuronMaskSet eighth = build_masks(p, Rational{1, 8}, MaskPlacement::prefix, 0);
  CHECK(eighth[1].kept_rows().size() * p.layers[1].out_dim() == 1050);
  // floor(13/8) = 1, floor(40/8) = 5, floor(30/8) = 3
  CHECK(regularized_param_count(p, spec_of(RegKind::partial_gl), eighth) == 12 * 40 + 35 * 30 + 27 * 1);
  const NeuronMaskSet all = build_masks(p, Rational{1, 1}, MaskPlacement::prefix, 0);
  CHECK(regularized_param_count(p, spec_of(RegKind::partial_gl), all) == 0);
  CHECK(reg_value(p, spec_of(RegKind::partial_gl), all) == 0.0);
}

TEST_CASE("rationals") {
  CHECK(Rational::parse("1/8") == Rational{1, 8});
  CHECK(Rational::parse("0.125") == Rational{1, 8});
  CHECK(Rational::parse("2/16").str() == "1/8");
  CHECK(Rational::parse("0").str() == "0");
  CHECK(Rational{1, 8}.floor_times(40) == 5);
  CHECK(Rational{1, 4}.floor_times(10) == 2);
  CHECK_THROWS_AS(Rational::parse("1/0"), ConfigError);
  CHECK_THROWS_AS(Rational::parse("x"), ConfigError);
}

TEST_CASE("kind names") {
  for (RegKind k : {RegKind::none, RegKind::l1, RegKind::l2, RegKind::group_lasso, RegKind::sparse_group_lasso,
                    RegKind::weighted_gl, RegKind::weighted_sgl, RegKind::partial_gl, RegKind::partial_sgl}) {
    CHECK(reg_kind_from_string(to_string(k)) == k);
    CHECK(reg_kind_from_string(short_name(k)) == k);
  }
  CHECK_THROWS_AS(reg_kind_from_string("lasso"), ConfigError);
}

}  // TEST_SUITE
