#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "slimnet/errors.hpp"
#include "slimnet/model/checkpoint.hpp"
#include "test_support.hpp"

using namespace slimnet;

TEST_SUITE("checkpoint") {

TEST_CASE("encode and decode are bit-exact") {
  NetworkParams p = testing::random_network({5, 7, 4, 3}, true, 1);
  p.layers[0].weights(0, 0) = -0.0;
  p.layers[0].weights(0, 1) = std::numeric_limits<double>::denorm_min();
  p.layers[1].weights(2, 1) = 0.1 + 0.2;
  const Checkpoint ck{p, AdamState::fresh(p), R"({"note":"x"})"};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  CHECK(back == ck);
  CHECK(std::signbit(back.params.layers[0].weights(0, 0)));
  CHECK(encode_checkpoint(back) == encode_checkpoint(ck));
}

TEST_CASE("checkpoint without optimizer state") {
  const NetworkParams p = testing::random_network({2, 3, 1}, false, 2);
  const Checkpoint ck{p, std::nullopt, ""};
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  CHECK(back == ck);
  CHECK_FALSE(back.optimizer.has_value());
}

TEST_CASE("save and load through a file") {
  const auto dir = testing::scratch_dir("checkpoint");
  const NetworkParams p = testing::random_network({4, 6, 2}, true, 3);
  const Checkpoint ck{p, AdamState::fresh(p), "meta"};
  save_checkpoint(dir / "m.ckpt", ck);
  CHECK(load_checkpoint(dir / "m.ckpt") == ck);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), DataError);
  CHECK_THROWS_AS(save_checkpoint(dir / "no" / "such" / "dir" / "m.ckpt", ck), DataError);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const NetworkParams p = testing::random_network({3, 4, 2}, true, 4);
  const std::string good = encode_checkpoint(Checkpoint{p, AdamState::fresh(p), "abc"});

  SUBCASE("truncated") {
    for (std::size_t n : {std::size_t{0}, std::size_t{4}, std::size_t{20}, good.size() / 2, good.size() - 1})
      CHECK_THROWS_AS(decode_checkpoint(good.substr(0, n)), DataError);
  }
  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad), DataError);
  }
  SUBCASE("unknown version") {
    std::string bad = good;
    bad[8] = 9;
    CHECK_THROWS_AS(decode_checkpoint(bad), DataError);
  }
  SUBCASE("trailing bytes") {
    CHECK_THROWS_AS(decode_checkpoint(good + "z"), DataError);
  }
}

}  // TEST_SUITE
