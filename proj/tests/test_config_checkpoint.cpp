#include "doctest.h"
#include "helpers.hpp"

#include "disco/checkpoint.hpp"
#include "disco/config.hpp"

#include <fstream>

using namespace disco;

TEST_CASE("config round trip") {
  TrainConfig c;
  c.dim = 64;
  c.tau_r = 0.8;
  c.phi = Similarity::kDot;
  c.direction = DirectionSet::kT2S;
  c.ablations = {Ablation::kNoOrth, Ablation::kDecoder};
  auto back = config_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());
  CHECK(back.kernel_tau() == 0.8);
  CHECK(back.effective_gamma() == 0.0);

  auto dir = testing::temp_dir("config");
  save_config(dir / "c.json", c);
  CHECK(to_json(load_config(dir / "c.json")).dump() == to_json(c).dump());

  CHECK(config_from_json(nlohmann::ordered_json::object()).dim == TrainConfig{}.dim);
}

TEST_CASE("config validation") {
  auto bad = [](const char* text) { return config_from_json(nlohmann::ordered_json::parse(text)); };
  CHECK_THROWS_WITH_AS(bad(R"({"dimm": 4})"), doctest::Contains("dimm"), Error);
  CHECK_THROWS_AS(bad(R"({"dim": 10, "channels": 4})"), Error);
  CHECK_THROWS_AS(bad(R"({"beta": 0.9})"), Error);
  CHECK_THROWS_AS(bad(R"({"lambda": -0.1})"), Error);
  CHECK_THROWS_AS(bad(R"({"layers": 0})"), Error);
  CHECK_THROWS_AS(bad(R"({"ablations": ["shared-target", "stopgrad-only"]})"), Error);
  CHECK_THROWS_AS(bad(R"({"ablations": ["nonsense"]})"), Error);
  for (auto a : all_ablations()) CHECK(parse_ablation(to_string(a)) == a);
}

TEST_CASE("checkpoint files") {
  Rng rng(1);
  Checkpoint c;
  c.add("a", testing::random_mat(3, 4, rng));
  c.add("b", testing::random_mat(1, 7, rng));
  c.add("empty", Mat(0, 5));
  c.meta["note"] = "x";
  auto dir = testing::temp_dir("ckpt");
  save_checkpoint(dir, c);

  SUBCASE("bitwise round trip") {
    auto back = load_checkpoint(dir);
    REQUIRE(back.arrays.size() == c.arrays.size());
    for (std::size_t i = 0; i < c.arrays.size(); ++i) {
      CHECK(back.arrays[i].first == c.arrays[i].first);
      CHECK(back.arrays[i].second.rows() == c.arrays[i].second.rows());
      CHECK(back.arrays[i].second.cols() == c.arrays[i].second.cols());
      CHECK(std::memcmp(back.arrays[i].second.data(), c.arrays[i].second.data(),
                        sizeof(double) * c.arrays[i].second.size()) == 0);
    }
    CHECK(back.meta["note"] == "x");
    CHECK_THROWS_AS(back.get("missing"), Error);
  }
  SUBCASE("truncated blob names both lengths") {
    std::filesystem::resize_file(dir / "params.bin", 100);
    CHECK_THROWS_WITH_AS(load_checkpoint(dir), doctest::Contains("expected 152 bytes, found 100"), Error);
  }
  SUBCASE("flipped byte fails the hash") {
    std::fstream f(dir / "params.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(9);
    f.put('\x7f');
    f.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(dir), doctest::Contains("hash"), Error);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "nope"), Error);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a64(nullptr, 0) == 0xcbf29ce484222325ULL);
  const unsigned char a[] = {'a'};
  CHECK(fnv1a64(a, 1) == 0xaf63dc4c8601ec8cULL);
}
