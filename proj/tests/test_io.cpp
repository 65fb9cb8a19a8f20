#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pmap/io.hpp"
#include "pmap/pipeline.hpp"

using namespace pmap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / ("pmap_io_test_" + std::to_string(::getpid()) +
                                   "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ProbabilityStack sample_stack(int n_maps, const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ProbabilityStack stack;
  for (int m = 0; m < n_maps; ++m) {
    Array2d v(grid.height, grid.width);
    for (Index i = 0; i < grid.size(); ++i) v.data()[i] = unit(rng);
    stack.maps.push_back({grid, 1.0 + 3.0 * m, std::move(v)});
  }
  return stack;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("tensor file round trip is lossless at float32") {
  const auto dir = temp_dir();
  const auto stack = sample_stack(4, Grid(17, 9), 12);
  write_stack(stack, dir / "a.pmap");
  const auto back = read_stack(dir / "a.pmap");
  REQUIRE(back.count() == 4);
  CHECK(back.grid() == stack.grid());
  for (int m = 0; m < 4; ++m) {
    for (Index i = 0; i < stack.grid().size(); ++i) {
      CHECK(back.maps[m].values.data()[i] ==
            static_cast<double>(static_cast<float>(stack.maps[m].values.data()[i])));
    }
  }
  // write(read(file)) reproduces the payload byte for byte
  write_stack(back, dir / "b.pmap");
  CHECK(slurp(dir / "a.pmap") == slurp(dir / "b.pmap"));
  fs::remove_all(dir);
}

TEST_CASE("tensor file error paths") {
  const auto dir = temp_dir();
  const auto stack = sample_stack(4, Grid(6, 5), 3);
  write_stack(stack, dir / "ok.pmap");
  std::string bytes = slurp(dir / "ok.pmap");

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), BadMagic);
  }
  SUBCASE("unsupported version") {
    std::string bad = bytes;
    bad[4] = 9;
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), VersionUnsupported);
  }
  SUBCASE("truncated payload: header says 4 maps, file holds 3") {
    const std::size_t map_bytes = 6 * 5 * sizeof(float);
    std::string bad = bytes.substr(0, bytes.size() - map_bytes);
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), TruncatedPayload);
  }
  SUBCASE("non-finite value") {
    std::string bad = bytes;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bad.data() + 16, &nan, sizeof(float));
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), NonFiniteValue);
  }
  SUBCASE("value outside [0,1]") {
    std::string bad = bytes;
    const float big = 1.5f;
    std::memcpy(bad.data() + 16, &big, sizeof(float));
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), ValueOutOfRange);
  }
  SUBCASE("trailing bytes are rejected") {
    std::string bad = bytes + std::string(4, '\0');
    std::ofstream(dir / "bad.pmap", std::ios::binary) << bad;
    CHECK_THROWS_AS(read_stack(dir / "bad.pmap"), IoError);
  }
  SUBCASE("values within the 1e-6 tolerance are clamped") {
    std::string ok = bytes;
    const float nearly = 1.0f + 5e-7f;
    std::memcpy(ok.data() + 16, &nearly, sizeof(float));
    std::ofstream(dir / "ok2.pmap", std::ios::binary) << ok;
    const auto stack2 = read_stack(dir / "ok2.pmap");
    CHECK(stack2.maps[0].values.data()[0] == 1.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("annotations and detections json round trip") {
  const auto dir = temp_dir();
  ImageAnnotations ann;
  ann.image = "scene_7";
  ann.grid = Grid(128, 96);
  ann.instances = {test::square(4, 4, 30, "a"), test::rect(50, 10, 90, 26, "b")};
  ann.instances[1].ignore = true;
  write_annotations(ann, dir / "ann.json");
  const auto back = read_annotations(dir / "ann.json");
  CHECK(back.image == "scene_7");
  CHECK(back.grid == ann.grid);
  REQUIRE(back.instances.size() == 2);
  CHECK(back.instances[0].id == "a");
  CHECK(back.instances[1].ignore);
  CHECK(back.instances[0].vertices == ann.instances[0].vertices);

  ImageDetections det;
  det.image = "scene_7";
  det.grid = ann.grid;
  det.detections = {{test::square(4, 4, 30, "1"), 0.93, BoundaryMode::polygon}};
  write_detections(det, dir / "det.json");
  const auto det_back = read_detections(dir / "det.json");
  REQUIRE(det_back.detections.size() == 1);
  CHECK(det_back.detections[0].score == doctest::Approx(0.93));
  CHECK(det_back.detections[0].mode == BoundaryMode::polygon);
  CHECK(det_back.detections[0].polygon.vertices == det.detections[0].polygon.vertices);

  // degenerate annotation polygons fail at parse time
  std::ofstream(dir / "bad.json")
      << R"({"image":{"width":8,"height":8},"instances":[{"id":"x","ignore":false,"points":[[0,0],[1,1]]}]})";
  CHECK_THROWS_AS(read_annotations(dir / "bad.json"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("annotation set directory reads sorted") {
  const auto dir = temp_dir();
  for (int i = 0; i < 3; ++i) {
    ImageAnnotations ann;
    ann.image = "img_" + std::to_string(i);
    ann.grid = Grid(32, 32);
    ann.instances = {test::square(2, 2, 10)};
    write_annotations(ann, dir / ("img_" + std::to_string(i) + ".json"));
  }
  const auto set = read_annotation_set(dir);
  REQUIRE(set.size() == 3);
  CHECK(set[0].image == "img_0");
  CHECK(set[2].image == "img_2");
  fs::remove_all(dir);
}

TEST_CASE("heatmap export") {
  const auto dir = temp_dir();
  const Grid grid(9, 5);

  SUBCASE("all zero is black, all one is white") {
    ProbabilityMap zero{grid, 1.0, Array2d::Zero(5, 9)};
    export_heatmap(zero, dir / "zero.pgm");
    const std::string z = slurp(dir / "zero.pgm");
    const std::string header = "P5\n9 5\n255\n";
    REQUIRE(z.substr(0, header.size()) == header);
    for (std::size_t i = header.size(); i < z.size(); ++i) CHECK(z[i] == 0);

    ProbabilityMap one{grid, 1.0, Array2d::Constant(5, 9, 1.0)};
    export_heatmap(one, dir / "one.pgm");
    const std::string o = slurp(dir / "one.pgm");
    for (std::size_t i = header.size(); i < o.size(); ++i) {
      CHECK(static_cast<unsigned char>(o[i]) == 255);
    }
  }
  SUBCASE("oracle square stack has a stable checksum") {
    const auto stack = generate_label_stack({{test::square(2, 2, 21)}}, Grid(25, 25),
                                            make_schedule(3, 4));
    export_heatmap(stack, dir / "sq.pgm");
    const std::string m0 = slurp(dir / "sq_m0.pgm");
    const std::string m3 = slurp(dir / "sq_m3.pgm");
    // frozen at first build; guards the byte-level determinism of the export
    CHECK(test::fnv1a(m0.data(), m0.size()) == 0xd74189a7d52ce2adull);
    CHECK(test::fnv1a(m3.data(), m3.size()) == 0xfb8028fb0332492dull);
  }
  SUBCASE("colormaps produce ppm") {
    ProbabilityMap half{grid, 1.0, Array2d::Constant(5, 9, 0.5)};
    export_heatmap(half, dir / "v.ppm", Colormap::viridis);
    CHECK(slurp(dir / "v.ppm").substr(0, 3) == "P6\n");
    export_heatmap(half, dir / "j.ppm", Colormap::jet);
    CHECK(slurp(dir / "j.ppm").substr(0, 3) == "P6\n");
  }
  fs::remove_all(dir);
}

TEST_CASE("config loading and presets") {
  const auto dir = temp_dir();
  PipelineConfig cfg;

  std::ofstream(dir / "cfg.json")
      << R"({"k":2, "n":4, "weights":[0.1,0.2,0.3,0.4], "gamma":3, "lambdas":[1,1,1,1], "th_b":0.4})";
  load_config(cfg, dir / "cfg.json");
  CHECK(cfg.k == 2);
  CHECK(cfg.n == 4);
  CHECK(cfg.th_b == doctest::Approx(0.4));
  CHECK(cfg.schedule().alphas == std::vector<double>{1, 3, 5, 7});

  std::ofstream(dir / "bad.json") << R"({"k":2, "typo_key": 1})";
  CHECK_THROWS_AS(load_config(cfg, dir / "bad.json"), IoError);

  PipelineConfig preset;
  preset.filter = FilterMode::voting;
  apply_preset(preset, "totaltext");
  CHECK(preset.th_b == doctest::Approx(0.325));
  CHECK(preset.boundary == BoundaryMode::polygon);
  preset.filter = FilterMode::threshold;
  apply_preset(preset, "icdar15");
  CHECK(preset.th_b == doctest::Approx(0.405));
  CHECK(preset.th_e == doctest::Approx(0.84));
  CHECK(preset.boundary == BoundaryMode::rect);
  CHECK_THROWS_AS(apply_preset(preset, "nope"), Error);
  fs::remove_all(dir);
}

TEST_CASE("run_parallel") {
  SUBCASE("thread count does not change results") {
    SyntheticSceneSpec spec;
    spec.grid = Grid(96, 96);
    spec.scenes = 8;
    spec.instances_per_scene = 2;
    spec.min_area = 200.0;
    PipelineConfig cfg;
    std::vector<std::string> dumps;
    for (int threads : {1, 2, 8}) {
      const auto outcome = run_synthetic_pipeline(spec, cfg, threads);
      std::string all;
      for (const auto& d : outcome.detections) all += detections_to_json(d);
      dumps.push_back(std::move(all));
    }
    CHECK(dumps[0] == dumps[1]);
    CHECK(dumps[0] == dumps[2]);
  }
  SUBCASE("exceptions propagate") {
    CHECK_THROWS_AS(
        run_parallel(4, 2, [](std::size_t i) {
          if (i == 2) throw Error("boom");
        }),
        Error);
  }
  SUBCASE("PMAP_THREADS is honored") {
    ::setenv("PMAP_THREADS", "3", 1);
    CHECK(resolve_thread_count(0) == 3);
    CHECK(resolve_thread_count(5) == 5);
    ::unsetenv("PMAP_THREADS");
  }
}

}  // TEST_SUITE
