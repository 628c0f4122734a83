#include <doctest.h>

#include <cmath>
#include <fstream>

#include "evtwin/io/events_io.hpp"
#include "evtwin/repr/point_cloud.hpp"
#include "evtwin/repr/reconstruct.hpp"
#include "evtwin/repr/time_surface.hpp"
#include "helpers.hpp"

using namespace evtwin;
using namespace evtwin::repr;

namespace {

EventStream demo_stream() {
  EventStream s;
  s.width = 6;
  s.height = 6;
  s.dt = 100;
  s.records = {{0, 1, 1, 1},  {500, 1, 1, -1}, {1000, 1, 1, 1},
               {800, 3, 3, -1}, {1000, 4, 2, 1}};
  return sort_and_validate(s);
}

}  // namespace

TEST_CASE("exponential surface: recency weights and polarity handling") {
  EventStream s = demo_stream();
  TimeSurfaceSpec spec;
  spec.mode = SurfaceMode::exponential;
  spec.tau = 1000.0;
  spec.t_eval = 1000;

  PixelMap surface = time_surface(s, spec);
  CHECK(surface(1, 1) == doctest::Approx(1.0));   // event at t_eval
  CHECK(surface(2, 4) == doctest::Approx(1.0));
  CHECK(surface(3, 3) ==
        doctest::Approx(-std::exp(-0.2)));        // negative polarity decays
  CHECK(surface(0, 0) == 0.0);
  CHECK((surface.abs() <= 1.0).all());

  spec.polarity_mode = PolarityMode::agnostic;
  PixelMap agnostic = time_surface(s, spec);
  CHECK(agnostic(3, 3) == doctest::Approx(std::exp(-0.2)));
  CHECK((agnostic >= 0.0).all());
  CHECK((agnostic <= 1.0).all());

  // one decay constant later the weight is exactly 1/e
  EventStream one;
  one.width = 2;
  one.height = 2;
  one.records = {{0, 0, 0, 1}};
  spec.polarity_mode = PolarityMode::sensitive;
  spec.t_eval = 1000;
  CHECK(time_surface(one, spec)(0, 0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  spec.tau = 0.0;
  CHECK_THROWS_AS(time_surface(one, spec), Error);
  spec.tau = 100.0;
  spec.t_eval = -2;  // before the event
  CHECK_THROWS_AS(time_surface(one, spec), Error);
}

TEST_CASE("count, average and average_abs surfaces") {
  EventStream s = demo_stream();
  TimeSurfaceSpec spec;
  spec.mode = SurfaceMode::count;
  PixelMap counts = time_surface(s, spec);
  CHECK(counts(1, 1) == 3.0);
  CHECK(counts(3, 3) == 1.0);
  CHECK(counts.sum() == double(s.records.size()));

  spec.mode = SurfaceMode::average;
  PixelMap avg = time_surface(s, spec);
  CHECK(avg(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(avg(3, 3) == -1.0);
  CHECK(avg(0, 0) == 0.0);

  spec.mode = SurfaceMode::average_abs;
  PixelMap abs = time_surface(s, spec);
  for (Eigen::Index y = 0; y < abs.rows(); ++y) {
    for (Eigen::Index x = 0; x < abs.cols(); ++x) {
      CHECK(abs(y, x) == (counts(y, x) > 0 ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("surface window restricts the tally") {
  EventStream s = demo_stream();
  TimeSurfaceSpec spec;
  spec.mode = SurfaceMode::count;
  spec.window = SurfaceWindow{0, 0, 3, 3};
  PixelMap counts = time_surface(s, spec);
  CHECK(counts(1, 1) == 3.0);
  CHECK(counts(3, 3) == 0.0);  // outside the window
  CHECK(counts.sum() == 3.0);

  spec.window = SurfaceWindow{4, 4, 4, 4};  // reaches past the sensor
  CHECK_THROWS_AS(time_surface(s, spec), Error);
}

TEST_CASE("reconstruct_intensity: running sum, decay, and thresholds") {
  ReconstructionOptions options;

  EventStream empty;
  empty.width = 2;
  empty.height = 2;
  CHECK(reconstruct_intensity(empty, 0.2, -0.2, options).frames.empty());

  EventStream one;
  one.width = 2;
  one.height = 2;
  one.records = {{0, 0, 0, 1}};
  IntensityReconstruction rec = reconstruct_intensity(one, 0.2, -0.2, options);
  REQUIRE(rec.frames.size() == 1);
  CHECK(rec.frames[0](0, 0) == doctest::Approx(0.2));

  // readout 1/alpha later: the pixel has decayed to theta_pos / e
  options.alpha = 1e-3;
  options.mode = ReconstructionMode::fixed_fps;
  options.frame_interval = 1000;  // = 1/alpha
  EventStream two = one;
  two.records.push_back({1000, 1, 1, 1});
  rec = reconstruct_intensity(two, 0.2, -0.2, options);
  REQUIRE(!rec.frames.empty());
  CHECK(rec.timestamps[0] == 1000);
  CHECK(rec.frames[0](0, 0) == doctest::Approx(0.2 * std::exp(-1.0)));

  CHECK_THROWS_AS(reconstruct_intensity(one, -0.1, -0.2, options), Error);
  CHECK_THROWS_AS(reconstruct_intensity(one, 0.1, 0.2, options), Error);
}

TEST_CASE("reconstruct_intensity with alpha 0 matches the event tally") {
  ReconstructionOptions options;
  const double tpos = 0.15, tneg = -0.3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EventStream s = test::random_stream(seed, 5, 5, 80, 20000);
    if (s.records.empty()) continue;
    IntensityReconstruction rec =
        reconstruct_intensity(s, tpos, tneg, options);
    REQUIRE(!rec.frames.empty());
    PixelMap expected = PixelMap::Zero(5, 5);
    for (const EventRecord& r : s.records) {
      expected(r.y, r.x) += r.p > 0 ? tpos : tneg;
    }
    CHECK((rec.frames.back() - expected).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("smoothing kernels behave sanely") {
  PixelMap image = PixelMap::Zero(9, 9);
  image(4, 4) = 1.0;

  PixelMap blurred = gaussian_smooth(image, 1.0);
  CHECK(blurred(4, 4) < 1.0);
  CHECK(blurred(4, 3) > 0.0);
  CHECK(blurred.sum() == doctest::Approx(1.0).epsilon(1e-6));

  PixelMap bilat = bilateral_smooth(image, 1.0, 0.5);
  CHECK(bilat(4, 4) <= 1.0);
  CHECK(bilat(4, 4) >= 0.0);

  ReconstructionOptions options;
  options.smoothing.kind = SmoothingKind::gaussian;
  EventStream one;
  one.width = 9;
  one.height = 9;
  one.records = {{0, 4, 4, 1}};
  IntensityReconstruction rec = reconstruct_intensity(one, 0.2, -0.2, options);
  CHECK(rec.frames[0](4, 4) < 0.2);  // spread out by the blur
}

TEST_CASE("point cloud export: rows, colors, and CSV read-back") {
  test::TempDir tmp("pointcloud");

  EventStream empty;
  empty.width = 4;
  empty.height = 4;
  export_point_cloud(empty, tmp.path("empty.csv"));
  std::ifstream check(tmp.path("empty.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(check, line)) ++lines;
  CHECK(lines == 1);  // header only

  EventStream s = test::random_stream(5, 4, 4, 5, 1000);
  REQUIRE(s.records.size() == 5);
  export_point_cloud(s, tmp.path("cloud.csv"));

  EventStream back = io::read_events_csv(tmp.path("cloud.csv"), 4, 4, s.dt);
  CHECK(back == s);
}
