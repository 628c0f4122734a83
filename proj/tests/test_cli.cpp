#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "evtwin/cli/run.hpp"
#include "evtwin/io/config_io.hpp"
#include "evtwin/io/events_io.hpp"
#include "evtwin/io/flux_io.hpp"
#include "helpers.hpp"

using namespace evtwin;

namespace {

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"evtwin"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli::run(int(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli: static noiseless simulation writes an empty event file") {
  test::TempDir tmp("cli_sim");

  FluxSequence flux;
  flux.t0 = 0;
  flux.dt = 1000;
  flux.frames.assign(20, PixelMap::Constant(8, 8, 500.0));
  io::write_flux_volume(flux, tmp.path("static.flx"));

  CHECK(run_cli({"simulate", "--flux", tmp.path("static.flx"), "--out",
                 tmp.path("out.evt")}) == 0);
  EventStream events = io::read_events_bin(tmp.path("out.evt"));
  CHECK(events.records.empty());
  CHECK(events.width == 8);
}

TEST_CASE("cli: sensitivity task prints the closed-form threshold") {
  test::TempDir tmp("cli_sens");
  CHECK(run_cli({"analyze", "--task", "sensitivity", "--phi", "1000",
                 "--tpos", "0.01", "--gain", "1", "--out",
                 tmp.path("s.csv")}) == 0);
  const std::string content = slurp(tmp.path("s.csv"));
  CHECK(content.find("delta_phi_pos") != std::string::npos);
  CHECK(content.find("10.0501670842") != std::string::npos);
}

TEST_CASE("cli: usage errors exit with code 1") {
  CHECK(run_cli({"--no-such-flag"}) == 1);
  CHECK(run_cli({"filter", "--method", "nope", "--in", "a", "--out", "b"}) ==
        1);
  CHECK(run_cli({"analyze", "--task", "bogus"}) == 1);
}

TEST_CASE("cli: data errors exit with code 2") {
  CHECK(run_cli({"simulate", "--flux", "/nonexistent.flx", "--out",
                 "/tmp/x.evt"}) == 2);
}

TEST_CASE("cli: seeded runs are reproducible and frames round trip") {
  test::TempDir tmp("cli_seed");

  io::ConfigDoc doc;
  doc.sensor.leak_chance = 0.05;
  doc.sensor.shot_noise = true;
  doc.sensor.sigma_dark = 2.0;
  io::write_config(doc, tmp.path("noisy.cfg"));

  FluxSequence flux;
  flux.t0 = 0;
  flux.dt = 1000;
  flux.frames.assign(15, PixelMap::Constant(6, 6, 800.0));
  io::write_flux_volume(flux, tmp.path("f.flx"));

  auto simulate_to = [&](const std::string& events,
                         const std::string& frames) {
    return run_cli({"--config", tmp.path("noisy.cfg"), "--seed", "31",
                    "simulate", "--flux", tmp.path("f.flx"), "--out",
                    tmp.path(events), "--frames-out", tmp.path(frames)});
  };
  CHECK(simulate_to("a.evt", "a.efv") == 0);
  CHECK(simulate_to("b.evt", "b.efv") == 0);
  CHECK(slurp(tmp.path("a.evt")) == slurp(tmp.path("b.evt")));
  CHECK(slurp(tmp.path("a.efv")) == slurp(tmp.path("b.efv")));

  EventStream events = io::read_events_bin(tmp.path("a.evt"));
  CHECK(!events.records.empty());

  // events -> frames -> events through the convert subcommand
  CHECK(run_cli({"convert", "--in", tmp.path("a.evt"), "--out",
                 tmp.path("a.csv")}) == 0);
  EventStream csv_events =
      io::read_events_csv(tmp.path("a.csv"), 6, 6, events.dt);
  CHECK(csv_events == events);

  CHECK(run_cli({"convert", "--in", tmp.path("a.efv"), "--out",
                 tmp.path("back.evt")}) == 0);
  EventStream from_frames = io::read_events_bin(tmp.path("back.evt"));
  EventFrameVolume volume = io::read_frames_bin(tmp.path("a.efv"));
  std::size_t nonzero = 0;
  for (const PolarityMap& f : volume.frames) {
    nonzero += std::size_t((f != 0).count());
  }
  CHECK(from_frames.records.size() == nonzero);
}

TEST_CASE("cli: simulate consumes a graymap directory") {
  test::TempDir tmp("cli_pgm");
  std::filesystem::create_directories(tmp.path("frames"));

  // three 4x3 16-bit frames with a brightness jump in the middle one
  auto write_pgm = [&](const std::string& name, std::uint16_t level) {
    std::ofstream f(tmp.path("frames/" + name), std::ios::binary);
    f << "P5\n4 3\n65535\n";
    for (int i = 0; i < 12; ++i) {
      f.put(char(level >> 8));
      f.put(char(level & 0xff));
    }
  };
  write_pgm("f0.pgm", 1000);
  write_pgm("f1.pgm", 4000);
  write_pgm("f2.pgm", 4000);
  {
    std::ofstream t(tmp.path("frames/timing.txt"));
    t << "t0 = 0\ndt = 1000\n";
  }

  io::ConfigDoc doc;
  doc.sensor.theta_pos_mean = 0.5;
  doc.sensor.theta_neg_mean = -0.5;
  io::write_config(doc, tmp.path("c.cfg"));

  CHECK(run_cli({"--config", tmp.path("c.cfg"), "simulate", "--flux",
                 tmp.path("frames"), "--out", tmp.path("out.evt")}) == 0);
  EventStream events = io::read_events_bin(tmp.path("out.evt"));
  // the x4 jump crosses the 0.5 threshold (ln 4 > 0.5) on every pixel, once
  CHECK(events.records.size() == 12);
  for (const EventRecord& r : events.records) {
    CHECK(r.p == 1);
    CHECK(r.t == 1000);
  }
}

TEST_CASE("cli: filter and surface pipelines produce consistent files") {
  test::TempDir tmp("cli_filter");

  EventStream s = test::random_stream(8, 10, 10, 300, 50000);
  io::write_events_bin(s, tmp.path("in.evt"));

  CHECK(run_cli({"filter", "--method", "baf", "--in", tmp.path("in.evt"),
                 "--out", tmp.path("baf.evt"), "--baf-dt", "2000"}) == 0);
  EventStream filtered = io::read_events_bin(tmp.path("baf.evt"));
  CHECK(filtered.records.size() <= s.records.size());
  CHECK(test::is_subsequence(filtered, s));

  CHECK(run_cli({"filter", "--method", "polarity", "--in", tmp.path("in.evt"),
                 "--out", tmp.path("pos.evt"), "--keep", "pos"}) == 0);
  for (const EventRecord& r :
       io::read_events_bin(tmp.path("pos.evt")).records) {
    CHECK(r.p == 1);
  }

  CHECK(run_cli({"surface", "--in", tmp.path("in.evt"), "--out",
                 tmp.path("surf.csv"), "--mode", "count"}) == 0);
  std::ifstream surf(tmp.path("surf.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(surf, line)) ++rows;
  CHECK(rows == 10);
}

TEST_CASE("cli: reconstruct writes frame files") {
  test::TempDir tmp("cli_recon");
  EventStream s = test::random_stream(9, 6, 6, 40, 30000);
  io::write_events_csv(s, tmp.path("in.csv"));

  io::ConfigDoc doc;
  doc.sensor.width = 6;
  doc.sensor.height = 6;
  io::write_config(doc, tmp.path("c.cfg"));

  CHECK(run_cli({"--config", tmp.path("c.cfg"), "reconstruct", "--in",
                 tmp.path("in.csv"), "--out-prefix", tmp.path("frame"),
                 "--mode", "fixed_fps", "--interval", "10000"}) == 0);
  std::size_t written = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(tmp.path(""))) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("frame_", 0) == 0) ++written;
  }
  CHECK(written >= 1);
}

TEST_CASE("cli: gradcheck passes and environment seed applies") {
  CHECK(run_cli({"gradcheck", "--width", "3", "--height", "3", "--frames",
                 "4"}) == 0);

  // EVTWIN_SEED is the fallback when neither flag nor config set a seed
  test::TempDir tmp("cli_env");
  FluxSequence flux;
  flux.dt = 1000;
  flux.frames.assign(10, PixelMap::Constant(4, 4, 600.0));
  io::write_flux_volume(flux, tmp.path("f.flx"));

  io::ConfigDoc doc;
  doc.sensor.leak_chance = 0.2;
  io::write_config(doc, tmp.path("c.cfg"));
  // write_config stores every key, so strip the seed line to leave it unset
  {
    std::ifstream in(tmp.path("c.cfg"));
    std::ofstream out(tmp.path("noseed.cfg"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("seed", 0) != 0) out << line << '\n';
    }
  }

  setenv("EVTWIN_SEED", "12345", 1);
  CHECK(run_cli({"--config", tmp.path("noseed.cfg"), "simulate", "--flux",
                 tmp.path("f.flx"), "--out", tmp.path("env1.evt")}) == 0);
  CHECK(run_cli({"--config", tmp.path("noseed.cfg"), "simulate", "--flux",
                 tmp.path("f.flx"), "--out", tmp.path("env2.evt")}) == 0);
  setenv("EVTWIN_SEED", "999", 1);
  CHECK(run_cli({"--config", tmp.path("noseed.cfg"), "simulate", "--flux",
                 tmp.path("f.flx"), "--out", tmp.path("env3.evt")}) == 0);
  unsetenv("EVTWIN_SEED");

  CHECK(slurp(tmp.path("env1.evt")) == slurp(tmp.path("env2.evt")));
  CHECK(slurp(tmp.path("env1.evt")) != slurp(tmp.path("env3.evt")));
}
