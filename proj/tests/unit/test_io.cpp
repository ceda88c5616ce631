#include <antibunch/commands.hpp>
#include <antibunch/config.hpp>
#include <antibunch/io.hpp>

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace antibunch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("antibunch_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string bytes(const fs::path& p) { return read_text(p); }

}  // namespace

TEST_CASE("photon stream round trip") {
  const fs::path dir = scratch("photons");
  PhotonStream s;
  s.duration = 123'456'789'012;
  std::mt19937_64 eng(3);
  TimePs t = 0;
  for (int i = 0; i < 5000; ++i) {
    t += static_cast<TimePs>(eng() % 10'000'000);
    s.photons.push_back({t, static_cast<std::uint32_t>(eng() % 3)});
  }
  s.photons.push_back({t + 1, kBackgroundSource});
  write_photon_stream(dir / "p.bin", s, 99);
  CHECK(read_photon_stream(dir / "p.bin") == s);
  CHECK(fs::file_size(dir / "p.bin") == 8 * s.size());
  const BinaryHeader h = read_header(dir / "p.bin");
  CHECK(h.kind == "photons");
  CHECK(h.count == s.size());
  CHECK(h.duration == s.duration);
  CHECK(h.source_count == s.source_count());
  CHECK(h.seed == std::optional<std::uint64_t>(99));

  // little-endian layout
  PhotonStream one{{{0x0102030405060708, 0}}, 0x0102030405060709};
  write_photon_stream(dir / "one.bin", one);
  const std::string raw = bytes(dir / "one.bin");
  REQUIRE(raw.size() == 8);
  CHECK(static_cast<unsigned char>(raw[0]) == 0x08);
  CHECK(static_cast<unsigned char>(raw[7]) == 0x01);

  const PhotonStream empty{{}, 0};
  write_photon_stream(dir / "e.bin", empty);
  CHECK(read_photon_stream(dir / "e.bin") == empty);
  CHECK(fs::file_size(dir / "e.bin") == 0);
}

TEST_CASE("click record round trip and corrupt files") {
  const fs::path dir = scratch("clicks");
  ClickRecord r{{0, 5, 5, 700, 1'000'000}, 2, 2'000'000};
  write_click_record(dir / "c.bin", r, 7);
  CHECK(read_click_record(dir / "c.bin") == r);
  CHECK(read_header(dir / "c.bin").detector_id == 2);
  CHECK_THROWS_AS(read_photon_stream(dir / "c.bin"), DataError);
  fs::resize_file(dir / "c.bin", 12);
  CHECK_THROWS_AS(read_click_record(dir / "c.bin"), DataError);
  CHECK_THROWS_AS(read_click_record(dir / "missing.bin"), IoError);
  ClickRecord unsorted{{5, 1}, 1, 10};
  CHECK_THROWS_AS(write_click_record(dir / "u.bin", unsorted), DataError);
}

TEST_CASE("correlation CSV round trip") {
  const fs::path dir = scratch("csv");
  CoincidenceHistogram h;
  h.bin_width = 1000;
  h.first_edge = -3000;
  h.counts = {3, 0, 7, 1, 2, 9};
  h.duration_s = 100.0;
  h.rate1 = 5780.0;
  h.rate2 = 5990.0;
  const CorrelationResult r = correlate(h, 0.34);
  write_correlation_csv(dir / "c.csv", r);
  const CorrelationTable t = read_correlation_csv(dir / "c.csv");
  CHECK(t.metadata.at("rho") == "0.34000000000000002");
  CHECK(t.metadata.at("mode") == "pairs");
  CHECK(t.bin_width_ns() == 1.0);
  REQUIRE(t.t_ns.size() == 6);
  CHECK(t.t_ns[0] == -3.0);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(t.c[i] == static_cast<double>(h.counts[i]));
    CHECK(t.cn[i] == r.cn[i]);
    CHECK(t.g2[i] == r.g2[i]);
    CHECK(t.sigma_g2[i] == r.g2_sigma[i]);
  }
  CHECK(t.curve().t_ns[3] == 0.5);
  write_text(dir / "bad.csv", "t_ns,c\n1,2\n");
  CHECK_THROWS_AS(read_correlation_csv(dir / "bad.csv"), DataError);
}

TEST_CASE("config parsing") {
  const std::string text = R"(
# comment
[run]
seed = 1234
duration_s = 2.5

[emitter]
preset = paper
count = 2
power_mW = 5

[emitter_2]
preset = unshelved
pump_rate = 0.01
x_um = 0.4

[detection]
preset = ideal
background_rate = 100

[correlator]
bin_width_ns = 0.25
t_max_ns = 30
delay_ns = 40.0005
rho = 0.5
start_stop = yes

[scan]
preset = empty
power_mW = 10
)";
  const ExperimentConfig c = parse_config(text);
  CHECK(c.seed == std::optional<std::uint64_t>(1234));
  CHECK(c.duration() == 2'500'000'000'000);
  REQUIRE(c.emitters.size() == 2);
  CHECK(c.emitters[0].count == 2);
  CHECK(c.emitters[0].params.pump_rate == doctest::Approx(paper_emitter().pump_per_mW * 5.0));
  CHECK(c.emitters[1].params.shelve_rate == 0.0);
  CHECK(c.emitters[1].params.pump_rate == 0.01);
  CHECK(c.emitters[1].params.position.x_um == 0.4);
  CHECK(c.emitter_list().size() == 3);
  CHECK(c.detection.dead_time_ns == 0.0);
  CHECK(c.detection.background_rate_per_detector == 100.0);
  CHECK(c.correlator.bin_width == 250);
  CHECK(c.correlator.t_max == 30'000);
  CHECK(c.correlator.delay == 40'000);  // 40000.5 ps rounds to even
  CHECK(c.rho == std::optional<double>(0.5));
  CHECK(c.start_stop);
  CHECK(c.scan.emitters.empty());
  CHECK(c.scan.power_mW == 10.0);

  const ExperimentConfig again = parse_config(c.to_ini());
  CHECK(again.to_ini() == c.to_ini());
  CHECK(again.emitter_list() == c.emitter_list());

  CHECK_THROWS_AS(parse_config("[run]\nsed = 3\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[bogus]\nx = 1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[emitter]\npreset = nope\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[correlator]\nbin_width_ns = abc\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[correlator]\nbin_width_ns = 3\nt_max_ns = 10\n"), ParameterError);
  CHECK_THROWS_AS(default_config().require_seed(), ParameterError);
  CHECK(preset_hash(paper_emitter().params) == preset_hash(paper_emitter().params));
  CHECK(preset_hash(paper_emitter().params) != preset_hash(paper_emitter().at_power(14.0)));
}

TEST_CASE("simulate is deterministic and reproducible from its manifest") {
  ExperimentConfig c = default_config();
  c.seed = 17;
  c.duration_s = 0.05;
  const fs::path a = scratch("sim_a"), b = scratch("sim_b"), d = scratch("sim_det");
  cmd_simulate(c, a);
  cmd_simulate(c, b);
  for (const char* f : {"photons.bin", "photons.bin.src", "photons.bin.hdr", "clicks_1.bin", "clicks_2.bin",
                        "clicks_1.bin.hdr", "manifest.json", "config.ini"})
    CHECK(bytes(a / f) == bytes(b / f));

  // the recorded config reproduces the run
  const ExperimentConfig replay = load_config(a / "config.ini");
  const fs::path r = scratch("sim_replay");
  cmd_simulate(replay, r);
  CHECK(bytes(r / "clicks_1.bin") == bytes(a / "clicks_1.bin"));

  // detect on the stored photons gives the same clicks
  cmd_detect(c, a / "photons.bin", d);
  CHECK(bytes(d / "clicks_1.bin") == bytes(a / "clicks_1.bin"));
  CHECK(bytes(d / "clicks_2.bin") == bytes(a / "clicks_2.bin"));

  c.duration_s = 0.0;
  const fs::path z = scratch("sim_zero");
  const Json m = cmd_simulate(c, z);
  CHECK(fs::file_size(z / "photons.bin") == 0);
  CHECK(read_click_record(z / "clicks_1.bin").empty());
  CHECK(m["results"]["clicks_1"] == 0);
}

TEST_CASE("correlate command") {
  const fs::path dir = scratch("cor");
  ClickRecord a{{100, 5000}, 1, 10'000}, b{{100, 2000}, 2, 10'000}, c{{1}, 2, 20'000};
  write_click_record(dir / "a.bin", a);
  write_click_record(dir / "b.bin", b);
  write_click_record(dir / "c.bin", c);
  CorrelatorSettings s;
  s.bin_width = 1000;
  s.t_max = 5000;
  cmd_correlate(dir / "a.bin", dir / "b.bin", s, 1.0, false, dir / "out");
  const CorrelationTable t = read_correlation_csv(dir / "out" / "correlation.csv");
  CHECK(t.cn == t.g2);  // rho = 1
  CHECK_THROWS_AS(cmd_correlate(dir / "a.bin", dir / "c.bin", s, 1.0, false, dir / "out2"), DataError);
}

TEST_CASE("fit command on synthetic and flat input") {
  const fs::path dir = scratch("fit");
  CoincidenceHistogram h;
  h.bin_width = 1000;
  h.first_edge = -200'000;
  h.duration_s = 1.0;
  h.rate1 = h.rate2 = 1e4;
  h.counts.assign(400, 100);
  write_correlation_csv(dir / "flat.csv", correlate(h, 1.0));
  const FitCommandResult flat = cmd_fit(dir / "flat.csv", dir / "flat");
  CHECK(flat.fit.degenerate);
  CHECK(fs::exists(dir / "flat" / "fit.txt"));

  // noiseless model in the CSV format
  std::string csv = "# w_ns = 1\nt_ns,c,C_N,g2,sigma_g2\n";
  const G2Decomposition truth{8.74, 390.8, 0.2857};
  for (int i = -500; i < 500; ++i) {
    const double g = model_g2(i + 0.5, truth);
    char line[128];
    std::snprintf(line, sizeof line, "%d,0,%.17g,%.17g,0.05\n", i, g, g);
    csv += line;
  }
  write_text(dir / "model.csv", csv);
  const FitCommandResult f = cmd_fit(dir / "model.csv", dir / "model");
  CHECK(f.fit.converged);
  CHECK(f.fit.tau1_ns == doctest::Approx(8.74).epsilon(1e-6));
  CHECK(f.fit.tau2_ns == doctest::Approx(390.8).epsilon(1e-6));
  CHECK(f.fit.a == doctest::Approx(0.2857).epsilon(1e-6));
}

TEST_CASE("scan command") {
  ExperimentConfig c = default_config();
  c.seed = 5;
  const fs::path a = scratch("scan_a"), b = scratch("scan_b"), e = scratch("scan_empty");
  const ScanCommandResult ra = cmd_scan(c, a);
  cmd_scan(c, b);
  CHECK(bytes(a / "scan.csv") == bytes(b / "scan.csv"));
  CHECK(bytes(a / "scan.pgm") == bytes(b / "scan.pgm"));
  CHECK(ra.fit.peak_found);
  CHECK(ra.fit.rho == doctest::Approx(0.34).epsilon(0.15));
  CHECK(bytes(a / "scan.pgm").substr(0, 2) == "P5");
  c.scan.emitters.clear();
  const ScanCommandResult re = cmd_scan(c, e);
  CHECK_FALSE(re.fit.peak_found);
  CHECK(re.fit.rho == 0.0);
}
