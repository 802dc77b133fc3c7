#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include "phonon/lab.hpp"

using namespace phonon;
using namespace phonon::lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("phononlab_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Cli {
  int code;
  std::string out;
};

Cli cli(const std::string& args) {
  auto log = scratch("cli.log");
  std::string cmd = std::string(PHONONLAB_EXE) + " " + args + " > " + log.string() + " 2>&1";
  int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(log)};
}

fs::path write_json(const std::string& name, const json& j) {
  auto p = scratch(name);
  std::ofstream(p) << j.dump(2);
  return p;
}

std::size_t count(const std::vector<Diagnostic>& d, Diagnostic::Level l) {
  std::size_t n = 0;
  for (const auto& x : d) n += x.level == l;
  return n;
}

}  // namespace

TEST_SUITE("lab") {
  TEST_CASE("defaults validate cleanly and match the shipped file") {
    CHECK(validate(default_config()).empty());
    auto shipped = read_config_file(fs::path(PHONON_SOURCE_DIR) / "configs" / "default.json");
    CHECK(shipped == default_config());
  }

  TEST_CASE("T2 beyond 2 T1 is a warning") {
    auto c = default_config();
    c["node1"]["coherence"]["uni"]["T2_echo_us"] = 3 * c["node1"]["coherence"]["uni"]["T1_us"].get<double>();
    auto d = validate(c);
    CHECK(d.size() == 1);
    CHECK(count(d, Diagnostic::Level::warning) == 1);
    CHECK(d[0].path == "node1.coherence.uni.T2_echo_us");
  }

  TEST_CASE("unknown scenario names the allowed set") {
    auto c = default_config();
    c["scenario"] = "teleport";
    auto d = validate(c);
    REQUIRE(d.size() == 1);
    CHECK(d[0].level == Diagnostic::Level::error);
    for (const auto& s : scenario_names()) CHECK(d[0].message.find(s) != std::string::npos);
  }

  TEST_CASE("schema errors") {
    auto c = default_config();
    c["channel"]["typo"] = 1;
    c["channel"]["length_mm"] = "two";
    c["schema_version"] = 9;
    c["sweep"]["phase_rad"]["steps"] = 0;
    auto d = validate(c);
    CHECK(count(d, Diagnostic::Level::error) >= 4);
    CHECK(has_errors(d));
    auto m = default_config();
    m.erase("bell");
    CHECK(has_errors(validate(m)));
  }

  TEST_CASE("overrides") {
    auto c = default_config();
    apply_override(c, "channel.loss_Np_per_m=0");
    apply_override(c, "readout.mode=corrected");
    apply_override(c, "branches.enabled=false");
    CHECK(c["channel"]["loss_Np_per_m"] == 0);
    CHECK(c["readout"]["mode"] == "corrected");
    CHECK(c["branches"]["enabled"] == false);
    CHECK_THROWS_AS(apply_override(c, "novalue"), SchemaError);
    CHECK_THROWS_AS(apply_override(c, "a..b=1"), SchemaError);
    CHECK_THROWS_AS(apply_override(c, "scenario.x=1"), SchemaError);
  }

  TEST_CASE("merge keeps user values and defaults") {
    json u = {{"channel", {{"length_mm", 3.0}}}};
    auto c = merge_defaults(u);
    CHECK(c["channel"]["length_mm"] == 3.0);
    CHECK(c["channel"]["velocity_m_per_s"] == 3863.0);
  }

  TEST_CASE("experiment mapping to SI") {
    auto e = build_experiment(default_config());
    CHECK(e.setup.channel.length == doctest::Approx(2e-3));
    CHECK(e.setup.kappa_c_uni == doctest::Approx(2 * M_PI * 10e6));
    CHECK(e.setup.uni_q1.t1 == doctest::Approx(51e-6));
    CHECK(e.setup.t_m == doctest::Approx(725e-9));
    CHECK(e.kappa_udt == doctest::Approx(147e6));
  }

  TEST_CASE("bell run is byte-identical with shots and reports its rows") {
    auto c = default_config();
    c["scenario"] = "bell";
    c["shots"] = 2000;
    c["seed"] = 5;
    c["readout"]["mode"] = "corrected";
    auto a = scratch("bell_a"), b = scratch("bell_b");
    run(c, a);
    run(c, b);
    for (const auto& f : fs::directory_iterator(a)) {
      auto name = f.path().filename();
      if (name == "timing.txt") continue;
      CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
    }
    auto rep = report_summary(a);
    for (const char* row : {"fidelity", "concurrence", "t_m_ns"}) CHECK(rep.find(row) != std::string::npos);
    c["seed"] = 6;
    auto d = scratch("bell_c");
    run(c, d);
    CHECK(slurp(a / "manifest.json") != slurp(d / "manifest.json"));
  }

  TEST_CASE("trajectory csv and svg") {
    netsim::Trajectory t;
    t.times = {0, 1e-9};
    t.pe_q1 = {1, 0.5};
    t.pe_q2 = {0, 0.25};
    t.field_energy = {0, 0.25};
    auto csv = trajectory_csv(t);
    CHECK(csv.rfind("t_ns,Pe_Q1,Pe_Q2,field_energy\n", 0) == 0);
    CHECK(csv.find("1,0.5,0.25,0.25") != std::string::npos);
    auto svg = svg_plot("a<b", "x", "y", {{"s", {0, 1}, {0, 1}}});
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
  }

  TEST_CASE("cli validate exit codes") {
    CHECK(cli("validate " + std::string(PHONON_SOURCE_DIR) + "/configs/default.json").code == 0);
    auto c = default_config();
    c["scenario"] = "teleport";
    auto r = cli("validate " + write_json("bad.json", c).string());
    CHECK(r.code == 2);
    CHECK(r.out.find("loss-characterization") != std::string::npos);
    c = default_config();
    c["node2"]["coherence"]["bi"]["T2_ramsey_us"] = 100.0;
    r = cli("validate " + write_json("warn.json", c).string());
    CHECK(r.code == 0);
    CHECK(r.out.find("warning") != std::string::npos);
    CHECK(cli("validate /nonexistent/cfg.json").code == 4);
    auto broken = scratch("broken.json");
    std::ofstream(broken) << "{ not json";
    CHECK(cli("validate " + broken.string()).code == 2);
  }

  TEST_CASE("cli run and report") {
    auto out = scratch("cli_loss");
    auto r = cli("run loss-characterization --out " + out.string());
    CHECK(r.code == 0);
    auto rep = cli("report " + out.string());
    CHECK(rep.code == 0);
    CHECK(rep.out.find("T_saw") != std::string::npos);
    auto missing = cli("report " + scratch("empty").string());
    CHECK(missing.code == 4);
    CHECK(missing.out.find("manifest.json") != std::string::npos);
    CHECK(cli("run teleport").code == 2);
    CHECK(cli("run bell --set channel.length_mm=-1 --out " + scratch("neg").string()).code == 2);
    CHECK(cli("run bell --out /proc/phononlab_cannot_write").code == 4);
  }

  TEST_CASE("cli engine failure exit code") {
    // A sub-step delay makes the channel incommensurate for the cascade.
    auto r = cli("run transfer --set channel.length_mm=1e-9 --out " + scratch("tiny").string());
    CHECK(r.code == 3);
  }
}
