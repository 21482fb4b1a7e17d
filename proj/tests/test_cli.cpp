#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "egfet/data_io.hpp"
#include "egfet/extraction.hpp"
#include "egfet/model.hpp"

using namespace egfet;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + EGFET_CLI_PATH + std::string(" ") + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "egfet_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

int status_of(Errc code) { return 10 + static_cast<int>(code); }

}  // namespace

TEST_CASE("simulate writes a 41-point default sweep from the forward model") {
  const auto dir = fresh_dir("simulate");
  const auto r = run("simulate --vt 1.6 --mu0 500 --theta 0.12 --rsd 50 --vds 0.4 --grid 0:4:0.1 --out " + q(dir));
  REQUIRE(r.status == 0);
  CHECK_THAT(r.out, ContainsSubstring("mu_0 = 500 cm2/Vs"));
  const auto s = io::read_gate_sweep(dir / "gate_sweep.csv").value;
  REQUIRE(s.size() == 41);
  const ModelParams p{1.6, 0.05, 0.12, 50.0};
  for (const auto& pt : s.points) {
    if (pt.v <= 1.6) CHECK(pt.i == 0.0);
    else CHECK(pt.i == ids_implicit(DeviceSpec::reference_egfet(), p, {pt.v, 0.4}));
  }
  // transconductance rises to an interior peak and falls
  CHECK_NOTHROW(peak_gm_extract(s));
}

TEST_CASE("simulate is deterministic") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  const std::string args = "simulate --noise 0.01 --seed 1 --family-vgs 2:3:0.5 ";
  REQUIRE(run(args + "--out " + q(a)).status == 0);
  REQUIRE(run(args + "--out " + q(b)).status == 0);
  CHECK(io::read_file(a / "gate_sweep.csv") == io::read_file(b / "gate_sweep.csv"));
  CHECK(io::read_file(a / "drain_family.csv") == io::read_file(b / "drain_family.csv"));
  REQUIRE(run("simulate --noise 0 --seed 1 --out " + q(a)).status == 0);
  REQUIRE(run("simulate --noise 0 --seed 1 --out " + q(b)).status == 0);
  CHECK(io::read_file(a / "gate_sweep.csv") == io::read_file(b / "gate_sweep.csv"));
}

TEST_CASE("extract recovers the simulated threshold") {
  const auto dir = fresh_dir("extract");
  REQUIRE(run("simulate --vt 1.6 --out " + q(dir)).status == 0);
  const auto r = run("extract --gate " + q(dir / "gate_sweep.csv") + " --method ids_gm --reference-device --rsd 50 --out " +
                     q(dir));
  REQUIRE(r.status == 0);
  const auto rep = io::read_report(dir / "ids_gm.json");
  CHECK(std::abs(rep.v_t.value - 1.6) < 0.01);
  CHECK_THAT(r.out, ContainsSubstring("mu_0 (cm2/Vs)"));
  CHECK_FALSE(fs::exists(dir / "inv_ids.json"));
}

TEST_CASE("extract --method all on a gate sweep skips the g_ds method") {
  const auto dir = fresh_dir("all");
  REQUIRE(run("simulate --out " + q(dir)).status == 0);
  const auto r = run("extract --gate " + q(dir / "gate_sweep.csv") + " --reference-device --rsd 50 --plot --out " + q(dir));
  CHECK(r.status == 0);
  CHECK_THAT(r.out, ContainsSubstring("gds skipped"));
  for (const char* m : {"peak_gm", "ids_gm", "inv_ids"}) {
    CHECK(fs::exists(dir / (std::string(m) + ".json")));
    CHECK(fs::exists(dir / (std::string(m) + ".svg")));
  }
  CHECK_FALSE(fs::exists(dir / "gds.json"));
  CHECK(fs::exists(dir / "iv.svg"));
  const auto rep = io::read_report(dir / "ids_gm.json");
  CHECK(std::any_of(rep.diagnostics.begin(), rep.diagnostics.end(),
                    [](const std::string& d) { return d.find("gds skipped") != std::string::npos; }));
}

TEST_CASE("extract --rsd auto uses the output-resistance estimate") {
  const auto dir = fresh_dir("auto");
  REQUIRE(run("simulate --family-vgs 2:4.5:0.5 --out " + q(dir)).status == 0);
  const auto r = run("extract --gate " + q(dir / "gate_sweep.csv") + " --family " + q(dir / "drain_family.csv") +
                     " --reference-device --rsd auto --out " + q(dir));
  REQUIRE(r.status == 0);
  const auto gate = io::read_gate_sweep(dir / "gate_sweep.csv").value;
  const auto fam = io::read_drain_family(dir / "drain_family.csv").value;
  const double expect = rsd_output_resistance(fam, peak_gm_extract(gate).v_t.value).r_sd.value;
  for (const char* m : {"ids_gm", "inv_ids", "gds"}) CHECK(io::read_report(dir / (std::string(m) + ".json")).r_sd_used == expect);
}

TEST_CASE("configuration errors exit non-zero") {
  const auto dir = fresh_dir("errors");
  REQUIRE(run("simulate --out " + q(dir)).status == 0);
  const auto gate = q(dir / "gate_sweep.csv");
  CHECK(run("extract --gate " + gate + " --out " + q(dir)).status == status_of(Errc::InvalidArgument));
  CHECK(run("extract --gate " + gate + " --reference-device --rsd auto --out " + q(dir)).status ==
        status_of(Errc::InvalidArgument));
  CHECK(run("extract --gate " + gate + " --width 4.5 --reference-device --method peak_gm --out " + q(dir)).status == 0);
  CHECK(run("extract --gate " + gate + " --width 4.5 --method ids_gm --out " + q(dir)).status ==
        status_of(Errc::InvalidArgument));
  CHECK(run("extract --gate " + q(dir / "missing.csv") + " --method peak_gm").status == status_of(Errc::IoError));
  CHECK(run("simulate --mu0 -3 --out " + q(dir)).status == status_of(Errc::InvalidArgument));
  CHECK(run("frobnicate").status == 2);
  CHECK(run("").status == 2);
}

TEST_CASE("output directory defaults to the environment variable") {
  const auto dir = fresh_dir("env");
  REQUIRE(run("simulate", "EGFET_OUT_DIR=" + q(dir)).status == 0);
  CHECK(fs::exists(dir / "gate_sweep.csv"));
}

TEST_CASE("help documents boundary units") {
  for (const char* sub : {"simulate", "extract", "rsd", "compare", "plot"}) {
    const auto r = run(std::string(sub) + " --help");
    CHECK(r.status == 0);
    CHECK_THAT(r.out, ContainsSubstring("cm2/Vs"));
    CHECK_THAT(r.out, ContainsSubstring("F/cm2"));
    CHECK_THAT(r.out, ContainsSubstring("ohm"));
  }
}

TEST_CASE("compare on published reference reports") {
  const auto dir = fresh_dir("compare");
  const fs::path fx = EGFET_FIXTURE_DIR "/published";
  const auto r = run("compare " + q(fx / "di_water_ids_gm.json") + " " + q(fx / "poly_aspartic_acid_ids_gm.json") +
                     " --reference 'DI water' --out " + q(dir));
  REQUIRE(r.status == 0);
  CHECK_THAT(r.out, ContainsSubstring("+0.0780"));
  const auto j = nlohmann::json::parse(io::read_file(dir / "shift_table.json"));
  bool found = false;
  for (const auto& row : j["rows"])
    if (row["label"] == "poly-aspartic acid") {
      CHECK(std::abs(row["delta_v_t"].get<double>() - 0.078) < 1e-12);
      found = true;
    }
  CHECK(found);

  const auto self = run("compare " + q(fx / "di_water_ids_gm.json") + " " + q(fx / "di_water_ids_gm.json") +
                        " --reference 'DI water' --out " + q(dir));
  CHECK(self.status == 0);
  CHECK_THAT(self.out, ContainsSubstring("+0.0000"));
  CHECK(run("compare " + q(fx / "di_water_ids_gm.json") + " " + q(fx / "poly_l_lysine_ids_gm.json") +
            " --reference water --out " + q(dir))
            .status == status_of(Errc::MissingReference));
}

TEST_CASE("compare sees a simulated threshold increase") {
  const auto base = fresh_dir("shift_base");
  const auto up = fresh_dir("shift_up");
  REQUIRE(run("simulate --vt 1.6 --label ref --out " + q(base)).status == 0);
  REQUIRE(run("simulate --vt 1.7 --label raised --out " + q(up)).status == 0);
  const auto r = run("compare " + q(base / "gate_sweep.csv") + " " + q(up / "gate_sweep.csv") +
                     " --reference-device --rsd 50 --reference ref --out " + q(base));
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(io::read_file(base / "shift_table.json"));
  int raised = 0;
  for (const auto& row : j["rows"])
    if (row["label"] == "raised") {
      CHECK(std::abs(row["delta_v_t"].get<double>() - 0.1) < 0.01);
      ++raised;
    }
  CHECK(raised == 3);
}

TEST_CASE("rsd subcommand runs both estimators") {
  const auto dir = fresh_dir("rsd");
  REQUIRE(run("simulate --theta 0 --rsd 0 --family-vgs 2:4.5:0.5 --model simplified --out " + q(dir)).status == 0);
  std::string devices;
  for (const char* l : {"1.5", "3", "6"}) {
    const auto sub = dir / (std::string("L") + l);
    const double length = std::stod(l) - 0.2;
    REQUIRE(run("simulate --theta 0 --rsd 50 --model simplified --length " + std::to_string(length) + " --out " +
                q(sub))
                .status == 0);
    devices += " --device-sweep " + std::string(l) + "=" + q(sub / "gate_sweep.csv");
  }
  const auto r = run("rsd --family " + q(dir / "drain_family.csv") + " --vt-hint 1.6" + devices + " --out " + q(dir));
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(io::read_file(dir / "rsd.json"));
  CHECK(std::abs(j["output_resistance"]["r_sd"]["value"].get<double>()) < 1e-6);
  CHECK(std::abs(j["intersection"]["r_sd"]["value"].get<double>() - 50.0) < 1.0);
  CHECK(std::abs(j["intersection"]["delta_l"]["value"].get<double>() - 0.2) < 0.004);
  CHECK(run("rsd --device-sweep 1.5=" + q(dir / "L1.5" / "gate_sweep.csv") + " --out " + q(dir)).status ==
        status_of(Errc::InsufficientDevices));
}

TEST_CASE("plot subcommand is deterministic and annotates V_T") {
  const auto dir = fresh_dir("plot");
  REQUIRE(run("simulate --out " + q(dir)).status == 0);
  REQUIRE(run("extract --gate " + q(dir / "gate_sweep.csv") + " --reference-device --rsd 50 --out " + q(dir)).status == 0);
  const auto a = fresh_dir("plot_a");
  const auto b = fresh_dir("plot_b");
  const std::string args = "plot " + q(dir / "ids_gm.json") + " " + q(dir / "peak_gm.json") + " --gate " +
                           q(dir / "gate_sweep.csv") + " --out ";
  REQUIRE(run(args + q(a)).status == 0);
  REQUIRE(run(args + q(b)).status == 0);
  for (const char* f : {"ids_gm.svg", "peak_gm.svg", "iv.svg"}) CHECK(io::read_file(a / f) == io::read_file(b / f));
  CHECK_THAT(io::read_file(a / "ids_gm.svg"), ContainsSubstring("V_T = 1.6"));
  CHECK(run("plot --out " + q(a)).status == status_of(Errc::EmptyPlot));
}
