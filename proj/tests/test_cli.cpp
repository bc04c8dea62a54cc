// End-to-end checks of the command-line tool: every subcommand is run as a
// child process against files in a temporary directory, exactly the way a
// user drives it.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "cqnc/cqnc.hpp"
#include "test_helpers.hpp"

using namespace cqnc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path dir;
  TempDir() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("cqnc_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string file(const std::string& name) const {
    return (dir / name).string();
  }
};

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const TempDir& tmp, const std::string& args) {
  static int counter = 0;
  const std::string out = tmp.file("stdout_" + std::to_string(counter));
  const std::string err = tmp.file("stderr_" + std::to_string(counter));
  ++counter;
  const std::string cmd =
      cli_path() + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Reference apparatus in the flat file layout the tool reads.
json reference_params() {
  json j;
  j["kappa_a_hz"] = 160.0e3;
  j["delta_a_hz"] = -710.0e3;
  j["kappa_c_hz"] = 980.0e3;
  j["delta_c_hz"] = 0.0;
  j["g_bs_hz"] = 175.0e3;
  j["g_dc_hz"] = 175.0e3;
  j["eta"] = 0.54;
  j["kappa_om_hz"] = 1.0e6;
  j["delta_om_hz"] = 0.0;
  j["omega_m_hz"] = 710.0e3;
  j["gamma_m_hz"] = 1.0;
  j["g_om_hz"] = 350.0e3;
  return j;
}

json band_json(double f_min, double f_max, std::size_t n,
               const std::string& spacing) {
  json b;
  b["f_min_hz"] = f_min;
  b["f_max_hz"] = f_max;
  b["n_points"] = n;
  b["spacing"] = spacing;
  return b;
}

// Writes params + config side by side and returns the config path.
std::string write_config(const TempDir& tmp, const json& params,
                         std::size_t n_points = 20) {
  json_to_file(tmp.file("params.json"), params);
  json cfg;
  cfg["params"] = "params.json";  // relative to the config file
  cfg["band"] = band_json(35.5e3, 2.13e6, n_points, "log");
  json_to_file(tmp.file("config.json"), cfg);
  return tmp.file("config.json");
}

}  // namespace

TEST_CASE("simulate writes deterministic model-exact curves", "[cli]") {
  TempDir tmp;
  json params = reference_params();
  params["psi_rad"] = std::vector<double>{0.0, 0.7};
  const std::string cfg = write_config(tmp, params);

  const CliRun first = run_cli(
      tmp, "simulate --config " + cfg + " --out " + tmp.file("run1"));
  INFO(first.err);
  REQUIRE(first.exit_code == 0);
  const CliRun second = run_cli(
      tmp, "simulate --config " + cfg + " --out " + tmp.file("run2"));
  REQUIRE(second.exit_code == 0);

  // Byte-identical reruns, including the provenance stamp.
  for (const std::string name :
       {"variance_0.csv", "variance_0.7.csv", "simulate.json"}) {
    const std::string a = slurp(tmp.file("run1/" + name));
    const std::string b = slurp(tmp.file("run2/" + name));
    REQUIRE_FALSE(a.empty());
    CHECK(a == b);
  }
  const std::string stamp = slurp(tmp.file("run1/variance_0.csv"));
  CHECK(stamp.rfind("# cqnc ", 0) == 0);
  CHECK(stamp.find("; config ") != std::string::npos);
  CHECK(stamp.find("; variant as-printed") != std::string::npos);

  // Values on disk equal the model bitwise (the linear format scales by a
  // power of two in both directions).
  const FitParams p = fit_params_from_json(params, "test params");
  const Trace t = read_trace_csv(tmp.file("run1/variance_0.7.csv"));
  REQUIRE(t.values.size() == 20);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < t.values.size(); ++i)
    if (t.values[i] !=
        model_variance(p, 0, rad_from_hz(t.frequencies_hz[i]), 0.7))
      ++mismatches;
  CHECK(mismatches == 0);
}

TEST_CASE("simulate with zero coupling writes flat vacuum curves", "[cli]") {
  TempDir tmp;
  json params = reference_params();
  params["g_bs_hz"] = 0.0;
  params["g_dc_hz"] = 0.0;
  params["eta"] = 1.0;
  const std::string cfg = write_config(tmp, params);

  const CliRun r =
      run_cli(tmp, "simulate --config " + cfg + " --out " + tmp.file("out"));
  REQUIRE(r.exit_code == 0);
  const Trace t = read_trace_csv(tmp.file("out/variance_0.csv"));
  for (const double v : t.values) CHECK(v == vacuum_variance);
}

TEST_CASE("project emits baseline, cascade and reduction", "[cli]") {
  TempDir tmp;
  const std::string cfg = write_config(tmp, reference_params(), 50);

  const CliRun r =
      run_cli(tmp, "project --config " + cfg + " --out " + tmp.file("out"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  const std::string csv = slurp(tmp.file("out/projection.csv"));
  REQUIRE_FALSE(csv.empty());
  CHECK(csv.find("frequency_hz,s_oms_reconstructed_linear,s_cqnc_linear,"
                 "reduction_db,fraction") != std::string::npos);

  const json summary = json_from_file(tmp.file("out/summary.json"));
  CHECK(summary.at("guard_band_hz").get<double>() ==
        Catch::Approx(10.0).epsilon(1e-12));
  CHECK(summary.contains("max_reduction_db"));
  CHECK(summary.contains("no_cancellation"));
  CHECK(summary.at("provenance").at("variant") == "as-printed");

  const std::string svg = slurp(tmp.file("out/projection.svg"));
  CHECK(svg.find("frequency / omega_m") != std::string::npos);
  CHECK(svg.find("dB rel. shot noise") != std::string::npos);

  // Determinism of the whole artifact set.
  const CliRun again =
      run_cli(tmp, "project --config " + cfg + " --out " + tmp.file("out2"));
  REQUIRE(again.exit_code == 0);
  CHECK(slurp(tmp.file("out2/projection.csv")) == csv);
  CHECK(slurp(tmp.file("out2/summary.json")) ==
        slurp(tmp.file("out/summary.json")));
}

TEST_CASE("the variant flag switches the coupling convention", "[cli]") {
  TempDir tmp;
  const std::string cfg = write_config(tmp, reference_params(), 50);

  const CliRun printed = run_cli(
      tmp, "project --config " + cfg + " --variant as-printed --out " +
               tmp.file("ap"));
  const CliRun meter = run_cli(
      tmp, "project --config " + cfg + " --variant meter-analogy --out " +
               tmp.file("ma"));
  REQUIRE(printed.exit_code == 0);
  REQUIRE(meter.exit_code == 0);

  const json a = json_from_file(tmp.file("ap/summary.json"));
  const json b = json_from_file(tmp.file("ma/summary.json"));
  CHECK(a.at("provenance").at("variant") == "as-printed");
  CHECK(b.at("provenance").at("variant") == "meter-analogy");
  // The two conventions disagree away from resonance, so the recorded
  // maxima cannot coincide.
  CHECK(a.at("max_reduction_db").get<double>() !=
        b.at("max_reduction_db").get<double>());
}

TEST_CASE("tomo writes the ellipse spectrum in all three formats", "[cli]") {
  TempDir tmp;
  const std::string cfg = write_config(tmp, reference_params(), 30);

  const CliRun r =
      run_cli(tmp, "tomo --config " + cfg + " --out " + tmp.file("out"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  const std::string csv = slurp(tmp.file("out/ellipses.csv"));
  CHECK(csv.find("frequency_hz,v_min,v_max,angle_rad") != std::string::npos);

  const json j = json_from_file(tmp.file("out/ellipses.json"));
  CHECK(j.at("eta").get<double>() == 0.54);
  REQUIRE(j.at("ellipses").size() == 30);
  for (const auto& e : j.at("ellipses")) {
    CHECK(e.at("v_min").get<double>() <= e.at("v_max").get<double>());
    CHECK(e.at("physical").get<bool>());
  }
  CHECK_FALSE(slurp(tmp.file("out/ellipses.svg")).empty());
}

TEST_CASE("synth and fit round trip through the file formats", "[cli]") {
  TempDir tmp;

  json truth = reference_params();
  truth["delta_a_hz"] = std::vector<double>{-710.0e3, -600.0e3};
  json_to_file(tmp.file("truth.json"), truth);

  json design;
  design["detunings_hz"] = std::vector<double>{-710.0e3, -600.0e3};
  design["angles_rad"] = std::vector<double>{0.35, 1.9207963267948966};
  design["band"] = band_json(35.5e3, 2.13e6, 60, "log");
  design["noise_level"] = 0.0;
  design["seed"] = 3;
  json_to_file(tmp.file("design.json"), design);

  const CliRun synth = run_cli(
      tmp, "synth --truth " + tmp.file("truth.json") + " --design " +
               tmp.file("design.json") + " --out " + tmp.file("data"));
  INFO(synth.err);
  REQUIRE(synth.exit_code == 0);
  CHECK(synth.out.find("manifest.json") != std::string::npos);
  CHECK(synth.out.find("4 traces") != std::string::npos);

  json init = reference_params();
  init["g_bs_hz"] = 210.0e3;  // 20 percent high
  init["g_dc_hz"] = 210.0e3;
  init["kappa_a_hz"] = 128.0e3;  // 20 percent low
  init["delta_a_hz"] = std::vector<double>{-816.5e3, -690.0e3};
  init["eta"] = 0.648;
  init["psi_rad"] = std::vector<double>{0.6, 2.17, 0.6, 2.17};
  json_to_file(tmp.file("init.json"), init);

  const CliRun fit = run_cli(
      tmp, "fit --manifest " + tmp.file("data/manifest.json") + " --init " +
               tmp.file("init.json") + " --out " + tmp.file("fit"));
  INFO(fit.err);
  REQUIRE(fit.exit_code == 0);

  const json result = json_from_file(tmp.file("fit/fit_result.json"));
  CHECK(result.at("converged").get<bool>());
  const json& best = result.at("best");
  CHECK(rel_err(best.at("g_a_hz").get<double>(), 350.0e3) < 1e-6);
  CHECK(rel_err(best.at("kappa_a_hz").get<double>(), 160.0e3) < 1e-6);
  CHECK(rel_err(best.at("delta_a_hz")[0].get<double>(), -710.0e3) < 1e-6);
  CHECK(rel_err(best.at("delta_a_hz")[1].get<double>(), -600.0e3) < 1e-6);
  CHECK(best.at("eta").get<double>() == Catch::Approx(0.54).margin(1e-6));
  CHECK(result.at("provenance").contains("config_hash"));

  const json ident = json_from_file(tmp.file("fit/identifiability.json"));
  bool split_reported = false;
  for (const auto& u : ident.at("unidentifiable"))
    if (u.get<std::string>().find("g_bs_hz/g_dc_hz") != std::string::npos)
      split_reported = true;
  CHECK(split_reported);

  const std::string residuals = slurp(tmp.file("fit/residual_0.csv"));
  CHECK(residuals.find("frequency_hz,data_linear,model_linear,residual") !=
        std::string::npos);
  CHECK(fs::exists(tmp.file("fit/residual_3.csv")));
}

TEST_CASE("a capped fit exits with the non-convergence code", "[cli]") {
  TempDir tmp;

  json truth = reference_params();
  json_to_file(tmp.file("truth.json"), truth);
  json design;
  design["detunings_hz"] = std::vector<double>{-710.0e3};
  design["angles_rad"] = std::vector<double>{0.35, 1.9207963267948966};
  design["band"] = band_json(35.5e3, 2.13e6, 40, "log");
  design["noise_level"] = 0.01;
  design["seed"] = 7;
  json_to_file(tmp.file("design.json"), design);
  REQUIRE(run_cli(tmp, "synth --truth " + tmp.file("truth.json") +
                           " --design " + tmp.file("design.json") + " --out " +
                           tmp.file("data"))
              .exit_code == 0);

  json init = reference_params();
  init["kappa_a_hz"] = 128.0e3;
  init["psi_rad"] = std::vector<double>{0.6, 2.17};
  json_to_file(tmp.file("init.json"), init);

  const CliRun fit = run_cli(
      tmp, "fit --manifest " + tmp.file("data/manifest.json") + " --init " +
               tmp.file("init.json") + " --max-iter 1 --out " +
               tmp.file("fit"));
  CHECK(fit.exit_code == 3);
  CHECK(fit.err.find("did not converge") != std::string::npos);

  // The best iterate is still written for inspection.
  const json result = json_from_file(tmp.file("fit/fit_result.json"));
  CHECK_FALSE(result.at("converged").get<bool>());
  CHECK(result.at("message").get<std::string>() == "iteration limit reached");
}

TEST_CASE("input errors exit with code 2 and a diagnostic", "[cli]") {
  TempDir tmp;

  // Missing required key in the parameter file.
  json broken = reference_params();
  broken.erase("kappa_a_hz");
  const std::string cfg = write_config(tmp, broken);
  const CliRun sim =
      run_cli(tmp, "simulate --config " + cfg + " --out " + tmp.file("out"));
  CHECK(sim.exit_code == 2);
  CHECK(sim.err.find("error:") != std::string::npos);
  CHECK(sim.err.find("kappa_a_hz") != std::string::npos);

  // Nonexistent manifest.
  json_to_file(tmp.file("init.json"), reference_params());
  const CliRun fit = run_cli(
      tmp, "fit --manifest " + tmp.file("nope/manifest.json") + " --init " +
               tmp.file("init.json"));
  CHECK(fit.exit_code == 2);
  CHECK(fit.err.find("nope/manifest.json") != std::string::npos);

  // Truncated trace data named with file and line.
  json manifest;
  manifest["traces"] = json::array();
  json entry;
  entry["file"] = "trace_0.csv";
  entry["detuning_hz"] = -710.0e3;
  manifest["traces"].push_back(entry);
  json_to_file(tmp.file("manifest.json"), manifest);
  write_file(tmp.file("trace_0.csv"),
             "frequency_hz,variance_linear\n1000,1\n2000\n");
  const CliRun bad = run_cli(
      tmp, "fit --manifest " + tmp.file("manifest.json") + " --init " +
               tmp.file("init.json"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("trace_0.csv:3") != std::string::npos);

  // A positive "squeezing" level is not a squeezed quadrature.
  json_to_file(tmp.file("budget.json"), json::array());
  const CliRun noisy = run_cli(
      tmp, "budget --budget " + tmp.file("budget.json") +
               " --sqz-db 1.0 --antisqz-db 6.0");
  CHECK(noisy.exit_code == 2);
}

TEST_CASE("check reports mismatches without failing", "[cli]") {
  TempDir tmp;
  json enmo = reference_params();
  enmo["fsr_hz"] = 197.4e6;
  json_to_file(tmp.file("enmo.json"), enmo);
  json_to_file(tmp.file("oms.json"), reference_params());

  const CliRun r = run_cli(
      tmp, "check --enmo " + tmp.file("enmo.json") + " --oms " +
               tmp.file("oms.json") + " --out " + tmp.file("out"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);  // mismatches are findings, not failures
  CHECK(r.out.find("MISMATCH") != std::string::npos);
  CHECK(r.out.find("ok") != std::string::npos);

  const json j = json_from_file(tmp.file("out/matching.json"));
  CHECK_FALSE(j.at("all_matched").get<bool>());
  CHECK(j.at("conditions").size() == 6);
  CHECK_FALSE(slurp(tmp.file("out/matching.txt")).empty());
}

TEST_CASE("budget compares the product against the measured squeezing",
          "[cli]") {
  TempDir tmp;
  json budget = json::array();
  const std::vector<std::tuple<std::string, double, double>> rows = {
      {"cavity escape", 0.91, 0.04},  {"propagation", 0.999, 0.001},
      {"mode matching", 0.90, 0.04},  {"photodiode", 0.97, 0.02},
      {"homodyne visibility", 0.684, 0.005}};
  for (const auto& [name, eta, sigma] : rows) {
    json ch;
    ch["name"] = name;
    ch["eta"] = eta;
    ch["sigma"] = sigma;
    budget.push_back(ch);
  }
  json_to_file(tmp.file("budget.json"), budget);

  const CliRun r = run_cli(
      tmp, "budget --budget " + tmp.file("budget.json") +
               " --sqz-db -2.6 --antisqz-db 6.0 --out " + tmp.file("out"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("consistent") != std::string::npos);

  const json j = json_from_file(tmp.file("out/budget.json"));
  CHECK(j.at("total_efficiency").get<double>() ==
        Catch::Approx(0.54284672988).epsilon(1e-9));
  CHECK(j.at("measured_eta").get<double>() ==
        Catch::Approx(0.5306426461237929).epsilon(1e-12));
  CHECK(j.at("consistent").get<bool>());
  CHECK(j.at("channels").size() == 5);

  // A strict acceptance multiple flips the verdict but not the exit code.
  const CliRun strict = run_cli(
      tmp, "budget --budget " + tmp.file("budget.json") +
               " --sqz-db -2.6 --antisqz-db 6.0 --k 0.1 --out " +
               tmp.file("strict"));
  REQUIRE(strict.exit_code == 0);
  CHECK_FALSE(
      json_from_file(tmp.file("strict/budget.json")).at("consistent")
          .get<bool>());
}
