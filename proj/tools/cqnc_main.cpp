// Command-line surface of the cqnc library: spectrum simulation, CQNC
// projection, dataset synthesis and fitting, ellipse tomography, matching
// checks and efficiency budgets.  Every command is deterministic for a
// given configuration and seed, and every output file carries a provenance
// stamp (tool version, configuration hash, G_a variant).
//
// Exit codes: 0 success, 2 input error, 3 flagged numerical non-convergence.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnc/cqnc.hpp"

namespace {

namespace fs = std::filesystem;
using cqnc::json;

constexpr int exit_ok = 0;
constexpr int exit_input_error = 2;
constexpr int exit_not_converged = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string format = "both";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_config = true) {
  if (with_config)
    cmd->add_option("--config", args.config_path,
                    "run configuration JSON (params path, band, seed, ...)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "random seed override");
  cmd->add_option("--variant", args.variant,
                  "G_a convention override: as-printed | meter-analogy");
  cmd->add_option("--format", args.format, "csv | json | both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
}

// Run configuration assembled from --config plus command-line overrides.
struct LoadedConfig {
  cqnc::RunConfig run;
  json params;           // parsed parameter file (flat layout)
  std::uint64_t hash = 0;  // provenance hash over config + parameter bytes
};

LoadedConfig load_config(const CommonArgs& args) {
  LoadedConfig lc;
  std::string hashed_bytes;
  if (!args.config_path.empty()) {
    const std::string bytes = cqnc::read_file(args.config_path);
    hashed_bytes += bytes;
    lc.run = cqnc::run_config_from_json(json::parse(bytes), args.config_path);
  }
  if (!args.out_dir.empty()) lc.run.out_dir = args.out_dir;
  if (args.seed) lc.run.seed = *args.seed;
  if (!args.variant.empty())
    lc.run.variant = cqnc::g_variant_from_string(args.variant);
  if (!args.format.empty()) lc.run.format = args.format;
  if (!lc.run.params_path.empty()) {
    // Parameter paths are relative to the config file that names them.
    fs::path p = lc.run.params_path;
    if (p.is_relative() && !args.config_path.empty())
      p = fs::path(args.config_path).parent_path() / p;
    const std::string bytes = cqnc::read_file(p.string());
    hashed_bytes += bytes;
    lc.params = json::parse(bytes);
  }
  lc.hash = cqnc::fnv1a_64(hashed_bytes);
  return lc;
}

bool want_csv(const cqnc::RunConfig& c) { return c.format != "json"; }
bool want_json(const cqnc::RunConfig& c) { return c.format != "csv"; }

cqnc::EnmoParams enmo_with_variant(const LoadedConfig& lc) {
  cqnc::EnmoParams p = cqnc::enmo_from_json(lc.params, "parameter file");
  if (lc.run.variant) p.g_strength_variant = *lc.run.variant;
  return p;
}

json provenance_json(const LoadedConfig& lc, cqnc::GVariant variant) {
  json j;
  j["tool"] = std::string("cqnc ") + cqnc::cqnc_version;
  j["config_hash"] = cqnc::hex_string(lc.hash);
  j["variant"] = cqnc::to_string(variant);
  return j;
}

int cmd_simulate(const CommonArgs& args) {
  const LoadedConfig lc = load_config(args);
  if (lc.params.empty())
    throw std::runtime_error("simulate: no parameter file configured");
  cqnc::FitParams p =
      cqnc::fit_params_from_json(lc.params, "parameter file");
  if (lc.run.variant) p.variant = *lc.run.variant;
  if (p.delta_a.size() != 1)
    throw std::runtime_error(
        "simulate: expected exactly one delta_a_hz value");
  std::vector<double> psis = p.psi;
  if (psis.empty()) psis.push_back(0.0);

  const std::vector<double> grid = cqnc::make_grid(lc.run.band);
  const std::string stamp = cqnc::provenance_line(lc.hash, p.variant);

  json combined;
  combined["provenance"] = provenance_json(lc, p.variant);
  combined["frequencies_hz"] = grid;
  combined["psi_rad"] = psis;
  json curves = json::array();
  for (const double psi : psis) {
    cqnc::Trace t;
    t.frequencies_hz = grid;
    t.values.reserve(grid.size());
    for (const double f : grid)
      t.values.push_back(
          cqnc::model_variance(p, 0, cqnc::rad_from_hz(f), psi));
    if (want_csv(lc.run)) {
      const std::string name = "variance_" + cqnc::format_double(psi) + ".csv";
      cqnc::write_trace_csv(t, (fs::path(lc.run.out_dir) / name).string(),
                            cqnc::TraceUnits::Linear, stamp);
    }
    json c;
    c["psi_rad"] = psi;
    c["variance_linear"] = t.values;
    curves.push_back(c);
  }
  combined["curves"] = curves;
  if (want_json(lc.run))
    cqnc::json_to_file((fs::path(lc.run.out_dir) / "simulate.json").string(),
                       combined);
  return exit_ok;
}

int cmd_project(const CommonArgs& args) {
  const LoadedConfig lc = load_config(args);
  if (lc.params.empty())
    throw std::runtime_error("project: no parameter file configured");
  const cqnc::EnmoParams enmo = enmo_with_variant(lc);
  const cqnc::OmsParams oms = cqnc::oms_from_json(lc.params, "parameter file");
  const cqnc::ProjectionReport rep =
      cqnc::project_cqnc(enmo, oms, lc.run.band);
  const std::string stamp =
      cqnc::provenance_line(lc.hash, enmo.g_strength_variant);

  if (want_csv(lc.run)) {
    std::string csv = "# " + stamp + "\n";
    csv += "frequency_hz,s_oms_reconstructed_linear,s_cqnc_linear,"
           "reduction_db,fraction\n";
    for (std::size_t i = 0; i < rep.frequencies_hz.size(); ++i) {
      csv += cqnc::format_double(rep.frequencies_hz[i]) + "," +
             cqnc::format_double(rep.s_oms[i]) + "," +
             cqnc::format_double(rep.s_cqnc[i]) + "," +
             cqnc::format_double(rep.reduction_db[i]) + "," +
             cqnc::format_double(rep.fraction[i]) + "\n";
    }
    cqnc::write_file(
        (fs::path(lc.run.out_dir) / "projection.csv").string(), csv);
  }
  if (want_json(lc.run)) {
    json j;
    j["provenance"] = provenance_json(lc, enmo.g_strength_variant);
    j["baseline"] = "s_oms reconstructed from the sensor parameters";
    j["max_reduction_db"] = rep.max_reduction_db;
    j["max_reduction_freq_hz"] = rep.max_reduction_freq_hz;
    j["max_fraction"] = rep.max_fraction;
    j["max_fraction_freq_hz"] = rep.max_fraction_freq_hz;
    j["no_cancellation"] = rep.no_cancellation;
    j["guard_band_hz"] = rep.guard_band_hz;
    cqnc::json_to_file((fs::path(lc.run.out_dir) / "summary.json").string(),
                       j);
  }

  const double f_m = cqnc::hz_from_rad(oms.mech.omega_m);
  cqnc::SvgSeries oms_series{"S_oms (reconstructed)", {}, {}, "#e08214"};
  cqnc::SvgSeries cqnc_series{"S_cqnc", {}, {}, "#1f6fb4"};
  cqnc::SvgSeries red_series{"reduction", {}, {}, "#2ca05a"};
  for (std::size_t i = 0; i < rep.frequencies_hz.size(); ++i) {
    const double xn = rep.frequencies_hz[i] / f_m;
    oms_series.x.push_back(xn);
    oms_series.y.push_back(cqnc::db_rel_shot_from_linear(rep.s_oms[i]));
    cqnc_series.x.push_back(xn);
    cqnc_series.y.push_back(cqnc::db_rel_shot_from_linear(rep.s_cqnc[i]));
    red_series.x.push_back(xn);
    red_series.y.push_back(rep.reduction_db[i]);
  }
  cqnc::write_file(
      (fs::path(lc.run.out_dir) / "projection.svg").string(),
      cqnc::svg_line_plot("cascaded noise projection", "frequency / omega_m",
                          "dB rel. shot noise",
                          {oms_series, cqnc_series, red_series}));
  return exit_ok;
}

int cmd_tomo(const CommonArgs& args) {
  const LoadedConfig lc = load_config(args);
  if (lc.params.empty())
    throw std::runtime_error("tomo: no parameter file configured");
  const cqnc::EnmoParams enmo = enmo_with_variant(lc);
  const double eta = lc.params.contains("eta")
                         ? lc.params.at("eta").get<double>()
                         : 1.0;
  const cqnc::EllipseSpectrum es =
      cqnc::ellipse_spectrum(enmo, eta, lc.run.band);
  const std::string stamp =
      cqnc::provenance_line(lc.hash, enmo.g_strength_variant);

  if (want_csv(lc.run)) {
    std::string csv = "# " + stamp + "\n";
    csv += "frequency_hz,v_min,v_max,angle_rad\n";
    for (std::size_t i = 0; i < es.frequencies_hz.size(); ++i)
      csv += cqnc::format_double(es.frequencies_hz[i]) + "," +
             cqnc::format_double(es.ellipses[i].v_min) + "," +
             cqnc::format_double(es.ellipses[i].v_max) + "," +
             cqnc::format_double(es.ellipses[i].angle) + "\n";
    cqnc::write_file((fs::path(lc.run.out_dir) / "ellipses.csv").string(),
                     csv);
  }
  if (want_json(lc.run)) {
    json j;
    j["provenance"] = provenance_json(lc, enmo.g_strength_variant);
    j["eta"] = eta;
    json pts = json::array();
    for (std::size_t i = 0; i < es.frequencies_hz.size(); ++i) {
      json e;
      e["frequency_hz"] = es.frequencies_hz[i];
      e["v_min"] = es.ellipses[i].v_min;
      e["v_max"] = es.ellipses[i].v_max;
      e["angle_rad"] = es.ellipses[i].angle;
      e["physical"] = es.physicality[i].physical;
      e["det"] = es.physicality[i].det;
      pts.push_back(e);
    }
    j["ellipses"] = pts;
    cqnc::json_to_file((fs::path(lc.run.out_dir) / "ellipses.json").string(),
                       j);
  }
  cqnc::write_file((fs::path(lc.run.out_dir) / "ellipses.svg").string(),
                   cqnc::svg_ellipse_strip(es.frequencies_hz, es.ellipses));
  return exit_ok;
}

int cmd_synth(const CommonArgs& args, const std::string& truth_path,
              const std::string& design_path) {
  const std::string truth_bytes = cqnc::read_file(truth_path);
  const std::string design_bytes = cqnc::read_file(design_path);
  const std::uint64_t hash = cqnc::fnv1a_64(truth_bytes + design_bytes);

  cqnc::FitParams truth =
      cqnc::fit_params_from_json(json::parse(truth_bytes), truth_path);
  if (!args.variant.empty())
    truth.variant = cqnc::g_variant_from_string(args.variant);
  const json dj = json::parse(design_bytes);

  cqnc::SynthDesign design;
  for (const auto& d : dj.at("detunings_hz"))
    design.detunings_hz.push_back(d.get<double>());
  for (const auto& a : dj.at("angles_rad"))
    design.angles_rad.push_back(a.get<double>());
  const json& b = dj.at("band");
  design.band.f_min_hz = b.at("f_min_hz").get<double>();
  design.band.f_max_hz = b.at("f_max_hz").get<double>();
  design.band.n_points = b.at("n_points").get<std::size_t>();
  if (b.contains("spacing"))
    design.band.spacing =
        cqnc::grid_spacing_from_string(b.at("spacing").get<std::string>());
  design.noise_level = dj.value("noise_level", 0.0);
  design.seed = dj.value("seed", std::uint64_t{1});
  if (args.seed) design.seed = *args.seed;

  // The truth's delta list is replaced by the design detunings inside
  // synth_dataset; truth.delta_a only needs to be non-empty to validate.
  const cqnc::TraceSet set = cqnc::synth_dataset(truth, design);
  const std::string out_dir = args.out_dir.empty() ? "out" : args.out_dir;
  const std::string stamp = cqnc::provenance_line(hash, truth.variant);
  const std::string manifest = cqnc::write_traceset(set, out_dir, stamp);
  std::cout << "wrote " << manifest << " with " << set.traces.size()
            << " traces\n";
  return exit_ok;
}

int cmd_fit(const CommonArgs& args, const std::string& manifest_path,
            const std::string& init_path, bool db_residuals,
            std::optional<double> g_bs_prior_hz, std::size_t max_iter) {
  const std::string manifest_bytes = cqnc::read_file(manifest_path);
  const std::string init_bytes = cqnc::read_file(init_path);
  const std::uint64_t hash = cqnc::fnv1a_64(manifest_bytes + init_bytes);

  const cqnc::TraceSet data = cqnc::read_traceset(manifest_path);
  cqnc::FitParams init =
      cqnc::fit_params_from_json(json::parse(init_bytes), init_path);
  if (!args.variant.empty())
    init.variant = cqnc::g_variant_from_string(args.variant);

  cqnc::FitOptions opts;
  if (db_residuals) opts.residual_space = cqnc::ResidualSpace::Db;
  if (g_bs_prior_hz) opts.g_bs_prior = cqnc::rad_from_hz(*g_bs_prior_hz);
  opts.max_iterations = max_iter;

  const cqnc::FitResult result = cqnc::fit_dataset(data, init, opts);
  const std::string out_dir = args.out_dir.empty() ? "out" : args.out_dir;
  const std::string stamp = cqnc::provenance_line(hash, init.variant);

  json rj = cqnc::fit_result_to_json(result);
  rj["provenance"]["tool"] = std::string("cqnc ") + cqnc::cqnc_version;
  rj["provenance"]["config_hash"] = cqnc::hex_string(hash);
  rj["provenance"]["variant"] = cqnc::to_string(init.variant);
  cqnc::json_to_file((fs::path(out_dir) / "fit_result.json").string(), rj);

  json ident;
  ident["free_parameters"] = result.free_names;
  ident["singular_values"] = result.singular_values;
  ident["condition_number"] = result.condition_number;
  ident["unidentifiable"] = result.unidentifiable;
  cqnc::json_to_file((fs::path(out_dir) / "identifiability.json").string(),
                     ident);

  std::size_t row = 0;
  for (std::size_t j = 0; j < data.traces.size(); ++j) {
    const cqnc::Trace& t = data.traces[j];
    std::string csv = "# " + stamp + "\n";
    csv += "frequency_hz,data_linear,model_linear,residual\n";
    const std::size_t group_of = [&] {
      const auto groups = data.groups();
      for (std::size_t k = 0; k < groups.size(); ++k)
        for (const std::size_t idx : groups[k])
          if (idx == j) return k;
      return std::size_t{0};
    }();
    for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i, ++row) {
      const double model = cqnc::model_variance(
          result.best, group_of, cqnc::rad_from_hz(t.frequencies_hz[i]),
          result.best.psi[j]);
      csv += cqnc::format_double(t.frequencies_hz[i]) + "," +
             cqnc::format_double(t.values[i]) + "," +
             cqnc::format_double(model) + "," +
             cqnc::format_double(result.residuals[row]) + "\n";
    }
    cqnc::write_file((fs::path(out_dir) /
                      ("residual_" + std::to_string(j) + ".csv"))
                         .string(),
                     csv);
  }

  if (!result.converged) {
    std::cerr << "fit did not converge: " << result.message << "\n";
    return exit_not_converged;
  }
  return exit_ok;
}

int cmd_check(const std::string& enmo_path, const std::string& oms_path,
              const CommonArgs& args, double hierarchy_threshold) {
  const std::string enmo_bytes = cqnc::read_file(enmo_path);
  const std::string oms_bytes = cqnc::read_file(oms_path);
  const std::uint64_t hash = cqnc::fnv1a_64(enmo_bytes + oms_bytes);

  cqnc::EnmoParams enmo =
      cqnc::enmo_from_json(json::parse(enmo_bytes), enmo_path);
  if (!args.variant.empty())
    enmo.g_strength_variant = cqnc::g_variant_from_string(args.variant);
  const cqnc::OmsParams oms =
      cqnc::oms_from_json(json::parse(oms_bytes), oms_path);

  cqnc::MatchingTolerances tol;
  tol.hierarchy_threshold = hierarchy_threshold;
  const cqnc::MatchingReport rep = cqnc::matching_report(enmo, oms, tol);

  const std::string out_dir = args.out_dir.empty() ? "out" : args.out_dir;
  json j;
  json prov;
  prov["tool"] = std::string("cqnc ") + cqnc::cqnc_version;
  prov["config_hash"] = cqnc::hex_string(hash);
  prov["variant"] = cqnc::to_string(enmo.g_strength_variant);
  j["provenance"] = prov;
  j["all_matched"] = rep.all_matched;
  json conds = json::array();
  std::ostringstream table;
  table << "condition                 lhs                rhs          "
           "residual   status\n";
  for (const auto& c : rep.conditions) {
    json e;
    e["name"] = c.name;
    e["lhs"] = c.lhs;
    e["rhs"] = c.rhs;
    e["residual"] = c.residual;
    e["passed"] = c.passed;
    conds.push_back(e);
    table << c.name;
    for (std::size_t s = c.name.size(); s < 24; ++s) table << ' ';
    table << "  " << cqnc::format_double(c.lhs) << "  "
          << cqnc::format_double(c.rhs) << "  "
          << cqnc::format_double(c.residual) << "  "
          << (c.passed ? "ok" : "MISMATCH") << "\n";
  }
  j["conditions"] = conds;
  cqnc::json_to_file((fs::path(out_dir) / "matching.json").string(), j);
  cqnc::write_file((fs::path(out_dir) / "matching.txt").string(),
                   "# " + cqnc::provenance_line(
                              hash, enmo.g_strength_variant) +
                       "\n" + table.str());
  std::cout << table.str();
  return exit_ok;  // mismatches are findings, not failures
}

int cmd_budget(const std::string& budget_path, double sqz_db,
               double antisqz_db, const CommonArgs& args, double k) {
  const std::string budget_bytes = cqnc::read_file(budget_path);
  const std::uint64_t hash = cqnc::fnv1a_64(budget_bytes);
  const cqnc::EfficiencyBudget budget =
      cqnc::budget_from_json(json::parse(budget_bytes), budget_path);

  const cqnc::ValueWithSigma total = cqnc::total_efficiency(budget);
  const cqnc::SqueezerEfficiency inferred =
      cqnc::infer_efficiency_from_squeezing(sqz_db, antisqz_db);
  // The squeezing-derived efficiency has no quoted uncertainty; the
  // consistency check therefore leans on the budget's error bar.
  const cqnc::ConsistencyReport consistency =
      cqnc::budget_consistency(budget, {inferred.eta, 0.0}, k);

  const std::string out_dir = args.out_dir.empty() ? "out" : args.out_dir;
  json j;
  json prov;
  prov["tool"] = std::string("cqnc ") + cqnc::cqnc_version;
  prov["config_hash"] = cqnc::hex_string(hash);
  j["provenance"] = prov;
  j["total_efficiency"] = total.value;
  j["total_efficiency_sigma"] = total.sigma;
  j["measured_eta"] = inferred.eta;
  j["measured_r"] = inferred.r;
  j["sqz_db"] = sqz_db;
  j["antisqz_db"] = antisqz_db;
  j["discrepancy"] = consistency.discrepancy;
  j["combined_sigma"] = consistency.combined_sigma;
  j["n_sigma"] = consistency.n_sigma;
  j["k"] = consistency.k;
  j["consistent"] = consistency.consistent;
  json channels = json::array();
  for (const auto& ch : budget) {
    json e;
    e["name"] = ch.name;
    e["eta"] = ch.eta;
    e["sigma"] = ch.sigma;
    channels.push_back(e);
  }
  j["channels"] = channels;
  cqnc::json_to_file((fs::path(out_dir) / "budget.json").string(), j);

  std::ostringstream txt;
  txt << "total efficiency  " << cqnc::format_double(total.value) << " +- "
      << cqnc::format_double(total.sigma) << "\n"
      << "measured eta      " << cqnc::format_double(inferred.eta)
      << "  (r = " << cqnc::format_double(inferred.r) << ")\n"
      << "discrepancy       " << cqnc::format_double(consistency.discrepancy)
      << "  (" << cqnc::format_double(consistency.n_sigma) << " sigma, k = "
      << cqnc::format_double(k) << ")\n"
      << (consistency.consistent ? "consistent\n" : "NOT consistent\n");
  cqnc::write_file((fs::path(out_dir) / "budget.txt").string(), txt.str());
  std::cout << txt.str();
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascaded quantum-noise-cancellation toolbox"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* simulate = app.add_subcommand(
      "simulate", "model variance curves at the configured angles");
  add_common(simulate, common);

  auto* project = app.add_subcommand(
      "project", "cascade projection against the sensor-only baseline");
  add_common(project, common);

  auto* tomo = app.add_subcommand(
      "tomo", "squeezing-ellipse spectrum of the oscillator output");
  add_common(tomo, common);

  auto* synth =
      app.add_subcommand("synth", "synthesize a noisy trace dataset");
  std::string truth_path, design_path;
  synth->add_option("--truth", truth_path, "true parameter JSON")->required();
  synth->add_option("--design", design_path, "measurement design JSON")
      ->required();
  add_common(synth, common, false);

  auto* fit = app.add_subcommand("fit", "joint fit of a trace dataset");
  std::string manifest_path, init_path;
  bool db_residuals = false;
  std::optional<double> g_bs_prior_hz;
  std::size_t max_iter = 200;
  fit->add_option("--manifest", manifest_path, "trace-set manifest JSON")
      ->required();
  fit->add_option("--init", init_path, "initial parameter JSON")->required();
  fit->add_flag("--db-residuals", db_residuals,
                "fit in dB space instead of linear");
  fit->add_option("--gbs-prior-hz", g_bs_prior_hz,
                  "calibrated g_bs [Hz], enables the g_bs/g_dc split");
  fit->add_option("--max-iter", max_iter, "iteration budget");
  add_common(fit, common, false);

  auto* check = app.add_subcommand(
      "check", "cancellation matching conditions between the parameter sets");
  std::string enmo_path, oms_path;
  double hierarchy_threshold = 3.0;
  check->add_option("--enmo", enmo_path, "oscillator parameter JSON")
      ->required();
  check->add_option("--oms", oms_path, "sensor parameter JSON")->required();
  check->add_option("--hierarchy-threshold", hierarchy_threshold,
                    "required |delta_a| / kappa_a ratio");
  add_common(check, common, false);

  auto* budget = app.add_subcommand(
      "budget", "efficiency budget versus measured squeezing");
  std::string budget_path;
  double sqz_db = 0.0, antisqz_db = 0.0, k_sigma = 2.0;
  budget->add_option("--budget", budget_path, "budget JSON")->required();
  budget->add_option("--sqz-db", sqz_db, "measured squeezing [dB], < 0")
      ->required();
  budget->add_option("--antisqz-db", antisqz_db,
                     "measured anti-squeezing [dB], > 0")
      ->required();
  budget->add_option("--k", k_sigma, "consistency acceptance multiple");
  add_common(budget, common, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(common);
    if (project->parsed()) return cmd_project(common);
    if (tomo->parsed()) return cmd_tomo(common);
    if (synth->parsed()) return cmd_synth(common, truth_path, design_path);
    if (fit->parsed())
      return cmd_fit(common, manifest_path, init_path, db_residuals,
                     g_bs_prior_hz, max_iter);
    if (check->parsed())
      return cmd_check(enmo_path, oms_path, common, hierarchy_threshold);
    if (budget->parsed())
      return cmd_budget(budget_path, sqz_db, antisqz_db, common, k_sigma);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input_error;
  }
  return exit_input_error;
}
