#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqnc/budget.hpp"
#include "cqnc/fit.hpp"
#include "cqnc/format.hpp"
#include "cqnc/params.hpp"
#include "cqnc/spectra.hpp"
#include "cqnc/traces.hpp"
#include "cqnc/units.hpp"
#include "cqnc/version.hpp"

// File formats.  All user-facing frequencies are plain Hz; the one-time
// conversion to angular units happens in this header.  Parameter files are
// flat JSON with the canonical key names (kappa_a_hz, delta_a_hz,
// kappa_c_hz, delta_c_hz, g_bs_hz, g_dc_hz, g_a_hz, eta, psi_rad, plus the
// sensor block kappa_om_hz, delta_om_hz, omega_m_hz, gamma_m_hz, g_om_hz,
// and optionally fsr_hz and variant).

namespace cqnc {

using json = nlohmann::json;

[[nodiscard]] inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[nodiscard]] inline json json_from_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& bytes) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << bytes;
  if (!out) throw std::runtime_error("short write on " + path);
}

inline void json_to_file(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

namespace detail {
[[nodiscard]] inline double need_number(const json& j, const char* key,
                                        const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw std::runtime_error(where + ": missing numeric key '" + key + "'");
  return j.at(key).get<double>();
}

[[nodiscard]] inline double number_or(const json& j, const char* key,
                                      double fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<double>();
}
}  // namespace detail

// Oscillator parameters from a flat parameter object.  The coupling may be
// given split (g_bs_hz, g_dc_hz) or as the sum g_a_hz, in which case it is
// divided evenly; only the sum matters to the spectra.
[[nodiscard]] inline EnmoParams enmo_from_json(const json& j,
                                               const std::string& where) {
  EnmoParams p;
  p.ancilla.kappa = rad_from_hz(detail::need_number(j, "kappa_a_hz", where));
  p.ancilla.detuning =
      rad_from_hz(detail::need_number(j, "delta_a_hz", where));
  p.meter.kappa = rad_from_hz(detail::need_number(j, "kappa_c_hz", where));
  p.meter.detuning =
      rad_from_hz(detail::number_or(j, "delta_c_hz", 0.0));
  if (j.contains("fsr_hz")) {
    const double fsr = rad_from_hz(j.at("fsr_hz").get<double>());
    p.meter.fsr = fsr;
    p.ancilla.fsr = fsr;
  }
  if (j.contains("g_bs_hz") || j.contains("g_dc_hz")) {
    p.coupling.g_bs = rad_from_hz(detail::need_number(j, "g_bs_hz", where));
    p.coupling.g_dc = rad_from_hz(detail::need_number(j, "g_dc_hz", where));
  } else {
    const double g_a = detail::need_number(j, "g_a_hz", where);
    p.coupling.g_bs = rad_from_hz(g_a / 2.0);
    p.coupling.g_dc = rad_from_hz(g_a / 2.0);
  }
  if (j.contains("variant"))
    p.g_strength_variant =
        g_variant_from_string(j.at("variant").get<std::string>());
  p.validate();
  return p;
}

[[nodiscard]] inline OmsParams oms_from_json(const json& j,
                                             const std::string& where) {
  OmsParams p;
  p.meter.kappa = rad_from_hz(detail::need_number(j, "kappa_om_hz", where));
  p.meter.detuning =
      rad_from_hz(detail::number_or(j, "delta_om_hz", 0.0));
  p.mech.omega_m = rad_from_hz(detail::need_number(j, "omega_m_hz", where));
  p.mech.gamma_m = rad_from_hz(detail::need_number(j, "gamma_m_hz", where));
  p.g_om = rad_from_hz(detail::need_number(j, "g_om_hz", where));
  p.validate();
  return p;
}

// Fit parameters (init or truth) from the same flat layout; delta_a_hz may
// be a single number or an array (one entry per detuning group), psi_rad
// an array with one entry per trace.
[[nodiscard]] inline FitParams fit_params_from_json(const json& j,
                                                    const std::string& where) {
  FitParams p;
  p.kappa_a = rad_from_hz(detail::need_number(j, "kappa_a_hz", where));
  p.kappa_c = rad_from_hz(detail::need_number(j, "kappa_c_hz", where));
  p.delta_c = rad_from_hz(detail::number_or(j, "delta_c_hz", 0.0));
  if (j.contains("g_bs_hz") || j.contains("g_dc_hz")) {
    p.g_bs = rad_from_hz(detail::need_number(j, "g_bs_hz", where));
    p.g_dc = rad_from_hz(detail::need_number(j, "g_dc_hz", where));
  } else {
    const double g_a = detail::need_number(j, "g_a_hz", where);
    p.g_bs = rad_from_hz(g_a / 2.0);
    p.g_dc = rad_from_hz(g_a / 2.0);
  }
  p.eta = detail::number_or(j, "eta", 1.0);
  if (!j.contains("delta_a_hz"))
    throw std::runtime_error(where + ": missing key 'delta_a_hz'");
  if (j.at("delta_a_hz").is_array()) {
    for (const auto& d : j.at("delta_a_hz"))
      p.delta_a.push_back(rad_from_hz(d.get<double>()));
  } else {
    p.delta_a.push_back(rad_from_hz(j.at("delta_a_hz").get<double>()));
  }
  if (j.contains("psi_rad"))
    for (const auto& ps : j.at("psi_rad"))
      p.psi.push_back(ps.get<double>());
  if (j.contains("variant"))
    p.variant = g_variant_from_string(j.at("variant").get<std::string>());
  p.validate();
  return p;
}

[[nodiscard]] inline json fit_result_to_json(const FitResult& r) {
  json best;
  best["kappa_a_hz"] = hz_from_rad(r.best.kappa_a);
  best["kappa_c_hz"] = hz_from_rad(r.best.kappa_c);
  best["delta_c_hz"] = hz_from_rad(r.best.delta_c);
  best["g_bs_hz"] = hz_from_rad(r.best.g_bs);
  best["g_dc_hz"] = hz_from_rad(r.best.g_dc);
  best["g_a_hz"] = hz_from_rad(r.best.g_a());
  best["eta"] = r.best.eta;
  best["delta_a_hz"] = json::array();
  for (const double d : r.best.delta_a)
    best["delta_a_hz"].push_back(hz_from_rad(d));
  best["psi_rad"] = r.best.psi;
  best["variant"] = to_string(r.best.variant);

  json sigma;
  sigma["kappa_a_hz"] = hz_from_rad(r.uncertainty.kappa_a);
  sigma["kappa_c_hz"] = hz_from_rad(r.uncertainty.kappa_c);
  sigma["delta_c_hz"] = hz_from_rad(r.uncertainty.delta_c);
  sigma["g_bs_hz"] = hz_from_rad(r.uncertainty.g_bs);
  sigma["g_dc_hz"] = hz_from_rad(r.uncertainty.g_dc);
  sigma["g_a_hz"] = hz_from_rad(r.uncertainty.g_a());
  sigma["eta"] = r.uncertainty.eta;
  sigma["delta_a_hz"] = json::array();
  for (const double d : r.uncertainty.delta_a)
    sigma["delta_a_hz"].push_back(hz_from_rad(d));
  sigma["psi_rad"] = r.uncertainty.psi;

  json out;
  out["best"] = best;
  out["sigma_1"] = sigma;
  out["cost"] = r.cost;
  out["reduced_chi2"] = r.reduced_chi2;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  out["message"] = r.message;
  out["free_parameters"] = r.free_names;
  out["singular_values"] = r.singular_values;
  out["condition_number"] = r.condition_number;
  out["unidentifiable"] = r.unidentifiable;
  json cov = json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.covariance.cols(); ++b)
      row.push_back(r.covariance(a, b));
    cov.push_back(row);
  }
  out["covariance"] = cov;
  return out;
}

// Trace-set manifest: {"traces": [{"file", "detuning_hz", "angle_label",
// "metadata"}, ...]}; file paths are relative to the manifest.
[[nodiscard]] inline TraceSet read_traceset(const std::string& manifest_path) {
  const json j = json_from_file(manifest_path);
  if (!j.contains("traces") || !j.at("traces").is_array() ||
      j.at("traces").empty())
    throw std::runtime_error(manifest_path +
                             ": manifest needs a non-empty 'traces' array");
  const auto base = std::filesystem::path(manifest_path).parent_path();
  TraceSet set;
  for (const auto& e : j.at("traces")) {
    if (!e.contains("file"))
      throw std::runtime_error(manifest_path +
                               ": manifest entry without 'file'");
    const auto file = base / e.at("file").get<std::string>();
    Trace t = read_trace_csv(file.string());
    t.detuning_hz =
        detail::need_number(e, "detuning_hz", manifest_path);
    if (e.contains("angle_label"))
      t.angle_label = e.at("angle_label").get<std::string>();
    if (e.contains("metadata"))
      for (const auto& [k, v] : e.at("metadata").items())
        t.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    set.traces.push_back(std::move(t));
  }
  set.validate();
  return set;
}

// Writes one CSV per trace next to the manifest; returns the manifest path.
[[nodiscard]] inline std::string write_traceset(
    const TraceSet& set, const std::string& dir,
    const std::string& provenance = {},
    TraceUnits units = TraceUnits::Linear) {
  set.validate();
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["traces"] = json::array();
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    const Trace& t = set.traces[i];
    const std::string name = "trace_" + std::to_string(i) + ".csv";
    write_trace_csv(t, (std::filesystem::path(dir) / name).string(), units,
                    provenance);
    json e;
    e["file"] = name;
    e["detuning_hz"] = t.detuning_hz;
    e["angle_label"] = t.angle_label;
    if (!t.metadata.empty()) {
      json md;
      for (const auto& [k, v] : t.metadata) md[k] = v;
      e["metadata"] = md;
    }
    manifest["traces"].push_back(e);
  }
  const std::string path =
      (std::filesystem::path(dir) / "manifest.json").string();
  json_to_file(path, manifest);
  return path;
}

[[nodiscard]] inline EfficiencyBudget budget_from_json(
    const json& j, const std::string& where) {
  if (!j.is_array())
    throw std::runtime_error(
        where + ": budget must be an array of {name, eta, sigma}");
  EfficiencyBudget b;
  for (const auto& e : j) {
    BudgetChannel ch;
    if (e.contains("name")) ch.name = e.at("name").get<std::string>();
    ch.eta = detail::need_number(e, "eta", where);
    ch.sigma = detail::number_or(e, "sigma", 0.0);
    ch.validate();
    b.push_back(std::move(ch));
  }
  return b;
}

// Run configuration for the command-line tool.
struct RunConfig {
  std::string params_path;
  Band band{1e3, 3e6, 600, GridSpacing::Log};
  std::optional<GVariant> variant;  // overrides the parameter file when set
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::string format = "both";  // csv | json | both
};

[[nodiscard]] inline RunConfig run_config_from_json(const json& j,
                                                    const std::string& where) {
  RunConfig c;
  if (j.contains("params")) c.params_path = j.at("params").get<std::string>();
  if (j.contains("band")) {
    const json& b = j.at("band");
    c.band.f_min_hz = detail::need_number(b, "f_min_hz", where);
    c.band.f_max_hz = detail::need_number(b, "f_max_hz", where);
    c.band.n_points = static_cast<std::size_t>(
        detail::need_number(b, "n_points", where));
    if (b.contains("spacing"))
      c.band.spacing =
          grid_spacing_from_string(b.at("spacing").get<std::string>());
    c.band.validate();
  }
  if (j.contains("variant"))
    c.variant = g_variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("format")) c.format = j.at("format").get<std::string>();
  return c;
}

// Provenance stamp carried in every output file: tool version, FNV-1a hash
// of the configuration bytes that produced the run, and the G_a variant.
[[nodiscard]] inline std::string provenance_line(std::uint64_t config_hash,
                                                 GVariant variant) {
  return std::string("cqnc ") + cqnc_version + "; config " +
         hex_string(config_hash) + "; variant " + to_string(variant);
}

}  // namespace cqnc
