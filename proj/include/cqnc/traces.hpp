#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqnc/format.hpp"
#include "cqnc/units.hpp"

namespace cqnc {

// One recorded (or synthesized) homodyne variance trace.  Values are held
// in the library's vacuum = 1/2 convention; trace files on disk are
// shot-noise normalized with vacuum = 1 (column variance_linear) or in dB
// relative to shot noise (column variance_db_rel_shot), converted on
// read/write.  Instrument metadata (RBW, VBW, sweep time, averages) is
// carried verbatim and never interpreted.
struct Trace {
  std::vector<double> frequencies_hz;
  std::vector<double> values;  // linear, vacuum = 1/2
  std::string angle_label;     // e.g. "A"/"B" within a detuning pair
  double detuning_hz = 0.0;    // nominal ancilla detuning of this trace
  std::map<std::string, std::string> metadata;

  void validate(const char* who = "Trace") const {
    if (frequencies_hz.size() != values.size() || frequencies_hz.empty())
      throw std::invalid_argument(std::string(who) +
                                  ": need equal-length, non-empty grids");
    for (std::size_t i = 0; i < frequencies_hz.size(); ++i) {
      require_finite(frequencies_hz[i], "Trace.frequencies_hz");
      if (i > 0 && !(frequencies_hz[i] > frequencies_hz[i - 1]))
        throw std::invalid_argument(
            std::string(who) + ": frequency grid must be strictly increasing");
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw std::invalid_argument(std::string(who) +
                                    ": variance values must be > 0");
    }
  }
};

// Traces grouped by nominal detuning; groups() returns indices into traces
// for each distinct detuning in order of first appearance.
struct TraceSet {
  std::vector<Trace> traces;

  [[nodiscard]] std::vector<std::vector<std::size_t>> groups() const {
    std::vector<double> seen;
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      std::size_t k = 0;
      for (; k < seen.size(); ++k)
        if (seen[k] == traces[i].detuning_hz) break;
      if (k == seen.size()) {
        seen.push_back(traces[i].detuning_hz);
        out.emplace_back();
      }
      out[k].push_back(i);
    }
    return out;
  }

  void validate() const {
    if (traces.empty())
      throw std::invalid_argument("TraceSet: need at least one trace");
    for (const auto& t : traces) t.validate("TraceSet trace");
  }
};

enum class TraceUnits { Linear, DbRelShot };

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

// CSV with header `frequency_hz,variance_linear` (shot-normalized power,
// vacuum = 1) or `frequency_hz,variance_db_rel_shot`; the header picks the
// conversion.  Lines starting with '#' are ignored (provenance comments).
[[nodiscard]] inline Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file " + path);
  std::string line;
  std::size_t line_no = 0;
  TraceUnits units = TraceUnits::Linear;
  bool header_seen = false;
  Trace t;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line == "frequency_hz,variance_linear")
        units = TraceUnits::Linear;
      else if (line == "frequency_hz,variance_db_rel_shot")
        units = TraceUnits::DbRelShot;
      else
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": unrecognized trace header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'frequency,value', got '" + line +
                               "'");
    const std::string where = path + ":" + std::to_string(line_no);
    const double f = parse_double(line.substr(0, comma), where.c_str());
    const double v = parse_double(line.substr(comma + 1), where.c_str());
    t.frequencies_hz.push_back(f);
    t.values.push_back(units == TraceUnits::Linear
                           ? v * vacuum_variance
                           : linear_from_db_rel_shot(v));
  }
  if (!header_seen)
    throw std::runtime_error(path + ": empty trace file, no header found");
  t.validate(path.c_str());
  return t;
}

inline void write_trace_csv(const Trace& t, const std::string& path,
                            TraceUnits units = TraceUnits::Linear,
                            const std::string& provenance = {}) {
  t.validate("write_trace_csv");
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file " + path);
  if (!provenance.empty()) out << "# " << provenance << "\n";
  out << (units == TraceUnits::Linear ? "frequency_hz,variance_linear"
                                      : "frequency_hz,variance_db_rel_shot")
      << "\n";
  for (std::size_t i = 0; i < t.frequencies_hz.size(); ++i) {
    const double v = units == TraceUnits::Linear
                         ? t.values[i] / vacuum_variance
                         : db_rel_shot_from_linear(t.values[i]);
    out << format_double(t.frequencies_hz[i]) << "," << format_double(v)
        << "\n";
  }
  if (!out) throw std::runtime_error("short write on trace file " + path);
}

// Raw spectrum-analyzer style power spectrum, either linear power units or
// dBm; shot_noise_normalize converts dB to linear before any arithmetic.
struct PowerSpectrum {
  std::vector<double> frequencies_hz;
  std::vector<double> values;
  bool db_units = false;

  [[nodiscard]] double linear_at(std::size_t i) const {
    return db_units ? std::pow(10.0, values[i] / 10.0) : values[i];
  }
};

// (raw - dark) / (shot - dark), pointwise on a common grid; the result is a
// shot-normalized trace (converted to the internal vacuum = 1/2 scale).
[[nodiscard]] inline Trace shot_noise_normalize(const PowerSpectrum& raw,
                                                const PowerSpectrum& shot,
                                                const PowerSpectrum& dark) {
  const std::size_t n = raw.frequencies_hz.size();
  if (raw.values.size() != n || shot.frequencies_hz.size() != n ||
      shot.values.size() != n || dark.frequencies_hz.size() != n ||
      dark.values.size() != n || n == 0)
    throw std::invalid_argument(
        "shot_noise_normalize: spectra must share one non-empty grid");
  Trace t;
  t.frequencies_hz = raw.frequencies_hz;
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (shot.frequencies_hz[i] != raw.frequencies_hz[i] ||
        dark.frequencies_hz[i] != raw.frequencies_hz[i])
      throw std::invalid_argument(
          "shot_noise_normalize: frequency grids disagree at index " +
          std::to_string(i));
    const double s = shot.linear_at(i);
    const double d = dark.linear_at(i);
    if (!(s > d))
      throw std::invalid_argument(
          "shot_noise_normalize: shot noise does not exceed dark noise at " +
          format_double(raw.frequencies_hz[i]) + " Hz");
    t.values[i] = (raw.linear_at(i) - d) / (s - d) * vacuum_variance;
  }
  t.validate("shot_noise_normalize result");
  return t;
}

}  // namespace cqnc
