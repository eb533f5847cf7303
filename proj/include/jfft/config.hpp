/**
 * @file config.hpp
 * @brief JSON experiment configs: strict key checking and geometry resolution.
 */
#pragma once

#include "jfft/field_io.hpp"
#include "jfft/material.hpp"
#include "jfft/microstructures.hpp"
#include "jfft/preconditioners.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jfft {

/// Invalid or unreadable configuration. Maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverAbort = 3;

/// Raw text plus parsed document, so outputs can carry an exact copy.
struct ConfigDocument {
  std::filesystem::path path;
  std::string text;
  nlohmann::json json;
};

inline ConfigDocument parse_config_text(std::string text, std::filesystem::path origin = {}) {
  ConfigDocument doc{std::move(origin), std::move(text), {}};
  try {
    doc.json = nlohmann::json::parse(doc.text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based; turn it into a line number for the message
    std::size_t line = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < doc.text.size(); ++k) line += doc.text[k] == '\n';
    throw ConfigError(doc.path.string() + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  if (!doc.json.is_object()) throw ConfigError(doc.path.string() + ": top level must be a JSON object");
  return doc;
}

inline ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

/**
 * Typed view of one JSON object. Every key read is remembered so that
 * finish() can reject keys nobody asked for (usually typos).
 */
class ConfigSection {
 public:
  ConfigSection(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required key '" + key + "'");
    return convert<T>(key, j_.at(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return convert<T>(key, j_.at(key));
  }

  /// Positive number or the string "inf".
  double contrast(const std::string& key, double fallback) {
    if (!j_.contains(key)) return fallback;
    seen_.insert(key);
    return parse_contrast(j_.at(key), path(key));
  }

  ConfigSection section(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing required section '" + key + "'");
    seen_.insert(key);
    return {j_.at(key), path(key)};
  }

  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  static double parse_contrast(const nlohmann::json& v, const std::string& where) {
    if (v.is_string() && (v == "inf" || v == "infinity")) return kInfiniteContrast;
    if (v.is_number() && v.get<double>() >= 1.0) return v.get<double>();
    throw ConfigError(where + ": contrast must be a number >= 1 or \"inf\"");
  }

 private:
  template <class T>
  T convert(const std::string& key, const nlohmann::json& v) {
    seen_.insert(key);
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(path(key) + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    }
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline PreconditionerKind parse_preconditioner_key(const nlohmann::json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a preconditioner name");
  const auto kind = parse_preconditioner(v.get<std::string>());
  if (!kind) {
    throw ConfigError(where + ": unknown preconditioner '" + v.get<std::string>() +
                      "' (expected none, green, jacobi or green-jacobi)");
  }
  return *kind;
}

inline std::vector<PreconditionerKind> parse_preconditioner_list(ConfigSection& s, const std::string& key,
                                                                 std::vector<PreconditionerKind> fallback,
                                                                 bool allow_empty = false) {
  if (!s.has(key)) return fallback;
  const auto& arr = s.raw(key);
  if (!arr.is_array() || (arr.empty() && !allow_empty)) {
    throw ConfigError(s.path(key) + ": expected a non-empty array");
  }
  std::vector<PreconditionerKind> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    out.push_back(parse_preconditioner_key(arr[k], s.path(key) + "[" + std::to_string(k) + "]"));
  }
  return out;
}

inline std::vector<double> parse_contrast_list(ConfigSection& s, const std::string& key, std::vector<double> fallback) {
  if (!s.has(key)) return fallback;
  const auto& arr = s.raw(key);
  if (!arr.is_array() || arr.empty()) throw ConfigError(s.path(key) + ": expected a non-empty array");
  std::vector<double> out;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    out.push_back(ConfigSection::parse_contrast(arr[k], s.path(key) + "[" + std::to_string(k) + "]"));
  }
  return out;
}

inline Mandel parse_strain(ConfigSection& s, const std::string& key) {
  if (!s.has(key)) return {1.0, 1.0, 1.0};
  const auto& v = s.raw(key);
  if (!v.is_array() || v.size() != kMandelDim || !std::all_of(v.begin(), v.end(), [](const auto& x) {
        return x.is_number();
      })) {
    throw ConfigError(s.path(key) + ": expected three numbers (Mandel order 11, 22, sqrt2*12)");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline MaterialModel parse_material(ConfigSection& s) {
  if (!s.has("material")) return elastic_mandel(2.0 / 3.0, 0.5);
  ConfigSection m = s.section("material");
  const double lambda = m.get<double>("lambda", 2.0 / 3.0);
  const double mu = m.get<double>("mu", 0.5);
  m.finish();
  try {
    return elastic_mandel(lambda, mu);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.path("material") + ": " + e.what());
  }
}

/// Resolves relative paths against the directory of the config file.
inline std::filesystem::path resolve_path(const ConfigDocument& doc, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || doc.path.empty()) return path;
  return doc.path.parent_path() / path;
}

/**
 * Geometry section, refined to the n x n finite-element grid.
 *
 *   {"kind": "laminate", "p": 32, "chi_tot": 1e4}
 *   {"kind": "cosine", "p": 32, "chi_tot": "inf"}
 *   {"kind": "inclusion", "p": 64, "rho_soft": 1e-4, "radius_fraction": 0.25}
 *   {"kind": "uniform", "value": 1.0}
 *   {"kind": "file", "path": "rho.json"}
 */
inline ScalarField parse_geometry(ConfigSection g, const ConfigDocument& doc, std::size_t n) {
  const auto kind = g.get<std::string>("kind");
  ScalarField rho;
  try {
    if (kind == "uniform") {
      rho = ScalarField(make_grid(n), g.get<double>("value", 1.0));
    } else if (kind == "file") {
      rho = read_scalar_field(resolve_path(doc, g.get<std::string>("path")));
    } else {
      const auto p = g.get<std::size_t>("p", n);
      if (kind == "laminate") {
        rho = laminate_density(p, g.contrast("chi_tot", 1e4));
      } else if (kind == "cosine") {
        rho = cosine_density(p, g.contrast("chi_tot", 1e4));
      } else if (kind == "inclusion") {
        rho = inclusion_density(p, g.get<double>("rho_soft", 1e-4), g.get<double>("radius_fraction", 0.25));
      } else {
        throw ConfigError(g.path("kind") + ": unknown geometry '" + kind + "'");
      }
    }
    g.finish();
    return refine_to_grid(rho, n);
  } catch (const FieldFileError& e) {
    throw ConfigError(g.path("path") + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(g.path("kind") + ": " + e.what());
  }
}

}  // namespace jfft
