/**
 * @file field_io.hpp
 * @brief Field files: a JSON header `<stem>.json` and raw little-endian doubles in `<stem>.raw`.
 *
 * Header: {"kind": "scalar|vector|quad", "d": 2, "n": N, "lengths": [l1, l2],
 *          "order": "x1-fastest", "dtype": "float64-le"}
 * Vector and quad fields are stored component plane after component plane.
 */
#pragma once

#include "jfft/grid.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jfft {

class FieldFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::filesystem::path raw_path(const std::filesystem::path& header) {
  auto p = header;
  p.replace_extension(".raw");
  return p;
}

inline void write_raw(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FieldFileError("cannot open " + path.string() + " for writing");
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  }
}

inline std::vector<double> read_raw(const std::filesystem::path& path, std::size_t count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FieldFileError("cannot open " + path.string());
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    char buf[8];
    if (!is.read(buf, 8)) throw FieldFileError(path.string() + ": truncated field data");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    values[k] = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FieldFileError(path.string() + ": trailing data after field values");
  }
  return values;
}

inline void write_header(const std::filesystem::path& path, const char* kind, const Grid& g) {
  const nlohmann::json h = {{"kind", kind},          {"d", kDim},
                            {"n", g.n},              {"lengths", g.lengths},
                            {"order", "x1-fastest"}, {"dtype", "float64-le"}};
  std::ofstream os(path);
  if (!os) throw FieldFileError("cannot open " + path.string() + " for writing");
  os << h.dump(2) << '\n';
}

struct Header {
  std::string kind;
  Grid grid;
};

inline Header read_header(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FieldFileError("cannot open field header " + path.string());
  nlohmann::json h;
  try {
    is >> h;
    if (h.at("d").get<std::size_t>() != kDim) throw FieldFileError(path.string() + ": only d = 2 is supported");
    if (h.at("order").get<std::string>() != "x1-fastest" || h.at("dtype").get<std::string>() != "float64-le") {
      throw FieldFileError(path.string() + ": unsupported order or dtype");
    }
    const auto lengths = h.at("lengths").get<std::array<double, kDim>>();
    return {h.at("kind").get<std::string>(), make_grid(h.at("n").get<std::size_t>(), lengths)};
  } catch (const nlohmann::json::exception& e) {
    throw FieldFileError(path.string() + ": malformed header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FieldFileError(path.string() + ": " + e.what());
  }
}

inline Header expect_kind(const std::filesystem::path& path, const char* kind) {
  Header h = read_header(path);
  if (h.kind != kind) throw FieldFileError(path.string() + ": expected a " + kind + " field, found " + h.kind);
  return h;
}

}  // namespace detail

inline void write_field(const std::filesystem::path& header, const ScalarField& f) {
  detail::write_header(header, "scalar", f.grid);
  detail::write_raw(detail::raw_path(header), f.values);
}

inline void write_field(const std::filesystem::path& header, const VectorField& f) {
  detail::write_header(header, "vector", f.grid);
  detail::write_raw(detail::raw_path(header), f.values);
}

inline void write_field(const std::filesystem::path& header, const QuadField& f) {
  detail::write_header(header, "quad", f.grid);
  detail::write_raw(detail::raw_path(header), f.values);
}

inline ScalarField read_scalar_field(const std::filesystem::path& header) {
  const auto h = detail::expect_kind(header, "scalar");
  ScalarField f(h.grid);
  f.values = detail::read_raw(detail::raw_path(header), h.grid.pixels());
  return f;
}

inline VectorField read_vector_field(const std::filesystem::path& header) {
  const auto h = detail::expect_kind(header, "vector");
  VectorField f(h.grid);
  f.values = detail::read_raw(detail::raw_path(header), kDim * h.grid.nodes());
  return f;
}

inline QuadField read_quad_field(const std::filesystem::path& header) {
  const auto h = detail::expect_kind(header, "quad");
  QuadField f(h.grid);
  f.values = detail::read_raw(detail::raw_path(header), kMandelDim * h.grid.quad_points());
  return f;
}

}  // namespace jfft
