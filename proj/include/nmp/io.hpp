#pragma once

#include <cstdint>
#include <istream>
#include <string>

#include <json.hpp>

#include "nmp/errors.hpp"
#include "nmp/types.hpp"

// JSON-lines plumbing shared by the scene, query, demo and checkpoint files.
namespace nmp::io {

using Json = nlohmann::json;

template <int N>
Json to_json(const Eigen::Matrix<double, N, 1>& v) {
  Json arr = Json::array();
  for (int i = 0; i < N; ++i) arr.push_back(v[i]);
  return arr;
}

/// Reads a fixed-length numeric array; throws ParseError naming the field.
template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const Json& obj, const std::string& field) {
  if (!obj.contains(field)) throw ParseError("missing field '" + field + "'");
  const Json& arr = obj.at(field);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(N)) {
    throw ParseError("field '" + field + "': expected " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!arr[i].is_number()) throw ParseError("field '" + field + "': element " + std::to_string(i) + " not a number");
    v[i] = arr[i].get<double>();
  }
  return v;
}

double number_field(const Json& obj, const std::string& field);
std::string string_field(const Json& obj, const std::string& field);
std::uint64_t u64_field(const Json& obj, const std::string& field);

/// Line-oriented JSON reader that prefixes errors with the line number.
class JsonLineReader {
 public:
  explicit JsonLineReader(std::istream& in) : in_(in) {}

  /// Next non-blank record; false at end of stream.
  bool next(Json& out);
  int line() const { return line_; }

  /// Checks the header's schema_version and kind.
  Json read_header(const std::string& kind, int schema_version);

  /// Runs fn(record), rethrowing ParseError with "line N:" context.
  template <typename Fn>
  void with_context(Fn&& fn) {
    try {
      fn();
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw ParseError("line " + std::to_string(line_) + ": " + e.what());
    }
  }

 private:
  std::istream& in_;
  int line_ = 0;
};

}  // namespace nmp::io
