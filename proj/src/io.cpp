#include "nmp/io.hpp"

namespace nmp::io {

double number_field(const Json& obj, const std::string& field) {
  if (!obj.contains(field) || !obj.at(field).is_number()) {
    throw ParseError("field '" + field + "': expected a number");
  }
  return obj.at(field).get<double>();
}

std::string string_field(const Json& obj, const std::string& field) {
  if (!obj.contains(field) || !obj.at(field).is_string()) {
    throw ParseError("field '" + field + "': expected a string");
  }
  return obj.at(field).get<std::string>();
}

std::uint64_t u64_field(const Json& obj, const std::string& field) {
  if (!obj.contains(field) || !obj.at(field).is_number_unsigned()) {
    throw ParseError("field '" + field + "': expected an unsigned integer");
  }
  return obj.at(field).get<std::uint64_t>();
}

bool JsonLineReader::next(Json& out) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_) + ": malformed JSON: " + e.what());
    }
    if (!out.is_object()) throw ParseError("line " + std::to_string(line_) + ": record must be an object");
    return true;
  }
  return false;
}

Json JsonLineReader::read_header(const std::string& kind, int schema_version) {
  Json header;
  if (!next(header)) throw ParseError("empty file: missing header");
  with_context([&] {
    const auto version = static_cast<int>(number_field(header, "schema_version"));
    if (version != schema_version) {
      throw ParseError("field 'schema_version': unsupported value " + std::to_string(version));
    }
    const auto k = string_field(header, "kind");
    if (k != kind) throw ParseError("field 'kind': expected '" + kind + "', got '" + k + "'");
  });
  return header;
}

}  // namespace nmp::io
