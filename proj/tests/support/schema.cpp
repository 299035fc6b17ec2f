#include "support/schema.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mjflow::test {

using nlohmann::json;

namespace {

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

std::string check(const json& value, const json& schema, const std::string& where) {
  if (schema.contains("type")) {
    if (!type_matches(value, schema["type"].get<std::string>())) {
      return where + ": expected " + schema["type"].get<std::string>();
    }
  }
  if (schema.contains("enum")) {
    bool hit = false;
    for (const auto& e : schema["enum"]) {
      if (e == value) hit = true;
    }
    if (!hit) return where + ": value not in enum";
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) {
          return where + ": missing required key '" + key.get<std::string>() + "'";
        }
      }
    }
    if (schema.contains("properties")) {
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (schema["properties"].contains(it.key())) {
          std::string err =
              check(it.value(), schema["properties"][it.key()], where + "/" + it.key());
          if (!err.empty()) return err;
        } else if (schema.value("additionalProperties", true) == false) {
          return where + ": unexpected key '" + it.key() + "'";
        }
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    int i = 0;
    for (const auto& item : value) {
      std::string err = check(item, schema["items"], where + "/" + std::to_string(i++));
      if (!err.empty()) return err;
    }
  }
  return "";
}

} // namespace

std::string validate_against_schema(const std::string& instance_json,
                                    const std::string& schema_path) {
  std::ifstream in(schema_path);
  if (!in) return "cannot open schema " + schema_path;
  std::ostringstream ss;
  ss << in.rdbuf();
  json schema;
  json instance;
  try {
    schema = json::parse(ss.str());
    instance = json::parse(instance_json);
  } catch (const json::parse_error& e) {
    return std::string("parse error: ") + e.what();
  }
  return check(instance, schema, "#");
}

} // namespace mjflow::test
