#pragma once

#include <string>

namespace mjflow::test {

// Minimal structural JSON-schema checker covering the subset the published
// schemas use: type, properties, required, items, enum, additionalProperties.
// Returns an empty string when the instance conforms.
std::string validate_against_schema(const std::string& instance_json,
                                    const std::string& schema_path);

} // namespace mjflow::test
