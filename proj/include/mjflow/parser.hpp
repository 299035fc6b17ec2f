#pragma once

#include <mjflow/ast.hpp>
#include <mjflow/diag.hpp>

namespace mjflow {

// Parses one MJ source file. Always returns a file object; when diagnostics
// were appended the AST is partial and must not be analyzed. Node ids are
// assigned in parse order, so identical texts yield identical ids.
MjFilePtr parse_file(const std::string& text, const std::string& path, DiagList& diags);

} // namespace mjflow
