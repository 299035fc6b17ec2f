#pragma once

#include <mjflow/bind.hpp>

namespace mjflow {

// Syntactic normalization of one file, idempotent:
//  - a class without a constructor gains a zero-argument one
//  - every constructor of a class with a declared superclass starts with an
//    implicit super() call
//  - instance field initializers move into the constructor, static field
//    initializers and static blocks merge into a single <clinit> method
void normalize_file(MjFile& file);

// Contract-level wrapper: normalizes all files of a bound program and
// rebinds. Idempotent.
BoundProgram normalize(BoundProgram program, DiagList& diags);

// Source text of the synthesized driver class invoking all @Test methods in
// declaration order; empty when there are none.
std::string synthesize_test_driver(const std::vector<MjFilePtr>& files);

constexpr const char* kTestDriverClass = "__TestDriver";
constexpr const char* kTestDriverPath = "<test-driver>";

} // namespace mjflow
