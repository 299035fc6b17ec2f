#pragma once

#include <set>
#include <unordered_map>

#include <mjflow/engine.hpp>

namespace mjflow {

// Fig-style update sets, reported back for timing/inspection.
struct UpdateStats {
  size_t calls_removed = 0;   // UPD closure
  size_t callers_requeued = 0; // CALLUPD
  size_t sources_removed = 0; // SRCUPD
  size_t sets_remapped = 0;   // SETUPD
  size_t values_remapped = 0; // VALUPD
  size_t states_rewritten = 0;
  size_t states_dropped = 0;
  size_t fields_requeued = 0; // FLDUPD accesses
  double remap_millis = 0;
};

// File-level incremental re-analysis. Runs exclusively (no workers): removes
// calls rooted in the changed files (closed over orphaned callees), removes
// their sources, remaps every source set and value in one scan each,
// rewrites states/fields/arrays/prototypes through the remap, resets static
// initializers of changed classes, and refills the work queue. The caller
// then resumes the normal fixpoint.
class IncrementalUpdater {
 public:
  // `dirty_methods`: stable ids of methods declared in the changed files
  // (computed against the pre-update program, including methods that no
  // longer exist). `dirty_fields` / `dirty_classes`: likewise.
  UpdateStats run(Engine& engine, const std::set<MethodId>& dirty_methods,
                  const std::set<FieldId>& dirty_fields, const std::set<ClassId>& dirty_classes);
};

// Debug sweep: no live state, field, array, or prototype references a dead
// source or a value over one. Returns an empty string when clean.
std::string find_dangling_reference(Engine& engine);

} // namespace mjflow
