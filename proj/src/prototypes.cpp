#include <mjflow/interp.hpp>

#include <cassert>

namespace mjflow {

namespace {
constexpr int kSizeGrowthLimit = 3;
}

void Interp::ensure_proto(Source* s) {
  const TypeDesc& td = prog_->syms->type(s->type);
  if (td.kind != TypeKind::Class) return;
  ProtoKind kind;
  if (td.cls == kListClass) {
    kind = ProtoKind::List;
  } else if (td.cls == kMapClass) {
    kind = ProtoKind::Map;
  } else if (td.cls == kStringBuilderClass) {
    kind = ProtoKind::StringBuilder;
  } else {
    return;
  }
  std::lock_guard lock(s->mu);
  if (s->proto) return;
  auto p = std::make_unique<PrototypeState>();
  p->kind = kind;
  // objects from models may already hold arbitrary contents
  bool unknown = s->kind != SourceKind::Allocation;
  if (kind == ProtoKind::StringBuilder) {
    p->element = unknown ? store_.string_any(store_.unknown_members(), store_.empty_set())
                         : store_.string_const("");
  } else if (unknown) {
    const Value* any = store_.ref_value(prog_->syms->object_type(), Nullness::Maybe,
                                        store_.empty_set(), store_.unknown_members());
    p->element = any;
    p->key = any;
    p->value = any;
  }
  if (unknown) {
    p->size_lo = 0;
    p->size_hi_inf = true;
  }
  s->proto = std::move(p);
}

// Simulates one call on a container / string-builder source without flow
// analysis of any library body. A change to the tracked contents re-queues
// every recorded reader site.
Interp::ProtoOutcome Interp::proto_call(Source* s, const std::string& method,
                                        const std::vector<const Value*>& args) {
  ProtoOutcome out;
  std::lock_guard lock(s->mu);
  PrototypeState* p = s->proto.get();
  if (!p) return out;

  auto merge_into = [&](const Value*& slot, const Value* v) {
    if (!slot) {
      slot = v;
      return true;
    }
    const Value* merged = store_.merge(slot, v);
    if (merged == slot) return false;
    slot = merged;
    return true;
  };
  auto grow_size = [&]() {
    bool changed = false;
    if (!p->size_hi_inf) {
      ++p->size_growth;
      if (p->size_growth >= kSizeGrowthLimit) {
        p->size_hi_inf = true;
      } else {
        ++p->size_hi;
      }
      changed = true;
    }
    return changed;
  };
  auto size_value = [&]() {
    return store_.int_range(p->size_lo, false, p->size_hi, p->size_hi_inf);
  };
  auto register_reader = [&]() { s->readers.insert(here()); };
  auto null_object = [&]() { return store_.null_value(prog_->syms->object_type()); };

  switch (p->kind) {
    case ProtoKind::List:
      if (method == "add") {
        out.changed |= merge_into(p->element, args[0]);
        out.changed |= grow_size();
        out.ret = store_.void_value();
        s->writers.insert(here());
        return out;
      }
      if (method == "get") {
        register_reader();
        out.ret = p->element ? p->element : null_object();
        return out;
      }
      if (method == "size") {
        register_reader();
        out.ret = size_value();
        return out;
      }
      break;
    case ProtoKind::Map:
      if (method == "put") {
        out.changed |= merge_into(p->key, args[0]);
        out.changed |= merge_into(p->value, args[1]);
        out.changed |= grow_size();
        out.ret = store_.void_value();
        s->writers.insert(here());
        return out;
      }
      if (method == "get") {
        register_reader();
        // the key may be absent
        out.ret = p->value ? store_.merge(p->value, null_object()) : null_object();
        return out;
      }
      if (method == "size") {
        register_reader();
        out.ret = size_value();
        return out;
      }
      break;
    case ProtoKind::StringBuilder:
      if (method == "append") {
        const Value* content = p->element ? p->element : store_.string_const("");
        const Value* appended = store_.binary_op(BinOp::Concat, content, args[0]);
        out.changed |= merge_into(p->element, appended);
        out.ret = nullptr; // chaining: append returns the receiver
        s->writers.insert(here());
        return out;
      }
      if (method == "toString") {
        register_reader();
        out.ret = p->element ? p->element : store_.string_const("");
        return out;
      }
      break;
  }
  assert(false && "unknown method on prototype class");
  out.ret = store_.void_value();
  return out;
}

} // namespace mjflow
