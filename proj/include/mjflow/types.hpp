#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <mjflow/ast.hpp>

namespace mjflow {

using ClassId = uint32_t;
using MethodId = uint32_t;
using FieldId = uint32_t;
using TypeRef = uint32_t;

constexpr ClassId kNoClass = 0xffffffffu;
constexpr MethodId kNoMethod = 0xffffffffu;
constexpr FieldId kNoField = 0xffffffffu;
constexpr TypeRef kNoType = 0xffffffffu;

// Built-in classes occupy fixed ids.
constexpr ClassId kObjectClass = 0;
constexpr ClassId kListClass = 1;
constexpr ClassId kMapClass = 2;
constexpr ClassId kStringBuilderClass = 3;

enum class TypeKind : uint8_t { Void, Int, Bool, String, Null, Class, Array };

struct TypeDesc {
  TypeKind kind = TypeKind::Void;
  ClassId cls = kNoClass;  // Class
  TypeRef elem = kNoType;  // Array
};

// Append-only identity space shared across incremental rebinds: class ids,
// field ids, method ids, and interned types stay stable while declarations
// come and go, so analysis values survive an update.
class SymbolTable {
 public:
  SymbolTable();

  ClassId class_id(const std::string& name);
  int find_class(const std::string& name) const; // -1 if never seen
  const std::string& class_name(ClassId id) const { return class_names_[id]; }
  size_t num_classes() const { return class_names_.size(); }

  FieldId field_id(ClassId owner, const std::string& name);
  MethodId method_id(ClassId owner, const std::string& name);
  size_t num_fields() const { return field_keys_.size(); }
  size_t num_methods() const { return method_keys_.size(); }
  const std::string& field_key(FieldId id) const { return field_keys_[id]; }
  const std::string& method_key(MethodId id) const { return method_keys_[id]; }

  // fixed primitive types
  TypeRef void_type() const { return 0; }
  TypeRef int_type() const { return 1; }
  TypeRef bool_type() const { return 2; }
  TypeRef string_type() const { return 3; }
  TypeRef null_type() const { return 4; }

  TypeRef class_type(ClassId cls);
  TypeRef array_type(TypeRef elem);
  TypeRef object_type() { return class_type(kObjectClass); }

  const TypeDesc& type(TypeRef t) const { return types_[t]; }
  std::string type_name(TypeRef t) const;

  bool is_reference(TypeRef t) const {
    TypeKind k = type(t).kind;
    return k == TypeKind::Class || k == TypeKind::Array || k == TypeKind::Null;
  }

 private:
  std::vector<std::string> class_names_;
  std::unordered_map<std::string, ClassId> class_ids_;
  std::vector<std::string> field_keys_;
  std::unordered_map<std::string, FieldId> field_ids_;
  std::vector<std::string> method_keys_;
  std::unordered_map<std::string, MethodId> method_ids_;
  std::vector<TypeDesc> types_;
  std::unordered_map<uint64_t, TypeRef> class_types_;
  std::unordered_map<uint64_t, TypeRef> array_types_;
};

} // namespace mjflow
