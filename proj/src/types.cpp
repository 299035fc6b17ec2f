#include <mjflow/types.hpp>

namespace mjflow {

SymbolTable::SymbolTable() {
  // 0..4: void, int, boolean, string, null
  types_.resize(5);
  types_[0].kind = TypeKind::Void;
  types_[1].kind = TypeKind::Int;
  types_[2].kind = TypeKind::Bool;
  types_[3].kind = TypeKind::String;
  types_[4].kind = TypeKind::Null;
  class_id("Object");
  class_id("List");
  class_id("Map");
  class_id("StringBuilder");
}

ClassId SymbolTable::class_id(const std::string& name) {
  auto it = class_ids_.find(name);
  if (it != class_ids_.end()) return it->second;
  ClassId id = static_cast<ClassId>(class_names_.size());
  class_names_.push_back(name);
  class_ids_.emplace(name, id);
  return id;
}

int SymbolTable::find_class(const std::string& name) const {
  auto it = class_ids_.find(name);
  return it == class_ids_.end() ? -1 : static_cast<int>(it->second);
}

FieldId SymbolTable::field_id(ClassId owner, const std::string& name) {
  std::string key = class_names_[owner] + "." + name;
  auto it = field_ids_.find(key);
  if (it != field_ids_.end()) return it->second;
  FieldId id = static_cast<FieldId>(field_keys_.size());
  field_keys_.push_back(key);
  field_ids_.emplace(std::move(key), id);
  return id;
}

MethodId SymbolTable::method_id(ClassId owner, const std::string& name) {
  std::string key = class_names_[owner] + "." + name;
  auto it = method_ids_.find(key);
  if (it != method_ids_.end()) return it->second;
  MethodId id = static_cast<MethodId>(method_keys_.size());
  method_keys_.push_back(key);
  method_ids_.emplace(std::move(key), id);
  return id;
}

TypeRef SymbolTable::class_type(ClassId cls) {
  auto it = class_types_.find(cls);
  if (it != class_types_.end()) return it->second;
  TypeRef t = static_cast<TypeRef>(types_.size());
  TypeDesc d;
  d.kind = TypeKind::Class;
  d.cls = cls;
  types_.push_back(d);
  class_types_.emplace(cls, t);
  return t;
}

TypeRef SymbolTable::array_type(TypeRef elem) {
  auto it = array_types_.find(elem);
  if (it != array_types_.end()) return it->second;
  TypeRef t = static_cast<TypeRef>(types_.size());
  TypeDesc d;
  d.kind = TypeKind::Array;
  d.elem = elem;
  types_.push_back(d);
  array_types_.emplace(elem, t);
  return t;
}

std::string SymbolTable::type_name(TypeRef t) const {
  const TypeDesc& d = type(t);
  switch (d.kind) {
    case TypeKind::Void: return "void";
    case TypeKind::Int: return "int";
    case TypeKind::Bool: return "boolean";
    case TypeKind::String: return "string";
    case TypeKind::Null: return "null";
    case TypeKind::Class: return class_names_[d.cls];
    case TypeKind::Array: return type_name(d.elem) + "[]";
  }
  return "?";
}

} // namespace mjflow
