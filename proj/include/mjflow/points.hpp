#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <mjflow/bind.hpp>

namespace mjflow {

// A location inside a method: the node being interpreted plus the direct
// child index that just finished (-1 when the node is first entered).
struct ProgramPoint {
  NodeId node = kNoNode;
  int16_t after = -1;

  bool operator==(const ProgramPoint& o) const { return node == o.node && after == o.after; }
};

struct PointInfo {
  ProgramPoint pt;
  uint16_t depth = 0; // abstract stack depth on entry to this point
};

// Per-method enumeration of program points, stack depths, parent links,
// completion targets, and enclosing-try chains. Built after binding;
// deterministic for identical input.
class MethodPlan {
 public:
  static constexpr int kExitOrdinal = -2;

  static MethodPlan build(const BoundProgram& prog, const MjFile& file, const MethodInfo& mi);

  const std::vector<PointInfo>& points() const { return points_; }
  size_t size() const { return points_.size(); }
  int ordinal(ProgramPoint pt) const {
    auto it = ordinals_.find(key(pt));
    return it == ordinals_.end() ? -1 : it->second;
  }
  const PointInfo& info(int ordinal) const { return points_[ordinal]; }
  int entry_ordinal() const { return 0; }

  NodeId parent(NodeId n) const { return parents_[n]; }
  int child_index(NodeId n) const { return child_index_[n]; }
  // point reached when `node` finishes; kExitOrdinal when the method exits
  int completion_ordinal(NodeId n) const;
  // enclosing try statements, innermost first
  const std::vector<NodeId>& try_chain(NodeId n) const;
  // stable path string used in problem identities
  std::string point_path(ProgramPoint pt) const;

  const MjFile* file = nullptr;
  MethodId method = kNoMethod;
  NodeId body = kNoNode;

 private:
  static uint64_t key(ProgramPoint pt) {
    return (static_cast<uint64_t>(pt.node) << 16) | static_cast<uint16_t>(pt.after + 1);
  }
  void add_point(NodeId node, int16_t after, uint16_t depth) {
    ProgramPoint pt{node, after};
    ordinals_.emplace(key(pt), static_cast<int>(points_.size()));
    points_.push_back({pt, depth});
  }

  std::vector<PointInfo> points_;
  std::unordered_map<uint64_t, int> ordinals_;
  std::vector<NodeId> parents_;
  std::vector<int> child_index_;
  std::vector<int> try_chain_id_; // per node: index into try_chains_
  std::vector<std::vector<NodeId>> try_chains_;

  friend class PlanBuilder;
};

} // namespace mjflow
