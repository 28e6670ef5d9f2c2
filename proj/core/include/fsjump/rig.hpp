#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fsjump {

enum class Axis { X = 0, Y = 1, Z = 2 };

// Signed coordinate axis, e.g. +Z.
struct UpAxis {
  Axis axis = Axis::Z;
  int sign = 1;

  std::array<double, 3> vector() const;
  // Horizontal axis that counts as "facing forward" at zero yaw.
  std::array<double, 3> forward() const;
  std::string to_string() const;
  static UpAxis parse(const std::string& text);

  friend bool operator==(const UpAxis&, const UpAxis&) = default;
};

// Ordered, parented set of named joints. Validated on construction.
class JointRig {
 public:
  JointRig(std::string name, std::vector<std::string> joint_names,
           std::vector<std::optional<std::size_t>> parent,
           std::size_t root_index, std::size_t left_hip_index,
           std::size_t right_hip_index, UpAxis up = {});

  // 17-joint Human3.6M layout, +Z up.
  static const JointRig& human36m();

  const std::string& name() const { return name_; }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const std::vector<std::optional<std::size_t>>& parent() const {
    return parent_;
  }
  std::size_t joint_count() const { return joint_names_.size(); }
  std::size_t root_index() const { return root_index_; }
  std::size_t left_hip_index() const { return left_hip_index_; }
  std::size_t right_hip_index() const { return right_hip_index_; }
  UpAxis up() const { return up_; }

  std::optional<std::size_t> find(const std::string& joint_name) const;

  nlohmann::json to_json() const;
  static JointRig from_json(const nlohmann::json& j);
  static JointRig load(const std::string& path);

  friend bool operator==(const JointRig&, const JointRig&) = default;

 private:
  std::string name_;
  std::vector<std::string> joint_names_;
  std::vector<std::optional<std::size_t>> parent_;
  std::size_t root_index_;
  std::size_t left_hip_index_;
  std::size_t right_hip_index_;
  UpAxis up_;
};

// Resolves a rig by name ("h36m") or, failing that, as a path to a rig file.
JointRig resolve_rig(const std::string& name_or_path);

}  // namespace fsjump
