#include "fsjump/rig.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "fsjump/error.hpp"

namespace fsjump {

std::array<double, 3> UpAxis::vector() const {
  std::array<double, 3> v{0.0, 0.0, 0.0};
  v[static_cast<int>(axis)] = static_cast<double>(sign);
  return v;
}

std::array<double, 3> UpAxis::forward() const {
  // Next axis in cyclic order: +Z up faces +Y, +Y up faces +X, +X up faces +Z.
  std::array<double, 3> v{0.0, 0.0, 0.0};
  v[(static_cast<int>(axis) + 2) % 3] = 1.0;
  return v;
}

std::string UpAxis::to_string() const {
  static const char* names[] = {"X", "Y", "Z"};
  return std::string(sign < 0 ? "-" : "+") + names[static_cast<int>(axis)];
}

UpAxis UpAxis::parse(const std::string& text) {
  std::string t = text;
  int sign = 1;
  if (!t.empty() && (t[0] == '+' || t[0] == '-')) {
    sign = t[0] == '-' ? -1 : 1;
    t = t.substr(1);
  }
  if (t == "X" || t == "x") return {Axis::X, sign};
  if (t == "Y" || t == "y") return {Axis::Y, sign};
  if (t == "Z" || t == "z") return {Axis::Z, sign};
  throw ParseError("invalid up axis '" + text + "'");
}

JointRig::JointRig(std::string name, std::vector<std::string> joint_names,
                   std::vector<std::optional<std::size_t>> parent,
                   std::size_t root_index, std::size_t left_hip_index,
                   std::size_t right_hip_index, UpAxis up)
    : name_(std::move(name)),
      joint_names_(std::move(joint_names)),
      parent_(std::move(parent)),
      root_index_(root_index),
      left_hip_index_(left_hip_index),
      right_hip_index_(right_hip_index),
      up_(up) {
  const std::size_t n = joint_names_.size();
  if (n == 0) throw DimensionError("rig '" + name_ + "' has no joints");
  if (parent_.size() != n)
    throw DimensionError("rig '" + name_ + "': parent list length " +
                         std::to_string(parent_.size()) + " != joint count " +
                         std::to_string(n));
  if (std::set<std::string>(joint_names_.begin(), joint_names_.end()).size() !=
      n)
    throw ParseError("rig '" + name_ + "': joint names are not unique");
  if (root_index_ >= n || left_hip_index_ >= n || right_hip_index_ >= n)
    throw RangeError("rig '" + name_ + "': root/hip index out of range");
  if (left_hip_index_ == right_hip_index_)
    throw ParseError("rig '" + name_ + "': left and right hip coincide");
  if (up_.sign != 1 && up_.sign != -1)
    throw ParseError("rig '" + name_ + "': up axis sign must be +-1");

  // Parents must form a tree rooted at root_index: exactly one parentless
  // joint, and every chain terminates there without cycles.
  for (std::size_t j = 0; j < n; ++j) {
    if (!parent_[j].has_value()) {
      if (j != root_index_)
        throw ParseError("rig '" + name_ + "': joint '" + joint_names_[j] +
                         "' has no parent but is not the root");
      continue;
    }
    if (j == root_index_)
      throw ParseError("rig '" + name_ + "': root joint has a parent");
    if (*parent_[j] >= n)
      throw RangeError("rig '" + name_ + "': parent index out of range");
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t cur = j;
    std::size_t steps = 0;
    while (parent_[cur].has_value()) {
      cur = *parent_[cur];
      if (++steps > n)
        throw ParseError("rig '" + name_ + "': parent cycle at joint '" +
                         joint_names_[j] + "'");
    }
  }
}

const JointRig& JointRig::human36m() {
  static const JointRig rig = [] {
    std::vector<std::string> names = {
        "pelvis",     "right_hip",      "right_knee",    "right_ankle",
        "left_hip",   "left_knee",      "left_ankle",    "spine",
        "thorax",     "neck",           "head",          "left_shoulder",
        "left_elbow", "left_wrist",     "right_shoulder", "right_elbow",
        "right_wrist"};
    std::vector<std::optional<std::size_t>> parent = {
        std::nullopt, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
    return JointRig("h36m", std::move(names), std::move(parent), 0, 4, 1,
                    UpAxis{Axis::Z, 1});
  }();
  return rig;
}

std::optional<std::size_t> JointRig::find(const std::string& joint_name) const {
  for (std::size_t j = 0; j < joint_names_.size(); ++j)
    if (joint_names_[j] == joint_name) return j;
  return std::nullopt;
}

nlohmann::json JointRig::to_json() const {
  nlohmann::json parents = nlohmann::json::array();
  for (const auto& p : parent_) {
    if (p)
      parents.push_back(static_cast<long long>(*p));
    else
      parents.push_back(-1);
  }
  return {{"name", name_},
          {"joint_names", joint_names_},
          {"parent", parents},
          {"root_index", root_index_},
          {"left_hip_index", left_hip_index_},
          {"right_hip_index", right_hip_index_},
          {"up_axis", up_.to_string()}};
}

JointRig JointRig::from_json(const nlohmann::json& j) {
  try {
    std::vector<std::optional<std::size_t>> parent;
    for (const auto& p : j.at("parent")) {
      if (p.is_null() || p.get<long long>() < 0)
        parent.emplace_back(std::nullopt);
      else
        parent.emplace_back(p.get<std::size_t>());
    }
    return JointRig(j.value("name", std::string("custom")),
                    j.at("joint_names").get<std::vector<std::string>>(),
                    std::move(parent), j.at("root_index").get<std::size_t>(),
                    j.at("left_hip_index").get<std::size_t>(),
                    j.at("right_hip_index").get<std::size_t>(),
                    UpAxis::parse(j.value("up_axis", std::string("+Z"))));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rig definition: ") + e.what());
  }
}

JointRig JointRig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rig file '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("rig file '" + path + "': " + e.what());
  }
}

JointRig resolve_rig(const std::string& name_or_path) {
  if (name_or_path == "h36m" || name_or_path == "human36m")
    return JointRig::human36m();
  if (std::filesystem::exists(name_or_path)) return JointRig::load(name_or_path);
  throw ParseError("unknown rig '" + name_or_path + "'");
}

}  // namespace fsjump
