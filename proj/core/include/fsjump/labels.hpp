#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace fsjump {

enum class Level { Set, Element };
enum class Category { None, Entry, Jump, Landing };
enum class JumpType { Axel, Salchow, Toeloop, Loop, Flip, Lutz };

inline constexpr JumpType kAllJumpTypes[] = {
    JumpType::Axel, JumpType::Salchow, JumpType::Toeloop,
    JumpType::Loop, JumpType::Flip,    JumpType::Lutz};

std::string to_string(Level level);
std::string to_string(JumpType type);
std::string to_string(Category category);
Level parse_level(const std::string& text);
JumpType parse_jump_type(const std::string& text);

using LabelId = std::uint16_t;
inline constexpr LabelId kNoneId = 0;

struct Label {
  Level level = Level::Set;
  Category category = Category::None;
  std::optional<JumpType> jump_type;
  std::optional<int> rotations;

  static Label none(Level level) { return {level, Category::None, {}, {}}; }
  static Label entry(Level level, JumpType t) {
    return {level, Category::Entry, t, {}};
  }
  static Label set_jump(JumpType t) {
    return {Level::Set, Category::Jump, t, {}};
  }
  static Label element_jump(JumpType t, int rotations) {
    return {Level::Element, Category::Jump, t, rotations};
  }
  static Label landing(Level level) {
    return {level, Category::Landing, {}, {}};
  }

  bool is_none() const { return category == Category::None; }

  // Canonical display name: "Axel entry", "Axel jump", "3 Axel jump",
  // "landing", "NONE".
  std::string name() const;
  static Label parse(const std::string& name, Level level);

  // Throws InvalidAnnotationError if the field combination is illegal.
  void check() const;

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;
};

// Drops the rotation count of an element-level label.
Label project_to_set(const Label& label);

using RotationTable = std::map<JumpType, std::set<int>>;

// {Salchow, Toeloop, Loop, Flip, Lutz} x 1-4 plus Axel x 1-3: 23 jump labels.
const RotationTable& default_rotation_table();

class LabelTaxonomy {
 public:
  Level level() const { return level_; }
  // All labels, NONE first; ids are positions in this list.
  const std::vector<Label>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t action_label_count() const { return labels_.size() - 1; }
  const Label& none_label() const { return labels_.front(); }

  const Label& label(LabelId id) const;
  std::optional<LabelId> find(const Label& label) const;
  std::optional<LabelId> find(const std::string& name) const;
  LabelId id_of(const Label& label) const;
  LabelId id_of(const std::string& name) const;

  nlohmann::json to_json() const;
  static LabelTaxonomy from_json(const nlohmann::json& j);

  friend bool operator==(const LabelTaxonomy& a, const LabelTaxonomy& b) {
    return a.level_ == b.level_ && a.labels_ == b.labels_;
  }

 private:
  friend LabelTaxonomy build_taxonomy(Level, const RotationTable&, bool);
  LabelTaxonomy(Level level, std::vector<Label> labels);

  Level level_;
  std::vector<Label> labels_;
  std::unordered_map<std::string, LabelId> by_name_;
};

// Deterministic ordering: NONE, entries by jump type, jumps by type then
// ascending rotations, landing. Element level must yield 23 jump labels
// unless allow_custom is set (TaxonomyCountError otherwise).
LabelTaxonomy build_taxonomy(Level level,
                             const RotationTable& table = default_rotation_table(),
                             bool allow_custom = false);

const LabelTaxonomy& default_taxonomy(Level level);

// Half-open frame interval [start, end).
struct Segment {
  Label label;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct FrameLabels {
  Level level = Level::Set;
  std::vector<LabelId> labels;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const FrameLabels&, const FrameLabels&) = default;
};

}  // namespace fsjump
