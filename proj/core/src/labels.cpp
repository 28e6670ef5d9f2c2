#include "fsjump/labels.hpp"

#include <algorithm>
#include <cctype>

#include "fsjump/error.hpp"

namespace fsjump {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string to_string(Level level) {
  return level == Level::Set ? "set" : "element";
}

std::string to_string(JumpType type) {
  switch (type) {
    case JumpType::Axel: return "Axel";
    case JumpType::Salchow: return "Salchow";
    case JumpType::Toeloop: return "Toeloop";
    case JumpType::Loop: return "Loop";
    case JumpType::Flip: return "Flip";
    case JumpType::Lutz: return "Lutz";
  }
  return "?";
}

std::string to_string(Category category) {
  switch (category) {
    case Category::None: return "NONE";
    case Category::Entry: return "entry";
    case Category::Jump: return "jump";
    case Category::Landing: return "landing";
  }
  return "?";
}

Level parse_level(const std::string& text) {
  const auto t = lower(text);
  if (t == "set") return Level::Set;
  if (t == "element") return Level::Element;
  throw ParseError("unknown level '" + text + "' (expected set|element)");
}

JumpType parse_jump_type(const std::string& text) {
  auto t = lower(text);
  t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
  if (t == "axel") return JumpType::Axel;
  if (t == "salchow") return JumpType::Salchow;
  if (t == "toeloop") return JumpType::Toeloop;
  if (t == "loop") return JumpType::Loop;
  if (t == "flip") return JumpType::Flip;
  if (t == "lutz") return JumpType::Lutz;
  throw UnknownLabelError("unknown jump type '" + text + "'");
}

std::string Label::name() const {
  switch (category) {
    case Category::None: return "NONE";
    case Category::Landing: return "landing";
    case Category::Entry: return to_string(*jump_type) + " entry";
    case Category::Jump:
      if (rotations)
        return std::to_string(*rotations) + " " + to_string(*jump_type) +
               " jump";
      return to_string(*jump_type) + " jump";
  }
  return "?";
}

Label Label::parse(const std::string& name, Level level) {
  const auto t = lower(name);
  if (t == "none") return none(level);
  if (t == "landing") return landing(level);

  const auto last_space = name.rfind(' ');
  if (last_space == std::string::npos)
    throw UnknownLabelError("unknown label '" + name + "'");
  const auto suffix = lower(name.substr(last_space + 1));
  std::string head = name.substr(0, last_space);

  try {
    if (suffix == "entry") return entry(level, parse_jump_type(head));
    if (suffix == "jump") {
      std::optional<int> rotations;
      const auto first_space = head.find(' ');
      if (!head.empty() && std::isdigit(static_cast<unsigned char>(head[0])) &&
          first_space != std::string::npos) {
        rotations = std::stoi(head.substr(0, first_space));
        head = head.substr(first_space + 1);
      }
      const auto type = parse_jump_type(head);
      if (level == Level::Set) {
        if (rotations)
          throw UnknownLabelError("label '" + name +
                                  "' carries a rotation count at set level");
        return set_jump(type);
      }
      if (!rotations)
        throw UnknownLabelError("label '" + name +
                                "' lacks a rotation count at element level");
      return element_jump(type, *rotations);
    }
  } catch (const UnknownLabelError&) {
    throw UnknownLabelError("unknown label '" + name + "'");
  }
  throw UnknownLabelError("unknown label '" + name + "'");
}

void Label::check() const {
  const bool needs_type =
      category == Category::Entry || category == Category::Jump;
  if (needs_type != jump_type.has_value())
    throw InvalidAnnotationError("label category " + to_string(category) +
                                 (needs_type ? " requires" : " forbids") +
                                 " a jump type");
  const bool needs_rot = level == Level::Element && category == Category::Jump;
  if (needs_rot != rotations.has_value())
    throw InvalidAnnotationError("rotation count is only valid on "
                                 "element-level jump labels");
  if (rotations && *rotations < 1)
    throw InvalidAnnotationError("rotation count must be >= 1");
}

Label project_to_set(const Label& label) {
  Label out = label;
  out.level = Level::Set;
  out.rotations.reset();
  return out;
}

const RotationTable& default_rotation_table() {
  static const RotationTable table = {
      {JumpType::Axel, {1, 2, 3}},       {JumpType::Salchow, {1, 2, 3, 4}},
      {JumpType::Toeloop, {1, 2, 3, 4}}, {JumpType::Loop, {1, 2, 3, 4}},
      {JumpType::Flip, {1, 2, 3, 4}},    {JumpType::Lutz, {1, 2, 3, 4}}};
  return table;
}

LabelTaxonomy::LabelTaxonomy(Level level, std::vector<Label> labels)
    : level_(level), labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto [it, inserted] =
        by_name_.emplace(labels_[i].name(), static_cast<LabelId>(i));
    if (!inserted)
      throw TaxonomyCountError("duplicate label '" + it->first + "'");
  }
}

const Label& LabelTaxonomy::label(LabelId id) const {
  if (id >= labels_.size())
    throw RangeError("label id " + std::to_string(id) + " outside taxonomy");
  return labels_[id];
}

std::optional<LabelId> LabelTaxonomy::find(const Label& label) const {
  if (label.level != level_) return std::nullopt;
  return find(label.name());
}

std::optional<LabelId> LabelTaxonomy::find(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

LabelId LabelTaxonomy::id_of(const Label& label) const {
  if (auto id = find(label)) return *id;
  throw UnknownLabelError("label '" + label.name() + "' not in " +
                          to_string(level_) + " taxonomy");
}

LabelId LabelTaxonomy::id_of(const std::string& name) const {
  if (auto id = find(name)) return *id;
  // Accept non-canonical spellings ("Toe Loop jump", "none").
  Label parsed;
  try {
    parsed = Label::parse(name, level_);
  } catch (const UnknownLabelError&) {
    throw UnknownLabelError("unknown label '" + name + "' in " +
                            to_string(level_) + " taxonomy");
  }
  if (auto id = find(parsed)) return *id;
  throw UnknownLabelError("unknown label '" + name + "' in " +
                          to_string(level_) + " taxonomy");
}

nlohmann::json LabelTaxonomy::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (const auto& l : labels_) names.push_back(l.name());
  return {{"level", to_string(level_)}, {"labels", names}};
}

LabelTaxonomy LabelTaxonomy::from_json(const nlohmann::json& j) {
  try {
    const Level level = parse_level(j.at("level").get<std::string>());
    std::vector<Label> labels;
    for (const auto& n : j.at("labels"))
      labels.push_back(Label::parse(n.get<std::string>(), level));
    if (labels.empty() || !labels.front().is_none())
      throw ParseError("taxonomy must list NONE first");
    for (std::size_t i = 1; i < labels.size(); ++i)
      if (labels[i].is_none()) throw ParseError("taxonomy lists NONE twice");
    return LabelTaxonomy(level, std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("taxonomy: ") + e.what());
  }
}

LabelTaxonomy build_taxonomy(Level level, const RotationTable& table,
                             bool allow_custom) {
  std::vector<Label> labels{Label::none(level)};
  for (JumpType t : kAllJumpTypes) labels.push_back(Label::entry(level, t));

  std::size_t jumps = 0;
  if (level == Level::Set) {
    for (JumpType t : kAllJumpTypes) labels.push_back(Label::set_jump(t));
    jumps = 6;
  } else {
    for (JumpType t : kAllJumpTypes) {
      const auto it = table.find(t);
      if (it == table.end()) continue;
      for (int r : it->second) {  // std::set iterates ascending
        if (r < 1)
          throw TaxonomyCountError("rotation count must be >= 1 (got " +
                                   std::to_string(r) + " for " + to_string(t) +
                                   ")");
        labels.push_back(Label::element_jump(t, r));
        ++jumps;
      }
    }
    if (jumps != 23 && !allow_custom)
      throw TaxonomyCountError("element rotation table yields " +
                               std::to_string(jumps) +
                               " jump labels, expected 23");
  }
  labels.push_back(Label::landing(level));
  return LabelTaxonomy(level, std::move(labels));
}

const LabelTaxonomy& default_taxonomy(Level level) {
  static const LabelTaxonomy set = build_taxonomy(Level::Set);
  static const LabelTaxonomy element = build_taxonomy(Level::Element);
  return level == Level::Set ? set : element;
}

}  // namespace fsjump
