#pragma once

#include <limits>
#include <string>
#include <vector>

namespace marlbench::config {

enum class LeafType { Int, Float, Bool, String, IntList };

// One typed, range-checked configuration key.
struct SchemaLeaf {
  std::string key;
  LeafType type = LeafType::Float;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  bool max_exclusive = false;
  std::vector<std::string> choices;  // string enums
  std::string doc;

  std::string range_str() const;
  std::string type_str() const;
};

// Every accepted configuration key. CLI help and the config reference are
// generated from this table.
const std::vector<SchemaLeaf>& config_schema();

const SchemaLeaf* find_leaf(const std::string& key);

// Closest schema key by edit distance (for typo suggestions).
std::string nearest_key(const std::string& key);

}  // namespace marlbench::config
