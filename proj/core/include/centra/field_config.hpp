#pragma once

#include <map>
#include <string>

#include "centra/catalog.hpp"

namespace centra {

// Flat key=value config with [section] headers. Field specs come either from
// builtin=<catalog-name> or from per-component polynomial coefficient lists:
//
//   [domain]
//   kind = box
//   lower = -2,-2
//   upper = 2,2
//   radius = 1.0
//
//   [field]
//   component_1 = 1 1 0     ; monomials "coef e1 .. ed", ';' separated
//   component_2 = -1 0 1
//
// All numeric values parse as decimal doubles.
struct ParsedConfig {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
};

ParsedConfig parse_config_file(const std::string& path);
ParsedConfig parse_config_text(const std::string& text);

// Builds the field (catalog entry or polynomial spec) described by the config.
CatalogEntry field_from_config(const ParsedConfig& cfg, const CatalogOptions& opts = {});

}  // namespace centra
