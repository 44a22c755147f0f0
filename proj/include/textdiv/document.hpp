#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "textdiv/error.hpp"

namespace textdiv {

/// One evaluated text unit. `meta` carries band, model, technique and language tags.
struct Document {
  std::string id;
  std::string text;
  std::map<std::string, std::string> meta;

  friend bool operator==(const Document&, const Document&) = default;
};

inline void to_json(nlohmann::json& j, const Document& d) {
  j = nlohmann::json{{"id", d.id}, {"text", d.text}};
  if (!d.meta.empty()) j["meta"] = d.meta;
}

inline void from_json(const nlohmann::json& j, Document& d) {
  if (!j.is_object() || !j.contains("id") || !j.contains("text"))
    throw Error(Errc::format, "document needs string fields 'id' and 'text'");
  d.id = j.at("id").get<std::string>();
  d.text = j.at("text").get<std::string>();
  d.meta.clear();
  if (auto it = j.find("meta"); it != j.end() && it->is_object()) {
    for (const auto& [k, v] : it->items())
      d.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
}

}  // namespace textdiv
