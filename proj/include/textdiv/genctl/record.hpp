#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "textdiv/error.hpp"

namespace textdiv {

/// A band or musical act as listed on the platform.
struct FormationRecord {
  std::string id;  // defaults to `name` when the source has no id column
  std::string name;
  std::string formation_type;
  std::string homebase;
  std::optional<double> radius_km;
  std::vector<std::string> genres;
  std::vector<std::string> event_types;
  std::optional<std::string> description;
  std::optional<std::string> language;
  std::optional<std::string> quality_flag;

  const std::string& key() const noexcept { return id.empty() ? name : id; }

  friend bool operator==(const FormationRecord&, const FormationRecord&) = default;
};

/// Record fields that can appear in a prompt's data block.
enum class Field { name, type, homebase, radius, genres, event_types };

inline constexpr std::array<Field, 6> kAllFields = {Field::name,   Field::type,   Field::homebase,
                                                    Field::radius, Field::genres, Field::event_types};

inline std::string_view field_key(Field f) {
  switch (f) {
    case Field::name: return "name";
    case Field::type: return "type";
    case Field::homebase: return "homebase";
    case Field::radius: return "radius";
    case Field::genres: return "genres";
    case Field::event_types: return "event_types";
  }
  return "";
}

/// Predicate wording used in data triplets.
inline std::string_view field_predicate(Field f) {
  switch (f) {
    case Field::name: return "name";
    case Field::type: return "formation type";
    case Field::homebase: return "based in";
    case Field::radius: return "travel radius";
    case Field::genres: return "genre";
    case Field::event_types: return "plays at";
  }
  return "";
}

inline Field parse_field(std::string_view key) {
  for (auto f : kAllFields)
    if (field_key(f) == key) return f;
  throw Error(Errc::invalid_parameter, "unknown record field '" + std::string(key) + "'");
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string format_radius(double km) {
  // Whole kilometres print without a fractional part.
  if (km == static_cast<double>(static_cast<long long>(km))) return std::to_string(static_cast<long long>(km)) + " km";
  auto s = nlohmann::json(km).dump();
  return s + " km";
}

/// Rendered value of a field, or nullopt when the record does not have it.
inline std::optional<std::string> field_value(const FormationRecord& r, Field f) {
  switch (f) {
    case Field::name:
      if (r.name.empty()) return std::nullopt;
      return r.name;
    case Field::type:
      if (r.formation_type.empty()) return std::nullopt;
      return r.formation_type;
    case Field::homebase:
      if (r.homebase.empty()) return std::nullopt;
      return r.homebase;
    case Field::radius:
      if (!r.radius_km) return std::nullopt;
      return format_radius(*r.radius_km);
    case Field::genres:
      if (r.genres.empty()) return std::nullopt;
      return join(r.genres, ", ");
    case Field::event_types:
      if (r.event_types.empty()) return std::nullopt;
      return join(r.event_types, ", ");
  }
  return std::nullopt;
}

inline std::vector<Field> present_fields(const FormationRecord& r) {
  std::vector<Field> out;
  for (auto f : kAllFields)
    if (field_value(r, f)) out.push_back(f);
  return out;
}

inline void validate(const FormationRecord& r) {
  if (r.name.empty()) throw Error(Errc::invalid_parameter, "record name must be non-empty");
  if (r.radius_km && !(*r.radius_km >= 0.0))
    throw Error(Errc::invalid_parameter, "radius_km must be a nonnegative number");
}

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v)
      if (e.is_string() && !e.get<std::string>().empty()) out.push_back(e.get<std::string>());
  } else if (v.is_string()) {
    // "Pop; Jazz" or "Pop, Jazz"
    const auto s = v.get<std::string>();
    const char sep = s.find(';') != std::string::npos ? ';' : ',';
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto next = s.find(sep, pos);
      auto item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      auto b = item.find_first_not_of(" \t");
      auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  } else if (!v.is_null()) {
    throw Error(Errc::format, "expected a list of strings");
  }
  return out;
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::format, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const FormationRecord& r) {
  j = nlohmann::json::object();
  if (!r.id.empty()) j["id"] = r.id;
  j["name"] = r.name;
  if (!r.formation_type.empty()) j["type"] = r.formation_type;
  if (!r.homebase.empty()) j["homebase"] = r.homebase;
  if (r.radius_km) j["radius_km"] = *r.radius_km;
  j["genres"] = r.genres;
  j["event_types"] = r.event_types;
  if (r.description) j["description"] = *r.description;
  if (r.language) j["language"] = *r.language;
  if (r.quality_flag) j["quality_flag"] = *r.quality_flag;
}

inline void from_json(const nlohmann::json& j, FormationRecord& r) {
  if (!j.is_object()) throw Error(Errc::format, "record must be a JSON object");
  r = FormationRecord{};
  r.name = detail::optional_string(j, "name").value_or("");
  r.id = detail::optional_string(j, "id").value_or("");
  r.formation_type = detail::optional_string(j, "type").value_or("");
  r.homebase = detail::optional_string(j, "homebase").value_or("");
  if (auto it = j.find("radius_km"); it != j.end() && !it->is_null()) {
    if (it->is_number()) {
      r.radius_km = it->get<double>();
    } else if (it->is_string() && !it->get<std::string>().empty()) {
      try {
        r.radius_km = std::stod(it->get<std::string>());
      } catch (const std::exception&) {
        throw Error(Errc::format, "radius_km is not a number");
      }
    }
  }
  if (auto it = j.find("genres"); it != j.end()) r.genres = detail::string_list(*it);
  if (auto it = j.find("event_types"); it != j.end()) r.event_types = detail::string_list(*it);
  r.description = detail::optional_string(j, "description");
  r.language = detail::optional_string(j, "language");
  r.quality_flag = detail::optional_string(j, "quality_flag");
  validate(r);
}

}  // namespace textdiv
