#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/error.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/warehouse/geometry.hpp"

namespace atlas {

/// Entry in a country's site index. Countries without sub-entries carry a
/// single whole-country site.
struct Site {
  std::string name;
  bool whole_country = false;
  std::optional<Box> extent;  // geographic, lon in [0, 360)

  bool operator==(const Site&) const = default;
};

struct CountryEntry {
  std::string code;  // ISO-style two letters, or "REGION"
  std::string name;
  std::optional<std::string> capital;
  std::optional<std::int64_t> population;  // 2003 estimate
  std::optional<std::int64_t> area_km2;
  std::optional<std::int64_t> coastline_km;
  std::int64_t base_scale_denom = 0;
  std::vector<Site> sites;
  // Deployment data, supplied by the catalog file.
  std::optional<Box> extent;
  std::string projection;  // spec string for the cache projection
  std::string warehouse;   // paths relative to the configured directories
  std::string cache;

  bool operator==(const CountryEntry&) const = default;
};

inline constexpr std::string_view region_code = "REGION";

struct AtlasCatalog {
  std::vector<CountryEntry> countries;  // the twelve member countries
  CountryEntry region;

  const CountryEntry* find(std::string_view code) const noexcept {
    if (code == region.code) return &region;
    for (const auto& c : countries)
      if (c.code == code) return &c;
    return nullptr;
  }

  const CountryEntry& at(std::string_view code) const {
    if (auto* c = find(code)) return *c;
    throw error(errc::not_found, "unknown warehouse '" + std::string(code) + "'");
  }

  /// Countries in catalog order followed by the region.
  std::vector<const CountryEntry*> all() const {
    std::vector<const CountryEntry*> out;
    for (const auto& c : countries) out.push_back(&c);
    out.push_back(&region);
    return out;
  }

  bool operator==(const AtlasCatalog&) const = default;
};

namespace detail {

inline CountryEntry country(std::string code, std::string name, std::optional<std::string> capital,
                            std::int64_t pop, std::int64_t area, std::int64_t coast, std::int64_t scale,
                            std::vector<std::string> sites) {
  CountryEntry c;
  c.code = std::move(code);
  c.name = std::move(name);
  c.capital = std::move(capital);
  c.population = pop;
  c.area_km2 = area;
  c.coastline_km = coast;
  c.base_scale_denom = scale;
  if (sites.empty())
    c.sites.push_back({c.name, true, std::nullopt});
  else
    for (auto& s : sites) c.sites.push_back({std::move(s), false, std::nullopt});
  c.warehouse = c.code + ".piwa";
  c.cache = c.code + ".pisc";
  return c;
}

}  // namespace detail

/// Member-country statistics (2003 estimates), base mapping scales and site
/// index of the atlas. Deployment fields (extents, projections) are left
/// empty here; the catalog file supplies them.
inline AtlasCatalog builtin_catalog() {
  using detail::country;
  AtlasCatalog cat;
  cat.countries = {
      country("CK", "Cook Islands", "Rarotonga", 21008, 240, 120, 100000,
              {"Northern Group", "Southern Group", "Rarotonga"}),
      country("FJ", "Fiji Islands", "Suva", 868531, 18270, 1129, 250000,
              {"Viti Levu", "Vanua Levu / Taveuni", "Yassawa / Mamanucas", "Lomaiviti Group", "Lau group",
               "Kadavu group", "Rotuma"}),
      country("KI", "Kiribati", "Bairiki", 98549, 811, 1143, 50000,
              {"Gilbert Islands", "Line Islands", "Phoenix Islands"}),
      country("MH", "Marshall Islands", "Majuro", 56429, 182, 370, 50000, {}),
      country("NR", "Nauru", "Yaren", 12570, 21, 30, 50000, {}),
      country("NU", "Niue", "Alofi", 2145, 260, 64, 50000, {}),
      country("TK", "Tokelau", std::nullopt, 1418, 10, 101, 50000, {}),
      country("TO", "Tonga", "Nuku'alofa", 108141, 748, 419, 100000,
              {"Vavau group", "Haapai group", "Tongatapu / Ata"}),
      country("TV", "Tuvalu", "Funafuti", 11305, 26, 24, 100000, {}),
      country("SB", "Solomon Islands", "Honiara", 509190, 28450, 5313, 250000,
              {"Temotu", "Makira-Ulawa", "Malaita", "Guadalcanal / Central Isabel", "Western", "Choiseul"}),
      country("VU", "Vanuatu", "Port Vila", 199414, 12200, 2528, 250000,
              {"Efate", "Tafea", "Shepherds", "Epi", "Paama", "Ambrym", "Pentecost", "Malakula", "Ambae-Maewo",
               "Santo-Malo", "Banks-Torres"}),
      country("WS", "Western Samoa", "Apia", 178173, 2944, 403, 250000, {"Upolu", "Savaii"}),
  };
  cat.region.code = std::string(region_code);
  cat.region.name = "Pacific Region";
  cat.region.base_scale_denom = 1000000;
  cat.region.sites.push_back({cat.region.name, true, std::nullopt});
  cat.region.warehouse = "REGION.piwa";
  cat.region.cache = "REGION.pisc";
  return cat;
}

inline bool is_catalog_code(std::string_view code) { return builtin_catalog().find(code) != nullptr; }

/// Structural invariants: twelve countries plus the region, base scales from
/// the allowed set, at least one site per entry.
inline void check_catalog(const AtlasCatalog& cat) {
  if (cat.countries.size() != 12) throw error(errc::invalid_argument, "catalog must list exactly 12 countries");
  if (cat.region.code != region_code) throw error(errc::invalid_argument, "catalog region entry must use code REGION");
  if (cat.region.base_scale_denom != 1000000)
    throw error(errc::invalid_argument, "region base scale must be 1:1,000,000");
  for (std::size_t i = 0; i < cat.countries.size(); ++i) {
    const auto& c = cat.countries[i];
    const auto s = c.base_scale_denom;
    if (s != 50000 && s != 100000 && s != 250000)
      throw error(errc::invalid_argument, "country " + c.code + ": base scale must be 50000, 100000 or 250000");
    if (c.sites.empty()) throw error(errc::invalid_argument, "country " + c.code + " has no site entries");
    for (std::size_t j = 0; j < i; ++j)
      if (cat.countries[j].code == c.code) throw error(errc::invalid_argument, "duplicate country code " + c.code);
  }
}

// ---------------------------------------------------------------------------
// JSON encoding. Boxes are [minlon, minlat, maxlon, maxlat].

inline nlohmann::json box_to_json(const Box& b) { return nlohmann::json::array({b.minx, b.miny, b.maxx, b.maxy}); }

inline Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw error(errc::parse_error, "extent must be [minx, miny, maxx, maxy]");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(b.minx <= b.maxx && b.miny <= b.maxy)) throw error(errc::parse_error, "extent min exceeds max");
  return b;
}

/// Public view used by the API: statistics, scales and sites, no paths.
inline nlohmann::json country_public_json(const CountryEntry& c) {
  using nlohmann::json;
  json j{{"code", c.code}, {"name", c.name}};
  j["capital"] = c.capital ? json(*c.capital) : json(nullptr);
  j["population"] = c.population ? json(*c.population) : json(nullptr);
  j["area_km2"] = c.area_km2 ? json(*c.area_km2) : json(nullptr);
  j["coastline_km"] = c.coastline_km ? json(*c.coastline_km) : json(nullptr);
  j["base_scale_denom"] = c.base_scale_denom;
  j["extent"] = c.extent ? box_to_json(*c.extent) : json(nullptr);
  json sites = json::array();
  for (const auto& s : c.sites) {
    json sj{{"name", s.name}, {"whole_country", s.whole_country}};
    const auto& ext = s.extent ? s.extent : c.extent;
    sj["extent"] = ext ? box_to_json(*ext) : json(nullptr);
    sites.push_back(std::move(sj));
  }
  j["sites"] = std::move(sites);
  return j;
}

inline nlohmann::json country_to_json(const CountryEntry& c) {
  auto j = country_public_json(c);
  for (std::size_t i = 0; i < c.sites.size(); ++i)
    j["sites"][i]["extent"] = c.sites[i].extent ? box_to_json(*c.sites[i].extent) : nlohmann::json(nullptr);
  j["projection"] = c.projection;
  j["warehouse"] = c.warehouse;
  j["cache"] = c.cache;
  return j;
}

inline CountryEntry country_from_json(const nlohmann::json& j) {
  CountryEntry c;
  try {
    c.code = j.at("code").get<std::string>();
    c.name = j.at("name").get<std::string>();
    auto opt_str = [&](const char* k) -> std::optional<std::string> {
      if (!j.contains(k) || j[k].is_null()) return std::nullopt;
      return j[k].get<std::string>();
    };
    auto opt_int = [&](const char* k) -> std::optional<std::int64_t> {
      if (!j.contains(k) || j[k].is_null()) return std::nullopt;
      return j[k].get<std::int64_t>();
    };
    c.capital = opt_str("capital");
    c.population = opt_int("population");
    c.area_km2 = opt_int("area_km2");
    c.coastline_km = opt_int("coastline_km");
    c.base_scale_denom = j.at("base_scale_denom").get<std::int64_t>();
    if (j.contains("extent") && !j["extent"].is_null()) c.extent = box_from_json(j["extent"]);
    for (const auto& s : j.at("sites")) {
      Site site;
      site.name = s.at("name").get<std::string>();
      site.whole_country = s.value("whole_country", false);
      if (s.contains("extent") && !s["extent"].is_null()) site.extent = box_from_json(s["extent"]);
      c.sites.push_back(std::move(site));
    }
    c.projection = j.value("projection", std::string{});
    c.warehouse = j.value("warehouse", c.code + ".piwa");
    c.cache = j.value("cache", c.code + ".pisc");
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::parse_error, "bad catalog entry: " + std::string(e.what()));
  }
  return c;
}

inline nlohmann::json catalog_to_json(const AtlasCatalog& cat) {
  nlohmann::json countries = nlohmann::json::array();
  for (const auto& c : cat.countries) countries.push_back(country_to_json(c));
  return {{"countries", countries}, {"region", country_to_json(cat.region)}};
}

inline AtlasCatalog catalog_from_json(const nlohmann::json& j) {
  AtlasCatalog cat;
  if (!j.is_object() || !j.contains("countries") || !j.contains("region"))
    throw error(errc::parse_error, "catalog must have 'countries' and 'region'");
  for (const auto& c : j["countries"]) cat.countries.push_back(country_from_json(c));
  cat.region = country_from_json(j["region"]);
  check_catalog(cat);
  return cat;
}

inline AtlasCatalog load_catalog(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw error(errc::parse_error, "catalog " + path.string() + ": " + e.what());
  }
  return catalog_from_json(j);
}

}  // namespace atlas
