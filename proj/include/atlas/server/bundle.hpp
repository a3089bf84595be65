#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "atlas/catalog.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/server/config.hpp"

namespace atlas::server {

/**
 * Offline bundle layout (every path relative to the bundle root):
 *
 *   atlas.conf       server config pointing at the files below
 *   catalog.json     the full catalog
 *   caches/*.pisc    the exported caches
 *   ui/...           built UI assets, when the source config has any
 *   manifest.json    file list with sizes and FNV-1a digests
 *
 * `atlas serve --config <bundle>/atlas.conf` serves it from anywhere.
 */
struct BundleOptions {
  std::vector<std::string> countries;  // empty: every catalog entry with a cache
  bool force = false;                  // allow a non-empty output directory
};

inline nlohmann::json export_offline_bundle(const ServerConfig& cfg, const AtlasCatalog& catalog,
                                            const std::filesystem::path& out, const BundleOptions& opts = {}) {
  namespace fs = std::filesystem;
  if (fs::exists(out) && !fs::is_directory(out))
    throw error(errc::invalid_argument, "bundle output is not a directory", out.string());
  if (fs::exists(out) && !fs::is_empty(out) && !opts.force)
    throw error(errc::invalid_argument, "bundle output directory is not empty (use --force)", out.string());

  std::vector<const CountryEntry*> selected;
  if (opts.countries.empty()) {
    for (const auto* c : catalog.all())
      if (fs::is_regular_file(cache_path(cfg, *c))) selected.push_back(c);
    if (selected.empty()) throw error(errc::not_found, "no caches to export", cfg.cache_dir.string());
  } else {
    for (const auto& code : opts.countries) {
      const auto* c = catalog.find(code);
      if (!c) throw error(errc::not_found, "unknown warehouse '" + code + "'");
      if (!fs::is_regular_file(cache_path(cfg, *c)))
        throw error(errc::not_found, "no cache built for '" + code + "'", cache_path(cfg, *c).string());
      if (std::find(selected.begin(), selected.end(), c) == selected.end()) selected.push_back(c);
    }
  }

  fs::create_directories(out / "caches");
  std::vector<std::string> files;
  AtlasCatalog bundled = catalog;
  for (auto* c : bundled.all()) {
    auto& entry = const_cast<CountryEntry&>(*c);
    entry.cache = entry.code + ".pisc";
    entry.warehouse.clear();
  }
  for (const auto* c : selected) {
    const auto rel = "caches/" + c->code + ".pisc";
    io::write_file_atomic(out / rel, io::read_file(cache_path(cfg, *c)));
    files.push_back(rel);
  }
  io::write_text_atomic(out / "catalog.json", catalog_to_json(bundled).dump(2) + "\n");
  files.push_back("catalog.json");

  ServerConfig bc;
  bc.catalog = "catalog.json";
  bc.cache_dir = "caches";
  bc.host = cfg.host;
  bc.port = cfg.port;
  if (!cfg.ui_dir.empty() && fs::is_directory(cfg.ui_dir)) {
    bc.ui_dir = "ui";
    for (const auto& e : fs::recursive_directory_iterator(cfg.ui_dir)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), cfg.ui_dir);
      fs::create_directories((out / "ui" / rel).parent_path());
      io::write_file_atomic(out / "ui" / rel, io::read_file(e.path()));
      files.push_back(("ui" / rel).generic_string());
    }
  }
  io::write_text_atomic(out / "atlas.conf", "# offline atlas bundle\n" + format_config(bc));
  files.push_back("atlas.conf");
  std::sort(files.begin(), files.end());

  nlohmann::json listing = nlohmann::json::array();
  for (const auto& f : files) {
    const auto bytes = io::read_file(out / f);
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(io::fnv1a(bytes)));
    listing.push_back({{"path", f}, {"bytes", bytes.size()}, {"fnv1a", digest}});
  }
  nlohmann::json codes = nlohmann::json::array();
  for (const auto* c : selected) codes.push_back(c->code);
  nlohmann::json manifest{{"format", "atlas-offline-bundle"}, {"version", 1}, {"config", "atlas.conf"},
                          {"catalog", "catalog.json"},         {"countries", codes}, {"files", listing}};
  io::write_text_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace atlas::server
