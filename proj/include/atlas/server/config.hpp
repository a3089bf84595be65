#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "atlas/catalog.hpp"
#include "atlas/error.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/io/number.hpp"

namespace atlas::server {

/**
 * Server configuration. Text format, one `key = value` per line, `#`
 * starts a comment line:
 *
 *   catalog       = catalog.json
 *   warehouse_dir = warehouses
 *   cache_dir     = caches
 *   ui_dir        = ui
 *   host          = 127.0.0.1
 *   port          = 8080
 *
 * Relative paths are resolved against the directory holding the file.
 * Only `catalog` and `cache_dir` are required.
 */
struct ServerConfig {
  std::filesystem::path catalog;
  std::filesystem::path warehouse_dir;
  std::filesystem::path cache_dir;
  std::filesystem::path ui_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
};

inline ServerConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ServerConfig c;
  bool have_catalog = false, have_cache = false;
  auto resolve = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_absolute() ? p : base_dir / p;
  };
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = io::trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const auto where = "config line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw error(errc::parse_error, where + ": expected key = value");
    const auto key = io::trim(line.substr(0, eq));
    const auto value = io::trim(line.substr(eq + 1));
    if (value.empty()) throw error(errc::parse_error, where + ": empty value for '" + std::string(key) + "'");
    if (key == "catalog") {
      c.catalog = resolve(value);
      have_catalog = true;
    } else if (key == "warehouse_dir") {
      c.warehouse_dir = resolve(value);
    } else if (key == "cache_dir") {
      c.cache_dir = resolve(value);
      have_cache = true;
    } else if (key == "ui_dir") {
      c.ui_dir = resolve(value);
    } else if (key == "host") {
      c.host = std::string(value);
    } else if (key == "port") {
      const auto port = io::parse_int(value);
      if (!port || *port < 0 || *port > 65535) throw error(errc::parse_error, where + ": port must be 0..65535");
      c.port = static_cast<int>(*port);
    } else {
      throw error(errc::parse_error, where + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_catalog) throw error(errc::parse_error, "config is missing 'catalog'");
  if (!have_cache) throw error(errc::parse_error, "config is missing 'cache_dir'");
  return c;
}

inline ServerConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path))
    throw error(errc::not_found, "config file not found", path.string());
  return parse_config(io::read_text(path), std::filesystem::absolute(path).parent_path());
}

inline std::string format_config(const ServerConfig& c) {
  std::string out = "catalog = " + c.catalog.generic_string() + "\n";
  if (!c.warehouse_dir.empty()) out += "warehouse_dir = " + c.warehouse_dir.generic_string() + "\n";
  out += "cache_dir = " + c.cache_dir.generic_string() + "\n";
  if (!c.ui_dir.empty()) out += "ui_dir = " + c.ui_dir.generic_string() + "\n";
  out += "host = " + c.host + "\nport = " + std::to_string(c.port) + "\n";
  return out;
}

inline std::filesystem::path cache_path(const ServerConfig& cfg, const CountryEntry& c) {
  return cfg.cache_dir / (c.cache.empty() ? c.code + ".pisc" : c.cache);
}

inline std::filesystem::path warehouse_path(const ServerConfig& cfg, const CountryEntry& c) {
  return cfg.warehouse_dir / (c.warehouse.empty() ? c.code + ".piwa" : c.warehouse);
}

}  // namespace atlas::server
