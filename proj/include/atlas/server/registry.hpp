#pragma once

#include <sys/stat.h>

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "atlas/cache/smartcache.hpp"
#include "atlas/catalog.hpp"
#include "atlas/server/config.hpp"

namespace atlas::server {

/**
 * Hands out shared cache handles by country code. Each lookup stats the
 * file; when a rebuild has replaced it (new inode, size or mtime) the file
 * is reopened and the handle swapped. Requests already holding the old
 * handle finish against it.
 */
class CacheRegistry {
 public:
  CacheRegistry(ServerConfig cfg, AtlasCatalog catalog) : cfg_(std::move(cfg)), catalog_(std::move(catalog)) {}

  const AtlasCatalog& catalog() const noexcept { return catalog_; }
  const ServerConfig& config() const noexcept { return cfg_; }

  std::shared_ptr<const SmartCache> get(std::string_view code) const {
    const auto* entry = catalog_.find(code);
    if (!entry) throw error(errc::not_found, "unknown warehouse '" + std::string(code) + "'");
    const auto path = cache_path(cfg_, *entry);
    struct stat st {};
    std::lock_guard lock(mu_);
    auto it = slots_.find(entry->code);
    if (::stat(path.c_str(), &st) != 0) {
      if (it != slots_.end()) return it->second.cache;
      throw error(errc::not_found, "no cache built for '" + entry->code + "'", path.string());
    }
    const Stamp stamp{st.st_ino, st.st_size, st.st_mtim.tv_sec, st.st_mtim.tv_nsec};
    if (it != slots_.end() && it->second.stamp == stamp) return it->second.cache;
    try {
      auto cache = open_cache(path);
      if (cache->country_code() != entry->code)
        throw error(errc::corrupt, "cache file belongs to '" + cache->country_code() + "'", path.string());
      slots_[entry->code] = {stamp, cache};
      ++reloads_;
      return cache;
    } catch (const error&) {
      if (it != slots_.end()) return it->second.cache;
      throw;
    }
  }

  /// Number of times a cache file has been (re)opened.
  std::size_t reloads() const {
    std::lock_guard lock(mu_);
    return reloads_;
  }

 private:
  struct Stamp {
    ino_t ino;
    off_t size;
    time_t sec;
    long nsec;
    bool operator==(const Stamp&) const = default;
  };
  struct Slot {
    Stamp stamp;
    std::shared_ptr<const SmartCache> cache;
  };

  ServerConfig cfg_;
  AtlasCatalog catalog_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Slot, std::less<>> slots_;
  mutable std::size_t reloads_ = 0;
};

}  // namespace atlas::server
