#pragma once

#include <filesystem>
#include <optional>

#include "atlas/cache/smartcache.hpp"
#include "atlas/catalog.hpp"
#include "atlas/fixtures.hpp"
#include "atlas/warehouse.hpp"

namespace atlas {

/// Every publishable layer, projected with the catalog's projection, at the
/// catalog base scale unless `scale` overrides it.
inline CacheSpec catalog_cache_spec(const CountryEntry& entry, const Warehouse& w,
                                    std::optional<std::int64_t> scale = std::nullopt) {
  if (entry.projection.empty())
    throw error(errc::invalid_argument, "catalog entry '" + entry.code + "' names no cache projection");
  const auto s = scale.value_or(entry.base_scale_denom);
  if (s < defaults::min_scale_denom || s > defaults::max_scale_denom)
    throw error(errc::invalid_argument, "scale denominator out of range", std::to_string(s));
  return full_cache_spec(w, geo::parse_projection(entry.projection), s);
}

namespace fixtures {

/**
 * Materializes the corpus as a deployed atlas under `dir`: the files from
 * write_corpus plus warehouses/<CODE>.piwa and caches/<CODE>.pisc for all
 * thirteen entries. Returns the number of source features.
 */
inline std::size_t build_site(const std::filesystem::path& dir, std::uint64_t seed = default_seed) {
  const auto corpus = make_corpus(seed);
  const auto n = write_corpus(corpus, dir);
  std::filesystem::create_directories(dir / "warehouses");
  std::filesystem::create_directories(dir / "caches");
  for (const auto& f : corpus.warehouses) {
    const auto w = build_warehouse(f);
    const auto& entry = corpus.catalog.at(f.code);
    save_warehouse(w, dir / "warehouses" / entry.warehouse);
    build_cache(w, catalog_cache_spec(entry, w), dir / "caches" / entry.cache);
  }
  return n;
}

}  // namespace fixtures
}  // namespace atlas
