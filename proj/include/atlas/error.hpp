#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atlas {

/// Error categories shared by every module. The HTTP layer and the CLI map
/// these onto status codes and exit codes respectively.
enum class errc {
  invalid_argument,     // caller supplied a bad value or spec string
  not_found,            // unknown warehouse, layer, country or file
  out_of_zone,          // point outside a projection's validity zone
  singular,             // degenerate geometry for a fit (collinear GCPs)
  parse_error,          // unparseable interchange file
  schema_error,         // data does not conform to a layer schema
  format_error,         // bad magic number in a container file
  unsupported_version,  // container file written by a newer format
  corrupt,              // truncated or checksum-failing container file
  not_publishable,      // raster layer requested for the cache
  validation_failed,    // warehouse fails its invariant checks
  io_error,
  internal,
};

constexpr std::string_view to_string(errc c) noexcept {
  switch (c) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::not_found: return "not_found";
    case errc::out_of_zone: return "out_of_zone";
    case errc::singular: return "singular";
    case errc::parse_error: return "parse_error";
    case errc::schema_error: return "schema_error";
    case errc::format_error: return "format_error";
    case errc::unsupported_version: return "unsupported_version";
    case errc::corrupt: return "corrupt";
    case errc::not_publishable: return "not_publishable";
    case errc::validation_failed: return "validation_failed";
    case errc::io_error: return "io_error";
    case errc::internal: return "internal";
  }
  return "internal";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  errc code_;
  std::string detail_;
};

}  // namespace atlas
