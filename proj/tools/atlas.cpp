// atlas: operator tool for the warehouse -> cache -> server pipeline.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atlas/fixtures.hpp"
#include "atlas/geo.hpp"
#include "atlas/pipeline.hpp"
#include "atlas/server/api.hpp"
#include "atlas/server/bundle.hpp"
#include "atlas/server/config.hpp"
#include "atlas/server/http.hpp"
#include "atlas/warehouse.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace atlas;

namespace {

enum Exit { ok = 0, user_error = 1, data_error = 2, internal_error = 3 };

int exit_code(errc c) {
  switch (c) {
    case errc::invalid_argument:
    case errc::not_found: return user_error;
    case errc::io_error:
    case errc::internal: return internal_error;
    default: return data_error;
  }
}

struct Outcome {
  int code = ok;
  json report = json::object();
};

struct Common {
  std::string config = "atlas.conf";
  std::string report;
};

struct Site {
  server::ServerConfig cfg;
  AtlasCatalog catalog;
};

Site load_site(const Common& c) {
  Site s{server::load_config(c.config), {}};
  s.catalog = load_catalog(s.cfg.catalog);
  return s;
}

/// "all" expands to every catalog code.
std::vector<const CountryEntry*> select(const Site& s, const std::vector<std::string>& codes) {
  std::vector<const CountryEntry*> out;
  for (const auto& code : codes) {
    if (code == "all") {
      for (const auto* e : s.catalog.all()) out.push_back(e);
      continue;
    }
    const auto* e = s.catalog.find(code);
    if (!e) throw error(errc::not_found, "unknown warehouse '" + code + "'");
    out.push_back(e);
  }
  if (out.empty()) throw error(errc::invalid_argument, "no warehouse selected");
  return out;
}

Warehouse open_warehouse(const Site& s, const CountryEntry& e) {
  const auto path = server::warehouse_path(s.cfg, e);
  if (!fs::exists(path))
    throw error(errc::not_found, "warehouse " + e.code + " does not exist (run 'atlas create')", path.string());
  return load_warehouse(path);
}

std::string summarize(const CleanReport& r) {
  std::ostringstream o;
  const std::pair<const char*, std::size_t> fields[] = {
      {"stored", r.features_stored},                {"rejected", r.features_rejected},
      {"duplicates removed", r.duplicates_removed}, {"rings closed", r.rings_closed},
      {"rings reoriented", r.rings_reoriented},     {"vertices snapped", r.vertices_snapped},
      {"merged", r.features_merged},                {"attributes dropped", r.attributes_dropped}};
  const char* sep = "";
  for (const auto& [name, n] : fields)
    if (n) o << std::exchange(sep, ", ") << name << " " << n;
  if (!r.unmerged.empty()) o << sep << "unmerged " << r.unmerged.size();
  const auto s = o.str();
  return s.empty() ? "nothing stored" : s;
}

void print_rejections(const CleanReport& r) {
  for (const auto& x : r.rejections) std::cout << "  rejected " << x.id << ": " << x.reason << "\n";
  for (const auto& u : r.unmerged) std::cout << "  unmerged " << u << "\n";
}

bool empty_dir_or_absent(const fs::path& p) { return !fs::exists(p) || (fs::is_directory(p) && fs::is_empty(p)); }

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_make_fixtures(const std::string& out, std::uint64_t seed, bool force) {
  if (!empty_dir_or_absent(out) && !force)
    throw error(errc::invalid_argument, "output directory is not empty (use --force)", out);
  const auto corpus = fixtures::make_corpus(seed);
  const auto n = fixtures::write_corpus(corpus, out);
  Outcome o;
  json counts = json::object();
  for (const auto& w : corpus.warehouses) {
    std::size_t k = 0;
    for (const auto& s : w.sources) k += s.collection["features"].size();
    counts[w.code] = k;
    std::cout << w.code << ": " << w.sources.size() << " source files, " << k << " features\n";
  }
  std::cout << "wrote " << n << " features under " << out << "\n";
  o.report = {{"out", out}, {"seed", seed}, {"features", n}, {"per_warehouse", counts}};
  return o;
}

Outcome cmd_create(const Common& c, const std::string& code, const std::string& schema, const std::string& timestamp,
                   bool force) {
  const auto site = load_site(c);
  const auto& e = *select(site, {code}).front();
  const auto path = server::warehouse_path(site.cfg, e);
  if (fs::exists(path) && !force)
    throw error(errc::invalid_argument, "warehouse " + e.code + " already exists (use --force)", path.string());
  const auto specs = layer_specs_from_json(json::parse(io::read_text(schema)));
  auto w = create_warehouse(e.code, specs, timestamp);
  fs::create_directories(path.parent_path());
  save_warehouse(w, path);
  std::cout << "created " << e.code << " with " << specs.size() << " layers at " << path.string() << "\n";
  return {ok, {{"warehouse", e.code}, {"path", path.string()}, {"layers", specs.size()}}};
}

IngestOptions ingest_options(const std::string& crs, const std::string& shift, const std::string& affine) {
  try {
    IngestOptions o;
    o.crs = geo::parse_crs(crs);
    if (!shift.empty()) o.datum = geo::parse_shift(shift);
    if (!affine.empty()) o.affine = geo::parse_affine(affine);
    return o;
  } catch (const error& e) {
    throw error(errc::invalid_argument,
                std::string(e.what()) +
                    "\nhint: --crs takes geographic[:ell=<name>], tm:cm=<deg>[,lat0=..,k=..,fe=..,fn=..,ell=..] "
                    "or eqc:cm=<deg>; --shift takes shift:dx,dy,dz[,rx,ry,rz,ds]; --affine takes affine:a,b,c,d,e,f");
  }
}

Outcome cmd_ingest(const Common& c, const std::string& code, const std::string& layer, const std::string& crs,
                   const std::string& shift, const std::string& affine, const std::string& file) {
  const auto opts = ingest_options(crs, shift, affine);
  const auto site = load_site(c);
  const auto& e = *select(site, {code}).front();
  auto w = open_warehouse(site, e);
  const auto r = ingest_file(w, layer, file, opts);
  save_warehouse(w, server::warehouse_path(site.cfg, e));
  std::cout << e.code << "/" << layer << " <- " << fs::path(file).filename().string() << ": " << summarize(r) << "\n";
  print_rejections(r);
  return {ok, {{"warehouse", e.code}, {"layer", layer}, {"file", file}, {"result", to_json(r)}}};
}

/// Ingests every entry of a fixture source manifest.
Outcome cmd_ingest_manifest(const Common& c, const std::string& manifest_path) {
  const auto site = load_site(c);
  const auto manifest = json::parse(io::read_text(manifest_path));
  const auto base = fs::path(manifest_path).parent_path();
  std::map<std::string, std::vector<json>> by_code;
  std::vector<std::string> order;
  for (const auto& m : manifest) {
    const auto code = m.at("warehouse").get<std::string>();
    if (!by_code.count(code)) order.push_back(code);
    by_code[code].push_back(m);
  }
  json results = json::array();
  for (const auto& code : order) {
    const auto& e = *select(site, {code}).front();
    auto w = open_warehouse(site, e);
    for (const auto& m : by_code[code]) {
      const auto opts = ingest_options(m.value("crs", "geographic"), m.value("shift", ""), m.value("affine", ""));
      const auto file = base / m.at("file").get<std::string>();
      const auto layer = m.at("layer").get<std::string>();
      const auto r = ingest_file(w, layer, file, opts);
      std::cout << code << "/" << layer << " <- " << file.filename().string() << ": " << summarize(r) << "\n";
      print_rejections(r);
      results.push_back({{"warehouse", code}, {"layer", layer}, {"file", file.string()}, {"result", to_json(r)}});
    }
    save_warehouse(w, server::warehouse_path(site.cfg, e));
  }
  return {ok, {{"ingested", results}}};
}

std::vector<std::string> vector_layers(const Warehouse& w, const std::string& only) {
  std::vector<std::string> out;
  for (const auto& l : w.layers)
    if (l.spec.geometry_kind != GeometryKind::image && (only.empty() || l.spec.name == only)) out.push_back(l.spec.name);
  if (!only.empty() && out.empty()) w.layer(only);  // throws not_found, or names an image layer
  if (!only.empty() && out.empty()) throw error(errc::invalid_argument, "layer '" + only + "' holds images");
  return out;
}

using LayerPass = std::function<CleanReport(Warehouse&, const std::string&)>;

Outcome run_pass(const Common& c, const std::vector<std::string>& codes, const std::string& layer,
                 const char* verb, const LayerPass& pass) {
  const auto site = load_site(c);
  json results = json::array();
  for (const auto* e : select(site, codes)) {
    auto w = open_warehouse(site, *e);
    CleanReport total;
    for (const auto& name : vector_layers(w, layer)) {
      const auto r = pass(w, name);
      if (r.changed() || !r.rejections.empty() || !r.unmerged.empty()) {
        std::cout << e->code << "/" << name << ": " << summarize(r) << "\n";
        print_rejections(r);
      }
      results.push_back({{"warehouse", e->code}, {"layer", name}, {"result", to_json(r)}});
      total += r;
    }
    if (total.changed()) save_warehouse(w, server::warehouse_path(site.cfg, *e));
    std::cout << e->code << ": " << verb << (total.changed() ? "" : ", no changes") << "\n";
  }
  return {ok, {{"layers", results}}};
}

Outcome cmd_validate(const Common& c, const std::vector<std::string>& codes) {
  const auto site = load_site(c);
  Outcome o;
  json reports = json::object();
  for (const auto* e : select(site, codes)) {
    const auto w = open_warehouse(site, *e);
    const auto r = validate(w);
    reports[e->code] = to_json(r);
    if (r.passed()) {
      std::cout << e->code << ": valid (" << w.feature_count() << " features)\n";
      continue;
    }
    o.code = data_error;
    std::cout << e->code << ": " << r.failure_count() << " failures\n";
    for (const auto& check : r.checks)
      for (const auto& f : check.failures) std::cout << "  " << check.name << ": " << f << "\n";
  }
  o.report = {{"validation", reports}};
  return o;
}

Outcome cmd_build_cache(const Common& c, const std::vector<std::string>& codes, std::optional<std::int64_t> scale,
                        const std::vector<std::string>& layers) {
  const auto site = load_site(c);
  json results = json::array();
  for (const auto* e : select(site, codes)) {
    const auto w = open_warehouse(site, *e);
    auto spec = catalog_cache_spec(*e, w, scale);
    if (!layers.empty()) {
      spec.layers.clear();
      for (const auto& l : layers) spec.layers.push_back({l, std::nullopt});
    }
    const auto path = server::cache_path(site.cfg, *e);
    const auto r = build_cache(w, spec, path);
    std::size_t n = 0;
    for (const auto& [_, k] : r.layer_counts) n += k;
    std::cout << e->code << ": " << (r.unchanged ? "byte-identical, left unchanged " : "wrote ") << path.string()
              << " (" << n << " features, " << r.bytes << " bytes, 1:" << spec.base_scale_denom << ", "
              << geo::format_projection(spec.projection) << ")\n";
    if (r.dropped_out_of_zone) std::cout << "  " << r.dropped_out_of_zone << " features outside the projection zone\n";
    for (const auto& d : r.dropped) std::cout << "  dropped " << d << "\n";
    auto j = to_json(r);
    j["warehouse"] = e->code;
    j["base_scale_denom"] = spec.base_scale_denom;
    results.push_back(std::move(j));
  }
  return {ok, {{"caches", results}}};
}

Outcome cmd_stats(const Common& c, const std::vector<std::string>& codes) {
  const auto site = load_site(c);
  json out = json::object();
  for (const auto* e : select(site, codes)) {
    const auto path = server::cache_path(site.cfg, *e);
    if (!fs::exists(path)) throw error(errc::not_found, "no cache built for " + e->code, path.string());
    const auto cache = open_cache(path);
    const auto s = cache_stats(*cache);
    json layers = json::object();
    std::cout << e->code << ": " << s.file_size << " bytes, index depth " << s.index_depth << ", built "
              << s.build_timestamp << "\n";
    for (const auto& [name, n] : s.layer_counts) {
      std::cout << "  " << name << ": " << n << "\n";
      layers[name] = n;
    }
    out[e->code] = {{"file_size", s.file_size}, {"index_depth", s.index_depth},
                    {"build_timestamp", s.build_timestamp}, {"layers", layers}};
  }
  return {ok, out};
}

Outcome cmd_gcp_fit(const std::string& pairs_path) {
  std::vector<geo::ControlPointPair> pairs;
  std::istringstream in(io::read_text(pairs_path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = io::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = server::detail::split(t, ',');
    std::vector<double> v;
    for (const auto& s : f)
      if (auto d = io::parse_double(s)) v.push_back(*d);
    if (f.size() != 4 || v.size() != 4)
      throw error(errc::invalid_argument,
                  pairs_path + ":" + std::to_string(line_no) + ": expected source_x,source_y,target_x,target_y");
    pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  const auto fit = geo::fit_affine(pairs);
  std::cout << geo::format_affine(fit.transform) << "\n";
  std::cout << "rms " << io::format_double(fit.rms) << " m over " << pairs.size() << " pairs\n";
  json residuals = json::array();
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
    std::cout << "  pair " << i + 1 << ": " << io::format_double(fit.residuals[i]) << " m\n";
    residuals.push_back(fit.residuals[i]);
  }
  return {ok, {{"affine", geo::format_affine(fit.transform)}, {"rms", fit.rms}, {"residuals", residuals}}};
}

Outcome cmd_export_offline(const Common& c, const std::string& out, bool force, const std::vector<std::string>& codes) {
  const auto site = load_site(c);
  std::vector<std::string> selected;
  if (!(codes.size() == 1 && codes[0] == "all"))
    for (const auto* e : select(site, codes)) selected.push_back(e->code);
  const auto manifest = server::export_offline_bundle(site.cfg, site.catalog, out, {selected, force});
  std::cout << "bundle at " << out << ": " << manifest["files"].size() << " files, " << manifest["countries"].size()
            << " caches\n";
  return {ok, manifest};
}

Outcome cmd_serve(const Common& c, std::optional<int> port, std::optional<std::string> host,
                  const server::ApiOptions& api_opts) {
  // Block the termination signals before any thread exists; a dedicated
  // thread waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto site = load_site(c);
  if (port) site.cfg.port = *port;
  if (host) site.cfg.host = *host;
  auto registry = std::make_shared<server::CacheRegistry>(site.cfg, site.catalog);
  auto api = std::make_shared<server::Api>(registry, api_opts);
  server::HttpServer http(api);
  const int bound = http.bind(site.cfg.host, site.cfg.port);
  std::cout << "listening on http://" << site.cfg.host << ":" << bound << std::endl;

  int received = 0;
  std::thread waiter([&] {
    sigwait(&signals, &received);
    http.stop();
  });
  http.run();
  if (received == 0) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "stopped" << std::endl;
  return {ok, {{"port", bound}}};
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"Pacific atlas pipeline: warehouses, caches and the map server"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool config = true) {
    if (config) sub->add_option("--config", common.config, "server configuration file")->capture_default_str();
    sub->add_option("--report", common.report, "write a JSON report to this path");
  };

  std::function<Outcome()> run;

  // make-fixtures
  auto* mf = app.add_subcommand("make-fixtures", "write the synthetic archipelago corpus");
  std::string mf_out;
  std::uint64_t mf_seed = fixtures::default_seed;
  bool mf_force = false;
  mf->add_option("--out", mf_out, "output directory")->required();
  mf->add_option("--seed", mf_seed, "random seed")->capture_default_str();
  mf->add_flag("--force", mf_force, "write into a non-empty directory");
  add_common(mf, false);
  mf->callback([&] { run = [&] { return cmd_make_fixtures(mf_out, mf_seed, mf_force); }; });

  // create
  auto* cr = app.add_subcommand("create", "create an empty warehouse from a layer schema");
  std::string cr_code, cr_schema, cr_time;
  bool cr_force = false;
  cr->add_option("--warehouse", cr_code, "catalog code")->required();
  cr->add_option("--schema", cr_schema, "layer schema JSON ({\"layers\": [...]})")->required()->check(CLI::ExistingFile);
  cr->add_option("--timestamp", cr_time, "build timestamp recorded in the warehouse");
  cr->add_flag("--force", cr_force, "replace an existing warehouse");
  add_common(cr);
  cr->callback([&] { run = [&] { return cmd_create(common, cr_code, cr_schema, cr_time, cr_force); }; });

  // ingest
  auto* in = app.add_subcommand("ingest", "load a GeoJSON file into a warehouse layer");
  std::string in_code, in_layer, in_crs = "geographic", in_shift, in_affine, in_file, in_manifest;
  in->add_option("--warehouse", in_code, "catalog code");
  in->add_option("--layer", in_layer, "target layer");
  in->add_option("--crs", in_crs, "source CRS spec string")->capture_default_str();
  in->add_option("--shift", in_shift, "datum shift spec string");
  in->add_option("--affine", in_affine, "affine spec string applied first");
  in->add_option("--manifest", in_manifest, "ingest every entry of a source manifest instead")
      ->check(CLI::ExistingFile);
  in->add_option("file", in_file, "GeoJSON FeatureCollection");
  add_common(in);
  in->callback([&] {
    if (!in_manifest.empty()) {
      run = [&] { return cmd_ingest_manifest(common, in_manifest); };
      return;
    }
    if (in_code.empty() || in_layer.empty() || in_file.empty())
      throw CLI::ValidationError("ingest", "needs --warehouse, --layer and a file (or --manifest)");
    run = [&] { return cmd_ingest(common, in_code, in_layer, in_crs, in_shift, in_affine, in_file); };
  });

  // gcp-fit
  auto* gf = app.add_subcommand("gcp-fit", "fit an affine transform to control point pairs");
  std::string gf_pairs;
  gf->add_option("--pairs", gf_pairs, "CSV: source_x,source_y,target_x,target_y")->required()->check(CLI::ExistingFile);
  add_common(gf, false);
  gf->callback([&] { run = [&] { return cmd_gcp_fit(gf_pairs); }; });

  // clean / merge
  std::vector<std::string> cl_codes, mg_codes;
  std::string cl_layer, mg_layer;
  CleanOptions cl_opts;
  std::vector<std::string> cl_snap_to;
  double mg_tol = defaults::seam_tol_deg;
  auto* cl = app.add_subcommand("clean", "close rings, snap vertices and drop duplicates");
  cl->add_option("--warehouse", cl_codes, "catalog code(s) or 'all'")->required();
  cl->add_option("--layer", cl_layer, "only this layer");
  cl->add_option("--snap-tol", cl_opts.snap_tol, "snap tolerance, degrees")->capture_default_str();
  cl->add_option("--snap-to", cl_snap_to, "also snap to vertices of these layers");
  add_common(cl);
  cl->callback([&] {
    run = [&] {
      cl_opts.snap_to_layers = cl_snap_to;
      return run_pass(common, cl_codes, cl_layer, "cleaned",
                      [&](Warehouse& w, const std::string& l) { return clean_topology(w, l, cl_opts); });
    };
  });
  auto* mg = app.add_subcommand("merge", "join features split across map-sheet seams");
  mg->add_option("--warehouse", mg_codes, "catalog code(s) or 'all'")->required();
  mg->add_option("--layer", mg_layer, "only this layer");
  mg->add_option("--seam-tol", mg_tol, "seam tolerance, degrees")->capture_default_str();
  add_common(mg);
  mg->callback([&] {
    run = [&] {
      return run_pass(common, mg_codes, mg_layer, "merged",
                      [&](Warehouse& w, const std::string& l) { return merge_sheets(w, l, mg_tol); });
    };
  });

  // validate
  auto* va = app.add_subcommand("validate", "check every stored invariant");
  std::vector<std::string> va_codes;
  va->add_option("--warehouse", va_codes, "catalog code(s) or 'all'")->required();
  add_common(va);
  va->callback([&] { run = [&] { return cmd_validate(common, va_codes); }; });

  // build-cache
  auto* bc = app.add_subcommand("build-cache", "build the projected, indexed cache of a warehouse");
  std::vector<std::string> bc_codes, bc_layers;
  std::optional<std::int64_t> bc_scale;
  bc->add_option("--warehouse", bc_codes, "catalog code(s) or 'all'")->required();
  bc->add_option("--scale", bc_scale, "base scale denominator (default: catalog)");
  bc->add_option("--layers", bc_layers, "publish only these layers")->delimiter(',');
  add_common(bc);
  bc->callback([&] { run = [&] { return cmd_build_cache(common, bc_codes, bc_scale, bc_layers); }; });

  // stats
  auto* st = app.add_subcommand("stats", "describe built caches");
  std::vector<std::string> st_codes;
  st->add_option("--warehouse", st_codes, "catalog code(s) or 'all'")->required();
  add_common(st);
  st->callback([&] { run = [&] { return cmd_stats(common, st_codes); }; });

  // serve
  auto* sv = app.add_subcommand("serve", "run the map server");
  std::optional<int> sv_port;
  std::optional<std::string> sv_host;
  server::ApiOptions sv_opts;
  sv->add_option("--port", sv_port, "listen port (0 picks a free one)");
  sv->add_option("--host", sv_host, "listen address");
  sv->add_option("--reference-pixel", sv_opts.reference_pixel_m, "metres per screen pixel")->capture_default_str();
  sv->add_option("--simplify-per-scale", sv_opts.simplify_per_scale, "simplification metres per scale unit")
      ->capture_default_str();
  add_common(sv);
  sv->callback([&] { run = [&] { return cmd_serve(common, sv_port, sv_host, sv_opts); }; });

  // export-offline
  auto* ex = app.add_subcommand("export-offline", "write a self-contained bundle for local installation");
  std::string ex_out;
  bool ex_force = false;
  std::vector<std::string> ex_codes{"all"};
  ex->add_option("--out", ex_out, "bundle directory")->required();
  ex->add_flag("--force", ex_force, "write into a non-empty directory");
  ex->add_option("--warehouse", ex_codes, "catalog code(s), default all with caches");
  add_common(ex);
  ex->callback([&] { run = [&] { return cmd_export_offline(common, ex_out, ex_force, ex_codes); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return user_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Outcome out;
  json err;
  try {
    out = run();
  } catch (const error& e) {
    out.code = exit_code(e.code());
    err = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}};
    std::cerr << "atlas " << command << ": " << e.what() << (e.detail().empty() ? "" : " (" + e.detail() + ")")
              << "\n";
  } catch (const json::exception& e) {
    out.code = data_error;
    err = {{"code", "parse_error"}, {"message", e.what()}};
    std::cerr << "atlas " << command << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    out.code = internal_error;
    err = {{"code", "internal"}, {"message", e.what()}};
    std::cerr << "atlas " << command << ": internal error: " << e.what() << "\n";
  }
  if (!common.report.empty()) {
    json report{{"command", command}, {"exit_code", out.code}, {"ok", out.code == ok}, {"result", out.report}};
    if (!err.is_null()) report["error"] = err;
    try {
      io::write_text_atomic(common.report, report.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "atlas: cannot write report: " << e.what() << "\n";
      return internal_error;
    }
  }
  return out.code;
}
