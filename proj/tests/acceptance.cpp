// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [--only <name>]

#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "atlas/fixtures.hpp"
#include "atlas/pipeline.hpp"
#include "atlas/server/api.hpp"
#include "atlas/server/config.hpp"
#include "cache_oracles.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace atlas;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Thrown by `need` to fail the current criterion with a reason.
struct Failed {
  std::string why;
};

void need(bool ok, const std::string& why) {
  if (!ok) throw Failed{why};
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

const fs::path& scratch_root() {
  static const struct Root {
    fs::path path = fs::temp_directory_path() / ("atlas_acceptance_" + std::to_string(getpid()));
    ~Root() {
      std::error_code ec;
      fs::remove_all(path, ec);
    }
  } root;
  return root.path;
}

fs::path scratch(const std::string& name) {
  auto dir = scratch_root() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Subprocesses

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" ATLAS_CLI_PATH "' " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  std::string out;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void cli_ok(const std::string& args, const fs::path& cwd) {
  const auto r = cli(args, cwd);
  need(r.code == 0, "atlas " + args + " exited " + std::to_string(r.code) + ": " + r.out);
}

/// `atlas serve --port 0` in its own process.
class Server {
 public:
  Server(const fs::path& config, const fs::path& cwd) {
    int fds[2];
    if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid_ = fork();
    if (pid_ == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      if (chdir(cwd.c_str()) != 0) _exit(99);
      execl(ATLAS_CLI_PATH, "atlas", "serve", "--port", "0", "--config", config.c_str(), nullptr);
      _exit(98);
    }
    close(fds[1]);
    std::string line;
    char c;
    while (read(fds[0], &c, 1) == 1 && c != '\n') line += c;
    close(fds[0]);
    const auto colon = line.rfind(':');
    if (colon == std::string::npos) throw Failed{"serve did not report a port: " + line};
    port_ = std::stoi(line.substr(colon + 1));
  }
  ~Server() {
    if (pid_ > 0) stop();
  }

  /// SIGTERM and wait; returns the exit status.
  int stop() {
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  httplib::Result get(const std::string& target) {
    httplib::Client client("127.0.0.1", port_);
    return client.Get(target);
  }

  json get_json(const std::string& target, int want_status = 200) {
    auto r = get(target);
    need(bool(r), "no response for " + target);
    need(r->status == want_status,
         target + " returned " + std::to_string(r->status) + " (wanted " + std::to_string(want_status) + ")");
    return json::parse(r->body);
  }

 private:
  pid_t pid_ = -1;
  int port_ = 0;
};

/// The synthetic corpus taken through the CLI pipeline once.
const fs::path& cli_site() {
  static fs::path site;
  if (!site.empty()) return site;
  const auto dir = scratch("cli");
  cli_ok("make-fixtures --out site", dir);
  const auto s = dir / "site";
  const auto catalog = load_catalog(s / "catalog.json");
  for (const auto* e : catalog.all())
    cli_ok("create --warehouse " + e->code + " --schema schema/" + e->code + ".json", s);
  cli_ok("ingest --manifest sources/manifest.json", s);
  cli_ok("clean --warehouse all", s);
  cli_ok("merge --warehouse all", s);
  cli_ok("validate --warehouse all", s);
  cli_ok("build-cache --warehouse all", s);
  site = s;
  return site;
}

// ---------------------------------------------------------------------------
// In-process API over a fixture site

server::Response api_get(const server::Api& api, std::string path, std::map<std::string, std::string, std::less<>> p) {
  return api.handle({std::move(path), std::move(p)});
}

std::shared_ptr<server::Api> make_api(const fs::path& site) {
  const auto cfg = server::load_config(site / "atlas.conf");
  auto reg = std::make_shared<server::CacheRegistry>(cfg, load_catalog(cfg.catalog));
  return std::make_shared<server::Api>(reg);
}

// ---------------------------------------------------------------------------
// Criteria

struct Expected {
  std::string code, name;
  std::optional<std::string> capital;
  std::int64_t population, area_km2, coastline_km, scale;
  std::vector<std::string> sites;  // empty: one whole-country entry
};

// Transcribed from the source tables of the atlas project.
const std::vector<Expected>& expected_catalog() {
  static const std::vector<Expected> rows{
      {"CK", "Cook Islands", "Rarotonga", 21008, 240, 120, 100000, {"Northern Group", "Southern Group", "Rarotonga"}},
      {"FJ", "Fiji Islands", "Suva", 868531, 18270, 1129, 250000,
       {"Viti Levu", "Vanua Levu / Taveuni", "Yassawa / Mamanucas", "Lomaiviti Group", "Lau group", "Kadavu group",
        "Rotuma"}},
      {"KI", "Kiribati", "Bairiki", 98549, 811, 1143, 50000, {"Gilbert Islands", "Line Islands", "Phoenix Islands"}},
      {"MH", "Marshall Islands", "Majuro", 56429, 182, 370, 50000, {}},
      {"NR", "Nauru", "Yaren", 12570, 21, 30, 50000, {}},
      {"NU", "Niue", "Alofi", 2145, 260, 64, 50000, {}},
      {"TK", "Tokelau", std::nullopt, 1418, 10, 101, 50000, {}},
      {"TO", "Tonga", "Nuku'alofa", 108141, 748, 419, 100000, {"Vavau group", "Haapai group", "Tongatapu / Ata"}},
      {"TV", "Tuvalu", "Funafuti", 11305, 26, 24, 100000, {}},
      {"SB", "Solomon Islands", "Honiara", 509190, 28450, 5313, 250000,
       {"Temotu", "Makira-Ulawa", "Malaita", "Guadalcanal / Central Isabel", "Western", "Choiseul"}},
      {"VU", "Vanuatu", "Port Vila", 199414, 12200, 2528, 250000,
       {"Efate", "Tafea", "Shepherds", "Epi", "Paama", "Ambrym", "Pentecost", "Malakula", "Ambae-Maewo", "Santo-Malo",
        "Banks-Torres"}},
      {"WS", "Western Samoa", "Apia", 178173, 2944, 403, 250000, {"Upolu", "Savaii"}},
  };
  return rows;
}

std::string catalog_fidelity() {
  const auto dir = scratch("catalog");
  fixtures::write_corpus(fixtures::make_corpus(), dir);
  const auto api = make_api(dir);
  const auto t0 = Clock::now();
  const auto r = api_get(*api, "/api/countries", {});
  need(r.status == 200, "status " + std::to_string(r.status));
  const auto j = json::parse(r.body);
  need(j["countries"].size() == 12, "expected 12 countries, got " + std::to_string(j["countries"].size()));
  std::size_t checked = 0;
  for (const auto& want : expected_catalog()) {
    const json* got = nullptr;
    for (const auto& c : j["countries"])
      if (c["code"] == want.code) got = &c;
    need(got, want.code + " missing");
    const auto& c = *got;
    const std::string tag = want.code + ": ";
    need(c["name"] == want.name, tag + "name " + c["name"].dump());
    need(want.capital ? c["capital"] == *want.capital : c["capital"].is_null(), tag + "capital " + c["capital"].dump());
    need(c["population"] == want.population, tag + "population " + c["population"].dump());
    need(c["area_km2"] == want.area_km2, tag + "area " + c["area_km2"].dump());
    need(c["coastline_km"] == want.coastline_km, tag + "coastline " + c["coastline_km"].dump());
    need(c["base_scale_denom"] == want.scale, tag + "scale " + c["base_scale_denom"].dump());
    const auto& sites = c["sites"];
    if (want.sites.empty()) {
      need(sites.size() == 1 && sites[0]["whole_country"] == true, tag + "expected one whole-country entry");
    } else {
      std::vector<std::string> names;
      for (const auto& s : sites) {
        names.push_back(s["name"].get<std::string>());
        need(s["whole_country"] == false, tag + "site flagged whole-country");
      }
      need(names == want.sites, tag + "site list " + sites.dump());
    }
    checked += 7 + sites.size();
  }
  need(j["region"]["base_scale_denom"] == 1000000, "region scale " + j["region"]["base_scale_denom"].dump());
  const double t = seconds_since(t0);
  need(t < 1.0, "took " + fmt(t) + " s");
  return "12 countries + region, " + std::to_string(checked) + " fields exact, " + fmt(t * 1e3) + " ms";
}

std::string projection_roundtrip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20030601);
  std::uniform_real_distribution<double> cm(0.0, 360.0), lat0(-30.0, 30.0), k(0.999, 1.0), fe(0.0, 1e6),
      fn(0.0, 1e7), dl(-5.999999, 5.999999), lat(-80.0, 80.0);
  const char* ells[] = {"wgs84", "intl1924", "clarke1866", "grs80"};
  double worst_lon = 0, worst_lat = 0;
  for (int s = 0; s < 20; ++s) {
    geo::ProjectionSpec spec;
    spec.central_meridian = cm(rng);
    spec.lat_origin = lat0(rng);
    spec.scale_factor = k(rng);
    spec.false_easting = fe(rng);
    spec.false_northing = fn(rng);
    spec.ellipsoid = *geo::ellipsoid_by_name(ells[s % 4]);
    const geo::TransverseMercator tm(spec);
    for (int i = 0; i < 500; ++i) {
      const geo::GeoPoint p(spec.central_meridian + dl(rng), lat(rng));
      const auto g = tm.inverse(tm.forward(p));
      worst_lon = std::max(worst_lon, std::abs(geo::longitude_delta(g.lon(), p.lon())));
      worst_lat = std::max(worst_lat, std::abs(g.lat() - p.lat()));
    }
  }
  const double t = seconds_since(t0);
  const double worst = std::max(worst_lon, worst_lat);
  need(worst <= 1e-9, "max error " + fmt(worst) + " deg");
  need(t < 5.0, "took " + fmt(t) + " s");
  return "1e4 points / 20 specs, max error " + fmt(worst) + " deg, " + fmt(t) + " s";
}

std::string datum_affine() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> tr(-300, 300), rot(-5, 5), sc(-10, 10), xyz(-6.4e6, 6.4e6),
      lon(0, 360), lat(-90, 90), h(-100, 5000);

  double helmert_err = 0;
  for (int i = 0; i < 2000; ++i) {
    const geo::DatumShift s{tr(rng), tr(rng), tr(rng), rot(rng), rot(rng), rot(rng), sc(rng)};
    const geo::Geocentric v{xyz(rng), xyz(rng), xyz(rng)};
    const auto got = geo::helmert_shift(s, v);
    const auto want = oracle::helmert({s.dx, s.dy, s.dz, s.rx, s.ry, s.rz, s.ds}, {v.x, v.y, v.z});
    helmert_err = std::max({helmert_err, std::abs(got.x - want.x), std::abs(got.y - want.y), std::abs(got.z - want.z)});
  }
  need(helmert_err <= 1e-6, "Helmert differs from oracle by " + fmt(helmert_err) + " m");

  double geocentric_err = 0;
  const std::pair<const char*, oracle::Ell> ells[] = {{"wgs84", oracle::kWgs84}, {"intl1924", oracle::kIntl1924}};
  for (int i = 0; i < 2000; ++i) {
    const auto& [name, oe] = ells[i % 2];
    const double lo = lon(rng), la = lat(rng), hh = h(rng);
    const auto got = geo::geodetic_to_geocentric(*geo::ellipsoid_by_name(name), geo::GeoPoint(lo, la, hh));
    const auto want = oracle::geocentric(oe, lo, la, hh);
    geocentric_err =
        std::max({geocentric_err, std::abs(got.x - want.x), std::abs(got.y - want.y), std::abs(got.z - want.z)});
  }
  need(geocentric_err <= 1e-6, "geocentric conversion differs from oracle by " + fmt(geocentric_err) + " m");

  // Noisy fits at projected-grid magnitudes against the normal-equation oracle.
  std::uniform_real_distribution<double> base(4e5, 6e5), off(-5e3, 5e3), noise(-2, 2), coef(-0.01, 0.01);
  double fit_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const geo::AffineTransform truth{1 + coef(rng), coef(rng), base(rng), coef(rng), 1 + coef(rng), base(rng) * 10};
    std::vector<geo::ControlPointPair> pairs;
    std::vector<oracle::Pair> opairs;
    const double cx = base(rng), cy = base(rng) * 15;
    for (int i = 0; i < 8; ++i) {
      const geo::ProjectedPoint s{cx + off(rng), cy + off(rng)};
      auto t = geo::apply_affine(truth, s);
      t.x += noise(rng);
      t.y += noise(rng);
      pairs.push_back({s, t});
      opairs.push_back({s.x, s.y, t.x, t.y});
    }
    const auto fit = geo::fit_affine(pairs);
    const auto o = oracle::affine_lsq(opairs);
    for (const auto& p : pairs) {
      const auto q = geo::apply_affine(fit.transform, p.source);
      fit_err = std::max({fit_err, std::abs(q.x - (o.coef[0] * p.source.x + o.coef[1] * p.source.y + o.coef[2])),
                          std::abs(q.y - (o.coef[3] * p.source.x + o.coef[4] * p.source.y + o.coef[5]))});
    }
    fit_err = std::max(fit_err, std::abs(fit.rms - o.rms));
  }
  need(fit_err <= 1e-6, "affine fit differs from oracle by " + fmt(fit_err) + " m");

  // Exact pairs generated from a known map (the fixture digitizer grid).
  const auto corpus = fixtures::make_corpus();
  std::vector<geo::ControlPointPair> exact;
  std::istringstream csv(corpus.gcp_pairs_csv);
  std::string line;
  while (std::getline(csv, line)) {
    if (line.empty() || line[0] == '#') continue;
    double v[4];
    char comma;
    std::istringstream(line) >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
    exact.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  const auto recovered = geo::fit_affine(exact);
  need(recovered.rms < 1e-9, "synthetic recovery rms " + fmt(recovered.rms) + " m");

  const double t = seconds_since(t0);
  need(t < 5.0, "took " + fmt(t) + " s");
  return "Helmert " + fmt(helmert_err) + " m, geocentric " + fmt(geocentric_err) + " m, fit " + fmt(fit_err) +
         " m, recovery rms " + fmt(recovered.rms) + " m";
}

std::string antimeridian() {
  const auto dir = scratch("antimeridian");
  fixtures::build_site(dir);
  const auto api = make_api(dir);
  const auto r = api_get(*api, "/api/features",
                         {{"warehouse", "FJ"}, {"layer", "coastline"}, {"bbox", "177,-17,184,-15"},
                          {"bbox_crs", "geographic"}});
  need(r.status == 200, "status " + std::to_string(r.status) + ": " + r.body);
  const auto j = json::parse(r.body);
  std::vector<const json*> strips;
  for (const auto& f : j["features"])
    if (f["id"].get<std::string>().rfind("fj-dateline", 0) == 0) strips.push_back(&f);
  need(strips.size() == 1, std::to_string(strips.size()) + " features for the strip");
  const auto& g = (*strips[0])["geometry"];
  need(g["type"] == "Polygon", "geometry is " + g["type"].dump());
  need(g["coordinates"].size() == 1, std::to_string(g["coordinates"].size()) + " rings");
  const auto& ring = g["coordinates"][0];
  double min_lon = 360, max_lon = 0, max_gap = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const double lon = ring[i][0], lat = ring[i][1];
    need(lon >= 0.0 && lon < 360.0, "lon " + fmt(lon, 12) + " outside [0,360)");
    min_lon = std::min(min_lon, lon);
    max_lon = std::max(max_lon, lon);
    if (i > 0)
      max_gap = std::max(max_gap, std::hypot(lon - ring[i - 1][0].get<double>(), lat - ring[i - 1][1].get<double>()));
  }
  need(max_gap < 1.0, "vertex gap " + fmt(max_gap) + " deg");
  need(min_lon < 178.01 && max_lon > 182.99, "ring spans " + fmt(min_lon, 8) + ".." + fmt(max_lon, 8));
  return "one ring, " + std::to_string(ring.size()) + " vertices, lon " + fmt(min_lon, 6) + ".." + fmt(max_lon, 6) +
         ", max gap " + fmt(max_gap) + " deg";
}

/// The 1e5-feature uniform corpus, cached once for both index criteria.
struct Uniform {
  std::shared_ptr<const SmartCache> cache;
  double build_seconds = 0;
};

const Uniform& uniform() {
  static const Uniform u = [] {
    const auto t0 = Clock::now();
    const auto w = fixtures::uniform_warehouse(100000, 11);
    auto c = SmartCache::decode(encode_cache(w, full_cache_spec(w, geo::utm_like(179.5, true), 250000)));
    return Uniform{std::move(c), seconds_since(t0)};
  }();
  return u;
}

struct OracleBox {
  double minx, miny, maxx, maxy;
};

OracleBox oracle_box(const PlanarGeometry& g) {
  OracleBox b{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& part : g.parts)
    for (const auto& path : part)
      for (const auto& p : path) {
        b.minx = std::min(b.minx, p.x);
        b.miny = std::min(b.miny, p.y);
        b.maxx = std::max(b.maxx, p.x);
        b.maxy = std::max(b.maxy, p.y);
      }
  return b;
}

Box random_box(std::mt19937_64& g, const Box& world, double lo_exp, double hi_exp) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = world.width() * std::pow(10.0, lo_exp + (hi_exp - lo_exp) * u(g));
  const double h = world.height() * std::pow(10.0, lo_exp + (hi_exp - lo_exp) * u(g));
  const double x = world.minx - 0.1 * world.width() + 1.2 * world.width() * u(g);
  const double y = world.miny - 0.1 * world.height() + 1.2 * world.height() * u(g);
  return {x, y, x + w, y + h};
}

std::string cache_equivalence() {
  const auto& u = uniform();
  const auto& c = *u.cache;
  const auto t0 = Clock::now();
  std::size_t total = 0;
  for (const auto& l : c.layers()) total += l.features.size();
  need(total == 100000, "corpus holds " + std::to_string(total) + " features");

  struct Entry {
    OracleBox box;
    const CachedFeature* f;
  };
  std::vector<std::pair<std::string, std::vector<Entry>>> layers;
  for (const auto& l : c.layers()) {
    std::vector<Entry> es;
    for (const auto& f : l.features) es.push_back({oracle_box(f.geometry), &f});
    layers.emplace_back(l.spec.name, std::move(es));
  }

  const Box world = c.extent();
  std::mt19937_64 g(424242);
  std::size_t hits = 0;
  for (int k = 0; k < 10000; ++k) {
    const Box q = random_box(g, world, -3.0, 0.0);
    for (const auto& [name, es] : layers) {
      std::set<std::string> want, got;
      for (const auto& e : es)
        if (e.box.maxx >= q.minx && e.box.minx <= q.maxx && e.box.maxy >= q.miny && e.box.miny <= q.maxy &&
            oracle::geometry_intersects(e.f->geometry, q))
          want.insert(e.f->id);
      for (const auto* f : c.query_bbox(name, q)) got.insert(f->id);
      need(got == want, "bbox query " + std::to_string(k) + " on " + name + ": " + std::to_string(got.size()) +
                            " vs " + std::to_string(want.size()));
      hits += got.size();
    }
  }

  std::uniform_real_distribution<double> ux(world.minx, world.maxx), uy(world.miny, world.maxy), ut(50, 3000);
  std::size_t point_hits = 0;
  for (int k = 0; k < 1000; ++k) {
    const geo::ProjectedPoint p{ux(g), uy(g)};
    const double tol = ut(g);
    for (const auto& [name, es] : layers) {
      std::map<std::string, double> want;
      for (const auto& e : es) {
        const double dx = std::max({e.box.minx - p.x, 0.0, p.x - e.box.maxx});
        const double dy = std::max({e.box.miny - p.y, 0.0, p.y - e.box.maxy});
        if (std::hypot(dx, dy) > tol) continue;
        if (const double d = oracle::geometry_distance(e.f->geometry, {p.x, p.y}); d <= tol) want[e.f->id] = d;
      }
      const auto got = c.query_point(name, p, tol);
      need(got.size() == want.size(), "point query " + std::to_string(k) + " on " + name + ": " +
                                          std::to_string(got.size()) + " vs " + std::to_string(want.size()));
      for (const auto& h : got) {
        const auto it = want.find(h.feature->id);
        need(it != want.end(), "point query " + std::to_string(k) + " returned extra " + h.feature->id);
        need(std::abs(it->second - h.distance) < 1e-6, "distance mismatch for " + h.feature->id);
      }
      point_hits += got.size();
    }
  }
  const double t = seconds_since(t0);
  need(t < 60.0, "took " + fmt(t) + " s");
  return "1e4 bbox (" + std::to_string(hits) + " hits) + 1e3 point (" + std::to_string(point_hits) +
         " hits) queries exact over 1e5 features, " + fmt(t) + " s (+" + fmt(u.build_seconds) + " s build)";
}

std::string cache_performance() {
  const auto& c = *uniform().cache;
  const Box world = c.extent();
  std::mt19937_64 g(99);
  // Viewport-sized boxes: about 1% of the extent on each axis.
  std::vector<Box> boxes;
  for (int i = 0; i < 2000; ++i) boxes.push_back(random_box(g, world, -2.0, -2.0));
  std::vector<double> indexed, scanned;
  std::size_t sink = 0;
  for (const auto& q : boxes) {
    auto t0 = Clock::now();
    for (const auto& l : c.layers()) sink += c.query_bbox(l.spec.name, q).size();
    indexed.push_back(seconds_since(t0));
    t0 = Clock::now();
    for (const auto& l : c.layers()) sink -= c.scan_bbox(l.spec.name, q).size();
    scanned.push_back(seconds_since(t0));
  }
  need(sink == 0, "indexed and scanned results differ");
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  const double mi = median(indexed), ms = median(scanned);
  const double speedup = ms / mi;
  need(speedup >= 10.0, "speedup only " + fmt(speedup) + "x");
  return "median indexed " + fmt(mi * 1e6) + " us vs scan " + fmt(ms * 1e6) + " us, " + fmt(speedup) + "x";
}

// A cache handle has no mutating interface; changes always go through a rebuild.
template <typename C>
concept mutable_cache = requires(C& c, const Warehouse& w, const CachedFeature& f, const std::string& s) {
  c.insert(f);
} || requires(C& c, const CachedFeature& f) { c.add_feature(f); } || requires(C& c, const std::string& s) {
  c.erase(s);
} || requires(C& c, const std::string& s) { c.remove_feature(s); } || requires(C& c, const Warehouse& w) {
  c.update(w);
} || requires(C& c, const Warehouse& w) { c.apply(w); } || requires(C& c) { c.layers().front().features.clear(); };
static_assert(!mutable_cache<const SmartCache>);
static_assert(std::is_same_v<decltype(open_cache(fs::path{})), std::shared_ptr<const SmartCache>>);

std::string rebuild_semantics() {
  const auto dir = scratch("rebuild");
  const auto corpus = fixtures::make_corpus();
  const auto& fj = *std::find_if(corpus.warehouses.begin(), corpus.warehouses.end(),
                                 [](const auto& w) { return w.code == "FJ"; });
  auto w = fixtures::build_warehouse(fj);
  const auto spec = catalog_cache_spec(*corpus.catalog.find("FJ"), w);
  const auto path = dir / "FJ.pisc";
  auto inode = [&] {
    struct stat st {};
    stat(path.c_str(), &st);
    return st.st_ino;
  };

  const auto first = build_cache(w, spec, path);
  need(!first.unchanged, "first build reported unchanged");
  const auto bytes = io::read_file(path);
  const auto ino = inode();
  const auto again = build_cache(w, spec, path);
  need(again.unchanged, "unchanged rebuild not detected");
  need(io::read_file(path) == bytes, "unchanged rebuild altered bytes");
  need(inode() == ino, "unchanged rebuild replaced the file");

  const auto old = open_cache(path);
  const auto old_count = old->layer("villages").features.size();
  const auto old_hits = old->query_bbox("villages", old->extent()).size();

  Feature added;
  added.id = "new-village";
  added.attributes["name"] = std::string("Newtown");
  added.attributes["population"] = std::int64_t{120};
  added.attributes["is_capital"] = false;
  added.geometry = GeoGeometry::point(geo::GeoPoint(178.4, -18.1));
  auto& villages = w.layer("villages");
  for (const auto& a : villages.spec.attributes)
    if (!added.attributes.count(a.name) && a.required) need(false, "fixture village needs attribute " + a.name);
  villages.features.push_back(added);
  const auto changed = build_cache(w, spec, path);
  need(!changed.unchanged, "changed input reported unchanged");
  need(inode() != ino, "changed rebuild wrote in place instead of replacing");

  need(old->layer("villages").features.size() == old_count, "old handle changed size");
  need(old->query_bbox("villages", old->extent()).size() == old_hits, "old handle query changed");
  for (const auto& f : old->layer("villages").features) need(f.id != "new-village", "old handle sees the new feature");
  const auto fresh = open_cache(path);
  need(fresh->layer("villages").features.size() == old_count + 1, "new handle misses the change");
  return "unchanged rebuild byte-identical in place, changed rebuild renamed over (inode " + std::to_string(ino) +
         " -> " + std::to_string(inode()) + "), old handle intact, no mutating cache API";
}

std::string pipeline_idempotence() {
  const auto corpus = fixtures::make_corpus();
  std::size_t layers = 0, merged = 0;
  for (const auto& fw : corpus.warehouses) {
    CleanReport first;
    auto w = fixtures::build_warehouse(fw, &first);
    merged += first.features_merged;
    const auto before = encode_warehouse(w);
    for (const auto& l : fw.layers) {
      if (l.geometry_kind == GeometryKind::image) continue;
      const auto c = clean_topology(w, l.name);
      need(!c.changed(), fw.code + "/" + l.name + ": second clean changed something");
      const auto m = merge_sheets(w, l.name);
      need(!m.changed(), fw.code + "/" + l.name + ": second merge changed something");
      ++layers;
    }
    need(encode_warehouse(w) == before, fw.code + ": second pass altered the warehouse bytes");
  }
  need(merged > 0, "fixtures exercised no merges");
  return std::to_string(corpus.warehouses.size()) + " warehouses, " + std::to_string(layers) +
         " layers, zero changes on second clean and merge";
}

std::string end_to_end() {
  const auto t0 = Clock::now();
  const auto& site = cli_site();
  // A second clean/merge through the CLI reports nothing to do.
  for (const char* step : {"clean --warehouse all", "merge --warehouse all"}) {
    const auto r = cli(step, site);
    need(r.code == 0, std::string(step) + " failed");
    std::istringstream lines(r.out);
    std::string line;
    while (std::getline(lines, line))
      need(line.find(", no changes") != std::string::npos, std::string(step) + " reported: " + line);
  }

  Server srv(site / "atlas.conf", site);

  // map: blank ocean of the requested size
  auto r = srv.get("/api/map?warehouse=FJ&bbox=179,-30,179.5,-29.5&bbox_crs=geographic&width=300&height=200");
  need(r && r->status == 200, "ocean map failed");
  need(r->get_header_value("Content-Type") == "image/png", "map content type");
  const std::vector<std::uint8_t> png(r->body.begin(), r->body.end());
  const auto img = cv::imdecode(png, cv::IMREAD_COLOR);
  need(img.cols == 300 && img.rows == 200, "ocean image is " + std::to_string(img.cols) + "x" + std::to_string(img.rows));
  const auto bg = img.at<cv::Vec3b>(0, 0);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x) need(img.at<cv::Vec3b>(y, x) == bg, "ocean image is not blank");

  // map: scale window at Fiji's base scale, determinism
  const std::string fiji = "/api/map?warehouse=FJ&bbox=176.5,-20,182.5,-15&bbox_crs=geographic&width=640&height=480";
  auto a = srv.get(fiji + "&scale=250000&layers=all");
  auto b = srv.get(fiji + "&scale=250000&layers=all");
  need(a && b && a->status == 200, "Fiji map failed");
  need(a->body == b->body, "identical requests rendered different bytes");
  need(a->get_header_value("X-Atlas-Layers") == "coastline,reefs,rivers,rainfall",
       "layers at 1:250000: " + a->get_header_value("X-Atlas-Layers"));
  a = srv.get(fiji + "&scale=100000&layers=all");
  need(a->get_header_value("X-Atlas-Layers") == "coastline,reefs,rivers,villages,rainfall",
       "layers at 1:100000: " + a->get_header_value("X-Atlas-Layers"));

  // identify
  auto j = srv.get_json("/api/identify?warehouse=FJ&lon=180.5&lat=-16.0");
  need(!j["results"].empty() && j["results"][0]["id"] == "fj-dateline", "identify inside the strip: " + j.dump());
  need(j["results"][0]["attributes"]["name"] == "Dateline strip", "identify attributes");
  j = srv.get_json("/api/identify?warehouse=FJ&lon=179.5&lat=-21.5");
  need(j["results"].empty(), "identify over open ocean returned results");

  // search
  j = srv.get_json("/api/search?q=viti");
  bool viti = false;
  for (const auto& h : j["hits"]) viti |= h["kind"] == "site" && h["name"] == "Viti Levu" && h["target"]["warehouse"] == "FJ";
  need(viti, "search viti: " + j.dump());
  srv.get_json("/api/search?q=", 400);
  const auto countries = srv.get_json("/api/countries");
  std::set<std::string> want, got;
  for (const auto& c : countries["countries"]) {
    std::string name = c["name"];
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    if (name.find("islands") != std::string::npos) want.insert(c["code"].get<std::string>());
  }
  const auto islands = srv.get_json("/api/search?q=islands");
  for (const auto& h : islands["hits"])
    if (h["kind"] == "country") got.insert(h["target"]["warehouse"].get<std::string>());
  auto joined = [](const std::set<std::string>& v) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + x;
    return out;
  };
  need(!want.empty() && got == want, "search islands found {" + joined(got) + "}, catalog scan {" + joined(want) + "}");

  // measure
  const double r_earth = defaults::authalic_radius_m;
  j = srv.get_json("/api/measure?path=10,20&mode=distance");
  need(j["value"] == 0.0, "single point distance " + j.dump());
  j = srv.get_json("/api/measure?path=0,0;180,0&mode=distance");
  need(std::abs(j["value"].get<double>() - oracle::kPi * r_earth) < 1e-6, "half circumference " + j.dump());
  j = srv.get_json("/api/measure?path=0,0;1,0;1,1;0,1&mode=area");
  const double quad = oracle::equator_quad_area(0, 1, 1, r_earth);
  need(std::abs(j["value"].get<double>() - quad) < 1.0, "quad area " + j.dump() + " vs " + fmt(quad, 15));

  // legend
  auto legend_visible = [&](const std::string& scale) {
    std::map<std::string, bool> v;
    std::set<std::string> groups;
    const auto legend = srv.get_json("/api/legend?warehouse=FJ&scale=" + scale);
    for (const auto& grp : legend["groups"]) {
      groups.insert(grp["theme_group"].get<std::string>());
      for (const auto& l : grp["layers"]) v[l["name"]] = l["visible"];
    }
    need(groups.count("general-reference") && groups.count("environment"), "legend groups");
    return v;
  };
  need(legend_visible("100000")["villages"], "villages hidden at its boundary scale");
  need(!legend_visible("100001")["villages"], "villages visible past its window");

  need(srv.stop() == 0, "serve did not exit cleanly on SIGTERM");
  const double t = seconds_since(t0);
  need(t < 120.0, "took " + fmt(t) + " s");
  return "CLI pipeline + map/identify/search/measure/legend checks, clean SIGTERM exit, " + fmt(t) + " s";
}

std::string offline_bundle() {
  const auto& site = cli_site();
  const auto out = scratch("bundle") / "atlas-cd";
  cli_ok("export-offline --out '" + out.string() + "'", site);
  // Relocate the bundle and serve it from an unrelated working directory.
  const auto moved = scratch("bundle-moved") / "mounted";
  fs::rename(out, moved);
  const auto elsewhere = scratch("elsewhere");

  const std::vector<std::string> script{
      "/api/countries",
      "/api/map?warehouse=FJ&bbox=176.5,-20,182.5,-15&bbox_crs=geographic&width=512&height=400",
      "/api/map?warehouse=REGION&bbox=150,-24,210,10&bbox_crs=geographic&width=800&height=450&layers=all",
      "/api/map?warehouse=TO&bbox=183,-22,187,-17&bbox_crs=geographic&width=256&height=256&scale=100000",
      "/api/features?warehouse=FJ&layer=coastline&bbox=177,-17,184,-15&bbox_crs=geographic",
      "/api/features?warehouse=VU&layer=villages&bbox=160,-25,175,-10&bbox_crs=geographic&scale=50000",
      "/api/identify?warehouse=FJ&lon=180.5&lat=-16.0",
      "/api/identify?warehouse=KI&lon=188&lat=0&tolerance_px=40",
      "/api/search?q=viti",
      "/api/search?q=climate",
      "/api/measure?path=178.44,-18.14;184.79,-21.14&mode=distance",
      "/api/measure?path=179.5,0;180.5,0;180.5,1;179.5,1&mode=area",
      "/api/legend?warehouse=SB&scale=250000",
      "/api/legend?warehouse=REGION&scale=1000000",
      "/api/map?warehouse=XX&bbox=0,0,1,1&width=64&height=64",
      "/api/features?warehouse=FJ&layer=nope&bbox=0,0,1,1",
  };
  Server live(site / "atlas.conf", site);
  Server bundle(moved / "atlas.conf", elsewhere);
  std::size_t bytes = 0;
  for (const auto& target : script) {
    auto x = live.get(target), y = bundle.get(target);
    need(x && y, "no response for " + target);
    need(x->status == y->status, target + ": status " + std::to_string(x->status) + " vs " + std::to_string(y->status));
    need(x->body == y->body, target + ": bodies differ");
    for (const auto& [k, v] : x->headers)
      if (k.rfind("X-Atlas-", 0) == 0 || k == "Content-Type")
        need(y->get_header_value(k.c_str()) == v, target + ": header " + k + " differs");
    bytes += x->body.size();
  }
  need(live.stop() == 0 && bundle.stop() == 0, "servers did not exit cleanly");
  return std::to_string(script.size()) + " scripted requests byte-identical (" + std::to_string(bytes) +
         " bytes) from a relocated bundle";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
      {"catalog-fidelity", catalog_fidelity},
      {"projection-roundtrip", projection_roundtrip},
      {"datum-affine-oracles", datum_affine},
      {"antimeridian-contiguity", antimeridian},
      {"cache-oracle-equivalence", cache_equivalence},
      {"cache-performance", cache_performance},
      {"rebuild-semantics", rebuild_semantics},
      {"pipeline-idempotence", pipeline_idempotence},
      {"end-to-end-smoke", end_to_end},
      {"offline-bundle", offline_bundle},
  };
  std::string only;
  if (argc == 3 && std::string(argv[1]) == "--only") only = argv[2];

  int failed = 0, ran = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name != only) continue;
    ++ran;
    const auto t0 = Clock::now();
    std::string status = "PASS", detail;
    try {
      detail = check();
    } catch (const Failed& f) {
      status = "FAIL";
      detail = f.why;
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = std::string("exception: ") + e.what();
    }
    failed += status == "FAIL";
    std::printf("%s  %-26s %7.2fs  %s\n", status.c_str(), name.c_str(), seconds_since(t0), detail.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
