// Drives the atlas binary as a subprocess: exit codes, reports, serve lifecycle.

#include <gtest/gtest.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "atlas/fixtures.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/warehouse.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

/// Runs the CLI through the shell; stderr is merged into `out`.
Run cli(const std::string& args, const fs::path& cwd = fs::current_path()) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" ATLAS_CLI_PATH "' " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  std::string out;
  std::array<char, 4096> buf;
  while (auto n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

const fs::path& scratch_root() {
  static const struct Root {
    fs::path path = fs::temp_directory_path() / ("atlas_cli_" + std::to_string(getpid()));
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

/// Fixtures with every warehouse created and ingested, no caches yet.
const fs::path& ingested_site() {
  static const fs::path dir = [] {
    auto d = scratch("site");
    EXPECT_EQ(cli("make-fixtures --out site", d).code, 0);
    d /= "site";
    const auto catalog = atlas::load_catalog(d / "catalog.json");
    for (const auto* e : catalog.all()) {
      const auto r = cli("create --warehouse " + e->code + " --schema schema/" + e->code + ".json", d);
      EXPECT_EQ(r.code, 0) << r.out;
    }
    const auto r = cli("ingest --manifest sources/manifest.json", d);
    EXPECT_EQ(r.code, 0) << r.out;
    return d;
  }();
  return dir;
}

json read_json(const fs::path& p) { return json::parse(atlas::io::read_text(p)); }

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("build-cache --warehouse FJ --no-such-flag").code, 1);
  const auto r = cli("ingest --warehouse FJ");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--manifest"), std::string::npos);
}

TEST(Cli, FullPipelineSucceeds) {
  const auto& d = ingested_site();
  for (const char* step : {"clean --warehouse all", "merge --warehouse all", "validate --warehouse all"}) {
    const auto r = cli(step, d);
    EXPECT_EQ(r.code, 0) << step << "\n" << r.out;
  }
  auto r = cli("build-cache --warehouse all --report build.json", d);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = read_json(d / "build.json");
  EXPECT_TRUE(report["ok"].get<bool>());
  EXPECT_EQ(report["command"], "build-cache");
  EXPECT_EQ(report["result"]["caches"].size(), 13u);

  const auto before = fs::last_write_time(d / "caches/FJ.pisc");
  r = cli("build-cache --warehouse FJ --report again.json", d);
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("byte-identical"), std::string::npos);
  EXPECT_TRUE(read_json(d / "again.json")["result"]["caches"][0]["unchanged"].get<bool>());
  EXPECT_EQ(fs::last_write_time(d / "caches/FJ.pisc"), before);

  r = cli("stats --warehouse FJ", d);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("coastline"), std::string::npos);
}

TEST(Cli, SecondCleanAndMergeChangeNothing) {
  const auto& d = ingested_site();
  ASSERT_EQ(cli("clean --warehouse all", d).code, 0);
  ASSERT_EQ(cli("merge --warehouse all", d).code, 0);
  const auto bytes = atlas::io::read_file(d / "warehouses/FJ.piwa");
  const auto clean = cli("clean --warehouse all", d);
  const auto merge = cli("merge --warehouse all", d);
  EXPECT_EQ(clean.out.find("cleaned\n"), std::string::npos) << clean.out;
  EXPECT_EQ(merge.out.find("merged\n"), std::string::npos) << merge.out;
  EXPECT_EQ(atlas::io::read_file(d / "warehouses/FJ.piwa"), bytes);
}

TEST(Cli, UserErrorsExitOne) {
  const auto& d = ingested_site();
  auto r = cli("ingest --warehouse FJ --layer rivers --crs tm:zone=60 sources/FJ/rivers.geojson", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("hint:"), std::string::npos);
  EXPECT_EQ(cli("ingest --warehouse FJ --layer rivers --shift shift:1,2 sources/FJ/rivers.geojson", d).code, 1);
  EXPECT_EQ(cli("ingest --warehouse FJ --layer nope sources/FJ/rivers.geojson", d).code, 1);
  EXPECT_EQ(cli("validate --warehouse XX", d).code, 1);
  EXPECT_EQ(cli("validate --warehouse FJ --config missing.conf", d).code, 1);
  EXPECT_EQ(cli("create --warehouse FJ --schema schema/FJ.json", d).code, 1);  // exists
  EXPECT_EQ(cli("build-cache --warehouse FJ --scale 10", d).code, 1);
  EXPECT_EQ(cli("make-fixtures --out .", d).code, 1);  // not empty
}

TEST(Cli, DataErrorsExitTwoAndStillReport) {
  const auto d = scratch("broken");
  fs::copy(ingested_site(), d, fs::copy_options::recursive);
  auto bytes = atlas::io::read_file(d / "warehouses/TO.piwa");
  bytes[bytes.size() / 2] ^= 0x5a;
  atlas::io::write_file_atomic(d / "warehouses/TO.piwa", bytes);
  auto r = cli("validate --warehouse TO --report r.json", d);
  EXPECT_EQ(r.code, 2) << r.out;
  const auto report = read_json(d / "r.json");
  EXPECT_FALSE(report["ok"].get<bool>());
  EXPECT_EQ(report["exit_code"], 2);
  EXPECT_EQ(report["error"]["code"], "corrupt");

  atlas::io::write_text_atomic(d / "sources/bad.geojson", "{\"type\": \"FeatureCollection\", \"features\": [");
  EXPECT_EQ(cli("ingest --warehouse TK --layer rivers sources/bad.geojson", d).code, 2);

  fs::create_directories(d / "caches");
  atlas::io::write_text_atomic(d / "caches/NR.pisc", "not a cache");
  EXPECT_EQ(cli("stats --warehouse NR", d).code, 2);
}

TEST(Cli, GcpFitRecoversTheDigitizerTransform) {
  const auto& d = ingested_site();
  const auto r = cli("gcp-fit --pairs gcp/tuvalu_villages.csv", d);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto fitted = atlas::geo::parse_affine(r.out.substr(0, r.out.find('\n')));
  EXPECT_NEAR(fitted.a, 250.0, 1e-6);
  EXPECT_NEAR(fitted.b, -2.0, 1e-6);
  EXPECT_NEAR(fitted.c, 300000.0, 1e-3);
  EXPECT_NEAR(fitted.d, 2.0, 1e-6);
  EXPECT_NEAR(fitted.e, 250.0, 1e-6);
  EXPECT_NEAR(fitted.f, 9000000.0, 1e-3);

  const auto dir = scratch("gcp");
  atlas::io::write_text_atomic(dir / "two.csv", "0,0,1,1\n1,0,2,1\n");
  EXPECT_EQ(cli("gcp-fit --pairs two.csv", dir).code, 1);
  atlas::io::write_text_atomic(dir / "junk.csv", "0,0,1\n");
  EXPECT_EQ(cli("gcp-fit --pairs junk.csv", dir).code, 1);
}

TEST(Cli, ServeAnswersAndStopsCleanlyOnSigterm) {
  const auto& d = ingested_site();
  ASSERT_EQ(cli("build-cache --warehouse FJ", d).code, 0);

  int out_pipe[2];
  ASSERT_EQ(pipe(out_pipe), 0);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    dup2(out_pipe[1], STDOUT_FILENO);
    close(out_pipe[0]);
    if (chdir(d.c_str()) != 0) _exit(99);
    execl(ATLAS_CLI_PATH, "atlas", "serve", "--port", "0", "--reference-pixel", "0.00028", nullptr);
    _exit(98);
  }
  close(out_pipe[1]);
  std::string line;
  char c;
  while (read(out_pipe[0], &c, 1) == 1 && c != '\n') line += c;
  const auto colon = line.rfind(':');
  ASSERT_NE(colon, std::string::npos) << line;
  const int port = std::stoi(line.substr(colon + 1));
  ASSERT_GT(port, 0);

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/countries");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["countries"].size(), 12u);
  res = client.Get("/api/map?warehouse=FJ&bbox=176,-20,182,-15&bbox_crs=geographic&width=64&height=64");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");

  kill(pid, SIGTERM);
  int status = 0;
  ASSERT_EQ(waitpid(pid, &status, 0), pid);
  close(out_pipe[0]);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Cli, ExportOfflineRefusesNonEmptyOutput) {
  const auto& d = ingested_site();
  ASSERT_EQ(cli("build-cache --warehouse all", d).code, 0);
  const auto out = scratch("bundle");
  atlas::io::write_text_atomic(out / "keep.txt", "x");
  EXPECT_EQ(cli("export-offline --out '" + out.string() + "'", d).code, 1);
  const auto r = cli("export-offline --force --warehouse FJ --warehouse REGION --out '" + out.string() + "'", d);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto manifest = read_json(out / "manifest.json");
  EXPECT_EQ(manifest["countries"], json({"FJ", "REGION"}));
  EXPECT_EQ(cli("stats --warehouse FJ --config '" + (out / "atlas.conf").string() + "'").code, 0);
}

TEST(Cli, ValidateListsInjectedFailures) {
  const auto d = scratch("invalid");
  fs::copy(ingested_site(), d, fs::copy_options::recursive);
  auto w = atlas::load_warehouse(d / "warehouses/NU.piwa");
  auto& ring = w.layer("coastline").features.at(0).geometry.parts[0][0];
  std::reverse(ring.begin(), ring.end());
  atlas::save_warehouse(w, d / "warehouses/NU.piwa");
  const auto r = cli("validate --warehouse NU --warehouse TK --report v.json", d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("ring-winding"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("TK: valid"), std::string::npos) << r.out;
  const auto report = read_json(d / "v.json");
  EXPECT_EQ(report["result"]["validation"]["NU"]["passed"], false);
  EXPECT_EQ(report["result"]["validation"]["TK"]["passed"], true);
}

TEST(Cli, ImageLayersCannotBeCached) {
  const auto& d = ingested_site();
  const auto r = cli("build-cache --warehouse FJ --layers coastline,airphotos", d);
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_EQ(cli("build-cache --warehouse FJ --layers nope", d).code, 1);
}

TEST(Cli, GcpFitOfIdenticalPairsIsTheIdentity) {
  const auto dir = scratch("identity");
  atlas::io::write_text_atomic(dir / "same.csv", "0,0,0,0\n100,0,100,0\n0,100,0,100\n37,81,37,81\n");
  const auto r = cli("gcp-fit --pairs same.csv --report fit.json", dir);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(atlas::geo::parse_affine(r.out.substr(0, r.out.find('\n'))), atlas::geo::AffineTransform{});
  EXPECT_EQ(read_json(dir / "fit.json")["result"]["rms"], 0.0);
}

TEST(Cli, FixedSeedWritesIdenticalCorpora) {
  const auto dir = scratch("seeds");
  ASSERT_EQ(cli("make-fixtures --out a --seed 5", dir).code, 0);
  ASSERT_EQ(cli("make-fixtures --out b --seed 5", dir).code, 0);
  ASSERT_EQ(cli("make-fixtures --out c --seed 6", dir).code, 0);
  auto tree = [](const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = atlas::io::read_file(e.path());
    return files;
  };
  const auto a = tree(dir / "a");
  EXPECT_GT(a.size(), 50u);
  EXPECT_EQ(a, tree(dir / "b"));
  EXPECT_NE(a, tree(dir / "c"));
}

TEST(Cli, SchemaRejectionsAreAPartialSuccess) {
  const auto d = scratch("partial");
  fs::copy(ingested_site(), d, fs::copy_options::recursive);
  atlas::io::write_text_atomic(d / "sources/extra.geojson", R"({"type": "FeatureCollection", "features": [
    {"type": "Feature", "id": "r1", "properties": {"name": "Good"},
     "geometry": {"type": "LineString", "coordinates": [[-171.8, -9.2], [-171.7, -9.1]]}},
    {"type": "Feature", "id": "r2", "properties": {},
     "geometry": {"type": "LineString", "coordinates": [[-171.8, -9.3], [-171.7, -9.2]]}}]})");
  const auto r = cli("ingest --warehouse TK --layer rivers sources/extra.geojson --report i.json", d);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("stored 1, rejected 1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rejected r2"), std::string::npos) << r.out;
  EXPECT_EQ(read_json(d / "i.json")["result"]["result"]["features_rejected"], 1);
}
