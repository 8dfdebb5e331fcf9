#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gapforge/cli.hpp"
#include "gapforge/io.hpp"

using namespace gapforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("gapforge_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(std::vector<std::string> args) {
  std::vector<char*> argv;
  args.insert(args.begin(), "gapforge");
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("instance JSON round trip is bit-exact") {
  TempDir dir;
  ExactInstance small = gen_small(rat(10));
  const std::string path = dir.file("small.json");
  save_instance(small, path);
  ExactInstance loaded = load_instance(path);
  CHECK(loaded.a[0] == small.a[0]);
  CHECK(loaded.a[1] == small.a[1]);
  CHECK(loaded.b == small.b);
  CHECK(loaded.c == small.c);
  CHECK(loaded.meta.name == small.meta.name);
  CHECK(loaded.meta.family == small.meta.family);
  CHECK(instance_to_json(loaded) == instance_to_json(small));

  // largest library member, messy
  ExactInstance messy = mess(gen_single(11, rat(10), false), 17).instance;
  const std::string mpath = dir.file("messy.json");
  save_instance(messy, mpath);
  ExactInstance mloaded = load_instance(mpath);
  for (int i = 0; i < messy.m; ++i) CHECK(mloaded.a[i] == messy.a[i]);
  CHECK(mloaded.b == messy.b);
  REQUIRE(mloaded.meta.mess);
  CHECK(mloaded.meta.mess->transform == messy.meta.mess->transform);
  CHECK(instance_to_json(mloaded) == instance_to_json(messy));
}

TEST_CASE("loading an asymmetric matrix reports the entry") {
  TempDir dir;
  ExactInstance small = gen_small(rat(1));
  auto j = nlohmann::json::parse(instance_to_json(small));
  j["A"][0][0][1] = "9";  // break the (1,2)/(2,1) pair of A[0]
  const std::string path = dir.file("bad.json");
  std::ofstream(path) << j.dump(2);
  CHECK_THROWS_WITH_AS(load_instance(path), doctest::Contains("asymmetric entry at (1,2)"),
                       std::invalid_argument);
}

TEST_CASE("rejects unknown format versions") {
  TempDir dir;
  const std::string path = dir.file("v2.json");
  std::ofstream(path) << "{\"version\": 2}";
  CHECK_THROWS_WITH_AS(load_instance(path), doctest::Contains("version"), std::invalid_argument);
}

TEST_CASE("sedumi export: dimension law and reimport") {
  TempDir dir;
  for (int m : {2, 5}) {
    ExactInstance inst = gen_single(m, rat(10), false);
    const std::string prefix = dir.file(inst.meta.name);
    export_sedumi(inst, prefix);
    // A has m rows and n^2 columns
    std::ifstream a(prefix + ".A.txt");
    REQUIRE(a);
    std::string line;
    int rows = 0;
    while (std::getline(a, line)) {
      if (line.empty()) continue;
      ++rows;
      int cols = 1;
      for (char ch : line)
        if (ch == ' ') ++cols;
      CHECK(cols == inst.n * inst.n);
    }
    CHECK(rows == inst.m);

    ExactInstance back = import_sedumi(prefix);
    CHECK(back.m == inst.m);
    CHECK(back.n == inst.n);
    for (int i = 0; i < inst.m; ++i) CHECK(back.a[i] == inst.a[i]);
    CHECK(back.b == inst.b);
    CHECK(back.c == inst.c);
  }
  CHECK(fs::exists(dir.path / "load_gapforge_sedumi.m"));
}

TEST_CASE("sedumi export of the clean m=3 library instance") {
  TempDir dir;
  ExactInstance inst = gen_single(3, rat(10), false);
  const std::string prefix = dir.file("g3");
  export_sedumi(inst, prefix);
  std::ifstream b(prefix + ".b.txt");
  std::vector<std::string> bvals;
  std::string tok;
  while (b >> tok) bvals.push_back(tok);
  CHECK(bvals == std::vector<std::string>{"0", "0", "10"});
  std::ifstream c(prefix + ".c.txt");
  std::vector<std::string> cvals;
  while (c >> tok) cvals.push_back(tok);
  REQUIRE(cvals.size() == 16);
  // vec(diag(1,1,1,0)) column-major
  for (int col = 0; col < 4; ++col)
    for (int row = 0; row < 4; ++row)
      CHECK(cvals[static_cast<size_t>(col) * 4 + row] == ((row == col && row < 3) ? "1" : "0"));
}

TEST_CASE("sdpa export counts upper-triangle nonzeros") {
  TempDir dir;
  ExactInstance small = gen_small(rat(1));
  const std::string path = dir.file("small.dat-s");
  export_sdpa(small, path);
  std::ifstream in(path);
  REQUIRE(in);
  std::string line;
  int count_a1 = 0, count_a2 = 0, count_b = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '"') continue;
    if (line.find('=') != std::string::npos) continue;
    std::istringstream ls(line);
    int mat = -1;
    if (!(ls >> mat)) continue;
    int blk, i, j;
    std::string val;
    if (!(ls >> blk >> i >> j >> val)) continue;
    if (mat == 0) ++count_b;
    if (mat == 1) ++count_a1;
    if (mat == 2) ++count_a2;
  }
  CHECK(count_a1 == 1);
  CHECK(count_a2 == 2);
  CHECK(count_b == 2);
}

TEST_CASE("library build: 40 entries, manifest metadata, round trips") {
  TempDir dir;
  const std::string out = dir.file("library");
  LibraryManifest manifest = build_library(out);
  CHECK(manifest.entries.size() == 40);

  int finite_clean_5 = -1;
  for (size_t i = 0; i < manifest.entries.size(); ++i)
    if (manifest.entries[i].name == "gap_single_finite_clean_5") finite_clean_5 = static_cast<int>(i);
  REQUIRE(finite_clean_5 >= 0);
  const LibraryEntry& e = manifest.entries[finite_clean_5];
  CHECK(e.m == 5);
  CHECK(e.n == 6);
  CHECK(e.dual_value == ExtendedRat(rat(10)));

  // clean and messy variants of the same (family, m) share the known gap
  for (const auto& entry : manifest.entries) {
    if (!entry.mess_seed) continue;
    std::string clean_name = entry.name;
    const auto pos = clean_name.find("messy");
    clean_name.replace(pos, 5, "clean");
    const LibraryEntry* clean = nullptr;
    for (const auto& other : manifest.entries)
      if (other.name == clean_name) clean = &other;
    REQUIRE(clean);
    CHECK(clean->primal_value == entry.primal_value);
    CHECK(clean->dual_value == entry.dual_value);
  }

  LibraryManifest reloaded = load_manifest((fs::path(out) / "manifest.json").string());
  CHECK(reloaded.entries.size() == 40);

  // every emitted file round-trips bit-exactly
  for (const auto& entry : manifest.entries) {
    const std::string jpath = (fs::path(out) / entry.json_file).string();
    ExactInstance inst = load_instance(jpath);
    std::ifstream in(jpath);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(instance_to_json(inst) + "\n" == buf.str());
  }

  // exit-code discipline: certifying a clean library instance succeeds
  for (const auto& entry : manifest.entries) {
    if (entry.mess_seed) continue;
    CHECK(run({"certify", (fs::path(out) / entry.json_file).string()}) == 0);
  }
}

TEST_CASE("cli: generate / certify / export / canonicalize") {
  TempDir dir;
  const std::string inst = dir.file("i.json");
  CHECK(run({"generate", "--family", "single-finite", "--m", "5", "--scale", "10", "--out", inst}) == 0);
  CHECK(run({"certify", inst}) == 0);
  CHECK(run({"certify", inst, "--json"}) == 0);

  const std::string inf = dir.file("inf.json");
  CHECK(run({"generate", "--family", "single-inf", "--m", "3", "--scale", "10", "--out", inf}) == 0);
  CHECK(run({"certify", inf}) == 0);

  const std::string messy = dir.file("messy.json");
  CHECK(run({"generate", "--family", "small", "--scale", "10", "--mess-seed", "4", "--mess-ops", "8",
             "--out", messy}) == 0);
  CHECK(run({"canonicalize", messy}) == 0);
  CHECK(run({"singdeg", inst, "--which", "D"}) == 0);
  CHECK(run({"claimcheck", inst, "--trials", "200", "--seed", "9"}) == 0);
  CHECK(run({"probe", inf, "--iters", "2000"}) == 0);
  CHECK(run({"export", inst, "--format", "sedumi", "--out", dir.file("exp")}) == 0);
  CHECK(run({"export", inst, "--format", "sdpa", "--out", dir.file("exp.dat-s")}) == 0);

  // messy instances stall the exact certifier: exit code 2 (inconclusive)
  CHECK(run({"certify", messy}) == 2);
  // usage errors exit 1
  CHECK(run({"certify", dir.file("missing.json")}) == 1);
  CHECK(run({"nonsense"}) == 1);
}
