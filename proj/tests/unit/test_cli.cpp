#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kSource = EDGEPRIVSIM_SOURCE_DIR;

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("edgeprivsim_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

int cli(const std::string& args, const fs::path& capture = {}) {
  std::string cmd = std::string("\"") + EDGEPRIVSIM_CLI + "\" " + args;
  cmd += capture.empty() ? " > /dev/null 2>&1" : " > \"" + capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string scenario(const char* name) { return "\"" + (kSource / "scenarios" / name).string() + "\""; }

}  // namespace

TEST_CASE("run writes artifacts and is reproducible") {
  Scratch s("run");
  const std::string common = "run --scenario " + scenario("default.json") + " --users 5 --technique dp --seed 3";
  REQUIRE(cli(common + " --out \"" + (s.dir / "a").string() + "\"") == 0);
  REQUIRE(cli(common + " --out \"" + (s.dir / "b").string() + "\"") == 0);
  for (const char* f : {"breakdown.csv", "summary.json", "distribution.csv", "energy.csv"}) {
    CHECK(fs::exists(s.dir / "a" / f));
  }
  CHECK(slurp(s.dir / "a" / "summary.json") == slurp(s.dir / "b" / "summary.json"));
  CHECK(slurp(s.dir / "a" / "breakdown.csv") == slurp(s.dir / "b" / "breakdown.csv"));
  const auto j = nlohmann::json::parse(slurp(s.dir / "a" / "summary.json"));
  CHECK(j["seed"] == 3);
  CHECK(j["users"] == 5);
}

TEST_CASE("configuration errors exit with status 1") {
  Scratch s("config");
  auto j = nlohmann::json::parse(slurp(kSource / "scenarios" / "default.json"));
  j["workload"]["mix"].push_back({{"technique", "fhe"}, {"model", "vgg16"}, {"dataset", "ecg5000"}});
  std::ofstream(s.dir / "bad.json") << j.dump();
  const fs::path log = s.dir / "log.txt";
  CHECK(cli("run --scenario \"" + (s.dir / "bad.json").string() + "\" --out \"" + (s.dir / "o").string() + "\"", log) == 1);
  CHECK(slurp(log).find("vgg16") != std::string::npos);

  CHECK(cli("run --scenario " + scenario("default.json") + " --parties 7") == 1);
  CHECK(cli("run") == 1);
  CHECK(cli("no-such-command") == 1);
}

TEST_CASE("accountant sweep") {
  Scratch s("accountant");
  const fs::path out = s.dir / "eps.csv";
  REQUIRE(cli("accountant --out \"" + out.string() + "\"") == 0);
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  CHECK(line == "sigma,epsilon,best_order");
  std::vector<double> eps;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    eps.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  REQUIRE(eps.size() == 11);
  for (std::size_t i = 1; i < eps.size(); ++i) CHECK(eps[i] < eps[i - 1]);

  const fs::path one = s.dir / "one.csv";
  REQUIRE(cli("accountant --sigma 1.0", one) == 0);
  CHECK(slurp(one).find("1,3.736") != std::string::npos);
  CHECK(cli("accountant --sigma 0") == 1);
}

TEST_CASE("sweep over users") {
  Scratch s("sweep");
  REQUIRE(cli("sweep --scenario " + scenario("table_constants.json") + " --users 1,2 --technique dp,smc --out \"" +
              s.dir.string() + "\"") == 0);
  const std::string csv = slurp(s.dir / "sweep.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 5);
  CHECK(fs::exists(s.dir / "users-2_technique-smc" / "summary.json"));
}

TEST_CASE("steal-eval pool and gaps") {
  Scratch s("steal");
  {
    std::ofstream test(s.dir / "test.csv");
    test << "index,f0,f1\n";
    for (int i = 0; i < 100; ++i) test << i << "," << i * 0.5 << "," << -i << "\n";
    std::ofstream truth(s.dir / "truth.csv");
    std::ofstream target(s.dir / "target.csv");
    std::ofstream sub(s.dir / "sub.csv");
    truth << "index,label\n";
    target << "index,label\n";
    sub << "index,label\n";
    for (int i = 0; i < 10; ++i) {
      truth << i << "," << i % 2 << "\n";
      target << i << "," << (i < 9 ? i % 2 : 0) << "\n";
      sub << i << "," << (i < 7 ? i % 2 : 0) << "\n";
    }
    std::ofstream(s.dir / "manifest.csv") << "sigma,seed,target,substitute\n0.5,1,target.csv,sub.csv\n";
  }
  const fs::path pool = s.dir / "pool.csv";
  REQUIRE(cli("steal-eval pool --test \"" + (s.dir / "test.csv").string() + "\" --q 0.3 --seed 4 --out \"" +
              pool.string() + "\"") == 0);
  std::size_t lines = 0;
  for (char c : slurp(pool)) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 1 + 30 + 30);

  const fs::path gaps = s.dir / "gaps.json";
  REQUIRE(cli("steal-eval gaps --manifest \"" + (s.dir / "manifest.csv").string() + "\" --truth \"" +
              (s.dir / "truth.csv").string() + "\" --out \"" + gaps.string() + "\"") == 0);
  const auto j = nlohmann::json::parse(slurp(gaps));
  // Target misses one label of ten, the substitute two.
  CHECK(j["rows"][0]["delta_acc"]["mean"].get<double>() == doctest::Approx(0.9 - 0.8));
}

TEST_CASE("synth-traces and report") {
  Scratch s("synth");
  const fs::path traces = s.dir / "traces.csv";
  REQUIRE(cli("synth-traces --scenario " + scenario("table_constants.json") + " --out \"" + traces.string() + "\"") == 0);
  CHECK(slurp(traces).rfind("technique,model,dataset,device_class,stage,unit,value", 0) == 0);

  REQUIRE(cli("run --scenario " + scenario("table_constants.json") + " --out \"" + (s.dir / "run").string() + "\"") == 0);
  const fs::path rep = s.dir / "report.json";
  REQUIRE(cli("report --in \"" + (s.dir / "run").string() + "\" --bins 5 --out \"" + rep.string() + "\"") == 0);
  const auto j = nlohmann::json::parse(slurp(rep));
  CHECK(j["overall"]["requests"] == 3);
}
