#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
};

std::string cli_path() {
  const char* p = std::getenv("LVGP_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string data_dir() {
  const char* p = std::getenv("LVGP_DATA_DIR");
  REQUIRE(p != nullptr);
  return p;
}

std::string golden_dir() {
  const char* p = std::getenv("LVGP_GOLDEN_DIR");
  REQUIRE(p != nullptr);
  return p;
}

/// Run the CLI, capturing stdout (stderr is left alone) and the exit code.
RunResult run(const std::string& args) {
  RunResult result;
  const std::string cmd = cli_path() + " " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    result.out.append(buf.data(), got);
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

const std::string kTmp = "/tmp/lvgp_cli_test";

struct TmpDir {
  TmpDir() {
    fs::remove_all(kTmp);
    fs::create_directories(kTmp);
  }
} tmp_dir_guard;

std::string space_path() {
  const std::string path = kTmp + "/space.json";
  if (!fs::exists(path))
    write_file(path, R"({
      "quant": [{"name": "x", "lower": 0.0, "upper": 1.0}],
      "qual": [{"name": "t", "levels": ["a", "b", "c"]}],
      "response": "y"
    })");
  return path;
}

}  // namespace

TEST_CASE("help output matches the golden transcript") {
  RunResult help = run("--help 2>/dev/null");
  CHECK(help.code == 0);
  CHECK(help.out == read_file(golden_dir() + "/help.txt"));
}

TEST_CASE("usage errors exit with the validation code") {
  CHECK(run("2>/dev/null").code == 2);                    // missing subcommand
  CHECK(run("frobnicate 2>/dev/null").code == 2);         // unknown subcommand
  CHECK(run("fit --data x.csv 2>/dev/null").code == 2);   // missing required flags
  CHECK(run("doe --space /tmp/lvgp_no_such_space.json 2>/dev/null").code == 2);
}

TEST_CASE("doe is deterministic and sized by the space") {
  const std::string args = "doe --space " + space_path() + " --per-level 3 --seed 5";
  RunResult a = run(args);
  RunResult b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(count_lines(a.out) == 1 + 3 * 3);  // header + per_level * levels
  CHECK(a.out.rfind("x,t", 0) == 0);
  RunResult c = run(args + "1");  // different seed
  CHECK(c.code == 0);
  CHECK(c.out != a.out);
}

TEST_CASE("fit, predict, and latent round trip through files") {
  // Synthesize training data from the DoE by attaching a response column.
  RunResult doe = run("doe --space " + space_path() + " --per-level 6 --seed 2");
  REQUIRE(doe.code == 0);
  std::istringstream lines(doe.out);
  std::string line;
  std::getline(lines, line);
  std::ostringstream train;
  train << line << ",y\n";
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    const double x = std::stod(line.substr(0, comma));
    const std::string level = line.substr(comma + 1);
    const double bump = level == "a" ? 0.0 : level == "b" ? 1.0 : 2.0;
    train << line << "," << (std::sin(3.0 * x) + bump) << "\n";
  }
  const std::string train_path = kTmp + "/train.csv";
  write_file(train_path, train.str());

  const std::string model_path = kTmp + "/model.json";
  RunResult fit = run("fit --data " + train_path + " --space " + space_path() +
                      " --out " + model_path + " --restarts 3 --seed 4");
  CHECK(fit.code == 0);
  CHECK(fs::exists(model_path));
  CHECK(fit.out.find("\"value\"") != std::string::npos);  // summary JSON

  const std::string query_path = kTmp + "/query.csv";
  write_file(query_path, "x,t\n0.25,a\n0.5,b\n0.75,c\n");
  RunResult pred = run("predict --model " + model_path + " --data " + query_path);
  CHECK(pred.code == 0);
  CHECK(pred.out.rfind("x,t,mean,variance,lower95,upper95", 0) == 0);
  CHECK(count_lines(pred.out) == 4);

  // Writing to a file gives byte-identical content to stdout.
  const std::string pred_path = kTmp + "/pred.csv";
  RunResult pred2 = run("predict --model " + model_path + " --data " + query_path +
                        " --out " + pred_path);
  CHECK(pred2.code == 0);
  CHECK(read_file(pred_path) == pred.out);

  RunResult lat = run("latent --model " + model_path + " --variable t");
  CHECK(lat.code == 0);
  CHECK(count_lines(lat.out) == 4);  // header + one row per level
  CHECK(lat.out.find("map,") != std::string::npos);

  RunResult bad = run("latent --model " + model_path + " --variable zzz 2>/dev/null");
  CHECK(bad.code == 2);

  // Predict with a column that violates the space declaration.
  write_file(query_path, "x,t\n0.25,zebra\n");
  CHECK(run("predict --model " + model_path + " --data " + query_path +
            " 2>/dev/null").code == 2);
}

TEST_CASE("bayes fit draws chains x draws posterior samples") {
  const std::string train_path = kTmp + "/train.csv";
  REQUIRE(fs::exists(train_path));  // produced by the round-trip test above
  const std::string model_path = kTmp + "/model_bayes.json";
  RunResult fit = run("fit --data " + train_path + " --space " + space_path() +
                      " --out " + model_path +
                      " --method bayes --chains 2 --warmup 100 --draws 25 --seed 6");
  CHECK(fit.code == 0);
  const std::string model_text = read_file(model_path);
  CHECK(model_text.find("\"bayes\"") != std::string::npos);
  CHECK(fit.out.find("\"draws\": 50") != std::string::npos);

  RunResult lat = run("latent --model " + model_path + " --variable t --seed 1");
  CHECK(lat.code == 0);
  // Header + 3 levels x 50 draws + 3 representative rows.
  CHECK(count_lines(lat.out) == 1 + 3 * 50 + 3);
}

TEST_CASE("bench writes byte-reproducible metrics") {
  write_file(kTmp + "/bench.json", R"({
    "function": "otl",
    "per_level": 1,
    "replicates": 2,
    "test_size": 50,
    "methods": ["map-exact"],
    "restarts": 2,
    "seed": 3,
    "threads": 2
  })");
  const std::string out_a = kTmp + "/bench_a", out_b = kTmp + "/bench_b";
  RunResult a = run("bench --config " + kTmp + "/bench.json --out-dir " + out_a);
  RunResult b = run("bench --config " + kTmp + "/bench.json --out-dir " + out_b);
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(fs::exists(out_a + "/report.json"));
  CHECK(fs::exists(out_a + "/latents_map-exact.csv"));
  const std::string metrics = read_file(out_a + "/metrics.csv");
  CHECK(metrics == read_file(out_b + "/metrics.csv"));
  CHECK(metrics.rfind("replicate,method,size,rrmse,mis,coverage\n", 0) == 0);
  CHECK(count_lines(metrics) == 3);
}
