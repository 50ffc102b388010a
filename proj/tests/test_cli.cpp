#include <sys/wait.h>

#include <cstdio>
#include <map>
#include <string>

#include "common.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::map<std::string, std::string> lines;  // key -> raw json text
  std::string raw;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CLI_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.raw.append(buf, n);
  const int st = pclose(pipe);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  std::size_t from = 0;
  while (from < r.raw.size()) {
    std::size_t eol = r.raw.find('\n', from);
    if (eol == std::string::npos) eol = r.raw.size();
    const std::string line = r.raw.substr(from, eol - from);
    const std::size_t tab = line.find('\t');
    if (tab != std::string::npos)
      r.lines[line.substr(0, tab)] = line.substr(tab + 1);
    from = eol + 1;
  }
  return r;
}

std::string data(const std::string& name) {
  return std::string(DATA_DIR) + "/" + name;
}

json value_of(const CliResult& r, const std::string& key) {
  const auto it = r.lines.find(key);
  INFO("key " << key << " in output:\n" << r.raw);
  REQUIRE(it != r.lines.end());
  return json::parse(it->second);
}

void check_number(const CliResult& r, const std::string& key, double want,
                  double tol) {
  testing::check_value(value_of(r, key).get<double>(), want, tol);
}

void check_vector(const CliResult& r, const std::string& key,
                  const std::vector<double>& want, double tol) {
  testing::check_close(value_of(r, key).get<std::vector<double>>(), want, tol);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("compile reports the tree shape") {
  const CliResult r = run_cli("compile " + data("toy1.json"));
  CHECK(r.code == 0);
  CHECK(value_of(r, "variables").get<int>() == 2);
  CHECK(value_of(r, "cliques").get<int>() == 1);
  CHECK(value_of(r, "max-state-space").get<int>() == 4);
  CHECK(value_of(r, "total-state-space").get<int>() == 4);
  CHECK(value_of(r, "clique[0]") == json({"X", "Y"}));

  const CliResult c = run_cli("compile " + data("chain3.json"));
  CHECK(value_of(c, "cliques").get<int>() == 2);
  CHECK(value_of(c, "max-state-space").get<int>() == 4);
  CHECK(value_of(c, "total-state-space").get<int>() == 8);
  CHECK(value_of(c, "clique[0]") == json({"X", "Y"}));
  CHECK(value_of(c, "clique[1]") == json({"Y", "Z"}));
}

TEST_CASE("query prints the pinned toy numbers in every mode") {
  for (const std::string mode : {"larp", "all-evidence", "clarp"}) {
    const CliResult r = run_cli(
        "query " + data("toy1.json") + " " + data("toy1_ev.json") +
        " --mode " + mode +
        " --prob-evidence --marginal X --marginal Y --d-theta X --d-theta Y"
        " --d-f X --d-f Y");
    REQUIRE(r.code == 0);
    check_number(r, "P(e)", 0.41, 1e-12);
    check_vector(r, "P(X|e)", {0.27 / 0.41, 0.14 / 0.41}, 1e-12);
    check_vector(r, "P(Y|e)", {1.0, 0.0}, 0.0);
    check_vector(r, "dP/dtheta(X)", {0.9, 0.2}, 1e-12);
    check_vector(r, "dP/dtheta(Y)", {0.3, 0.0, 0.7, 0.0}, 1e-12);
    check_vector(r, "dP/df(X)", {0.27, 0.14}, 1e-12);
    check_vector(r, "dP/df(Y)", {0.41, 0.59}, 1e-12);
  }
}

TEST_CASE("query without an evidence file runs against nothing observed") {
  const CliResult r =
      run_cli("query " + data("toy1.json") + " --prob-evidence --joint X,Y");
  REQUIRE(r.code == 0);
  check_number(r, "P(e)", 1.0, 1e-12);
  check_vector(r, "P(X,Y,e)", {0.27, 0.03, 0.14, 0.56}, 1e-12);
}

TEST_CASE("joint output zeroes cells off the finding") {
  const CliResult r = run_cli("query " + data("toy1.json") + " " +
                              data("toy1_ev.json") + " --joint X,Y");
  REQUIRE(r.code == 0);
  check_vector(r, "P(X,Y,e)", {0.27, 0.0, 0.14, 0.0}, 1e-12);
}

TEST_CASE("separator and multi derivatives ride the chain") {
  const CliResult r = run_cli("query " + data("chain3.json") +
                              " --d-separator 1:0 --d-multi auto:theta:X,f:Y");
  REQUIRE(r.code == 0);
  check_vector(r, "dP/dsep(1:0)", {1.0, 1.0}, 1e-12);
  check_vector(r, "dP/dmulti(auto:theta:X,f:Y)", {0.9, 0.1, 0.2, 0.8}, 1e-12);
}

TEST_CASE("retraction works only under the cautious scheme") {
  const std::string base = "query " + data("toy1.json") + " " +
                           data("toy1_ev.json") +
                           " --retract Y --prob-evidence --d-theta X";
  const CliResult plain = run_cli(base);
  CHECK(plain.code == 1);
  const CliResult r = run_cli(base + " --mode clarp");
  REQUIRE(r.code == 0);
  check_number(r, "P(e')", 1.0, 1e-12);
  check_vector(r, "dP(e')/dtheta(X)", {1.0, 1.0}, 1e-12);
  const CliResult mixed = run_cli(base + " --mode clarp --marginal X");
  CHECK(mixed.code == 1);
}

TEST_CASE("failures map to distinct exit codes") {
  SUBCASE("invalid model") {
    CHECK(run_cli("query " + data("bad_row.json") + " --prob-evidence").code ==
          2);
  }
  SUBCASE("missing file") {
    CHECK(run_cli("query " + data("no_such.json") + " --prob-evidence").code ==
          2);
  }
  SUBCASE("unknown variable") {
    CHECK(run_cli("query " + data("toy1.json") + " --marginal Q").code == 2);
  }
  SUBCASE("impossible evidence has no posteriors") {
    const CliResult r = run_cli("query " + data("det.json") + " " +
                                data("det_ev.json") + " --marginal Z");
    CHECK(r.code == 3);
  }
  SUBCASE("bad command line") {
    CHECK(run_cli("query").code == 1);
    CHECK(run_cli("frobnicate x").code == 1);
    CHECK(run_cli("query " + data("toy1.json") + " --mode wat").code == 1);
  }
}

TEST_CASE("bench is deterministic in everything but wall time") {
  const std::string args = "bench --vars 7 --sets 2 --max-evidence 2 --seed 5";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  for (int n = 0; n <= 2; ++n) {
    const std::string key = "bench[n=" + std::to_string(n) + "]";
    const json ja = value_of(a, key);
    const json jb = value_of(b, key);
    for (const char* mode : {"larp", "all-evidence", "clarp"}) {
      REQUIRE(ja.contains(mode));
      CHECK(ja[mode]["avg-largest"] == jb[mode]["avg-largest"]);
      CHECK(ja[mode]["avg-seconds"].get<double>() >= 0.0);
    }
  }
}

}  // TEST_SUITE
