#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "iotstage/cli.hpp"
#include "json.hpp"

using namespace iotstage;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("validate exit codes") {
  const auto ok = cli({"validate", testutil::source_path("scenarios/levelcrossing.json")});
  CHECK(ok.code == kExitOk);
  const auto dup = cli({"validate", testutil::source_path("scenarios/fixtures/invalid/duplicate_ids.json")});
  CHECK(dup.code == kExitInvalid);
  CHECK(dup.out.find("DUPLICATE_NODE_ID") != std::string::npos);
}

TEST_CASE("external node in fast mode is a validation error") {
  const auto r = cli({"run", testutil::source_path("scenarios/fixtures/external.json"), "--mode", "fast"});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("EXTERNAL_REQUIRES_REALTIME") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("usage errors exit 64") {
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"run", "x.json", "--bogus"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"version"}).code == kExitOk);
}

TEST_CASE("repeated runs write a report with overrides and identical stdout") {
  const auto dir = std::filesystem::temp_directory_path() / "iotstage_cli_test";
  std::filesystem::create_directories(dir);
  const std::string report = (dir / "r.json").string();
  const std::vector<std::string> args = {"run", testutil::source_path("scenarios/levelcrossing.json"),
                                         "--repeat", "5", "--seed", "7", "--report", report};
  const auto a = cli(args);
  const auto b = cli(args);
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out.find(" ± ") != std::string::npos);

  std::ifstream in(report);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["n_runs"] == 5);
  CHECK(j["seed"] == 7);
  CHECK(j["overrides"]["seed"] == "7");
  CHECK(j["overrides"]["repeat"] == "5");
  CHECK(j["tags"]["system_latency"]["summary"].get<std::string>().find(" ms") != std::string::npos);
}

TEST_CASE("missing scenario file is a runtime error") {
  CHECK(cli({"run", "/nonexistent/scenario.json"}).code == kExitRuntime);
}

TEST_CASE("calibrate against nothing reports an impossible estimate") {
  const auto r = cli({"calibrate", "--target", "127.0.0.1:9", "--probes", "3", "--spacing-ms", "1",
                      "--timeout-ms", "100"});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("ESTIMATE_IMPOSSIBLE") != std::string::npos);
}
