#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fhzd/reference.hpp"

using namespace fhzd;
namespace fs = std::filesystem;

namespace {

const std::string kData = FHZD_DATA_DIR;

struct Scratch {
  fs::path root = fs::temp_directory_path() / "fhzd_cli_test";
  Scratch() {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  fs::path operator/(const std::string& s) const { return root / s; }
};

int run(const std::string& args) {
  const int rc = std::system(("FHZD_LOG=0 " FHZD_CLI " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string robot_arg() { return " --robot " + kData + "/robot.json"; }
std::string gait_arg() { return " --gait " + kData + "/gait.json"; }

}  // namespace

TEST_CASE("usage errors exit 2 and write nothing") {
  Scratch s;
  const std::string out = " --out " + (s / "o").string();
  CHECK(run("") == 2);
  CHECK(run("bogus") == 2);
  CHECK(run("analyze --nope" + out) == 2);
  CHECK(run("analyze" + out) == 2);
  CHECK(run("analyze" + robot_arg() + out) == 2);
  CHECK(run("analyze --robot " + (s / "missing.json").string() + gait_arg() + out) == 2);
  CHECK(run("simulate" + robot_arg() + gait_arg() + " --steps 0" + out) == 2);
  CHECK(run("simulate" + robot_arg() + gait_arg() + " --steps 1 --svg-stride 0" + out) == 2);
  CHECK(run("analyze" + robot_arg() + gait_arg() + " --tol -1" + out) == 2);
  CHECK(run("export" + robot_arg() + out) == 2);
  CHECK(run("export" + robot_arg() + " --trace " + (s / "none.csv").string() + out) == 2);
  std::ofstream(s / "bad.json") << "{\"links\": 3";
  CHECK(run("analyze --robot " + (s / "bad.json").string() + gait_arg() + out) == 2);
  CHECK(!fs::exists(s / "o"));
  CHECK(run("--help") == 0);
}

TEST_CASE("domain failures exit 1 before any output") {
  Scratch s;
  std::ofstream(s / "flat.json") << nlohmann::json(reference_gait(RobotParams::table1(), {})).dump();
  CHECK(run("analyze" + robot_arg() + " --gait " + (s / "flat.json").string() + " --out " + (s / "o").string()) ==
        1);
  CHECK(!fs::exists(s / "o"));
}

TEST_CASE("commands write their outputs, deterministically") {
  Scratch s;
  for (const char* tag : {"a", "b"}) {
    const std::string out = " --out " + (s / tag).string();
    REQUIRE(run("analyze" + robot_arg() + gait_arg() + out) == 0);
    REQUIRE(run("reversal" + robot_arg() + gait_arg() + out) == 0);
    REQUIRE(run("simulate" + robot_arg() + gait_arg() + " --steps 2 --svg-stride 30" + out) == 0);
  }
  for (const char* f :
       {"analysis.json", "reversal.json", "gait_corrected.json", "trace.csv", "steps.json", "snapshots.svg"}) {
    CAPTURE(f);
    const std::string a = slurp(s / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(s / "b" / f));
  }
  CHECK(run("export" + robot_arg() + " --trace " + (s / "a" / "trace.csv").string() + " --svg-stride 30 --out " +
            (s / "e").string()) == 0);
  CHECK(slurp(s / "e" / "snapshots.svg") == slurp(s / "a" / "snapshots.svg"));
  // The corrected shipped gait is already consistent.
  const GaitParams again = load_gait((s / "a" / "gait_corrected.json").string());
  CHECK(std::abs(again.beta_r_minus - load_gait(kData + "/gait.json").beta_r_minus) < 1e-10);
  CHECK(run("export" + robot_arg() + " --trace " + (s / "a" / "trace.csv").string() + " --svg-stride 0 --out " +
            (s / "f").string()) == 2);
  CHECK(!fs::exists(s / "f"));
}

TEST_CASE("seed example materializes its inputs") {
  Scratch s;
  REQUIRE(run("analyze --seed-example --out " + (s / "o").string()) == 0);
  CHECK(slurp(s / "o" / "robot.json") == slurp(kData + "/robot.json"));
  CHECK(slurp(s / "o" / "gait.json") == slurp(kData + "/gait.json"));
  CHECK(slurp(s / "o" / "problem.json") == slurp(kData + "/problem.json"));
}
