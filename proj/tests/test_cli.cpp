#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "doctest.h"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(KOSZUL_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("curvature on fix-b by both routes") {
  const Run r = run("curvature --fixture fix-b --variant lc --slots t,th,th,t --point 1.0,0.3");
  CHECK(r.code == 0);
  CHECK(r.out == "direct: -2\nfactorwise: -2\n");
}

TEST_CASE("zero warp skips the direct route") {
  const Run r = run("curvature --fixture fix-b --variant lc --slots t,th,th,t --point 0,0.3");
  CHECK(r.code == 0);
  CHECK(r.out.find("direct: skipped: near-singular") != std::string::npos);
  CHECK(r.out.find("factorwise: 0") != std::string::npos);
}

TEST_CASE("semi-symmetric metric variant with P on the base") {
  const Run r = run("curvature --fixture fix-b --variant ssm --p-on base --p-field t --slots t,th,th,t --point 1.0,0.3");
  CHECK(r.code == 0);
  const auto d = r.out.find("direct: "), f = r.out.find("factorwise: ");
  REQUIRE(d != std::string::npos);
  REQUIRE(f != std::string::npos);
  const double dv = std::stod(r.out.substr(d + 8)), fv = std::stod(r.out.substr(f + 12));
  CHECK(dv == doctest::Approx(fv).epsilon(1e-9));
}

TEST_CASE("P placed on the wrong factor is a parse error") {
  CHECK(run("curvature --fixture fix-b --variant ssm --p-on fiber:1 --p-field t --slots t,th,th,t --point 1,0.3").code ==
        2);
}

TEST_CASE("NotAnnihilator is a diagnostic with exit 1") {
  const Run r = run("curvature --fixture fix-nx --slots t,y,y,t --point 0,0.2");
  CHECK(r.code == 1);
  CHECK(r.out.find("NotAnnihilator at (0,0.2)") != std::string::npos);
}

TEST_CASE("parse and lookup errors exit 2") {
  CHECK(run("verify --suite no-such-suite").code == 2);
  CHECK(run("verify --suite thm-2.2 --fixture fix-zz").code == 2);
  CHECK(run("curvature --fixture fix-b --slots t,th --point 1,0.3").code == 2);
  CHECK(run("curvature --fixture fix-b --slots t,th,th,t --point 1,abc").code == 2);
  CHECK(run("curvature --fixture fix-b --variant xyz --slots t,th,th,t --point 1,0.3").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("verify writes a stable report") {
  const auto a = temp("koszul_cli_a.json"), b = temp("koszul_cli_b.json");
  const std::string args = "verify --suite thm-2.2 --fixture fix-a --seed 7 --points 4 --draws 1 --out ";
  const Run r1 = run(args + a.string());
  const Run r2 = run(args + b.string());
  CHECK(r1.code == 0);
  CHECK(r1.out == r2.out);
  std::ifstream ia(a), ib(b);
  auto ja = nlohmann::json::parse(ia), jb = nlohmann::json::parse(ib);
  CHECK(ja["suite"] == "thm-2.2");
  CHECK(ja["seed"] == 7);
  CHECK(ja["clauses"].size() == 8);
  ja["meta"].erase("wall_time_s");
  jb["meta"].erase("wall_time_s");
  CHECK(ja == jb);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("verify thm-5.5 on fix-f") {
  const Run r = run("verify --suite thm-5.5 --fixture fix-f --points 16 --draws 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("failures 0") != std::string::npos);
}

TEST_CASE("a fixture file path is accepted") {
  const auto path = temp("koszul_cli_fixture.json");
  {
    std::ofstream os(path);
    os << R"J({"id":"tmp-lorentz","coords":["t","x"],"bounds":[[-1,1],[-1,1]],
               "metric":[["-1","0"],["0","(add 1 (pow (coord 0) 2))"]]})J";
  }
  const Run r = run("curvature --fixture " + path.string() + " --slots t,x,x,t --point 0.5,0");
  CHECK(r.code == 0);
  CHECK(r.out.find("direct: ") == 0);
  CHECK(r.out.find("factorwise") == std::string::npos);
  std::filesystem::remove(path);
}
