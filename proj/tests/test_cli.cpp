#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kData = SOAPBUBBLE_EXAMPLES_DIR;

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "soapbubble_cli_test";
  fs::create_directories(d);
  return d;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + SOAPBUBBLE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string spec(const char* name) { return "\"" + (kData / name).string() + "\""; }

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("analyze --samples notanumber").code == 2);
}

TEST_CASE("analyze") {
  const Run s = run("analyze --surface " + spec("sphere.json"));
  REQUIRE(s.code == 0);
  const auto j = nlohmann::json::parse(s.out);
  CHECK(j["verdict"] == "sphere within tolerance");

  const Run e = run("analyze --surface " + spec("ellipsoid.json"));
  REQUIRE(e.code == 0);
  const auto k = nlohmann::json::parse(e.out);
  CHECK(double(k["ratio"]) == doctest::Approx(0.5354).epsilon(0.02));

  const Run bad = run("analyze --surface " + spec("malformed.json"));
  CHECK(bad.code == 2);
  CHECK(bad.err.find("input error") != std::string::npos);
  CHECK(run("analyze --surface /nonexistent/spec.json").code == 2);
  CHECK(run("analyze").code == 2);
}

TEST_CASE("reports are byte-identical for a fixed seed") {
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json";
  REQUIRE(run("analyze --surface " + spec("ellipsoid.json") + " --seed 7 --samples 5000 --out \"" + a.string() + "\"")
              .code == 0);
  REQUIRE(run("analyze --surface " + spec("ellipsoid.json") + " --seed 7 --samples 5000 --out \"" + b.string() + "\"")
              .code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(slurp(a).empty());
}

TEST_CASE("sweep") {
  const fs::path csv = scratch() / "sweep.csv";
  const Run r = run("sweep-ellipsoid --t-min 0.1 --t-max 0.1 --steps 3 --csv \"" + csv.string() + "\"");
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(csv));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "t,osc,re_minus_ri,ratio,rho_hat,defect,status");
  std::string next;
  std::getline(in, next);
  CHECK(next.empty());  // a single data row, then the fit block

  // the single row agrees with analyze on the same ellipsoid
  std::vector<double> cells;
  std::istringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) {
    if (cells.size() < 6) cells.push_back(std::stod(c));
  }
  const auto rep = nlohmann::json::parse(run("analyze --surface " + spec("ellipsoid.json")).out);
  CHECK(cells[1] == doctest::Approx(double(rep["osc"]["value"])).epsilon(1e-12));
  CHECK(cells[3] == doctest::Approx(double(rep["ratio"])).epsilon(1e-12));

  CHECK(run("sweep-ellipsoid --t-min 0.2 --t-max 0.1").code == 2);
}

TEST_CASE("constants") {
  const fs::path out = scratch() / "ledger.json";
  const Run r = run("constants --n 2 --rho 1 --area 12.566370614359172 --osc 1 --out \"" + out.string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("placeholder") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(double(j["delta"]) == 0.015625);
  CHECK(double(j["L"]) == doctest::Approx(65536.0));
  CHECK(j["smallness"]["applicable"] == false);
  CHECK(run("constants --rho -1").code == 2);
}

TEST_CASE("verify") {
  const Run f = run("verify fig1");
  CHECK(f.code == 0);
  CHECK(f.out.find("fig1") != std::string::npos);
  CHECK(run("verify 2.1 --surface " + spec("ellipsoid.json") + " --trials 500").code == 0);
  CHECK(run("verify 3.5 --trials 1000").code == 0);
  // negative control: rho doubled
  CHECK(run("verify 2.1 --surface " + spec("ellipsoid.json") + " --trials 500 --rho 1.8").code == 4);
  // hypothesis of the annulus lemma fails on the dumbbell: rejected, not violated
  const Run d = run("verify 5.1 --surface " + spec("dumbbell.json"));
  CHECK(d.code == 2);
  CHECK(d.out.find("REJECTED") != std::string::npos);
  CHECK(run("verify 7.7").code == 2);
  CHECK(run("verify 2.1").code == 2);
}

TEST_CASE("moving-plane") {
  const Run r = run("moving-plane --surface " + spec("sphere.json") + " --omega 1 0 0");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(double(j["m"]) == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(run("moving-plane --surface " + spec("sphere.json") + " --omega 0 0 0").code == 2);
  CHECK(run("moving-plane --surface " + spec("sphere.json") + " --omega 1 0").code == 2);
}
