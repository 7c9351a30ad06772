#include "macbound/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace macbound;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "macbound_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "macbound");
  return parse_and_dispatch(args);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("grid specs") {
    const auto lin = parse_grid("0:1:5:lin");
    CHECK(lin == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    const auto lg = parse_grid("1e-3:10:5:log");
    CHECK(lg.front() == 1e-3);
    CHECK(lg.back() == 10.0);
    CHECK(lg[2] == doctest::Approx(0.1));
    CHECK_THROWS(parse_grid("1:2:3"));
    CHECK_THROWS(parse_grid("0:1:5:log"));
    CHECK_THROWS(parse_grid("2:1:5:lin"));
    CHECK_THROWS(parse_grid("a:1:5:lin"));
  }

  TEST_CASE("scalar epsilon-star with one alternative") {
    const auto out = scratch_dir() / "eps.csv";
    REQUIRE(run({"scalar", "--channel", "awgn", "--k", "1", "--tau", "1", "--op", "epsilon-star", "-o", out.string()}) ==
            0);
    const std::string text = slurp(out);
    CHECK(text.rfind("tau,epsilon-star\n1,0.30853753", 0) == 0);
    CHECK(text.find("\n# config k=1\n") != std::string::npos);
  }

  TEST_CASE("usage errors exit with 2") {
    CHECK(run({"bound", "--channel", "awgn", "--k", "100"}) == 2);
    CHECK(run({"scalar", "--channel", "awgn", "--tau", "1"}) == 2);
    CHECK(run({"scalar", "--channel", "bpsk", "--k", "2", "--tau", "1"}) == 2);
    CHECK(run({"se", "--channel", "awgn", "--k", "2", "--mu", "0.1"}) == 2);
    CHECK(run({"se", "--channel", "awgn", "--k", "2", "--E", "10", "--ebn0-db", "3"}) == 2);
    CHECK(run({"simulate", "--channel", "awgn", "--k", "4", "--E", "10", "--n", "721"}) == 2);
    CHECK(run({}) == 2);
  }

  TEST_CASE("config file values sit underneath explicit flags") {
    const auto dir = scratch_dir();
    {
      std::ofstream cfg(dir / "run.cfg");
      cfg << "# bound sweep\nchannel = awgn\nk = 100\nmu-grid = 1e-3:1e-2:3:log\neps = 1e-2\n";
    }
    const auto a = dir / "a.csv";
    REQUIRE(run({"bound", "--config", (dir / "run.cfg").string(), "--eps", "1e-3", "-o", a.string()}) == 0);
    const std::string text = slurp(a);
    CHECK(text.find("# config eps=1e-3\n") != std::string::npos);
    CHECK(text.find("# config mu-grid=1e-3:1e-2:3:log\n") != std::string::npos);
    CHECK(run({"bound", "--config", (dir / "missing.cfg").string()}) == 2);
  }

  TEST_CASE("identical invocations write identical files") {
    const auto dir = scratch_dir();
    const std::vector<std::string> base{"simulate", "--channel", "qsf", "--k", "3", "--n", "210", "--K", "30",
                                        "--omega", "2", "--Lambda", "6", "--E", "200", "--trials", "2"};
    auto with = [&](const std::string& path) {
      auto v = base;
      v.push_back("-o");
      v.push_back(path);
      return v;
    };
    REQUIRE(run(with((dir / "s1.csv").string())) == 0);
    REQUIRE(run(with((dir / "s2.csv").string())) == 0);
    CHECK(slurp(dir / "s1.csv") == slurp(dir / "s2.csv"));
    CHECK(slurp(dir / "s1.csv").rfind("trial,ser,m_dh,energy_mean\n", 0) == 0);
    CHECK(!std::filesystem::exists(dir / "s1.csv.tmp"));
  }

  TEST_CASE("json output parses") {
    const auto out = scratch_dir() / "se.json";
    REQUIRE(run({"se", "--channel", "awgn", "--k", "10", "--mu", "0.05", "--E", "300", "--omega", "2", "--Lambda",
                 "5", "--format", "json", "-o", out.string()}) == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc["config"]["command"] == "se");
    CHECK(doc["converged"] == true);
    CHECK(doc["rows"].size() >= 2);
    CHECK(doc["rows"][0].contains("tau_4"));
  }

  TEST_CASE("potential and threads flag") {
    const auto out = scratch_dir() / "pot.csv";
    CHECK(run({"--threads", "1", "potential", "--channel", "qsf", "--k", "20", "--mu", "0.1", "--ebn0-db", "20",
               "--grid-points", "64", "-o", out.string()}) == 0);
    CHECK(slurp(out).find("# global_argmin_max ") != std::string::npos);
  }
}
