#include <doctest.h>

#include <sstream>

#include "eigenrank/cli.hpp"
#include "eigenrank/io.hpp"
#include "support.hpp"

using namespace eigenrank;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("dice and matrix") {
  testkit::TempDir dir("cli-dice");
  write_mask(BinaryMask(4, 1, {1, 1, 0, 0}), dir / "a.emsk");
  write_mask(BinaryMask(4, 1, {1, 0, 1, 0}), dir / "b.emsk");
  write_mask(BinaryMask(4, 1, {1, 1, 1, 0}), dir / "c.emsk");

  auto r = run({"dice", p(dir / "a.emsk"), p(dir / "a.emsk")});
  CHECK(r.code == 0);
  CHECK(r.out == "1\n");
  r = run({"dice", p(dir / "a.emsk"), p(dir / "b.emsk")});
  CHECK(r.out == "0.5\n");
  r = run({"dice", p(dir / "a.emsk"), p(dir / "b.emsk"), "--metric", "jaccard"});
  CHECK(r.out == "0.333333333333\n");

  r = run({"matrix", p(dir / "a.emsk"), p(dir / "b.emsk"), p(dir / "c.emsk")});
  CHECK(r.code == 0);
  CHECK(r.out.find("1 0.5 0.8\n") != std::string::npos);
  CHECK(r.out.find("psd true") != std::string::npos);
  CHECK(r.out.find("lambda_max ") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"simulate", "--t", "5", "--epsilon", "0.1", "--bogus"}).code == 2);
  CHECK(run({"select", "--k", "3"}).code == 2);
  CHECK(run({"simulate", "--t", "1", "--epsilon", "0.1"}).code == 2);
  CHECK(run({"dice", "only-one.emsk"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("select") != std::string::npos);
}

TEST_CASE("runtime errors exit 1 with one coded line") {
  testkit::TempDir dir("cli-err");
  auto r = run({"dice", p(dir / "x.emsk"), p(dir / "y.emsk")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: io_error: ", 0) == 0);
  CHECK(r.err.find('\n') == r.err.size() - 1);

  atomic_write(dir / "bad.emsk", "XXXX1\n1 1\n\x01");
  write_mask(BinaryMask(1, 1), dir / "ok.emsk");
  r = run({"dice", p(dir / "bad.emsk"), p(dir / "ok.emsk")});
  CHECK(r.err.rfind("error: bad_magic: ", 0) == 0);

  atomic_write(dir / "m.json", R"({"cases": [{"id": "a"}, {"id": "a"}]})");
  r = run({"select", "--manifest", p(dir / "m.json"), "--k", "1", "--iterations", "2", "--out",
           p(dir / "o.json")});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: manifest_error: ", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "o.json"));
}

TEST_CASE("simulate") {
  auto r = run({"simulate", "--epsilon", "0", "--t", "5", "--trials", "10", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out == "t,epsilon,mean_ratio,stdev_ratio,undefined_count\n5,0,1,0,0\n");
  r = run({"simulate", "--epsilon", "0.05,0.1", "--t", "3,6", "--trials", "20", "--seed", "2"});
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 5);
}

TEST_CASE("synth-gen, select, rank, eval and compare") {
  testkit::TempDir dir("cli-flow");
  auto r = run({"synth-gen", "--n", "30", "--seed", "5", "--width", "20", "--height", "20",
                "--out-dir", p(dir / "data")});
  REQUIRE(r.code == 0);
  const std::string manifest = p(dir / "data" / "manifest.json");
  CHECK(fs::exists(manifest));

  r = run({"select", "--manifest", manifest, "--k", "3", "--iterations", "4", "--seed", "7",
           "--out", p(dir / "sel.json")});
  REQUIRE(r.code == 0);
  const auto sel = nlohmann::json::parse(read_file(dir / "sel.json"));
  CHECK(sel["parameters"]["k"] == 3);
  CHECK(sel["selected"].size() == 12);
  CHECK(sel["models"].size() == 4);

  r = run({"rank", "--manifest", manifest, "--models", p(dir / "sel.json"), "--mode", "fixed",
           "--out", p(dir / "rank.json")});
  REQUIRE(r.code == 0);
  CHECK(read_file(dir / "rank.json").find("case-") != std::string::npos);

  atomic_write(dir / "probe.json", R"({"backend": "synthetic", "theta": 0.5, "jitter_seed": 3})");
  r = run({"rank", "--manifest", manifest, "--mode", "iterative", "--k", "3", "--iterations", "3",
           "--seed", "2", "--probe", p(dir / "probe.json"), "--out", p(dir / "fail.json")});
  REQUIRE(r.code == 0);
  const auto fail = nlohmann::json::parse(read_file(dir / "fail.json"));
  CHECK(fail["iterations"].size() == 3);

  r = run({"eval", "--manifest", manifest, "--model", p(dir / "probe.json"), "--out",
           p(dir / "eval.json")});
  REQUIRE(r.code == 0);
  const auto ev = nlohmann::json::parse(read_file(dir / "eval.json"));
  CHECK(ev["per_case"].size() == 30);

  r = run({"compare", "--manifest", manifest, "--k", "2", "--iterations", "3", "--seeds", "1,2",
           "--out", p(dir / "cmp.json")});
  REQUIRE(r.code == 0);

  r = run({"rank", "--manifest", manifest, "--mode", "fixed", "--out", p(dir / "x.json")});
  CHECK(r.code == 1);
}

}
