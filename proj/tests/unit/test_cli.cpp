#include <doctest.h>

#include <sstream>

#include "../fixtures.hpp"
#include "../support.hpp"
#include "cli.hpp"
#include "lexloop/model_io.hpp"

using namespace lexloop;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lexloop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write_domain(const support::TempDir& dir, const Domain& domain) {
  const auto path = dir.file("domain.json");
  support::write(path, domain_to_json(domain).dump());
  return path;
}

std::string write_tree(const support::TempDir& dir, const std::string& name, const LPTree& tree, const Domain& domain) {
  const auto path = dir.file(name);
  support::write(path, tree_to_json(tree, domain).dump());
  return path;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with the validation code") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"learn"}).code == kExitValidation);
  CHECK(run({"learn", "--domain", "x", "--examples", "y", "--kind", "bogus"}).code == kExitValidation);
  CHECK(run({"learn", "--domain", "/nonexistent/domain.json", "--examples", "y"}).code != kExitOk);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("gen is deterministic and learn recovers the hidden tree") {
  support::TempDir dir("cli-gen");
  const auto domain = write_domain(dir, fixtures::car_domain());
  const auto first = run({"gen", "--domain", domain, "--seed", "9", "--complete", "--model-out", dir.file("hidden.json")});
  REQUIRE(first.code == kExitOk);
  const auto hidden = support::read(dir.file("hidden.json"));
  const auto second = run({"gen", "--domain", domain, "--seed", "9", "--complete", "--model-out", dir.file("hidden.json")});
  CHECK(first.out == second.out);
  CHECK(hidden == support::read(dir.file("hidden.json")));

  support::write(dir.file("examples.txt"), first.out);
  const auto learned = run({"learn", "--domain", domain, "--examples", dir.file("examples.txt"), "--output",
                            dir.file("learned.json"), "--stats", dir.file("stats.json")});
  REQUIRE(learned.code == kExitOk);
  CHECK(json::parse(support::read(dir.file("stats.json"))).at("accuracy") == 1.0);
  const auto evaluated = run({"eval", "--domain", domain, "--model", dir.file("learned.json"), "--examples", dir.file("examples.txt")});
  REQUIRE(evaluated.code == kExitOk);
  CHECK(json::parse(evaluated.out).at("disagreed") == 0);
}

TEST_CASE("infeasible constraints exit with their own code") {
  support::TempDir dir("cli-infeasible");
  const auto domain = write_domain(dir, fixtures::car_domain());
  support::write(dir.file("examples.txt"), "v,h,l,a > r,f,g,m\n");
  support::write(dir.file("constraints.json"),
                 R"({"constraints":[{"kind":"importance","more_important":"B","less_important":"M"},
                                     {"kind":"importance","more_important":"M","less_important":"B"}]})");
  const auto result = run({"learn", "--domain", domain, "--examples", dir.file("examples.txt"), "--constraints",
                           dir.file("constraints.json")});
  CHECK(result.code == kExitInfeasible);
  CHECK(result.out.empty());
}

TEST_CASE("distance and cluster on the fixture trees") {
  support::TempDir dir("cli-distance");
  const auto domain_value = fixtures::two_by_two();
  const auto domain = write_domain(dir, domain_value);
  const auto t1 = write_tree(dir, "t1.json", fixtures::tree_t1(), domain_value);
  const auto t2 = write_tree(dir, "t2.json", fixtures::tree_t2(), domain_value);
  const auto t3 = write_tree(dir, "t3.json", fixtures::tree_t3(), domain_value);

  const auto same = run({"distance", "--domain", domain, "--model", t1, "--model", t1});
  REQUIRE(same.code == kExitOk);
  CHECK(json::parse(same.out).at("entries") == json{{0, 0}, {0, 0}});

  const auto table = run({"distance", "--domain", domain, "--model", t1, "--model", t2, "--model", t3});
  REQUIRE(table.code == kExitOk);
  CHECK(json::parse(table.out).at("entries") == json{{0, 1, 4}, {1, 0, 3}, {4, 3, 0}});

  const auto clustered = run({"cluster", "--domain", domain, "--model", t1, "--model", t2, "--model", t3, "--linkage", "single"});
  REQUIRE(clustered.code == kExitOk);
  const auto merges = json::parse(clustered.out).at("dendrogram").at("merges");
  REQUIRE(merges.size() == 2);
  CHECK(merges[0].at("height") == 1.0);
  CHECK(merges[1].at("height") == 3.0);
  CHECK(run({"cluster", "--domain", domain, "--model", t1, "--model", t2, "--threshold", "-1"}).code == kExitValidation);
}

TEST_CASE("render collapses below the depth limit") {
  support::TempDir dir("cli-render");
  const auto domain_value = fixtures::car_domain();
  const auto domain = write_domain(dir, domain_value);
  const auto tree = write_tree(dir, "fig1.json", fixtures::worked_example_tree(), domain_value);
  const auto full = run({"render", "--domain", domain, "--model", tree});
  REQUIRE(full.code == kExitOk);
  CHECK(count(full.out, "class=\"collapsed\"") == 0);
  const auto shallow = run({"render", "--domain", domain, "--model", tree, "--depth", "1"});
  REQUIRE(shallow.code == kExitOk);
  CHECK(count(shallow.out, "class=\"collapsed\"") == 3);
  CHECK(count(shallow.out, "->") == 3);
}

TEST_CASE("forest learning and rendering") {
  support::TempDir dir("cli-forest");
  const auto domain = dir.file("domain.json");
  support::write(domain, support::read(LEXLOOP_DATA_DIR "/car_evaluation_domain.json"));
  const auto gen = run({"gen", "--domain", domain, "--seed", "2", "--num-examples", "60", "--noise", "0.05"});
  REQUIRE(gen.code == kExitOk);
  support::write(dir.file("examples.txt"), gen.out);
  const auto learned = run({"learn", "--domain", domain, "--examples", dir.file("examples.txt"), "--constraints",
                            LEXLOOP_DATA_DIR "/car_evaluation_feedback.json", "--forest-size", "13", "--seed", "4",
                            "--output", dir.file("forest.json")});
  REQUIRE(learned.code == kExitOk);
  const auto forest = json::parse(support::read(dir.file("forest.json")));
  CHECK(forest.at("trees").size() == 13);
  const auto rendered = run({"render", "--domain", domain, "--model", dir.file("forest.json"), "--plot", dir.file("plot.json")});
  REQUIRE(rendered.code == kExitOk);
  const auto doc = json::parse(rendered.out);
  CHECK(doc.at("representatives").size() >= 1);
  CHECK(json::parse(support::read(dir.file("plot.json"))).at("format") == "lexloop-plot/1");
}

TEST_CASE("serve refuses an unusable data directory") {
  support::TempDir dir("cli-serve");
  support::write(dir.file("plain"), "x");
  const auto result = run({"serve", "--data-dir", dir.file("plain"), "--port", "0"});
  CHECK(result.code != kExitOk);
  CHECK_FALSE(result.err.empty());
}
