#include <doctest.h>

#include <thread>

#include "../fixtures.hpp"
#include "../support.hpp"
#include "lexloop/error.hpp"
#include "lexloop/session.hpp"

using namespace lexloop;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

/// Answers by a fixed hidden tree.
void answer_queries(SessionService& service, const std::string& id, const LPTree& hidden, int count) {
  for (int i = 0; i < count; ++i) {
    const auto pair = service.next_query(id);
    const auto outcome = compare(hidden, pair.first, pair.second);
    const auto choice = outcome == ComparisonOutcome::first_preferred    ? Choice::first
                        : outcome == ComparisonOutcome::second_preferred ? Choice::second
                                                                         : Choice::skip;
    service.submit_answer(id, pair, choice);
  }
}

}  // namespace

TEST_CASE("session lifecycle") {
  support::TempDir dir("session");
  SessionService service({dir.path(), 5});
  const auto domain = fixtures::car_domain();
  const auto id = service.create_session(domain_to_json(domain));
  CHECK(service.create_session(domain_to_json(domain)) != id);
  CHECK(service.session_state(id).at("status") == "eliciting");
  CHECK(code_of([&] { service.create_session(json{{"attributes", 1}}); }) == ErrorCode::validation);
  CHECK(code_of([&] { service.session_state("nope"); }) == ErrorCode::not_found);

  const auto pair = service.next_query(id);
  CHECK(service.next_query(id) == pair);
  CHECK(code_of([&] { service.submit_answer(id, {pair.second, pair.first}, Choice::first); }) == ErrorCode::conflict);
  service.submit_answer(id, pair, Choice::first);
  CHECK(code_of([&] { service.submit_answer(id, pair, Choice::first); }) == ErrorCode::conflict);
  const auto state = service.session_state(id);
  REQUIRE(state.at("answered").size() == 1);
  CHECK(state.at("answered")[0].at("better") == alternative_to_json(domain, pair.first));

  const auto skipped = service.next_query(id);
  CHECK_FALSE(skipped == pair);
  service.submit_answer(id, skipped, Choice::skip);
  CHECK(service.session_state(id).at("answered").size() == 1);

  CHECK(code_of([&] { service.get_model(id); }) == ErrorCode::not_found);
  CHECK(code_of([&] { service.submit_feedback(id, {importance(domain, "B", "M")}); }) == ErrorCode::conflict);

  const auto v1 = service.learn_model(id, {});
  CHECK(v1.at("version") == 1);
  CHECK(v1.at("kind") == "tree");
  CHECK(v1.at("representatives").size() == 1);
  CHECK(service.session_state(id).at("status") == "model-ready");
  CHECK(code_of([&] { service.get_model(id, 0); }) == ErrorCode::not_found);

  const auto report = service.submit_feedback(id, {importance(domain, "T", "B")});
  CHECK(report.feasible);
  const auto rejected = service.submit_feedback(id, {importance(domain, "B", "T")});
  CHECK_FALSE(rejected.feasible);
  CHECK(service.session_state(id).at("feedback").size() == 1);
  CHECK(service.submit_feedback(id, {}).feasible);

  const auto v2 = service.learn_model(id, {});
  CHECK(v2.at("version") == 2);
  CHECK(v2.at("constraints").at("satisfied") == json::array({true}));
  CHECK(service.get_model(id, 1) == v1);
  CHECK(service.get_model(id) == v2);

  LearnConfig with_constraints;
  with_constraints.constraints = {importance(domain, "B", "M")};
  CHECK(code_of([&] { service.learn_model(id, with_constraints); }) == ErrorCode::validation);

  service.finalize(id);
  service.finalize(id);
  CHECK(code_of([&] { service.next_query(id); }) == ErrorCode::conflict);
  CHECK(code_of([&] { service.learn_model(id, {}); }) == ErrorCode::conflict);
  CHECK(service.get_model(id) == v2);
}

TEST_CASE("learning needs data") {
  support::TempDir dir("empty");
  SessionService service({dir.path()});
  const auto id = service.create_session(domain_to_json(fixtures::car_domain()));
  CHECK(code_of([&] { service.learn_model(id, {}); }) == ErrorCode::validation);
}

TEST_CASE("forest payloads and replay") {
  support::TempDir dir("replay");
  const auto domain = fixtures::car_evaluation_domain();
  const auto hidden = fixtures::unconditional_example_tree();
  std::string id;
  json state, latest, first;
  {
    SessionService service({dir.path(), 11});
    id = service.create_session(domain_to_json(domain));
    const auto hidden_tree = LPTree::uiup({{5, {2, 1, 0}}, {0, {3, 2, 1, 0}}, {3, {2, 1, 0}}});
    answer_queries(service, id, hidden_tree, 15);
    LearnConfig config;
    config.forest_size = 13;
    config.seed = 4;
    first = service.learn_model(id, config);
    CHECK(first.at("kind") == "forest");
    CHECK(first.at("dendrogram").at("merges").size() == 12);
    CHECK(first.at("representatives").size() == first.at("clustering").at("buckets").size());
    service.submit_feedback(id, {importance(domain, "BuyingPrice", "Persons"), local_order(domain, "BuyingPrice", "med", "low"),
                                 local_order(domain, "Luggage", "big", "med")});
    latest = service.learn_model(id, config, 0.0);
    CHECK(latest.at("clustering").at("threshold") == 0.0);
    service.next_query(id);
    state = service.session_state(id);
  }
  SessionService restarted({dir.path(), 11});
  CHECK(restarted.session_state(id).dump() == state.dump());
  CHECK(restarted.get_model(id).dump() == latest.dump());
  CHECK(restarted.get_model(id, 1).dump() == first.dump());
  CHECK(restarted.next_query(id) == restarted.next_query(id));
}

TEST_CASE("torn final event is dropped on replay") {
  support::TempDir dir("torn");
  std::string id;
  {
    SessionService service({dir.path()});
    id = service.create_session(domain_to_json(fixtures::car_domain()));
    service.next_query(id);
  }
  const auto log = dir.file(id + ".jsonl");
  {
    std::ofstream out(log, std::ios::app);
    out << "{\"type\":\"answer\",\"at";
  }
  SessionService restarted({dir.path()});
  CHECK(restarted.session_state(id).at("pending") != nullptr);
  const auto pair = restarted.next_query(id);
  restarted.submit_answer(id, pair, Choice::first);
  SessionService again({dir.path()});
  CHECK(again.session_state(id).at("answered").size() == 1);
}

TEST_CASE("unusable data directory") {
  support::TempDir dir("bad");
  const auto file = dir.file("plain");
  support::write(file, "x");
  CHECK(code_of([&] { SessionService service({file}); }) == ErrorCode::io);
}

TEST_CASE("concurrent answers on one session stay consistent") {
  support::TempDir dir("concurrent");
  SessionService service({dir.path()});
  const auto id = service.create_session(domain_to_json(fixtures::car_domain()));
  std::atomic<int> accepted{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        try {
          const auto pair = service.next_query(id);
          service.submit_answer(id, pair, Choice::first);
          ++accepted;
        } catch (const Error& e) {
          CHECK(e.code() == ErrorCode::conflict);
        }
      }
    });
  for (auto& w : workers) w.join();
  const auto state = service.session_state(id);
  CHECK(state.at("answered").size() == static_cast<std::size_t>(accepted.load()));
  CHECK(state.at("queries_issued").get<std::size_t>() >= state.at("answered").size());
  SessionService replayed({dir.path()});
  CHECK(replayed.session_state(id).dump() == state.dump());
}
