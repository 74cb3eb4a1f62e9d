#include "lexloop/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "lexloop/error.hpp"
#include "lexloop/model_io.hpp"

namespace lexloop {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct ModelRecord {
  std::size_t version;
  json payload;
};

struct SessionService::Session {
  Session(std::string id_, Domain domain_, std::uint64_t seed_)
      : id(std::move(id_)), domain(std::move(domain_)), seed(seed_) {}

  mutable std::mutex mutex;
  std::string id;
  Domain domain;
  std::uint64_t seed;
  SessionStatus status = SessionStatus::eliciting;
  std::vector<ComparisonExample> answered;
  std::vector<FeedbackConstraint> feedback;
  std::vector<AlternativePair> issued;
  std::optional<AlternativePair> pending;
  std::vector<ModelRecord> history;
  std::string created_at;
  std::string updated_at;
};

namespace {

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const auto seconds = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%S", &utc);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buffer, static_cast<int>(millis));
  return out;
}

std::string fresh_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

json pair_to_json(const Domain& domain, const AlternativePair& pair) {
  return {{"first", alternative_to_json(domain, pair.first)}, {"second", alternative_to_json(domain, pair.second)}};
}

AlternativePair pair_from_json(const Domain& domain, const json& doc) {
  if (!doc.is_object() || !doc.contains("first") || !doc.contains("second"))
    fail(ErrorCode::validation, "a pair needs 'first' and 'second'");
  return {alternative_from_json(domain, doc.at("first")), alternative_from_json(domain, doc.at("second"))};
}

}  // namespace

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::eliciting: return "eliciting";
    case SessionStatus::model_ready: return "model-ready";
    case SessionStatus::finalized: return "finalized";
  }
  return "?";
}

std::string_view to_string(Choice choice) {
  switch (choice) {
    case Choice::first: return "first";
    case Choice::second: return "second";
    case Choice::skip: return "skip";
  }
  return "?";
}

Choice choice_from_string(std::string_view text) {
  if (text == "first") return Choice::first;
  if (text == "second") return Choice::second;
  if (text == "skip") return Choice::skip;
  fail(ErrorCode::validation, "choice must be first, second or skip");
}

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
  if (config_.data_dir.empty()) fail(ErrorCode::validation, "data directory is required");
  std::error_code ec;
  fs::create_directories(config_.data_dir, ec);
  if (ec || !fs::is_directory(config_.data_dir))
    fail(ErrorCode::io, "cannot use data directory '" + config_.data_dir.string() + "'");
  const auto probe = config_.data_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) fail(ErrorCode::io, "data directory '" + config_.data_dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);

  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(config_.data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());
  for (const auto& log : logs) replay(log);
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
  std::shared_lock lock(registry_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(ErrorCode::not_found, "unknown session '" + id + "'");
  return it->second;
}

void SessionService::append_event(const Session& session, const json& event) const {
  const auto path = config_.data_dir / (session.id + ".jsonl");
  std::ofstream out(path, std::ios::app);
  out << event.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::io, "cannot append to event log " + path.string());
}

void SessionService::apply(Session& s, const json& event, const json* payload) {
  const auto& type = event.at("type").get_ref<const std::string&>();
  s.updated_at = event.at("at").get<std::string>();
  if (type == "created") {
    s.created_at = s.updated_at;
  } else if (type == "query_issued") {
    s.pending = pair_from_json(s.domain, event.at("pair"));
    s.issued.push_back(*s.pending);
  } else if (type == "answer") {
    const auto pair = pair_from_json(s.domain, event.at("pair"));
    const auto choice = choice_from_string(event.at("choice").get<std::string>());
    if (choice == Choice::first) s.answered.push_back({pair.first, pair.second, ExampleSource::query_answer});
    if (choice == Choice::second) s.answered.push_back({pair.second, pair.first, ExampleSource::query_answer});
    s.pending.reset();
  } else if (type == "feedback") {
    for (auto& c : constraints_from_json(s.domain, event.at("constraints"))) s.feedback.push_back(std::move(c));
  } else if (type == "learned") {
    const auto version = event.at("version").get<std::size_t>();
    if (version != s.history.size() + 1) fail(ErrorCode::validation, "model versions out of sequence");
    auto config = config_from_json(s.domain, event.at("config"));
    std::optional<double> threshold;
    if (event.contains("threshold") && !event.at("threshold").is_null()) threshold = event.at("threshold").get<double>();
    s.history.push_back({version, payload ? *payload : build_payload(s, version, config, threshold)});
    s.status = SessionStatus::model_ready;
  } else if (type == "finalized") {
    s.status = SessionStatus::finalized;
  } else {
    fail(ErrorCode::validation, "unknown event type '" + type + "'");
  }
}

void SessionService::replay(const fs::path& log) {
  std::ifstream in(log);
  std::vector<json> events;
  std::string line;
  std::size_t line_no = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(json::parse(line));
    } catch (const json::exception&) {
      // A torn final write is dropped; damage anywhere else is fatal.
      if (in.peek() != std::char_traits<char>::eof())
        fail(ErrorCode::io, log.string() + ":" + std::to_string(line_no) + ": corrupt event");
      torn = true;
    }
  }
  in.close();
  if (torn) {
    std::ofstream out(log, std::ios::trunc);
    for (const auto& event : events) out << event.dump() << '\n';
    if (!out) fail(ErrorCode::io, "cannot repair event log " + log.string());
  }
  if (events.empty()) return;
  try {
    const auto& created = events.front();
    if (created.at("type") != "created") fail(ErrorCode::validation, "log does not start with a creation event");
    auto session = std::make_shared<Session>(created.at("session").get<std::string>(),
                                             domain_from_json(created.at("domain")), created.at("seed").get<std::uint64_t>());
    for (const auto& event : events) apply(*session, event, nullptr);
    sessions_[session->id] = std::move(session);
  } catch (const json::exception& e) {
    fail(ErrorCode::io, log.string() + ": malformed event: " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::io, log.string() + ": " + e.what());
  }
}

std::string SessionService::create_session(const json& domain_document) {
  auto domain = domain_from_json(domain_document);
  std::unique_lock lock(registry_mutex_);
  std::string id;
  do id = fresh_id();
  while (sessions_.count(id) || fs::exists(config_.data_dir / (id + ".jsonl")));
  auto session = std::make_shared<Session>(id, std::move(domain), config_.default_seed);
  const json event = {{"type", "created"},
                      {"at", now_utc()},
                      {"session", id},
                      {"seed", session->seed},
                      {"domain", domain_to_json(session->domain)}};
  append_event(*session, event);
  apply(*session, event, nullptr);
  sessions_[id] = std::move(session);
  return id;
}

AlternativePair SessionService::next_query(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  auto& s = *session;
  if (s.status == SessionStatus::finalized) fail(ErrorCode::conflict, "session is finalized");
  if (s.pending) return *s.pending;
  const Model* current = nullptr;
  std::optional<Model> latest;
  if (!s.history.empty()) {
    latest = model_from_json(s.history.back().payload.at("model"), s.domain);
    current = &*latest;
  }
  const auto pair = select_query(s.domain, s.issued, current, s.seed + s.issued.size(), config_.query);
  const json event = {{"type", "query_issued"}, {"at", now_utc()}, {"pair", pair_to_json(s.domain, pair)}};
  append_event(s, event);
  apply(s, event, nullptr);
  return pair;
}

void SessionService::submit_answer(const std::string& id, const AlternativePair& pair, Choice choice) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  auto& s = *session;
  if (s.status == SessionStatus::finalized) fail(ErrorCode::conflict, "session is finalized");
  if (!s.pending) fail(ErrorCode::conflict, "no query is pending");
  if (!(*s.pending == pair)) fail(ErrorCode::conflict, "answer does not match the pending query");
  const json event = {
      {"type", "answer"}, {"at", now_utc()}, {"pair", pair_to_json(s.domain, pair)}, {"choice", to_string(choice)}};
  append_event(s, event);
  apply(s, event, nullptr);
}

json SessionService::build_payload(const Session& s, std::size_t version, const LearnConfig& config,
                                   std::optional<double> threshold) const {
  const auto result = learn(s.answered, s.domain, config);
  json payload = {{"session", s.id},
                  {"version", version},
                  {"config", config_to_json(s.domain, config)},
                  {"model", model_to_json(result.model, s.domain)},
                  {"accuracy", stats_to_json(evaluate(result.model, s.answered))},
                  {"examples", s.answered.size()},
                  {"graph_depth", config_.graph_depth}};
  payload["constraints"] = {{"constraints", constraints_to_json(s.domain, config.constraints).at("constraints")},
                            {"feasibility", feasibility_to_json(s.domain, check_constraints(config.constraints, s.domain))},
                            {"satisfied", result.constraint_satisfied}};

  std::vector<const LPTree*> trees;
  if (const auto* tree = std::get_if<LPTree>(&result.model)) {
    trees.push_back(tree);
    payload["kind"] = "tree";
    payload["representatives"] = json::array(
        {{{"tree", 0}, {"bucket", {0}}, {"graph", to_graph_description(*tree, s.domain, config_.graph_depth)}}});
    return payload;
  }

  const auto& forest = std::get<LPForest>(result.model);
  const auto matrix = distance_matrix(forest, s.domain, config_.enumeration_limit);
  const auto dendrogram = agglomerate(matrix, config_.linkage);
  const auto cut_at = threshold.value_or(median_height(dendrogram));
  const auto clustering = cut(dendrogram, matrix, cut_at);
  payload["kind"] = "forest";
  payload["distances"] = matrix_to_json(matrix);
  payload["dendrogram"] = dendrogram_to_json(dendrogram);
  payload["clustering"] = clustering_to_json(clustering);
  payload["plot"] = dendrogram_plot(dendrogram, cut_at);
  json representatives = json::array();
  for (std::size_t b = 0; b < clustering.buckets.size(); ++b) {
    const auto rep = clustering.representatives[b];
    representatives.push_back({{"tree", rep},
                               {"bucket", clustering.buckets[b]},
                               {"graph", to_graph_description(forest.trees[rep], s.domain, config_.graph_depth)}});
  }
  payload["representatives"] = representatives;
  return payload;
}

json SessionService::learn_model(const std::string& id, LearnConfig config, std::optional<double> threshold) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  auto& s = *session;
  if (s.status == SessionStatus::finalized) fail(ErrorCode::conflict, "session is finalized");
  if (!config.constraints.empty())
    fail(ErrorCode::validation, "constraints enter a session as feedback, not through the learn config");
  if (s.answered.empty() && s.feedback.empty())
    fail(ErrorCode::validation, "nothing to learn from: answer a query or give feedback first");
  if (threshold && *threshold < 0) fail(ErrorCode::validation, "threshold must be non-negative");
  validate_config(config);
  config.constraints = s.feedback;

  const auto version = s.history.size() + 1;
  auto payload = build_payload(s, version, config, threshold);
  json event = {{"type", "learned"}, {"at", now_utc()}, {"version", version}, {"config", config_to_json(s.domain, config)}};
  event["threshold"] = threshold ? json(*threshold) : json(nullptr);
  append_event(s, event);
  apply(s, event, &payload);
  return s.history.back().payload;
}

FeasibilityReport SessionService::submit_feedback(const std::string& id,
                                                  const std::vector<FeedbackConstraint>& constraints) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  auto& s = *session;
  if (s.status == SessionStatus::finalized) fail(ErrorCode::conflict, "session is finalized");
  if (s.status != SessionStatus::model_ready) fail(ErrorCode::conflict, "feedback needs a learned model first");
  for (const auto& c : constraints) validate_constraint(s.domain, c);
  auto joint = s.feedback;
  joint.insert(joint.end(), constraints.begin(), constraints.end());
  const auto report = check_constraints(joint, s.domain);
  if (!report.feasible || constraints.empty()) return report;
  const json event = {{"type", "feedback"},
                      {"at", now_utc()},
                      {"constraints", constraints_to_json(s.domain, constraints).at("constraints")}};
  append_event(s, event);
  apply(s, event, nullptr);
  return report;
}

json SessionService::get_model(const std::string& id, std::optional<std::size_t> version) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  const auto& history = session->history;
  if (history.empty()) fail(ErrorCode::not_found, "no model has been learned yet");
  if (!version) return history.back().payload;
  if (*version == 0 || *version > history.size())
    fail(ErrorCode::not_found, "no model version " + std::to_string(*version));
  return history[*version - 1].payload;
}

void SessionService::finalize(const std::string& id) {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  if (session->status == SessionStatus::finalized) return;
  const json event = {{"type", "finalized"}, {"at", now_utc()}};
  append_event(*session, event);
  apply(*session, event, nullptr);
}

json SessionService::session_state(const std::string& id) const {
  auto session = find(id);
  std::lock_guard lock(session->mutex);
  const auto& s = *session;
  json answered = json::array();
  for (const auto& e : s.answered)
    answered.push_back({{"better", alternative_to_json(s.domain, e.better)}, {"worse", alternative_to_json(s.domain, e.worse)}});
  json versions = json::array();
  for (const auto& record : s.history) versions.push_back(record.version);
  return {{"id", s.id},
          {"status", to_string(s.status)},
          {"domain", domain_to_json(s.domain)},
          {"seed", s.seed},
          {"answered", answered},
          {"feedback", constraints_to_json(s.domain, s.feedback).at("constraints")},
          {"queries_issued", s.issued.size()},
          {"pending", s.pending ? pair_to_json(s.domain, *s.pending) : json(nullptr)},
          {"versions", versions},
          {"created_at", s.created_at},
          {"updated_at", s.updated_at}};
}

Domain SessionService::session_domain(const std::string& id) const {
  auto session = find(id);
  return session->domain;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, session] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace lexloop
