#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexloop/cluster.hpp"
#include "lexloop/constraints.hpp"
#include "lexloop/learn.hpp"

namespace lexloop {

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::uint64_t default_seed = 0;
  /// Levels shown in graph documents before nodes are collapsed.
  std::size_t graph_depth = 3;
  Linkage linkage = Linkage::average;
  std::uint64_t enumeration_limit = kTauEnumerationLimit;
  QueryOptions query;
};

enum class SessionStatus { eliciting, model_ready, finalized };
enum class Choice { first, second, skip };

std::string_view to_string(SessionStatus status);
std::string_view to_string(Choice choice);
Choice choice_from_string(std::string_view text);

/// The elicitation loop over many sessions. Every mutation is appended to
/// the session's event log under `data_dir` before it takes effect, and the
/// logs are replayed on construction.
class SessionService {
 public:
  explicit SessionService(ServiceConfig config);
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::string create_session(const nlohmann::json& domain_document);

  /// The pending query, or a fresh one when none is pending.
  AlternativePair next_query(const std::string& id);
  void submit_answer(const std::string& id, const AlternativePair& pair, Choice choice);

  /// Learns with the session feedback as constraints. `config.constraints`
  /// must be empty. Returns the stored payload of the new version.
  nlohmann::json learn_model(const std::string& id, LearnConfig config, std::optional<double> threshold = {});

  /// Accepts the constraints when they are feasible together with earlier
  /// feedback, rejects all of them otherwise. The report describes the joint set.
  FeasibilityReport submit_feedback(const std::string& id, const std::vector<FeedbackConstraint>& constraints);

  /// Latest version when `version` is empty.
  nlohmann::json get_model(const std::string& id, std::optional<std::size_t> version = {}) const;
  void finalize(const std::string& id);

  nlohmann::json session_state(const std::string& id) const;
  Domain session_domain(const std::string& id) const;
  std::vector<std::string> session_ids() const;
  const ServiceConfig& config() const { return config_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  void append_event(const Session& session, const nlohmann::json& event) const;
  void apply(Session& session, const nlohmann::json& event, const nlohmann::json* payload);
  nlohmann::json build_payload(const Session& session, std::size_t version, const LearnConfig& config,
                               std::optional<double> threshold) const;
  void replay(const std::filesystem::path& log);

  ServiceConfig config_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace lexloop
