#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "deadend/exact_solvers.hpp"
#include "deadend/mdp_model.hpp"

namespace deadend {

/// An MDP plus the symbolic names used by the file format.
struct NamedMdp {
  ExplicitMdp mdp;
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;

  StateId state_id(const std::string& name) const;
  ActionId action_id(const std::string& name) const;
};

enum class ParseErrorKind {
  kSyntax,
  kMissingField,
  kBadField,
  kDuplicateState,
  kDuplicateAction,
  kDuplicateRow,
  kUnknownState,
  kUnknownAction,
  kProbabilityMass,
  kNegativeCost,
  kNoGoals,
  kInvalidMdp,
};

std::string to_string(ParseErrorKind kind);

/// Parse or validation failure; `where` is a JSON path such as
/// "transitions[3].outcomes[1].next".
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message), kind_(kind), where_(std::move(where)) {}

  ParseErrorKind kind() const { return kind_; }
  const std::string& where() const { return where_; }

 private:
  ParseErrorKind kind_;
  std::string where_;
};

/// Parses the JSON MDP document and validates the result.
NamedMdp parse_mdp(const std::string& text);
NamedMdp parse_mdp(const nlohmann::json& doc);
NamedMdp load_mdp(const std::filesystem::path& path);

/// Full-precision JSON; parse_mdp(serialize_mdp(m)) reproduces m exactly.
nlohmann::json serialize_mdp(const NamedMdp& named);
void save_mdp(const NamedMdp& named, const std::filesystem::path& path);

/// Default names s0.., a0.. for an unnamed MDP.
NamedMdp with_default_names(ExplicitMdp mdp);

/// {"policy": {state: action}}; unknown names raise ParseError.
Policy parse_policy(const NamedMdp& named, const nlohmann::json& doc);
Policy load_policy(const NamedMdp& named, const std::filesystem::path& path);
nlohmann::json serialize_policy(const NamedMdp& named, const Policy& policy);

/// Solver output document: status, counters, policy, and value tables
/// (only touched states for heuristic search). Usable as a policy file.
nlohmann::json serialize_report(const NamedMdp& named, const SolveReport& report, const std::string& algorithm);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace deadend
