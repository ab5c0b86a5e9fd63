#include "deadend/mdp_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace deadend {

using nlohmann::json;

namespace {

[[noreturn]] void fail(ParseErrorKind kind, const std::string& where, const std::string& message) {
  throw ParseError(kind, where, message);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ParseErrorKind::kMissingField, where, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string field(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

std::string index(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

double number_or_inf(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "inf" || s == "Infinity" || s == "+inf") return kInfinity;
  }
  fail(ParseErrorKind::kBadField, where, "expected a number or \"inf\"");
}

std::vector<std::string> name_list(const json& doc, const char* key, ParseErrorKind dup_kind) {
  const json& arr = require(doc, key, "");
  if (!arr.is_array()) fail(ParseErrorKind::kBadField, key, "expected an array of names");
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) fail(ParseErrorKind::kBadField, index(key, i), "expected a string");
    auto name = arr[i].get<std::string>();
    if (!seen.insert(name).second) fail(dup_kind, index(key, i), "duplicate name \"" + name + "\"");
    names.push_back(std::move(name));
  }
  return names;
}

std::map<std::string, std::uint32_t> name_index(const std::vector<std::string>& names) {
  std::map<std::string, std::uint32_t> out;
  for (std::uint32_t i = 0; i < names.size(); ++i) out.emplace(names[i], i);
  return out;
}

std::uint32_t lookup(const std::map<std::string, std::uint32_t>& ids, const json& v, const std::string& where,
                     ParseErrorKind unknown_kind, const char* what) {
  if (!v.is_string()) fail(ParseErrorKind::kBadField, where, std::string("expected a ") + what + " name");
  auto it = ids.find(v.get<std::string>());
  if (it == ids.end()) fail(unknown_kind, where, std::string("unknown ") + what + " \"" + v.get<std::string>() + "\"");
  return it->second;
}

// Line and column of a byte offset, for syntax errors.
std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return json(x);
}

bool implied_goal_row(const ExplicitMdp& mdp, StateId g) {
  auto rows = mdp.rows(g);
  if (rows.size() != mdp.num_actions()) return false;
  for (const auto& row : rows) {
    if (row.cost != 0.0 || row.outcomes.size() != 1 || row.outcomes[0].next != g || row.outcomes[0].prob != 1.0) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kSyntax: return "syntax";
    case ParseErrorKind::kMissingField: return "missing-field";
    case ParseErrorKind::kBadField: return "bad-field";
    case ParseErrorKind::kDuplicateState: return "duplicate-state";
    case ParseErrorKind::kDuplicateAction: return "duplicate-action";
    case ParseErrorKind::kDuplicateRow: return "duplicate-row";
    case ParseErrorKind::kUnknownState: return "unknown-state";
    case ParseErrorKind::kUnknownAction: return "unknown-action";
    case ParseErrorKind::kProbabilityMass: return "probability-mass";
    case ParseErrorKind::kNegativeCost: return "negative-cost";
    case ParseErrorKind::kNoGoals: return "no-goals";
    case ParseErrorKind::kInvalidMdp: return "invalid-mdp";
  }
  return "unknown";
}

StateId NamedMdp::state_id(const std::string& name) const {
  for (StateId s = 0; s < state_names.size(); ++s) {
    if (state_names[s] == name) return s;
  }
  throw ParseError(ParseErrorKind::kUnknownState, "", "unknown state \"" + name + "\"");
}

ActionId NamedMdp::action_id(const std::string& name) const {
  for (ActionId a = 0; a < action_names.size(); ++a) {
    if (action_names[a] == name) return a;
  }
  throw ParseError(ParseErrorKind::kUnknownAction, "", "unknown action \"" + name + "\"");
}

NamedMdp parse_mdp(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseErrorKind::kSyntax, position(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  return parse_mdp(doc);
}

NamedMdp parse_mdp(const json& doc) {
  if (!doc.is_object()) fail(ParseErrorKind::kSyntax, "", "document must be a JSON object");

  NamedMdp out;
  out.state_names = name_list(doc, "states", ParseErrorKind::kDuplicateState);
  out.action_names = name_list(doc, "actions", ParseErrorKind::kDuplicateAction);
  auto state_ids = name_index(out.state_names);
  auto action_ids = name_index(out.action_names);

  MdpBuilder builder(out.state_names.size(), out.action_names.size());

  auto goals_it = doc.find("goals");
  if (goals_it == doc.end() || !goals_it->is_array() || goals_it->empty()) {
    fail(ParseErrorKind::kNoGoals, "goals", "no goal states declared");
  }
  for (std::size_t i = 0; i < goals_it->size(); ++i) {
    builder.add_goal(lookup(state_ids, (*goals_it)[i], index("goals", i), ParseErrorKind::kUnknownState, "state"));
  }

  if (auto it = doc.find("start"); it != doc.end() && !it->is_null()) {
    builder.set_start(lookup(state_ids, *it, "start", ParseErrorKind::kUnknownState, "state"));
  }
  if (auto it = doc.find("penalty"); it != doc.end() && !it->is_null()) {
    builder.set_penalty(number_or_inf(*it, "penalty"));
  }

  const json& transitions = require(doc, "transitions", "");
  if (!transitions.is_array()) fail(ParseErrorKind::kBadField, "transitions", "expected an array");
  std::set<std::pair<StateId, ActionId>> seen_rows;
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string where = index("transitions", i);
    const json& t = transitions[i];
    if (!t.is_object()) fail(ParseErrorKind::kBadField, where, "expected an object");
    StateId s = lookup(state_ids, require(t, "state", where), field(where, "state"), ParseErrorKind::kUnknownState,
                       "state");
    ActionId a = lookup(action_ids, require(t, "action", where), field(where, "action"),
                        ParseErrorKind::kUnknownAction, "action");
    if (!seen_rows.emplace(s, a).second) {
      fail(ParseErrorKind::kDuplicateRow, where,
           "duplicate row for state \"" + out.state_names[s] + "\", action \"" + out.action_names[a] + "\"");
    }
    double cost = number_or_inf(require(t, "cost", where), field(where, "cost"));
    if (cost < 0.0) {
      fail(ParseErrorKind::kNegativeCost, field(where, "cost"),
           "negative cost for state \"" + out.state_names[s] + "\", action \"" + out.action_names[a] + "\"");
    }

    const json& outs = require(t, "outcomes", where);
    const std::string owhere = field(where, "outcomes");
    if (!outs.is_array()) fail(ParseErrorKind::kBadField, owhere, "expected an array");
    std::vector<Outcome> outcomes;
    double mass = 0.0;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const std::string kwhere = index(owhere, k);
      const json& o = outs[k];
      if (!o.is_object()) fail(ParseErrorKind::kBadField, kwhere, "expected an object");
      StateId next = lookup(state_ids, require(o, "next", kwhere), field(kwhere, "next"),
                            ParseErrorKind::kUnknownState, "state");
      const json& p = require(o, "p", kwhere);
      if (!p.is_number()) fail(ParseErrorKind::kBadField, field(kwhere, "p"), "expected a number");
      double prob = p.get<double>();
      if (!(prob >= 0.0 && prob <= 1.0)) {
        fail(ParseErrorKind::kProbabilityMass, field(kwhere, "p"), "probability outside [0, 1]");
      }
      mass += prob;
      outcomes.push_back({next, prob});
    }
    if (std::abs(mass - 1.0) > kProbabilitySumTolerance) {
      std::ostringstream msg;
      msg << "probabilities for state \"" << out.state_names[s] << "\", action \"" << out.action_names[a]
          << "\" sum to " << mass << " != 1";
      fail(ParseErrorKind::kProbabilityMass, owhere, msg.str());
    }
    builder.add_row(s, a, cost, std::move(outcomes));
  }

  out.mdp = builder.build();
  auto violations = validate(out.mdp);
  if (!violations.empty()) {
    const auto& v = violations.front();
    std::string where;
    if (v.state) where = "state \"" + out.state_names[*v.state] + "\"";
    if (v.action) where += ", action \"" + out.action_names[*v.action] + "\"";
    fail(ParseErrorKind::kInvalidMdp, where, to_string(v.kind) + ": " + v.message);
  }
  return out;
}

NamedMdp load_mdp(const std::filesystem::path& path) { return parse_mdp(read_text_file(path)); }

json serialize_mdp(const NamedMdp& named) {
  const auto& mdp = named.mdp;
  json doc;
  doc["states"] = named.state_names;
  doc["actions"] = named.action_names;
  json goals = json::array();
  for (StateId g : mdp.goals()) goals.push_back(named.state_names[g]);
  doc["goals"] = goals;
  doc["start"] = mdp.start() ? json(named.state_names[*mdp.start()]) : json(nullptr);
  doc["penalty"] = number_json(mdp.penalty());

  json transitions = json::array();
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_goal(s) && implied_goal_row(mdp, s)) continue;
    for (const auto& row : mdp.rows(s)) {
      json outs = json::array();
      for (const auto& o : row.outcomes) outs.push_back({{"next", named.state_names[o.next]}, {"p", o.prob}});
      transitions.push_back({{"state", named.state_names[s]},
                             {"action", named.action_names[row.action]},
                             {"cost", number_json(row.cost)},
                             {"outcomes", outs}});
    }
  }
  doc["transitions"] = transitions;
  return doc;
}

void save_mdp(const NamedMdp& named, const std::filesystem::path& path) {
  write_text_file(path, serialize_mdp(named).dump(2) + "\n");
}

NamedMdp with_default_names(ExplicitMdp mdp) {
  NamedMdp out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) out.state_names.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) out.action_names.push_back("a" + std::to_string(a));
  out.mdp = std::move(mdp);
  return out;
}

Policy parse_policy(const NamedMdp& named, const json& doc) {
  auto it = doc.find("policy");
  if (it == doc.end()) fail(ParseErrorKind::kMissingField, "", "missing field \"policy\"");
  if (!it->is_object()) fail(ParseErrorKind::kBadField, "policy", "expected an object of state: action");
  auto state_ids = name_index(named.state_names);
  auto action_ids = name_index(named.action_names);
  Policy policy(named.mdp.num_states());
  for (const auto& [state, action] : it->items()) {
    const std::string where = "policy." + state;
    auto s = state_ids.find(state);
    if (s == state_ids.end()) fail(ParseErrorKind::kUnknownState, where, "unknown state \"" + state + "\"");
    ActionId a = lookup(action_ids, action, where, ParseErrorKind::kUnknownAction, "action");
    policy.assign(s->second, a);
  }
  return policy;
}

Policy load_policy(const NamedMdp& named, const std::filesystem::path& path) {
  auto text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseErrorKind::kSyntax, position(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  return parse_policy(named, doc);
}

json serialize_policy(const NamedMdp& named, const Policy& policy) {
  json map = json::object();
  for (StateId s = 0; s < policy.size(); ++s) {
    if (auto a = policy.action(s)) map[named.state_names[s]] = named.action_names[*a];
  }
  return json{{"policy", map}};
}

json serialize_report(const NamedMdp& named, const SolveReport& report, const std::string& algorithm) {
  json doc = serialize_policy(named, report.policy);
  doc["algorithm"] = algorithm;
  doc["converged"] = report.converged;
  doc["dead_start"] = report.dead_start;
  doc["sweeps"] = report.sweeps;
  doc["backups"] = report.backups;
  doc["residual"] = number_json(report.residual_final);
  doc["wall_time_s"] = report.wall_time.count();
  if (report.seed) doc["seed"] = *report.seed;
  doc["stats"] = {{"states_touched", report.stats.states_touched},
                  {"greedy_graph_builds", report.stats.greedy_graph_builds},
                  {"greedy_graph_max_states", report.stats.greedy_graph_max_states},
                  {"greedy_graph_max_actions", report.stats.greedy_graph_max_actions},
                  {"trap_rounds", report.stats.trap_rounds}};

  auto include = [&](StateId s) { return report.touched.empty() || report.touched[s]; };
  if (!report.values.empty()) {
    json values = json::object();
    for (StateId s = 0; s < report.values.size(); ++s) {
      if (include(s)) values[named.state_names[s]] = number_json(report.values[s]);
    }
    doc["values"] = values;
  }
  if (report.probs) {
    json probs = json::object();
    for (StateId s = 0; s < report.probs->size(); ++s) {
      if (include(s)) probs[named.state_names[s]] = (*report.probs)[s];
    }
    doc["goal_probs"] = probs;
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace deadend
