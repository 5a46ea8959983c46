#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "imt/errors.hpp"
#include "imt/mdp.hpp"

namespace imt {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) {
    if (t[0] == '#') break;  // trailing comment
    toks.push_back(t);
  }
  return toks;
}

[[noreturn]] void fail(std::size_t lineno, const std::string& msg) {
  throw ParseError("line " + std::to_string(lineno) + ": " + msg);
}

double parse_prob(const std::string& tok, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    double p = std::stod(tok, &pos);
    if (pos != tok.size()) fail(lineno, "malformed probability '" + tok + "'");
    return p;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    fail(lineno, "malformed probability '" + tok + "'");
  }
}

}  // namespace

Mdp parse_mdp_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;

  int num_states = -1;
  std::vector<std::string> action_names;
  std::unordered_map<std::string, int> state_by_name;
  std::unordered_map<std::string, int> action_by_name;

  struct PendingTransition {
    std::string s, a, t;
    double p;
    std::size_t lineno;
  };
  std::vector<PendingTransition> transitions;
  std::vector<std::tuple<std::string, double, std::size_t>> inits;
  std::vector<std::tuple<std::string, std::string, std::size_t>> labels;

  auto resolve_state = [&](const std::string& tok, std::size_t ln) -> int {
    auto it = state_by_name.find(tok);
    if (it != state_by_name.end()) return it->second;
    try {
      std::size_t pos = 0;
      int s = std::stoi(tok, &pos);
      if (pos == tok.size() && s >= 0 && s < num_states) return s;
    } catch (const std::exception&) {
    }
    fail(ln, "unknown state '" + tok + "'");
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    const std::string& head = toks[0];
    if (head == "states") {
      if (num_states >= 0) fail(lineno, "duplicate 'states' directive");
      if (toks.size() != 2) fail(lineno, "'states' takes one count argument");
      try {
        num_states = std::stoi(toks[1]);
      } catch (const std::exception&) {
        fail(lineno, "malformed state count '" + toks[1] + "'");
      }
      if (num_states <= 0) fail(lineno, "state count must be positive");
    } else if (head == "actions") {
      if (!action_names.empty()) fail(lineno, "duplicate 'actions' directive");
      if (toks.size() < 2) fail(lineno, "'actions' needs at least one name");
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (action_by_name.count(toks[i])) fail(lineno, "duplicate action name '" + toks[i] + "'");
        action_by_name[toks[i]] = static_cast<int>(action_names.size());
        action_names.push_back(toks[i]);
      }
    } else if (head == "state") {
      if (num_states < 0) fail(lineno, "'state' before 'states'");
      if (toks.size() != 3) fail(lineno, "'state' takes an index and a name");
      int idx = -1;
      try {
        idx = std::stoi(toks[1]);
      } catch (const std::exception&) {
        fail(lineno, "malformed state index '" + toks[1] + "'");
      }
      if (idx < 0 || idx >= num_states) fail(lineno, "state index out of range");
      if (state_by_name.count(toks[2])) fail(lineno, "duplicate state name '" + toks[2] + "'");
      state_by_name[toks[2]] = idx;
    } else if (head == "init") {
      if (toks.size() != 3) fail(lineno, "'init' takes a state and a probability");
      inits.emplace_back(toks[1], parse_prob(toks[2], lineno), lineno);
    } else if (head == "label") {
      if (toks.size() != 3) fail(lineno, "'label' takes a state and a tag");
      labels.emplace_back(toks[1], toks[2], lineno);
    } else if (toks.size() == 4) {
      // transition line: <state> <action> <state'> <prob>
      transitions.push_back({toks[0], toks[1], toks[2], parse_prob(toks[3], lineno), lineno});
    } else {
      fail(lineno, "unknown directive '" + head + "'");
    }
  }

  if (num_states < 0) throw ParseError("missing 'states' directive");
  if (action_names.empty()) throw ParseError("missing 'actions' directive");

  MdpBuilder builder(num_states, action_names);
  for (const auto& [name, idx] : state_by_name) builder.set_state_name(idx, name);
  for (const auto& t : transitions) {
    auto a = action_by_name.find(t.a);
    if (a == action_by_name.end()) fail(t.lineno, "unknown action '" + t.a + "'");
    builder.add_transition(resolve_state(t.s, t.lineno), a->second, resolve_state(t.t, t.lineno),
                           t.p);
  }
  for (const auto& [s, p, ln] : inits) builder.set_initial(resolve_state(s, ln), p);
  for (const auto& [s, tag, ln] : labels) builder.add_label(resolve_state(s, ln), tag);
  return builder.build();
}

Mdp load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open MDP file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mdp_text(buf.str());
}

}  // namespace imt
