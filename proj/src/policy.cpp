#include "imt/policy.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imt/errors.hpp"
#include "subprocess.hpp"

namespace imt {

int PolicyHandle::query(int state) {
  auto it = cache_.find(state);
  if (it != cache_.end()) return it->second;
  int action = do_query(state);
  cache_.emplace(state, action);
  return action;
}

int TabularPolicy::do_query(int state) {
  auto it = table_.find(state);
  if (it == table_.end())
    throw ModelError("tabular policy has no entry for state " + std::to_string(state));
  return it->second;
}

struct ExternalProcessPolicy::Impl {
  Subprocess proc;
  ExternalPolicyOptions options;

  Impl(const std::string& command, const std::vector<std::string>& args,
       ExternalPolicyOptions opts)
      : proc(command, args), options(std::move(opts)) {}
};

ExternalProcessPolicy::ExternalProcessPolicy(const std::string& command,
                                             const std::vector<std::string>& args,
                                             ExternalPolicyOptions options)
    : impl_(std::make_unique<Impl>(command, args, std::move(options))) {
  nlohmann::json hello = {{"imt_protocol", 1}};
  impl_->proc.write_line(hello.dump());
  std::string reply = impl_->proc.read_line(impl_->options.timeout_ms);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception&) {
    throw AdapterError("malformed handshake from policy process: '" + reply + "'");
  }
  if (!parsed.contains("imt_protocol") || parsed["imt_protocol"] != 1)
    throw AdapterError("policy process advertises unsupported protocol: '" + reply + "'");
}

ExternalProcessPolicy::~ExternalProcessPolicy() = default;

int ExternalProcessPolicy::do_query(int state) {
  nlohmann::json request = {{"run", impl_->options.run_id}, {"state", state}};
  if (static_cast<std::size_t>(state) < impl_->options.features.size())
    request["features"] = impl_->options.features[static_cast<std::size_t>(state)];
  else
    request["features"] = nlohmann::json::array();
  impl_->proc.write_line(request.dump());
  std::string reply;
  try {
    reply = impl_->proc.read_line(impl_->options.timeout_ms);
  } catch (const AdapterError& e) {
    throw AdapterError(std::string(e.what()) + " while querying state " + std::to_string(state));
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception&) {
    throw AdapterError("malformed policy response for state " + std::to_string(state) + ": '" +
                       reply + "'");
  }
  if (!parsed.contains("action") || !parsed["action"].is_number_integer())
    throw AdapterError("policy response lacks an integer action: '" + reply + "'");
  return parsed["action"].get<int>();
}

std::unique_ptr<PolicyHandle> load_tabular(const std::string& path, const Mdp& mdp) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file '" + path + "'");
  std::unordered_map<int, int> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string state_tok, action_tok, extra;
    if (!(is >> state_tok)) continue;
    if (state_tok[0] == '#') continue;
    if (!(is >> action_tok) || (is >> extra))
      throw ParseError("line " + std::to_string(lineno) + ": expected 'state action'");
    auto s = mdp.state_index(state_tok);
    if (!s) throw ParseError("line " + std::to_string(lineno) + ": unknown state '" + state_tok + "'");
    auto a = mdp.action_index(action_tok);
    if (!a)
      throw ParseError("line " + std::to_string(lineno) + ": unknown action '" + action_tok + "'");
    if (!table.emplace(*s, *a).second)
      throw ParseError("line " + std::to_string(lineno) + ": duplicate entry for state '" +
                       state_tok + "'");
  }
  return std::make_unique<TabularPolicy>(std::move(table));
}

std::unique_ptr<PolicyHandle> spawn_external(const std::string& command,
                                             const std::vector<std::string>& args,
                                             ExternalPolicyOptions options) {
  return std::make_unique<ExternalProcessPolicy>(command, args, std::move(options));
}

PolicyTable materialize_policy(PolicyHandle& policy, const Mdp& mdp) {
  PolicyTable table(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) table[static_cast<std::size_t>(s)] = policy.query(s);
  return table;
}

}  // namespace imt
