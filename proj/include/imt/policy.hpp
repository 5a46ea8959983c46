#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "imt/mdp.hpp"

namespace imt {

/// Uniform interface to the policy under test. Answers are cached per
/// state, so query_count() reports the number of distinct decisions
/// sampled — the budget unit of the testing loop. Handles are confined to
/// one logical owner; concurrent use is not supported.
class PolicyHandle {
 public:
  virtual ~PolicyHandle() = default;

  /// Returns the policy's action at s; repeated queries are served from
  /// the cache and do not count again.
  int query(int state);

  std::size_t query_count() const { return cache_.size(); }
  virtual std::string kind() const = 0;

 protected:
  virtual int do_query(int state) = 0;

 private:
  std::unordered_map<int, int> cache_;
};

/// Policy backed by an explicit (possibly partial) state -> action map.
/// Queries outside the map raise ModelError.
class TabularPolicy : public PolicyHandle {
 public:
  explicit TabularPolicy(std::unordered_map<int, int> table) : table_(std::move(table)) {}
  std::string kind() const override { return "tabular"; }

 protected:
  int do_query(int state) override;

 private:
  std::unordered_map<int, int> table_;
};

/// Policy backed by an arbitrary function; used for in-process tests and
/// for Python callables through the bindings.
class CallbackPolicy : public PolicyHandle {
 public:
  explicit CallbackPolicy(std::function<int(int)> fn) : fn_(std::move(fn)) {}
  std::string kind() const override { return "callback"; }

 protected:
  int do_query(int state) override { return fn_(state); }

 private:
  std::function<int(int)> fn_;
};

struct ExternalPolicyOptions {
  long timeout_ms = 10000;
  std::uint64_t run_id = 0;
  /// Per-state feature vectors forwarded with each request; empty vectors
  /// are sent when absent.
  std::vector<std::vector<double>> features;
};

/// Policy served by a child process speaking the line protocol: after a
/// handshake line {"imt_protocol":1} in both directions, one request
/// object per line ({"run":id,"state":s,"features":[...]}) is answered by
/// one response object per line ({"action":a}). A single request is in
/// flight at a time.
class ExternalProcessPolicy : public PolicyHandle {
 public:
  ExternalProcessPolicy(const std::string& command, const std::vector<std::string>& args,
                        ExternalPolicyOptions options = {});
  ~ExternalProcessPolicy() override;

  ExternalProcessPolicy(const ExternalProcessPolicy&) = delete;
  ExternalProcessPolicy& operator=(const ExternalProcessPolicy&) = delete;

  std::string kind() const override { return "external"; }

 protected:
  int do_query(int state) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Loads the `state_name action_name` tabular format, resolving names
/// against the model. Duplicate states are a parse error; missing states
/// are legal and fail only when queried.
std::unique_ptr<PolicyHandle> load_tabular(const std::string& path, const Mdp& mdp);

std::unique_ptr<PolicyHandle> spawn_external(const std::string& command,
                                             const std::vector<std::string>& args,
                                             ExternalPolicyOptions options = {});

/// Materializes a handle into a total policy table by querying every
/// state. Used for induced-chain checks.
PolicyTable materialize_policy(PolicyHandle& policy, const Mdp& mdp);

}  // namespace imt
