#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gslb/model.hpp"

namespace gslb {

/// Ordered balancer addresses for one application plus the rotation cursor.
struct SelectorEntry {
  std::string app_id;
  std::vector<std::string> balancer_addresses;
  std::size_t cursor = 0;

  bool operator==(const SelectorEntry&) const = default;
};

enum class SelectorRole { Master, Slave };

/// A level-1 resolver. Resolution is a round-robin over the registered
/// balancer addresses of the requested application.
struct SelectorNode {
  std::string node_id;
  SelectorRole role = SelectorRole::Master;
  Health health = Health::Up;
  std::map<std::string, SelectorEntry> entries;
};

/// Returns the address under the cursor and advances it.
/// Throws NodeDown or UnknownApp.
std::string resolve_app(SelectorNode& node, const std::string& app_id);

/// Single-node mutations; see SelectorGroup for the replicated versions.
const SelectorEntry& register_balancer(SelectorNode& node, const std::string& app_id,
                                       const std::string& address);
const SelectorEntry& deregister_balancer(SelectorNode& node, const std::string& app_id,
                                         const std::string& address);

/// True when both nodes hold the same apps with the same address lists.
/// Cursors are per node and deliberately not compared.
bool same_tables(const SelectorNode& a, const SelectorNode& b);

struct Resolution {
  std::string address;
  std::size_t node_index = 0;  // which node answered
};

/// Tries nodes in order (master first) and resolves on the first Up node.
/// Throws AllSelectorsDown when every node is Down, UnknownApp when the
/// answering node does not know the app.
Resolution ha_resolve(std::span<SelectorNode> nodes, const std::string& app_id);

/// A master plus its slaves. Every register/deregister is applied to the
/// master and then replayed on each slave so the tables stay identical.
class SelectorGroup {
 public:
  SelectorGroup() = default;
  SelectorGroup(std::string master_id, std::vector<std::string> slave_ids);

  void register_balancer(const std::string& app_id, const std::string& address);
  void deregister_balancer(const std::string& app_id, const std::string& address);

  Resolution resolve(const std::string& app_id) { return ha_resolve(nodes_, app_id); }

  void set_health(std::size_t node_index, Health health) { nodes_.at(node_index).health = health; }

  std::span<SelectorNode> nodes() noexcept { return nodes_; }
  std::span<const SelectorNode> nodes() const noexcept { return nodes_; }
  SelectorNode& master() { return nodes_.front(); }

 private:
  std::vector<SelectorNode> nodes_;
};

}  // namespace gslb
