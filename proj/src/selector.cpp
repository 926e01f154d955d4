#include "gslb/selector.hpp"

#include <algorithm>

#include "gslb/error.hpp"

namespace gslb {

std::string resolve_app(SelectorNode& node, const std::string& app_id) {
  if (node.health != Health::Up) {
    throw Error(Errc::NodeDown, "selector " + node.node_id + " is down");
  }
  auto it = node.entries.find(app_id);
  if (it == node.entries.end()) {
    throw Error(Errc::UnknownApp, "app '" + app_id + "' is not registered on " + node.node_id);
  }
  SelectorEntry& entry = it->second;
  entry.cursor %= entry.balancer_addresses.size();
  std::string address = entry.balancer_addresses[entry.cursor];
  entry.cursor = (entry.cursor + 1) % entry.balancer_addresses.size();
  return address;
}

const SelectorEntry& register_balancer(SelectorNode& node, const std::string& app_id,
                                       const std::string& address) {
  SelectorEntry& entry = node.entries[app_id];
  entry.app_id = app_id;
  auto& list = entry.balancer_addresses;
  if (std::find(list.begin(), list.end(), address) != list.end()) {
    throw Error(Errc::DuplicateAddress, address + " already registered for " + app_id);
  }
  list.push_back(address);
  return entry;
}

const SelectorEntry& deregister_balancer(SelectorNode& node, const std::string& app_id,
                                         const std::string& address) {
  auto it = node.entries.find(app_id);
  if (it == node.entries.end()) {
    throw Error(Errc::UnknownApp, "app '" + app_id + "' is not registered");
  }
  auto& list = it->second.balancer_addresses;
  auto pos = std::find(list.begin(), list.end(), address);
  if (pos == list.end()) {
    throw Error(Errc::UnknownAddress, address + " is not registered for " + app_id);
  }
  if (list.size() == 1) {
    throw Error(Errc::LastAddress, "refusing to remove the last balancer of " + app_id);
  }
  list.erase(pos);
  it->second.cursor %= list.size();
  return it->second;
}

bool same_tables(const SelectorNode& a, const SelectorNode& b) {
  if (a.entries.size() != b.entries.size()) return false;
  return std::equal(a.entries.begin(), a.entries.end(), b.entries.begin(),
                    [](const auto& x, const auto& y) {
                      return x.first == y.first &&
                             x.second.balancer_addresses == y.second.balancer_addresses;
                    });
}

Resolution ha_resolve(std::span<SelectorNode> nodes, const std::string& app_id) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].health != Health::Up) continue;
    return {resolve_app(nodes[i], app_id), i};
  }
  throw Error(Errc::AllSelectorsDown, "no selector is up to resolve " + app_id);
}

SelectorGroup::SelectorGroup(std::string master_id, std::vector<std::string> slave_ids) {
  nodes_.push_back(SelectorNode{std::move(master_id), SelectorRole::Master, Health::Up, {}});
  for (auto& id : slave_ids) {
    nodes_.push_back(SelectorNode{std::move(id), SelectorRole::Slave, Health::Up, {}});
  }
}

void SelectorGroup::register_balancer(const std::string& app_id, const std::string& address) {
  for (auto& node : nodes_) gslb::register_balancer(node, app_id, address);
}

void SelectorGroup::deregister_balancer(const std::string& app_id, const std::string& address) {
  // The master validates first so a refused mutation leaves every node untouched.
  gslb::deregister_balancer(nodes_.front(), app_id, address);
  for (auto& node : std::span(nodes_).subspan(1)) gslb::deregister_balancer(node, app_id, address);
}

}  // namespace gslb
