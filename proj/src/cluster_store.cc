#include "ecranno/cluster_store.h"

#include <unordered_set>

#include "ecranno/errors.h"

namespace ecranno {

ClusterStore::ClusterStore(std::string topic_id) : topic_id_(std::move(topic_id)) {}

const std::vector<Cluster> &ClusterStore::CandidatesFor(const Mention &target,
                                                        TopicKey key) const {
  if (TopicOf(target, key) != topic_id_) {
    throw StoreError("mention '" + target.mention_id + "' belongs to topic '" +
                     TopicOf(target, key) + "', store holds topic '" +
                     topic_id_ + "'");
  }
  if (Contains(target.mention_id)) {
    throw StoreError("mention '" + target.mention_id + "' is already clustered");
  }
  return clusters_;
}

void ClusterStore::Merge(const Mention &target, const std::string &cluster_id) {
  auto pos = cluster_pos_.find(cluster_id);
  if (pos == cluster_pos_.end()) {
    throw StoreError("unknown cluster '" + cluster_id + "'");
  }
  if (Contains(target.mention_id)) {
    throw StoreError("mention '" + target.mention_id + "' is already clustered");
  }
  clusters_[pos->second].mention_ids.push_back(target.mention_id);
  index_.emplace(target.mention_id, pos->second);
}

std::string ClusterStore::CreateSingleton(const Mention &target) {
  if (Contains(target.mention_id)) {
    throw StoreError("mention '" + target.mention_id + "' is already clustered");
  }
  Cluster c;
  c.created_seq = next_seq_++;
  c.cluster_id = "c" + std::to_string(c.created_seq);
  c.mention_ids.push_back(target.mention_id);
  size_t pos = clusters_.size();
  cluster_pos_.emplace(c.cluster_id, pos);
  index_.emplace(target.mention_id, pos);
  clusters_.push_back(std::move(c));
  return clusters_.back().cluster_id;
}

const Cluster *ClusterStore::Find(const std::string &cluster_id) const {
  auto it = cluster_pos_.find(cluster_id);
  return it == cluster_pos_.end() ? nullptr : &clusters_[it->second];
}

bool ClusterStore::Contains(const std::string &mention_id) const {
  return index_.count(mention_id) != 0;
}

std::string ClusterStore::ClusterOf(const std::string &mention_id) const {
  auto it = index_.find(mention_id);
  return it == index_.end() ? std::string() : clusters_[it->second].cluster_id;
}

void ClusterStore::Audit() const {
  std::unordered_set<std::string> seen;
  int64_t last_seq = 0;
  for (size_t i = 0; i < clusters_.size(); ++i) {
    const Cluster &c = clusters_[i];
    if (c.mention_ids.empty()) {
      throw StoreError("cluster '" + c.cluster_id + "' is empty");
    }
    if (c.created_seq <= last_seq) {
      throw StoreError("created_seq not strictly increasing at '" +
                       c.cluster_id + "'");
    }
    last_seq = c.created_seq;
    auto pos = cluster_pos_.find(c.cluster_id);
    if (pos == cluster_pos_.end() || pos->second != i) {
      throw StoreError("cluster '" + c.cluster_id + "' not indexed");
    }
    for (const std::string &m : c.mention_ids) {
      if (!seen.insert(m).second) {
        throw StoreError("mention '" + m + "' appears in more than one place");
      }
      auto idx = index_.find(m);
      if (idx == index_.end() || idx->second != i) {
        throw StoreError("mention '" + m + "' mis-indexed");
      }
    }
  }
  if (seen.size() != index_.size()) {
    throw StoreError("index holds mentions absent from every cluster");
  }
  if (cluster_pos_.size() != clusters_.size()) {
    throw StoreError("cluster index size mismatch");
  }
}

nlohmann::json ClusterStore::ToJson() const {
  nlohmann::json clusters = nlohmann::json::array();
  for (const Cluster &c : clusters_) {
    clusters.push_back({{"cluster_id", c.cluster_id}, {"mention_ids", c.mention_ids}});
  }
  return {{"topic_id", topic_id_}, {"clusters", std::move(clusters)}};
}

bool ClusterStore::operator==(const ClusterStore &other) const {
  return topic_id_ == other.topic_id_ && clusters_ == other.clusters_;
}

}  // namespace ecranno
