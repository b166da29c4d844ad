#ifndef ECRANNO_CLUSTER_STORE_H_
#define ECRANNO_CLUSTER_STORE_H_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ecranno/corpus.h"
#include "json.hpp"

namespace ecranno {

struct Cluster {
  std::string cluster_id;
  std::vector<std::string> mention_ids;
  int64_t created_seq = 0;

  bool operator==(const Cluster &other) const = default;
};

// Disjoint annotated clusters of one topic, grown one target at a time.
// Single writer; concurrent readers are fine between mutations.
class ClusterStore {
 public:
  explicit ClusterStore(std::string topic_id);

  const std::string &topic_id() const { return topic_id_; }

  // Every cluster in creation order. Throws StoreError if the target
  // belongs to another topic or is already clustered.
  const std::vector<Cluster> &CandidatesFor(const Mention &target,
                                            TopicKey key = TopicKey::kTopic) const;

  void Merge(const Mention &target, const std::string &cluster_id);

  // Returns the new cluster id, "c<created_seq>".
  std::string CreateSingleton(const Mention &target);

  const std::vector<Cluster> &clusters() const { return clusters_; }
  const Cluster *Find(const std::string &cluster_id) const;
  bool Contains(const std::string &mention_id) const;
  // Cluster id holding `mention_id`, or empty.
  std::string ClusterOf(const std::string &mention_id) const;
  size_t mention_count() const { return index_.size(); }

  // Re-derives every structural invariant; throws StoreError on the first
  // violation.
  void Audit() const;

  nlohmann::json ToJson() const;

  bool operator==(const ClusterStore &other) const;

 private:
  std::string topic_id_;
  std::vector<Cluster> clusters_;
  std::unordered_map<std::string, size_t> cluster_pos_;
  std::unordered_map<std::string, size_t> index_;
  int64_t next_seq_ = 1;
};

}  // namespace ecranno

#endif  // ECRANNO_CLUSTER_STORE_H_
