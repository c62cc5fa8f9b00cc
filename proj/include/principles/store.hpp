#pragma once

#include "principles/principle.hpp"

#include <atomic>
#include <filesystem>
#include <shared_mutex>
#include <unordered_set>
#include <vector>

namespace principles {

struct RetrievalHit {
  Principle principle;
  double distance;
};

/// Hits in ascending distance order; at most k.
struct RetrievalResult {
  std::vector<RetrievalHit> hits;
  bool empty() const { return hits.empty(); }
};

struct StoreOptions {
  bool deduplicate = false;  // drop principles whose rendered text already exists
};

/// Append-only principle set with an exact L2 index over When-clause
/// embeddings. Many readers or one writer at a time.
class PrincipleStore {
 public:
  static constexpr int format_version = 1;

  PrincipleStore(Eigen::Index dimension, std::string provider_tag, StoreOptions options = {});
  PrincipleStore(const PrincipleStore& other);
  PrincipleStore& operator=(const PrincipleStore&) = delete;

  /// Assigns an id when `p.id` is empty and returns the stored id. With
  /// deduplication on, an exact-text duplicate returns the existing id.
  std::string add(Principle p);

  RetrievalResult knn_search(const EmbeddingVector& query, int k) const;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  Principle at(std::size_t position) const;
  std::vector<Principle> snapshot() const;

  Eigen::Index dimension() const { return dimension_; }
  const std::string& provider_tag() const { return provider_tag_; }

  /// Number of read operations (size/at/snapshot/knn_search) served.
  std::size_t read_count() const { return reads_.load(); }

  /// JSONL: one header line, then one principle per line in insertion order.
  void save(const std::filesystem::path& path) const;
  static PrincipleStore load(const std::filesystem::path& path);

 private:
  Eigen::Index dimension_;
  std::string provider_tag_;
  StoreOptions options_;

  mutable std::shared_mutex mutex_;
  mutable std::atomic<std::size_t> reads_{0};
  std::vector<Principle> principles_;
  Eigen::MatrixXd embeddings_;  // dimension x capacity; first size() columns live
  std::unordered_set<std::string> ids_;
  std::unordered_set<std::string> rendered_;
  std::uint64_t next_id_ = 1;
};

}  // namespace principles
