#include "principles/store.hpp"

#include "principles/error.hpp"
#include "principles/knn.hpp"
#include "principles/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <mutex>

namespace principles {

namespace {

std::string format_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06llu", static_cast<unsigned long long>(n));
  return buf;
}

nlohmann::json to_json(const Principle& p) {
  nlohmann::json j = {
      {"id", p.id},
      {"when", p.clauses.when},
      {"you_should", p.clauses.you_should},
  };
  if (p.clauses.rather_than) j["rather_than"] = *p.clauses.rather_than;
  j["because"] = p.clauses.because;
  j["provenance"] = std::string(to_string(p.provenance));
  j["source"] = {{"seed_id", p.source.seed_id}, {"turn_index", p.source.turn_index}};
  j["created_at"] = p.created_at;
  j["when_embedding"] = std::vector<double>(p.when_embedding.data(), p.when_embedding.data() + p.when_embedding.size());
  return j;
}

Principle principle_from_json(const nlohmann::json& j) {
  Principle p;
  p.id = j.at("id").get<std::string>();
  p.clauses.when = j.at("when").get<std::string>();
  p.clauses.you_should = j.at("you_should").get<std::string>();
  if (j.contains("rather_than")) p.clauses.rather_than = j.at("rather_than").get<std::string>();
  p.clauses.because = j.at("because").get<std::string>();
  p.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  p.source.seed_id = j.at("source").at("seed_id").get<std::string>();
  p.source.turn_index = j.at("source").at("turn_index").get<int>();
  p.created_at = j.value("created_at", std::string());
  auto values = j.at("when_embedding").get<std::vector<double>>();
  p.when_embedding = Eigen::Map<const EmbeddingVector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return p;
}

}  // namespace

PrincipleStore::PrincipleStore(Eigen::Index dimension, std::string provider_tag, StoreOptions options)
    : dimension_(dimension), provider_tag_(std::move(provider_tag)), options_(options), embeddings_(dimension, 0) {
  require(dimension_ > 0, "store dimension must be positive");
}

PrincipleStore::PrincipleStore(const PrincipleStore& other)
    : dimension_(other.dimension_), provider_tag_(other.provider_tag_), options_(other.options_) {
  std::shared_lock lock(other.mutex_);
  principles_ = other.principles_;
  embeddings_ = other.embeddings_;
  ids_ = other.ids_;
  rendered_ = other.rendered_;
  next_id_ = other.next_id_;
}

std::string PrincipleStore::add(Principle p) {
  validate_embedding(p.when_embedding, dimension_);
  std::unique_lock lock(mutex_);
  if (p.id.empty()) {
    do p.id = format_id(next_id_++);
    while (ids_.count(p.id));
  } else if (ids_.count(p.id)) {
    fail(ErrorCode::duplicate_id, "principle id '" + p.id + "' already exists");
  }
  validate_principle(p, dimension_);

  auto rendered = render_principle(p);
  if (options_.deduplicate && rendered_.count(rendered)) {
    for (const auto& existing : principles_)
      if (render_principle(existing) == rendered) return existing.id;
  }

  auto n = static_cast<Eigen::Index>(principles_.size());
  if (n == embeddings_.cols()) embeddings_.conservativeResize(Eigen::NoChange, std::max<Eigen::Index>(8, 2 * n));
  embeddings_.col(n) = p.when_embedding;
  ids_.insert(p.id);
  rendered_.insert(std::move(rendered));
  principles_.push_back(std::move(p));
  return principles_.back().id;
}

RetrievalResult PrincipleStore::knn_search(const EmbeddingVector& query, int k) const {
  require(k >= 1, "knn_search: k must be >= 1");
  validate_embedding(query, dimension_);
  std::shared_lock lock(mutex_);
  ++reads_;
  RetrievalResult result;
  auto n = static_cast<Eigen::Index>(principles_.size());
  for (const auto& nb : knn_l2(embeddings_.leftCols(n), query, k))
    result.hits.push_back({principles_[static_cast<std::size_t>(nb.index)], nb.distance});
  return result;
}

std::size_t PrincipleStore::size() const {
  std::shared_lock lock(mutex_);
  ++reads_;
  return principles_.size();
}

Principle PrincipleStore::at(std::size_t position) const {
  std::shared_lock lock(mutex_);
  ++reads_;
  return principles_.at(position);
}

std::vector<Principle> PrincipleStore::snapshot() const {
  std::shared_lock lock(mutex_);
  ++reads_;
  return principles_;
}

void PrincipleStore::save(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write store " + path.string());
  nlohmann::json header = {{"format", "principles-store"},
                           {"version", format_version},
                           {"dimension", dimension_},
                           {"provider", provider_tag_},
                           {"count", principles_.size()}};
  out << header.dump() << '\n';
  for (const auto& p : principles_) out << to_json(p).dump() << '\n';
  if (!out) fail(ErrorCode::io, "failed while writing store " + path.string());
}

PrincipleStore PrincipleStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open store " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse, path.string() + ":1: missing store header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, path.string() + ":1: " + e.what());
  }
  if (header.value("format", std::string()) != "principles-store")
    fail(ErrorCode::parse, path.string() + ":1: not a principle store header");
  if (header.value("version", -1) != format_version)
    fail(ErrorCode::format_version, path.string() + ": unsupported store version " + header.value("version", nlohmann::json()).dump());

  PrincipleStore store(header.at("dimension").get<Eigen::Index>(), header.value("provider", std::string()));
  std::size_t expected = header.value("count", std::size_t{0});
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      store.add(principle_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code() == ErrorCode::dimension_mismatch ? ErrorCode::dimension_mismatch : ErrorCode::parse,
           path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (store.principles_.size() != expected)
    fail(ErrorCode::parse, path.string() + ": truncated store, header declares " + std::to_string(expected) +
                               " principles but " + std::to_string(store.principles_.size()) + " were read");
  for (const auto& p : store.principles_) {
    if (p.id.size() == 7 && p.id[0] == 'p') {
      try {
        store.next_id_ = std::max<std::uint64_t>(store.next_id_, std::stoull(p.id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
  return store;
}

}  // namespace principles
