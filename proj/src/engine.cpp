#include "semcube/engine.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "semcube/error.hpp"

namespace semcube::engine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read file", p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write file", p.string());
  out << content;
  if (!out) throw Error(ErrorCode::io, "write failed", p.string());
}

// flock-based; released when the descriptor closes, including on crash.
class IndexLock {
 public:
  explicit IndexLock(const fs::path& index) {
    auto path = index.string() + ".lock";
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw Error(ErrorCode::io, "cannot open lock file", path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::io, "index is locked by another ingest", path);
    }
  }
  ~IndexLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  IndexLock(const IndexLock&) = delete;
  IndexLock& operator=(const IndexLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

EngineConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "config must be a JSON object");
  EngineConfig c;
  try {
    if (j.contains("taxonomy")) c.taxonomy = resolve(base_dir, j["taxonomy"].get<std::string>());
    if (j.contains("corpus")) c.corpus = resolve(base_dir, j["corpus"].get<std::string>());
    if (j.contains("manifest")) c.manifest = resolve(base_dir, j["manifest"].get<std::string>());
    if (j.contains("index")) c.index = resolve(base_dir, j["index"].get<std::string>());
    if (j.contains("group_map")) c.group_map = j["group_map"].get<schema::GroupMap>();
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("measure")) c.measure = cube::parse_measure(j["measure"].get<std::string>());
    c.delta = j.value("delta", c.delta);
    if (j.contains("contingency")) c.contingency = cube::parse_contingency(j["contingency"].get<std::string>());
    if (j.contains("scorer")) c.scorer = cube::parse_scorer(j["scorer"].get<std::string>());
    c.port = j.value("port", c.port);
    if (j.contains("links")) c.links = j["links"].get<std::map<std::string, std::string>>();
    if (j.contains("map_ttl_seconds")) c.map_ttl = std::chrono::seconds(j["map_ttl_seconds"].get<long>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("bad config value: ") + e.what());
  }
  if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw Error(ErrorCode::invalid_input, "alpha must lie in [0,1)");
  if (!std::isfinite(c.delta)) throw Error(ErrorCode::invalid_input, "delta must be finite");
  return c;
}

EngineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("config is not valid JSON: ") + e.what(), path.string());
  }
  return parse_config(j, path.parent_path());
}

std::vector<iexml::AnnotatedDocument> parse_corpus_jsonl(std::istream& in) {
  std::vector<iexml::AnnotatedDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::invalid_input, std::string("malformed corpus record: ") + e.what(),
                  "line " + std::to_string(line_no));
    }
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("iexml")) {
      throw Error(ErrorCode::invalid_input, "corpus record needs doc_id and iexml", "line " + std::to_string(line_no));
    }
    docs.push_back(iexml::parse_iexml(j["doc_id"].get<std::string>(), j.value("object_type", std::string("document")),
                                      j["iexml"].get<std::string>()));
  }
  return docs;
}

std::vector<iexml::AnnotatedDocument> read_corpus(const fs::path& corpus, const fs::path& manifest) {
  if (fs::is_directory(corpus)) {
    std::map<std::string, std::string> types;
    if (!manifest.empty()) {
      try {
        types = json::parse(read_file(manifest)).get<std::map<std::string, std::string>>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_input, std::string("bad manifest: ") + e.what(), manifest.string());
      }
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<iexml::AnnotatedDocument> docs;
    for (const auto& f : files) {
      auto id = f.stem().string();
      auto t = types.find(id);
      docs.push_back(iexml::parse_iexml(id, t == types.end() ? "document" : t->second, read_file(f)));
    }
    return docs;
  }
  std::ifstream in(corpus);
  if (!in) throw Error(ErrorCode::io, "cannot open corpus", corpus.string());
  return parse_corpus_jsonl(in);
}

std::vector<std::string> Snapshot::object_types() const {
  std::set<std::string> types;
  for (const auto& d : index->documents()) types.insert(d.object_type);
  return {types.begin(), types.end()};
}

Snapshot build_snapshot(taxonomy::Ontology ontology, const std::vector<iexml::AnnotatedDocument>& documents,
                        const schema::GroupMap& groups, double alpha, IngestSummary* summary) {
  std::set<std::string> seen_ids;
  for (const auto& d : documents) {
    if (!seen_ids.insert(d.doc_id).second) throw Error(ErrorCode::invalid_input, "duplicate doc_id", d.doc_id);
  }
  auto onto = std::make_shared<const taxonomy::Ontology>(std::move(ontology));
  std::set<std::string> signature;
  std::set<std::string> unknown;
  for (const auto& d : documents) {
    for (const auto& [cui, _] : d.frequencies) (onto->contains(cui) ? signature : unknown).insert(cui);
  }
  auto dims = std::make_shared<const std::vector<schema::Dimension>>(schema::build_schema(*onto, signature, groups));

  std::vector<facts::DocumentFact> built(documents.size());
  std::vector<std::exception_ptr> errors(documents.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < documents.size(); k = next++) {
      try {
        built[k] = facts::build_fact(documents[k], *onto, *dims, alpha);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads && t < documents.size(); ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t k = 0; k < documents.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error(e.code(), e.message(), documents[k].doc_id);
    }
  }

  std::vector<cube::DocumentInfo> infos;
  infos.reserve(documents.size());
  for (const auto& d : documents) infos.push_back({d.doc_id, d.object_type});
  if (summary) {
    summary->documents = documents.size();
    summary->concepts = signature.size();
    summary->dropped_cuis = unknown.size();
    summary->flagged.clear();
    for (const auto& f : built) {
      if (f.flagged) summary->flagged.push_back(f.doc_id);
    }
  }
  auto index = std::make_shared<const cube::CorpusIndex>(cube::index_corpus(std::move(infos), std::move(built), onto, dims));
  return {onto, dims, index};
}

json fact_to_json(const facts::DocumentFact& fact) {
  json assignments = json::object();
  for (const auto& [dim, c] : fact.assignments) assignments[dim] = c ? json(*c) : json(nullptr);
  json rank = json::object();
  for (const auto& [c, r] : fact.rank) rank[c] = r;
  return {{"doc_id", fact.doc_id}, {"assignments", assignments}, {"rank", rank}, {"flagged", fact.flagged}};
}

facts::DocumentFact fact_from_json(const json& j) {
  facts::DocumentFact f;
  f.doc_id = j.at("doc_id").get<std::string>();
  for (const auto& [dim, c] : j.at("assignments").items()) {
    f.assignments[dim] = c.is_null() ? std::nullopt : std::optional<std::string>(c.get<std::string>());
  }
  for (const auto& [c, r] : j.at("rank").items()) f.rank[c] = r.get<double>();
  f.flagged = j.value("flagged", false);
  return f;
}

void write_snapshot(const Snapshot& s, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream tax;
  for (const auto& c : s.ontology->concepts()) tax << taxonomy::to_record(c) << '\n';
  write_file(dir / "taxonomy.jsonl", tax.str());

  std::ostringstream desc;
  s.ontology->write_descriptors(desc);
  write_file(dir / "descriptors.tsv", desc.str());

  std::ostringstream facts_out;
  for (const auto& f : s.index->facts()) facts_out << fact_to_json(f).dump() << '\n';
  write_file(dir / "facts.jsonl", facts_out.str());

  json dims = json::array();
  for (const auto& d : *s.dimensions) {
    json cats = json::array();
    for (const auto& c : d.categories) cats.push_back(c.concepts);
    dims.push_back({{"id", d.id}, {"name", d.name}, {"members", d.member_concepts}, {"categories", cats}});
  }
  json manifest = json::array();
  for (const auto& doc : s.index->documents()) {
    manifest.push_back({{"doc_id", doc.doc_id}, {"object_type", doc.object_type}});
  }
  json meta = {{"format_version", kSnapshotVersion}, {"dimensions", dims}, {"manifest", manifest}};
  write_file(dir / "snapshot.json", meta.dump(1) + "\n");
}

Snapshot load_snapshot(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_file(dir / "snapshot.json"));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("corrupt snapshot.json: ") + e.what(), dir.string());
  }
  const int version = meta.value("format_version", -1);
  if (version != kSnapshotVersion) {
    throw Error(ErrorCode::invalid_input,
                "snapshot format version " + std::to_string(version) + ", expected " + std::to_string(kSnapshotVersion),
                dir.string());
  }
  std::istringstream tax(read_file(dir / "taxonomy.jsonl"));
  auto onto = std::make_shared<const taxonomy::Ontology>(taxonomy::load_taxonomy(tax));
  std::ostringstream desc;
  onto->write_descriptors(desc);
  if (desc.str() != read_file(dir / "descriptors.tsv")) {
    throw Error(ErrorCode::invalid_input, "descriptor table does not match taxonomy", dir.string());
  }

  auto dims = std::make_shared<std::vector<schema::Dimension>>();
  try {
    for (const auto& jd : meta.at("dimensions")) {
      schema::Dimension d;
      d.id = jd.at("id").get<std::string>();
      d.name = jd.at("name").get<std::string>();
      d.member_concepts = jd.at("members").get<std::set<std::string>>();
      d.fragment = onto->extract_fragment(d.member_concepts);
      if (d.fragment.size() != d.member_concepts.size()) {
        throw Error(ErrorCode::invalid_input, "dimension members are not ancestor-closed", d.id);
      }
      std::size_t level = 0;
      for (const auto& jc : jd.at("categories")) {
        d.categories.push_back({d.id, level++, jc.get<std::vector<std::string>>()});
      }
      dims->push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("corrupt schema: ") + e.what(), dir.string());
  }
  if (auto v = schema::validate_schema(*dims); !v.empty()) {
    throw Error(ErrorCode::invalid_input, "snapshot schema invalid: " + v.front().message, dir.string());
  }

  std::vector<cube::DocumentInfo> infos;
  for (const auto& m : meta.at("manifest")) {
    infos.push_back({m.at("doc_id").get<std::string>(), m.at("object_type").get<std::string>()});
  }
  std::vector<facts::DocumentFact> fs_;
  std::istringstream facts_in(read_file(dir / "facts.jsonl"));
  for (std::string line; std::getline(facts_in, line);) {
    if (line.empty()) continue;
    auto f = fact_from_json(json::parse(line));
    for (const auto& [c, _] : f.rank) {
      if (!onto->contains(c)) throw Error(ErrorCode::invalid_input, "fact ranks unknown concept " + c, f.doc_id);
    }
    fs_.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < std::min(infos.size(), fs_.size()); ++k) {
    if (infos[k].doc_id != fs_[k].doc_id) {
      throw Error(ErrorCode::invalid_input, "manifest and facts out of order", fs_[k].doc_id);
    }
  }
  std::shared_ptr<const std::vector<schema::Dimension>> cdims = dims;
  auto index = std::make_shared<const cube::CorpusIndex>(cube::index_corpus(std::move(infos), std::move(fs_), onto, cdims));
  return {onto, cdims, index};
}

IngestSummary ingest(const EngineConfig& config) {
  if (config.index.empty()) throw Error(ErrorCode::invalid_input, "config has no index path");
  if (!config.index.parent_path().empty()) fs::create_directories(config.index.parent_path());
  IndexLock lock(config.index);

  auto onto = taxonomy::load_taxonomy_file(config.taxonomy);
  auto docs = read_corpus(config.corpus, config.manifest);
  IngestSummary summary;
  auto snap = build_snapshot(std::move(onto), docs, config.group_map, config.alpha, &summary);

  auto staging = config.index;
  staging += ".staging";
  fs::remove_all(staging);
  write_snapshot(snap, staging);
  fs::remove_all(config.index);
  fs::rename(staging, config.index);
  return summary;
}

}  // namespace semcube::engine
