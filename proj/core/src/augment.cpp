#include "gem/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace gem {

using ojson = nlohmann::ordered_json;

std::string_view to_string(PlanMode m) {
  return m == PlanMode::kSourceLevel ? "source" : "instance";
}

std::optional<PlanMode> plan_mode_from_string(std::string_view s) {
  if (s == "source" || s == "source_level") return PlanMode::kSourceLevel;
  if (s == "instance" || s == "instance_level") return PlanMode::kInstanceLevel;
  return std::nullopt;
}

std::optional<AugmentPolicy> augment_policy_from_string(std::string_view s) {
  if (s == "all") return AugmentPolicy::kAll;
  if (s == "gated") return AugmentPolicy::kGated;
  return std::nullopt;
}

const std::vector<std::string> kWdcProductAttributes = {
    "capacity",   "color", "frequency",          "keywords",     "language",
    "model number", "product identifier", "release year", "resolution",
    "size",       "speed", "weight"};

const std::vector<std::string> kDefaultMeaninglessValues = {
    "", "unknown", "n/a", "na", "none", "not available", "not specified", "null", "-"};

// ---------------------------------------------------------------------------
// Attribute selection
// ---------------------------------------------------------------------------

const std::vector<std::string>* AttributePlan::attributes_for(const std::string& id) const {
  if (mode == PlanMode::kSourceLevel) return fixed_list.empty() ? nullptr : &fixed_list;
  auto it = per_entity.find(id);
  if (it == per_entity.end() || it->second.empty()) return nullptr;
  return &it->second;
}

namespace {

std::vector<std::string> dedup_preserving_order(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : in)
    if (!s.empty() && seen.insert(s).second) out.push_back(s);
  return out;
}

}  // namespace

AttributePlan select_attributes(const Dataset& d, PlanMode mode,
                                const std::vector<std::string>& fixed_list) {
  AttributePlan plan;
  plan.mode = mode;
  if (mode == PlanMode::kSourceLevel) {
    plan.fixed_list = dedup_preserving_order(fixed_list);
    if (plan.fixed_list.empty())
      throw std::invalid_argument("select_attributes: source-level plan needs a fixed list");
    return plan;
  }
  if (d.candidates.empty())
    throw std::invalid_argument(
        "select_attributes: instance-level plan requires blocking candidates");
  for (const auto& [id, cands] : d.candidates) {
    if (cands.empty()) {
      plan.skipped.push_back(id);
      continue;
    }
    std::vector<std::string> attrs;
    std::set<std::string> seen;
    for (const auto& cid : cands) {
      const Entity* cand = d.find_any(cid);
      if (cand == nullptr) continue;
      for (const auto& key : collect_keys(*cand))
        if (seen.insert(key).second) attrs.push_back(key);
    }
    if (attrs.empty())
      plan.skipped.push_back(id);
    else
      plan.per_entity[id] = std::move(attrs);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Request construction
// ---------------------------------------------------------------------------

std::vector<LlmMessage> build_llm_request(const Entity& e,
                                          const std::vector<std::string>& attrs) {
  if (attrs.empty()) throw std::invalid_argument("build_llm_request: empty attribute list");
  std::string entity_info =
      e.shape == EntityShape::kTextual ? e.text : entity_content_json(e);
  std::string attribute_list;
  for (size_t i = 0; i < attrs.size(); ++i) {
    if (i > 0) attribute_list += ", ";
    attribute_list += attrs[i];
  }
  std::vector<LlmMessage> messages;
  messages.push_back(
      {"system", "You are a helpful assistant. Answer in plain json format only"});
  messages.push_back(
      {"user", "Please provide some information about the following entity. The entity is " +
                   entity_info + ". Please output the " + attribute_list +
                   " of the entity."});
  return messages;
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_meaningless(const std::string& value, const std::vector<std::string>& patterns) {
  const std::string v = to_lower(trim(value));
  for (const auto& p : patterns)
    if (v == p) return true;
  return false;
}

std::optional<ojson> parse_json_object(const std::string& text) {
  ojson j = ojson::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j;
  // one repair pass: take the outermost brace pair (also strips code fences)
  size_t open = text.find('{');
  size_t close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close <= open)
    return std::nullopt;
  j = ojson::parse(text.substr(open, close - open + 1), nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j;
  return std::nullopt;
}

std::string scalar_to_string(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();  // numbers, bools, nested structures keep their JSON text
}

}  // namespace

AugmentationRecord parse_llm_response(const std::string& text,
                                      const std::vector<std::string>& attrs,
                                      const std::vector<std::string>& meaningless) {
  AugmentationRecord rec;
  rec.raw_response = text;

  auto parsed = parse_json_object(text);
  if (!parsed) {
    rec.source = AugmentationSource::kPadded;
    for (const auto& a : attrs) rec.values.emplace_back(a, std::string(kPadMarker));
    return rec;
  }

  rec.source = AugmentationSource::kLlm;
  for (const auto& a : attrs) {
    std::string value;
    if (parsed->contains(a)) value = scalar_to_string((*parsed)[a]);
    if (is_meaningless(value, meaningless))
      rec.values.emplace_back(a, std::string(kPadMarker));
    else
      rec.values.emplace_back(a, trim(value));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Record persistence
// ---------------------------------------------------------------------------

void write_augmentation_records(
    const std::string& path,
    const std::unordered_map<std::string, AugmentationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write augmentation records: " + path);
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& [id, rec] : records) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const auto& rec = records.at(id);
    ojson j;
    j["id"] = rec.entity_id;
    j["source"] = std::string(to_string(rec.source));
    ojson values = ojson::object();
    for (const auto& [k, v] : rec.values) values[k] = v;
    j["values"] = values;
    j["raw_response"] = rec.raw_response;
    out << j.dump() << '\n';
  }
}

std::unordered_map<std::string, AugmentationRecord> read_augmentation_records(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open augmentation records: " + path);
  std::unordered_map<std::string, AugmentationRecord> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("values"))
      throw std::runtime_error("augmentation records " + path + " line " +
                               std::to_string(line_no) + ": malformed");
    AugmentationRecord rec;
    rec.entity_id = j["id"].get<std::string>();
    for (const auto& [k, v] : j["values"].items())
      rec.values.emplace_back(k, v.get<std::string>());
    rec.raw_response = j.value("raw_response", "");
    const std::string src = j.value("source", "padded");
    rec.source = src == "llm"     ? AugmentationSource::kLlm
                 : src == "cache" ? AugmentationSource::kCache
                                  : AugmentationSource::kPadded;
    out[rec.entity_id] = std::move(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

AugmentationCache::AugmentationCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("response"))
      continue;  // tolerate torn trailing writes
    entries_[j["key"].get<std::string>()] = j["response"].get<std::string>();
  }
}

std::string AugmentationCache::key(const std::string& entity_id,
                                   const std::vector<std::string>& attrs,
                                   const std::string& model) {
  // FNV-1a over the joined attribute list
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  for (const auto& a : attrs) mix(a);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return entity_id + "\x1f" + hex + "\x1f" + model;
}

std::optional<std::string> AugmentationCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void AugmentationCache::put(const std::string& key, const std::string& raw_response) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, raw_response);
  if (!inserted) return;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to augmentation cache: " + path_);
  ojson j;
  j["key"] = key;
  j["response"] = raw_response;
  out << j.dump() << '\n';
  out.flush();
}

size_t AugmentationCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// augment_dataset
// ---------------------------------------------------------------------------

namespace {

struct WorkItem {
  const Entity* entity = nullptr;
  const std::vector<std::string>* attrs = nullptr;
};

}  // namespace

AugmentStats augment_dataset(Dataset& d, const AttributePlan& plan, LlmClient& client,
                             AugmentationCache& cache, const AugmentOptions& opts) {
  std::vector<WorkItem> work;
  auto enqueue = [&](const std::vector<Entity>& entities) {
    for (const auto& e : entities) {
      const auto* attrs = plan.attributes_for(e.id);
      if (attrs != nullptr) work.push_back({&e, attrs});
    }
  };
  enqueue(d.left);
  enqueue(d.right);

  AugmentStats stats;
  stats.planned = work.size();

  std::mutex result_mutex;
  std::unordered_map<std::string, AugmentationRecord> results;
  std::atomic<size_t> next{0};
  std::atomic<size_t> from_llm{0}, from_cache{0}, gated_padded{0}, failures{0};

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= work.size()) break;
      const Entity& e = *work[i].entity;
      const std::vector<std::string>& attrs = *work[i].attrs;

      AugmentationRecord rec;
      if (opts.policy == AugmentPolicy::kGated && opts.selected.count(e.id) == 0) {
        rec.source = AugmentationSource::kPadded;
        for (const auto& a : attrs) rec.values.emplace_back(a, std::string(kPadMarker));
        gated_padded.fetch_add(1);
      } else {
        const std::string key = AugmentationCache::key(e.id, attrs, client.model_name());
        if (auto cached = cache.lookup(key)) {
          rec = parse_llm_response(*cached, attrs, opts.meaningless);
          rec.source = AugmentationSource::kCache;
          from_cache.fetch_add(1);
        } else {
          LlmRequest request{e.id, build_llm_request(e, attrs)};
          LlmResponse response = client.complete(request);
          if (response.ok) {
            cache.put(key, response.content);
            rec = parse_llm_response(response.content, attrs, opts.meaningless);
            rec.source = AugmentationSource::kLlm;
            from_llm.fetch_add(1);
          } else {
            rec.source = AugmentationSource::kPadded;
            rec.raw_response = response.error;
            for (const auto& a : attrs) rec.values.emplace_back(a, std::string(kPadMarker));
            failures.fetch_add(1);
          }
        }
      }
      rec.entity_id = e.id;
      std::lock_guard<std::mutex> lock(result_mutex);
      results[e.id] = std::move(rec);
    }
  };

  const int n_threads = std::max(1, std::min<int>(opts.concurrency,
                                                  static_cast<int>(work.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  stats.from_llm = from_llm.load();
  stats.from_cache = from_cache.load();
  stats.gated_padded = gated_padded.load();
  stats.failures = failures.load();
  for (auto& [id, rec] : results) d.augmentations[id] = std::move(rec);
  return stats;
}

}  // namespace gem
