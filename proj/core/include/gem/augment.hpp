#pragma once

#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gem/data.hpp"
#include "gem/llm_client.hpp"

namespace gem {

enum class PlanMode { kSourceLevel, kInstanceLevel };

std::string_view to_string(PlanMode m);
std::optional<PlanMode> plan_mode_from_string(std::string_view s);

// The fixed attribute list used for the WDC product dataset.
extern const std::vector<std::string> kWdcProductAttributes;

// Which attributes to request per entity: one fixed list for a homogeneous
// source, or per-entity unions of the blocking candidates' keys.
struct AttributePlan {
  PlanMode mode = PlanMode::kSourceLevel;
  std::vector<std::string> fixed_list;
  std::map<std::string, std::vector<std::string>> per_entity;
  std::vector<std::string> skipped;  // instance mode, no candidates

  // nullptr when the entity has no plan entry (skipped).
  const std::vector<std::string>* attributes_for(const std::string& id) const;
};

AttributePlan select_attributes(const Dataset& d, PlanMode mode,
                                const std::vector<std::string>& fixed_list = {});

// Two messages: the fixed system instruction and the entity/attribute query.
std::vector<LlmMessage> build_llm_request(const Entity& e,
                                          const std::vector<std::string>& attrs);

// Patterns that mark an augmented value as meaningless (matched
// case-insensitively against the trimmed value).
extern const std::vector<std::string> kDefaultMeaninglessValues;

// Parses the LLM reply as a JSON object (one repair pass strips code fences /
// surrounding prose); missing, empty or meaningless values pad.
AugmentationRecord parse_llm_response(
    const std::string& text, const std::vector<std::string>& attrs,
    const std::vector<std::string>& meaningless = kDefaultMeaninglessValues);

// JSON-lines persistence for records: {"id","source","values","raw_response"}.
void write_augmentation_records(
    const std::string& path,
    const std::unordered_map<std::string, AugmentationRecord>& records);
std::unordered_map<std::string, AugmentationRecord> read_augmentation_records(
    const std::string& path);

// ---------------------------------------------------------------------------
// Response cache, keyed by (entity id, attribute-list hash, model name) and
// persisted as appended JSON lines of raw responses.
// ---------------------------------------------------------------------------
class AugmentationCache {
 public:
  AugmentationCache() = default;  // in-memory only
  explicit AugmentationCache(std::string path);

  static std::string key(const std::string& entity_id,
                         const std::vector<std::string>& attrs,
                         const std::string& model);

  std::optional<std::string> lookup(const std::string& key) const;
  void put(const std::string& key, const std::string& raw_response);
  size_t size() const;

 private:
  std::string path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Dataset augmentation
// ---------------------------------------------------------------------------
enum class AugmentPolicy { kAll, kGated };

std::optional<AugmentPolicy> augment_policy_from_string(std::string_view s);

struct AugmentOptions {
  AugmentPolicy policy = AugmentPolicy::kAll;
  std::set<std::string> selected;  // entities that may query the LLM (kGated)
  int concurrency = 1;
  std::vector<std::string> meaningless = kDefaultMeaninglessValues;
};

struct AugmentStats {
  size_t planned = 0;
  size_t from_llm = 0;
  size_t from_cache = 0;
  size_t gated_padded = 0;  // gated out, no call made
  size_t failures = 0;      // client exhausted retries, record padded

  double coverage() const {
    return planned == 0 ? 0.0
                        : static_cast<double>(from_llm + from_cache) /
                              static_cast<double>(planned);
  }
};

// Attaches one record per planned entity (both sources). Gated-out entities
// receive all-pad records so every prompt keeps the same slot structure; the
// cache is consulted before any client call.
AugmentStats augment_dataset(Dataset& d, const AttributePlan& plan, LlmClient& client,
                             AugmentationCache& cache, const AugmentOptions& opts = {});

}  // namespace gem
