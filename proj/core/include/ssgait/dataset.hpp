#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssgait/silhouette.hpp"

namespace ssgait {

enum class Condition { NM, BG, CL };

const char* condition_name(Condition c);
std::optional<Condition> parse_condition(const std::string& s);

// Descriptor of one silhouette sequence. Frames stay on disk (frame_paths)
// until loaded; synthetic datasets may carry them inline instead.
struct GaitSequence {
  int identity = 0;
  int view_deg = 0;
  Condition condition = Condition::NM;
  int seq_index = 0;  // ordinal within (identity, condition), as in the layout

  std::vector<std::string> frame_paths;  // lexicographically sorted
  std::shared_ptr<const std::vector<Silhouette>> frames_inline;

  size_t frame_count() const {
    return frames_inline ? frames_inline->size() : frame_paths.size();
  }
};

struct DatasetIndex {
  std::vector<GaitSequence> sequences;
  std::vector<std::string> warnings;  // malformed-layout entries, one per skipped path

  std::vector<int> identities() const;
  std::vector<int> views() const;
  std::vector<Condition> conditions() const;
};

// Layout: root/<subject>/<cond>-<seq>/<view>/<frame>.png, cond in {nm,bg,cl}.
// Unparseable directory components become warnings, never hard failures.
DatasetIndex index_casia_b(const std::string& root);

// Layout: root/<subject>/<view>_<seq>/<frame>.png.
DatasetIndex index_ou_mvlp(const std::string& root);

// Loads every frame of a sequence (raw, divided by 255) and aligns it to
// 64x44. All-zero frames are skipped and reported through *warnings.
std::vector<Silhouette> load_aligned_frames(const GaitSequence& seq,
                                            std::vector<std::string>* warnings = nullptr);

// Memoizing loader used by the training and evaluation loops. Read-only after
// warm-up; keyed by position in the owning index.
class FrameStore {
 public:
  explicit FrameStore(const DatasetIndex& index) : index_(&index) {}

  const std::vector<Silhouette>& aligned(size_t sequence_pos);
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const DatasetIndex* index_;
  std::unordered_map<size_t, std::vector<Silhouette>> cache_;
  std::vector<std::string> warnings_;
};

enum class Protocol { CasiaBLt, OuMvlp, Custom };

const char* protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(const std::string& s);

struct IdentitySplit {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

// casia_b_lt: identities sorted ascending, first 74 train, rest test.
// ou_mvlp: first half train, rest test. custom: explicit lists echoed back.
IdentitySplit protocol_split(const DatasetIndex& index, Protocol protocol,
                             const IdentitySplit* custom = nullptr);

}  // namespace ssgait
