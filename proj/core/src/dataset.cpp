#include "ssgait/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

#include "ssgait/errors.hpp"
#include "ssgait/png_io.hpp"

namespace fs = std::filesystem;

namespace ssgait {

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::NM: return "nm";
    case Condition::BG: return "bg";
    case Condition::CL: return "cl";
  }
  return "?";
}

std::optional<Condition> parse_condition(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "nm") return Condition::NM;
  if (t == "bg") return Condition::BG;
  if (t == "cl") return Condition::CL;
  return std::nullopt;
}

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::CasiaBLt: return "casia_b_lt";
    case Protocol::OuMvlp: return "ou_mvlp";
    case Protocol::Custom: return "custom";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(const std::string& s) {
  if (s == "casia_b_lt") return Protocol::CasiaBLt;
  if (s == "ou_mvlp") return Protocol::OuMvlp;
  if (s == "custom") return Protocol::Custom;
  return std::nullopt;
}

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

std::vector<fs::path> sorted_dirs(const fs::path& p) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> sorted_png_files(const fs::path& p) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      out.push_back(e.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> DatasetIndex::identities() const {
  std::set<int> s;
  for (const auto& q : sequences) s.insert(q.identity);
  return {s.begin(), s.end()};
}

std::vector<int> DatasetIndex::views() const {
  std::set<int> s;
  for (const auto& q : sequences) s.insert(q.view_deg);
  return {s.begin(), s.end()};
}

std::vector<Condition> DatasetIndex::conditions() const {
  std::set<int> s;
  for (const auto& q : sequences) s.insert(static_cast<int>(q.condition));
  std::vector<Condition> out;
  for (int c : s) out.push_back(static_cast<Condition>(c));
  return out;
}

DatasetIndex index_casia_b(const std::string& root) {
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root);
  DatasetIndex idx;

  for (const auto& subject_dir : sorted_dirs(root)) {
    const std::string subject = subject_dir.filename().string();
    if (!all_digits(subject)) {
      idx.warnings.push_back("malformed subject dir: " + subject_dir.string());
      continue;
    }
    const int identity = std::stoi(subject);

    for (const auto& cond_dir : sorted_dirs(subject_dir)) {
      const std::string cond_seq = cond_dir.filename().string();
      const auto dash = cond_seq.find('-');
      std::optional<Condition> cond;
      std::string seq_part;
      if (dash != std::string::npos) {
        cond = parse_condition(cond_seq.substr(0, dash));
        seq_part = cond_seq.substr(dash + 1);
      }
      if (!cond || !all_digits(seq_part)) {
        idx.warnings.push_back("malformed condition dir: " + cond_dir.string());
        continue;
      }
      const int seq_index = std::stoi(seq_part);

      for (const auto& view_dir : sorted_dirs(cond_dir)) {
        const std::string view = view_dir.filename().string();
        if (!all_digits(view)) {
          idx.warnings.push_back("malformed view dir: " + view_dir.string());
          continue;
        }
        GaitSequence seq;
        seq.identity = identity;
        seq.condition = *cond;
        seq.seq_index = seq_index;
        seq.view_deg = std::stoi(view);
        seq.frame_paths = sorted_png_files(view_dir);
        if (seq.frame_paths.empty()) {
          idx.warnings.push_back("no frames: " + view_dir.string());
          continue;
        }
        idx.sequences.push_back(std::move(seq));
      }
    }
  }
  return idx;
}

DatasetIndex index_ou_mvlp(const std::string& root) {
  if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root);
  DatasetIndex idx;

  for (const auto& subject_dir : sorted_dirs(root)) {
    const std::string subject = subject_dir.filename().string();
    if (!all_digits(subject)) {
      idx.warnings.push_back("malformed subject dir: " + subject_dir.string());
      continue;
    }
    const int identity = std::stoi(subject);

    for (const auto& vs_dir : sorted_dirs(subject_dir)) {
      const std::string view_seq = vs_dir.filename().string();
      const auto us = view_seq.find('_');
      std::string view_part = us == std::string::npos ? "" : view_seq.substr(0, us);
      std::string seq_part = us == std::string::npos ? "" : view_seq.substr(us + 1);
      if (!all_digits(view_part) || !all_digits(seq_part)) {
        idx.warnings.push_back("malformed view_seq dir: " + vs_dir.string());
        continue;
      }
      GaitSequence seq;
      seq.identity = identity;
      seq.condition = Condition::NM;
      seq.view_deg = std::stoi(view_part);
      seq.seq_index = std::stoi(seq_part);
      seq.frame_paths = sorted_png_files(vs_dir);
      if (seq.frame_paths.empty()) {
        idx.warnings.push_back("no frames: " + vs_dir.string());
        continue;
      }
      idx.sequences.push_back(std::move(seq));
    }
  }
  return idx;
}

std::vector<Silhouette> load_aligned_frames(const GaitSequence& seq,
                                            std::vector<std::string>* warnings) {
  std::vector<Silhouette> out;
  if (seq.frames_inline) {
    out.reserve(seq.frames_inline->size());
    size_t i = 0;
    for (const auto& raw : *seq.frames_inline) {
      if (raw.empty_mask()) {
        if (warnings) warnings->push_back("empty inline frame #" + std::to_string(i));
      } else {
        out.push_back(align_silhouette(raw));
      }
      ++i;
    }
    return out;
  }
  out.reserve(seq.frame_paths.size());
  for (const auto& path : seq.frame_paths) {
    Silhouette raw = read_png_gray(path);
    if (raw.empty_mask()) {
      if (warnings) warnings->push_back("empty frame skipped: " + path);
      continue;
    }
    out.push_back(align_silhouette(raw));
  }
  return out;
}

const std::vector<Silhouette>& FrameStore::aligned(size_t sequence_pos) {
  auto it = cache_.find(sequence_pos);
  if (it != cache_.end()) return it->second;
  const GaitSequence& seq = index_->sequences.at(sequence_pos);
  auto frames = load_aligned_frames(seq, &warnings_);
  return cache_.emplace(sequence_pos, std::move(frames)).first->second;
}

IdentitySplit protocol_split(const DatasetIndex& index, Protocol protocol,
                             const IdentitySplit* custom) {
  const std::vector<int> ids = index.identities();
  if (ids.empty()) throw NotEnoughData("protocol_split: empty index");

  IdentitySplit split;
  switch (protocol) {
    case Protocol::CasiaBLt: {
      constexpr size_t kTrain = 74;
      if (ids.size() <= kTrain) {
        throw InsufficientIdentities("casia_b_lt needs > 74 identities, have " +
                                     std::to_string(ids.size()));
      }
      split.train_ids.assign(ids.begin(), ids.begin() + kTrain);
      split.test_ids.assign(ids.begin() + kTrain, ids.end());
      break;
    }
    case Protocol::OuMvlp: {
      if (ids.size() < 2) {
        throw InsufficientIdentities("ou_mvlp needs at least 2 identities");
      }
      const size_t half = (ids.size() + 1) / 2;
      split.train_ids.assign(ids.begin(), ids.begin() + half);
      split.test_ids.assign(ids.begin() + half, ids.end());
      break;
    }
    case Protocol::Custom: {
      if (!custom) throw NotEnoughData("custom protocol requires explicit identity lists");
      for (int id : custom->train_ids) {
        if (!std::binary_search(ids.begin(), ids.end(), id)) {
          throw InsufficientIdentities("custom train identity not in index: " + std::to_string(id));
        }
      }
      for (int id : custom->test_ids) {
        if (!std::binary_search(ids.begin(), ids.end(), id)) {
          throw InsufficientIdentities("custom test identity not in index: " + std::to_string(id));
        }
      }
      split = *custom;
      break;
    }
  }
  return split;
}

}  // namespace ssgait
