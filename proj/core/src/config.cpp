#include "ssgait/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "ssgait/errors.hpp"

namespace ssgait {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long long to_ll(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
  return x;
}

int to_int(const std::string& v, const std::string& key) {
  const long long x = to_ll(v, key);
  if (x < -(1LL << 31) || x > (1LL << 31) - 1) {
    throw ConfigError("key '" + key + "': value out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an unsigned integer");
  }
  return x;
}

double to_double(const std::string& v, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
  return x;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean (true/false/1/0)");
}

struct Field {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

const std::vector<Field>& schema() {
  auto s = [](auto member) {
    return [member](RunConfig& c, const std::string& v) { c.*member = v; };
  };
  auto gs = [](auto member) {
    return [member](const RunConfig& c) { return c.*member; };
  };
  auto i = [](auto member) {
    return [member](RunConfig& c, const std::string& v) {
      c.*member = to_int(v, "int");
    };
  };
  auto gi = [](auto member) {
    return [member](const RunConfig& c) { return std::to_string(c.*member); };
  };
  auto d = [](auto member) {
    return [member](RunConfig& c, const std::string& v) {
      c.*member = to_double(v, "float");
    };
  };
  auto gd = [](auto member) {
    return [member](const RunConfig& c) { return fmt_double(c.*member); };
  };

  static const std::vector<Field> fields = {
      {"data_root", s(&RunConfig::data_root), gs(&RunConfig::data_root)},
      {"dataset_layout", s(&RunConfig::dataset_layout), gs(&RunConfig::dataset_layout)},
      {"protocol", s(&RunConfig::protocol), gs(&RunConfig::protocol)},
      {"train_count", i(&RunConfig::train_count), gi(&RunConfig::train_count)},
      {"scales", i(&RunConfig::scales), gi(&RunConfig::scales)},
      {"radius", i(&RunConfig::radius), gi(&RunConfig::radius)},
      {"c", i(&RunConfig::c), gi(&RunConfig::c)},
      {"d1", i(&RunConfig::d1), gi(&RunConfig::d1)},
      {"d2", i(&RunConfig::d2), gi(&RunConfig::d2)},
      {"cnn_mid", i(&RunConfig::cnn_mid), gi(&RunConfig::cnn_mid)},
      {"cnn_out", i(&RunConfig::cnn_out), gi(&RunConfig::cnn_out)},
      {"ablation", s(&RunConfig::ablation), gs(&RunConfig::ablation)},
      {"P", i(&RunConfig::P), gi(&RunConfig::P)},
      {"K", i(&RunConfig::K), gi(&RunConfig::K)},
      {"k", i(&RunConfig::k), gi(&RunConfig::k)},
      {"clip_len", i(&RunConfig::clip_len), gi(&RunConfig::clip_len)},
      {"lr", d(&RunConfig::lr), gd(&RunConfig::lr)},
      {"tau", d(&RunConfig::tau), gd(&RunConfig::tau)},
      {"margin", d(&RunConfig::margin), gd(&RunConfig::margin)},
      {"iterations", i(&RunConfig::iterations), gi(&RunConfig::iterations)},
      {"seed",
       [](RunConfig& c, const std::string& v) { c.seed = to_u64(v, "seed"); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"log_every", i(&RunConfig::log_every), gi(&RunConfig::log_every)},
      {"checkpoint_every", i(&RunConfig::checkpoint_every), gi(&RunConfig::checkpoint_every)},
      {"out", s(&RunConfig::out), gs(&RunConfig::out)},
      {"from_pretrained", s(&RunConfig::from_pretrained), gs(&RunConfig::from_pretrained)},
      {"checkpoint", s(&RunConfig::checkpoint), gs(&RunConfig::checkpoint)},
      {"exclude_identical_view",
       [](RunConfig& c, const std::string& v) {
         c.exclude_identical_view = to_bool(v, "exclude_identical_view");
       },
       [](const RunConfig& c) { return std::string(c.exclude_identical_view ? "true" : "false"); }},
      {"eval_protocol", s(&RunConfig::eval_protocol), gs(&RunConfig::eval_protocol)},
      {"synth_ids", i(&RunConfig::synth_ids), gi(&RunConfig::synth_ids)},
      {"synth_seqs", i(&RunConfig::synth_seqs), gi(&RunConfig::synth_seqs)},
      {"synth_frames", i(&RunConfig::synth_frames), gi(&RunConfig::synth_frames)},
      {"synth_views", s(&RunConfig::synth_views), gs(&RunConfig::synth_views)},
      {"synth_conditions", s(&RunConfig::synth_conditions), gs(&RunConfig::synth_conditions)},
  };
  return fields;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : schema()) {
    if (key == f.name) {
      try {
        f.set(*this, value);
      } catch (const ConfigError&) {
        throw ConfigError("key '" + key + "': bad value '" + value + "'");
      }
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

std::string RunConfig::resolved_text() const {
  std::ostringstream os;
  for (const Field& f : schema()) os << f.name << " = " << f.get(*this) << "\n";
  return os.str();
}

std::vector<int> parse_int_list(const std::string& csv, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_int(item, what));
  }
  if (out.empty()) throw ConfigError(what + ": empty list '" + csv + "'");
  return out;
}

std::vector<int> RunConfig::views_list() const {
  return parse_int_list(synth_views, "synth_views");
}

std::vector<Condition> RunConfig::conditions_list() const {
  std::vector<Condition> out;
  std::stringstream ss(synth_conditions);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto c = parse_condition(item);
    if (!c) throw ConfigError("synth_conditions: unknown condition '" + item + "'");
    out.push_back(*c);
  }
  if (out.empty()) throw ConfigError("synth_conditions is empty");
  return out;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(dataset_layout == "casia_b" || dataset_layout == "ou_mvlp",
          "dataset_layout must be casia_b or ou_mvlp");
  require(protocol == "casia_b_lt" || protocol == "ou_mvlp" || protocol == "first_n",
          "protocol must be casia_b_lt, ou_mvlp, or first_n");
  require(eval_protocol == "casia_b" || eval_protocol == "seq_split",
          "eval_protocol must be casia_b or seq_split");
  require(parse_ablation(ablation).has_value(),
          "ablation must be full, no_hpm, or no_mtb");
  require(train_count >= 0, "train_count must be >= 0");
  require(scales >= 1, "scales must be >= 1");
  require(radius >= 0, "radius must be >= 0");
  require(c >= 1 && d1 >= 1 && d2 >= 1, "c, d1, d2 must be >= 1");
  require(c == d1,
          "c must equal d1 (the per-stripe output maps are shared with the "
          "pre-training target branch)");
  require(cnn_mid >= 1 && cnn_out >= 1, "cnn widths must be >= 1");
  require(P >= 1 && K >= 1, "P and K must be >= 1");
  require(k >= 1, "k must be >= 1");
  require(clip_len >= 1, "clip_len must be >= 1");
  require(lr > 0.0, "lr must be > 0");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0,1]");
  require(margin > 0.0, "margin must be > 0");
  require(iterations >= 0, "iterations must be >= 0");
  require(log_every >= 1, "log_every must be >= 1");
  require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  require(synth_ids >= 1 && synth_seqs >= 1 && synth_frames >= 1,
          "synthetic counts must be >= 1");
  views_list();
  conditions_list();
}

BackboneConfig RunConfig::backbone_config() const {
  BackboneConfig bc;
  bc.scales = scales;
  bc.radius = radius;
  bc.stripe_dim = c;
  bc.embed_dim = d1;
  bc.cnn_mid = cnn_mid;
  bc.cnn_out = cnn_out;
  bc.ablation = *parse_ablation(ablation);
  return bc;
}

PretrainConfig RunConfig::pretrain_config() const {
  PretrainConfig pc;
  pc.iterations = iterations;
  pc.P = P;
  pc.K = K;
  pc.k = k;
  pc.d2 = d2;
  pc.lr = lr;
  pc.tau = tau;
  return pc;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig sc;
  sc.n_identities = synth_ids;
  sc.sequences_per_identity = synth_seqs;
  sc.views = views_list();
  sc.conditions = conditions_list();
  sc.frames_per_sequence = synth_frames;
  sc.seed = seed;
  return sc;
}

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace ssgait
