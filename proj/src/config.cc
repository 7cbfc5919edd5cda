// Copyright 2026 The MASP Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "masp/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "masp/errors.h"

namespace masp {
namespace {

enum class ValueType { kInt, kDouble, kBool, kString, kIntList };

struct KeyDef {
  const char* section;
  const char* key;
  ValueType type;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t ParseInt(const std::string& raw) {
  const std::string s = Trim(raw);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected an integer, got '" + s + "'");
  }
  return v;
}

int ParseSmallInt(const std::string& raw) {
  const std::int64_t v = ParseInt(raw);
  if (v < INT32_MIN || v > INT32_MAX) {
    throw ParseError("integer out of range: " + raw);
  }
  return static_cast<int>(v);
}

double ParseReal(const std::string& raw) {
  const std::string s = Trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("expected a number, got '" + s + "'");
  }
  return v;
}

bool ParseBool(const std::string& raw) {
  const std::string s = Trim(raw);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("expected true or false, got '" + s + "'");
}

std::string ParseString(const std::string& raw) {
  const std::string s = Trim(raw);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
    throw ParseError("expected a quoted string, got '" + s + "'");
  }
  return s.substr(1, s.size() - 2);
}

std::vector<std::int64_t> ParseIntList(const std::string& raw) {
  const std::string s = Trim(raw);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw ParseError("expected a list like [1, 2], got '" + s + "'");
  }
  std::vector<std::int64_t> out;
  const std::string body = Trim(s.substr(1, s.size() - 2));
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseInt(item));
  return out;
}

std::string Quote(const std::string& s) { return "\"" + s + "\""; }

std::string IntListText(const std::vector<std::int64_t>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

std::string BoolText(bool b) { return b ? "true" : "false"; }

const std::vector<KeyDef>& Keys() {
  using T = TrainConfig;
  using S = const std::string&;
  static const std::vector<KeyDef> keys = {
      {"env", "name", ValueType::kString,
       [](const T& c) { return Quote(EnvKindName(c.env.kind)); },
       [](T& c, S v) { c.env.kind = ParseEnvKind(ParseString(v)); }},
      {"env", "width", ValueType::kInt,
       [](const T& c) { return std::to_string(c.env.width); },
       [](T& c, S v) { c.env.width = ParseSmallInt(v); }},
      {"env", "height", ValueType::kInt,
       [](const T& c) { return std::to_string(c.env.height); },
       [](T& c, S v) { c.env.height = ParseSmallInt(v); }},
      {"env", "wall_fraction", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.env.wall_fraction); },
       [](T& c, S v) { c.env.wall_fraction = ParseReal(v); }},
      {"env", "max_steps_target", ValueType::kInt,
       [](const T& c) { return std::to_string(c.env.max_steps_target); },
       [](T& c, S v) { c.env.max_steps_target = ParseSmallInt(v); }},
      {"env", "max_steps_selfplay", ValueType::kInt,
       [](const T& c) { return std::to_string(c.env.max_steps_selfplay); },
       [](T& c, S v) { c.env.max_steps_selfplay = ParseSmallInt(v); }},
      {"env", "success_epsilon", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.env.success_epsilon); },
       [](T& c, S v) { c.env.success_epsilon = ParseReal(v); }},
      {"env", "dt", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.env.acrobot_dt); },
       [](T& c, S v) { c.env.acrobot_dt = ParseReal(v); }},
      {"env", "clip_velocity", ValueType::kBool,
       [](const T& c) { return BoolText(c.env.acrobot_clip_velocity); },
       [](T& c, S v) { c.env.acrobot_clip_velocity = ParseBool(v); }},

      {"agents", "alice_feature_dim", ValueType::kInt,
       [](const T& c) { return std::to_string(c.alice_feature_dim); },
       [](T& c, S v) { c.alice_feature_dim = ParseSmallInt(v); }},
      {"agents", "alice_memory_feature_dim", ValueType::kInt,
       [](const T& c) { return std::to_string(c.alice_memory_feature_dim); },
       [](T& c, S v) { c.alice_memory_feature_dim = ParseSmallInt(v); }},
      {"agents", "bob_feature_dim", ValueType::kInt,
       [](const T& c) { return std::to_string(c.bob_feature_dim); },
       [](T& c, S v) { c.bob_feature_dim = ParseSmallInt(v); }},
      {"agents", "memory_dim", ValueType::kInt,
       [](const T& c) { return std::to_string(c.memory.memory_dim); },
       [](T& c, S v) { c.memory.memory_dim = ParseSmallInt(v); }},

      {"memory", "variant", ValueType::kString,
       [](const T& c) { return Quote(MemoryVariantName(c.memory.variant)); },
       [](T& c, S v) { c.memory.variant = ParseMemoryVariant(ParseString(v)); }},
      {"memory", "k", ValueType::kInt,
       [](const T& c) { return std::to_string(c.memory.k); },
       [](T& c, S v) { c.memory.k = ParseSmallInt(v); }},

      {"selfplay", "reward_scale", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.reward_scale); },
       [](T& c, S v) { c.reward_scale = ParseReal(v); }},

      {"training", "strategy", ValueType::kString,
       [](const T& c) { return Quote(StrategyName(c.strategy)); },
       [](T& c, S v) { c.strategy = ParseStrategy(ParseString(v)); }},
      {"training", "batch_size", ValueType::kInt,
       [](const T& c) { return std::to_string(c.batch_size); },
       [](T& c, S v) { c.batch_size = ParseSmallInt(v); }},
      {"training", "interleave_n", ValueType::kInt,
       [](const T& c) { return std::to_string(c.interleave_n); },
       [](T& c, S v) { c.interleave_n = ParseSmallInt(v); }},
      {"training", "total_episodes", ValueType::kInt,
       [](const T& c) { return std::to_string(c.total_episodes); },
       [](T& c, S v) { c.total_episodes = ParseInt(v); }},
      {"training", "lr", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.lr); },
       [](T& c, S v) { c.lr = ParseReal(v); }},
      {"training", "seeds", ValueType::kIntList,
       [](const T& c) { return IntListText(c.seeds); },
       [](T& c, S v) { c.seeds = ParseIntList(v); }},
      {"training", "avg_window", ValueType::kInt,
       [](const T& c) { return std::to_string(c.avg_window); },
       [](T& c, S v) { c.avg_window = ParseSmallInt(v); }},
      {"training", "entropy_coef", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.entropy_coef); },
       [](T& c, S v) { c.entropy_coef = ParseReal(v); }},
      {"training", "value_coef", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.value_coef); },
       [](T& c, S v) { c.value_coef = ParseReal(v); }},
      {"training", "grad_clip", ValueType::kDouble,
       [](const T& c) { return FormatDouble(c.grad_clip); },
       [](T& c, S v) { c.grad_clip = ParseReal(v); }},
      {"training", "checkpoint_every", ValueType::kInt,
       [](const T& c) { return std::to_string(c.checkpoint_every); },
       [](T& c, S v) { c.checkpoint_every = ParseSmallInt(v); }},
      {"training", "parallelism", ValueType::kInt,
       [](const T& c) { return std::to_string(c.parallelism); },
       [](T& c, S v) { c.parallelism = ParseSmallInt(v); }},
      {"training", "wall_clock", ValueType::kBool,
       [](const T& c) { return BoolText(c.wall_clock); },
       [](T& c, S v) { c.wall_clock = ParseBool(v); }},

      {"run", "out", ValueType::kString,
       [](const T& c) { return Quote(c.out_dir); },
       [](T& c, S v) { c.out_dir = ParseString(v); }},
      {"run", "parallel_seeds", ValueType::kInt,
       [](const T& c) { return std::to_string(c.parallel_seeds); },
       [](T& c, S v) { c.parallel_seeds = ParseSmallInt(v); }},
  };
  return keys;
}

const KeyDef* FindKey(const std::string& section, const std::string& key) {
  for (const KeyDef& k : Keys()) {
    if (section == k.section && key == k.key) return &k;
  }
  return nullptr;
}

// Removes a trailing '#' comment that is not inside a quoted string.
std::string StripComment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

struct Entry {
  int line;
  std::string section;
  std::string key;
  std::string value;
};

}  // namespace

std::string StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kNone:
      return "none";
    case Strategy::kSelfPlay:
      return "selfplay";
    case Strategy::kMemorySelfPlay:
      return "memory_selfplay";
  }
  return "unknown";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "none") return Strategy::kNone;
  if (name == "selfplay") return Strategy::kSelfPlay;
  if (name == "memory_selfplay") return Strategy::kMemorySelfPlay;
  throw ParseError("unknown strategy '" + name +
                   "' (expected none, selfplay or memory_selfplay)");
}

std::string FormatDouble(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ContractViolation("FormatDouble failed");
  return std::string(buf, ptr);
}

TrainConfig TrainConfig::Defaults(EnvKind kind) {
  TrainConfig c;
  c.env = EnvConfig::Defaults(kind);
  if (kind == EnvKind::kGridMaze) {
    c.alice_feature_dim = 50;
    c.alice_memory_feature_dim = 50;
    c.bob_feature_dim = 50;
    c.memory.memory_dim = 50;
    c.batch_size = 256;
    c.interleave_n = 4;
    c.total_episodes = 700000;
    c.seeds = {1, 2, 3, 4, 5};
    c.avg_window = 10000;
  } else {
    c.alice_feature_dim = 10;
    c.alice_memory_feature_dim = 10;
    c.bob_feature_dim = 10;
    c.memory.memory_dim = 10;
    c.batch_size = 1;
    c.interleave_n = 100;
    c.total_episodes = 50000;
    c.seeds = {1, 2, 3};
    c.avg_window = 2000;
  }
  return c;
}

void TrainConfig::Validate() const {
  MASP_CHECK(env.max_steps_target >= 1, "env.max_steps_target must be >= 1");
  MASP_CHECK(env.max_steps_selfplay >= env.max_steps_target,
             "env.max_steps_selfplay must be >= env.max_steps_target");
  MASP_CHECK(env.max_steps_selfplay >= 2, "env.max_steps_selfplay must be >= 2");
  MASP_CHECK(env.success_epsilon > 0.0, "env.success_epsilon must be > 0");
  MASP_CHECK(env.width >= 2 && env.height >= 1, "env maze too small");
  MASP_CHECK(alice_feature_dim >= 1 && alice_memory_feature_dim >= 1 &&
                 bob_feature_dim >= 1,
             "feature dims must be positive");
  MASP_CHECK(memory.memory_dim >= 1, "agents.memory_dim must be positive");
  MASP_CHECK(memory.k >= 1, "memory.k must be positive");
  MASP_CHECK(reward_scale > 0.0, "selfplay.reward_scale must be > 0");
  MASP_CHECK(batch_size >= 1, "training.batch_size must be positive");
  MASP_CHECK(interleave_n >= 1, "training.interleave_n must be positive");
  MASP_CHECK(total_episodes >= 1, "training.total_episodes must be positive");
  MASP_CHECK(lr > 0.0, "training.lr must be positive");
  MASP_CHECK(!seeds.empty(), "training.seeds must not be empty");
  MASP_CHECK(avg_window >= 1, "training.avg_window must be positive");
  MASP_CHECK(entropy_coef >= 0.0, "training.entropy_coef must be >= 0");
  MASP_CHECK(checkpoint_every >= 0, "training.checkpoint_every must be >= 0");
  MASP_CHECK(parallelism >= 1, "training.parallelism must be positive");
  MASP_CHECK(parallel_seeds >= 1, "run.parallel_seeds must be positive");
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return SerializeConfig(a) == SerializeConfig(b);
}

TrainConfig ParseConfigText(const std::string& text,
                            std::optional<EnvKind> env_override) {
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(StripComment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError("line " + std::to_string(line_no) +
                         ": malformed section header '" + line + "'");
      }
      section = Trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const KeyDef& k : Keys()) known = known || section == k.section;
      if (!known) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    if (section.empty()) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": key outside of any section");
    }
    Entry e{line_no, section, Trim(line.substr(0, eq)),
            Trim(line.substr(eq + 1))};
    if (FindKey(e.section, e.key) == nullptr) {
      throw ParseError("line " + std::to_string(line_no) + ": unknown key '" +
                       e.section + "." + e.key + "'");
    }
    entries.push_back(std::move(e));
  }

  EnvKind kind = EnvKind::kGridMaze;
  if (env_override) {
    kind = *env_override;
  } else {
    for (const Entry& e : entries) {
      if (e.section == "env" && e.key == "name") {
        try {
          kind = ParseEnvKind(ParseString(e.value));
        } catch (const ParseError& err) {
          throw ParseError("line " + std::to_string(e.line) + ": env.name: " +
                           err.what());
        }
      }
    }
  }
  TrainConfig config = TrainConfig::Defaults(kind);
  for (const Entry& e : entries) {
    if (env_override && e.section == "env" && e.key == "name") continue;
    try {
      FindKey(e.section, e.key)->set(config, e.value);
    } catch (const ParseError& err) {
      throw ParseError("line " + std::to_string(e.line) + ": " + e.section +
                       "." + e.key + ": " + err.what());
    }
  }
  config.env.kind = kind;
  return config;
}

TrainConfig LoadConfigFile(const std::string& path,
                           std::optional<EnvKind> env_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfigText(ss.str(), env_override);
  } catch (const ParseError& err) {
    throw ParseError(path + ": " + err.what());
  }
}

std::string SerializeConfig(const TrainConfig& config) {
  std::string out;
  std::string section;
  for (const KeyDef& k : Keys()) {
    if (section != k.section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += std::string(k.key) + " = " + k.get(config) + "\n";
  }
  return out;
}

void ApplyConfigOverride(TrainConfig& config, const std::string& dotted_key,
                         const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw ParseError("override key '" + dotted_key + "' must be section.key");
  }
  const KeyDef* k =
      FindKey(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (k == nullptr) throw ParseError("unknown key '" + dotted_key + "'");
  // Shells strip quotes, so bare words are accepted for string keys.
  std::string v = Trim(value);
  if (k->type == ValueType::kString && (v.empty() || v.front() != '"')) {
    v = "\"" + v + "\"";
  }
  try {
    k->set(config, v);
  } catch (const ParseError& err) {
    throw ParseError(dotted_key + ": " + err.what());
  }
}

}  // namespace masp
