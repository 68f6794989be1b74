#include "postscan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "postscan/common.hpp"

namespace postscan::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Value {
  std::string text;
  bool quoted = false;
};

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(std::string_view line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

Value parse_value(const std::string& raw, const std::string& where) {
  if (raw.empty()) throw DataError(where + "missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw DataError(where + "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        const char n = raw[++i];
        out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
      } else {
        out.push_back(raw[i]);
      }
    }
    return {out, true};
  }
  return {raw, false};
}

std::string as_string(const Value& v, const std::string& where) {
  if (!v.quoted) throw DataError(where + "expected a quoted string");
  return v.text;
}

double as_double(const Value& v, const std::string& where) {
  if (v.quoted) throw DataError(where + "expected a number");
  try {
    std::size_t used = 0;
    const double d = std::stod(v.text, &used);
    if (used == v.text.size()) return d;
  } catch (const std::exception&) {
  }
  throw DataError(where + "expected a number, got '" + v.text + "'");
}

long long as_integer(const Value& v, const std::string& where) {
  if (v.quoted) throw DataError(where + "expected an integer");
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v.text, &used);
    if (used == v.text.size()) return n;
  } catch (const std::exception&) {
  }
  throw DataError(where + "expected an integer, got '" + v.text + "'");
}

std::filesystem::path as_path(const Value& v, const std::string& where, const std::filesystem::path& base) {
  std::filesystem::path p = as_string(v, where);
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto where = "config line " + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw DataError(where + "expected 'key = value'");
    const auto key = trim(body.substr(0, eq));
    const auto value = parse_value(trim(body.substr(eq + 1)), where);
    if (!seen.insert(key).second) throw DataError(where + "duplicate key '" + key + "'");
    const auto at = where + key + ": ";
    if (key == "version") {
      cfg.version = static_cast<int>(as_integer(value, at));
    } else if (key == "classifier") {
      cfg.classifier = as_string(value, at);
    } else if (key == "model") {
      cfg.model = as_path(value, at, base_dir);
    } else if (key == "captioner") {
      cfg.captioner = as_string(value, at);
    } else if (key == "index") {
      cfg.index = as_path(value, at, base_dir);
    } else if (key == "captioner_command") {
      cfg.captioner_command = as_string(value, at);
    } else if (key == "post_preset") {
      cfg.post_preset = as_string(value, at);
    } else if (key == "caption_preset") {
      cfg.caption_preset = as_string(value, at);
    } else if (key == "stopwords") {
      cfg.stopwords = as_path(value, at, base_dir);
    } else if (key == "threshold") {
      cfg.threshold = as_double(value, at);
    } else if (key == "seed") {
      const auto s = as_integer(value, at);
      if (s < 0) throw DataError(at + "seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(as_integer(value, at));
    } else {
      throw DataError(where + "unknown key '" + key + "'");
    }
  }
  if (!seen.count("version")) throw DataError("config is missing the 'version' key");
  if (cfg.version != kConfigVersion)
    throw DataError("unsupported config version " + std::to_string(cfg.version) + " (expected " +
                    std::to_string(kConfigVersion) + ")");
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void validate(const PipelineConfig& cfg) {
  if (cfg.classifier != "nb") throw DataError("unknown classifier '" + cfg.classifier + "' (only 'nb' ships)");
  if (cfg.captioner != "knn" && cfg.captioner != "subprocess" && cfg.captioner != "none")
    throw DataError("unknown captioner '" + cfg.captioner + "' (knn, subprocess, none)");
  for (const auto& preset : {cfg.post_preset, cfg.caption_preset})
    if (preset != "post" && preset != "caption" && preset != "none")
      throw DataError("unknown clean preset '" + preset + "'");
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw DataError("threshold must lie in [0, 1]");
  if (cfg.threads < 0) throw DataError("threads must be >= 0");
  if (cfg.model.empty()) throw DataError("no classifier model configured");
  if (!std::filesystem::exists(cfg.model)) throw DataError("model file not found: " + cfg.model.string());
  if (cfg.captioner == "knn" && !cfg.index.empty() && !std::filesystem::exists(cfg.index))
    throw DataError("caption index not found: " + cfg.index.string());
  if (cfg.captioner == "subprocess" && cfg.captioner_command.empty())
    throw DataError("captioner 'subprocess' needs captioner_command");
  if (!cfg.stopwords.empty() && !std::filesystem::exists(cfg.stopwords))
    throw DataError("stopword list not found: " + cfg.stopwords.string());
}

}  // namespace postscan::config
