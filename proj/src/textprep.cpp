#include "postscan/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "postscan/common.hpp"

namespace postscan::textprep {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// Applies `fn` to every maximal non-whitespace run; whitespace is copied through unchanged.
template <typename Fn>
std::string map_tokens(std::string_view text, Fn&& fn) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    out += fn(text.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Pred>
std::string erase_chars(std::string_view text, Pred&& drop) {
  std::string out;
  out.reserve(text.size());
  for (char c : text)
    if (!drop(c)) out.push_back(c);
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (to_lower(s[i]) != prefix[i]) return false;
  return true;
}

bool is_link(std::string_view token) {
  return starts_with_ci(token, "http://") || starts_with_ci(token, "https://") || starts_with_ci(token, "www.");
}

}  // namespace

std::shared_ptr<const StopwordSet> parse_stopwords(std::string_view content) {
  auto set = std::make_shared<StopwordSet>();
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    set->emplace(line);
  }
  return set;
}

std::shared_ptr<const StopwordSet> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open stopword list " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto content = ss.str();
  if (!is_valid_utf8(content)) throw DataError(path.string() + ": stopword list is not valid UTF-8");
  return parse_stopwords(content);
}

std::shared_ptr<const StopwordSet> default_stopwords() {
  static std::once_flag once;
  static std::shared_ptr<const StopwordSet> shared;
  std::call_once(once, [] { shared = load_stopwords(std::filesystem::path(data_dir()) / "stopwords_en.txt"); });
  return shared;
}

CleanConfig CleanConfig::caption_preset() {
  CleanConfig c;
  c.lowercase = true;
  c.strip_digits = true;
  c.strip_special = true;
  c.collapse_spaces = true;
  return c;
}

CleanConfig CleanConfig::post_preset(std::shared_ptr<const StopwordSet> stopwords) {
  CleanConfig c = caption_preset();
  c.strip_mentions = true;
  c.strip_hashmarks = true;
  c.strip_links = true;
  c.strip_stopwords = true;
  c.stopwords = stopwords ? std::move(stopwords) : default_stopwords();
  return c;
}

CleanConfig preset_by_name(std::string_view name, std::shared_ptr<const StopwordSet> stopwords) {
  if (name == "caption") return CleanConfig::caption_preset();
  if (name == "post") return CleanConfig::post_preset(std::move(stopwords));
  if (name == "none") return CleanConfig::none();
  throw std::invalid_argument("unknown clean preset '" + std::string(name) + "' (caption, post, none)");
}

std::string clean(std::string_view text, const CleanConfig& config) {
  std::string s(text);

  if (config.strip_links || config.strip_mentions) {
    s = map_tokens(s, [&](std::string_view token) -> std::string {
      std::string_view view = token;
      std::string normalized;
      if (config.strip_hashmarks || config.strip_digits) {
        normalized = erase_chars(token, [&](char c) {
          return (config.strip_hashmarks && c == '#') || (config.strip_digits && is_digit(c));
        });
        view = normalized;
      }
      if (config.strip_links && is_link(view)) return {};
      if (config.strip_mentions && !view.empty() && view.front() == '@') return {};
      return std::string(token);
    });
  }
  if (config.strip_hashmarks) s = erase_chars(s, [](char c) { return c == '#'; });
  if (config.lowercase) std::transform(s.begin(), s.end(), s.begin(), to_lower);
  if (config.strip_digits) s = erase_chars(s, is_digit);
  if (config.strip_special) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
      if (is_space(c))
        out.push_back(' ');
      else if (is_alnum(c))
        out.push_back(c);
    }
    s = std::move(out);
  }
  if (config.strip_stopwords && config.stopwords) {
    const auto& words = *config.stopwords;
    s = map_tokens(s, [&](std::string_view token) -> std::string {
      return words.count(std::string(token)) ? std::string() : std::string(token);
    });
  }
  if (config.collapse_spaces) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && is_space(s[i])) ++i;
      std::size_t j = i;
      while (j < s.size() && !is_space(s[j])) ++j;
      if (j > i) {
        if (!out.empty()) out.push_back(' ');
        out.append(s, i, j - i);
      }
      i = j;
    }
    s = std::move(out);
  }
  return s;
}

std::vector<std::string> tokenize(std::string_view cleaned) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    const auto j = cleaned.find(' ', i);
    const auto end = j == std::string_view::npos ? cleaned.size() : j;
    if (end > i) tokens.emplace_back(cleaned.substr(i, end - i));
    i = end + 1;
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency,
                       std::size_t total_tokens)
    : tokens_(std::move(tokens)), document_frequency_(std::move(document_frequency)), total_tokens_(total_tokens) {
  if (tokens_.size() != document_frequency_.size())
    throw std::invalid_argument("vocabulary token and frequency lists differ in length");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0 && !(tokens_[i - 1] < tokens_[i]))
      throw std::invalid_argument("vocabulary tokens must be unique and sorted");
    index_.emplace(tokens_[i], i);
  }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> docs, std::size_t min_df) {
  if (docs.empty()) throw DataError("cannot build a vocabulary from zero documents");
  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // token -> (df, occurrences)
  for (const auto& doc : docs) {
    std::vector<std::string_view> seen;
    for (const auto& tok : doc) {
      auto& entry = stats[tok];
      ++entry.second;
      if (std::find(seen.begin(), seen.end(), tok) == seen.end()) {
        seen.push_back(tok);
        ++entry.first;
      }
    }
  }
  std::vector<std::string> tokens;
  std::vector<std::size_t> df;
  std::size_t total = 0;
  for (const auto& [tok, st] : stats) {
    if (st.first < min_df) continue;
    tokens.push_back(tok);
    df.push_back(st.first);
    total += st.second;
  }
  if (tokens.empty()) throw DataError("vocabulary is empty after min_df filtering");
  return Vocabulary(std::move(tokens), std::move(df), total);
}

}  // namespace postscan::textprep
