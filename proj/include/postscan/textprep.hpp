#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace postscan::textprep {

using StopwordSet = std::unordered_set<std::string>;

/// One lowercase token per line; blank lines and lines starting with '#' are skipped.
std::shared_ptr<const StopwordSet> load_stopwords(const std::filesystem::path& path);
std::shared_ptr<const StopwordSet> parse_stopwords(std::string_view content);
/// The list shipped under data/stopwords_en.txt (loaded once).
std::shared_ptr<const StopwordSet> default_stopwords();

struct CleanConfig {
  bool lowercase = false;
  bool strip_digits = false;
  bool strip_special = false;
  bool collapse_spaces = false;
  bool strip_mentions = false;
  bool strip_hashmarks = false;
  bool strip_links = false;
  bool strip_stopwords = false;
  std::shared_ptr<const StopwordSet> stopwords;

  /// Lowercase, digits, special characters, whitespace. No stopword removal.
  static CleanConfig caption_preset();
  /// Every rule on. Uses `stopwords` or the shipped list when null.
  static CleanConfig post_preset(std::shared_ptr<const StopwordSet> stopwords = nullptr);
  /// Every flag off.
  static CleanConfig none() { return {}; }
};

/// Parses "caption", "post" or "none".
CleanConfig preset_by_name(std::string_view name, std::shared_ptr<const StopwordSet> stopwords = nullptr);

/// Rules run in this order, each gated by its flag:
///   links -> @mentions -> '#' marks -> lowercase -> digits -> special characters
///   -> stopwords -> whitespace collapse and trim.
/// Link and mention rules drop the whole whitespace-delimited token. They look at the token as it
/// will read after '#' and digit removal, so the function stays idempotent ("#@joe" is a mention).
/// Special-character removal keeps [A-Za-z0-9 ] and turns other ASCII whitespace into spaces.
std::string clean(std::string_view text, const CleanConfig& config);

/// Splits on spaces; never yields empty tokens.
std::vector<std::string> tokenize(std::string_view cleaned);

std::string join_tokens(std::span<const std::string> tokens);

class Vocabulary {
 public:
  Vocabulary() = default;
  /// `tokens` must be strictly increasing; document_frequency parallel to it.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> document_frequency, std::size_t total_tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::optional<std::size_t> index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t document_frequency(std::size_t index) const { return document_frequency_.at(index); }
  const std::vector<std::size_t>& document_frequencies() const { return document_frequency_; }
  /// Occurrences of in-vocabulary tokens across the documents the vocabulary was built from.
  std::size_t total_tokens() const { return total_tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.document_frequency_ == b.document_frequency_ &&
           a.total_tokens_ == b.total_tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> document_frequency_;
  std::size_t total_tokens_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens with document frequency >= min_df, indexed in lexicographic order.
Vocabulary build_vocab(std::span<const std::vector<std::string>> docs, std::size_t min_df = 1);

}  // namespace postscan::textprep
