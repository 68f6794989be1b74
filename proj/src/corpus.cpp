#include "postscan/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace postscan::corpus {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

LabeledText make_record(long long label, std::string text, std::size_t line, std::string_view source) {
  if (!is_valid_utf8(text)) throw DataError(at_line(line) + "text is not valid UTF-8");
  if (trim(text).empty()) throw DataError(at_line(line) + "empty text");
  try {
    return LabeledText{std::move(text), label_from_int(label), std::string(source)};
  } catch (const DataError& e) {
    throw DataError(at_line(line) + e.what());
  }
}

long long parse_label_field(const std::string& raw, std::size_t line) {
  const auto field = trim(raw);
  if (field.empty()) throw DataError(at_line(line) + "missing label");
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(field, &used);
  } catch (const std::exception&) {
    throw DataError(at_line(line) + "unknown label value '" + field + "'");
  }
  if (used != field.size()) throw DataError(at_line(line) + "unknown label value '" + field + "'");
  return value;
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC 4180 style: quoted fields may contain commas, doubled quotes, and newlines.
std::vector<CsvRecord> parse_csv(std::string_view content) {
  std::vector<CsvRecord> records;
  std::size_t i = 0;
  std::size_t line = 1;
  const std::size_t n = content.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool in_quotes = false;
    bool quoted_field = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes) throw DataError(at_line(rec.line) + "unterminated quoted field");
        rec.fields.push_back(std::move(field));
        break;
      }
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty() || quoted_field)
            throw DataError(at_line(line) + "unexpected quote inside unquoted field");
          in_quotes = true;
          quoted_field = true;
          ++i;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          quoted_field = false;
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          rec.fields.push_back(std::move(field));
          ++line;
          ++i;
          done = true;
          break;
        default:
          if (quoted_field) throw DataError(at_line(line) + "characters after closing quote");
          field.push_back(c);
          ++i;
      }
    }
    const bool blank = rec.fields.size() == 1 && trim(rec.fields[0]).empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::string_view category_name(Category category) {
  switch (category) {
    case Category::SchoolShooting:
      return "school_shooting";
    case Category::MassShooting:
      return "mass_shooting";
    case Category::NonThreatening:
      return "non_threatening";
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  if (name == "school_shooting") return Category::SchoolShooting;
  if (name == "mass_shooting") return Category::MassShooting;
  if (name == "non_threatening") return Category::NonThreatening;
  throw DataError("unknown image category '" + std::string(name) + "'");
}

TextFormat text_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return TextFormat::Csv;
  if (ext == ".jsonl" || ext == ".json") return TextFormat::Jsonl;
  throw DataError("cannot infer text corpus format from '" + path.string() + "' (use .csv or .jsonl)");
}

std::vector<LabeledText> parse_text_csv(std::string_view content, std::string_view source) {
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  const auto records = parse_csv(content);
  std::vector<LabeledText> out;
  if (records.empty()) return out;
  const auto& header = records.front();
  if (header.fields.size() != 2 || trim(header.fields[0]) != "label" || trim(header.fields[1]) != "text")
    throw DataError(at_line(header.line) + "expected header 'label,text'");
  out.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != 2)
      throw DataError(at_line(rec.line) + "expected 2 fields, found " + std::to_string(rec.fields.size()));
    out.push_back(make_record(parse_label_field(rec.fields[0], rec.line), rec.fields[1], rec.line, source));
  }
  return out;
}

std::vector<LabeledText> parse_text_jsonl(std::string_view content, std::string_view source) {
  std::vector<LabeledText> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(at_line(line_no) + "malformed JSON record");
    }
    if (!rec.is_object() || !rec.contains("label") || !rec.contains("text"))
      throw DataError(at_line(line_no) + "record needs 'label' and 'text' fields");
    const auto& label = rec["label"];
    if (!label.is_number_integer()) throw DataError(at_line(line_no) + "unknown label value " + label.dump());
    if (!rec["text"].is_string()) throw DataError(at_line(line_no) + "'text' must be a string");
    out.push_back(make_record(label.get<long long>(), rec["text"].get<std::string>(), line_no, source));
  }
  return out;
}

std::vector<LabeledText> load_text_corpus(const std::filesystem::path& path, TextFormat format) {
  const auto content = read_file(path);
  try {
    return format == TextFormat::Csv ? parse_text_csv(content, path.filename().string())
                                     : parse_text_jsonl(content, path.filename().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

CaptionSet parse_caption_file(std::string_view content, const std::string& file_name) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = end + 1;
  }
  if (lines.size() != kCaptionsPerImage)
    throw DataError(file_name + ": expected exactly 5 caption lines, found " + std::to_string(lines.size()));
  CaptionSet captions;
  for (std::size_t i = 0; i < kCaptionsPerImage; ++i) {
    if (trim(lines[i]).empty()) throw DataError(file_name + ": caption " + std::to_string(i + 1) + " is empty");
    if (!is_valid_utf8(lines[i])) throw DataError(file_name + ": caption " + std::to_string(i + 1) + " is not UTF-8");
    captions[i] = lines[i];
  }
  std::set<std::string> distinct(captions.begin(), captions.end());
  if (distinct.size() != kCaptionsPerImage) throw DataError(file_name + ": captions must be pairwise distinct");
  return captions;
}

std::vector<CaptionedImage> load_image_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.jsonl";
  const auto content = read_file(manifest_path);
  std::vector<CaptionedImage> out;
  std::istringstream lines(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = manifest_path.string() + ":" + std::to_string(line_no) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      throw DataError(where + "malformed JSON record");
    }
    if (!rec.is_object() || !rec.contains("image") || !rec.contains("captions") || !rec.contains("category"))
      throw DataError(where + "record needs 'image', 'captions' and 'category'");
    CaptionedImage item;
    try {
      const auto image_rel = rec.at("image").get<std::string>();
      const auto captions_rel = rec.at("captions").get<std::string>();
      item.name = image_rel;
      item.category = parse_category(rec.at("category").get<std::string>());
      item.augmented = rec.value("augmented", false);
      item.image = load_image(dir / image_rel);
      const auto caption_path = dir / captions_rel;
      item.captions = parse_caption_file(read_file(caption_path), caption_path.string());
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::size_t CategorySizes::count(CategorySelector selector) const {
  switch (selector.category) {
    case Category::SchoolShooting:
      return selector.augmented ? augmented_school : school;
    case Category::MassShooting:
      return selector.augmented ? augmented_mass : mass;
    case Category::NonThreatening:
      return selector.augmented ? 0 : non_threatening;
  }
  return 0;
}

namespace {

std::vector<CategorySelector> unique_selectors(std::span<const CategorySelector> selectors) {
  if (selectors.empty()) throw std::invalid_argument("combination needs at least one category selector");
  std::vector<CategorySelector> out;
  for (const auto& s : selectors)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

std::string selector_label(CategorySelector s) {
  return std::string(s.augmented ? "augmented " : "") + std::string(category_name(s.category));
}

}  // namespace

DatasetCombination combine(std::span<const CategorySelector> selectors, std::span<const CaptionedImage> corpus,
                           std::string name) {
  DatasetCombination combo;
  combo.name = std::move(name);
  combo.selectors = unique_selectors(selectors);
  for (const auto& s : combo.selectors) {
    const bool covered = std::any_of(corpus.begin(), corpus.end(), [&](const CaptionedImage& img) {
      return img.category == s.category && img.augmented == s.augmented;
    });
    if (!covered) throw DataError("corpus has no images for selector '" + selector_label(s) + "'");
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const CategorySelector key{corpus[i].category, corpus[i].augmented};
    if (std::find(combo.selectors.begin(), combo.selectors.end(), key) != combo.selectors.end())
      combo.members.push_back(i);
  }
  combo.images = combo.members.size();
  combo.captions = combo.images * kCaptionsPerImage;
  return combo;
}

DatasetCombination combine_counts(std::span<const CategorySelector> selectors, const CategorySizes& sizes,
                                  std::string name) {
  DatasetCombination combo;
  combo.name = std::move(name);
  combo.selectors = unique_selectors(selectors);
  for (const auto& s : combo.selectors) {
    const auto n = sizes.count(s);
    if (n == 0) throw DataError("no images for selector '" + selector_label(s) + "'");
    combo.images += n;
  }
  combo.captions = combo.images * kCaptionsPerImage;
  return combo;
}

std::vector<NamedSelection> standard_combinations() {
  constexpr CategorySelector school{Category::SchoolShooting, false};
  constexpr CategorySelector mass{Category::MassShooting, false};
  constexpr CategorySelector aug_school{Category::SchoolShooting, true};
  constexpr CategorySelector aug_mass{Category::MassShooting, true};
  constexpr CategorySelector benign{Category::NonThreatening, false};
  return {
      {"unedited mass shootings + non-threatening", {mass, benign}},
      {"unedited school shootings + non-threatening", {school, benign}},
      {"unedited school + unedited mass + non-threatening", {school, mass, benign}},
      {"augmented mass shootings + non-threatening", {aug_mass, benign}},
      {"augmented school shootings + non-threatening", {aug_school, benign}},
      {"augmented school + augmented mass + non-threatening", {aug_school, aug_mass, benign}},
      {"all unedited + all augmented + non-threatening", {school, mass, aug_school, aug_mass, benign}},
  };
}

std::size_t test_count(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with rejection sampling; std::uniform_int_distribution is not portable across stdlibs.
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(r % bound)]);
  }
  return idx;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  const auto n_test = test_count(n, spec.test_fraction);
  if (n < 2) throw std::invalid_argument("split needs at least 2 items");
  auto order = shuffled_indices(n, spec.seed);
  SplitIndices out;
  out.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));
  out.test.assign(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
  return out;
}

}  // namespace postscan::corpus
