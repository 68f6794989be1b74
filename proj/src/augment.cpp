#include "postscan/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "postscan/common.hpp"

namespace postscan::augment {

namespace {

std::uint8_t clamp_channel(long v) { return static_cast<std::uint8_t>(std::clamp<long>(v, 0, 255)); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ImageBuffer rotate_quarter(const ImageBuffer& src) {
  const int w = src.width();
  const int h = src.height();
  ImageBuffer dst(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) dst.set_pixel(h - 1 - y, x, src.pixel(x, y));
  return dst;
}

template <typename Fn>
ImageBuffer map_channels(const ImageBuffer& src, Fn&& fn) {
  ImageBuffer dst = src;
  auto bytes = dst.bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = fn(bytes[i], static_cast<int>(i % 3));
  return dst;
}

std::vector<std::string> split_args(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = s.find(',', pos);
    out.emplace_back(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  const int v = std::stoi(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate(const AugmentOp& op) {
  std::visit(overloaded{
                 [](const FlipH&) {},
                 [](const FlipV&) {},
                 [](const Rotate90& r) {
                   if (r.quarter_turns < 1 || r.quarter_turns > 3)
                     throw std::invalid_argument("rotate90 takes 1..3 quarter turns");
                 },
                 [](const Crop& c) {
                   if (c.x < 0 || c.y < 0 || c.width <= 0 || c.height <= 0)
                     throw std::invalid_argument("crop needs a non-negative origin and positive size");
                 },
                 [](const Brightness& b) {
                   if (b.delta < -255 || b.delta > 255) throw std::invalid_argument("brightness delta outside -255..255");
                 },
                 [](const Contrast& c) {
                   if (!(c.factor >= 0.0) || !std::isfinite(c.factor))
                     throw std::invalid_argument("contrast factor must be finite and >= 0");
                 },
                 [](const ChannelShift& s) {
                   for (int d : s.delta)
                     if (d < -255 || d > 255) throw std::invalid_argument("channel shift outside -255..255");
                 },
             },
             op);
}

AugmentOp parse_op(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind = trim(text.substr(0, colon));
  const auto args = colon == std::string_view::npos ? std::vector<std::string>{} : split_args(text.substr(colon + 1));
  auto expect = [&](std::size_t n) {
    if (args.size() != n)
      throw std::invalid_argument("op '" + kind + "' takes " + std::to_string(n) + " argument(s)");
  };
  AugmentOp op;
  try {
    if (kind == "flip_h") {
      expect(0);
      op = FlipH{};
    } else if (kind == "flip_v") {
      expect(0);
      op = FlipV{};
    } else if (kind == "rotate90") {
      expect(1);
      op = Rotate90{to_int(trim(args[0]))};
    } else if (kind == "crop") {
      expect(4);
      op = Crop{to_int(trim(args[0])), to_int(trim(args[1])), to_int(trim(args[2])), to_int(trim(args[3]))};
    } else if (kind == "brightness") {
      expect(1);
      op = Brightness{to_int(trim(args[0]))};
    } else if (kind == "contrast") {
      expect(1);
      op = Contrast{to_double(trim(args[0]))};
    } else if (kind == "channel_shift") {
      expect(3);
      op = ChannelShift{{to_int(trim(args[0])), to_int(trim(args[1])), to_int(trim(args[2]))}};
    } else {
      throw std::invalid_argument("unknown augmentation op '" + kind + "'");
    }
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("argument out of range in op '" + std::string(text) + "'");
  }
  validate(op);
  return op;
}

std::string format_op(const AugmentOp& op) {
  return std::visit(
      overloaded{
          [](const FlipH&) { return std::string("flip_h"); },
          [](const FlipV&) { return std::string("flip_v"); },
          [](const Rotate90& r) { return "rotate90:" + std::to_string(r.quarter_turns); },
          [](const Crop& c) {
            return "crop:" + std::to_string(c.x) + "," + std::to_string(c.y) + "," + std::to_string(c.width) + "," +
                   std::to_string(c.height);
          },
          [](const Brightness& b) { return "brightness:" + std::to_string(b.delta); },
          [](const Contrast& c) { return "contrast:" + format_double(c.factor); },
          [](const ChannelShift& s) {
            return "channel_shift:" + std::to_string(s.delta[0]) + "," + std::to_string(s.delta[1]) + "," +
                   std::to_string(s.delta[2]);
          },
      },
      op);
}

ImageBuffer apply(const AugmentOp& op, const ImageBuffer& image) {
  validate(op);
  return std::visit(
      overloaded{
          [&](const FlipH&) {
            ImageBuffer dst(image.width(), image.height());
            for (int y = 0; y < image.height(); ++y)
              for (int x = 0; x < image.width(); ++x) dst.set_pixel(image.width() - 1 - x, y, image.pixel(x, y));
            return dst;
          },
          [&](const FlipV&) {
            ImageBuffer dst(image.width(), image.height());
            for (int y = 0; y < image.height(); ++y)
              for (int x = 0; x < image.width(); ++x) dst.set_pixel(x, image.height() - 1 - y, image.pixel(x, y));
            return dst;
          },
          [&](const Rotate90& r) {
            ImageBuffer dst = image;
            for (int i = 0; i < r.quarter_turns; ++i) dst = rotate_quarter(dst);
            return dst;
          },
          [&](const Crop& c) {
            if (static_cast<long>(c.x) + c.width > image.width() || static_cast<long>(c.y) + c.height > image.height())
              throw DataError("crop rectangle " + format_op(c) + " exceeds " + std::to_string(image.width()) + "x" +
                              std::to_string(image.height()) + " image");
            ImageBuffer dst(c.width, c.height);
            for (int y = 0; y < c.height; ++y)
              for (int x = 0; x < c.width; ++x) dst.set_pixel(x, y, image.pixel(c.x + x, c.y + y));
            return dst;
          },
          [&](const Brightness& b) {
            return map_channels(image, [&](std::uint8_t p, int) { return clamp_channel(long{p} + b.delta); });
          },
          [&](const Contrast& c) {
            return map_channels(image, [&](std::uint8_t p, int) {
              return clamp_channel(std::lround((static_cast<double>(p) - 128.0) * c.factor + 128.0));
            });
          },
          [&](const ChannelShift& s) {
            return map_channels(image, [&](std::uint8_t p, int ch) { return clamp_channel(long{p} + s.delta[ch]); });
          },
      },
      op);
}

ImageBuffer apply_all(std::span<const AugmentOp> ops, const ImageBuffer& image) {
  ImageBuffer out = image;
  for (const auto& op : ops) out = augment::apply(op, out);
  return out;
}

DictionaryTranslator::DictionaryTranslator(std::string pivot, Table forward, Table reverse)
    : pivot_(std::move(pivot)), forward_(std::move(forward)), reverse_(std::move(reverse)) {
  if (pivot_.empty() || pivot_ == "en") throw std::invalid_argument("dictionary translator needs a non-English pivot");
}

DictionaryTranslator::Table DictionaryTranslator::parse_table(std::string_view tsv, const std::string& name) {
  Table table;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < tsv.size()) {
    auto end = tsv.find('\n', pos);
    if (end == std::string_view::npos) end = tsv.size();
    auto line = tsv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw DataError(name + ": line " + std::to_string(line_no) + ": expected 'source<TAB>target'");
    auto key = trim(line.substr(0, tab));
    auto value = trim(line.substr(tab + 1));
    if (key.empty() || value.empty() || key.find(' ') != std::string::npos)
      throw DataError(name + ": line " + std::to_string(line_no) + ": source must be one word, target non-empty");
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    table[key] = value;
  }
  return table;
}

DictionaryTranslator DictionaryTranslator::from_files(std::string pivot, const std::filesystem::path& forward,
                                                      const std::filesystem::path& reverse) {
  return DictionaryTranslator(std::move(pivot), parse_table(read_file(forward), forward.string()),
                              parse_table(read_file(reverse), reverse.string()));
}

DictionaryTranslator DictionaryTranslator::shipped_pseudo_french() {
  const std::filesystem::path dir = data_dir();
  return from_files("fr", dir / "pseudo_fr.tsv", dir / "pseudo_fr_reverse.tsv");
}

bool DictionaryTranslator::supports(std::string_view source, std::string_view target) const {
  return (source == "en" && target == pivot_) || (source == pivot_ && target == "en");
}

std::string DictionaryTranslator::translate(std::string_view text, std::string_view source,
                                            std::string_view target) const {
  if (!supports(source, target))
    throw std::invalid_argument("dictionary translator does not support " + std::string(source) + "->" +
                                std::string(target));
  const Table& table = source == "en" ? forward_ : reverse_;
  std::string out;
  std::size_t i = 0;
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || static_cast<unsigned char>(c) >= 0x80;
  };
  while (i < text.size()) {
    if (is_ws(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_ws(text[j])) ++j;
    const auto token = text.substr(i, j - i);
    std::size_t b = 0;
    while (b < token.size() && !is_word(token[b])) ++b;
    std::size_t e = token.size();
    while (e > b && !is_word(token[e - 1])) --e;
    std::string core(token.substr(b, e - b));
    std::string key = core;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    out.append(token.substr(0, b));
    const auto it = core.empty() ? table.end() : table.find(key);
    out += it == table.end() ? core : it->second;
    out.append(token.substr(e));
    i = j;
  }
  return out;
}

std::string back_translate(std::string_view text, const Translator& translator, std::string_view pivot) {
  if (!translator.supports("en", pivot) || !translator.supports(pivot, "en"))
    throw std::invalid_argument("translator does not support en<->" + std::string(pivot));
  const auto there = translator.translate(text, "en", pivot);
  return trim(translator.translate(there, pivot, "en"));
}

corpus::CaptionedImage augment_captioned(const corpus::CaptionedImage& item, std::span<const AugmentOp> ops,
                                         const Translator& translator, std::string_view pivot) {
  corpus::CaptionedImage out;
  out.name = item.name;
  out.category = item.category;
  out.augmented = true;
  out.image = apply_all(ops, item.image);
  for (std::size_t i = 0; i < corpus::kCaptionsPerImage; ++i)
    out.captions[i] = back_translate(item.captions[i], translator, pivot);
  return out;
}

Recipe parse_recipe(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("augmentation recipe is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("augmentation recipe must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "version" && key != "seed" && key != "pivot" && key != "ops_per_image" && key != "ops")
      throw DataError("unknown recipe key '" + key + "'");
  if (doc.value("version", 0) != 1) throw DataError("augmentation recipe version must be 1");
  Recipe recipe;
  try {
    recipe.seed = doc.value("seed", std::uint64_t{0});
    recipe.pivot = doc.value("pivot", std::string("fr"));
    recipe.ops_per_image = doc.value("ops_per_image", std::size_t{1});
    if (doc.contains("ops")) {
      for (const auto& [cat, list] : doc.at("ops").items()) {
        auto& ops = recipe.ops[corpus::parse_category(cat)];
        for (const auto& spec : list) ops.push_back(parse_op(spec.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad augmentation recipe: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("bad augmentation recipe: ") + e.what());
  }
  return recipe;
}

Recipe load_recipe(const std::filesystem::path& path) { return parse_recipe(read_file(path)); }

std::vector<AugmentOp> ops_for(const Recipe& recipe, corpus::Category category, std::size_t index) {
  const auto it = recipe.ops.find(category);
  if (it == recipe.ops.end() || it->second.empty()) return {};
  const auto& pool = it->second;
  const auto order = corpus::shuffled_indices(pool.size(), mix_seed(recipe.seed, index));
  const auto k = std::min(recipe.ops_per_image, pool.size());
  std::vector<AugmentOp> ops;
  ops.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ops.push_back(pool[order[i]]);
  return ops;
}

std::vector<corpus::CaptionedImage> augment_batch_serial(std::span<const corpus::CaptionedImage> items,
                                                         const Recipe& recipe, const Translator& translator) {
  std::vector<corpus::CaptionedImage> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    out.push_back(augment_captioned(items[i], ops_for(recipe, items[i].category, i), translator, recipe.pivot));
  return out;
}

std::vector<corpus::CaptionedImage> augment_batch(std::span<const corpus::CaptionedImage> items, const Recipe& recipe,
                                                  const Translator& translator) {
  const auto n = static_cast<std::ptrdiff_t>(items.size());
  std::vector<corpus::CaptionedImage> out(items.size());
  std::vector<std::exception_ptr> errors(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = augment_captioned(items[k], ops_for(recipe, items[k].category, k), translator, recipe.pivot);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace postscan::augment
