#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "postscan/corpus.hpp"
#include "postscan/image.hpp"

namespace postscan::augment {

struct FlipH {};
struct FlipV {};
/// Clockwise rotation by 1..3 quarter turns.
struct Rotate90 {
  int quarter_turns = 1;
};
struct Crop {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};
/// Adds delta in [-255, 255] to every channel, clamped.
struct Brightness {
  int delta = 0;
};
/// p -> clamp(round((p - 128) * factor + 128)), factor >= 0.
struct Contrast {
  double factor = 1.0;
};
struct ChannelShift {
  std::array<int, 3> delta{0, 0, 0};
};

using AugmentOp = std::variant<FlipH, FlipV, Rotate90, Crop, Brightness, Contrast, ChannelShift>;

/// Throws std::invalid_argument for parameters outside their ranges.
void validate(const AugmentOp& op);

/// Text form used by recipes and the CLI: "flip_h", "flip_v", "rotate90:1", "crop:x,y,w,h",
/// "brightness:50", "contrast:1.2", "channel_shift:10,-5,0".
AugmentOp parse_op(std::string_view text);
std::string format_op(const AugmentOp& op);

/// Throws DataError if a crop rectangle does not fit in `image`.
ImageBuffer apply(const AugmentOp& op, const ImageBuffer& image);
ImageBuffer apply_all(std::span<const AugmentOp> ops, const ImageBuffer& image);

/// Translation between language tags such as "en" and "fr". Implementations are immutable after
/// construction and safe to call concurrently.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual bool supports(std::string_view source, std::string_view target) const = 0;
  virtual std::string translate(std::string_view text, std::string_view source, std::string_view target) const = 0;
};

class IdentityTranslator final : public Translator {
 public:
  bool supports(std::string_view, std::string_view) const override { return true; }
  std::string translate(std::string_view text, std::string_view, std::string_view) const override {
    return std::string(text);
  }
};

/// Word-for-word dictionary translator between English and one pivot language.
///
/// Each whitespace token is split into leading punctuation, a core, and trailing punctuation; the
/// lowercased core is looked up in the table for the direction and replaced, punctuation kept.
/// Unknown words pass through unchanged. Forward and reverse tables are independent, so a round
/// trip can paraphrase (gun -> fusil -> weapon).
class DictionaryTranslator final : public Translator {
 public:
  using Table = std::unordered_map<std::string, std::string>;

  DictionaryTranslator(std::string pivot, Table forward, Table reverse);

  /// TSV files with `source<TAB>target` lines; '#' lines are comments.
  static DictionaryTranslator from_files(std::string pivot, const std::filesystem::path& forward,
                                         const std::filesystem::path& reverse);
  /// data/pseudo_fr.tsv and data/pseudo_fr_reverse.tsv.
  static DictionaryTranslator shipped_pseudo_french();
  static Table parse_table(std::string_view tsv, const std::string& name = "dictionary");

  const std::string& pivot() const { return pivot_; }
  bool supports(std::string_view source, std::string_view target) const override;
  std::string translate(std::string_view text, std::string_view source, std::string_view target) const override;

 private:
  std::string pivot_;
  Table forward_;
  Table reverse_;
};

/// translate(translate(text, en, pivot), pivot, en), trimmed. Throws std::invalid_argument when
/// the translator lacks either direction.
std::string back_translate(std::string_view text, const Translator& translator, std::string_view pivot);

/// Applies `ops` to the image and back-translates every caption. Category is kept, augmented set.
corpus::CaptionedImage augment_captioned(const corpus::CaptionedImage& item, std::span<const AugmentOp> ops,
                                         const Translator& translator, std::string_view pivot);

/// Which ops to apply per category. Each image draws `ops_per_image` distinct ops from its
/// category's list, in a seed-determined order.
struct Recipe {
  std::uint64_t seed = 0;
  std::string pivot = "fr";
  std::size_t ops_per_image = 1;
  std::map<corpus::Category, std::vector<AugmentOp>> ops;
};

/// JSON: {"version":1,"seed":..,"pivot":"fr","ops_per_image":2,
///        "ops":{"school_shooting":["flip_h","brightness:30"], ...}}
Recipe parse_recipe(std::string_view json_text);
Recipe load_recipe(const std::filesystem::path& path);

/// Ops chosen for item `index` of a batch. Depends only on (recipe, category, index).
std::vector<AugmentOp> ops_for(const Recipe& recipe, corpus::Category category, std::size_t index);

/// OpenMP over images. Output order matches input; bit-identical to augment_batch_serial.
std::vector<corpus::CaptionedImage> augment_batch(std::span<const corpus::CaptionedImage> items, const Recipe& recipe,
                                                  const Translator& translator);
std::vector<corpus::CaptionedImage> augment_batch_serial(std::span<const corpus::CaptionedImage> items,
                                                         const Recipe& recipe, const Translator& translator);

}  // namespace postscan::augment
