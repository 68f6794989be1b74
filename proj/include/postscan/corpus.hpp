#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "postscan/common.hpp"
#include "postscan/image.hpp"

namespace postscan::corpus {

struct LabeledText {
  std::string text;
  Label label = Label::Benign;
  std::string source;

  friend bool operator==(const LabeledText&, const LabeledText&) = default;
};

enum class Category { SchoolShooting, MassShooting, NonThreatening };

std::string_view category_name(Category category);
/// Accepts "school_shooting", "mass_shooting", "non_threatening".
Category parse_category(std::string_view name);

inline constexpr std::size_t kCaptionsPerImage = 5;
using CaptionSet = std::array<std::string, kCaptionsPerImage>;

struct CaptionedImage {
  std::string name;
  ImageBuffer image;
  CaptionSet captions;
  Category category = Category::NonThreatening;
  bool augmented = false;
};

struct CategorySelector {
  Category category;
  bool augmented;

  friend bool operator==(const CategorySelector&, const CategorySelector&) = default;
};

struct DatasetCombination {
  std::string name;
  std::vector<CategorySelector> selectors;
  std::vector<std::size_t> members;  // indices into the source corpus, ascending
  std::size_t images = 0;
  std::size_t captions = 0;
};

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

enum class TextFormat { Csv, Jsonl };

/// Picks the format from the file extension (.csv / .jsonl / .json).
TextFormat text_format_for(const std::filesystem::path& path);

std::vector<LabeledText> load_text_corpus(const std::filesystem::path& path, TextFormat format);
std::vector<LabeledText> parse_text_csv(std::string_view content, std::string_view source = "csv");
std::vector<LabeledText> parse_text_jsonl(std::string_view content, std::string_view source = "jsonl");

/// Reads `dir/manifest.jsonl`; each line is
/// {"image": "...ppm", "captions": "...txt", "category": "...", "augmented": bool}.
/// Paths are relative to `dir`.
std::vector<CaptionedImage> load_image_corpus(const std::filesystem::path& dir);

/// Five non-empty, pairwise-distinct lines. A single trailing newline is allowed.
CaptionSet parse_caption_file(std::string_view content, const std::string& file_name);

DatasetCombination combine(std::span<const CategorySelector> selectors, std::span<const CaptionedImage> corpus,
                           std::string name = {});

/// A combination computed from category sizes alone, without image data.
struct CategorySizes {
  std::size_t school = 0;
  std::size_t mass = 0;
  std::size_t augmented_school = 0;
  std::size_t augmented_mass = 0;
  std::size_t non_threatening = 0;

  std::size_t count(CategorySelector selector) const;
};

DatasetCombination combine_counts(std::span<const CategorySelector> selectors, const CategorySizes& sizes,
                                  std::string name = {});

struct NamedSelection {
  std::string name;
  std::vector<CategorySelector> selectors;
};

/// The seven category combinations used to train captioners.
std::vector<NamedSelection> standard_combinations();

/// Number of test items: N * fraction rounded half away from zero.
std::size_t test_count(std::size_t n, double test_fraction);

/// Seeded Fisher-Yates permutation of [0, n). Stable across platforms.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> items, const SplitSpec& spec) {
  const auto idx = split_indices(items.size(), spec);
  std::vector<T> train;
  std::vector<T> test;
  train.reserve(idx.train.size());
  test.reserve(idx.test.size());
  for (auto i : idx.train) train.push_back(items[i]);
  for (auto i : idx.test) test.push_back(items[i]);
  return {std::move(train), std::move(test)};
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& items, const SplitSpec& spec) {
  return split(std::span<const T>(items), spec);
}

}  // namespace postscan::corpus
