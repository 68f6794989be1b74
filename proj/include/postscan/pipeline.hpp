#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postscan/captioner.hpp"
#include "postscan/common.hpp"
#include "postscan/image.hpp"
#include "postscan/nbayes.hpp"
#include "postscan/textprep.hpp"

namespace postscan::pipeline {

struct Post {
  std::string id;
  std::string text;
  std::optional<ImageBuffer> image;
  /// Where the image came from, if it was loaded from disk.
  std::optional<std::string> image_path;
  std::optional<Label> gold;
};

struct Verdict {
  std::string id;
  Label label = Label::Benign;
  double score = 0.0;
  /// Raw captioner output; present iff the post had an image.
  std::optional<std::string> generated_caption;
  /// clean(text) + " " + clean(caption); either part is dropped when it cleans to nothing.
  std::string fused_text;
  /// Raw post text, kept for audit.
  std::string text;
  std::optional<Label> gold;
  /// No in-vocabulary signal survived fusion; the label comes from the class priors.
  bool empty_input = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Any binary text classifier over cleaned tokens. Implementations must allow concurrent calls.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual nbayes::Prediction classify(std::span<const std::string> tokens) const = 0;
  virtual std::string id() const = 0;
};

class NbClassifier final : public TextClassifier {
 public:
  explicit NbClassifier(nbayes::NbModel model, double threshold = 0.5)
      : model_(std::move(model)), threshold_(threshold) {}
  nbayes::Prediction classify(std::span<const std::string> tokens) const override {
    return model_.predict(tokens, threshold_);
  }
  std::string id() const override;
  const nbayes::NbModel& model() const { return model_; }

 private:
  nbayes::NbModel model_;
  double threshold_;
};

struct FusionSettings {
  textprep::CleanConfig post_clean = textprep::CleanConfig::post_preset();
  textprep::CleanConfig caption_clean = textprep::CleanConfig::caption_preset();
};

/// Joins the non-empty parts with one space, post text first.
std::string fuse(const std::string& cleaned_text, const std::string& cleaned_caption);

/// Throws DataError (naming the post id) when the post has an image but `captioner` is null,
/// or when the post has neither text nor image.
Verdict classify_post(const Post& post, const captioner::Captioner* captioner, const TextClassifier& classifier,
                      const FusionSettings& settings);

/// Parallel over posts when the captioner is thread-safe; results are in input order and identical
/// to batch_classify_serial. The first failing post (lowest index) is rethrown.
std::vector<Verdict> batch_classify(std::span<const Post> posts, const captioner::Captioner* captioner,
                                    const TextClassifier& classifier, const FusionSettings& settings);
std::vector<Verdict> batch_classify_serial(std::span<const Post> posts, const captioner::Captioner* captioner,
                                           const TextClassifier& classifier, const FusionSettings& settings);

/// JSONL records {"id":..,"text":..,"image": optional path,"label": optional 0|1}. Image paths
/// are resolved against the posts file's directory.
std::vector<Post> load_posts(const std::filesystem::path& path);
std::vector<Post> parse_posts(std::string_view jsonl, const std::filesystem::path& base_dir);

/// One compact JSON object, keys in fixed order.
std::string verdict_json(const Verdict& verdict);
std::string verdicts_jsonl(std::span<const Verdict> verdicts);
std::vector<Verdict> parse_verdicts(std::string_view jsonl);

}  // namespace postscan::pipeline
