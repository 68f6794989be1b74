#include "postscan/pipeline.hpp"

#include <exception>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace postscan::pipeline {

std::string NbClassifier::id() const {
  return "nb/" + std::string(nbayes::variant_name(model_.variant())) + " alpha=" + format_double(model_.alpha()) +
         " vocab=" + std::to_string(model_.vocabulary().size());
}

std::string fuse(const std::string& cleaned_text, const std::string& cleaned_caption) {
  if (cleaned_caption.empty()) return cleaned_text;
  if (cleaned_text.empty()) return cleaned_caption;
  return cleaned_text + " " + cleaned_caption;
}

Verdict classify_post(const Post& post, const captioner::Captioner* captioner, const TextClassifier& classifier,
                      const FusionSettings& settings) {
  if (post.text.empty() && !post.image) throw DataError("post " + post.id + ": has neither text nor image");
  Verdict v;
  v.id = post.id;
  v.text = post.text;
  v.gold = post.gold;
  const auto cleaned_text = textprep::clean(post.text, settings.post_clean);
  std::string cleaned_caption;
  if (post.image) {
    if (!captioner) throw DataError("post " + post.id + ": has an image but no captioner is configured");
    try {
      v.generated_caption = captioner->caption(*post.image);
    } catch (const std::exception& e) {
      throw DataError("post " + post.id + ": captioning failed: " + e.what());
    }
    cleaned_caption = textprep::clean(*v.generated_caption, settings.caption_clean);
  }
  v.fused_text = fuse(cleaned_text, cleaned_caption);
  const auto tokens = textprep::tokenize(v.fused_text);
  const auto prediction = classifier.classify(tokens);
  v.label = prediction.label;
  v.score = prediction.score;
  v.empty_input = tokens.empty();
  if (const auto* nb = dynamic_cast<const NbClassifier*>(&classifier)) {
    bool any_known = false;
    for (const auto& t : tokens) any_known = any_known || nb->model().vocabulary().index_of(t).has_value();
    v.empty_input = !any_known;
  }
  return v;
}

std::vector<Verdict> batch_classify_serial(std::span<const Post> posts, const captioner::Captioner* captioner,
                                           const TextClassifier& classifier, const FusionSettings& settings) {
  std::vector<Verdict> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(classify_post(p, captioner, classifier, settings));
  return out;
}

std::vector<Verdict> batch_classify(std::span<const Post> posts, const captioner::Captioner* captioner,
                                    const TextClassifier& classifier, const FusionSettings& settings) {
  if (captioner && !captioner->thread_safe()) return batch_classify_serial(posts, captioner, classifier, settings);
  std::vector<Verdict> out(posts.size());
  std::vector<std::exception_ptr> errors(posts.size());
  const auto n = static_cast<std::ptrdiff_t>(posts.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = classify_post(posts[k], captioner, classifier, settings);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<Post> parse_posts(std::string_view jsonl, const std::filesystem::path& base_dir) {
  using nlohmann::json;
  std::vector<Post> posts;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto where = "posts line " + std::to_string(line_no) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      throw DataError(where + "malformed JSON record");
    }
    if (!rec.is_object()) throw DataError(where + "expected a JSON object");
    Post p;
    try {
      p.id = rec.contains("id") ? (rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump())
                                : std::to_string(line_no);
      p.text = rec.value("text", std::string());
      if (!is_valid_utf8(p.text)) throw DataError(where + "text is not valid UTF-8");
      if (rec.contains("image") && !rec["image"].is_null()) {
        const auto rel = rec["image"].get<std::string>();
        p.image_path = rel;
        p.image = load_image(base_dir / rel);
      }
      if (rec.contains("label") && !rec["label"].is_null()) {
        if (!rec["label"].is_number_integer()) throw DataError(where + "unknown label value " + rec["label"].dump());
        p.gold = label_from_int(rec["label"].get<long long>());
      }
    } catch (const json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      const std::string msg = e.what();
      throw DataError(msg.rfind("posts line", 0) == 0 ? msg : where + msg);
    }
    if (p.text.empty() && !p.image) throw DataError(where + "post needs text or an image");
    posts.push_back(std::move(p));
  }
  return posts;
}

std::vector<Post> load_posts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open posts file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_posts(ss.str(), path.parent_path());
}

std::string verdict_json(const Verdict& v) {
  nlohmann::ordered_json doc;
  doc["id"] = v.id;
  doc["label"] = label_index(v.label);
  doc["score"] = v.score;
  doc["generated_caption"] = v.generated_caption ? nlohmann::ordered_json(*v.generated_caption) : nullptr;
  doc["fused_text"] = v.fused_text;
  doc["text"] = v.text;
  doc["gold"] = v.gold ? nlohmann::ordered_json(label_index(*v.gold)) : nullptr;
  doc["empty_input"] = v.empty_input;
  return doc.dump();
}

std::string verdicts_jsonl(std::span<const Verdict> verdicts) {
  std::string out;
  for (const auto& v : verdicts) out += verdict_json(v) + "\n";
  return out;
}

std::vector<Verdict> parse_verdicts(std::string_view jsonl) {
  using nlohmann::json;
  std::vector<Verdict> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto rec = json::parse(line);
      Verdict v;
      v.id = rec.at("id").get<std::string>();
      v.label = label_from_int(rec.at("label").get<long long>());
      v.score = rec.at("score").get<double>();
      if (!rec.at("generated_caption").is_null()) v.generated_caption = rec["generated_caption"].get<std::string>();
      v.fused_text = rec.at("fused_text").get<std::string>();
      v.text = rec.value("text", std::string());
      if (rec.contains("gold") && !rec["gold"].is_null()) v.gold = label_from_int(rec["gold"].get<long long>());
      v.empty_input = rec.value("empty_input", false);
      out.push_back(std::move(v));
    } catch (const json::exception& e) {
      throw DataError("verdicts line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("verdicts line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace postscan::pipeline
