#include "postscan/captioner.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "postscan/common.hpp"
#include "postscan/textprep.hpp"

namespace postscan::captioner {

namespace {
constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "postscan-index";

IndexEntry make_entry(const corpus::CaptionedImage& item, int bins, const textprep::CleanConfig& preset) {
  IndexEntry e;
  e.name = item.name;
  e.features = featurize(item.image, bins);
  for (std::size_t i = 0; i < corpus::kCaptionsPerImage; ++i) {
    e.captions[i] = textprep::clean(item.captions[i], preset);
    if (e.captions[i].empty())
      throw DataError("caption " + std::to_string(i + 1) + " of '" + item.name + "' is empty after cleaning");
  }
  return e;
}
}  // namespace

std::string_view metric_name(Metric metric) { return metric == Metric::L2 ? "l2" : "chi2"; }

Metric parse_metric(std::string_view name) {
  if (name == "l2") return Metric::L2;
  if (name == "chi2") return Metric::Chi2;
  throw std::invalid_argument("unknown distance metric '" + std::string(name) + "' (l2, chi2)");
}

std::vector<double> featurize(const ImageBuffer& image, int bins) {
  if (bins <= 0 || bins > 256 || 256 % bins != 0) throw std::invalid_argument("bins must divide 256");
  if (image.empty()) throw DataError("cannot featurize a zero-area image");
  const int width = 256 / bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(3 * bins), 0);
  const auto bytes = image.bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto channel = i % 3;
    ++counts[channel * static_cast<std::size_t>(bins) + bytes[i] / width];
  }
  std::vector<double> features(counts.size());
  const double n = static_cast<double>(image.pixel_count());
  for (std::size_t i = 0; i < counts.size(); ++i) features[i] = static_cast<double>(counts[i]) / n;
  return features;
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) throw std::invalid_argument("feature vectors differ in length");
  double sum = 0.0;
  if (metric == Metric::L2) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double s = a[i] + b[i];
    if (s > 0.0) sum += (a[i] - b[i]) * (a[i] - b[i]) / s;
  }
  return 0.5 * sum;
}

HistogramIndex::HistogramIndex(int bins, Metric metric, std::vector<IndexEntry> entries)
    : bins_(bins), metric_(metric), entries_(std::move(entries)) {
  if (bins_ <= 0 || bins_ > 256 || 256 % bins_ != 0) throw std::invalid_argument("bins must divide 256");
  if (entries_.empty()) throw std::invalid_argument("histogram index needs at least one image");
  for (const auto& e : entries_)
    if (e.features.size() != static_cast<std::size_t>(3 * bins_))
      throw DataError("index entry '" + e.name + "' has the wrong feature length");
}

Neighbor HistogramIndex::nearest_serial(std::span<const double> features) const {
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double d = distance(entries_[i].features, features, metric_);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

Neighbor HistogramIndex::nearest(std::span<const double> features) const {
  std::vector<double> dist(entries_.size());
  const auto n = static_cast<std::ptrdiff_t>(entries_.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    dist[static_cast<std::size_t>(i)] = distance(entries_[static_cast<std::size_t>(i)].features, features, metric_);
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] < best.distance) best = {i, dist[i]};
  return best;
}

HistogramIndex build_index_serial(std::span<const corpus::CaptionedImage> corpus, int bins, Metric metric) {
  if (corpus.empty()) throw std::invalid_argument("cannot build an index from an empty corpus");
  const auto preset = textprep::CleanConfig::caption_preset();
  std::vector<IndexEntry> entries;
  entries.reserve(corpus.size());
  for (const auto& item : corpus) entries.push_back(make_entry(item, bins, preset));
  return HistogramIndex(bins, metric, std::move(entries));
}

HistogramIndex build_index(std::span<const corpus::CaptionedImage> corpus, int bins, Metric metric) {
  if (corpus.empty()) throw std::invalid_argument("cannot build an index from an empty corpus");
  if (bins <= 0 || bins > 256 || 256 % bins != 0) throw std::invalid_argument("bins must divide 256");
  const auto preset = textprep::CleanConfig::caption_preset();
  std::vector<IndexEntry> entries(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      entries[k] = make_entry(corpus[k], bins, preset);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return HistogramIndex(bins, metric, std::move(entries));
}

std::string caption(const HistogramIndex& index, const ImageBuffer& image) {
  const auto features = featurize(image, index.bins());
  return index.entry(index.nearest(features).index).captions[0];
}

std::string to_json(const HistogramIndex& index) {
  nlohmann::ordered_json doc;
  doc["format"] = kFormatName;
  doc["version"] = kFormatVersion;
  doc["bins"] = index.bins();
  doc["metric"] = std::string(metric_name(index.metric()));
  auto& entries = doc["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : index.entries()) {
    nlohmann::ordered_json rec;
    rec["name"] = e.name;
    rec["features"] = e.features;
    rec["captions"] = e.captions;
    entries.push_back(std::move(rec));
  }
  return doc.dump() + "\n";
}

HistogramIndex from_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("index file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatName) throw DataError("not a postscan caption index");
    if (doc.at("version").get<int>() != kFormatVersion)
      throw DataError("unsupported index version " + doc.at("version").dump());
    std::vector<IndexEntry> entries;
    for (const auto& rec : doc.at("entries")) {
      IndexEntry e;
      e.name = rec.at("name").get<std::string>();
      e.features = rec.at("features").get<std::vector<double>>();
      e.captions = rec.at("captions").get<corpus::CaptionSet>();
      entries.push_back(std::move(e));
    }
    return HistogramIndex(doc.at("bins").get<int>(), parse_metric(doc.at("metric").get<std::string>()),
                          std::move(entries));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed index file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed index file: ") + e.what());
  }
}

void save_index(const std::filesystem::path& path, const HistogramIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index " + path.string());
  out << to_json(index);
}

HistogramIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string IndexCaptioner::id() const {
  return "knn-histogram/v1 bins=" + std::to_string(index_.bins()) + " metric=" + std::string(metric_name(index_.metric())) +
         " images=" + std::to_string(index_.size());
}

SubprocessCaptioner::SubprocessCaptioner(std::string command) : command_(std::move(command)) {
  // A dead child would otherwise kill us with SIGPIPE on the next request.
  std::signal(SIGPIPE, SIG_IGN);
  std::string tmpl = (std::filesystem::temp_directory_path() / "postscan-cap-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("cannot create scratch directory for captioner");
  scratch_dir_ = tmpl;

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw std::runtime_error("pipe() failed");
  pid_ = ::fork();
  if (pid_ < 0) throw std::runtime_error("fork() failed");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = ::fdopen(in_pipe[1], "w");
  from_child_ = ::fdopen(out_pipe[0], "r");
  if (!to_child_ || !from_child_) throw std::runtime_error("fdopen() failed");
}

SubprocessCaptioner::~SubprocessCaptioner() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  std::error_code ec;
  std::filesystem::remove_all(scratch_dir_, ec);
}

std::string SubprocessCaptioner::caption_path(const std::filesystem::path& image_path) const {
  std::lock_guard lock(mutex_);
  const auto request = image_path.string();
  if (request.find('\n') != std::string::npos) throw std::invalid_argument("image path contains a newline");
  if (std::fprintf(to_child_, "%s\n", request.c_str()) < 0 || std::fflush(to_child_) != 0)
    throw std::runtime_error("external captioner '" + command_ + "' stopped accepting requests");
  std::string line;
  int c;
  while ((c = std::fgetc(from_child_)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
  if (c == EOF && line.empty()) throw std::runtime_error("external captioner '" + command_ + "' closed its output");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string SubprocessCaptioner::caption(const ImageBuffer& image) const {
  std::filesystem::path path;
  {
    std::lock_guard lock(mutex_);
    path = scratch_dir_ / ("req-" + std::to_string(requests_++) + ".ppm");
  }
  write_ppm(path, image);
  auto result = caption_path(path);
  std::error_code ec;
  std::filesystem::remove(path, ec);
  return result;
}

void serve(const Captioner& captioner, std::FILE* in, std::FILE* out) {
  std::string line;
  int c = 0;
  while (c != EOF) {
    line.clear();
    while ((c = std::fgetc(in)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    if (c == EOF && line.empty()) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string response;
    try {
      response = captioner.caption(load_image(line));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "caption request '%s' failed: %s\n", line.c_str(), e.what());
    }
    std::fprintf(out, "%s\n", response.c_str());
    std::fflush(out);
  }
}

}  // namespace postscan::captioner
