#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "postscan/corpus.hpp"
#include "postscan/image.hpp"

namespace postscan::captioner {

/// Image-to-sentence contract used by the pipeline.
class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const ImageBuffer& image) const = 0;
  virtual std::string id() const = 0;
  /// False when concurrent caption() calls must be serialized by the caller.
  virtual bool thread_safe() const { return true; }
};

enum class Metric { L2, Chi2 };
std::string_view metric_name(Metric metric);
Metric parse_metric(std::string_view name);

/// Concatenated R|G|B histograms with `bins` equal-width buckets per channel, each normalized by
/// pixel count. `bins` must divide 256.
std::vector<double> featurize(const ImageBuffer& image, int bins);

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

struct IndexEntry {
  std::string name;
  std::vector<double> features;
  corpus::CaptionSet captions;  // cleaned with the caption preset
};

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// k=1 retrieval over colour-histogram features. Immutable once built.
class HistogramIndex {
 public:
  HistogramIndex(int bins, Metric metric, std::vector<IndexEntry> entries);

  int bins() const { return bins_; }
  Metric metric() const { return metric_; }
  std::size_t size() const { return entries_.size(); }
  const IndexEntry& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<IndexEntry>& entries() const { return entries_; }

  /// Nearest entry; ties go to the lowest index. Distances are computed in parallel.
  Neighbor nearest(std::span<const double> features) const;
  Neighbor nearest_serial(std::span<const double> features) const;

 private:
  int bins_;
  Metric metric_;
  std::vector<IndexEntry> entries_;
};

/// Featurizes the corpus in parallel. Throws std::invalid_argument on an empty corpus.
HistogramIndex build_index(std::span<const corpus::CaptionedImage> corpus, int bins = 4, Metric metric = Metric::Chi2);
HistogramIndex build_index_serial(std::span<const corpus::CaptionedImage> corpus, int bins = 4,
                                  Metric metric = Metric::Chi2);

/// First caption of the nearest training image.
std::string caption(const HistogramIndex& index, const ImageBuffer& image);

/// Versioned JSON: {"format":"postscan-index","version":1,"bins":..,"metric":..,
/// "entries":[{"name":..,"features":[..],"captions":[5 strings]}]}.
std::string to_json(const HistogramIndex& index);
HistogramIndex from_json(std::string_view text);
void save_index(const std::filesystem::path& path, const HistogramIndex& index);
HistogramIndex load_index(const std::filesystem::path& path);

class IndexCaptioner final : public Captioner {
 public:
  explicit IndexCaptioner(HistogramIndex index) : index_(std::move(index)) {}
  std::string caption(const ImageBuffer& image) const override { return captioner::caption(index_, image); }
  std::string id() const override;
  const HistogramIndex& index() const { return index_; }

 private:
  HistogramIndex index_;
};

/// Adapter for an external captioner process speaking the line protocol: for each request the
/// adapter writes one image path line to the child's stdin and reads one caption line back.
/// Images are handed over as temporary PPM files. Calls are serialized internally.
class SubprocessCaptioner final : public Captioner {
 public:
  explicit SubprocessCaptioner(std::string command);
  ~SubprocessCaptioner() override;
  SubprocessCaptioner(const SubprocessCaptioner&) = delete;
  SubprocessCaptioner& operator=(const SubprocessCaptioner&) = delete;

  std::string caption(const ImageBuffer& image) const override;
  std::string caption_path(const std::filesystem::path& image_path) const;
  std::string id() const override { return "subprocess:" + command_; }
  bool thread_safe() const override { return false; }

 private:
  std::string command_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  std::filesystem::path scratch_dir_;
  mutable std::mutex mutex_;
  mutable std::size_t requests_ = 0;
};

/// Server side of the line protocol: reads image paths from `in`, writes one caption per line.
/// Unreadable images produce an empty line and a message on stderr.
void serve(const Captioner& captioner, std::FILE* in, std::FILE* out);

}  // namespace postscan::captioner
