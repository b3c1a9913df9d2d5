#pragma once

#include "refmine/ingest.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace refmine {

struct PostprocessConfig {
  std::size_t top_k_large = 200;
  std::vector<Category> large_classes = {Category::REGULAR_VEHICLE, Category::PEDESTRIAN, Category::BOLLARD,
                                         Category::CONSTRUCTION_CONE, Category::CONSTRUCTION_BARREL};
  std::size_t top_k_other = 100;
  double relationship_max_dist = 50.0;  ///< m
  double min_segment_s = 1.5;
  double output_rate_hz = 2.0;

  /// Keys: top_k_large, top_k_other, large_classes (comma list),
  /// relationship_max_dist, min_segment_s, output_rate_hz.
  static PostprocessConfig load(const std::filesystem::path& path);
  static PostprocessConfig parse(const std::string& text);
  void validate() const;
};

/// Keeps the K tracks with the highest summed confidence per class; ties go to
/// the lexicographically smaller id. Output stays sorted by id.
std::vector<Track> filter_top_k(std::vector<Track> tracks, const PostprocessConfig& config = {});

/// Drops relationship timestamps whose two centroids are further apart than
/// the limit. Pairs whose boxes are missing at t are kept.
ScenarioSet prune_far_relationships(const ScenarioSet& result, const LogBundle& bundle,
                                    const PostprocessConfig& config = {});

/// Extends each run of consecutive referred boxes shorter than the minimum
/// symmetrically to the minimum, shifted inward at the track's ends and snapped
/// outward to observed stamps.
ScenarioSet dilate_segments(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config = {});

/// Keeps referred stamps that are a track's nearest observation (within half a
/// tick, earlier stamp on ties) to a tick of the output grid anchored at the
/// log's first timestamp. Relationships are clipped to the kept stamps.
ScenarioSet resample_output(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config = {});

/// prune_far_relationships, then dilate_segments, then resample_output.
ScenarioSet postprocess(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config = {});

/// Copy of the bundle with filter_top_k applied to its tracks.
LogBundle filter_bundle(const LogBundle& bundle, const PostprocessConfig& config = {});

}  // namespace refmine
