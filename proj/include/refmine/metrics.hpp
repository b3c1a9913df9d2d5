#pragma once

#include "refmine/ingest.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace refmine {

enum class Similarity { iou_3d, centroid_distance };
enum class HotaMode { standard, temporal, track };
/// Which objects of a scenario are scored: the referred keys, the related
/// objects at their relationship stamps, or every remaining box.
enum class Role { referred, related, other };

struct EvalConfig {
  Similarity similarity = Similarity::iou_3d;
  double centroid_scale = 2.0;  ///< m; centroid similarity = max(0, 1 - d / scale)
  std::vector<double> alphas = default_alphas();
  Role role = Role::referred;
  bool score_related = false;  ///< also report HOTA-Temporal for related objects
  double output_rate_hz = 2.0;  ///< timestamp grid for timestamp-level accuracy

  static std::vector<double> default_alphas();  ///< 0.05, 0.10, ..., 0.95
  static EvalConfig load(const std::filesystem::path& path);
  static EvalConfig parse(const std::string& text);
  void validate() const;
};

/// BEV oriented-rectangle intersection area times vertical overlap, over the
/// union volume.
double box_iou_3d(const TrackBox& a, const TrackBox& b);
double box_similarity(const TrackBox& a, const TrackBox& b, const EvalConfig& config);

/// Maximum-weight one-to-one assignment on a non-negative weight matrix.
/// Returns, per row, the matched column or -1. Zero-weight pairs are left
/// unmatched.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

/// Sufficient statistics for HOTA at each alpha; sums across sequences.
struct HotaCounts {
  std::vector<double> tp, fn, fp, ass;  ///< ass: sum over TPs of the association score
  explicit HotaCounts(std::size_t n = 0) : tp(n, 0.0), fn(n, 0.0), fp(n, 0.0), ass(n, 0.0) {}
  void merge(const HotaCounts& other);
  /// Percentage. Both sides empty at every alpha scores 100.
  double score() const;
};

/// Per-track stamps that take part in scoring for a role.
std::map<std::string, TimeSet, std::less<>> role_stamps(const ScenarioSet& result, const std::vector<Track>& tracks,
                                                         Role role);

HotaCounts hota_counts(const std::vector<Track>& pred_tracks, const ScenarioSet& pred,
                       const std::vector<Track>& gt_tracks, const ScenarioSet& gt, HotaMode mode,
                       const EvalConfig& config = {});

double hota(const std::vector<Track>& pred_tracks, const ScenarioSet& pred, const std::vector<Track>& gt_tracks,
            const ScenarioSet& gt, HotaMode mode, const EvalConfig& config = {});

/// One (prompt, log) pair to score.
struct EvalCase {
  std::string prompt;
  std::string log_id;
  ScenarioSet pred;
  ScenarioSet gt;
  const std::vector<Track>* pred_tracks = nullptr;
  const std::vector<Track>* gt_tracks = nullptr;
  std::vector<Timestamp> timestamps;  ///< timestamp-level universe for this log
};

/// (TPR + TNR) / 2 * 100 over (prompt, log) pairs or (prompt, log, timestamp)
/// triples. A class with no members is left out of the average; no members at
/// all throws std::invalid_argument.
double log_balanced_accuracy(const std::vector<EvalCase>& cases);
double timestamp_balanced_accuracy(const std::vector<EvalCase>& cases);

struct PromptScore {
  std::string prompt;
  std::size_t logs = 0;
  double hota_temporal = 0.0;
  double hota_track = 0.0;
  double log_balanced_accuracy = 0.0;  ///< NaN when undefined for this prompt alone
  double timestamp_balanced_accuracy = 0.0;
};

struct EvalReport {
  double hota = 0.0;
  double hota_temporal = 0.0;
  double hota_track = 0.0;
  double log_balanced_accuracy = 0.0;
  double timestamp_balanced_accuracy = 0.0;
  std::optional<double> hota_temporal_related;
  std::size_t cases = 0;
  std::vector<PromptScore> prompts;  ///< sorted by prompt

  std::string to_json() const;
  std::string to_text() const;
};

/// Standard HOTA is computed once per distinct log over every track that side
/// submits for the log (referred or related in any case), at all of its boxes.
/// The other scores are over all cases. Per-case work runs in parallel, aggregation is serial and ordered.
EvalReport evaluate(const std::vector<EvalCase>& cases, const EvalConfig& config = {});

/// Tick-nearest log timestamps on the output grid anchored at the first stamp.
std::vector<Timestamp> output_grid(const std::vector<Timestamp>& log_timestamps, double rate_hz);

}  // namespace refmine
