#include "refmine/metrics.hpp"

#include "refmine/config.hpp"
#include "refmine/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace refmine {

std::vector<double> EvalConfig::default_alphas() {
  std::vector<double> a;
  for (int i = 1; i <= 19; ++i) a.push_back(i * 0.05);
  return a;
}

EvalConfig EvalConfig::parse(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  EvalConfig c;
  for (const auto& [k, v] : kv.values()) {
    if (k == "similarity") {
      if (v == "iou_3d") {
        c.similarity = Similarity::iou_3d;
      } else if (v == "centroid_distance") {
        c.similarity = Similarity::centroid_distance;
      } else {
        throw std::invalid_argument("eval config: similarity must be iou_3d or centroid_distance");
      }
    } else if (k == "centroid_scale") {
      c.centroid_scale = kv.get_double(k, c.centroid_scale);
    } else if (k == "role") {
      if (v == "referred") {
        c.role = Role::referred;
      } else if (v == "related") {
        c.role = Role::related;
      } else if (v == "other") {
        c.role = Role::other;
      } else {
        throw std::invalid_argument("eval config: role must be referred, related or other");
      }
    } else if (k == "score_related") {
      if (v != "true" && v != "false") throw std::invalid_argument("eval config: score_related must be true/false");
      c.score_related = v == "true";
    } else if (k == "output_rate_hz") {
      c.output_rate_hz = kv.get_double(k, c.output_rate_hz);
    } else if (k == "alphas") {
      c.alphas.clear();
      std::istringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) {
        try {
          c.alphas.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw std::invalid_argument("eval config: bad alpha '" + item + "'");
        }
      }
    } else {
      throw std::invalid_argument("eval config: unknown key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

EvalConfig EvalConfig::load(const std::filesystem::path& path) {
  const KeyValueConfig kv = KeyValueConfig::load(path);
  std::string text;
  for (const auto& [k, v] : kv.values()) text += k + " = " + v + "\n";
  return parse(text);
}

void EvalConfig::validate() const {
  if (alphas.empty()) throw std::invalid_argument("eval config: no alpha thresholds");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw std::invalid_argument("eval config: alpha outside (0,1)");
    if (i > 0 && !(alphas[i] > alphas[i - 1])) throw std::invalid_argument("eval config: alphas not increasing");
  }
  if (!(centroid_scale > 0.0)) throw std::invalid_argument("eval config: centroid_scale must be positive");
  if (!(output_rate_hz > 0.0)) throw std::invalid_argument("eval config: output_rate_hz must be positive");
}

namespace {

Polygon footprint(const TrackBox& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = b.size.x / 2, hw = b.size.y / 2;
  const Vec2 o{b.translation.x, b.translation.y};
  const Vec2 f{c * hl, s * hl};
  const Vec2 l{-s * hw, c * hw};
  return {o - f - l, o + f - l, o + f + l, o - f + l};
}

}  // namespace

double box_iou_3d(const TrackBox& a, const TrackBox& b) {
  if (a.translation == b.translation && a.yaw == b.yaw && a.size == b.size) {
    return a.size.x > 0 && a.size.y > 0 && a.size.z > 0 ? 1.0 : 0.0;
  }
  const double za0 = a.translation.z - a.size.z / 2, za1 = a.translation.z + a.size.z / 2;
  const double zb0 = b.translation.z - b.size.z / 2, zb1 = b.translation.z + b.size.z / 2;
  const double dz = std::min(za1, zb1) - std::max(za0, zb0);
  if (dz <= 0.0) return 0.0;
  const Polygon pa = footprint(a);
  const Polygon pb = footprint(b);
  const Polygon inter = clip_convex(pa, pb);
  if (inter.size() < 3) return 0.0;
  const double area = std::abs(polygon_area(inter));
  const double vi = area * dz;
  const double va = a.size.x * a.size.y * a.size.z;
  const double vb = b.size.x * b.size.y * b.size.z;
  const double u = va + vb - vi;
  if (!(u > 0.0)) return 0.0;
  return std::clamp(vi / u, 0.0, 1.0);
}

double box_similarity(const TrackBox& a, const TrackBox& b, const EvalConfig& config) {
  if (config.similarity == Similarity::iou_3d) return box_iou_3d(a, b);
  const double d = std::hypot(a.translation.x - b.translation.x, a.translation.y - b.translation.y,
                              a.translation.z - b.translation.z);
  return std::max(0.0, 1.0 - d / config.centroid_scale);
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  std::size_t cols = 0;
  for (const auto& r : weights) cols = std::max(cols, r.size());
  std::vector<int> out(rows, -1);
  if (rows == 0 || cols == 0) return out;
  // Square Hungarian (potentials form) on cost = -weight.
  const std::size_t n = std::max(rows, cols);
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i >= rows || j >= weights[i].size()) return 0.0;
    return -weights[i][j];
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i == 0 || i > rows || j > weights[i - 1].size()) continue;
    if (weights[i - 1][j - 1] > 0.0) out[i - 1] = static_cast<int>(j - 1);
  }
  return out;
}

void HotaCounts::merge(const HotaCounts& other) {
  if (tp.empty()) {
    *this = other;
    return;
  }
  if (other.tp.size() != tp.size()) throw std::invalid_argument("HotaCounts: alpha count mismatch");
  for (std::size_t i = 0; i < tp.size(); ++i) {
    tp[i] += other.tp[i];
    fn[i] += other.fn[i];
    fp[i] += other.fp[i];
    ass[i] += other.ass[i];
  }
}

double HotaCounts::score() const {
  if (tp.empty()) return 100.0;
  double sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    const double denom = tp[i] + fn[i] + fp[i];
    if (denom > 0.0) any = true;
    if (denom <= 0.0) {
      sum += 1.0;
      continue;
    }
    const double det = tp[i] / denom;
    const double assa = tp[i] > 0.0 ? ass[i] / tp[i] : 0.0;
    sum += std::sqrt(det * assa);
  }
  if (!any) return 100.0;
  return sum / static_cast<double>(tp.size()) * 100.0;
}

std::map<std::string, TimeSet, std::less<>> role_stamps(const ScenarioSet& result, const std::vector<Track>& tracks,
                                                         Role role) {
  std::map<std::string, TimeSet, std::less<>> out;
  if (role == Role::referred) {
    for (const auto& [id, e] : result) out[id] = e.timestamps;
    return out;
  }
  std::map<std::string, std::vector<Timestamp>, std::less<>> related;
  for (const auto& [id, e] : result) {
    for (const auto& [r, ts] : e.related) related[r].insert(related[r].end(), ts.begin(), ts.end());
  }
  if (role == Role::related) {
    for (auto& [r, ts] : related) out[r] = TimeSet(std::move(ts));
    return out;
  }
  for (const auto& t : tracks) {
    std::vector<Timestamp> rest;
    const ScenarioEntry* e = result.find(t.id);
    auto rit = related.find(t.id);
    std::set<Timestamp> rel;
    if (rit != related.end()) rel.insert(rit->second.begin(), rit->second.end());
    for (const auto& b : t.boxes) {
      if (e && e->timestamps.contains(b.timestamp)) continue;
      if (rel.count(b.timestamp)) continue;
      rest.push_back(b.timestamp);
    }
    if (!rest.empty()) out[t.id] = TimeSet(std::move(rest));
  }
  return out;
}

namespace {

struct Detection {
  std::size_t track;
  const TrackBox* box;
};

using Frames = std::map<Timestamp, std::vector<Detection>>;

Frames detections(const std::vector<Track>& tracks, const ScenarioSet& result, HotaMode mode, Role role,
                  std::vector<double>& per_track) {
  for (std::size_t i = 1; i < tracks.size(); ++i) {
    if (tracks[i].id == tracks[i - 1].id) throw std::invalid_argument("duplicate track id " + tracks[i].id);
  }
  const auto stamps = mode == HotaMode::standard ? std::map<std::string, TimeSet, std::less<>>{}
                                                 : role_stamps(result, tracks, role);
  Frames frames;
  per_track.assign(tracks.size(), 0.0);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const Track& t = tracks[i];
    for (std::size_t k = 1; k < t.boxes.size(); ++k) {
      if (t.boxes[k].timestamp <= t.boxes[k - 1].timestamp) {
        throw std::invalid_argument("duplicate or unordered timestamp in track " + t.id);
      }
    }
    const TimeSet* ts = nullptr;
    if (mode != HotaMode::standard) {
      auto it = stamps.find(t.id);
      if (it == stamps.end() || it->second.empty()) continue;
      ts = &it->second;
    }
    for (const auto& b : t.boxes) {
      if (mode == HotaMode::temporal && !ts->contains(b.timestamp)) continue;
      frames[b.timestamp].push_back({i, &b});
      per_track[i] += 1.0;
    }
  }
  return frames;
}

}  // namespace

HotaCounts hota_counts(const std::vector<Track>& pred_tracks, const ScenarioSet& pred,
                       const std::vector<Track>& gt_tracks, const ScenarioSet& gt, HotaMode mode,
                       const EvalConfig& config) {
  std::vector<double> pred_n, gt_n;
  const Frames pf = detections(pred_tracks, pred, mode, config.role, pred_n);
  const Frames gf = detections(gt_tracks, gt, mode, config.role, gt_n);
  const std::size_t na = config.alphas.size();
  HotaCounts counts(na);
  // (gt track, pred track) -> matches, per alpha
  std::vector<std::map<std::pair<std::size_t, std::size_t>, double>> pairs(na);

  std::set<Timestamp> all;
  for (const auto& [t, d] : pf) all.insert(t);
  for (const auto& [t, d] : gf) all.insert(t);
  static const std::vector<Detection> none;
  for (Timestamp t : all) {
    auto git = gf.find(t);
    auto pit = pf.find(t);
    const auto& g = git == gf.end() ? none : git->second;
    const auto& p = pit == pf.end() ? none : pit->second;
    std::vector<std::vector<double>> sim(g.size(), std::vector<double>(p.size(), 0.0));
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) sim[i][j] = box_similarity(*g[i].box, *p[j].box, config);
    }
    for (std::size_t a = 0; a < na; ++a) {
      std::size_t tp = 0;
      if (!g.empty() && !p.empty()) {
        std::vector<std::vector<double>> w = sim;
        for (auto& row : w) {
          for (double& x : row) {
            if (x < config.alphas[a]) x = 0.0;
          }
        }
        const auto m = max_weight_assignment(w);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (m[i] < 0) continue;
          ++tp;
          pairs[a][{g[i].track, p[static_cast<std::size_t>(m[i])].track}] += 1.0;
        }
      }
      counts.tp[a] += static_cast<double>(tp);
      counts.fn[a] += static_cast<double>(g.size() - tp);
      counts.fp[a] += static_cast<double>(p.size() - tp);
    }
  }
  for (std::size_t a = 0; a < na; ++a) {
    for (const auto& [key, n] : pairs[a]) {
      const double denom = gt_n[key.first] + pred_n[key.second] - n;
      counts.ass[a] += n * (n / denom);
    }
  }
  return counts;
}

double hota(const std::vector<Track>& pred_tracks, const ScenarioSet& pred, const std::vector<Track>& gt_tracks,
            const ScenarioSet& gt, HotaMode mode, const EvalConfig& config) {
  return hota_counts(pred_tracks, pred, gt_tracks, gt, mode, config).score();
}

namespace {

struct Confusion {
  double tp = 0, fn = 0, tn = 0, fp = 0;
  void add(bool predicted, bool actual) {
    if (actual) {
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  bool defined() const { return tp + fn + tn + fp > 0; }
  double balanced() const {
    const double pos = tp + fn, neg = tn + fp;
    if (pos + neg == 0) throw std::invalid_argument("balanced accuracy: no positives and no negatives");
    if (pos == 0) return tn / neg * 100.0;
    if (neg == 0) return tp / pos * 100.0;
    return (tp / pos + tn / neg) / 2.0 * 100.0;
  }
};

void add_log(Confusion& c, const EvalCase& e) { c.add(!e.pred.empty(), !e.gt.empty()); }

void add_stamps(Confusion& c, const EvalCase& e) {
  std::set<Timestamp> pred, gt;
  for (const auto& [id, en] : e.pred) pred.insert(en.timestamps.begin(), en.timestamps.end());
  for (const auto& [id, en] : e.gt) gt.insert(en.timestamps.begin(), en.timestamps.end());
  std::set<Timestamp> universe(e.timestamps.begin(), e.timestamps.end());
  universe.insert(pred.begin(), pred.end());
  universe.insert(gt.begin(), gt.end());
  for (Timestamp t : universe) c.add(pred.count(t) > 0, gt.count(t) > 0);
}

}  // namespace

double log_balanced_accuracy(const std::vector<EvalCase>& cases) {
  Confusion c;
  for (const auto& e : cases) add_log(c, e);
  return c.balanced();
}

double timestamp_balanced_accuracy(const std::vector<EvalCase>& cases) {
  Confusion c;
  for (const auto& e : cases) add_stamps(c, e);
  return c.balanced();
}

std::vector<Timestamp> output_grid(const std::vector<Timestamp>& log_timestamps, double rate_hz) {
  std::vector<Timestamp> sorted = log_timestamps;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<Timestamp> out;
  if (sorted.empty()) return out;
  const Timestamp step = static_cast<Timestamp>(std::llround(1e9 / rate_hz));
  const Timestamp tol = step / 2;
  for (Timestamp tick = sorted.front(); tick <= sorted.back(); tick += step) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), tick);
    Timestamp best = 0;
    Timestamp best_d = std::numeric_limits<Timestamp>::max();
    if (it != sorted.begin()) {
      best = *(it - 1);
      best_d = tick - best;
    }
    if (it != sorted.end() && *it - tick < best_d) {
      best = *it;
      best_d = *it - tick;
    }
    if (best_d <= tol && (out.empty() || out.back() != best)) out.push_back(best);
  }
  return out;
}

namespace {

void mention(const ScenarioSet& s, std::set<std::string>& ids) {
  for (const auto& [id, e] : s) {
    ids.insert(id);
    for (const auto& [r, ts] : e.related) ids.insert(r);
  }
}

std::vector<Track> subset(const std::vector<Track>& tracks, const std::set<std::string>& ids) {
  std::vector<Track> out;
  for (const auto& t : tracks) {
    if (ids.count(t.id)) out.push_back(t);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const std::vector<EvalCase>& cases, const EvalConfig& config) {
  config.validate();
  for (const auto& c : cases) {
    if (c.pred_tracks == nullptr || c.gt_tracks == nullptr) {
      throw std::invalid_argument("evaluate: case without tracks (" + c.prompt + ", " + c.log_id + ")");
    }
  }
  const std::size_t n = cases.size();
  std::vector<HotaCounts> temporal(n), track(n), related(n);
  // First case of each log carries the standard (tracker) score.
  std::vector<std::size_t> first_of_log;
  {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (seen.insert(cases[i].log_id).second) first_of_log.push_back(i);
    }
  }
  std::vector<HotaCounts> standard(first_of_log.size());
  EvalConfig related_cfg = config;
  related_cfg.role = Role::related;

  const long total = static_cast<long>(n + first_of_log.size());
  std::vector<std::string> errors(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < total; ++k) {
    try {
      if (k < static_cast<long>(n)) {
        const auto& c = cases[static_cast<std::size_t>(k)];
        temporal[k] = hota_counts(*c.pred_tracks, c.pred, *c.gt_tracks, c.gt, HotaMode::temporal, config);
        track[k] = hota_counts(*c.pred_tracks, c.pred, *c.gt_tracks, c.gt, HotaMode::track, config);
        if (config.score_related) {
          related[k] = hota_counts(*c.pred_tracks, c.pred, *c.gt_tracks, c.gt, HotaMode::temporal, related_cfg);
        }
      } else {
        const std::size_t s = static_cast<std::size_t>(k) - n;
        const auto& c = cases[first_of_log[s]];
        // Tracks each side submits for this log, as referred or related objects.
        std::set<std::string> pred_ids, gt_ids;
        for (const auto& other : cases) {
          if (other.log_id != c.log_id) continue;
          mention(other.pred, pred_ids);
          mention(other.gt, gt_ids);
        }
        standard[s] = hota_counts(subset(*c.pred_tracks, pred_ids), {}, subset(*c.gt_tracks, gt_ids), {},
                                  HotaMode::standard, config);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::invalid_argument(e);
  }

  EvalReport report;
  report.cases = n;
  HotaCounts all_std, all_temp, all_track, all_rel;
  for (const auto& h : standard) all_std.merge(h);
  for (std::size_t i = 0; i < n; ++i) {
    all_temp.merge(temporal[i]);
    all_track.merge(track[i]);
    if (config.score_related) all_rel.merge(related[i]);
  }
  report.hota = all_std.score();
  report.hota_temporal = all_temp.score();
  report.hota_track = all_track.score();
  if (config.score_related) report.hota_temporal_related = all_rel.score();
  if (n > 0) {
    report.log_balanced_accuracy = log_balanced_accuracy(cases);
    report.timestamp_balanced_accuracy = timestamp_balanced_accuracy(cases);
  }

  std::map<std::string, std::vector<std::size_t>> by_prompt;
  for (std::size_t i = 0; i < n; ++i) by_prompt[cases[i].prompt].push_back(i);
  for (const auto& [prompt, idx] : by_prompt) {
    PromptScore ps;
    ps.prompt = prompt;
    ps.logs = idx.size();
    HotaCounts t, k;
    Confusion lc, sc;
    for (std::size_t i : idx) {
      t.merge(temporal[i]);
      k.merge(track[i]);
      add_log(lc, cases[i]);
      add_stamps(sc, cases[i]);
    }
    ps.hota_temporal = t.score();
    ps.hota_track = k.score();
    ps.log_balanced_accuracy = lc.balanced();
    ps.timestamp_balanced_accuracy = sc.defined() ? sc.balanced() : std::nan("");
    report.prompts.push_back(ps);
  }
  return report;
}

namespace {

std::string fixed(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::ordered_json number(double v) {
  if (std::isnan(v)) return nullptr;
  // Round to 1e-9 so reports are stable across summation orders.
  return std::round(v * 1e9) / 1e9;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["hota"] = number(hota);
  j["hota_temporal"] = number(hota_temporal);
  j["hota_track"] = number(hota_track);
  j["log_balanced_accuracy"] = number(log_balanced_accuracy);
  j["timestamp_balanced_accuracy"] = number(timestamp_balanced_accuracy);
  if (hota_temporal_related) j["hota_temporal_related"] = number(*hota_temporal_related);
  j["cases"] = cases;
  auto& arr = j["prompts"] = nlohmann::ordered_json::array();
  for (const auto& p : prompts) {
    nlohmann::ordered_json o;
    o["prompt"] = p.prompt;
    o["logs"] = p.logs;
    o["hota_temporal"] = number(p.hota_temporal);
    o["hota_track"] = number(p.hota_track);
    o["log_balanced_accuracy"] = number(p.log_balanced_accuracy);
    o["timestamp_balanced_accuracy"] = number(p.timestamp_balanced_accuracy);
    arr.push_back(o);
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "HOTA                         " << fixed(hota) << "\n";
  os << "HOTA-Temporal                " << fixed(hota_temporal) << "\n";
  os << "HOTA-Track                   " << fixed(hota_track) << "\n";
  os << "Log balanced accuracy        " << fixed(log_balanced_accuracy) << "\n";
  os << "Timestamp balanced accuracy  " << fixed(timestamp_balanced_accuracy) << "\n";
  if (hota_temporal_related) os << "HOTA-Temporal (related)      " << fixed(*hota_temporal_related) << "\n";
  os << "cases                        " << cases << "\n";
  if (!prompts.empty()) {
    os << "\nprompt\tlogs\thota_temporal\thota_track\tlog_ba\ttimestamp_ba\n";
    for (const auto& p : prompts) {
      os << p.prompt << "\t" << p.logs << "\t" << fixed(p.hota_temporal) << "\t" << fixed(p.hota_track) << "\t"
         << fixed(p.log_balanced_accuracy) << "\t" << fixed(p.timestamp_balanced_accuracy) << "\n";
    }
  }
  return os.str();
}

}  // namespace refmine
