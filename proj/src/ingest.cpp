#include "refmine/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace refmine {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\n')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // from_chars for double is available in libstdc++ 11.
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

/// Maps header column names to their index; throws if one is missing.
std::vector<std::size_t> column_order(std::string_view header, std::string_view expected) {
  const auto cols = split_csv(trim(header));
  const auto want = split_csv(expected);
  std::vector<std::size_t> idx;
  for (auto name : want) {
    auto it = std::find_if(cols.begin(), cols.end(), [&](std::string_view c) { return trim(c) == name; });
    if (it == cols.end()) throw std::runtime_error("missing column '" + std::string(name) + "'");
    idx.push_back(static_cast<std::size_t>(it - cols.begin()));
  }
  return idx;
}

Vec3 rotate(const Quaternion& q, const Vec3& v, bool inverse) {
  // Rotation matrix of a unit quaternion.
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  const double r00 = 1 - 2 * (y * y + z * z), r01 = 2 * (x * y - z * w), r02 = 2 * (x * z + y * w);
  const double r10 = 2 * (x * y + z * w), r11 = 1 - 2 * (x * x + z * z), r12 = 2 * (y * z - x * w);
  const double r20 = 2 * (x * z - y * w), r21 = 2 * (y * z + x * w), r22 = 1 - 2 * (x * x + y * y);
  if (!inverse) {
    return {r00 * v.x + r01 * v.y + r02 * v.z, r10 * v.x + r11 * v.y + r12 * v.z,
            r20 * v.x + r21 * v.y + r22 * v.z};
  }
  return {r00 * v.x + r10 * v.y + r20 * v.z, r01 * v.x + r11 * v.y + r21 * v.z,
          r02 * v.x + r12 * v.y + r22 * v.z};
}

std::unordered_map<Timestamp, const EgoPose*> index_poses(const std::vector<EgoPose>& poses) {
  std::unordered_map<Timestamp, const EgoPose*> idx;
  for (const auto& p : poses) idx.emplace(p.timestamp, &p);
  return idx;
}

std::vector<Track> transform_tracks(const std::vector<Track>& tracks, const std::vector<EgoPose>& poses,
                                    bool to_city) {
  const auto idx = index_poses(poses);
  std::vector<Track> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) {
    Track copy = t;
    for (auto& b : copy.boxes) {
      auto it = idx.find(b.timestamp);
      if (it == idx.end()) {
        throw std::runtime_error("no ego pose at timestamp " + std::to_string(b.timestamp) + " (track " +
                                 t.id + ")");
      }
      const EgoPose& pose = *it->second;
      if (to_city) {
        b.translation = pose.apply(b.translation);
        b.yaw = normalize_angle(b.yaw + pose.heading());
      } else {
        b.translation = pose.apply_inverse(b.translation);
        b.yaw = normalize_angle(b.yaw - pose.heading());
      }
    }
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace

double EgoPose::heading() const {
  const Vec3 fwd = rotate(rotation, {1.0, 0.0, 0.0}, false);
  return std::atan2(fwd.y, fwd.x);
}

Vec3 EgoPose::apply(const Vec3& p) const {
  const Vec3 r = rotate(rotation, p, false);
  return {r.x + translation.x, r.y + translation.y, r.z + translation.z};
}

Vec3 EgoPose::apply_inverse(const Vec3& p) const {
  return rotate(rotation, {p.x - translation.x, p.y - translation.y, p.z - translation.z}, true);
}

EgoPose pose_from_yaw(Timestamp t, Vec3 translation, double yaw) {
  return {t, translation, {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)}};
}

const Track* LogBundle::track(std::string_view id) const {
  auto it = std::lower_bound(tracks.begin(), tracks.end(), id,
                             [](const Track& t, std::string_view v) { return t.id < v; });
  if (it != tracks.end() && it->id == id) return &*it;
  // Fall back to a scan when callers built an unsorted bundle.
  for (const auto& t : tracks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<Timestamp> LogBundle::timestamps() const {
  std::vector<Timestamp> ts;
  for (const auto& p : ego) ts.push_back(p.timestamp);
  for (const auto& t : tracks) {
    for (const auto& b : t.boxes) ts.push_back(b.timestamp);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

TrackLoadResult parse_tracks(std::istream& in) {
  TrackLoadResult result;
  std::string line;
  if (!std::getline(in, line)) return result;
  const auto cols = column_order(line, kTracksHeader);

  std::map<std::string, Track> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(trim(line));
    auto reject = [&](const std::string& why) {
      ++result.rejected_rows;
      result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() <= *std::max_element(cols.begin(), cols.end())) {
      reject("expected 11 columns");
      continue;
    }
    TrackBox box;
    const std::string id(trim(f[cols[1]]));
    const auto cls = trim(f[cols[3]]);
    auto category = parse_category(cls);
    if (!category) {
      reject("unknown class_name '" + std::string(cls) + "'");
      continue;
    }
    double v[7];
    bool ok = parse_int(f[cols[0]], box.timestamp) && parse_double(f[cols[2]], box.confidence) && !id.empty();
    for (int k = 0; k < 7 && ok; ++k) ok = parse_double(f[cols[4 + k]], v[k]);
    if (!ok) {
      reject("malformed numeric field");
      continue;
    }
    box.translation = {v[0], v[1], v[2]};
    box.size = {v[3], v[4], v[5]};
    box.yaw = normalize_angle(v[6]);
    if (box.timestamp <= 0 || box.size.x <= 0 || box.size.y <= 0 || box.size.z <= 0 || box.confidence < 0 ||
        box.confidence > 1) {
      reject("value out of range");
      continue;
    }
    auto [it, inserted] = by_id.try_emplace(id);
    Track& track = it->second;
    if (inserted) {
      track.id = id;
      track.category = *category;
    } else if (track.category != *category) {
      reject("track " + id + " changes class");
      continue;
    }
    track.boxes.push_back(box);
  }

  for (auto& [id, track] : by_id) {
    auto& boxes = track.boxes;
    if (!std::is_sorted(boxes.begin(), boxes.end(),
                        [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; })) {
      result.diagnostics.push_back("warning: track " + id + " rows out of order; sorted");
    }
    std::stable_sort(boxes.begin(), boxes.end(), [](const auto& a, const auto& b) {
      return std::tie(a.timestamp, b.confidence) < std::tie(b.timestamp, a.confidence);
    });
    const auto before = boxes.size();
    boxes.erase(std::unique(boxes.begin(), boxes.end(),
                            [](const auto& a, const auto& b) { return a.timestamp == b.timestamp; }),
                boxes.end());
    if (boxes.size() != before) {
      result.diagnostics.push_back("warning: track " + id + " had duplicate timestamps; kept highest confidence");
    }
    result.tracks.push_back(std::move(track));
  }
  return result;
}

TrackLoadResult load_tracks(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_tracks(in);
}

void write_tracks(const std::filesystem::path& path, const std::vector<Track>& tracks) {
  auto out = open_out(path);
  out << kTracksHeader << '\n';
  std::vector<const Track*> sorted;
  for (const auto& t : tracks) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
  for (const auto* t : sorted) {
    for (const auto& b : t->boxes) {
      out << b.timestamp << ',' << t->id << ',' << fmt_double(b.confidence) << ',' << to_string(t->category)
          << ',' << fmt_double(b.translation.x) << ',' << fmt_double(b.translation.y) << ','
          << fmt_double(b.translation.z) << ',' << fmt_double(b.size.x) << ',' << fmt_double(b.size.y) << ','
          << fmt_double(b.size.z) << ',' << fmt_double(b.yaw) << '\n';
    }
  }
}

std::vector<EgoPose> load_poses(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::vector<EgoPose> poses;
  if (!std::getline(in, line)) return poses;
  const auto cols = column_order(line, kPosesHeader);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(trim(line));
    EgoPose p;
    double v[7];
    bool ok = f.size() > *std::max_element(cols.begin(), cols.end()) && parse_int(f[cols[0]], p.timestamp);
    for (int k = 0; k < 7 && ok; ++k) ok = parse_double(f[cols[1 + k]], v[k]);
    if (!ok) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed pose row");
    p.translation = {v[0], v[1], v[2]};
    p.rotation = {v[3], v[4], v[5], v[6]};
    const double n = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]);
    if (std::abs(n - 1.0) > 1e-9) {
      if (n == 0.0) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": zero quaternion");
      p.rotation = {v[3] / n, v[4] / n, v[5] / n, v[6] / n};
    }
    poses.push_back(p);
  }
  std::sort(poses.begin(), poses.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (poses[i].timestamp == poses[i - 1].timestamp) {
      throw std::runtime_error("duplicate ego pose timestamp " + std::to_string(poses[i].timestamp));
    }
  }
  return poses;
}

void write_poses(const std::filesystem::path& path, const std::vector<EgoPose>& poses) {
  auto out = open_out(path);
  out << kPosesHeader << '\n';
  for (const auto& p : poses) {
    out << p.timestamp << ',' << fmt_double(p.translation.x) << ',' << fmt_double(p.translation.y) << ','
        << fmt_double(p.translation.z) << ',' << fmt_double(p.rotation.w) << ',' << fmt_double(p.rotation.x)
        << ',' << fmt_double(p.rotation.y) << ',' << fmt_double(p.rotation.z) << '\n';
  }
}

ColorAttributeTable load_colors(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  ColorAttributeTable table;
  if (!std::getline(in, line)) return table;
  const auto cols = column_order(line, "track_id,color");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv(trim(line));
    if (f.size() <= std::max(cols[0], cols[1])) throw std::runtime_error(path.string() + ": malformed color row");
    table[std::string(trim(f[cols[0]]))] = std::string(trim(f[cols[1]]));
  }
  return table;
}

void write_colors(const std::filesystem::path& path, const ColorAttributeTable& colors) {
  auto out = open_out(path);
  out << "track_id,color\n";
  for (const auto& [id, c] : colors) out << id << ',' << c << '\n';
}

std::vector<Track> to_city_frame(const std::vector<Track>& ego_tracks, const std::vector<EgoPose>& poses) {
  return transform_tracks(ego_tracks, poses, true);
}

std::vector<Track> to_ego_frame(const std::vector<Track>& city_tracks, const std::vector<EgoPose>& poses) {
  return transform_tracks(city_tracks, poses, false);
}

std::vector<Track> inject_ego_track(std::vector<Track> city_tracks, const std::vector<EgoPose>& poses) {
  for (const auto& t : city_tracks) {
    if (t.category == Category::EGO_VEHICLE) {
      throw std::logic_error("ego track already present (track " + t.id + ")");
    }
  }
  Track ego;
  ego.id = std::string(kEgoTrackId);
  ego.category = Category::EGO_VEHICLE;
  for (const auto& p : poses) {
    ego.boxes.push_back({p.timestamp, {1.422, 0.0, 0.25}, 0.0, {4.877, 2.0, 1.473}, 1.0});
  }
  auto city = to_city_frame({ego}, poses);
  city_tracks.push_back(std::move(city.front()));
  std::sort(city_tracks.begin(), city_tracks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return city_tracks;
}

LogBundle load_log_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("log directory not found: " + dir.string());
  LogBundle bundle;
  bundle.log_id = dir.filename().string();
  if (bundle.log_id.empty()) bundle.log_id = dir.parent_path().filename().string();
  bundle.ego = load_poses(dir / "poses.csv");
  auto loaded = load_tracks(dir / "tracks.csv");
  bundle.tracks = inject_ego_track(to_city_frame(loaded.tracks, bundle.ego), bundle.ego);
  bundle.map = HDMap::load(dir / "map.json");
  if (std::filesystem::exists(dir / "colors.csv")) bundle.colors = load_colors(dir / "colors.csv");
  return bundle;
}

void write_log_bundle(const std::filesystem::path& dir, const LogBundle& bundle) {
  std::filesystem::create_directories(dir);
  std::vector<Track> non_ego;
  for (const auto& t : bundle.tracks) {
    if (t.category != Category::EGO_VEHICLE) non_ego.push_back(t);
  }
  write_tracks(dir / "tracks.csv", to_ego_frame(non_ego, bundle.ego));
  write_poses(dir / "poses.csv", bundle.ego);
  bundle.map.save(dir / "map.json");
  if (!bundle.colors.empty()) write_colors(dir / "colors.csv", bundle.colors);
}

std::string description_hash(std::string_view description) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : description) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string scenario_csv(const ScenarioSet& result) {
  struct Row {
    std::string_view uuid;
    Timestamp t;
    int role;  // 0 referred, 1 related
    std::string_view related_to;
    bool operator<(const Row& o) const {
      return std::tie(uuid, t, role, related_to) < std::tie(o.uuid, o.t, o.role, o.related_to);
    }
  };
  std::vector<Row> rows;
  for (const auto& [id, e] : result) {
    for (Timestamp t : e.timestamps) rows.push_back({id, t, 0, {}});
    for (const auto& [rel, ts] : e.related) {
      for (Timestamp t : ts) rows.push_back({rel, t, 1, id});
    }
  }
  std::sort(rows.begin(), rows.end());
  std::string out(kScenarioHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.uuid;
    out += ',';
    out += std::to_string(r.t);
    out += r.role == 0 ? ",REFERRED," : ",RELATED,";
    out += r.related_to;
    out += '\n';
  }
  return out;
}

ScenarioSet parse_scenario_csv(std::istream& in) {
  ScenarioSet out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const auto cols = column_order(line, kScenarioHeader);
  std::size_t line_no = 1;
  std::vector<std::tuple<std::string, std::string, Timestamp>> related_rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(trim(line));
    Timestamp t = 0;
    if (f.size() < 4 || !parse_int(f[cols[1]], t)) {
      throw std::runtime_error("scenario csv line " + std::to_string(line_no) + ": malformed row");
    }
    const auto role = trim(f[cols[2]]);
    const std::string uuid(trim(f[cols[0]]));
    if (role == "REFERRED") {
      out.add(uuid, t);
    } else if (role == "RELATED") {
      related_rows.emplace_back(std::string(trim(f[cols[3]])), uuid, t);
    } else {
      throw std::runtime_error("scenario csv line " + std::to_string(line_no) + ": unknown role");
    }
  }
  for (const auto& [owner, rel, t] : related_rows) out.add_relationship(owner, rel, t);
  return out;
}

ScenarioSet read_scenario_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_scenario_csv(in);
}

ScenarioOutputPaths write_scenario_output(const ScenarioSet& result, std::string_view description,
                                          std::string_view log_id, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto stem = "scenario_" + description_hash(description);
  ScenarioOutputPaths paths{out_dir / (stem + ".csv"), out_dir / (stem + ".json")};
  {
    auto out = open_out(paths.csv);
    out << scenario_csv(result);
  }
  nlohmann::json doc;
  doc["log_id"] = log_id;
  doc["description"] = description;
  auto& sc = doc["scenario"] = nlohmann::json::object();
  for (const auto& [id, e] : result) {
    nlohmann::json entry;
    entry["timestamps"] = e.timestamps.values();
    entry["related"] = nlohmann::json::object();
    for (const auto& [rel, ts] : e.related) entry["related"][rel] = ts.values();
    sc[id] = std::move(entry);
  }
  auto out = open_out(paths.json);
  out << doc.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + paths.json.string());
  return paths;
}

ScenarioFile read_scenario_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto doc = nlohmann::json::parse(in);
  ScenarioFile file;
  file.log_id = doc.value("log_id", std::string());
  file.description = doc.value("description", std::string());
  for (const auto& [id, entry] : doc.at("scenario").items()) {
    for (Timestamp t : entry.at("timestamps").get<std::vector<Timestamp>>()) file.scenario.add(id, t);
    for (const auto& [rel, ts] : entry.at("related").items()) {
      for (Timestamp t : ts.get<std::vector<Timestamp>>()) file.scenario.add_relationship(id, rel, t);
    }
  }
  return file;
}

}  // namespace refmine
