#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/postprocess.hpp"

#include <algorithm>
#include <map>

using namespace refmine;
using refmine::testing::bundle_of;
using refmine::testing::line_track;
using refmine::testing::sec;

namespace {

Track confident(const std::string& id, Category cat, double conf, int boxes = 3) {
  Track t = line_track(id, cat, 0, (boxes - 1) * 0.1, 10, 0, 0, 0, 0);
  for (auto& b : t.boxes) b.confidence = conf;
  return t;
}

TimeSet stamps(std::initializer_list<double> secs) {
  std::vector<Timestamp> v;
  for (double s : secs) v.push_back(sec(s));
  return TimeSet(v);
}

TimeSet range(double a, double b, double step) {
  std::vector<Timestamp> v;
  for (int i = 0; a + i * step <= b + 1e-9; ++i) v.push_back(sec(a + i * step));
  return TimeSet(v);
}

}  // namespace

TEST_CASE("top-K per class") {
  std::vector<Track> tracks;
  for (int i = 0; i < 250; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "v%03d", i);
    tracks.push_back(confident(id, Category::REGULAR_VEHICLE, 0.2 + 0.003 * i));
  }
  for (int i = 0; i < 50; ++i) tracks.push_back(confident("bus" + std::to_string(i), Category::BUS, 0.5));
  const auto kept = filter_top_k(tracks);
  std::map<Category, std::size_t> per;
  for (const auto& t : kept) ++per[t.category];
  CHECK(per[Category::REGULAR_VEHICLE] == 200);
  CHECK(per[Category::BUS] == 50);
  CHECK(std::is_sorted(kept.begin(), kept.end(), [](const Track& a, const Track& b) { return a.id < b.id; }));
  // the 50 lowest-confidence vehicles went away
  CHECK(std::none_of(kept.begin(), kept.end(), [](const Track& t) { return t.category == Category::REGULAR_VEHICLE && t.id < "v050"; }));
  CHECK(std::find_if(kept.begin(), kept.end(), [](const Track& t) { return t.id == "v050"; }) != kept.end());

  PostprocessConfig small;
  small.top_k_other = 2;
  const std::vector<Track> tied{confident("c", Category::BUS, 0.5), confident("a", Category::BUS, 0.5),
                                confident("b", Category::BUS, 0.5)};
  const auto t2 = filter_top_k(tied, small);
  REQUIRE(t2.size() == 2);
  CHECK(t2[0].id == "a");
  CHECK(t2[1].id == "b");
  // summed confidence, not the mean: more boxes win
  const std::vector<Track> sums{confident("x", Category::BUS, 0.9, 2), confident("y", Category::BUS, 0.5, 5),
                                confident("z", Category::BUS, 0.1, 3)};
  const auto t3 = filter_top_k(sums, small);
  CHECK(t3.size() == 2);
  CHECK(t3[0].id == "x");
  CHECK(t3[1].id == "y");
}

TEST_CASE("relationships beyond 50 m are pruned") {
  const auto b = bundle_of({line_track("a", Category::REGULAR_VEHICLE, 0, 1, 10, 0, 0, 0, 0),
                            line_track("far", Category::PEDESTRIAN, 0, 1, 10, 60, 0, 0, 0),
                            line_track("near", Category::PEDESTRIAN, 0, 1, 10, 10, 0, 0, 0)});
  ScenarioSet s;
  s.add_relationship("a", "far", sec(0.5));
  s.add_relationship("a", "near", sec(0.5));
  s.add("a", sec(0.7));
  const auto p = prune_far_relationships(s, b);
  CHECK(p.find("a")->related.count("far") == 0);
  CHECK(p.find("a")->related.count("near") == 1);
  CHECK(p.find("a")->timestamps == s.find("a")->timestamps);
  ScenarioSet plain;
  plain.add("a", sec(0.1));
  CHECK(prune_far_relationships(plain, b) == plain);
}

TEST_CASE("dilation worked example") {
  const auto b = bundle_of({line_track("t", Category::REGULAR_VEHICLE, 3, 15, 2, 0, 0, 0, 1)});
  ScenarioSet s;
  s.add("t", sec(4.5));
  s.add("t", sec(5.0));
  const auto d = dilate_segments(s, b);
  CHECK(d.find("t")->timestamps == stamps({4.0, 4.5, 5.0, 5.5}));
  CHECK(postprocess(s, b).find("t")->timestamps == stamps({4.0, 4.5, 5.0, 5.5}));
  CHECK(dilate_segments(d, b) == d);

  ScenarioSet longer;
  longer.add("t", range(6, 9, 0.5));
  CHECK(dilate_segments(longer, b) == longer);

  ScenarioSet start;
  start.add("t", sec(3.0));
  CHECK(dilate_segments(start, b).find("t")->timestamps == stamps({3.0, 3.5, 4.0, 4.5}));
  ScenarioSet end;
  end.add("t", sec(15.0));
  CHECK(dilate_segments(end, b).find("t")->timestamps == stamps({13.5, 14.0, 14.5, 15.0}));

  // two short segments that overlap after dilation merge
  ScenarioSet two;
  two.add("t", sec(8.0));
  two.add("t", sec(9.0));
  const auto m = dilate_segments(two, b).find("t")->timestamps;
  CHECK(m.front() <= sec(7.5));
  CHECK(m.back() >= sec(9.5));
  for (Timestamp t : two.find("t")->timestamps) CHECK(m.contains(t));
}

TEST_CASE("dilation keeps relationships only at referred stamps and never shrinks") {
  const auto b = bundle_of({line_track("t", Category::REGULAR_VEHICLE, 0, 10, 10, 0, 0, 0, 1),
                            line_track("r", Category::PEDESTRIAN, 0, 10, 10, 5, 0, 0, 0)});
  ScenarioSet s;
  s.add_relationship("t", "r", sec(5.0));
  const auto d = dilate_segments(s, b);
  const auto& e = *d.find("t");
  CHECK(e.timestamps.size() >= 15);
  CHECK(e.related.at("r").contains(sec(5.0)));
  for (Timestamp t : e.related.at("r")) CHECK(e.timestamps.contains(t));
  CHECK(dilate_segments(d, b) == d);
}

TEST_CASE("resampling to 2 Hz") {
  const auto b = bundle_of({line_track("t", Category::REGULAR_VEHICLE, 0, 10, 10, 0, 0, 0, 1)});
  ScenarioSet s;
  s.add("t", range(3.0, 4.9, 0.1));
  REQUIRE(s.find("t")->timestamps.size() == 20);
  const auto r = resample_output(s, b);
  const auto n = r.find("t")->timestamps.size();
  CHECK(n >= 4);
  CHECK(n <= 5);
  for (Timestamp t : r.find("t")->timestamps) CHECK(t % sec(0.5) == 0);

  const auto b2 = bundle_of({line_track("t", Category::REGULAR_VEHICLE, 0, 10, 2, 0, 0, 0, 1)});
  ScenarioSet two;
  two.add("t", range(1, 6, 0.5));
  CHECK(resample_output(two, b2) == two);
  CHECK(resample_output(ScenarioSet{}, b2).empty());
  ScenarioSet ghost;
  ghost.add("nobody", sec(1));
  CHECK(resample_output(ghost, b2).empty());
}

TEST_CASE("pipeline never reports relationships beyond the distance cap") {
  const auto b = bundle_of({line_track("a", Category::REGULAR_VEHICLE, 0, 5, 10, 0, 0, 0, 12),
                            line_track("p", Category::PEDESTRIAN, 0, 5, 10, 30, 0, 0, 0)});
  ScenarioSet s;
  for (double t = 0; t <= 5.0001; t += 0.1) s.add_relationship("a", "p", sec(t));
  const auto out = postprocess(s, b);
  // a is at 12 t, p at 30: within 50 m over the whole span
  CHECK_FALSE(out.find("a")->related.at("p").empty());
  const auto b_far = bundle_of({line_track("a", Category::REGULAR_VEHICLE, 0, 5, 10, 0, 0, 0, 12),
                                line_track("p", Category::PEDESTRIAN, 0, 5, 10, -20, 0, 0, 0)});
  const auto out2 = postprocess(s, b_far);
  // distance 20 + 12 t > 50 once t > 2.5
  const auto* e = out2.find("a");
  REQUIRE(e != nullptr);
  for (Timestamp t : e->related.at("p")) CHECK(t <= sec(2.5));
}

TEST_CASE("config parsing") {
  const auto c = PostprocessConfig::parse("top_k_large = 3\nlarge_classes = BUS, PEDESTRIAN\noutput_rate_hz = 1\n");
  CHECK(c.top_k_large == 3);
  CHECK(c.large_classes == std::vector<Category>{Category::BUS, Category::PEDESTRIAN});
  CHECK(c.output_rate_hz == 1.0);
  CHECK_THROWS_AS(PostprocessConfig::parse("topk = 3\n"), std::invalid_argument);
  CHECK_THROWS(PostprocessConfig::parse("output_rate_hz = -1\n"));
  CHECK_THROWS(PostprocessConfig::parse("large_classes = UNICORN\n"));
}

TEST_CASE("filter_bundle applies top-K to the log") {
  std::vector<Track> tracks;
  for (int i = 0; i < 120; ++i) tracks.push_back(confident("b" + std::to_string(1000 + i), Category::BUS, 0.5));
  const auto f = filter_bundle(bundle_of(tracks));
  CHECK(f.tracks.size() == 100);
  CHECK(f.log_id == "test");
}
