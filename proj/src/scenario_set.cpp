#include "refmine/scenario_set.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

namespace refmine {

TimeSet::TimeSet(std::initializer_list<Timestamp> init) : TimeSet(std::vector<Timestamp>(init)) {}

TimeSet::TimeSet(std::vector<Timestamp> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
}

void TimeSet::insert(Timestamp t) {
  if (values_.empty() || values_.back() < t) {
    values_.push_back(t);
    return;
  }
  auto it = std::lower_bound(values_.begin(), values_.end(), t);
  if (it == values_.end() || *it != t) values_.insert(it, t);
}

void TimeSet::erase(Timestamp t) {
  auto it = std::lower_bound(values_.begin(), values_.end(), t);
  if (it != values_.end() && *it == t) values_.erase(it);
}

bool TimeSet::contains(Timestamp t) const {
  return std::binary_search(values_.begin(), values_.end(), t);
}

TimeSet TimeSet::set_union(const TimeSet& a, const TimeSet& b) {
  TimeSet out;
  out.values_.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.values_));
  return out;
}

TimeSet TimeSet::set_intersection(const TimeSet& a, const TimeSet& b) {
  TimeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.values_));
  return out;
}

TimeSet TimeSet::set_difference(const TimeSet& a, const TimeSet& b) {
  TimeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.values_));
  return out;
}

void ScenarioSet::add(std::string_view id, Timestamp t) {
  auto it = entries_.find(id);
  if (it == entries_.end()) it = entries_.emplace(std::string(id), ScenarioEntry{}).first;
  it->second.timestamps.insert(t);
}

void ScenarioSet::add(std::string_view id, const TimeSet& ts) {
  if (ts.empty()) return;
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    entries_.emplace(std::string(id), ScenarioEntry{ts, {}});
    return;
  }
  it->second.timestamps = TimeSet::set_union(it->second.timestamps, ts);
}

void ScenarioSet::add_relationship(std::string_view id, std::string_view related, Timestamp t) {
  auto it = entries_.find(id);
  if (it == entries_.end()) it = entries_.emplace(std::string(id), ScenarioEntry{}).first;
  it->second.timestamps.insert(t);
  auto rel = it->second.related.find(related);
  if (rel == it->second.related.end()) rel = it->second.related.emplace(std::string(related), TimeSet{}).first;
  rel->second.insert(t);
}

void ScenarioSet::normalize() {
  for (auto it = entries_.begin(); it != entries_.end();) {
    auto& entry = it->second;
    for (auto rel = entry.related.begin(); rel != entry.related.end();) {
      rel->second = TimeSet::set_intersection(rel->second, entry.timestamps);
      rel = rel->second.empty() ? entry.related.erase(rel) : std::next(rel);
    }
    it = entry.timestamps.empty() ? entries_.erase(it) : std::next(it);
  }
}

bool ScenarioSet::contains(std::string_view id, Timestamp t) const {
  const auto* e = find(id);
  return e != nullptr && e->timestamps.contains(t);
}

const ScenarioEntry* ScenarioSet::find(std::string_view id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t ScenarioSet::pair_count() const {
  std::size_t n = 0;
  for (const auto& [id, e] : entries_) n += e.timestamps.size();
  return n;
}

std::size_t ScenarioSet::relationship_count() const {
  std::size_t n = 0;
  for (const auto& [id, e] : entries_) {
    for (const auto& [r, ts] : e.related) n += ts.size();
  }
  return n;
}

ScenarioSet ScenarioSet::without_relationships() const {
  ScenarioSet out;
  for (const auto& [id, e] : entries_) out.add(id, e.timestamps);
  return out;
}

ScenarioSet scenario_and(std::span<const ScenarioSet> inputs) {
  if (inputs.empty()) throw std::invalid_argument("scenario_and: empty input list");
  ScenarioSet out;
  for (const auto& [id, first] : inputs.front()) {
    TimeSet ts = first.timestamps;
    for (std::size_t i = 1; i < inputs.size() && !ts.empty(); ++i) {
      const auto* e = inputs[i].find(id);
      ts = e ? TimeSet::set_intersection(ts, e->timestamps) : TimeSet{};
    }
    if (ts.empty()) continue;
    out.add(id, ts);
    for (const auto& in : inputs) {
      const auto* e = in.find(id);
      for (const auto& [rel, rts] : e->related) {
        for (Timestamp t : TimeSet::set_intersection(rts, ts)) out.add_relationship(id, rel, t);
      }
    }
  }
  return out;
}

ScenarioSet scenario_or(std::span<const ScenarioSet> inputs) {
  if (inputs.empty()) throw std::invalid_argument("scenario_or: empty input list");
  ScenarioSet out;
  for (const auto& in : inputs) {
    for (const auto& [id, e] : in) {
      out.add(id, e.timestamps);
      for (const auto& [rel, rts] : e.related) {
        for (Timestamp t : rts) out.add_relationship(id, rel, t);
      }
    }
  }
  out.normalize();
  return out;
}

ScenarioSet scenario_not(const ScenarioSet& candidates, const ScenarioSet& filtered) {
  ScenarioSet out;
  for (const auto& [id, e] : candidates) {
    const auto* f = filtered.find(id);
    out.add(id, f ? TimeSet::set_difference(e.timestamps, f->timestamps) : e.timestamps);
  }
  return out;
}

ScenarioSet reverse_relationship(const ScenarioSet& input) {
  ScenarioSet out;
  for (const auto& [id, e] : input) {
    for (const auto& [rel, rts] : e.related) {
      for (Timestamp t : rts) out.add_relationship(rel, id, t);
    }
  }
  return out;
}

}  // namespace refmine
