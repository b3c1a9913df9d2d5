#pragma once

#include "refmine/types.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace refmine {

/// Sorted, duplicate-free set of timestamps backed by a contiguous vector.
class TimeSet {
 public:
  using const_iterator = std::vector<Timestamp>::const_iterator;

  TimeSet() = default;
  TimeSet(std::initializer_list<Timestamp> init);
  explicit TimeSet(std::vector<Timestamp> values);  // sorts and dedups

  void insert(Timestamp t);
  void erase(Timestamp t);
  bool contains(Timestamp t) const;

  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  const_iterator begin() const { return values_.begin(); }
  const_iterator end() const { return values_.end(); }
  Timestamp front() const { return values_.front(); }
  Timestamp back() const { return values_.back(); }
  const std::vector<Timestamp>& values() const { return values_; }

  static TimeSet set_union(const TimeSet& a, const TimeSet& b);
  static TimeSet set_intersection(const TimeSet& a, const TimeSet& b);
  static TimeSet set_difference(const TimeSet& a, const TimeSet& b);

  friend bool operator==(const TimeSet&, const TimeSet&) = default;

 private:
  std::vector<Timestamp> values_;
};

struct ScenarioEntry {
  TimeSet timestamps;
  std::map<std::string, TimeSet, std::less<>> related;

  friend bool operator==(const ScenarioEntry&, const ScenarioEntry&) = default;
};

/// A scenario dictionary: track id -> referred timestamps plus per-related-object
/// relationship timestamps. Relationship timestamps are always a subset of the
/// owning entry's timestamps and no stored set is empty once normalized.
class ScenarioSet {
 public:
  using Map = std::map<std::string, ScenarioEntry, std::less<>>;

  ScenarioSet() = default;

  void add(std::string_view id, Timestamp t);
  void add(std::string_view id, const TimeSet& ts);
  /// Adds the relationship and the referred timestamp it implies.
  void add_relationship(std::string_view id, std::string_view related, Timestamp t);

  /// Drops empty sets and clips relationships to their entry's timestamps.
  void normalize();

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }
  bool contains(std::string_view id, Timestamp t) const;
  const ScenarioEntry* find(std::string_view id) const;
  const Map& entries() const { return entries_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Number of (id, t) referred pairs.
  std::size_t pair_count() const;
  /// Number of (id, related, t) relationship triples.
  std::size_t relationship_count() const;

  /// Copy with the same referred pairs and no relationships.
  ScenarioSet without_relationships() const;

  friend bool operator==(const ScenarioSet&, const ScenarioSet&) = default;

 private:
  Map entries_;
};

/// Intersection of keys and timestamps; relationships are unioned and then
/// clipped to the surviving (id, t) pairs. Throws std::invalid_argument on an
/// empty input list.
ScenarioSet scenario_and(std::span<const ScenarioSet> inputs);

/// Union of keys, timestamps and relationships. Throws on an empty input list.
ScenarioSet scenario_or(std::span<const ScenarioSet> inputs);

/// Timestamps of `candidates` not present in `filtered`. Relationships are dropped.
ScenarioSet scenario_not(const ScenarioSet& candidates, const ScenarioSet& filtered);

/// Swaps referred and related objects: each (k, r, t) triple becomes (r, k, t).
ScenarioSet reverse_relationship(const ScenarioSet& input);

}  // namespace refmine
