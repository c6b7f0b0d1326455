#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "rcd/junction_sets.hpp"

using namespace rcd;

namespace {

std::vector<std::string> member_ids(const IncompatibleSet& s) {
  std::vector<std::string> ids;
  for (const auto& m : s.members) ids.push_back(m.id);
  return ids;
}

const IncompatibleSet* set_for_anchor(const SetBuildResult& r, const std::string& anchor) {
  for (const auto& s : r.sets) {
    if (s.anchor == anchor) return &s;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("closed-interval incompatibility") {
  const JunctionProbe a{"a", "G", 100, 200};
  CHECK(intervals_incompatible(a, {"b", "G", 150, 300}));
  CHECK_FALSE(intervals_incompatible(a, {"b", "G", 300, 400}));
  CHECK(intervals_incompatible(a, {"b", "G", 200, 300}));
  CHECK_THROWS_AS(intervals_incompatible(a, {"b", "H", 150, 300}), std::invalid_argument);
}

TEST_CASE("incompatibility is symmetric and matches brute force") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> pos(0, 100);
  for (int i = 0; i < 2000; ++i) {
    auto x = pos(rng), y = pos(rng), u = pos(rng), v = pos(rng);
    const JunctionProbe a{"a", "G", std::min(x, y), std::max(x, y)};
    const JunctionProbe b{"b", "G", std::min(u, v), std::max(u, v)};
    bool shared = false;
    for (std::int64_t p = a.j5; p <= a.j3; ++p) shared = shared || (p >= b.j5 && p <= b.j3);
    CHECK(intervals_incompatible(a, b) == shared);
    CHECK(intervals_incompatible(a, b) == intervals_incompatible(b, a));
  }
}

TEST_CASE("mutually overlapping pair collapses to one set") {
  const std::vector<JunctionProbe> probes{{"p1", "G", 100, 200}, {"p2", "G", 150, 250}};
  const auto r = build_sets(probes);
  REQUIRE(r.sets.size() == 1);
  CHECK(r.sets[0].size() == 2);
  CHECK(r.duplicates == 1);
}

TEST_CASE("oversized sets are excluded per anchor") {
  std::vector<JunctionProbe> probes;
  for (int i = 0; i < 12; ++i) probes.push_back({"p" + std::to_string(i), "G", 100 + i, 500 + i});
  const auto r = build_sets(probes, 10);
  CHECK(r.sets.empty());
  CHECK(r.excluded.size() == 12);
  CHECK(r.excluded[0].size == 12);
}

TEST_CASE("chain membership is anchor-relative") {
  const std::vector<JunctionProbe> probes{
      {"j1", "G", 100, 200}, {"j2", "G", 150, 250}, {"j3", "G", 220, 300}};
  const auto r = build_sets(probes);
  REQUIRE(r.sets.size() == 3);
  REQUIRE(set_for_anchor(r, "j1"));
  REQUIRE(set_for_anchor(r, "j2"));
  REQUIRE(set_for_anchor(r, "j3"));
  CHECK(member_ids(*set_for_anchor(r, "j1")) == std::vector<std::string>{"j1", "j2"});
  CHECK(member_ids(*set_for_anchor(r, "j2")) == std::vector<std::string>{"j1", "j2", "j3"});
  CHECK(member_ids(*set_for_anchor(r, "j3")) == std::vector<std::string>{"j2", "j3"});
  CHECK(r.size_histogram.at(2) == 2);
  CHECK(r.size_histogram.at(3) == 1);
}

TEST_CASE("probes of one junction are grouped and genes never mix") {
  const std::vector<JunctionProbe> probes{{"b2", "G", 100, 200}, {"b1", "G", 100, 200},
                                          {"c", "G", 150, 260}, {"x", "H", 100, 200},
                                          {"lone", "H", 900, 950}};
  const auto junctions = group_junctions(probes);
  REQUIRE(junctions.size() == 4);
  CHECK(junctions[0].id == "b1");
  CHECK(junctions[0].probe_ids == std::vector<std::string>{"b1", "b2"});
  const auto r = build_sets(probes);
  REQUIRE(r.sets.size() == 1);
  CHECK(r.sets[0].gene == "G");
  CHECK(r.singletons == 2);
}

TEST_CASE("set ids are stable under input order") {
  std::vector<JunctionProbe> probes{{"j1", "G", 100, 200}, {"j2", "G", 150, 250}, {"j3", "G", 220, 300}};
  const auto first = build_sets(probes);
  std::reverse(probes.begin(), probes.end());
  const auto second = build_sets(probes);
  std::set<std::string> a, b;
  for (const auto& s : first.sets) a.insert(s.set_id);
  for (const auto& s : second.sets) b.insert(s.set_id);
  CHECK(a == b);
  for (const auto& id : a) CHECK(id.size() == 16);
  std::ostringstream out;
  write_sets_tsv(out, first.sets);
  CHECK(out.str().rfind("set_id\tgene\tanchor_probe\tmember_probes\n", 0) == 0);
}
