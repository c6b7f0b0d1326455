#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "rcd/dataset.hpp"
#include "rcd/error.hpp"
#include "support/fixtures.hpp"

using namespace rcd;

namespace {

std::vector<JunctionProbe> probes_from(const std::string& text) {
  std::istringstream in(text);
  return parse_probes(in);
}

std::vector<ArrayChannelAssignment> design_from(const std::string& text) {
  std::istringstream in(text);
  return parse_design(in);
}

std::vector<IntensityRecord> intensities_from(const std::string& text, IntensityOptions opt = {}) {
  std::istringstream in(text);
  return parse_intensities(in, opt);
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_probes maps fields and skips comments") {
  const auto probes = probes_from("# probes\nprobe_id\tgene\tj5\tj3\np1\tVIM\t100\t200\n");
  REQUIRE(probes.size() == 1);
  CHECK(probes[0] == JunctionProbe{"p1", "VIM", 100, 200});
}

TEST_CASE("parse_probes rejects bad rows") {
  CHECK(error_of([] { probes_from("probe_id\tgene\tj5\tj3\np1\tVIM\t200\t100\n"); })
            .find("inverted interval") != std::string::npos);
  CHECK(error_of([] { probes_from("probe_id\tgene\tj5\tj3\np1\tVIM\t1\t2\np1\tVIM\t3\t4\n"); })
            .find("duplicate probe_id p1") != std::string::npos);
  const auto msg = error_of([] { probes_from("probe_id\tgene\tj5\tj3\np1\tVIM\t1\n"); });
  CHECK(msg.find(":2:") != std::string::npos);
  CHECK(msg.find("malformed row") != std::string::npos);
  CHECK(error_of([] { probes_from("probe_id\tgene\tj5\tj3\np1\tVIM\tx\t2\n"); }).find(":2:") !=
        std::string::npos);
  CHECK_FALSE(error_of([] { probes_from("id\tgene\tj5\tj3\n"); }).empty());
}

TEST_CASE("parse_design validates the reference layout") {
  SUBCASE("dye swap is balanced") {
    const auto d = design_from(
        "array_id\tchannel\ttissue\treplicate\n"
        "a1\tCy3\tN\t1\na1\tCy5\tC\t1\na2\tCy3\tC\t2\na2\tCy5\tN\t2\n");
    CHECK(d.size() == 4);
    CHECK(dye_balance_warnings(d).empty());
  }
  SUBCASE("same tissue on both channels") {
    CHECK(error_of([] {
            design_from("array_id\tchannel\ttissue\treplicate\na1\tCy3\tN\t1\na1\tCy5\tN\t1\n");
          }).find("reference design violated") != std::string::npos);
  }
  SUBCASE("array with a single channel") {
    CHECK(error_of([] { design_from("array_id\tchannel\ttissue\treplicate\na1\tCy3\tN\t1\n"); })
              .find("reference design violated") != std::string::npos);
  }
  SUBCASE("imbalance is a warning only") {
    const auto d = design_from(
        "array_id\tchannel\ttissue\treplicate\n"
        "a1\tCy3\tN\t1\na1\tCy5\tC\t1\na2\tCy3\tN\t2\na2\tCy5\tC\t2\na3\tCy3\tN\t3\na3\tCy5\tC\t3\n");
    const auto w = dye_balance_warnings(d);
    REQUIRE(w.size() == 2);
    CHECK(w[0].find("tissue C") != std::string::npos);
  }
}

TEST_CASE("parse_intensities transforms raw values") {
  const std::string header = "probe_id\tarray_id\tchannel\tvalue\n";
  auto r = intensities_from(header + "p1\ta1\tCy3\t1024\np1\ta1\tCy5\t0\n", {false, 1.0});
  CHECK(r[0].value == 10.0);
  CHECK(r[1].value == 0.0);
  r = intensities_from(header + "p1\ta1\tCy3\t7.25\n", {true, 1.0});
  CHECK(r[0].value == 7.25);
  CHECK_FALSE(error_of([&] { intensities_from(header + "p1\ta1\tCy3\tabc\n"); }).empty());
  CHECK_FALSE(error_of([&] { intensities_from(header + "p1\ta1\tCy3\tnan\n", {true, 1.0}); }).empty());
  CHECK_FALSE(error_of([&] { intensities_from(header + "p1\ta1\tCy3\t1\np1\ta1\tCy3\t2\n"); }).empty());
}

TEST_CASE("log transform is monotone above the floor") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(2.0, 1e6);
  std::vector<double> raw(200);
  for (auto& v : raw) v = u(rng);
  std::sort(raw.begin(), raw.end());
  std::string text = "probe_id\tarray_id\tchannel\tvalue\n";
  for (std::size_t i = 0; i < raw.size(); ++i) text += "p" + std::to_string(i) + "\ta\tCy3\t" + std::to_string(raw[i]) + "\n";
  const auto recs = intensities_from(text, {false, 2.0});
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].value <= recs[i].value);
}

TEST_CASE("validate_dataset enforces integrity") {
  auto raw = rcd::testing::paired_set({{1.0, 2.0}, {1.5, 2.5}}, 2, 0.1, 0.1, 1);
  SUBCASE("consistent toy dataset") {
    const auto ds = raw.validate();
    CHECK(ds.summary().records == 8);
    CHECK(ds.summary().spots == 4);
    CHECK(ds.summary().genes == 1);
    CHECK(ds.summary().junctions == 2);
    CHECK(ds.summary().arrays == 2);
    CHECK(ds.tissues() == std::vector<std::string>{"C", "N"});
    CHECK(ds.warnings().empty());
  }
  SUBCASE("unknown probe") {
    raw.intensities.push_back({"pX", "A1", Channel::Cy3, 1.0});
    CHECK(error_of([&] { (void)raw.validate(); }).find("pX") != std::string::npos);
  }
  SUBCASE("unknown array") {
    raw.intensities.push_back({raw.probes[0].probe_id, "A9", Channel::Cy3, 1.0});
    CHECK(error_of([&] { (void)raw.validate(); }).find("A9") != std::string::npos);
  }
  SUBCASE("unpaired spot") {
    raw.intensities.erase(raw.intensities.begin());
    CHECK(error_of([&] { (void)raw.validate(); }).find("unpaired spot") != std::string::npos);
  }
}

TEST_CASE("writing and re-parsing a dataset round-trips") {
  const auto raw = rcd::testing::paired_set({{1.0, 2.0, 3.0}, {1.5, 2.5, 0.5}}, 6, 0.3, 0.2, 9);
  const auto ds = raw.validate();
  std::stringstream p, d, i;
  write_probes(p, ds.probes());
  write_design(d, ds.design());
  write_intensities(i, ds.intensities());
  const auto again = validate_dataset(parse_probes(p), parse_design(d), parse_intensities(i, {true, 1.0}));
  CHECK(again.probes() == ds.probes());
  CHECK(again.design() == ds.design());
  CHECK(again.intensities() == ds.intensities());
  CHECK(again.summary().spots == ds.summary().spots);
}
