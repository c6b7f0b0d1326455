#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rcd/enrich.hpp"
#include "rcd/error.hpp"

using namespace rcd;
using namespace rcd::enrich;

namespace {

std::vector<CallUnit> table(const std::vector<std::string>& genes, const std::vector<int>& n,
                            const std::vector<int>& sig) {
  std::vector<CallUnit> u;
  for (std::size_t g = 0; g < genes.size(); ++g) {
    for (int k = 0; k < n[g]; ++k) u.push_back({genes[g], k < sig[g]});
  }
  return u;
}

// Exact permutation p-value: every same-size subset of the genes.
double enumerate_pvalue(const std::vector<CallUnit>& units, const std::vector<std::string>& genes,
                        std::size_t k, double observed) {
  std::vector<bool> pick(genes.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  std::size_t total = 0, hits = 0;
  do {
    double si = 0, ni = 0, so = 0, no = 0;
    for (const auto& u : units) {
      const auto g = std::find(genes.begin(), genes.end(), u.gene) - genes.begin();
      (pick[g] ? ni : no) += 1;
      (pick[g] ? si : so) += u.significant;
    }
    const double r = (si / ni) / (so / no);
    ++total;
    hits += r >= observed - 1e-12;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("cutoff specifications") {
  CHECK(Cutoff::parse("posterior:0.9").kind == CutoffKind::posterior);
  CHECK(Cutoff::parse("lfdr:1e-3").threshold == 1e-3);
  CHECK(Cutoff::parse("q:0.1").kind == CutoffKind::qvalue);
  CHECK(Cutoff::parse("p:0.05").kind == CutoffKind::pvalue);
  CHECK_THROWS(Cutoff::parse("posterior"));
  CHECK_THROWS(Cutoff::parse("z:0.1"));
}

TEST_CASE("ratio arithmetic") {
  std::vector<CallUnit> units;
  for (int i = 0; i < 10; ++i) units.push_back({"IN" + std::to_string(i % 2), i < 2});
  for (int i = 0; i < 100; ++i) units.push_back({"OUT" + std::to_string(i % 7), i < 5});
  const std::vector<std::string> set{"IN0", "IN1", "ABSENT"};
  const auto r = enrichment_ratio(units, set);
  CHECK(r.n_sig_in == 2);
  CHECK(r.n_total_in == 10);
  CHECK(r.n_sig_out == 5);
  CHECK(r.n_total_out == 100);
  CHECK(r.ratio == doctest::Approx(4.0));
  CHECK(r.ratio_flag == RatioFlag::finite);
  CHECK(r.missing_genes == std::vector<std::string>{"ABSENT"});
}

TEST_CASE("uniform significance gives ratio one and duplication is harmless") {
  const auto u = table({"A", "B", "C", "D"}, {4, 4, 4, 4}, {1, 1, 1, 1});
  const std::vector<std::string> set{"A"};
  CHECK(enrichment_ratio(u, set).ratio == doctest::Approx(1.0));
  auto twice = u;
  twice.insert(twice.end(), u.begin(), u.end());
  const auto base = table({"A", "B", "C"}, {3, 5, 2}, {2, 1, 0});
  auto base2 = base;
  base2.insert(base2.end(), base.begin(), base.end());
  const std::vector<std::string> ab{"A"};
  CHECK(enrichment_ratio(base, ab).ratio == enrichment_ratio(base2, ab).ratio);
}

TEST_CASE("degenerate ratios are flagged") {
  const auto u = table({"A", "B"}, {2, 2}, {1, 0});
  const std::vector<std::string> a{"A"}, b{"B"}, none{"Z"};
  CHECK(enrichment_ratio(u, a).ratio_flag == RatioFlag::infinite);
  const auto z = table({"A", "B"}, {2, 2}, {0, 0});
  CHECK(enrichment_ratio(z, a).ratio_flag == RatioFlag::undefined);
  CHECK_THROWS_AS(enrichment_ratio(u, none), ValidationError);
}

TEST_CASE("relabeling genes outside and inside the set keeps the ratio") {
  const auto u = table({"A", "B", "C", "D"}, {3, 2, 4, 1}, {2, 0, 1, 1});
  auto relabeled = u;
  for (auto& x : relabeled) {
    if (x.gene == "C") x.gene = "D";
    else if (x.gene == "D") x.gene = "C";
  }
  const std::vector<std::string> set{"A", "B"};
  CHECK(enrichment_ratio(u, set).ratio == enrichment_ratio(relabeled, set).ratio);
}

TEST_CASE("permutation p-value matches full enumeration on six genes") {
  const std::vector<std::string> genes{"G1", "G2", "G3", "G4", "G5", "G6"};
  const auto u = table(genes, {5, 2, 3, 2, 2, 4}, {2, 0, 3, 2, 2, 0});
  const std::vector<std::string> set{"G1", "G2", "G3"};
  const auto observed = enrichment_ratio(u, set);
  CHECK(observed.ratio == doctest::Approx(1.0));
  const double exact = enumerate_pvalue(u, genes, 3, observed.ratio);
  CHECK(exact == doctest::Approx(0.55));
  const std::size_t n = 20000;
  const double p = permutation_pvalue(u, set, n, 17);
  CHECK(std::abs(p - exact) < 3.0 * std::sqrt(exact * (1 - exact) / n) + 1.0 / n);
}

TEST_CASE("permutation p-value is reproducible and thread-independent") {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.1);
  std::vector<CallUnit> u;
  for (int g = 0; g < 200; ++g) {
    for (int k = 0; k < 3; ++k) u.push_back({"g" + std::to_string(g), coin(rng)});
  }
  const std::vector<std::string> set{"g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8"};
  const double a = permutation_pvalue(u, set, 5000, 4, 1);
  const double b = permutation_pvalue(u, set, 5000, 4, 4);
  CHECK(a == b);
  CHECK(a > 0.0);
  CHECK(a <= 1.0);
  CHECK_THROWS(permutation_pvalue(u, set, 50, 4));
}

TEST_CASE("planted enrichment is detected") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution background(0.05), planted(0.6);
  std::vector<CallUnit> u;
  std::vector<std::string> set;
  for (int g = 0; g < 300; ++g) {
    const auto name = "g" + std::to_string(g);
    const bool in = g < 8;
    if (in) set.push_back(name);
    for (int k = 0; k < 4; ++k) u.push_back({name, in ? planted(rng) : background(rng)});
  }
  CHECK(permutation_pvalue(u, set, 2000, 5) < 0.01);
}

TEST_CASE("call tables and gene lists are parsed") {
  std::istringstream rcd_in(
      "set_id\tgene\tjunction\tt1\tt2\tU\tD\tE\tcall\tM\tseed\n"
      "s\tA\tj1\tC\tN\t0.95\t0.01\t0.04\tup\t1000\t1\n"
      "s\tB\tj2\tC\tN\t0.2\t0.3\t0.5\tnone\t1000\t1\n");
  const auto t = read_call_table(rcd_in);
  CHECK(t.kind == CallTable::Kind::rcd);
  CHECK(t.posterior == std::vector<double>{0.95, 0.3});
  const auto units = apply_cutoff(t, default_cutoff(t.kind));
  CHECK(units[0].significant);
  CHECK_FALSE(units[1].significant);

  std::istringstream an_in(
      "set_id\tgene\tt1\tt2\tF\tdf1\tdf2\tp\tq\tlfdr\n"
      "s\tA\tC\tN\t9\t1\t20\t0.001\t0.01\t0.02\n"
      "s\tA\tC\tN\t0.1\t1\t20\t0.7\t0.8\t1\n");
  const auto a = read_call_table(an_in);
  CHECK(a.kind == CallTable::Kind::anosva);
  const auto au = apply_cutoff(a, Cutoff::parse("lfdr:0.05"));
  CHECK(au[0].significant);
  const auto per_gene = collapse_per_gene(au);
  REQUIRE(per_gene.size() == 1);
  CHECK(per_gene[0].significant);

  std::istringstream genes("# known\nCALD1\n\nNF1\n");
  CHECK(read_gene_list(genes) == std::vector<std::string>{"CALD1", "NF1"});
}
