#include "rcd/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "rcd/error.hpp"

namespace rcd {
namespace {

void check_pvalues(std::span<const double> p) {
  if (p.empty()) throw ValidationError("empty p-value vector");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(fmt::format("p-value {} outside [0, 1]", v));
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw ValidationError(fmt::format("lambda must lie in [0, 1), got {}", lambda));
  }
}

}  // namespace

FdrMethod parse_fdr_method(std::string_view text) {
  if (text == "storey") return FdrMethod::storey;
  if (text == "bh") return FdrMethod::bh;
  throw ValidationError(fmt::format("unknown FDR method `{}` (expected storey or bh)", text));
}

std::string_view to_string(FdrMethod m) noexcept { return m == FdrMethod::bh ? "bh" : "storey"; }

double estimate_pi0(std::span<const double> pvalues, double lambda) {
  check_pvalues(pvalues);
  check_lambda(lambda);
  const auto above = std::count_if(pvalues.begin(), pvalues.end(), [&](double p) { return p > lambda; });
  const auto m = static_cast<double>(pvalues.size());
  const double pi0 = static_cast<double>(std::max<std::ptrdiff_t>(above, 1)) / (m * (1.0 - lambda));
  return std::min(1.0, pi0);
}

std::vector<double> qvalues(std::span<const double> pvalues, FdrMethod method, double lambda) {
  check_pvalues(pvalues);
  const double pi0 = method == FdrMethod::bh ? 1.0 : estimate_pi0(pvalues, lambda);
  const auto m = pvalues.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const auto i = order[k];
    const double candidate = pi0 * pvalues[i] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, candidate);
    q[i] = std::min(1.0, running);
  }
  return q;
}

LfdrResult lfdr(std::span<const double> pvalues, std::size_t bins, double lambda) {
  check_pvalues(pvalues);
  if (bins < 2) throw ValidationError("lfdr needs at least two bins");
  LfdrResult out;
  out.pi0 = estimate_pi0(pvalues, lambda);
  const auto m = pvalues.size();
  if (m < kMinLfdrCount) {
    out.fallback = true;
    out.warning = fmt::format("lfdr: only {} p-values (< {}); reporting Storey q-values instead", m,
                              kMinLfdrCount);
    out.lfdr = qvalues(pvalues, FdrMethod::storey, lambda);
    return out;
  }

  auto bin_of = [bins](double p) {
    return std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
  };
  std::vector<double> density(bins, 0.0);
  for (double p : pvalues) density[bin_of(p)] += 1.0;
  const double scale = static_cast<double>(bins) / static_cast<double>(m);
  for (auto& d : density) d *= scale;

  // Antitonic regression: pool adjacent bins until the density is nonincreasing.
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double d : density) {
    level.push_back(d);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] < level.back()) {
      const auto w = width[width.size() - 2] + width.back();
      const double v = (level[level.size() - 2] * static_cast<double>(width[width.size() - 2]) +
                        level.back() * static_cast<double>(width.back())) /
                       static_cast<double>(w);
      level.pop_back();
      width.pop_back();
      level.back() = v;
      width.back() = w;
    }
  }
  std::vector<double> pooled;
  pooled.reserve(bins);
  for (std::size_t b = 0; b < level.size(); ++b) pooled.insert(pooled.end(), width[b], level[b]);

  out.lfdr.reserve(m);
  for (double p : pvalues) {
    const double f = pooled[bin_of(p)];
    out.lfdr.push_back(f > 0.0 ? std::min(1.0, out.pi0 / f) : 1.0);
  }
  return out;
}

}  // namespace rcd
