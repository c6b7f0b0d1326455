#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rcd {

enum class FdrMethod { storey, bh };

FdrMethod parse_fdr_method(std::string_view text);
std::string_view to_string(FdrMethod m) noexcept;

/// Storey's null proportion #{p > lambda} / (m (1 - lambda)), clipped to
/// (0, 1]; an empty upper tail counts as one p-value.
double estimate_pi0(std::span<const double> pvalues, double lambda = 0.5);

/// Step-up q-values in input order. `bh` fixes pi0 = 1.
std::vector<double> qvalues(std::span<const double> pvalues, FdrMethod method = FdrMethod::storey,
                            double lambda = 0.5);

inline constexpr std::size_t kMinLfdrCount = 100;

struct LfdrResult {
  std::vector<double> lfdr;
  double pi0 = 1.0;
  bool fallback = false;  // too few p-values: lfdr = Storey q-values
  std::string warning;
};

/// Local FDR min(1, pi0 / f(p)), with f a nonincreasing histogram density
/// obtained by pooling adjacent violators over equal-width bins.
LfdrResult lfdr(std::span<const double> pvalues, std::size_t bins = 50, double lambda = 0.5);

}  // namespace rcd
