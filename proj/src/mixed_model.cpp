#include "rcd/mixed_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "rcd/error.hpp"

namespace rcd {
namespace {

constexpr int kGridIntervals = 40;

struct Standardized {
  std::vector<double> z;
  double location = 0.0;
  double scale = 1.0;
};

// Fitting runs on (y - mean) / sd so the search sees the same objective for
// any affine rescaling of the data.
Standardized standardize(std::span<const double> y) {
  Standardized s;
  const auto n = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw ModelError(ModelError::Kind::degenerate_data, "degenerate data: zero total variance");
  }
  s.location = mean;
  s.scale = sd;
  s.z.reserve(y.size());
  for (double v : y) s.z.push_back((v - mean) / sd);
  return s;
}

struct GlsSolution {
  Eigen::VectorXd mu;
  Eigen::MatrixXd info;  // X' V0^{-1} X
  double quad = 0.0;     // r' V0^{-1} r
  double logdet = 0.0;   // log |V0|
};

// V0 is block diagonal with compound-symmetric blocks (1 - rho) I + rho 11'.
// For a block of size k its inverse is (I - c 11') / (1 - rho) with
// c = rho / (1 + (k - 1) rho) and its determinant (1 - rho)^(k-1) (1 + (k-1) rho).
GlsSolution solve_gls(const SpotTable& t, std::span<const double> z, double rho) {
  const auto p = static_cast<Eigen::Index>(t.cell_count());
  GlsSolution s;
  s.info = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  const double inv_scale = 1.0 / (1.0 - rho);

  for (std::size_t g = 0; g < t.group_count(); ++g) {
    const auto lo = t.group_offsets[g];
    const auto hi = t.group_offsets[g + 1];
    const auto k = static_cast<double>(hi - lo);
    const double c = rho / (1.0 + (k - 1.0) * rho);
    double zsum = 0.0;
    for (auto i = lo; i < hi; ++i) zsum += z[i];
    for (auto a = lo; a < hi; ++a) {
      for (auto b = lo; b < hi; ++b) {
        s.info(t.cell[a], t.cell[b]) += inv_scale * ((a == b ? 1.0 : 0.0) - c);
      }
      rhs(t.cell[a]) += inv_scale * (z[a] - c * zsum);
    }
    s.logdet += (k - 1.0) * std::log1p(-rho) + std::log1p((k - 1.0) * rho);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(s.info);
  if (llt.info() != Eigen::Success) {
    throw ModelError(ModelError::Kind::singular_information, "singular information matrix");
  }
  s.mu = llt.solve(rhs);

  for (std::size_t g = 0; g < t.group_count(); ++g) {
    const auto lo = t.group_offsets[g];
    const auto hi = t.group_offsets[g + 1];
    const auto k = static_cast<double>(hi - lo);
    const double c = rho / (1.0 + (k - 1.0) * rho);
    double rsum = 0.0;
    double rsq = 0.0;
    for (auto i = lo; i < hi; ++i) {
      const double r = z[i] - s.mu(t.cell[i]);
      rsum += r;
      rsq += r * r;
    }
    s.quad += inv_scale * (rsq - c * rsum * rsum);
  }
  return s;
}

double loglik_from(const GlsSolution& s, std::size_t n) {
  const auto nd = static_cast<double>(n);
  const double sigma2 = s.quad / nd;
  return -0.5 * nd * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0) - 0.5 * s.logdet;
}

double standardized_loglik(const SpotTable& t, std::span<const double> z, double rho) {
  const auto s = solve_gls(t, z, rho);
  const double ll = loglik_from(s, z.size());
  if (!std::isfinite(ll)) {
    throw ModelError(ModelError::Kind::degenerate_data,
                     fmt::format("non-finite log-likelihood at rho = {}", rho));
  }
  return ll;
}

bool has_paired_group(const SpotTable& t) {
  for (std::size_t g = 0; g < t.group_count(); ++g) {
    if (t.group_offsets[g + 1] - t.group_offsets[g] > 1) return true;
  }
  return false;
}

struct RhoSearch {
  double rho = 0.0;
  double loglik = 0.0;
  bool identifiable = true;
};

RhoSearch search_rho(const SpotTable& t, std::span<const double> z) {
  if (!has_paired_group(t)) {
    // Every group is a singleton: V0 = I for all rho, so rho is not identified.
    return {0.0, standardized_loglik(t, z, 0.0), false};
  }
  const double upper = 1.0 - kRhoUpperGuard;
  std::vector<double> grid(kGridIntervals + 1);
  std::vector<double> values(kGridIntervals + 1);
  int best = 0;
  for (int i = 0; i <= kGridIntervals; ++i) {
    grid[i] = upper * static_cast<double>(i) / kGridIntervals;
    values[i] = standardized_loglik(t, z, grid[i]);
    if (values[i] > values[best]) best = i;
  }

  // Golden-section refinement inside the bracket around the best grid point.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = grid[std::max(best - 1, 0)];
  double b = grid[std::min(best + 1, kGridIntervals)];
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = standardized_loglik(t, z, x1);
  double f2 = standardized_loglik(t, z, x2);
  int iterations = 0;
  while (b - a > kRhoTolerance) {
    if (++iterations > 200) {
      throw ModelError(ModelError::Kind::no_convergence, "variance-ratio search did not converge");
    }
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = standardized_loglik(t, z, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = standardized_loglik(t, z, x1);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fmid = standardized_loglik(t, z, mid);
  if (fmid >= values[best]) return {mid, fmid, true};
  return {grid[best], values[best], true};
}

void require_replication(const SpotTable& t) {
  const auto sizes = t.cell_sizes();
  const auto J = t.junction_count();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] < 2) {
      const auto& tissue = c < J ? t.tissues.first : t.tissues.second;
      throw ModelError(ModelError::Kind::insufficient_replication,
                       fmt::format("insufficient replication: junction {} has {} spot(s) in {}",
                                   t.junctions[c % J], sizes[c], tissue));
    }
  }
}

}  // namespace

std::vector<std::size_t> SpotTable::cell_sizes() const {
  std::vector<std::size_t> sizes(cell_count(), 0);
  for (int c : cell) ++sizes[static_cast<std::size_t>(c)];
  return sizes;
}

void SpotTable::add_group(std::span<const int> cells, std::span<const double> values) {
  if (cells.size() != values.size() || cells.empty()) {
    throw ModelError(ModelError::Kind::invalid_argument, "spot group must be nonempty and paired");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] < 0 || static_cast<std::size_t>(cells[i]) >= cell_count()) {
      throw ModelError(ModelError::Kind::invalid_argument, "cell index out of range");
    }
    cell.push_back(cells[i]);
    value.push_back(values[i]);
  }
  group_offsets.push_back(value.size());
}

SpotTable collect_observations(const Dataset& dataset, const IncompatibleSet& set,
                               const TissuePair& tissues) {
  SpotTable table;
  table.tissues = tissues;
  for (const auto& m : set.members) table.junctions.push_back(m.id);
  const auto J = static_cast<int>(set.members.size());

  std::vector<int> cells;
  std::vector<double> values;
  for (int j = 0; j < J; ++j) {
    for (const auto& probe_id : set.members[j].probe_ids) {
      const auto probe = dataset.probe_index(probe_id);
      if (!probe) {
        throw ModelError(ModelError::Kind::invalid_argument,
                         fmt::format("probe {} of set {} not in dataset", probe_id, set.set_id));
      }
      for (const auto& spot : dataset.spots(*probe)) {
        cells.clear();
        values.clear();
        for (auto ch : {Channel::Cy3, Channel::Cy5}) {
          const auto& tissue = dataset.tissue(spot.array, ch);
          const auto v = spot.value[static_cast<std::size_t>(ch)];
          if (tissue == tissues.first) {
            cells.push_back(j);
            values.push_back(v);
          } else if (tissue == tissues.second) {
            cells.push_back(J + j);
            values.push_back(v);
          }
        }
        if (!cells.empty()) table.add_group(cells, values);
      }
    }
  }
  return table;
}

double profile_loglik(const SpotTable& table, double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ModelError(ModelError::Kind::invalid_argument, "rho must lie in [0, 1)");
  }
  const auto s = standardize(table.value);
  return standardized_loglik(table, s.z, rho) -
         static_cast<double>(table.observation_count()) * std::log(s.scale);
}

VarianceComponents profile_variance_ratio(const SpotTable& table) {
  if (table.observation_count() == 0) {
    throw ModelError(ModelError::Kind::degenerate_data, "no observations");
  }
  const auto s = standardize(table.value);
  const auto found = search_rho(table, s.z);
  const auto gls = solve_gls(table, s.z, found.rho);
  const double sigma2 = gls.quad / static_cast<double>(table.observation_count());
  if (!(sigma2 > 0.0)) {
    throw ModelError(ModelError::Kind::degenerate_data, "degenerate data: zero residual variance");
  }
  const double total = sigma2 * s.scale * s.scale;
  VarianceComponents vc;
  vc.rho = found.rho;
  vc.var_spot = found.rho * total;
  vc.var_resid = (1.0 - found.rho) * total;
  vc.loglik = found.loglik - static_cast<double>(table.observation_count()) * std::log(s.scale);
  vc.at_upper_bound = found.rho >= 1.0 - kRhoUpperGuard - kRhoTolerance;
  vc.identifiable = found.identifiable;
  return vc;
}

FitResult fit_spot_table(const SpotTable& table) {
  require_replication(table);
  const auto s = standardize(table.value);
  const auto found = search_rho(table, s.z);
  const auto gls = solve_gls(table, s.z, found.rho);
  const auto n = table.observation_count();
  const double sigma2 = gls.quad / static_cast<double>(n);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ModelError(ModelError::Kind::degenerate_data, "degenerate data: zero residual variance");
  }

  const auto p = static_cast<Eigen::Index>(table.cell_count());
  const auto J = static_cast<Eigen::Index>(table.junction_count());
  Eigen::MatrixXd cov_z = Eigen::LLT<Eigen::MatrixXd>(gls.info).solve(Eigen::MatrixXd::Identity(p, p));
  cov_z = 0.5 * (cov_z + cov_z.transpose().eval());

  const double scale2 = s.scale * s.scale;
  FitResult fit;
  fit.tissues = table.tissues;
  fit.junctions = table.junctions;
  fit.mu_hat.resize(2, J);
  for (Eigen::Index t = 0; t < 2; ++t) {
    for (Eigen::Index j = 0; j < J; ++j) fit.mu_hat(t, j) = s.location + s.scale * gls.mu(t * J + j);
  }
  fit.sigma_mu = (sigma2 * scale2) * cov_z;
  fit.var_spot = found.rho * sigma2 * scale2;
  fit.var_resid = (1.0 - found.rho) * sigma2 * scale2;
  fit.loglik = found.loglik - static_cast<double>(n) * std::log(s.scale);
  fit.n_obs = n;
  fit.rho_at_upper_bound = found.rho >= 1.0 - kRhoUpperGuard - kRhoTolerance;
  return fit;
}

FitResult fit_set(const Dataset& dataset, const IncompatibleSet& set, const TissuePair& tissues) {
  if (tissues.first == tissues.second) {
    throw ModelError(ModelError::Kind::invalid_argument, "tissue pair must name two tissues");
  }
  const auto& known = dataset.tissues();
  for (const auto* t : {&tissues.first, &tissues.second}) {
    if (!std::binary_search(known.begin(), known.end(), *t)) {
      throw ModelError(ModelError::Kind::invalid_argument,
                       fmt::format("tissue {} not present in design", *t));
    }
  }
  auto fit = fit_spot_table(collect_observations(dataset, set, tissues));
  fit.set_id = set.set_id;
  fit.gene = set.gene;
  return fit;
}

}  // namespace rcd
