#include "rcd/anosva.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <fmt/core.h>

#include "rcd/error.hpp"

namespace rcd {

double f_survival(double F, double df1, double df2) {
  if (!(F > 0.0)) return 1.0;
  if (std::isinf(F)) return 0.0;
  const boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, F));
}

AnosvaResult fit_anosva_cells(std::size_t rows, std::size_t cols, std::span<const int> cell,
                              std::span<const double> value) {
  if (rows < 2 || cols < 2) {
    throw ModelError(ModelError::Kind::invalid_argument, "need at least two tissues and junctions");
  }
  if (cell.size() != value.size()) {
    throw ModelError(ModelError::Kind::invalid_argument, "cell and value lengths differ");
  }
  const auto n_cells = rows * cols;
  std::vector<double> sum(n_cells, 0.0);
  std::vector<std::size_t> count(n_cells, 0);
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const auto c = static_cast<std::size_t>(cell[i]);
    if (c >= n_cells) throw ModelError(ModelError::Kind::invalid_argument, "cell index out of range");
    sum[c] += value[i];
    ++count[c];
  }
  for (std::size_t c = 0; c < n_cells; ++c) {
    if (count[c] == 0) {
      throw ModelError(ModelError::Kind::insufficient_replication,
                       fmt::format("empty cell (tissue {}, junction {})", c / cols, c % cols));
    }
  }
  const auto n = value.size();
  const auto df2 = static_cast<long>(n) - static_cast<long>(n_cells);
  if (df2 <= 0) {
    throw ModelError(ModelError::Kind::insufficient_replication, "zero residual degrees of freedom");
  }

  // Full (cell-means) model.
  Eigen::MatrixXd means(rows, cols);
  for (std::size_t c = 0; c < n_cells; ++c) {
    means(static_cast<Eigen::Index>(c / cols), static_cast<Eigen::Index>(c % cols)) =
        sum[c] / static_cast<double>(count[c]);
  }
  double rss_full = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(cell[i]);
    const double r = value[i] - means(static_cast<Eigen::Index>(c / cols), static_cast<Eigen::Index>(c % cols));
    rss_full += r * r;
  }

  // Additive model with effect (sum-to-zero) coding.
  const auto p_add = static_cast<Eigen::Index>(1 + (rows - 1) + (cols - 1));
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p_add);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto c = static_cast<std::size_t>(cell[i]);
    const auto t = c / cols;
    const auto j = c % cols;
    y(ii) = value[i];
    X(ii, 0) = 1.0;
    for (std::size_t k = 0; k + 1 < rows; ++k) {
      X(ii, static_cast<Eigen::Index>(1 + k)) = t == k ? 1.0 : (t == rows - 1 ? -1.0 : 0.0);
    }
    for (std::size_t k = 0; k + 1 < cols; ++k) {
      X(ii, static_cast<Eigen::Index>(rows + k)) = j == k ? 1.0 : (j == cols - 1 ? -1.0 : 0.0);
    }
  }
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  const double rss_add = (y - X * coef).squaredNorm();

  AnosvaResult r;
  r.df1 = static_cast<int>((rows - 1) * (cols - 1));
  r.df2 = static_cast<int>(df2);
  r.n_obs = n;
  r.ss_residual = rss_full;
  r.ss_interaction = std::max(0.0, rss_add - rss_full);
  if (rss_full > 0.0) {
    r.F = (r.ss_interaction / r.df1) / (rss_full / r.df2);
    r.p = f_survival(r.F, r.df1, r.df2);
  } else if (r.ss_interaction > 0.0) {
    r.F = std::numeric_limits<double>::infinity();
    r.p = 0.0;
  } else {
    r.F = 0.0;
    r.p = 1.0;
  }

  // Sum-to-zero decomposition of the cell means.
  r.mu0_hat = means.mean();
  r.alpha_hat = means.rowwise().mean().array() - r.mu0_hat;
  r.beta_hat = means.colwise().mean().transpose().array() - r.mu0_hat;
  r.gamma_hat = means;
  for (Eigen::Index t = 0; t < means.rows(); ++t) {
    for (Eigen::Index j = 0; j < means.cols(); ++j) {
      r.gamma_hat(t, j) -= r.mu0_hat + r.alpha_hat(t) + r.beta_hat(j);
    }
  }
  return r;
}

AnosvaResult fit_anosva(const SpotTable& table) {
  auto r = fit_anosva_cells(2, table.junction_count(), table.cell, table.value);
  r.tissues = table.tissues;
  return r;
}

AnosvaResult fit_anosva(const Dataset& dataset, const IncompatibleSet& set,
                        const TissuePair& tissues) {
  if (tissues.first == tissues.second) {
    throw ModelError(ModelError::Kind::invalid_argument, "tissue pair must name two tissues");
  }
  auto r = fit_anosva(collect_observations(dataset, set, tissues));
  r.set_id = set.set_id;
  r.gene = set.gene;
  return r;
}

}  // namespace rcd
