#include "rcd/rank_change.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/core.h>

#include "rcd/error.hpp"
#include "rcd/random.hpp"

namespace rcd {
namespace {

void ranks_into(const double* mu, std::size_t n, int* out) {
  for (std::size_t i = 0; i < n; ++i) {
    int r = 0;
    for (std::size_t k = 0; k < n; ++k) r += mu[k] <= mu[i] ? 1 : 0;
    out[i] = r;
  }
}

}  // namespace

std::vector<int> latent_ranks(std::span<const double> mu) {
  std::vector<int> ranks(mu.size());
  ranks_into(mu.data(), mu.size(), ranks.data());
  return ranks;
}

std::string_view to_string(Call c) noexcept {
  switch (c) {
    case Call::up:
      return "up";
    case Call::down:
      return "down";
    case Call::none:
      break;
  }
  return "none";
}

Call call_dse(double U, double D, double kappa) {
  if (!(kappa > 0.5 && kappa < 1.0)) {
    throw ModelError(ModelError::Kind::invalid_argument,
                     fmt::format("kappa must lie in (0.5, 1), got {}", kappa));
  }
  if (!(U >= 0.0 && U <= 1.0 && D >= 0.0 && D <= 1.0)) {
    throw ModelError(ModelError::Kind::invalid_argument, "U and D must be probabilities");
  }
  if (U > kappa) return Call::up;
  if (D > kappa) return Call::down;
  return Call::none;
}

CovarianceFactor factor_covariance(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw ModelError(ModelError::Kind::invalid_argument, "covariance must be square and nonempty");
  }
  if (!sigma.allFinite()) {
    throw ModelError(ModelError::Kind::not_positive_semidefinite, "covariance has non-finite entries");
  }
  const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw ModelError(ModelError::Kind::not_positive_semidefinite, "eigendecomposition failed");
  }
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < -1e-8 * std::max(largest, 1e-300)) {
    throw ModelError(ModelError::Kind::not_positive_semidefinite,
                     fmt::format("covariance not positive semidefinite (min eigenvalue {})",
                                 lambda.minCoeff()));
  }
  lambda = lambda.cwiseMax(0.0);
  Eigen::MatrixXd clipped = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  clipped = 0.5 * (clipped + clipped.transpose().eval());
  Eigen::LLT<Eigen::MatrixXd> llt2(clipped);
  if (llt2.info() == Eigen::Success) return {llt2.matrixL(), 0.0};

  const double mean_var = std::max(sym.diagonal().mean(), 1e-300);
  const double jitter = 1e-10 * mean_var;
  clipped.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt3(clipped);
  if (llt3.info() != Eigen::Success) {
    throw ModelError(ModelError::Kind::not_positive_semidefinite,
                     "covariance factorization failed after jitter");
  }
  return {llt3.matrixL(), jitter};
}

std::uint64_t rank_stream_seed(std::uint64_t master_seed, std::string_view set_id,
                               const TissuePair& tissues) {
  const auto& lo = std::min(tissues.first, tissues.second);
  const auto& hi = std::max(tissues.first, tissues.second);
  auto key = fnv1a64(set_id);
  key = fnv1a64(std::string_view("\x1f", 1), key);
  key = fnv1a64(lo, key);
  key = fnv1a64(std::string_view("\x1f", 1), key);
  key = fnv1a64(hi, key);
  return derive_seed(master_seed, key);
}

RankChangeResult rank_change_probability(const FitResult& fit, std::size_t draws,
                                         std::uint64_t seed, double kappa) {
  const auto J = static_cast<Eigen::Index>(fit.junction_count());
  if (J < 2) throw ModelError(ModelError::Kind::invalid_argument, "need at least two junctions");
  if (fit.mu_hat.rows() != 2 || fit.mu_hat.cols() != J || fit.sigma_mu.rows() != 2 * J ||
      fit.sigma_mu.cols() != 2 * J) {
    throw ModelError(ModelError::Kind::invalid_argument, "fit dimensions inconsistent");
  }
  if (draws < kMinDraws) {
    throw ModelError(ModelError::Kind::invalid_argument,
                     fmt::format("at least {} draws required, got {}", kMinDraws, draws));
  }
  if (!(kappa > 0.5 && kappa < 1.0)) {
    throw ModelError(ModelError::Kind::invalid_argument,
                     fmt::format("kappa must lie in (0.5, 1), got {}", kappa));
  }

  // Sample in canonical tissue order; orientation only decides which count
  // is reported as U and which as D.
  const bool flip = fit.tissues.second < fit.tissues.first;
  const Eigen::Index p = 2 * J;
  Eigen::VectorXd mean(p);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(p);
  for (Eigen::Index t = 0; t < 2; ++t) {
    const Eigen::Index src = flip ? 1 - t : t;
    for (Eigen::Index j = 0; j < J; ++j) {
      mean(t * J + j) = fit.mu_hat(src, j);
      perm.indices()(t * J + j) = static_cast<int>(src * J + j);
    }
  }
  // canonical = P^T * original ordering
  Eigen::MatrixXd sigma(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      sigma(a, b) = fit.sigma_mu(perm.indices()(a), perm.indices()(b));
    }
  }
  const auto factor = factor_covariance(sigma);

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(p);
  Eigen::VectorXd x(p);
  std::vector<int> rank(static_cast<std::size_t>(p));
  std::vector<std::size_t> lower_first(static_cast<std::size_t>(J), 0);  // canonical t_a rank < t_b rank
  std::vector<std::size_t> higher_first(static_cast<std::size_t>(J), 0);
  for (std::size_t m = 0; m < draws; ++m) {
    for (Eigen::Index i = 0; i < p; ++i) z(i) = normal(rng);
    x.noalias() = factor.lower.triangularView<Eigen::Lower>() * z;
    x += mean;
    ranks_into(x.data(), static_cast<std::size_t>(J), rank.data());
    ranks_into(x.data() + J, static_cast<std::size_t>(J), rank.data() + J);
    for (Eigen::Index j = 0; j < J; ++j) {
      const int ra = rank[static_cast<std::size_t>(j)];
      const int rb = rank[static_cast<std::size_t>(J + j)];
      if (ra < rb) ++lower_first[static_cast<std::size_t>(j)];
      else if (ra > rb) ++higher_first[static_cast<std::size_t>(j)];
    }
  }

  RankChangeResult result;
  result.jitter = factor.jitter;
  const auto md = static_cast<double>(draws);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto up = flip ? higher_first[static_cast<std::size_t>(j)] : lower_first[static_cast<std::size_t>(j)];
    const auto down = flip ? lower_first[static_cast<std::size_t>(j)] : higher_first[static_cast<std::size_t>(j)];
    RankCall call;
    call.junction = fit.junctions[static_cast<std::size_t>(j)];
    call.set_id = fit.set_id;
    call.gene = fit.gene;
    call.tissues = fit.tissues;
    call.U = static_cast<double>(up) / md;
    call.D = static_cast<double>(down) / md;
    call.E = static_cast<double>(draws - up - down) / md;
    call.call = call_dse(call.U, call.D, kappa);
    call.draws = draws;
    call.seed = seed;
    result.calls.push_back(std::move(call));
  }
  return result;
}

}  // namespace rcd
