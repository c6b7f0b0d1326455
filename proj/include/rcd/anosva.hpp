#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "rcd/dataset.hpp"
#include "rcd/junction_sets.hpp"
#include "rcd/mixed_model.hpp"

namespace rcd {

/// Two-way fixed-effects ANOVA with a tissue x junction interaction, fitted
/// by ordinary least squares under sum-to-zero constraints.
struct AnosvaResult {
  std::string set_id;
  std::string gene;
  TissuePair tissues;
  double F = 0.0;  // interaction F statistic
  int df1 = 0;     // (T - 1)(J - 1)
  int df2 = 0;     // n - T J
  double p = 1.0;
  double ss_interaction = 0.0;
  double ss_residual = 0.0;
  double mu0_hat = 0.0;
  Eigen::VectorXd alpha_hat;  // per tissue
  Eigen::VectorXd beta_hat;   // per junction
  Eigen::MatrixXd gamma_hat;  // tissue x junction
  std::size_t n_obs = 0;
};

/// Upper tail of the F(df1, df2) distribution.
double f_survival(double F, double df1, double df2);

/// General rows x cols layout; `cell[i] = row * cols + col`.
AnosvaResult fit_anosva_cells(std::size_t rows, std::size_t cols, std::span<const int> cell,
                              std::span<const double> value);

/// Treats every channel observation as independent (no spot effect).
AnosvaResult fit_anosva(const SpotTable& table);

AnosvaResult fit_anosva(const Dataset& dataset, const IncompatibleSet& set,
                        const TissuePair& tissues);

}  // namespace rcd
