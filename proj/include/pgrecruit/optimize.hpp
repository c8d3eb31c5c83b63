#pragma once

#include <functional>

#include <Eigen/Core>

namespace pgrecruit
{

struct NelderMeadOptions
{
    double tolerance = 1e-8;   ///< stop when simplex function values span less than this
    int max_iterations = 2000;
    double initial_step = 0.5;  ///< simplex edge along each coordinate
};

struct NelderMeadResult
{
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes `f` with the standard Nelder-Mead simplex
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
/// objective values are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace pgrecruit
