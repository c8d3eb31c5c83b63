#include "pgrecruit/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace pgrecruit
{

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& start, const NelderMeadOptions& options)
{
    const Eigen::Index n = start.size();
    const auto eval = [&f](const Eigen::VectorXd& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    // Columns are vertices.
    Eigen::MatrixXd simplex(n, n + 1);
    Eigen::VectorXd values(n + 1);
    simplex.col(0) = start;
    for (Eigen::Index j = 0; j < n; ++j)
    {
        simplex.col(j + 1) = start;
        simplex(j, j + 1) += options.initial_step;
    }
    for (Eigen::Index j = 0; j <= n; ++j) values[j] = eval(simplex.col(j));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n + 1));
    NelderMeadResult result;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter)
    {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(),
                  [&values](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
        const Eigen::Index best = order.front();
        const Eigen::Index worst = order.back();
        const Eigen::Index second = order[order.size() - 2];

        if (std::isfinite(values[worst]) && values[worst] - values[best] <= options.tolerance)
        {
            result.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index j = 0; j <= n; ++j)
        {
            if (j != worst) centroid += simplex.col(j);
        }
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - simplex.col(worst));
        const double f_reflected = eval(reflected);
        if (f_reflected < values[best])
        {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex.col(worst));
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected)
            {
                simplex.col(worst) = expanded;
                values[worst] = f_expanded;
            }
            else
            {
                simplex.col(worst) = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < values[second])
        {
            simplex.col(worst) = reflected;
            values[worst] = f_reflected;
            continue;
        }

        const bool outside = f_reflected < values[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (simplex.col(worst) - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted < (outside ? f_reflected : values[worst]))
        {
            simplex.col(worst) = contracted;
            values[worst] = f_contracted;
            continue;
        }

        for (Eigen::Index j = 0; j <= n; ++j)
        {
            if (j == best) continue;
            simplex.col(j) = simplex.col(best) + 0.5 * (simplex.col(j) - simplex.col(best));
            values[j] = eval(simplex.col(j));
        }
    }

    Eigen::Index best = 0;
    values.minCoeff(&best);
    result.x = simplex.col(best);
    result.value = values[best];
    result.iterations = iter;
    return result;
}

}  // namespace pgrecruit
