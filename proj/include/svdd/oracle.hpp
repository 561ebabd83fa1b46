#pragma once

#include <cstddef>
#include <vector>

#include "svdd/dense_net.hpp"
#include "svdd/rng.hpp"

namespace svdd {

struct Ball {
    Vec center;
    double radius = 0.0;
};

// Smallest ball containing all points.  Runs away-step Frank-Wolfe on the
// dual (maximize the weighted mean squared distance to the weighted mean over
// the simplex); the Frank-Wolfe gap sandwiches the optimum, so iteration
// stops once max_i ||x_i - c||^2 exceeds the dual value by at most
// `tolerance` relatively, which certifies the returned radius to about
// tolerance/2 in relative terms.  The returned radius is the covering radius
// max_i ||x_i - c||, so the ball always contains every point.
Ball min_enclosing_ball(const std::vector<Vec>& points, double tolerance = 1e-10,
                        std::size_t max_iterations = 100000);

// Soft-boundary one-class solution in input space:
//   minimize_{c, z >= 0}  z + (1 / (nu n)) sum_i max(0, ||x_i - c||^2 - z)
// For a fixed center the optimal z is an order statistic (the ceil(nu n)-th
// largest squared distance), which eliminates z exactly; the remaining convex
// function of the center is minimized by seeded adaptive direct search with a
// hinge-subgradient candidate direction.  With nu n < 1 no exclusion is ever
// profitable and the optimum coincides with the minimum enclosing ball.
struct SoftSvddSolution {
    Ball ball;     // center and sqrt(z)
    Vec slacks;    // per point: max(0, ||x_i - c||^2 - z)
    double nu = 0.0;
    double objective = 0.0;  // z + (1 / (nu n)) * sum(slacks)
};

// `iterations` bounds the number of search rounds; `objective_trace`, when
// given, receives the incumbent objective after each round (non-increasing).
SoftSvddSolution soft_svdd(const std::vector<Vec>& points, double nu, std::size_t iterations,
                           SeededRng& rng, std::vector<double>* objective_trace = nullptr);

}  // namespace svdd
