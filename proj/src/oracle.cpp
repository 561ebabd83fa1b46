#include "svdd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "svdd/errors.hpp"

namespace svdd {

namespace {

void check_points(const std::vector<Vec>& points) {
    if (points.empty()) throw ContractError("point set is empty");
    const std::size_t d = points.front().size();
    if (d == 0) throw ContractError("points must have at least one dimension");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].size() != d)
            throw ShapeError("point " + std::to_string(i) + " has dimension " +
                             std::to_string(points[i].size()) + ", point 0 has " +
                             std::to_string(d));
    }
}

double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

Vec weighted_mean(const std::vector<Vec>& points, const Vec& alpha) {
    Vec c(points.front().size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (alpha[i] == 0.0) continue;
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += alpha[i] * points[i][j];
    }
    return c;
}

}  // namespace

Ball min_enclosing_ball(const std::vector<Vec>& points, double tolerance,
                        std::size_t max_iterations) {
    check_points(points);
    const std::size_t n = points.size();

    Vec alpha(n, 1.0 / static_cast<double>(n));
    Vec dist2(n, 0.0);
    Ball ball;

    for (std::size_t iter = 0; iter <= max_iterations; ++iter) {
        Vec c = weighted_mean(points, alpha);

        // Dual value g = sum_i alpha_i ||x_i - c||^2; the optimum R*^2 lies
        // between g and max_i ||x_i - c||^2.
        double g = 0.0;
        std::size_t far = 0;    // Frank-Wolfe vertex: farthest point
        std::size_t near = n;   // away vertex: closest supported point
        for (std::size_t i = 0; i < n; ++i) {
            dist2[i] = sq_dist(points[i], c);
            g += alpha[i] * dist2[i];
            if (dist2[i] > dist2[far]) far = i;
            if (alpha[i] > 0.0 && (near == n || dist2[i] < dist2[near])) near = i;
        }
        const double gap = dist2[far] - g;
        ball.center = std::move(c);
        ball.radius = std::sqrt(std::max(0.0, dist2[far]));
        if (gap <= tolerance * std::max(g, 1e-30) || iter == max_iterations) break;

        const double away_gain = g - dist2[near];
        const bool away_usable = away_gain > gap && dist2[near] > 0.0 && alpha[near] < 1.0;
        if (!away_usable) {
            // Toward-step: alpha <- alpha + gamma (e_far - alpha).
            const double curvature = dist2[far];
            double gamma = gap / (2.0 * curvature);
            gamma = std::clamp(gamma, 0.0, 1.0);
            for (std::size_t i = 0; i < n; ++i) alpha[i] *= (1.0 - gamma);
            alpha[far] += gamma;
        } else {
            // Away-step: alpha <- alpha + gamma (alpha - e_near).
            const double curvature = dist2[near];
            const double gamma_max = alpha[near] / (1.0 - alpha[near]);
            double gamma = away_gain / (2.0 * curvature);
            const bool drop = gamma >= gamma_max;
            gamma = std::min(gamma, gamma_max);
            for (std::size_t i = 0; i < n; ++i) alpha[i] *= (1.0 + gamma);
            alpha[near] -= gamma;
            if (drop) alpha[near] = 0.0;
            // Counter accumulated drift: keep alpha exactly on the simplex.
            const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
            for (double& a : alpha) a /= sum;
        }
    }
    return ball;
}

namespace {

struct CenterEval {
    double z = 0.0;          // optimal z for this center
    double slack_sum = 0.0;  // sum of hinge excesses at that z
    double objective = 0.0;
};

// Exact minimization over z for a fixed center: z* is the k-th largest
// squared distance with k = ceil(nu n), clamped to [1, n].
CenterEval eval_center(const std::vector<Vec>& points, const Vec& center, double nu,
                       Vec& dist2_scratch) {
    const std::size_t n = points.size();
    const double m = nu * static_cast<double>(n);
    std::size_t k = static_cast<std::size_t>(std::ceil(m - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);

    dist2_scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) dist2_scratch[i] = sq_dist(points[i], center);

    Vec sorted = dist2_scratch;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(),
                     std::greater<double>());
    CenterEval eval;
    eval.z = sorted[k - 1];
    for (double d2 : dist2_scratch) {
        if (d2 > eval.z) eval.slack_sum += d2 - eval.z;
    }
    eval.objective = eval.z + eval.slack_sum / m;
    return eval;
}

// Hinge subgradient of the z-eliminated objective at `center`.  Strict
// violators carry weight 1/(nu n); points on the boundary z share the
// remaining weight so the total is one (the z-optimality condition).
Vec descent_direction(const std::vector<Vec>& points, const Vec& center, double nu,
                      const Vec& dist2, double z) {
    const std::size_t n = points.size();
    const double m = nu * static_cast<double>(n);
    const double tie_tol = 1e-12 * std::max(1.0, z);

    double strict_weight = 0.0;
    std::size_t boundary = 0;
    for (double d2 : dist2) {
        if (d2 > z + tie_tol)
            strict_weight += 1.0 / m;
        else if (d2 >= z - tie_tol)
            ++boundary;
    }
    const double remainder = std::max(0.0, 1.0 - strict_weight);

    Vec dir(center.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double w = 0.0;
        if (dist2[i] > z + tie_tol)
            w = 1.0 / m;
        else if (dist2[i] >= z - tie_tol && boundary > 0)
            w = remainder / static_cast<double>(boundary);
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < dir.size(); ++j) dir[j] += w * (center[j] - points[i][j]);
    }
    // Point downhill and normalize; an all-zero subgradient leaves dir zero.
    double norm = 0.0;
    for (double x : dir) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : dir) x /= -norm;
    }
    return dir;
}

}  // namespace

SoftSvddSolution soft_svdd(const std::vector<Vec>& points, double nu, std::size_t iterations,
                           SeededRng& rng, std::vector<double>* objective_trace) {
    check_points(points);
    if (!(nu > 0.0 && nu <= 1.0))
        throw ContractError("nu must lie in (0, 1], got " + std::to_string(nu));

    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();

    // nu n <= 1 prices every strict violator at 1/(nu n) >= 1, so excluding a
    // point can never beat covering it: the optimum is the hard enclosing
    // ball, which the dual solver finds to much tighter tolerance than the
    // direct search.  z is re-measured at the returned center so every slack
    // is exactly zero.
    if (nu * static_cast<double>(n) <= 1.0 + 1e-9) {
        const Ball ball = min_enclosing_ball(points);
        double z = 0.0;
        for (const Vec& p : points) z = std::max(z, sq_dist(p, ball.center));
        SoftSvddSolution solution;
        solution.nu = nu;
        solution.objective = z;
        solution.ball.center = ball.center;
        solution.ball.radius = std::sqrt(z);
        solution.slacks.assign(n, 0.0);
        if (objective_trace) {
            objective_trace->clear();
            objective_trace->push_back(z);
        }
        return solution;
    }

    Vec center(dim, 0.0);
    for (const Vec& p : points) {
        for (std::size_t j = 0; j < dim; ++j) center[j] += p[j];
    }
    for (double& x : center) x /= static_cast<double>(n);

    Vec dist2;
    CenterEval best = eval_center(points, center, nu, dist2);
    Vec best_center = center;

    double spread = 0.0;
    for (const Vec& p : points) spread = std::max(spread, sq_dist(p, center));
    double step = std::sqrt(spread);

    if (objective_trace) objective_trace->clear();

    if (step > 0.0) {
        const std::size_t direction_pairs = dim + 3;
        for (std::size_t round = 0; round < iterations && step > 1e-12 * std::sqrt(spread);
             ++round) {
            // Candidate moves: one hinge-subgradient step plus random probes.
            std::vector<Vec> candidates;
            eval_center(points, best_center, nu, dist2);  // refresh dist2 at the incumbent
            CenterEval inc = best;
            Vec down = descent_direction(points, best_center, nu, dist2, inc.z);
            bool has_down = false;
            for (double x : down) has_down = has_down || x != 0.0;
            if (has_down) {
                Vec cand = best_center;
                for (std::size_t j = 0; j < dim; ++j) cand[j] += step * down[j];
                candidates.push_back(std::move(cand));
            }
            for (std::size_t p = 0; p < direction_pairs; ++p) {
                Vec u(dim);
                double norm = 0.0;
                for (double& x : u) {
                    x = rng.gaussian();
                    norm += x * x;
                }
                norm = std::sqrt(norm);
                if (norm == 0.0) continue;
                Vec plus = best_center;
                Vec minus = best_center;
                for (std::size_t j = 0; j < dim; ++j) {
                    plus[j] += step * u[j] / norm;
                    minus[j] -= step * u[j] / norm;
                }
                candidates.push_back(std::move(plus));
                candidates.push_back(std::move(minus));
            }

            bool improved = false;
            for (const Vec& cand : candidates) {
                CenterEval eval = eval_center(points, cand, nu, dist2);
                if (eval.objective < best.objective - 1e-15 * std::max(1.0, best.objective)) {
                    best = eval;
                    best_center = cand;
                    improved = true;
                }
            }
            step *= improved ? 1.2 : 0.7;
            step = std::min(step, std::sqrt(spread));
            if (objective_trace) objective_trace->push_back(best.objective);
        }
    }

    SoftSvddSolution solution;
    solution.nu = nu;
    solution.objective = best.objective;
    solution.ball.center = best_center;
    solution.ball.radius = std::sqrt(std::max(0.0, best.z));
    eval_center(points, best_center, nu, dist2);  // recompute distances at the winner
    solution.slacks.resize(n);
    for (std::size_t i = 0; i < n; ++i) solution.slacks[i] = std::max(0.0, dist2[i] - best.z);
    return solution;
}

}  // namespace svdd
