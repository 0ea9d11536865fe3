#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

/// Objective value with a secondary key used to break exact ties.
struct Scored {
  double value = 0.0;
  double tiebreak = 0.0;
};

bool better_or_equal(const Scored& a, const Scored& b);

struct ScoredPoint {
  Point x;
  Scored score;
};

using ScoreFunction = std::function<Scored(PointView)>;
using Feasibility = std::function<bool(PointView)>;

/// (1+1) evolution strategy with the one-fifth success rule, restricted to
/// `box` and to the feasible set. `start` must be feasible.
ScoredPoint maximize_es(const Point& start, const ScoreFunction& score, const Feasibility& feasible, const Box& box,
                        int budget, Rng& rng);

/// Runs maximize_es from every start with an equal share of `total_budget`
/// and returns the best result (earliest start wins ties).
ScoredPoint maximize_with_restarts(const std::vector<Point>& starts, const ScoreFunction& score,
                                   const Feasibility& feasible, const Box& box, int total_budget, Rng& rng);

}  // namespace cgp
