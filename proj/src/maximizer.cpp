#include "cgp/maximizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cgp {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kExpand = 1.5;
const double kShrink = std::pow(1.5, -0.25);

}  // namespace

bool better_or_equal(const Scored& a, const Scored& b) {
  if (a.value > b.value + kTieTolerance) return true;
  if (a.value < b.value - kTieTolerance) return false;
  return a.tiebreak >= b.tiebreak;
}

ScoredPoint maximize_es(const Point& start, const ScoreFunction& score, const Feasibility& feasible, const Box& box,
                        int budget, Rng& rng) {
  const std::size_t d = start.size();
  double mean_side = 0.0;
  for (std::size_t k = 0; k < d; ++k) mean_side += box.upper[k] - box.lower[k];
  mean_side /= static_cast<double>(d);
  double step = 0.2 * mean_side;
  const double min_step = 1e-9 * std::max(mean_side, 1e-12);

  ScoredPoint best{start, score(start)};
  Point trial(d);
  for (int e = 1; e < budget && step > min_step; ++e) {
    for (std::size_t k = 0; k < d; ++k) {
      trial[k] = std::clamp(best.x[k] + step * rng.normal(), box.lower[k], box.upper[k]);
    }
    if (!feasible(trial)) {
      step *= kShrink;
      continue;
    }
    const Scored s = score(trial);
    if (better_or_equal(s, best.score)) {
      best.x = trial;
      best.score = s;
      step *= kExpand;
    } else {
      step *= kShrink;
    }
  }
  return best;
}

ScoredPoint maximize_with_restarts(const std::vector<Point>& starts, const ScoreFunction& score,
                                   const Feasibility& feasible, const Box& box, int total_budget, Rng& rng) {
  if (starts.empty()) throw std::invalid_argument("maximize_with_restarts: no starting points");
  const int per_start = std::max(1, total_budget / static_cast<int>(starts.size()));
  ScoredPoint best;
  bool have = false;
  for (const auto& s : starts) {
    ScoredPoint r = maximize_es(s, score, feasible, box, per_start, rng);
    if (!have || (better_or_equal(r.score, best.score) &&
                  !(std::abs(r.score.value - best.score.value) <= kTieTolerance &&
                    r.score.tiebreak == best.score.tiebreak))) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace cgp
