#include "modnas/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "modnas/errors.hpp"

namespace modnas {

std::vector<Vec> ParetoFront::values() const {
  std::vector<Vec> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.values);
  return out;
}

bool dominates(const Vec& a, const Vec& b) {
  check_size(b.size(), a.size(), "dominance comparison");
  bool strictly = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] > b[k]) return false;
    if (a[k] < b[k]) strictly = true;
  }
  return strictly;
}

ParetoFront nondominated_filter(std::vector<FrontPoint> points) {
  ParetoFront front;
  if (points.empty()) return front;
  front.num_objectives = points.front().values.size();
  for (const auto& p : points) {
    check_size(p.values.size(), front.num_objectives, "front point");
    if (!all_finite(p.values)) throw NumericError("non-finite objective value in point set");
  }
  std::sort(points.begin(), points.end(), [](const FrontPoint& a, const FrontPoint& b) {
    if (a.values != b.values) return a.values < b.values;
    return a.arch < b.arch;
  });
  // A dominating point always precedes the dominated one lexicographically,
  // so each candidate only needs to be compared against the points kept so far.
  for (auto& p : points) {
    if (!front.points.empty() && front.points.back().values == p.values) continue;
    bool dominated = false;
    for (const auto& q : front.points) {
      if (dominates(q.values, p.values)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.points.push_back(std::move(p));
  }
  return front;
}

ParetoFront nondominated_filter(const std::vector<Vec>& points) {
  std::vector<FrontPoint> tagged;
  tagged.reserve(points.size());
  for (const auto& v : points) tagged.push_back({v, -1});
  return nondominated_filter(std::move(tagged));
}

namespace {

std::vector<Vec> clipped(const std::vector<Vec>& points, const Vec& ref) {
  std::vector<Vec> out;
  out.reserve(points.size());
  bool warned = false;
  for (const auto& p : points) {
    check_size(p.size(), ref.size(), "hypervolume point");
    Vec q = p;
    for (std::size_t k = 0; k < q.size(); ++k) {
      if (q[k] > ref[k]) {
        if (!warned) {
          log_warning("hypervolume: point outside the reference box clipped to the reference point");
          warned = true;
        }
        q[k] = ref[k];
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

// Area dominated by a set of 2D points (any order) below (rx, ry).
double area_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double best_y = ry;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double y = pts[i].second;
    if (y >= best_y) continue;
    // strip from this x to the next x that lowers the staircase
    best_y = y;
    double next_x = rx;
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[j].second < best_y) {
        next_x = pts[j].first;
        break;
      }
    }
    area += (next_x - pts[i].first) * (ry - best_y);
  }
  return area;
}

}  // namespace

double hypervolume(const std::vector<Vec>& points, const Vec& reference) {
  const std::size_t m = reference.size();
  if (m >= 4) throw UnsupportedError("exact hypervolume supports at most 3 objectives, got " + std::to_string(m));
  if (m == 0) throw ShapeError("empty reference point");
  if (points.empty()) return 0.0;
  const std::vector<Vec> pts = nondominated_filter(clipped(points, reference)).values();
  if (m == 1) return reference[0] - pts.front()[0];
  if (m == 2) {
    std::vector<std::pair<double, double>> xy;
    for (const auto& p : pts) xy.emplace_back(p[0], p[1]);
    return area_2d(std::move(xy), reference[0], reference[1]);
  }
  // slice along the third objective
  std::vector<Vec> by_z = pts;
  std::sort(by_z.begin(), by_z.end(), [](const Vec& a, const Vec& b) { return a[2] < b[2]; });
  std::vector<std::pair<double, double>> slab;
  double volume = 0.0;
  for (std::size_t i = 0; i < by_z.size(); ++i) {
    slab.emplace_back(by_z[i][0], by_z[i][1]);
    const double z_next = i + 1 < by_z.size() ? by_z[i + 1][2] : reference[2];
    const double height = z_next - by_z[i][2];
    if (height > 0.0) volume += height * area_2d(slab, reference[0], reference[1]);
  }
  return volume;
}

double hypervolume(const ParetoFront& front, const Vec& reference) { return hypervolume(front.values(), reference); }

MonteCarloEstimate hypervolume_mc(const std::vector<Vec>& points, const Vec& reference, std::size_t samples,
                                  Rng& rng) {
  if (samples == 0) throw ParameterError("Monte-Carlo hypervolume needs at least one sample");
  if (points.empty()) return {0.0, 0.0};
  const std::vector<Vec> pts = nondominated_filter(clipped(points, reference)).values();
  double box = 1.0;
  for (double r : reference) box *= r;
  const std::size_t m = reference.size();
  Vec u(m);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < m; ++k) u[k] = rng.uniform() * reference[k];
    for (const auto& p : pts) {
      bool covered = true;
      for (std::size_t k = 0; k < m; ++k) {
        if (p[k] > u[k]) {
          covered = false;
          break;
        }
      }
      if (covered) {
        ++hits;
        break;
      }
    }
  }
  const double n = static_cast<double>(samples);
  const double frac = static_cast<double>(hits) / n;
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / n)};
}

namespace {

template <typename Dist>
double generational(const std::vector<Vec>& front, const std::vector<Vec>& reference_set, Dist dist) {
  if (front.empty() || reference_set.empty()) throw ParameterError("generational distance of an empty set");
  double total = 0.0;
  for (const auto& p : front) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : reference_set) {
      check_size(s.size(), p.size(), "generational distance point");
      best = std::min(best, dist(p, s));
    }
    total += best;
  }
  return std::sqrt(total) / static_cast<double>(front.size());
}

double squared_euclid(const Vec& p, const Vec& s) {
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) d += (p[k] - s[k]) * (p[k] - s[k]);
  return d;
}

double squared_plus(const Vec& p, const Vec& s) {
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double e = std::max(p[k] - s[k], 0.0);
    d += e * e;
  }
  return d;
}

}  // namespace

double gd(const std::vector<Vec>& front, const std::vector<Vec>& reference_set) {
  return generational(front, reference_set, squared_euclid);
}

double igd(const std::vector<Vec>& front, const std::vector<Vec>& reference_set) {
  return gd(reference_set, front);
}

double gd_plus(const std::vector<Vec>& front, const std::vector<Vec>& reference_set) {
  return generational(front, reference_set, squared_plus);
}

double igd_plus(const std::vector<Vec>& front, const std::vector<Vec>& reference_set) {
  return gd_plus(reference_set, front);
}

}  // namespace modnas
