#include "sqphase/query.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqphase {

namespace {

double subset_sum(std::span<const double> row, const std::vector<int>& subset) {
  double w = 0.0;
  for (int j : subset) w += row[static_cast<std::size_t>(j - 1)];
  return w;
}

std::string subset_label(const std::vector<int>& subset) {
  std::string s = "{";
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(subset[i]);
  }
  return s + "}";
}

void check_subset(const std::vector<int>& subset) {
  if (subset.empty()) throw std::invalid_argument("query subset must be nonempty");
  if (!std::is_sorted(subset.begin(), subset.end()) ||
      std::adjacent_find(subset.begin(), subset.end()) != subset.end() || subset.front() < 1)
    throw std::invalid_argument("query subset must be increasing 1-based indices");
}

}  // namespace

Query Query::coordinate_threshold(int t, double c) {
  if (t < 1) throw std::invalid_argument("coordinate must be >= 1");
  Query q;
  q.name = "coord_ge(" + std::to_string(t) + ";" + std::to_string(c) + ")";
  q.eval = [t, c](std::span<const double> row) {
    return row[static_cast<std::size_t>(t - 1)] >= c ? 1.0 : 0.0;
  };
  q.descriptor = QueryDescriptor{QueryFamily::CoordinateThreshold, t, {}, c};
  return q;
}

Query Query::scaled_sum_threshold(double c) {
  Query q;
  q.name = "scaled_sum_ge(" + std::to_string(c) + ")";
  q.eval = [c](std::span<const double> row) {
    double w = 0.0;
    for (double x : row) w += x;
    return w / std::sqrt(static_cast<double>(row.size())) >= c ? 1.0 : 0.0;
  };
  q.descriptor = QueryDescriptor{QueryFamily::ScaledSumThreshold, 0, {}, c};
  return q;
}

Query Query::subset_sum_threshold(std::vector<int> subset, double c) {
  check_subset(subset);
  Query q;
  q.name = "subset_sum_ge(" + subset_label(subset) + ";" + std::to_string(c) + ")";
  q.eval = [subset, c](std::span<const double> row) { return subset_sum(row, subset) >= c ? 1.0 : 0.0; };
  q.descriptor = QueryDescriptor{QueryFamily::SubsetSumThreshold, 0, std::move(subset), c};
  return q;
}

Query Query::coordinate_square_threshold(int t, double c) {
  if (t < 1) throw std::invalid_argument("coordinate must be >= 1");
  Query q;
  q.name = "coord_sq_ge(" + std::to_string(t) + ";" + std::to_string(c) + ")";
  q.eval = [t, c](std::span<const double> row) {
    const double x = row[static_cast<std::size_t>(t - 1)];
    return x * x >= c ? 1.0 : 0.0;
  };
  q.descriptor = QueryDescriptor{QueryFamily::CoordinateSquareThreshold, t, {}, c};
  return q;
}

Query Query::subset_square_threshold(std::vector<int> subset, double c) {
  check_subset(subset);
  Query q;
  q.name = "subset_sq_ge(" + subset_label(subset) + ";" + std::to_string(c) + ")";
  const double size = static_cast<double>(subset.size());
  q.eval = [subset, c, size](std::span<const double> row) {
    const double w = subset_sum(row, subset);
    return w * w / size >= c ? 1.0 : 0.0;
  };
  q.descriptor = QueryDescriptor{QueryFamily::SubsetSquareThreshold, 0, std::move(subset), c};
  return q;
}

double evaluate_query(const Query& q, std::span<const double> row) {
  const double v = q.eval(row);
  if (!(std::fabs(v) <= q.bound))
    throw std::invalid_argument("query value exceeds advertised bound: " + q.name);
  return v;
}

}  // namespace sqphase
