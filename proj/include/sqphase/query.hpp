#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqphase {

// Canonical bounded-query families; all are {0,1}-valued, so exact first and
// second moments are available under both models.
enum class QueryFamily {
  CoordinateThreshold,        // 1{ x_t >= c }
  ScaledSumThreshold,         // 1{ d^{-1/2} * sum_j x_j >= c }
  SubsetSumThreshold,         // 1{ sum_{j in A} x_j >= c }
  CoordinateSquareThreshold,  // 1{ x_t^2 >= c }
  SubsetSquareThreshold,      // 1{ |A|^{-1} (sum_{j in A} x_j)^2 >= c }
};

struct QueryDescriptor {
  QueryFamily family;
  int coordinate = 0;       // 1-based, coordinate families
  std::vector<int> subset;  // 1-based increasing, subset families
  double threshold = 0.0;

  bool operator==(const QueryDescriptor&) const = default;
};

// A query the oracle protocol can answer: any measurable map of one row into
// [-bound, bound].  Canonical queries carry a descriptor enabling exact
// expectations; ad hoc queries fall back to Monte Carlo.
struct Query {
  std::string name;
  double bound = 1.0;
  std::function<double(std::span<const double>)> eval;
  std::optional<QueryDescriptor> descriptor;

  static Query coordinate_threshold(int t, double c);
  static Query scaled_sum_threshold(double c);
  static Query subset_sum_threshold(std::vector<int> subset, double c);
  static Query coordinate_square_threshold(int t, double c);
  static Query subset_square_threshold(std::vector<int> subset, double c);
};

// Evaluates the query on one row and asserts the advertised bound.
double evaluate_query(const Query& q, std::span<const double> row);

}  // namespace sqphase
