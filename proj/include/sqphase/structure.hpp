#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "sqphase/common.hpp"
#include "sqphase/rng.hpp"

namespace sqphase {

class RngStream;

// Supported families of planted structures over coordinates 1..d.
enum class ClassKind {
  SparseSupport,    // all subsets of [d] of size s
  PerfectMatching,  // d a perfect square; matchings of K_{r,r} with r = sqrt(d),
                    // edge (k, k') stored as coordinate (k-1)*r + k'
};

// A planted structure: strictly increasing 1-based coordinate indices.
struct IndexSet {
  std::vector<int> indices;

  bool operator==(const IndexSet&) const = default;
  auto operator<=>(const IndexSet&) const = default;
};

int overlap(const IndexSet& a, const IndexSet& b);

struct StructureClass {
  ClassKind kind;
  int d;
  int s;  // support size; equals sqrt(d) for matchings

  static StructureClass sparse(int d, int s);
  static StructureClass matching(int d);

  BigInt cardinality() const;
  // True when `set` is a member of this class.
  bool contains(const IndexSet& set) const;
};

// counts[j] = number of members whose overlap with a fixed member is s - j,
// identical for every anchor by symmetry.  sum(counts) = cardinality.
struct ShellTable {
  std::vector<BigInt> counts;  // indexed by j = 0..s
  BigInt total;
};

ShellTable shell_counts(const StructureClass& cls);

// p[z] = P(|S ^ S'| = z) for independent uniform members S, S', z = 0..s.
std::vector<double> overlap_distribution(const StructureClass& cls);

// All members in lexicographic order of their index vectors.  Throws
// CapExceededError when the class has more than `cap` members.
std::vector<IndexSet> enumerate_class(const StructureClass& cls,
                                      std::uint64_t cap = kDefaultEnumerationCap);

// The m members closest to `anchor`: complete shells in order of decreasing
// overlap, the final partial shell filled lexicographically.
std::vector<IndexSet> hamming_ball(const StructureClass& cls, const IndexSet& anchor,
                                   std::uint64_t m,
                                   std::uint64_t cap = kDefaultEnumerationCap);

// Uniform member without enumerating the class.
IndexSet sample_uniform(const StructureClass& cls, RngStream& rng);

// Edge-index encoding of a bijection sigma over [r] (1-based).
IndexSet matching_from_permutation(int r, const std::vector<int>& sigma);

}  // namespace sqphase
