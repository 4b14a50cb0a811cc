#include "sqphase/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sqphase/stats.hpp"

namespace sqphase {

namespace {

int isqrt_exact(int d) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  if (r * r != d) throw std::invalid_argument("matching class needs d to be a perfect square");
  return r;
}

}  // namespace

int overlap(const IndexSet& a, const IndexSet& b) {
  int count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] == b.indices[j]) {
      ++count, ++i, ++j;
    } else if (a.indices[i] < b.indices[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return count;
}

StructureClass StructureClass::sparse(int d, int s) {
  if (d < 1 || s < 1 || s > d) throw std::invalid_argument("sparse class needs 1 <= s <= d");
  return {ClassKind::SparseSupport, d, s};
}

StructureClass StructureClass::matching(int d) {
  const int r = isqrt_exact(d);
  return {ClassKind::PerfectMatching, d, r};
}

BigInt StructureClass::cardinality() const {
  return kind == ClassKind::SparseSupport ? binomial(d, s) : factorial(s);
}

bool StructureClass::contains(const IndexSet& set) const {
  if (static_cast<int>(set.indices.size()) != s) return false;
  if (!std::is_sorted(set.indices.begin(), set.indices.end())) return false;
  if (std::adjacent_find(set.indices.begin(), set.indices.end()) != set.indices.end()) return false;
  if (set.indices.front() < 1 || set.indices.back() > d) return false;
  if (kind == ClassKind::SparseSupport) return true;
  // Matching: each left and each right endpoint used exactly once.
  std::vector<bool> left(s + 1, false), right(s + 1, false);
  for (int idx : set.indices) {
    const int k = (idx - 1) / s + 1;
    const int kp = (idx - 1) % s + 1;
    if (left[k] || right[kp]) return false;
    left[k] = right[kp] = true;
  }
  return true;
}

ShellTable shell_counts(const StructureClass& cls) {
  ShellTable table;
  table.counts.resize(cls.s + 1);
  for (int j = 0; j <= cls.s; ++j) {
    const BigInt keep = binomial(cls.s, cls.s - j);
    table.counts[j] = cls.kind == ClassKind::SparseSupport
                          ? keep * binomial(cls.d - cls.s, j)
                          : keep * derangements(j);
  }
  table.total = std::accumulate(table.counts.begin(), table.counts.end(), BigInt{0});
  return table;
}

std::vector<double> overlap_distribution(const StructureClass& cls) {
  const ShellTable table = shell_counts(cls);
  std::vector<double> p(cls.s + 1, 0.0);
  for (int j = 0; j <= cls.s; ++j) p[cls.s - j] = ratio(table.counts[j], table.total);
  return p;
}

std::vector<IndexSet> enumerate_class(const StructureClass& cls, std::uint64_t cap) {
  if (cls.cardinality() > cap) throw CapExceededError("enumerate_class: cardinality exceeds cap");
  std::vector<IndexSet> out;
  out.reserve(static_cast<std::size_t>(cls.cardinality().convert_to<std::uint64_t>()));
  if (cls.kind == ClassKind::SparseSupport) {
    std::vector<int> pick(cls.s);
    std::iota(pick.begin(), pick.end(), 1);
    while (true) {
      out.push_back(IndexSet{pick});
      int i = cls.s - 1;
      while (i >= 0 && pick[i] == cls.d - (cls.s - 1 - i)) --i;
      if (i < 0) break;
      ++pick[i];
      for (int k = i + 1; k < cls.s; ++k) pick[k] = pick[k - 1] + 1;
    }
  } else {
    std::vector<int> sigma(cls.s);
    std::iota(sigma.begin(), sigma.end(), 1);
    do {
      out.push_back(matching_from_permutation(cls.s, sigma));
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    // Lexicographic permutation order equals lexicographic edge-index order.
  }
  return out;
}

std::vector<IndexSet> hamming_ball(const StructureClass& cls, const IndexSet& anchor,
                                   std::uint64_t m, std::uint64_t cap) {
  if (!cls.contains(anchor)) throw std::invalid_argument("hamming_ball: anchor not in class");
  if (BigInt(m) > cls.cardinality()) throw std::invalid_argument("hamming_ball: m exceeds cardinality");
  std::vector<IndexSet> all = enumerate_class(cls, cap);
  std::stable_sort(all.begin(), all.end(), [&](const IndexSet& a, const IndexSet& b) {
    const int oa = overlap(a, anchor), ob = overlap(b, anchor);
    if (oa != ob) return oa > ob;
    return a < b;
  });
  all.resize(static_cast<std::size_t>(m));
  return all;
}

IndexSet sample_uniform(const StructureClass& cls, RngStream& rng) {
  IndexSet set;
  set.indices.reserve(cls.s);
  if (cls.kind == ClassKind::SparseSupport) {
    // Sequential selection: include j with probability (needed / remaining).
    int needed = cls.s;
    for (int j = 1; j <= cls.d && needed > 0; ++j) {
      const int remaining = cls.d - j + 1;
      if (rng.below(static_cast<std::uint64_t>(remaining)) < static_cast<std::uint64_t>(needed)) {
        set.indices.push_back(j);
        --needed;
      }
    }
  } else {
    std::vector<int> sigma(cls.s);
    std::iota(sigma.begin(), sigma.end(), 1);
    for (int i = cls.s - 1; i > 0; --i) {
      const auto j = rng.below(static_cast<std::uint64_t>(i + 1));
      std::swap(sigma[i], sigma[j]);
    }
    set = matching_from_permutation(cls.s, sigma);
  }
  return set;
}

IndexSet matching_from_permutation(int r, const std::vector<int>& sigma) {
  if (static_cast<int>(sigma.size()) != r) throw std::invalid_argument("matching: wrong permutation length");
  IndexSet set;
  set.indices.reserve(r);
  for (int k = 1; k <= r; ++k) set.indices.push_back((k - 1) * r + sigma[k - 1]);
  return set;  // increasing in k by construction
}

}  // namespace sqphase
