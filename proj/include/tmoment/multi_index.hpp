#ifndef TMOMENT_MULTI_INDEX_HPP
#define TMOMENT_MULTI_INDEX_HPP

#include <algorithm>
#include <compare>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmoment {

/// Multi-index in Z^n with nonnegative coordinates.
struct MultiIndex {
  std::vector<int> coords;

  MultiIndex() = default;

  explicit MultiIndex(std::vector<int> c) : coords(std::move(c)) {
    for (int v : coords)
      if (v < 0)
        throw std::invalid_argument("multi-index coordinates must be nonnegative");
  }

  MultiIndex(std::initializer_list<int> c) : MultiIndex(std::vector<int>(c)) {}

  int dimension() const { return static_cast<int>(coords.size()); }

  /// Total degree |k| = k_1 + ... + k_n.
  int degree() const { return std::accumulate(coords.begin(), coords.end(), 0); }

  int operator[](int axis) const { return coords.at(axis); }

  auto operator<=>(const MultiIndex&) const = default;
};

inline std::string to_string(const MultiIndex& k) {
  std::string s = "(";
  for (int i = 0; i < k.dimension(); ++i) {
    if (i) s += ",";
    s += std::to_string(k[i]);
  }
  return s + ")";
}

inline MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("dimension mismatch adding " + to_string(a) + " and " + to_string(b));
  std::vector<int> c(a.coords);
  for (int i = 0; i < b.dimension(); ++i) c[i] += b[i];
  return MultiIndex(std::move(c));
}

/// k shifted by delta along the given (0-based) axis; rejects negative results.
inline MultiIndex shift(const MultiIndex& k, int axis, int delta = 1) {
  if (axis < 0 || axis >= k.dimension())
    throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for " + to_string(k));
  std::vector<int> c(k.coords);
  c[axis] += delta;
  if (c[axis] < 0)
    throw std::invalid_argument("shift of " + to_string(k) + " along axis " + std::to_string(axis) +
                                " by " + std::to_string(delta) + " leaves Z^n_{>=0}");
  return MultiIndex(std::move(c));
}

/// Admissibility test: 0 must belong to the set, and every other element must
/// be reachable from 0 by unit increments staying inside the set.  Implemented
/// as a fixed point of predecessor marking: mark 0, then repeatedly mark any k
/// having some axis j with k_j > 0 and k - e_j already marked.
inline bool is_admissible(const std::vector<MultiIndex>& members) {
  if (members.empty()) return false;
  const int n = members.front().dimension();
  if (n == 0) return false;
  for (const auto& k : members)
    if (k.dimension() != n)
      throw std::invalid_argument("mixed dimensions in index set near " + to_string(k));

  const std::set<MultiIndex> present(members.begin(), members.end());
  const MultiIndex zero(std::vector<int>(n, 0));
  if (!present.count(zero)) return false;

  std::set<MultiIndex> marked{zero};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& k : present) {
      if (marked.count(k)) continue;
      for (int j = 0; j < n; ++j) {
        if (k[j] > 0 && marked.count(shift(k, j, -1))) {
          marked.insert(k);
          grew = true;
          break;
        }
      }
    }
  }
  return marked.size() == present.size();
}

/// Finite admissible truncation set K = {k_0, ..., k_rho} with k_0 = 0.
/// The member order fixes the indexation of everything downstream (Gram
/// matrix rows, basis vectors, operator entries), so it is never reordered
/// after construction.
class AdmissibleIndexSet {
 public:
  /// All k with 0 <= k_i <= bounds[i], ordered lexicographically with the
  /// first axis varying slowest.
  static AdmissibleIndexSet rectangle(const std::vector<int>& bounds) {
    if (bounds.empty())
      throw std::invalid_argument("rectangle bounds must be nonempty");
    for (int d : bounds)
      if (d < 0) throw std::invalid_argument("rectangle bounds must be nonnegative");
    const int n = static_cast<int>(bounds.size());
    std::vector<MultiIndex> members;
    std::vector<int> k(n, 0);
    while (true) {
      members.push_back(MultiIndex(k));
      int axis = n - 1;
      while (axis >= 0 && k[axis] == bounds[axis]) {
        k[axis] = 0;
        --axis;
      }
      if (axis < 0) break;
      ++k[axis];
    }
    return AdmissibleIndexSet(std::move(members));
  }

  /// All k with |k| <= degree, in graded lexicographic order.
  static AdmissibleIndexSet simplex(int n, int degree) {
    if (n < 1) throw std::invalid_argument("simplex dimension must be >= 1");
    if (degree < 0) throw std::invalid_argument("simplex degree must be nonnegative");
    std::vector<MultiIndex> members;
    std::vector<int> k(n, 0);
    // Exact-degree compositions in lexicographic order, degree by degree.
    auto emit = [&](auto&& self, int axis, int rem) -> void {
      if (axis == n - 1) {
        k[axis] = rem;
        members.push_back(MultiIndex(k));
        k[axis] = 0;
        return;
      }
      for (int v = 0; v <= rem; ++v) {
        k[axis] = v;
        self(self, axis + 1, rem - v);
      }
      k[axis] = 0;
    };
    for (int deg = 0; deg <= degree; ++deg) emit(emit, 0, deg);
    return AdmissibleIndexSet(std::move(members));
  }

  /// User-supplied member list; validated (k_0 = 0, distinct, admissible) but
  /// kept in the given order.
  static AdmissibleIndexSet from_members(std::vector<MultiIndex> members) {
    return AdmissibleIndexSet(std::move(members));
  }

  int dimension() const { return dimension_; }
  int size() const { return static_cast<int>(members_.size()); }
  /// Largest ordinal: members are k_0, ..., k_rho.
  int rho() const { return size() - 1; }

  const MultiIndex& member(int j) const { return members_.at(j); }
  const std::vector<MultiIndex>& members() const { return members_; }

  std::optional<int> ordinal(const MultiIndex& k) const {
    auto it = ordinals_.find(k);
    if (it == ordinals_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const MultiIndex& k) const { return ordinals_.count(k) > 0; }

 private:
  explicit AdmissibleIndexSet(std::vector<MultiIndex> members) : members_(std::move(members)) {
    if (members_.empty())
      throw std::invalid_argument("truncation set must be nonempty");
    dimension_ = members_.front().dimension();
    if (dimension_ < 1)
      throw std::invalid_argument("truncation set dimension must be >= 1");
    if (members_.front() != MultiIndex(std::vector<int>(dimension_, 0)))
      throw std::invalid_argument("first member of a truncation set must be 0, got " +
                                  to_string(members_.front()));
    for (int j = 0; j < size(); ++j) {
      if (members_[j].dimension() != dimension_)
        throw std::invalid_argument("mixed dimensions in truncation set near " + to_string(members_[j]));
      if (!ordinals_.emplace(members_[j], j).second)
        throw std::invalid_argument("duplicate member " + to_string(members_[j]) + " in truncation set");
    }
    if (!is_admissible(members_))
      throw std::invalid_argument("truncation set is not admissible");
  }

  std::vector<MultiIndex> members_;
  std::map<MultiIndex, int> ordinals_;
  int dimension_ = 0;
};

/// K + K as a sorted, deduplicated list.  This is the exact domain on which
/// moments must be supplied.
inline std::vector<MultiIndex> sumset(const AdmissibleIndexSet& K) {
  std::set<MultiIndex> out;
  for (int j = 0; j < K.size(); ++j)
    for (int m = j; m < K.size(); ++m) out.insert(K.member(j) + K.member(m));
  return std::vector<MultiIndex>(out.begin(), out.end());
}

/// Per-axis index sets controlling where the shift action k |-> k + e_l stays
/// inside K:
///   omega[l]  = { j : k_j + e_l in K }  (0-based l),
///   omega0    = intersection of all omega[l],
///   successor[l][j] = ordinal of k_j + e_l for j in omega[l].
struct OmegaSets {
  std::vector<std::vector<int>> omega;
  std::vector<int> omega0;
  std::vector<std::map<int, int>> successor;
};

inline OmegaSets omega_sets(const AdmissibleIndexSet& K) {
  const int n = K.dimension();
  OmegaSets out;
  out.omega.resize(n);
  out.successor.resize(n);
  for (int l = 0; l < n; ++l) {
    for (int j = 0; j < K.size(); ++j) {
      auto ord = K.ordinal(shift(K.member(j), l, +1));
      if (ord) {
        out.omega[l].push_back(j);
        out.successor[l][j] = *ord;
      }
    }
  }
  for (int j = 0; j < K.size(); ++j) {
    bool in_all = true;
    for (int l = 0; l < n && in_all; ++l)
      in_all = out.successor[l].count(j) > 0;
    if (in_all) out.omega0.push_back(j);
  }
  return out;
}

}  // namespace tmoment

#endif  // TMOMENT_MULTI_INDEX_HPP
