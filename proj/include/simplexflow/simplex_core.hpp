#ifndef SIMPLEXFLOW_SIMPLEX_CORE_HPP
#define SIMPLEXFLOW_SIMPLEX_CORE_HPP

// Value types for scores and points on the probability simplex, plus the
// softmax / log-partition / free-energy primitives everything else builds on.
//
// All exponentials go through a max-shifted log-sum-exp. Types validate their
// invariants on construction and are immutable afterwards.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace simplexflow {

enum class ErrorCode {
  InvalidInput,
  SupportMismatch,
  DegenerateFace,
  NotInterior,
  UnsupportedIdentity,
  OracleFailure,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::SupportMismatch: return "support-mismatch";
    case ErrorCode::DegenerateFace: return "degenerate-face";
    case ErrorCode::NotInterior: return "not-interior";
    case ErrorCode::UnsupportedIdentity: return "unsupported-identity";
    case ErrorCode::OracleFailure: return "oracle-failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Tolerances for simplex membership. Drift up to kRenormalizeLimit is silently
// renormalized away; anything larger is a bug upstream and is rejected.
inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kRenormalizeLimit = 1e-9;

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// log(sum_i exp(v_i)) with the max shift; -inf entries are allowed (they
// contribute zero mass) as long as at least one entry is finite.
inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace detail

/// Fixed logits for a frozen context. At least two entries, all finite.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw Error(ErrorCode::InvalidInput, "score vector needs V >= 2");
    if (!detail::all_finite(values_)) throw Error(ErrorCode::InvalidInput, "non-finite score");
  }
  ScoreVector(std::initializer_list<double> values) : ScoreVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double spread() const { return max() - min(); }

  ScoreVector shifted(double c) const {
    auto v = values_;
    for (double& x : v) x += c;
    return ScoreVector(std::move(v));
  }
  ScoreVector scaled(double a) const {
    auto v = values_;
    for (double& x : v) x *= a;
    return ScoreVector(std::move(v));
  }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> values_;
};

class Temperature {
 public:
  explicit Temperature(double value) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw Error(ErrorCode::InvalidInput, "temperature must be positive and finite");
  }
  double value() const noexcept { return value_; }
  friend auto operator<=>(const Temperature&, const Temperature&) = default;

 private:
  double value_;
};

/// Probability vector on the simplex. Entries are nonnegative and sum to one
/// within kNormTolerance.
class SimplexPoint {
 public:
  explicit SimplexPoint(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorCode::InvalidInput, "empty probability vector");
    double sum = 0.0;
    for (double x : probs_) {
      if (!std::isfinite(x) || x < 0.0)
        throw Error(ErrorCode::InvalidInput, "probabilities must be finite and nonnegative");
      sum += x;
    }
    const double drift = std::abs(sum - 1.0);
    if (drift > kRenormalizeLimit)
      throw Error(ErrorCode::InvalidInput,
                  "probabilities sum to " + std::to_string(sum) + ", not 1");
    if (drift > 0.0)
      for (double& x : probs_) x /= sum;
  }
  SimplexPoint(std::initializer_list<double> probs) : SimplexPoint(std::vector<double>(probs)) {}

  /// Normalizes exp(logp); entries equal to -inf map to exact zeros.
  static SimplexPoint from_log(std::span<const double> logp) {
    const double lse = detail::log_sum_exp(logp);
    if (!std::isfinite(lse)) throw Error(ErrorCode::InvalidInput, "log-weights have no finite entry");
    std::vector<double> p(logp.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logp[i] - lse);
    return SimplexPoint(std::move(p));
  }
  static SimplexPoint uniform(std::size_t v) { return SimplexPoint(std::vector<double>(v, 1.0 / double(v))); }
  static SimplexPoint vertex(std::size_t v, std::size_t i) {
    std::vector<double> p(v, 0.0);
    p.at(i) = 1.0;
    return SimplexPoint(std::move(p));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  bool is_interior() const {
    return std::all_of(probs_.begin(), probs_.end(), [](double x) { return x > 0.0; });
  }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> probs_;
};

/// Support subset S of {0..V-1} defining a face of the simplex.
class FaceMask {
 public:
  explicit FaceMask(std::vector<bool> support) : support_(std::move(support)) {
    k_ = static_cast<std::size_t>(std::count(support_.begin(), support_.end(), true));
    if (k_ < 1) throw Error(ErrorCode::InvalidInput, "face mask selects no index");
  }
  static FaceMask full(std::size_t v) { return FaceMask(std::vector<bool>(v, true)); }
  static FaceMask from_indices(std::size_t v, std::span<const std::size_t> idx) {
    std::vector<bool> s(v, false);
    for (auto i : idx) {
      if (i >= v) throw Error(ErrorCode::InvalidInput, "face index out of range");
      s[i] = true;
    }
    return FaceMask(std::move(s));
  }

  std::size_t size() const noexcept { return support_.size(); }
  std::size_t k() const noexcept { return k_; }
  bool contains(std::size_t i) const { return support_[i]; }
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(k_);
    for (std::size_t i = 0; i < support_.size(); ++i)
      if (support_[i]) out.push_back(i);
    return out;
  }

  friend bool operator==(const FaceMask&, const FaceMask&) = default;

 private:
  std::vector<bool> support_;
  std::size_t k_ = 0;
};

struct FreeEnergyReport {
  double inner = 0.0;    // <p, s>
  double entropy = 0.0;  // H(p) in nats
  double value = 0.0;    // inner + T * entropy
};

/// Row-major dense square matrix, only as much as the Jacobian needs.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> data;

  explicit Matrix(std::size_t n_ = 0) : n(n_), data(n_ * n_, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

// ---------------------------------------------------------------------------

/// log softmax(s, T) as a plain vector: s_i/T - log sum_j exp(s_j/T).
inline std::vector<double> log_softmax(const ScoreVector& s, Temperature T) {
  std::vector<double> z(s.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = s[i] / T.value();
  const double lse = detail::log_sum_exp(z);
  for (double& x : z) x -= lse;
  return z;
}

inline SimplexPoint softmax(const ScoreVector& s, Temperature T) {
  return SimplexPoint::from_log(log_softmax(s, T));
}

/// A(s) = T log sum_i exp(s_i / T).
inline double log_partition(const ScoreVector& s, Temperature T) {
  std::vector<double> z(s.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = s[i] / T.value();
  return T.value() * detail::log_sum_exp(z);
}

inline double entropy(const SimplexPoint& p) {
  double h = 0.0;
  for (double x : p.probs()) {
    if (x == 0.0) continue;  // 0 log 0 := 0
    h -= x * std::log(x);
  }
  return std::max(h, 0.0);
}

inline double inner(const SimplexPoint& p, const ScoreVector& s) {
  if (p.size() != s.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * s[i];
  return acc;
}

inline FreeEnergyReport free_energy(const SimplexPoint& p, const ScoreVector& s, Temperature T) {
  FreeEnergyReport r;
  r.inner = inner(p, s);
  r.entropy = entropy(p);
  r.value = r.inner + T.value() * r.entropy;
  return r;
}

/// D(p || q); requires supp(p) within supp(q).
inline double kl_divergence(const SimplexPoint& p, const SimplexPoint& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw Error(ErrorCode::SupportMismatch, "p has mass at index " + std::to_string(i) + " where q has none");
    d += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(d, 0.0);
}

/// d pi / d s = (1/T)(diag(pi) - pi pi^T).
inline Matrix softmax_jacobian(const ScoreVector& s, Temperature T) {
  const auto pi = softmax(s, T);
  const std::size_t n = s.size();
  Matrix J(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      J(i, j) = ((i == j ? pi[i] : 0.0) - pi[i] * pi[j]) / T.value();
  return J;
}

// --- faces -----------------------------------------------------------------

struct FaceRestriction {
  ScoreVector scores;
  SimplexPoint point;
};

/// Restricts (s, p) to the coordinates in mask, renormalizing p there. A face
/// needs at least two tokens to carry any dynamics.
inline FaceRestriction restrict_to_face(const ScoreVector& s, const SimplexPoint& p, const FaceMask& mask) {
  if (s.size() != p.size() || mask.size() != s.size())
    throw Error(ErrorCode::InvalidInput, "dimension mismatch");
  const auto idx = mask.indices();
  if (idx.size() < 2) throw Error(ErrorCode::DegenerateFace, "face has fewer than two tokens");
  std::vector<double> rs, rp;
  rs.reserve(idx.size());
  rp.reserve(idx.size());
  double mass = 0.0;
  for (auto i : idx) {
    rs.push_back(s[i]);
    rp.push_back(p[i]);
    mass += p[i];
  }
  if (!(mass > 0.0)) throw Error(ErrorCode::DegenerateFace, "point has no mass on the face");
  for (double& x : rp) x /= mass;
  return {ScoreVector(std::move(rs)), SimplexPoint(std::move(rp))};
}

/// Embeds a point of the face back into the full simplex, zeros elsewhere.
inline SimplexPoint lift_from_face(const SimplexPoint& q, const FaceMask& mask) {
  const auto idx = mask.indices();
  if (idx.size() != q.size()) throw Error(ErrorCode::InvalidInput, "face size mismatch");
  std::vector<double> p(mask.size(), 0.0);
  for (std::size_t j = 0; j < idx.size(); ++j) p[idx[j]] = q[j];
  return SimplexPoint(std::move(p));
}

namespace detail {
// Indices sorted by descending key, ties by lowest index.
inline std::vector<std::size_t> descending_order(std::span<const double> key) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
  return order;
}
}  // namespace detail

/// The k largest scores; ties go to the lowest index.
inline FaceMask build_face_topk(const ScoreVector& s, std::size_t k) {
  if (k < 1 || k > s.size()) throw Error(ErrorCode::InvalidInput, "top-k needs 1 <= k <= V");
  const auto order = detail::descending_order(s.values());
  std::vector<bool> sup(s.size(), false);
  for (std::size_t j = 0; j < k; ++j) sup[order[j]] = true;
  return FaceMask(std::move(sup));
}

/// Smallest prefix of softmax-sorted indices whose cumulative mass reaches `mass`.
inline FaceMask build_face_nucleus(const ScoreVector& s, Temperature T, double mass) {
  if (!(mass > 0.0) || mass > 1.0) throw Error(ErrorCode::InvalidInput, "nucleus mass must lie in (0, 1]");
  const auto pi = softmax(s, T);
  const auto order = detail::descending_order(pi.probs());
  std::vector<bool> sup(s.size(), false);
  double cum = 0.0;
  for (auto i : order) {
    sup[i] = true;
    cum += pi[i];
    // rounding can leave the full sum a hair below 1
    if (cum >= mass || cum >= 1.0 - 1e-15) break;
  }
  return FaceMask(std::move(sup));
}

}  // namespace simplexflow

#endif  // SIMPLEXFLOW_SIMPLEX_CORE_HPP
