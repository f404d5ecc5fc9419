#include "zsmeta/evalkit/mmd.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace zsmeta::evalkit {

namespace {

// Points as rows, stored column-major so each coordinate is contiguous.
using Points = Eigen::ArrayXXd;

void check_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("mmd: both samples must be non-empty");
  if (x.cols() != y.cols()) throw std::invalid_argument("mmd: column count mismatch");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("mmd: non-finite input");
}

// Rows in lexicographic order.
Points sorted_rows(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(a, c) != m(b, c)) return m(a, c) < m(b, c);
    return a < b;
  });
  Points out(m.rows(), m.cols());
  for (std::size_t k = 0; k < order.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(order[k]).array();
  return out;
}

bool lex_less(const Points& a, const Points& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (a(i, c) != b(i, c)) return a(i, c) < b(i, c);
  return false;
}

// out = squared distances from row i of `a` to rows [begin, begin + out.size()) of `b`
void distances(const Points& a, Eigen::Index i, const Points& b, Eigen::Index begin, Eigen::ArrayXd& out) {
  const Eigen::Index len = out.size();
  out = (b.col(0).segment(begin, len) - a(i, 0)).square();
  for (Eigen::Index c = 1; c < a.cols(); ++c) out += (b.col(c).segment(begin, len) - a(i, c)).square();
}

template <class F>
void for_each_pair(const Points& z, F&& f) {
  const Eigen::Index n = z.rows();
  Eigen::ArrayXd buf;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    buf.resize(n - i - 1);
    distances(z, i, z, i + 1, buf);
    for (Eigen::Index k = 0; k < buf.size(); ++k) f(buf[k]);
  }
}

// Values of the given 0-based ranks (r0 <= r1) among the pairwise squared
// distances, optionally only the positive ones. Non-negative doubles order
// like their bit patterns, so each pass narrows a bit range with a
// 2^20-bucket histogram until the remaining candidates fit in memory.
std::pair<double, double> select_ranks(const Points& z, std::size_t r0, std::size_t r1, bool positive_only) {
  constexpr int kBucketBits = 20;
  constexpr std::size_t kCollectLimit = std::size_t{1} << 22;
  std::uint64_t lo = 0, hi = std::uint64_t{1} << 63;  // candidate bit patterns [lo, hi)
  std::size_t below = 0;                             // values under lo
  std::vector<std::size_t> hist;
  for (;;) {
    const std::uint64_t span = hi - lo;
    const int width = 64 - std::countl_zero(span - 1);
    const int shift = std::max(0, width - kBucketBits);
    hist.assign(static_cast<std::size_t>(((span - 1) >> shift) + 1), 0);
    std::size_t inside = 0;
    for_each_pair(z, [&](double v) {
      if (positive_only && v == 0.0) return;
      const auto bits = std::bit_cast<std::uint64_t>(v);
      if (bits < lo || bits >= hi) return;
      ++hist[(bits - lo) >> shift];
      ++inside;
    });
    if (inside <= kCollectLimit) break;
    std::size_t b0 = 0, acc = below;
    while (acc + hist[b0] <= r0) acc += hist[b0++];
    std::size_t b1 = b0, acc1 = acc;
    while (acc1 + hist[b1] <= r1) acc1 += hist[b1++];
    if (shift == 0) {
      // every bucket is a single value
      return {std::bit_cast<double>(lo + b0), std::bit_cast<double>(lo + b1)};
    }
    const std::uint64_t new_lo = lo + (static_cast<std::uint64_t>(b0) << shift);
    const std::uint64_t new_hi = std::min(hi, lo + (static_cast<std::uint64_t>(b1 + 1) << shift));
    below = acc;
    lo = new_lo;
    hi = new_hi;
  }
  std::vector<double> cand;
  for_each_pair(z, [&](double v) {
    if (positive_only && v == 0.0) return;
    const auto bits = std::bit_cast<std::uint64_t>(v);
    if (bits >= lo && bits < hi) cand.push_back(v);
  });
  const auto k0 = static_cast<std::ptrdiff_t>(r0 - below), k1 = static_cast<std::ptrdiff_t>(r1 - below);
  std::nth_element(cand.begin(), cand.begin() + k0, cand.end());
  const double v0 = cand[static_cast<std::size_t>(k0)];
  if (k1 == k0) return {v0, v0};
  return {v0, *std::min_element(cand.begin() + k0 + 1, cand.end())};
}

// Number of pairs i < j of the sorted values with z[j] - z[i] <= t.
std::size_t pairs_within(const double* z, std::size_t n, double t) {
  std::size_t total = 0, j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i + 1);
    while (j < n && z[j] - z[i] <= t) ++j;
    total += j - i - 1;
  }
  return total;
}

// One-dimensional case: z is sorted, so an order statistic of the gaps is
// found by bisection on bit patterns with a linear-time count per probe.
double median_gap_1d(const Points& z, bool positive_only) {
  const double* v = z.data();
  const auto n = static_cast<std::size_t>(z.rows());
  const std::size_t zeros = positive_only ? pairs_within(v, n, 0.0) : 0;
  const std::size_t count = n * (n - 1) / 2 - zeros;
  if (count == 0) return 0.0;
  auto select = [&](std::size_t rank) {
    std::uint64_t lo = 0, hi = std::bit_cast<std::uint64_t>(v[n - 1] - v[0]);
    while (lo < hi) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (pairs_within(v, n, std::bit_cast<double>(mid)) - zeros >= rank + 1) hi = mid;
      else lo = mid + 1;
    }
    return std::bit_cast<double>(lo);
  };
  const std::size_t r0 = (count - 1) / 2, r1 = count / 2;
  const double a = select(r0);
  return r0 == r1 ? a : 0.5 * (a + select(r1));
}

double median_distance(const Points& z, bool positive_only) {
  if (z.cols() == 1) return median_gap_1d(z, positive_only);
  std::size_t count = 0;
  if (positive_only) {
    for_each_pair(z, [&](double v) { count += v > 0.0; });
  } else {
    const auto n = static_cast<std::size_t>(z.rows());
    count = n * (n - 1) / 2;
  }
  if (count == 0) return 0.0;
  const std::size_t r0 = (count - 1) / 2, r1 = count / 2;
  const auto [a, b] = select_ranks(z, r0, r1, positive_only);
  if (r0 == r1) return std::sqrt(a);
  return 0.5 * (std::sqrt(a) + std::sqrt(b));
}

Points pooled(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd z(x.rows() + y.rows(), x.cols());
  z << x, y;
  return sorted_rows(z);
}

// exp(x) for x <= 0 without branches, so the loops below vectorize. Inputs
// under -708 are clamped there; such terms are far below the rounding error
// of sums that contain at least one exact 1.
[[gnu::always_inline]] inline double exp_nonpositive(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01, kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShifter = 6755399441055744.0;  // 1.5 * 2^52: adding it rounds to an integer
  x = std::max(x, -708.0);
  const double shifted = x * kLog2e + kShifter;
  const double k = shifted - kShifter;
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;  // |r| <= ln2 / 2
  double p = 1.0 / 6227020800.0;                   // Taylor series to r^13
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const std::int64_t ki = std::bit_cast<std::int64_t>(shifted) - std::bit_cast<std::int64_t>(kShifter);
  return p * std::bit_cast<double>((ki + 1023) << 52);
}

// Sum of k over row i of `a` against rows [begin, end) of `b`, in blocks
// small enough to stay in L1.
double row_kernel(const Points& a, Eigen::Index i, const Points& b, Eigen::Index begin, Eigen::Index end,
                  double inv_two_s2) {
  constexpr Eigen::Index kBlock = 256;
  alignas(64) double buf[kBlock];
  const Eigen::Index d = a.cols();
  double total = 0.0;
  for (Eigen::Index lo = begin; lo < end; lo += kBlock) {
    const Eigen::Index len = std::min(kBlock, end - lo);
    const double* col = b.col(0).data() + lo;
    const double a0 = a(i, 0);
    for (Eigen::Index k = 0; k < len; ++k) buf[k] = (col[k] - a0) * (col[k] - a0);
    for (Eigen::Index c = 1; c < d; ++c) {
      col = b.col(c).data() + lo;
      const double ac = a(i, c);
      for (Eigen::Index k = 0; k < len; ++k) buf[k] += (col[k] - ac) * (col[k] - ac);
    }
    for (Eigen::Index k = 0; k < len; ++k) buf[k] = exp_nonpositive(-buf[k] * inv_two_s2);
    total += Eigen::Map<const Eigen::ArrayXd>(buf, len).sum();
  }
  return total;
}

// Sum over all ordered pairs of rows of `a`, using k(p, q) = k(q, p).
double self_kernel_sum(const Points& a, double inv_two_s2) {
  const Eigen::Index n = a.rows();
  double off = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) off += row_kernel(a, i, a, i + 1, n, inv_two_s2);
  return static_cast<double>(n) + 2.0 * off;
}

double kernel_sum(const Points& a, const Points& b, double inv_two_s2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) total += row_kernel(a, i, b, 0, b.rows(), inv_two_s2);
  return total;
}

}  // namespace

double median_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_inputs(x, y);
  return median_distance(pooled(x, y), false);
}

double mmd_with_bandwidth(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double bandwidth) {
  check_inputs(x, y);
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw std::invalid_argument("mmd: bandwidth must be positive");
  Points a = sorted_rows(x), b = sorted_rows(y);
  if (lex_less(b, a)) std::swap(a, b);
  if (a.rows() == b.rows() && (a == b).all()) return 0.0;
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  const double na = static_cast<double>(a.rows()), nb = static_cast<double>(b.rows());
  const double sq = self_kernel_sum(a, inv) / (na * na) + self_kernel_sum(b, inv) / (nb * nb) -
                    2.0 * kernel_sum(a, b, inv) / (na * nb);
  return std::sqrt(std::max(0.0, sq));
}

double mmd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_inputs(x, y);
  const Points z = pooled(x, y);
  double bw = median_distance(z, false);
  if (bw == 0.0) {
    // more than half the pairs coincide; fall back to the positive distances
    bw = median_distance(z, true);
    if (bw == 0.0) return 0.0;
  }
  return mmd_with_bandwidth(x, y, bw);
}

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& m, std::size_t cap, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (n <= cap) return m;
  std::vector<std::size_t> all(n), pick;
  std::iota(all.begin(), all.end(), 0);
  pick.reserve(cap);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(pick), cap, rng);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cap), m.cols());
  for (std::size_t k = 0; k < cap; ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(pick[k]));
  return out;
}

}  // namespace zsmeta::evalkit
