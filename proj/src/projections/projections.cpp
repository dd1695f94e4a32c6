#include "hardshrink/projections.hpp"

#include "hardshrink/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace hardshrink {

namespace {

SparseProjection keep_entries(const Vector& z, const IndexSet& keep, Index s) {
  SparseProjection out;
  out.s = s;
  out.values = Vector::Zero(z.size());
  for (Index i : keep) {
    if (z[i] == 0.0) continue;
    out.values[i] = z[i];
    out.support.push_back(i);
  }
  std::sort(out.support.begin(), out.support.end());
  return out;
}

// Sort by (|z_i| descending, i ascending), the module-wide tie rule.
void sort_by_magnitude(IndexSet& idx, const Vector& z) {
  std::sort(idx.begin(), idx.end(), [&z](Index a, Index b) {
    const double ma = std::abs(z[a]);
    const double mb = std::abs(z[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
}

}  // namespace

SparseProjection hard_threshold(const Vector& z, Index s) {
  if (s < 0 || s > z.size()) {
    std::ostringstream msg;
    msg << "hard_threshold: s=" << s << " outside [0, " << z.size() << "]";
    throw ArgumentError(msg.str());
  }
  return keep_entries(z, top_k_indices(z, s), s);
}

SparseProjection partial_hard_threshold(const Vector& z, const PartialProjectionSpec& spec) {
  const Index p = z.size();
  const Index s = spec.s;
  const Index l = spec.l;
  if (s < 0 || l < 0 || l > s)
    throw ArgumentError("partial_hard_threshold: require 0 <= l <= s");
  if (static_cast<Index>(spec.current_support.size()) > s)
    throw ArgumentError("partial_hard_threshold: |S| exceeds s");
  if (p < s) throw ArgumentError("partial_hard_threshold: length(z) < s");

  std::vector<char> in_support(static_cast<std::size_t>(p), 0);
  for (Index i : spec.current_support) {
    if (i < 0 || i >= p) throw ArgumentError("partial_hard_threshold: support index out of range");
    if (in_support[static_cast<std::size_t>(i)])
      throw ArgumentError("partial_hard_threshold: duplicate support index");
    in_support[static_cast<std::size_t>(i)] = 1;
  }

  IndexSet inside(spec.current_support.begin(), spec.current_support.end());
  IndexSet outside;
  outside.reserve(static_cast<std::size_t>(p) - inside.size());
  for (Index i = 0; i < p; ++i)
    if (!in_support[static_cast<std::size_t>(i)]) outside.push_back(i);
  sort_by_magnitude(inside, z);

  const Index max_new = std::min<Index>(l, static_cast<Index>(outside.size()));
  // Only the top max_new outside coordinates can ever be admitted.
  std::partial_sort(outside.begin(), outside.begin() + max_new, outside.end(),
                    [&z](Index a, Index b) {
                      const double ma = std::abs(z[a]);
                      const double mb = std::abs(z[b]);
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });

  std::vector<double> prefix_in(inside.size() + 1, 0.0);
  for (std::size_t i = 0; i < inside.size(); ++i)
    prefix_in[i + 1] = prefix_in[i] + z[inside[i]] * z[inside[i]];
  std::vector<double> prefix_out(static_cast<std::size_t>(max_new) + 1, 0.0);
  for (Index i = 0; i < max_new; ++i) {
    const double v = z[outside[static_cast<std::size_t>(i)]];
    prefix_out[static_cast<std::size_t>(i) + 1] = prefix_out[static_cast<std::size_t>(i)] + v * v;
  }

  // Admitting k new coordinates leaves room for min(|S|, s - k) old ones; the
  // retained energy is maximized over k (ties keep fewer new coordinates).
  Index best_k = 0;
  double best_energy = -1.0;
  for (Index k = 0; k <= max_new; ++k) {
    const auto keep_in = std::min<Index>(static_cast<Index>(inside.size()), s - k);
    const double energy = prefix_out[static_cast<std::size_t>(k)] +
                          prefix_in[static_cast<std::size_t>(keep_in)];
    if (energy > best_energy) {
      best_energy = energy;
      best_k = k;
    }
  }

  IndexSet keep(outside.begin(), outside.begin() + best_k);
  const auto keep_in = std::min<Index>(static_cast<Index>(inside.size()), s - best_k);
  keep.insert(keep.end(), inside.begin(), inside.begin() + keep_in);
  return keep_entries(z, keep, s);
}

Matrix rank_project(const Matrix& w, Index r) {
  const Index k = std::min(w.rows(), w.cols());
  if (r < 0 || r > k) {
    std::ostringstream msg;
    msg << "rank_project: r=" << r << " outside [0, " << k << "]";
    throw ArgumentError(msg.str());
  }
  if (r == k) return w;
  if (r == 0) return Matrix::Zero(w.rows(), w.cols());
  const SvdFactors f = svd(w);
  return f.U.leftCols(r) * f.singular_values.head(r).asDiagonal() * f.V.leftCols(r).transpose();
}

Index numerical_rank(const Matrix& w) {
  if (w.size() == 0) return 0;
  const Vector sv = svd(w).singular_values;
  if (sv[0] == 0.0) return 0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * sv[0]) ++rank;
  return rank;
}

}  // namespace hardshrink
