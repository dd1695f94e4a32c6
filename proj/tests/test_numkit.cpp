#include "hardshrink/linalg.hpp"
#include "hardshrink/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace hardshrink;

namespace {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(Matrix a) {
  const Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace

TEST(Rng, SameSeedAndStreamGiveSameDraws) {
  RngStream a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RngStream c(42, 3), d(42, 3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(Rng, StreamsDiffer) {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Rng, UniformMoments) {
  RngStream rng(1, 0);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12, 0.002);
}

TEST(Rng, NormalMoments) {
  RngStream rng(2, 0);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  EXPECT_NEAR(m1 / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(m2 / n, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4 / n, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(Rng, UniformIndexChiSquare) {
  RngStream rng(3, 0);
  const int k = 7, n = 70000;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto j = rng.uniform_index(k);
    ASSERT_LT(j, static_cast<std::uint64_t>(k));
    ++counts[j];
  }
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / k) * (c - n / k) / static_cast<double>(n / k);
  EXPECT_LT(chi2, 22.46);  // 0.999 quantile, 6 dof
}

TEST(Rng, SampleWithoutReplacementIsDistinctAndUniform) {
  RngStream rng(4, 0);
  const Index n = 10, k = 3;
  std::vector<int> hits(n, 0);
  const int reps = 30000;
  for (int r = 0; r < reps; ++r) {
    const IndexSet s = rng.sample_without_replacement(n, k);
    ASSERT_EQ(static_cast<Index>(s.size()), k);
    std::set<Index> uniq(s.begin(), s.end());
    ASSERT_EQ(static_cast<Index>(uniq.size()), k);
    for (Index i : s) ++hits[static_cast<std::size_t>(i)];
  }
  const double expect = reps * static_cast<double>(k) / n;
  const double sd = std::sqrt(expect * (1 - static_cast<double>(k) / n));
  for (int h : hits) EXPECT_NEAR(h, expect, 4 * sd);
}

TEST(Rng, PermutationIsPermutation) {
  RngStream rng(5, 0);
  IndexSet p = rng.permutation(50);
  std::sort(p.begin(), p.end());
  for (Index i = 0; i < 50; ++i) EXPECT_EQ(p[static_cast<std::size_t>(i)], i);
}

TEST(TopK, OrdersByMagnitudeThenIndex) {
  Vector v(6);
  v << 1.0, -3.0, 2.0, 3.0, 0.0, -2.0;
  EXPECT_EQ(top_k_indices(v, 4), (IndexSet{1, 3, 2, 5}));
  EXPECT_EQ(top_k_indices(v, 0), IndexSet{});
  EXPECT_EQ(top_k_indices(v, 6).size(), 6u);
}

TEST(TopK, MatchesSortOracle) {
  RngStream rng(6, 0);
  for (int rep = 0; rep < 200; ++rep) {
    Vector v(12);
    for (Index i = 0; i < 12; ++i) v[i] = static_cast<double>(static_cast<int>(rng.uniform_index(7)) - 3);
    const Index k = static_cast<Index>(rng.uniform_index(13));
    IndexSet oracle(12);
    std::iota(oracle.begin(), oracle.end(), Index{0});
    std::stable_sort(oracle.begin(), oracle.end(),
                     [&](Index a, Index b) { return std::abs(v[a]) > std::abs(v[b]); });
    oracle.resize(static_cast<std::size_t>(k));
    EXPECT_EQ(top_k_indices(v, k), oracle);
  }
}

TEST(TopK, RejectsBadK) {
  Vector v = Vector::Ones(3);
  EXPECT_THROW(top_k_indices(v, 4), ArgumentError);
  EXPECT_THROW(top_k_indices(v, -1), ArgumentError);
}

class SvdShapes : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(SvdShapes, SingularValuesMatchGramEigenvaluesAndReconstruct) {
  const auto [rows, cols] = GetParam();
  RngStream rng(7, static_cast<std::uint64_t>(rows * 100 + cols));
  const Matrix m = rng.normal_matrix(rows, cols);
  const SvdFactors f = svd(m);
  const Index k = std::min(rows, cols);
  ASSERT_EQ(f.singular_values.size(), k);
  for (Index i = 1; i < k; ++i) EXPECT_GE(f.singular_values[i - 1], f.singular_values[i]);

  const Matrix gram = rows >= cols ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  std::vector<double> ev = jacobi_eigenvalues(gram);
  std::reverse(ev.begin(), ev.end());
  for (Index i = 0; i < k; ++i)
    EXPECT_NEAR(f.singular_values[i], std::sqrt(std::max(0.0, ev[static_cast<std::size_t>(i)])),
                1e-10 * f.singular_values[0]);

  EXPECT_LT((f.reconstruct() - m).norm(), 1e-12 * m.norm());
  EXPECT_LT((f.U.transpose() * f.U - Matrix::Identity(k, k)).norm(), 1e-12);
  EXPECT_LT((f.V.transpose() * f.V - Matrix::Identity(k, k)).norm(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, SvdShapes,
                         ::testing::Values(std::pair{1, 1}, std::pair{5, 5}, std::pair{12, 10},
                                           std::pair{10, 12}, std::pair{30, 3}, std::pair{3, 30},
                                           std::pair{40, 40}));

TEST(Svd, RankDeficientKeepsOrthonormalFactors) {
  RngStream rng(8, 0);
  const Matrix m = rng.normal_matrix(9, 2) * rng.normal_matrix(2, 7);
  const SvdFactors f = svd(m);
  EXPECT_LT(f.singular_values[2], 1e-12 * f.singular_values[0]);
  EXPECT_LT((f.U.transpose() * f.U - Matrix::Identity(7, 7)).norm(), 1e-10);
  EXPECT_LT((f.V.transpose() * f.V - Matrix::Identity(7, 7)).norm(), 1e-10);
  EXPECT_LT((f.reconstruct() - m).norm(), 1e-12 * m.norm());
}

TEST(Svd, LowRankShapesKeepOrthonormalFactors) {
  RngStream rng(81, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const Index rows = 2 + static_cast<Index>(rng.uniform_index(14));
    const Index cols = 2 + static_cast<Index>(rng.uniform_index(14));
    const Index k = 1 + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(std::min(rows, cols))));
    const Matrix m = rng.normal_matrix(rows, k) * rng.normal_matrix(k, cols);
    const SvdFactors f = svd(m);
    const Index r = std::min(rows, cols);
    EXPECT_LT((f.U.transpose() * f.U - Matrix::Identity(r, r)).norm(), 1e-10);
    EXPECT_LT((f.V.transpose() * f.V - Matrix::Identity(r, r)).norm(), 1e-10);
    EXPECT_LT((f.reconstruct() - m).norm(), 1e-12 * m.norm());
  }
}

TEST(Svd, ZeroMatrix) {
  const SvdFactors f = svd(Matrix::Zero(4, 3));
  EXPECT_EQ(f.singular_values.norm(), 0.0);
  EXPECT_LT((f.V.transpose() * f.V - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(SolveRestricted, MatchesDenseSolveOnSupport) {
  RngStream rng(9, 0);
  const Matrix g = rng.normal_matrix(20, 8);
  const Matrix a = g.transpose() * g;
  const Vector b = rng.normal_vector(8);
  const IndexSet s{1, 4, 6};
  const Vector x = solve_restricted(a, b, s);
  Matrix block(3, 3);
  Vector rhs(3);
  for (int i = 0; i < 3; ++i) {
    rhs[i] = b[s[static_cast<std::size_t>(i)]];
    for (int j = 0; j < 3; ++j) block(i, j) = a(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
  }
  const Vector oracle = block.fullPivLu().solve(rhs);
  for (Index i = 0; i < 8; ++i) {
    const auto it = std::find(s.begin(), s.end(), i);
    if (it == s.end()) EXPECT_EQ(x[i], 0.0);
    else EXPECT_NEAR(x[i], oracle[it - s.begin()], 1e-12);
  }
}

TEST(SolveSymmetric, IndefiniteBlockUsesLu) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  Vector b(2);
  b << 1.0, 0.0;
  const Vector x = solve_symmetric(a, b);
  EXPECT_LT((a * x - b).norm(), 1e-14);
}

TEST(SolveSymmetric, SingularConsistentSystemUsesRidge) {
  Matrix a(2, 2);
  a << 1.0, 1.0, 1.0, 1.0;
  Vector b(2);
  b << 2.0, 2.0;
  const Vector x = solve_symmetric(a, b);
  EXPECT_TRUE(x.allFinite());
  EXPECT_NEAR(x.sum(), 2.0, 1e-6);
}

TEST(SolveSymmetric, InconsistentSingularSystemThrows) {
  Matrix a = Matrix::Zero(2, 2);
  Vector b(2);
  b << 1.0, 0.0;
  EXPECT_THROW(solve_symmetric(a, b), NumericalError);
}

TEST(SymEig, TwoByTwoCorrelationBlock) {
  Matrix a(2, 2);
  a << 1.0, 0.9, 0.9, 1.0;
  const EigenExtremes e = sym_eig_extremes(a);
  EXPECT_NEAR(e.min, 0.1, 1e-14);
  EXPECT_NEAR(e.max, 1.9, 1e-14);
}

TEST(SymEig, MatchesJacobiOracle) {
  RngStream rng(10, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix g = rng.normal_matrix(7, 7);
    const Matrix a = g + g.transpose();
    const auto ev = jacobi_eigenvalues(a);
    const EigenExtremes e = sym_eig_extremes(a);
    EXPECT_NEAR(e.min, ev.front(), 1e-10);
    EXPECT_NEAR(e.max, ev.back(), 1e-10);
  }
}

TEST(SymEig, RejectsAsymmetric) {
  Matrix a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(sym_eig_extremes(a), ArgumentError);
}

TEST(Lanczos, AgreesWithDenseOnFullKrylovSpace) {
  RngStream rng(11, 0);
  const Matrix g = rng.normal_matrix(40, 30);
  const Matrix a = g.transpose() * g;
  RngStream lr(11, 1);
  const EigenExtremes e = lanczos_extremes([&](const Vector& v) { return Vector(a * v); }, 30, 30, lr);
  const auto ev = jacobi_eigenvalues(a);
  EXPECT_NEAR(e.min, ev.front(), 1e-8 * ev.back());
  EXPECT_NEAR(e.max, ev.back(), 1e-8 * ev.back());
}

TEST(Lanczos, RitzValuesStayInsideSpectrum) {
  RngStream rng(12, 0);
  const Matrix g = rng.normal_matrix(300, 200);
  const Matrix a = g.transpose() * g;
  RngStream lr(12, 1);
  const EigenExtremes e = lanczos_extremes([&](const Vector& v) { return Vector(a * v); }, 200, 20, lr);
  const EigenExtremes exact = sym_eig_extremes(a);
  EXPECT_GE(e.min, exact.min - 1e-9 * exact.max);
  EXPECT_LE(e.max, exact.max + 1e-9 * exact.max);
  EXPECT_GT(e.max, 0.98 * exact.max);
}

TEST(Support, ListsNonzerosAscending) {
  Vector v(5);
  v << 0.0, 1.0, 0.0, -2.0, 1e-300;
  EXPECT_EQ(support_of(v), (IndexSet{1, 3, 4}));
}

TEST(TopK, SpecExamples) {
  EXPECT_EQ(top_k_indices(Eigen::Vector4d(4, -3, 2, 1), 2), (IndexSet{0, 1}));
  EXPECT_EQ(top_k_indices(Eigen::Vector3d(1, 1, 1), 2), (IndexSet{0, 1}));
  EXPECT_EQ(top_k_indices(Eigen::Vector4d(0.5, -2, 0.5, 3), 3), (IndexSet{3, 1, 0}));
}

TEST(TopK, RetainedDominateDiscarded) {
  RngStream rng(13, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const Vector v = rng.normal_vector(15);
    const Index k = static_cast<Index>(rng.uniform_index(16));
    const IndexSet top = top_k_indices(v, k);
    std::vector<char> in(15, 0);
    double min_kept = INFINITY, max_dropped = 0;
    for (Index i : top) in[static_cast<std::size_t>(i)] = 1, min_kept = std::min(min_kept, std::abs(v[i]));
    for (Index i = 0; i < 15; ++i)
      if (!in[static_cast<std::size_t>(i)]) max_dropped = std::max(max_dropped, std::abs(v[i]));
    if (k > 0 && k < 15) EXPECT_GE(min_kept, max_dropped);
  }
}

TEST(Svd, DiagonalInput) {
  const Matrix d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const SvdFactors f = svd(d);
  EXPECT_LT((f.singular_values - Eigen::Vector3d(3, 2, 1)).norm(), 1e-14);
  EXPECT_LT((f.U.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 1e-14);
  EXPECT_LT((f.V.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(Svd, RejectsNonFinite) {
  Matrix m = Matrix::Ones(2, 2);
  m(0, 1) = NAN;
  EXPECT_THROW(svd(m), ArgumentError);
}

TEST(Svd, InvariantsOnManyRandomMatrices) {
  RngStream rng(14, 0);
  int failures = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index r = 1 + static_cast<Index>(rng.uniform_index(20));
    const Index c = 1 + static_cast<Index>(rng.uniform_index(20));
    const Matrix m = rng.normal_matrix(r, c);
    const SvdFactors f = svd(m);
    const Index k = std::min(r, c);
    const double tol = 1e-10 * static_cast<double>(std::max(r, c));
    bool ok = (f.reconstruct() - m).norm() <= 1e-8 * m.norm();
    ok = ok && (f.U.transpose() * f.U - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= tol;
    ok = ok && (f.V.transpose() * f.V - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= tol;
    for (Index i = 0; i < k; ++i) ok = ok && f.singular_values[i] >= 0.0;
    for (Index i = 1; i < k; ++i) ok = ok && f.singular_values[i - 1] >= f.singular_values[i];
    failures += !ok;
  }
  EXPECT_EQ(failures, 0);
}

TEST(SolveRestricted, SpecExamples) {
  EXPECT_EQ(solve_restricted(Matrix::Identity(3, 3), Eigen::Vector3d(1, 2, 3), {0, 2}),
            Vector(Eigen::Vector3d(1, 0, 3)));
  const Matrix a = Eigen::Vector2d(2, 4).asDiagonal();
  EXPECT_LT((solve_restricted(a, Eigen::Vector2d(2, 4), {0, 1}) - Eigen::Vector2d(1, 1)).norm(), 1e-15);
}

TEST(SolveRestricted, OffSupportIsExactlyZero) {
  RngStream rng(15, 0);
  const Matrix g = rng.normal_matrix(10, 6);
  const Matrix a = g.transpose() * g;
  const Vector x = solve_restricted(a, rng.normal_vector(6), {0, 3, 5});
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(x[2], 0.0);
  EXPECT_EQ(x[4], 0.0);
}

TEST(SymEig, TrivialCases) {
  const EigenExtremes id = sym_eig_extremes(Matrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(id.min, 1.0);
  EXPECT_DOUBLE_EQ(id.max, 1.0);
  const EigenExtremes d = sym_eig_extremes(Eigen::Vector3d(5, -2, 0).asDiagonal());
  EXPECT_DOUBLE_EQ(d.min, -2.0);
  EXPECT_DOUBLE_EQ(d.max, 5.0);
}
