#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lrckatz {
namespace {

using oracle::DenseMatrix;

TEST(OracleKatz, TwoNodeClosedForm) {
  const auto k = oracle::dense_katz_matrix(testing::path_graph(2), 0.5);
  EXPECT_NEAR(k(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(k(0, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(k(1, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(k(1, 1), 1.0 / 3.0, 1e-15);
}

TEST(OracleKatz, AlphaZeroGivesZero) {
  const auto k = oracle::dense_katz_matrix(testing::complete_graph(4), 0.0);
  EXPECT_EQ(k.cwiseAbs().maxCoeff(), 0.0);
}

TEST(OracleKatz, NeumannSeriesConverges) {
  const Graph g = testing::random_connected_graph(40, 6);
  const double alpha = hardest_alpha(oracle::spectral_norm(g));
  const auto k = oracle::dense_katz_matrix(g, alpha);
  double prev = std::numeric_limits<double>::infinity();
  for (Index terms : {5, 20, 80, 400}) {
    const double err = (oracle::neumann_katz(g, alpha, terms) - k).norm() / k.norm();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-10);
}

TEST(OracleKatz, SolveMatchesMatrixColumn) {
  const Graph g = testing::random_connected_graph(60, 2, true);
  const double alpha = hardest_alpha(oracle::spectral_norm(g));
  const auto k = oracle::dense_katz_matrix(g, alpha);
  for (Index q : {0, 30, 59}) {
    const auto col = oracle::katz_solve(g, alpha, q);
    for (Index i = 0; i < 60; ++i) EXPECT_NEAR(col[i], k(i, q), 1e-12);
  }
}

TEST(OracleKatz, InadmissibleAlpha) {
  EXPECT_THROW(oracle::katz_system(testing::path_graph(5), 0.8), AlphaError);
}

TEST(OracleCap, LargeInputsAreRefused) {
  const Graph big = testing::path_graph(oracle::default_cap + 1);
  EXPECT_THROW(oracle::adjacency(big), CapExceededError);
  EXPECT_THROW(oracle::dense_katz_matrix(big, 0.1), CapExceededError);
  EXPECT_NO_THROW(oracle::adjacency(testing::path_graph(oracle::default_cap)));
  EXPECT_THROW(oracle::adjacency(testing::path_graph(11), 10), CapExceededError);
}

TEST(OracleSpectralNorm, KnownValues) {
  EXPECT_NEAR(oracle::spectral_norm(testing::complete_graph(5)), 4.0, 1e-12);
  EXPECT_NEAR(oracle::spectral_norm(testing::star_graph(4)), 2.0, 1e-12);
}

TEST(OracleSchur, NoCouplingGivesM22) {
  const DenseMatrix m11 = 2.0 * DenseMatrix::Identity(3, 3);
  const DenseMatrix m12 = DenseMatrix::Zero(3, 2);
  DenseMatrix m22(2, 2);
  m22 << 3, 1, 1, 3;
  EXPECT_EQ(oracle::dense_schur(m11, m12, m22), m22);
}

TEST(OracleSchur, PathFive) {
  const Graph g = testing::path_graph(5);
  const auto bp = BlockPartition::from_parts(5, {{0, 1}, {3, 4}}, {2});
  const auto b = build_blocks(g, 0.2, bp);
  const auto s = oracle::dense_schur(b.m11, b.m12, b.m22);
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(s(0, 0), 1.0 - 2.0 * 0.04 / 0.96, 1e-15);  // 0.91667
}

TEST(OracleSchur, MatchesBlockEliminationOnRandomSystem) {
  Rng rng(5);
  const Index n = 30, n1 = 22;
  DenseMatrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  const DenseMatrix m = a * a.transpose() + n * DenseMatrix::Identity(n, n);
  const DenseMatrix s = oracle::dense_schur(m.topLeftCorner(n1, n1), m.topRightCorner(n1, n - n1),
                                            m.bottomRightCorner(n - n1, n - n1));
  // the trailing block of M^{-1} is S^{-1}
  const DenseMatrix tail = m.inverse().bottomRightCorner(n - n1, n - n1);
  EXPECT_LE((s.inverse() - tail).norm() / tail.norm(), 1e-12);
}

TEST(OracleBlockSolve, MatchesAssembledSolve) {
  const auto idx = testing::small_index(testing::random_connected_graph(70, 3), 2);
  const auto blocks = build_blocks(idx.graph, idx.alpha, idx.partition, idx.spectral_norm);
  const Vector g1(static_cast<std::size_t>(idx.n1()), 1.0), g2(static_cast<std::size_t>(idx.n2()), -1.0);
  const Vector x = oracle::dense_block_solve(oracle::dense(blocks.m11), oracle::dense(idx.m12),
                                             oracle::dense(idx.m22), g1, g2);
  const DenseMatrix m = oracle::katz_system(idx.graph, idx.alpha);
  // permuted system times x recovers the right-hand side
  for (Index pos = 0; pos < idx.num_nodes(); ++pos) {
    double row = 0.0;
    for (Index k = 0; k < idx.num_nodes(); ++k) row += m(idx.partition.perm[pos], idx.partition.perm[k]) * x[k];
    EXPECT_NEAR(row, pos < idx.n1() ? 1.0 : -1.0, 1e-12);
  }
}

TEST(OracleFactor, FactorMatrixReassembles) {
  const auto idx = testing::small_index(testing::random_connected_graph(90, 12, true), 2);
  const DenseMatrix c = oracle::factor_matrix(idx.m22_factor);
  EXPECT_LE((c * c.transpose() - oracle::dense(idx.m22)).norm(), 1e-13);
}

TEST(OracleSparseKatzRerank, StarLeaves) {
  const Graph g = testing::star_graph(4);
  const auto k = oracle::dense_katz_matrix(g, 0.3);
  const std::vector<Index> cand{2, 3, 4}, anchors{0, 2, 3, 4};
  const auto r = oracle::sparse_katz_rerank(k, 1, cand, anchors);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].node, 2);
  EXPECT_EQ(r[1].node, 3);
  EXPECT_EQ(r[2].node, 4);
  EXPECT_NEAR(r[0].score, r[2].score, 1e-12);
}

}  // namespace
}  // namespace lrckatz
