#include <doctest.h>

#include <vector>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/matrix.hpp"
#include "test_support.hpp"

using namespace slimnet;

TEST_SUITE("tensor") {

TEST_CASE("matmul of two 2x2 matrices") {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}, {7, 8}};
  CHECK(matmul(a, b) == Matrix{{19, 22}, {43, 50}});
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("matmul with identity and transposed variants") {
  RngStream rng(5);
  const Matrix a = testing::random_matrix(rng, 7, 5);
  const Matrix b = testing::random_matrix(rng, 5, 9);
  CHECK(matmul(a, Matrix::identity(5)) == a);
  CHECK(matmul_tn(transpose(a), b) == matmul(a, b));
  CHECK(matmul_nt(a, transpose(b)) == matmul(a, b));
}

TEST_CASE("matmul is associative up to rounding") {
  RngStream rng(6);
  const Matrix a = testing::random_matrix(rng, 4, 6);
  const Matrix b = testing::random_matrix(rng, 6, 3);
  const Matrix c = testing::random_matrix(rng, 3, 5);
  CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-12);
}

TEST_CASE("row_slice") {
  const Matrix w{{1, 2}, {3, 4}, {5, 6}, {7, 8}};

  SUBCASE("all rows") {
    const std::vector<std::size_t> keep{0, 1, 2, 3};
    CHECK(row_slice(w, keep) == w);
  }
  SUBCASE("empty keep gives 0 x cols") {
    const Matrix s = row_slice(w, {});
    CHECK(s.rows() == 0);
    CHECK(s.cols() == 2);
  }
  SUBCASE("rows 0 and 2") {
    const std::vector<std::size_t> keep{0, 2};
    CHECK(row_slice(w, keep) == Matrix{{1, 2}, {5, 6}});
  }
  SUBCASE("out of range") {
    const std::vector<std::size_t> keep{4};
    CHECK_THROWS_AS(row_slice(w, keep), IndexError);
  }
}

TEST_CASE("col_slice, column sums and row broadcast") {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  const std::vector<std::size_t> keep{2, 0};
  CHECK(col_slice(m, keep) == Matrix{{3, 1}, {6, 4}});
  CHECK(column_sums(m) == Vector{5, 7, 9});
  const Vector v{10, 20, 30};
  add_row_vector(m, v);
  CHECK(m == Matrix{{11, 22, 33}, {14, 25, 36}});
}

TEST_CASE("all_finite") {
  Matrix m(2, 2, 1.0);
  CHECK(m.all_finite());
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
}

}  // TEST_SUITE
