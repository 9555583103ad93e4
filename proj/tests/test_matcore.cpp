#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mflab/errors.hpp"
#include "mflab/kernels.hpp"
#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"
#include "mflab/mfmx.hpp"
#include "mflab/rng.hpp"
#include "mflab/svd.hpp"

using namespace mflab;

namespace {

Matrix random_matrix(index_t rows, index_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    GaussianStream g(seed);
    for (double& v : m.data) v = g.next();
    return m;
}

Matrix random_lower(index_t n, std::uint64_t seed) {
    Matrix m(n, n, true);
    GaussianStream g(seed);
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < i; ++j) m(i, j) = 0.1 * g.next();
        m(i, i) = 1.0 + 0.5 * std::abs(g.next());
    }
    return m;
}

double max_entry_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.rows == b.rows);
    REQUIRE(a.cols == b.cols);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

}  // namespace

TEST_CASE("matrix storage and accessors") {
    Matrix m(2, 3);
    CHECK(m.rows == 2);
    CHECK(m.cols == 3);
    CHECK(m.size() == 6);
    for (double v : m.data) CHECK(v == 0.0);

    m(1, 2) = 4.5;
    CHECK(m.at(1, 2) == 4.5);
    CHECK_THROWS_AS(m.at(2, 0), bounds_error);
    CHECK_THROWS_AS(m.at(0, 3), bounds_error);

    const Matrix id = identity(4);
    CHECK(id.lower_triangular);
    for (index_t i = 0; i < 4; ++i)
        for (index_t j = 0; j < 4; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));
    CHECK(strictly_lower(id));
}

TEST_CASE("matmul identity cases") {
    const Matrix m = random_matrix(3, 5, 11);
    CHECK(max_entry_diff(matmul(identity(3), m), m) == 0.0);

    const Matrix s2 = build_prefix_sum(2);
    const Matrix prod = matmul(s2, identity(2));
    CHECK(prod(0, 0) == 1.0);
    CHECK(prod(0, 1) == 0.0);
    CHECK(prod(1, 0) == 1.0);
    CHECK(prod(1, 1) == 1.0);
}

TEST_CASE("matmul matches the naive triple loop") {
    const Matrix a = random_matrix(4, 4, 21);
    const Matrix b = random_matrix(4, 4, 22);
    const Matrix got = matmul(a, b);
    for (index_t i = 0; i < 4; ++i)
        for (index_t j = 0; j < 4; ++j) {
            double want = 0.0;
            for (index_t k = 0; k < 4; ++k) want += a(i, k) * b(k, j);
            CHECK(got(i, j) == doctest::Approx(want).epsilon(1e-14));
        }
}

TEST_CASE("matmul agrees with the serial reference on rectangles and triangles") {
    const Matrix a = random_matrix(16, 12, 31);
    const Matrix b = random_matrix(12, 9, 32);
    CHECK(max_entry_diff(matmul(a, b), ref::matmul(a, b)) < 1e-12);

    const Matrix la = random_lower(24, 33);
    const Matrix lb = random_lower(24, 34);
    CHECK(max_entry_diff(matmul(la, lb), ref::matmul(la, lb)) < 1e-12);
}

TEST_CASE("matmul propagates the lower-triangular flag correctly") {
    const Matrix la = random_lower(6, 41);
    const Matrix lb = random_lower(6, 42);
    CHECK(matmul(la, lb).lower_triangular);
    CHECK(strictly_lower(matmul(la, lb)));

    const Matrix dense = random_matrix(6, 6, 43);
    CHECK_FALSE(matmul(la, dense).lower_triangular);
    CHECK_FALSE(matmul(dense, lb).lower_triangular);
}

TEST_CASE("matmul rejects mismatched shapes") {
    CHECK_THROWS_AS(matmul(random_matrix(3, 4, 51), random_matrix(5, 2, 52)), shape_error);
}

TEST_CASE("matmul is associative to rounding") {
    const Matrix a = random_matrix(10, 8, 61);
    const Matrix b = random_matrix(8, 12, 62);
    const Matrix c = random_matrix(12, 7, 63);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    double scale = 0.0;
    for (double v : left.data) scale = std::max(scale, std::abs(v));
    CHECK(max_entry_diff(left, right) < 1e-9 * scale);
}

TEST_CASE("invert_lower_triangular basics") {
    CHECK(max_entry_diff(invert_lower_triangular(identity(4)), identity(4)) == 0.0);

    Matrix m(2, 2, true);
    m(0, 0) = 2.0;
    m(1, 0) = 1.0;
    m(1, 1) = 1.0;
    const Matrix inv = invert_lower_triangular(m);
    CHECK(inv(0, 0) == 0.5);
    CHECK(inv(0, 1) == 0.0);
    CHECK(inv(1, 0) == -0.5);
    CHECK(inv(1, 1) == 1.0);
}

TEST_CASE("invert_lower_triangular reconstructs the identity") {
    const Matrix m = random_lower(8, 71);
    const Matrix prod = matmul(m, invert_lower_triangular(m));
    CHECK(max_entry_diff(prod, identity(8)) < 1e-10);
}

TEST_CASE("inverse of the prefix-sum matrix is the first-difference matrix") {
    const index_t t = 64;
    const Matrix inv = invert_lower_triangular(build_prefix_sum(t));
    for (index_t i = 0; i < t; ++i)
        for (index_t j = 0; j < t; ++j) {
            double want = 0.0;
            if (i == j) want = 1.0;
            if (j + 1 == i) want = -1.0;
            CHECK(inv(i, j) == want);
        }
}

TEST_CASE("invert_lower_triangular names the singular pivot") {
    Matrix m = random_lower(5, 81);
    m(3, 3) = 0.0;
    try {
        invert_lower_triangular(m);
        FAIL("expected singular_error");
    } catch (const singular_error& e) {
        CHECK(e.index == 3);
    }
}

TEST_CASE("invert_lower_triangular matches the serial reference") {
    const Matrix m = random_lower(32, 91);
    CHECK(max_entry_diff(invert_lower_triangular(m), ref::invert_lower_triangular(m)) <
          1e-12);
}

TEST_CASE("frobenius_norm_sq closed forms") {
    CHECK(frobenius_norm_sq(Matrix(7, 3)) == 0.0);
    CHECK(frobenius_norm_sq(build_prefix_sum(3)) == 6.0);
    CHECK(frobenius_norm_sq(build_prefix_sum(2048)) == 2098176.0);

    const Matrix m = random_matrix(13, 17, 101);
    CHECK(frobenius_norm_sq(m) ==
          doctest::Approx(ref::frobenius_norm_sq(m)).epsilon(1e-13));
}

TEST_CASE("frobenius_inner matches the norm on equal arguments") {
    const Matrix m = random_matrix(9, 9, 111);
    CHECK(frobenius_inner(m, m) == doctest::Approx(frobenius_norm_sq(m)).epsilon(1e-13));
    const Matrix n = random_matrix(9, 9, 112);
    CHECK(frobenius_inner(m, n) == doctest::Approx(frobenius_inner(n, m)).epsilon(1e-13));
}

TEST_CASE("max_column_norm closed forms and scaling") {
    CHECK(max_column_norm(identity(9)) == 1.0);
    CHECK(max_column_norm(build_prefix_sum(4)) == 2.0);
    CHECK(max_column_norm(build_tree_matrix(2)) == doctest::Approx(std::sqrt(2.0)));

    Matrix m = random_matrix(6, 4, 121);
    const double base = max_column_norm(m);
    for (double& v : m.data) v *= -3.0;
    CHECK(max_column_norm(m) == doctest::Approx(3.0 * base).epsilon(1e-13));
    CHECK(max_column_norm(m) == doctest::Approx(ref::max_column_norm(m)).epsilon(1e-13));
}

TEST_CASE("row differences with the virtual zero row") {
    const Matrix s5 = build_prefix_sum(5);
    CHECK(row_diff_norm_sq(s5, 3, 1) == 2.0);
    CHECK(row_diff_norm_sq(identity(5), 4, 2) == 2.0);
    CHECK(row_diff_norm_sq(s5, 4, 4) == 0.0);
    CHECK(row_diff_norm_sq(s5, 3, 0) == 3.0);
    CHECK(row_diff_norm_sq(s5, 0, 0) == 0.0);
    CHECK_THROWS_AS(row_diff_norm_sq(s5, 6, 0), bounds_error);
}

TEST_CASE("gram equals transpose-times-self") {
    const Matrix b = random_matrix(11, 7, 131);
    const Matrix g = gram(b);
    const Matrix want = matmul(transpose(b), b);
    CHECK(max_entry_diff(g, want) < 1e-12);
    for (index_t i = 0; i < g.rows; ++i)
        for (index_t j = 0; j < g.cols; ++j) CHECK(g(i, j) == g(j, i));
}

TEST_CASE("cholesky factorizes and rejects") {
    Matrix spd = gram(random_matrix(8, 8, 141));
    for (index_t i = 0; i < 8; ++i) spd(i, i) += 8.0;
    const Matrix l = cholesky(spd);
    CHECK(l.lower_triangular);
    CHECK(strictly_lower(l));
    CHECK(max_entry_diff(matmul(l, transpose(l)), spd) < 1e-10);

    Matrix bad = identity(3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(cholesky(bad), numeric_error);
}

TEST_CASE("normalize_columns produces unit columns and rejects zero columns") {
    Matrix m = random_matrix(10, 6, 151);
    normalize_columns(m);
    for (index_t j = 0; j < 6; ++j) {
        double ss = 0.0;
        for (index_t i = 0; i < 10; ++i) ss += m(i, j) * m(i, j);
        CHECK(ss == doctest::Approx(1.0).epsilon(1e-13));
    }

    Matrix z(4, 2);
    z(0, 0) = 1.0;
    CHECK_THROWS_AS(normalize_columns(z), numeric_error);
}

TEST_CASE("matvec and matvec_transposed") {
    Matrix m(2, 3);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(0, 2) = 3.0;
    m(1, 0) = 4.0;
    m(1, 1) = 5.0;
    m(1, 2) = 6.0;
    const std::vector<double> x = {1.0, -1.0, 2.0};
    const std::vector<double> y = matvec(m, x);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == 5.0);
    CHECK(y[1] == 11.0);

    const std::vector<double> z = matvec_transposed(m, {1.0, 1.0});
    REQUIRE(z.size() == 3);
    CHECK(z[0] == 5.0);
    CHECK(z[1] == 7.0);
    CHECK(z[2] == 9.0);
}

TEST_CASE("transpose and copy_row") {
    const Matrix m = random_matrix(5, 3, 161);
    const Matrix mt = transpose(m);
    CHECK(mt.rows == 3);
    CHECK(mt.cols == 5);
    CHECK(max_entry_diff(transpose(mt), m) == 0.0);

    std::vector<double> row(3);
    copy_row(m, 5, row.data());
    for (index_t j = 0; j < 3; ++j) CHECK(row[static_cast<std::size_t>(j)] == m(4, j));
    copy_row(m, 0, row.data());
    for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("mfmx round trip is bit exact") {
    const std::filesystem::path path = "matcore_roundtrip.mfmx";
    Matrix m = random_lower(9, 171);
    write_mfmx(path, m);
    CHECK(std::filesystem::file_size(path) == 13 + 9 * 9 * sizeof(double));

    const Matrix back = read_mfmx(path);
    CHECK(back.rows == m.rows);
    CHECK(back.cols == m.cols);
    CHECK(back.lower_triangular == m.lower_triangular);
    CHECK(std::memcmp(back.data.data(), m.data.data(), m.size() * sizeof(double)) == 0);
    std::filesystem::remove(path);
}

TEST_CASE("mfmx rejects bad magic and truncation") {
    const std::filesystem::path path = "matcore_bad.mfmx";
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "NOPE";
        for (int i = 0; i < 16; ++i) out.put('\0');
    }
    try {
        read_mfmx(path);
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(e.offset == 0);
    }

    write_mfmx(path, random_matrix(4, 4, 181));
    std::filesystem::resize_file(path, 13 + 3 * sizeof(double));
    CHECK_THROWS_AS(read_mfmx(path), format_error);
    std::filesystem::remove(path);
}

TEST_CASE("jacobi_svd recovers a known spectrum") {
    Matrix m(3, 3);
    m(0, 0) = 4.0;
    m(1, 1) = 2.0;
    m(2, 2) = 1.0;
    const Svd svd = jacobi_svd(m);
    REQUIRE(svd.singular_values.size() == 3);
    CHECK(svd.singular_values[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(svd.singular_values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(svd.singular_values[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jacobi_svd reconstructs and returns orthogonal factors") {
    const Matrix m = random_matrix(12, 12, 191);
    const Svd svd = jacobi_svd(m);
    for (std::size_t k = 1; k < svd.singular_values.size(); ++k)
        CHECK(svd.singular_values[k - 1] >= svd.singular_values[k]);

    Matrix us = svd.u;
    for (index_t i = 0; i < us.rows; ++i)
        for (index_t j = 0; j < us.cols; ++j)
            us(i, j) *= svd.singular_values[static_cast<std::size_t>(j)];
    CHECK(max_entry_diff(matmul(us, transpose(svd.v)), m) < 1e-9);

    CHECK(max_entry_diff(matmul(transpose(svd.u), svd.u), identity(12)) < 1e-10);
    CHECK(max_entry_diff(matmul(transpose(svd.v), svd.v), identity(12)) < 1e-10);
}

TEST_CASE("power_iteration agrees with jacobi_svd on the top eigenvalue") {
    const Matrix s = build_prefix_sum(16);
    const Matrix g = gram(s);
    const auto apply = [&g](const std::vector<double>& x) { return matvec(g, x); };
    const PowerIterationResult top = power_iteration(apply, 16, 0x5eedull);
    const Svd svd = jacobi_svd(s);
    const double want = svd.singular_values[0] * svd.singular_values[0];
    CHECK(top.value == doctest::Approx(want).epsilon(1e-8));
    CHECK(top.iterations > 0);
}
