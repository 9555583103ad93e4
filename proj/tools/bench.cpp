#include <chrono>
#include <cstdio>
#include <functional>

#include "mflab/kernels.hpp"
#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"
#include "mflab/rng.hpp"
#include "mflab/solver.hpp"

namespace {

using namespace mflab;

double best_of_three_ms(const std::function<void()>& work) {
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        work();
        const auto stop = std::chrono::steady_clock::now();
        const double ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop -
                                                                                  start)
                .count();
        if (ms < best) best = ms;
    }
    return best;
}

void report(const char* op, index_t n, double serial_ms, double parallel_ms, double diff) {
    std::printf("%-24s %6lld %12.3f %12.3f %9.2fx %12.3e\n", op,
                static_cast<long long>(n), serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0, diff);
}

void bench_size(index_t n) {
    const Matrix s = build_prefix_sum(n);
    const Matrix c = sqrt_prefix_warm_start(n);

    Matrix serial_prod, parallel_prod;
    const double mm_serial = best_of_three_ms([&] { serial_prod = ref::matmul(s, c); });
    const double mm_parallel = best_of_three_ms([&] { parallel_prod = matmul(s, c); });
    report("matmul", n, mm_serial, mm_parallel, max_abs_diff(serial_prod, parallel_prod));

    Matrix serial_inv, parallel_inv;
    const double inv_serial =
        best_of_three_ms([&] { serial_inv = ref::invert_lower_triangular(c); });
    const double inv_parallel =
        best_of_three_ms([&] { parallel_inv = invert_lower_triangular(c); });
    report("invert_lower_triangular", n, inv_serial, inv_parallel,
           max_abs_diff(serial_inv, parallel_inv));

    double serial_norm = 0.0, parallel_norm = 0.0;
    const double fr_serial =
        best_of_three_ms([&] { serial_norm = ref::frobenius_norm_sq(serial_prod); });
    const double fr_parallel =
        best_of_three_ms([&] { parallel_norm = frobenius_norm_sq(parallel_prod); });
    report("frobenius_norm_sq", n, fr_serial, fr_parallel,
           std::abs(serial_norm - parallel_norm));

    double serial_col = 0.0, parallel_col = 0.0;
    const double col_serial =
        best_of_three_ms([&] { serial_col = ref::max_column_norm(c); });
    const double col_parallel =
        best_of_three_ms([&] { parallel_col = max_column_norm(c); });
    report("max_column_norm", n, col_serial, col_parallel,
           std::abs(serial_col - parallel_col));
}

}  // namespace

int main() {
    std::printf("%-24s %6s %12s %12s %9s %12s\n", "op", "n", "serial ms", "parallel ms",
                "speedup", "max |diff|");
    for (index_t n : {128, 256, 512}) bench_size(n);
    return 0;
}
