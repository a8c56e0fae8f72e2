// Built with -mavx2 only; callers reach it through the runtime dispatch table.
#include "oodkit/kernels.hpp"

#include <immintrin.h>

namespace oodkit::kernels::detail {

void squared_distances_avx2(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                            double* out) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double* block = packed + b * dim * kLanes;
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < dim; ++j) {
            const __m256d rows = _mm256_loadu_pd(block + j * kLanes);
            const __m256d diff = _mm256_sub_pd(rows, _mm256_set1_pd(query[j]));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
        }
        _mm256_storeu_pd(out + b * kLanes, acc);
    }
}

} // namespace oodkit::kernels::detail
