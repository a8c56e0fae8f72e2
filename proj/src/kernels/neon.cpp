#include "oodkit/kernels.hpp"

#include <arm_neon.h>

namespace oodkit::kernels::detail {

// Two float64x2 registers cover the four lanes of a block. vmulq/vaddq are
// kept separate; vfmaq would round differently from the scalar reference.
void squared_distances_neon(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                            double* out) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double* block = packed + b * dim * kLanes;
        float64x2_t acc_lo = vdupq_n_f64(0.0);
        float64x2_t acc_hi = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            const float64x2_t q = vdupq_n_f64(query[j]);
            const float64x2_t lo = vsubq_f64(vld1q_f64(block + j * kLanes), q);
            const float64x2_t hi = vsubq_f64(vld1q_f64(block + j * kLanes + 2), q);
            acc_lo = vaddq_f64(acc_lo, vmulq_f64(lo, lo));
            acc_hi = vaddq_f64(acc_hi, vmulq_f64(hi, hi));
        }
        vst1q_f64(out + b * kLanes, acc_lo);
        vst1q_f64(out + b * kLanes + 2, acc_hi);
    }
}

} // namespace oodkit::kernels::detail
