#include "oodkit/kernels.hpp"

namespace oodkit::kernels::detail {

void squared_distances_scalar(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                              double* out) {
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double* block = packed + b * dim * kLanes;
        for (std::size_t lane = 0; lane < kLanes; ++lane) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double diff = block[j * kLanes + lane] - query[j];
                const double sq = diff * diff;
                acc = acc + sq;
            }
            out[b * kLanes + lane] = acc;
        }
    }
}

} // namespace oodkit::kernels::detail
