#include "oodkit/error.hpp"
#include "oodkit/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace oodkit::kernels {

PackedRows::PackedRows(std::span<const double> row_major, std::size_t n_rows, std::size_t dim)
    : rows_(n_rows), dim_(dim), data_(blocks() * dim * kLanes, 0.0) {
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t b = r / kLanes;
        const std::size_t lane = r % kLanes;
        for (std::size_t j = 0; j < dim; ++j) {
            data_[(b * dim + j) * kLanes + lane] = row_major[r * dim + j];
        }
    }
}

namespace {

constexpr KernelTable kScalar{Backend::Scalar, "scalar", &detail::squared_distances_scalar};
#if defined(OODKIT_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2, "avx2", &detail::squared_distances_avx2};
#endif
#if defined(OODKIT_HAVE_NEON)
constexpr KernelTable kNeon{Backend::Neon, "neon", &detail::squared_distances_neon};
#endif

const KernelTable& select_active() {
    if (const char* forced = std::getenv("OODKIT_SIMD"); forced && *forced && std::string(forced) != "auto") {
        const std::string name(forced);
        for (auto backend : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
            if (to_string(backend) == name) return table(backend);
        }
        throw Error(ErrorKind::BadConfig, "OODKIT_SIMD: unknown backend '" + name + "'");
    }
    const auto backends = available_backends();
    return table(backends.back());
}

} // namespace

std::string_view to_string(Backend backend) noexcept {
    switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
    }
    return "unknown";
}

bool available(Backend backend) noexcept {
    switch (backend) {
    case Backend::Scalar:
        return true;
    case Backend::Avx2:
#if defined(OODKIT_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    case Backend::Neon:
#if defined(OODKIT_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out;
    for (auto backend : {Backend::Scalar, Backend::Neon, Backend::Avx2}) {
        if (available(backend)) out.push_back(backend);
    }
    return out;
}

const KernelTable& table(Backend backend) {
    if (!available(backend)) {
        throw Error(ErrorKind::BadConfig, "kernel backend '" + std::string(to_string(backend)) + "' is unavailable");
    }
    switch (backend) {
#if defined(OODKIT_HAVE_AVX2)
    case Backend::Avx2: return kAvx2;
#endif
#if defined(OODKIT_HAVE_NEON)
    case Backend::Neon: return kNeon;
#endif
    default: return kScalar;
    }
}

const KernelTable& active() {
    static const KernelTable& chosen = select_active();
    return chosen;
}

void squared_distances(const KernelTable& kernels, const PackedRows& rows, std::span<const double> query,
                       std::span<double> out) {
    if (query.size() != rows.dim() || out.size() != rows.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "squared_distances: query or output size mismatch");
    }
    const std::size_t full = rows.rows() / kLanes;
    if (full) kernels.squared_distances(rows.data(), full, rows.dim(), query.data(), out.data());
    if (rows.rows() % kLanes) {
        double tail[kLanes];
        kernels.squared_distances(rows.data() + full * rows.dim() * kLanes, 1, rows.dim(), query.data(), tail);
        for (std::size_t r = full * kLanes, l = 0; r < rows.rows(); ++r, ++l) out[r] = tail[l];
    }
}

double l1_norm(std::span<const double> v) noexcept {
    double acc = 0.0;
    for (double x : v) acc += x < 0 ? -x : x;
    return acc;
}

double l2_norm(std::span<const double> v) noexcept {
    double acc = 0.0;
    for (double x : v) {
        const double sq = x * x;
        acc = acc + sq;
    }
    return std::sqrt(acc);
}

} // namespace oodkit::kernels
