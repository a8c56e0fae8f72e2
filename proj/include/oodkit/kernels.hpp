#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Distance kernels behind a runtime-selected backend.
//
// Every backend computes, per packed row r,  sum_j (row_r[j] - query[j])^2
// with the sum taken sequentially over j in 64-bit, one separate multiply and
// add per term (no fused multiply-add). SIMD backends put rows, not
// dimensions, into lanes, so each lane performs exactly the scalar sequence
// and every backend is bit-identical to the scalar reference.

namespace oodkit::kernels {

inline constexpr std::size_t kLanes = 4;

/// Row-major rows repacked lane-interleaved: block b holds rows 4b..4b+3, and
/// element (row 4b+l, dim j) sits at data[(b * dim + j) * 4 + l]. Padding
/// lanes of the last block are zero.
class PackedRows {
public:
    PackedRows() = default;
    PackedRows(std::span<const double> row_major, std::size_t n_rows, std::size_t dim);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t blocks() const noexcept { return (rows_ + kLanes - 1) / kLanes; }
    const double* data() const noexcept { return data_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

enum class Backend { Scalar, Avx2, Neon };

using SquaredDistancesFn = void (*)(const double* packed, std::size_t n_blocks, std::size_t dim,
                                    const double* query, double* out);

struct KernelTable {
    Backend backend;
    std::string_view name;
    /// Writes n_blocks * kLanes squared distances to `out`.
    SquaredDistancesFn squared_distances;
};

bool available(Backend backend) noexcept;
std::vector<Backend> available_backends();

/// Throws BadConfig when the backend is not compiled in or not supported by this CPU.
const KernelTable& table(Backend backend);

/// Backend chosen once per process: OODKIT_SIMD=scalar|avx2|neon forces one,
/// otherwise the widest available.
const KernelTable& active();

std::string_view to_string(Backend backend) noexcept;

/// Squared distances from `query` to every packed row; `out` has rows() entries.
void squared_distances(const KernelTable& kernels, const PackedRows& rows, std::span<const double> query,
                       std::span<double> out);

/// Sequential 64-bit sums.
double l1_norm(std::span<const double> v) noexcept;
double l2_norm(std::span<const double> v) noexcept;

namespace detail {
void squared_distances_scalar(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                              double* out);
#if defined(OODKIT_HAVE_AVX2)
void squared_distances_avx2(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                            double* out);
#endif
#if defined(OODKIT_HAVE_NEON)
void squared_distances_neon(const double* packed, std::size_t n_blocks, std::size_t dim, const double* query,
                            double* out);
#endif
} // namespace detail

} // namespace oodkit::kernels
