#pragma once

#include "oodkit/featureset.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

// Seeded synthetic feature-space data.
//
// Geometry (offset o = s added to every coordinate of every row):
//   class mean      m_c = o + s * e_c
//   ID row          m_c + sigma * N(0, I)
//   OOD rows
//     equidistant_shell  b + s * u + sigma * N(0, I), where b is the
//                        barycenter of the class means and u a random unit
//                        vector orthogonal to every difference of class
//                        means, so the row is equidistant from all of them
//                        up to the noise term
//     interpolated       (1 - t) m_a + t m_b + sigma * N(0, I) for two
//                        random distinct classes a, b and t ~ U[0.25, 0.75]
//     uniform_box        each coordinate ~ U[0, 3s]
//   logits          logit_c = -|z - m_c|^2 / (2s)
//
// Random numbers come from a 64-bit LCG, x' = a x + c mod 2^64 with
// a = 6364136223846793005 and c = 1442695040888963407. Stream k (0 = train,
// 1 = test_id, 2 = test_ood) starts from splitmix64(seed + (k + 1) *
// 0x9E3779B97F4A7C15). Uniforms take the top 53 bits: u = (x >> 11) * 2^-53.
// Normals use the cosine branch of Box-Muller with u1 = 1 - u, u2 = u, two
// uniforms per normal. Rows are generated class-major, coordinates in order.

namespace oodkit {

enum class OodMode { EquidistantShell, Interpolated, UniformBox };

std::string_view to_string(OodMode mode) noexcept;

struct SynthSpec {
    std::size_t n_classes = 3;
    std::size_t dim = 64;
    std::size_t per_class_n = 500;
    double id_std = 1.0;
    double separation = 10.0;
    OodMode ood_mode = OodMode::EquidistantShell;
    std::size_t ood_n = 500;
    std::uint64_t seed = 0;

    /// Throws SpecInvalid.
    void validate() const;
};

SynthSpec synth_spec_from_json(std::string_view text);
std::string synth_spec_to_json(const SynthSpec& spec);

struct SynthData {
    FeatureSet train;
    FeatureSet test_id;
    FeatureSet test_ood;
};

SynthData generate(const SynthSpec& spec);

/// The documented generator, exposed so other code can reproduce its streams.
class SynthRng {
public:
    SynthRng(std::uint64_t seed, std::uint64_t stream);
    double uniform();
    double normal();

private:
    std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL, 1442695040888963407ULL, 0ULL> engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace oodkit
