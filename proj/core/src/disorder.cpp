#include "photonloc/disorder.hpp"

#include <stdexcept>

namespace photonloc {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t realization) {
    return mix64(mix64(master_seed) ^ realization);
}

namespace {
// map a signed coordinate to an unsigned key without collisions
std::uint64_t zigzag(std::int64_t c) {
    return (static_cast<std::uint64_t>(c) << 1) ^
           static_cast<std::uint64_t>(c >> 63);
}
}  // namespace

double site_value(std::uint64_t stream, const std::vector<int>& centered) {
    std::uint64_t h = stream;
    for (std::size_t i = 0; i < centered.size(); ++i)
        h = mix64(h ^ (0x9E3779B97F4A7C15ULL * (i + 1)) ^ zigzag(centered[i]));
    // top 53 bits with a half-ulp offset: u in (0,1) strictly, so V avoids +-1
    double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

DisorderField sample_field(const LatticeSpec& spec, std::uint64_t master_seed,
                           std::uint64_t realization) {
    spec.validate();
    DisorderField field;
    field.spec = spec;
    field.master_seed = master_seed;
    field.realization = realization;
    const std::uint64_t stream = stream_seed(master_seed, realization);
    const int N = spec.sites();
    field.values.resize(N);
    std::vector<int> centered(spec.dim);
    for (int idx = 0; idx < N; ++idx) {
        auto x = site_coords(spec, idx);
        for (int i = 0; i < spec.dim; ++i) centered[i] = centered_coord(x[i], spec.size);
        field.values[idx] = site_value(stream, centered);
    }
    return field;
}

DisorderField field_from_values(const LatticeSpec& spec, Eigen::VectorXd values,
                                std::uint64_t master_seed, std::uint64_t realization) {
    spec.validate();
    if (values.size() != spec.sites())
        throw std::invalid_argument("disorder value count does not match lattice");
    for (int i = 0; i < values.size(); ++i)
        if (values[i] < -1.0 || values[i] > 1.0)
            throw std::invalid_argument("disorder values must lie in [-1, 1]");
    DisorderField field;
    field.spec = spec;
    field.master_seed = master_seed;
    field.realization = realization;
    field.values = std::move(values);
    return field;
}

Eigen::VectorXd pair_potential(const DisorderField& field) {
    const int N = field.spec.sites();
    Eigen::VectorXd W(static_cast<long>(N) * N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            W[static_cast<long>(i) * N + j] = field.values[i] + field.values[j];
    return W;
}

}  // namespace photonloc
