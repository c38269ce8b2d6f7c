#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "photonloc/lattice.hpp"

namespace photonloc {

// splitmix64 finalizer; the whole disorder stream is built from chained
// applications of this single mixer so seeds serialize as plain integers
std::uint64_t mix64(std::uint64_t z);

// stream seed for one realization of one ensemble
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t realization);

// uniform on the open interval (-1, 1), keyed by the centered coordinate of a
// site; boxes of different size therefore agree on their common sites
double site_value(std::uint64_t stream, const std::vector<int>& centered);

struct DisorderField {
    LatticeSpec spec;
    std::uint64_t master_seed = 0;
    std::uint64_t realization = 0;
    Eigen::VectorXd values;  // V(x) in (-1, 1), indexed like site_index
};

DisorderField sample_field(const LatticeSpec& spec, std::uint64_t master_seed,
                           std::uint64_t realization);

// explicit values (tests, degenerate V = -1 sites); seeds recorded as given
DisorderField field_from_values(const LatticeSpec& spec, Eigen::VectorXd values,
                                std::uint64_t master_seed = 0,
                                std::uint64_t realization = 0);

// W(x1, x2) = V(x1) + V(x2) on the product box, indexed i1 * N + i2
Eigen::VectorXd pair_potential(const DisorderField& field);

}  // namespace photonloc
