#pragma once

#include <random>
#include <string>
#include <vector>

#include "modelmap/matrixcore.hpp"
#include "modelmap/rng.hpp"
#include "modelmap/types.hpp"

namespace testutil {

using modelmap::CenteredMatrix;
using modelmap::Index;
using modelmap::LikelihoodMatrix;
using modelmap::Matrix;
using modelmap::Vector;

inline std::vector<std::string> ids(const char* prefix, Index count) {
    std::vector<std::string> out;
    for (Index i = 0; i < count; ++i)
        out.push_back(std::string(prefix) + std::to_string(i));
    return out;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed,
                            double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
}

inline LikelihoodMatrix random_likelihood(Index K, Index N, std::uint64_t seed,
                                          double scale = 1.0) {
    return LikelihoodMatrix{random_matrix(K, N, seed, scale),
                            ids("m", K), ids("t", N), std::nullopt};
}

inline CenteredMatrix random_centered(Index K, Index N, std::uint64_t seed,
                                      double scale = 1.0) {
    return modelmap::double_center(random_likelihood(K, N, seed, scale));
}

}  // namespace testutil
