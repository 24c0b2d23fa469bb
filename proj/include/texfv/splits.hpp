#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "texfv/dataset.hpp"

namespace texfv {

enum class SplitKind { half_random, sample_holdout, predefined };

SplitKind split_kind_from_string(const std::string& s);

struct SplitProtocol {
    SplitKind kind = SplitKind::half_random;
    std::size_t rounds = 10;       // half_random only; sample_holdout uses #groups
    std::uint64_t rng_seed = 0;
    std::string split_dir;         // predefined: train_<r>.txt / test_<r>.txt
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-round disjoint train/test index sets covering every record.
std::vector<Split> make_splits(const std::vector<ImageRecord>& records,
                               const SplitProtocol& protocol);

}  // namespace texfv
