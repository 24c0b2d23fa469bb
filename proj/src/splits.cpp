#include "texfv/splits.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

namespace texfv {

SplitKind split_kind_from_string(const std::string& s) {
    if (s == "half_random") return SplitKind::half_random;
    if (s == "sample_holdout") return SplitKind::sample_holdout;
    if (s == "predefined") return SplitKind::predefined;
    throw ConfigError("unknown split protocol: " + s);
}

namespace {

std::vector<Split> half_random_splits(const std::vector<ImageRecord>& records,
                                      const SplitProtocol& protocol) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_class[records[i].label].push_back(i);

    std::mt19937_64 rng(protocol.rng_seed);
    std::vector<Split> splits;
    for (std::size_t r = 0; r < protocol.rounds; ++r) {
        Split split;
        for (auto& [label, indices] : by_class) {
            std::vector<std::size_t> shuffled = indices;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            const std::size_t n_train = (shuffled.size() + 1) / 2;
            split.train.insert(split.train.end(), shuffled.begin(), shuffled.begin() + n_train);
            split.test.insert(split.test.end(), shuffled.begin() + n_train, shuffled.end());
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
        splits.push_back(std::move(split));
    }
    return splits;
}

std::vector<Split> sample_holdout_splits(const std::vector<ImageRecord>& records) {
    std::set<std::string> groups;
    for (const auto& rec : records) {
        if (rec.group_id.empty())
            throw ValidationError("sample_holdout: record '" + rec.path +
                                  "' has no group id (configure the group regex)");
        groups.insert(rec.group_id);
    }
    std::vector<Split> splits;
    for (const auto& held_out : groups) {
        Split split;
        for (std::size_t i = 0; i < records.size(); ++i)
            (records[i].group_id == held_out ? split.test : split.train).push_back(i);
        splits.push_back(std::move(split));
    }
    return splits;
}

std::vector<std::size_t> read_split_file(const std::string& path,
                                         const std::map<std::string, std::size_t>& by_path) {
    std::ifstream in(path);
    if (!in) throw DataError("predefined split file missing: " + path);
    std::vector<std::size_t> indices;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        const std::string rel = tab == std::string::npos ? line : line.substr(0, tab);
        const auto it = by_path.find(rel);
        if (it == by_path.end())
            throw DataError("split file " + path + " names unknown image '" + rel + "'");
        indices.push_back(it->second);
    }
    return indices;
}

std::vector<Split> predefined_splits(const std::vector<ImageRecord>& records,
                                     const SplitProtocol& protocol) {
    if (protocol.split_dir.empty())
        throw ValidationError("predefined protocol requires a split directory");
    std::map<std::string, std::size_t> by_path;
    for (std::size_t i = 0; i < records.size(); ++i) by_path[records[i].path] = i;

    std::vector<Split> splits;
    namespace fs = std::filesystem;
    for (std::size_t r = 0; r < protocol.rounds; ++r) {
        const std::string train_path = (fs::path(protocol.split_dir) /
                                        ("train_" + std::to_string(r) + ".txt")).string();
        const std::string test_path = (fs::path(protocol.split_dir) /
                                       ("test_" + std::to_string(r) + ".txt")).string();
        Split split{read_split_file(train_path, by_path), read_split_file(test_path, by_path)};
        splits.push_back(std::move(split));
    }
    return splits;
}

}  // namespace

std::vector<Split> make_splits(const std::vector<ImageRecord>& records,
                               const SplitProtocol& protocol) {
    if (records.empty()) throw ValidationError("make_splits: no records");
    switch (protocol.kind) {
        case SplitKind::half_random: return half_random_splits(records, protocol);
        case SplitKind::sample_holdout: return sample_holdout_splits(records);
        case SplitKind::predefined: return predefined_splits(records, protocol);
    }
    throw ValidationError("make_splits: bad protocol kind");
}

}  // namespace texfv
