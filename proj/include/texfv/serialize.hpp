#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

struct TaggedArray;  // features.hpp

/// TFV1 stream: magic "TFV1", u32 record count, then per record
/// u32 tap-id, u32 rank, u32 extents[rank], f32 data row-major.
/// All integers and floats little-endian.
void write_tfv1(std::ostream& out, const std::vector<TaggedArray>& records);
void write_tfv1(const std::string& path, const std::vector<TaggedArray>& records);

std::vector<TaggedArray> read_tfv1(std::istream& in);
std::vector<TaggedArray> read_tfv1(const std::string& path);

/// Model bundle: magic "TFVB", u32 version = 1, then named sections:
/// u32 name length, name bytes, u64 payload length, payload = one TFV1 stream.
/// Section order is preserved on round trip.
struct Bundle {
    std::vector<std::pair<std::string, std::vector<TaggedArray>>> sections;

    bool has(const std::string& name) const;
    const std::vector<TaggedArray>& section(const std::string& name) const;
};

void write_bundle(const std::string& path, const Bundle& bundle);
Bundle read_bundle(const std::string& path);

}  // namespace texfv
