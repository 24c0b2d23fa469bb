#include "texfv/serialize.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "texfv/features.hpp"

namespace texfv {

namespace {

// The formats are little-endian by definition; this code assumes a
// little-endian host, which covers every supported target.

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in)
        throw FormatError(std::string("TFV1: truncated while reading ") + what +
                          " at byte " + std::to_string(in.tellg() == -1 ? -1 : static_cast<long long>(in.tellg())));
    return v;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw FormatError(std::string("bundle: truncated while reading ") + what);
    return v;
}

}  // namespace

void write_tfv1(std::ostream& out, const std::vector<TaggedArray>& records) {
    out.write("TFV1", 4);
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) {
        put_u32(out, rec.tap_id);
        put_u32(out, static_cast<std::uint32_t>(rec.array.rank()));
        for (auto e : rec.array.shape()) put_u32(out, static_cast<std::uint32_t>(e));
        out.write(reinterpret_cast<const char*>(rec.array.data()),
                  static_cast<std::streamsize>(rec.array.size() * sizeof(float)));
    }
}

void write_tfv1(const std::string& path, const std::vector<TaggedArray>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("TFV1: cannot open " + path + " for writing");
    write_tfv1(out, records);
    if (!out) throw FormatError("TFV1: write failed for " + path);
}

std::vector<TaggedArray> read_tfv1(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TFV1", 4) != 0)
        throw FormatError("TFV1: bad magic at byte 0");
    const std::uint32_t count = get_u32(in, "record count");
    std::vector<TaggedArray> records;
    records.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        TaggedArray rec;
        rec.tap_id = get_u32(in, "tap id");
        const std::uint32_t rank = get_u32(in, "rank");
        std::vector<std::size_t> shape(rank);
        for (auto& e : shape) e = get_u32(in, "extent");
        const std::size_t n = DenseArray::count(shape);
        std::vector<float> data(n);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!in)
            throw FormatError("TFV1: truncated data in record " + std::to_string(r) +
                              " at byte " + std::to_string(static_cast<long long>(in.gcount())));
        rec.array = DenseArray(std::move(shape), std::move(data));
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<TaggedArray> read_tfv1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("TFV1: cannot open " + path);
    return read_tfv1(in);
}

bool Bundle::has(const std::string& name) const {
    for (const auto& [n, _] : sections)
        if (n == name) return true;
    return false;
}

const std::vector<TaggedArray>& Bundle::section(const std::string& name) const {
    for (const auto& [n, recs] : sections)
        if (n == name) return recs;
    throw FormatError("bundle: missing section '" + name + "'");
}

void write_bundle(const std::string& path, const Bundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("bundle: cannot open " + path + " for writing");
    out.write("TFVB", 4);
    put_u32(out, 1);  // version
    for (const auto& [name, records] : bundle.sections) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        std::ostringstream payload(std::ios::binary);
        write_tfv1(payload, records);
        const std::string bytes = payload.str();
        put_u64(out, bytes.size());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw FormatError("bundle: write failed for " + path);
}

Bundle read_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("bundle: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TFVB", 4) != 0)
        throw FormatError("bundle: bad magic in " + path);
    const std::uint32_t version = get_u32(in, "version");
    if (version != 1)
        throw FormatError("bundle: unsupported version " + std::to_string(version));

    Bundle bundle;
    while (true) {
        std::uint32_t name_len;
        in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
        if (in.eof()) break;
        if (!in) throw FormatError("bundle: truncated section header");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw FormatError("bundle: truncated section name");
        const std::uint64_t payload_len = get_u64(in, ("section '" + name + "' length").c_str());
        std::string payload(payload_len, '\0');
        in.read(payload.data(), static_cast<std::streamsize>(payload_len));
        if (!in) throw FormatError("bundle: truncated payload of section '" + name + "'");
        std::istringstream ps(payload, std::ios::binary);
        bundle.sections.emplace_back(name, read_tfv1(ps));
    }
    return bundle;
}

}  // namespace texfv
