#include "mflab/mfmx.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <vector>

namespace mflab {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'M', 'X'};
constexpr std::size_t kHeaderBytes = 13;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_mfmx(const std::filesystem::path& path, const Matrix& m) {
    if (m.rows > std::numeric_limits<std::uint32_t>::max() ||
        m.cols > std::numeric_limits<std::uint32_t>::max())
        throw param_error("write_mfmx: dimensions exceed the format's u32 range");

    std::vector<unsigned char> buf;
    buf.reserve(kHeaderBytes + m.size() * 8);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, static_cast<std::uint32_t>(m.rows));
    put_u32(buf, static_cast<std::uint32_t>(m.cols));
    buf.push_back(m.lower_triangular ? 1 : 0);
    for (double v : m.data) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int s = 0; s < 64; s += 8) buf.push_back(static_cast<unsigned char>((bits >> s) & 0xff));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw error("write_mfmx: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw error("write_mfmx: short write to " + path.string());
}

Matrix read_mfmx(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw error("read_mfmx: cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());

    if (buf.size() < kHeaderBytes)
        throw format_error("read_mfmx: truncated header in " + path.string(), buf.size());
    for (std::size_t i = 0; i < 4; ++i)
        if (buf[i] != static_cast<unsigned char>(kMagic[i]))
            throw format_error("read_mfmx: bad magic in " + path.string(), i);

    const std::uint32_t rows = get_u32(buf.data() + 4);
    const std::uint32_t cols = get_u32(buf.data() + 8);
    if (buf[12] > 1) throw format_error("read_mfmx: flag byte must be 0 or 1", 12);

    const std::size_t want = kHeaderBytes + static_cast<std::size_t>(rows) * cols * 8;
    if (buf.size() != want)
        throw format_error("read_mfmx: payload size mismatch in " + path.string() + " (expected " +
                               std::to_string(want) + " bytes, got " + std::to_string(buf.size()) +
                               ")",
                           std::min(buf.size(), want));

    Matrix m(static_cast<index_t>(rows), static_cast<index_t>(cols), buf[12] == 1);
    const unsigned char* p = buf.data() + kHeaderBytes;
    for (double& v : m.data) {
        std::uint64_t bits = 0;
        for (int s = 0; s < 64; s += 8) bits |= static_cast<std::uint64_t>(*p++) << s;
        v = std::bit_cast<double>(bits);
    }
    return m;
}

}  // namespace mflab
