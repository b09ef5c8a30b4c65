#include "hsn/io/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace hsn {

static_assert(std::endian::native == std::endian::little,
              "pfm io assumes a little-endian host");

namespace {

[[noreturn]] void malformed(const std::string& path, std::streamoff offset, const std::string& what) {
    throw DataError("pfm: malformed header in " + path + " at byte " + std::to_string(offset) +
                    ": " + what);
}

// Reads one whitespace-delimited token; PFM headers separate fields with
// single whitespace characters (commonly newlines).
std::string next_token(std::ifstream& in, const std::string& path) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
            if (!tok.empty()) return tok;
        } else {
            tok.push_back(c);
        }
    }
    malformed(path, in.tellg(), "unexpected end of header");
}

}  // namespace

MaskedMap read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("pfm: cannot open " + path);

    const std::string magic = next_token(in, path);
    if (magic != "Pf") malformed(path, 0, "expected 'Pf', got '" + magic + "'");

    int w = 0, h = 0;
    try {
        w = std::stoi(next_token(in, path));
        h = std::stoi(next_token(in, path));
    } catch (const std::exception&) {
        malformed(path, in.tellg(), "bad dimensions");
    }
    if (w < 1 || h < 1) malformed(path, in.tellg(), "non-positive dimensions");

    double scale = 0.0;
    try {
        scale = std::stod(next_token(in, path));
    } catch (const std::exception&) {
        malformed(path, in.tellg(), "bad scale");
    }
    if (scale == 0.0) malformed(path, in.tellg(), "zero scale");
    const bool little_endian = scale < 0.0;

    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw DataError("pfm: truncated pixel data in " + path);

    MaskedMap map(h, w);
    for (int y = 0; y < h; ++y) {
        // rows stored bottom-up
        const unsigned char* row = raw.data() + static_cast<std::size_t>(h - 1 - y) * w * 4;
        for (int x = 0; x < w; ++x) {
            unsigned char b[4] = {row[x * 4], row[x * 4 + 1], row[x * 4 + 2], row[x * 4 + 3]};
            if (!little_endian) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
            float v;
            std::memcpy(&v, b, 4);
            map.at(y, x) = v;
            map.set_valid(y, x, std::isfinite(v));
        }
    }
    return map;
}

void write_pfm(const MaskedMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("pfm: cannot write " + path);
    out << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
    std::vector<unsigned char> raw(static_cast<std::size_t>(map.width) * map.height * 4);
    for (int y = 0; y < map.height; ++y) {
        unsigned char* row = raw.data() + static_cast<std::size_t>(map.height - 1 - y) * map.width * 4;
        for (int x = 0; x < map.width; ++x) {
            const float v =
                map.is_valid(y, x) ? map.at(y, x) : std::numeric_limits<float>::infinity();
            std::memcpy(row + x * 4, &v, 4);
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("pfm: write failed for " + path);
}

}  // namespace hsn
