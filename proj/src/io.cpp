#include "attune/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "attune/error.hpp"

namespace attune {

namespace {

// Reads the next PGM header token, skipping whitespace and # comments.
std::string next_pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

long parse_pgm_int(std::istream& in, const char* what) {
    const std::string tok = next_pgm_token(in);
    if (tok.empty()) throw FormatError(std::string("pgm: missing ") + what);
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string("pgm: bad ") + what + " `" + tok + "`");
    }
}

}  // namespace

IntGrid read_pgm(std::istream& in) {
    const std::string magic = next_pgm_token(in);
    if (magic != "P2" && magic != "P5") {
        throw FormatError("pgm: expected magic P2 or P5, got `" + magic + "`");
    }
    IntGrid g;
    g.width = static_cast<std::size_t>(parse_pgm_int(in, "width"));
    g.height = static_cast<std::size_t>(parse_pgm_int(in, "height"));
    const long maxval = parse_pgm_int(in, "maxval");
    if (g.width == 0 || g.height == 0) throw FormatError("pgm: zero dimension");
    if (maxval <= 0 || maxval > 65535) throw FormatError("pgm: maxval out of range");
    g.values.resize(g.width * g.height);

    if (magic == "P2") {
        for (auto& v : g.values) {
            const long x = parse_pgm_int(in, "pixel");
            if (x > maxval) throw FormatError("pgm: pixel exceeds maxval");
            v = static_cast<int>(x);
        }
    } else {
        if (maxval > 255) throw FormatError("pgm: P5 with maxval > 255 unsupported");
        // Single whitespace byte separates the header from raster data; the
        // last parse_pgm_int already consumed it.
        for (auto& v : g.values) {
            const int x = in.get();
            if (x == EOF) throw FormatError("pgm: truncated raster");
            if (x > maxval) throw FormatError("pgm: pixel exceeds maxval");
            v = x;
        }
    }
    return g;
}

IntGrid read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open pgm: " + path.string());
    return read_pgm(in);
}

void write_pgm(std::ostream& out, const IntGrid& grid, int maxval) {
    if (maxval < 1) maxval = 1;
    out << "P2\n" << grid.width << " " << grid.height << "\n" << maxval << "\n";
    for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
            out << grid.at(r, c) << (c + 1 == grid.width ? "" : " ");
        }
        out << "\n";
    }
}

void write_pgm_file(const std::filesystem::path& path, const IntGrid& grid, int maxval) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write pgm: " + path.string());
    write_pgm(out, grid, maxval);
}

IntGrid read_int_grid(std::istream& in) {
    IntGrid g;
    std::string line;
    while (std::getline(in, line)) {
        // Allow full-line comments.
        std::size_t ws = 0;
        while (ws < line.size() && std::isspace(static_cast<unsigned char>(line[ws]))) ++ws;
        if (ws == line.size() || line[ws] == '#') continue;

        std::istringstream iss(line);
        std::vector<int> row;
        long v;
        while (iss >> v) {
            if (v < 0) throw FormatError("grid: negative id");
            row.push_back(static_cast<int>(v));
        }
        if (!iss.eof()) throw FormatError("grid: non-integer token");
        if (row.empty()) continue;
        if (g.width == 0) {
            g.width = row.size();
        } else if (row.size() != g.width) {
            throw FormatError("grid: ragged rows (" + std::to_string(row.size()) +
                              " vs " + std::to_string(g.width) + ")");
        }
        g.values.insert(g.values.end(), row.begin(), row.end());
        ++g.height;
    }
    if (g.values.empty()) throw FormatError("grid: no data");
    return g;
}

IntGrid to_heatmap(const Matrix& values, std::size_t h, std::size_t w) {
    if (values.size() != h * w) {
        throw DimMismatchError("heatmap: matrix size does not match h*w");
    }
    double lo = values.data()[0], hi = values.data()[0];
    for (std::size_t i = 0; i < values.size(); ++i) {
        lo = std::min(lo, values.data()[i]);
        hi = std::max(hi, values.data()[i]);
    }
    IntGrid g;
    g.height = h;
    g.width = w;
    g.values.assign(h * w, 0);
    const double span = hi - lo;
    if (span > 0.0) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            g.values[i] = static_cast<int>(std::lround((values.data()[i] - lo) / span * 255.0));
        }
    }
    return g;
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t checksum(const Matrix& m) {
    return fnv1a64(m.data(), m.size() * sizeof(double));
}

std::string checksum_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace attune
