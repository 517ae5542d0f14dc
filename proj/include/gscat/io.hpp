#pragma once

// File interchange: WAV (RIFF mono, float32 or PCM16), PGM (P5) spectrogram
// images with CSV sidecars, feature vectors (CSV and binary) and bound reports.

#include "gscat/bounds.hpp"
#include "gscat/errors.hpp"
#include "gscat/gabor.hpp"
#include "gscat/scattering.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace gscat {

namespace detail {

template <class T>
void put_le(std::string& buf, T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& buf, float v) { put_le(buf, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& buf, double v) { put_le(buf, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    template <class T>
    T get() {
        need(sizeof(T));
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }
    float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw format_error(what_ + ": truncated");
    }
    std::string data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string() + " for reading", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("failed reading " + path.string(), path.string());
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing", path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw io_error("failed writing " + path.string(), path.string());
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

// ---------------------------------------------------------------------------
// WAV

enum class WavFormat { float32, pcm16 };

struct WavData {
    std::vector<double> samples;
    double fs = 0.0;
    WavFormat format = WavFormat::float32;
};

inline void write_wav(const std::filesystem::path& path, std::span<const double> samples, double fs,
                      WavFormat format = WavFormat::float32) {
    if (!(fs > 0) || fs > 4.0e9) throw invalid_argument("sample rate out of range for WAV");
    const bool is_float = format == WavFormat::float32;
    const std::uint16_t bits = is_float ? 32 : 16;
    const std::uint16_t block = bits / 8;
    const auto rate = static_cast<std::uint32_t>(std::llround(fs));
    const std::uint64_t data_bytes = static_cast<std::uint64_t>(samples.size()) * block;
    if (data_bytes > 0xFFFFFFFFull - 64) throw invalid_argument("signal too long for a RIFF file");

    std::string buf;
    buf.reserve(static_cast<std::size_t>(data_bytes) + 64);
    buf += "RIFF";
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(36 + data_bytes));
    buf += "WAVE";
    buf += "fmt ";
    detail::put_le<std::uint32_t>(buf, 16);
    detail::put_le<std::uint16_t>(buf, is_float ? 3 : 1);
    detail::put_le<std::uint16_t>(buf, 1);
    detail::put_le<std::uint32_t>(buf, rate);
    detail::put_le<std::uint32_t>(buf, rate * block);
    detail::put_le<std::uint16_t>(buf, block);
    detail::put_le<std::uint16_t>(buf, bits);
    buf += "data";
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(data_bytes));
    for (double v : samples) {
        if (is_float) {
            detail::put_f32(buf, static_cast<float>(v));
        } else {
            double q = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
            detail::put_le<std::int16_t>(buf, static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0)));
        }
    }
    detail::write_file(path, buf);
}

inline WavData parse_wav(std::string bytes) {
    detail::Reader r(std::move(bytes), "WAV");
    if (r.get_bytes(4) != "RIFF") throw format_error("WAV: missing RIFF chunk");
    r.get<std::uint32_t>();
    if (r.get_bytes(4) != "WAVE") throw format_error("WAV: RIFF form is not WAVE");

    WavData out;
    bool have_fmt = false;
    std::uint16_t tag = 0, bits = 0;
    while (r.remaining() >= 8) {
        const std::string id = r.get_bytes(4);
        const auto size = r.get<std::uint32_t>();
        if (id == "fmt ") {
            if (size < 16) throw format_error("WAV: fmt chunk too short");
            tag = r.get<std::uint16_t>();
            const auto channels = r.get<std::uint16_t>();
            out.fs = r.get<std::uint32_t>();
            r.get<std::uint32_t>();
            r.get<std::uint16_t>();
            bits = r.get<std::uint16_t>();
            std::size_t rest = size - 16;
            if (tag == 0xFFFE && rest >= 10) {
                r.get<std::uint16_t>();
                r.get<std::uint16_t>();
                r.get<std::uint32_t>();
                tag = r.get<std::uint16_t>();
                rest -= 10;
            }
            r.skip(rest + (size & 1));
            if (channels != 1)
                throw format_error("WAV: fmt chunk declares " + std::to_string(channels) +
                                   " channels, only mono is supported");
            if (!((tag == 3 && bits == 32) || (tag == 1 && bits == 16)))
                throw format_error("WAV: fmt chunk format tag " + std::to_string(tag) + " with " +
                                   std::to_string(bits) + " bits is unsupported (need float32 or PCM16)");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw format_error("WAV: data chunk precedes fmt chunk");
            const std::size_t width = bits / 8;
            if (size % width != 0) throw format_error("WAV: data chunk size is not a whole number of samples");
            const std::size_t count = size / width;
            out.samples.resize(count);
            out.format = tag == 3 ? WavFormat::float32 : WavFormat::pcm16;
            for (std::size_t i = 0; i < count; ++i)
                out.samples[i] = tag == 3 ? static_cast<double>(r.get_f32())
                                          : static_cast<double>(r.get<std::int16_t>()) / 32768.0;
            return out;
        } else {
            r.skip(size + (size & 1));
        }
    }
    throw format_error(have_fmt ? "WAV: missing data chunk" : "WAV: missing fmt chunk");
}

inline WavData read_wav(const std::filesystem::path& path) {
    try {
        return parse_wav(detail::read_file(path));
    } catch (const format_error& e) {
        throw format_error(std::string(e.what()) + " in " + path.string());
    }
}

// ---------------------------------------------------------------------------
// Spectrogram images and grid CSV

enum class ImageScale { linear, db };

/// Matrix CSV: header "channel,k0,k1,...", then one row per channel.
inline void write_grid_csv(const std::filesystem::path& path, const MagnitudeGrid& grid) {
    std::string buf = "channel";
    for (std::size_t k = 0; k < grid.frames(); ++k) buf += ",k" + std::to_string(k);
    buf += '\n';
    for (std::size_t j = 0; j < grid.channels(); ++j) {
        buf += std::to_string(j);
        for (std::size_t k = 0; k < grid.frames(); ++k) {
            buf += ',';
            buf += detail::format_double(grid(j, k));
        }
        buf += '\n';
    }
    detail::write_file(path, buf);
}

/// 8-bit grayscale pixels, highest channel in the top row.
inline std::vector<std::uint8_t> spectrogram_pixels(const MagnitudeGrid& grid, ImageScale scale) {
    if (grid.channels() == 0 || grid.frames() == 0) throw invalid_argument("cannot render an empty grid");
    double peak = 0.0;
    for (double v : grid.values()) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw invalid_argument("spectrogram values must be finite and nonnegative");
        peak = std::max(peak, v);
    }
    std::vector<std::uint8_t> px(grid.channels() * grid.frames(), 0);
    if (peak == 0.0) return px;
    for (std::size_t row = 0; row < grid.channels(); ++row) {
        const std::size_t j = grid.channels() - 1 - row;
        for (std::size_t k = 0; k < grid.frames(); ++k) {
            const double r = grid(j, k) / peak;
            double level = 0.0;
            if (scale == ImageScale::linear) {
                level = r;
            } else {
                const double db = r > 0.0 ? std::max(-80.0, 20.0 * std::log10(r)) : -80.0;
                level = (db + 80.0) / 80.0;
            }
            px[row * grid.frames() + k] = static_cast<std::uint8_t>(std::lround(255.0 * level));
        }
    }
    return px;
}

/// Writes `path` (PGM P5) and a sidecar CSV with the raw values next to it.
inline void write_spectrogram(const MagnitudeGrid& grid, const std::filesystem::path& path, ImageScale scale) {
    const auto px = spectrogram_pixels(grid, scale);
    std::string buf = "P5\n" + std::to_string(grid.frames()) + " " + std::to_string(grid.channels()) + "\n255\n";
    buf.append(reinterpret_cast<const char*>(px.data()), px.size());
    detail::write_file(path, buf);
    auto sidecar = path;
    sidecar.replace_extension(".csv");
    write_grid_csv(sidecar, grid);
}

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
    std::string bytes = detail::read_file(path);
    std::istringstream in(bytes);
    std::string magic;
    PgmImage img;
    int maxval = 0;
    in >> magic >> img.width >> img.height >> maxval;
    if (magic != "P5" || !in || maxval != 255) throw format_error("PGM header invalid in " + path.string());
    in.get();
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw format_error("PGM pixel data truncated in " + path.string());
    return img;
}

// ---------------------------------------------------------------------------
// Feature vectors

inline std::string path_label(const Path& q) {
    if (q.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (i) s += '/';
        s += std::to_string(q[i]);
    }
    return s;
}

/// Header "path,count,values"; each row is the path ("-" for the empty path,
/// otherwise channel indices joined by '/'), the entry length and the values.
inline void write_features_csv(const std::filesystem::path& path, const FeatureVector& fv) {
    std::string buf = "path,count,values\n";
    for (const auto& [q, v] : fv.entries) {
        buf += path_label(q) + "," + std::to_string(v.size());
        for (double x : v) {
            buf += ',';
            buf += detail::format_double(x);
        }
        buf += '\n';
    }
    detail::write_file(path, buf);
}

inline constexpr std::array<char, 4> feature_magic{'G', 'S', 'C', 'F'};
inline constexpr std::uint32_t feature_format_version = 1;

/// Little-endian container:
///   magic "GSCF", u32 version, u32 depth, u32 layer count, per layer (u32 a, u32 M),
///   u64 input length, u32 id length + id bytes, u64 entry count,
///   per entry (u32 path length, u32 indices..., u64 value count, f64 values...),
///   u64 pruned count, per pruned path (u32 length, u32 indices...).
inline std::string encode_features(const FeatureVector& fv) {
    std::string buf(feature_magic.begin(), feature_magic.end());
    detail::put_le<std::uint32_t>(buf, feature_format_version);
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(fv.depth));
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(fv.lattices.size()));
    for (const auto& l : fv.lattices) {
        detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(l.time_step));
        detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(l.channels));
    }
    detail::put_le<std::uint64_t>(buf, fv.input_length);
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(fv.omega_id.size()));
    buf += fv.omega_id;
    auto put_path = [&](const Path& q) {
        detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(q.size()));
        for (auto i : q) detail::put_le<std::uint32_t>(buf, i);
    };
    detail::put_le<std::uint64_t>(buf, fv.entries.size());
    for (const auto& [q, v] : fv.entries) {
        put_path(q);
        detail::put_le<std::uint64_t>(buf, v.size());
        for (double x : v) detail::put_f64(buf, x);
    }
    detail::put_le<std::uint64_t>(buf, fv.pruned.size());
    for (const auto& q : fv.pruned) put_path(q);
    return buf;
}

inline FeatureVector decode_features(std::string bytes) {
    detail::Reader r(std::move(bytes), "feature container");
    const std::string magic = r.get_bytes(4);
    if (magic != std::string(feature_magic.begin(), feature_magic.end()))
        throw format_error("feature container: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != feature_format_version)
        throw format_error("feature container: unsupported version " + std::to_string(version));
    FeatureVector fv;
    fv.depth = r.get<std::uint32_t>();
    const auto layers = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < layers; ++i) {
        Lattice l;
        l.time_step = r.get<std::uint32_t>();
        l.channels = r.get<std::uint32_t>();
        fv.lattices.push_back(l);
    }
    fv.input_length = r.get<std::uint64_t>();
    fv.omega_id = r.get_bytes(r.get<std::uint32_t>());
    auto get_path = [&] {
        Path q(r.get<std::uint32_t>());
        for (auto& i : q) i = r.get<std::uint32_t>();
        return q;
    };
    const auto entries = r.get<std::uint64_t>();
    for (std::uint64_t e = 0; e < entries; ++e) {
        Path q = get_path();
        const auto n = r.get<std::uint64_t>();
        if (n > r.remaining() / 8) throw format_error("feature container: truncated");
        rvec v(n);
        for (auto& x : v) x = r.get_f64();
        fv.entries.emplace(std::move(q), std::move(v));
    }
    const auto pruned = r.get<std::uint64_t>();
    for (std::uint64_t p = 0; p < pruned; ++p) fv.pruned.push_back(get_path());
    if (r.remaining() != 0) throw format_error("feature container: trailing bytes");
    return fv;
}

inline void write_features_binary(const std::filesystem::path& path, const FeatureVector& fv) {
    detail::write_file(path, encode_features(fv));
}

inline FeatureVector read_features_binary(const std::filesystem::path& path) {
    return decode_features(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Verification reports

inline void write_report_csv(const std::filesystem::path& path, std::span<const BoundReport> reports) {
    std::string buf = "name,measured,bound,margin,passed,tol,context\n";
    for (const auto& r : reports) {
        buf += detail::csv_quote(r.name) + "," + detail::format_double(r.measured) + "," +
               detail::format_double(r.bound) + "," + detail::format_double(r.margin) + "," +
               (r.passed ? "true" : "false") + "," + detail::format_double(r.tol) + "," +
               detail::csv_quote(r.context) + "\n";
    }
    detail::write_file(path, buf);
}

inline std::string report_summary(std::span<const BoundReport> reports, std::span<const std::string> notes = {}) {
    std::ostringstream ss;
    std::size_t passed = 0;
    for (const auto& r : reports) {
        if (r.passed) ++passed;
        ss << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured=" << std::setprecision(6) << r.measured
           << "  bound=" << r.bound << "  margin=" << r.margin;
        if (!r.context.empty()) ss << "  [" << r.context << "]";
        ss << '\n';
    }
    for (const auto& n : notes) ss << "NOTE " << n << '\n';
    ss << passed << "/" << reports.size() << " checks passed\n";
    return ss.str();
}

inline void write_report_text(const std::filesystem::path& path, std::span<const BoundReport> reports,
                              std::span<const std::string> notes = {}) {
    detail::write_file(path, report_summary(reports, notes));
}

} // namespace gscat
