#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hysure/degradation.hpp"
#include "hysure/image.hpp"
#include "hysure/kernel.hpp"
#include "hysure/metrics.hpp"
#include "hysure/solver.hpp"
#include "hysure/subspace.hpp"

namespace hysure {

namespace io_detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw IoError("failed to format floating-point value");
    return {buf, ptr};
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("invalid number '" + std::string(s) + "' in " + context);
    return v;
}

inline long parse_int(std::string_view s, const std::string& context) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError("invalid integer '" + std::string(s) + "' in " + context);
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t end = s.find(sep, start);
        if (end == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

/// Write to `<path>.tmp` then rename over the target, so readers never see a
/// partial file.
template <typename WriteFn>
void atomic_write(const std::filesystem::path& path, WriteFn&& fn) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        fn(out);
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

inline void put_f32le(std::string& buf, float v) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    buf.push_back(static_cast<char>(bits & 0xff));
    buf.push_back(static_cast<char>((bits >> 8) & 0xff));
    buf.push_back(static_cast<char>((bits >> 16) & 0xff));
    buf.push_back(static_cast<char>((bits >> 24) & 0xff));
}

inline float get_f32le(const char* p) {
    const std::uint32_t bits = (static_cast<std::uint32_t>(static_cast<unsigned char>(p[0]))) |
                               (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
                               (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
                               (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
    return std::bit_cast<float>(bits);
}

} // namespace io_detail

/// Band-sequential raster cube: a short ASCII header followed by raw
/// little-endian 32-bit floats, row-major within each band.
struct CubeContainer {
    SpectralImage image;
    std::vector<double> wavelengths; // optional, one per band
    std::vector<int> band_keep;      // optional, original band indices
    std::vector<double> band_scales; // optional, per-band normalization scales

    static constexpr const char* magic = "HSCUBE1";
};

inline void write_cube(const std::filesystem::path& path, const CubeContainer& cube) {
    const auto& img = cube.image;
    if (!cube.wavelengths.empty() && cube.wavelengths.size() != static_cast<std::size_t>(img.bands()))
        throw ValidationError("write_cube: wavelengths length must equal band count");
    if (!cube.band_keep.empty() && cube.band_keep.size() != static_cast<std::size_t>(img.bands()))
        throw ValidationError("write_cube: band_keep length must equal band count");
    if (!cube.band_scales.empty() && cube.band_scales.size() != static_cast<std::size_t>(img.bands()))
        throw ValidationError("write_cube: band_scales length must equal band count");

    io_detail::atomic_write(path, [&](std::ostream& out) {
        out << CubeContainer::magic << "\n";
        out << "bands=" << img.bands() << "\n";
        out << "rows=" << img.grid().rows << "\n";
        out << "cols=" << img.grid().cols << "\n";
        out << "dtype=f32le\n";
        out << "byteorder=little\n";
        auto write_list = [&out](const char* key, const auto& values, auto format) {
            if (values.empty()) return;
            out << key << "=";
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (i) out << ",";
                out << format(values[i]);
            }
            out << "\n";
        };
        write_list("wavelengths", cube.wavelengths, io_detail::format_double);
        write_list("band_keep", cube.band_keep, [](int v) { return std::to_string(v); });
        write_list("band_scales", cube.band_scales, io_detail::format_double);
        out << "end\n";

        std::string payload;
        payload.reserve(img.size() * 4);
        for (double v : img.data()) io_detail::put_f32le(payload, static_cast<float>(v));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    });
}

inline CubeContainer read_cube(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cube '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line) || line != CubeContainer::magic)
        throw IoError("'" + path.string() + "' is not a " + CubeContainer::magic + " container");

    std::map<std::string, std::string> fields;
    while (std::getline(in, line)) {
        if (line == "end") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IoError("malformed header line '" + line + "' in '" + path.string() + "'");
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (line != "end") throw IoError("missing 'end' marker in '" + path.string() + "'");

    auto require = [&](const char* key) -> const std::string& {
        auto it = fields.find(key);
        if (it == fields.end())
            throw IoError(std::string("missing header field '") + key + "' in '" + path.string() + "'");
        return it->second;
    };
    const int bands = static_cast<int>(io_detail::parse_int(require("bands"), path.string()));
    const int rows = static_cast<int>(io_detail::parse_int(require("rows"), path.string()));
    const int cols = static_cast<int>(io_detail::parse_int(require("cols"), path.string()));
    if (require("dtype") != "f32le") throw IoError("unsupported dtype in '" + path.string() + "'");
    if (require("byteorder") != "little") throw IoError("unsupported byte order in '" + path.string() + "'");
    if (bands < 1 || rows < 1 || cols < 1) throw IoError("invalid dimensions in '" + path.string() + "'");

    CubeContainer cube;
    cube.image = SpectralImage(bands, Grid(rows, cols));
    const std::size_t payload_size = cube.image.size() * 4;
    std::string payload(payload_size, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_size));
    if (static_cast<std::size_t>(in.gcount()) != payload_size)
        throw IoError("truncated payload in '" + path.string() + "': expected " +
                      std::to_string(payload_size) + " bytes");
    char extra;
    if (in.read(&extra, 1))
        throw IoError("trailing bytes after payload in '" + path.string() + "'");
    for (std::size_t i = 0; i < cube.image.size(); ++i)
        cube.image.data()[i] = static_cast<double>(io_detail::get_f32le(payload.data() + i * 4));

    auto parse_doubles = [&](const char* key, std::vector<double>& out) {
        auto it = fields.find(key);
        if (it == fields.end()) return;
        for (auto part : io_detail::split(it->second, ','))
            out.push_back(io_detail::parse_double(part, path.string()));
        if (out.size() != static_cast<std::size_t>(bands))
            throw IoError(std::string(key) + " length mismatch in '" + path.string() + "'");
    };
    parse_doubles("wavelengths", cube.wavelengths);
    parse_doubles("band_scales", cube.band_scales);
    if (auto it = fields.find("band_keep"); it != fields.end()) {
        for (auto part : io_detail::split(it->second, ','))
            cube.band_keep.push_back(static_cast<int>(io_detail::parse_int(part, path.string())));
        if (cube.band_keep.size() != static_cast<std::size_t>(bands))
            throw IoError("band_keep length mismatch in '" + path.string() + "'");
    }
    return cube;
}

inline void write_response(const std::filesystem::path& path, const SpectralResponse& r) {
    io_detail::atomic_write(path, [&](std::ostream& out) {
        out << "HSRESP1\n";
        out << "msi_bands=" << r.msi_bands << "\n";
        out << "hsi_bands=" << r.hsi_bands << "\n";
        for (int i = 0; i < r.msi_bands; ++i) {
            out << "row" << i << "=";
            for (int j = 0; j < r.hsi_bands; ++j) {
                if (j) out << ",";
                out << io_detail::format_double(r(i, j));
            }
            out << "\n";
        }
        for (int i = 0; i < r.msi_bands; ++i) {
            out << "mask" << i << "=";
            for (int j = 0; j < r.hsi_bands; ++j) {
                if (j) out << ",";
                out << (r.allowed(i, j) ? '1' : '0');
            }
            out << "\n";
        }
        out << "end\n";
    });
}

inline SpectralResponse read_response(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open response '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "HSRESP1")
        throw IoError("'" + path.string() + "' is not a HSRESP1 file");
    std::map<std::string, std::string> fields;
    while (std::getline(in, line) && line != "end") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed line in '" + path.string() + "'");
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const int lm = static_cast<int>(io_detail::parse_int(fields.at("msi_bands"), path.string()));
    const int lh = static_cast<int>(io_detail::parse_int(fields.at("hsi_bands"), path.string()));
    SpectralResponse r(lm, lh);
    for (int i = 0; i < lm; ++i) {
        const auto row = io_detail::split(fields.at("row" + std::to_string(i)), ',');
        const auto mask = io_detail::split(fields.at("mask" + std::to_string(i)), ',');
        if (static_cast<int>(row.size()) != lh || static_cast<int>(mask.size()) != lh)
            throw IoError("row length mismatch in '" + path.string() + "'");
        for (int j = 0; j < lh; ++j) {
            r(i, j) = io_detail::parse_double(row[j], path.string());
            r.set_allowed(i, j, mask[j] == "1");
        }
    }
    r.validate();
    return r;
}

inline void write_kernel(const std::filesystem::path& path, const ConvolutionKernel& k) {
    io_detail::atomic_write(path, [&](std::ostream& out) {
        out << "HSKERN1\n";
        out << "support=" << k.support() << "\n";
        for (int i = 0; i < k.support(); ++i) {
            out << "row" << i << "=";
            for (int j = 0; j < k.support(); ++j) {
                if (j) out << ",";
                out << io_detail::format_double(k(i, j));
            }
            out << "\n";
        }
        out << "end\n";
    });
}

inline ConvolutionKernel read_kernel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open kernel '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "HSKERN1")
        throw IoError("'" + path.string() + "' is not a HSKERN1 file");
    std::map<std::string, std::string> fields;
    while (std::getline(in, line) && line != "end") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed line in '" + path.string() + "'");
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const int support = static_cast<int>(io_detail::parse_int(fields.at("support"), path.string()));
    std::vector<double> weights(static_cast<std::size_t>(support) * support);
    for (int i = 0; i < support; ++i) {
        const auto row = io_detail::split(fields.at("row" + std::to_string(i)), ',');
        if (static_cast<int>(row.size()) != support)
            throw IoError("row length mismatch in '" + path.string() + "'");
        for (int j = 0; j < support; ++j)
            weights[static_cast<std::size_t>(i) * support + j] =
                io_detail::parse_double(row[j], path.string());
    }
    return ConvolutionKernel(support, std::move(weights));
}

inline void write_subspace(const std::filesystem::path& path, const Subspace& sub) {
    io_detail::atomic_write(path, [&](std::ostream& out) {
        out << "HSBASIS1\n";
        out << "bands=" << sub.ambient_bands() << "\n";
        out << "dimension=" << sub.dimension() << "\n";
        out << "energy_fraction=" << io_detail::format_double(sub.energy_fraction) << "\n";
        out << "singular_values=";
        for (std::size_t i = 0; i < sub.singular_values.size(); ++i) {
            if (i) out << ",";
            out << io_detail::format_double(sub.singular_values[i]);
        }
        out << "\n";
        for (int i = 0; i < sub.ambient_bands(); ++i) {
            out << "row" << i << "=";
            for (int j = 0; j < sub.dimension(); ++j) {
                if (j) out << ",";
                out << io_detail::format_double(sub.basis(i, j));
            }
            out << "\n";
        }
        out << "end\n";
    });
}

inline Subspace read_subspace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open subspace '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "HSBASIS1")
        throw IoError("'" + path.string() + "' is not a HSBASIS1 file");
    std::map<std::string, std::string> fields;
    while (std::getline(in, line) && line != "end") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("malformed line in '" + path.string() + "'");
        fields[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const int bands = static_cast<int>(io_detail::parse_int(fields.at("bands"), path.string()));
    const int dim = static_cast<int>(io_detail::parse_int(fields.at("dimension"), path.string()));
    Subspace sub;
    sub.basis.resize(bands, dim);
    sub.energy_fraction = io_detail::parse_double(fields.at("energy_fraction"), path.string());
    for (auto part : io_detail::split(fields.at("singular_values"), ','))
        sub.singular_values.push_back(io_detail::parse_double(part, path.string()));
    for (int i = 0; i < bands; ++i) {
        const auto row = io_detail::split(fields.at("row" + std::to_string(i)), ',');
        if (static_cast<int>(row.size()) != dim)
            throw IoError("row length mismatch in '" + path.string() + "'");
        for (int j = 0; j < dim; ++j) sub.basis(i, j) = io_detail::parse_double(row[j], path.string());
    }
    return sub;
}

/// CSV with a header row, '.' decimal separator, LF line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw ValidationError("CsvWriter: row width does not match header");
        rows_.push_back(cells);
    }

    void write(std::ostream& out) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) out << ",";
            out << columns_[i];
        }
        out << "\n";
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ",";
                out << row[i];
            }
            out << "\n";
        }
    }

    void write(const std::filesystem::path& path) const {
        io_detail::atomic_write(path, [this](std::ostream& out) { write(out); });
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
    CsvWriter csv({"iteration", "objective", "primal_res", "dual_res", "seconds"});
    for (const auto& row : trace)
        csv.add_row({std::to_string(row.iteration), io_detail::format_double(row.objective),
                     io_detail::format_double(row.primal_res), io_detail::format_double(row.dual_res),
                     io_detail::format_double(row.seconds)});
    csv.write(path);
}

/// Flat key=value report, deterministic field order.
inline void write_quality_report(const std::filesystem::path& txt_path,
                                 const std::filesystem::path& csv_path, const QualityReport& report) {
    io_detail::atomic_write(txt_path, [&](std::ostream& out) {
        out << "ergas=" << io_detail::format_double(report.ergas) << "\n";
        out << "sam_degrees=" << io_detail::format_double(report.sam_degrees) << "\n";
        out << "uiqi=" << io_detail::format_double(report.uiqi) << "\n";
    });
    CsvWriter csv({"metric", "value"});
    csv.add_row({"ergas", io_detail::format_double(report.ergas)});
    csv.add_row({"sam_degrees", io_detail::format_double(report.sam_degrees)});
    csv.add_row({"uiqi", io_detail::format_double(report.uiqi)});
    csv.write(csv_path);
}

/// Ordered key=value document with a schema version line, used to tie a run's
/// artifacts and parameters together.
class Manifest {
public:
    Manifest() { set("manifest_version", "1"); }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = value;
                return;
            }
        entries_.emplace_back(key, value);
    }

    void set_double(const std::string& key, double v) { set(key, io_detail::format_double(v)); }
    void set_int(const std::string& key, long v) { set(key, std::to_string(v)); }

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }

    void write(const std::filesystem::path& path) const {
        io_detail::atomic_write(path, [this](std::ostream& out) {
            for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
        });
    }

    static Manifest read(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
        Manifest m;
        m.entries_.clear();
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw IoError("malformed manifest line '" + line + "' in '" + path.string() + "'");
            m.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
        }
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace hysure
