#include "qishdr/io_formats.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qishdr {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("read failure on " + path.string());
    return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) throw IoError("write failure on " + path.string());
}

float byteswap_float(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    bits = ((bits & 0x000000FFu) << 24) | ((bits & 0x0000FF00u) << 8) |
           ((bits & 0x00FF0000u) >> 8) | ((bits & 0xFF000000u) >> 24);
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr bool kHostLittleEndian = std::endian::native == std::endian::little;

/// Reads one whitespace-delimited header token, tracking the byte offset.
std::string next_token(const std::string& data, std::size_t& pos) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw FormatError("PFM: truncated header", start);
    return data.substr(start, pos - start);
}

} // namespace

RadianceMap read_pfm(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0;

    const std::string magic = next_token(data, pos);
    if (magic == "PF") throw FormatError("PFM: color images (\"PF\") are not supported", 0);
    if (magic != "Pf") throw FormatError("PFM: bad magic, expected \"Pf\"", 0);

    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token(data, pos));
        height = std::stoi(next_token(data, pos));
        const std::size_t scale_pos = pos;
        scale = std::stod(next_token(data, pos));
        if (scale == 0.0) throw FormatError("PFM: scale must be nonzero", scale_pos);
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception&) {
        throw FormatError("PFM: malformed header field", pos);
    }
    if (width < 1 || height < 1) throw FormatError("PFM: bad dimensions", 0);

    if (pos >= data.size()) throw FormatError("PFM: missing payload", pos);
    ++pos;  // single whitespace byte separates header and payload

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (data.size() - pos < count * 4)
        throw FormatError("PFM: payload truncated", data.size());

    const bool file_little = scale < 0.0;
    RadianceMap map(width, height);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t offset = pos + i * 4;
        float v;
        std::memcpy(&v, data.data() + offset, 4);
        if (file_little != kHostLittleEndian) v = byteswap_float(v);
        if (std::isnan(v)) throw FormatError("PFM: NaN pixel", offset);
        if (!std::isfinite(v)) throw FormatError("PFM: non-finite pixel", offset);
        if (v < 0.0f) throw FormatError("PFM: negative pixel rejected", offset);
        // PFM scanlines run bottom-to-top.
        const std::size_t row = i / static_cast<std::size_t>(width);
        const std::size_t col = i % static_cast<std::size_t>(width);
        map.flux[(static_cast<std::size_t>(height) - 1 - row) * width + col] = v;
    }
    return map;
}

void write_pfm(const std::filesystem::path& path, const RadianceMap& map) {
    map.validate();
    std::string out;
    char header[64];
    std::snprintf(header, sizeof(header), "Pf\n%d %d\n-1.0\n", map.width, map.height);
    out += header;
    out.reserve(out.size() + map.pixel_count() * 4);
    for (int row = map.height - 1; row >= 0; --row) {
        const char* src =
            reinterpret_cast<const char*>(map.flux.data() + static_cast<std::size_t>(row) * map.width);
        if constexpr (kHostLittleEndian) {
            out.append(src, static_cast<std::size_t>(map.width) * 4);
        } else {
            for (int col = 0; col < map.width; ++col) {
                float v = byteswap_float(map.flux[static_cast<std::size_t>(row) * map.width + col]);
                out.append(reinterpret_cast<const char*>(&v), 4);
            }
        }
    }
    write_file(path, out);
}

namespace {

constexpr char kStackMagic[8] = {'Q', 'I', 'S', 'S', 'T', 'K', '1', '\n'};
constexpr int kStackVersion = 1;

const char* const kKnownKeys[] = {"format_version", "width",  "height",        "clip_level",
                                  "read_noise",     "dark_current", "frame_period_s", "schedule",
                                  "seed"};

} // namespace

FrameStack read_stack(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    if (data.size() < 12) throw FormatError("stack: file too short for magic and header length", 0);
    if (std::memcmp(data.data(), kStackMagic, 8) != 0)
        throw FormatError("stack: magic mismatch, expected QISSTK1", 0);

    std::uint32_t header_len = 0;
    for (int i = 0; i < 4; ++i)
        header_len |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[8 + i])) << (8 * i);
    if (data.size() < 12 + static_cast<std::size_t>(header_len))
        throw FormatError("stack: header truncated", data.size());

    json header;
    try {
        header = json::parse(data.substr(12, header_len));
    } catch (const json::exception& e) {
        throw FormatError(std::string("stack: header is not valid JSON: ") + e.what(), 12);
    }

    FrameStack stack;
    try {
        if (header.at("format_version").get<int>() != kStackVersion)
            throw FormatError("stack: unsupported format version", 12);
        stack.width = header.at("width").get<int>();
        stack.height = header.at("height").get<int>();
        stack.params.clip_level = header.at("clip_level").get<int>();
        stack.params.read_noise = header.at("read_noise").get<double>();
        stack.params.dark_current = header.at("dark_current").get<double>();
        stack.schedule.frame_period_s = header.at("frame_period_s").get<double>();
        stack.seed = header.at("seed").get<std::uint64_t>();
        for (const auto& g : header.at("schedule")) {
            ExposureGroup group;
            group.exposure_s = g.at("exposure_s").get<double>();
            group.frames = g.at("frames").get<int>();
            stack.schedule.groups.push_back(group);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("stack: bad header field: ") + e.what(), 12);
    }
    if (stack.width < 1 || stack.height < 1) throw FormatError("stack: bad dimensions", 12);
    stack.params.validate();
    stack.schedule.validate();
    if (stack.params.clip_level > 255)
        throw FormatError("stack: clip_level exceeds one-byte payload range", 12);

    json extra = header;
    for (const char* key : kKnownKeys) extra.erase(key);
    stack.extra_header_json = extra.empty() ? std::string() : extra.dump();

    const std::size_t pixels = stack.pixel_count();
    const std::size_t payload_start = 12 + header_len;
    const std::size_t expected =
        pixels * static_cast<std::size_t>(stack.schedule.total_frames());
    if (data.size() - payload_start < expected)
        throw FormatError("stack: payload truncated", payload_start + (data.size() - payload_start));
    if (data.size() - payload_start > expected)
        throw FormatError("stack: trailing bytes after payload", payload_start + expected);

    std::size_t offset = payload_start;
    stack.groups.resize(stack.schedule.groups.size());
    for (std::size_t m = 0; m < stack.schedule.groups.size(); ++m) {
        const int frames = stack.schedule.groups[m].frames;
        stack.groups[m].reserve(static_cast<std::size_t>(frames));
        for (int n = 0; n < frames; ++n) {
            Frame frame(stack.width, stack.height);
            for (std::size_t i = 0; i < pixels; ++i, ++offset) {
                const auto code = static_cast<std::uint8_t>(data[offset]);
                if (code > stack.params.clip_level)
                    throw FormatError("stack: code above clip level in group " + std::to_string(m) +
                                          " frame " + std::to_string(n) + " pixel " +
                                          std::to_string(i),
                                      offset);
                frame.codes[i] = code;
            }
            stack.groups[m].push_back(std::move(frame));
        }
    }
    return stack;
}

void write_stack(const std::filesystem::path& path, const FrameStack& stack) {
    stack.params.validate();
    stack.schedule.validate();
    if (stack.params.clip_level > 255)
        throw DomainError("write_stack: clip_level above 255 cannot use the one-byte payload");
    if (stack.width < 1 || stack.height < 1) throw DomainError("write_stack: bad dimensions");
    if (stack.groups.size() != stack.schedule.groups.size())
        throw DomainError("write_stack: group count does not match schedule");

    json header = json::object();
    if (!stack.extra_header_json.empty()) {
        try {
            header = json::parse(stack.extra_header_json);
        } catch (const json::exception&) {
            throw DomainError("write_stack: extra_header_json is not valid JSON");
        }
    }
    header["format_version"] = kStackVersion;
    header["width"] = stack.width;
    header["height"] = stack.height;
    header["clip_level"] = stack.params.clip_level;
    header["read_noise"] = stack.params.read_noise;
    header["dark_current"] = stack.params.dark_current;
    header["frame_period_s"] = stack.schedule.frame_period_s;
    header["seed"] = stack.seed;
    json schedule = json::array();
    for (const auto& g : stack.schedule.groups)
        schedule.push_back({{"exposure_s", g.exposure_s}, {"frames", g.frames}});
    header["schedule"] = std::move(schedule);

    const std::string header_text = header.dump();
    if (header_text.size() > 0xFFFFFFFFull) throw DomainError("write_stack: header too large");

    std::string out;
    out.append(kStackMagic, 8);
    const auto len = static_cast<std::uint32_t>(header_text.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
    out += header_text;

    const std::size_t pixels = stack.pixel_count();
    for (std::size_t m = 0; m < stack.groups.size(); ++m) {
        if (static_cast<int>(stack.groups[m].size()) != stack.schedule.groups[m].frames)
            throw DomainError("write_stack: frame count mismatch in group " + std::to_string(m));
        for (const Frame& frame : stack.groups[m]) {
            if (frame.codes.size() != pixels) throw DomainError("write_stack: frame size mismatch");
            for (std::uint8_t code : frame.codes) {
                if (code > stack.params.clip_level)
                    throw DomainError("write_stack: code above clip level");
            }
            out.append(reinterpret_cast<const char*>(frame.codes.data()), pixels);
        }
    }
    write_file(path, out);
}

namespace {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_curve_csv(const std::filesystem::path& path, const SnrCurve& curve) {
    curve.validate();
    std::string out = "abscissa,snr_db\n";
    for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
        out += format_full(curve.abscissa[i]);
        out += ',';
        out += format_full(curve.snr_db[i]);
        out += '\n';
    }
    write_file(path, out);
}

SnrCurve read_curve_csv(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    std::istringstream in(data);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("curve csv: empty file", 0);
    if (line != "abscissa,snr_db" && line != "abscissa,snr_db\r")
        throw FormatError("curve csv: bad header row", 0);

    SnrCurve curve;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("curve csv: missing comma on line " + std::to_string(line_no));
        try {
            curve.abscissa.push_back(std::stod(line.substr(0, comma)));
            curve.snr_db.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw FormatError("curve csv: bad number on line " + std::to_string(line_no));
        }
    }
    curve.validate();
    return curve;
}

void write_report_csv(const std::filesystem::path& path, const DynamicRangeReport& report) {
    std::string out = "floor,ceiling,range_db,threshold_db,valid\n";
    out += format_full(report.floor) + "," + format_full(report.ceiling) + "," +
           format_full(report.range_db) + "," + format_full(report.threshold_db) + "," +
           (report.valid ? "1" : "0") + "\n";
    write_file(path, out);
}

} // namespace qishdr
