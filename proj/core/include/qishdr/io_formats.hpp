#pragma once

#include <filesystem>

#include "qishdr/analysis.hpp"
#include "qishdr/qis_sim.hpp"

namespace qishdr {

/// Grayscale PFM ("Pf"), scale sign giving the payload endianness. Rows are
/// stored bottom-to-top as is conventional; RadianceMap row 0 is the top row.
/// Color ("PF") headers, negative pixels and non-finite pixels are rejected.
RadianceMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const RadianceMap& map);

/// Frame-stack container:
///   magic "QISSTK1\n" | u32-LE header length | UTF-8 JSON header | payload.
/// The payload holds every frame in schedule order, row-major, one byte per
/// pixel. Unknown JSON header keys survive a read/write round trip.
FrameStack read_stack(const std::filesystem::path& path);
void write_stack(const std::filesystem::path& path, const FrameStack& stack);

/// CSV with header "abscissa,snr_db" and 17-significant-digit values.
void write_curve_csv(const std::filesystem::path& path, const SnrCurve& curve);
SnrCurve read_curve_csv(const std::filesystem::path& path);

/// CSV for the dynamic-range report fields.
void write_report_csv(const std::filesystem::path& path, const DynamicRangeReport& report);

} // namespace qishdr
