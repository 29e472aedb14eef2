#pragma once

// Line-oriented text formats. Every file starts with "# twostage-<kind> <major>.<minor>";
// loaders reject unknown major versions. Doubles are written in shortest
// round-trip form, so save -> load is lossless. See docs/FORMATS.md.

#include <filesystem>
#include <string>
#include <vector>

#include "twostage/dataset.hpp"
#include "twostage/evaluation.hpp"
#include "twostage/forecast.hpp"
#include "twostage/inference.hpp"
#include "twostage/model.hpp"

namespace twostage {

inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 0;

/// Shortest decimal string that parses back to exactly `x` ("nan", "inf" allowed).
std::string format_double(double x);
/// Strict parse of a whole token; throws Error(data) on failure.
double parse_double(const std::string& token);

std::string cascade_to_string(const Cascade& cascade);
/// Parses a cascade file body. Unsorted events are sorted and a warning is appended.
Cascade cascade_from_string(const std::string& text, std::vector<std::string>* warnings = nullptr,
                            const std::string& origin = "<memory>");

Cascade load_cascade(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void save_cascade(const Cascade& cascade, const std::filesystem::path& path);

std::string fit_to_string(const FitResult& fit);
FitResult fit_from_string(const std::string& text, const std::string& origin = "<memory>");
FitResult load_fit(const std::filesystem::path& path);
void save_fit(const FitResult& fit, const std::filesystem::path& path);

std::string forecast_to_string(const ForecastSeries& series);
ForecastSeries forecast_from_string(const std::string& text, const std::string& origin = "<memory>");
ForecastSeries load_forecast(const std::filesystem::path& path);
void save_forecast(const ForecastSeries& series, const std::filesystem::path& path);

std::string report_to_string(const EvalReport& report);
EvalReport report_from_string(const std::string& text, const std::string& origin = "<memory>");
EvalReport load_report(const std::filesystem::path& path);
void save_report(const EvalReport& report, const std::filesystem::path& path);

std::string manifest_to_string(const Manifest& manifest);
Manifest manifest_from_string(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin = "<memory>");
/// Loads a manifest and checks that every referenced cascade file exists.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Whole-file helpers with path context in error messages. Writes go through a
/// temporary file so a failed write leaves no partial output.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace twostage
