#pragma once

#include <filesystem>

#include "qsread/continuation.hpp"
#include "qsread/dyson.hpp"
#include "qsread/report.hpp"

namespace qsread {

// Series files are bit-reproducible: fixed %.17g formatting, no timestamps.

void write_csv(const CorrelatorSeries& s, const std::filesystem::path& path);
void write_json(const CorrelatorSeries& s, const std::filesystem::path& path);
CorrelatorSeries read_json_series(const std::filesystem::path& path);

void write_csv(const RetardedSeries& s, const std::filesystem::path& path);
void write_json(const RetardedSeries& s, const std::filesystem::path& path);

/// One CSV + JSON file per present series, plus provenance.json.
void write_dressed_set(const DressedSet& set, const std::filesystem::path& dir);

void write_report_json(const ComparisonReport& r, const std::filesystem::path& path);

} // namespace qsread
