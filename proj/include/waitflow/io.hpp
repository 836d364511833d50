#pragma once

#include <waitflow/calendar.hpp>
#include <waitflow/flow_model.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/waiting_model.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace waitflow::io {

namespace fs = std::filesystem;

//! Provenance written as the first line of every CSV output.
struct Manifest {
    std::string config_hash;
    std::uint64_t seed = 0;

    std::string line() const; // "# waitflow config_hash=... seed=..."
};

/// Comma-separated table with a mandatory header. Lines starting with '#'
/// are skipped. Row numbers count data rows from 1.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> find(const std::string& column) const;
    std::size_t column(const std::string& column) const; // throws DataError
};

CsvTable read_csv(const fs::path& path);

//! Shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(const std::string& text, long row = -1);

//! Write text, creating parent directories. Throws DataError when unwritable.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// calendar.csv: date,day_type
ServiceCalendar read_calendar(const fs::path& path);
void write_calendar(const fs::path& path, const ServiceCalendar& cal, const std::optional<Manifest>& m = {});

/// Dated flows. Dates must be contiguous and ascending.
struct DatedFlows {
    Date start;
    std::vector<double> flows;
};

// flows.csv: date,flow
DatedFlows read_flows(const fs::path& path);
void write_flows(const fs::path& path, const Date& start, std::span<const double> flows,
                 const std::optional<Manifest>& m = {});

//! FlowSeries over the calendar days the flows cover.
FlowSeries to_series(const DatedFlows& flows, const ServiceCalendar& cal);

/// waits.csv: date,request_time,pseudo_wait_min[,arrival_time]. Day indices
/// are relative to \p day_one. When arrival_time is present, pseudo waits are
/// recomputed per day (FIFO) and must agree within half a second.
RequestLog read_waits(const fs::path& path, const Date& day_one);
void write_waits(const fs::path& path, const RequestLog& log, const Date& day_one,
                 const std::optional<Manifest>& m = {});

//! Observed waits grouped into (date, interval) cells: waits.csv or date,interval_index,wait_min.
struct WaitCells {
    std::vector<Date> dates;
    std::vector<std::size_t> intervals; // 0-based
    std::vector<std::vector<double>> waits;
};
WaitCells read_wait_cells(const fs::path& path, const IntervalGrid& grid);
void write_wait_cells(const fs::path& path, const WaitCells& cells, const std::optional<Manifest>& m = {});

// draws.csv: chain,iter,param,value (long format, rows grouped by draw)
void write_draws(const fs::path& path, const PosteriorDraws& draws, const std::optional<Manifest>& m = {});
PosteriorDraws read_draws(const fs::path& path);

} // namespace waitflow::io
