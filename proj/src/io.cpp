#include <waitflow/error.hpp>
#include <waitflow/io.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace waitflow::io {

std::string Manifest::line() const {
    return "# waitflow config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

std::optional<std::size_t> CsvTable::find(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
    if (auto c = find(name)) return *c;
    throw DataError("missing required column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string header_line(const std::optional<Manifest>& m) { return m ? m->line() + "\n" : std::string(); }

} // namespace

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool have_header = false;
    long row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            t.header = split(line);
            have_header = true;
            continue;
        }
        ++row;
        auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw DataError(path.filename().string() + ": expected " + std::to_string(t.header.size()) +
                                " fields, found " + std::to_string(cells.size()),
                            row);
        }
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw DataError(path.filename().string() + ": missing header row");
    return t;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, long row) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw DataError("malformed number '" + text + "'", row);
    }
    return v;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ServiceCalendar read_calendar(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cd = t.column("date"), ct = t.column("day_type");
    std::vector<std::pair<Date, DayType>> entries;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        try {
            entries.emplace_back(parse_date(t.rows[r][cd]), parse_day_type(t.rows[r][ct]));
        } catch (const DataError& e) {
            throw DataError(std::string("calendar.csv: ") + e.what(), static_cast<long>(r + 1));
        }
    }
    return ServiceCalendar::from_entries(entries);
}

void write_calendar(const fs::path& path, const ServiceCalendar& cal, const std::optional<Manifest>& m) {
    std::string s = header_line(m) + "date,day_type\n";
    for (std::size_t i = 1; i <= cal.size(); ++i) {
        s += format_date(cal.date(i));
        s += ',';
        s += to_string(cal.day_type(i));
        s += '\n';
    }
    write_text(path, s);
}

DatedFlows read_flows(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cd = t.column("date"), cf = t.column("flow");
    if (t.rows.empty()) throw DataError(path.filename().string() + ": no flow rows");
    DatedFlows out;
    Date prev{};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto row = static_cast<long>(r + 1);
        Date d;
        try {
            d = parse_date(t.rows[r][cd]);
        } catch (const DataError& e) {
            throw DataError(std::string("flows: ") + e.what(), row);
        }
        if (r == 0) {
            out.start = d;
        } else if (days_between(prev, d) != 1) {
            throw DataError("flow dates must be contiguous and ascending", row);
        }
        const double y = parse_double(t.rows[r][cf], row);
        if (!(y > 0.0)) throw DataError("flow must be > 0", row);
        out.flows.push_back(y);
        prev = d;
    }
    return out;
}

void write_flows(const fs::path& path, const Date& start, std::span<const double> flows,
                 const std::optional<Manifest>& m) {
    std::string s = header_line(m) + "date,flow\n";
    for (std::size_t n = 0; n < flows.size(); ++n) {
        s += format_date(add_days(start, static_cast<long>(n))) + ',' + format_double(flows[n]) + '\n';
    }
    write_text(path, s);
}

FlowSeries to_series(const DatedFlows& flows, const ServiceCalendar& cal) {
    const auto first = cal.index_of(flows.start);
    if (!first || *first + flows.flows.size() - 1 > cal.size()) {
        throw DataError("flows from " + format_date(flows.start) + " are not covered by the calendar " +
                        format_date(cal.start()) + ".." + format_date(cal.last()));
    }
    return FlowSeries(cal.slice(*first, flows.flows.size()), flows.flows);
}

RequestLog read_waits(const fs::path& path, const Date& day_one) {
    const CsvTable t = read_csv(path);
    const std::size_t cd = t.column("date"), ct = t.column("request_time"), cw = t.column("pseudo_wait_min");
    const auto ca = t.find("arrival_time");
    std::vector<WaitRecord> records;
    std::vector<long> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto row = static_cast<long>(r + 1);
        WaitRecord w;
        try {
            const long offset = days_between(day_one, parse_date(t.rows[r][cd]));
            if (offset < 0) throw DataError("wait dated before the first flow day");
            w.day = static_cast<std::size_t>(offset) + 1;
            w.request_minute = parse_clock(t.rows[r][ct]);
            if (ca && !t.rows[r][*ca].empty()) w.arrival_minute = parse_clock(t.rows[r][*ca]);
        } catch (const DataError& e) {
            throw DataError(std::string("waits: ") + e.what(), row);
        }
        w.pseudo_wait = parse_double(t.rows[r][cw], row);
        if (!(w.pseudo_wait > 0.0)) throw DataError("pseudo_wait_min must be > 0", row);
        records.push_back(w);
        rows.push_back(row);
    }
    if (ca) {
        // Cross-check against FIFO recomputation, one day at a time.
        std::size_t begin = 0;
        while (begin < records.size()) {
            std::size_t end = begin;
            while (end < records.size() && records[end].day == records[begin].day) ++end;
            std::vector<double> req, arr;
            bool complete = true;
            for (std::size_t r = begin; r < end; ++r) {
                req.push_back(records[r].request_minute);
                if (!records[r].arrival_minute) complete = false;
                arr.push_back(records[r].arrival_minute.value_or(0.0));
            }
            if (complete) {
                EventWaits ev;
                try {
                    ev = pseudo_waits_from_events(req, arr);
                } catch (const DataError& e) {
                    throw DataError(std::string("waits: ") + e.what(), rows[begin]);
                }
                for (std::size_t r = begin; r < end; ++r) {
                    if (std::abs(ev.pseudo[r - begin] - records[r].pseudo_wait) > 0.5 / 60.0 + 1e-9) {
                        throw DataError("pseudo_wait_min disagrees with the wait recomputed from arrival_time (" +
                                            format_double(ev.pseudo[r - begin]) + ")",
                                        rows[r]);
                    }
                    records[r].perceived_wait = ev.perceived[r - begin];
                }
            }
            begin = end;
        }
    }
    return RequestLog(std::move(records));
}

void write_waits(const fs::path& path, const RequestLog& log, const Date& day_one, const std::optional<Manifest>& m) {
    const bool arrivals = std::any_of(log.records().begin(), log.records().end(),
                                      [](const WaitRecord& w) { return w.arrival_minute.has_value(); });
    std::string s = header_line(m) + (arrivals ? "date,request_time,pseudo_wait_min,arrival_time\n"
                                               : "date,request_time,pseudo_wait_min\n");
    for (const WaitRecord& w : log.records()) {
        s += format_date(add_days(day_one, static_cast<long>(w.day) - 1)) + ',' + format_clock(w.request_minute) +
             ',' + format_double(w.pseudo_wait);
        if (arrivals) s += ',' + (w.arrival_minute ? format_clock(*w.arrival_minute) : std::string());
        s += '\n';
    }
    write_text(path, s);
}

WaitCells read_wait_cells(const fs::path& path, const IntervalGrid& grid) {
    const CsvTable t = read_csv(path);
    std::map<std::pair<long, std::size_t>, std::vector<double>> cells;
    std::map<long, Date> date_of;
    const auto ci = t.find("interval_index");
    const std::size_t cd = t.column("date");
    const std::size_t cw = ci ? t.column("wait_min") : t.column("pseudo_wait_min");
    const std::size_t ct = ci ? 0 : t.column("request_time");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto row = static_cast<long>(r + 1);
        Date d;
        std::size_t s = 0;
        try {
            d = parse_date(t.rows[r][cd]);
            if (ci) {
                const long idx = std::lround(parse_double(t.rows[r][*ci], row));
                if (idx < 1 || static_cast<std::size_t>(idx) > grid.size()) throw DataError("interval_index outside grid");
                s = static_cast<std::size_t>(idx - 1);
            } else {
                s = grid.interval_of(parse_clock(t.rows[r][ct]));
            }
        } catch (const DataError& e) {
            throw DataError(std::string("waits: ") + e.what(), row);
        }
        const long key = std::chrono::sys_days{d}.time_since_epoch().count();
        date_of[key] = d;
        cells[{key, s}].push_back(parse_double(t.rows[r][cw], row));
    }
    WaitCells out;
    for (auto& [k, v] : cells) {
        out.dates.push_back(date_of[k.first]);
        out.intervals.push_back(k.second);
        out.waits.push_back(std::move(v));
    }
    return out;
}

void write_wait_cells(const fs::path& path, const WaitCells& cells, const std::optional<Manifest>& m) {
    std::string s = header_line(m) + "date,interval_index,wait_min\n";
    for (std::size_t c = 0; c < cells.dates.size(); ++c) {
        for (double w : cells.waits[c]) {
            s += format_date(cells.dates[c]) + ',' + std::to_string(cells.intervals[c] + 1) + ',' + format_double(w) + '\n';
        }
    }
    write_text(path, s);
}

void write_draws(const fs::path& path, const PosteriorDraws& draws, const std::optional<Manifest>& m) {
    std::string s = header_line(m) + "chain,iter,param,value\n";
    for (std::size_t r = 0; r < draws.size(); ++r) {
        const std::string prefix = std::to_string(draws.chain(r)) + ',' + std::to_string(draws.iter(r)) + ',';
        for (std::size_t c = 0; c < draws.dim(); ++c) {
            s += prefix + draws.names()[c] + ',' + format_double(draws.value(r, c)) + '\n';
        }
    }
    write_text(path, s);
}

PosteriorDraws read_draws(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cc = t.column("chain"), ci = t.column("iter"), cp = t.column("param"), cv = t.column("value");
    std::vector<std::string> names;
    // Parameter names in first-appearance order within the first draw.
    for (const auto& row : t.rows) {
        if (!t.rows.empty() && (row[cc] != t.rows.front()[cc] || row[ci] != t.rows.front()[ci])) break;
        names.push_back(row[cp]);
    }
    if (names.empty()) throw DataError(path.filename().string() + ": no draws");
    PosteriorDraws draws(names);
    const std::size_t dim = names.size();
    if (t.rows.size() % dim != 0) throw DataError(path.filename().string() + ": incomplete final draw");
    std::vector<double> values(dim);
    for (std::size_t r = 0; r < t.rows.size(); r += dim) {
        const auto row = static_cast<long>(r + 1);
        const int chain = static_cast<int>(std::lround(parse_double(t.rows[r][cc], row)));
        const int iter = static_cast<int>(std::lround(parse_double(t.rows[r][ci], row)));
        for (std::size_t c = 0; c < dim; ++c) {
            const auto& cells = t.rows[r + c];
            if (cells[cp] != names[c] || cells[cc] != t.rows[r][cc] || cells[ci] != t.rows[r][ci]) {
                throw DataError("draws must list every parameter once per (chain, iter) in a fixed order",
                                static_cast<long>(r + c + 1));
            }
            values[c] = parse_double(cells[cv], static_cast<long>(r + c + 1));
        }
        draws.append(chain, iter, values);
    }
    return draws;
}

} // namespace waitflow::io
