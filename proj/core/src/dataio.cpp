#include "deeptrend/dataio.hpp"

#include "deeptrend/tensor.hpp"
#include "deeptrend/text.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace deeptrend {

namespace {

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t begin = 0;
    while (true) {
        const auto comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(begin));
            break;
        }
        cells.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return cells;
}

bool same_sample(double a, double b) {
    return (is_missing(a) && is_missing(b)) ||
           std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

} // namespace

Timestamp parse_timestamp(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.back() == 'Z') {
        text.remove_suffix(1);
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const bool shape_ok = text.size() == 19 && text[4] == '-' && text[7] == '-' &&
                          (text[10] == 'T' || text[10] == ' ') && text[13] == ':' &&
                          text[16] == ':';
    if (!shape_ok || !parse_fixed_int(text, 0, 4, y) || !parse_fixed_int(text, 5, 2, mo) ||
        !parse_fixed_int(text, 8, 2, d) || !parse_fixed_int(text, 11, 2, h) ||
        !parse_fixed_int(text, 14, 2, mi) || !parse_fixed_int(text, 17, 2, s)) {
        throw DataError("invalid timestamp '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day date{std::chrono::year{y},
                                           std::chrono::month{static_cast<unsigned>(mo)},
                                           std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok() || h > 23 || mi > 59 || s > 59) {
        throw DataError("invalid timestamp '" + std::string(text) + "'");
    }
    return std::chrono::sys_days{date} + std::chrono::hours{h} + std::chrono::minutes{mi} +
           std::chrono::seconds{s};
}

std::string format_timestamp(Timestamp ts) {
    const auto days = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::year_month_day date{days};
    const std::chrono::hh_mm_ss tod{ts - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

std::size_t FlowTable::station_index(std::string_view id) const {
    for (std::size_t i = 0; i < stations.size(); ++i) {
        if (stations[i] == id) return i;
    }
    throw DataError("unknown station '" + std::string(id) + "'");
}

StationSeries FlowTable::station(std::string_view id) const {
    return station(station_index(id));
}

StationSeries FlowTable::station(std::size_t index) const {
    if (index >= stations.size()) {
        throw DataError("station index " + std::to_string(index) + " out of range");
    }
    return StationSeries{stations[index], timestamps.empty() ? Timestamp{} : timestamps.front(),
                         columns[index]};
}

void FlowTable::validate() const {
    if (columns.size() != stations.size()) {
        throw DataError("flow table has " + std::to_string(stations.size()) + " stations but " +
                        std::to_string(columns.size()) + " columns");
    }
    for (std::size_t i = 0; i < stations.size(); ++i) {
        if (columns[i].size() != timestamps.size()) {
            throw DataError("station '" + stations[i] + "' has " +
                            std::to_string(columns[i].size()) + " samples, expected " +
                            std::to_string(timestamps.size()));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (stations[i] == stations[j]) {
                throw DataError("duplicate station id '" + stations[i] + "'");
            }
        }
    }
    for (std::size_t r = 1; r < timestamps.size(); ++r) {
        if (timestamps[r] - timestamps[r - 1] != sample_period) {
            throw DataError("timestamp at row " + std::to_string(r) + " (" +
                            format_timestamp(timestamps[r]) + ") does not follow " +
                            format_timestamp(timestamps[r - 1]) + " by 5 minutes");
        }
    }
}

bool operator==(const FlowTable& a, const FlowTable& b) {
    if (a.timestamps != b.timestamps || a.stations != b.stations ||
        a.columns.size() != b.columns.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.columns.size(); ++i) {
        if (a.columns[i].size() != b.columns[i].size()) return false;
        for (std::size_t r = 0; r < a.columns[i].size(); ++r) {
            if (!same_sample(a.columns[i][r], b.columns[i][r])) return false;
        }
    }
    return true;
}

FlowTable read_csv(std::istream& in, const std::string& source) {
    FlowTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') {
            view.remove_suffix(1);
        }
        if (!have_header) {
            if (view.empty() || view.front() == '#') continue;
            const auto cells = split_commas(view);
            if (trim(cells.front()) != "timestamp" || cells.size() < 2) {
                throw DataError(source + ":" + std::to_string(line_no) +
                                ": header must be 'timestamp,<station>,...'");
            }
            for (std::size_t c = 1; c < cells.size(); ++c) {
                table.stations.emplace_back(trim(cells[c]));
            }
            table.columns.resize(table.stations.size());
            have_header = true;
            continue;
        }
        if (trim(view).empty()) continue;
        const auto cells = split_commas(view);
        if (cells.size() != table.stations.size() + 1) {
            throw DataError(source + ":" + std::to_string(line_no) + ": row has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(table.stations.size() + 1));
        }
        Timestamp ts;
        try {
            ts = parse_timestamp(cells[0]);
        } catch (const DataError& e) {
            throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!table.timestamps.empty()) {
            const auto step = ts - table.timestamps.back();
            if (step <= std::chrono::seconds{0}) {
                throw DataError(source + ":" + std::to_string(line_no) + ": timestamp " +
                                format_timestamp(ts) + " is not after the previous row");
            }
            if (step != sample_period) {
                throw DataError(source + ":" + std::to_string(line_no) + ": gap before " +
                                format_timestamp(ts) + " (expected 5-minute spacing)");
            }
        }
        table.timestamps.push_back(ts);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto cell = trim(cells[c]);
            if (cell.empty()) {
                table.columns[c - 1].push_back(missing_value());
                continue;
            }
            const auto value = parse_number(cell);
            if (!value || !std::isfinite(*value)) {
                throw DataError(source + ":" + std::to_string(line_no) + ": cannot parse '" +
                                std::string(cell) + "' for station '" + table.stations[c - 1] +
                                "'");
            }
            table.columns[c - 1].push_back(*value);
        }
    }
    if (!have_header) {
        throw DataError(source + ": missing header row");
    }
    table.validate();
    return table;
}

FlowTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return read_csv(in, path.string());
}

void write_csv(std::ostream& out, const FlowTable& table, const std::vector<std::string>& comments) {
    for (const auto& c : comments) {
        out << "# " << c << '\n';
    }
    out << "timestamp";
    for (const auto& s : table.stations) {
        out << ',' << s;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << format_timestamp(table.timestamps[r]);
        for (const auto& col : table.columns) {
            out << ',';
            if (!is_missing(col[r])) {
                out << format_number(col[r]);
            }
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const FlowTable& table,
              const std::vector<std::string>& comments) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    write_csv(out, table, comments);
}

std::pair<FlowTable, FlowTable> split_train_test(const FlowTable& table, std::size_t train_weeks) {
    const std::size_t cut = train_weeks * slots_per_week;
    if (train_weeks == 0 || table.rows() <= cut) {
        throw DataError("split_train_test: table has " + std::to_string(table.rows()) +
                        " rows, which leaves no test data after " + std::to_string(train_weeks) +
                        " training weeks");
    }
    auto slice = [&](std::size_t begin, std::size_t end) {
        FlowTable part;
        part.stations = table.stations;
        part.timestamps.assign(table.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                               table.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
        for (const auto& col : table.columns) {
            part.columns.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(begin),
                                      col.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return part;
    };
    return {slice(0, cut), slice(cut, table.rows())};
}

void SyntheticSpec::validate() const {
    if (weeks < 2) {
        throw std::invalid_argument("synthetic spec: weeks must be at least 2");
    }
    if (stations == 0) {
        throw std::invalid_argument("synthetic spec: stations must be at least 1");
    }
    if (!(std::abs(ar_coefficient) < 1.0)) {
        throw std::invalid_argument("synthetic spec: |ar_coefficient| must be below 1");
    }
    if (!(noise_std >= 0.0)) {
        throw std::invalid_argument("synthetic spec: noise_std must be nonnegative");
    }
}

double SyntheticSpec::residual_variance() const {
    return noise_std * noise_std / (1.0 - ar_coefficient * ar_coefficient);
}

std::vector<double> synthetic_trend(const SyntheticSpec& spec, std::size_t station) {
    spec.validate();
    RandomSource rng(derive_seed(spec.seed, station, 0x7472656e64ULL));
    const double scale = rng.uniform(0.8, 1.2);
    std::vector<double> phases(spec.daily_amplitudes.size());
    for (double& p : phases) {
        p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    std::vector<double> trend(slots_per_week);
    for (std::size_t k = 0; k < slots_per_week; ++k) {
        const std::size_t day = k / slots_per_day;
        const double tod = static_cast<double>(k % slots_per_day) / slots_per_day;
        double daily = 0.0;
        for (std::size_t h = 0; h < spec.daily_amplitudes.size(); ++h) {
            daily += spec.daily_amplitudes[h] *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(h + 1) * tod + phases[h]);
        }
        const double factor = day >= 5 ? spec.weekend_factor : 1.0;
        trend[k] = scale * (spec.base_level + factor * daily);
    }
    return trend;
}

FlowTable generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    FlowTable table;
    const std::size_t rows = spec.weeks * slots_per_week;
    table.timestamps.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        table.timestamps.push_back(spec.start + static_cast<long>(r) * sample_period);
    }
    for (std::size_t s = 0; s < spec.stations; ++s) {
        table.stations.push_back("S" + std::to_string(s + 1));
        const auto trend = synthetic_trend(spec, s);
        RandomSource rng(derive_seed(spec.seed, s, 0x7265736964ULL));
        double r = spec.noise_std > 0.0 ? rng.normal() * std::sqrt(spec.residual_variance()) : 0.0;
        std::vector<double> col(rows);
        for (std::size_t t = 0; t < rows; ++t) {
            r = spec.ar_coefficient * r + spec.noise_std * rng.normal();
            col[t] = trend[t % slots_per_week] + r;
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

} // namespace deeptrend
