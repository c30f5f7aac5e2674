#include "config.hpp"

#include "deeptrend/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <fstream>
#include <set>
#include <sstream>

namespace deeptrend::cli {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"", {"data", "seed", "stations", "window", "train_weeks", "models", "out",
              "max_missing_fraction"}},
        {"synthetic", {"weeks", "stations", "base_level", "daily_amplitudes", "weekend_factor",
                       "ar_coefficient", "noise_std", "seed", "start"}},
        {"deeptrend", {"extraction_hidden", "prediction_hidden", "extraction_learning_rate",
                       "extraction_epochs", "prediction_learning_rate", "prediction_epochs",
                       "finetune_learning_rate", "finetune_epochs", "batch_size"}},
        {"lstm", {"hidden", "learning_rate", "epochs", "batch_size"}},
        {"mvlr", {"ridge"}},
    };
    return keys;
}

std::string section_label(const std::string& section) {
    return section.empty() ? "global section" : "section [" + section + "]";
}

std::string closest(const std::string& word, const std::set<std::string>& candidates) {
    std::string best;
    std::size_t best_distance = std::string::npos;
    for (const auto& c : candidates) {
        const auto d = edit_distance(word, c);
        if (d < best_distance) {
            best_distance = d;
            best = c;
        }
    }
    return best_distance <= std::max<std::size_t>(3, word.size() / 2) ? best : std::string{};
}

void check_keys(const ConfigFile& file) {
    const auto& known = known_keys();
    for (const auto& [section, entries] : file.sections) {
        const auto it = known.find(section);
        if (it == known.end()) {
            std::set<std::string> names;
            for (const auto& [name, unused] : known) {
                if (!name.empty()) names.insert(name);
            }
            std::string msg = "unknown section [" + section + "]";
            if (const auto hint = closest(section, names); !hint.empty()) {
                msg += "; did you mean [" + hint + "]?";
            }
            throw ConfigError(msg);
        }
        for (const auto& [key, unused] : entries) {
            if (it->second.count(key) != 0) continue;
            std::string msg = "unknown key '" + key + "' in " + section_label(section);
            if (const auto hint = closest(key, it->second); !hint.empty()) {
                msg += "; did you mean '" + hint + "'?";
            }
            throw ConfigError(msg);
        }
    }
}

class SectionReader {
public:
    SectionReader(const ConfigFile& file, const std::string& section) : section_(section) {
        if (const auto it = file.sections.find(section); it != file.sections.end()) {
            entries_ = &it->second;
        }
    }

    const std::string* raw(const std::string& key) const {
        if (!entries_) return nullptr;
        const auto it = entries_->find(key);
        return it == entries_->end() ? nullptr : &it->second;
    }

    void read(const std::string& key, double& out) const {
        if (const auto* v = raw(key)) {
            const auto parsed = parse_number(*v);
            if (!parsed || !std::isfinite(*parsed)) fail(key, *v, "a number");
            out = *parsed;
        }
    }

    template <std::unsigned_integral T>
    void read(const std::string& key, T& out) const {
        if (const auto* v = raw(key)) out = static_cast<T>(parse_unsigned(key, *v));
    }

    void read(const std::string& key, std::string& out) const {
        if (const auto* v = raw(key)) out = *v;
    }

    void read(const std::string& key, std::vector<std::string>& out) const {
        if (const auto* v = raw(key)) {
            out.clear();
            std::string_view rest = *v;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                const auto item = trim(rest.substr(0, comma));
                if (!item.empty()) out.emplace_back(item);
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
        }
    }

    void read(const std::string& key, std::vector<double>& out) const {
        std::vector<std::string> items;
        read(key, items);
        if (!raw(key)) return;
        out.clear();
        for (const auto& item : items) {
            const auto parsed = parse_number(item);
            if (!parsed) fail(key, item, "a list of numbers");
            out.push_back(*parsed);
        }
    }

private:
    std::uint64_t parse_unsigned(const std::string& key, const std::string& v) const {
        std::uint64_t value = 0;
        const auto text = trim(v);
        const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
        if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
            fail(key, v, "a nonnegative integer");
        }
        return value;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& value,
                           const char* expected) const {
        throw ConfigError("key '" + key + "' in " + section_label(section_) + " must be " +
                          expected + ", got '" + value + "'");
    }

    std::string section_;
    const std::map<std::string, std::string>* entries_ = nullptr;
};

} // namespace

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
    ConfigFile file;
    file.sections[""];
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = trim(line);
        if (view.empty() || view.front() == '#' || view.front() == ';') continue;
        if (view.front() == '[') {
            if (view.back() != ']') {
                throw ConfigError(source + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = std::string(trim(view.substr(1, view.size() - 2)));
            file.sections[section];
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(trim(view.substr(0, eq)));
        const std::string value(trim(view.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!file.sections[section].emplace(key, value).second) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "' in " + section_label(section));
        }
    }
    return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), path.string());
}

std::string ConfigFile::canonical() const {
    std::string out;
    for (const auto& [section, entries] : sections) {
        if (entries.empty()) continue;
        out += "[" + section + "]\n";
        for (const auto& [key, value] : entries) {
            out += key + "=" + value + "\n";
        }
    }
    return out;
}

SyntheticSpec synthetic_from_file(const ConfigFile& file) {
    check_keys(file);
    SyntheticSpec spec;
    SectionReader(file, "").read("seed", spec.seed);
    const SectionReader syn(file, "synthetic");
    syn.read("weeks", spec.weeks);
    syn.read("stations", spec.stations);
    syn.read("base_level", spec.base_level);
    syn.read("daily_amplitudes", spec.daily_amplitudes);
    syn.read("weekend_factor", spec.weekend_factor);
    syn.read("ar_coefficient", spec.ar_coefficient);
    syn.read("noise_std", spec.noise_std);
    syn.read("seed", spec.seed);
    if (const auto* start = syn.raw("start")) {
        try {
            spec.start = parse_timestamp(*start);
        } catch (const DataError& e) {
            throw ConfigError(std::string("key 'start' in section [synthetic]: ") + e.what());
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

ExperimentConfig ExperimentConfig::from_file(const ConfigFile& file) {
    check_keys(file);
    ExperimentConfig cfg;
    auto& s = cfg.settings;
    const SectionReader global(file, "");
    std::string data;
    global.read("data", data);
    if (!data.empty()) {
        cfg.data_path = data;
    }
    if (file.has_section("synthetic")) {
        if (cfg.data_path) {
            throw ConfigError("config sets both 'data' and a [synthetic] section; choose one");
        }
        cfg.synthetic = synthetic_from_file(file);
    }
    if (!cfg.data_path && !cfg.synthetic) {
        throw ConfigError("config needs either 'data = <file.csv>' or a [synthetic] section");
    }
    global.read("seed", s.seed);
    global.read("stations", cfg.stations);
    global.read("window", s.window);
    global.read("train_weeks", s.train_weeks);
    global.read("models", s.models);
    global.read("max_missing_fraction", s.max_missing_fraction);
    std::string out;
    global.read("out", out);
    if (!out.empty()) {
        cfg.output_dir = out;
    }

    const SectionReader dt(file, "deeptrend");
    dt.read("extraction_hidden", s.deeptrend.extraction_hidden);
    dt.read("prediction_hidden", s.deeptrend.prediction_hidden);
    dt.read("extraction_learning_rate", s.extraction_train.learning_rate);
    dt.read("extraction_epochs", s.extraction_train.epochs);
    dt.read("prediction_learning_rate", s.prediction_train.learning_rate);
    dt.read("prediction_epochs", s.prediction_train.epochs);
    dt.read("finetune_learning_rate", s.finetune_train.learning_rate);
    dt.read("finetune_epochs", s.finetune_train.epochs);
    std::size_t batch = s.extraction_train.batch_size;
    dt.read("batch_size", batch);
    s.extraction_train.batch_size = s.prediction_train.batch_size = s.finetune_train.batch_size =
        batch;
    s.deeptrend.window = s.window;

    const SectionReader lstm(file, "lstm");
    lstm.read("hidden", s.lstm_hidden);
    lstm.read("learning_rate", s.lstm_train.learning_rate);
    lstm.read("epochs", s.lstm_train.epochs);
    lstm.read("batch_size", s.lstm_train.batch_size);

    SectionReader(file, "mvlr").read("ridge", s.ridge);

    if (s.window == 0) {
        throw ConfigError("window must be at least 1");
    }
    if (s.models.empty()) {
        throw ConfigError("models list is empty");
    }
    const auto& names = known_model_names();
    for (const auto& m : s.models) {
        if (std::find(names.begin(), names.end(), m) == names.end()) {
            std::set<std::string> candidates(names.begin(), names.end());
            std::string msg = "unknown model '" + m + "'";
            if (const auto hint = closest(m, candidates); !hint.empty()) {
                msg += "; did you mean '" + hint + "'?";
            }
            throw ConfigError(msg);
        }
    }
    for (const auto* train : {&s.extraction_train, &s.prediction_train, &s.finetune_train,
                              &s.lstm_train}) {
        try {
            train->validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    cfg.config_hash = hex64(fnv1a64(file.canonical()));
    return cfg;
}

std::vector<std::string> ExperimentConfig::provenance() const {
    return {"seed=" + std::to_string(settings.seed), "config_hash=" + config_hash};
}

FlowTable ExperimentConfig::load_table() const {
    if (data_path) {
        return load_csv(*data_path);
    }
    return generate_synthetic(*synthetic);
}

std::vector<std::string> ExperimentConfig::resolve_stations(const FlowTable& table) const {
    if (stations.empty()) {
        return table.stations;
    }
    for (const auto& id : stations) {
        table.station_index(id);
    }
    return stations;
}

} // namespace deeptrend::cli
