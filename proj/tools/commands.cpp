#include "commands.hpp"

#include "deeptrend/checkpoint.hpp"
#include "deeptrend/text.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <thread>

namespace deeptrend::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
    for (const auto& c : comments) {
        out << "# " << c << '\n';
    }
}

std::string job_stem(const std::string& station, const std::string& model) {
    return station + "__" + model;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t effective_jobs(std::size_t jobs) {
    if (jobs != 0) return jobs;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

struct PreparedRun {
    ExperimentConfig config;
    FlowTable table;
    std::vector<std::string> stations;
    std::vector<StationData> data;
};

PreparedRun prepare(const RunOptions& options, std::ostream& log) {
    PreparedRun run{resolve_config(options), {}, {}, {}};
    run.table = run.config.load_table();
    run.stations = run.config.resolve_stations(run.table);
    const auto& s = run.config.settings;
    for (const auto& id : run.stations) {
        run.data.push_back(prepare_station(run.table, run.table.station_index(id), s.train_weeks,
                                           s.max_missing_fraction));
    }
    log << "deeptrend: " << run.stations.size() << " station(s), " << run.table.rows()
        << " samples, " << s.train_weeks << " training weeks, seed " << s.seed << '\n';
    return run;
}

void write_losses(const fs::path& path, const TrainedModel& model,
                  const std::vector<std::string>& provenance) {
    auto out = open_output(path);
    write_comments(out, provenance);
    out << "phase,epoch,loss\n";
    for (const char* phase : {"extraction", "prediction", "finetune", "train"}) {
        const auto it = model.loss_history.find(phase);
        if (it == model.loss_history.end()) continue;
        for (std::size_t e = 0; e < it->second.size(); ++e) {
            out << phase << ',' << e + 1 << ',' << format_number(it->second[e]) << '\n';
        }
    }
    finish(out, path);
}

void write_checkpoint_file(const fs::path& path, const TrainedModel& model) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    if (model.deeptrend) {
        save_checkpoint(path, *model.deeptrend);
    } else {
        save_checkpoint(path, *model.baseline);
    }
}

struct Job {
    std::size_t station;
    std::string model;
};

std::vector<Job> jobs_for(const PreparedRun& run) {
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < run.data.size(); ++s) {
        for (const auto& m : run.config.settings.models) {
            jobs.push_back({s, m});
        }
    }
    return jobs;
}

std::vector<TrainedModel> train_all(const PreparedRun& run, std::size_t jobs, std::ostream& log) {
    const auto list = jobs_for(run);
    std::vector<std::optional<TrainedModel>> trained(list.size());
    std::mutex log_mutex;
    const auto& settings = run.config.settings;
    parallel_for(list.size(), effective_jobs(jobs), [&](std::size_t j) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& job = list[j];
        const auto& station = run.data[job.station];
        const auto seed = job_seed(settings.seed, run.table.station_index(station.id), job.model);
        trained[j] = train_model(station, job.model, settings, seed);
        const std::lock_guard lock(log_mutex);
        log << "deeptrend: trained " << station.id << ' ' << job.model << " in "
            << format_number(std::round(seconds_since(t0) * 10.0) / 10.0) << " s\n";
    });
    std::vector<TrainedModel> out;
    for (auto& t : trained) {
        out.push_back(std::move(*t));
    }
    return out;
}

std::vector<MetricReport> evaluate_all(const PreparedRun& run,
                                       const std::vector<TrainedModel>& models) {
    std::vector<MetricReport> reports;
    const auto list = jobs_for(run);
    for (std::size_t j = 0; j < list.size(); ++j) {
        const auto& data = run.data[list[j].station];
        const auto forecast = forecast_test(models[j], data);
        const auto actual = test_actuals(data);
        reports.push_back(MetricReport::compute(data.id, list[j].model, actual, forecast));
    }
    return reports;
}

void write_evaluation(const fs::path& dir, const std::vector<MetricReport>& reports,
                      const std::vector<std::string>& models,
                      const std::vector<std::string>& provenance, std::ostream& log) {
    {
        const auto path = dir / "metrics.csv";
        auto out = open_output(path);
        write_metrics_csv(out, reports, provenance);
        finish(out, path);
    }
    if (models.size() < 2) {
        log << "deeptrend: one model only; skipping normalized indexes and CDF tables\n";
        return;
    }
    const std::pair<const char*, double MetricReport::*> metrics[] = {
        {"mse", &MetricReport::mse}, {"mae", &MetricReport::mae}};
    std::vector<NormalizedMetric> normalized;
    for (const auto& [name, member] : metrics) {
        normalized.push_back(normalize_reports(reports, member));
        for (const auto& model : models) {
            const auto path = dir / "cdf" / (std::string(name) + "__" + model + ".csv");
            auto out = open_output(path);
            write_cdf_csv(out, empirical_cdf(normalized.back().by_model.at(model)), provenance);
            finish(out, path);
        }
    }
    const auto path = dir / "normalized.csv";
    auto out = open_output(path);
    write_comments(out, provenance);
    out << "station,model,mse,mae\n";
    const auto& stations = normalized.front().stations;
    for (std::size_t s = 0; s < stations.size(); ++s) {
        for (const auto& model : models) {
            out << stations[s] << ',' << model << ','
                << format_number(normalized[0].by_model.at(model)[s]) << ','
                << format_number(normalized[1].by_model.at(model)[s]) << '\n';
        }
    }
    finish(out, path);
}

void write_summary(const fs::path& path, const std::vector<MetricReport>& reports,
                   const std::vector<std::string>& models,
                   const std::vector<std::string>& provenance, std::ostream& log) {
    std::vector<double> mse(models.size(), 0.0), mae(models.size(), 0.0);
    std::vector<std::size_t> counts(models.size(), 0);
    for (const auto& r : reports) {
        const auto m = static_cast<std::size_t>(
            std::find(models.begin(), models.end(), r.model) - models.begin());
        mse[m] += r.mse;
        mae[m] += r.mae;
        ++counts[m];
    }
    auto out = open_output(path);
    write_comments(out, provenance);
    out << "metric";
    for (const auto& m : models) out << ',' << m;
    out << '\n';
    for (const auto& [name, values] : {std::pair{"mse", &mse}, std::pair{"mae", &mae}}) {
        out << name;
        log << "deeptrend: " << name;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const double mean = (*values)[m] / static_cast<double>(counts[m]);
            out << ',' << format_number(mean);
            log << "  " << models[m] << '=' << format_number(mean);
        }
        out << '\n';
        log << '\n';
    }
    finish(out, path);
}

const char* manifest_header = "station,model,file,fnv1a64";

} // namespace

ExperimentConfig resolve_config(const RunOptions& options) {
    auto cfg = ExperimentConfig::from_file(ConfigFile::load(options.config));
    if (cfg.data_path && cfg.data_path->is_relative()) {
        cfg.data_path = options.config.parent_path() / *cfg.data_path;
    }
    if (options.seed) {
        cfg.settings.seed = *options.seed;
    }
    if (options.out) {
        cfg.output_dir = *options.out;
    }
    return cfg;
}

void cmd_generate(const fs::path& spec_file, const fs::path& out_csv,
                  std::optional<std::uint64_t> seed, std::ostream& log) {
    const auto file = ConfigFile::load(spec_file);
    auto spec = synthetic_from_file(file);
    if (seed) {
        spec.seed = *seed;
    }
    const auto table = generate_synthetic(spec);
    save_csv(out_csv, table,
             {"seed=" + std::to_string(spec.seed),
              "config_hash=" + hex64(fnv1a64(file.canonical()))});
    log << "deeptrend: wrote " << table.stations.size() << " station(s) x " << table.rows()
        << " samples to " << out_csv.string() << '\n';
}

void cmd_detrend(const fs::path& in_csv, const std::string& station, const std::string& out_prefix,
                 double max_missing_fraction, std::ostream& log) {
    const auto bytes = read_bytes(in_csv);
    std::istringstream in(bytes);
    const auto table = read_csv(in, in_csv.string());
    const auto raw = table.station(station);
    const auto series = impute_missing(raw, {max_missing_fraction});
    const auto trend = compute_trend(series);
    const auto residual = compute_residual(series, trend);
    const std::vector<std::string> provenance = {
        "seed=none", "config_hash=" + hex64(fnv1a64(bytes + "\n" + station)),
        "station=" + station + " weeks=" + std::to_string(trend.weeks_used)};

    const fs::path trend_path = out_prefix + "trend.csv";
    auto trend_out = open_output(trend_path);
    write_comments(trend_out, provenance);
    write_trend_csv(trend_out, trend);
    finish(trend_out, trend_path);

    const fs::path residual_path = out_prefix + "residual.csv";
    auto out = open_output(residual_path);
    write_comments(out, provenance);
    out << "timestamp,flow,trend,residual\n";
    const auto tiled = tile_trend(trend, series.start, series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.start + static_cast<long>(i) * sample_period) << ','
            << format_number(series.samples[i]) << ',' << format_number(tiled[i]) << ','
            << format_number(residual.values[i]) << '\n';
    }
    finish(out, residual_path);
    log << "deeptrend: " << station << ": " << raw.missing_count() << " missing sample(s) imputed, "
        << trend.weeks_used << " week(s) averaged; wrote " << trend_path.string() << " and "
        << residual_path.string() << '\n';
}

void cmd_train(const RunOptions& options, std::ostream& log) {
    const auto run = prepare(options, log);
    const auto models = train_all(run, options.jobs, log);
    const auto provenance = run.config.provenance();
    const auto& dir = run.config.output_dir;
    const auto manifest_path = dir / "checkpoints" / "manifest.csv";
    auto manifest = open_output(manifest_path);
    write_comments(manifest, provenance);
    manifest << manifest_header << '\n';
    for (const auto& model : models) {
        const auto stem = job_stem(model.station, model.name);
        const auto ckpt = dir / "checkpoints" / (stem + ".ckpt");
        write_checkpoint_file(ckpt, model);
        write_losses(dir / "losses" / (stem + ".csv"), model, provenance);
        manifest << model.station << ',' << model.name << ',' << stem << ".ckpt,"
                 << hex64(fnv1a64(read_bytes(ckpt))) << '\n';
    }
    finish(manifest, manifest_path);
    log << "deeptrend: wrote " << models.size() << " checkpoint(s) to "
        << (dir / "checkpoints").string() << '\n';
}

void cmd_evaluate(const RunOptions& options, std::ostream& log) {
    const auto run = prepare(options, log);
    const auto provenance = run.config.provenance();
    const auto& dir = run.config.output_dir;
    const auto manifest_path = dir / "checkpoints" / "manifest.csv";
    if (!fs::exists(manifest_path)) {
        throw std::runtime_error("no checkpoints at '" + manifest_path.string() +
                                 "'; run 'deeptrend train' with this config first");
    }
    std::istringstream manifest(read_bytes(manifest_path));
    std::string line;
    std::vector<std::string> recorded;
    std::map<std::string, std::string> digests;
    while (std::getline(manifest, line)) {
        if (line.rfind("# ", 0) == 0) {
            recorded.push_back(line.substr(2));
        } else if (line != manifest_header && !line.empty()) {
            const auto last = line.rfind(',');
            const auto file_start = line.rfind(',', last - 1) + 1;
            digests[line.substr(file_start, last - file_start)] = line.substr(last + 1);
        }
    }
    if (recorded != provenance) {
        throw std::runtime_error("checkpoints in '" + (dir / "checkpoints").string() +
                                 "' were trained with a different seed or config; rerun train");
    }

    std::vector<TrainedModel> models;
    for (const auto& job : jobs_for(run)) {
        const auto& station = run.data[job.station];
        const auto file = job_stem(station.id, job.model) + ".ckpt";
        const auto path = dir / "checkpoints" / file;
        const auto it = digests.find(file);
        if (it == digests.end() || !fs::exists(path)) {
            throw std::runtime_error("missing checkpoint '" + path.string() + "'");
        }
        if (hex64(fnv1a64(read_bytes(path))) != it->second) {
            throw std::runtime_error("checkpoint '" + path.string() +
                                     "' does not match its manifest digest");
        }
        TrainedModel model{station.id, job.model, std::nullopt, std::nullopt, {}};
        if (job.model == deeptrend_model_name) {
            model.deeptrend = load_deeptrend_checkpoint(path);
        } else {
            model.baseline = load_baseline_checkpoint(path);
        }
        models.push_back(std::move(model));
    }
    const auto reports = evaluate_all(run, models);
    write_evaluation(dir, reports, run.config.settings.models, provenance, log);
    log << "deeptrend: evaluated " << reports.size() << " model(s); wrote "
        << (dir / "metrics.csv").string() << '\n';
}

void cmd_compare(const RunOptions& options, std::ostream& log) {
    const auto run = prepare(options, log);
    const auto models = train_all(run, options.jobs, log);
    const auto reports = evaluate_all(run, models);
    const auto provenance = run.config.provenance();
    const auto& dir = run.config.output_dir;
    for (const auto& model : models) {
        write_losses(dir / "losses" / (job_stem(model.station, model.name) + ".csv"), model,
                     provenance);
    }
    write_evaluation(dir, reports, run.config.settings.models, provenance, log);
    write_summary(dir / "summary.csv", reports, run.config.settings.models, provenance, log);
    log << "deeptrend: wrote " << (dir / "summary.csv").string() << '\n';
}

int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"Traffic flow forecasting with trend/residual decomposition", "deeptrend"};
    app.require_subcommand(1);

    fs::path gen_spec, gen_out;
    std::optional<std::uint64_t> gen_seed;
    auto* generate = app.add_subcommand("generate", "Write a synthetic flow CSV");
    generate->add_option("--config", gen_spec, "File with a [synthetic] section")->required();
    generate->add_option("--out", gen_out, "Output CSV")->required();
    generate->add_option("--seed", gen_seed, "Overrides the generator seed");

    fs::path det_in;
    std::string det_station, det_prefix;
    double det_missing = 0.01;
    auto* detrend = app.add_subcommand("detrend", "Write trend and residual CSVs for one station");
    detrend->add_option("input", det_in, "Flow CSV")->required();
    detrend->add_option("--station", det_station, "Station id")->required();
    detrend->add_option("--out", det_prefix, "Output prefix")->required();
    detrend->add_option("--max-missing", det_missing, "Largest imputable missing fraction")
        ->check(CLI::Range(0.0, 1.0));

    RunOptions run;
    std::optional<fs::path> out_dir;
    const auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", run.config, "Experiment config file")->required();
        cmd->add_option("--seed", run.seed, "Overrides the config seed");
        cmd->add_option("--jobs", run.jobs, "Concurrent training jobs (0 = all cores)");
        cmd->add_option("--out", out_dir, "Output directory (overrides the config)");
    };
    auto* train = app.add_subcommand("train", "Train every configured station/model pair");
    auto* evaluate = app.add_subcommand("evaluate", "Score trained checkpoints on the test weeks");
    auto* compare = app.add_subcommand("compare", "Train, evaluate and summarize in one pass");
    for (auto* cmd : {train, evaluate, compare}) add_run_options(cmd);

    const auto one_line = [](std::string text) {
        std::replace(text.begin(), text.end(), '\n', ' ');
        while (!text.empty() && text.back() == ' ') text.pop_back();
        return text;
    };
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        log << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "deeptrend: error: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        run.out = out_dir;
        if (generate->parsed()) {
            cmd_generate(gen_spec, gen_out, gen_seed, log);
        } else if (detrend->parsed()) {
            cmd_detrend(det_in, det_station, det_prefix, det_missing, log);
        } else if (train->parsed()) {
            cmd_train(run, log);
        } else if (evaluate->parsed()) {
            cmd_evaluate(run, log);
        } else {
            cmd_compare(run, log);
        }
    } catch (const std::exception& e) {
        err << "deeptrend: error: " << one_line(e.what()) << '\n';
        return 1;
    }
    return 0;
}

} // namespace deeptrend::cli
