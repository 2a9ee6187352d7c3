#include "ecg/pipeline.hpp"

#include "ecg/checkpoint.hpp"
#include "ecg/errors.hpp"
#include "ecg/ingest.hpp"
#include "ecg/metrics.hpp"
#include "ecg/segment.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace ecg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& target) {
    if (j.contains(key) && !j.at(key).is_null())
        target = j.at(key).get<T>();
}

void print_histogram(std::ostream& out, const std::string& title,
                     const std::array<std::size_t, kNumClasses>& counts) {
    std::size_t total = 0;
    out << title << ':';
    for (auto c : kAllClasses) {
        out << ' ' << class_name(c) << '=' << counts[class_id(c)];
        total += counts[class_id(c)];
    }
    out << " total=" << total << '\n';
}

std::vector<std::string> record_names(const RunConfig& config) {
    if (!config.records.empty())
        return config.records;
    if (!fs::is_directory(config.data_dir))
        throw IoError("data directory " + config.data_dir.string() + " does not exist");
    return discover_records(config.data_dir);
}

// Names of records whose header, signal or annotation file is absent.
std::vector<std::string> missing_files(const fs::path& dir, const std::vector<std::string>& names) {
    std::vector<std::string> missing;
    for (const auto& name : names) {
        const auto hea = dir / (name + ".hea");
        std::string what;
        if (!fs::exists(hea)) {
            what = name + ".hea";
        } else {
            std::ifstream in(hea);
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            try {
                const auto header = wfdb::parse_header(text);
                if (!fs::exists(dir / header.signals[0].file_name))
                    what = header.signals[0].file_name;
            } catch (const Error&) {
                // Reported with full detail when the record is loaded.
            }
            if (what.empty() && !fs::exists(dir / (name + ".atr")))
                what = name + ".atr";
        }
        if (!what.empty())
            missing.push_back(name + " (" + what + ")");
    }
    return missing;
}

struct LoadedData {
    std::vector<EcgRecord> records;
    BeatIndex index;
};

// Shared by ingest and preprocess; returns nullopt after reporting an input error.
std::optional<LoadedData> load_data(const RunConfig& config, std::ostream& err) {
    try {
        const auto names = record_names(config);
        if (names.empty()) {
            err << "error: no WFDB records (*.hea) found in " << config.data_dir.string() << '\n';
            return std::nullopt;
        }
        if (const auto missing = missing_files(config.data_dir, names); !missing.empty()) {
            err << "error: missing record files:";
            for (const auto& m : missing)
                err << ' ' << m;
            err << '\n';
            return std::nullopt;
        }
        LoadedData data;
        data.records = load_records(config.data_dir, names);
        data.index = select_dataset(data.records);
        return data;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return std::nullopt;
    }
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void apply_limit(std::vector<BeatSegment>& segments, std::optional<std::size_t> limit) {
    if (limit && segments.size() > *limit)
        segments.resize(*limit);
}

// First n / 5 beats of every class, in file order.
std::vector<BeatSegment> balanced_sample(const std::vector<BeatSegment>& segments, std::size_t n) {
    const std::size_t per_class = n / kNumClasses;
    std::array<std::size_t, kNumClasses> taken{};
    std::vector<BeatSegment> out;
    for (const auto& s : segments) {
        auto& k = taken[class_id(s.label)];
        if (k < per_class) {
            out.push_back(s);
            ++k;
        }
    }
    for (auto c : kAllClasses)
        if (taken[class_id(c)] < per_class)
            throw SizeError("balanced sample needs " + std::to_string(per_class) + " " +
                            std::string(class_name(c)) + " beats, dataset has " +
                            std::to_string(taken[class_id(c)]));
    return out;
}

void print_headline(std::ostream& out, const MetricsReport& report) {
    auto pct = [](const std::optional<double>& v) {
        if (!v)
            return std::string("undefined");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
        return std::string(buf);
    };
    out << "accuracy:    " << pct(report.accuracy) << '\n'
        << "sensitivity: " << pct(report.macro_sensitivity) << " (macro)\n"
        << "specificity: " << pct(report.macro_specificity) << " (macro)\n";
}

MetricsReport score(const ModelParams& params, const std::vector<BeatSegment>& segments,
                    ConfusionMatrix& cm) {
    const auto predicted = predict_classes(params, segments);
    cm = confusion(labels_of(segments), predicted);
    return compute_metrics(cm);
}

fs::path dataset_path(const RunConfig& config) {
    return config.dataset.empty() ? config.output_dir / "test.ecgb" : config.dataset;
}

fs::path checkpoint_path(const RunConfig& config) {
    return config.checkpoint.empty() ? config.output_dir / "model.ecgm" : config.checkpoint;
}

} // namespace

void RunConfig::merge_json(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    try {
        std::string path;
        if (j.contains("data_dir"))
            data_dir = j.at("data_dir").get<std::string>();
        if (j.contains("output_dir"))
            output_dir = j.at("output_dir").get<std::string>();
        read_field(j, "records", records);
        read_field(j, "seed", seed);
        read_field(j, "export_csv", export_csv);
        if (j.contains("limit"))
            limit = j.at("limit").is_null() ? std::nullopt
                                            : std::optional(j.at("limit").get<std::size_t>());
        if (j.contains("denoise")) {
            const auto& d = j.at("denoise");
            read_field(d, "levels", denoise.levels);
            read_field(d, "window", denoise.window);
            read_field(d, "wavelet", denoise.wavelet);
            if (d.contains("threshold_mode"))
                denoise.threshold_mode =
                    threshold_mode_from_name(d.at("threshold_mode").get<std::string>());
        }
        if (j.contains("segment") && j.at("segment").contains("per_set_size")) {
            const auto& v = j.at("segment").at("per_set_size");
            per_set_size = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            read_field(m, "input_length", model.input_length);
            read_field(m, "conv_filters", model.conv_filters);
            read_field(m, "conv_kernel", model.conv_kernel);
            read_field(m, "conv_stride", model.conv_stride);
            read_field(m, "pool_window", model.pool_window);
            read_field(m, "pool_stride", model.pool_stride);
            read_field(m, "res_kernel", model.res_kernel);
            read_field(m, "res_stride", model.res_stride);
            read_field(m, "res_filters", model.res_filters);
            read_field(m, "fc_hidden", model.fc_hidden);
            read_field(m, "num_classes", model.num_classes);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            read_field(t, "epochs", train.epochs);
            read_field(t, "batch_size", train.batch_size);
            read_field(t, "learning_rate", train.learning_rate);
            read_field(t, "evaluate_each_epoch", train.evaluate_each_epoch);
            if (t.contains("optimizer"))
                train.optimizer = optimizer_from_name(t.at("optimizer").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["data_dir"] = data_dir.string();
    j["output_dir"] = output_dir.string();
    j["records"] = records;
    j["seed"] = seed;
    j["limit"] = limit ? json(*limit) : json(nullptr);
    j["export_csv"] = export_csv;
    j["denoise"] = {{"levels", denoise.levels},
                    {"window", denoise.window},
                    {"threshold_mode", threshold_mode_name(denoise.threshold_mode)},
                    {"wavelet", denoise.wavelet}};
    j["segment"] = {{"per_set_size", per_set_size ? json(*per_set_size) : json(nullptr)}};
    j["model"] = {{"input_length", model.input_length}, {"conv_filters", model.conv_filters},
                  {"conv_kernel", model.conv_kernel},   {"conv_stride", model.conv_stride},
                  {"pool_window", model.pool_window},   {"pool_stride", model.pool_stride},
                  {"res_kernel", model.res_kernel},     {"res_stride", model.res_stride},
                  {"res_filters", model.res_filters},   {"fc_hidden", model.fc_hidden},
                  {"num_classes", model.num_classes}};
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"optimizer", optimizer_name(train.optimizer)},
                  {"evaluate_each_epoch", train.evaluate_each_epoch}};
    return j.dump(2) + "\n";
}

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
    auto data = load_data(config, err);
    if (!data)
        return exit_code::kInput;
    const auto& index = data->index;
    out << "records loaded: " << data->records.size() << '\n'
        << "records selected: " << index.selected_records.size() << '\n'
        << "records excluded:";
    for (const auto& name : index.excluded_records)
        out << ' ' << name;
    out << '\n';
    print_histogram(out, "beats", index.class_counts());

    try {
        ensure_directory(config.output_dir);
        std::ofstream csv(config.output_dir / "beat_index.csv");
        if (!csv)
            throw IoError("cannot write " + (config.output_dir / "beat_index.csv").string());
        csv << "record,channel,annotation,sample,label\n";
        for (const auto& b : index.beats)
            csv << data->records[b.record].name() << ',' << b.channel << ',' << b.annotation << ','
                << b.sample_index << ',' << class_name(b.label) << '\n';
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kInput;
    }
    return exit_code::kOk;
}

int cmd_preprocess(const RunConfig& config, std::ostream& out, std::ostream& err) {
    auto data = load_data(config, err);
    if (!data)
        return exit_code::kInput;
    try {
        const auto segmented = segment_beats(data->records, data->index, config.denoise);
        out << "segments: " << segmented.segments.size() << " (" << segmented.boundary_skips
            << " beats skipped at record boundaries)\n";
        const auto split = build_split(segmented.segments, config.seed, config.per_set_size);
        ensure_directory(config.output_dir);
        write_dataset(config.output_dir / "train.ecgb", split.train);
        write_dataset(config.output_dir / "test.ecgb", split.test);
        if (config.export_csv) {
            write_dataset_csv(config.output_dir / "train.csv", split.train);
            write_dataset_csv(config.output_dir / "test.csv", split.test);
        }
        print_histogram(out, "train", class_histogram(split.train));
        print_histogram(out, "test", class_histogram(split.test));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kPipeline;
    }
    return exit_code::kOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
    DatasetSplit split;
    try {
        split.train = read_dataset(config.output_dir / "train.ecgb");
        split.test = read_dataset(config.output_dir / "test.ecgb");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kPipeline;
    }
    apply_limit(split.train, config.limit);
    apply_limit(split.test, config.limit);
    split.seed = config.seed;

    ModelConfig model_config = config.model;
    model_config.seed = config.seed;
    ModelParams params;
    try {
        if (model_config.input_length != kSegmentLength)
            throw ConfigError("model input length " + std::to_string(model_config.input_length) +
                              " does not match " + std::to_string(kSegmentLength) +
                              "-sample segments");
        params = build_model(model_config);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kCompatibility;
    }

    TrainConfig tc = config.train;
    tc.shuffle_seed = config.seed;
    out << "training on " << split.train.size() << " beats, testing on " << split.test.size()
        << '\n';
    TrainResult result;
    try {
        result = train(std::move(params), split, tc, [&](const EpochLog& e) {
            out << "epoch " << e.epoch << '/' << tc.epochs << " loss " << std::setprecision(6)
                << e.train_loss << " train_acc " << e.train_accuracy;
            if (e.test_accuracy)
                out << " test_acc " << *e.test_accuracy;
            out << " (" << std::setprecision(3) << e.seconds << " s)\n" << std::flush;
        });
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kPipeline;
    }

    try {
        const auto& eval_set = split.test.empty() ? split.train : split.test;
        ConfusionMatrix cm;
        const auto report = score(result.params, eval_set, cm);
        ensure_directory(config.output_dir);
        save_checkpoint(result.params, checkpoint_path(config));
        emit_report(report, cm, result.log, config.output_dir);
        std::ofstream(config.output_dir / "run_config.json") << config.to_json();
        print_headline(out, report);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kPipeline;
    }
    return exit_code::kOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    ModelParams params;
    try {
        params = load_checkpoint(checkpoint_path(config));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kCompatibility;
    }
    if (params.config.input_length != kSegmentLength) {
        err << "error: checkpoint expects " << params.config.input_length
            << "-sample beats, dataset segments have " << kSegmentLength << '\n';
        return exit_code::kCompatibility;
    }
    std::vector<BeatSegment> segments;
    try {
        segments = read_dataset(dataset_path(config));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kInput;
    }
    try {
        if (config.balanced_sample)
            segments = balanced_sample(segments, *config.balanced_sample);
        else
            apply_limit(segments, config.limit);
        ConfusionMatrix cm;
        const auto report = score(params, segments, cm);
        write_evaluation(report, cm, config.output_dir);
        out << "evaluated " << segments.size() << " beats\n";
        print_headline(out, report);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kPipeline;
    }
    return exit_code::kOk;
}

int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err) {
    ModelParams params;
    try {
        params = load_checkpoint(checkpoint_path(config));
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kCompatibility;
    }
    if (params.config.input_length != kSegmentLength) {
        err << "error: checkpoint expects " << params.config.input_length << "-sample beats\n";
        return exit_code::kCompatibility;
    }
    try {
        const auto record = load_record(config.data_dir, config.record);
        if (config.annotation_index >= record.annotations.size())
            throw RangeError("annotation index " + std::to_string(config.annotation_index) +
                             " is past the last annotation (" +
                             std::to_string(record.annotations.size()) + " in record " +
                             record.name() + ")");
        const int lead = record.channel_index("MLII");
        if (lead < 0)
            throw SelectionError("record " + record.name() + " has no MLII channel");
        const auto& ann = record.annotations[config.annotation_index];
        const auto clean = denoise(record.channels[static_cast<std::size_t>(lead)], config.denoise);
        const auto scaled = rescale(reduce_dimension(extract_window(clean, ann.sample_index)));
        BeatSegment seg;
        std::transform(scaled.begin(), scaled.end(), seg.samples.begin(),
                       [](double v) { return static_cast<float>(v); });
        seg.record_id = record.name();
        seg.annotation_index = static_cast<std::uint32_t>(ann.sample_index);

        const auto p = predict(params, seg);
        char buf[64];
        out << "record " << record.name() << " annotation " << config.annotation_index
            << " (sample " << ann.sample_index << ", annotated " << ann.symbol << ")\n";
        std::snprintf(buf, sizeof buf, "%.6f", p.probabilities[class_id(p.label)]);
        out << "predicted " << class_name(p.label) << " p=" << buf << '\n';
        for (auto c : kAllClasses) {
            std::snprintf(buf, sizeof buf, "%.6f", p.probabilities[class_id(c)]);
            out << class_name(c) << ' ' << buf << '\n';
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kInput;
    }
    return exit_code::kOk;
}

int cmd_denoise(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const auto record = load_record(config.data_dir, config.record);
        const int lead = record.channel_index("MLII");
        const auto channel = static_cast<std::size_t>(lead < 0 ? 0 : lead);
        const auto& raw = record.channels[channel];
        const auto clean = denoise(raw, config.denoise);
        ensure_directory(config.output_dir);
        const auto path = config.output_dir / (record.name() + "_denoised.csv");
        std::ofstream csv(path);
        if (!csv)
            throw IoError("cannot write " + path.string());
        csv << "sample,raw_mv,denoised_mv\n";
        char buf[64];
        for (std::size_t i = 0; i < raw.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", i, raw[i], clean[i]);
            csv << buf;
        }
        out << "wrote " << path.string() << " (" << raw.size() << " samples, lead "
            << record.header.signals[channel].description << ")\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::kInput;
    }
    return exit_code::kOk;
}

} // namespace ecg
