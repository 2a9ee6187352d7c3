#include "ecg/errors.hpp"
#include "ecg/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using ecg::RunConfig;

struct Overrides {
    std::string config_file;
    std::string data_dir, output_dir, checkpoint, dataset;
    std::vector<std::string> records;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> levels, window, per_set_size, limit, balanced;
    std::optional<std::string> threshold_mode, wavelet, optimizer;
    std::optional<std::size_t> epochs, batch_size;
    std::optional<double> lr;
    bool export_csv = false, eval_each_epoch = false, no_downsample = false;
};

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_file, "JSON config file");
    cmd.add_option("--data-dir", o.data_dir, "directory holding the WFDB records");
    cmd.add_option("--output-dir,-o", o.output_dir, "directory for datasets, checkpoints and reports");
    cmd.add_option("--seed", o.seed, "seed for splitting, initialisation and shuffling");
    cmd.add_option("--limit", o.limit, "cap on the number of beats per set");
}

void add_denoise(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--levels", o.levels, "wavelet decomposition levels");
    cmd.add_option("--window", o.window, "baseline moving-average width (odd, samples)");
    cmd.add_option("--threshold-mode", o.threshold_mode, "soft or hard")
        ->check(CLI::IsMember({"soft", "hard"}));
    cmd.add_option("--wavelet", o.wavelet, "db4 or d4")->check(CLI::IsMember({"db4", "d4"}));
}

RunConfig resolve(const Overrides& o) {
    RunConfig config;
    if (!o.config_file.empty()) {
        std::ifstream in(o.config_file);
        if (!in)
            throw ecg::ConfigError("cannot read config file " + o.config_file);
        std::stringstream text;
        text << in.rdbuf();
        config.merge_json(text.str());
    }
    if (const char* env = std::getenv(ecg::kDataDirEnv); env && *env)
        config.data_dir = env;
    if (!o.data_dir.empty())
        config.data_dir = o.data_dir;
    if (!o.output_dir.empty())
        config.output_dir = o.output_dir;
    if (!o.records.empty())
        config.records = o.records;
    if (!o.checkpoint.empty())
        config.checkpoint = o.checkpoint;
    if (!o.dataset.empty())
        config.dataset = o.dataset;
    if (o.seed)
        config.seed = *o.seed;
    if (o.levels)
        config.denoise.levels = *o.levels;
    if (o.window)
        config.denoise.window = *o.window;
    if (o.threshold_mode)
        config.denoise.threshold_mode = ecg::threshold_mode_from_name(*o.threshold_mode);
    if (o.wavelet)
        config.denoise.wavelet = *o.wavelet;
    if (o.per_set_size)
        config.per_set_size = *o.per_set_size;
    if (o.no_downsample)
        config.per_set_size.reset();
    if (o.limit)
        config.limit = *o.limit;
    if (o.balanced)
        config.balanced_sample = *o.balanced;
    if (o.export_csv)
        config.export_csv = true;
    if (o.epochs)
        config.train.epochs = *o.epochs;
    if (o.batch_size)
        config.train.batch_size = *o.batch_size;
    if (o.lr)
        config.train.learning_rate = *o.lr;
    if (o.optimizer)
        config.train.optimizer = ecg::optimizer_from_name(*o.optimizer);
    if (o.eval_each_epoch)
        config.train.evaluate_each_epoch = true;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Five-class ECG heartbeat classification with a 1D residual CNN"};
    app.require_subcommand(1);
    Overrides o;
    RunConfig predict_extra;

    auto* ingest = app.add_subcommand("ingest", "load records and summarise the selected beats");
    add_common(*ingest, o);
    ingest->add_option("--records", o.records, "record names (default: every *.hea)");

    auto* preprocess = app.add_subcommand("preprocess", "denoise, segment and split into train/test sets");
    add_common(*preprocess, o);
    add_denoise(*preprocess, o);
    preprocess->add_option("--records", o.records, "record names (default: every *.hea)");
    preprocess->add_option("--per-set-size", o.per_set_size, "beats in each of train and test");
    preprocess->add_flag("--no-downsample", o.no_downsample, "keep the full 50/50 split");
    preprocess->add_flag("--export-csv", o.export_csv, "also write train.csv and test.csv");

    auto* train = app.add_subcommand("train", "train the CNN on the preprocessed sets");
    add_common(*train, o);
    train->add_option("--epochs", o.epochs, "training epochs");
    train->add_option("--batch-size", o.batch_size, "mini-batch size");
    train->add_option("--lr", o.lr, "learning rate");
    train->add_option("--optimizer", o.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    train->add_option("--checkpoint", o.checkpoint, "checkpoint path (default: <output-dir>/model.ecgm)");
    train->add_flag("--eval-each-epoch", o.eval_each_epoch, "log test accuracy after every epoch");

    auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset file");
    add_common(*evaluate, o);
    evaluate->add_option("--checkpoint", o.checkpoint, "checkpoint path (default: <output-dir>/model.ecgm)");
    evaluate->add_option("--dataset", o.dataset, "dataset file (default: <output-dir>/test.ecgb)");
    evaluate->add_option("--balanced", o.balanced, "evaluate on N/5 beats of each class");

    auto* predict = app.add_subcommand("predict", "classify one annotated beat of a record");
    add_common(*predict, o);
    add_denoise(*predict, o);
    predict->add_option("--checkpoint", o.checkpoint, "checkpoint path (default: <output-dir>/model.ecgm)");
    predict->add_option("--record", predict_extra.record, "record name")->required();
    predict->add_option("--annotation", predict_extra.annotation_index,
                        "position in the record's annotation list")->required();

    auto* denoise = app.add_subcommand("denoise", "write raw and denoised MLII signal as CSV");
    add_common(*denoise, o);
    add_denoise(*denoise, o);
    denoise->add_option("--record", predict_extra.record, "record name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ecg::exit_code::kInput;
    }

    RunConfig config;
    try {
        config = resolve(o);
    } catch (const ecg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ecg::exit_code::kInput;
    }
    config.record = predict_extra.record;
    config.annotation_index = predict_extra.annotation_index;

    if (*ingest)
        return ecg::cmd_ingest(config, std::cout, std::cerr);
    if (*preprocess)
        return ecg::cmd_preprocess(config, std::cout, std::cerr);
    if (*train)
        return ecg::cmd_train(config, std::cout, std::cerr);
    if (*evaluate)
        return ecg::cmd_evaluate(config, std::cout, std::cerr);
    if (*predict)
        return ecg::cmd_predict(config, std::cout, std::cerr);
    return ecg::cmd_denoise(config, std::cout, std::cerr);
}
