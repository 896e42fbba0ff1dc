#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "floodlab/ablation.hpp"
#include "floodlab/capture_csv.hpp"
#include "floodlab/checkpoint.hpp"
#include "floodlab/error.hpp"
#include "floodlab/log.hpp"
#include "floodlab/pipeline.hpp"
#include "floodlab/scenario.hpp"

namespace fl = floodlab;

namespace {

std::string default_labels_path(const std::string& capture_path) {
    const auto dot = capture_path.rfind('.');
    const std::string base =
        dot == std::string::npos ? capture_path : capture_path.substr(0, dot);
    return base + ".labels";
}

void write_report_file(const std::string& path, const std::string& detector,
                       const std::string& scenario, const fl::EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw fl::Error("cannot write report '" + path + "'");
    fl::write_eval_report_header(out);
    fl::write_eval_report_row(out, detector, scenario, report);
}

fl::WindowSeries load_raw_features(const std::string& path) {
    fl::WindowSeries s = fl::read_window_series_file(path);
    if (s.scaled) throw fl::InvalidArgument("feature file '" + path + "' looks already scaled");
    return s;
}

struct CommonTrainFlags {
    fl::TSTConfig config;
    fl::TrainSpec train;
    std::size_t train_stride = 40;

    void attach(CLI::App* cmd) {
        cmd->add_option("--seq-len", config.seq_len, "Input sequence length");
        cmd->add_option("--d-model", config.d_model, "Encoder dimension");
        cmd->add_option("--n-heads", config.n_heads, "Attention heads");
        cmd->add_option("--d-ff", config.d_ff, "Feed-forward dimension");
        cmd->add_option("--n-layers", config.n_layers, "Encoder layers");
        cmd->add_option("--dropout", config.dropout, "Dropout probability");
        cmd->add_option("--batch-size", config.batch_size, "Training batch size");
        cmd->add_flag("--no-lpe{false},--lpe{true}", config.learned_embeddings,
                      "Learnable positional embeddings (default on)");
        cmd->add_option("--epochs", train.epochs, "Max training epochs");
        cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
        cmd->add_option("--patience", train.patience, "Early-stopping patience");
        cmd->add_option("--val-fraction", train.val_fraction, "Chronological validation tail");
        cmd->add_option("--train-stride", train_stride, "Stride between training sequences");
    }

    void finalize() {
        if (config.d_model % config.n_heads != 0) {
            throw fl::ConfigError("d_model must be divisible by n_heads");
        }
        config.d_k = config.d_v = config.d_model / config.n_heads;
        train.batch_size = config.batch_size;
        config.validate();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floodlab: synthetic MAVLink/DDoS traffic lab and detector pipeline"};
    app.require_subcommand(1);
    std::function<void()> action;

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "Synthesize a scenario capture");
    {
        struct {
            std::string scenario, output, labels;
            std::uint64_t seed = 0;
        } static opt;
        gen->add_option("--scenario", opt.scenario, "Scenario config file")->required();
        gen->add_option("--seed", opt.seed, "Generator seed")->required();
        gen->add_option("-o,--output", opt.output, "Capture CSV path")->required();
        gen->add_option("--labels", opt.labels, "Label intervals path (default: <output>.labels)");
        gen->callback([&]() {
            action = [&]() {
                fl::ScenarioSpec spec = fl::load_scenario_file(opt.scenario);
                spec.seed = opt.seed;
                fl::ScenarioResult result = fl::synth_scenario(spec);
                fl::write_capture_file(result.trace, opt.output);
                const std::string labels_path =
                    opt.labels.empty() ? default_labels_path(opt.output) : opt.labels;
                fl::write_label_intervals_file(result.labels, labels_path);
                fl::log_info("generated " + std::to_string(result.trace.packets.size()) +
                             " packets over " + std::to_string(result.trace.duration_s) +
                             " s -> " + opt.output);
            };
        });
    }

    // ingest -----------------------------------------------------------------
    auto* ing = app.add_subcommand("ingest", "Validate a capture and print a summary");
    {
        struct {
            std::string input;
        } static opt;
        ing->add_option("-i,--input", opt.input, "Capture CSV")->required();
        ing->callback([&]() {
            action = [&]() {
                fl::TrafficTrace trace = fl::read_capture_file(opt.input);
                std::size_t counts[4] = {0, 0, 0, 0};
                for (const auto& p : trace.packets) {
                    counts[static_cast<int>(p.protocol)]++;
                }
                std::printf("packets %zu\nduration_s %.6f\n", trace.packets.size(),
                            trace.duration_s);
                const fl::Protocol protos[4] = {fl::Protocol::MAVLINK, fl::Protocol::TCP,
                                                fl::Protocol::ICMP, fl::Protocol::OTHER};
                for (fl::Protocol proto : protos) {
                    std::printf("%s %zu\n", fl::protocol_name(proto),
                                counts[static_cast<int>(proto)]);
                }
            };
        });
    }

    // featurize ----------------------------------------------------------------
    auto* feat = app.add_subcommand("featurize", "Window a capture into count features");
    {
        struct {
            std::string input, labels, output;
            double window = 0.1;
        } static opt;
        feat->add_option("-i,--input", opt.input, "Capture CSV")->required();
        feat->add_option("--labels", opt.labels, "Label intervals file")->required();
        feat->add_option("-o,--output", opt.output, "Window series CSV")->required();
        feat->add_option("--window", opt.window, "Window length in seconds (default 0.1)");
        feat->callback([&]() {
            action = [&]() {
                fl::TrafficTrace trace = fl::read_capture_file(opt.input);
                auto labels = fl::read_label_intervals_file(opt.labels);
                fl::WindowSeries series = fl::featurize(std::move(trace), labels, opt.window);
                fl::write_window_series_file(series, opt.output);
                fl::log_info("featurized " + std::to_string(series.size()) + " windows -> " +
                             opt.output);
            };
        });
    }

    // train --------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Train a detector on window features");
    {
        struct {
            std::vector<std::string> features;
            std::string output;
            std::string detector = "tst";
            std::uint64_t seed = 0;
        } static opt;
        static CommonTrainFlags flags;
        tr->add_option("--features", opt.features, "Training window series CSV (repeatable)")
            ->required();
        tr->add_option("-o,--output", opt.output, "Model output path")->required();
        tr->add_option("--seed", opt.seed, "Training seed")->required();
        tr->add_option("--detector", opt.detector, "tst | iforest | threshold");
        flags.attach(tr);
        tr->callback([&]() {
            action = [&]() {
                std::vector<fl::WindowSeries> blocks;
                for (const auto& path : opt.features) blocks.push_back(load_raw_features(path));

                if (opt.detector == "tst") {
                    flags.finalize();
                    fl::PipelineTrainOptions options;
                    options.config = flags.config;
                    options.config.seed = opt.seed;
                    options.train = flags.train;
                    options.train_stride = flags.train_stride;
                    options.seed = opt.seed;

                    fl::Scaler scaler = fl::fit_scaler_over(blocks);
                    std::vector<fl::SequenceDataset> seq_blocks;
                    for (const auto& b : blocks) {
                        seq_blocks.push_back(fl::make_sequences(fl::apply_scaler(scaler, b),
                                                                options.config.seq_len,
                                                                options.train_stride));
                    }
                    fl::Rng init_rng(options.config.seed);
                    fl::TSTParams params = fl::tst_init(options.config, init_rng);
                    fl::Rng train_rng(options.seed);
                    fl::TrainHistory history =
                        fl::train_tst(params, seq_blocks, options.train, train_rng);
                    fl::save_tst_checkpoint(params, scaler, opt.output);
                    fl::log_info("tst trained: " + std::to_string(history.epochs_run) +
                                 " epochs, best val F1 " + std::to_string(history.best_val_f1) +
                                 " -> " + opt.output);
                } else if (opt.detector == "iforest") {
                    fl::Scaler scaler = fl::fit_scaler_over(blocks);
                    std::vector<std::vector<double>> benign_vecs, all_vecs;
                    std::vector<int> all_labels;
                    for (const auto& b : blocks) {
                        fl::WindowSeries scaled = fl::apply_scaler(scaler, b);
                        auto bv = fl::iforest_vectors(scaled, true);
                        benign_vecs.insert(benign_vecs.end(), bv.begin(), bv.end());
                        auto av = fl::iforest_vectors(scaled, false);
                        for (std::size_t i = 0; i < av.size(); ++i) {
                            all_labels.push_back(scaled.labels[fl::kIForestWindow - 1 + i]);
                        }
                        all_vecs.insert(all_vecs.end(), av.begin(), av.end());
                    }
                    fl::Rng rng(opt.seed);
                    fl::IForestModel model = fl::iforest_fit(benign_vecs, 256, 100, rng);
                    fl::iforest_select_threshold(model, all_vecs, all_labels);
                    fl::write_iforest_file(model, scaler, opt.output);
                    fl::log_info("iforest trained on " + std::to_string(benign_vecs.size()) +
                                 " benign vectors -> " + opt.output);
                } else if (opt.detector == "threshold") {
                    fl::Scaler scaler = fl::fit_scaler_over(blocks);
                    fl::WindowSeries combined;
                    combined.scaled = true;
                    for (const auto& b : blocks) {
                        fl::WindowSeries scaled = fl::apply_scaler(scaler, b);
                        combined.counts.insert(combined.counts.end(), scaled.counts.begin(),
                                               scaled.counts.end());
                        combined.labels.insert(combined.labels.end(), scaled.labels.begin(),
                                               scaled.labels.end());
                    }
                    fl::ThresholdDetector detector = fl::threshold_fit(combined);
                    fl::write_threshold_file(detector, scaler, opt.output);
                    fl::log_info("threshold cut " + std::to_string(detector.cut) + " -> " +
                                 opt.output);
                } else {
                    throw fl::InvalidArgument("unknown detector '" + opt.detector + "'");
                }
            };
        });
    }

    // eval -----------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "Evaluate a trained detector on test features");
    {
        struct {
            std::string model, features, output;
            std::string detector = "tst";
            std::string scenario = "test";
            std::size_t stride = 20;
            std::size_t seq_len = 0;  // optional cross-check against checkpoint
            double threshold = 0.5;
        } static opt;
        ev->add_option("--model", opt.model, "Model path")->required();
        ev->add_option("--features", opt.features, "Test window series CSV")->required();
        ev->add_option("-o,--output", opt.output, "Report CSV path")->required();
        ev->add_option("--detector", opt.detector, "tst | iforest | threshold");
        ev->add_option("--scenario-name", opt.scenario, "Scenario label in the report");
        ev->add_option("--stride", opt.stride, "Stride between evaluation anchors");
        ev->add_option("--seq-len", opt.seq_len, "Expected seq_len (checked vs checkpoint)");
        ev->add_option("--threshold", opt.threshold, "Sigmoid decision threshold (tst)");
        ev->callback([&]() {
            action = [&]() {
                fl::WindowSeries raw = load_raw_features(opt.features);
                fl::EvalReport report;
                if (opt.detector == "tst") {
                    fl::TSTCheckpoint ckpt = fl::load_tst_checkpoint(opt.model);
                    if (opt.seq_len != 0 && opt.seq_len != ckpt.params.config.seq_len) {
                        throw fl::ConfigError(
                            "seq_len mismatch: checkpoint has " +
                            std::to_string(ckpt.params.config.seq_len) + ", flag requests " +
                            std::to_string(opt.seq_len));
                    }
                    report = fl::evaluate_tst(ckpt.params, ckpt.scaler, raw, opt.stride,
                                              opt.threshold);
                } else if (opt.detector == "iforest") {
                    auto [model, scaler] = fl::read_iforest_file(opt.model);
                    fl::WindowSeries scaled = fl::apply_scaler(scaler, raw);
                    std::vector<int> preds, labels;
                    std::vector<double> vec(model.dim);
                    for (std::size_t a = model.dim - 1; a < scaled.size(); a += opt.stride) {
                        std::copy(scaled.counts.begin() + static_cast<std::ptrdiff_t>(a + 1 - model.dim),
                                  scaled.counts.begin() + static_cast<std::ptrdiff_t>(a + 1),
                                  vec.begin());
                        preds.push_back(model.predict(vec));
                        labels.push_back(scaled.labels[a]);
                    }
                    report = fl::evaluate(preds, labels);
                } else if (opt.detector == "threshold") {
                    auto [detector, scaler] = fl::read_threshold_file(opt.model);
                    fl::WindowSeries scaled = fl::apply_scaler(scaler, raw);
                    std::vector<int> preds, labels;
                    for (std::size_t a = 0; a < scaled.size(); a += opt.stride) {
                        preds.push_back(detector.predict(scaled.counts[a]));
                        labels.push_back(scaled.labels[a]);
                    }
                    report = fl::evaluate(preds, labels);
                } else {
                    throw fl::InvalidArgument("unknown detector '" + opt.detector + "'");
                }
                write_report_file(opt.output, opt.detector, opt.scenario, report);
                std::printf("%s %s: precision %.4f recall %.4f accuracy %.4f f1 %.4f\n",
                            opt.detector.c_str(), opt.scenario.c_str(), report.precision,
                            report.recall, report.accuracy, report.f1);
            };
        });
    }

    // ablate ---------------------------------------------------------------
    auto* ab = app.add_subcommand("ablate", "Sweep TST hyperparameters over a grid file");
    {
        struct {
            std::string grid, output;
            std::vector<std::string> train_features;
            std::vector<std::string> tests;  // name=path
            std::uint64_t seed = 0;
            std::size_t jobs = 1;
            std::size_t eval_stride = 20;
        } static opt;
        static CommonTrainFlags flags;
        ab->add_option("--grid", opt.grid, "Ablation grid file")->required();
        ab->add_option("--train-features", opt.train_features, "Training series (repeatable)")
            ->required();
        ab->add_option("--test", opt.tests, "Test series as name=path (repeatable)")->required();
        ab->add_option("--seed", opt.seed, "Seed shared by all cells")->required();
        ab->add_option("-o,--output", opt.output, "Ablation table CSV")->required();
        ab->add_option("--jobs", opt.jobs, "Parallel cells");
        ab->add_option("--eval-stride", opt.eval_stride, "Evaluation anchor stride");
        flags.attach(ab);
        ab->callback([&]() {
            action = [&]() {
                flags.finalize();
                fl::AblationInput input;
                for (const auto& path : opt.train_features) {
                    input.raw_train_blocks.push_back(load_raw_features(path));
                }
                for (const auto& spec : opt.tests) {
                    const auto eq = spec.find('=');
                    if (eq == std::string::npos) {
                        throw fl::InvalidArgument("--test expects name=path, got '" + spec + "'");
                    }
                    input.raw_test_series.emplace_back(spec.substr(0, eq),
                                                       load_raw_features(spec.substr(eq + 1)));
                }
                input.train = flags.train;
                input.train_stride = flags.train_stride;
                input.eval_stride = opt.eval_stride;
                input.seed = opt.seed;

                fl::TSTConfig base = flags.config;
                base.seed = opt.seed;
                fl::AblationGrid grid = fl::load_ablation_grid(opt.grid);
                auto rows = fl::run_ablation(grid, base, input, opt.jobs);
                std::ofstream out(opt.output);
                if (!out) throw fl::Error("cannot write '" + opt.output + "'");
                fl::write_ablation_csv(rows, out);
                fl::log_info("ablation: " + std::to_string(rows.size()) + " rows -> " +
                             opt.output);
            };
        });
    }

    // bench ----------------------------------------------------------------
    auto* be = app.add_subcommand("bench", "Measure single-sequence inference cost");
    {
        struct {
            std::string model, output;
            std::size_t trials = 20;
        } static opt;
        be->add_option("--model", opt.model, "TST checkpoint")->required();
        be->add_option("--trials", opt.trials, "Number of timed passes");
        be->add_option("-o,--output", opt.output, "Optional CSV output");
        be->callback([&]() {
            action = [&]() {
                fl::TSTCheckpoint ckpt = fl::load_tst_checkpoint(opt.model);
                fl::BenchResult r = fl::bench_inference(ckpt.params, opt.trials);
                std::printf("median_forward_s %.6f\nparam_count %zu\nparam_bytes %zu\n"
                            "peak_extra_memory_bytes %zu\n",
                            r.median_forward_s, r.param_count, r.param_bytes,
                            r.peak_extra_memory_bytes);
                if (!opt.output.empty()) {
                    std::ofstream out(opt.output);
                    if (!out) throw fl::Error("cannot write '" + opt.output + "'");
                    out << "median_forward_s,param_count,param_bytes,peak_extra_memory_bytes\n";
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.6f", r.median_forward_s);
                    out << buf << ',' << r.param_count << ',' << r.param_bytes << ','
                        << r.peak_extra_memory_bytes << '\n';
                }
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help exits 0, usage problems exit 1
    }

    try {
        action();
    } catch (const fl::Error& e) {
        std::fprintf(stderr, "floodlab: error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "floodlab: internal error: %s\n", e.what());
        return 2;
    }
    return 0;
}
