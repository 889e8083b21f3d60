// symbiolcd: loop-closure candidate prediction from object layouts and
// visual bag-of-words scores.
//
// Subcommands: gen, train, predict, eval, ablate, importance, bow-build.
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "symbio/eval.hpp"
#include "symbio/io.hpp"
#include "symbio/pipeline.hpp"
#include "symbio/rng.hpp"
#include "symbio/synthetic.hpp"

namespace fs = std::filesystem;
using namespace symbio;

namespace {

struct CommonOpts {
    uint64_t seed = 42;
    int threads = 1;

    // pipeline tunables
    double alpha = 100.0;
    double beta_s = 1.0;
    double eps_pos = kDefaultMatchEpsilon;
    int insert_period = 5;
    int exclusion_window = 30;
    double threshold = 0.5;
    bool unlabeled_negative = false;

    // filter policy
    std::vector<std::string> moving_labels;
    int max_objects = 8;
    double max_area_fraction = 0.5;
    double min_confidence = 0.7;

    // forest
    int estimators = 100;
    int max_features = 0;  // 0 = sqrt
    int max_depth = 0;     // 0 = unlimited
    int min_samples_split = 2;
    double positive_class_weight = 1.0;

    // bow
    int bow_branching = 9;
    int bow_depth = 3;

    PipelineConfig pipeline_config() const {
        PipelineConfig cfg;
        cfg.temporal.alpha = alpha;
        cfg.temporal.beta_s = beta_s;
        cfg.eps_pos = eps_pos;
        cfg.insert_period = insert_period;
        cfg.exclusion_window = exclusion_window;
        cfg.threshold = threshold;
        cfg.unlabeled_pairs_negative = unlabeled_negative;
        if (!moving_labels.empty())
            cfg.filter.moving_labels = {moving_labels.begin(), moving_labels.end()};
        cfg.filter.max_objects = max_objects;
        cfg.filter.max_area_fraction = max_area_fraction;
        cfg.filter.min_confidence = min_confidence;
        return cfg;
    }

    ForestHyperparams forest_hyperparams() const {
        ForestHyperparams hp;
        hp.n_estimators = estimators;
        hp.max_features = max_features;
        hp.max_depth = max_depth;
        hp.min_samples_split = min_samples_split;
        hp.seed = derive_seed(seed, "forest");
        hp.positive_class_weight = positive_class_weight;
        return hp;
    }
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "Base seed; all randomness derives from it")->capture_default_str();
    cmd->add_option("--threads", opts.threads, "Worker threads (never changes output bytes)")
        ->capture_default_str();
}

void add_pipeline_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--alpha", opts.alpha, "Temporal penalty weight, in (0,100]")->capture_default_str();
    cmd->add_option("--beta-s", opts.beta_s, "Temporal penalty decay, in (0,1]")->capture_default_str();
    cmd->add_option("--eps-pos", opts.eps_pos, "Positional tolerance for label matches on the normalized plane")
        ->capture_default_str();
    cmd->add_option("--insert-period", opts.insert_period, "Vocabulary insertion period in frames")
        ->capture_default_str();
    cmd->add_option("--exclusion-window", opts.exclusion_window,
                    "Minimum query-reference frame separation")
        ->capture_default_str();
    cmd->add_option("--moving-labels", opts.moving_labels,
                    "Comma-separated labels filtered as moving objects (replaces the default list)")
        ->delimiter(',');
    cmd->add_option("--max-objects", opts.max_objects, "Largest objects kept per frame")->capture_default_str();
    cmd->add_option("--max-area-fraction", opts.max_area_fraction,
                    "Objects above this fraction of the image area are dropped")
        ->capture_default_str();
    cmd->add_option("--min-confidence", opts.min_confidence, "Detection confidence floor")->capture_default_str();
}

void add_forest_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--estimators", opts.estimators, "Trees in the forest")->capture_default_str();
    cmd->add_option("--max-features", opts.max_features, "Candidate features per split (0 = sqrt rule)")
        ->capture_default_str();
    cmd->add_option("--max-depth", opts.max_depth, "Tree depth cap (0 = unlimited)")->capture_default_str();
    cmd->add_option("--min-samples-split", opts.min_samples_split, "Minimum node size eligible for a split")
        ->capture_default_str();
    cmd->add_option("--positive-class-weight", opts.positive_class_weight,
                    "Up-weight for loop rows in splits and votes (1 = off)")
        ->capture_default_str();
}

// JSON config file: {"train":{"estimators":50},"eval":{"runs":10}}. Section
// objects name subcommands, keys are long option names without the dashes.
// Values from the file only fill options not given on the command line.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::parse_error& e) {
            throw CLI::FileError(std::string("config file: ") + e.what());
        }
        if (!j.is_object()) throw CLI::FileError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static void collect(const nlohmann::json& j, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto deeper = parents;
                deeper.push_back(key);
                collect(value, deeper, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value)
                    item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            } else {
                item.inputs.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
            items.push_back(std::move(item));
        }
    }
};

VbowSource make_vbow_source(const std::optional<fs::path>& scores_path,
                            const std::optional<fs::path>& descriptors_path,
                            const std::optional<fs::path>& vocab_path,
                            const std::vector<FrameObservation>& frames, const CommonOpts& opts,
                            std::optional<VocabTree>& tree_out) {
    if (scores_path) return VbowSource(load_pair_scores(*scores_path));
    if (!descriptors_path)
        throw ValidationError("either --scores or --descriptors is required");
    auto descriptors = load_descriptors(*descriptors_path);
    if (vocab_path) {
        tree_out = VocabTree::load_file(*vocab_path);
    } else {
        tree_out = VocabTree::build(descriptors, opts.bow_branching, opts.bow_depth,
                                    derive_seed(opts.seed, "bow"));
    }
    return VbowSource(*tree_out, descriptors, frames);
}

std::string detections_csv(const std::vector<Detection>& detections) {
    std::string out = "query,reference,prob,matched_labels,hausdorff_t,norm_dist,vbow_score\n";
    for (const Detection& d : detections) {
        out += std::to_string(d.query);
        out += ',';
        out += std::to_string(d.reference);
        out += ',';
        out += format_double(d.prob);
        out += ',';
        out += format_double(d.features.matched_labels);
        out += ',';
        out += format_double(d.features.hausdorff_t);
        out += ',';
        out += format_double(d.features.norm_dist);
        out += ',';
        out += format_double(d.features.vbow_score);
        out += '\n';
    }
    return out;
}

void print_importance(const ForestModel& model) {
    for (size_t f = 0; f < model.feature_names.size(); ++f) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "  %-16s %.4f", model.feature_names[f].c_str(),
                      model.importance[f]);
        std::cout << buf << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Object-aware loop-closure candidate prediction"};
    app.require_subcommand(1);

    CommonOpts opts;
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file with option defaults");

    // --- gen -----------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset with known loops");
    SyntheticConfig gen_cfg;
    fs::path gen_out = ".";
    add_common_options(gen, opts);
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
    gen->add_option("--frames", gen_cfg.n_frames, "Sequence length")->capture_default_str();
    gen->add_option("--classes", gen_cfg.n_object_classes, "Distinct object classes")->capture_default_str();
    gen->add_option("--objects-min", gen_cfg.objects_per_frame_min, "Min static objects per scene")
        ->capture_default_str();
    gen->add_option("--objects-max", gen_cfg.objects_per_frame_max, "Max static objects per scene")
        ->capture_default_str();
    gen->add_option("--label-noise", gen_cfg.label_noise_rate, "Per-object misclassification rate")
        ->capture_default_str();
    gen->add_option("--position-sigma", gen_cfg.position_noise_sigma, "Centroid noise in pixels")
        ->capture_default_str();
    gen->add_option("--scale-drift", gen_cfg.scale_drift, "Per-revisit scale drift")->capture_default_str();
    gen->add_option("--flip-rate", gen_cfg.descriptor_flip_rate, "Descriptor bit flip rate")
        ->capture_default_str();
    gen->add_option("--dropout", gen_cfg.object_dropout_rate, "Per-object dropout rate")->capture_default_str();
    gen->add_option("--bank-size", gen_cfg.descriptor_bank_size,
                    "Shared descriptor bank size (smaller = more cross-scene BoW overlap)")
        ->capture_default_str();
    gen->add_option("--descriptors-per-frame", gen_cfg.descriptors_per_frame, "Descriptors per frame")
        ->capture_default_str();
    std::vector<std::string> revisit_specs;
    gen->add_option("--revisit", revisit_specs,
                    "Revisit interval as start:origin:length (repeatable; default is the benchmark layout)");

    // --- bow-build -------------------------------------------------------------
    auto* bow_build = app.add_subcommand("bow-build", "Build a vocabulary tree from descriptors");
    fs::path bow_desc_path, bow_out_path;
    add_common_options(bow_build, opts);
    bow_build->add_option("--descriptors", bow_desc_path, "Descriptor file")->required();
    bow_build->add_option("--out", bow_out_path, "Vocabulary output file")->required();
    bow_build->add_option("--branching", opts.bow_branching, "Children per node")->capture_default_str();
    bow_build->add_option("--depth", opts.bow_depth, "Tree depth")->capture_default_str();

    // --- train -----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Build the training table and train the forest");
    fs::path train_frames, train_truth, train_model_out = "model.sbf";
    std::optional<fs::path> train_scores, train_desc, train_vocab;
    add_common_options(train_cmd, opts);
    add_pipeline_options(train_cmd, opts);
    add_forest_options(train_cmd, opts);
    train_cmd->add_option("--frames", train_frames, "Frames file")->required();
    train_cmd->add_option("--truth", train_truth, "Ground-truth CSV")->required();
    train_cmd->add_option("--scores", train_scores, "Precomputed pair-score CSV (wins over --descriptors)");
    train_cmd->add_option("--descriptors", train_desc, "Binary descriptor file");
    train_cmd->add_option("--vocab-in", train_vocab, "Existing vocabulary tree for encoding");
    train_cmd->add_option("--out", train_model_out, "Model output file")->capture_default_str();
    train_cmd->add_flag("--unlabeled-negative", opts.unlabeled_negative,
                        "Label walk pairs missing from ground truth as negatives");

    // --- predict ---------------------------------------------------------------
    auto* predict_cmd = app.add_subcommand("predict", "Run the detector over a sequence");
    fs::path pred_frames, pred_model, pred_out = "detections.csv";
    std::optional<fs::path> pred_scores, pred_desc, pred_vocab, pred_truth;
    add_common_options(predict_cmd, opts);
    add_pipeline_options(predict_cmd, opts);
    predict_cmd->add_option("--frames", pred_frames, "Frames file")->required();
    predict_cmd->add_option("--model", pred_model, "Trained model file")->required();
    predict_cmd->add_option("--scores", pred_scores, "Precomputed pair-score CSV");
    predict_cmd->add_option("--descriptors", pred_desc, "Binary descriptor file");
    predict_cmd->add_option("--vocab-in", pred_vocab, "Vocabulary tree for encoding");
    predict_cmd->add_option("--truth", pred_truth, "Optional ground truth for the earliest-detection report");
    predict_cmd->add_option("--out", pred_out, "Detections CSV output")->capture_default_str();
    predict_cmd->add_option("--threshold", opts.threshold, "Vote fraction needed to emit a detection")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    // --- eval ------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Repeated split/train/test evaluation");
    fs::path eval_frames, eval_truth;
    std::optional<fs::path> eval_scores, eval_desc, eval_vocab, eval_out;
    int eval_runs = 50;
    double split_fraction = 0.3;
    uint64_t split_seed = 0;
    bool compare_tree = false;
    add_common_options(eval_cmd, opts);
    add_pipeline_options(eval_cmd, opts);
    add_forest_options(eval_cmd, opts);
    eval_cmd->add_option("--frames", eval_frames, "Frames file")->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground-truth CSV")->required();
    eval_cmd->add_option("--scores", eval_scores, "Precomputed pair-score CSV");
    eval_cmd->add_option("--descriptors", eval_desc, "Binary descriptor file");
    eval_cmd->add_option("--vocab-in", eval_vocab, "Vocabulary tree for encoding");
    eval_cmd->add_option("--runs", eval_runs, "Independent evaluation rounds")->capture_default_str();
    eval_cmd->add_option("--split", split_fraction, "Held-out test fraction")->capture_default_str();
    eval_cmd->add_option("--split-seed", split_seed, "Seed for the splits (default: derived from --seed)");
    eval_cmd->add_option("--out", eval_out, "Write per-run metrics CSV here");
    eval_cmd->add_flag("--compare-tree", compare_tree, "Also evaluate a single decision tree baseline");
    eval_cmd->add_flag("--unlabeled-negative", opts.unlabeled_negative,
                       "Label walk pairs missing from ground truth as negatives");

    // --- ablate ------------------------------------------------------------------
    auto* ablate_cmd = app.add_subcommand("ablate", "Feature-set ablation: cnn-e vs vbow vs both");
    fs::path abl_frames, abl_truth;
    std::optional<fs::path> abl_scores, abl_desc, abl_vocab, abl_out;
    int abl_runs = 5;
    add_common_options(ablate_cmd, opts);
    add_pipeline_options(ablate_cmd, opts);
    add_forest_options(ablate_cmd, opts);
    ablate_cmd->add_option("--frames", abl_frames, "Frames file")->required();
    ablate_cmd->add_option("--truth", abl_truth, "Ground-truth CSV")->required();
    ablate_cmd->add_option("--scores", abl_scores, "Precomputed pair-score CSV");
    ablate_cmd->add_option("--descriptors", abl_desc, "Binary descriptor file");
    ablate_cmd->add_option("--vocab-in", abl_vocab, "Vocabulary tree for encoding");
    ablate_cmd->add_option("--runs", abl_runs, "Seed-aligned rounds per arm")->capture_default_str();
    ablate_cmd->add_option("--split", split_fraction, "Held-out test fraction")->capture_default_str();
    ablate_cmd->add_option("--split-seed", split_seed, "Seed for the splits (default: derived from --seed)");
    ablate_cmd->add_option("--out", abl_out, "Write per-run metrics CSV here");
    ablate_cmd->add_flag("--unlabeled-negative", opts.unlabeled_negative,
                         "Label walk pairs missing from ground truth as negatives");

    // --- importance -----------------------------------------------------------------
    auto* imp_cmd = app.add_subcommand("importance", "Train once and print feature importances");
    fs::path imp_frames, imp_truth;
    std::optional<fs::path> imp_scores, imp_desc, imp_vocab;
    add_common_options(imp_cmd, opts);
    add_pipeline_options(imp_cmd, opts);
    add_forest_options(imp_cmd, opts);
    imp_cmd->add_option("--frames", imp_frames, "Frames file")->required();
    imp_cmd->add_option("--truth", imp_truth, "Ground-truth CSV")->required();
    imp_cmd->add_option("--scores", imp_scores, "Precomputed pair-score CSV");
    imp_cmd->add_option("--descriptors", imp_desc, "Binary descriptor file");
    imp_cmd->add_option("--vocab-in", imp_vocab, "Vocabulary tree for encoding");
    imp_cmd->add_flag("--unlabeled-negative", opts.unlabeled_negative,
                      "Label walk pairs missing from ground truth as negatives");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e);  // --help
            app.exit(e);
            return 1;
        }

        if (gen->parsed()) {
            gen_cfg.seed = opts.seed;
            for (const std::string& spec : revisit_specs) {
                long long start = 0, origin = 0, length = 0;
                if (std::sscanf(spec.c_str(), "%lld:%lld:%lld", &start, &origin, &length) != 3)
                    throw ValidationError("bad --revisit '" + spec + "', expected start:origin:length");
                gen_cfg.loop_revisits.push_back({start, origin, length});
            }
            SyntheticDataset data = generate_synthetic(gen_cfg);
            fs::create_directories(gen_out);
            save_text(gen_out / "frames.jsonl", serialize_frames(data.frames));
            save_descriptors(gen_out / "descriptors.sbd", data.descriptors);
            save_text(gen_out / "truth.csv", serialize_ground_truth(data.truth));
            std::cout << "wrote " << (gen_out / "frames.jsonl").string() << ", descriptors.sbd, truth.csv\n"
                      << "frames: " << data.frames.size() << "\n"
                      << "candidate pairs: " << data.n_pairs << " (" << data.n_positive << " positive, "
                      << data.n_pairs - data.n_positive << " negative)\n";
            return 0;
        }

        if (bow_build->parsed()) {
            auto descriptors = load_descriptors(bow_desc_path);
            VocabTree tree = VocabTree::build(descriptors, opts.bow_branching, opts.bow_depth,
                                              derive_seed(opts.seed, "bow"));
            tree.save_file(bow_out_path);
            std::cout << "vocabulary: " << tree.nodes().size() << " nodes (branching "
                      << opts.bow_branching << ", depth " << opts.bow_depth << ") -> "
                      << bow_out_path.string() << "\n";
            return 0;
        }

        PipelineConfig pipeline_cfg = opts.pipeline_config();

        if (train_cmd->parsed()) {
            auto frames = load_frames(train_frames);
            auto truth = load_ground_truth(train_truth);
            std::optional<VocabTree> tree;
            VbowSource vbow = make_vbow_source(train_scores, train_desc, train_vocab, frames, opts, tree);
            TrainingTable table = build_training_table(frames, vbow, truth, pipeline_cfg);
            if (table.skipped_truth_pairs > 0)
                std::cerr << "warning: " << table.skipped_truth_pairs
                          << " ground-truth pairs were never produced by the walk and were skipped\n";
            ForestModel model = train(table.dataset, opts.forest_hyperparams(), opts.threads);
            save_model_file(model, train_model_out);
            std::cout << "training rows: " << table.dataset.n_rows() << " ("
                      << table.dataset.positive_count() << " positive)\n"
                      << "feature importance:\n";
            print_importance(model);
            std::cout << "model -> " << train_model_out.string() << "\n";
            return 0;
        }

        if (predict_cmd->parsed()) {
            auto frames = load_frames(pred_frames);
            ForestModel model = load_model_file(pred_model);
            std::optional<VocabTree> tree;
            VbowSource vbow = make_vbow_source(pred_scores, pred_desc, pred_vocab, frames, opts, tree);
            std::optional<LoopLabelSet> truth;
            if (pred_truth) truth = load_ground_truth(*pred_truth);
            RunResult result =
                run_sequence(frames, vbow, model, pipeline_cfg, truth ? &*truth : nullptr);
            save_text(pred_out, detections_csv(result.detections));
            std::cout << "frames: " << result.frames_processed << ", pairs scored: " << result.pairs_scored
                      << ", detections: " << result.detections.size() << " -> " << pred_out.string() << "\n";
            for (const LoopRegionReport& region : result.regions) {
                std::cout << "loop region [" << region.first_query << "," << region.last_query << "]: ";
                if (region.earliest_detection)
                    std::cout << "earliest detection at frame " << *region.earliest_detection << "\n";
                else
                    std::cout << "no detection\n";
            }
            return 0;
        }

        // remaining commands share the table-building step
        fs::path frames_path, truth_path;
        std::optional<fs::path> scores_path, desc_path, vocab_path;
        if (eval_cmd->parsed()) {
            frames_path = eval_frames, truth_path = eval_truth;
            scores_path = eval_scores, desc_path = eval_desc, vocab_path = eval_vocab;
        } else if (ablate_cmd->parsed()) {
            frames_path = abl_frames, truth_path = abl_truth;
            scores_path = abl_scores, desc_path = abl_desc, vocab_path = abl_vocab;
        } else {
            frames_path = imp_frames, truth_path = imp_truth;
            scores_path = imp_scores, desc_path = imp_desc, vocab_path = imp_vocab;
        }
        auto frames = load_frames(frames_path);
        auto truth = load_ground_truth(truth_path);
        std::optional<VocabTree> tree;
        VbowSource vbow = make_vbow_source(scores_path, desc_path, vocab_path, frames, opts, tree);
        TrainingTable table = build_training_table(frames, vbow, truth, pipeline_cfg);
        if (table.skipped_truth_pairs > 0)
            std::cerr << "warning: " << table.skipped_truth_pairs
                      << " ground-truth pairs were never produced by the walk and were skipped\n";

        uint64_t effective_split_seed =
            split_seed != 0 ? split_seed : derive_seed(opts.seed, "split-seed");

        if (imp_cmd->parsed()) {
            ForestModel model = train(table.dataset, opts.forest_hyperparams(), opts.threads);
            std::cout << "feature importance (" << table.dataset.n_rows() << " rows, "
                      << table.dataset.positive_count() << " positive):\n";
            print_importance(model);
            return 0;
        }

        if (eval_cmd->parsed()) {
            EvalReport report = repeated_eval(table.dataset, opts.forest_hyperparams(), split_fraction,
                                              opts.threshold, effective_split_seed, eval_runs, opts.threads);
            std::vector<EvalReport> reports = {report};
            if (compare_tree) {
                ForestHyperparams tree_hp = opts.forest_hyperparams();
                tree_hp.n_estimators = 1;
                EvalReport tree_report = repeated_eval(table.dataset, tree_hp, split_fraction, opts.threshold,
                                                       effective_split_seed, eval_runs, opts.threads);
                tree_report.name = "decision-tree";
                reports.push_back(tree_report);
            }
            std::cout << "rows: " << table.dataset.n_rows() << " (" << table.dataset.positive_count()
                      << " positive), test fraction " << split_fraction << ", runs " << eval_runs << "\n"
                      << format_report_table(reports);
            if (eval_out) save_text(*eval_out, format_report_csv(reports));
            return 0;
        }

        // ablate
        AblationResult abl = ablation(table.dataset, opts.forest_hyperparams(), split_fraction,
                                      opts.threshold, effective_split_seed, abl_runs, opts.threads);
        std::vector<EvalReport> reports = {abl.cnn_only, abl.vbow_only, abl.both};
        std::cout << "rows: " << table.dataset.n_rows() << " (" << table.dataset.positive_count()
                  << " positive), test fraction " << split_fraction << ", runs " << abl_runs << "\n"
                  << format_report_table(reports);
        if (abl_out) save_text(*abl_out, format_report_csv(reports));
        return 0;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
