#include "core/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "core/corpus.hpp"
#include "core/csv.hpp"
#include "core/cv.hpp"
#include "core/dataset.hpp"
#include "core/errors.hpp"
#include "core/features.hpp"
#include "core/filter.hpp"
#include "core/forest.hpp"
#include "core/gbdt.hpp"
#include "core/hash.hpp"
#include "core/manifest.hpp"
#include "core/metrics.hpp"
#include "core/mlp.hpp"
#include "core/prompts.hpp"
#include "core/provider.hpp"
#include "core/shap.hpp"
#include "core/synthetic.hpp"
#include "core/transcript.hpp"
#include "core/tree.hpp"

namespace fs = std::filesystem;

namespace legigpt::pipeline {

namespace {

constexpr const char* kCorpusBills = "corpus/bills.csv";
constexpr const char* kCorpusLegislators = "corpus/legislators.csv";
constexpr const char* kCorpusConstituencies = "corpus/constituencies.csv";
constexpr const char* kGroundTruth = "corpus/ground_truth_transport_ids.csv";
constexpr const char* kFilteredBills = "filter/filtered_bills.csv";
constexpr const char* kFeatureMatrix = "features/feature_matrix.csv";

/// Rejects concurrent runs against one output directory. A stale lock
/// (after a crash) must be removed by hand; the error says where it is.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw Error(errc::state,
                        "output directory is in use (lock file '" + path_.string() +
                            "' exists; remove it if no other run is active)");
        }
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] const auto written = ::write(fd_, pid.data(), pid.size());
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

void log_line(const std::string& message) {
    std::cout << "[legigpt] " << message << "\n";
}

struct OutputSet {
    fs::path root;
    std::map<std::string, std::string> files;

    void add(const std::string& rel) {
        files[rel] = hash::sha256_file(root / rel);
    }
};

void write_table(const fs::path& root, const std::string& rel, const csv::Table& table,
                 OutputSet& outputs) {
    const fs::path path = root / rel;
    fs::create_directories(path.parent_path());
    csv::write_file(path, table);
    outputs.add(rel);
}

void write_text(const fs::path& root, const std::string& rel, const std::string& text,
                OutputSet& outputs) {
    const fs::path path = root / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(errc::io, "write failed for '" + path.string() + "'");
    outputs.add(rel);
}

struct ProviderBundle {
    std::unique_ptr<filter::Transcript> transcript;
    std::unique_ptr<filter::CompletionProvider> base;
    std::unique_ptr<filter::CompletionProvider> wrapper;

    filter::CompletionProvider& provider() { return wrapper ? *wrapper : *base; }
};

struct TrainedSlot {
    ModelSpec spec;
    models::TrainConfig best_config;
    models::AnyModel model;
    metrics::MetricsReport test_metrics;
    metrics::ConfusionMatrix test_confusion;
    models::RunAggregate aggregate;
};

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

Pipeline::Pipeline(const fs::path& config_path)
    : config_(KeyValueConfig::parse_file(config_path)),
      base_dir_(config_path.has_parent_path() ? config_path.parent_path()
                                              : fs::path(".")) {}

Pipeline::Pipeline(KeyValueConfig config, fs::path base_dir)
    : config_(std::move(config)), base_dir_(std::move(base_dir)) {}

void Pipeline::set_override(const std::string& key, const std::string& value) {
    config_.set(key, value);
}

fs::path Pipeline::resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : base_dir_ / p;
}

fs::path Pipeline::output_dir() const {
    return resolve(config_.get_or("output.dir", "out"));
}

std::string Pipeline::section_hash(const std::vector<std::string>& sections) const {
    return hash::sha256_hex(config_.canonical_subset(sections));
}

void Pipeline::require_done(const std::string& command) const {
    const Manifest manifest = Manifest::load_or_empty(output_dir());
    const auto entry = manifest.command(command);
    if (!entry) {
        throw Error(errc::state, "command '" + command + "' has not produced outputs in '" +
                                     output_dir().string() + "' yet; run it first");
    }
    for (const auto& [rel, digest] : entry->outputs) {
        const fs::path path = output_dir() / rel;
        if (!fs::exists(path)) {
            throw Error(errc::state, "predecessor output missing: " + path.string());
        }
        if (hash::sha256_file(path) != digest) {
            throw Error(errc::state,
                        "predecessor output modified since it was produced: " +
                            path.string());
        }
    }
}

void Pipeline::run(const std::string& command) {
    const fs::path out = output_dir();
    fs::create_directories(out);
    DirLock lock(out);

    if (command == "ingest") cmd_ingest();
    else if (command == "filter") cmd_filter();
    else if (command == "features") cmd_features();
    else if (command == "train") cmd_train();
    else if (command == "explain") cmd_explain();
    else if (command == "report") cmd_report();
    else {
        throw Error(errc::invalid_argument,
                    "unknown command '" + command +
                        "' (expected ingest|filter|features|train|explain|report)");
    }
}

void Pipeline::cmd_ingest() {
    const fs::path out = output_dir();
    Manifest manifest = Manifest::load_or_empty(out);
    const std::string config_hash = section_hash({"paths", "synthetic"});
    const bool synthetic = config_.get_bool("synthetic.enabled", false);

    std::map<std::string, std::string> inputs;
    if (!synthetic) {
        for (const char* key : {"paths.bills", "paths.legislators", "paths.constituencies"}) {
            const auto value = config_.get(key);
            if (!value) {
                throw Error(errc::invalid_argument,
                            std::string("config key '") + key +
                                "' is required when synthetic.enabled is false");
            }
            inputs[*value] = hash::sha256_file(resolve(*value));
        }
    }
    if (manifest.up_to_date("ingest", config_hash, inputs)) {
        log_line("ingest: cache hit (outputs up to date)");
        return;
    }

    std::vector<corpus::Bill> bills;
    std::vector<corpus::Legislator> legislators;
    std::vector<corpus::Constituency> constituencies;
    std::vector<std::string> ground_truth;

    if (synthetic) {
        corpus::SyntheticParams params;
        params.seed = static_cast<std::uint64_t>(config_.get_int("synthetic.seed", 7));
        params.n_bills = static_cast<std::size_t>(config_.get_int("synthetic.n_bills", 400));
        params.n_legislators =
            static_cast<std::size_t>(config_.get_int("synthetic.n_legislators", 150));
        params.transport_fraction = config_.get_double("synthetic.transport_fraction", 0.3);
        params.ideology_clustering =
            config_.get_double("synthetic.ideology_clustering", 0.9);
        corpus::SyntheticCorpus generated = corpus::generate_synthetic_corpus(params);
        bills = std::move(generated.bills);
        legislators = std::move(generated.legislators);
        constituencies = std::move(generated.constituencies);
        ground_truth = std::move(generated.transport_bill_ids);
    } else {
        bills = corpus::load_bills(resolve(*config_.get("paths.bills")));
        legislators = corpus::load_legislators(resolve(*config_.get("paths.legislators")));
        constituencies =
            corpus::load_constituencies(resolve(*config_.get("paths.constituencies")));
    }

    const corpus::CorpusValidationReport report =
        corpus::validate_corpus(bills, legislators, constituencies);

    OutputSet outputs{out, {}};
    fs::create_directories(out / "corpus");
    corpus::write_bills(out / kCorpusBills, bills);
    outputs.add(kCorpusBills);
    corpus::write_legislators(out / kCorpusLegislators, legislators);
    outputs.add(kCorpusLegislators);
    corpus::write_constituencies(out / kCorpusConstituencies, constituencies);
    outputs.add(kCorpusConstituencies);
    if (synthetic) {
        csv::Table t;
        t.header = {"bill_id"};
        for (const auto& id : ground_truth) t.rows.push_back({id});
        write_table(out, kGroundTruth, t, outputs);
    }

    write_text(out, "corpus/validation_report.txt", corpus::report_text(report), outputs);
    {
        csv::Table t;
        t.header = {"severity", "table", "locator", "rule"};
        for (const auto& f : report.errors) {
            t.rows.push_back({"error", f.table, f.locator, f.rule});
        }
        for (const auto& f : report.warnings) {
            t.rows.push_back({"warning", f.table, f.locator, f.rule});
        }
        write_table(out, "corpus/validation_report.csv", t, outputs);
    }

    Manifest::Entry entry;
    entry.config_hash = config_hash;
    entry.inputs = inputs;
    entry.outputs = outputs.files;
    entry.info = {
        {"admissible", report.admissible()},
        {"bills", report.bill_count},
        {"legislators", report.legislator_count},
        {"constituencies", report.constituency_count},
        {"errors", report.errors.size()},
        {"warnings", report.warnings.size()},
        {"synthetic", synthetic},
        {"ground_truth_transport_bills", ground_truth.size()},
    };
    manifest.record("ingest", std::move(entry));
    manifest.save();
    log_line("ingest: " + std::to_string(bills.size()) + " bills, " +
             std::to_string(legislators.size()) + " legislators, corpus " +
             (report.admissible() ? "admissible" : "NOT admissible"));
}

void Pipeline::cmd_filter() {
    const fs::path out = output_dir();
    require_done("ingest");
    Manifest manifest = Manifest::load_or_empty(out);
    if (!manifest.command("ingest")->info.value("admissible", false)) {
        throw Error(errc::state, "corpus is not admissible; fix validation errors first");
    }

    const std::string config_hash = section_hash({"provider", "filter"});
    std::map<std::string, std::string> inputs;
    for (const auto& [rel, digest] : manifest.command("ingest")->outputs) {
        inputs[rel] = digest;
    }
    if (manifest.up_to_date("filter", config_hash, inputs)) {
        log_line("filter: cache hit (outputs up to date)");
        return;
    }

    std::vector<corpus::Bill> bills = corpus::load_bills(out / kCorpusBills);

    const ProviderMode mode =
        parse_provider_mode(config_.get_or("provider.mode", "mock"));
    const bool offline = config_.get_bool("provider.offline", false);
    if (mode == ProviderMode::remote && offline) {
        throw Error(errc::state, "provider mode 'remote' conflicts with --offline");
    }

    fs::create_directories(out / "cache");
    const fs::path transcript_path = out / "cache" / "transcript.jsonl";

    ProviderBundle bundle;
    bundle.transcript = std::make_unique<filter::Transcript>(transcript_path);
    switch (mode) {
        case ProviderMode::mock:
            bundle.base = std::make_unique<filter::MockProvider>();
            bundle.wrapper = std::make_unique<filter::RecordingProvider>(
                *bundle.base, *bundle.transcript, /*wall_clock=*/false);
            break;
        case ProviderMode::replay:
            if (bundle.transcript->size() == 0) {
                throw Error(errc::state, "replay mode needs an existing transcript at '" +
                                             transcript_path.string() + "'");
            }
            bundle.base = std::make_unique<filter::ReplayProvider>(*bundle.transcript);
            break;
        case ProviderMode::remote: {
            filter::RemoteConfig remote;
            remote.base_url = config_.get_or("provider.base_url", "");
            remote.path = config_.get_or("provider.endpoint_path", "/v1/chat/completions");
            remote.model = config_.get_or("provider.model", "gpt-4");
            remote.timeout_seconds =
                static_cast<int>(config_.get_int("provider.timeout_seconds", 60));
            const char* key = std::getenv("LEGIGPT_API_KEY");
            remote.api_key = key ? key : "";
            bundle.base = std::make_unique<filter::RemoteProvider>(std::move(remote));
            bundle.wrapper = std::make_unique<filter::RecordingProvider>(
                *bundle.base, *bundle.transcript, /*wall_clock=*/true);
            break;
        }
    }
    filter::CompletionProvider& provider = bundle.provider();

    filter::FilterOptions options;
    options.keyword_batch_size =
        static_cast<int>(config_.get_int("filter.keyword_batch", 20));
    options.judge_translated = config_.get_bool("filter.judge_translated", true);
    options.concurrency = static_cast<int>(config_.get_int("provider.concurrency", 1));
    options.max_attempts = static_cast<int>(config_.get_int("provider.max_attempts", 3));
    options.backoff_seconds =
        mode == ProviderMode::remote ? config_.get_double("provider.backoff_seconds", 1.0)
                                     : 0.0;

    filter::PromptSet prompts;
    if (const auto dir = config_.get("filter.prompt_dir")) {
        prompts = filter::PromptSet::load(resolve(*dir));
    } else {
        prompts = filter::PromptSet::defaults();
    }

    const std::size_t initial_count = bills.size();

    if (config_.get_bool("filter.translate", true)) {
        filter::translate_summaries(bills, provider, prompts, options);
    } else {
        filter::skip_translation(bills);
    }

    OutputSet outputs{out, {}};
    fs::create_directories(out / "filter");
    corpus::write_bills(out / "filter/translated_bills.csv", bills);
    outputs.add("filter/translated_bills.csv");

    const filter::KeywordLexicon lexicon =
        filter::extract_keywords(bills, provider, prompts, options);
    write_table(out, "filter/lexicon.csv", filter::lexicon_table(lexicon), outputs);
    if (!lexicon.empty()) {
        write_table(out, "filter/keyword_frequencies.csv",
                    filter::keyword_frequency_csv(filter::keyword_frequency_table(lexicon)),
                    outputs);
    }

    filter::FilterStageResult stage1;
    if (config_.get_bool("filter.provider_keyword_stage", false)) {
        filter::KeywordProviderAudit audit = filter::keyword_select_with_provider(
            bills, lexicon, provider, prompts, options);
        stage1 = std::move(audit.result);
        csv::Table t;
        t.header = {"bill_id", "disagreement"};
        for (const auto& id : audit.provider_only) t.rows.push_back({id, "provider_only"});
        for (const auto& id : audit.missed_by_provider) {
            t.rows.push_back({id, "missed_by_provider"});
        }
        write_table(out, "filter/keyword_provider_audit.csv", t, outputs);
    } else {
        stage1 = filter::keyword_select(bills, lexicon);
    }
    const filter::FilterStageResult stage2 =
        filter::sentence_select(stage1, bills, provider, prompts, options);
    const filter::FilterStageResult stage3 =
        filter::context_select(stage2, bills, provider, prompts, options);

    write_table(out, "filter/stage_keyword.csv", filter::stage_result_table(stage1), outputs);
    write_table(out, "filter/stage_sentence.csv", filter::stage_result_table(stage2), outputs);
    write_table(out, "filter/stage_context.csv", filter::stage_result_table(stage3), outputs);

    {
        std::unordered_set<std::string> retained(stage3.retained_bill_ids.begin(),
                                                 stage3.retained_bill_ids.end());
        std::vector<corpus::Bill> filtered;
        for (const auto& b : bills) {
            if (retained.count(b.bill_id)) filtered.push_back(b);
        }
        corpus::write_bills(out / kFilteredBills, filtered);
        outputs.add(kFilteredBills);
    }

    const filter::FunnelReport funnel = filter::funnel_report(
        initial_count, {{"keyword", stage1.retained_bill_ids.size()},
                        {"sentence", stage2.retained_bill_ids.size()},
                        {"context", stage3.retained_bill_ids.size()}});
    write_table(out, "filter/funnel.csv", filter::funnel_table(funnel), outputs);
    write_text(out, "filter/funnel.txt", filter::funnel_text(funnel), outputs);

    const double audit_fraction = config_.get_double("filter.audit_fraction", 0.10);
    const auto audit_seed =
        static_cast<std::uint64_t>(config_.get_int("filter.audit_seed", 7));
    const struct {
        const filter::FilterStageResult& result;
        const char* rel;
    } audits[] = {
        {stage1, "filter/audit_keyword.csv"},
        {stage2, "filter/audit_sentence.csv"},
        {stage3, "filter/audit_context.csv"},
    };
    for (const auto& a : audits) {
        const filter::AuditSample sample =
            filter::draw_audit_sample(a.result, audit_fraction, audit_seed);
        write_table(out, a.rel, filter::audit_worksheet(sample, a.result, bills), outputs);
    }

    Manifest::Entry entry;
    entry.config_hash = config_hash;
    entry.inputs = inputs;
    entry.outputs = outputs.files;
    entry.info = {
        {"provider_mode", to_string(mode)},
        {"initial", initial_count},
        {"keyword", stage1.retained_bill_ids.size()},
        {"sentence", stage2.retained_bill_ids.size()},
        {"context", stage3.retained_bill_ids.size()},
        {"total_reduction_pct", funnel.total_reduction_pct},
        {"lexicon_size", lexicon.entries.size()},
        {"transcript_records", bundle.transcript->size()},
    };
    manifest.record("filter", std::move(entry));
    manifest.save();
    log_line("filter: " + std::to_string(initial_count) + " -> " +
             std::to_string(stage1.retained_bill_ids.size()) + " -> " +
             std::to_string(stage2.retained_bill_ids.size()) + " -> " +
             std::to_string(stage3.retained_bill_ids.size()) + " bills");
}

void Pipeline::cmd_features() {
    const fs::path out = output_dir();
    require_done("ingest");
    require_done("filter");
    Manifest manifest = Manifest::load_or_empty(out);

    const std::string config_hash = section_hash({"features"});
    std::map<std::string, std::string> inputs;
    inputs[kFilteredBills] = manifest.command("filter")->outputs.at(kFilteredBills);
    inputs[kCorpusLegislators] = manifest.command("ingest")->outputs.at(kCorpusLegislators);
    inputs[kCorpusConstituencies] =
        manifest.command("ingest")->outputs.at(kCorpusConstituencies);
    if (manifest.up_to_date("features", config_hash, inputs)) {
        log_line("features: cache hit (outputs up to date)");
        return;
    }

    const auto filtered = corpus::load_bills(out / kFilteredBills);
    const auto legislators = corpus::load_legislators(out / kCorpusLegislators);
    const auto constituencies = corpus::load_constituencies(out / kCorpusConstituencies);

    const auto records = features::build_participation(filtered, legislators);
    const bool include_approval = config_.get_bool("features.include_approval", true);

    OutputSet outputs{out, {}};
    write_table(out, "features/participation.csv", features::participation_table(records),
                outputs);

    models::LabeledMatrix matrix;
    if (!records.empty()) {
        matrix = features::build_feature_matrix(records, filtered, legislators,
                                                constituencies, include_approval);
    } else {
        matrix.column_names = features::feature_names();
        if (!include_approval) matrix.column_names.pop_back();
        matrix.n_cols = matrix.column_names.size();
    }
    fs::create_directories(out / "features");
    models::write_matrix(out / kFeatureMatrix, matrix);
    outputs.add(kFeatureMatrix);

    const features::DescriptiveStats stats =
        features::describe(records, filtered, legislators, constituencies);
    write_table(out, "features/descriptive_stats.csv", features::stats_table(stats), outputs);
    write_text(out, "features/descriptive_stats.txt", features::stats_text(stats), outputs);

    Manifest::Entry entry;
    entry.config_hash = config_hash;
    entry.inputs = inputs;
    entry.outputs = outputs.files;
    entry.info = {
        {"participation_records", records.size()},
        {"matrix_rows", matrix.n_rows()},
        {"matrix_cols", matrix.n_cols},
        {"include_approval", include_approval},
    };
    manifest.record("features", std::move(entry));
    manifest.save();
    log_line("features: " + std::to_string(records.size()) + " participation records, " +
             std::to_string(matrix.n_rows()) + "x" + std::to_string(matrix.n_cols) +
             " matrix");
}

void Pipeline::cmd_train() {
    const fs::path out = output_dir();
    require_done("features");
    Manifest manifest = Manifest::load_or_empty(out);

    const std::string config_hash = section_hash({"split", "train", "grid"});
    std::map<std::string, std::string> inputs;
    inputs[kFeatureMatrix] = manifest.command("features")->outputs.at(kFeatureMatrix);
    if (manifest.up_to_date("train", config_hash, inputs)) {
        log_line("train: cache hit (outputs up to date)");
        return;
    }

    const models::LabeledMatrix matrix = models::read_matrix(out / kFeatureMatrix);
    const double test_fraction = config_.get_double("split.test_fraction", 0.15);
    const auto split_seed = static_cast<std::uint64_t>(config_.get_int("split.seed", 42));
    const int cv_folds = static_cast<int>(config_.get_int("train.cv_folds", 5));
    const auto cv_seed = static_cast<std::uint64_t>(config_.get_int("train.cv_seed", 42));
    const int n_runs = static_cast<int>(config_.get_int("train.runs", 10));
    const auto run_base_seed =
        static_cast<std::uint64_t>(config_.get_int("train.run_base_seed", 42));
    const auto train_seed = static_cast<std::uint64_t>(config_.get_int("train.seed", 42));

    if (matrix.n_rows() < 20) {
        throw Error(errc::state, "feature matrix has only " +
                                     std::to_string(matrix.n_rows()) +
                                     " rows; too few to train and evaluate");
    }

    const models::SplitResult split =
        models::split_train_test(matrix, test_fraction, split_seed);

    OutputSet outputs{out, {}};
    {
        csv::Table t;
        t.header = {"row_index", "role"};
        std::vector<std::string> roles(matrix.n_rows(), "train");
        for (const std::size_t i : split.test_indices) roles[i] = "test";
        for (std::size_t i = 0; i < roles.size(); ++i) {
            t.rows.push_back({std::to_string(i), roles[i]});
        }
        write_table(out, "train/split_indices.csv", t, outputs);
    }

    const auto model_names =
        config_.get_list("train.models", {"mlp", "rf", "gbdt_leaf", "gbdt_level"});

    std::vector<TrainedSlot> slots;
    csv::Table metrics_table;
    metrics_table.header = {"model",      "precision", "precision_ci95",
                            "recall",     "recall_ci95", "f1",
                            "f1_ci95",    "precision_fmt", "recall_fmt",
                            "f1_fmt",     "test_precision", "test_recall",
                            "test_f1"};
    csv::Table runs_table;
    runs_table.header = {"model", "run", "seed", "precision", "recall", "f1"};

    for (const auto& name : model_names) {
        const ModelSpec spec = parse_model_spec(name);
        const auto grid = expand_grid(config_, spec, train_seed);
        const models::CvResult cv =
            models::kfold_grid_search(split.train, grid, cv_folds, cv_seed);

        {
            csv::Table t;
            t.header = {"config", "mean_f1"};
            for (int f = 0; f < cv_folds; ++f) t.header.push_back("fold" + std::to_string(f));
            for (std::size_t c = 0; c < cv.grid.size(); ++c) {
                std::vector<std::string> row{cv.grid[c].echo(),
                                             cv.mean_f1[c] ? csv::format_double(*cv.mean_f1[c])
                                                           : "undefined"};
                for (const auto& f1 : cv.fold_f1[c]) {
                    row.push_back(f1 ? csv::format_double(*f1) : "undefined");
                }
                t.rows.push_back(std::move(row));
            }
            write_table(out, "train/cv_" + name + ".csv", t, outputs);
        }

        TrainedSlot slot{spec, cv.best(), {}, {}, {}, {}};
        slot.model = models::train_model(split.train, slot.best_config);

        const std::string model_rel = "train/model_" + name + ".txt";
        if (slot.model.is_tree()) {
            models::save_ensemble(out / model_rel, slot.model.ensemble(),
                                  slot.best_config.echo());
        } else {
            models::save_mlp(out / model_rel, slot.model.mlp(), slot.best_config.echo());
        }
        outputs.add(model_rel);

        if (!slot.model.loss_trace.empty()) {
            csv::Table t;
            t.header = {"round", "loss"};
            for (std::size_t i = 0; i < slot.model.loss_trace.size(); ++i) {
                t.rows.push_back(
                    {std::to_string(i), csv::format_double(slot.model.loss_trace[i])});
            }
            write_table(out, "train/loss_" + name + ".csv", t, outputs);
        }

        const auto pred = slot.model.classify(split.test);
        slot.test_confusion = metrics::confusion(split.test.labels, pred);
        slot.test_metrics = metrics::report(slot.test_confusion);
        {
            csv::Table t;
            t.header = {"", "actual_conservative_1", "actual_progressive_0"};
            t.rows.push_back({"predicted_conservative_1",
                              std::to_string(slot.test_confusion.tp),
                              std::to_string(slot.test_confusion.fp)});
            t.rows.push_back({"predicted_progressive_0",
                              std::to_string(slot.test_confusion.fn),
                              std::to_string(slot.test_confusion.tn)});
            write_table(out, "train/confusion_" + name + ".csv", t, outputs);
        }

        slot.aggregate = models::repeated_evaluate(matrix, slot.best_config, n_runs,
                                                   run_base_seed, test_fraction);
        for (std::size_t r = 0; r < slot.aggregate.runs.size(); ++r) {
            const auto& m = slot.aggregate.runs[r];
            runs_table.rows.push_back(
                {name, std::to_string(r), std::to_string(slot.aggregate.seeds[r]),
                 metrics::format_metric(m.precision), metrics::format_metric(m.recall),
                 metrics::format_metric(m.f1)});
        }
        const auto& agg = slot.aggregate.aggregated;
        metrics_table.rows.push_back({
            name,
            csv::format_double(agg.precision.mean),
            csv::format_double(agg.precision.ci_half_width),
            csv::format_double(agg.recall.mean),
            csv::format_double(agg.recall.ci_half_width),
            csv::format_double(agg.f1.mean),
            csv::format_double(agg.f1.ci_half_width),
            metrics::format_aggregate(agg.precision),
            metrics::format_aggregate(agg.recall),
            metrics::format_aggregate(agg.f1),
            metrics::format_metric(slot.test_metrics.precision),
            metrics::format_metric(slot.test_metrics.recall),
            metrics::format_metric(slot.test_metrics.f1),
        });
        log_line("train: " + name + " F1 " + metrics::format_aggregate(agg.f1));
        slots.push_back(std::move(slot));
    }

    write_table(out, "train/metrics.csv", metrics_table, outputs);
    write_table(out, "train/runs.csv", runs_table, outputs);

    auto best_of = [&](bool trees_only) -> std::string {
        std::string best_name;
        double best_f1 = -1.0;
        for (const auto& slot : slots) {
            if (trees_only && slot.spec.kind == models::ModelKind::mlp) continue;
            const double f1 = slot.aggregate.aggregated.f1.mean;
            if (f1 > best_f1) {
                best_f1 = f1;
                best_name = slot.spec.name;
            }
        }
        return best_name;
    };
    const std::string best_model = best_of(false);
    const std::string best_tree = best_of(true);
    write_text(out, "train/best_model.txt", best_model + "\n", outputs);
    write_text(out, "train/best_tree_model.txt", best_tree + "\n", outputs);

    Manifest::Entry entry;
    entry.config_hash = config_hash;
    entry.inputs = inputs;
    entry.outputs = outputs.files;
    nlohmann::json model_info = nlohmann::json::object();
    for (const auto& slot : slots) {
        model_info[slot.spec.name] = {
            {"config", slot.best_config.echo()},
            {"f1_mean", slot.aggregate.aggregated.f1.mean},
            {"f1_ci95", slot.aggregate.aggregated.f1.ci_half_width},
            {"precision_mean", slot.aggregate.aggregated.precision.mean},
            {"recall_mean", slot.aggregate.aggregated.recall.mean},
        };
    }
    entry.info = {
        {"best_model", best_model},
        {"best_tree_model", best_tree},
        {"train_rows", split.train.n_rows()},
        {"test_rows", split.test.n_rows()},
        {"models", model_info},
    };
    manifest.record("train", std::move(entry));
    manifest.save();
    log_line("train: best model " + best_model + ", best tree model " + best_tree);
}

void Pipeline::cmd_explain() {
    const fs::path out = output_dir();
    require_done("features");
    require_done("train");
    Manifest manifest = Manifest::load_or_empty(out);

    std::string model_name = config_.get_or("attribution.model", "");
    if (model_name.empty()) {
        model_name = manifest.command("train")->info.value("best_tree_model", "");
    }
    if (model_name.empty()) {
        throw Error(errc::state, "no tree model available for attribution");
    }
    const ModelSpec spec = parse_model_spec(model_name);
    if (spec.kind == models::ModelKind::mlp) {
        throw Error(errc::invalid_argument,
                    "attribution.model must name a tree-based model (rf, gbdt_leaf, "
                    "gbdt_level)");
    }

    const std::string config_hash = section_hash({"attribution", "split"});
    const std::string model_rel = "train/model_" + model_name + ".txt";
    std::map<std::string, std::string> inputs;
    inputs[kFeatureMatrix] = manifest.command("features")->outputs.at(kFeatureMatrix);
    inputs[model_rel] = manifest.command("train")->outputs.at(model_rel);
    if (manifest.up_to_date("explain", config_hash, inputs)) {
        log_line("explain: cache hit (outputs up to date)");
        return;
    }

    const models::LabeledMatrix matrix = models::read_matrix(out / kFeatureMatrix);
    const models::ParsedEnsemble parsed = models::load_ensemble(out / model_rel);

    const std::string dataset = config_.get_or("attribution.dataset", "test");
    models::LabeledMatrix rows;
    if (dataset == "all") {
        rows = matrix;
    } else {
        const double test_fraction = config_.get_double("split.test_fraction", 0.15);
        const auto split_seed =
            static_cast<std::uint64_t>(config_.get_int("split.seed", 42));
        models::SplitResult split =
            models::split_train_test(matrix, test_fraction, split_seed);
        if (dataset == "test") rows = std::move(split.test);
        else if (dataset == "train") rows = std::move(split.train);
        else {
            throw Error(errc::invalid_argument,
                        "attribution.dataset must be test, train, or all");
        }
    }

    const shap::ShapMatrix shap_values = shap::shap_matrix(parsed.ensemble, rows);

    OutputSet outputs{out, {}};
    {
        csv::Table t;
        t.header = {"bill_id", "legislator_id"};
        for (const auto& name : rows.column_names) t.header.push_back(name);
        for (std::size_t i = 0; i < shap_values.n_rows(); ++i) {
            std::vector<std::string> row{shap_values.row_ids[i].first,
                                         shap_values.row_ids[i].second};
            for (const double v : shap_values.row(i)) row.push_back(csv::format_double(v));
            t.rows.push_back(std::move(row));
        }
        write_table(out, "explain/shap_values.csv", t, outputs);
    }

    const auto ranking = shap::importance_ranking(shap_values, rows.column_names);
    {
        csv::Table t;
        t.header = {"rank", "feature", "mean_abs_shap"};
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            t.rows.push_back({std::to_string(i + 1), ranking[i].name,
                              csv::format_double(ranking[i].mean_abs_shap)});
        }
        write_table(out, "explain/shap_importance.csv", t, outputs);
    }

    {
        const auto corr = shap::shap_correlation(shap_values);
        csv::Table t;
        t.header = {"feature"};
        for (const auto& name : rows.column_names) t.header.push_back(name);
        for (std::size_t i = 0; i < corr.n; ++i) {
            std::vector<std::string> row{rows.column_names[i]};
            for (std::size_t j = 0; j < corr.n; ++j) {
                row.push_back(corr.is_defined(i, j) ? csv::format_double(corr.at(i, j))
                                                    : "undefined");
            }
            t.rows.push_back(std::move(row));
        }
        write_table(out, "explain/shap_correlation.csv", t, outputs);
    }

    const auto dependence_names = config_.get_list(
        "attribution.dependence_features",
        {"pct_conservative_sponsors", "pct_progressive_sponsors",
         "n_conservative_sponsors", "n_progressive_sponsors"});
    for (const auto& feature : dependence_names) {
        std::size_t index = rows.column_names.size();
        for (std::size_t j = 0; j < rows.column_names.size(); ++j) {
            if (rows.column_names[j] == feature) {
                index = j;
                break;
            }
        }
        if (index == rows.column_names.size()) {
            throw Error(errc::invalid_argument,
                        "attribution.dependence_features: unknown feature '" + feature +
                            "'");
        }
        const auto series = shap::dependence_series(shap_values, rows, index);
        csv::Table t;
        t.header = {"bill_id", "legislator_id", "feature_value", "shap_value", "missing"};
        for (const auto& p : series.points) {
            t.rows.push_back({p.bill_id, p.legislator_id,
                              p.missing ? "" : csv::format_double(p.feature_value),
                              csv::format_double(p.shap_value),
                              p.missing ? "true" : "false"});
        }
        write_table(out, "explain/dependence_" + feature + ".csv", t, outputs);
    }

    Manifest::Entry entry;
    entry.config_hash = config_hash;
    entry.inputs = inputs;
    entry.outputs = outputs.files;
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.size()); ++i) {
        top.push_back({{"feature", ranking[i].name},
                       {"mean_abs_shap", ranking[i].mean_abs_shap}});
    }
    entry.info = {
        {"model", model_name},
        {"dataset", dataset},
        {"rows", shap_values.n_rows()},
        {"base_value", shap_values.base_value},
        {"top_features", top},
    };
    manifest.record("explain", std::move(entry));
    manifest.save();
    log_line("explain: " + std::to_string(shap_values.n_rows()) + " rows attributed with " +
             model_name);
}

void Pipeline::cmd_report() {
    const fs::path out = output_dir();
    for (const char* cmd : {"ingest", "filter", "features", "train", "explain"}) {
        require_done(cmd);
    }
    Manifest manifest = Manifest::load_or_empty(out);

    OutputSet outputs{out, {}};
    nlohmann::json doc = manifest.to_json();
    doc["report"] = {
        {"funnel", manifest.command("filter")->info},
        {"features", manifest.command("features")->info},
        {"models", manifest.command("train")->info},
        {"attribution", manifest.command("explain")->info},
    };
    write_text(out, "report/run_report.json", doc.dump(2) + "\n", outputs);

    std::ostringstream text;
    const auto& fi = manifest.command("filter")->info;
    text << "pipeline run summary\n";
    text << "====================\n";
    text << "corpus: " << manifest.command("ingest")->info.value("bills", 0U) << " bills\n";
    text << "funnel: " << fi.value("initial", 0U) << " -> " << fi.value("keyword", 0U)
         << " -> " << fi.value("sentence", 0U) << " -> " << fi.value("context", 0U)
         << " (reduction " << fi.value("total_reduction_pct", 0.0) << "%)\n";
    text << "participation records: "
         << manifest.command("features")->info.value("participation_records", 0U) << "\n";
    const auto& ti = manifest.command("train")->info;
    text << "best model: " << ti.value("best_model", std::string("?")) << "\n";
    for (const auto& [name, info] : ti.at("models").items()) {
        text << "  " << name << ": F1 " << fmt3(info.value("f1_mean", 0.0)) << " ± "
             << fmt3(info.value("f1_ci95", 0.0)) << "\n";
    }
    const auto& ei = manifest.command("explain")->info;
    text << "attribution model: " << ei.value("model", std::string("?")) << " over "
         << ei.value("dataset", std::string("?")) << " rows=" << ei.value("rows", 0U)
         << "\n";
    text << "top features by mean |SHAP|:\n";
    for (const auto& item : ei.at("top_features")) {
        text << "  " << item.value("feature", std::string("?")) << " ("
             << csv::format_double(item.value("mean_abs_shap", 0.0)) << ")\n";
    }
    write_text(out, "report/run_report.txt", text.str(), outputs);

    Manifest::Entry entry;
    entry.config_hash = section_hash({"output"});
    entry.outputs = outputs.files;
    entry.info = {{"commands", 5}};
    manifest.record("report", std::move(entry));
    manifest.save();
    log_line("report: written to " + (out / "report").string());
}

}  // namespace legigpt::pipeline
