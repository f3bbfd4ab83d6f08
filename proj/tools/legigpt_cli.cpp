// legigpt command-line driver. Wraps the C ABI in liblegigpt; everything
// below talks to the pipeline exclusively through legigpt/legigpt.h.

#include <legigpt/legigpt.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct PipelineCloser {
    void operator()(lg_pipeline* p) const { lg_pipeline_close(p); }
};
using PipelineHandle = std::unique_ptr<lg_pipeline, PipelineCloser>;

int fail(const std::string& command, lg_status status, const std::string& message) {
    const nlohmann::json record{
        {"tool", "legigpt"},
        {"command", command},
        {"status", lg_status_name(status)},
        {"message", message},
    };
    std::fprintf(stderr, "%s\n", record.dump().c_str());
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"legigpt - staged bill filtering, party-affiliation models, and "
                 "attribution reports"};
    app.require_subcommand(1);

    std::string config_path = "legigpt.conf";
    std::string output_dir;
    std::string provider;
    long long seed = -1;
    bool offline = false;

    app.add_option("--config", config_path, "run configuration file")
        ->capture_default_str();
    app.add_option("--output", output_dir, "output directory (overrides output.dir)");
    app.add_option("--provider", provider, "provider mode: remote, replay, or mock")
        ->check(CLI::IsMember({"remote", "replay", "mock"}));
    app.add_option("--seed", seed, "override synthetic.seed and split.seed");
    app.add_flag("--offline", offline, "forbid network use (rejects remote mode)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "load or generate the corpus and validate it"},
        {"filter", "run the staged keyword/sentence/context filtering"},
        {"features", "build participation records and the feature matrix"},
        {"train", "grid-search, train, and evaluate the four models"},
        {"explain", "compute attribution tables for the selected tree model"},
        {"report", "consolidate the run manifest and summaries"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help);
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    lg_pipeline* raw = nullptr;
    if (const lg_status st = lg_pipeline_open(config_path.c_str(), &raw); st != LG_OK) {
        return fail(command, st, lg_last_error());
    }
    PipelineHandle pipeline(raw);

    auto apply = [&](const char* key, const std::string& value) -> lg_status {
        return lg_pipeline_set(pipeline.get(), key, value.c_str());
    };
    lg_status st = LG_OK;
    if (!output_dir.empty()) st = apply("output.dir", output_dir);
    if (st == LG_OK && !provider.empty()) st = apply("provider.mode", provider);
    if (st == LG_OK && seed >= 0) {
        st = apply("synthetic.seed", std::to_string(seed));
        if (st == LG_OK) st = apply("split.seed", std::to_string(seed));
    }
    if (st == LG_OK && offline) st = apply("provider.offline", "true");
    if (st != LG_OK) {
        return fail(command, st, lg_pipeline_last_error(pipeline.get()));
    }

    st = lg_pipeline_run(pipeline.get(), command.c_str());
    if (st != LG_OK) {
        return fail(command, st, lg_pipeline_last_error(pipeline.get()));
    }
    return 0;
}
