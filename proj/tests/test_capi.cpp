#include <doctest.h>
#include <unistd.h>

#include <legigpt/legigpt.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/gbdt.hpp"
#include "core/shap.hpp"
#include "core/tree.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;
using namespace legigpt;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("legigpt_capi_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("version, status names, and the missing sentinel") {
    CHECK(std::string(lg_version()).find("legigpt") == 0);
    CHECK(std::string(lg_status_name(LG_OK)) == "ok");
    CHECK(std::string(lg_status_name(LG_ERR_PROVIDER)) == "provider");
    CHECK(std::isnan(lg_missing_value()));
}

TEST_CASE("model load, predict, and attribution through the C ABI") {
    TempDir dir;
    const auto data = testsupport::xor_dataset(3, 200);
    models::TrainConfig config;
    config.kind = models::ModelKind::gbdt;
    config.growth_policy = models::GrowthPolicy::level_wise;
    config.n_estimators = 15;
    config.learning_rate = 0.3;
    config.max_depth = 3;
    const auto trained = models::train_gbdt(data, config);
    const fs::path model_path = dir.path / "model.txt";
    models::save_ensemble(model_path, trained.ensemble, config.echo());

    lg_model* model = nullptr;
    REQUIRE(lg_model_load(model_path.string().c_str(), &model) == LG_OK);
    REQUIRE(model != nullptr);
    CHECK(lg_model_n_features(model) == 2);

    // probabilities match the in-process model bit for bit
    std::vector<double> rows(data.values.begin(), data.values.begin() + 20 * 2);
    std::vector<double> probs(20);
    REQUIRE(lg_model_predict_proba(model, rows.data(), 20, 2, probs.data()) == LG_OK);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(probs[i] == trained.ensemble.predict_proba_row(data.row(i)));
    }

    // attribution satisfies local accuracy and matches the core path
    std::vector<double> attributions(20 * 2);
    double base = 0.0;
    REQUIRE(lg_model_shap(model, rows.data(), 20, 2, attributions.data(), &base) == LG_OK);
    for (std::size_t i = 0; i < 20; ++i) {
        const auto expected = shap::tree_shap(trained.ensemble, data.row(i));
        CHECK(base == doctest::Approx(expected.base_value));
        double sum = base;
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(attributions[i * 2 + j] == expected.attributions[j]);
            sum += attributions[i * 2 + j];
        }
        CHECK(sum == doctest::Approx(trained.ensemble.raw_output(data.row(i))).epsilon(1e-9));
    }

    // width mismatch surfaces as invalid_argument with a message
    CHECK(lg_model_predict_proba(model, rows.data(), 5, 3, probs.data()) ==
          LG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(lg_model_last_error(model)).find("width") != std::string::npos);

    lg_model_free(model);
}

TEST_CASE("model load failure reports through lg_last_error") {
    lg_model* model = nullptr;
    CHECK(lg_model_load("/nonexistent/model.txt", &model) == LG_ERR_IO);
    CHECK(model == nullptr);
    CHECK(std::string(lg_last_error()).find("nonexistent") != std::string::npos);
    CHECK(lg_model_load(nullptr, &model) == LG_ERR_INVALID_ARGUMENT);
}

TEST_CASE("pipeline over the C ABI: open, override, run, and errors") {
    TempDir dir;
    const fs::path config_path = dir.path / "run.conf";
    {
        std::ofstream out(config_path);
        out << "[synthetic]\n"
               "enabled = true\n"
               "seed = 7\n"
               "n_bills = 60\n"
               "n_legislators = 25\n"
               "transport_fraction = 0.3\n"
               "ideology_clustering = 0.8\n"
               "[provider]\n"
               "mode = mock\n"
               "[output]\n"
               "dir = capi_out\n";
    }

    lg_pipeline* pipe = nullptr;
    REQUIRE(lg_pipeline_open(config_path.string().c_str(), &pipe) == LG_OK);
    REQUIRE(pipe != nullptr);

    const fs::path out = dir.path / "override_out";
    REQUIRE(lg_pipeline_set(pipe, "output.dir", out.string().c_str()) == LG_OK);
    CHECK(std::string(lg_pipeline_output_dir(pipe)) == out.string());

    REQUIRE(lg_pipeline_run(pipe, "ingest") == LG_OK);
    REQUIRE(lg_pipeline_run(pipe, "filter") == LG_OK);
    CHECK(fs::exists(out / "filter/funnel.csv"));

    CHECK(lg_pipeline_run(pipe, "bogus") == LG_ERR_INVALID_ARGUMENT);
    CHECK(std::string(lg_pipeline_last_error(pipe)).find("bogus") != std::string::npos);

    // running a command whose predecessors are missing is a state error
    REQUIRE(lg_pipeline_set(pipe, "output.dir", (dir.path / "fresh").string().c_str()) ==
            LG_OK);
    CHECK(lg_pipeline_run(pipe, "explain") == LG_ERR_STATE);

    lg_pipeline_close(pipe);

    lg_pipeline* bad = nullptr;
    CHECK(lg_pipeline_open("/nonexistent/config.conf", &bad) == LG_ERR_IO);
    CHECK(bad == nullptr);
}
