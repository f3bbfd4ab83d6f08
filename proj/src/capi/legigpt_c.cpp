#include "legigpt/legigpt.h"

#include <cmath>
#include <limits>
#include <string>

#include "core/errors.hpp"
#include "core/pipeline.hpp"
#include "core/shap.hpp"
#include "core/tree.hpp"

namespace {

thread_local std::string g_last_error;

lg_status status_of(legigpt::errc code) {
    switch (code) {
        case legigpt::errc::io: return LG_ERR_IO;
        case legigpt::errc::parse: return LG_ERR_PARSE;
        case legigpt::errc::invalid_argument: return LG_ERR_INVALID_ARGUMENT;
        case legigpt::errc::state: return LG_ERR_STATE;
        case legigpt::errc::provider: return LG_ERR_PROVIDER;
        case legigpt::errc::internal: return LG_ERR_INTERNAL;
    }
    return LG_ERR_INTERNAL;
}

template <typename Fn>
lg_status guarded(std::string& error_out, Fn&& fn) {
    try {
        fn();
        error_out.clear();
        return LG_OK;
    } catch (const legigpt::Error& e) {
        error_out = e.what();
        return status_of(e.code());
    } catch (const std::exception& e) {
        error_out = e.what();
        return LG_ERR_INTERNAL;
    } catch (...) {
        error_out = "unknown error";
        return LG_ERR_INTERNAL;
    }
}

}  // namespace

struct lg_pipeline {
    legigpt::pipeline::Pipeline impl;
    std::string last_error;
    std::string output_dir_cache;
};

struct lg_model {
    legigpt::models::TreeEnsemble ensemble;
    std::string last_error;
};

extern "C" {

const char* lg_version(void) { return "legigpt 1.0.0"; }

const char* lg_status_name(lg_status status) {
    switch (status) {
        case LG_OK: return "ok";
        case LG_ERR_IO: return "io";
        case LG_ERR_PARSE: return "parse";
        case LG_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case LG_ERR_STATE: return "state";
        case LG_ERR_PROVIDER: return "provider";
        case LG_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

double lg_missing_value(void) { return std::numeric_limits<double>::quiet_NaN(); }

const char* lg_last_error(void) { return g_last_error.c_str(); }

lg_status lg_pipeline_open(const char* config_path, lg_pipeline** out_pipeline) {
    if (!config_path || !out_pipeline) {
        g_last_error = "null argument";
        return LG_ERR_INVALID_ARGUMENT;
    }
    *out_pipeline = nullptr;
    return guarded(g_last_error, [&] {
        *out_pipeline = new lg_pipeline{
            legigpt::pipeline::Pipeline(std::filesystem::path(config_path)), {}, {}};
    });
}

lg_status lg_pipeline_set(lg_pipeline* pipeline, const char* key, const char* value) {
    if (!pipeline) {
        g_last_error = "null pipeline";
        return LG_ERR_INVALID_ARGUMENT;
    }
    if (!key || !value) {
        pipeline->last_error = "null key or value";
        return LG_ERR_INVALID_ARGUMENT;
    }
    return guarded(pipeline->last_error,
                   [&] { pipeline->impl.set_override(key, value); });
}

lg_status lg_pipeline_run(lg_pipeline* pipeline, const char* command) {
    if (!pipeline) {
        g_last_error = "null pipeline";
        return LG_ERR_INVALID_ARGUMENT;
    }
    if (!command) {
        pipeline->last_error = "null command";
        return LG_ERR_INVALID_ARGUMENT;
    }
    return guarded(pipeline->last_error, [&] { pipeline->impl.run(command); });
}

const char* lg_pipeline_last_error(const lg_pipeline* pipeline) {
    return pipeline ? pipeline->last_error.c_str() : "null pipeline";
}

const char* lg_pipeline_output_dir(const lg_pipeline* pipeline) {
    if (!pipeline) return "";
    auto* mutable_pipeline = const_cast<lg_pipeline*>(pipeline);
    mutable_pipeline->output_dir_cache = pipeline->impl.output_dir().string();
    return mutable_pipeline->output_dir_cache.c_str();
}

void lg_pipeline_close(lg_pipeline* pipeline) { delete pipeline; }

lg_status lg_model_load(const char* path, lg_model** out_model) {
    if (!path || !out_model) {
        g_last_error = "null argument";
        return LG_ERR_INVALID_ARGUMENT;
    }
    *out_model = nullptr;
    return guarded(g_last_error, [&] {
        auto parsed = legigpt::models::load_ensemble(path);
        *out_model = new lg_model{std::move(parsed.ensemble), {}};
    });
}

int32_t lg_model_n_features(const lg_model* model) {
    return model ? static_cast<int32_t>(model->ensemble.n_features) : -1;
}

lg_status lg_model_predict_proba(const lg_model* model, const double* rows,
                                 size_t n_rows, size_t n_features, double* out_proba) {
    if (!model) {
        g_last_error = "null model";
        return LG_ERR_INVALID_ARGUMENT;
    }
    auto* mutable_model = const_cast<lg_model*>(model);
    if (!rows || !out_proba) {
        mutable_model->last_error = "null buffer";
        return LG_ERR_INVALID_ARGUMENT;
    }
    return guarded(mutable_model->last_error, [&] {
        if (n_features != model->ensemble.n_features) {
            throw legigpt::Error(legigpt::errc::invalid_argument,
                                 "row width " + std::to_string(n_features) +
                                     " does not match " +
                                     std::to_string(model->ensemble.n_features) +
                                     " model features");
        }
        for (size_t i = 0; i < n_rows; ++i) {
            out_proba[i] = model->ensemble.predict_proba_row(
                std::span(rows + i * n_features, n_features));
        }
    });
}

lg_status lg_model_shap(const lg_model* model, const double* rows, size_t n_rows,
                        size_t n_features, double* out_attributions,
                        double* out_base_value) {
    if (!model) {
        g_last_error = "null model";
        return LG_ERR_INVALID_ARGUMENT;
    }
    auto* mutable_model = const_cast<lg_model*>(model);
    if (!rows || !out_attributions) {
        mutable_model->last_error = "null buffer";
        return LG_ERR_INVALID_ARGUMENT;
    }
    return guarded(mutable_model->last_error, [&] {
        if (n_features != model->ensemble.n_features) {
            throw legigpt::Error(legigpt::errc::invalid_argument,
                                 "row width " + std::to_string(n_features) +
                                     " does not match " +
                                     std::to_string(model->ensemble.n_features) +
                                     " model features");
        }
        double base = model->ensemble.base_score;
        const double w = model->ensemble.tree_weight();
        for (const auto& tree : model->ensemble.trees) {
            base += w * tree.expected_value();
        }
        for (size_t i = 0; i < n_rows; ++i) {
            const auto attribution = legigpt::shap::tree_shap(
                model->ensemble, std::span(rows + i * n_features, n_features));
            for (size_t j = 0; j < n_features; ++j) {
                out_attributions[i * n_features + j] = attribution.attributions[j];
            }
        }
        if (out_base_value) *out_base_value = base;
    });
}

const char* lg_model_last_error(const lg_model* model) {
    return model ? model->last_error.c_str() : "null model";
}

void lg_model_free(lg_model* model) { delete model; }

}  // extern "C"
