#include "core/manifest.hpp"

#include <fstream>

#include "core/errors.hpp"
#include "core/hash.hpp"

namespace legigpt::pipeline {

namespace {
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kFormat = "legigpt-manifest v1";
}  // namespace

Manifest Manifest::load_or_empty(const std::filesystem::path& output_dir) {
    Manifest m;
    m.output_dir_ = output_dir;
    const auto path = output_dir / kManifestName;
    std::ifstream in(path, std::ios::binary);
    if (!in) return m;
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::parse, path.string() + ": " + e.what());
    }
    if (doc.value("format", "") != kFormat) {
        throw Error(errc::parse, path.string() + ": unknown manifest format");
    }
    for (const auto& [name, body] : doc.at("commands").items()) {
        Entry e;
        e.config_hash = body.value("config_hash", "");
        for (const auto& [k, v] : body.value("inputs", nlohmann::json::object()).items()) {
            e.inputs[k] = v.get<std::string>();
        }
        for (const auto& [k, v] : body.value("outputs", nlohmann::json::object()).items()) {
            e.outputs[k] = v.get<std::string>();
        }
        e.info = body.value("info", nlohmann::json::object());
        m.entries_[name] = std::move(e);
    }
    return m;
}

std::optional<Manifest::Entry> Manifest::command(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Manifest::record(const std::string& name, Entry entry) {
    entries_[name] = std::move(entry);
}

bool Manifest::up_to_date(const std::string& name, const std::string& config_hash,
                          const std::map<std::string, std::string>& inputs) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) return false;
    const Entry& e = it->second;
    if (e.config_hash != config_hash || e.inputs != inputs) return false;
    for (const auto& [rel, digest] : e.outputs) {
        const auto path = output_dir_ / rel;
        if (!std::filesystem::exists(path)) return false;
        if (hash::sha256_file(path) != digest) return false;
    }
    return true;
}

nlohmann::json Manifest::to_json() const {
    nlohmann::json commands = nlohmann::json::object();
    for (const auto& [name, e] : entries_) {
        commands[name] = {
            {"config_hash", e.config_hash},
            {"inputs", e.inputs},
            {"outputs", e.outputs},
            {"info", e.info},
        };
    }
    return nlohmann::json{{"format", kFormat}, {"commands", commands}};
}

void Manifest::save() const {
    const auto path = output_dir_ / kManifestName;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << to_json().dump(2) << "\n";
    if (!out) throw Error(errc::io, "write failed for '" + path.string() + "'");
}

}  // namespace legigpt::pipeline
