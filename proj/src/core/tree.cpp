#include "core/tree.hpp"

#include <fstream>
#include <sstream>

#include "core/csv.hpp"
#include "core/errors.hpp"

namespace legigpt::models {

double Tree::predict(std::span<const double> row) const {
    int at = 0;
    while (!nodes[at].is_leaf()) {
        const TreeNode& n = nodes[at];
        const double v = row[static_cast<std::size_t>(n.feature)];
        if (is_missing(v)) {
            at = n.default_left ? n.left : n.right;
        } else {
            at = v < n.threshold ? n.left : n.right;
        }
    }
    return nodes[at].value;
}

double Tree::expected_value() const {
    // cover-weighted average over leaves, computed by the same proportional
    // weighting the attribution code uses
    struct Walker {
        const std::vector<TreeNode>& nodes;
        double walk(int at, double weight) const {
            const TreeNode& n = nodes[at];
            if (n.is_leaf()) return weight * n.value;
            const double denom = n.cover;
            return walk(n.left, weight * nodes[n.left].cover / denom) +
                   walk(n.right, weight * nodes[n.right].cover / denom);
        }
    };
    return Walker{nodes}.walk(0, 1.0);
}

std::size_t Tree::leaf_count() const {
    std::size_t count = 0;
    for (const auto& n : nodes) {
        if (n.is_leaf()) ++count;
    }
    return count;
}

std::size_t Tree::max_depth() const {
    struct Walker {
        const std::vector<TreeNode>& nodes;
        std::size_t walk(int at) const {
            const TreeNode& n = nodes[at];
            if (n.is_leaf()) return 0;
            return 1 + std::max(walk(n.left), walk(n.right));
        }
    };
    return Walker{nodes}.walk(0);
}

const char* to_string(Objective o) {
    return o == Objective::logistic_boost ? "logistic_boost" : "classification_forest";
}

double TreeEnsemble::raw_output(std::span<const double> row) const {
    double sum = base_score;
    const double w = tree_weight();
    for (const auto& t : trees) sum += w * t.predict(row);
    return sum;
}

double TreeEnsemble::predict_proba_row(std::span<const double> row) const {
    const double raw = raw_output(row);
    return objective == Objective::logistic_boost ? sigmoid(raw) : raw;
}

std::vector<double> TreeEnsemble::predict_proba(const std::vector<double>& rows,
                                                std::size_t n_cols) const {
    if (n_cols != n_features) {
        throw Error(errc::invalid_argument,
                    "predict: row width " + std::to_string(n_cols) + " does not match " +
                        std::to_string(n_features) + " model features");
    }
    if (n_cols == 0 || rows.size() % n_cols != 0) {
        throw Error(errc::invalid_argument, "predict: ragged row buffer");
    }
    const std::size_t n = rows.size() / n_cols;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = predict_proba_row(std::span(rows.data() + i * n_cols, n_cols));
    }
    return out;
}

std::vector<int> TreeEnsemble::classify(const std::vector<double>& rows,
                                        std::size_t n_cols, double threshold) const {
    const auto probs = predict_proba(rows, n_cols);
    std::vector<int> labels(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        labels[i] = probs[i] >= threshold ? 1 : 0;
    }
    return labels;
}

namespace {

constexpr const char* kFormatTag = "legigpt-ensemble v1";

[[noreturn]] void bad_model(const std::string& what) {
    throw Error(errc::parse, "model parse: " + what);
}

}  // namespace

std::string serialize_ensemble(const TreeEnsemble& ensemble,
                               const std::string& config_echo) {
    std::ostringstream out;
    out << kFormatTag << "\n";
    out << "objective " << to_string(ensemble.objective) << "\n";
    out << "n_features " << ensemble.n_features << "\n";
    out << "base_score " << csv::format_double(ensemble.base_score) << "\n";
    std::string echo = config_echo;
    for (auto& c : echo) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    out << "config " << echo << "\n";
    out << "n_trees " << ensemble.trees.size() << "\n";
    for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
        const auto& tree = ensemble.trees[t];
        out << "tree " << t << " nodes " << tree.nodes.size() << "\n";
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            if (n.is_leaf()) {
                out << i << " leaf value " << csv::format_double(n.value) << " cover "
                    << csv::format_double(n.cover) << "\n";
            } else {
                out << i << " split feature " << n.feature << " threshold "
                    << csv::format_double(n.threshold) << " default "
                    << (n.default_left ? "left" : "right") << " left " << n.left
                    << " right " << n.right << " cover " << csv::format_double(n.cover)
                    << "\n";
            }
        }
    }
    out << "end\n";
    return out.str();
}

ParsedEnsemble parse_ensemble(std::string_view content) {
    std::istringstream in{std::string(content)};
    std::string line;
    if (!std::getline(in, line) || line != kFormatTag) {
        bad_model("missing format header");
    }
    ParsedEnsemble out;
    TreeEnsemble& e = out.ensemble;
    std::string word;

    auto expect_key = [&](std::istringstream& ls, const char* key) {
        ls >> word;
        if (word != key) bad_model(std::string("expected '") + key + "', got '" + word + "'");
    };

    {
        std::getline(in, line);
        std::istringstream ls(line);
        expect_key(ls, "objective");
        ls >> word;
        if (word == "logistic_boost") e.objective = Objective::logistic_boost;
        else if (word == "classification_forest") e.objective = Objective::classification_forest;
        else bad_model("unknown objective '" + word + "'");
    }
    {
        std::getline(in, line);
        std::istringstream ls(line);
        expect_key(ls, "n_features");
        ls >> e.n_features;
    }
    {
        std::getline(in, line);
        std::istringstream ls(line);
        expect_key(ls, "base_score");
        ls >> e.base_score;
    }
    {
        std::getline(in, line);
        if (!line.starts_with("config")) bad_model("expected config line");
        out.config_echo = line.size() > 7 ? line.substr(7) : "";
    }
    std::size_t n_trees = 0;
    {
        std::getline(in, line);
        std::istringstream ls(line);
        expect_key(ls, "n_trees");
        ls >> n_trees;
    }
    e.trees.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::getline(in, line);
        std::istringstream ls(line);
        std::size_t tree_index = 0;
        std::size_t n_nodes = 0;
        expect_key(ls, "tree");
        ls >> tree_index;
        expect_key(ls, "nodes");
        ls >> n_nodes;
        if (tree_index != t) bad_model("tree index out of order");
        e.trees[t].nodes.resize(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            if (!std::getline(in, line)) bad_model("truncated tree block");
            std::istringstream ns(line);
            std::size_t node_index = 0;
            ns >> node_index >> word;
            if (node_index != i) bad_model("node index out of order");
            TreeNode& n = e.trees[t].nodes[i];
            if (word == "leaf") {
                expect_key(ns, "value");
                ns >> n.value;
                expect_key(ns, "cover");
                ns >> n.cover;
                n.feature = -1;
            } else if (word == "split") {
                expect_key(ns, "feature");
                ns >> n.feature;
                expect_key(ns, "threshold");
                ns >> n.threshold;
                expect_key(ns, "default");
                ns >> word;
                n.default_left = word == "left";
                expect_key(ns, "left");
                ns >> n.left;
                expect_key(ns, "right");
                ns >> n.right;
                expect_key(ns, "cover");
                ns >> n.cover;
                if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= e.n_features) {
                    bad_model("split feature out of range");
                }
                if (n.left < 0 || n.right < 0 ||
                    static_cast<std::size_t>(n.left) >= n_nodes ||
                    static_cast<std::size_t>(n.right) >= n_nodes) {
                    bad_model("child index out of range");
                }
            } else {
                bad_model("unknown node kind '" + word + "'");
            }
            if (!ns) bad_model("malformed node line: " + line);
        }
    }
    std::getline(in, line);
    if (line != "end") bad_model("missing end marker");
    return out;
}

void save_ensemble(const std::filesystem::path& path, const TreeEnsemble& ensemble,
                   const std::string& config_echo) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << serialize_ensemble(ensemble, config_echo);
    if (!out) throw Error(errc::io, "write failed for '" + path.string() + "'");
}

ParsedEnsemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_ensemble(buf.str());
}

}  // namespace legigpt::models
