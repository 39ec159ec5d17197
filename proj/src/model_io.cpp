#include <istream>
#include <ostream>
#include <sstream>

#include "floodsignal/forest.hpp"

namespace floodsignal {

namespace {
constexpr const char* kFormatTag = "floodsignal-forest";
constexpr int kFormatVersion = 1;

std::string next_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() != '#') return line;
    }
    throw InputError("model file ended early");
}

void expect(std::istringstream& is, const std::string& word) {
    std::string got;
    is >> got;
    if (got != word) throw InputError("model file: expected '" + word + "', got '" + got + "'");
}

std::string key_value(std::istringstream& is, const std::string& key) {
    std::string token;
    is >> token;
    if (token.rfind(key + "=", 0) != 0) throw InputError("model file: expected " + key + "=, got '" + token + "'");
    return token.substr(key.size() + 1);
}
}  // namespace

void write_model(std::ostream& out, const Forest& forest, const ArtifactHeader& header) {
    const auto& p = forest.params;
    out << header.line() << '\n';
    out << "format " << kFormatTag << ' ' << kFormatVersion << '\n';
    out << "feature_order_digest " << forest.feature_order_digest << '\n';
    out << "params n_trees=" << p.n_trees << " max_depth=" << p.max_depth << " k_features=" << p.k_features
        << " mtry=" << p.effective_mtry() << " threshold=" << format_number(p.threshold) << " seed=" << p.seed
        << " balanced_bootstrap=" << (p.balanced_bootstrap ? 1 : 0) << '\n';
    out << "selected " << forest.selected_features.size();
    for (auto f : forest.selected_features) out << ' ' << f;
    out << '\n';
    for (const auto& t : forest.trees) {
        out << "tree " << t.nodes.size() << '\n';
        for (const auto& n : t.nodes)
            out << n.feature << ' ' << format_number(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
                << format_number(n.positive_fraction) << '\n';
    }
    out << "end\n";
}

Forest read_model(std::istream& in) {
    if (!in) throw InputError("model stream is not readable");
    Forest forest;
    {
        std::istringstream is(next_line(in));
        expect(is, "format");
        expect(is, kFormatTag);
        int version = 0;
        is >> version;
        if (version != kFormatVersion) throw InputError("unsupported model format version " + std::to_string(version));
    }
    {
        std::istringstream is(next_line(in));
        expect(is, "feature_order_digest");
        is >> forest.feature_order_digest;
    }
    {
        std::istringstream is(next_line(in));
        expect(is, "params");
        auto& p = forest.params;
        p.n_trees = std::stoull(key_value(is, "n_trees"));
        p.max_depth = std::stoull(key_value(is, "max_depth"));
        p.k_features = std::stoull(key_value(is, "k_features"));
        p.mtry = std::stoull(key_value(is, "mtry"));
        p.threshold = parse_number(key_value(is, "threshold"));
        p.seed = std::stoull(key_value(is, "seed"));
        p.balanced_bootstrap = key_value(is, "balanced_bootstrap") == "1";
    }
    {
        std::istringstream is(next_line(in));
        expect(is, "selected");
        std::size_t n = 0;
        is >> n;
        forest.selected_features.resize(n);
        for (auto& f : forest.selected_features)
            if (!(is >> f)) throw InputError("model file: truncated selected feature list");
    }
    forest.trees.reserve(forest.params.n_trees);
    for (std::size_t t = 0; t < forest.params.n_trees; ++t) {
        std::istringstream is(next_line(in));
        expect(is, "tree");
        std::size_t n = 0;
        is >> n;
        Tree tree;
        tree.nodes.resize(n);
        for (auto& node : tree.nodes) {
            std::istringstream ns(next_line(in));
            std::string thr, frac;
            if (!(ns >> node.feature >> thr >> node.left >> node.right >> frac))
                throw InputError("model file: malformed tree node");
            node.threshold = parse_number(thr);
            node.positive_fraction = parse_number(frac);
            if (!node.is_leaf() && (node.left < 0 || node.right < 0 || std::size_t(node.left) >= n ||
                                    std::size_t(node.right) >= n))
                throw InputError("model file: child index out of range");
        }
        if (tree.nodes.empty()) throw InputError("model file: empty tree");
        forest.trees.push_back(std::move(tree));
    }
    if (next_line(in) != "end") throw InputError("model file: missing end marker");
    return forest;
}

Forest read_model_file(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_model(in);
}

}  // namespace floodsignal
