#include "fairrobust/models.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace fairrobust {

namespace {

constexpr const char* kFormat = "fairrobust-model/1";

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) {
            out += '|';
        }
        out += items[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, '|')) {
        out.push_back(item);
    }
    if (!s.empty() && s.back() == '|') {
        out.emplace_back();
    }
    return out;
}

std::string reals(const std::vector<double>& v)
{
    std::vector<std::string> items;
    for (double x : v) {
        items.push_back(real(x));
    }
    return join(items);
}

double to_real(const std::string& s)
{
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) {
        throw DataError("model file: malformed number '" + s + "'");
    }
    return v;
}

std::vector<double> to_reals(const std::string& s)
{
    std::vector<double> out;
    if (s.empty()) {
        return out;
    }
    for (const auto& item : split(s)) {
        out.push_back(to_real(item));
    }
    return out;
}

class KeyValues {
public:
    explicit KeyValues(std::istream& in)
    {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw DataError("model file: expected key=value, got '" + line + "'");
            }
            values_[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }

    const std::string& at(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw DataError("model file: missing key '" + key + "'");
        }
        return it->second;
    }

private:
    std::map<std::string, std::string> values_;
};

void check_token(const std::string& s)
{
    if (s.find_first_of("|\n=") != std::string::npos) {
        throw DataError("model file: name '" + s + "' contains a reserved character");
    }
}

} // namespace

void save_model(const TrainedModel& model, std::ostream& out)
{
    out << "format=" << kFormat << "\n";
    out << "learner=" << to_string(model.learner) << "\n";
    const auto& enc = model.encoder;
    out << "encoder.include_protected=" << (enc.includes_protected() ? 1 : 0) << "\n";
    out << "encoder.blocks=" << enc.blocks().size() << "\n";
    for (std::size_t j = 0; j < enc.blocks().size(); ++j) {
        const auto& b = enc.blocks()[j];
        check_token(b.name);
        std::vector<std::string> fields{b.name, to_string(b.kind)};
        if (b.kind == FeatureKind::continuous) {
            fields.push_back(real(b.mean));
            fields.push_back(real(b.scale));
        } else {
            for (const auto& c : b.categories) {
                check_token(c);
                fields.push_back(c);
            }
        }
        out << "encoder.block." << j << "=" << join(fields) << "\n";
    }
    if (const auto* lin = std::get_if<LinearParams>(&model.params)) {
        out << "linear.intercept=" << real(lin->intercept) << "\n";
        out << "linear.coef=" << reals(std::vector<double>(lin->coef.data(), lin->coef.data() + lin->coef.size())) << "\n";
    } else if (const auto* nb = std::get_if<NaiveBayesParams>(&model.params)) {
        out << "nb.log_prior=" << reals({nb->log_prior[0], nb->log_prior[1]}) << "\n";
        for (std::size_t j = 0; j < nb->blocks.size(); ++j) {
            const auto& b = nb->blocks[j];
            if (enc.blocks()[j].kind == FeatureKind::continuous) {
                out << "nb.block." << j << "=" << reals({b.mean[0], b.var[0], b.mean[1], b.var[1]}) << "\n";
            } else {
                out << "nb.block." << j << ".0=" << reals(b.log_prob[0]) << "\n";
                out << "nb.block." << j << ".1=" << reals(b.log_prob[1]) << "\n";
            }
        }
    } else {
        const auto& tree = std::get<TreeParams>(model.params);
        out << "tree.nodes=" << tree.nodes.size() << "\n";
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            out << "tree.node." << i << "=" << n.feature << "|" << real(n.threshold) << "|" << n.left << "|" << n.right << "|"
                << real(n.value) << "\n";
        }
    }
}

TrainedModel load_model(std::istream& in)
{
    KeyValues kv(in);
    if (kv.at("format") != kFormat) {
        throw DataError("model file: unsupported format '" + kv.at("format") + "'");
    }
    TrainedModel model;
    model.learner = parse_learner(kv.at("learner"));
    const bool include_protected = kv.at("encoder.include_protected") == "1";
    const auto nblocks = static_cast<std::size_t>(std::stoul(kv.at("encoder.blocks")));
    std::vector<EncodedBlock> blocks;
    for (std::size_t j = 0; j < nblocks; ++j) {
        auto fields = split(kv.at("encoder.block." + std::to_string(j)));
        if (fields.size() < 2) {
            throw DataError("model file: malformed encoder block " + std::to_string(j));
        }
        EncodedBlock b;
        b.name = fields[0];
        b.kind = parse_feature_kind(fields[1]);
        if (b.kind == FeatureKind::continuous) {
            if (fields.size() != 4) {
                throw DataError("model file: malformed continuous block " + std::to_string(j));
            }
            b.mean = to_real(fields[2]);
            b.scale = to_real(fields[3]);
        } else {
            b.categories.assign(fields.begin() + 2, fields.end());
        }
        blocks.push_back(std::move(b));
    }
    model.encoder = Encoder::from_blocks(std::move(blocks), include_protected);

    switch (model.learner) {
    case Learner::logreg:
    case Learner::linear_svm:
    case Learner::sgd_linear: {
        LinearParams p;
        p.intercept = to_real(kv.at("linear.intercept"));
        auto coef = to_reals(kv.at("linear.coef"));
        p.coef = Eigen::Map<VectorXd>(coef.data(), static_cast<Index>(coef.size()));
        if (p.coef.size() != model.encoder.width()) {
            throw DataError("model file: coefficient count does not match encoder width");
        }
        model.params = std::move(p);
        break;
    }
    case Learner::naive_bayes: {
        NaiveBayesParams p;
        auto prior = to_reals(kv.at("nb.log_prior"));
        if (prior.size() != 2) {
            throw DataError("model file: nb.log_prior needs two entries");
        }
        p.log_prior = {prior[0], prior[1]};
        for (std::size_t j = 0; j < nblocks; ++j) {
            NaiveBayesParams::Block b;
            const auto key = "nb.block." + std::to_string(j);
            if (model.encoder.blocks()[j].kind == FeatureKind::continuous) {
                auto v = to_reals(kv.at(key));
                if (v.size() != 4) {
                    throw DataError("model file: " + key + " needs four entries");
                }
                b.mean = {v[0], v[2]};
                b.var = {v[1], v[3]};
            } else {
                b.log_prob[0] = to_reals(kv.at(key + ".0"));
                b.log_prob[1] = to_reals(kv.at(key + ".1"));
            }
            p.blocks.push_back(std::move(b));
        }
        model.params = std::move(p);
        break;
    }
    case Learner::decision_tree: {
        TreeParams t;
        const auto n = static_cast<std::size_t>(std::stoul(kv.at("tree.nodes")));
        for (std::size_t i = 0; i < n; ++i) {
            auto f = split(kv.at("tree.node." + std::to_string(i)));
            if (f.size() != 5) {
                throw DataError("model file: malformed tree node " + std::to_string(i));
            }
            t.nodes.push_back(TreeNode{std::stol(f[0]), to_real(f[1]), std::stol(f[2]), std::stol(f[3]), to_real(f[4])});
        }
        if (t.nodes.empty()) {
            throw DataError("model file: tree has no nodes");
        }
        model.params = std::move(t);
        break;
    }
    }
    return model;
}

std::string format_model(const TrainedModel& model)
{
    std::ostringstream out;
    save_model(model, out);
    return out.str();
}

TrainedModel parse_model(const std::string& text)
{
    std::istringstream in(text);
    return load_model(in);
}

} // namespace fairrobust
