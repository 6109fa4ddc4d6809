#include "steinselect/serialize.hpp"

#include <sstream>

namespace steinselect {

namespace {

Json vector_json(const VectorXd& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json index_json(const std::vector<Index>& v) {
    Json out = Json::array();
    for (Index i : v) out.push_back(i);
    return out;
}

Json ids_json(const std::vector<Index>& v, const std::vector<std::string>& ids) {
    Json out = Json::array();
    for (Index i : v) out.push_back(ids.at(static_cast<std::size_t>(i)));
    return out;
}

Json matrix_json(const MatrixXd& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
    return rows;
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing JSON field \"") + key + "\"");
    return j.at(key);
}

VectorXd vector_from(const Json& j, const char* key) {
    const Json& arr = field(j, key);
    if (!arr.is_array()) throw SchemaError(std::string("field \"") + key + "\" must be an array");
    VectorXd v(static_cast<Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Index>(i)) = arr[i].get<double>();
    return v;
}

MatrixXd matrix_from(const Json& j, const char* key) {
    const Json& rows = field(j, key);
    if (!rows.is_array() || rows.empty()) throw SchemaError(std::string("field \"") + key + "\" must be a nonempty array");
    const std::size_t cols = rows[0].size();
    MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw SchemaError(std::string("ragged matrix in \"") + key + "\"");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c].get<double>();
    }
    return m;
}

Json rule_json(const SelectionRule& rule) {
    if (const auto* t = std::get_if<ThresholdRule>(&rule)) return {{"type", "threshold"}, {"kappa", t->kappa}};
    return {{"type", "top_s"}, {"s", std::get<TopSRule>(rule).s}};
}

}  // namespace

Json selection_to_json(const SelectionResult& r, const SteinMoment& m, const std::vector<std::string>& ids) {
    Json j;
    j["selected"] = ids_json(r.selected, ids);
    j["selected_indices"] = index_json(r.selected);
    j["scores"] = vector_json(r.column_scores);
    j["k1"] = r.k1_used;
    j["rule"] = rule_json(r.rule);
    const Index count = std::min<Index>(2 * r.k1_used, m.eigenvalues.size());
    j["eigenvalues"] = vector_json(m.eigenvalues.head(count));
    j["warning"] = r.empty_selection ? Json("empty selection: no column score reached kappa") : Json(nullptr);
    return j;
}

std::vector<std::string> selected_ids_from_json(const Json& j) {
    const Json& sel = field(j, "selected");
    if (!sel.is_array()) throw SchemaError("field \"selected\" must be an array");
    std::vector<std::string> out;
    for (const auto& v : sel) {
        if (v.is_string()) out.push_back(v.get<std::string>());
        else if (v.is_number_integer()) out.push_back(std::to_string(v.get<long long>()));
        else throw SchemaError("selected ids must be strings or integers");
    }
    return out;
}

Json trace_to_json(const ScreeningTrace& t, const std::vector<std::string>& ids) {
    Json j;
    j["zeta"] = t.zeta;
    j["p0"] = t.p0;
    j["initial_size"] = t.initial.size();
    Json rounds = Json::array();
    std::size_t before = t.initial.size();
    for (const auto& r : t.rounds) {
        rounds.push_back({{"size_before", before},
                          {"size_after", r.kept.size()},
                          {"kept", ids_json(r.kept, ids)},
                          {"kept_indices", index_json(r.kept)},
                          {"diagonal", vector_json(r.diagonal)}});
        before = r.kept.size();
    }
    j["rounds"] = std::move(rounds);
    j["final"] = ids_json(t.final_indices, ids);
    j["final_indices"] = index_json(t.final_indices);
    return j;
}

Json spec_to_json(const SimSpec& spec) {
    return {{"case", static_cast<int>(spec.sim_case)},
            {"n", spec.n},
            {"p", spec.p},
            {"s", spec.s},
            {"k1", spec.k1},
            {"rho", spec.rho},
            {"design", spec.design.name()},
            {"noise_sd", spec.noise_sd},
            {"seed", spec.seed}};
}

Json truth_to_json(const GroundTruth& truth, const SimSpec& spec, const std::vector<std::string>& ids) {
    Json j;
    j["spec"] = spec_to_json(spec);
    j["support"] = ids_json(truth.support, ids);
    j["support_indices"] = index_json(truth.support);
    j["w1"] = matrix_json(truth.w1);
    j["a"] = vector_json(truth.a);
    return j;
}

Json eigengap_to_json(const EigengapReport& r) {
    return {{"abs_eigenvalues", vector_json(r.abs_eigenvalues)},
            {"gaps", vector_json(r.gaps)},
            {"ratios", vector_json(r.ratios)},
            {"k_max", r.k_max},
            {"k1_hat", r.k1_hat},
            {"gamma_reg", r.gamma_reg},
            {"rule", to_string(r.rule)}};
}

Json bic_to_json(const BicReport& r) {
    Json cands = Json::array();
    for (const auto& c : r.candidates) cands.push_back({{"s", c.s}, {"train_mse", c.train_mse}, {"bic", c.bic}});
    return {{"candidates", std::move(cands)},
            {"s_hat", r.s_hat},
            {"n", r.n},
            {"lambda_per_feature", r.lambda_per_feature},
            {"lambda_rule", r.lambda_rule}};
}

std::string eigengap_to_csv(const EigengapReport& r) {
    std::ostringstream out;
    out << "k,ratio\n";
    for (Index i = 0; i < r.ratios.size(); ++i) out << i + 2 << ',' << format_double(r.ratios(i)) << '\n';
    return out.str();
}

std::string bic_to_csv(const BicReport& r) {
    std::ostringstream out;
    out << "s,bic\n";
    for (const auto& c : r.candidates) out << c.s << ',' << format_double(c.bic) << '\n';
    return out.str();
}

Json refit_config_to_json(const RefitConfig& cfg) {
    return {{"hidden", index_json(cfg.hidden)},
            {"activation", "relu"},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"optimizer", to_string(cfg.optimizer)},
            {"momentum", cfg.momentum},
            {"seed", cfg.seed},
            {"standardize_inputs", cfg.standardize_inputs}};
}

RefitConfig refit_config_from_json(const Json& j) {
    RefitConfig cfg;
    try {
        cfg.hidden = field(j, "hidden").get<std::vector<Index>>();
        cfg.epochs = field(j, "epochs").get<int>();
        cfg.batch_size = field(j, "batch_size").get<Index>();
        cfg.learning_rate = field(j, "learning_rate").get<double>();
        cfg.optimizer = parse_optimizer(field(j, "optimizer").get<std::string>());
        cfg.momentum = field(j, "momentum").get<double>();
        cfg.seed = field(j, "seed").get<std::uint64_t>();
        cfg.standardize_inputs = field(j, "standardize_inputs").get<bool>();
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad refit config: ") + e.what());
    }
    return cfg;
}

Json model_to_json(const RefitModel& m, const RefitConfig& cfg) {
    Json layers = Json::array();
    for (const auto& l : m.net.layers()) layers.push_back({{"weights", matrix_json(l.weights)}, {"bias", vector_json(l.bias)}});
    Json j;
    j["format"] = "steinselect-mlp";
    j["version"] = 1;
    j["config"] = refit_config_to_json(cfg);
    j["feature_ids"] = m.feature_ids;
    j["feature_indices"] = index_json(m.feature_indices);
    j["training_p"] = m.training_p;
    j["input_mean"] = vector_json(m.input_mean);
    j["input_scale"] = vector_json(m.input_scale);
    j["target_mean"] = m.target_mean;
    j["target_scale"] = m.target_scale;
    j["layers"] = std::move(layers);
    j["loss_curve"] = m.loss_curve;
    j["initial_train_mse"] = m.initial_train_mse;
    j["final_train_mse"] = m.final_train_mse;
    return j;
}

RefitModel model_from_json(const Json& j) {
    if (!j.is_object() || j.value("format", "") != "steinselect-mlp") throw SchemaError("not a steinselect model document");
    if (j.value("version", 0) != 1) throw SchemaError("unsupported model version");
    RefitModel m;
    try {
        m.feature_ids = field(j, "feature_ids").get<std::vector<std::string>>();
        m.feature_indices = field(j, "feature_indices").get<std::vector<Index>>();
        m.training_p = field(j, "training_p").get<Index>();
        m.input_mean = vector_from(j, "input_mean");
        m.input_scale = vector_from(j, "input_scale");
        m.target_mean = field(j, "target_mean").get<double>();
        m.target_scale = field(j, "target_scale").get<double>();
        std::vector<DenseLayer> layers;
        for (const auto& l : field(j, "layers")) layers.push_back({matrix_from(l, "weights"), vector_from(l, "bias")});
        m.net = Mlp(std::move(layers));
        m.loss_curve = field(j, "loss_curve").get<std::vector<double>>();
        m.initial_train_mse = field(j, "initial_train_mse").get<double>();
        m.final_train_mse = field(j, "final_train_mse").get<double>();
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad model document: ") + e.what());
    }
    const auto k = static_cast<Index>(m.feature_ids.size());
    if (m.feature_indices.size() != m.feature_ids.size() || m.input_mean.size() != k || m.input_scale.size() != k ||
        m.net.input_size() != k) {
        throw SchemaError("model document sizes disagree with its feature list");
    }
    return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace steinselect
