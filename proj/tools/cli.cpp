#include "cli.hpp"

#include "steinselect/serialize.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace steinselect::cli {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path);
    f << text;
    if (!f) throw ValidationError("failed writing " + path);
}

Json read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot open " + path);
    try {
        return Json::parse(f);
    } catch (const Json::exception& e) {
        throw ParseError(path + ": " + e.what(), 0, "");
    }
}

long long parse_integer(const std::string& text, const std::string& name) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(name + " must be an integer or \"auto\", got \"" + text + "\"");
    return v;
}

double parse_real(const std::string& text, const std::string& name) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(name + " must be a number or \"auto\", got \"" + text + "\"");
    return v;
}

std::optional<Index> auto_or_int(const std::string& text, const std::string& name) {
    if (text == "auto") return std::nullopt;
    return static_cast<Index>(parse_integer(text, name));
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// "1..10" or "1,2,5".
std::vector<Index> parse_index_list(const std::string& text, const std::string& name) {
    std::vector<Index> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const auto lo = parse_integer(text.substr(0, dots), name);
        const auto hi = parse_integer(text.substr(dots + 2), name);
        if (lo > hi) throw ConfigError(name + " range \"" + text + "\" is empty");
        for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<Index>(v));
        return out;
    }
    for (const auto& item : split(text, ',')) out.push_back(static_cast<Index>(parse_integer(item, name)));
    return out;
}

std::vector<double> parse_real_list(const std::string& text, const std::string& name) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_real(item, name));
    return out;
}

int default_jobs() {
    if (const char* env = std::getenv("STEINSELECT_JOBS")) {
        try {
            return std::max(1, static_cast<int>(parse_integer(env, "STEINSELECT_JOBS")));
        } catch (const ConfigError&) {
            return 1;
        }
    }
    return 1;
}

struct RefitFlags {
    std::string hidden = "64,32";
    int epochs = 300;
    Index batch_size = 64;
    double learning_rate = 1e-3;
    std::string optimizer = "sgd";
    double momentum = 0.9;
    bool no_standardize = false;

    void add(CLI::App* app) {
        app->add_option("--hidden", hidden, "Hidden layer widths, comma separated")->capture_default_str();
        app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        app->add_option("--batch-size", batch_size, "Mini-batch size")->capture_default_str();
        app->add_option("--lr", learning_rate, "Learning rate")->capture_default_str();
        app->add_option("--optimizer", optimizer, "sgd (momentum) or adam")->capture_default_str();
        app->add_option("--momentum", momentum, "Momentum for sgd")->capture_default_str();
        app->add_flag("--no-standardize", no_standardize, "Feed raw inputs to the network");
    }

    RefitConfig build(std::uint64_t seed) const {
        RefitConfig cfg;
        cfg.hidden = parse_index_list(hidden, "--hidden");
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.optimizer = parse_optimizer(optimizer);
        cfg.momentum = momentum;
        cfg.seed = seed;
        cfg.standardize_inputs = !no_standardize;
        cfg.validate();
        return cfg;
    }
};

/// Flags shared by select, screen and benchmark.
struct SelectionFlags {
    std::string k1 = "auto";
    std::string s = "auto";
    std::optional<double> kappa;
    std::string k_max = "auto";
    double gamma_rel = 1e-8;
    std::string k1_rule = "ratio-minus-one";
    std::string s_grid = "1..10";
    double bic_lambda = 100.0;
    std::string zeta = "auto";
    std::string p0 = "auto";
    int max_rounds = 64;
    std::uint64_t seed = 0;
    RefitFlags refit;

    void add(CLI::App* app, bool screening) {
        app->add_option("--k1", k1, "Index rank: integer or auto (eigengap ratio)")->capture_default_str();
        app->add_option("--s", s, "Features to keep: integer or auto (BIC)")->capture_default_str();
        app->add_option("--kappa", kappa, "Column-score threshold (replaces --s)");
        app->add_option("--k-max", k_max, "Largest k scanned by the eigengap ratio")->capture_default_str();
        app->add_option("--gamma-rel", gamma_rel, "Relative regularizer of the eigengap ratio")->capture_default_str();
        app->add_option("--k1-rule", k1_rule, "ratio-minus-one or ratio")->capture_default_str();
        app->add_option("--s-grid", s_grid, "Candidate s values for BIC, e.g. 1..10 or 2,4,6")->capture_default_str();
        app->add_option("--bic-lambda", bic_lambda, "BIC penalty per feature")->capture_default_str();
        app->add_option("--seed", seed, "Master seed")->capture_default_str();
        if (screening) {
            app->add_option("--zeta", zeta, "Per-round keep fraction in (0,1) or auto")->capture_default_str();
            app->add_option("--p0", p0, "Target dimension or auto")->capture_default_str();
            app->add_option("--max-rounds", max_rounds, "Screening round cap")->capture_default_str();
        }
        refit.add(app);
    }

    PipelineConfig build(Method method, CovarianceSource::Kind cov) const {
        PipelineConfig cfg;
        cfg.method = method;
        cfg.covariance = cov;
        cfg.k1 = auto_or_int(k1, "--k1");
        cfg.k_max = auto_or_int(k_max, "--k-max");
        cfg.gamma_rel = gamma_rel;
        cfg.k1_rule = parse_k1_rule(k1_rule);
        cfg.kappa = kappa;
        if (!kappa) cfg.s = auto_or_int(s, "--s");
        else if (s != "auto") throw ConfigError("give either --kappa or --s, not both");
        cfg.s_grid = parse_index_list(s_grid, "--s-grid");
        cfg.bic_lambda = bic_lambda;
        if (zeta == "auto" && p0 == "auto") {
            cfg.screening.auto_defaults = true;
        } else {
            if (zeta == "auto" || p0 == "auto") throw ConfigError("--zeta and --p0 must both be numbers or both auto");
            cfg.screening.auto_defaults = false;
            cfg.screening.zeta = parse_real(zeta, "--zeta");
            cfg.screening.p0 = static_cast<Index>(parse_integer(p0, "--p0"));
        }
        cfg.screening.max_rounds = max_rounds;
        cfg.refit = refit.build(derive_seed(seed, "refit"));
        cfg.validate();
        return cfg;
    }
};

struct CovarianceChoice {
    CovarianceSource::Kind kind = CovarianceSource::Kind::sample;
    std::string known_path;
};

CovarianceChoice parse_cov(const std::string& text) {
    if (text.rfind("known:", 0) == 0) {
        const std::string path = text.substr(6);
        if (path.empty()) throw ConfigError("--cov known: needs a file path");
        return {CovarianceSource::Kind::known, path};
    }
    return {parse_covariance_kind(text), {}};
}

struct SelectCommand {
    std::string data;
    std::string response = "y";
    std::string cov = "sample";
    std::string out = "selection.json";
    std::string trace = "trace.json";
    std::string k1_report;
    std::string k1_csv;
    std::string bic_report;
    std::string bic_csv;
    int jobs = 1;
    SelectionFlags flags;

    void add(CLI::App* app, bool screening) {
        app->add_option("data", data, "Input CSV")->required();
        app->add_option("--response", response, "Response column")->capture_default_str();
        app->add_option("--cov", cov, "sample | ledoit-wolf | auto | known:<sigma.csv>")->capture_default_str();
        app->add_option("--out", out, "Selection JSON output")->capture_default_str();
        if (screening) app->add_option("--trace", trace, "Screening trace JSON output")->capture_default_str();
        app->add_option("--k1-report", k1_report, "Eigengap report JSON output (automatic k1)");
        app->add_option("--k1-csv", k1_csv, "Eigengap ratio CSV output (automatic k1)");
        app->add_option("--bic-report", bic_report, "BIC report JSON output (automatic s)");
        app->add_option("--bic-csv", bic_csv, "BIC CSV output (automatic s)");
        app->add_option("--jobs", jobs, "Parallel BIC trainings (default $STEINSELECT_JOBS or 1)");
        flags.add(app, screening);
    }

    int execute(bool screening, std::ostream& out_stream) {
        const CovarianceChoice choice = parse_cov(cov);
        PipelineConfig cfg = flags.build(screening ? Method::screened : Method::plain, choice.kind);
        cfg.jobs = std::max(1, jobs);
        const Dataset d = load_csv(data, response);
        std::optional<CovarianceModel> known;
        if (choice.kind == CovarianceSource::Kind::known) known = known_covariance(load_matrix_csv(choice.known_path));

        PipelineOutput result;
        try {
            result = run_selection(d, cfg, known);
        } catch (const IterationLimitError& e) {
            if (screening) write_text(trace, dump(trace_to_json(e.trace(), d.feature_ids())));
            throw;
        }

        std::vector<std::string> moment_ids;
        for (Index j : result.moment_indices) moment_ids.push_back(d.feature_ids()[static_cast<std::size_t>(j)]);
        write_text(out, dump(selection_to_json(result.selection, result.moment, d.feature_ids())));
        if (screening && result.trace) write_text(trace, dump(trace_to_json(*result.trace, d.feature_ids())));
        if (result.k1_report) {
            if (!k1_report.empty()) write_text(k1_report, dump(eigengap_to_json(*result.k1_report)));
            if (!k1_csv.empty()) write_text(k1_csv, eigengap_to_csv(*result.k1_report));
        }
        if (result.bic_report) {
            if (!bic_report.empty()) write_text(bic_report, dump(bic_to_json(*result.bic_report)));
            if (!bic_csv.empty()) write_text(bic_csv, bic_to_csv(*result.bic_report));
        }

        out_stream << "n=" << d.n() << " p=" << d.p() << " covariance=" << to_string(result.covariance_method);
        if (result.trace) {
            out_stream << " screening_rounds=" << result.trace->rounds.size()
                       << " survivors=" << result.trace->final_indices.size();
        }
        out_stream << "\nk1=" << result.selection.k1_used << (result.k1_report ? " (eigengap ratio)" : "")
                   << " rule=" << describe(result.selection.rule) << (result.bic_report ? " (BIC)" : "") << "\nselected:";
        for (Index j : result.selection.selected) out_stream << ' ' << d.feature_ids()[static_cast<std::size_t>(j)];
        out_stream << '\n';
        if (result.selection.empty_selection) out_stream << "warning: no column score reached kappa\n";
        return 0;
    }
};

struct SimulateCommand {
    int sim_case = 1;
    Index n = 1000;
    Index p = 200;
    Index s = 5;
    Index k1 = 5;
    double rho = 0.0;
    std::string design = "gaussian";
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
    std::string out = "data.csv";
    std::string truth = "truth.json";
    std::string sigma;

    void add(CLI::App* app) {
        app->add_option("--case", sim_case, "Simulation case 1-5")->capture_default_str();
        app->add_option("--n", n, "Samples")->capture_default_str();
        app->add_option("--p", p, "Features")->capture_default_str();
        app->add_option("--s", s, "Support size")->capture_default_str();
        app->add_option("--k1", k1, "Index rank (cases 1-3)")->capture_default_str();
        app->add_option("--rho", rho, "AR(1) correlation")->capture_default_str();
        app->add_option("--design", design, "gaussian or t<dof>, e.g. t7")->capture_default_str();
        app->add_option("--noise-sd", noise_sd, "Noise standard deviation")->capture_default_str();
        app->add_option("--seed", seed, "Seed")->capture_default_str();
        app->add_option("--out", out, "Dataset CSV output")->capture_default_str();
        app->add_option("--truth", truth, "Ground truth JSON output")->capture_default_str();
        app->add_option("--sigma", sigma, "Also write the design covariance as a headerless CSV");
    }

    int execute(std::ostream& out_stream) {
        SimSpec spec;
        spec.sim_case = parse_case(sim_case);
        spec.n = n;
        spec.p = p;
        spec.s = s;
        spec.k1 = k1;
        spec.rho = rho;
        spec.design = Design::parse(design);
        spec.noise_sd = noise_sd;
        spec.seed = seed;
        spec.validate();
        const auto [data, gt] = simulate(spec);
        save_csv(data, out);
        write_text(truth, dump(truth_to_json(gt, spec, data.feature_ids())));
        if (!sigma.empty()) save_matrix_csv(ar1_covariance(p, rho), sigma);
        out_stream << "wrote " << out << " (n=" << n << ", p=" << p << ") and " << truth << "\nsupport:";
        for (Index j : gt.support) out_stream << ' ' << data.feature_ids()[static_cast<std::size_t>(j)];
        out_stream << '\n';
        return 0;
    }
};

struct BenchmarkCommand {
    std::string cases = "1";
    std::string ns = "500,2000";
    std::string ps = "200";
    std::string rhos = "0";
    std::string designs = "gaussian";
    std::string methods = "plain";
    Index s_true = 5;
    Index k1_true = 5;
    double noise_sd = 1.0;
    int reps = 20;
    std::string cov = "auto";
    bool evaluate_refit = false;
    Index n_test = 2000;
    int jobs = 1;
    std::string out = "summary.csv";
    SelectionFlags flags;

    void add(CLI::App* app) {
        app->add_option("--cases", cases, "Simulation cases, comma separated")->capture_default_str();
        app->add_option("--n", ns, "Sample sizes, comma separated")->capture_default_str();
        app->add_option("--p", ps, "Dimensions, comma separated")->capture_default_str();
        app->add_option("--rho", rhos, "AR(1) correlations, comma separated")->capture_default_str();
        app->add_option("--design", designs, "Designs, comma separated (gaussian, t7, ...)")->capture_default_str();
        app->add_option("--methods", methods, "plain, screened or both")->capture_default_str();
        app->add_option("--true-s", s_true, "Support size of the simulation")->capture_default_str();
        app->add_option("--true-k1", k1_true, "Index rank of the simulation")->capture_default_str();
        app->add_option("--noise-sd", noise_sd, "Noise standard deviation")->capture_default_str();
        app->add_option("--reps", reps, "Replications per grid point")->capture_default_str();
        app->add_option("--cov", cov, "known | sample | ledoit-wolf | auto")->capture_default_str();
        app->add_flag("--evaluate-refit", evaluate_refit, "Refit on the selection and report held-out MSE");
        app->add_option("--n-test", n_test, "Held-out sample size")->capture_default_str();
        app->add_option("--jobs", jobs, "Concurrent replications (default $STEINSELECT_JOBS or 1)");
        app->add_option("--out", out, "Summary CSV output")->capture_default_str();
        flags.k1 = "5";
        flags.s = "5";
        flags.add(app, true);
    }

    int execute(std::ostream& out_stream) {
        const auto case_list = parse_index_list(cases, "--cases");
        const auto n_list = parse_index_list(ns, "--n");
        const auto p_list = parse_index_list(ps, "--p");
        const auto rho_list = parse_real_list(rhos, "--rho");
        const auto design_list = split(designs, ',');
        const auto method_list = split(methods, ',');
        if (case_list.empty() || n_list.empty() || p_list.empty() || rho_list.empty() || design_list.empty() ||
            method_list.empty()) {
            throw ConfigError("benchmark grid is empty");
        }
        if (reps < 1) throw ConfigError("--reps must be >= 1");
        const auto cov_kind = parse_covariance_kind(cov);

        // Validate the whole grid before running anything.
        struct Cell {
            SimSpec spec;
            PipelineConfig cfg;
        };
        std::vector<Cell> cells;
        for (Index c : case_list) {
            for (Index n : n_list) {
                for (Index p : p_list) {
                    for (double rho : rho_list) {
                        for (const auto& design : design_list) {
                            for (const auto& method : method_list) {
                                Cell cell;
                                cell.spec.sim_case = parse_case(static_cast<int>(c));
                                cell.spec.n = n;
                                cell.spec.p = p;
                                cell.spec.s = s_true;
                                cell.spec.k1 = k1_true;
                                cell.spec.rho = rho;
                                cell.spec.design = Design::parse(design);
                                cell.spec.noise_sd = noise_sd;
                                cell.spec.validate();
                                cell.cfg = flags.build(parse_method(method), cov_kind);
                                cell.cfg.evaluate_refit = evaluate_refit;
                                cell.cfg.n_test = n_test;
                                cell.cfg.validate();
                                cells.push_back(std::move(cell));
                            }
                        }
                    }
                }
            }
        }

        std::vector<std::uint64_t> seeds;
        for (int r = 0; r < reps; ++r) seeds.push_back(derive_seed(flags.seed, "replication", static_cast<std::uint64_t>(r)));

        std::ostringstream csv;
        csv << "case,n,p,rho,design,method,replications,failures,tpr_mean,tpr_sd,fpr_mean,fpr_sd,mse_mean,mse_sd,"
               "runtime_ms,fingerprint\n";
        for (const auto& cell : cells) {
            const ReplicationSummary sum = run_replications(cell.spec, cell.cfg, seeds, std::max(1, jobs));
            csv << static_cast<int>(cell.spec.sim_case) << ',' << cell.spec.n << ',' << cell.spec.p << ','
                << format_double(cell.spec.rho) << ',' << cell.spec.design.name() << ',' << to_string(cell.cfg.method)
                << ',' << sum.records.size() << ',' << sum.failures << ',' << format_double(sum.tpr_mean) << ','
                << format_double(sum.tpr_sd) << ',' << format_double(sum.fpr_mean) << ','
                << format_double(sum.fpr_sd) << ',' << format_double(sum.mse_mean) << ','
                << format_double(sum.mse_sd) << ',' << static_cast<long long>(sum.runtime_ms) << ','
                << sum.fingerprint << '\n';
            out_stream << case_name(cell.spec.sim_case) << " n=" << cell.spec.n << " p=" << cell.spec.p
                       << " rho=" << format_double(cell.spec.rho) << ' ' << cell.spec.design.name() << ' '
                       << to_string(cell.cfg.method) << ": tpr=" << format_double(sum.tpr_mean)
                       << " fpr=" << format_double(sum.fpr_mean) << " failures=" << sum.failures << '\n';
            for (const auto& rec : sum.records) {
                if (!rec.ok) out_stream << "  seed " << rec.seed << " failed: " << rec.error << '\n';
            }
        }
        write_text(out, csv.str());
        return 0;
    }
};

struct RefitCommand {
    std::string data;
    std::string selection;
    std::string response = "y";
    std::string out = "model.json";
    std::uint64_t seed = 0;
    RefitFlags refit;

    void add(CLI::App* app) {
        app->add_option("data", data, "Training CSV")->required();
        app->add_option("selection", selection, "Selection JSON from select or screen")->required();
        app->add_option("--response", response, "Response column")->capture_default_str();
        app->add_option("--out", out, "Model JSON output")->capture_default_str();
        app->add_option("--seed", seed, "Master seed")->capture_default_str();
        refit.add(app);
    }

    int execute(std::ostream& out_stream) {
        const RefitConfig cfg = refit.build(derive_seed(seed, "refit"));
        const Dataset d = load_csv(data, response);
        std::vector<Index> columns;
        for (const auto& id : selected_ids_from_json(read_json(selection))) {
            const Index j = d.find_feature(id);
            if (j < 0) throw DimensionError("selected feature \"" + id + "\" not in " + data);
            columns.push_back(j);
        }
        if (columns.empty()) throw ConfigError("selection is empty; nothing to refit");
        const RefitModel model = train(d, columns, cfg);
        write_text(out, dump(model_to_json(model, cfg)));
        out_stream << "features=" << columns.size() << " epochs=" << cfg.epochs
                   << " initial_mse=" << format_double(model.initial_train_mse)
                   << "\nmse=" << format_double(evaluate_mse(model, d)) << '\n';
        return 0;
    }
};

struct PredictCommand {
    std::string model;
    std::string data;
    std::string response = "y";
    std::string out = "predictions.csv";

    void add(CLI::App* app) {
        app->add_option("model", model, "Model JSON from refit")->required();
        app->add_option("data", data, "CSV with the model's feature columns")->required();
        app->add_option("--response", response, "Response column; MSE is printed when present")->capture_default_str();
        app->add_option("--out", out, "Predictions CSV output (column y_hat)")->capture_default_str();
    }

    int execute(std::ostream& out_stream) {
        const RefitModel m = model_from_json(read_json(model));
        const Dataset raw = load_csv(data, "");
        const bool has_response = raw.find_feature(response) >= 0;
        const Dataset d = has_response ? load_csv(data, response) : raw;
        const VectorXd pred = predict(m, d);
        std::ostringstream csv;
        csv << "y_hat\n";
        for (Index i = 0; i < pred.size(); ++i) csv << format_double(pred(i)) << '\n';
        write_text(out, csv.str());
        out_stream << "wrote " << pred.size() << " predictions to " << out << '\n';
        if (has_response) out_stream << "mse=" << format_double(evaluate_mse(m, d)) << '\n';
        return 0;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feature selection with second-order Stein moments", "steinselect"};
    app.set_config("--config", "", "TOML file with option values; flags override it");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    app.set_version_flag("--version", "steinselect 0.1.0");

    SelectCommand select_cmd;
    SelectCommand screen_cmd;
    SimulateCommand simulate_cmd;
    BenchmarkCommand benchmark_cmd;
    RefitCommand refit_cmd;
    PredictCommand predict_cmd;
    screen_cmd.cov = "auto";
    select_cmd.jobs = screen_cmd.jobs = benchmark_cmd.jobs = default_jobs();

    select_cmd.add(app.add_subcommand("select", "Select features from a CSV"), false);
    screen_cmd.add(app.add_subcommand("screen", "Screen, then select, for many features"), true);
    simulate_cmd.add(app.add_subcommand("simulate", "Write a simulated dataset and its ground truth"));
    benchmark_cmd.add(app.add_subcommand("benchmark", "Replicated simulation grid to a summary CSV"));
    refit_cmd.add(app.add_subcommand("refit", "Train a ReLU network on selected features"));
    predict_cmd.add(app.add_subcommand("predict", "Apply a trained model to new data"));
    for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(false);

    std::vector<const char*> argv{"steinselect"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "select") return select_cmd.execute(false, out);
        if (name == "screen") return screen_cmd.execute(true, out);
        if (name == "simulate") return simulate_cmd.execute(out);
        if (name == "benchmark") return benchmark_cmd.execute(out);
        if (name == "refit") return refit_cmd.execute(out);
        if (name == "predict") return predict_cmd.execute(out);
        err << "error: unknown command " << name << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const IterationLimitError& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace steinselect::cli
