#include "pvmod/cli.hpp"

#include "pvmod/characteristics.hpp"
#include "pvmod/circuit_models.hpp"
#include "pvmod/dataset_io.hpp"
#include "pvmod/errors.hpp"
#include "pvmod/extraction.hpp"
#include "pvmod/model_io.hpp"
#include "pvmod/rbf_model.hpp"
#include "pvmod/rbf_train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <utility>

namespace pvmod {

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

OutputKind parse_kind(const std::string& kind) {
    if (kind == "current")
        return OutputKind::current;
    if (kind == "power")
        return OutputKind::power;
    throw ValidationError("kind must be 'current' or 'power', got '" + kind + "'");
}

std::pair<double, double> as_range(const std::vector<double>& v, const char* name) {
    if (v.size() != 2 || v[1] < v[0])
        throw ValidationError(std::string(name) + " must be two ordered values");
    return {v[0], v[1]};
}

std::unique_ptr<CurrentSource> make_source(const ModelDocument& doc) {
    if (const auto* circuit = std::get_if<CircuitModelDocument>(&doc))
        return std::make_unique<CircuitSource>(circuit->model, circuit->g_ref,
                                               circuit->extension);
    return std::make_unique<SurrogateSource>(std::get<RbfSurrogate>(doc));
}

std::filesystem::path with_irradiance_suffix(const std::filesystem::path& base,
                                             double g) {
    std::filesystem::path p = base;
    const std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    p.replace_filename(stem + "_g" + num(g) + ext);
    return p;
}

// Deterministic Fisher-Yates driven by mt19937_64 so holdout splits
// reproduce across platforms.
void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng() % i]);
}

int cmd_simulate(const std::filesystem::path& model_path, std::vector<double> gs,
                 double t_k, double v_max, int n,
                 const std::filesystem::path& out_path, std::ostream& out) {
    const ModelDocument doc = load_model_document(model_path);
    const std::unique_ptr<CurrentSource> source = make_source(doc);
    if (gs.empty())
        gs.push_back(1000.0);
    for (double g : gs) {
        const Curve curve = sweep_curve(*source, g, t_k, v_max, n);
        const std::filesystem::path dest =
            gs.size() == 1 ? out_path : with_irradiance_suffix(out_path, g);
        write_csv(curve, dest);
        const CurveMetrics m = curve_metrics(curve, std::nullopt, source.get());
        out << "g=" << num(g) << " isc=" << num(m.isc)
            << " voc=" << (m.voc ? num(*m.voc) : "absent")
            << " pmp=" << num(m.pmp)
            << " ff=" << (m.fill_factor ? num(*m.fill_factor) : "absent")
            << " -> " << dest.string() << '\n';
    }
    return 0;
}

int cmd_gen_data(const std::filesystem::path& model_path, long long n_random,
                 const std::vector<double>& grid_g, std::size_t n_v,
                 const std::vector<double>& g_range_v,
                 const std::vector<double>& v_range_v, const std::string& kind_s,
                 std::uint64_t seed, const std::filesystem::path& out_path,
                 std::ostream& out) {
    const ModelDocument doc = load_model_document(model_path);
    const auto* circuit = std::get_if<CircuitModelDocument>(&doc);
    if (!circuit)
        throw ValidationError("gen-data needs a circuit model document");
    const OutputKind kind = parse_kind(kind_s);
    const auto v_range = as_range(v_range_v, "--v-range");

    Dataset data;
    if (n_random > 0 && !grid_g.empty())
        throw ValidationError("choose either --n or --grid, not both");
    if (n_random > 0) {
        const auto g_range = as_range(g_range_v, "--g-range");
        data = generate_random(circuit->model, static_cast<std::size_t>(n_random),
                               g_range, v_range, kind, seed);
    } else if (!grid_g.empty()) {
        data = generate_grid(circuit->model, grid_g, v_range, n_v, kind);
    } else {
        throw ValidationError("one of --n or --grid is required");
    }
    write_csv(data, out_path);
    out << "wrote " << data.samples.size() << " samples to " << out_path.string()
        << '\n';
    return 0;
}

int cmd_train(const std::filesystem::path& data_path, const std::string& kind_s,
              TrainConfig cfg, double holdout,
              const std::filesystem::path& out_path, std::ostream& out) {
    const Dataset all = read_dataset_csv(data_path, parse_kind(kind_s));
    Dataset train_set = all;
    Dataset holdout_set;
    holdout_set.kind = all.kind;
    if (holdout > 0.0) {
        if (holdout >= 1.0)
            throw ValidationError("--holdout must lie in [0, 1)");
        std::vector<std::size_t> idx(all.samples.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            idx[k] = k;
        shuffle_indices(idx, cfg.seed);
        const std::size_t n_holdout =
            static_cast<std::size_t>(holdout * static_cast<double>(idx.size()));
        train_set.samples.clear();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k < n_holdout)
                holdout_set.samples.push_back(all.samples[idx[k]]);
            else
                train_set.samples.push_back(all.samples[idx[k]]);
        }
    }

    RbfSurrogate net = build_greedy(train_set, cfg);
    net = fine_tune(net, train_set, cfg);
    save_model_document(net, out_path);
    out << "neurons=" << net.neurons.size()
        << " train_rel_mse=" << num(relative_mse(net, train_set));
    if (!holdout_set.samples.empty())
        out << " holdout_rel_mse=" << num(relative_mse(net, holdout_set));
    out << " -> " << out_path.string() << '\n';
    return 0;
}

int cmd_eval(const std::filesystem::path& net_path,
             const std::filesystem::path& data_path, const std::string& kind_s,
             std::ostream& out) {
    const ModelDocument doc = load_model_document(net_path);
    const auto* net = std::get_if<RbfSurrogate>(&doc);
    if (!net)
        throw ValidationError("eval needs an RBF surrogate document");
    const OutputKind kind =
        kind_s.empty() ? net->output_kind : parse_kind(kind_s);
    const Dataset data = read_dataset_csv(data_path, kind);
    out << "relative_mse=" << num(relative_mse(*net, data)) << '\n';
    return 0;
}

int cmd_metrics(const std::filesystem::path& curve_path, double area,
                std::ostream& out) {
    const Curve curve = read_curve_csv(curve_path);
    const std::optional<double> module_area =
        area > 0.0 ? std::optional<double>(area) : std::nullopt;
    const CurveMetrics m = curve_metrics(curve, module_area);
    out << "isc_a=" << num(m.isc)
        << " voc_v=" << (m.voc ? num(*m.voc) : "absent") << " vmp_v=" << num(m.vmp)
        << " imp_a=" << num(m.imp) << " pmp_w=" << num(m.pmp) << " ff="
        << (m.fill_factor ? num(*m.fill_factor) : "absent");
    if (m.efficiency)
        out << " efficiency=" << num(*m.efficiency);
    out << '\n';
    return 0;
}

int cmd_extract(const std::vector<std::filesystem::path>& curve_paths,
                const std::filesystem::path& init_path, double goal,
                const std::filesystem::path& out_path, std::ostream& out) {
    std::vector<Curve> curves;
    curves.reserve(curve_paths.size());
    for (const auto& p : curve_paths)
        curves.push_back(read_curve_csv(p));
    const ModelDocument doc = load_model_document(init_path);
    const auto* circuit = std::get_if<CircuitModelDocument>(&doc);
    if (!circuit)
        throw ValidationError("extract needs a circuit model document as --init");

    FitOptions opts;
    opts.goal = goal;
    const FitReport report = fit_five_param(curves, circuit->model, opts);

    nlohmann::json j;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["residual_norm_a"] = report.residual_norm;
    j["g_ref_wm2"] = report.g_ref;
    j["relative_step"] = report.relative_step;
    j["model"] = nlohmann::json::parse(
        serialize(CircuitModelDocument{report.model, report.g_ref, std::nullopt}));
    std::ofstream file(out_path);
    if (!file)
        throw ValidationError("cannot open '" + out_path.string() + "' for writing");
    file << j.dump(2) << '\n';

    out << "converged=" << (report.converged ? "true" : "false")
        << " iterations=" << report.iterations
        << " rms_a=" << num(report.residual_norm) << " -> " << out_path.string()
        << '\n';
    return 0;
}

int cmd_table1(const std::string& which, double sigma,
               const std::filesystem::path& out_path, std::ostream& out) {
    RbfSurrogate net;
    if (which == "current")
        net = table1_current_network(sigma);
    else if (which == "power")
        net = table1_power_network(sigma);
    else
        throw ValidationError("--which must be 'current' or 'power'");
    save_model_document(net, out_path);
    out << "wrote 16-neuron " << which << " preset to " << out_path.string()
        << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Photovoltaic module models and RBF surrogates"};
    app.name("pvmod");
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Sweep I-V/P-V curves");
    std::string sim_model, sim_out;
    std::vector<double> sim_g{1000.0};
    double sim_t = 298.15, sim_vmax = 30.0;
    int sim_n = 301;
    simulate->add_option("--model", sim_model, "model document (JSON)")->required();
    simulate->add_option("--g", sim_g, "irradiance list, W/m^2");
    simulate->add_option("--t", sim_t, "temperature, K");
    simulate->add_option("--vmax", sim_vmax, "sweep end voltage, V");
    simulate->add_option("--n", sim_n, "points per sweep");
    simulate->add_option("--out", sim_out, "output curve CSV")->required();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    std::string gen_model, gen_kind = "current", gen_out;
    long long gen_n = 0;
    std::vector<double> gen_grid;
    std::size_t gen_nv = 101;
    std::vector<double> gen_g_range{200.0, 1000.0};
    std::vector<double> gen_v_range{0.0, 30.0};
    std::uint64_t gen_seed = 1;
    gen->add_option("--model", gen_model, "circuit model document")->required();
    gen->add_option("--n", gen_n, "random sample count");
    gen->add_option("--grid", gen_grid, "grid irradiances, W/m^2");
    gen->add_option("--nv", gen_nv, "voltages per grid irradiance");
    gen->add_option("--g-range", gen_g_range, "random irradiance range")
        ->expected(2);
    gen->add_option("--v-range", gen_v_range, "voltage range")->expected(2);
    gen->add_option("--kind", gen_kind, "current|power");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out", gen_out, "output dataset CSV")->required();

    // train
    auto* train = app.add_subcommand("train", "Train an RBF surrogate");
    std::string train_data, train_kind = "current", train_out;
    TrainConfig cfg;
    double train_holdout = 0.0;
    train->add_option("--data", train_data, "training dataset CSV")->required();
    train->add_option("--kind", train_kind, "current|power");
    train->add_option("--max-neurons", cfg.max_neurons, "hidden layer cap");
    train->add_option("--mse-goal", cfg.mse_goal, "relative MSE stop target");
    train->add_option("--sigma-init", cfg.sigma_init, "initial spread (scaled)");
    train->add_option("--epochs", cfg.fine_tune_epochs, "fine-tune epochs");
    train->add_option("--lr", cfg.learning_rate, "fine-tune learning rate");
    train->add_option("--seed", cfg.seed, "seed (holdout split)");
    train->add_option("--holdout", train_holdout, "validation fraction");
    train->add_option("--out", train_out, "output model document")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Relative MSE of a network on data");
    std::string eval_net, eval_data, eval_kind;
    eval->add_option("--net", eval_net, "surrogate document")->required();
    eval->add_option("--data", eval_data, "dataset CSV")->required();
    eval->add_option("--kind", eval_kind, "current|power (default: network kind)");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Figures of merit of a curve");
    std::string metrics_curve;
    double metrics_area = 0.0;
    metrics->add_option("--curve", metrics_curve, "curve CSV")->required();
    metrics->add_option("--area", metrics_area, "module area, m^2");

    // extract
    auto* extract = app.add_subcommand("extract", "Fit circuit parameters");
    std::vector<std::string> extract_curves;
    std::string extract_init, extract_out;
    double extract_goal = 1e-8;
    extract->add_option("--curves", extract_curves, "curve CSVs")->required();
    extract->add_option("--init", extract_init, "initial circuit model")->required();
    extract->add_option("--goal", extract_goal, "RMS residual goal, A");
    extract->add_option("--out", extract_out, "fit report JSON")->required();

    // table1
    auto* table1 = app.add_subcommand("table1", "Write a published preset");
    std::string t1_which, t1_out;
    double t1_sigma = 0.0;
    table1->add_option("--which", t1_which, "current|power")->required();
    table1->add_option("--sigma", t1_sigma, "spread to assume")->required();
    table1->add_option("--out", t1_out, "output model document")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << app.help();
        return 1;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_model, sim_g, sim_t, sim_vmax, sim_n, sim_out,
                                out);
        if (gen->parsed())
            return cmd_gen_data(gen_model, gen_n, gen_grid, gen_nv, gen_g_range,
                                gen_v_range, gen_kind, gen_seed, gen_out, out);
        if (train->parsed())
            return cmd_train(train_data, train_kind, cfg, train_holdout, train_out,
                             out);
        if (eval->parsed())
            return cmd_eval(eval_net, eval_data, eval_kind, out);
        if (metrics->parsed())
            return cmd_metrics(metrics_curve, metrics_area, out);
        if (extract->parsed()) {
            std::vector<std::filesystem::path> paths(extract_curves.begin(),
                                                     extract_curves.end());
            return cmd_extract(paths, extract_init, extract_goal, extract_out, out);
        }
        if (table1->parsed())
            return cmd_table1(t1_which, t1_sigma, t1_out, out);
        err << "error: no subcommand given\n" << app.help();
        return 1;
    } catch (const SolverError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const SaturationError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace pvmod
