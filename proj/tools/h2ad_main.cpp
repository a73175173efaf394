#include "h2ad/crlb.hpp"
#include "h2ad/errors.hpp"
#include "h2ad/fusion_net.hpp"
#include "h2ad/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool noiseless = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* opt = cmd->add_option("--config", f.config, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--out", f.out, "output path (stdout when omitted)");
    cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", f.seed, "master seed override");
    cmd->add_option("--threads", f.threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--noiseless", f.noiseless, "synthesize without noise");
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw h2ad::ConfigError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw h2ad::ConfigError("failed writing " + path);
}

h2ad::ExperimentSpec experiment_spec(const CommonFlags& f) {
    h2ad::ExperimentSpec spec = f.config.empty() ? h2ad::ExperimentSpec{} : h2ad::load_spec(f.config);
    if (f.seed) spec.master_seed = *f.seed;
    if (f.noiseless) spec.noiseless = true;
    return spec;
}

std::string render(const h2ad::RmseCurve& curve, const CommonFlags& f, bool inclusive) {
    return h2ad::parse_output_format(f.format) == h2ad::OutputFormat::Csv ? h2ad::curve_to_csv(curve, inclusive)
                                                                           : h2ad::curve_to_json(curve, inclusive);
}

std::string crlb_table(const h2ad::ExperimentSpec& spec, const std::string& format) {
    nlohmann::json rows = nlohmann::json::array();
    std::string csv = "angle_deg,snr_db,snapshots,crlb_fd_sqrt_deg";
    for (std::size_t p = 1; p <= spec.geometry.num_groups(); ++p) csv += ",crlb_group_" + std::to_string(p) + "_sqrt_deg";
    csv += ",crlb_hybrid_sqrt_deg\n";
    for (double snr : spec.snr_grid_db) {
        const h2ad::CrlbContext ctx{spec.source.true_angle_deg, std::pow(10.0, snr / 10.0), spec.source.snapshots,
                                    spec.geometry};
        const auto report = h2ad::crlb_report(ctx);
        nlohmann::json row = {{"angle_deg", ctx.angle_deg},
                              {"snr_db", snr},
                              {"snapshots", ctx.snapshots},
                              {"crlb_fd_sqrt_deg", std::sqrt(report.crlb_fd_deg2)}};
        csv += h2ad::format_number(ctx.angle_deg) + ',' + h2ad::format_number(snr) + ',' + std::to_string(ctx.snapshots) +
               ',' + h2ad::format_number(std::sqrt(report.crlb_fd_deg2));
        for (std::size_t p = 0; p < report.crlb_group_deg2.size(); ++p) {
            const double v = std::sqrt(report.crlb_group_deg2[p]);
            row["crlb_group_" + std::to_string(p + 1) + "_sqrt_deg"] = v;
            csv += ',' + h2ad::format_number(v);
        }
        row["crlb_hybrid_sqrt_deg"] = std::sqrt(report.hybrid_deg2);
        csv += ',' + h2ad::format_number(std::sqrt(report.hybrid_deg2)) + '\n';
        rows.push_back(row);
    }
    return format == "csv" ? csv : rows.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid-array DOA fusion experiments"};
    app.require_subcommand(1);

    CommonFlags sim, snr, snaps, iters, trainf, crlb;
    std::string trace_path;

    auto* c_sim = app.add_subcommand("simulate", "RMSE at the config's source SNR and snapshot count");
    add_common(c_sim, sim, true);
    c_sim->add_option("--trace", trace_path, "write per-iteration IWF traces to this CSV");
    auto* c_snr = app.add_subcommand("sweep-snr", "RMSE versus SNR");
    add_common(c_snr, snr, true);
    auto* c_snaps = app.add_subcommand("sweep-snapshots", "RMSE versus snapshot count");
    add_common(c_snaps, snaps, true);
    auto* c_iters = app.add_subcommand("sweep-iterations", "IWF RMSE versus iteration cap");
    add_common(c_iters, iters, true);
    auto* c_train = app.add_subcommand("train-fusion", "generate training data and fit the fusion network");
    add_common(c_train, trainf, false);
    std::string loss_path;
    c_train->add_option("--loss-history", loss_path, "write per-epoch training loss to this CSV");
    auto* c_crlb = app.add_subcommand("crlb", "closed-form bounds over the config's SNR grid");
    add_common(c_crlb, crlb, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        auto run_curve = [&](const CommonFlags& f, auto&& fn) {
            if (f.threads > 0) omp_set_num_threads(f.threads);
            const auto spec = experiment_spec(f);
            const auto ctx = h2ad::RunContext::prepare(spec);
            const auto curve = fn(ctx, h2ad::ExecutionOptions{f.threads});
            write_output(render(curve, f, spec.emit_inclusive_rmse), f.out);
        };

        if (*c_sim) {
            if (sim.threads > 0) omp_set_num_threads(sim.threads);
            const auto spec = experiment_spec(sim);
            const auto ctx = h2ad::RunContext::prepare(spec);
            if (!trace_path.empty()) {
                h2ad::TrialOptions options;
                options.keep_trace = true;
                const auto results = h2ad::run_point(ctx, spec.source.snr_db, spec.source.snapshots, options,
                                                     h2ad::ExecutionOptions{sim.threads});
                write_output(h2ad::traces_to_csv(results, spec.geometry.num_groups()), trace_path);
            }
            write_output(render(h2ad::simulate(ctx, h2ad::ExecutionOptions{sim.threads}), sim, spec.emit_inclusive_rmse),
                         sim.out);
        } else if (*c_snr) {
            run_curve(snr, [](const auto& ctx, auto exec) { return h2ad::sweep_snr(ctx, exec); });
        } else if (*c_snaps) {
            run_curve(snaps, [](const auto& ctx, auto exec) { return h2ad::sweep_snapshots(ctx, exec); });
        } else if (*c_iters) {
            run_curve(iters, [](const auto& ctx, auto exec) { return h2ad::sweep_iterations(ctx, exec); });
        } else if (*c_train) {
            if (trainf.out.empty()) throw h2ad::ConfigError("train-fusion needs --out <model path>");
            if (trainf.threads > 0) omp_set_num_threads(trainf.threads);
            auto spec = trainf.config.empty() ? h2ad::TrainingSpec{} : h2ad::load_training_spec(trainf.config);
            if (trainf.seed) spec.training.seed = *trainf.seed;
            if (trainf.noiseless) spec.noiseless = true;
            const auto report = h2ad::train_fusion_models(spec.geometry, h2ad::zero_combiners(spec.geometry),
                                                          spec.training, spec.noiseless);
            h2ad::save_model_set(report.models, trainf.out);
            std::string history = "model,snr_db,epoch,loss\n";
            for (std::size_t m = 0; m < report.results.size(); ++m) {
                const std::string snr_label =
                    report.models.per_snr() ? h2ad::format_number(report.models.snr_db[m]) : "all";
                const auto& loss = report.results[m].loss_history;
                for (std::size_t e = 0; e < loss.size(); ++e)
                    history += std::to_string(m) + ',' + snr_label + ',' + std::to_string(e + 1) + ',' +
                               h2ad::format_number(loss[e]) + '\n';
                std::cerr << "model " << m << " (snr " << snr_label << "): " << report.datasets[m].size() << " rows, "
                          << report.datasets[m].dropped << " dropped, loss " << loss.front() << " -> "
                          << report.results[m].final_loss
                          << (report.results[m].kept_initial_features ? " (initial features)" : "") << '\n';
            }
            if (!loss_path.empty()) write_output(history, loss_path);
        } else if (*c_crlb) {
            write_output(crlb_table(experiment_spec(crlb), crlb.format), crlb.out);
        }
    } catch (const std::exception& e) {
        std::cerr << "h2ad: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
